//! Truncated power series in a distinguished variable `ρ` whose coefficients
//! are polynomials in boundary variables `x₁ … x_m`, all in exact rational
//! arithmetic.
//!
//! A [`Poly`] is either an exact polynomial or a Taylor polynomial at `x = 0`
//! known through some total degree. Truncation is needed as soon as one
//! inverts a coefficient that is not a constant. A [`Jet`] is known through
//! `ρ^order`.

use alloc::collections::BTreeMap;
use alloc::format;
use alloc::vec;
use alloc::vec::Vec;
use core::fmt;

use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::{One, Signed, ToPrimitive, Zero};

use crate::error::{Error, Result};
use crate::expr::{num, var, Expr};

pub type Q = BigRational;

pub fn q(n: i64) -> Q {
    Q::from_integer(BigInt::from(n))
}

pub fn q_frac(n: i64, d: i64) -> Q {
    Q::new(BigInt::from(n), BigInt::from(d))
}

/// Sparse polynomial over `ℚ` in `nvars` variables.
#[derive(Clone, PartialEq, Eq)]
pub struct Poly {
    nvars: usize,
    terms: BTreeMap<Vec<u32>, Q>,
    /// `None`: exact. `Some(d)`: correct for every monomial of total degree `≤ d`,
    /// nothing stored above. Negative means nothing is known.
    valid: Option<i32>,
}

impl fmt::Debug for Poly {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.terms.is_empty() {
            write!(f, "0")?;
        }
        for (i, (e, c)) in self.terms.iter().enumerate() {
            if i > 0 {
                write!(f, " + ")?;
            }
            write!(f, "{c}")?;
            for (v, p) in e.iter().enumerate() {
                if *p > 0 {
                    write!(f, "·x{}^{p}", v + 1)?;
                }
            }
        }
        if let Some(d) = self.valid {
            write!(f, " + O(|x|^{})", d + 1)?;
        }
        Ok(())
    }
}

fn degree_of(e: &[u32]) -> i32 {
    e.iter().sum::<u32>() as i32
}

fn min_valid(a: Option<i32>, b: Option<i32>) -> Option<i32> {
    match (a, b) {
        (None, v) | (v, None) => v,
        (Some(x), Some(y)) => Some(x.min(y)),
    }
}

impl Poly {
    pub fn zero(nvars: usize) -> Self {
        Poly { nvars, terms: BTreeMap::new(), valid: None }
    }

    pub fn constant(nvars: usize, c: Q) -> Self {
        let mut p = Poly::zero(nvars);
        p.push(vec![0; nvars], c);
        p
    }

    pub fn one(nvars: usize) -> Self {
        Poly::constant(nvars, Q::one())
    }

    /// The coordinate `x_{i+1}`.
    pub fn var(nvars: usize, i: usize) -> Self {
        let mut e = vec![0; nvars];
        e[i] = 1;
        Poly::monomial(e, Q::one())
    }

    pub fn monomial(exps: Vec<u32>, c: Q) -> Self {
        let mut p = Poly::zero(exps.len());
        p.push(exps, c);
        p
    }

    pub fn from_terms(nvars: usize, terms: impl IntoIterator<Item = (Vec<u32>, Q)>) -> Result<Self> {
        let mut p = Poly::zero(nvars);
        for (e, c) in terms {
            if e.len() != nvars {
                return Err(Error::Shape(format!("monomial {e:?} in a {nvars}-variable polynomial")));
            }
            p.push(e, c);
        }
        Ok(p)
    }

    fn push(&mut self, e: Vec<u32>, c: Q) {
        if c.is_zero() {
            return;
        }
        if let Some(d) = self.valid {
            if degree_of(&e) > d {
                return;
            }
        }
        let slot = self.terms.entry(e.clone()).or_insert_with(Q::zero);
        *slot += c;
        if slot.is_zero() {
            self.terms.remove(&e);
        }
    }

    pub fn nvars(&self) -> usize {
        self.nvars
    }

    pub fn valid_degree(&self) -> Option<i32> {
        self.valid
    }

    pub fn is_exact(&self) -> bool {
        self.valid.is_none()
    }

    /// Keeps only the terms of total degree `≤ d` and marks the result as truncated.
    pub fn truncate(&self, d: i32) -> Self {
        let d = self.valid.map_or(d, |v| v.min(d));
        let terms = self.terms.iter().filter(|(e, _)| degree_of(e) <= d).map(|(e, c)| (e.clone(), c.clone())).collect();
        Poly { nvars: self.nvars, terms, valid: Some(d) }
    }

    pub fn terms(&self) -> impl Iterator<Item = (&Vec<u32>, &Q)> {
        self.terms.iter()
    }

    pub fn is_zero(&self) -> bool {
        self.terms.is_empty()
    }

    pub fn coefficient(&self, exps: &[u32]) -> Q {
        self.terms.get(exps).cloned().unwrap_or_else(Q::zero)
    }

    pub fn constant_term(&self) -> Q {
        self.coefficient(&vec![0; self.nvars])
    }

    pub fn is_constant(&self) -> bool {
        self.terms.keys().all(|e| degree_of(e) == 0)
    }

    pub fn degree(&self) -> Option<u32> {
        self.terms.keys().map(|e| e.iter().sum()).max()
    }

    fn check(&self, other: &Poly) {
        assert_eq!(self.nvars, other.nvars, "polynomials over different variable counts");
    }

    pub fn add(&self, other: &Poly) -> Poly {
        self.check(other);
        let mut out = Poly { nvars: self.nvars, terms: BTreeMap::new(), valid: min_valid(self.valid, other.valid) };
        for (e, c) in self.terms.iter().chain(other.terms.iter()) {
            out.push(e.clone(), c.clone());
        }
        out
    }

    pub fn neg(&self) -> Poly {
        Poly { nvars: self.nvars, terms: self.terms.iter().map(|(e, c)| (e.clone(), -c)).collect(), valid: self.valid }
    }

    pub fn sub(&self, other: &Poly) -> Poly {
        self.add(&other.neg())
    }

    pub fn scale(&self, s: &Q) -> Poly {
        if s.is_zero() {
            return Poly { nvars: self.nvars, terms: BTreeMap::new(), valid: self.valid };
        }
        Poly { nvars: self.nvars, terms: self.terms.iter().map(|(e, c)| (e.clone(), c * s)).collect(), valid: self.valid }
    }

    pub fn mul(&self, other: &Poly) -> Poly {
        self.check(other);
        let mut out = Poly { nvars: self.nvars, terms: BTreeMap::new(), valid: min_valid(self.valid, other.valid) };
        for (ea, ca) in &self.terms {
            for (eb, cb) in &other.terms {
                let e: Vec<u32> = ea.iter().zip(eb).map(|(a, b)| a + b).collect();
                out.push(e, ca * cb);
            }
        }
        out
    }

    pub fn pow(&self, n: u32) -> Poly {
        let mut out = Poly::one(self.nvars);
        if let Some(d) = self.valid {
            out = out.truncate(d);
        }
        for _ in 0..n {
            out = out.mul(self);
        }
        out
    }

    /// `∂/∂x_{i+1}`; a truncated input loses one degree of validity.
    pub fn diff(&self, i: usize) -> Poly {
        let mut out = Poly { nvars: self.nvars, terms: BTreeMap::new(), valid: self.valid.map(|d| d - 1) };
        for (e, c) in &self.terms {
            if e[i] == 0 {
                continue;
            }
            let mut e2 = e.clone();
            e2[i] -= 1;
            out.push(e2, c * q(e[i] as i64));
        }
        out
    }

    /// Euclidean Laplacian in the boundary variables.
    pub fn laplacian(&self) -> Poly {
        let mut out = Poly::zero(self.nvars);
        for i in 0..self.nvars {
            out = out.add(&self.diff(i).diff(i));
        }
        out
    }

    /// Multiplicative inverse. Nonconstant inputs need a nonzero value at `x = 0`
    /// and are expanded through degree `degree` (or the input's own validity).
    pub fn inverse(&self, degree: i32) -> Result<Poly> {
        let c = self.constant_term();
        if c.is_zero() {
            return Err(Error::NotInvertible(format!("polynomial {self:?} vanishes at the origin")));
        }
        let c_inv = c.recip();
        if self.is_constant() {
            let mut out = Poly::constant(self.nvars, c_inv);
            out.valid = self.valid;
            if let Some(d) = self.valid {
                out = out.truncate(d);
            }
            return Ok(out);
        }
        let d = self.valid.map_or(degree, |v| v.min(degree));
        if d < 0 {
            return Err(Error::NotInvertible("no valid degrees left to expand the inverse".into()));
        }
        // 1/(c + r) = c⁻¹ Σ (−r/c)^i, with r of order ≥ 1.
        let r = self.sub(&Poly::constant(self.nvars, c)).truncate(d).scale(&(-c_inv.clone()));
        let mut term = Poly::one(self.nvars).truncate(d);
        let mut acc = term.clone();
        for _ in 0..d {
            term = term.mul(&r);
            if term.is_zero() {
                break;
            }
            acc = acc.add(&term);
        }
        Ok(acc.scale(&c_inv))
    }

    pub fn eval_f64(&self, x: &[f64]) -> f64 {
        self.terms
            .iter()
            .map(|(e, c)| {
                let m: f64 = e.iter().zip(x).map(|(p, xi)| num_traits::Float::powi(*xi, *p as i32)).product();
                c.to_f64().unwrap_or(f64::NAN) * m
            })
            .sum()
    }

    pub fn to_expr(&self, names: &[&str]) -> Expr {
        let mut acc = num(0.0);
        for (e, c) in &self.terms {
            let mut t = num(c.to_f64().unwrap_or(f64::NAN));
            for (v, p) in e.iter().enumerate() {
                if *p > 0 {
                    t = Expr::mul(t, Expr::pow(var(names[v]), num(*p as f64)));
                }
            }
            acc = Expr::add(acc, t);
        }
        acc
    }

    /// Reads a polynomial expression in `names`. Numbers are taken as their
    /// exact binary values, so write `1/3` rather than `0.333`.
    pub fn from_expr(e: &Expr, names: &[&str]) -> Result<Poly> {
        let nv = names.len();
        let constant_of = |p: &Poly| -> Option<Q> { p.is_constant().then(|| p.constant_term()) };
        Ok(match e {
            Expr::Num(x) => Poly::constant(
                nv,
                Q::from_float(*x).ok_or_else(|| Error::Invalid(format!("{x} is not a finite coefficient")))?,
            ),
            Expr::Var(v) => match names.iter().position(|n| n == v) {
                Some(i) => Poly::var(nv, i),
                None => return Err(Error::Invalid(format!("`{v}` is not one of the polynomial variables {names:?}"))),
            },
            Expr::Neg(a) => Poly::from_expr(a, names)?.neg(),
            Expr::Add(a, b) => Poly::from_expr(a, names)?.add(&Poly::from_expr(b, names)?),
            Expr::Sub(a, b) => Poly::from_expr(a, names)?.sub(&Poly::from_expr(b, names)?),
            Expr::Mul(a, b) => Poly::from_expr(a, names)?.mul(&Poly::from_expr(b, names)?),
            Expr::Div(a, b) => {
                let d = constant_of(&Poly::from_expr(b, names)?)
                    .filter(|d| !d.is_zero())
                    .ok_or_else(|| Error::Invalid("polynomials may only be divided by nonzero constants".into()))?;
                Poly::from_expr(a, names)?.scale(&d.recip())
            }
            Expr::Pow(a, b) => {
                let ex = constant_of(&Poly::from_expr(b, names)?)
                    .filter(|c| c.is_integer() && !c.is_negative())
                    .and_then(|c| c.to_integer().to_u32())
                    .ok_or_else(|| Error::Invalid("polynomial exponents must be nonnegative integers".into()))?;
                Poly::from_expr(a, names)?.pow(ex)
            }
            Expr::Call(f, _) => return Err(Error::Invalid(format!("`{f:?}` is not polynomial"))),
        })
    }
}

/// Parity of a jet in `ρ`, used for evenness bookkeeping.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Parity {
    Even,
    Odd,
    None,
}

impl Parity {
    fn mul(self, other: Parity) -> Parity {
        match (self, other) {
            (Parity::None, _) | (_, Parity::None) => Parity::None,
            (a, b) if a == b => Parity::Even,
            _ => Parity::Odd,
        }
    }

    fn add(self, other: Parity) -> Parity {
        if self == other {
            self
        } else {
            Parity::None
        }
    }

    fn flip(self) -> Parity {
        match self {
            Parity::Even => Parity::Odd,
            Parity::Odd => Parity::Even,
            Parity::None => Parity::None,
        }
    }

    fn allows(self, power: usize) -> bool {
        match self {
            Parity::Even => power % 2 == 0,
            Parity::Odd => power % 2 == 1,
            Parity::None => true,
        }
    }
}

/// `Σ_{i ≤ order} c_i ρ^i + O(ρ^{order+1})`.
#[derive(Clone, PartialEq, Eq)]
pub struct Jet {
    nvars: usize,
    coeffs: Vec<Poly>,
    parity: Parity,
}

impl fmt::Debug for Jet {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for (i, c) in self.coeffs.iter().enumerate() {
            if !c.is_zero() {
                write!(f, "[{c:?}]ρ^{i} + ")?;
            }
        }
        write!(f, "O(ρ^{}) ({:?})", self.coeffs.len(), self.parity)
    }
}

impl Jet {
    pub fn zero(nvars: usize, order: usize) -> Self {
        Jet { nvars, coeffs: vec![Poly::zero(nvars); order + 1], parity: Parity::None }
    }

    pub fn constant(c: Poly, order: usize) -> Self {
        let mut j = Jet::zero(c.nvars(), order);
        j.coeffs[0] = c;
        j
    }

    pub fn one(nvars: usize, order: usize) -> Self {
        Jet::constant(Poly::one(nvars), order)
    }

    /// The jet `ρ`.
    pub fn rho(nvars: usize, order: usize) -> Self {
        let mut j = Jet::zero(nvars, order);
        if order >= 1 {
            j.coeffs[1] = Poly::one(nvars);
        }
        j
    }

    pub fn from_coeffs(nvars: usize, coeffs: Vec<Poly>) -> Result<Self> {
        if coeffs.is_empty() {
            return Err(Error::Shape("a jet needs at least one coefficient".into()));
        }
        if coeffs.iter().any(|c| c.nvars() != nvars) {
            return Err(Error::Shape("coefficient variable count mismatch".into()));
        }
        Ok(Jet { nvars, coeffs, parity: Parity::None })
    }

    pub fn nvars(&self) -> usize {
        self.nvars
    }

    pub fn order(&self) -> usize {
        self.coeffs.len() - 1
    }

    pub fn coeff(&self, i: usize) -> &Poly {
        &self.coeffs[i]
    }

    pub fn coeffs(&self) -> &[Poly] {
        &self.coeffs
    }

    pub fn set_coeff(&mut self, i: usize, c: Poly) {
        self.coeffs[i] = c;
        self.parity = Parity::None;
    }

    pub fn parity(&self) -> Parity {
        self.parity
    }

    /// Attaches a parity annotation after checking it against the coefficients.
    pub fn with_parity(mut self, parity: Parity) -> Result<Self> {
        self.assert_parity(parity)?;
        self.parity = parity;
        Ok(self)
    }

    /// Fails when a coefficient of the wrong parity is nonzero.
    pub fn assert_parity(&self, parity: Parity) -> Result<()> {
        for (i, c) in self.coeffs.iter().enumerate() {
            if !parity.allows(i) && !c.is_zero() {
                return Err(Error::Parity(format!("coefficient of ρ^{i} is nonzero in a jet asserted {parity:?}")));
            }
        }
        Ok(())
    }

    pub fn truncate(&self, order: usize) -> Jet {
        let n = order.min(self.order());
        Jet { nvars: self.nvars, coeffs: self.coeffs[..=n].to_vec(), parity: self.parity }
    }

    pub fn is_zero(&self) -> bool {
        self.coeffs.iter().all(|c| c.is_zero())
    }

    /// Index of the first nonzero coefficient, if any.
    pub fn valuation(&self) -> Option<usize> {
        self.coeffs.iter().position(|c| !c.is_zero())
    }

    pub fn add(&self, other: &Jet) -> Jet {
        let n = self.order().min(other.order());
        Jet {
            nvars: self.nvars,
            coeffs: (0..=n).map(|i| self.coeffs[i].add(&other.coeffs[i])).collect(),
            parity: self.parity.add(other.parity),
        }
    }

    pub fn neg(&self) -> Jet {
        Jet { nvars: self.nvars, coeffs: self.coeffs.iter().map(|c| c.neg()).collect(), parity: self.parity }
    }

    pub fn sub(&self, other: &Jet) -> Jet {
        self.add(&other.neg())
    }

    pub fn scale(&self, s: &Q) -> Jet {
        Jet { nvars: self.nvars, coeffs: self.coeffs.iter().map(|c| c.scale(s)).collect(), parity: self.parity }
    }

    pub fn mul_poly(&self, p: &Poly) -> Jet {
        Jet { nvars: self.nvars, coeffs: self.coeffs.iter().map(|c| c.mul(p)).collect(), parity: self.parity }
    }

    pub fn mul(&self, other: &Jet) -> Jet {
        let n = self.order().min(other.order());
        let mut coeffs = vec![Poly::zero(self.nvars); n + 1];
        for i in 0..=n {
            if self.coeffs[i].is_zero() {
                continue;
            }
            for j in 0..=(n - i) {
                if other.coeffs[j].is_zero() {
                    continue;
                }
                coeffs[i + j] = coeffs[i + j].add(&self.coeffs[i].mul(&other.coeffs[j]));
            }
        }
        Jet { nvars: self.nvars, coeffs, parity: self.parity.mul(other.parity) }
    }

    /// Inverse for an invertible constant term; see [`Poly::inverse`] for `degree`.
    pub fn invert(&self, degree: i32) -> Result<Jet> {
        let n = self.order();
        let b0 = self.coeffs[0].inverse(degree)?;
        let mut b = vec![b0.clone()];
        for m in 1..=n {
            let mut s = Poly::zero(self.nvars);
            for i in 1..=m {
                s = s.add(&self.coeffs[i].mul(&b[m - i]));
            }
            b.push(b0.mul(&s).neg());
        }
        let parity = match self.parity {
            Parity::Even => Parity::Even,
            _ => Parity::None,
        };
        Ok(Jet { nvars: self.nvars, coeffs: b, parity })
    }

    /// `∂/∂ρ`, known through one order less.
    pub fn diff_rho(&self) -> Jet {
        let n = self.order();
        let coeffs = if n == 0 {
            vec![Poly::zero(self.nvars)]
        } else {
            (1..=n).map(|i| self.coeffs[i].scale(&q(i as i64))).collect()
        };
        Jet { nvars: self.nvars, coeffs, parity: self.parity.flip() }
    }

    pub fn diff_x(&self, i: usize) -> Jet {
        Jet { nvars: self.nvars, coeffs: self.coeffs.iter().map(|c| c.diff(i)).collect(), parity: self.parity }
    }

    /// Multiplication by `ρ`, known through one order more.
    pub fn mul_rho(&self) -> Jet {
        let mut coeffs = vec![Poly::zero(self.nvars)];
        coeffs.extend(self.coeffs.iter().cloned());
        Jet { nvars: self.nvars, coeffs, parity: self.parity.flip() }
    }

    /// Division by `ρ`; requires a vanishing constant term.
    pub fn div_rho(&self) -> Result<Jet> {
        if !self.coeffs[0].is_zero() {
            return Err(Error::NotInvertible("division by ρ of a jet with nonzero constant term".into()));
        }
        if self.order() == 0 {
            return Err(Error::Degree("division by ρ of an order-0 jet".into()));
        }
        Ok(Jet { nvars: self.nvars, coeffs: self.coeffs[1..].to_vec(), parity: self.parity.flip() })
    }

    /// Evaluates the truncated series at floating-point `(ρ, x)`.
    pub fn eval_f64(&self, rho: f64, x: &[f64]) -> f64 {
        self.coeffs.iter().enumerate().map(|(i, c)| c.eval_f64(x) * num_traits::Float::powi(rho, i as i32)).sum()
    }

    pub fn to_expr(&self, rho: &str, names: &[&str]) -> Expr {
        let mut acc = num(0.0);
        for (i, c) in self.coeffs.iter().enumerate() {
            if c.is_zero() {
                continue;
            }
            acc = Expr::add(acc, Expr::mul(c.to_expr(names), Expr::pow(var(rho), num(i as f64))));
        }
        acc
    }
}

/// Square matrix of jets, row-major.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct JetMatrix {
    n: usize,
    entries: Vec<Jet>,
}

impl JetMatrix {
    pub fn new(n: usize, entries: Vec<Jet>) -> Result<Self> {
        if entries.len() != n * n {
            return Err(Error::Shape(format!("{} entries for a {n}×{n} jet matrix", entries.len())));
        }
        Ok(JetMatrix { n, entries })
    }

    pub fn identity(n: usize, nvars: usize, order: usize) -> Self {
        let entries = (0..n * n)
            .map(|i| if i / n == i % n { Jet::one(nvars, order) } else { Jet::zero(nvars, order) })
            .collect();
        JetMatrix { n, entries }
    }

    pub fn dim(&self) -> usize {
        self.n
    }

    pub fn get(&self, i: usize, j: usize) -> &Jet {
        &self.entries[i * self.n + j]
    }

    pub fn mul(&self, other: &JetMatrix) -> Result<JetMatrix> {
        if self.n != other.n {
            return Err(Error::Shape("jet matrix dimensions differ".into()));
        }
        let n = self.n;
        let mut entries = Vec::with_capacity(n * n);
        for i in 0..n {
            for j in 0..n {
                let mut acc = self.get(i, 0).mul(other.get(0, j));
                for k in 1..n {
                    acc = acc.add(&self.get(i, k).mul(other.get(k, j)));
                }
                entries.push(acc);
            }
        }
        Ok(JetMatrix { n, entries })
    }

    fn order(&self) -> usize {
        self.entries.iter().map(|e| e.order()).min().unwrap_or(0)
    }

    fn nvars(&self) -> usize {
        self.entries.first().map_or(0, |e| e.nvars())
    }

    /// Inverse via the constant-term inverse and the recursion
    /// `B_m = −B₀ Σ_{i=1}^{m} M_i B_{m−i}`.
    pub fn invert(&self, degree: i32) -> Result<JetMatrix> {
        let n = self.n;
        let order = self.order();
        let nv = self.nvars();
        let layer = |m: usize| -> Vec<Poly> { (0..n * n).map(|e| self.entries[e].coeffs[m].clone()).collect() };
        let b0 = invert_poly_matrix(n, layer(0), degree)?;
        let mut bs = vec![b0.clone()];
        for m in 1..=order {
            let mut s = vec![Poly::zero(nv); n * n];
            for i in 1..=m {
                let prod = poly_matmul(n, &layer(i), &bs[m - i]);
                for (a, b) in s.iter_mut().zip(prod) {
                    *a = a.add(&b);
                }
            }
            bs.push(poly_matmul(n, &b0, &s).into_iter().map(|p| p.neg()).collect());
        }
        let entries = (0..n * n)
            .map(|e| Jet { nvars: nv, coeffs: (0..=order).map(|m| bs[m][e].clone()).collect(), parity: Parity::None })
            .collect();
        Ok(JetMatrix { n, entries })
    }
}

fn poly_matmul(n: usize, a: &[Poly], b: &[Poly]) -> Vec<Poly> {
    let nv = a[0].nvars();
    let mut out = vec![Poly::zero(nv); n * n];
    for i in 0..n {
        for k in 0..n {
            if a[i * n + k].is_zero() {
                continue;
            }
            for j in 0..n {
                if b[k * n + j].is_zero() {
                    continue;
                }
                out[i * n + j] = out[i * n + j].add(&a[i * n + k].mul(&b[k * n + j]));
            }
        }
    }
    out
}

/// Gauss–Jordan over polynomials; pivots must be nonzero at `x = 0`.
fn invert_poly_matrix(n: usize, mut a: Vec<Poly>, degree: i32) -> Result<Vec<Poly>> {
    let nv = a[0].nvars();
    let mut inv: Vec<Poly> = (0..n * n).map(|e| if e / n == e % n { Poly::one(nv) } else { Poly::zero(nv) }).collect();
    for col in 0..n {
        let pivot = (col..n)
            .max_by(|&i, &j| {
                let ci = a[i * n + col].constant_term().abs();
                let cj = a[j * n + col].constant_term().abs();
                ci.cmp(&cj)
            })
            .filter(|&p| !a[p * n + col].constant_term().is_zero())
            .ok_or_else(|| Error::NotInvertible(format!("constant term of the jet matrix is singular at column {col}")))?;
        if pivot != col {
            for j in 0..n {
                a.swap(pivot * n + j, col * n + j);
                inv.swap(pivot * n + j, col * n + j);
            }
        }
        let p_inv = a[col * n + col].inverse(degree)?;
        for j in 0..n {
            a[col * n + j] = a[col * n + j].mul(&p_inv);
            inv[col * n + j] = inv[col * n + j].mul(&p_inv);
        }
        for i in 0..n {
            if i == col || a[i * n + col].is_zero() {
                continue;
            }
            let f = a[i * n + col].clone();
            for j in 0..n {
                let t = f.mul(&a[col * n + j]);
                a[i * n + j] = a[i * n + j].sub(&t);
                let t = f.mul(&inv[col * n + j]);
                inv[i * n + j] = inv[i * n + j].sub(&t);
            }
        }
    }
    Ok(inv)
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn polynomials_from_expressions() {
        let e = crate::expr::parse("x1^2/2 - (x1 - 3)*x2 + 0.25").unwrap();
        let p = Poly::from_expr(&e, &["x1", "x2"]).unwrap();
        let want = Poly::var(2, 0).pow(2).scale(&q_frac(1, 2)).sub(&Poly::var(2, 0).mul(&Poly::var(2, 1))).add(&Poly::var(2, 1).scale(&q(3))).add(&Poly::constant(2, q_frac(1, 4)));
        assert_eq!(p, want);
        for bad in ["sin(x1)", "x1^(1/2)", "1/x1", "y"] {
            assert!(Poly::from_expr(&crate::expr::parse(bad).unwrap(), &["x1", "x2"]).is_err(), "{bad}");
        }
    }

    fn one_plus_rho(order: usize) -> Jet {
        Jet::one(0, order).add(&Jet::rho(0, order))
    }

    #[test]
    fn geometric_series() {
        let order = 7;
        let inv = one_plus_rho(order).invert(0).unwrap();
        for i in 0..=order {
            let expect = if i % 2 == 0 { q(1) } else { q(-1) };
            assert_eq!(inv.coeff(i).constant_term(), expect);
        }
        assert_eq!(one_plus_rho(order).mul(&inv), Jet::one(0, order));
    }

    #[test]
    fn diagonal_matrix_inverse() {
        let order = 6;
        let r2 = Jet::rho(0, order).mul(&Jet::rho(0, order));
        let z = Jet::zero(0, order);
        let m = JetMatrix::new(2, vec![Jet::one(0, order).add(&r2), z.clone(), z, Jet::one(0, order).sub(&r2)]).unwrap();
        let inv = m.invert(0).unwrap();
        let a = inv.get(0, 0);
        let b = inv.get(1, 1);
        for i in 0..=order {
            let (ea, eb) = if i % 2 == 1 {
                (q(0), q(0))
            } else if i % 4 == 0 {
                (q(1), q(1))
            } else {
                (q(-1), q(1))
            };
            assert_eq!(a.coeff(i).constant_term(), ea, "ρ^{i}");
            assert_eq!(b.coeff(i).constant_term(), eb, "ρ^{i}");
        }
        assert_eq!(m.mul(&inv).unwrap(), JetMatrix::identity(2, 0, order));
    }

    #[test]
    fn parity_rules() {
        let order = 6;
        let even = Jet::one(1, order).add(&Jet::rho(1, order).mul(&Jet::rho(1, order))).with_parity(Parity::Even).unwrap();
        let odd = Jet::rho(1, order).with_parity(Parity::Odd).unwrap();
        let prod = even.mul(&odd);
        assert_eq!(prod.parity(), Parity::Odd);
        assert!(prod.clone().with_parity(Parity::Even).is_err());
        assert_eq!(even.diff_rho().parity(), Parity::Odd);
        assert_eq!(even.diff_x(0).parity(), Parity::Even);
        assert!(Jet::rho(1, order).with_parity(Parity::Even).is_err());
    }

    #[test]
    fn truncated_inverse_of_nonconstant_coefficient() {
        // (1 + x²)⁻¹ = 1 − x² + x⁴ − … through degree 6.
        let p = Poly::one(1).add(&Poly::var(1, 0).pow(2));
        let inv = p.inverse(6).unwrap();
        assert_eq!(inv.valid_degree(), Some(6));
        assert_eq!(inv.coefficient(&[4]), q(1));
        assert_eq!(inv.coefficient(&[6]), q(-1));
        let back = p.mul(&inv);
        assert_eq!(back, Poly::one(1).truncate(6));
        assert!(Poly::var(1, 0).inverse(4).is_err());
    }

    #[test]
    fn matrix_inverse_with_polynomial_coefficients() {
        let nv = 2;
        let order = 4;
        let x = Poly::var(nv, 0);
        let y = Poly::var(nv, 1);
        let c = |p: Poly| Jet::constant(p, order);
        let m = JetMatrix::new(
            2,
            vec![
                c(Poly::one(nv).add(&x.mul(&x))).add(&Jet::rho(nv, order)),
                c(x.mul(&y)),
                c(x.mul(&y)),
                c(Poly::one(nv).add(&y.mul(&y))),
            ],
        )
        .unwrap();
        let inv = m.invert(5).unwrap();
        let prod = m.mul(&inv).unwrap();
        for i in 0..2 {
            for j in 0..2 {
                let e = prod.get(i, j);
                for r in 0..=order {
                    let expect = if i == j && r == 0 { Poly::one(nv) } else { Poly::zero(nv) };
                    assert!(e.coeff(r).sub(&expect).is_zero(), "({i},{j}) ρ^{r}: {:?}", e.coeff(r));
                }
            }
        }
    }

    fn small_poly() -> impl Strategy<Value = Poly> {
        proptest::collection::vec(((0u32..3, 0u32..3), -5i64..=5, 1i64..=4), 0..4).prop_map(|ts| {
            Poly::from_terms(2, ts.into_iter().map(|((a, b), n, d)| (vec![a, b], q_frac(n, d)))).unwrap()
        })
    }

    fn small_jet() -> impl Strategy<Value = Jet> {
        proptest::collection::vec(small_poly(), 4).prop_map(|cs| Jet::from_coeffs(2, cs).unwrap())
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(100))]

        #[test]
        fn ring_axioms(a in small_jet(), b in small_jet(), c in small_jet()) {
            prop_assert_eq!(a.mul(&b).mul(&c), a.mul(&b.mul(&c)));
            prop_assert_eq!(a.mul(&b), b.mul(&a));
            prop_assert_eq!(a.add(&b).add(&c), a.add(&b.add(&c)));
            prop_assert_eq!(a.mul(&b.add(&c)), a.mul(&b).add(&a.mul(&c)));
            prop_assert_eq!(a.sub(&a), Jet::zero(2, 3));
        }

        #[test]
        fn leibniz_rule(a in small_jet(), b in small_jet()) {
            let lhs = a.mul(&b).diff_x(1);
            let rhs = a.diff_x(1).mul(&b).add(&a.mul(&b.diff_x(1)));
            prop_assert_eq!(lhs, rhs);
        }

        #[test]
        fn inverse_is_two_sided(a in small_jet(), c0 in 1i64..5) {
            let mut a = a;
            a.set_coeff(0, Poly::constant(2, q(c0)));
            let inv = a.invert(0).unwrap();
            prop_assert_eq!(a.mul(&inv), Jet::one(2, 3));
        }
    }
}

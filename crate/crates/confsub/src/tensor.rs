//! Dense tensors on a single fiber dimension.
//!
//! Components are stored row-major: the last slot varies fastest. Brackets
//! carry the `1/k!` normalization, so `δ^{a₁…a_k}_{b₁…b_k}` is the identity
//! on `Λ^k` and `(S∧T)_{abcd} = 2S_{a[c}T_{d]b} − 2S_{b[c}T_{d]a}`.

use alloc::format;
use alloc::vec;
use alloc::vec::Vec;
use core::fmt::Debug;

use num_rational::Rational64;
use num_traits::{Num, Signed};

use crate::combinatorics::{double_factorial, factorial, permutations_with_sign};
use crate::error::{Error, Result};

/// Coefficient type for tensors: `f64` for numerics, `Rational64` for exact checks.
pub trait Coeff: Clone + Debug + PartialOrd + Num + Signed {
    /// Symmetry tolerance used by input validation.
    fn tolerance() -> Self;
    fn from_i64(n: i64) -> Self;
    fn to_f64(&self) -> f64;
}

impl Coeff for f64 {
    fn tolerance() -> Self {
        1e-10
    }
    fn from_i64(n: i64) -> Self {
        n as f64
    }
    fn to_f64(&self) -> f64 {
        *self
    }
}

impl Coeff for Rational64 {
    fn tolerance() -> Self {
        Rational64::from_integer(0)
    }
    fn from_i64(n: i64) -> Self {
        Rational64::from_integer(n)
    }
    fn to_f64(&self) -> f64 {
        *self.numer() as f64 / *self.denom() as f64
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Variance {
    Co,
    Contra,
}

/// A value together with a flag raised when an input was out of range.
#[derive(Debug, Clone, PartialEq)]
pub struct Flagged<T> {
    pub value: T,
    pub flagged: bool,
}

#[derive(Debug, Clone, PartialEq)]
pub struct DenseTensor<T = f64> {
    dim: usize,
    slots: Vec<Variance>,
    data: Vec<T>,
}

impl<T: Coeff> DenseTensor<T> {
    pub fn zeros(dim: usize, slots: &[Variance]) -> Self {
        let len = dim.pow(slots.len() as u32);
        DenseTensor { dim, slots: slots.to_vec(), data: vec![T::zero(); len] }
    }

    pub fn scalar(x: T) -> Self {
        DenseTensor { dim: 1, slots: Vec::new(), data: vec![x] }
    }

    pub fn from_vec(dim: usize, slots: &[Variance], data: Vec<T>) -> Result<Self> {
        let len = dim.pow(slots.len() as u32);
        if data.len() != len {
            return Err(Error::Shape(format!("expected {len} components, got {}", data.len())));
        }
        Ok(DenseTensor { dim, slots: slots.to_vec(), data })
    }

    pub fn from_fn(dim: usize, slots: &[Variance], f: impl Fn(&[usize]) -> T) -> Self {
        let mut t = Self::zeros(dim, slots);
        let mut idx = vec![0usize; slots.len()];
        for k in 0..t.data.len() {
            t.unflatten(k, &mut idx);
            t.data[k] = f(&idx);
        }
        t
    }

    /// The metric-like identity `δ^a_b` with slots `[Contra, Co]`.
    pub fn identity(dim: usize) -> Self {
        Self::from_fn(dim, &[Variance::Contra, Variance::Co], |i| {
            if i[0] == i[1] {
                T::one()
            } else {
                T::zero()
            }
        })
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn rank(&self) -> usize {
        self.slots.len()
    }

    pub fn slots(&self) -> &[Variance] {
        &self.slots
    }

    pub fn data(&self) -> &[T] {
        &self.data
    }

    pub fn data_mut(&mut self) -> &mut [T] {
        &mut self.data
    }

    pub fn into_data(self) -> Vec<T> {
        self.data
    }

    pub fn flat_index(&self, idx: &[usize]) -> usize {
        debug_assert_eq!(idx.len(), self.slots.len());
        idx.iter().fold(0, |acc, &i| acc * self.dim + i)
    }

    fn unflatten(&self, mut k: usize, idx: &mut [usize]) {
        for slot in (0..idx.len()).rev() {
            idx[slot] = k % self.dim;
            k /= self.dim;
        }
    }

    pub fn get(&self, idx: &[usize]) -> T {
        self.data[self.flat_index(idx)].clone()
    }

    pub fn set(&mut self, idx: &[usize], v: T) {
        let k = self.flat_index(idx);
        self.data[k] = v;
    }

    pub fn scale(&self, c: T) -> Self {
        let data = self.data.iter().map(|x| x.clone() * c.clone()).collect();
        DenseTensor { dim: self.dim, slots: self.slots.clone(), data }
    }

    fn check_same_shape(&self, other: &Self) -> Result<()> {
        if self.dim != other.dim || self.slots != other.slots {
            return Err(Error::Shape("tensor shapes differ".into()));
        }
        Ok(())
    }

    pub fn add(&self, other: &Self) -> Result<Self> {
        self.check_same_shape(other)?;
        let data = self.data.iter().zip(&other.data).map(|(a, b)| a.clone() + b.clone()).collect();
        Ok(DenseTensor { dim: self.dim, slots: self.slots.clone(), data })
    }

    pub fn sub(&self, other: &Self) -> Result<Self> {
        self.check_same_shape(other)?;
        let data = self.data.iter().zip(&other.data).map(|(a, b)| a.clone() - b.clone()).collect();
        Ok(DenseTensor { dim: self.dim, slots: self.slots.clone(), data })
    }

    pub fn max_abs(&self) -> T {
        self.data.iter().fold(T::zero(), |m, x| if x.abs() > m { x.abs() } else { m })
    }

    /// Outer product; slots of `self` come first.
    pub fn tensor_product(&self, other: &Self) -> Result<Self> {
        if self.dim != other.dim && !(self.rank() == 0 || other.rank() == 0) {
            return Err(Error::Shape("fiber dimensions differ".into()));
        }
        let dim = if self.rank() == 0 { other.dim } else { self.dim };
        let mut slots = self.slots.clone();
        slots.extend_from_slice(&other.slots);
        let mut data = Vec::with_capacity(self.data.len() * other.data.len());
        for a in &self.data {
            for b in &other.data {
                data.push(a.clone() * b.clone());
            }
        }
        Ok(DenseTensor { dim, slots, data })
    }

    /// Contraction of one covariant with one contravariant slot.
    pub fn contract(&self, slot_a: usize, slot_b: usize) -> Result<Self> {
        let r = self.rank();
        if slot_a >= r || slot_b >= r {
            return Err(Error::Slot(format!("slot out of range for rank {r}")));
        }
        if slot_a == slot_b {
            return Err(Error::Slot("cannot contract a slot with itself".into()));
        }
        if self.slots[slot_a] == self.slots[slot_b] {
            return Err(Error::Slot("contraction needs one covariant and one contravariant slot".into()));
        }
        let slots: Vec<Variance> =
            (0..r).filter(|&s| s != slot_a && s != slot_b).map(|s| self.slots[s]).collect();
        let mut out = Self::zeros(self.dim, &slots);
        let mut outer = vec![0usize; slots.len()];
        let mut full = vec![0usize; r];
        for k in 0..out.data.len() {
            out.unflatten(k, &mut outer);
            let mut it = outer.iter();
            for (s, entry) in full.iter_mut().enumerate() {
                if s != slot_a && s != slot_b {
                    *entry = *it.next().unwrap();
                }
            }
            let mut acc = T::zero();
            for i in 0..self.dim {
                full[slot_a] = i;
                full[slot_b] = i;
                acc = acc + self.get(&full);
            }
            out.data[k] = acc;
        }
        Ok(out)
    }

    /// Applies a `(0,2)` or `(2,0)` matrix to one slot, flipping its variance.
    fn move_index(&self, slot: usize, m: &[T], to: Variance) -> Result<Self> {
        if slot >= self.rank() {
            return Err(Error::Slot(format!("slot {slot} out of range")));
        }
        if self.slots[slot] == to {
            return Err(Error::Slot(format!("slot {slot} already {to:?}")));
        }
        if m.len() != self.dim * self.dim {
            return Err(Error::Shape("metric has wrong size".into()));
        }
        let mut slots = self.slots.clone();
        slots[slot] = to;
        let mut out = Self::zeros(self.dim, &slots);
        let mut idx = vec![0usize; self.rank()];
        for k in 0..out.data.len() {
            out.unflatten(k, &mut idx);
            let target = idx[slot];
            let mut acc = T::zero();
            for j in 0..self.dim {
                idx[slot] = j;
                acc = acc + m[target * self.dim + j].clone() * self.get(&idx);
            }
            out.data[k] = acc;
        }
        Ok(out)
    }

    /// Raises `slot` with the inverse metric `ginv` (row-major `n×n`).
    pub fn raise(&self, slot: usize, ginv: &[T]) -> Result<Self> {
        self.move_index(slot, ginv, Variance::Contra)
    }

    /// Lowers `slot` with the metric `g` (row-major `n×n`).
    pub fn lower(&self, slot: usize, g: &[T]) -> Result<Self> {
        self.move_index(slot, g, Variance::Co)
    }

    /// Reorders slots: slot `i` of the result is slot `perm[i]` of `self`.
    pub fn permute(&self, perm: &[usize]) -> Result<Self> {
        let r = self.rank();
        if perm.len() != r {
            return Err(Error::Slot("permutation has wrong length".into()));
        }
        let slots: Vec<Variance> = perm.iter().map(|&p| self.slots[p]).collect();
        let mut out = Self::zeros(self.dim, &slots);
        let mut idx = vec![0usize; r];
        let mut src = vec![0usize; r];
        for k in 0..out.data.len() {
            out.unflatten(k, &mut idx);
            for (i, &p) in perm.iter().enumerate() {
                src[p] = idx[i];
            }
            out.data[k] = self.get(&src);
        }
        Ok(out)
    }

    /// Largest deviation from symmetry of a rank-2 tensor.
    pub fn asymmetry(&self) -> T {
        let n = self.dim;
        let mut worst = T::zero();
        for a in 0..n {
            for b in 0..n {
                let d = (self.get(&[a, b]) - self.get(&[b, a])).abs();
                if d > worst {
                    worst = d;
                }
            }
        }
        worst
    }
}

/// `δ^{a₁…a_k}_{b₁…b_k}` with `k` contravariant slots followed by `k` covariant ones.
/// For `k > n` the zero tensor is returned with the flag raised.
pub fn generalized_kronecker<T: Coeff>(k: usize, n: usize) -> Flagged<DenseTensor<T>> {
    let mut slots = vec![Variance::Contra; k];
    slots.extend(core::iter::repeat_n(Variance::Co, k));
    let mut t = DenseTensor::zeros(n, &slots);
    if k > n {
        return Flagged { value: t, flagged: true };
    }
    let kf = T::from_i64(factorial(k as u32) as i64);
    let perms = permutations_with_sign(k);
    let mut up = vec![0usize; k];
    let mut idx = vec![0usize; 2 * k];
    // Nonzero entries have distinct upper indices and lower indices a permutation of them.
    for_each_injective(n, k, &mut up, 0, &mut |up| {
        for (p, sign) in &perms {
            idx[..k].copy_from_slice(up);
            for i in 0..k {
                idx[k + p[i]] = up[i];
            }
            let flat = t.flat_index(&idx);
            t.data[flat] = T::from_i64(*sign as i64) / kf.clone();
        }
    });
    Flagged { value: t, flagged: false }
}

fn check_symmetric<T: Coeff>(s: &DenseTensor<T>) -> Result<()> {
    if s.rank() != 2 || s.slots() != [Variance::Co, Variance::Co] {
        return Err(Error::Shape("expected a covariant rank-2 tensor".into()));
    }
    let asym = s.asymmetry();
    let scale = s.max_abs() + T::one();
    if asym > T::tolerance() * scale {
        return Err(Error::Asymmetric(asym.to_f64()));
    }
    Ok(())
}

/// Kulkarni–Nomizu product of symmetric covariant two-tensors.
pub fn kulkarni_nomizu<T: Coeff>(s: &DenseTensor<T>, t: &DenseTensor<T>) -> Result<DenseTensor<T>> {
    check_symmetric(s)?;
    check_symmetric(t)?;
    if s.dim() != t.dim() {
        return Err(Error::Shape("fiber dimensions differ".into()));
    }
    let n = s.dim();
    Ok(DenseTensor::from_fn(n, &[Variance::Co; 4], |i| {
        let (a, b, c, d) = (i[0], i[1], i[2], i[3]);
        s.get(&[a, c]) * t.get(&[d, b]) - s.get(&[a, d]) * t.get(&[c, b]) - s.get(&[b, c]) * t.get(&[d, a])
            + s.get(&[b, d]) * t.get(&[c, a])
    }))
}

const PF_SLOTS: [Variance; 4] = [Variance::Co, Variance::Co, Variance::Contra, Variance::Contra];

fn check_pf_factor<T: Coeff>(t: &DenseTensor<T>, n: usize) -> Result<()> {
    if t.slots() != PF_SLOTS {
        return Err(Error::Shape("Pfaffian factors must be (2,2)-tensors T_{ab}^{cd}".into()));
    }
    if t.dim() != n {
        return Err(Error::Shape("Pfaffian factors have different dimensions".into()));
    }
    let mut worst = T::zero();
    for a in 0..n {
        for b in 0..n {
            for c in 0..n {
                for d in 0..n {
                    let lower = (t.get(&[a, b, c, d]) + t.get(&[b, a, c, d])).abs();
                    let upper = (t.get(&[a, b, c, d]) + t.get(&[a, b, d, c])).abs();
                    for v in [lower, upper] {
                        if v > worst {
                            worst = v;
                        }
                    }
                }
            }
        }
    }
    if worst > T::tolerance() * (t.max_abs() + T::one()) {
        return Err(Error::Asymmetric(worst.to_f64()));
    }
    Ok(())
}

/// The symmetric multilinear Pfaffian `Pf_ℓ(T₁,…,T_ℓ)`.
///
/// Sums `δ^{a₁…a_{2ℓ}}_{b₁…b_{2ℓ}} Π T_i` over distinct lower tuples and the
/// permutations of each tuple, which are the only nonzero Kronecker entries.
pub fn pfaffian_multilinear<T: Coeff>(factors: &[DenseTensor<T>]) -> Result<Flagged<T>> {
    let ell = factors.len();
    if ell == 0 {
        return Ok(Flagged { value: T::one(), flagged: false });
    }
    let n = factors[0].dim();
    for f in factors {
        check_pf_factor(f, n)?;
    }
    if 2 * ell > n {
        return Ok(Flagged { value: T::zero(), flagged: true });
    }
    let perms = permutations_with_sign(2 * ell);
    let mut total = T::zero();
    let mut tuple = vec![0usize; 2 * ell];
    let mut image = vec![0usize; 2 * ell];
    for_each_injective(n, 2 * ell, &mut tuple, 0, &mut |a| {
        for (p, sign) in &perms {
            for i in 0..2 * ell {
                image[i] = a[p[i]];
            }
            let mut prod = T::from_i64(*sign as i64);
            for (i, f) in factors.iter().enumerate() {
                prod = prod * f.get(&[a[2 * i], a[2 * i + 1], image[2 * i], image[2 * i + 1]]);
                if prod.is_zero() {
                    break;
                }
            }
            total = total.clone() + prod;
        }
    });
    // 2^{-ℓ} (2ℓ-1)!! / (2ℓ)! = 1 / (4^ℓ ℓ!)
    let denom = T::from_i64(4i64.pow(ell as u32) * factorial(ell as u32) as i64);
    Ok(Flagged { value: total / denom, flagged: false })
}

/// `Pf_ℓ(T)` for a `(2,2)`-tensor antisymmetric in each pair; `Pf_0 = 1`.
pub fn pfaffian_poly<T: Coeff>(ell: usize, t: &DenseTensor<T>) -> Result<Flagged<T>> {
    if ell == 0 {
        return Ok(Flagged { value: T::one(), flagged: false });
    }
    let factors = vec![t.clone(); ell];
    pfaffian_multilinear(&factors)
}

/// Reference evaluation straight from the definition: every index tuple,
/// Kronecker entries read from [`generalized_kronecker`]. Meant for tests.
pub fn pfaffian_explicit<T: Coeff>(ell: usize, t: &DenseTensor<T>) -> T {
    if ell == 0 {
        return T::one();
    }
    let n = t.dim();
    if 2 * ell > n {
        return T::zero();
    }
    let delta = generalized_kronecker::<T>(2 * ell, n).value;
    let m = 2 * ell;
    let mut total = T::zero();
    let count = n.pow(2 * m as u32);
    let mut idx = vec![0usize; 2 * m];
    for flat in 0..count {
        let mut k = flat;
        for slot in (0..2 * m).rev() {
            idx[slot] = k % n;
            k /= n;
        }
        let d = delta.get(&idx);
        if d.is_zero() {
            continue;
        }
        let (up, down) = idx.split_at(m);
        // δ^{b…}_{a…} T_{a₁a₂}^{b₁b₂}…: upper Kronecker slots pair with T's upper slots.
        let mut prod = d;
        for i in 0..ell {
            prod = prod * t.get(&[down[2 * i], down[2 * i + 1], up[2 * i], up[2 * i + 1]]);
        }
        total = total + prod;
    }
    let coeff = T::from_i64(double_factorial(2 * ell as i64 - 1)) / T::from_i64(2i64.pow(ell as u32));
    total * coeff
}

/// Symmetric multilinear value recovered from the diagonal `Pf_ℓ(T)` alone:
/// `(1/ℓ!) Σ_{S ⊆ {1..ℓ}} (−1)^{ℓ−|S|} Pf_ℓ(Σ_{i∈S} A_i)`. Reference oracle for
/// [`pfaffian_multilinear`].
pub fn pfaffian_polarized<T: Coeff>(factors: &[DenseTensor<T>]) -> Result<T> {
    let ell = factors.len();
    if ell == 0 {
        return Ok(T::one());
    }
    let mut total = T::zero();
    for mask in 0u32..(1 << ell) {
        let size = mask.count_ones() as usize;
        let mut sum = DenseTensor::zeros(factors[0].dim(), factors[0].slots());
        for (i, f) in factors.iter().enumerate() {
            if mask & (1 << i) != 0 {
                sum = sum.add(f)?;
            }
        }
        let v = pfaffian_explicit(ell, &sum);
        total = if (ell - size) % 2 == 0 { total + v } else { total - v };
    }
    Ok(total / T::from_i64(factorial(ell as u32) as i64))
}

fn for_each_injective(n: usize, len: usize, buf: &mut [usize], depth: usize, f: &mut dyn FnMut(&[usize])) {
    if depth == len {
        f(buf);
        return;
    }
    for v in 0..n {
        if buf[..depth].contains(&v) {
            continue;
        }
        buf[depth] = v;
        for_each_injective(n, len, buf, depth + 1, f);
    }
}

/// Raises the last two slots of a covariant rank-4 tensor: `R_{ab}{}^{cd}`.
pub fn raise_last_pair<T: Coeff>(r: &DenseTensor<T>, ginv: &[T]) -> Result<DenseTensor<T>> {
    r.raise(2, ginv)?.raise(3, ginv)
}

/// The metric as a covariant rank-2 tensor.
pub fn metric_tensor<T: Coeff>(n: usize, g: &[T]) -> Result<DenseTensor<T>> {
    DenseTensor::from_vec(n, &[Variance::Co, Variance::Co], g.to_vec())
}

/// Full contraction `T_{ab}{}^{ab}` of a `(2,2)`-tensor.
pub fn full_trace<T: Coeff>(t: &DenseTensor<T>) -> Result<T> {
    let once = t.contract(1, 3)?;
    Ok(once.contract(0, 1)?.get(&[]))
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    type Q = Rational64;

    fn q(n: i64) -> Q {
        Q::from_integer(n)
    }

    fn eye<T: Coeff>(n: usize) -> DenseTensor<T> {
        DenseTensor::from_fn(n, &[Variance::Co, Variance::Co], |i| if i[0] == i[1] { T::one() } else { T::zero() })
    }

    #[test]
    fn trace_of_identity() {
        let id = DenseTensor::<f64>::identity(3);
        assert_eq!(id.contract(0, 1).unwrap().get(&[]), 3.0);
    }

    #[test]
    fn contraction_errors() {
        let id = DenseTensor::<f64>::identity(3);
        assert!(matches!(id.contract(0, 0), Err(Error::Slot(_))));
        assert!(matches!(id.contract(0, 2), Err(Error::Slot(_))));
        let g = eye::<f64>(3);
        assert!(matches!(g.contract(0, 1), Err(Error::Slot(_))));
    }

    #[test]
    fn kronecker_two_components() {
        let d = generalized_kronecker::<Q>(2, 2);
        assert!(!d.flagged);
        assert_eq!(d.value.get(&[0, 1, 0, 1]), Q::new(1, 2));
        assert_eq!(d.value.get(&[0, 1, 1, 0]), Q::new(-1, 2));
        assert_eq!(d.value.get(&[0, 0, 0, 0]), q(0));
        let d1 = generalized_kronecker::<Q>(1, 3).value;
        assert_eq!(d1, DenseTensor::<Q>::identity(3));
        assert!(generalized_kronecker::<f64>(3, 2).flagged);
    }

    #[test]
    fn kronecker_pair_contraction() {
        for n in 2..=5 {
            let d = generalized_kronecker::<Q>(2, n).value;
            let c = d.contract(1, 3).unwrap();
            let expect = DenseTensor::<Q>::identity(n).scale(Q::new(n as i64 - 1, 2));
            assert_eq!(c, expect);
        }
    }

    #[test]
    fn kronecker_contraction_identity_exact() {
        for n in 1..=5usize {
            for k in 1..=n {
                let d = generalized_kronecker::<Q>(k, n).value;
                let c = d.contract(k - 1, 2 * k - 1).unwrap();
                let lower = generalized_kronecker::<Q>(k - 1, n).value;
                let expect = lower.scale(Q::new((n - k + 1) as i64, k as i64));
                assert_eq!(c, expect, "k={k} n={n}");
            }
        }
    }

    #[test]
    fn kronecker_antisymmetry() {
        let d = generalized_kronecker::<Q>(3, 4).value;
        let swapped_up = d.permute(&[1, 0, 2, 3, 4, 5]).unwrap();
        let swapped_down = d.permute(&[0, 1, 2, 3, 5, 4]).unwrap();
        assert_eq!(swapped_up, d.scale(q(-1)));
        assert_eq!(swapped_down, d.scale(q(-1)));
    }

    #[test]
    fn kulkarni_nomizu_of_metric() {
        for n in 2..=5 {
            let g = eye::<Q>(n);
            let gg = kulkarni_nomizu(&g, &g).unwrap();
            for a in 0..n {
                for b in 0..n {
                    for c in 0..n {
                        for d in 0..n {
                            let expect = q(2)
                                * (g.get(&[a, c]) * g.get(&[b, d]) - g.get(&[a, d]) * g.get(&[b, c]));
                            assert_eq!(gg.get(&[a, b, c, d]), expect);
                        }
                    }
                }
            }
            let ginv: Vec<Q> = g.data().to_vec();
            let mixed = raise_last_pair(&gg, &ginv).unwrap();
            assert_eq!(full_trace(&mixed).unwrap(), q(2 * n as i64 * (n as i64 - 1)));
        }
    }

    #[test]
    fn kulkarni_nomizu_rejects_asymmetric() {
        let mut s = eye::<f64>(3);
        s.set(&[0, 1], 1.0);
        assert!(matches!(kulkarni_nomizu(&s, &eye(3)), Err(Error::Asymmetric(_))));
    }

    #[test]
    fn pfaffian_sphere_values() {
        for n in 2..=6usize {
            let g = eye::<Q>(n);
            let half_gg = kulkarni_nomizu(&g, &g).unwrap().scale(Q::new(1, 2));
            let mixed = raise_last_pair(&half_gg, g.data()).unwrap();
            assert_eq!(pfaffian_poly(0, &mixed).unwrap().value, q(1));
            // Pf_1(½g∧g) = n(n−1)/2
            assert_eq!(pfaffian_poly(1, &mixed).unwrap().value, Q::new((n * (n - 1)) as i64, 2));
            if n % 2 == 0 {
                let top = pfaffian_poly(n / 2, &mixed).unwrap().value;
                assert_eq!(top, q(double_factorial(n as i64 - 1)));
            }
        }
        let g = eye::<f64>(2);
        let half_gg = kulkarni_nomizu(&g, &g).unwrap().scale(0.5);
        let mixed = raise_last_pair(&half_gg, g.data()).unwrap();
        assert_eq!(pfaffian_poly(1, &mixed).unwrap().value, 1.0);
        let too_big = pfaffian_poly(2, &mixed).unwrap();
        assert!(too_big.flagged);
        assert_eq!(too_big.value, 0.0);
    }

    fn pair_antisymmetric(n: usize, raw: &[i64]) -> DenseTensor<Q> {
        DenseTensor::from_fn(n, &PF_SLOTS, |i| {
            let (a, b, c, d) = (i[0], i[1], i[2], i[3]);
            if a == b || c == d {
                return q(0);
            }
            let (a0, b0, sa) = if a < b { (a, b, 1) } else { (b, a, -1) };
            let (c0, d0, sc) = if c < d { (c, d, 1) } else { (d, c, -1) };
            let k = ((a0 * n + b0) * n + c0) * n + d0;
            q(raw[k % raw.len()] * sa * sc)
        })
    }

    #[test]
    fn pfaffian_fast_path_matches_explicit_sum() {
        let raw: Vec<i64> = (0..97).map(|i| (i * 37 % 11) - 5).collect();
        for n in 2..=4 {
            let t = pair_antisymmetric(n, &raw);
            for ell in 0..=n / 2 {
                assert_eq!(pfaffian_poly(ell, &t).unwrap().value, pfaffian_explicit(ell, &t), "n={n} ell={ell}");
            }
        }
    }

    #[test]
    fn multilinear_with_kulkarni_nomizu_square() {
        let raw: Vec<i64> = (0..61).map(|i| (i * 13 % 7) - 3).collect();
        let t = pair_antisymmetric(4, &raw);
        let g = eye::<Q>(4);
        let gg = raise_last_pair(&kulkarni_nomizu(&g, &g).unwrap(), g.data()).unwrap();
        let lhs = pfaffian_multilinear(&[t.clone(), gg.clone()]).unwrap().value;
        let rhs = pfaffian_poly(1, &t).unwrap().value;
        assert_eq!(lhs, rhs);
        let swapped = pfaffian_multilinear(&[gg, t]).unwrap().value;
        assert_eq!(swapped, lhs);
    }

    #[test]
    fn pf_with_metric_polarization() {
        let raw: Vec<i64> = (0..53).map(|i| (i * 29 % 9) - 4).collect();
        let t = pair_antisymmetric(4, &raw);
        let g = eye::<Q>(4);
        let gg = raise_last_pair(&kulkarni_nomizu(&g, &g).unwrap(), g.data()).unwrap();
        for s in 0..=2usize {
            let mut factors = vec![t.clone(); s];
            factors.extend(core::iter::repeat_n(gg.clone(), 2 - s));
            let lhs = pfaffian_polarized(&factors).unwrap();
            let binom = crate::combinatorics::binomial(2, s as u64) as i64;
            let rhs = Q::new(2i64.pow(2 - s as u32), binom)
                * q(double_factorial(4 - 2 * s as i64 - 1))
                * pfaffian_poly(s, &t).unwrap().value;
            assert_eq!(lhs, rhs, "s={s}");
            assert_eq!(pfaffian_multilinear(&factors).unwrap().value, lhs);
        }
    }

    fn random_tensor(n: usize, rank: usize, seed: &[f64]) -> DenseTensor<f64> {
        let slots: Vec<Variance> = (0..rank).map(|i| if i % 2 == 0 { Variance::Co } else { Variance::Contra }).collect();
        DenseTensor::from_fn(n, &slots, |i| {
            let k = i.iter().fold(0usize, |acc, &x| acc * n + x);
            seed[k % seed.len()]
        })
    }

    proptest! {
        #[test]
        fn contraction_matches_loop_oracle(seed in prop::collection::vec(-3.0f64..3.0, 27), n in 2usize..=3) {
            let t = random_tensor(n, 3, &seed);
            // slots: Co, Contra, Co; contract 0 with 1 and compare with a loop.
            let c = t.contract(0, 1).unwrap();
            for k in 0..n {
                let mut acc = 0.0;
                for i in 0..n {
                    acc += t.get(&[i, i, k]);
                }
                prop_assert_eq!(c.get(&[k]), acc);
            }
            let c2 = t.contract(1, 2).unwrap();
            for k in 0..n {
                let mut acc = 0.0;
                for i in 0..n {
                    acc += t.get(&[k, i, i]);
                }
                prop_assert_eq!(c2.get(&[k]), acc);
            }
        }

        #[test]
        fn raise_then_lower_roundtrip(seed in prop::collection::vec(-1.0f64..1.0, 16), a in 0.2f64..0.9) {
            let n = 3;
            let t = random_tensor(n, 2, &seed);
            let g = [2.0, a, 0.0, a, 1.5, 0.1, 0.0, 0.1, 1.0];
            let m = nalgebra::Matrix3::from_row_slice(&g).try_inverse().unwrap();
            let ginv: Vec<f64> = (0..9).map(|k| m[(k / 3, k % 3)]).collect();
            let back = t.raise(0, &ginv).unwrap().lower(0, &g).unwrap();
            prop_assert!(back.sub(&t).unwrap().max_abs() < 1e-12);
        }

        #[test]
        fn kulkarni_nomizu_commutes(s in prop::collection::vec(-2.0f64..2.0, 6), t in prop::collection::vec(-2.0f64..2.0, 6)) {
            let sym = |v: &[f64]| DenseTensor::from_fn(3, &[Variance::Co, Variance::Co], |i| {
                let (a, b) = if i[0] <= i[1] { (i[0], i[1]) } else { (i[1], i[0]) };
                v[a * 3 + b - a * (a + 1) / 2]
            });
            let (s, t) = (sym(&s), sym(&t));
            let st = kulkarni_nomizu(&s, &t).unwrap();
            let ts = kulkarni_nomizu(&t, &s).unwrap();
            prop_assert!(st.sub(&ts).unwrap().max_abs() < 1e-12);
            let ss = kulkarni_nomizu(&s, &s).unwrap();
            for a in 0..3 { for b in 0..3 { for c in 0..3 { for d in 0..3 {
                let v = ss.get(&[a, b, c, d]);
                prop_assert!((v + ss.get(&[b, a, c, d])).abs() < 1e-12);
                prop_assert!((v - ss.get(&[c, d, a, b])).abs() < 1e-12);
                let bianchi = v + ss.get(&[b, c, a, d]) + ss.get(&[c, a, b, d]);
                prop_assert!(bianchi.abs() < 1e-12);
            }}}}
        }
    }
}

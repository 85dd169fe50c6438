//! The canonical ambient space of a minimal immersion into an Einstein manifold,
//! straightenable invariants and the Gauss–Bonnet–Chern integrands.
//!
//! For `j: Σᵏ → (M, g)` with `Ric = (n−1)λg`, the ambient metric is
//! `g̃ = 2ρ dt² + 2t dt dρ + τ²g`, `τ = t(1 + λρ/2)`, on `(t, M, ρ)` and the
//! ambient immersion is `j̃(t, x, ρ) = (t, j(x), ρ)`. A scalar `I` of weight `w`
//! built from `L̊` and the Weyl tensor extends as `τ^w ϖ*I`, and
//! `Δ̃(τ^w ϖ*u) = τ^{w−2} ϖ*((Δ̄ − w(k+w−1)λ)u)`.

use alloc::format;
use alloc::string::{String, ToString};
use alloc::sync::Arc;
use alloc::vec;
use alloc::vec::Vec;

use num_bigint::BigInt;
use num_traits::{One, ToPrimitive, Zero};
#[allow(unused_imports)]
use num_traits::Float;

use crate::catalog::{ambient_coordinate_names, ambient_epsilon, canonical_ambient};
use crate::chart::{CoordBox, MetricChart};
use crate::combinatorics::{double_factorial, factorial};
use crate::error::{Error, Result};
use crate::expr::{num, var, Expr};
use crate::field::{laplacian, shifted_laplacian_field, Field};
use crate::jets::Q;
use crate::submanifold::{ImmersionChart, PointData};
use crate::tensor::{pfaffian_poly, raise_last_pair, DenseTensor};

/// Tolerance on `|H|` and on `Ric − (n−1)λg` for the minimal-in-Einstein hypothesis.
pub const HYPOTHESIS_TOL: f64 = 1e-6;

/// The contraction pattern of a straight invariant.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Contraction {
    /// `|L̊|^{2ℓ}`.
    LoPower { ell: usize },
    /// `|L̊²|²` with `(L̊²)_{αβ} = L̊_α{}^γ{}_{α'} L̊_{γβ}{}^{α'}`.
    LoSquareNorm,
    /// `Pf_r(Ŵ)` with `Ŵ = j*W + ½L̊∧L̊`.
    Pfaffian { r: usize },
    /// `W_{αβ}{}^{αβ}`.
    WeylTrace,
}

/// A contraction together with the power `c` of the ambient Laplacian.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct StraightInvariantSpec {
    pub contraction: Contraction,
    pub c: usize,
}

pub const PRESET_NAMES: [&str; 5] = ["L2", "L2ell", "L2sq", "Pfr", "Wtrace"];

impl StraightInvariantSpec {
    /// Named presets; `param` is `ℓ` for `L2ell` and `r` for `Pfr`.
    pub fn preset(name: &str, param: Option<usize>, c: usize) -> Result<Self> {
        let need = |what: &str| -> Result<usize> {
            match param {
                Some(p) if p >= 1 => Ok(p),
                _ => Err(Error::Invalid(format!("preset `{name}` needs a positive {what}"))),
            }
        };
        let contraction = match name {
            "L2" => Contraction::LoPower { ell: 1 },
            "L2ell" => Contraction::LoPower { ell: need("ℓ")? },
            "L2sq" => Contraction::LoSquareNorm,
            "Pfr" => Contraction::Pfaffian { r: need("r")? },
            "Wtrace" => Contraction::WeylTrace,
            _ => return Err(Error::Invalid(format!("unknown invariant preset `{name}`"))),
        };
        Ok(StraightInvariantSpec { contraction, c })
    }

    pub fn name(&self) -> String {
        match self.contraction {
            Contraction::LoPower { ell: 1 } => "L2".to_string(),
            Contraction::LoPower { ell } => format!("L2ell({ell})"),
            Contraction::LoSquareNorm => "L2sq".to_string(),
            Contraction::Pfaffian { r } => format!("Pfr({r})"),
            Contraction::WeylTrace => "Wtrace".to_string(),
        }
    }

    /// `a + 2b`, the total degree with curvature counted twice.
    pub fn order(&self) -> usize {
        match self.contraction {
            Contraction::LoPower { ell } => 2 * ell,
            Contraction::LoSquareNorm => 4,
            Contraction::Pfaffian { r } => 2 * r,
            Contraction::WeylTrace => 2,
        }
    }

    /// Homogeneity `w = −a − 2b`.
    pub fn weight(&self) -> i64 {
        -(self.order() as i64)
    }

    /// `w − 2c ≥ −k`, needed for the result to be conformally invariant.
    pub fn validate(&self, k: usize) -> Result<()> {
        let lhs = self.weight() - 2 * self.c as i64;
        if lhs < -(k as i64) {
            return Err(Error::Invalid(format!("{} with c = {}: w − 2c = {lhs} < −k = −{k}", self.name(), self.c)));
        }
        Ok(())
    }
}

/// Evaluates the contraction on pointwise data; `data` must carry target curvature
/// for curvature contractions.
pub fn contraction_value(contraction: Contraction, data: &PointData) -> Result<f64> {
    match contraction {
        Contraction::LoPower { ell } => Ok(data.sff.lo_norm2().powi(ell as i32)),
        Contraction::LoSquareNorm => Ok(data.sff.lo_square_norm2()),
        Contraction::Pfaffian { r } => {
            let k = data.frame.k;
            if 2 * r > k {
                return Err(Error::Degree(format!("Pf_{r} on a {k}-dimensional submanifold")));
            }
            let w = w_hat(data)?;
            Ok(pfaffian_poly(r, &raise_last_pair(&w, &data.frame.hinv)?)?.value)
        }
        Contraction::WeylTrace => data.weyl_full_trace(),
    }
}

/// `Ŵ = j*W + ½L̊∧L̊`, covariant.
pub fn w_hat(data: &PointData) -> Result<DenseTensor> {
    data.weyl_tangential()?.add(&data.sff.half_lo_wedge())
}

/// Measures `|H|` and `max|Ric − (n−1)λg|` at one point.
pub fn hypothesis_residuals(data: &PointData, lambda: f64) -> Result<(f64, f64)> {
    let h = data.sff.mean_norm2().max(0.0).sqrt();
    let n = data.frame.n;
    let ric = data.target.ricci()?;
    let g = data.target.g();
    let mut e = 0.0f64;
    for a in 0..n {
        for b in 0..n {
            e = e.max((ric.get(&[a, b]) - (n as f64 - 1.0) * lambda * g[a * n + b]).abs());
        }
    }
    Ok((h, e))
}

fn check_hypotheses(data: &PointData, lambda: f64) -> Result<()> {
    let (h, e) = hypothesis_residuals(data, lambda)?;
    if h > HYPOTHESIS_TOL {
        return Err(Error::Precondition { what: "immersion is not minimal".into(), residual: h });
    }
    if e > HYPOTHESIS_TOL {
        return Err(Error::Precondition { what: format!("target is not Einstein with λ = {lambda}"), residual: e });
    }
    Ok(())
}

fn needs_curvature(c: Contraction) -> bool {
    matches!(c, Contraction::Pfaffian { .. } | Contraction::WeylTrace)
}

/// The straightenable invariant `I` at `x`, with `c` ignored.
pub fn evaluate_straightenable(spec: &StraightInvariantSpec, imm: &ImmersionChart, lambda: f64, x: &[f64]) -> Result<f64> {
    let data = imm.data_at(x, needs_curvature(spec.contraction))?;
    let data = if needs_curvature(spec.contraction) { data } else { with_target_curvature(imm, data)? };
    check_hypotheses(&data, lambda)?;
    contraction_value(spec.contraction, &data)
}

fn with_target_curvature(imm: &ImmersionChart, mut data: PointData) -> Result<PointData> {
    let p = imm.point(&data.x);
    data.target = imm.target().geometry(&p, true)?;
    Ok(data)
}

/// The field `x ↦ I(x)` on the source chart, without hypothesis checks.
pub fn straightenable_field(contraction: Contraction, imm: &ImmersionChart) -> Field {
    let imm = imm.clone();
    let curv = needs_curvature(contraction);
    Field::sampled(imm.domain().clone(), move |x| contraction_value(contraction, &imm.data_at(x, curv)?))
}

/// `∏_{s<c}(Δ̄ + (a+2b+2s)(k−a−2b−2s−1)λ)` applied to `field` on `induced`, at `x`.
pub fn straightening_operator(induced: &Arc<MetricChart>, field: Field, order: usize, c: usize, lambda: f64, x: &[f64]) -> Result<f64> {
    let k = induced.dim() as f64;
    let mut f = field;
    for s in 0..c {
        let d = (order + 2 * s) as f64;
        f = shifted_laplacian_field(Arc::clone(induced), f, d * (k - d - 1.0) * lambda);
    }
    f.eval(x)
}

/// `ι*Δ̃^c 𝒫̃` evaluated on the source through the straightening operator.
pub fn straightened_value(spec: &StraightInvariantSpec, imm: &ImmersionChart, lambda: f64, x: &[f64]) -> Result<f64> {
    if spec.c == 0 {
        return evaluate_straightenable(spec, imm, lambda, x);
    }
    let data = with_target_curvature(imm, imm.data_at(x, false)?)?;
    check_hypotheses(&data, lambda)?;
    let field = straightenable_field(spec.contraction, imm);
    straightening_operator(imm.induced(), field, spec.order(), spec.c, lambda, x)
}

/// `(2λ)^c (−w/2+c−1)! (k+w−1)!! / ((−w/2−1)! (k+w−2c−1)!!)`: the factor relating
/// `∫ι*Δ̃^c(τ^w ϖ*I)` to `∫I` on a closed submanifold.
pub fn divergence_coefficient(k: usize, w: i64, c: usize, lambda: f64) -> Result<f64> {
    let ratio = divergence_ratio(k, w, c)?;
    Ok(ratio * (2.0 * lambda).powi(c as i32))
}

/// The rational part of [`divergence_coefficient`], computed exactly.
pub fn divergence_ratio(k: usize, w: i64, c: usize) -> Result<f64> {
    let k = k as i64;
    let c = c as i64;
    if w > -2 || w % 2 != 0 {
        return Err(Error::Invalid(format!("weight {w} must be even and at most −2")));
    }
    if k + w - 2 * c - 1 < -1 {
        return Err(Error::Invalid(format!("w − 2c = {} < −k = −{k}", w - 2 * c)));
    }
    let fact = |n: i64| BigInt::from(factorial(n as u32));
    let dfact = |n: i64| BigInt::from(double_factorial(n));
    let num = fact(-w / 2 + c - 1) * dfact(k + w - 1);
    let den = fact(-w / 2 - 1) * dfact(k + w - 2 * c - 1);
    Q::new(num, den).to_f64().ok_or_else(|| Error::Invalid("coefficient overflow".into()))
}

/// Exact prefactor `(k/2−1)!(k−2r−1)!!/(r−1)!` of `𝒫_{r,k}`, without the `(2λ)^{k/2−r}`.
pub fn gbc_ratio(k: usize, r: usize) -> Result<Q> {
    if k % 2 == 1 {
        return Err(Error::Parity(format!("GBC integrands need even k, got {k}")));
    }
    if r < 1 || r > k / 2 {
        return Err(Error::Degree(format!("r = {r} outside 1..={}", k / 2)));
    }
    let num = BigInt::from(factorial((k / 2 - 1) as u32)) * BigInt::from(double_factorial(k as i64 - 2 * r as i64 - 1));
    Ok(Q::new(num, BigInt::from(factorial(r as u32 - 1))))
}

/// `𝒫_{r,k} = (2λ)^{k/2−r} (k/2−1)!(k−2r−1)!!/(r−1)! · Pf_r(Ŵ)` from pointwise data.
pub fn gbc_integrand_at(data: &PointData, lambda: f64, r: usize) -> Result<f64> {
    let k = data.frame.k;
    let ratio = gbc_ratio(k, r)?;
    let pre = if k / 2 == r { 1.0 } else { (2.0 * lambda).powi((k / 2 - r) as i32) };
    if pre == 0.0 {
        return Ok(0.0);
    }
    let pf = contraction_value(Contraction::Pfaffian { r }, data)?;
    Ok(pre * ratio.to_f64().unwrap_or(f64::NAN) * pf)
}

/// The field `x ↦ 𝒫_{r,k}(x)`.
pub fn gbc_integrand(imm: &ImmersionChart, lambda: f64, r: usize) -> Result<Field> {
    gbc_ratio(imm.source_dim(), r)?;
    let imm = imm.clone();
    Ok(Field::sampled(imm.domain().clone(), move |x| gbc_integrand_at(&imm.data_at(x, true)?, lambda, r)))
}

/// `|Pf̄ − Σ_{r=0}^{k/2} (k−2r−1)!! λ^{k/2−r} Pf_r(Ŵ)|` at one point.
pub fn intrinsic_pfaffian_decomposition_residual(data: &PointData, lambda: f64) -> Result<f64> {
    let k = data.frame.k;
    if k % 2 == 1 {
        return Err(Error::Parity(format!("the intrinsic Pfaffian needs even k, got {k}")));
    }
    let pf_bar = data.intrinsic_geometry()?.pfaffian()?;
    let mixed = raise_last_pair(&w_hat(data)?, &data.frame.hinv)?;
    let mut rhs = 0.0;
    for r in 0..=k / 2 {
        let pf = pfaffian_poly(r, &mixed)?.value;
        rhs += double_factorial(k as i64 - 2 * r as i64 - 1) as f64 * lambda.powi((k / 2 - r) as i32) * pf;
    }
    Ok((pf_bar - rhs).abs())
}

/// `j̃: S̃ → G̃` for a fixed minimal immersion into an Einstein manifold.
#[derive(Debug, Clone)]
pub struct CanonicalAmbient {
    base: ImmersionChart,
    lambda: f64,
    epsilon: f64,
    ambient: Arc<MetricChart>,
    immersion: ImmersionChart,
    t_name: String,
    rho_name: String,
}

impl CanonicalAmbient {
    pub fn new(base: &ImmersionChart, lambda: f64) -> Result<Self> {
        let ambient = Arc::new(canonical_ambient(base.target(), lambda)?);
        let epsilon = ambient_epsilon(lambda);
        let (t_name, rho_name) = ambient_coordinate_names(base.coords());
        let mut coords = vec![t_name.clone()];
        coords.extend(base.coords().iter().cloned());
        coords.push(rho_name.clone());
        let mut bounds = vec![(0.5, 2.0)];
        bounds.extend(base.domain().bounds.iter().copied());
        bounds.push((-epsilon, epsilon));
        let mut periodic = vec![false];
        periodic.extend(base.domain().periodic.iter().copied());
        periodic.push(false);
        let mut map = vec![var(&t_name)];
        map.extend(base.map().iter().cloned());
        map.push(var(&rho_name));
        let refs: Vec<&str> = coords.iter().map(|s| s.as_str()).collect();
        let immersion = ImmersionChart::new(
            &format!("{}~", base.name()),
            &refs,
            CoordBox::new(bounds, periodic),
            Arc::clone(&ambient),
            map,
        )?;
        Ok(CanonicalAmbient { base: base.clone(), lambda, epsilon, ambient, immersion, t_name, rho_name })
    }

    pub fn lambda(&self) -> f64 {
        self.lambda
    }
    pub fn epsilon(&self) -> f64 {
        self.epsilon
    }
    pub fn base(&self) -> &ImmersionChart {
        &self.base
    }
    pub fn ambient_chart(&self) -> &Arc<MetricChart> {
        &self.ambient
    }
    /// `j̃` as an immersion of `(t, Σ, ρ)`.
    pub fn immersion(&self) -> &ImmersionChart {
        &self.immersion
    }
    /// `j̃*g̃` on `(t, Σ, ρ)`.
    pub fn pulled_back(&self) -> &Arc<MetricChart> {
        self.immersion.induced()
    }

    /// `(t, x, ρ)`.
    pub fn lift_point(&self, t: f64, x: &[f64], rho: f64) -> Vec<f64> {
        let mut p = vec![t];
        p.extend_from_slice(x);
        p.push(rho);
        p
    }

    /// `τ` in the coordinates of `S̃`.
    pub fn tau(&self) -> Expr {
        crate::catalog::tau_expr(self.lambda, &self.t_name, &self.rho_name)
    }

    /// Max deviation of `j̃*g̃` from `2ρ dt² + 2t dt dρ + τ² j*g` at `p = (t, x, ρ)`.
    pub fn straightenable_form_residual(&self, p: &[f64]) -> Result<f64> {
        let big = p.len();
        let k = big - 2;
        let pulled = self.pulled_back().metric_at(p)?;
        let h = self.base.induced().metric_at(&p[1..=k])?;
        let (t, rho) = (p[0], p[big - 1]);
        let tau = t * (1.0 + 0.5 * self.lambda * rho);
        let mut expect = vec![0.0; big * big];
        expect[0] = 2.0 * rho;
        expect[big - 1] = t;
        expect[(big - 1) * big] = t;
        for a in 0..k {
            for b in 0..k {
                expect[(a + 1) * big + b + 1] = tau * tau * h[a * k + b];
            }
        }
        Ok(pulled.iter().zip(&expect).fold(0.0f64, |m, (a, b)| m.max((a - b).abs())))
    }

    /// `|H̃|` of `j̃` at `p`.
    pub fn mean_curvature_norm(&self, p: &[f64]) -> Result<f64> {
        let sff = self.immersion.second_fundamental_form(p)?;
        Ok(sff.mean.iter().map(|v| v * v).sum::<f64>().sqrt())
    }

    /// `τ^w ϖ*u` on `S̃`.
    pub fn extend(&self, u: &Field, w: f64) -> Result<Field> {
        let coords = self.pulled_back().coords().to_vec();
        match u {
            Field::Symbolic(s) => {
                let e = Expr::mul(Expr::pow(self.tau(), num(w)), s.expr.clone());
                Field::symbolic(e, &coords)
            }
            _ => Field::product(Expr::pow(self.tau(), num(w)), &coords, u.clone(), 1),
        }
    }

    /// `Δ̃^c(τ^w ϖ*u)` at `(t = 1, x, ρ = 0)`, computed on `j̃*g̃`.
    pub fn laplacian_power_direct(&self, u: &Field, w: f64, c: usize, x: &[f64]) -> Result<f64> {
        let p = self.lift_point(1.0, x, 0.0);
        let step = crate::field::FD_STEP * self.pulled_back().domain().scale(p.len() - 1);
        if 2.0 * step * c.max(1) as f64 >= self.epsilon {
            return Err(Error::Domain(format!("stencils of {c} Laplacians leave the ρ-interval (−{0}, {0})", self.epsilon)));
        }
        let chart = Arc::clone(self.pulled_back());
        let mut f = self.extend(u, w)?;
        if c == 0 {
            return f.eval(&p);
        }
        for _ in 1..c {
            f = shifted_laplacian_field(Arc::clone(&chart), f, 0.0);
        }
        laplacian(&chart, &f, &p)
    }

    /// `Δ̃(τ^w ϖ*u)` at `(1, x, 0)`.
    pub fn laplacian_direct(&self, u: &Field, w: f64, x: &[f64]) -> Result<f64> {
        self.laplacian_power_direct(u, w, 1, x)
    }
}

/// Sums `f` over a rule on the source with the induced area element.
pub fn integrate_field(imm: &ImmersionChart, grid: usize, f: &Field) -> Result<f64> {
    imm.integrate(grid, false, |d| f.eval(&d.x))
}

/// `true` when the exact rational `q` is an integer.
pub fn is_integral(q: &Q) -> bool {
    q.denom().is_one() || q.numer().is_zero()
}

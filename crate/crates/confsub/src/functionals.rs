//! Gauss–Bonnet–Chern checks and the rigidity integrals.
//!
//! Compact checks integrate over the whole source box. Conformally compact
//! sources have their boundary at `ρ = 0` in the first coordinate; divergent
//! integrals are renormalized with [`crate::renorm`], convergent ones are
//! integrated down to `ρ = inner_cutoff` on the log-graded cut-off rule.

use alloc::format;
use alloc::string::{String, ToString};
use alloc::vec;
use alloc::vec::Vec;
use core::f64::consts::PI;

#[allow(unused_imports)]
use num_traits::Float;

use crate::ambient::{gbc_integrand_at, hypothesis_residuals, straightened_value, StraightInvariantSpec, HYPOTHESIS_TOL};
use crate::catalog::CatalogImmersion;
use crate::combinatorics::{double_factorial, factorial};
use crate::error::{Error, Result};
use crate::expr::{var, Expr};
use crate::quadrature::try_integrate;
use crate::renorm::{cutoff_rule, default_ladder, renormalized_integral, CutoffOptions, EpsilonFit, FitOptions, Integrand};
use crate::sampling;
use crate::submanifold::{ImmersionChart, PointData};
use crate::tensor::DenseTensor;

/// Boundary slice on which conformally compact sources must already be minimal.
pub const ASYMPTOTIC_RHO: f64 = 1e-2;

#[derive(Debug, Clone)]
pub struct GbcOptions {
    /// Box-rule resolution for compact sources.
    pub grid: usize,
    pub cutoff: CutoffOptions,
    pub fit: FitOptions,
    pub ladder: Vec<f64>,
    /// Lower `ρ` limit for convergent integrals on conformally compact sources.
    pub inner_cutoff: f64,
    /// Number of interior points at which hypotheses are measured.
    pub gate_samples: usize,
    pub seed: u64,
}

impl Default for GbcOptions {
    fn default() -> Self {
        GbcOptions {
            grid: 16,
            cutoff: CutoffOptions::default(),
            fit: FitOptions::default(),
            ladder: default_ladder(),
            inner_cutoff: 1e-3,
            gate_samples: 16,
            seed: 0,
        }
    }
}

#[derive(Debug, Clone)]
pub struct GbcReport {
    pub k: usize,
    pub n: usize,
    pub lambda: f64,
    pub renormalized: bool,
    /// Euler characteristic from the catalog topology.
    pub euler: i64,
    /// `∫Pf̄ / (2π)^{k/2}`, renormalized on conformally compact sources.
    pub euler_recovered: f64,
    /// Area, or the renormalized area `𝒜`.
    pub area: f64,
    pub area_fit: Option<EpsilonFit>,
    /// `∫𝒫_{r,k}` for `r = 1..=k/2`.
    pub pfaffian_integrals: Vec<f64>,
    pub lhs: f64,
    pub rhs: f64,
    pub residual: f64,
    /// `max(|LHS|, |area term|)`, the denominator of `relative_residual`.
    pub scale: f64,
    pub relative_residual: f64,
    /// Largest `|H|` over the gate samples.
    pub minimality_residual: f64,
    /// Largest `|Ric − (n−1)λg|` over the gate samples.
    pub einstein_residual: f64,
    /// `∫|H|²` for non-minimal surfaces, where the identity picks up this term.
    pub mean_curvature_integral: Option<f64>,
    /// Residual of the identity including `∫|H|²`.
    pub corrected_residual: Option<f64>,
}

impl GbcReport {
    /// The residual the identity is judged by: corrected when a correction applies.
    pub fn effective_relative_residual(&self) -> f64 {
        match self.corrected_residual {
            Some(r) => r / self.scale,
            None => self.relative_residual,
        }
    }

}

fn even_dim(imm: &ImmersionChart) -> Result<usize> {
    let k = imm.source_dim();
    if k % 2 == 1 {
        return Err(Error::Parity(format!("Gauss–Bonnet–Chern identities need even k, got {k}")));
    }
    Ok(k)
}

fn required_lambda(entry: &CatalogImmersion) -> Result<f64> {
    entry.lambda.ok_or_else(|| Error::Invalid(format!("{} has no Einstein constant", entry.immersion.name())))
}

fn required_euler(entry: &CatalogImmersion) -> Result<i64> {
    entry.euler.ok_or_else(|| Error::Invalid(format!("{} has no Euler characteristic on record", entry.immersion.name())))
}

/// Max `|H|` and max Einstein defect over `points`.
fn measure_hypotheses(imm: &ImmersionChart, lambda: f64, points: &[Vec<f64>]) -> Result<(f64, f64)> {
    let mut h = 0.0f64;
    let mut e = 0.0f64;
    for x in points {
        let (hx, ex) = hypothesis_residuals(&imm.data_at(x, true)?, lambda)?;
        h = h.max(hx);
        e = e.max(ex);
    }
    Ok((h, e))
}

fn gate_points(imm: &ImmersionChart, count: usize, seed: u64) -> Vec<Vec<f64>> {
    sampling::in_box(&imm.domain().bounds, count, seed, 0.05)
}

/// Points on the slice `ρ = ASYMPTOTIC_RHO` of a conformally compact source.
fn boundary_points(imm: &ImmersionChart, count: usize, seed: u64) -> Vec<Vec<f64>> {
    let bounds = &imm.domain().bounds[1..];
    sampling::in_box(bounds, count, seed, 0.05)
        .into_iter()
        .map(|y| {
            let mut x = vec![ASYMPTOTIC_RHO];
            x.extend(y);
            x
        })
        .collect()
}

fn einstein_gate(e: f64, lambda: f64) -> Result<()> {
    if e > HYPOTHESIS_TOL {
        return Err(Error::Precondition { what: format!("target is not Einstein with λ = {lambda}"), residual: e });
    }
    Ok(())
}

/// `2^{r−k/2}(r−1)!/(k/2−1)!`, the weight of `∫𝒫_{r,k}` in both identities.
pub fn gbc_weight(k: usize, r: usize) -> f64 {
    2f64.powi(r as i32 - (k / 2) as i32) * factorial(r as u32 - 1) as f64 / factorial((k / 2 - 1) as u32) as f64
}

fn pfaffian_sum(k: usize, integrals: &[f64]) -> f64 {
    integrals.iter().enumerate().map(|(i, v)| gbc_weight(k, i + 1) * v).sum()
}

/// Pointwise values `[1, Pf̄, 𝒫_{1,k}, …, 𝒫_{k/2,k}, |H|²]`.
fn gbc_values(d: &PointData, lambda: f64, k: usize) -> Result<Vec<f64>> {
    let mut v = vec![1.0, d.intrinsic_geometry()?.pfaffian()?];
    for r in 1..=k / 2 {
        v.push(gbc_integrand_at(d, lambda, r)?);
    }
    v.push(d.sff.mean_norm2());
    Ok(v)
}

/// `(2π)^{k/2}χ` against `(k−1)!!λ^{k/2}Area + Σ_r 2^{r−k/2}((r−1)!/(k/2−1)!)∫𝒫_{r,k}`
/// on a compact minimal submanifold of an Einstein manifold.
pub fn compact_gbc_check(entry: &CatalogImmersion, opts: &GbcOptions) -> Result<GbcReport> {
    let imm = &entry.immersion;
    let k = even_dim(imm)?;
    if !entry.compact {
        return Err(Error::Invalid(format!("{} is not compact", imm.name())));
    }
    let lambda = required_lambda(entry)?;
    let euler = required_euler(entry)?;
    let (h, e) = measure_hypotheses(imm, lambda, &gate_points(imm, opts.gate_samples, opts.seed))?;
    einstein_gate(e, lambda)?;
    if h > HYPOTHESIS_TOL {
        return Err(Error::Precondition { what: "immersion is not minimal".into(), residual: h });
    }
    let rule = imm.domain().rule(opts.grid);
    let ints = imm.integrate_rule_many(&rule, true, k / 2 + 3, |d| gbc_values(d, lambda, k))?;
    let area = ints[0];
    let pf = ints[2..2 + k / 2].to_vec();
    let two_pi_k = (2.0 * PI).powi((k / 2) as i32);
    let lhs = two_pi_k * euler as f64;
    let area_term = double_factorial(k as i64 - 1) as f64 * lambda.powi((k / 2) as i32) * area;
    let rhs = area_term + pfaffian_sum(k, &pf);
    let residual = (lhs - rhs).abs();
    let scale = lhs.abs().max(area_term.abs()).max(f64::MIN_POSITIVE);
    Ok(GbcReport {
        k,
        n: imm.target_dim(),
        lambda,
        renormalized: false,
        euler,
        euler_recovered: ints[1] / two_pi_k,
        area,
        area_fit: None,
        pfaffian_integrals: pf,
        lhs,
        rhs,
        residual,
        scale,
        relative_residual: residual / scale,
        minimality_residual: h,
        einstein_residual: e,
        mean_curvature_integral: None,
        corrected_residual: None,
    })
}

fn boundary_coordinate(imm: &ImmersionChart) -> Expr {
    var(&imm.coords()[0])
}

fn convergent_rule(imm: &ImmersionChart, opts: &GbcOptions) -> Result<Vec<(Vec<f64>, f64)>> {
    cutoff_rule(imm, &boundary_coordinate(imm), opts.inner_cutoff, &opts.cutoff)
}

fn reliable(fit: EpsilonFit) -> Result<EpsilonFit> {
    if !fit.reliable {
        return Err(Error::IllConditioned(fit.condition));
    }
    Ok(fit)
}

/// `(2π)^{k/2}χ` against `(−1)^{k/2}(k−1)!!𝒜 + Σ_r 2^{r−k/2}((r−1)!/(k/2−1)!)∫𝒫_{r,k}` on a
/// conformally compact submanifold of a hyperbolic (`λ = −1`) target.
///
/// Surfaces that are minimal only asymptotically are accepted; for them the
/// identity gains `∫|H|²` on the right, and both residuals are reported.
pub fn renormalized_gbc_check(entry: &CatalogImmersion, opts: &GbcOptions) -> Result<GbcReport> {
    let imm = &entry.immersion;
    let k = even_dim(imm)?;
    if !entry.conformally_compact {
        return Err(Error::Invalid(format!("{} is not conformally compact", imm.name())));
    }
    let lambda = required_lambda(entry)?;
    if (lambda + 1.0).abs() > 1e-12 {
        return Err(Error::Invalid(format!("renormalized identities are normalized to λ = −1, got {lambda}")));
    }
    let euler = required_euler(entry)?;
    let (h, e) = measure_hypotheses(imm, lambda, &gate_points(imm, opts.gate_samples, opts.seed))?;
    einstein_gate(e, lambda)?;
    let (hb, _) = measure_hypotheses(imm, lambda, &boundary_points(imm, opts.gate_samples, opts.seed))?;
    if hb > HYPOTHESIS_TOL {
        return Err(Error::Precondition { what: format!("immersion is not minimal near ρ = {ASYMPTOTIC_RHO}"), residual: hb });
    }
    let minimal = h <= HYPOTHESIS_TOL;
    if !minimal && k != 2 {
        return Err(Error::Precondition { what: "immersion is not minimal".into(), residual: h });
    }
    let rho = boundary_coordinate(imm);
    let (_, area_fit) = renormalized_integral(imm, &Integrand::one(), &rho, &opts.ladder, &opts.cutoff, &opts.fit)?;
    let area_fit = reliable(area_fit)?;
    let (_, pf_fit) = renormalized_integral(imm, &Integrand::intrinsic_pfaffian(), &rho, &opts.ladder, &opts.cutoff, &opts.fit)?;
    let pf_fit = reliable(pf_fit)?;
    let rule = convergent_rule(imm, opts)?;
    let ints = imm.integrate_rule_many(&rule, true, k / 2 + 1, |d| {
        let mut v = gbc_values(d, lambda, k)?;
        v.drain(..2);
        Ok(v)
    })?;
    let pf = ints[..k / 2].to_vec();
    let mean = ints[k / 2];
    let area = area_fit.finite_part;
    let two_pi_k = (2.0 * PI).powi((k / 2) as i32);
    let lhs = two_pi_k * euler as f64;
    let sign = if (k / 2) % 2 == 0 { 1.0 } else { -1.0 };
    let area_term = sign * double_factorial(k as i64 - 1) as f64 * area;
    let rhs = area_term + pfaffian_sum(k, &pf);
    let residual = (lhs - rhs).abs();
    let scale = lhs.abs().max(area_term.abs()).max(f64::MIN_POSITIVE);
    let (mean_curvature_integral, corrected_residual) = if minimal { (None, None) } else { (Some(mean), Some((lhs - rhs - mean).abs())) };
    Ok(GbcReport {
        k,
        n: imm.target_dim(),
        lambda,
        renormalized: true,
        euler,
        euler_recovered: pf_fit.finite_part / two_pi_k,
        area,
        area_fit: Some(area_fit),
        pfaffian_integrals: pf,
        lhs,
        rhs,
        residual,
        scale,
        relative_residual: residual / scale,
        minimality_residual: h,
        einstein_residual: e,
        mean_curvature_integral,
        corrected_residual,
    })
}

#[derive(Debug, Clone)]
pub struct RigidityOptions {
    pub grid: usize,
    pub cutoff: CutoffOptions,
    pub inner_cutoff: f64,
    /// Points at which the pointwise identities are sampled.
    pub samples: usize,
    pub seed: u64,
}

impl Default for RigidityOptions {
    fn default() -> Self {
        RigidityOptions { grid: 8, cutoff: CutoffOptions { grid: 6, rho_nodes: 16, split: 0.5 }, inner_cutoff: 1e-3, samples: 16, seed: 0 }
    }
}

/// One straightened integral and its reduction to a direct integral.
#[derive(Debug, Clone, PartialEq)]
pub struct RigidityTerm {
    pub name: String,
    /// Number of ambient Laplacians.
    pub c: usize,
    /// `∫ι*((−Δ̃)^c I)`, through the straightening operator.
    pub straightened: f64,
    /// `∫|L|^{2ℓ}` or `∫|L²|²`, from the second fundamental form alone.
    pub direct: f64,
    pub coefficient: f64,
    /// `coefficient · direct`.
    pub reduced: f64,
    pub residual: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct RigidityGap {
    pub name: String,
    /// Nonnegative on hyperbolic targets.
    pub value: f64,
}

#[derive(Debug, Clone)]
pub struct RigidityReport {
    pub k: usize,
    pub n: usize,
    pub lambda: f64,
    pub renormalized: bool,
    /// One entry per requested `ℓ`.
    pub terms: Vec<RigidityTerm>,
    /// The `|L̃²|²` integral, for `k ≥ 4`.
    pub l2_square: Option<RigidityTerm>,
    pub gaps: Vec<RigidityGap>,
    /// Max over samples of `||Ē|² − (|L²|² − |L|⁴/k)|`.
    pub einstein_identity_residual: f64,
    /// Max over samples of the codimension-one Weyl identity defect, when `n = k + 1`.
    pub weyl_identity_residual: Option<f64>,
}

/// `T_{ab…}T^{ab…}` for a covariant tensor.
fn norm2(t: &DenseTensor, ginv: &[f64]) -> Result<f64> {
    let mut raised = t.clone();
    for s in 0..t.rank() {
        raised = raised.raise(s, ginv)?;
    }
    Ok(t.data().iter().zip(raised.data()).map(|(a, b)| a * b).sum())
}

/// `(|Ē|², |L²|² − |L|⁴/k)` at one point.
pub fn einstein_identity_sides(d: &PointData) -> Result<(f64, f64)> {
    let k = d.frame.k;
    let geo = d.intrinsic_geometry()?;
    let ric = geo.ricci()?;
    let e = ric.sub(&geo.metric().scale(geo.scalar()? / k as f64))?;
    let l2 = d.sff.norm2();
    Ok((norm2(&e, geo.ginv())?, d.sff.l_square_norm2() - l2 * l2 / k as f64))
}

/// `(((k−2)/2)|W̄|², −k|L²|² + ((k²−3k+3)/(k−1))|L|⁴)` at one point of a hypersurface.
pub fn weyl_identity_sides(d: &PointData) -> Result<(f64, f64)> {
    let k = d.frame.k;
    let kf = k as f64;
    let w2 = if k >= 4 {
        let geo = d.intrinsic_geometry()?;
        norm2(&geo.weyl()?, geo.ginv())?
    } else {
        0.0
    };
    let l2 = d.sff.norm2();
    let rhs = -kf * d.sff.l_square_norm2() + (kf * kf - 3.0 * kf + 3.0) / (kf - 1.0) * l2 * l2;
    Ok((0.5 * (kf - 2.0) * w2, rhs))
}

fn sign(c: usize) -> f64 {
    if c % 2 == 0 {
        1.0
    } else {
        -1.0
    }
}

struct RigidityContext<'a> {
    imm: &'a ImmersionChart,
    lambda: f64,
    rule: Vec<(Vec<f64>, f64)>,
}

impl RigidityContext<'_> {
    fn integrate<F>(&self, curvature: bool, f: F) -> Result<f64>
    where
        F: Fn(&PointData) -> Result<f64> + Sync,
    {
        self.imm.integrate_rule(&self.rule, curvature, f)
    }

    fn term(&self, spec: &StraightInvariantSpec, direct: f64) -> Result<RigidityTerm> {
        let k = self.imm.source_dim();
        spec.validate(k)?;
        let c = spec.c;
        let imm = self.imm;
        let lambda = self.lambda;
        let straightened = sign(c)
            * try_integrate(&self.rule, |x| {
                let v = straightened_value(spec, imm, lambda, x)?;
                Ok::<f64, Error>(v * imm.data_at(x, false)?.area_element())
            })?;
        let coefficient = sign(c) * crate::ambient::divergence_coefficient(k, spec.weight(), c, lambda)?;
        let reduced = coefficient * direct;
        Ok(RigidityTerm { name: spec.name(), c, straightened, direct, coefficient, reduced, residual: (straightened - reduced).abs() })
    }
}

/// Both sides of `∫ι*((−Δ̃)^{k/2−ℓ}|L̃|^{2ℓ}) = (−2λ)^{k/2−ℓ}((k/2−1)!(k−2ℓ−1)!!/(ℓ−1)!)∫|L|^{2ℓ}`
/// for each `ℓ`, the `|L̃²|²` analogue, the inequality gaps and the pointwise
/// Gauss-equation identities. For `λ = −1` the prefactor is `2^{k/2−ℓ}`.
///
/// Compact entries integrate over the source box; conformally compact ones
/// must be minimal and are integrated as convergent integrals.
pub fn rigidity_functionals(entry: &CatalogImmersion, ells: &[usize], opts: &RigidityOptions) -> Result<RigidityReport> {
    let imm = &entry.immersion;
    let k = even_dim(imm)?;
    let n = imm.target_dim();
    let lambda = required_lambda(entry)?;
    for &l in ells {
        if l < 1 || 2 * l > k {
            return Err(Error::Invalid(format!("ℓ = {l} outside 1..={}: weight −2ℓ with k/2 − ℓ Laplacians needs w − 2c ≥ −k", k / 2)));
        }
    }
    let rule = if entry.compact {
        imm.domain().rule(opts.grid)
    } else if entry.conformally_compact {
        cutoff_rule(imm, &boundary_coordinate(imm), opts.inner_cutoff, &opts.cutoff)?
    } else {
        return Err(Error::Invalid(format!("{} is neither compact nor conformally compact", imm.name())));
    };
    let ctx = RigidityContext { imm, lambda, rule };

    let points = gate_points(imm, opts.samples, opts.seed);
    let (h, e) = measure_hypotheses(imm, lambda, &points)?;
    einstein_gate(e, lambda)?;
    if h > HYPOTHESIS_TOL {
        return Err(Error::Precondition { what: "immersion is not minimal".into(), residual: h });
    }

    let mut terms = Vec::with_capacity(ells.len());
    let mut l4 = None;
    for &l in ells {
        let direct = ctx.integrate(false, |d| Ok(d.sff.norm2().powi(l as i32)))?;
        let t = ctx.term(&StraightInvariantSpec::preset("L2ell", Some(l), k / 2 - l)?, direct)?;
        if l == 2 {
            l4 = Some(t.straightened);
        }
        terms.push(t);
    }
    let mut gaps: Vec<RigidityGap> =
        terms.iter().map(|t| RigidityGap { name: format!("totally_geodesic[{}]", t.name), value: t.straightened }).collect();

    let l2_square = if k >= 4 {
        let direct = ctx.integrate(false, |d| Ok(d.sff.l_square_norm2()))?;
        Some(ctx.term(&StraightInvariantSpec::preset("L2sq", None, k / 2 - 2)?, direct)?)
    } else {
        None
    };
    if let Some(sq) = &l2_square {
        let l4 = match l4 {
            Some(v) => v,
            None => {
                let direct = ctx.integrate(false, |d| Ok(d.sff.norm2().powi(2)))?;
                ctx.term(&StraightInvariantSpec::preset("L2ell", Some(2), k / 2 - 2)?, direct)?.straightened
            }
        };
        let kf = k as f64;
        gaps.push(RigidityGap { name: "einstein".to_string(), value: sq.straightened - l4 / kf });
        if n == k + 1 {
            let a = (kf * kf - 3.0 * kf + 3.0) / (kf * (kf - 1.0));
            gaps.push(RigidityGap { name: "locally_conformally_flat".to_string(), value: a * l4 - sq.straightened });
        }
    }

    let mut einstein_identity_residual = 0.0f64;
    let mut weyl = if n == k + 1 { Some(0.0f64) } else { None };
    for x in &points {
        let d = imm.data_at(x, true)?;
        let (a, b) = einstein_identity_sides(&d)?;
        einstein_identity_residual = einstein_identity_residual.max((a - b).abs());
        if let Some(w) = weyl.as_mut() {
            let (a, b) = weyl_identity_sides(&d)?;
            *w = w.max((a - b).abs());
        }
    }

    Ok(RigidityReport {
        k,
        n,
        lambda,
        renormalized: !entry.compact,
        terms,
        l2_square,
        gaps,
        einstein_identity_residual,
        weyl_identity_residual: weyl,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::catalog::{seeded_graph_profile, ImmersionSpec};

    fn entry(spec: ImmersionSpec) -> CatalogImmersion {
        spec.build().unwrap()
    }

    #[test]
    fn weights() {
        assert_eq!(gbc_weight(2, 1), 1.0);
        assert_eq!(gbc_weight(4, 1), 0.5);
        assert_eq!(gbc_weight(4, 2), 1.0);
        assert_eq!(gbc_weight(6, 3), 1.0);
        assert_eq!(gbc_weight(6, 1), 0.125);
    }

    #[test]
    fn clifford_torus_gbc() {
        let r = compact_gbc_check(&entry(ImmersionSpec::CliffordTorus), &GbcOptions { grid: 8, ..Default::default() }).unwrap();
        assert!((r.area - 2.0 * PI * PI).abs() < 1e-10);
        assert!((r.pfaffian_integrals[0] + 2.0 * PI * PI).abs() < 1e-8, "{:?}", r.pfaffian_integrals);
        assert!(r.residual < 1e-4 * 2.0 * PI * PI);
        assert!(r.euler_recovered.abs() < 1e-3);
    }

    #[test]
    fn equator_sphere_gbc() {
        let r = compact_gbc_check(&entry(ImmersionSpec::EquatorSphere { k: 2, n: 3, radius: 1.0 }), &GbcOptions::default()).unwrap();
        assert!(r.residual < 1e-6, "{r:?}");
        assert!(r.pfaffian_integrals[0].abs() < 1e-10);
        assert!((r.euler_recovered - 2.0).abs() < 1e-3);
    }

    #[test]
    fn gates_reject_non_minimal_and_open_sources() {
        let sphere = entry(ImmersionSpec::RoundSphereEuclidean { radius: 1.0 });
        assert!(matches!(compact_gbc_check(&sphere, &GbcOptions::default()), Err(Error::Precondition { .. })));
        let odd = entry(ImmersionSpec::EquatorSphere { k: 3, n: 4, radius: 1.0 });
        assert!(matches!(compact_gbc_check(&odd, &GbcOptions::default()), Err(Error::Parity(_))));
        let plane = entry(ImmersionSpec::TotallyGeodesicHyperbolic { k: 2, n: 3 });
        assert!(compact_gbc_check(&plane, &GbcOptions::default()).is_err());
        let mut wrong = entry(ImmersionSpec::CliffordTorus);
        wrong.lambda = Some(2.0);
        assert!(matches!(compact_gbc_check(&wrong, &GbcOptions::default()), Err(Error::Precondition { .. })));
    }

    #[test]
    fn hyperbolic_plane_renormalized_area() {
        let r = renormalized_gbc_check(&entry(ImmersionSpec::TotallyGeodesicHyperbolic { k: 2, n: 3 }), &GbcOptions::default()).unwrap();
        assert!((r.area + 2.0 * PI).abs() < 1e-3, "{r:?}");
        assert!(r.relative_residual < 1e-3);
        assert!((r.euler_recovered - 1.0).abs() < 1e-3);
        assert!(r.corrected_residual.is_none());
    }

    #[test]
    fn perturbed_graph_identity() {
        let e = entry(ImmersionSpec::HyperbolicGraph { profile: seeded_graph_profile(0.3) });
        for grid in [12, 24] {
            let opts = GbcOptions { cutoff: CutoffOptions { grid, ..Default::default() }, ..Default::default() };
            let r = renormalized_gbc_check(&e, &opts).unwrap();
            assert!(r.mean_curvature_integral.unwrap() > 0.0);
            assert!(r.effective_relative_residual() < 1e-2, "{grid}: {r:?}");
            assert!((r.euler_recovered - 1.0).abs() < 1e-3, "{r:?}");
        }
    }

    #[test]
    fn clifford_pointwise_identities() {
        let r = rigidity_functionals(&entry(ImmersionSpec::CliffordTorus), &[1], &RigidityOptions::default()).unwrap();
        assert!(r.einstein_identity_residual < 1e-8);
        assert!(r.weyl_identity_residual.unwrap() < 1e-8);
        assert!(r.l2_square.is_none());
        let t = &r.terms[0];
        assert_eq!(t.c, 0);
        assert!((t.direct - 4.0 * PI * PI).abs() < 1e-9 && t.residual < 1e-9);
    }

    #[test]
    fn totally_geodesic_functionals_vanish() {
        let r = rigidity_functionals(&entry(ImmersionSpec::EquatorSphere { k: 4, n: 5, radius: 1.0 }), &[1, 2], &RigidityOptions { grid: 4, ..Default::default() }).unwrap();
        for t in r.terms.iter().chain(r.l2_square.iter()) {
            assert!(t.straightened.abs() < 1e-12 && t.direct.abs() < 1e-12, "{t:?}");
        }
        assert!(r.gaps.iter().all(|g| g.value.abs() < 1e-12));
        assert!(rigidity_functionals(&entry(ImmersionSpec::EquatorSphere { k: 4, n: 5, radius: 1.0 }), &[3], &RigidityOptions::default()).is_err());
    }

    #[test]
    fn product_of_spheres_gbc() {
        let e = entry(ImmersionSpec::GeneralizedClifford { p: 2, q: 2 });
        let coarse = compact_gbc_check(&e, &GbcOptions { grid: 4, ..Default::default() }).unwrap();
        let fine = compact_gbc_check(&e, &GbcOptions { grid: 8, ..Default::default() }).unwrap();
        let s = 4.0 * PI * PI;
        assert!((fine.area - s).abs() < 1e-6 * s);
        assert!((fine.pfaffian_integrals[0] + 4.0 * s).abs() < 1e-6 * s, "{:?}", fine.pfaffian_integrals);
        assert!((fine.pfaffian_integrals[1] - 3.0 * s).abs() < 1e-6 * s);
        assert!(fine.relative_residual < 1e-3);
        assert!(coarse.residual >= 4.0 * fine.residual, "{} {}", coarse.residual, fine.residual);
        assert!((fine.euler_recovered - 4.0).abs() < 1e-3);
    }

    #[test]
    fn product_of_spheres_rigidity() {
        let e = entry(ImmersionSpec::GeneralizedClifford { p: 2, q: 2 });
        let r = rigidity_functionals(&e, &[1, 2], &RigidityOptions { grid: 6, ..Default::default() }).unwrap();
        let s = 4.0 * PI * PI;
        let (t1, t2) = (&r.terms[0], &r.terms[1]);
        assert_eq!((t1.c, t2.c), (1, 0));
        assert!((t1.direct - 4.0 * s).abs() < 1e-3 * s && (t2.direct - 16.0 * s).abs() < 1e-3 * s);
        assert!((t1.straightened + 8.0 * s).abs() < 1e-3 * 8.0 * s, "{t1:?}");
        assert!(t1.residual < 1e-3 * t1.reduced.abs() && t2.residual < 1e-3 * t2.reduced.abs());
        let sq = r.l2_square.as_ref().unwrap();
        assert!((sq.direct - 4.0 * s).abs() < 1e-3 * s && sq.residual < 1e-9 * s);
        assert!(r.einstein_identity_residual < 1e-8 && r.weyl_identity_residual.unwrap() < 1e-8, "{r:?}");
        // |L²|² = 4, |L|⁴/4 = 4: Einstein equality; (7/12)·16 − 4 > 0.
        let gap = |name: &str| r.gaps.iter().find(|g| g.name == name).unwrap().value;
        assert!(gap("einstein").abs() < 1e-6 * s);
        assert!((gap("locally_conformally_flat") - (7.0 / 12.0 * 16.0 - 4.0) * s).abs() < 1e-3 * s);
    }

    #[test]
    fn hyperbolic_four_space_renormalized_area() {
        let e = entry(ImmersionSpec::TotallyGeodesicHyperbolic { k: 4, n: 5 });
        let opts = GbcOptions { cutoff: CutoffOptions { grid: 6, rho_nodes: 24, split: 0.5 }, ..Default::default() };
        let r = renormalized_gbc_check(&e, &opts).unwrap();
        assert!((r.area - 4.0 * PI * PI / 3.0).abs() < 1e-2, "{r:?}");
        // Roundoff in Ŵ is weighted by ρ^{−4} down to the inner cutoff.
        assert!(r.pfaffian_integrals.iter().all(|v| v.abs() < 1e-4), "{r:?}");
        assert!((r.euler_recovered - 1.0).abs() < 1e-3);
        assert!(r.relative_residual < 1e-2);
    }
}

//! Hadamard regularization of divergent area-type integrals.
//!
//! The source chart of a conformally compact immersion has its boundary at
//! `ρ = 0` in the first coordinate. For a defining function `r(ρ, x)` the
//! cutoff integral over `{r > ε}` is fitted against
//! `Σ_i a_i ε^{2i+1−k} (+ 𝓛 log ε when k is odd) + 𝓘 + guard terms`,
//! where the guard terms continue the same-parity ladder into positive powers.

use alloc::format;
use alloc::string::{String, ToString};
use alloc::sync::Arc;
use alloc::vec;
use alloc::vec::Vec;

#[allow(unused_imports)]
use num_traits::Float;

use crate::error::{Error, Result};
use crate::expr::{Expr, Program};
use crate::field::{laplacian, Field};
use crate::linalg;
use crate::quadrature::{box_rule, gauss_legendre, gauss_legendre_on};
use crate::submanifold::{ImmersionChart, PointData};

pub type IntegrandFn = Arc<dyn Fn(&PointData) -> Result<f64> + Send + Sync>;

/// A scalar integrand on the source, evaluated from pointwise data.
#[derive(Clone)]
pub struct Integrand {
    pub name: String,
    /// Whether `PointData` must carry intrinsic and target curvature.
    pub curvature: bool,
    f: IntegrandFn,
}

impl core::fmt::Debug for Integrand {
    fn fmt(&self, f: &mut core::fmt::Formatter<'_>) -> core::fmt::Result {
        write!(f, "Integrand({})", self.name)
    }
}

impl Integrand {
    pub fn new<F>(name: &str, curvature: bool, f: F) -> Self
    where
        F: Fn(&PointData) -> Result<f64> + Send + Sync + 'static,
    {
        Integrand { name: name.to_string(), curvature, f: Arc::new(f) }
    }

    pub fn one() -> Self {
        Integrand::new("1", false, |_| Ok(1.0))
    }

    pub fn zero() -> Self {
        Integrand::new("0", false, |_| Ok(0.0))
    }

    /// The Pfaffian of the induced metric.
    pub fn intrinsic_pfaffian() -> Self {
        Integrand::new("Pf", true, |d| d.intrinsic_geometry()?.pfaffian())
    }

    pub fn lo_norm2() -> Self {
        Integrand::new("|L̊|²", false, |d| Ok(d.sff.lo_norm2()))
    }

    pub fn mean_norm2() -> Self {
        Integrand::new("|H|²", false, |d| Ok(d.sff.mean_norm2()))
    }

    /// `𝒫_{r,k}` of the ambient construction.
    pub fn gbc(lambda: f64, r: usize) -> Self {
        Integrand::new(&format!("P_{r}"), true, move |d| crate::ambient::gbc_integrand_at(d, lambda, r))
    }

    /// A field in the source coordinates.
    pub fn field(name: &str, field: Field) -> Self {
        Integrand::new(name, false, move |d| field.eval(&d.x))
    }

    /// `−Δ̄ψ = div ∇ψ` on the induced metric.
    pub fn divergence_of_gradient(imm: &ImmersionChart, psi: Field) -> Self {
        let induced = Arc::clone(imm.induced());
        Integrand::new("div grad ψ", false, move |d| Ok(-laplacian(&induced, &psi, &d.x)?))
    }

    pub fn eval(&self, d: &PointData) -> Result<f64> {
        (self.f)(d)
    }

    pub fn scaled(self, c: f64) -> Self {
        let inner = self.f;
        Integrand { name: format!("{c}·{}", self.name), curvature: self.curvature, f: Arc::new(move |d| Ok(c * inner(d)?)) }
    }
}

/// Quadrature controls for cutoff integrals.
#[derive(Debug, Clone, Copy)]
pub struct CutoffOptions {
    /// Nodes per transverse coordinate.
    pub grid: usize,
    /// Gauss–Legendre nodes on each of the two `ρ` segments.
    pub rho_nodes: usize,
    /// The `ρ` column is split at `split·ρ_max`; the lower segment uses a logarithmic variable.
    pub split: f64,
}

impl Default for CutoffOptions {
    fn default() -> Self {
        CutoffOptions { grid: 16, rho_nodes: 32, split: 0.5 }
    }
}

/// Smallest admissible cutoff.
pub const MIN_EPS: f64 = 1e-8;

fn compile_defining(imm: &ImmersionChart, r: &Expr) -> Result<Program> {
    let names: Vec<&str> = imm.coords().iter().map(|s| s.as_str()).collect();
    for v in r.variables() {
        if !names.contains(&v.as_str()) {
            return Err(Error::Invalid(format!("defining function uses `{v}`, not a source coordinate")));
        }
    }
    r.compile(&names)
}

/// Solves `r(ρ, x) = ε` for `ρ` on one column; `None` when the column lies below `ε`.
fn column_cut(r: &Program, x: &[f64], eps: f64, rho_max: f64) -> Result<Option<f64>> {
    let mut p = x.to_vec();
    let mut at = |rho: f64| {
        p[0] = rho;
        r.eval(&p)
    };
    let tiny = 1e-9 * rho_max;
    if !(at(tiny) / tiny > 0.0) {
        return Err(Error::Invalid(format!("defining function is not positive near ρ = 0 at {x:?}")));
    }
    let top = at(rho_max);
    if !(top > eps) {
        return Ok(None);
    }
    let (mut lo, mut hi) = (0.0, rho_max);
    for _ in 0..400 {
        if hi - lo <= 1e-12 * hi {
            break;
        }
        let mid = 0.5 * (lo + hi);
        if at(mid) > eps {
            hi = mid;
        } else {
            lo = mid;
        }
    }
    let cut = 0.5 * (lo + hi);
    // Monotonicity on a geometric neighbourhood of the cut.
    let (a, b) = (cut / 4.0, (4.0 * cut).min(rho_max));
    let mut prev = at(a);
    for i in 1..=16 {
        let rho = a * (b / a).powf(i as f64 / 16.0);
        let v = at(rho);
        if !(v > prev) {
            return Err(Error::Invalid(format!("defining function not monotone in ρ near {rho:e} at {x:?}")));
        }
        prev = v;
    }
    Ok(Some(cut))
}

/// Quadrature nodes for `{r > ε}`: a transverse box rule times a per-column `ρ` rule.
pub fn cutoff_rule(imm: &ImmersionChart, defining_fn: &Expr, eps: f64, opts: &CutoffOptions) -> Result<Vec<(Vec<f64>, f64)>> {
    if !(eps >= MIN_EPS) {
        return Err(Error::Domain(format!("ε = {eps:e} below the resolvable cutoff {MIN_EPS:e}")));
    }
    let r = compile_defining(imm, defining_fn)?;
    let domain = imm.domain();
    let (rho_min, rho_max) = domain.bounds[0];
    if rho_min != 0.0 || domain.periodic[0] {
        return Err(Error::Invalid("the first source coordinate must be a boundary coordinate on [0, ρ_max]".into()));
    }
    let transverse = box_rule(&domain.bounds[1..], &domain.periodic[1..], opts.grid);
    let unit = gauss_legendre(opts.rho_nodes);
    let split = opts.split * rho_max;
    let mut out = Vec::new();
    for (y, wy) in &transverse {
        let mut x = vec![0.0];
        x.extend_from_slice(y);
        let Some(cut) = column_cut(&r, &x, eps, rho_max)? else { continue };
        let mut push = |rho: f64, w: f64| {
            let mut p = vec![rho];
            p.extend_from_slice(y);
            out.push((p, w * wy));
        };
        if cut < split {
            let span = (split / cut).ln();
            for (s, w) in unit.nodes.iter().zip(&unit.weights) {
                let s = 0.5 * (s + 1.0);
                let rho = cut * (split / cut).powf(s);
                push(rho, 0.5 * w * rho * span);
            }
            let upper = gauss_legendre_on(opts.rho_nodes, split, rho_max);
            for (rho, w) in upper.nodes.iter().zip(&upper.weights) {
                push(*rho, *w);
            }
        } else {
            let seg = gauss_legendre_on(opts.rho_nodes, cut, rho_max);
            for (rho, w) in seg.nodes.iter().zip(&seg.weights) {
                push(*rho, *w);
            }
        }
    }
    Ok(out)
}

/// `∫_{r > ε} I darea`.
pub fn cutoff_integral(imm: &ImmersionChart, integrand: &Integrand, defining_fn: &Expr, eps: f64, opts: &CutoffOptions) -> Result<f64> {
    let rule = cutoff_rule(imm, defining_fn, eps, opts)?;
    imm.integrate_rule(&rule, integrand.curvature, |d| integrand.eval(d))
}

/// `ε_j = start · ratio^j` for `j < count`.
pub fn ladder(count: usize, start: f64, ratio: f64) -> Vec<f64> {
    (0..count).map(|j| start * ratio.powi(j as i32)).collect()
}

/// `ε_j = 0.2 · 2^{−j}`, `j = 0..7`.
pub fn default_ladder() -> Vec<f64> {
    ladder(8, 0.2, 0.5)
}

/// Cutoff values along a ladder.
#[derive(Debug, Clone, PartialEq)]
pub struct CutoffIntegralSamples {
    pub k: usize,
    pub eps: Vec<f64>,
    pub values: Vec<f64>,
}

impl CutoffIntegralSamples {
    pub fn new(k: usize, eps: Vec<f64>, values: Vec<f64>) -> Result<Self> {
        if eps.len() != values.len() {
            return Err(Error::Shape(format!("{} cutoffs and {} values", eps.len(), values.len())));
        }
        if eps.windows(2).any(|w| !(w[1] < w[0])) || eps.iter().any(|e| !(*e > 0.0)) {
            return Err(Error::Invalid("cutoffs must be positive and strictly decreasing".into()));
        }
        Ok(CutoffIntegralSamples { k, eps, values })
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum BasisFunction {
    Power(i32),
    Log,
    Constant,
}

impl BasisFunction {
    pub fn eval(&self, eps: f64) -> f64 {
        match self {
            BasisFunction::Power(p) => eps.powi(*p),
            BasisFunction::Log => eps.ln(),
            BasisFunction::Constant => 1.0,
        }
    }

    pub fn label(&self) -> String {
        match self {
            BasisFunction::Power(p) => format!("eps^{p}"),
            BasisFunction::Log => "log(eps)".to_string(),
            BasisFunction::Constant => "1".to_string(),
        }
    }
}

/// The singular basis, the constant, then `guards` positive powers of the same parity.
pub fn basis(k: usize, guards: usize) -> Vec<BasisFunction> {
    let k = k as i32;
    let mut out = Vec::new();
    for i in 0..(k + 1) / 2 {
        let p = 2 * i + 1 - k;
        if p != 0 {
            out.push(BasisFunction::Power(p));
        }
    }
    if k % 2 == 1 {
        out.push(BasisFunction::Log);
    }
    out.push(BasisFunction::Constant);
    let first = if k % 2 == 0 { 1 } else { 2 };
    for g in 0..guards as i32 {
        out.push(BasisFunction::Power(first + 2 * g));
    }
    out
}

#[derive(Debug, Clone, Copy)]
pub struct FitOptions {
    /// Upper bound on the guard terms; fewer are used when the ladder is short.
    pub guard_terms: usize,
    /// Fits whose equilibrated design matrix exceeds this condition number are flagged.
    pub condition_threshold: f64,
}

impl Default for FitOptions {
    fn default() -> Self {
        FitOptions { guard_terms: 3, condition_threshold: 1e10 }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct EpsilonFit {
    pub basis: Vec<BasisFunction>,
    pub coefficients: Vec<f64>,
    pub finite_part: f64,
    /// `𝓛`, present for odd `k`.
    pub log_coefficient: Option<f64>,
    /// Largest absolute misfit over the samples.
    pub residual: f64,
    pub condition: f64,
    pub reliable: bool,
}

impl EpsilonFit {
    pub fn coefficient(&self, b: BasisFunction) -> Option<f64> {
        self.basis.iter().position(|x| *x == b).map(|i| self.coefficients[i])
    }
}

/// Weighted least squares in [`basis`]; rows are scaled by `ε^{k−1}`. At least
/// two more samples than basis functions are kept, dropping guard terms first.
pub fn epsilon_fit(samples: &CutoffIntegralSamples, opts: &FitOptions) -> Result<EpsilonFit> {
    let m = samples.eps.len();
    let core = basis(samples.k, 0).len();
    let guards = opts.guard_terms.min(m.saturating_sub(core + 2));
    let basis = basis(samples.k, guards);
    let n = basis.len();
    if m < n + 2 {
        return Err(Error::Invalid(format!("{m} samples for {n} basis functions; need at least {}", n + 2)));
    }
    let mut a = Vec::with_capacity(m * n);
    for &e in &samples.eps {
        a.extend(basis.iter().map(|b| b.eval(e)));
    }
    let w: Vec<f64> = samples.eps.iter().map(|e| e.powi(2 * (samples.k as i32 - 1))).collect();
    let (coefficients, condition) = linalg::weighted_least_squares(m, n, &a, &samples.values, &w)?;
    let mut residual = 0.0f64;
    for i in 0..m {
        let fit: f64 = (0..n).map(|j| a[i * n + j] * coefficients[j]).sum();
        residual = residual.max((fit - samples.values[i]).abs());
    }
    let at = |b: BasisFunction| basis.iter().position(|x| *x == b).map(|i| coefficients[i]);
    let finite_part = at(BasisFunction::Constant).expect("constant in basis");
    let log_coefficient = at(BasisFunction::Log);
    Ok(EpsilonFit {
        basis: basis.clone(),
        coefficients: coefficients.clone(),
        finite_part,
        log_coefficient,
        residual,
        condition,
        reliable: condition <= opts.condition_threshold,
    })
}

/// Cutoff samples along `ladder` and their fit.
pub fn renormalized_integral(
    imm: &ImmersionChart,
    integrand: &Integrand,
    defining_fn: &Expr,
    ladder: &[f64],
    opts: &CutoffOptions,
    fit: &FitOptions,
) -> Result<(CutoffIntegralSamples, EpsilonFit)> {
    let values = ladder.iter().map(|&e| cutoff_integral(imm, integrand, defining_fn, e, opts)).collect::<Result<Vec<_>>>()?;
    let samples = CutoffIntegralSamples::new(imm.source_dim(), ladder.to_vec(), values)?;
    let f = epsilon_fit(&samples, fit)?;
    Ok((samples, f))
}

/// `max |q(ρ,x) − q(−ρ,x)|` for `q = r/ρ`, over sampled `ρ ∈ (0, ρ_max/2]` and transverse nodes.
pub fn parity_residual(imm: &ImmersionChart, defining_fn: &Expr) -> Result<f64> {
    let r = compile_defining(imm, defining_fn)?;
    let domain = imm.domain();
    let rho_max = domain.bounds[0].1;
    let transverse = box_rule(&domain.bounds[1..], &domain.periodic[1..], 3);
    let mut worst = 0.0f64;
    for (y, _) in &transverse {
        for i in 1..=8 {
            let rho = 0.5 * rho_max * i as f64 / 8.0;
            let mut p = vec![rho];
            p.extend_from_slice(y);
            let plus = r.eval(&p) / rho;
            p[0] = -rho;
            let minus = r.eval(&p) / -rho;
            worst = worst.max((plus - minus).abs());
        }
    }
    Ok(worst)
}

/// Threshold on [`parity_residual`] for a defining function to count as even.
pub const PARITY_TOL: f64 = 1e-10;

#[derive(Debug, Clone)]
pub struct InvarianceReport {
    pub fits: Vec<EpsilonFit>,
    pub finite_parts: Vec<f64>,
    pub spread: f64,
}

/// Finite parts across a family of even defining functions and their spread.
pub fn defining_function_invariance(
    imm: &ImmersionChart,
    integrand: &Integrand,
    family: &[Expr],
    ladder: &[f64],
    opts: &CutoffOptions,
    fit: &FitOptions,
) -> Result<InvarianceReport> {
    for r in family {
        let p = parity_residual(imm, r)?;
        if p > PARITY_TOL {
            return Err(Error::Parity(format!("r/ρ is not even for r = {r:?}: odd part {p:e}")));
        }
    }
    let mut fits = Vec::with_capacity(family.len());
    for r in family {
        fits.push(renormalized_integral(imm, integrand, r, ladder, opts, fit)?.1);
    }
    let finite_parts: Vec<f64> = fits.iter().map(|f| f.finite_part).collect();
    let max = finite_parts.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    let min = finite_parts.iter().cloned().fold(f64::INFINITY, f64::min);
    Ok(InvarianceReport { fits, finite_parts, spread: max - min })
}

/// `ρ / (1 + √(1 − ρ²))`, the geodesic defining function `e^{−d}` of the ball chart
/// with `ρ = sech d`.
pub fn ball_geodesic_defining_function() -> Expr {
    crate::expr::parse("rho/(1 + sqrt(1 - rho^2))").expect("literal")
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::catalog;
    use crate::expr::{parse, var};
    use core::f64::consts::PI;
    use proptest::prelude::*;

    fn rho() -> Expr {
        var("rho")
    }

    #[test]
    fn basis_layout() {
        use BasisFunction::*;
        assert_eq!(basis(2, 2), vec![Power(-1), Constant, Power(1), Power(3)]);
        assert_eq!(basis(3, 2), vec![Power(-2), Log, Constant, Power(2), Power(4)]);
        assert_eq!(basis(4, 0), vec![Power(-3), Power(-1), Constant]);
    }

    #[test]
    fn synthetic_fits() {
        let eps = default_ladder();
        let s = CutoffIntegralSamples::new(2, eps.clone(), eps.iter().map(|e| 1.0 / e - 1.0).collect()).unwrap();
        let f = epsilon_fit(&s, &FitOptions::default()).unwrap();
        assert!((f.coefficient(BasisFunction::Power(-1)).unwrap() - 1.0).abs() < 1e-10);
        assert!((f.finite_part + 1.0).abs() < 1e-10);
        assert!(f.residual < 1e-10 && f.reliable);
        let s = CutoffIntegralSamples::new(4, eps.clone(), eps.iter().map(|e| 3.0 * e.powi(-3) + 5.0 / e + 7.0).collect()).unwrap();
        let f = epsilon_fit(&s, &FitOptions::default()).unwrap();
        assert!((f.coefficients[0] - 3.0).abs() < 1e-8 && (f.coefficients[1] - 5.0).abs() < 1e-8 && (f.finite_part - 7.0).abs() < 1e-8);
        let s = CutoffIntegralSamples::new(3, eps.clone(), eps.iter().map(|e| 2.0 * e.ln() + 4.0).collect()).unwrap();
        let f = epsilon_fit(&s, &FitOptions::default()).unwrap();
        assert!((f.log_coefficient.unwrap() - 2.0).abs() < 1e-8 && (f.finite_part - 4.0).abs() < 1e-8);
        assert!(CutoffIntegralSamples::new(2, vec![0.1, 0.2], vec![0.0, 0.0]).is_err());
        let few = CutoffIntegralSamples::new(2, eps[..3].to_vec(), vec![0.0; 3]).unwrap();
        assert!(epsilon_fit(&few, &FitOptions::default()).is_err());
    }

    #[test]
    fn cusp_area() {
        let imm = catalog::hyperbolic_cusp().unwrap();
        for eps in [0.2, 0.01, 1e-4] {
            let v = cutoff_integral(&imm, &Integrand::one(), &rho(), eps, &CutoffOptions::default()).unwrap();
            assert!((v - (1.0 / eps - 1.0)).abs() < 1e-9 * (1.0 / eps), "{eps}: {v}");
        }
        assert_eq!(cutoff_integral(&imm, &Integrand::zero(), &rho(), 0.1, &CutoffOptions::default()).unwrap(), 0.0);
        assert!(cutoff_integral(&imm, &Integrand::one(), &rho(), 1e-12, &CutoffOptions::default()).is_err());
    }

    #[test]
    fn plane_area_and_renormalized_area() {
        let imm = catalog::totally_geodesic_hyperbolic(2, 3).unwrap();
        let v = cutoff_integral(&imm, &Integrand::one(), &rho(), 0.05, &CutoffOptions::default()).unwrap();
        assert!((v - 2.0 * PI * (20.0 - 1.0)).abs() < 1e-9);
        let (_, fit) = renormalized_integral(&imm, &Integrand::one(), &rho(), &default_ladder(), &CutoffOptions::default(), &FitOptions::default()).unwrap();
        assert!((fit.finite_part + 2.0 * PI).abs() < 1e-3, "{}", fit.finite_part);
    }

    #[test]
    fn odd_dimensional_log_term() {
        // 4π ∫_ε^1 √(1−ρ²)ρ^{−3} dρ = 4π(√(1−ε²)/(2ε²) − ½ arcosh(1/ε)).
        let imm = catalog::totally_geodesic_hyperbolic(3, 4).unwrap();
        let opts = CutoffOptions { grid: 12, ..Default::default() };
        let eps = 0.05f64;
        let exact = 4.0 * PI * ((1.0 - eps * eps).sqrt() / (2.0 * eps * eps) - 0.5 * (1.0 / eps).acosh());
        let v = cutoff_integral(&imm, &Integrand::one(), &rho(), eps, &opts).unwrap();
        assert!((v - exact).abs() < 1e-6 * exact, "{v} vs {exact}");
        let (_, fit) = renormalized_integral(&imm, &Integrand::one(), &rho(), &default_ladder(), &opts, &FitOptions::default()).unwrap();
        assert!((fit.log_coefficient.unwrap() - 2.0 * PI).abs() < 1e-3, "{fit:?}");
        assert!((fit.finite_part - (-PI - 2.0 * PI * 2f64.ln())).abs() < 1e-3, "{fit:?}");
    }

    #[test]
    fn divergences_renormalize_to_zero() {
        let imm = catalog::totally_geodesic_hyperbolic(2, 3).unwrap();
        let psi = Field::symbolic(parse("rho^2").unwrap(), imm.coords()).unwrap();
        let div = Integrand::divergence_of_gradient(&imm, psi);
        // Closed form: −2π(1−ε²)·2ε.
        let eps = 0.1;
        let v = cutoff_integral(&imm, &div, &rho(), eps, &CutoffOptions::default()).unwrap();
        assert!((v + 4.0 * PI * eps * (1.0 - eps * eps)).abs() < 1e-9, "{v}");
        let (_, fit) = renormalized_integral(&imm, &div, &rho(), &default_ladder(), &CutoffOptions::default(), &FitOptions::default()).unwrap();
        assert!(fit.finite_part.abs() < 1e-3);
    }

    #[test]
    fn renormalized_pfaffian_is_euler_characteristic() {
        let imm = catalog::totally_geodesic_hyperbolic(2, 3).unwrap();
        let (_, fit) = renormalized_integral(&imm, &Integrand::intrinsic_pfaffian(), &rho(), &default_ladder(), &CutoffOptions::default(), &FitOptions::default()).unwrap();
        assert!((fit.finite_part - 2.0 * PI).abs() < 1e-2 * 2.0 * PI, "{}", fit.finite_part);
    }

    #[test]
    fn defining_function_family() {
        let imm = catalog::totally_geodesic_hyperbolic(2, 3).unwrap();
        let family: Vec<Expr> = ["rho", "rho*(1+rho^2)", "rho*(1+0.5*rho^2+rho^4)", "2*rho"].iter().map(|s| parse(s).unwrap()).collect();
        let mut family = family;
        family.push(ball_geodesic_defining_function());
        let rep = defining_function_invariance(&imm, &Integrand::one(), &family, &default_ladder(), &CutoffOptions::default(), &FitOptions::default()).unwrap();
        assert!(rep.spread < 1e-3, "{:?}", rep.finite_parts);
        let odd = [parse("rho*(1+rho)").unwrap()];
        assert!(matches!(
            defining_function_invariance(&imm, &Integrand::one(), &odd, &default_ladder(), &CutoffOptions::default(), &FitOptions::default()),
            Err(Error::Parity(_))
        ));
        assert!(parity_residual(&imm, &odd[0]).unwrap() > 0.1);
    }

    #[test]
    fn nonmonotone_defining_function_is_rejected() {
        let imm = catalog::hyperbolic_cusp().unwrap();
        let bad = parse("rho*(1 - 30*rho)^2").unwrap();
        assert!(matches!(cutoff_integral(&imm, &Integrand::one(), &bad, 0.01, &CutoffOptions::default()), Err(Error::Invalid(_))));
        let neg = parse("-rho").unwrap();
        assert!(cutoff_integral(&imm, &Integrand::one(), &neg, 0.1, &CutoffOptions::default()).is_err());
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(64))]
        #[test]
        fn exact_expansions_are_recovered(k in 2usize..5, seed in proptest::collection::vec(-5.0f64..5.0, 8)) {
            let b = basis(k, 2);
            let core = basis(k, 0).len();
            let coeffs = &seed[..b.len()];
            let eps = default_ladder();
            let values = eps.iter().map(|&e| b.iter().zip(coeffs).map(|(f, c)| c * f.eval(e)).sum()).collect();
            let s = CutoffIntegralSamples::new(k, eps, values).unwrap();
            let f = epsilon_fit(&s, &FitOptions { guard_terms: 2, ..Default::default() }).unwrap();
            let scale = coeffs.iter().fold(1.0f64, |m, c| m.max(c.abs()));
            // Singular coefficients, log and finite part; guard terms only absorb the tail.
            for (got, want) in f.coefficients.iter().zip(coeffs).take(core) {
                prop_assert!((got - want).abs() < 1e-8 * scale, "{:?} vs {:?}", f.coefficients, coeffs);
            }
        }
    }
}

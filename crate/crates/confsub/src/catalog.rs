//! Builtin charts and immersions.
//!
//! Spheres use hyperspherical coordinates `θ₁…θ_{n−1} ∈ [0, π]` and a periodic
//! `φ`, with `g = R²(dθ₁² + sin²θ₁(dθ₂² + sin²θ₂(…)))`. Hyperbolic space comes
//! in two charts: the upper half-space `(ρ, x)` with `g = (dρ² + dx²)/ρ²`, and a
//! polar ball chart with `ρ = sech r`, where
//! `g = dρ²/(ρ²(1−ρ²)) + ((1−ρ²)/ρ²) g_{S^{n−1}}`. Each metric is smooth and
//! nondegenerate in the interior of its box; degeneracies sit on boundary faces.

use alloc::format;
use alloc::string::String;
use alloc::sync::Arc;
use alloc::vec;
use alloc::vec::Vec;
use core::f64::consts::{FRAC_PI_2, FRAC_PI_4, PI};

#[allow(unused_imports)]
use num_traits::Float;

use crate::chart::{Backend, CoordBox, MetricChart, Signature};
use crate::error::{Error, Result};
use crate::expr::{num, var, Expr, Func};
use crate::submanifold::ImmersionChart;

fn sin2(e: Expr) -> Expr {
    Expr::pow(Expr::call(Func::Sin, e), num(2.0))
}

fn cos2(e: Expr) -> Expr {
    Expr::pow(Expr::call(Func::Cos, e), num(2.0))
}

/// Coordinate names of `S^p` with a prefix: `{prefix}th1 … {prefix}phi`.
pub fn sphere_coords(p: usize, prefix: &str) -> Vec<String> {
    let mut out: Vec<String> = (1..p).map(|i| format!("{prefix}th{i}")).collect();
    out.push(format!("{prefix}phi"));
    out
}

/// Diagonal of the unit round metric on `S^p` in the given coordinates.
fn sphere_diagonal(coords: &[String]) -> Vec<Expr> {
    let mut diag = Vec::with_capacity(coords.len());
    let mut factor = num(1.0);
    for c in coords {
        diag.push(factor.clone());
        factor = Expr::mul(factor, sin2(var(c)));
    }
    diag
}

fn sphere_box(p: usize) -> (Vec<(f64, f64)>, Vec<bool>) {
    let mut b = vec![(0.0, PI); p - 1];
    b.push((0.0, 2.0 * PI));
    let mut per = vec![false; p - 1];
    per.push(true);
    (b, per)
}

fn refs(v: &[String]) -> Vec<&str> {
    v.iter().map(|s| s.as_str()).collect()
}

pub fn euclidean(n: usize) -> Result<MetricChart> {
    let coords: Vec<String> = (1..=n).map(|i| format!("x{i}")).collect();
    MetricChart::diagonal(
        &format!("euclidean({n})"),
        &refs(&coords),
        CoordBox::new(vec![(-10.0, 10.0); n], vec![false; n]),
        vec![num(1.0); n],
        Signature::Riemannian,
    )
}

/// The flat torus `ℝⁿ/ℤⁿ`.
pub fn flat_torus(n: usize) -> Result<MetricChart> {
    let coords: Vec<String> = (1..=n).map(|i| format!("x{i}")).collect();
    MetricChart::diagonal(
        &format!("flat_torus({n})"),
        &refs(&coords),
        CoordBox::new(vec![(0.0, 1.0); n], vec![true; n]),
        vec![num(1.0); n],
        Signature::Riemannian,
    )
}

pub fn round_sphere(n: usize, radius: f64) -> Result<MetricChart> {
    if n == 0 || radius <= 0.0 {
        return Err(Error::Invalid(format!("round_sphere needs n ≥ 1 and radius > 0, got n={n}, radius={radius}")));
    }
    let coords = sphere_coords(n, "");
    let r2 = num(radius * radius);
    let diag = sphere_diagonal(&coords).into_iter().map(|e| Expr::mul(r2.clone(), e)).collect();
    let (b, per) = sphere_box(n);
    MetricChart::diagonal(&format!("round_sphere({n},{radius})"), &refs(&coords), CoordBox::new(b, per), diag, Signature::Riemannian)
}

pub fn hyperbolic_half_space(n: usize) -> Result<MetricChart> {
    if n < 2 {
        return Err(Error::Invalid("hyperbolic_half_space needs n ≥ 2".into()));
    }
    let mut coords = vec![String::from("rho")];
    coords.extend((1..n).map(|i| format!("x{i}")));
    let f = Expr::div(num(1.0), Expr::pow(var("rho"), num(2.0)));
    let mut b = vec![(0.0, 10.0)];
    b.extend(vec![(-10.0, 10.0); n - 1]);
    MetricChart::diagonal(
        &format!("hyperbolic_half_space({n})"),
        &refs(&coords),
        CoordBox::new(b, vec![false; n]),
        vec![f; n],
        Signature::Riemannian,
    )
}

/// Polar ball chart of `Hⁿ` in the even defining coordinate `ρ = sech r`.
pub fn hyperbolic_ball(n: usize) -> Result<MetricChart> {
    if n < 2 {
        return Err(Error::Invalid("hyperbolic_ball needs n ≥ 2".into()));
    }
    let rho = var("rho");
    let one_minus = Expr::sub(num(1.0), Expr::pow(rho.clone(), num(2.0)));
    let rho2 = Expr::pow(rho, num(2.0));
    let grr = Expr::div(num(1.0), Expr::mul(rho2.clone(), one_minus.clone()));
    let warp = Expr::div(one_minus, rho2);
    let sc = sphere_coords(n - 1, "");
    let mut coords = vec![String::from("rho")];
    coords.extend(sc.iter().cloned());
    let mut diag = vec![grr];
    diag.extend(sphere_diagonal(&sc).into_iter().map(|e| Expr::mul(warp.clone(), e)));
    let (sb, sp) = sphere_box(n - 1);
    let mut b = vec![(0.0, 1.0)];
    b.extend(sb);
    let mut per = vec![false];
    per.extend(sp);
    MetricChart::diagonal(&format!("hyperbolic_ball({n})"), &refs(&coords), CoordBox::new(b, per), diag, Signature::Riemannian)
}

/// `S^p(r₁) × S^q(r₂)`; coordinates are prefixed `a_` and `b_`.
pub fn product_spheres(p: usize, r1: f64, q: usize, r2: f64) -> Result<MetricChart> {
    let ca = sphere_coords(p, "a_");
    let cb = sphere_coords(q, "b_");
    let mut diag: Vec<Expr> = sphere_diagonal(&ca).into_iter().map(|e| Expr::mul(num(r1 * r1), e)).collect();
    diag.extend(sphere_diagonal(&cb).into_iter().map(|e| Expr::mul(num(r2 * r2), e)));
    let mut coords = ca;
    coords.extend(cb);
    let (mut b, mut per) = sphere_box(p);
    let (b2, per2) = sphere_box(q);
    b.extend(b2);
    per.extend(per2);
    MetricChart::diagonal(
        &format!("product_spheres({p},{r1},{q},{r2})"),
        &refs(&coords),
        CoordBox::new(b, per),
        diag,
        Signature::Riemannian,
    )
}

/// `S^{p+q+1}` as the join `ds² + cos²s g_{S^p} + sin²s g_{S^q}`, `s ∈ [0, π/2]`.
pub fn sphere_join(p: usize, q: usize) -> Result<MetricChart> {
    let s = var("s");
    let ca = sphere_coords(p, "a_");
    let cb = sphere_coords(q, "b_");
    let mut diag = vec![num(1.0)];
    diag.extend(sphere_diagonal(&ca).into_iter().map(|e| Expr::mul(cos2(s.clone()), e)));
    diag.extend(sphere_diagonal(&cb).into_iter().map(|e| Expr::mul(sin2(s.clone()), e)));
    let mut coords = vec![String::from("s")];
    coords.extend(ca);
    coords.extend(cb);
    let (ba, pa) = sphere_box(p);
    let (bb, pb) = sphere_box(q);
    let mut b = vec![(0.0, FRAC_PI_2)];
    b.extend(ba);
    b.extend(bb);
    let mut per = vec![false];
    per.extend(pa);
    per.extend(pb);
    MetricChart::diagonal(&format!("sphere_join({p},{q})"), &refs(&coords), CoordBox::new(b, per), diag, Signature::Riemannian)
}

/// Default half-width of the `ρ` interval of the canonical ambient space.
pub fn ambient_epsilon(lambda: f64) -> f64 {
    0.1f64.min(1.0 / (2.0 * lambda.abs() + 1.0))
}

/// Names of the `t` and `ρ` coordinates added to `base`: `t` and `rho`, or
/// `t_amb` and `rho_amb` when the base already uses one of those.
pub fn ambient_coordinate_names(base: &[String]) -> (String, String) {
    let mut t = String::from("t");
    let mut rho = String::from("rho");
    while base.iter().any(|c| *c == t || *c == rho) {
        t.push_str("_amb");
        rho.push_str("_amb");
    }
    (t, rho)
}

/// `g̃ = 2ρ dt² + 2t dt dρ + τ² g` with `τ = t(1 + λρ/2)` on `(t, base…, ρ)`.
pub fn canonical_ambient(base: &MetricChart, lambda: f64) -> Result<MetricChart> {
    let n = base.dim();
    let big = n + 2;
    let (tn, rn) = ambient_coordinate_names(base.coords());
    let t = var(&tn);
    let rho = var(&rn);
    let tau2 = Expr::pow(tau_expr(lambda, &tn, &rn), num(2.0));
    let mut m = vec![num(0.0); big * big];
    m[0] = Expr::mul(num(2.0), rho);
    m[big - 1] = t.clone();
    m[(big - 1) * big] = t;
    for a in 0..n {
        for b in 0..n {
            let gab = base.component(a, b);
            if !gab.is_zero() {
                m[(a + 1) * big + (b + 1)] = Expr::mul(tau2.clone(), gab.clone());
            }
        }
    }
    let mut coords = vec![tn];
    coords.extend(base.coords().iter().cloned());
    coords.push(rn);
    let eps = ambient_epsilon(lambda);
    let mut b = vec![(0.5, 2.0)];
    b.extend(base.domain().bounds.iter().copied());
    b.push((-eps, eps));
    let mut per = vec![false];
    per.extend(base.domain().periodic.iter().copied());
    per.push(false);
    MetricChart::new(
        &format!("canonical_ambient({},{lambda})", base.name()),
        &refs(&coords),
        CoordBox::new(b, per),
        m,
        Signature::Indefinite,
        Backend::ExactSymbolic,
    )
}

/// `τ = t(1 + λρ/2)` in the named coordinates.
pub fn tau_expr(lambda: f64, t: &str, rho: &str) -> Expr {
    Expr::mul(var(t), Expr::add(num(1.0), Expr::mul(num(lambda / 2.0), var(rho))))
}

/// Bookkeeping that identity checks need next to an immersion.
#[derive(Debug, Clone)]
pub struct CatalogImmersion {
    pub immersion: ImmersionChart,
    /// Einstein constant of the target, `Ric = (n−1)λg`.
    pub lambda: Option<f64>,
    /// Euler characteristic of the source.
    pub euler: Option<i64>,
    pub compact: bool,
    pub minimal: bool,
    pub totally_geodesic: bool,
    /// Source has a conformal infinity at `ρ = 0` (first source coordinate).
    pub conformally_compact: bool,
}

fn sphere_euler(p: usize) -> i64 {
    if p % 2 == 0 {
        2
    } else {
        0
    }
}

fn immersion(name: &str, coords: &[String], b: Vec<(f64, f64)>, per: Vec<bool>, target: MetricChart, map: Vec<Expr>) -> Result<ImmersionChart> {
    ImmersionChart::new(name, &refs(coords), CoordBox::new(b, per), Arc::new(target), map)
}

/// `x ↦ (x, 0)` in `euclidean(n)` over `[−1, 1]^k`.
pub fn affine_plane(k: usize, n: usize) -> Result<ImmersionChart> {
    let coords: Vec<String> = (1..=k).map(|i| format!("u{i}")).collect();
    let mut map: Vec<Expr> = coords.iter().map(|c| var(c)).collect();
    map.extend(vec![num(0.0); n - k]);
    immersion(&format!("affine_plane({k},{n})"), &coords, vec![(-1.0, 1.0); k], vec![false; k], euclidean(n)?, map)
}

/// Equatorial `S^k ⊂ S^n(R)`: the first `n − k` polar angles are pinned to `π/2`.
pub fn equator_sphere(k: usize, n: usize, radius: f64) -> Result<ImmersionChart> {
    if k == 0 || k >= n {
        return Err(Error::Invalid(format!("equator_sphere needs 1 ≤ k < n, got k={k}, n={n}")));
    }
    let target = round_sphere(n, radius)?;
    let coords = sphere_coords(k, "u");
    let mut map = vec![num(FRAC_PI_2); n - k];
    map.extend(coords.iter().map(|c| var(c)));
    let (b, per) = sphere_box(k);
    immersion(&format!("equator_sphere({k},{n})"), &coords, b, per, target, map)
}

/// `S^p(√(p/(p+q))) × S^q(√(q/(p+q))) ⊂ S^{p+q+1}`, minimal.
pub fn generalized_clifford(p: usize, q: usize) -> Result<ImmersionChart> {
    let s0 = (p as f64 / (p + q) as f64).sqrt().acos();
    let target = sphere_join(p, q)?;
    let ca = sphere_coords(p, "a_");
    let cb = sphere_coords(q, "b_");
    let mut map = vec![num(s0)];
    map.extend(ca.iter().map(|c| var(c)));
    map.extend(cb.iter().map(|c| var(c)));
    let mut coords = ca;
    coords.extend(cb);
    let (mut b, mut per) = sphere_box(p);
    let (b2, per2) = sphere_box(q);
    b.extend(b2);
    per.extend(per2);
    immersion(&format!("generalized_clifford({p},{q})"), &coords, b, per, target, map)
}

/// The Clifford torus `S¹(1/√2) × S¹(1/√2) ⊂ S³`.
pub fn clifford_torus() -> Result<ImmersionChart> {
    let target = sphere_join(1, 1)?;
    let coords = vec![String::from("a_phi"), String::from("b_phi")];
    let map = vec![num(FRAC_PI_4), var("a_phi"), var("b_phi")];
    immersion("clifford_torus", &coords, vec![(0.0, 2.0 * PI); 2], vec![true; 2], target, map)
}

/// Round `S²` of radius `r` in `euclidean(3)`.
pub fn round_sphere_euclidean(r: f64) -> Result<ImmersionChart> {
    let th = var("th1");
    let ph = var("phi");
    let sin = |e: Expr| Expr::call(Func::Sin, e);
    let cos = |e: Expr| Expr::call(Func::Cos, e);
    let map = vec![
        Expr::mul(num(r), Expr::mul(sin(th.clone()), cos(ph.clone()))),
        Expr::mul(num(r), Expr::mul(sin(th.clone()), sin(ph))),
        Expr::mul(num(r), cos(th)),
    ];
    let coords = sphere_coords(2, "");
    let (b, per) = sphere_box(2);
    immersion(&format!("round_sphere_euclidean({r})"), &coords, b, per, euclidean(3)?, map)
}

/// Totally geodesic `Hᵏ ⊂ Hⁿ` in the polar ball chart, source coordinates `(ρ, S^{k−1})`.
pub fn totally_geodesic_hyperbolic(k: usize, n: usize) -> Result<ImmersionChart> {
    if k < 2 || k >= n {
        return Err(Error::Invalid(format!("totally_geodesic_hyperbolic needs 2 ≤ k < n, got k={k}, n={n}")));
    }
    let target = hyperbolic_ball(n)?;
    let sc = sphere_coords(k - 1, "u");
    let mut map = vec![var("rho")];
    map.extend(vec![num(FRAC_PI_2); n - k]);
    map.extend(sc.iter().map(|c| var(c)));
    let mut coords = vec![String::from("rho")];
    coords.extend(sc);
    let (sb, sp) = sphere_box(k - 1);
    let mut b = vec![(0.0, 1.0)];
    b.extend(sb);
    let mut per = vec![false];
    per.extend(sp);
    immersion(&format!("totally_geodesic_hyperbolic({k},{n})"), &coords, b, per, target, map)
}

/// The vertical half-plane `{x₂ = 0}` in half-space `H³`, with `x₁` of period one
/// and `ρ ∈ (0, 1]`: a cusp end whose area above `ρ = ε` is `1/ε − 1`.
pub fn hyperbolic_cusp() -> Result<ImmersionChart> {
    let coords = vec![String::from("rho"), String::from("x")];
    let map = vec![var("rho"), var("x"), num(0.0)];
    immersion("hyperbolic_cusp", &coords, vec![(0.0, 1.0), (0.0, 1.0)], vec![false, true], hyperbolic_half_space(3)?, map)
}

/// A graph over the totally geodesic `H² ⊂ H³` in the ball chart:
/// `(ρ, φ) ↦ (ρ, π/2 + u(ρ, φ), φ)`. `u` must vanish to high order at
/// `ρ = 1` (the centre) for the surface to be smooth there.
pub fn hyperbolic_graph(u: Expr) -> Result<ImmersionChart> {
    for v in u.variables() {
        if v != "rho" && v != "phi" {
            return Err(Error::Invalid(format!("graph profile may only use `rho` and `phi`, found `{v}`")));
        }
    }
    let target = hyperbolic_ball(3)?;
    let coords = vec![String::from("rho"), String::from("phi")];
    let map = vec![var("rho"), Expr::add(num(FRAC_PI_2), u), var("phi")];
    immersion("hyperbolic_graph", &coords, vec![(0.0, 1.0), (0.0, 2.0 * PI)], vec![false, true], target, map)
}

/// Profile `a ρ³(1−ρ²)² cos φ` used for the perturbed renormalized-area runs.
/// The `ρ³` term fills the free slot of the minimal-graph expansion.
pub fn seeded_graph_profile(amplitude: f64) -> Expr {
    let rho = var("rho");
    let one_minus = Expr::sub(num(1.0), Expr::pow(rho.clone(), num(2.0)));
    Expr::mul(
        num(amplitude),
        Expr::mul(
            Expr::pow(rho, num(3.0)),
            Expr::mul(Expr::pow(one_minus, num(2.0)), Expr::call(Func::Cos, var("phi"))),
        ),
    )
}

/// Named immersion descriptor, as addressed from scenario files.
#[derive(Debug, Clone, PartialEq)]
pub enum ImmersionSpec {
    AffinePlane { k: usize, n: usize },
    EquatorSphere { k: usize, n: usize, radius: f64 },
    CliffordTorus,
    GeneralizedClifford { p: usize, q: usize },
    TotallyGeodesicHyperbolic { k: usize, n: usize },
    HyperbolicCusp,
    RoundSphereEuclidean { radius: f64 },
    /// Graph over `H² ⊂ H³` with profile `u(ρ, φ)`.
    HyperbolicGraph { profile: Expr },
}

/// Catalog immersion names, for listings and suggestions.
pub const IMMERSION_NAMES: [&str; 8] = [
    "affine_plane",
    "equator_sphere",
    "clifford_torus",
    "generalized_clifford",
    "totally_geodesic_hyperbolic",
    "hyperbolic_cusp",
    "round_sphere_euclidean",
    "hyperbolic_graph",
];

/// Catalog chart names.
pub const CHART_NAMES: [&str; 8] = [
    "euclidean",
    "flat_torus",
    "round_sphere",
    "hyperbolic_half_space",
    "hyperbolic_ball",
    "product_spheres",
    "sphere_join",
    "canonical_ambient",
];

impl ImmersionSpec {
    pub fn build(&self) -> Result<CatalogImmersion> {
        let entry = |immersion, lambda, euler, compact, minimal, tg, cc| CatalogImmersion {
            immersion,
            lambda,
            euler,
            compact,
            minimal,
            totally_geodesic: tg,
            conformally_compact: cc,
        };
        Ok(match self {
            ImmersionSpec::AffinePlane { k, n } => entry(affine_plane(*k, *n)?, Some(0.0), None, false, true, true, false),
            ImmersionSpec::EquatorSphere { k, n, radius } => {
                let lambda = 1.0 / (radius * radius);
                entry(equator_sphere(*k, *n, *radius)?, Some(lambda), Some(sphere_euler(*k)), true, true, true, false)
            }
            ImmersionSpec::CliffordTorus => entry(clifford_torus()?, Some(1.0), Some(0), true, true, false, false),
            ImmersionSpec::GeneralizedClifford { p, q } => entry(
                generalized_clifford(*p, *q)?,
                Some(1.0),
                Some(sphere_euler(*p) * sphere_euler(*q)),
                true,
                true,
                false,
                false,
            ),
            ImmersionSpec::TotallyGeodesicHyperbolic { k, n } => {
                entry(totally_geodesic_hyperbolic(*k, *n)?, Some(-1.0), Some(1), false, true, true, true)
            }
            ImmersionSpec::HyperbolicCusp => entry(hyperbolic_cusp()?, Some(-1.0), None, false, true, true, true),
            ImmersionSpec::RoundSphereEuclidean { radius } => {
                entry(round_sphere_euclidean(*radius)?, Some(0.0), Some(2), true, false, false, false)
            }
            ImmersionSpec::HyperbolicGraph { profile } => {
                entry(hyperbolic_graph(profile.clone())?, Some(-1.0), Some(1), false, false, false, true)
            }
        })
    }
}

//! Gauss–Legendre and trapezoid rules, and their tensor products.

use alloc::vec;
use alloc::vec::Vec;
use core::f64::consts::PI;

use num_traits::Float;

/// One-dimensional rule: nodes and weights on an interval.
#[derive(Debug, Clone, PartialEq)]
pub struct Rule1D {
    pub nodes: Vec<f64>,
    pub weights: Vec<f64>,
}

/// Gauss–Legendre nodes and weights on `[-1, 1]` via Newton iteration on `P_N`.
pub fn gauss_legendre(n: usize) -> Rule1D {
    assert!(n >= 1);
    let mut nodes = vec![0.0; n];
    let mut weights = vec![0.0; n];
    for i in 0..n.div_ceil(2) {
        let mut x = Float::cos(PI * (i as f64 + 0.75) / (n as f64 + 0.5));
        let mut dp = 0.0;
        for _ in 0..100 {
            let (p, d) = legendre_with_derivative(n, x);
            dp = d;
            let dx = p / d;
            x -= dx;
            if dx.abs() < 1e-16 {
                break;
            }
        }
        let (_, d) = legendre_with_derivative(n, x);
        dp = if d != 0.0 { d } else { dp };
        let w = 2.0 / ((1.0 - x * x) * dp * dp);
        nodes[i] = -x;
        nodes[n - 1 - i] = x;
        weights[i] = w;
        weights[n - 1 - i] = w;
    }
    if n % 2 == 1 {
        nodes[n / 2] = 0.0;
    }
    Rule1D { nodes, weights }
}

fn legendre_with_derivative(n: usize, x: f64) -> (f64, f64) {
    let mut p0 = 1.0;
    let mut p1 = x;
    for k in 2..=n {
        let p2 = ((2 * k - 1) as f64 * x * p1 - (k - 1) as f64 * p0) / k as f64;
        p0 = p1;
        p1 = p2;
    }
    let p = if n == 0 { 1.0 } else { p1 };
    let d = n as f64 * (x * p - p0) / (x * x - 1.0);
    (p, d)
}

/// Gauss–Legendre mapped to `[a, b]`.
pub fn gauss_legendre_on(n: usize, a: f64, b: f64) -> Rule1D {
    let base = gauss_legendre(n);
    let half = 0.5 * (b - a);
    let mid = 0.5 * (a + b);
    Rule1D {
        nodes: base.nodes.iter().map(|x| mid + half * x).collect(),
        weights: base.weights.iter().map(|w| w * half).collect(),
    }
}

/// Periodic trapezoid rule on `[a, b)` with a half-cell offset.
pub fn periodic_trapezoid(n: usize, a: f64, b: f64) -> Rule1D {
    let h = (b - a) / n as f64;
    Rule1D {
        nodes: (0..n).map(|i| a + h * (i as f64 + 0.5)).collect(),
        weights: vec![h; n],
    }
}

/// Tensor-product rule: `(point, weight)` pairs.
pub fn tensor_rule(rules: &[Rule1D]) -> Vec<(Vec<f64>, f64)> {
    let mut out = vec![(Vec::new(), 1.0)];
    for r in rules {
        let mut next = Vec::with_capacity(out.len() * r.nodes.len());
        for (p, w) in &out {
            for (x, wx) in r.nodes.iter().zip(&r.weights) {
                let mut q = p.clone();
                q.push(*x);
                next.push((q, w * wx));
            }
        }
        out = next;
    }
    out
}

/// The box rule used by chart integrals: GL on bounded directions, trapezoid on periodic ones.
pub fn box_rule(bounds: &[(f64, f64)], periodic: &[bool], n: usize) -> Vec<(Vec<f64>, f64)> {
    let rules: Vec<Rule1D> = bounds
        .iter()
        .zip(periodic)
        .map(|(&(a, b), &p)| if p { periodic_trapezoid(n, a, b) } else { gauss_legendre_on(n, a, b) })
        .collect();
    tensor_rule(&rules)
}

/// Sums `f(point)·weight`, in parallel when the `parallel` feature is on.
pub fn integrate<F>(points: &[(Vec<f64>, f64)], f: F) -> f64
where
    F: Fn(&[f64]) -> f64 + Sync,
{
    #[cfg(feature = "parallel")]
    {
        use rayon::prelude::*;
        let parts: Vec<f64> = points.par_iter().map(|(p, w)| f(p) * w).collect();
        parts.iter().sum()
    }
    #[cfg(not(feature = "parallel"))]
    {
        points.iter().map(|(p, w)| f(p) * w).sum()
    }
}

/// Fallible variant of [`integrate`]; the first error wins.
pub fn try_integrate<F, E>(points: &[(Vec<f64>, f64)], f: F) -> Result<f64, E>
where
    F: Fn(&[f64]) -> Result<f64, E> + Sync,
    E: Send,
{
    #[cfg(feature = "parallel")]
    {
        use rayon::prelude::*;
        let parts: Result<Vec<f64>, E> = points.par_iter().map(|(p, w)| f(p).map(|v| v * w)).collect();
        Ok(parts?.iter().sum())
    }
    #[cfg(not(feature = "parallel"))]
    {
        let mut acc = 0.0;
        for (p, w) in points {
            acc += f(p)? * w;
        }
        Ok(acc)
    }
}

/// Componentwise [`try_integrate`] for vector-valued integrands of length `len`.
pub fn try_integrate_vec<F, E>(points: &[(Vec<f64>, f64)], len: usize, f: F) -> Result<Vec<f64>, E>
where
    F: Fn(&[f64]) -> Result<Vec<f64>, E> + Sync,
    E: Send,
{
    let add = |mut acc: Vec<f64>, (v, w): (Vec<f64>, f64)| {
        for (a, x) in acc.iter_mut().zip(v) {
            *a += x * w;
        }
        acc
    };
    #[cfg(feature = "parallel")]
    {
        use rayon::prelude::*;
        let parts: Result<Vec<(Vec<f64>, f64)>, E> = points.par_iter().map(|(p, w)| f(p).map(|v| (v, *w))).collect();
        Ok(parts?.into_iter().fold(alloc::vec![0.0; len], add))
    }
    #[cfg(not(feature = "parallel"))]
    {
        let mut acc = alloc::vec![0.0; len];
        for (p, w) in points {
            acc = add(acc, (f(p)?, *w));
        }
        Ok(acc)
    }
}

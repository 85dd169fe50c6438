//! Scalar fields on charts and their Laplacians.
//!
//! Symbolic fields are differentiated exactly. Sampled fields use fourth-order
//! central differences with step `1e-2·s` in each coordinate, `s` the
//! coordinate scale of the domain. `Δ = −∇^a∇_a` throughout, in any signature.

use alloc::format;
use alloc::string::String;
use alloc::sync::Arc;
use alloc::vec;
use alloc::vec::Vec;
use core::fmt;

use crate::chart::{CoordBox, MetricChart};
use crate::error::{Error, Result};
use crate::expr::{Expr, Program};

pub type FieldFn = Arc<dyn Fn(&[f64]) -> Result<f64> + Send + Sync>;

/// Relative finite-difference step for sampled fields.
pub const FD_STEP: f64 = 1e-2;

#[derive(Clone)]
pub enum Field {
    Symbolic(Arc<SymbolicField>),
    Sampled { f: FieldFn, domain: CoordBox },
    /// `F(p) · V(p[offset..offset + dim V])`, differentiated by the product rule.
    Product { factor: Arc<SymbolicField>, base: Arc<Field>, offset: usize },
}

#[derive(Debug)]
pub struct SymbolicField {
    pub expr: Expr,
    pub coords: Vec<String>,
    value: Program,
    d1: Vec<Program>,
    d2: Vec<Program>,
}

impl fmt::Debug for Field {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Field::Symbolic(s) => write!(f, "Field::Symbolic({:?})", s.expr),
            Field::Sampled { domain, .. } => write!(f, "Field::Sampled(dim {})", domain.dim()),
            Field::Product { factor, base, offset } => write!(f, "Field::Product({:?} · {base:?} at {offset})", factor.expr),
        }
    }
}

impl Field {
    pub fn symbolic(expr: Expr, coords: &[String]) -> Result<Field> {
        let names: Vec<&str> = coords.iter().map(|s| s.as_str()).collect();
        let value = expr.compile(&names)?;
        let n = coords.len();
        let mut d1 = Vec::with_capacity(n);
        let mut d2 = Vec::with_capacity(n * (n + 1) / 2);
        for a in 0..n {
            let da = expr.differentiate(&coords[a]);
            d1.push(da.compile(&names)?);
            for b in a..n {
                d2.push(da.differentiate(&coords[b]).compile(&names)?);
            }
        }
        Ok(Field::Symbolic(Arc::new(SymbolicField { expr, coords: coords.to_vec(), value, d1, d2 })))
    }

    pub fn sampled<F>(domain: CoordBox, f: F) -> Field
    where
        F: Fn(&[f64]) -> Result<f64> + Send + Sync + 'static,
    {
        Field::Sampled { f: Arc::new(f), domain }
    }

    /// `factor · base`, where `base` reads the coordinates `offset..offset + base.dim()`.
    pub fn product(factor: Expr, coords: &[String], base: Field, offset: usize) -> Result<Field> {
        if offset + base.dim() > coords.len() {
            return Err(Error::Shape("product base does not fit in the coordinates".into()));
        }
        match Field::symbolic(factor, coords)? {
            Field::Symbolic(f) => Ok(Field::Product { factor: f, base: Arc::new(base), offset }),
            _ => unreachable!(),
        }
    }

    pub fn constant(c: f64, domain: CoordBox) -> Field {
        Field::sampled(domain, move |_| Ok(c))
    }

    pub fn dim(&self) -> usize {
        match self {
            Field::Symbolic(s) => s.coords.len(),
            Field::Sampled { domain, .. } => domain.dim(),
            Field::Product { factor, .. } => factor.coords.len(),
        }
    }

    pub fn eval(&self, x: &[f64]) -> Result<f64> {
        match self {
            Field::Symbolic(s) => {
                let v = s.value.eval(x);
                if v.is_finite() {
                    Ok(v)
                } else {
                    Err(Error::Eval(format!("field not finite at {x:?}")))
                }
            }
            Field::Sampled { f, .. } => f(x),
            Field::Product { factor, base, offset } => Ok(factor.value.eval(x) * base.eval(&x[*offset..*offset + base.dim()])?),
        }
    }

    /// Gradient and full Hessian (row-major) at `x`.
    pub fn derivatives(&self, x: &[f64]) -> Result<(Vec<f64>, Vec<f64>)> {
        let n = self.dim();
        if x.len() != n {
            return Err(Error::Shape(format!("field of dimension {n} evaluated at {} coordinates", x.len())));
        }
        let mut hess = vec![0.0; n * n];
        match self {
            Field::Symbolic(s) => {
                let grad = s.d1.iter().map(|p| p.eval(x)).collect();
                let mut t = 0;
                for a in 0..n {
                    for b in a..n {
                        let v = s.d2[t].eval(x);
                        hess[a * n + b] = v;
                        hess[b * n + a] = v;
                        t += 1;
                    }
                }
                Ok((grad, hess))
            }
            Field::Sampled { f, domain } => {
                let h: Vec<f64> = (0..n).map(|i| FD_STEP * domain.scale(i)).collect();
                let at = |shifts: &[(usize, f64)]| -> Result<f64> {
                    let mut y = x.to_vec();
                    for &(i, s) in shifts {
                        y[i] += s;
                    }
                    f(&y)
                };
                let f0 = f(x)?;
                let mut grad = vec![0.0; n];
                // Five-point stencils; off-diagonal entries are compositions of two first-derivative stencils.
                let w1 = [(-2.0, 1.0), (-1.0, -8.0), (1.0, 8.0), (2.0, -1.0)];
                for a in 0..n {
                    let mut s1 = 0.0;
                    let mut s2 = -30.0 * f0;
                    for &(o, w) in &w1 {
                        let v = at(&[(a, o * h[a])])?;
                        s1 += w * v;
                        s2 += if o.abs() == 1.0 { 16.0 * v } else { -v };
                    }
                    grad[a] = s1 / (12.0 * h[a]);
                    hess[a * n + a] = s2 / (12.0 * h[a] * h[a]);
                }
                for a in 0..n {
                    for b in a + 1..n {
                        let mut s = 0.0;
                        for &(oa, wa) in &w1 {
                            for &(ob, wb) in &w1 {
                                s += wa * wb * at(&[(a, oa * h[a]), (b, ob * h[b])])?;
                            }
                        }
                        let v = s / (144.0 * h[a] * h[b]);
                        hess[a * n + b] = v;
                        hess[b * n + a] = v;
                    }
                }
                Ok((grad, hess))
            }
            Field::Product { factor, base, offset } => {
                let sym = Field::Symbolic(Arc::clone(factor));
                let (fg, fh) = sym.derivatives(x)?;
                let fv = factor.value.eval(x);
                let m = base.dim();
                let y = &x[*offset..*offset + m];
                let bv = base.eval(y)?;
                let (bg, bh) = base.derivatives(y)?;
                let lift = |i: usize| if i >= *offset && i < offset + m { Some(i - offset) } else { None };
                let grad = (0..n).map(|a| fg[a] * bv + lift(a).map_or(0.0, |i| fv * bg[i])).collect();
                for a in 0..n {
                    for b in 0..n {
                        let mut v = fh[a * n + b] * bv;
                        if let Some(j) = lift(b) {
                            v += fg[a] * bg[j];
                        }
                        if let Some(i) = lift(a) {
                            v += fg[b] * bg[i];
                            if let Some(j) = lift(b) {
                                v += fv * bh[i * m + j];
                            }
                        }
                        hess[a * n + b] = v;
                    }
                }
                Ok((grad, hess))
            }
        }
    }
}

/// `Δf = −g^{ab}(∂_a∂_b f − Γ^c_{ab} ∂_c f)` at `x`.
pub fn laplacian(chart: &MetricChart, f: &Field, x: &[f64]) -> Result<f64> {
    let n = chart.dim();
    if f.dim() != n {
        return Err(Error::Shape(format!("field of dimension {} on a {n}-dimensional chart", f.dim())));
    }
    let geo = chart.geometry(x, false)?;
    let (grad, hess) = f.derivatives(x)?;
    let ginv = geo.ginv();
    let mut s = 0.0;
    for a in 0..n {
        for b in 0..n {
            let gab = ginv[a * n + b];
            if gab == 0.0 {
                continue;
            }
            let mut inner = hess[a * n + b];
            for (c, gc) in grad.iter().enumerate() {
                inner -= geo.gamma(c, a, b) * gc;
            }
            s += gab * inner;
        }
    }
    Ok(-s)
}

/// The field `x ↦ (Δ + κ) f (x)`.
pub fn shifted_laplacian_field(chart: Arc<MetricChart>, f: Field, kappa: f64) -> Field {
    let domain = chart.domain().clone();
    Field::sampled(domain, move |x| {
        let lap = laplacian(&chart, &f, x)?;
        Ok(lap + kappa * f.eval(x)?)
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::catalog;
    use crate::expr::parse;

    #[test]
    fn sampled_derivatives_match_symbolic() {
        let coords = vec![String::from("x"), String::from("y")];
        let e = parse("sin(x)*exp(y/2) + x^3*y").unwrap();
        let sym = Field::symbolic(e.clone(), &coords).unwrap();
        let prog = e.compile(&["x", "y"]).unwrap();
        let sam = Field::sampled(CoordBox::new(vec![(-2.0, 2.0); 2], vec![false; 2]), move |x| Ok(prog.eval(x)));
        let x = [0.3, -0.4];
        let (g1, h1) = sym.derivatives(&x).unwrap();
        let (g2, h2) = sam.derivatives(&x).unwrap();
        for (a, b) in g1.iter().zip(&g2).chain(h1.iter().zip(&h2)) {
            assert!((a - b).abs() < 1e-8, "{a} vs {b}");
        }
    }

    #[test]
    fn product_rule_matches_symbolic() {
        let coords = vec![String::from("t"), String::from("x"), String::from("r")];
        let full = Field::symbolic(parse("(t*(1+r/2))^(-3) * cos(x)").unwrap(), &coords).unwrap();
        let prog = parse("cos(x)").unwrap().compile(&["x"]).unwrap();
        let base = Field::sampled(CoordBox::new(vec![(-2.0, 2.0)], vec![false]), move |y| Ok(prog.eval(y)));
        let prod = Field::product(parse("(t*(1+r/2))^(-3)").unwrap(), &coords, base, 1).unwrap();
        let x = [1.1, 0.3, 0.05];
        let (g1, h1) = full.derivatives(&x).unwrap();
        let (g2, h2) = prod.derivatives(&x).unwrap();
        assert!((full.eval(&x).unwrap() - prod.eval(&x).unwrap()).abs() < 1e-14);
        for (a, b) in g1.iter().zip(&g2).chain(h1.iter().zip(&h2)) {
            assert!((a - b).abs() < 1e-8, "{a} vs {b}");
        }
    }

    #[test]
    fn sphere_laplacian_of_height() {
        // z = cos θ on the unit sphere has Δz = 2z with Δ = −∇^a∇_a.
        let s = catalog::round_sphere(2, 1.0).unwrap();
        let coords = s.coords().to_vec();
        let z = Field::symbolic(parse(&format!("cos({})", coords[0])).unwrap(), &coords).unwrap();
        let x = [0.7, 1.1];
        let lap = laplacian(&s, &z, &x).unwrap();
        assert!((lap - 2.0 * 0.7f64.cos()).abs() < 1e-12);
    }
}

//! Metrics on coordinate boxes and their pointwise curvature.
//!
//! Curvature conventions: `R_{abcd}` is stored all-covariant with
//! `[∇_a, ∇_b] τ_c = R_{abc}{}^d τ_d`, so a round sphere of curvature `κ` has
//! `R_{abcd} = κ (g_{ac} g_{bd} − g_{ad} g_{bc})`. `Ric_{ab} = R_{acb}{}^c`,
//! `J = R / (2(n−1))`, `P = (Ric − J g)/(n−2)` and `W = Rm − P∧g`.

use alloc::collections::BTreeMap;
use alloc::format;
use alloc::string::{String, ToString};
use alloc::vec;
use alloc::vec::Vec;

use num_complex::Complex64;
#[allow(unused_imports)]
use num_traits::Float;

use crate::error::{Error, Result};
use crate::expr::{num, Expr, Func, Program};
use crate::linalg;
use crate::quadrature;
use crate::tensor::{kulkarni_nomizu, pfaffian_poly, DenseTensor, Variance};

use Variance::{Co, Contra};

/// How metric derivatives are obtained.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Backend {
    /// Symbolic derivatives of the component expressions, compiled once.
    ExactSymbolic,
    /// Central differences with one Richardson level. First derivatives use the
    /// step `h·s`, second derivatives `√h·s`, where `s` is the coordinate scale.
    CentralDifference { h: f64 },
    /// `Im f(x + i h e_c)/h` for first derivatives; second derivatives are
    /// Richardson central differences of those with step `1e-3·s`.
    ComplexStep { h: f64 },
}

impl Backend {
    pub const CENTRAL_DEFAULT: Backend = Backend::CentralDifference { h: 1e-5 };
    pub const COMPLEX_DEFAULT: Backend = Backend::ComplexStep { h: 1e-20 };
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Signature {
    Riemannian,
    /// Any nondegenerate signature; positivity is not checked.
    Indefinite,
}

/// A product of intervals, some of them periodic.
#[derive(Debug, Clone, PartialEq)]
pub struct CoordBox {
    pub bounds: Vec<(f64, f64)>,
    pub periodic: Vec<bool>,
}

impl CoordBox {
    pub fn new(bounds: Vec<(f64, f64)>, periodic: Vec<bool>) -> Self {
        assert_eq!(bounds.len(), periodic.len());
        CoordBox { bounds, periodic }
    }

    pub fn dim(&self) -> usize {
        self.bounds.len()
    }

    /// Characteristic length of coordinate `i`, capped at one.
    pub fn scale(&self, i: usize) -> f64 {
        let (a, b) = self.bounds[i];
        (b - a).min(1.0)
    }

    pub fn contains(&self, x: &[f64]) -> bool {
        x.len() == self.dim()
            && x.iter().zip(&self.bounds).zip(&self.periodic).all(|((&v, &(a, b)), &p)| p || (v >= a && v <= b))
    }

    pub fn rule(&self, grid: usize) -> Vec<(Vec<f64>, f64)> {
        quadrature::box_rule(&self.bounds, &self.periodic, grid)
    }
}

fn tri(n: usize, a: usize, b: usize) -> usize {
    let (a, b) = if a <= b { (a, b) } else { (b, a) };
    a * n - a * (a + 1) / 2 + b
}

fn tri_len(n: usize) -> usize {
    n * (n + 1) / 2
}

/// Pointwise metric data: `g`, `∂_c g_{ab}` and optionally `∂_c ∂_d g_{ab}`,
/// all row-major with the derivative indices first.
#[derive(Debug, Clone, PartialEq)]
pub struct MetricJet {
    pub n: usize,
    pub g: Vec<f64>,
    pub dg: Vec<f64>,
    pub ddg: Option<Vec<f64>>,
}

impl MetricJet {
    pub fn g(&self, a: usize, b: usize) -> f64 {
        self.g[a * self.n + b]
    }
    pub fn dg(&self, c: usize, a: usize, b: usize) -> f64 {
        self.dg[(c * self.n + a) * self.n + b]
    }
    pub fn ddg(&self, c: usize, d: usize, a: usize, b: usize) -> f64 {
        let n = self.n;
        self.ddg.as_ref().expect("second derivatives not computed")[((c * n + d) * n + a) * n + b]
    }
}

/// A metric `g_{ab}(x)` given by expressions in named coordinates.
#[derive(Debug, Clone)]
pub struct MetricChart {
    name: String,
    coords: Vec<String>,
    domain: CoordBox,
    signature: Signature,
    backend: Backend,
    components: Vec<Expr>,
    values: Vec<Program>,
    first: Option<Vec<Program>>,
    second: Option<Vec<Program>>,
}

impl MetricChart {
    /// Builds a chart from the full component matrix (row-major); only the upper
    /// triangle is read, so the metric is symmetric by construction.
    pub fn new(
        name: &str,
        coords: &[&str],
        domain: CoordBox,
        matrix: Vec<Expr>,
        signature: Signature,
        backend: Backend,
    ) -> Result<Self> {
        let n = coords.len();
        if matrix.len() != n * n {
            return Err(Error::Shape(format!("metric `{name}` needs {} components, got {}", n * n, matrix.len())));
        }
        if domain.dim() != n {
            return Err(Error::Shape(format!("domain of `{name}` has dimension {}", domain.dim())));
        }
        let mut components = Vec::with_capacity(tri_len(n));
        for a in 0..n {
            for b in a..n {
                components.push(matrix[a * n + b].clone());
            }
        }
        let mut chart = MetricChart {
            name: name.to_string(),
            coords: coords.iter().map(|s| s.to_string()).collect(),
            domain,
            signature,
            backend,
            components,
            values: Vec::new(),
            first: None,
            second: None,
        };
        chart.compile()?;
        Ok(chart)
    }

    /// Diagonal metric from its diagonal entries.
    pub fn diagonal(
        name: &str,
        coords: &[&str],
        domain: CoordBox,
        diag: Vec<Expr>,
        signature: Signature,
    ) -> Result<Self> {
        let n = coords.len();
        let mut m = vec![num(0.0); n * n];
        for (i, e) in diag.into_iter().enumerate() {
            m[i * n + i] = e;
        }
        MetricChart::new(name, coords, domain, m, signature, Backend::ExactSymbolic)
    }

    fn compile(&mut self) -> Result<()> {
        let names: Vec<&str> = self.coords.iter().map(|s| s.as_str()).collect();
        self.values = self.components.iter().map(|e| e.compile(&names)).collect::<Result<_>>()?;
        self.first = None;
        self.second = None;
        if self.backend == Backend::ExactSymbolic {
            let n = self.dim();
            let mut first = Vec::with_capacity(tri_len(n) * n);
            let mut second = Vec::with_capacity(tri_len(n) * tri_len(n));
            for e in &self.components {
                let d: Vec<Expr> = (0..n).map(|c| e.differentiate(&self.coords[c])).collect();
                for dc in &d {
                    first.push(dc.compile(&names)?);
                }
                for c in 0..n {
                    for dd in c..n {
                        second.push(d[c].differentiate(&self.coords[dd]).compile(&names)?);
                    }
                }
            }
            self.first = Some(first);
            self.second = Some(second);
        }
        Ok(())
    }

    pub fn with_backend(&self, backend: Backend) -> Result<Self> {
        let mut c = self.clone();
        c.backend = backend;
        c.compile()?;
        Ok(c)
    }

    pub fn name(&self) -> &str {
        &self.name
    }
    pub fn dim(&self) -> usize {
        self.coords.len()
    }
    pub fn coords(&self) -> &[String] {
        &self.coords
    }
    pub fn domain(&self) -> &CoordBox {
        &self.domain
    }
    pub fn signature(&self) -> Signature {
        self.signature
    }
    pub fn backend(&self) -> Backend {
        self.backend
    }

    /// The component expression `g_{ab}`.
    pub fn component(&self, a: usize, b: usize) -> &Expr {
        &self.components[tri(self.dim(), a, b)]
    }

    fn tri_values(&self, x: &[f64]) -> Vec<f64> {
        self.values.iter().map(|p| p.eval(x)).collect()
    }

    fn tri_values_complex(&self, x: &[Complex64]) -> Vec<Complex64> {
        self.values.iter().map(|p| p.eval(x)).collect()
    }

    fn expand(&self, t: &[f64]) -> Vec<f64> {
        let n = self.dim();
        let mut out = vec![0.0; n * n];
        for a in 0..n {
            for b in 0..n {
                out[a * n + b] = t[tri(n, a, b)];
            }
        }
        out
    }

    /// Metric components at `x`, validated against the domain and signature.
    pub fn metric_at(&self, x: &[f64]) -> Result<Vec<f64>> {
        if !self.domain.contains(x) {
            return Err(Error::Domain(format!("{x:?} outside the domain of `{}`", self.name)));
        }
        let g = self.expand(&self.tri_values(x));
        if g.iter().any(|v| !v.is_finite()) {
            return Err(Error::Domain(format!("metric `{}` not finite at {x:?}", self.name)));
        }
        let n = self.dim();
        match self.signature {
            Signature::Riemannian => {
                if linalg::to_matrix(n, n, &g).cholesky().is_none() {
                    return Err(Error::Singular(format!("metric `{}` not positive definite at {x:?}", self.name)));
                }
            }
            Signature::Indefinite => {
                linalg::inverse(n, &g)?;
            }
        }
        Ok(g)
    }

    /// `g`, `∂g` and, when `second` is set, `∂∂g` at `x`.
    pub fn jet(&self, x: &[f64], second: bool) -> Result<MetricJet> {
        let n = self.dim();
        let g = self.metric_at(x)?;
        let m = tri_len(n);
        let mut dg_tri = vec![0.0; n * m];
        let mut ddg_tri = vec![0.0; n * n * m];
        match self.backend {
            Backend::ExactSymbolic => {
                let first = self.first.as_ref().expect("compiled");
                for t in 0..m {
                    for c in 0..n {
                        dg_tri[c * m + t] = first[t * n + c].eval(x);
                    }
                }
                if second {
                    let sec = self.second.as_ref().expect("compiled");
                    let per = tri_len(n);
                    for t in 0..m {
                        for c in 0..n {
                            for d in c..n {
                                let v = sec[t * per + tri(n, c, d)].eval(x);
                                ddg_tri[(c * n + d) * m + t] = v;
                                ddg_tri[(d * n + c) * m + t] = v;
                            }
                        }
                    }
                }
            }
            Backend::CentralDifference { h } => {
                let f = |y: &[f64]| self.tri_values(y);
                for c in 0..n {
                    let step = h * self.domain.scale(c);
                    let d = richardson_first(&f, x, c, step);
                    for t in 0..m {
                        dg_tri[c * m + t] = d[t];
                    }
                }
                if second {
                    let h2 = h.sqrt();
                    for c in 0..n {
                        for d in c..n {
                            let v = richardson_second(&f, x, c, d, h2 * self.domain.scale(c), h2 * self.domain.scale(d));
                            for t in 0..m {
                                ddg_tri[(c * n + d) * m + t] = v[t];
                                ddg_tri[(d * n + c) * m + t] = v[t];
                            }
                        }
                    }
                }
            }
            Backend::ComplexStep { h } => {
                let first_at = |y: &[f64], c: usize| -> Vec<f64> {
                    let step = h * self.domain.scale(c);
                    let mut z: Vec<Complex64> = y.iter().map(|&v| Complex64::new(v, 0.0)).collect();
                    z[c].im = step;
                    self.tri_values_complex(&z).iter().map(|v| v.im / step).collect()
                };
                for c in 0..n {
                    let d = first_at(x, c);
                    for t in 0..m {
                        dg_tri[c * m + t] = d[t];
                    }
                }
                if second {
                    for c in 0..n {
                        for d in c..n {
                            let f = |y: &[f64]| first_at(y, c);
                            let v = richardson_first(&f, x, d, 1e-3 * self.domain.scale(d));
                            for t in 0..m {
                                ddg_tri[(c * n + d) * m + t] = v[t];
                                ddg_tri[(d * n + c) * m + t] = v[t];
                            }
                        }
                    }
                }
            }
        }
        let mut dg = vec![0.0; n * n * n];
        for c in 0..n {
            for a in 0..n {
                for b in 0..n {
                    dg[(c * n + a) * n + b] = dg_tri[c * m + tri(n, a, b)];
                }
            }
        }
        let ddg = if second {
            let mut out = vec![0.0; n * n * n * n];
            for cd in 0..n * n {
                for a in 0..n {
                    for b in 0..n {
                        out[(cd * n + a) * n + b] = ddg_tri[cd * m + tri(n, a, b)];
                    }
                }
            }
            Some(out)
        } else {
            None
        };
        Ok(MetricJet { n, g, dg, ddg })
    }

    /// Full pointwise geometry; `curvature` requests second derivatives.
    pub fn geometry(&self, x: &[f64], curvature: bool) -> Result<PointGeometry> {
        PointGeometry::from_jet(self.jet(x, curvature)?)
    }

    pub fn christoffel(&self, x: &[f64]) -> Result<DenseTensor> {
        Ok(self.geometry(x, false)?.christoffel())
    }
    pub fn riemann(&self, x: &[f64]) -> Result<DenseTensor> {
        self.geometry(x, true)?.riemann()
    }
    pub fn ricci(&self, x: &[f64]) -> Result<DenseTensor> {
        self.geometry(x, true)?.ricci()
    }
    pub fn scalar(&self, x: &[f64]) -> Result<f64> {
        self.geometry(x, true)?.scalar()
    }
    pub fn schouten(&self, x: &[f64]) -> Result<(DenseTensor, f64)> {
        self.geometry(x, true)?.schouten()
    }
    pub fn weyl(&self, x: &[f64]) -> Result<DenseTensor> {
        self.geometry(x, true)?.weyl()
    }
    pub fn pfaffian_scalar(&self, x: &[f64]) -> Result<f64> {
        self.geometry(x, true)?.pfaffian()
    }

    /// `√|det g|` at `x`.
    pub fn volume_element(&self, x: &[f64]) -> Result<f64> {
        let g = self.metric_at(x)?;
        Ok(linalg::determinant(self.dim(), &g).abs().sqrt())
    }

    /// `∫ f dvol` over the domain with `grid` nodes per direction.
    pub fn integrate<F>(&self, grid: usize, f: F) -> Result<f64>
    where
        F: Fn(&PointGeometry) -> Result<f64> + Sync,
    {
        let rule = self.domain.rule(grid);
        quadrature::try_integrate(&rule, |x| {
            let geo = self.geometry(x, true)?;
            Ok(f(&geo)? * geo.volume_element())
        })
    }

    /// The chart of `e^{2Υ} g` for `Υ` an expression in the same coordinates.
    pub fn conformal_rescale(&self, upsilon: &Expr) -> Result<MetricChart> {
        let factor = Expr::call(Func::Exp, Expr::mul(num(2.0), upsilon.clone()));
        let n = self.dim();
        let mut m = Vec::with_capacity(n * n);
        for a in 0..n {
            for b in 0..n {
                m.push(Expr::mul(factor.clone(), self.component(a, b).clone()));
            }
        }
        let coords: Vec<&str> = self.coords.iter().map(|s| s.as_str()).collect();
        let name = format!("{}·e^(2Υ)", self.name);
        MetricChart::new(&name, &coords, self.domain.clone(), m, self.signature, self.backend)
    }

    /// Symbolic pullback `Φ*g` along `map` (one expression per target coordinate).
    pub fn pullback(
        &self,
        name: &str,
        source_coords: &[&str],
        source_domain: CoordBox,
        map: &[Expr],
        signature: Signature,
    ) -> Result<MetricChart> {
        let n = self.dim();
        if map.len() != n {
            return Err(Error::Shape(format!("map has {} components for a {n}-dimensional target", map.len())));
        }
        let subst: BTreeMap<String, Expr> =
            self.coords.iter().cloned().zip(map.iter().cloned()).collect();
        let g_at: Vec<Expr> = self.components.iter().map(|e| e.substitute(&subst)).collect();
        let k = source_coords.len();
        let dmap: Vec<Vec<Expr>> =
            map.iter().map(|e| source_coords.iter().map(|v| e.differentiate(v)).collect()).collect();
        let mut m = vec![num(0.0); k * k];
        for al in 0..k {
            for be in al..k {
                let mut acc = num(0.0);
                for i in 0..n {
                    if dmap[i][al].is_zero() {
                        continue;
                    }
                    for j in 0..n {
                        let gij = &g_at[tri(n, i, j)];
                        if gij.is_zero() || dmap[j][be].is_zero() {
                            continue;
                        }
                        let term = Expr::mul(gij.clone(), Expr::mul(dmap[i][al].clone(), dmap[j][be].clone()));
                        acc = Expr::add(acc, term);
                    }
                }
                m[al * k + be] = acc.clone();
                m[be * k + al] = acc;
            }
        }
        MetricChart::new(name, source_coords, source_domain, m, signature, self.backend)
    }
}

fn richardson_first(f: &dyn Fn(&[f64]) -> Vec<f64>, x: &[f64], c: usize, h: f64) -> Vec<f64> {
    let central = |step: f64| {
        let mut xp = x.to_vec();
        let mut xm = x.to_vec();
        xp[c] += step;
        xm[c] -= step;
        let (fp, fm) = (f(&xp), f(&xm));
        fp.iter().zip(&fm).map(|(a, b)| (a - b) / (2.0 * step)).collect::<Vec<f64>>()
    };
    let coarse = central(h);
    let fine = central(0.5 * h);
    fine.iter().zip(&coarse).map(|(f1, f0)| (4.0 * f1 - f0) / 3.0).collect()
}

fn richardson_second(f: &dyn Fn(&[f64]) -> Vec<f64>, x: &[f64], c: usize, d: usize, hc: f64, hd: f64) -> Vec<f64> {
    let stencil = |sc: f64, sd: f64| -> Vec<f64> {
        if c == d {
            let mut xp = x.to_vec();
            let mut xm = x.to_vec();
            xp[c] += sc;
            xm[c] -= sc;
            let (fp, f0, fm) = (f(&xp), f(x), f(&xm));
            (0..fp.len()).map(|t| (fp[t] - 2.0 * f0[t] + fm[t]) / (sc * sc)).collect()
        } else {
            let at = |a: f64, b: f64| {
                let mut y = x.to_vec();
                y[c] += a;
                y[d] += b;
                f(&y)
            };
            let (pp, pm, mp, mm) = (at(sc, sd), at(sc, -sd), at(-sc, sd), at(-sc, -sd));
            (0..pp.len()).map(|t| (pp[t] - pm[t] - mp[t] + mm[t]) / (4.0 * sc * sd)).collect()
        }
    };
    let coarse = stencil(hc, hd);
    let fine = stencil(0.5 * hc, 0.5 * hd);
    fine.iter().zip(&coarse).map(|(f1, f0)| (4.0 * f1 - f0) / 3.0).collect()
}

/// Curvature data at one point of a chart.
#[derive(Debug, Clone)]
pub struct PointGeometry {
    n: usize,
    jet: MetricJet,
    ginv: Vec<f64>,
    gamma: Vec<f64>,
    riemann: Option<Vec<f64>>,
}

impl PointGeometry {
    pub fn from_jet(jet: MetricJet) -> Result<Self> {
        let n = jet.n;
        let ginv = linalg::inverse(n, &jet.g)?;
        // Γ^c_{ab} = ½ g^{cd}(∂_a g_{bd} + ∂_b g_{ad} − ∂_d g_{ab})
        let lower = |d: usize, a: usize, b: usize| 0.5 * (jet.dg(a, b, d) + jet.dg(b, a, d) - jet.dg(d, a, b));
        let mut gamma = vec![0.0; n * n * n];
        for c in 0..n {
            for a in 0..n {
                for b in a..n {
                    let mut s = 0.0;
                    for d in 0..n {
                        s += ginv[c * n + d] * lower(d, a, b);
                    }
                    gamma[(c * n + a) * n + b] = s;
                    gamma[(c * n + b) * n + a] = s;
                }
            }
        }
        let riemann = if jet.ddg.is_some() { Some(riemann_from_jet(&jet, &ginv, &gamma)) } else { None };
        Ok(PointGeometry { n, jet, ginv, gamma, riemann })
    }

    pub fn dim(&self) -> usize {
        self.n
    }
    pub fn jet(&self) -> &MetricJet {
        &self.jet
    }
    pub fn g(&self) -> &[f64] {
        &self.jet.g
    }
    pub fn ginv(&self) -> &[f64] {
        &self.ginv
    }
    /// `Γ^c_{ab}` read directly.
    pub fn gamma(&self, c: usize, a: usize, b: usize) -> f64 {
        self.gamma[(c * self.n + a) * self.n + b]
    }

    pub fn metric(&self) -> DenseTensor {
        DenseTensor::from_vec(self.n, &[Co, Co], self.jet.g.clone()).expect("shape")
    }

    pub fn volume_element(&self) -> f64 {
        linalg::determinant(self.n, &self.jet.g).abs().sqrt()
    }

    /// `Γ^c_{ab}` with slots `[Contra, Co, Co]`.
    pub fn christoffel(&self) -> DenseTensor {
        DenseTensor::from_vec(self.n, &[Contra, Co, Co], self.gamma.clone()).expect("shape")
    }

    fn riemann_data(&self) -> Result<&[f64]> {
        self.riemann
            .as_deref()
            .ok_or_else(|| Error::Invalid("curvature needs second derivatives".into()))
    }

    pub fn riemann(&self) -> Result<DenseTensor> {
        DenseTensor::from_vec(self.n, &[Co; 4], self.riemann_data()?.to_vec())
    }

    pub fn ricci(&self) -> Result<DenseTensor> {
        let n = self.n;
        let r = self.riemann_data()?;
        let half = |a: usize, b: usize| {
            let mut s = 0.0;
            for c in 0..n {
                for d in 0..n {
                    s += self.ginv[c * n + d] * r[((a * n + c) * n + b) * n + d];
                }
            }
            s
        };
        // Symmetric in exact arithmetic; averaging removes the roundoff part.
        Ok(DenseTensor::from_fn(n, &[Co, Co], |i| 0.5 * (half(i[0], i[1]) + half(i[1], i[0]))))
    }

    pub fn scalar(&self) -> Result<f64> {
        let ric = self.ricci()?;
        let n = self.n;
        Ok((0..n * n).map(|k| self.ginv[k] * ric.data()[k]).sum())
    }

    /// `(P, J)`; needs `n ≥ 3`.
    pub fn schouten(&self) -> Result<(DenseTensor, f64)> {
        let n = self.n;
        if n < 3 {
            return Err(Error::Dimension(format!("Schouten tensor needs n ≥ 3, got {n}")));
        }
        let ric = self.ricci()?;
        let j = self.scalar()? / (2.0 * (n as f64 - 1.0));
        let p = ric.sub(&self.metric().scale(j))?.scale(1.0 / (n as f64 - 2.0));
        Ok((p, j))
    }

    pub fn weyl(&self) -> Result<DenseTensor> {
        let (p, _) = self.schouten()?;
        self.riemann()?.sub(&kulkarni_nomizu(&p, &self.metric())?)
    }

    /// `Pf_{n/2}(R_{ab}{}^{cd})`; needs `n` even.
    pub fn pfaffian(&self) -> Result<f64> {
        if self.n % 2 != 0 {
            return Err(Error::Dimension(format!("Pfaffian scalar needs even dimension, got {}", self.n)));
        }
        let mixed = crate::tensor::raise_last_pair(&self.riemann()?, &self.ginv)?;
        Ok(pfaffian_poly(self.n / 2, &mixed)?.value)
    }

    /// Raises the last two slots of a covariant four-tensor.
    pub fn raise_pair(&self, t: &DenseTensor) -> Result<DenseTensor> {
        crate::tensor::raise_last_pair(t, &self.ginv)
    }
}

fn riemann_from_jet(jet: &MetricJet, ginv: &[f64], gamma: &[f64]) -> Vec<f64> {
    let n = jet.n;
    let gm = |c: usize, a: usize, b: usize| gamma[(c * n + a) * n + b];
    // ∂_e g^{cd} = −g^{cp} ∂_e g_{pq} g^{qd}
    let mut dginv = vec![0.0; n * n * n];
    for e in 0..n {
        for c in 0..n {
            for d in 0..n {
                let mut s = 0.0;
                for p in 0..n {
                    for q in 0..n {
                        s -= ginv[c * n + p] * jet.dg(e, p, q) * ginv[q * n + d];
                    }
                }
                dginv[(e * n + c) * n + d] = s;
            }
        }
    }
    // ∂_e Γ^c_{ab}
    let mut dgamma = vec![0.0; n * n * n * n];
    for e in 0..n {
        for c in 0..n {
            for a in 0..n {
                for b in a..n {
                    let mut s = 0.0;
                    for d in 0..n {
                        let low = 0.5 * (jet.dg(a, b, d) + jet.dg(b, a, d) - jet.dg(d, a, b));
                        let dlow = 0.5 * (jet.ddg(e, a, b, d) + jet.ddg(e, b, a, d) - jet.ddg(e, d, a, b));
                        s += dginv[(e * n + c) * n + d] * low + ginv[c * n + d] * dlow;
                    }
                    dgamma[((e * n + c) * n + a) * n + b] = s;
                    dgamma[((e * n + c) * n + b) * n + a] = s;
                }
            }
        }
    }
    let dgm = |e: usize, c: usize, a: usize, b: usize| dgamma[((e * n + c) * n + a) * n + b];
    // Classical R^d_{cab} = ∂_a Γ^d_{bc} − ∂_b Γ^d_{ac} + Γ^d_{ae} Γ^e_{bc} − Γ^d_{be} Γ^e_{ac},
    // then R_{abcd} = −g_{de} R^e_{cab}.
    let mut classical = vec![0.0; n * n * n * n];
    for d in 0..n {
        for c in 0..n {
            for a in 0..n {
                for b in 0..n {
                    let mut s = dgm(a, d, b, c) - dgm(b, d, a, c);
                    for e in 0..n {
                        s += gm(d, a, e) * gm(e, b, c) - gm(d, b, e) * gm(e, a, c);
                    }
                    classical[((d * n + c) * n + a) * n + b] = s;
                }
            }
        }
    }
    let mut r = vec![0.0; n * n * n * n];
    for a in 0..n {
        for b in 0..n {
            for c in 0..n {
                for d in 0..n {
                    let mut s = 0.0;
                    for e in 0..n {
                        s -= jet.g(d, e) * classical[((e * n + c) * n + a) * n + b];
                    }
                    r[((a * n + b) * n + c) * n + d] = s;
                }
            }
        }
    }
    // Average over the pair antisymmetries and the pair exchange to strip roundoff.
    let at = |a: usize, b: usize, c: usize, d: usize| r[((a * n + b) * n + c) * n + d];
    let mut sym = vec![0.0; n * n * n * n];
    for a in 0..n {
        for b in 0..n {
            for c in 0..n {
                for d in 0..n {
                    sym[((a * n + b) * n + c) * n + d] = 0.125
                        * (at(a, b, c, d) - at(b, a, c, d) - at(a, b, d, c) + at(b, a, d, c) + at(c, d, a, b) - at(d, c, a, b)
                            - at(c, d, b, a)
                            + at(d, c, b, a));
                }
            }
        }
    }
    sym
}

/// Max-norm residual of the first Bianchi identity `R_{abcd} + R_{bcad} + R_{cabd}`.
pub fn bianchi_residual(r: &DenseTensor) -> f64 {
    let n = r.dim();
    let mut worst: f64 = 0.0;
    for a in 0..n {
        for b in 0..n {
            for c in 0..n {
                for d in 0..n {
                    let v = r.get(&[a, b, c, d]) + r.get(&[b, c, a, d]) + r.get(&[c, a, b, d]);
                    worst = worst.max(v.abs());
                }
            }
        }
    }
    worst
}

/// Max-norm of all single traces `g^{ac} W_{abcd}` (and the other pairings).
pub fn trace_residual(w: &DenseTensor, ginv: &[f64]) -> f64 {
    let n = w.dim();
    let mut worst: f64 = 0.0;
    let pairs = [(0, 1), (0, 2), (0, 3), (1, 2), (1, 3), (2, 3)];
    for &(p, q) in &pairs {
        let others: Vec<usize> = (0..4).filter(|&s| s != p && s != q).collect();
        for x in 0..n {
            for y in 0..n {
                let mut s = 0.0;
                for i in 0..n {
                    for j in 0..n {
                        let mut idx = [0usize; 4];
                        idx[p] = i;
                        idx[q] = j;
                        idx[others[0]] = x;
                        idx[others[1]] = y;
                        s += ginv[i * n + j] * w.get(&idx);
                    }
                }
                worst = worst.max(s.abs());
            }
        }
    }
    worst
}

/// Max-norm of `∇_c g_{ab} = ∂_c g_{ab} − Γ^d_{ca} g_{db} − Γ^d_{cb} g_{ad}`.
pub fn metric_compatibility_residual(geo: &PointGeometry) -> f64 {
    let n = geo.dim();
    let jet = geo.jet();
    let mut worst: f64 = 0.0;
    for c in 0..n {
        for a in 0..n {
            for b in 0..n {
                let mut s = jet.dg(c, a, b);
                for d in 0..n {
                    s -= geo.gamma(d, c, a) * jet.g(d, b) + geo.gamma(d, c, b) * jet.g(a, d);
                }
                worst = worst.max(s.abs());
            }
        }
    }
    worst
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::expr::{parse, var};

    fn half_plane() -> MetricChart {
        let rho2 = parse("1/rho^2").unwrap();
        MetricChart::diagonal(
            "H2",
            &["rho", "x"],
            CoordBox::new(vec![(0.1, 2.0), (-1.0, 1.0)], vec![false, false]),
            vec![rho2.clone(), rho2],
            Signature::Riemannian,
        )
        .unwrap()
    }

    #[test]
    fn half_plane_christoffel() {
        let c = half_plane();
        let g = c.christoffel(&[0.5, 0.3]).unwrap();
        // Γ^ρ_{xx} = 1/ρ, Γ^ρ_{ρρ} = −1/ρ, Γ^x_{ρx} = −1/ρ
        assert!((g.get(&[0, 1, 1]) - 2.0).abs() < 1e-12);
        assert!((g.get(&[0, 0, 0]) + 2.0).abs() < 1e-12);
        assert!((g.get(&[1, 0, 1]) + 2.0).abs() < 1e-12);
        assert!(g.get(&[1, 1, 1]).abs() < 1e-12);
    }

    #[test]
    fn half_plane_curvature_is_minus_one() {
        let c = half_plane();
        let geo = c.geometry(&[0.7, 0.1], true).unwrap();
        assert!((geo.scalar().unwrap() + 2.0).abs() < 1e-10);
        assert!((geo.pfaffian().unwrap() + 1.0).abs() < 1e-10);
        assert!(geo.schouten().is_err());
    }

    #[test]
    fn backends_agree_on_derivatives() {
        let g = parse("1 + x^2*sin(y)").unwrap();
        let h = parse("exp(x*y)").unwrap();
        let chart = MetricChart::new(
            "test",
            &["x", "y"],
            CoordBox::new(vec![(-1.0, 1.0), (-1.0, 1.0)], vec![false, false]),
            vec![g, num(0.1), num(0.1), h],
            Signature::Riemannian,
            Backend::ExactSymbolic,
        )
        .unwrap();
        let x = [0.3, -0.4];
        let exact = chart.jet(&x, true).unwrap();
        for backend in [Backend::CENTRAL_DEFAULT, Backend::COMPLEX_DEFAULT] {
            let other = chart.with_backend(backend).unwrap().jet(&x, true).unwrap();
            for (a, b) in exact.dg.iter().zip(&other.dg) {
                assert!((a - b).abs() < 1e-8 * (1.0 + a.abs()), "{backend:?}: {a} vs {b}");
            }
            for (a, b) in exact.ddg.as_ref().unwrap().iter().zip(other.ddg.as_ref().unwrap()) {
                assert!((a - b).abs() < 1e-6 * (1.0 + a.abs()), "{backend:?}: {a} vs {b}");
            }
        }
    }

    #[test]
    fn domain_and_signature_errors() {
        let c = half_plane();
        assert!(matches!(c.metric_at(&[3.0, 0.0]), Err(Error::Domain(_))));
        let bad = MetricChart::diagonal(
            "bad",
            &["x"],
            CoordBox::new(vec![(-1.0, 1.0)], vec![false]),
            vec![Expr::neg(var("x"))],
            Signature::Riemannian,
        )
        .unwrap();
        assert!(bad.metric_at(&[0.5]).is_err());
    }
}

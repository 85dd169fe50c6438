//! Extrinsic geometry of immersions into metric charts.
//!
//! Second fundamental form components `L_{αβα'}` are taken against the
//! orthonormal normal frame, so normal indices are raised and lowered with `δ`.
//! The frame gauge is Gram–Schmidt on the target coordinate vectors in
//! ascending order after projecting off the tangent space; each normal is then
//! signed so that its first nonzero component is positive.

use alloc::format;
use alloc::string::{String, ToString};
use alloc::sync::Arc;
use alloc::vec;
use alloc::vec::Vec;

#[allow(unused_imports)]
use num_traits::Float;

use crate::chart::{CoordBox, MetricChart, PointGeometry};
use crate::error::{Error, Result};
use crate::expr::{Expr, Program};
use crate::linalg;
use crate::quadrature;
use crate::tensor::{kulkarni_nomizu, DenseTensor, Variance};

use Variance::Co;

fn tri(n: usize, a: usize, b: usize) -> usize {
    let (a, b) = if a <= b { (a, b) } else { (b, a) };
    a * n - a * (a + 1) / 2 + b
}

/// An immersion `j: Σᵏ → M` given by expressions in source coordinates.
#[derive(Debug, Clone)]
pub struct ImmersionChart {
    name: String,
    coords: Vec<String>,
    domain: CoordBox,
    target: Arc<MetricChart>,
    map: Vec<Expr>,
    map_prog: Vec<Program>,
    d1: Vec<Program>,
    d2: Vec<Program>,
    induced: Arc<MetricChart>,
}

impl ImmersionChart {
    pub fn new(
        name: &str,
        coords: &[&str],
        domain: CoordBox,
        target: Arc<MetricChart>,
        map: Vec<Expr>,
    ) -> Result<Self> {
        let k = coords.len();
        let n = target.dim();
        if map.len() != n {
            return Err(Error::Shape(format!("immersion `{name}` has {} components for target dimension {n}", map.len())));
        }
        if k >= n {
            return Err(Error::Dimension(format!("immersion `{name}` needs k < n, got k={k}, n={n}")));
        }
        if domain.dim() != k {
            return Err(Error::Shape(format!("domain of `{name}` has dimension {}", domain.dim())));
        }
        let map_prog = map.iter().map(|e| e.compile(coords)).collect::<Result<Vec<_>>>()?;
        let mut d1 = Vec::with_capacity(n * k);
        let mut d2 = Vec::with_capacity(n * k * (k + 1) / 2);
        for e in &map {
            let de: Vec<Expr> = coords.iter().map(|v| e.differentiate(v)).collect();
            for d in &de {
                d1.push(d.compile(coords)?);
            }
            for a in 0..k {
                for b in a..k {
                    d2.push(de[a].differentiate(coords[b]).compile(coords)?);
                }
            }
        }
        let induced = target.pullback(&format!("{name}*g"), coords, domain.clone(), &map, target.signature())?;
        Ok(ImmersionChart {
            name: name.to_string(),
            coords: coords.iter().map(|s| s.to_string()).collect(),
            domain,
            target,
            map,
            map_prog,
            d1,
            d2,
            induced: Arc::new(induced),
        })
    }

    /// The same map into another metric on the same coordinates.
    pub fn with_target(&self, target: Arc<MetricChart>) -> Result<Self> {
        let coords: Vec<&str> = self.coords.iter().map(|s| s.as_str()).collect();
        ImmersionChart::new(&self.name, &coords, self.domain.clone(), target, self.map.clone())
    }

    pub fn name(&self) -> &str {
        &self.name
    }
    pub fn source_dim(&self) -> usize {
        self.coords.len()
    }
    pub fn target_dim(&self) -> usize {
        self.target.dim()
    }
    pub fn coords(&self) -> &[String] {
        &self.coords
    }
    pub fn domain(&self) -> &CoordBox {
        &self.domain
    }
    pub fn target(&self) -> &Arc<MetricChart> {
        &self.target
    }
    pub fn induced(&self) -> &Arc<MetricChart> {
        &self.induced
    }
    pub fn map(&self) -> &[Expr] {
        &self.map
    }

    /// `j(x)`.
    pub fn point(&self, x: &[f64]) -> Vec<f64> {
        self.map_prog.iter().map(|p| p.eval(x)).collect()
    }

    /// `∂_α j^i` as an `n×k` row-major matrix.
    pub fn tangent(&self, x: &[f64]) -> Vec<f64> {
        self.d1.iter().map(|p| p.eval(x)).collect()
    }

    fn hessian(&self, x: &[f64]) -> Vec<f64> {
        self.d2.iter().map(|p| p.eval(x)).collect()
    }

    fn check_source(&self, x: &[f64]) -> Result<()> {
        if !self.domain.contains(x) {
            return Err(Error::Domain(format!("{x:?} outside the source domain of `{}`", self.name)));
        }
        Ok(())
    }

    pub fn frame_at(&self, x: &[f64]) -> Result<ExtrinsicFrame> {
        self.check_source(x)?;
        let p = self.point(x);
        let g = self.target.metric_at(&p)?;
        build_frame(x, self.target.dim(), self.source_dim(), &g, self.tangent(x))
    }

    /// Everything needed pointwise; `curvature` adds target and intrinsic curvature.
    pub fn data_at(&self, x: &[f64], curvature: bool) -> Result<PointData> {
        self.check_source(x)?;
        let n = self.target.dim();
        let k = self.source_dim();
        let p = self.point(x);
        let target = self.target.geometry(&p, curvature)?;
        let frame = build_frame(x, n, k, target.g(), self.tangent(x))?;
        let hess = self.hessian(x);
        let m = n - k;
        let kk = k * (k + 1) / 2;
        let mut l = vec![0.0; k * k * m];
        for a in 0..k {
            for b in a..k {
                // ∇_a ∂_b j = ∂_a∂_b j^i + Γ^i_{pq} ∂_a j^p ∂_b j^q
                let mut acc = vec![0.0; n];
                for (i, slot) in acc.iter_mut().enumerate() {
                    let mut s = hess[i * kk + tri(k, a, b)];
                    for pp in 0..n {
                        let ta = frame.tangent[pp * k + a];
                        if ta == 0.0 {
                            continue;
                        }
                        for q in 0..n {
                            s += target.gamma(i, pp, q) * ta * frame.tangent[q * k + b];
                        }
                    }
                    *slot = s;
                }
                for (nu, e) in frame.normals.iter().enumerate() {
                    let v = inner(n, target.g(), &acc, e);
                    l[(a * k + b) * m + nu] = v;
                    l[(b * k + a) * m + nu] = v;
                }
            }
        }
        let sff = SecondFundamentalData::new(k, m, frame.h.clone(), frame.hinv.clone(), l);
        let intrinsic = if curvature { Some(self.induced.geometry(x, true)?) } else { None };
        Ok(PointData { x: x.to_vec(), frame, sff, target, intrinsic })
    }

    pub fn second_fundamental_form(&self, x: &[f64]) -> Result<SecondFundamentalData> {
        Ok(self.data_at(x, false)?.sff)
    }

    pub fn gauss_residual(&self, x: &[f64]) -> Result<f64> {
        self.data_at(x, true)?.gauss_residual()
    }

    pub fn gauss_weyl_residual(&self, x: &[f64]) -> Result<f64> {
        self.data_at(x, true)?.gauss_weyl_residual()
    }

    pub fn fialkow(&self, x: &[f64]) -> Result<(f64, Option<DenseTensor>)> {
        self.data_at(x, true)?.fialkow()
    }

    pub fn extrinsic_schouten(&self, x: &[f64]) -> Result<DenseTensor> {
        self.data_at(x, true)?.extrinsic_schouten()
    }

    /// `∫_Σ f darea` with the induced area element.
    pub fn integrate<F>(&self, grid: usize, curvature: bool, f: F) -> Result<f64>
    where
        F: Fn(&PointData) -> Result<f64> + Sync,
    {
        let rule = self.domain.rule(grid);
        self.integrate_rule(&rule, curvature, f)
    }

    pub fn integrate_rule<F>(&self, rule: &[(Vec<f64>, f64)], curvature: bool, f: F) -> Result<f64>
    where
        F: Fn(&PointData) -> Result<f64> + Sync,
    {
        quadrature::try_integrate(rule, |x| {
            let d = self.data_at(x, curvature)?;
            Ok(f(&d)? * d.area_element())
        })
    }

    /// Several integrals `∫ f_i darea` over one rule, sharing the pointwise data.
    pub fn integrate_rule_many<F>(&self, rule: &[(Vec<f64>, f64)], curvature: bool, len: usize, f: F) -> Result<Vec<f64>>
    where
        F: Fn(&PointData) -> Result<Vec<f64>> + Sync,
    {
        quadrature::try_integrate_vec(rule, len, |x| {
            let d = self.data_at(x, curvature)?;
            let a = d.area_element();
            let mut v = f(&d)?;
            if v.len() != len {
                return Err(Error::Shape(format!("integrand returned {} values, expected {len}", v.len())));
            }
            v.iter_mut().for_each(|x| *x *= a);
            Ok(v)
        })
    }

    /// `∫(λ + |H|²) darea` for surfaces.
    pub fn willmore_energy(&self, lambda: f64, grid: usize) -> Result<f64> {
        if self.source_dim() != 2 {
            return Err(Error::Dimension(format!("Willmore energy needs k = 2, got {}", self.source_dim())));
        }
        self.integrate(grid, false, |d| Ok(lambda + d.sff.mean_norm2()))
    }
}

fn inner(n: usize, g: &[f64], u: &[f64], v: &[f64]) -> f64 {
    let mut s = 0.0;
    for i in 0..n {
        if u[i] == 0.0 {
            continue;
        }
        for j in 0..n {
            s += g[i * n + j] * u[i] * v[j];
        }
    }
    s
}

fn build_frame(x: &[f64], n: usize, k: usize, g: &[f64], tangent: Vec<f64>) -> Result<ExtrinsicFrame> {
    let sv = linalg::singular_values(n, k, &tangent);
    let smin = *sv.last().unwrap();
    if smin < 1e-10 * sv[0].max(1.0) {
        return Err(Error::RankDeficient(smin));
    }
    let col = |a: usize| -> Vec<f64> { (0..n).map(|i| tangent[i * k + a]).collect() };
    let cols: Vec<Vec<f64>> = (0..k).map(col).collect();
    let mut h = vec![0.0; k * k];
    for a in 0..k {
        for b in 0..k {
            h[a * k + b] = inner(n, g, &cols[a], &cols[b]);
        }
    }
    let hinv = linalg::inverse(k, &h)?;
    let mut normals: Vec<Vec<f64>> = Vec::with_capacity(n - k);
    for i in 0..n {
        if normals.len() == n - k {
            break;
        }
        let mut v = vec![0.0; n];
        v[i] = 1.0;
        let scale = g[i * n..(i + 1) * n].iter().fold(1e-300f64, |m, v| m.max(v.abs()));
        // v − T h⁻¹ Tᵀ g v
        let tg: Vec<f64> = cols.iter().map(|c| inner(n, g, c, &v)).collect();
        for a in 0..k {
            let mut coef = 0.0;
            for b in 0..k {
                coef += hinv[a * k + b] * tg[b];
            }
            for j in 0..n {
                v[j] -= coef * cols[a][j];
            }
        }
        for e in &normals {
            let c = inner(n, g, &v, e);
            for j in 0..n {
                v[j] -= c * e[j];
            }
        }
        let norm2 = inner(n, g, &v, &v);
        if norm2 <= 1e-10 * scale {
            continue;
        }
        let inv = 1.0 / norm2.sqrt();
        let vmax = v.iter().fold(0.0f64, |m, c| m.max(c.abs()));
        let first = v.iter().find(|c| c.abs() > 1e-12 * vmax).copied().unwrap_or(1.0);
        let sign = if first < 0.0 { -1.0 } else { 1.0 };
        normals.push(v.iter().map(|c| c * inv * sign).collect());
    }
    if normals.len() != n - k {
        return Err(Error::Invalid(format!("found {} normals, expected {}", normals.len(), n - k)));
    }
    Ok(ExtrinsicFrame { x: x.to_vec(), n, k, tangent, normals, h, hinv })
}

/// Tangent and normal frame at one source point.
#[derive(Debug, Clone)]
pub struct ExtrinsicFrame {
    pub x: Vec<f64>,
    pub n: usize,
    pub k: usize,
    /// `∂_α j^i`, `n×k` row-major.
    pub tangent: Vec<f64>,
    /// Orthonormal normals in target coordinates.
    pub normals: Vec<Vec<f64>>,
    pub h: Vec<f64>,
    pub hinv: Vec<f64>,
}

impl ExtrinsicFrame {
    /// Largest deviation from `g(e, dj·v) = 0` and `g(e_α', e_β') = δ`.
    pub fn orthonormality_residual(&self, g: &[f64]) -> f64 {
        let n = self.n;
        let mut worst: f64 = 0.0;
        for (i, e) in self.normals.iter().enumerate() {
            for a in 0..self.k {
                let t: Vec<f64> = (0..n).map(|r| self.tangent[r * self.k + a]).collect();
                worst = worst.max(inner(n, g, e, &t).abs());
            }
            for (j, f) in self.normals.iter().enumerate() {
                let target = if i == j { 1.0 } else { 0.0 };
                worst = worst.max((inner(n, g, e, f) - target).abs());
            }
        }
        worst
    }
}

/// `L_{αβα'}` with its traces and trace-free part.
#[derive(Debug, Clone)]
pub struct SecondFundamentalData {
    pub k: usize,
    /// Codimension.
    pub m: usize,
    pub h: Vec<f64>,
    pub hinv: Vec<f64>,
    /// `L[(α k + β) m + α']`.
    pub l: Vec<f64>,
    pub mean: Vec<f64>,
    pub lo: Vec<f64>,
}

impl SecondFundamentalData {
    pub fn new(k: usize, m: usize, h: Vec<f64>, hinv: Vec<f64>, l: Vec<f64>) -> Self {
        let mut mean = vec![0.0; m];
        for (nu, hm) in mean.iter_mut().enumerate() {
            let mut s = 0.0;
            for a in 0..k {
                for b in 0..k {
                    s += hinv[a * k + b] * l[(a * k + b) * m + nu];
                }
            }
            *hm = s / k as f64;
        }
        let mut lo = l.clone();
        for a in 0..k {
            for b in 0..k {
                for nu in 0..m {
                    lo[(a * k + b) * m + nu] -= mean[nu] * h[a * k + b];
                }
            }
        }
        SecondFundamentalData { k, m, h, hinv, l, mean, lo }
    }

    pub fn l(&self, a: usize, b: usize, nu: usize) -> f64 {
        self.l[(a * self.k + b) * self.m + nu]
    }
    pub fn lo(&self, a: usize, b: usize, nu: usize) -> f64 {
        self.lo[(a * self.k + b) * self.m + nu]
    }

    fn norm2_of(&self, t: &[f64]) -> f64 {
        let (k, m) = (self.k, self.m);
        let mut s = 0.0;
        for a in 0..k {
            for b in 0..k {
                for c in 0..k {
                    for d in 0..k {
                        let w = self.hinv[a * k + c] * self.hinv[b * k + d];
                        if w == 0.0 {
                            continue;
                        }
                        for nu in 0..m {
                            s += w * t[(a * k + b) * m + nu] * t[(c * k + d) * m + nu];
                        }
                    }
                }
            }
        }
        s
    }

    /// `|L|²`.
    pub fn norm2(&self) -> f64 {
        self.norm2_of(&self.l)
    }
    /// `|L̊|²`.
    pub fn lo_norm2(&self) -> f64 {
        self.norm2_of(&self.lo)
    }
    /// `|H|²`.
    pub fn mean_norm2(&self) -> f64 {
        self.mean.iter().map(|x| x * x).sum()
    }
    /// Trace `h^{αβ} L̊_{αβα'}`, max over normals.
    pub fn lo_trace_residual(&self) -> f64 {
        let k = self.k;
        (0..self.m)
            .map(|nu| {
                let mut s = 0.0;
                for a in 0..k {
                    for b in 0..k {
                        s += self.hinv[a * k + b] * self.lo(a, b, nu);
                    }
                }
                s.abs()
            })
            .fold(0.0, f64::max)
    }

    fn square_of(&self, t: &[f64]) -> DenseTensor {
        let (k, m) = (self.k, self.m);
        DenseTensor::from_fn(k, &[Co, Co], |i| {
            let mut s = 0.0;
            for c in 0..k {
                for d in 0..k {
                    for nu in 0..m {
                        s += t[(i[0] * k + c) * m + nu] * self.hinv[c * k + d] * t[(i[1] * k + d) * m + nu];
                    }
                }
            }
            s
        })
    }

    /// `L̊²_{αβ} = L̊_{αγα'} L̊_β{}^{γα'}`.
    pub fn lo_square(&self) -> DenseTensor {
        self.square_of(&self.lo)
    }
    /// `L²_{αβ} = L_{αγα'} L_β{}^{γα'}`.
    pub fn l_square(&self) -> DenseTensor {
        self.square_of(&self.l)
    }

    /// `|S|²` of a covariant two-tensor on `Σ`.
    pub fn norm2_2(&self, s: &DenseTensor) -> f64 {
        let k = self.k;
        let mut acc = 0.0;
        for a in 0..k {
            for b in 0..k {
                for c in 0..k {
                    for d in 0..k {
                        acc += self.hinv[a * k + c] * self.hinv[b * k + d] * s.get(&[a, b]) * s.get(&[c, d]);
                    }
                }
            }
        }
        acc
    }

    /// `|L̊²|²`.
    pub fn lo_square_norm2(&self) -> f64 {
        self.norm2_2(&self.lo_square())
    }
    /// `|L²|²`.
    pub fn l_square_norm2(&self) -> f64 {
        self.norm2_2(&self.l_square())
    }

    /// `½ L̊∧L̊` with the normal index contracted, all covariant.
    pub fn half_lo_wedge(&self) -> DenseTensor {
        let (k, m) = (self.k, self.m);
        DenseTensor::from_fn(k, &[Co; 4], |i| {
            let (a, b, c, d) = (i[0], i[1], i[2], i[3]);
            let mut s = 0.0;
            for nu in 0..m {
                s += self.lo(a, c, nu) * self.lo(b, d, nu) - self.lo(a, d, nu) * self.lo(b, c, nu);
            }
            s
        })
    }

    /// `½ L∧L`, the Gauss-equation correction to the tangential curvature.
    pub fn half_l_wedge(&self) -> DenseTensor {
        let (k, m) = (self.k, self.m);
        DenseTensor::from_fn(k, &[Co; 4], |i| {
            let (a, b, c, d) = (i[0], i[1], i[2], i[3]);
            let mut s = 0.0;
            for nu in 0..m {
                s += self.l(a, c, nu) * self.l(b, d, nu) - self.l(a, d, nu) * self.l(b, c, nu);
            }
            s
        })
    }

    pub fn induced_metric(&self) -> DenseTensor {
        DenseTensor::from_vec(self.k, &[Co, Co], self.h.clone()).expect("shape")
    }
}

/// Pointwise bundle of frame, second fundamental form and curvature.
#[derive(Debug, Clone)]
pub struct PointData {
    pub x: Vec<f64>,
    pub frame: ExtrinsicFrame,
    pub sff: SecondFundamentalData,
    pub target: PointGeometry,
    pub intrinsic: Option<PointGeometry>,
}

impl PointData {
    pub fn area_element(&self) -> f64 {
        linalg::determinant(self.frame.k, &self.frame.h).abs().sqrt()
    }

    fn intrinsic(&self) -> Result<&PointGeometry> {
        self.intrinsic.as_ref().ok_or_else(|| Error::Invalid("intrinsic curvature not computed".into()))
    }

    /// Pulls a covariant four-tensor on `M` back to `Σ`.
    pub fn project4(&self, r: &DenseTensor) -> DenseTensor {
        let (n, k) = (self.frame.n, self.frame.k);
        let t = &self.frame.tangent;
        // contract one slot at a time to keep the cost at O(n⁴k)
        let mut cur = r.data().to_vec();
        let mut dims = [n, n, n, n];
        for slot in 0..4 {
            let mut nd = dims;
            nd[slot] = k;
            let len: usize = nd.iter().product();
            let mut next = vec![0.0; len];
            for (flat, out) in next.iter_mut().enumerate() {
                let mut idx = [0usize; 4];
                let mut f = flat;
                for s in (0..4).rev() {
                    idx[s] = f % nd[s];
                    f /= nd[s];
                }
                let alpha = idx[slot];
                let mut acc = 0.0;
                for i in 0..n {
                    let ti = t[i * k + alpha];
                    if ti == 0.0 {
                        continue;
                    }
                    let mut src = idx;
                    src[slot] = i;
                    let pos = ((src[0] * dims[1] + src[1]) * dims[2] + src[2]) * dims[3] + src[3];
                    acc += ti * cur[pos];
                }
                *out = acc;
            }
            cur = next;
            dims = nd;
        }
        DenseTensor::from_vec(k, &[Co; 4], cur).expect("shape")
    }

    /// Pulls a covariant two-tensor on `M` back to `Σ`.
    pub fn project2(&self, s: &DenseTensor) -> DenseTensor {
        let (n, k) = (self.frame.n, self.frame.k);
        let t = &self.frame.tangent;
        DenseTensor::from_fn(k, &[Co, Co], |i| {
            let mut acc = 0.0;
            for p in 0..n {
                for q in 0..n {
                    acc += t[p * k + i[0]] * t[q * k + i[1]] * s.get(&[p, q]);
                }
            }
            acc
        })
    }

    /// Target Riemann tensor restricted to `TΣ`.
    pub fn target_riemann_tangential(&self) -> Result<DenseTensor> {
        Ok(self.project4(&self.target.riemann()?))
    }

    /// Target Weyl tensor restricted to `TΣ`.
    pub fn weyl_tangential(&self) -> Result<DenseTensor> {
        Ok(self.project4(&self.target.weyl()?))
    }

    /// Max-norm residual of the Gauss equation `R̄ = R|_Σ + ½L∧L`.
    pub fn gauss_residual(&self) -> Result<f64> {
        let rbar = self.intrinsic()?.riemann()?;
        let rhs = self.target_riemann_tangential()?.add(&self.sff.half_l_wedge())?;
        Ok(rbar.sub(&rhs)?.max_abs())
    }

    /// `W_{αβ}{}^{αβ}` of the tangential Weyl tensor.
    pub fn weyl_full_trace(&self) -> Result<f64> {
        let w = self.weyl_tangential()?;
        let k = self.frame.k;
        let hinv = &self.frame.hinv;
        let mut s = 0.0;
        for a in 0..k {
            for b in 0..k {
                for c in 0..k {
                    for d in 0..k {
                        s += hinv[a * k + c] * hinv[b * k + d] * w.get(&[a, b, c, d]);
                    }
                }
            }
        }
        Ok(s)
    }

    /// `(G, F)`; `F` is `None` for surfaces.
    pub fn fialkow(&self) -> Result<(f64, Option<DenseTensor>)> {
        let k = self.frame.k;
        if k < 2 {
            return Err(Error::Dimension("Fialkow scalar needs k ≥ 2".into()));
        }
        let g = (self.sff.lo_norm2() - self.weyl_full_trace()?) / (2.0 * (k as f64 - 1.0));
        if k == 2 {
            return Ok((g, None));
        }
        let w = self.weyl_tangential()?;
        let hinv = &self.frame.hinv;
        let wtr = DenseTensor::from_fn(k, &[Co, Co], |i| {
            let mut s = 0.0;
            for c in 0..k {
                for d in 0..k {
                    s += hinv[c * k + d] * w.get(&[i[0], c, i[1], d]);
                }
            }
            s
        });
        let f = self
            .sff
            .lo_square()
            .sub(&wtr)?
            .sub(&self.sff.induced_metric().scale(g))?
            .scale(1.0 / (k as f64 - 2.0));
        Ok((g, Some(f)))
    }

    /// `𝒫 = P|_Σ + H·L̊ + ½|H|² h`.
    pub fn extrinsic_schouten(&self) -> Result<DenseTensor> {
        let (p, _) = self.target.schouten()?;
        let k = self.frame.k;
        let m = self.sff.m;
        let hl = DenseTensor::from_fn(k, &[Co, Co], |i| {
            (0..m).map(|nu| self.sff.mean[nu] * self.sff.lo(i[0], i[1], nu)).sum()
        });
        self.project2(&p).add(&hl)?.add(&self.sff.induced_metric().scale(0.5 * self.sff.mean_norm2()))
    }

    /// Residual of `W = W̄ − ½L̊∧L̊ − F∧h` in max norm.
    pub fn gauss_weyl_residual(&self) -> Result<f64> {
        let (_, f) = self.fialkow()?;
        let f = f.ok_or_else(|| Error::Dimension("Gauss–Weyl equation needs k ≥ 3".into()))?;
        let wbar = self.intrinsic()?.weyl()?;
        let h = self.sff.induced_metric();
        let rhs = wbar.sub(&self.sff.half_lo_wedge())?.sub(&kulkarni_nomizu(&f, &h)?)?;
        Ok(self.weyl_tangential()?.sub(&rhs)?.max_abs())
    }

    /// Intrinsic curvature of `j*g`.
    pub fn intrinsic_geometry(&self) -> Result<&PointGeometry> {
        self.intrinsic()
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::catalog;

    #[test]
    fn affine_plane_normals_are_coordinate_directions() {
        let imm = catalog::affine_plane(2, 4).unwrap();
        let f = imm.frame_at(&[0.2, -0.3]).unwrap();
        assert_eq!(f.normals, vec![vec![0.0, 0.0, 1.0, 0.0], vec![0.0, 0.0, 0.0, 1.0]]);
        let s = imm.second_fundamental_form(&[0.2, -0.3]).unwrap();
        assert_eq!(s.norm2(), 0.0);
    }

    #[test]
    fn equator_circle_normal_is_polar() {
        let imm = catalog::equator_sphere(1, 2, 1.0).unwrap();
        let f = imm.frame_at(&[1.0]).unwrap();
        assert!((f.normals[0][0] - 1.0).abs() < 1e-14 && f.normals[0][1].abs() < 1e-14);
        assert!(imm.second_fundamental_form(&[1.0]).unwrap().norm2() < 1e-24);
    }

    #[test]
    fn fialkow_of_surfaces_has_no_tensor() {
        let imm = catalog::clifford_torus().unwrap();
        let (g, f) = imm.fialkow(&[1.0, 2.0]).unwrap();
        assert!((g - 1.0).abs() < 1e-10);
        assert!(f.is_none());
    }
}

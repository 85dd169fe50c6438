//! Formal asymptotically minimal graphs in hyperbolic half-space.
//!
//! The target is `Hⁿ` with `g = ρ⁻²(dρ² + |dx|² + |du|²)` and the submanifold
//! is the graph `(ρ, x) ↦ (ρ, x, u(ρ, x))` over `ρ > 0`, `x ∈ ℝ^{k−1}`, with
//! `u = u₀(x) + Σ_{ℓ ≥ 2} u_ℓ(x) ρ^ℓ`. Frames follow the rescaled coordinate
//! fields `Z_A = ρ∂_A`, which are orthonormal for `g`, the tangent frame
//! `Y_a = Z_a + u^{α'}_{,a} Z_{α'}` and the unnormalized normal frame
//! `Y_{γ'} = Z_{γ'} − f^a_{γ'} Y_a`. All arithmetic is exact.
//!
//! Mean curvature is reported in the coordinate normalization
//! `kH_{γ'} = ρ⁻¹ h^{ab} L(Y_a, Y_b, Y_{γ'})`; minimality through the order
//! fixed by the recursion reads `kH = O(ρ^{k−1})`.
//!
//! Here `k` is the dimension of the graph, so its boundary has dimension
//! `k − 1`. The coefficient `u_{k+1}` is free. When `k − 1` is even the
//! `ρ^{k−1}` coefficient of `kH` cannot be cancelled by a power and forces a
//! term `ψ ρ^{k+1} log ρ`; `ψ` is the log coefficient.

use alloc::format;
use alloc::vec;
use alloc::vec::Vec;

use crate::combinatorics::factorial;
use crate::error::{Error, Result};
use crate::jets::{q, Jet, JetMatrix, Poly, Q};

/// Solver controls.
#[derive(Debug, Clone)]
pub struct ExpansionOptions {
    /// Jets are carried through `ρ^truncation`; defaults to `k + 3`.
    pub truncation: Option<usize>,
    /// Taylor degree in `x` used when a nonconstant coefficient is inverted.
    pub x_degree: i32,
    /// Value of the free coefficient `u_{k+1}`, one polynomial per normal direction.
    pub seed: Option<Vec<Poly>>,
}

impl Default for ExpansionOptions {
    fn default() -> Self {
        ExpansionOptions { truncation: None, x_degree: 8, seed: None }
    }
}

/// Boundary data and the solved expansion.
#[derive(Debug, Clone)]
pub struct GraphAnsatz {
    pub k: usize,
    pub n: usize,
    pub x_degree: i32,
    pub boundary: Vec<Poly>,
    /// One jet per normal direction.
    pub u: Vec<Jet>,
    /// Orders `ℓ` whose coefficients were determined by the recursion.
    pub determined: Vec<usize>,
    /// The coefficient of `ρ^{k+1}` (zero unless seeded).
    pub free_slot: Vec<Poly>,
    /// Forced coefficient of `ρ^{k+1} log ρ`; identically zero when `k` is even.
    pub log_coefficient: Vec<Poly>,
    /// `c_m ψ` with `m = k − 1` and `c_m = 2^{m/2−1}(m/2−1)!(m/2)!`; zero when `m` is odd.
    pub obstruction: Vec<Poly>,
}

impl GraphAnsatz {
    pub fn codim(&self) -> usize {
        self.n - self.k
    }

    /// The solved coefficient `u_ℓ` for each normal direction.
    pub fn coefficient(&self, l: usize) -> Vec<Poly> {
        self.u.iter().map(|j| j.coeff(l).clone()).collect()
    }
}

/// `c_m = 2^{m/2−1}(m/2−1)!(m/2)!` for even `m ≥ 2`.
pub fn obstruction_normalization(m: usize) -> Result<u64> {
    if m < 2 || m % 2 == 1 {
        return Err(Error::Parity(format!("the obstruction constant needs an even dimension ≥ 2, got {m}")));
    }
    let h = (m / 2) as u32;
    Ok((1u64 << (h - 1)) * factorial(h - 1) * factorial(h))
}

/// Frame data of a graph, all as jets in `ρ`.
#[derive(Debug, Clone)]
pub struct GraphGeometry {
    pub k: usize,
    pub codim: usize,
    /// `h_{ab} = g(Y_a, Y_b)`.
    pub h: JetMatrix,
    pub h_inv: JetMatrix,
    /// `f^a_{γ'}` at index `γ'·k + a`.
    pub f: Vec<Jet>,
    /// `L(Y_a, Y_b, Y_{γ'})` at index `(a·k + b)·codim + γ'`.
    pub l: Vec<Jet>,
    /// `G_{γ'δ'} = g(Y_{γ'}, Y_{δ'})`.
    pub normal_gram: JetMatrix,
    /// `h^{ab} L_{abγ'}`.
    pub trace_l: Vec<Jet>,
}

impl GraphGeometry {
    pub fn l(&self, a: usize, b: usize, g: usize) -> &Jet {
        &self.l[(a * self.k + b) * self.codim + g]
    }

    /// `kH_{γ'}` in the coordinate normalization.
    pub fn mean_curvature(&self) -> Result<Vec<Jet>> {
        self.trace_l.iter().map(|j| j.div_rho()).collect()
    }

    /// `|L|² = h^{ac} h^{bd} G^{γ'δ'} L_{abγ'} L_{cdδ'}`.
    pub fn l_norm2(&self, x_degree: i32) -> Result<Jet> {
        let (k, m) = (self.k, self.codim);
        let ginv = self.normal_gram.invert(x_degree)?;
        let mut raised = Vec::with_capacity(k * k * m);
        for c in 0..k {
            for d in 0..k {
                for g in 0..m {
                    let mut acc: Option<Jet> = None;
                    for a in 0..k {
                        for b in 0..k {
                            for e in 0..m {
                                let t = self.h_inv.get(a, c).mul(self.h_inv.get(b, d)).mul(ginv.get(e, g)).mul(self.l(a, b, e));
                                acc = Some(acc.map_or(t.clone(), |s| s.add(&t)));
                            }
                        }
                    }
                    raised.push(acc.expect("nonempty sum"));
                }
            }
        }
        let mut total: Option<Jet> = None;
        for (i, r) in raised.iter().enumerate() {
            let t = r.mul(&self.l[i]);
            total = Some(total.map_or(t.clone(), |s| s.add(&t)));
        }
        Ok(total.expect("nonempty sum"))
    }
}

/// `Γ^C_{AB} = δ_{AB}δ^C_0 − δ_{B0}δ^C_A` for `∇_{Z_A} Z_B = Γ^C_{AB} Z_C`.
fn gamma(c: usize, a: usize, b: usize) -> i64 {
    let mut v = 0;
    if a == b && c == 0 {
        v += 1;
    }
    if b == 0 && c == a {
        v -= 1;
    }
    v
}

fn sum_jets(terms: impl IntoIterator<Item = Jet>, nvars: usize, order: usize) -> Jet {
    terms.into_iter().fold(Jet::zero(nvars, order), |acc, t| acc.add(&t))
}

/// First derivatives `u^{γ'}_{,a}`: `a = 0` is `∂_ρ`, `a ≥ 1` is `∂_{x_a}`.
fn first_derivatives(u: &[Jet], k: usize) -> Vec<Vec<Jet>> {
    u.iter().map(|j| (0..k).map(|a| if a == 0 { j.diff_rho() } else { j.diff_x(a - 1) }).collect()).collect()
}

fn partial(j: &Jet, a: usize) -> Jet {
    if a == 0 {
        j.diff_rho()
    } else {
        j.diff_x(a - 1)
    }
}

/// Assembles induced metric, normal frame and second fundamental form.
pub fn graph_geometry(u: &[Jet], k: usize, x_degree: i32) -> Result<GraphGeometry> {
    if u.is_empty() {
        return Err(Error::Dimension("a graph needs at least one normal direction".into()));
    }
    let m = u.len();
    let n = k + m;
    let nv = u[0].nvars();
    if nv + 1 != k {
        return Err(Error::Shape(format!("boundary data has {nv} variables, expected k − 1 = {}", k - 1)));
    }
    let order = u.iter().map(|j| j.order()).min().unwrap_or(0);
    if order < 3 {
        return Err(Error::Degree("jets must be known through at least ρ³".into()));
    }
    let du = first_derivatives(u, k);
    // Z-frame components of Y_a.
    let comp = |a: usize, c: usize| -> Jet {
        if c < k {
            if a == c {
                Jet::one(nv, order)
            } else {
                Jet::zero(nv, order)
            }
        } else {
            du[c - k][a].clone()
        }
    };
    let mut h_entries = Vec::with_capacity(k * k);
    for a in 0..k {
        for b in 0..k {
            h_entries.push(sum_jets((0..n).map(|c| comp(a, c).mul(&comp(b, c))), nv, order));
        }
    }
    let h = JetMatrix::new(k, h_entries)?;
    let h_inv = h.invert(x_degree)?;
    // f^a_{γ'} = h^{ab} g(Z_{γ'}, Y_b) = h^{ab} u^{γ'}_{,b}.
    let mut f = Vec::with_capacity(m * k);
    for g in 0..m {
        for a in 0..k {
            f.push(sum_jets((0..k).map(|b| h_inv.get(a, b).mul(&du[g][b])), nv, order));
        }
    }
    // g̃_{Cγ'} = g(Z_C, Y_{γ'}) = δ_{C,γ'} − f^b_{γ'} g(Z_C, Y_b).
    let mut gt = Vec::with_capacity(n * m);
    for c in 0..n {
        for g in 0..m {
            let mut acc = if c == k + g { Jet::one(nv, order) } else { Jet::zero(nv, order) };
            for b in 0..k {
                acc = acc.sub(&f[g * k + b].mul(&comp(b, c)));
            }
            gt.push(acc);
        }
    }
    let gt_at = |c: usize, g: usize| &gt[c * m + g];
    let mut l = Vec::with_capacity(k * k * m);
    for a in 0..k {
        for b in 0..k {
            // Connection part: Γ^C_{ab} + u_{,b}Γ^C_{aβ'} + u_{,a}Γ^C_{α'b} + u_{,a}u_{,b}Γ^C_{α'β'}.
            let mut conn = Vec::with_capacity(n);
            for c in 0..n {
                let mut acc = Jet::zero(nv, order);
                for aa in 0..n {
                    for bb in 0..n {
                        let gm = gamma(c, aa, bb);
                        if gm == 0 {
                            continue;
                        }
                        let t = comp(a, aa).mul(&comp(b, bb));
                        if !t.is_zero() {
                            acc = acc.add(&t.scale(&q(gm)));
                        }
                    }
                }
                conn.push(acc);
            }
            for g in 0..m {
                let mut acc = sum_jets((0..n).map(|c| conn[c].mul(gt_at(c, g))), nv, order);
                for ap in 0..m {
                    let second = partial(&du[ap][b], a).mul_rho();
                    acc = acc.add(&second.mul(gt_at(k + ap, g)));
                }
                l.push(acc);
            }
        }
    }
    let mut gram = Vec::with_capacity(m * m);
    for g in 0..m {
        for e in 0..m {
            // Y_{δ'} is normal, so g(Y_{γ'}, Y_{δ'}) = g(Z_{γ'}, Y_{δ'}).
            gram.push(gt_at(k + g, e).clone());
        }
    }
    let normal_gram = JetMatrix::new(m, gram)?;
    let mut trace_l = Vec::with_capacity(m);
    for g in 0..m {
        let mut acc: Option<Jet> = None;
        for a in 0..k {
            for b in 0..k {
                let t = h_inv.get(a, b).mul(&l[(a * k + b) * m + g]);
                acc = Some(acc.map_or(t.clone(), |s| s.add(&t)));
            }
        }
        trace_l.push(acc.expect("k ≥ 1"));
    }
    Ok(GraphGeometry { k, codim: m, h, h_inv, f, l, normal_gram, trace_l })
}

/// `kH_{γ'}` of the ansatz in the coordinate normalization.
pub fn graph_mean_curvature_jet(ansatz: &GraphAnsatz) -> Result<Vec<Jet>> {
    graph_geometry(&ansatz.u, ansatz.k, ansatz.x_degree)?.mean_curvature()
}

/// Multiplies a normal-index vector of polynomials by `I + A Aᵀ`, `A_{γ'α} = ∂_α u₀^{γ'}`.
/// This inverts the leading linear coefficient `(I − A h₀⁻¹ Aᵀ)` of the recursion.
fn apply_leading_inverse(boundary: &[Poly], c: &[Poly]) -> Vec<Poly> {
    let m = boundary.len();
    let nv = boundary[0].nvars();
    let grads: Vec<Vec<Poly>> = boundary.iter().map(|p| (0..nv).map(|i| p.diff(i)).collect()).collect();
    (0..m)
        .map(|g| {
            let mut acc = c[g].clone();
            for e in 0..m {
                let mut aat = Poly::zero(nv);
                for i in 0..nv {
                    aat = aat.add(&grads[g][i].mul(&grads[e][i]));
                }
                acc = acc.add(&aat.mul(&c[e]));
            }
            acc
        })
        .collect()
}

/// Determines `u_ℓ` for `2 ≤ ℓ ≤ min(order, k)` by cancelling the `ρ^{ℓ−2}`
/// coefficient of `kH`, then extracts the log coefficient at the free order.
pub fn solve_minimal_expansion(u0: &[Poly], k: usize, n: usize, order: usize, opts: &ExpansionOptions) -> Result<GraphAnsatz> {
    if k < 2 || n <= k {
        return Err(Error::Dimension(format!("need 2 ≤ k < n, got k={k}, n={n}")));
    }
    if order > k + 1 {
        return Err(Error::Degree(format!("order {order} exceeds the free order k + 1 = {}", k + 1)));
    }
    let m = n - k;
    if u0.len() != m {
        return Err(Error::Shape(format!("{} boundary components for codimension {m}", u0.len())));
    }
    let nv = k - 1;
    if u0.iter().any(|p| p.nvars() != nv) {
        return Err(Error::Shape(format!("boundary components must be polynomials in {nv} variables")));
    }
    let truncation = opts.truncation.unwrap_or(k + 3).max(k + 2);
    let mut u: Vec<Jet> = u0.iter().map(|p| Jet::constant(p.clone(), truncation)).collect();
    let mut determined = Vec::new();
    for l in 2..=order.min(k) {
        let geo = graph_geometry(&u, k, opts.x_degree)?;
        let kh = geo.mean_curvature()?;
        let c: Vec<Poly> = kh.iter().map(|j| j.coeff(l - 2).clone()).collect();
        let factor = q((l * (l - 1)) as i64 - (l * k) as i64);
        let step: Vec<Poly> = apply_leading_inverse(u0, &c).into_iter().map(|p| p.scale(&(-factor.recip()))).collect();
        for (j, s) in u.iter_mut().zip(step) {
            j.set_coeff(l, s);
        }
        determined.push(l);
    }
    let free_slot = match &opts.seed {
        Some(seed) => {
            if seed.len() != m || seed.iter().any(|p| p.nvars() != nv) {
                return Err(Error::Shape("seed must have one polynomial per normal direction".into()));
            }
            for (j, s) in u.iter_mut().zip(seed) {
                j.set_coeff(k + 1, s.clone());
            }
            seed.clone()
        }
        None => vec![Poly::zero(nv); m],
    };
    let zero = vec![Poly::zero(nv); m];
    let (log_coefficient, obstruction) = if order.min(k) == k {
        let kh = graph_geometry(&u, k, opts.x_degree)?.mean_curvature()?;
        let c: Vec<Poly> = kh.iter().map(|j| j.coeff(k - 1).clone()).collect();
        if (k - 1) % 2 == 0 {
            let psi: Vec<Poly> = apply_leading_inverse(u0, &c).into_iter().map(|p| p.scale(&(-q((k + 1) as i64).recip()))).collect();
            let cm = Q::from_integer(obstruction_normalization(k - 1)?.into());
            let obs = psi.iter().map(|p| p.scale(&cm)).collect();
            (psi, obs)
        } else {
            if c.iter().any(|p| !p.is_zero()) {
                return Err(Error::Parity(format!("odd-order coefficient ρ^{} of H is nonzero", k - 1)));
            }
            (zero.clone(), zero)
        }
    } else {
        (zero.clone(), zero)
    };
    Ok(GraphAnsatz { k, n, x_degree: opts.x_degree, boundary: u0.to_vec(), u, determined, free_slot, log_coefficient, obstruction })
}

/// The graph with `u = ρ^{k+1} f` and no lower-order terms, carried through `ρ^truncation`.
pub fn seeded_graph(f: &[Poly], k: usize, truncation: usize) -> Result<GraphAnsatz> {
    let nv = k - 1;
    if truncation < k + 1 {
        return Err(Error::Degree("truncation must reach the seeded order".into()));
    }
    let u = f
        .iter()
        .map(|p| {
            let mut j = Jet::zero(nv, truncation);
            j.set_coeff(k + 1, p.clone());
            j
        })
        .collect();
    let zero = vec![Poly::zero(nv); f.len()];
    Ok(GraphAnsatz {
        k,
        n: k + f.len(),
        x_degree: 8,
        boundary: zero.clone(),
        u,
        determined: Vec::new(),
        free_slot: f.to_vec(),
        log_coefficient: zero.clone(),
        obstruction: zero,
    })
}

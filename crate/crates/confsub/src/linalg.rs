//! Thin wrappers over `nalgebra` for the small dense systems used here.

use alloc::format;
use alloc::vec::Vec;

use nalgebra::DMatrix;
#[allow(unused_imports)]
use num_traits::Float;

use crate::error::{Error, Result};

pub fn to_matrix(n: usize, m: usize, data: &[f64]) -> DMatrix<f64> {
    DMatrix::from_row_slice(n, m, data)
}

pub fn to_row_major(m: &DMatrix<f64>) -> Vec<f64> {
    let mut out = Vec::with_capacity(m.nrows() * m.ncols());
    for i in 0..m.nrows() {
        for j in 0..m.ncols() {
            out.push(m[(i, j)]);
        }
    }
    out
}

/// Inverse of a row-major `n×n` matrix; fails when the determinant of the
/// row-equilibrated matrix drops below `1e-14`.
pub fn inverse(n: usize, a: &[f64]) -> Result<Vec<f64>> {
    let m = to_matrix(n, n, a);
    let mut eq = m.clone();
    for i in 0..n {
        let r = eq.row(i).amax();
        if !(r > 0.0) || !r.is_finite() {
            return Err(Error::Singular(format!("row {i} is zero or not finite")));
        }
        for j in 0..n {
            eq[(i, j)] /= r;
        }
    }
    let det = eq.determinant();
    if !det.is_finite() || det.abs() <= 1e-14 {
        return Err(Error::Singular(format!("equilibrated determinant {det:e}")));
    }
    let inv = m.lu().try_inverse().ok_or(Error::Singular(format!("equilibrated determinant {det:e}")))?;
    Ok(to_row_major(&inv))
}

pub fn determinant(n: usize, a: &[f64]) -> f64 {
    to_matrix(n, n, a).determinant()
}

/// Singular values in decreasing order.
pub fn singular_values(rows: usize, cols: usize, a: &[f64]) -> Vec<f64> {
    let sv = to_matrix(rows, cols, a).singular_values();
    let mut v: Vec<f64> = sv.iter().copied().collect();
    v.sort_by(|x, y| y.partial_cmp(x).unwrap());
    v
}

/// Weighted least squares `min Σ w_i (A x − b)_i²` via SVD.
/// Returns the solution and the condition number of the weighted design matrix.
pub fn weighted_least_squares(
    rows: usize,
    cols: usize,
    a: &[f64],
    b: &[f64],
    w: &[f64],
) -> Result<(Vec<f64>, f64)> {
    let mut aw = to_matrix(rows, cols, a);
    let mut bw = nalgebra::DVector::from_column_slice(b);
    for i in 0..rows {
        let s = w[i].sqrt();
        for j in 0..cols {
            aw[(i, j)] *= s;
        }
        bw[i] *= s;
    }
    // Column equilibration keeps wildly different basis scales from hiding rank.
    let mut col_scale = Vec::with_capacity(cols);
    for j in 0..cols {
        let norm = aw.column(j).norm();
        if norm == 0.0 {
            return Err(Error::IllConditioned(f64::INFINITY));
        }
        col_scale.push(norm);
        for i in 0..rows {
            aw[(i, j)] /= norm;
        }
    }
    let svd = aw.svd(true, true);
    let smax = svd.singular_values.max();
    let smin = svd.singular_values.min();
    let cond = if smin > 0.0 { smax / smin } else { f64::INFINITY };
    if !cond.is_finite() || cond > 1e14 {
        return Err(Error::IllConditioned(cond));
    }
    let x = svd.solve(&bw, 0.0).map_err(|_| Error::IllConditioned(cond))?;
    let sol = (0..cols).map(|j| x[j] / col_scale[j]).collect();
    Ok((sol, cond))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn inverse_roundtrip() {
        let a = [4.0, 1.0, 0.0, 1.0, 3.0, 0.5, 0.0, 0.5, 2.0];
        let inv = inverse(3, &a).unwrap();
        let prod = to_matrix(3, 3, &a) * to_matrix(3, 3, &inv);
        assert!((prod - DMatrix::identity(3, 3)).amax() < 1e-14);
        assert!(matches!(inverse(2, &[1.0, 2.0, 2.0, 4.0]), Err(Error::Singular(_))));
    }

    #[test]
    fn least_squares_exact_fit() {
        let xs = [0.5, 1.0, 1.5, 2.0, 3.0];
        let a: Vec<f64> = xs.iter().flat_map(|&x| [1.0, x, x * x]).collect();
        let b: Vec<f64> = xs.iter().map(|&x| 2.0 - x + 0.5 * x * x).collect();
        let (sol, cond) = weighted_least_squares(5, 3, &a, &b, &[1.0; 5]).unwrap();
        assert!((sol[0] - 2.0).abs() < 1e-12 && (sol[1] + 1.0).abs() < 1e-12 && (sol[2] - 0.5).abs() < 1e-12);
        assert!(cond > 1.0);
    }
}

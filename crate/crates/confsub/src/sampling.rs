//! Deterministic sample points inside coordinate boxes.

use alloc::vec::Vec;

const PRIMES: [u32; 12] = [2, 3, 5, 7, 11, 13, 17, 19, 23, 29, 31, 37];

pub const DEFAULT_SAMPLES: usize = 64;

/// Radical inverse of `i` in base `b`.
fn radical_inverse(mut i: u64, b: u64) -> f64 {
    let inv = 1.0 / b as f64;
    let mut f = inv;
    let mut acc = 0.0;
    while i > 0 {
        acc += f * (i % b) as f64;
        i /= b;
        f *= inv;
    }
    acc
}

/// Halton points in `[0,1)^d`; `seed` offsets the sequence index.
pub fn halton(d: usize, count: usize, seed: u64) -> Vec<Vec<f64>> {
    assert!(d <= PRIMES.len(), "Halton sampling supports at most {} dimensions", PRIMES.len());
    (0..count as u64)
        .map(|i| (0..d).map(|j| radical_inverse(i + 1 + seed, PRIMES[j] as u64)).collect())
        .collect()
}

/// Maps unit-cube points into `bounds`, keeping `margin` (fraction of each side) away from the edges.
pub fn in_box(bounds: &[(f64, f64)], count: usize, seed: u64, margin: f64) -> Vec<Vec<f64>> {
    halton(bounds.len(), count, seed)
        .into_iter()
        .map(|u| {
            u.iter()
                .zip(bounds)
                .map(|(&s, &(lo, hi))| {
                    let w = hi - lo;
                    lo + w * (margin + (1.0 - 2.0 * margin) * s)
                })
                .collect()
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn halton_is_deterministic_and_inside() {
        let a = in_box(&[(0.0, 1.0), (-2.0, 2.0)], 64, 0, 0.05);
        let b = in_box(&[(0.0, 1.0), (-2.0, 2.0)], 64, 0, 0.05);
        assert_eq!(a, b);
        for p in &a {
            assert!(p[0] >= 0.05 && p[0] <= 0.95);
            assert!(p[1] >= -1.8 && p[1] <= 1.8);
        }
        assert_eq!(radical_inverse(1, 2), 0.5);
        assert_eq!(radical_inverse(3, 2), 0.75);
    }
}

//! Exact integer combinatorics.

use alloc::vec;
use alloc::vec::Vec;

/// `n!`, exact for `n ≤ 20`.
pub fn factorial(n: u32) -> u64 {
    (1..=n as u64).product()
}

/// `n!!` with `(−1)!! = 0!! = 1`. Panics for `n < −1`.
pub fn double_factorial(n: i64) -> i64 {
    assert!(n >= -1, "double factorial of {n}");
    let mut acc = 1i64;
    let mut m = n;
    while m > 1 {
        acc *= m;
        m -= 2;
    }
    acc
}

pub fn binomial(n: u64, k: u64) -> u64 {
    if k > n {
        return 0;
    }
    let k = k.min(n - k);
    let mut acc = 1u64;
    for i in 0..k {
        acc = acc * (n - i) / (i + 1);
    }
    acc
}

/// All permutations of `0..k` with their signs, in lexicographic order.
pub fn permutations_with_sign(k: usize) -> Vec<(Vec<usize>, i8)> {
    let mut out = Vec::new();
    let mut current: Vec<usize> = (0..k).collect();
    loop {
        out.push((current.clone(), sign_of(&current)));
        if !next_permutation(&mut current) {
            break;
        }
    }
    out
}

fn sign_of(p: &[usize]) -> i8 {
    let mut seen = vec![false; p.len()];
    let mut sign = 1i8;
    for start in 0..p.len() {
        if seen[start] {
            continue;
        }
        let mut len = 0;
        let mut i = start;
        while !seen[i] {
            seen[i] = true;
            i = p[i];
            len += 1;
        }
        if len % 2 == 0 {
            sign = -sign;
        }
    }
    sign
}

fn next_permutation(p: &mut [usize]) -> bool {
    if p.len() < 2 {
        return false;
    }
    let mut i = p.len() - 1;
    while i > 0 && p[i - 1] >= p[i] {
        i -= 1;
    }
    if i == 0 {
        return false;
    }
    let mut j = p.len() - 1;
    while p[j] <= p[i - 1] {
        j -= 1;
    }
    p.swap(i - 1, j);
    p[i..].reverse();
    true
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn small_values() {
        assert_eq!(factorial(0), 1);
        assert_eq!(factorial(5), 120);
        assert_eq!(double_factorial(-1), 1);
        assert_eq!(double_factorial(0), 1);
        assert_eq!(double_factorial(3), 3);
        assert_eq!(double_factorial(7), 105);
        assert_eq!(double_factorial(6), 48);
        assert_eq!(binomial(4, 2), 6);
        assert_eq!(binomial(2, 3), 0);
    }

    #[test]
    fn permutation_signs_sum_to_zero() {
        for k in 0..=5 {
            let perms = permutations_with_sign(k);
            assert_eq!(perms.len() as u64, factorial(k as u32));
            let total: i64 = perms.iter().map(|(_, s)| *s as i64).sum();
            assert_eq!(total, if k < 2 { 1 } else { 0 });
        }
        let perms = permutations_with_sign(3);
        assert_eq!(perms[1], (vec![0, 2, 1], -1));
    }
}

//! Deterministic summation.
//!
//! Every reduction over particles goes through a fixed binary tree whose
//! shape depends only on the length of the input, so results are bit-identical
//! across runs and worker counts.

const LEAF: usize = 8;

/// Pairwise (tree) sum of a slice.
pub fn pairwise_sum(values: &[f64]) -> f64 {
    if values.len() <= LEAF {
        let mut acc = 0.0;
        for &v in values {
            acc += v;
        }
        return acc;
    }
    let mid = values.len() / 2;
    pairwise_sum(&values[..mid]) + pairwise_sum(&values[mid..])
}

/// Pairwise sum of `f(i)` for `i` in `0..n` without materializing the terms.
pub fn pairwise_sum_by<F: Fn(usize) -> f64>(n: usize, f: F) -> f64 {
    fn rec<F: Fn(usize) -> f64>(lo: usize, hi: usize, f: &F) -> f64 {
        if hi - lo <= LEAF {
            let mut acc = 0.0;
            for i in lo..hi {
                acc += f(i);
            }
            return acc;
        }
        let mid = lo + (hi - lo) / 2;
        rec(lo, mid, f) + rec(mid, hi, f)
    }
    rec(0, n, &f)
}

/// Component-wise pairwise sum of fixed-size vectors.
pub fn pairwise_sum_vec<const D: usize, F: Fn(usize) -> [f64; D]>(n: usize, f: F) -> [f64; D] {
    fn rec<const D: usize, F: Fn(usize) -> [f64; D]>(lo: usize, hi: usize, f: &F) -> [f64; D] {
        if hi - lo <= LEAF {
            let mut acc = [0.0; D];
            for i in lo..hi {
                let term = f(i);
                for k in 0..D {
                    acc[k] += term[k];
                }
            }
            return acc;
        }
        let mid = lo + (hi - lo) / 2;
        let a = rec(lo, mid, f);
        let b = rec(mid, hi, f);
        let mut out = [0.0; D];
        for k in 0..D {
            out[k] = a[k] + b[k];
        }
        out
    }
    rec(0, n, &f)
}

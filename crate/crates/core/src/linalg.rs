//! Small dense kernels for symmetric positive definite systems.
//!
//! Matrices are row-major `Vec<f64>` of side `p`. The sizes involved are tiny
//! (p <= a few hundred) and the same factorization is reused for solving, for
//! standard errors and for correlations, so the kernels stay local.

use crate::error::{Error, Result};

/// Column pivots below this fraction of the original diagonal count as zero.
const RELATIVE_PIVOT_TOL: f64 = 1e-11;

/// `X' diag(w) X` for row-major `x` with `p` columns. `w = None` means unit weights.
pub fn weighted_gram(x: &[f64], p: usize, w: Option<&[f64]>) -> Vec<f64> {
    let mut g = vec![0.0; p * p];
    for (i, row) in x.chunks_exact(p).enumerate() {
        let wi = w.map_or(1.0, |w| w[i]);
        if wi == 0.0 {
            continue;
        }
        for j in 0..p {
            let a = wi * row[j];
            let gj = &mut g[j * p..j * p + p];
            for k in j..p {
                gj[k] += a * row[k];
            }
        }
    }
    for j in 0..p {
        for k in 0..j {
            g[j * p + k] = g[k * p + j];
        }
    }
    g
}

/// `X' (w .* v)`.
pub fn weighted_xtv(x: &[f64], p: usize, w: Option<&[f64]>, v: &[f64]) -> Vec<f64> {
    let mut out = vec![0.0; p];
    for (i, row) in x.chunks_exact(p).enumerate() {
        let a = w.map_or(1.0, |w| w[i]) * v[i];
        if a == 0.0 {
            continue;
        }
        for (o, &r) in out.iter_mut().zip(row) {
            *o += a * r;
        }
    }
    out
}

/// Lower Cholesky factor `L` with `A = L L'`. Only the lower triangle of `a` is read.
pub fn cholesky(a: &[f64], p: usize) -> Result<Vec<f64>> {
    let mut l = vec![0.0; p * p];
    for j in 0..p {
        let diag0 = a[j * p + j];
        let mut d = diag0;
        for k in 0..j {
            d -= l[j * p + k] * l[j * p + k];
        }
        if !(d > RELATIVE_PIVOT_TOL * diag0) || !d.is_finite() {
            return Err(Error::RankDeficient { column: j, pivot: d });
        }
        let djj = d.sqrt();
        l[j * p + j] = djj;
        for i in j + 1..p {
            let mut s = a[i * p + j];
            for k in 0..j {
                s -= l[i * p + k] * l[j * p + k];
            }
            l[i * p + j] = s / djj;
        }
    }
    Ok(l)
}

/// Solve `L L' x = b` in place.
pub fn cholesky_solve(l: &[f64], p: usize, b: &mut [f64]) {
    for i in 0..p {
        let mut s = b[i];
        for k in 0..i {
            s -= l[i * p + k] * b[k];
        }
        b[i] = s / l[i * p + i];
    }
    for i in (0..p).rev() {
        let mut s = b[i];
        for k in i + 1..p {
            s -= l[k * p + i] * b[k];
        }
        b[i] = s / l[i * p + i];
    }
}

/// Inverse of a lower-triangular matrix (itself lower triangular).
pub fn lower_inverse(l: &[f64], p: usize) -> Vec<f64> {
    let mut inv = vec![0.0; p * p];
    for j in 0..p {
        inv[j * p + j] = 1.0 / l[j * p + j];
        for i in j + 1..p {
            let mut s = 0.0;
            for k in j..i {
                s -= l[i * p + k] * inv[k * p + j];
            }
            inv[i * p + j] = s / l[i * p + i];
        }
    }
    inv
}

/// `R' R` for a lower-triangular `r` (used for `A^{-1} = L^{-T} L^{-1}`).
pub fn lower_transpose_times_self(r: &[f64], p: usize) -> Vec<f64> {
    let mut out = vec![0.0; p * p];
    for i in 0..p {
        for j in 0..=i {
            let mut s = 0.0;
            for k in i..p {
                s += r[k * p + i] * r[k * p + j];
            }
            out[i * p + j] = s;
            out[j * p + i] = s;
        }
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn factor_and_solve() {
        let a = [4.0, 2.0, 0.6, 2.0, 5.0, 1.0, 0.6, 1.0, 3.0];
        let l = cholesky(&a, 3).unwrap();
        let mut b = [1.0, 2.0, 3.0];
        cholesky_solve(&l, 3, &mut b);
        for i in 0..3 {
            let r: f64 = (0..3).map(|k| a[i * 3 + k] * b[k]).sum();
            assert!((r - [1.0, 2.0, 3.0][i]).abs() < 1e-12);
        }
        let inv = lower_transpose_times_self(&lower_inverse(&l, 3), 3);
        for i in 0..3 {
            for j in 0..3 {
                let e: f64 = (0..3).map(|k| a[i * 3 + k] * inv[k * 3 + j]).sum();
                assert!((e - if i == j { 1.0 } else { 0.0 }).abs() < 1e-12);
            }
        }
    }

    #[test]
    fn singular_is_rank_deficient() {
        // second column is twice the first
        let x = [1.0, 2.0, 2.0, 4.0, 3.0, 6.0];
        let g = weighted_gram(&x, 2, None);
        assert!(matches!(cholesky(&g, 2), Err(Error::RankDeficient { column: 1, .. })));
        let zero = [0.0; 4];
        assert!(cholesky(&zero, 2).is_err());
    }

    #[test]
    fn weights_match_row_duplication() {
        let x = [1.0, 0.5, 1.0, -1.0, 1.0, 2.0];
        let dup = [1.0, 0.5, 1.0, -1.0, 1.0, -1.0, 1.0, 2.0];
        let w = [1.0, 2.0, 1.0];
        assert_eq!(weighted_gram(&x, 2, Some(&w)), weighted_gram(&dup, 2, None));
    }
}

//! Independent solvers for OLS and logistic maximum likelihood.
//!
//! OLS: the normal equations solved exactly in rational arithmetic. Logistic:
//! damped Newton with its own Hessian, partial-pivoting elimination and a
//! backtracking line search on the log-likelihood.

use invset_core::regression::{sigmoid, DesignMatrix};
use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::{ToPrimitive, Zero};
use rand::Rng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};

pub fn normal(rng: &mut ChaCha8Rng) -> f64 {
    StandardNormal.sample(rng)
}

pub fn design(n: usize, p: usize, rng: &mut ChaCha8Rng) -> DesignMatrix {
    let mut data = Vec::with_capacity(n * p);
    for _ in 0..n {
        data.push(1.0);
        for _ in 1..p {
            data.push(normal(rng));
        }
    }
    DesignMatrix::new(n, p, data, (0..p).map(|j| format!("x{j}")).collect()).unwrap()
}

pub fn rat(v: f64) -> BigRational {
    BigRational::from_float(v).unwrap()
}

/// Solve `A x = b` exactly by Gauss-Jordan elimination.
pub fn solve_exact(mut a: Vec<Vec<BigRational>>, mut b: Vec<BigRational>) -> Vec<BigRational> {
    let p = b.len();
    for col in 0..p {
        let piv = (col..p).find(|&r| !a[r][col].is_zero()).expect("singular");
        a.swap(col, piv);
        b.swap(col, piv);
        for r in 0..p {
            if r != col && !a[r][col].is_zero() {
                let f = &a[r][col] / &a[col][col];
                for k in col..p {
                    let t = &f * &a[col][k];
                    a[r][k] -= t;
                }
                let t = &f * &b[col];
                b[r] -= t;
            }
        }
    }
    (0..p).map(|i| &b[i] / &a[i][i]).collect()
}

pub fn exact_normal_equations(x: &DesignMatrix, y: &[f64]) -> (Vec<f64>, Vec<Vec<BigRational>>) {
    let (n, p) = (x.rows(), x.cols());
    let xr: Vec<Vec<BigRational>> = (0..n).map(|i| x.row(i).iter().map(|&v| rat(v)).collect()).collect();
    let mut g = vec![vec![BigRational::zero(); p]; p];
    let mut xty = vec![BigRational::zero(); p];
    for i in 0..n {
        let yi = rat(y[i]);
        for j in 0..p {
            xty[j] += &xr[i][j] * &yi;
            for k in 0..p {
                g[j][k] += &xr[i][j] * &xr[i][k];
            }
        }
    }
    let beta = solve_exact(g.clone(), xty);
    (beta.iter().map(|b| b.to_f64().unwrap()).collect(), g)
}

pub fn max_rel_err(a: &[f64], b: &[f64]) -> f64 {
    let scale = b.iter().fold(0.0f64, |m, v| m.max(v.abs())).max(1e-300);
    a.iter().zip(b).fold(0.0f64, |m, (x, y)| m.max((x - y).abs())) / scale
}

pub fn loglik(x: &DesignMatrix, y: &[f64], beta: &[f64]) -> f64 {
    (0..x.rows())
        .map(|i| {
            let eta: f64 = x.row(i).iter().zip(beta).map(|(a, b)| a * b).sum();
            // log(1 + e^eta) computed stably
            let softplus = if eta > 0.0 { eta + (-eta).exp().ln_1p() } else { eta.exp().ln_1p() };
            y[i] * eta - softplus
        })
        .sum()
}

/// Solve `a x = b` by Gaussian elimination with partial pivoting.
pub fn gauss(mut a: Vec<Vec<f64>>, mut b: Vec<f64>) -> Vec<f64> {
    let p = b.len();
    for c in 0..p {
        let piv = (c..p).max_by(|&i, &j| a[i][c].abs().total_cmp(&a[j][c].abs())).unwrap();
        a.swap(c, piv);
        b.swap(c, piv);
        for r in c + 1..p {
            let f = a[r][c] / a[c][c];
            for k in c..p {
                a[r][k] -= f * a[c][k];
            }
            b[r] -= f * b[c];
        }
    }
    let mut x = vec![0.0; p];
    for r in (0..p).rev() {
        let s: f64 = (r + 1..p).map(|k| a[r][k] * x[k]).sum();
        x[r] = (b[r] - s) / a[r][r];
    }
    x
}

/// Damped Newton on the log-likelihood. Returns `beta` and the information matrix.
pub fn newton_oracle(x: &DesignMatrix, y: &[f64]) -> (Vec<f64>, Vec<Vec<f64>>) {
    let (n, p) = (x.rows(), x.cols());
    let mut beta = vec![0.0; p];
    for _ in 0..200 {
        let mut grad = vec![0.0; p];
        let mut info = vec![vec![0.0; p]; p];
        for i in 0..n {
            let r = x.row(i);
            let eta: f64 = r.iter().zip(&beta).map(|(a, b)| a * b).sum();
            let mu = 1.0 / (1.0 + (-eta).exp());
            for j in 0..p {
                grad[j] += (y[i] - mu) * r[j];
                for k in 0..p {
                    info[j][k] += mu * (1.0 - mu) * r[j] * r[k];
                }
            }
        }
        let step = gauss(info.clone(), grad.clone());
        let bmax = beta.iter().fold(1.0f64, |m, b| m.max(b.abs()));
        if step.iter().all(|s| s.abs() < 1e-13 * bmax) {
            return (beta, info);
        }
        let slope: f64 = step.iter().zip(&grad).map(|(a, b)| a * b).sum();
        let base = loglik(x, y, &beta);
        let mut t = 1.0;
        // close to the optimum the likelihood is flat to rounding; take the full step
        let local = step.iter().all(|s| s.abs() < 1e-6 * bmax);
        while !local {
            let trial: Vec<f64> = beta.iter().zip(&step).map(|(b, s)| b + t * s).collect();
            if loglik(x, y, &trial) >= base + 1e-4 * t * slope || t < 1e-12 {
                beta = trial;
                break;
            }
            t /= 2.0;
        }
        if local {
            beta.iter_mut().zip(&step).for_each(|(b, s)| *b += s);
        }
    }
    panic!("oracle did not converge: {beta:?}");
}

/// Gaussian design with an intercept and a continuous response.
pub fn ols_instance(rng: &mut ChaCha8Rng) -> (DesignMatrix, Vec<f64>) {
    let p = rng.random_range(1..=6);
    let n = rng.random_range(p + 2..=40);
    let x = design(n, p, rng);
    let y = (0..n).map(|_| 3.0 * normal(rng) + 1.0).collect();
    (x, y)
}

/// Logistic data from a random coefficient vector; never constant in `y`.
pub fn logistic_instance(rng: &mut ChaCha8Rng) -> (DesignMatrix, Vec<f64>) {
    loop {
        let p = rng.random_range(1..=5);
        let n = rng.random_range(60..=200);
        let x = design(n, p, rng);
        let truth: Vec<f64> = (0..p).map(|_| 0.8 * normal(rng)).collect();
        let y: Vec<f64> = (0..n)
            .map(|i| {
                let eta: f64 = x.row(i).iter().zip(&truth).map(|(a, b)| a * b).sum();
                f64::from(u8::from(rng.random::<f64>() < sigmoid(eta)))
            })
            .collect();
        if y.iter().any(|&v| v != y[0]) {
            return (x, y);
        }
    }
}

/// Column `j` of the inverse of `a`.
pub fn inverse_column(a: &[Vec<f64>], j: usize) -> Vec<f64> {
    let e: Vec<f64> = (0..a.len()).map(|k| f64::from(u8::from(k == j))).collect();
    gauss(a.to_vec(), e)
}

/// Column `j` of the inverse of an exact matrix.
pub fn exact_inverse_column(a: &[Vec<BigRational>], j: usize) -> Vec<f64> {
    let e: Vec<BigRational> = (0..a.len())
        .map(|k| if k == j { BigRational::from_integer(BigInt::from(1)) } else { BigRational::zero() })
        .collect();
    solve_exact(a.to_vec(), e).iter().map(|v| v.to_f64().unwrap()).collect()
}

//! Least squares and logistic regression, and standard errors of linear
//! functionals of the fitted coefficients.
//!
//! A fit keeps a lower-triangular root `F` of its coefficient covariance
//! (`cov = F' F`), so the standard error of `x' beta` is `|F x|` and the
//! correlation of two such functionals is the cosine between `F x_i` and
//! `F x_j`.

use std::sync::Arc;

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::domain::{Domain, Field};
use crate::error::{Error, Result};
use crate::linalg;

/// IRLS iteration cap.
pub const MAX_IRLS_ITERATIONS: usize = 100;
/// Convergence requires `max |score| <` this ...
pub const SCORE_TOL: f64 = 1e-8;
/// ... and a Newton step below this fraction of `max |beta|`.
pub const STEP_TOL: f64 = 1e-10;
/// A fit that has not converged with coefficients larger than this on the
/// standardized-covariate scale is reported as separated.
pub const SEPARATION_BOUND: f64 = 30.0;
/// Iterates past this bound are taken as diverging and stop the fit early.
pub const DIVERGENCE_BOUND: f64 = 100.0;

#[derive(Debug, Clone, PartialEq)]
pub struct DesignMatrix {
    rows: usize,
    cols: usize,
    data: Vec<f64>,
    labels: Vec<String>,
}

impl DesignMatrix {
    /// Row-major `rows x cols` matrix with one label per column.
    pub fn new(rows: usize, cols: usize, data: Vec<f64>, labels: Vec<String>) -> Result<Self> {
        if cols == 0 || rows == 0 {
            return Err(Error::InvalidDesign("design matrix has no rows or no columns".into()));
        }
        if data.len() != rows * cols {
            return Err(Error::InvalidDesign(format!(
                "{} entries for a {rows} x {cols} matrix",
                data.len()
            )));
        }
        if labels.len() != cols {
            return Err(Error::InvalidDesign(format!("{} labels for {cols} columns", labels.len())));
        }
        if let Some(i) = data.iter().position(|v| !v.is_finite()) {
            return Err(Error::InvalidDesign(format!(
                "non-finite entry at row {}, column {}",
                i / cols,
                i % cols
            )));
        }
        Ok(Self { rows, cols, data, labels })
    }

    pub fn from_rows(rows: &[Vec<f64>], labels: Vec<String>) -> Result<Self> {
        let cols = labels.len();
        if let Some(i) = rows.iter().position(|r| r.len() != cols) {
            return Err(Error::InvalidDesign(format!("row {i} has the wrong length")));
        }
        Self::new(rows.len(), cols, rows.concat(), labels)
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn data(&self) -> &[f64] {
        &self.data
    }

    pub fn labels(&self) -> &[String] {
        &self.labels
    }

    pub fn row(&self, i: usize) -> &[f64] {
        &self.data[i * self.cols..(i + 1) * self.cols]
    }

    pub fn column(&self, j: usize) -> Vec<f64> {
        self.data.iter().skip(j).step_by(self.cols).copied().collect()
    }

    /// Per-column scale used for the separation check: the standard deviation,
    /// or the absolute value for a constant column.
    pub fn column_scales(&self) -> Vec<f64> {
        let n = self.rows as f64;
        (0..self.cols)
            .map(|j| {
                let col = self.column(j);
                let mean = col.iter().sum::<f64>() / n;
                let var = col.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / n;
                if var > 0.0 {
                    var.sqrt()
                } else {
                    mean.abs()
                }
            })
            .collect()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Model {
    Linear,
    Logistic,
}

#[derive(Debug, Clone)]
pub struct CoefFit {
    pub beta: Vec<f64>,
    /// Row-major `p x p` covariance of `beta`.
    pub cov: Vec<f64>,
    /// Residual variance `RSS / (n - p)`; linear fits only.
    pub sigma2: Option<f64>,
    pub model: Model,
    pub converged: bool,
    pub iterations: usize,
    pub labels: Vec<String>,
    root: Vec<f64>,
}

impl CoefFit {
    pub fn p(&self) -> usize {
        self.beta.len()
    }

    /// Lower-triangular `F` with `cov = F' F`.
    pub fn cov_root(&self) -> &[f64] {
        &self.root
    }

    pub fn std_errors(&self) -> Vec<f64> {
        let p = self.p();
        (0..p).map(|j| self.cov[j * p + j].sqrt()).collect()
    }
}

/// Minimal fit used inside bootstrap loops: `beta` and the covariance root.
#[derive(Debug, Clone)]
pub(crate) struct RawFit {
    pub beta: Vec<f64>,
    pub root: Vec<f64>,
    pub sigma2: Option<f64>,
    pub iterations: usize,
}

impl RawFit {
    fn into_fit(self, model: Model, labels: Vec<String>) -> CoefFit {
        let p = self.beta.len();
        let cov = linalg::lower_transpose_times_self(&self.root, p);
        CoefFit {
            beta: self.beta,
            cov,
            sigma2: self.sigma2,
            model,
            converged: true,
            iterations: self.iterations,
            labels,
            root: self.root,
        }
    }
}

fn check_response(x: &DesignMatrix, y: &[f64]) -> Result<()> {
    if y.len() != x.rows {
        return Err(Error::InvalidDesign(format!(
            "{} responses for {} design rows",
            y.len(),
            x.rows
        )));
    }
    if y.iter().any(|v| !v.is_finite()) {
        return Err(Error::InvalidDesign("non-finite response".into()));
    }
    if x.rows <= x.cols {
        return Err(Error::InvalidDesign(format!(
            "need more rows than columns (n = {}, p = {})",
            x.rows, x.cols
        )));
    }
    Ok(())
}

/// Ordinary least squares via the normal equations.
pub fn ols_fit(x: &DesignMatrix, y: &[f64]) -> Result<CoefFit> {
    check_response(x, y)?;
    Ok(ols_raw(x, y, None)?.into_fit(Model::Linear, x.labels.clone()))
}

/// Logistic regression by iteratively reweighted least squares.
pub fn logistic_fit(x: &DesignMatrix, y: &[f64]) -> Result<CoefFit> {
    check_response(x, y)?;
    if let Some(i) = y.iter().position(|&v| v != 0.0 && v != 1.0) {
        return Err(Error::InvalidDesign(format!("response {} at row {i} is not 0/1", y[i])));
    }
    let scales = x.column_scales();
    Ok(logistic_raw(x, y, None, &scales)?.into_fit(Model::Logistic, x.labels.clone()))
}

pub fn fit(model: Model, x: &DesignMatrix, y: &[f64]) -> Result<CoefFit> {
    match model {
        Model::Linear => ols_fit(x, y),
        Model::Logistic => logistic_fit(x, y),
    }
}

/// Weighted OLS; integer weights reproduce a resample with repeated rows.
pub(crate) fn ols_raw(x: &DesignMatrix, y: &[f64], w: Option<&[f64]>) -> Result<RawFit> {
    let p = x.cols;
    let n: f64 = w.map_or(x.rows as f64, |w| w.iter().sum());
    if n <= p as f64 {
        return Err(Error::InvalidDesign(format!("need more than {p} observations, have {n}")));
    }
    let gram = linalg::weighted_gram(&x.data, p, w);
    let l = linalg::cholesky(&gram, p)?;
    let mut beta = linalg::weighted_xtv(&x.data, p, w, y);
    linalg::cholesky_solve(&l, p, &mut beta);
    let mut rss = 0.0;
    for (i, row) in x.data.chunks_exact(p).enumerate() {
        let wi = w.map_or(1.0, |w| w[i]);
        if wi != 0.0 {
            let r = y[i] - dot(row, &beta);
            rss += wi * r * r;
        }
    }
    let sigma2 = rss / (n - p as f64);
    let mut root = linalg::lower_inverse(&l, p);
    let s = sigma2.sqrt();
    root.iter_mut().for_each(|v| *v *= s);
    Ok(RawFit { beta, root, sigma2: Some(sigma2), iterations: 1 })
}

pub(crate) fn logistic_raw(
    x: &DesignMatrix,
    y: &[f64],
    w: Option<&[f64]>,
    scales: &[f64],
) -> Result<RawFit> {
    let p = x.cols;
    let n = x.rows;
    // a rank-deficient design cannot be rescued by any weights
    linalg::cholesky(&linalg::weighted_gram(&x.data, p, w), p)?;

    let mut beta = vec![0.0; p];
    let mut eta = vec![0.0; n];
    let mut work_w = vec![0.0; n];
    let mut resid = vec![0.0; n];
    let mut ll = log_likelihood(&x.data, p, y, w, &beta, &mut eta);
    for iteration in 1..=MAX_IRLS_ITERATIONS {
        // eta holds X beta here
        for i in 0..n {
            let wi = w.map_or(1.0, |w| w[i]);
            let pi = sigmoid(eta[i]);
            work_w[i] = wi * pi * (1.0 - pi);
            resid[i] = wi * (y[i] - pi);
        }
        let score = linalg::weighted_xtv(&x.data, p, None, &resid);
        let info = linalg::weighted_gram(&x.data, p, Some(&work_w));
        let l = linalg::cholesky(&info, p).map_err(|e| separation_or(e, &beta, scales))?;
        // IRLS update: beta_new = (X'WX)^{-1} X'W z with z = eta + W^{-1}(y - p),
        // written as X'WX beta + score to avoid dividing by vanishing weights
        let mut next: Vec<f64> = (0..p)
            .map(|j| dot(&info[j * p..j * p + p], &beta) + score[j])
            .collect();
        linalg::cholesky_solve(&l, p, &mut next);

        let max_score = score.iter().fold(0.0f64, |m, v| m.max(v.abs()));
        let max_beta = beta.iter().fold(0.0f64, |m, v| m.max(v.abs()));
        let max_step = next.iter().zip(&beta).fold(0.0f64, |m, (a, b)| m.max((a - b).abs()));
        if max_score < SCORE_TOL && max_step <= STEP_TOL * max_beta.max(1.0) {
            let mut root = linalg::lower_inverse(&l, p);
            root.shrink_to_fit();
            return Ok(RawFit { beta, root, sigma2: None, iterations: iteration });
        }

        // step halving keeps the likelihood from decreasing
        let mut step = 1.0;
        let mut candidate = next.clone();
        let mut cand_ll = log_likelihood(&x.data, p, y, w, &candidate, &mut eta);
        while cand_ll < ll - 1e-12 * ll.abs().max(1.0) && step > 1e-6 {
            step *= 0.5;
            for j in 0..p {
                candidate[j] = beta[j] + step * (next[j] - beta[j]);
            }
            cand_ll = log_likelihood(&x.data, p, y, w, &candidate, &mut eta);
        }
        beta = candidate;
        ll = cand_ll;
        // iterates may pass the bound on the way to a finite estimate
        check_separation(&beta, scales, DIVERGENCE_BOUND)?;
    }
    check_separation(&beta, scales, SEPARATION_BOUND)?;
    Err(Error::NotConverged { iterations: MAX_IRLS_ITERATIONS })
}

fn separation_or(err: Error, beta: &[f64], scales: &[f64]) -> Error {
    if beta.iter().any(|&b| b != 0.0) {
        Error::Separation { max_abs_beta: standardized_max(beta, scales) }
    } else {
        err
    }
}

fn standardized_max(beta: &[f64], scales: &[f64]) -> f64 {
    beta.iter().zip(scales).fold(0.0f64, |m, (b, s)| m.max((b * s).abs()))
}

fn check_separation(beta: &[f64], scales: &[f64], bound: f64) -> Result<()> {
    let m = standardized_max(beta, scales);
    if m > bound {
        Err(Error::Separation { max_abs_beta: m })
    } else {
        Ok(())
    }
}

/// Fills `eta = X beta` and returns the Bernoulli log-likelihood.
fn log_likelihood(x: &[f64], p: usize, y: &[f64], w: Option<&[f64]>, beta: &[f64], eta: &mut [f64]) -> f64 {
    let mut ll = 0.0;
    for (i, row) in x.chunks_exact(p).enumerate() {
        let e = dot(row, beta);
        eta[i] = e;
        let wi = w.map_or(1.0, |w| w[i]);
        if wi != 0.0 {
            ll += wi * (y[i] * e - softplus(e));
        }
    }
    ll
}

pub fn sigmoid(t: f64) -> f64 {
    if t >= 0.0 {
        1.0 / (1.0 + (-t).exp())
    } else {
        let e = t.exp();
        e / (1.0 + e)
    }
}

pub fn logit(p: f64) -> f64 {
    (p / (1.0 - p)).ln()
}

/// `ln(1 + e^t)` without overflow.
fn softplus(t: f64) -> f64 {
    if t > 0.0 {
        t + (-t).exp().ln_1p()
    } else {
        t.exp().ln_1p()
    }
}

#[inline]
pub(crate) fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

/// What a band is built over: rows of a test design, or the coefficients themselves.
#[derive(Debug, Clone)]
pub struct PredictionTarget {
    domain: Arc<Domain>,
    kind: TargetKind,
}

#[derive(Debug, Clone)]
enum TargetKind {
    /// `p` columns of the test design, each of length `m`.
    Design { columns: Vec<Vec<f64>> },
    Coefficients { p: usize },
}

impl PredictionTarget {
    /// Mean predictions `x_s' beta` at the rows of `xt`, one per domain point.
    pub fn design(domain: Arc<Domain>, xt: &DesignMatrix) -> Result<Self> {
        if xt.rows != domain.len() {
            return Err(Error::InvalidDesign(format!(
                "test design has {} rows but the domain has {} points",
                xt.rows,
                domain.len()
            )));
        }
        let columns = (0..xt.cols).map(|j| xt.column(j)).collect();
        Ok(Self { domain, kind: TargetKind::Design { columns } })
    }

    /// Mean predictions on a domain of row labels `row_0, row_1, ...`.
    pub fn design_rows(xt: &DesignMatrix) -> Result<Self> {
        let domain = Domain::labeled((0..xt.rows).map(|i| format!("row_{i}")))?;
        Self::design(Arc::new(domain), xt)
    }

    /// The coefficients themselves, on a domain of coefficient labels.
    pub fn coefficients<S: Into<String>>(labels: impl IntoIterator<Item = S>) -> Result<Self> {
        let domain = Domain::labeled(labels)?;
        let p = domain.len();
        Ok(Self { domain: Arc::new(domain), kind: TargetKind::Coefficients { p } })
    }

    pub fn domain(&self) -> &Arc<Domain> {
        &self.domain
    }

    pub fn len(&self) -> usize {
        self.domain.len()
    }

    pub fn is_empty(&self) -> bool {
        self.domain.is_empty()
    }

    /// Number of coefficients the target expects.
    pub fn p(&self) -> usize {
        match &self.kind {
            TargetKind::Design { columns } => columns.len(),
            TargetKind::Coefficients { p } => *p,
        }
    }

    /// True for mean predictions, false for the coefficient target.
    pub fn is_design(&self) -> bool {
        matches!(self.kind, TargetKind::Design { .. })
    }

    fn check_p(&self, p: usize) -> Result<()> {
        if self.p() == p {
            Ok(())
        } else {
            Err(Error::InvalidDesign(format!(
                "target expects {} coefficients, fit has {p}",
                self.p()
            )))
        }
    }

    pub(crate) fn mean_into(&self, beta: &[f64], out: &mut [f64]) {
        match &self.kind {
            TargetKind::Design { columns } => {
                out.fill(0.0);
                for (col, &b) in columns.iter().zip(beta) {
                    for (o, &x) in out.iter_mut().zip(col) {
                        *o += b * x;
                    }
                }
            }
            TargetKind::Coefficients { .. } => out.copy_from_slice(beta),
        }
    }

    /// `out[s] = |F x_s|`; `scratch` must have the target's length.
    pub(crate) fn sd_into(&self, root: &[f64], out: &mut [f64], scratch: &mut [f64]) {
        match &self.kind {
            TargetKind::Design { columns } => {
                let p = columns.len();
                out.fill(0.0);
                for k in 0..p {
                    scratch.fill(0.0);
                    for (j, col) in columns.iter().enumerate().take(k + 1) {
                        let f = root[k * p + j];
                        if f != 0.0 {
                            for (t, &x) in scratch.iter_mut().zip(col) {
                                *t += f * x;
                            }
                        }
                    }
                    for (o, &t) in out.iter_mut().zip(scratch.iter()) {
                        *o += t * t;
                    }
                }
                out.iter_mut().for_each(|v| *v = v.sqrt());
            }
            TargetKind::Coefficients { p } => {
                let p = *p;
                for (j, o) in out.iter_mut().enumerate() {
                    *o = (j..p).map(|k| root[k * p + j].powi(2)).sum::<f64>().sqrt();
                }
            }
        }
    }

    /// `F x_s` for every point, as `m` vectors of length `p`.
    fn projected(&self, root: &[f64]) -> Vec<Vec<f64>> {
        let p = self.p();
        (0..self.len())
            .map(|s| {
                (0..p)
                    .map(|k| match &self.kind {
                        TargetKind::Design { columns } => {
                            (0..=k).map(|j| root[k * p + j] * columns[j][s]).sum()
                        }
                        TargetKind::Coefficients { .. } => {
                            if k >= s {
                                root[k * p + s]
                            } else {
                                0.0
                            }
                        }
                    })
                    .collect()
            })
            .collect()
    }
}

/// Point estimate and standard error of a linear functional over a domain.
/// For logistic fits both are on the linear-predictor scale.
#[derive(Debug, Clone)]
pub struct PredictionField {
    pub mean: Field,
    pub sd: Field,
}

impl PredictionField {
    pub fn domain(&self) -> &Arc<Domain> {
        self.mean.domain()
    }
}

pub fn predict_with_sd(fit: &CoefFit, target: &PredictionTarget) -> Result<PredictionField> {
    target.check_p(fit.p())?;
    let m = target.len();
    let mut mean = vec![0.0; m];
    let mut sd = vec![0.0; m];
    let mut scratch = vec![0.0; m];
    target.mean_into(&fit.beta, &mut mean);
    target.sd_into(&fit.root, &mut sd, &mut scratch);
    if let Some(index) = sd.iter().position(|&v| !(v > 0.0)) {
        return Err(Error::DegenerateSe { index });
    }
    Ok(PredictionField {
        mean: Field::new(target.domain().clone(), mean)?,
        sd: Field::new(target.domain().clone(), sd)?,
    })
}

fn unit_projections(fit: &CoefFit, target: &PredictionTarget) -> Result<Vec<Vec<f64>>> {
    target.check_p(fit.p())?;
    let mut u = target.projected(&fit.root);
    for (s, v) in u.iter_mut().enumerate() {
        let norm = dot(v, v).sqrt();
        if !(norm > 0.0) {
            return Err(Error::DegenerateSe { index: s });
        }
        v.iter_mut().for_each(|x| *x /= norm);
    }
    Ok(u)
}

/// `cor(yhat_i, yhat_j)` for every pair `i < j`, in row-major pair order.
pub fn pairwise_prediction_correlations(fit: &CoefFit, target: &PredictionTarget) -> Result<Vec<f64>> {
    let u = unit_projections(fit, target)?;
    let mut out = Vec::with_capacity(u.len() * u.len().saturating_sub(1) / 2);
    for i in 0..u.len() {
        for j in i + 1..u.len() {
            out.push(dot(&u[i], &u[j]));
        }
    }
    Ok(out)
}

/// Correlations for `n_pairs` pairs `i != j` drawn uniformly with replacement.
pub fn sampled_prediction_correlations(
    fit: &CoefFit,
    target: &PredictionTarget,
    n_pairs: usize,
    rng: &mut impl Rng,
) -> Result<Vec<f64>> {
    let u = unit_projections(fit, target)?;
    let m = u.len();
    if m < 2 {
        return Ok(Vec::new());
    }
    Ok((0..n_pairs)
        .map(|_| {
            let i = rng.random_range(0..m);
            let mut j = rng.random_range(0..m - 1);
            if j >= i {
                j += 1;
            }
            dot(&u[i], &u[j])
        })
        .collect())
}

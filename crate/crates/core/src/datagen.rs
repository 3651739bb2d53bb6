//! Synthetic data for the simulation scenarios.
//!
//! A [`Generator`] holds everything that stays fixed across Monte Carlo
//! replications (domain, truth, noise loadings, test design, fixed
//! coefficients) and draws replication `r` from its own RNG stream.

use std::sync::Arc;

use rand::Rng;
use rand_distr::{Distribution, StandardNormal};
use serde::{Deserialize, Serialize};

use crate::domain::{Domain, Field, FunctionalSample};
use crate::error::{Error, Result};
use crate::regression::{logit, sigmoid, DesignMatrix, Model, PredictionTarget};
use crate::rng::{stream, Purpose};

/// Coefficients of the cubic two-covariate regression model.
pub const REGRESSION_BETA: [f64; 7] = [-1.0, 1.0, 0.5, -1.1, -0.5, 0.8, -1.1];

/// Bandwidth of the Gaussian kernels in the 2D noise model.
const KERNEL_BANDWIDTH: f64 = 0.06;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Scenario {
    Dense1d,
    Dense2d,
    RegressionLinear,
    RegressionLogistic,
    Coefficients,
}

impl Scenario {
    pub fn is_dense(self) -> bool {
        matches!(self, Scenario::Dense1d | Scenario::Dense2d)
    }

    /// Regression model fitted in this scenario, if any.
    pub fn model(self) -> Option<Model> {
        match self {
            Scenario::RegressionLinear | Scenario::Coefficients => Some(Model::Linear),
            Scenario::RegressionLogistic => Some(Model::Logistic),
            _ => None,
        }
    }

    fn default_grid(self) -> (usize, f64, f64) {
        match self {
            Scenario::Dense1d => (200, 0.0, 1.0),
            Scenario::Dense2d => (50, 0.0, 1.0),
            _ => (100, -1.0, 1.0),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct GenSpec {
    pub scenario: Scenario,
    /// Sample size: sample paths for dense scenarios, training rows otherwise.
    pub n: usize,
    /// Points per grid dimension. Scenario default when absent.
    pub grid_points: Option<usize>,
    pub grid_lo: Option<f64>,
    pub grid_hi: Option<f64>,
    /// Fixed spacing of a grid centered on 0; overrides `grid_lo`/`grid_hi`.
    pub grid_step: Option<f64>,
    /// Variance of the linear-model error.
    pub noise_variance: f64,
    /// Number of coefficients (intercept included) in the coefficients scenario.
    pub m: usize,
    /// AR(1) correlation of the covariates in the coefficients scenario.
    pub rho: f64,
    pub seed: u64,
}

impl Default for GenSpec {
    fn default() -> Self {
        Self {
            scenario: Scenario::Dense1d,
            n: 20,
            grid_points: None,
            grid_lo: None,
            grid_hi: None,
            grid_step: None,
            noise_variance: 2.0,
            m: 50,
            rho: 0.4,
            seed: 0,
        }
    }
}

impl GenSpec {
    pub fn new(scenario: Scenario, n: usize, seed: u64) -> Self {
        Self { scenario, n, seed, ..Self::default() }
    }

    /// Grid axis implied by the spec, or `None` for the coefficients scenario.
    pub fn axis(&self) -> Result<Option<Vec<f64>>> {
        if self.scenario == Scenario::Coefficients {
            return Ok(None);
        }
        let (k0, lo0, hi0) = self.scenario.default_grid();
        let k = self.grid_points.unwrap_or(k0);
        match self.grid_step {
            Some(step) => centered_axis(k, step).map(Some),
            None => grid_axis(k, self.grid_lo.unwrap_or(lo0), self.grid_hi.unwrap_or(hi0)).map(Some),
        }
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |field: &str, msg: String| Err(Error::InvalidConfig(format!("{field}: {msg}")));
        if self.n == 0 {
            return bad("n", "must be at least 1".into());
        }
        if self.scenario.is_dense() {
            if let Some(k) = self.grid_points {
                if k < 2 {
                    return bad("grid_points", format!("{k} < 2 for a dense scenario"));
                }
            }
        }
        match self.scenario {
            Scenario::RegressionLinear | Scenario::RegressionLogistic if self.n <= REGRESSION_BETA.len() => {
                return bad("n", format!("{} rows cannot fit {} coefficients", self.n, REGRESSION_BETA.len()));
            }
            Scenario::Coefficients => {
                if self.m < 2 {
                    return bad("m", format!("{} < 2", self.m));
                }
                if self.n <= self.m {
                    return bad("n", format!("{} rows cannot fit {} coefficients", self.n, self.m));
                }
                if !(self.rho.abs() < 1.0) {
                    return bad("rho", format!("{} outside (-1, 1)", self.rho));
                }
            }
            _ => {}
        }
        if !(self.noise_variance >= 0.0 && self.noise_variance.is_finite()) {
            return bad("noise_variance", format!("{} is not a finite non-negative number", self.noise_variance));
        }
        if let Some(s) = self.grid_step {
            if !(s > 0.0 && s.is_finite()) {
                return bad("grid_step", format!("{s} is not positive"));
            }
        }
        self.axis()?;
        Ok(())
    }
}

/// `k` equidistant points from `lo` to `hi`, both included.
pub fn grid_axis(k: usize, lo: f64, hi: f64) -> Result<Vec<f64>> {
    if k < 2 || !(lo < hi) || !lo.is_finite() || !hi.is_finite() {
        return Err(Error::InvalidConfig(format!("grid of {k} points on [{lo}, {hi}]")));
    }
    let span = hi - lo;
    let mut v: Vec<f64> = (0..k).map(|i| lo + span * (i as f64 / (k - 1) as f64)).collect();
    v[k - 1] = hi;
    Ok(v)
}

/// `k` points spaced by `step`, centered on 0.
pub fn centered_axis(k: usize, step: f64) -> Result<Vec<f64>> {
    if k == 0 || !(step > 0.0 && step.is_finite()) {
        return Err(Error::InvalidConfig(format!("centered grid of {k} points with step {step}")));
    }
    let mid = (k as f64 - 1.0) / 2.0;
    Ok((0..k).map(|i| (i as f64 - mid) * step).collect())
}

/// Polynomial basis `(1, x1, ..., x1^degree, x2, ..., x2^degree, ...)`.
pub fn polynomial_row(x: &[f64], degree: usize) -> Vec<f64> {
    let mut row = Vec::with_capacity(1 + x.len() * degree);
    row.push(1.0);
    for &v in x {
        let mut p = 1.0;
        for _ in 0..degree {
            p *= v;
            row.push(p);
        }
    }
    row
}

fn polynomial_labels(axes: &[String], degree: usize) -> Vec<String> {
    let mut labels = vec!["intercept".to_string()];
    for a in axes {
        labels.push(a.clone());
        for d in 2..=degree {
            labels.push(format!("{a}^{d}"));
        }
    }
    labels
}

/// Cartesian prediction grid over `dims` copies of `axis` with a polynomial basis.
/// Returns the grid domain (coordinates `x1`, `x2`, ...) and the test design.
pub fn prediction_grid(dims: usize, axis: &[f64], degree: usize) -> Result<(Arc<Domain>, DesignMatrix)> {
    if dims == 0 || degree == 0 {
        return Err(Error::InvalidConfig("prediction grid needs dims >= 1 and degree >= 1".into()));
    }
    let names: Vec<String> = (1..=dims).map(|d| format!("x{d}")).collect();
    let axes = vec![axis.to_vec(); dims];
    let domain = Arc::new(Domain::cartesian(names.clone(), &axes)?);
    let rows: Vec<Vec<f64>> = domain
        .points()
        .iter()
        .map(|p| polynomial_row(p.coords().expect("cartesian domains carry coordinates"), degree))
        .collect();
    let design = DesignMatrix::from_rows(&rows, polynomial_labels(&names, degree))?;
    Ok((domain, design))
}

fn binomial(n: u64, k: u64) -> f64 {
    (0..k).fold(1.0, |acc, i| acc * (n - i) as f64 / (i + 1) as f64)
}

/// Bernstein polynomials of degree 6 at `s`.
pub fn bernstein6(s: f64) -> [f64; 7] {
    let mut k = [0.0; 7];
    for (i, v) in k.iter_mut().enumerate() {
        *v = binomial(6, i as u64) * s.powi(i as i32) * (1.0 - s).powi(6 - i as i32);
    }
    k
}

/// The 36 Gaussian kernels centered at `(i, j) / 6`, `i, j = 1..6`, row-major in `(i, j)`.
pub fn gaussian_kernels(s1: f64, s2: f64) -> [f64; 36] {
    let mut k = [0.0; 36];
    let h2 = 2.0 * KERNEL_BANDWIDTH * KERNEL_BANDWIDTH;
    for i in 0..6 {
        for j in 0..6 {
            let d1 = s1 - (i + 1) as f64 / 6.0;
            let d2 = s2 - (j + 1) as f64 / 6.0;
            k[i * 6 + j] = (-(d1 * d1 + d2 * d2) / h2).exp();
        }
    }
    k
}

pub fn truth_1d(s: f64) -> f64 {
    (8.0 * std::f64::consts::PI * s).sin() * (-3.0 * s).exp()
}

/// Standard deviation of the 1D noise at `s`.
pub fn envelope_1d(s: f64) -> f64 {
    ((0.6 - s).powi(2) + 1.0) / 6.0
}

pub fn truth_2d(s1: f64, s2: f64) -> f64 {
    s1 * s2
}

/// Standard deviation of the 2D noise at `(s1, s2)`.
pub fn envelope_2d(s1: f64, s2: f64) -> f64 {
    (s1 + 1.0) / (s2 * s2 + 1.0)
}

/// Dense functional replication.
#[derive(Debug, Clone)]
pub struct DenseData {
    pub sample: FunctionalSample,
}

/// Regression replication.
#[derive(Debug, Clone)]
pub struct RegressionData {
    pub x: DesignMatrix,
    pub y: Vec<f64>,
}

#[derive(Debug, Clone)]
pub enum Replicate {
    Dense(DenseData),
    Regression(RegressionData),
}

#[derive(Debug, Clone)]
enum Kind {
    /// Row-major `m x q` noise loadings `envelope(s) K(s) / |K(s)|`.
    Dense { loadings: Vec<f64>, q: usize },
    Regression { model: Model, beta: Vec<f64>, sd: f64 },
    Coefficients { beta: Vec<f64>, rho: f64 },
}

/// Fixed parts of a scenario, shared by every replication.
#[derive(Debug, Clone)]
pub struct Generator {
    spec: GenSpec,
    kind: Kind,
    truth: Field,
    linear_truth: Field,
    target: Option<PredictionTarget>,
    test_design: Option<DesignMatrix>,
}

impl Generator {
    pub fn new(spec: &GenSpec) -> Result<Self> {
        spec.validate()?;
        match spec.scenario {
            Scenario::Dense1d => Self::dense_1d(spec),
            Scenario::Dense2d => Self::dense_2d(spec),
            Scenario::RegressionLinear | Scenario::RegressionLogistic => Self::regression(spec),
            Scenario::Coefficients => Self::coefficients(spec),
        }
    }

    fn dense_1d(spec: &GenSpec) -> Result<Self> {
        let axis = spec.axis()?.expect("dense scenarios have a grid");
        let domain = Arc::new(Domain::from_coords(vec!["s".into()], axis.iter().map(|&s| vec![s]).collect())?);
        let mut loadings = Vec::with_capacity(axis.len() * 7);
        for &s in &axis {
            let k = bernstein6(s);
            let scale = envelope_1d(s) / norm(&k);
            loadings.extend(k.iter().map(|v| v * scale));
        }
        let truth = Field::new(domain, axis.iter().map(|&s| truth_1d(s)).collect())?;
        Ok(Self::dense(spec, truth, loadings, 7))
    }

    fn dense_2d(spec: &GenSpec) -> Result<Self> {
        let axis = spec.axis()?.expect("dense scenarios have a grid");
        let domain = Arc::new(Domain::cartesian(vec!["s1".into(), "s2".into()], &[axis.clone(), axis])?);
        let mut loadings = Vec::with_capacity(domain.len() * 36);
        let mut truth = Vec::with_capacity(domain.len());
        for p in domain.points() {
            let c = p.coords().expect("cartesian domains carry coordinates");
            let k = gaussian_kernels(c[0], c[1]);
            let scale = envelope_2d(c[0], c[1]) / norm(&k);
            loadings.extend(k.iter().map(|v| v * scale));
            truth.push(truth_2d(c[0], c[1]));
        }
        let truth = Field::new(domain, truth)?;
        Ok(Self::dense(spec, truth, loadings, 36))
    }

    fn dense(spec: &GenSpec, truth: Field, loadings: Vec<f64>, q: usize) -> Self {
        Self {
            spec: spec.clone(),
            kind: Kind::Dense { loadings, q },
            linear_truth: truth.clone(),
            truth,
            target: None,
            test_design: None,
        }
    }

    fn regression(spec: &GenSpec) -> Result<Self> {
        let model = spec.scenario.model().expect("regression scenario");
        let axis = spec.axis()?.expect("regression scenarios have a grid");
        let (domain, design) = prediction_grid(2, &axis, 3)?;
        let beta = REGRESSION_BETA.to_vec();
        let eta: Vec<f64> = (0..design.rows()).map(|i| crate::regression::dot(design.row(i), &beta)).collect();
        let linear_truth = Field::new(domain.clone(), eta)?;
        let truth = match model {
            Model::Linear => linear_truth.clone(),
            Model::Logistic => linear_truth.map(sigmoid)?,
        };
        let target = PredictionTarget::design(domain, &design)?;
        Ok(Self {
            spec: spec.clone(),
            kind: Kind::Regression { model, beta, sd: spec.noise_variance.sqrt() },
            truth,
            linear_truth,
            target: Some(target),
            test_design: Some(design),
        })
    }

    fn coefficients(spec: &GenSpec) -> Result<Self> {
        let mut rng = stream(spec.seed, Purpose::FixedCoefficients, 0, 0);
        let beta: Vec<f64> = (0..spec.m).map(|_| StandardNormal.sample(&mut rng)).collect();
        let target = PredictionTarget::coefficients(coefficient_labels(spec.m))?;
        let truth = Field::new(target.domain().clone(), beta.clone())?;
        Ok(Self {
            spec: spec.clone(),
            kind: Kind::Coefficients { beta, rho: spec.rho },
            linear_truth: truth.clone(),
            truth,
            target: Some(target),
            test_design: None,
        })
    }

    pub fn spec(&self) -> &GenSpec {
        &self.spec
    }

    /// Noise-free truth on the data scale.
    pub fn truth(&self) -> &Field {
        &self.truth
    }

    /// Truth on the scale bands are built on (the linear predictor for logistic).
    pub fn linear_truth(&self) -> &Field {
        &self.linear_truth
    }

    pub fn domain(&self) -> &Arc<Domain> {
        self.truth.domain()
    }

    /// What regression bands are built over; `None` for dense scenarios.
    pub fn target(&self) -> Option<&PredictionTarget> {
        self.target.as_ref()
    }

    /// Test design of the regression grid.
    pub fn test_design(&self) -> Option<&DesignMatrix> {
        self.test_design.as_ref()
    }

    /// Data for replication `index`.
    pub fn replicate(&self, index: u64) -> Result<Replicate> {
        let mut rng = stream(self.spec.seed, Purpose::Data, index, 0);
        let n = self.spec.n;
        match &self.kind {
            Kind::Dense { loadings, q } => {
                let m = self.truth.len();
                let mut values = Vec::with_capacity(n * m);
                let mut a = vec![0.0; *q];
                for _ in 0..n {
                    a.iter_mut().for_each(|v| *v = StandardNormal.sample(&mut rng));
                    for (s, mu) in self.truth.values().iter().enumerate() {
                        values.push(mu + crate::regression::dot(&loadings[s * q..(s + 1) * q], &a));
                    }
                }
                let sample = FunctionalSample::new(self.domain().clone(), n, values)?;
                Ok(Replicate::Dense(DenseData { sample }))
            }
            Kind::Regression { model, beta, sd } => {
                let mut rows = Vec::with_capacity(n);
                let mut y = Vec::with_capacity(n);
                for _ in 0..n {
                    let x1: f64 = StandardNormal.sample(&mut rng);
                    let x2: f64 = StandardNormal.sample(&mut rng);
                    let row = polynomial_row(&[x1, x2], 3);
                    let eta = crate::regression::dot(&row, beta);
                    y.push(match model {
                        Model::Linear => {
                            let z: f64 = StandardNormal.sample(&mut rng);
                            eta + sd * z
                        }
                        Model::Logistic => {
                            if rng.random::<f64>() < sigmoid(eta) {
                                1.0
                            } else {
                                0.0
                            }
                        }
                    });
                    rows.push(row);
                }
                let labels = self.test_design.as_ref().expect("regression grid").labels().to_vec();
                let x = DesignMatrix::from_rows(&rows, labels)?;
                Ok(Replicate::Regression(RegressionData { x, y }))
            }
            Kind::Coefficients { beta, rho } => {
                let m = beta.len();
                let innov = (1.0 - rho * rho).sqrt();
                let mut data = Vec::with_capacity(n * m);
                let mut y = Vec::with_capacity(n);
                for _ in 0..n {
                    let start = data.len();
                    data.push(1.0);
                    let mut prev: f64 = StandardNormal.sample(&mut rng);
                    data.push(prev);
                    for _ in 2..m {
                        let z: f64 = StandardNormal.sample(&mut rng);
                        prev = rho * prev + innov * z;
                        data.push(prev);
                    }
                    let eps: f64 = StandardNormal.sample(&mut rng);
                    y.push(crate::regression::dot(&data[start..], beta) + eps);
                }
                let x = DesignMatrix::new(n, m, data, coefficient_labels(m))?;
                Ok(Replicate::Regression(RegressionData { x, y }))
            }
        }
    }

    /// Map a data-scale level to the construction scale.
    pub fn to_linear_scale(&self, level: f64) -> f64 {
        match self.kind {
            Kind::Regression { model: Model::Logistic, .. } => logit(level),
            _ => level,
        }
    }
}

/// `b0, b1, ..., b{m-1}`.
pub fn coefficient_labels(m: usize) -> Vec<String> {
    (0..m).map(|j| format!("b{j}")).collect()
}

fn norm(v: &[f64]) -> f64 {
    v.iter().map(|x| x * x).sum::<f64>().sqrt()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn axes() {
        assert_eq!(grid_axis(2, -1.0, 1.0).unwrap(), vec![-1.0, 1.0]);
        let c = centered_axis(5, 0.02).unwrap();
        let expect = [-0.04, -0.02, 0.0, 0.02, 0.04];
        for (a, b) in c.iter().zip(expect) {
            assert!((a - b).abs() < 1e-15);
        }
        assert_eq!(centered_axis(1, 0.02).unwrap(), vec![0.0]);
        assert!(grid_axis(1, 0.0, 1.0).is_err());
    }

    #[test]
    fn bernstein_partition_of_unity() {
        for s in [0.0, 0.13, 0.5, 1.0] {
            let sum: f64 = bernstein6(s).iter().sum();
            assert!((sum - 1.0).abs() < 1e-14);
        }
        assert_eq!(bernstein6(0.0)[0], 1.0);
    }

    #[test]
    fn envelopes() {
        assert_eq!(envelope_1d(0.6), 1.0 / 6.0);
        assert_eq!(truth_1d(0.0), 0.0);
        assert_eq!(truth_2d(1.0, 1.0), 1.0);
        assert_eq!(truth_2d(0.0, 0.3), 0.0);
    }

    #[test]
    fn regression_dimensions_and_truth() {
        let gen = Generator::new(&GenSpec::new(Scenario::RegressionLinear, 50, 1)).unwrap();
        let xt = gen.test_design().unwrap();
        assert_eq!((xt.rows(), xt.cols()), (10_000, 7));
        let lg = Generator::new(&GenSpec::new(Scenario::RegressionLogistic, 50, 1)).unwrap();
        // grid of 100 points on [-1, 1] does not contain 0, so evaluate directly
        let row = polynomial_row(&[0.0, 0.0], 3);
        assert_eq!(crate::regression::dot(&row, &REGRESSION_BETA), -1.0);
        assert!((sigmoid(-1.0) - 0.2689414213699951).abs() < 1e-15);
        match lg.replicate(0).unwrap() {
            Replicate::Regression(d) => assert!(d.y.iter().all(|&v| v == 0.0 || v == 1.0)),
            _ => unreachable!(),
        }
    }

    #[test]
    fn replicates_are_deterministic_and_distinct() {
        let gen = Generator::new(&GenSpec::new(Scenario::Dense1d, 5, 9)).unwrap();
        let a = gen.replicate(3).unwrap();
        let b = gen.replicate(3).unwrap();
        let c = gen.replicate(4).unwrap();
        let vals = |r: &Replicate| match r {
            Replicate::Dense(d) => d.sample.values().to_vec(),
            _ => unreachable!(),
        };
        assert_eq!(vals(&a), vals(&b));
        assert_ne!(vals(&a), vals(&c));
    }

    #[test]
    fn fixed_coefficients_do_not_depend_on_replication() {
        let spec = GenSpec { m: 5, n: 20, ..GenSpec::new(Scenario::Coefficients, 20, 4) };
        let g1 = Generator::new(&spec).unwrap();
        let g2 = Generator::new(&spec).unwrap();
        assert_eq!(g1.truth().values(), g2.truth().values());
        assert_eq!(g1.truth().len(), 5);
    }

    #[test]
    fn spec_validation_names_field() {
        let spec = GenSpec { rho: 1.0, ..GenSpec::new(Scenario::Coefficients, 100, 0) };
        let msg = spec.validate().unwrap_err().to_string();
        assert!(msg.contains("rho"), "{msg}");
        let spec = GenSpec::new(Scenario::RegressionLinear, 7, 0);
        assert!(spec.validate().unwrap_err().to_string().contains('n'));
    }
}

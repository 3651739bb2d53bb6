//! Monte Carlo coverage experiments.
//!
//! Each replication draws data, builds a band, and checks the SCI event and the
//! containment events against the known truth. Events are evaluated on the
//! scale the band is built on; for logistic models the data-scale levels are
//! mapped through `logit`, which leaves every event unchanged and avoids ties
//! created by `sigmoid` saturating in floating point.

use std::collections::BTreeMap;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::datagen::{GenSpec, Generator, Replicate, Scenario};
use crate::domain::{Band, Field};
use crate::error::{Error, Result};
use crate::inversion::{IntervalGrid, LevelSet};
use crate::regression::{self, fit};
use crate::rng::{derive_seed, stream, Purpose};
use crate::scb::{multiplier_scb, regression_scb, BootstrapConfig};

/// Largest tolerated share of failed replications.
pub const MAX_FAILURE_RATE: f64 = 0.01;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ExperimentKind {
    Coverage,
    GridProximity,
    Correlation,
}

/// Which levels the excursion events are checked at.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum LevelPolicy {
    /// `k` equidistant levels from the minimum to the maximum of the truth.
    Equidistant(usize),
    Explicit(Vec<f64>),
    /// All band and truth values of the replication.
    Breakpoints,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ExperimentConfig {
    pub kind: ExperimentKind,
    /// Master seed; data, bootstrap and fixed-coefficient streams derive from it.
    pub seed: u64,
    pub n_reps: usize,
    pub gen: GenSpec,
    pub boot: BootstrapConfig,
    pub levels: LevelPolicy,
    /// Spacing of the interval endpoint grid; no interval event when absent.
    pub interval_step: Option<f64>,
    /// Level counts for the conservativeness curve.
    pub levels_sweep: Vec<usize>,
    /// Grid sizes per dimension for the grid proximity study.
    pub grid_points: Vec<usize>,
    /// Pairs sampled for correlation summaries when all pairs would be too many.
    pub corr_pairs: usize,
    pub threads: Option<usize>,
}

impl Default for ExperimentConfig {
    fn default() -> Self {
        Self {
            kind: ExperimentKind::Coverage,
            seed: 0,
            n_reps: 1000,
            gen: GenSpec::default(),
            boot: BootstrapConfig::default(),
            levels: LevelPolicy::Equidistant(1000),
            interval_step: None,
            levels_sweep: Vec::new(),
            grid_points: vec![5, 10, 20, 50, 80],
            corr_pairs: 200_000,
            threads: None,
        }
    }
}

impl ExperimentConfig {
    pub fn validate(&self) -> Result<()> {
        let bad = |field: &str, msg: String| Err(Error::InvalidConfig(format!("{field}: {msg}")));
        if self.n_reps == 0 {
            return bad("n_reps", "must be at least 1".into());
        }
        match &self.levels {
            LevelPolicy::Equidistant(0) => return bad("levels", "equidistant count must be at least 1".into()),
            LevelPolicy::Explicit(v) if v.is_empty() || v.iter().any(|x| !x.is_finite()) => {
                return bad("levels", "explicit levels must be a non-empty list of finite numbers".into())
            }
            _ => {}
        }
        if self.levels_sweep.contains(&0) {
            return bad("levels_sweep", "level counts must be at least 1".into());
        }
        if let Some(s) = self.interval_step {
            if !(s > 0.0 && s.is_finite()) {
                return bad("interval_step", format!("{s} is not positive"));
            }
        }
        if self.threads == Some(0) {
            return bad("threads", "must be at least 1".into());
        }
        if self.kind == ExperimentKind::GridProximity {
            if self.gen.scenario != Scenario::RegressionLinear {
                return bad("gen.scenario", "grid proximity needs regression_linear".into());
            }
            if self.grid_points.is_empty() || self.grid_points.contains(&0) {
                return bad("grid_points", "need a non-empty list of positive sizes".into());
            }
        }
        self.boot.validate()?;
        self.gen_spec().validate()
    }

    /// The generation spec with the master seed applied.
    pub fn gen_spec(&self) -> GenSpec {
        GenSpec { seed: self.seed, ..self.gen.clone() }
    }
}

/// A coverage count with its Monte Carlo standard error.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Rate {
    pub covered: u64,
    pub total: u64,
    pub rate: f64,
    /// `sqrt(p (1 - p) / n)`.
    pub mc_stderr: f64,
    pub two_stderr: f64,
}

impl Rate {
    pub fn new(covered: u64, total: u64) -> Self {
        let rate = if total == 0 { 0.0 } else { covered as f64 / total as f64 };
        let mc_stderr = if total == 0 { 0.0 } else { (rate * (1.0 - rate) / total as f64).sqrt() };
        Self { covered, total, rate, mc_stderr, two_stderr: 2.0 * mc_stderr }
    }

    /// Coverage in percent.
    pub fn percent(&self) -> f64 {
        100.0 * self.rate
    }
}

/// Standard error of a Bernoulli(p) mean over `n` draws.
pub fn bernoulli_stderr(p: f64, n: usize) -> f64 {
    (p * (1.0 - p) / n as f64).sqrt()
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepEntry {
    pub levels: usize,
    pub coverage: Rate,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CoverageReport {
    pub scenario: Scenario,
    pub n: usize,
    /// Grid points per dimension, for grid-based regression scenarios.
    pub grid_points: Option<usize>,
    pub domain_size: usize,
    pub n_reps: usize,
    pub completed: u64,
    pub failed: u64,
    /// Failed replications keyed by error code.
    pub failures: BTreeMap<String, u64>,
    pub sci: Rate,
    /// Upper containment over the replication's breakpoints; equals `sci`.
    pub breakpoints: Rate,
    pub upper: Rate,
    pub lower: Rate,
    pub interval: Option<Rate>,
    /// Number of levels under the level policy (breakpoints: mean count).
    pub level_count: f64,
    pub interval_pairs: Option<usize>,
    pub sweep: Vec<SweepEntry>,
    /// Mean bootstrap quantile `a` over completed replications.
    pub mean_quantile: f64,
    /// Mean number of bootstrap resamples that had to be redrawn.
    pub mean_redraws: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CorrelationSummary {
    pub scenario: Scenario,
    pub estimators: usize,
    /// Pairs the summary is based on.
    pub pairs: usize,
    pub sampled: bool,
    pub mean_abs: f64,
    /// Quantiles of `|cor|` at 5, 25, 50, 75 and 95 percent.
    pub quantiles: Vec<(f64, f64)>,
    /// Center of the fullest histogram bin.
    pub mode: f64,
    /// Counts over 20 equal bins of `[0, 1]`.
    pub histogram: Vec<u64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExperimentReport {
    pub version: String,
    pub config: ExperimentConfig,
    pub coverage: Vec<CoverageReport>,
    pub correlation: Option<CorrelationSummary>,
}

/// Level sets checked in every replication, fixed by the truth.
#[derive(Debug, Clone)]
pub struct EvalPlan {
    levels: Option<LevelSet>,
    intervals: Option<IntervalGrid>,
    sweep: Vec<(usize, LevelSet)>,
}

impl EvalPlan {
    /// Build level sets on the data scale from `truth`, then map them with
    /// `to_band_scale` (strictly increasing) onto the band's scale.
    pub fn new(
        truth: &Field,
        policy: &LevelPolicy,
        interval_step: Option<f64>,
        sweep: &[usize],
        to_band_scale: impl Fn(f64) -> f64,
    ) -> Result<Self> {
        let (lo, hi) = (truth.min(), truth.max());
        let map = |s: &LevelSet| LevelSet::new(s.values().iter().map(|&v| to_band_scale(v)).collect());
        let levels = match policy {
            LevelPolicy::Equidistant(k) => Some(map(&LevelSet::equidistant(lo, hi, *k)?)?),
            LevelPolicy::Explicit(v) => Some(map(&LevelSet::new(v.clone())?)?),
            LevelPolicy::Breakpoints => None,
        };
        let intervals = match interval_step {
            Some(step) => {
                let g = IntervalGrid::with_step(lo, hi, step)?;
                Some(IntervalGrid::new(g.values().iter().map(|&v| to_band_scale(v)).collect())?)
            }
            None => None,
        };
        let sweep = sweep
            .iter()
            .map(|&k| Ok((k, map(&LevelSet::equidistant(lo, hi, k)?)?)))
            .collect::<Result<_>>()?;
        Ok(Self { levels, intervals, sweep })
    }

    pub fn level_count(&self) -> Option<usize> {
        self.levels.as_ref().map(LevelSet::len)
    }

    pub fn interval_pairs(&self) -> Option<usize> {
        self.intervals.as_ref().map(IntervalGrid::pair_count)
    }
}

/// Events of one replication.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Outcome {
    pub sci: bool,
    pub breakpoints: bool,
    pub upper: bool,
    pub lower: bool,
    pub interval: Option<bool>,
    pub sweep: Vec<bool>,
    pub level_count: usize,
}

/// Evaluate all events for one band against the truth on the band's scale.
///
/// The implications `sci == breakpoints` and `sci => every finite-level event`
/// are checked here; a violation is an internal error.
pub fn evaluate(band: &Band, truth: &Field, plan: &EvalPlan) -> Result<Outcome> {
    let sci = crate::inversion::sci_event(band, truth)?;
    let bp = LevelSet::breakpoints(band, truth)?;
    let breakpoints = bp.upper_event(band, truth)?;
    let (lo, hi, mu) = (band.lower().values(), band.upper().values(), truth.values());
    let (upper, lower, level_count) = match &plan.levels {
        Some(l) => (l.upper_event_raw(lo, hi, mu), l.lower_event_raw(lo, hi, mu), l.len()),
        None => (breakpoints, bp.lower_event_raw(lo, hi, mu), bp.len()),
    };
    let interval = plan.intervals.as_ref().map(|g| g.event_raw(lo, hi, mu));
    let sweep: Vec<bool> = plan.sweep.iter().map(|(_, l)| l.upper_event_raw(lo, hi, mu)).collect();

    if sci != breakpoints {
        return Err(Error::Internal(format!("SCI event {sci} but breakpoint containment {breakpoints}")));
    }
    if sci && !(upper && lower && interval.unwrap_or(true) && sweep.iter().all(|&e| e)) {
        return Err(Error::Internal("band covers the truth but a finite-level containment event failed".into()));
    }
    Ok(Outcome { sci, breakpoints, upper, lower, interval, sweep, level_count })
}

struct RepResult {
    outcome: Outcome,
    quantile: f64,
    redraws: usize,
}

fn replication(cfg: &ExperimentConfig, gen: &Generator, plan: &EvalPlan, rep: usize) -> Result<RepResult> {
    let boot = BootstrapConfig { seed: derive_seed(cfg.seed, Purpose::Bootstrap, rep as u64), ..cfg.boot.clone() };
    let (band, quantile, redraws) = match gen.replicate(rep as u64)? {
        Replicate::Dense(d) => {
            let r = multiplier_scb(&d.sample, &boot)?;
            (r.band, r.max_stat.quantile(), 0)
        }
        Replicate::Regression(d) => {
            let model = gen.spec().scenario.model().expect("regression scenario");
            let target = gen.target().expect("regression target");
            let r = regression_scb(&d.x, &d.y, target, model, &boot)?;
            (r.linear_band, r.max_stat.quantile(), r.redraws)
        }
    };
    let outcome = evaluate(&band, gen.linear_truth(), plan)?;
    Ok(RepResult { outcome, quantile, redraws })
}

fn with_threads<T: Send>(threads: Option<usize>, f: impl FnOnce() -> T + Send) -> Result<T> {
    match threads {
        Some(n) => {
            let pool = rayon::ThreadPoolBuilder::new()
                .num_threads(n)
                .build()
                .map_err(|e| Error::Internal(format!("thread pool: {e}")))?;
            Ok(pool.install(f))
        }
        None => Ok(f()),
    }
}

/// Coverage of the SCI and containment events over `cfg.n_reps` replications.
pub fn run_coverage(cfg: &ExperimentConfig) -> Result<CoverageReport> {
    cfg.validate()?;
    with_threads(cfg.threads, || coverage_inner(cfg))?
}

fn coverage_inner(cfg: &ExperimentConfig) -> Result<CoverageReport> {
    let spec = cfg.gen_spec();
    let gen = Generator::new(&spec)?;
    let plan = EvalPlan::new(gen.truth(), &cfg.levels, cfg.interval_step, &cfg.levels_sweep, |c| {
        gen.to_linear_scale(c)
    })?;
    let results: Vec<Result<RepResult>> =
        (0..cfg.n_reps).into_par_iter().map(|rep| replication(cfg, &gen, &plan, rep)).collect();

    let mut failures = BTreeMap::new();
    let mut done: Vec<RepResult> = Vec::with_capacity(cfg.n_reps);
    for r in results {
        match r {
            Ok(r) => done.push(r),
            Err(e @ Error::Internal(_)) => return Err(e),
            Err(e) => *failures.entry(e.code().to_string()).or_insert(0) += 1,
        }
    }
    let failed: u64 = failures.values().sum();
    if failed as f64 > MAX_FAILURE_RATE * cfg.n_reps as f64 {
        return Err(Error::ExcessiveFailures { failed: failed as usize, total: cfg.n_reps });
    }

    let total = done.len() as u64;
    let count = |f: &dyn Fn(&Outcome) -> bool| done.iter().filter(|r| f(&r.outcome)).count() as u64;
    let rate = |f: &dyn Fn(&Outcome) -> bool| Rate::new(count(f), total);
    let sweep = cfg
        .levels_sweep
        .iter()
        .enumerate()
        .map(|(i, &k)| SweepEntry { levels: k, coverage: rate(&|o| o.sweep[i]) })
        .collect();
    let mean = |v: &mut dyn Iterator<Item = f64>| if total == 0 { 0.0 } else { v.sum::<f64>() / total as f64 };
    Ok(CoverageReport {
        scenario: spec.scenario,
        n: spec.n,
        grid_points: if gen.test_design().is_some() { spec.axis()?.map(|a| a.len()) } else { None },
        domain_size: gen.domain().len(),
        n_reps: cfg.n_reps,
        completed: total,
        failed,
        failures,
        sci: rate(&|o| o.sci),
        breakpoints: rate(&|o| o.breakpoints),
        upper: rate(&|o| o.upper),
        lower: rate(&|o| o.lower),
        interval: plan.intervals.as_ref().map(|_| rate(&|o| o.interval == Some(true))),
        level_count: mean(&mut done.iter().map(|r| r.outcome.level_count as f64)),
        interval_pairs: plan.interval_pairs(),
        sweep,
        mean_quantile: mean(&mut done.iter().map(|r| r.quantile)),
        mean_redraws: mean(&mut done.iter().map(|r| r.redraws as f64)),
    })
}

/// Coverage at each of `cfg.levels_sweep` equidistant level counts.
pub fn run_levels_sweep(cfg: &ExperimentConfig) -> Result<CoverageReport> {
    if cfg.levels_sweep.is_empty() {
        return Err(Error::InvalidConfig("levels_sweep: must not be empty".into()));
    }
    run_coverage(cfg)
}

/// Fixed-step prediction grids of increasing size, one coverage report each.
pub fn run_grid_proximity_study(cfg: &ExperimentConfig) -> Result<Vec<CoverageReport>> {
    cfg.validate()?;
    let step = cfg.gen.grid_step.unwrap_or(0.02);
    cfg.grid_points
        .iter()
        .map(|&k| {
            let gen = GenSpec { grid_points: Some(k), grid_step: Some(step), ..cfg.gen.clone() };
            run_coverage(&ExperimentConfig { gen, kind: ExperimentKind::Coverage, ..cfg.clone() })
        })
        .collect()
}

/// Distribution of absolute pairwise estimator correlations in replication 0.
pub fn correlation_density(cfg: &ExperimentConfig) -> Result<CorrelationSummary> {
    let spec = cfg.gen_spec();
    let gen = Generator::new(&spec)?;
    let model = spec
        .scenario
        .model()
        .ok_or_else(|| Error::InvalidConfig("gen.scenario: correlations need a regression scenario".into()))?;
    let target = gen.target().expect("regression target");
    let Replicate::Regression(d) = gen.replicate(0)? else {
        unreachable!("regression scenarios produce regression data")
    };
    let f = fit(model, &d.x, &d.y)?;
    let m = target.len();
    let all_pairs = m * m.saturating_sub(1) / 2;
    let sampled = all_pairs > cfg.corr_pairs;
    let cors = if sampled {
        let mut rng = stream(cfg.seed, Purpose::PairSubsample, 0, 0);
        regression::sampled_prediction_correlations(&f, target, cfg.corr_pairs, &mut rng)?
    } else {
        regression::pairwise_prediction_correlations(&f, target)?
    };
    Ok(summarize_correlations(spec.scenario, m, cors, sampled))
}

fn summarize_correlations(scenario: Scenario, estimators: usize, cors: Vec<f64>, sampled: bool) -> CorrelationSummary {
    let mut abs: Vec<f64> = cors.iter().map(|c| c.abs().min(1.0)).collect();
    abs.sort_by(f64::total_cmp);
    let n = abs.len();
    let mut histogram = vec![0u64; 20];
    for &a in &abs {
        histogram[((a * 20.0) as usize).min(19)] += 1;
    }
    let quantiles = [0.05, 0.25, 0.5, 0.75, 0.95]
        .iter()
        .map(|&q| (q, if n == 0 { f64::NAN } else { abs[((q * n as f64).ceil() as usize).clamp(1, n) - 1] }))
        .collect();
    let fullest = histogram.iter().enumerate().max_by_key(|(i, c)| (**c, std::cmp::Reverse(*i))).map_or(0, |(i, _)| i);
    CorrelationSummary {
        scenario,
        estimators,
        pairs: n,
        sampled,
        mean_abs: if n == 0 { f64::NAN } else { abs.iter().sum::<f64>() / n as f64 },
        quantiles,
        mode: (fullest as f64 + 0.5) / 20.0,
        histogram,
    }
}

/// Run whatever `cfg.kind` asks for.
pub fn run(cfg: &ExperimentConfig) -> Result<ExperimentReport> {
    cfg.validate()?;
    let (coverage, correlation) = match cfg.kind {
        ExperimentKind::Coverage => (vec![run_coverage(cfg)?], None),
        ExperimentKind::GridProximity => (run_grid_proximity_study(cfg)?, None),
        ExperimentKind::Correlation => (Vec::new(), Some(with_threads(cfg.threads, || correlation_density(cfg))??)),
    };
    Ok(ExperimentReport { version: env!("CARGO_PKG_VERSION").to_string(), config: cfg.clone(), coverage, correlation })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::domain::Domain;
    use crate::inversion::band_from_vecs;
    use std::sync::Arc;

    fn line(n: usize) -> Arc<Domain> {
        Arc::new(Domain::from_coords(vec!["s".into()], (0..n).map(|i| vec![i as f64]).collect()).unwrap())
    }

    #[test]
    fn stderr_formula() {
        assert!((bernoulli_stderr(0.95, 5000) - 0.0030822).abs() < 1e-6);
        let r = Rate::new(950, 1000);
        assert!((r.mc_stderr - bernoulli_stderr(0.95, 1000)).abs() < 1e-15);
        assert_eq!(r.two_stderr, 2.0 * r.mc_stderr);
    }

    #[test]
    fn constant_truth_gives_one_level() {
        let d = line(3);
        let truth = Field::constant(d.clone(), 0.5).unwrap();
        let plan = EvalPlan::new(&truth, &LevelPolicy::Equidistant(1000), Some(0.005), &[5, 100], |c| c).unwrap();
        assert_eq!(plan.level_count(), Some(1));
        assert_eq!(plan.interval_pairs(), Some(0));
        let band = band_from_vecs(d, vec![0.4; 3], vec![0.6; 3], 0.05).unwrap();
        let o = evaluate(&band, &truth, &plan).unwrap();
        assert!(o.sci && o.upper && o.lower && o.interval == Some(true));
    }

    #[test]
    fn missed_truth_is_reported() {
        let d = line(3);
        let truth = Field::new(d.clone(), vec![0.0, 1.0, 2.0]).unwrap();
        let plan = EvalPlan::new(&truth, &LevelPolicy::Breakpoints, Some(0.5), &[3], |c| c).unwrap();
        let band = band_from_vecs(d, vec![-0.5, 1.2, 1.5], vec![0.5, 1.5, 2.5], 0.05).unwrap();
        let o = evaluate(&band, &truth, &plan).unwrap();
        assert!(!o.sci && !o.breakpoints && !o.upper);
    }

    #[test]
    fn config_round_trips_through_toml() {
        let cfg = ExperimentConfig {
            levels: LevelPolicy::Explicit(vec![0.0, 0.5]),
            interval_step: Some(0.005),
            ..ExperimentConfig::default()
        };
        let text = toml::to_string(&cfg).unwrap();
        let back: ExperimentConfig = toml::from_str(&text).unwrap();
        assert_eq!(cfg, back);
    }
}

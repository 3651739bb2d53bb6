use std::path::{Path, PathBuf};
use std::sync::Arc;

use clap::{Args, ValueEnum};
use invset_core::io;
use invset_core::regression::sigmoid;
use invset_core::scb::{multiplier_scb, regression_scb};
use invset_core::{BootstrapConfig, Domain, Field, Model, Multiplier, PredictionTarget};
use serde::Serialize;

use crate::config::{load, to_value, with_threads};
use crate::error::{CliError, CliResult};
use crate::output::OutDir;

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum ModelArg {
    Linear,
    Logistic,
    FunctionalMean,
}

#[derive(Debug, Clone, Copy, ValueEnum)]
pub enum MultiplierArg {
    Gaussian,
    Rademacher,
}

#[derive(Debug, Args)]
pub struct ScbArgs {
    #[arg(long, value_enum)]
    model: ModelArg,
    /// Sample paths (functional-mean).
    #[arg(long, required_if_eq("model", "functional-mean"))]
    sample: Option<PathBuf>,
    /// Training design with a response column (linear, logistic).
    #[arg(long)]
    train: Option<PathBuf>,
    #[arg(long, default_value = "y")]
    response: String,
    /// Design rows to predict at; the band covers the coefficients when absent.
    #[arg(long)]
    grid: Option<PathBuf>,
    /// Coordinates of the grid rows.
    #[arg(long, requires = "grid")]
    points: Option<PathBuf>,
    /// BootstrapConfig file; flags override it.
    #[arg(long)]
    config: Option<PathBuf>,
    #[arg(long)]
    alpha: Option<f64>,
    /// Bootstrap resamples.
    #[arg(long)]
    boot: Option<usize>,
    #[arg(long)]
    seed: Option<u64>,
    #[arg(long, value_enum)]
    multiplier: Option<MultiplierArg>,
    /// Standardize multiplier draws by the sample SD instead of their own.
    #[arg(long)]
    plain: bool,
    #[arg(long)]
    max_retries: Option<usize>,
    #[arg(long)]
    threads: Option<usize>,
    #[arg(long, short)]
    out: PathBuf,
}

#[derive(Serialize)]
struct Summary {
    model: ModelArg,
    alpha: f64,
    n_boot: usize,
    /// Quantile `a` of the max statistic; half-width is `a * sd`.
    quantile: f64,
    domain_size: usize,
    redraws: usize,
    /// Band on the probability scale, `sd` column on the linear-predictor scale.
    link_applied: bool,
}

fn resolve(args: &ScbArgs) -> CliResult<BootstrapConfig> {
    let mut cfg = match &args.config {
        Some(p) => load::<BootstrapConfig>(p)?,
        None => BootstrapConfig::default(),
    };
    if let Some(a) = args.alpha {
        cfg.alpha = a;
    }
    if let Some(b) = args.boot {
        cfg.n_boot = b;
    }
    if let Some(s) = args.seed {
        cfg.seed = s;
    }
    if let Some(r) = args.max_retries {
        cfg.max_refit_retries = r;
    }
    match args.multiplier {
        Some(MultiplierArg::Gaussian) => cfg.multiplier = Multiplier::Gaussian,
        Some(MultiplierArg::Rademacher) => cfg.multiplier = Multiplier::Rademacher,
        None => {}
    }
    if args.plain {
        cfg.studentize = false;
    }
    cfg.validate()?;
    Ok(cfg)
}

fn target(args: &ScbArgs, labels: &[String]) -> CliResult<(PredictionTarget, Vec<PathBuf>)> {
    let Some(grid) = &args.grid else {
        return Ok((PredictionTarget::coefficients(labels.iter().cloned())?, Vec::new()));
    };
    let (xt, _) = io::read_design(grid, None)?;
    if xt.labels() != labels {
        return Err(invset_core::Error::InvalidDesign(format!(
            "{}: columns {:?} do not match the training design {:?}",
            grid.display(),
            xt.labels(),
            labels
        ))
        .into());
    }
    let mut inputs = vec![grid.clone()];
    let domain = match &args.points {
        Some(p) => {
            inputs.push(p.clone());
            io::read_points(p)?
        }
        None => Arc::new(Domain::labeled((0..xt.rows()).map(|i| format!("row{i}")))?),
    };
    Ok((PredictionTarget::design(domain, &xt)?, inputs))
}

pub fn run(args: ScbArgs) -> CliResult<()> {
    let cfg = resolve(&args)?;
    let mut inputs: Vec<PathBuf> = args.config.iter().cloned().collect();
    let mut out = OutDir::create(&args.out)?;
    let summary = match args.model {
        ModelArg::FunctionalMean => {
            let path = args.sample.as_ref().expect("clap enforces --sample");
            inputs.push(path.clone());
            let sample = io::read_sample(path)?;
            let res = with_threads(args.threads, || multiplier_scb(&sample, &cfg))??;
            let se = res.sd.map(|v| v / (sample.n() as f64).sqrt())?;
            out.write("band.csv", |w| io::write_band(w, &res.band, &res.mean, &se))?;
            out.write("max_stat.csv", |w| io::write_max_stat(w, &res.max_stat))?;
            Summary {
                model: args.model,
                alpha: cfg.alpha,
                n_boot: cfg.n_boot,
                quantile: res.max_stat.quantile(),
                domain_size: res.band.domain().len(),
                redraws: 0,
                link_applied: false,
            }
        }
        ModelArg::Linear | ModelArg::Logistic => {
            let model = if args.model == ModelArg::Linear { Model::Linear } else { Model::Logistic };
            let train = args
                .train
                .as_ref()
                .ok_or_else(|| CliError::Usage("scb: --train is required for regression models".into()))?;
            inputs.push(train.clone());
            let (x, y) = io::read_design(train, Some(&args.response))?;
            let y = y.expect("response requested");
            let (target, grid_inputs) = target(&args, x.labels())?;
            inputs.extend(grid_inputs);
            let res = with_threads(args.threads, || regression_scb(&x, &y, &target, model, &cfg))??;
            let estimate: Field =
                if res.link_applied { res.estimate.mean.map(sigmoid)? } else { res.estimate.mean.clone() };
            out.write("band.csv", |w| io::write_band(w, &res.band, &estimate, &res.estimate.sd))?;
            if res.link_applied {
                out.write("linear_band.csv", |w| {
                    io::write_band(w, &res.linear_band, &res.estimate.mean, &res.estimate.sd)
                })?;
            }
            out.write("max_stat.csv", |w| io::write_max_stat(w, &res.max_stat))?;
            Summary {
                model: args.model,
                alpha: cfg.alpha,
                n_boot: cfg.n_boot,
                quantile: res.max_stat.quantile(),
                domain_size: res.band.domain().len(),
                redraws: res.redraws,
                link_applied: res.link_applied,
            }
        }
    };
    out.write_json("scb.json", &summary)?;
    println!(
        "scb: {:?} over {} points, alpha {}, quantile {:.4} -> {}",
        summary.model,
        summary.domain_size,
        summary.alpha,
        summary.quantile,
        args.out.display()
    );
    let inputs: Vec<&Path> = inputs.iter().map(PathBuf::as_path).collect();
    let config = serde_json::json!({ "model": args.model, "response": args.response, "bootstrap": to_value(&cfg) });
    out.finish("scb", Some(cfg.seed), args.threads, config, &inputs)?;
    Ok(())
}

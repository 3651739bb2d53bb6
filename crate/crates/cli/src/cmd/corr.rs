use std::path::{Path, PathBuf};

use clap::Args;
use invset_core::datagen::Scenario;
use invset_core::sim::{correlation_density, ExperimentConfig, ExperimentKind};

use super::simulate::histogram_csv;
use crate::config::{load, parse_scenario, to_value, with_threads};
use crate::error::{CliError, CliResult};
use crate::output::OutDir;

#[derive(Debug, Args)]
pub struct CorrArgs {
    /// Experiment config; only `gen`, `seed` and `corr_pairs` are used.
    #[arg(long)]
    config: Option<PathBuf>,
    #[arg(long, value_parser = parse_scenario)]
    scenario: Option<Scenario>,
    #[arg(long)]
    n: Option<usize>,
    #[arg(long)]
    seed: Option<u64>,
    /// Pairs to sample when the full set is larger.
    #[arg(long)]
    pairs: Option<usize>,
    #[arg(long)]
    threads: Option<usize>,
    #[arg(long, short)]
    out: PathBuf,
}

pub fn run(args: CorrArgs) -> CliResult<()> {
    let mut cfg = match &args.config {
        Some(p) => load::<ExperimentConfig>(p)?,
        None => ExperimentConfig::default(),
    };
    cfg.kind = ExperimentKind::Correlation;
    match (args.scenario, &args.config) {
        (Some(s), _) => cfg.gen.scenario = s,
        (None, None) => return Err(CliError::Usage("corr: --scenario or --config is required".into())),
        _ => {}
    }
    if let Some(n) = args.n {
        cfg.gen.n = n;
    }
    if let Some(s) = args.seed {
        cfg.seed = s;
    }
    if let Some(p) = args.pairs {
        cfg.corr_pairs = p;
    }
    let threads = args.threads.or(cfg.threads.take());
    cfg.validate()?;

    let summary = with_threads(threads, || correlation_density(&cfg))??;
    let mut out = OutDir::create(&args.out)?;
    out.write_json("correlation.json", &summary)?;
    out.write_text("histogram.csv", &histogram_csv(&summary))?;
    println!(
        "corr: {} estimators, {} pairs{}: mean |cor| {:.3}, median {:.3}, mode {:.3}",
        summary.estimators,
        summary.pairs,
        if summary.sampled { " (sampled)" } else { "" },
        summary.mean_abs,
        summary.quantiles.iter().find(|q| q.0 == 0.5).map_or(f64::NAN, |q| q.1),
        summary.mode
    );
    let inputs: Vec<&Path> = args.config.iter().map(PathBuf::as_path).collect();
    out.finish("corr", Some(cfg.seed), threads, to_value(&cfg), &inputs)?;
    Ok(())
}

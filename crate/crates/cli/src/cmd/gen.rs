use std::path::{Path, PathBuf};

use clap::Args;
use invset_core::datagen::{GenSpec, Generator, Replicate, Scenario};
use invset_core::io;
use serde::Serialize;

use crate::config::{load, parse_scenario, to_value};
use crate::error::{CliError, CliResult};
use crate::output::OutDir;

#[derive(Debug, Args)]
pub struct GenArgs {
    /// GenSpec file (TOML, or JSON by extension); flags override it.
    #[arg(long)]
    config: Option<PathBuf>,
    #[arg(long, value_parser = parse_scenario)]
    scenario: Option<Scenario>,
    /// Sample paths (dense) or training rows (regression).
    #[arg(long)]
    n: Option<usize>,
    #[arg(long)]
    seed: Option<u64>,
    /// Points per grid dimension.
    #[arg(long)]
    grid_points: Option<usize>,
    /// Fixed grid spacing centered on 0.
    #[arg(long)]
    grid_step: Option<f64>,
    #[arg(long)]
    noise_variance: Option<f64>,
    /// Coefficients, intercept included (coefficients scenario).
    #[arg(long)]
    m: Option<usize>,
    /// AR(1) covariate correlation (coefficients scenario).
    #[arg(long)]
    rho: Option<f64>,
    /// Which replication of the seed to write.
    #[arg(long, default_value_t = 0)]
    replicate: u64,
    #[arg(long, short)]
    out: PathBuf,
}

#[derive(Serialize)]
struct Sidecar<'a> {
    spec: &'a GenSpec,
    replicate: u64,
    domain_size: usize,
    truth_min: f64,
    truth_max: f64,
    files: Vec<(&'static str, &'static str)>,
}

fn resolve(args: &GenArgs) -> CliResult<GenSpec> {
    let mut spec = match &args.config {
        Some(p) => load::<GenSpec>(p)?,
        None => GenSpec {
            scenario: args.scenario.ok_or_else(|| CliError::Usage("gen: --scenario or --config is required".into()))?,
            ..GenSpec::default()
        },
    };
    if let Some(s) = args.scenario {
        spec.scenario = s;
    }
    macro_rules! set {
        ($($f:ident),*) => { $( if let Some(v) = args.$f { spec.$f = v; } )* };
    }
    set!(n, seed, noise_variance, m, rho);
    if args.grid_points.is_some() {
        spec.grid_points = args.grid_points;
    }
    if args.grid_step.is_some() {
        spec.grid_step = args.grid_step;
    }
    spec.validate()?;
    Ok(spec)
}

pub fn run(args: GenArgs) -> CliResult<()> {
    let spec = resolve(&args)?;
    let gen = Generator::new(&spec)?;
    let mut out = OutDir::create(&args.out)?;
    let truth = gen.truth();
    let mut files = vec![("truth", "truth.csv")];
    out.write("truth.csv", |w| io::write_field(w, truth))?;
    match gen.replicate(args.replicate)? {
        Replicate::Dense(d) => {
            out.write("sample.csv", |w| io::write_sample(w, &d.sample))?;
            files.push(("sample", "sample.csv"));
        }
        Replicate::Regression(d) => {
            out.write("train.csv", |w| io::write_design(w, &d.x, Some(("y", &d.y))))?;
            files.push(("train", "train.csv"));
            if let Some(xt) = gen.test_design() {
                out.write("grid.csv", |w| io::write_design(w, xt, None))?;
                out.write("points.csv", |w| io::write_points(w, gen.domain()))?;
                files.push(("grid", "grid.csv"));
                files.push(("points", "points.csv"));
            }
        }
    }
    let sidecar = Sidecar {
        spec: &spec,
        replicate: args.replicate,
        domain_size: gen.domain().len(),
        truth_min: truth.min(),
        truth_max: truth.max(),
        files,
    };
    out.write_json("gen.json", &sidecar)?;
    println!("gen: {:?} n={} domain={} -> {}", spec.scenario, spec.n, gen.domain().len(), args.out.display());
    let inputs: Vec<&Path> = args.config.iter().map(PathBuf::as_path).collect();
    out.finish("gen", Some(spec.seed), None, to_value(&spec), &inputs)?;
    Ok(())
}

use std::fmt::Write;
use std::path::PathBuf;

use clap::Args;
use invset_core::sim::{self, CorrelationSummary, CoverageReport, ExperimentConfig, Rate};

use crate::config::{load, to_value, with_threads};
use crate::error::CliResult;
use crate::output::OutDir;
use crate::svg;

#[derive(Debug, Args)]
pub struct SimulateArgs {
    /// Experiment config (TOML, or JSON by extension).
    #[arg(long)]
    config: PathBuf,
    /// Master seed; overrides the file.
    #[arg(long)]
    seed: u64,
    #[arg(long)]
    threads: Option<usize>,
    /// Monte Carlo replications.
    #[arg(long)]
    reps: Option<usize>,
    /// Bootstrap resamples per replication.
    #[arg(long)]
    boot: Option<usize>,
    #[arg(long)]
    alpha: Option<f64>,
    /// Also draw coverage against level count as SVG.
    #[arg(long)]
    svg: bool,
    #[arg(long, short)]
    out: PathBuf,
}

fn name<T: serde::Serialize>(v: &T) -> String {
    to_value(v).as_str().unwrap_or_default().to_string()
}

fn opt<T: ToString>(v: Option<T>) -> String {
    v.map(|x| x.to_string()).unwrap_or_default()
}

pub fn coverage_csv(reports: &[CoverageReport]) -> String {
    let mut s = String::from(
        "scenario,n,grid_points,domain_size,n_reps,completed,failed,sci,breakpoints,upper,lower,interval,\
         mc_stderr,level_count,interval_pairs,mean_quantile,mean_redraws\n",
    );
    for r in reports {
        let _ = writeln!(
            s,
            "{},{},{},{},{},{},{},{},{},{},{},{},{},{},{},{},{}",
            name(&r.scenario),
            r.n,
            opt(r.grid_points),
            r.domain_size,
            r.n_reps,
            r.completed,
            r.failed,
            r.sci.rate,
            r.breakpoints.rate,
            r.upper.rate,
            r.lower.rate,
            opt(r.interval.as_ref().map(|i| i.rate)),
            r.sci.mc_stderr,
            r.level_count,
            opt(r.interval_pairs),
            r.mean_quantile,
            r.mean_redraws,
        );
    }
    s
}

/// One row per sweep entry; the SCI rate rides along for comparison.
pub fn sweep_csv(reports: &[CoverageReport]) -> String {
    let mut s = String::from("scenario,n,grid_points,levels,covered,total,rate,mc_stderr,sci\n");
    for r in reports {
        for e in &r.sweep {
            let Rate { covered, total, rate, mc_stderr, .. } = e.coverage;
            let _ = writeln!(
                s,
                "{},{},{},{},{covered},{total},{rate},{mc_stderr},{}",
                name(&r.scenario),
                r.n,
                opt(r.grid_points),
                e.levels,
                r.sci.rate
            );
        }
    }
    s
}

pub fn histogram_csv(c: &CorrelationSummary) -> String {
    let bins = c.histogram.len() as f64;
    let mut s = String::from("bin_lo,bin_hi,count\n");
    for (i, n) in c.histogram.iter().enumerate() {
        let _ = writeln!(s, "{},{},{n}", i as f64 / bins, (i + 1) as f64 / bins);
    }
    s
}

fn pct(r: &Rate) -> String {
    format!("{:.2}", r.percent())
}

pub fn run(args: SimulateArgs) -> CliResult<()> {
    let mut cfg: ExperimentConfig = load(&args.config)?;
    cfg.seed = args.seed;
    if let Some(r) = args.reps {
        cfg.n_reps = r;
    }
    if let Some(b) = args.boot {
        cfg.boot.n_boot = b;
    }
    if let Some(a) = args.alpha {
        cfg.boot.alpha = a;
    }
    // the thread count belongs to the run, not the experiment, so reports
    // stay identical across thread counts
    let threads = args.threads.or(cfg.threads.take());
    cfg.validate()?;

    let report = with_threads(threads, || sim::run(&cfg))??;
    let mut out = OutDir::create(&args.out)?;
    out.write_json("report.json", &report)?;
    if !report.coverage.is_empty() {
        out.write_text("coverage.csv", &coverage_csv(&report.coverage))?;
        if report.coverage.iter().any(|r| !r.sweep.is_empty()) {
            out.write_text("sweep.csv", &sweep_csv(&report.coverage))?;
        }
        if args.svg {
            if let Some(plot) = svg::coverage_plot(&report.coverage, 1.0 - cfg.boot.alpha) {
                out.write_text("coverage.svg", &plot)?;
            }
        }
    }
    if let Some(c) = &report.correlation {
        out.write_text("histogram.csv", &histogram_csv(c))?;
    }

    for r in &report.coverage {
        let grid = r.grid_points.map_or(String::new(), |g| format!(" grid {g}"));
        let interval = r.interval.as_ref().map_or(String::new(), |i| format!(" interval {}", pct(i)));
        println!(
            "{} n {}{grid}: SCI {} upper {} lower {}{interval} (+-{:.2}, {} failed)",
            name(&r.scenario),
            r.n,
            pct(&r.sci),
            pct(&r.upper),
            pct(&r.lower),
            100.0 * r.sci.two_stderr,
            r.failed
        );
        for e in &r.sweep {
            println!("  {} levels: {}", e.levels, pct(&e.coverage));
        }
    }
    if let Some(c) = &report.correlation {
        println!("{}: mean |cor| {:.3}, mode {:.3} over {} pairs", name(&c.scenario), c.mean_abs, c.mode, c.pairs);
    }
    out.finish("simulate", Some(cfg.seed), threads, to_value(&cfg), &[args.config.as_path()])?;
    Ok(())
}

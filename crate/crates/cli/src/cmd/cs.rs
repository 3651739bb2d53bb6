use std::path::PathBuf;

use clap::{Args, ValueEnum};
use invset_core::domain::threshold_set;
use invset_core::inversion::{interval_cs, lower_excursion_cs, upper_excursion_cs};
use invset_core::{io, Direction};
use serde::Serialize;

use crate::config::parse_interval;
use crate::error::{CliError, CliResult};
use crate::output::OutDir;

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum DirectionArg {
    Upper,
    Lower,
    Both,
}

#[derive(Debug, Args)]
pub struct CsArgs {
    /// Band CSV written by `scb`.
    #[arg(long)]
    band: PathBuf,
    /// Excursion levels, comma separated.
    #[arg(long, value_delimiter = ',', allow_hyphen_values = true)]
    levels: Vec<f64>,
    /// Intervals `a:b`, comma separated.
    #[arg(long, value_delimiter = ',', allow_hyphen_values = true, value_parser = parse_interval)]
    intervals: Vec<(f64, f64)>,
    #[arg(long, value_enum, default_value = "upper")]
    direction: DirectionArg,
    /// Nominal level the band was built at (recorded only).
    #[arg(long, default_value_t = 0.05)]
    alpha: f64,
    #[arg(long, short)]
    out: PathBuf,
}

#[derive(Serialize)]
struct SetSummary {
    kind: &'static str,
    a: f64,
    /// Upper end of an interval; absent for excursions.
    b: Option<f64>,
    file: String,
    inner: usize,
    estimate: usize,
    outer: usize,
}

#[derive(Serialize)]
struct Summary {
    band: String,
    alpha: f64,
    domain_size: usize,
    sets: Vec<SetSummary>,
}

pub fn run(args: CsArgs) -> CliResult<()> {
    if args.levels.is_empty() && args.intervals.is_empty() {
        return Err(CliError::Usage("cs: give --levels and/or --intervals".into()));
    }
    let file = io::read_band(&args.band, args.alpha)?;
    let (band, est) = (&file.band, &file.estimate);
    let mut out = OutDir::create(&args.out)?;
    let mut sets = Vec::new();

    let directions: &[Direction] = match args.direction {
        DirectionArg::Upper => &[Direction::AtLeast],
        DirectionArg::Lower => &[Direction::AtMost],
        DirectionArg::Both => &[Direction::AtLeast, Direction::AtMost],
    };
    for &dir in directions {
        let kind = if dir == Direction::AtLeast { "upper" } else { "lower" };
        for (k, &c) in args.levels.iter().enumerate() {
            let cs = if dir == Direction::AtLeast { upper_excursion_cs(band, c) } else { lower_excursion_cs(band, c) };
            let hat = threshold_set(est, c, dir);
            let name = format!("{kind}_{k}.csv");
            out.write(&name, |w| io::write_excursion_cs(w, &cs, &hat))?;
            sets.push(SetSummary {
                kind,
                a: c,
                b: None,
                file: name,
                inner: cs.inner.count(),
                estimate: hat.count(),
                outer: cs.outer.count(),
            });
        }
    }
    for (k, &(a, b)) in args.intervals.iter().enumerate() {
        let cs = interval_cs(band, a, b)?;
        let hat = threshold_set(est, a, Direction::AtLeast).intersection(&threshold_set(est, b, Direction::AtMost))?;
        let name = format!("interval_{k}.csv");
        out.write(&name, |w| io::write_confidence_sets(w, &cs.inner, &hat, &cs.outer))?;
        sets.push(SetSummary {
            kind: "interval",
            a,
            b: Some(b),
            file: name,
            inner: cs.inner.count(),
            estimate: hat.count(),
            outer: cs.outer.count(),
        });
    }

    for s in &sets {
        let range = s.b.map_or(format!("{}", s.a), |b| format!("[{}, {}]", s.a, b));
        println!("cs: {} {}: inner {} estimate {} outer {}", s.kind, range, s.inner, s.estimate, s.outer);
    }
    let summary = Summary { band: args.band.display().to_string(), alpha: args.alpha, domain_size: band.domain().len(), sets };
    out.write_json("cs.json", &summary)?;
    let config = serde_json::json!({
        "levels": args.levels,
        "intervals": args.intervals,
        "direction": format!("{:?}", args.direction).to_lowercase(),
        "alpha": args.alpha,
    });
    out.finish("cs", None, None, config, &[args.band.as_path()])?;
    Ok(())
}

//! Config files and flag parsing helpers.

use std::path::Path;

use invset_core::datagen::Scenario;
use serde::de::DeserializeOwned;

use crate::error::{CliError, CliResult};

/// Read a TOML file, or JSON when the extension is `.json`.
pub fn load<T: DeserializeOwned>(path: &Path) -> CliResult<T> {
    let text = std::fs::read_to_string(path).map_err(|e| CliError::io(path, e))?;
    let is_json = path.extension().is_some_and(|e| e.eq_ignore_ascii_case("json"));
    let parsed = if is_json {
        serde_json::from_str(&text).map_err(|e| e.to_string())
    } else {
        toml::from_str(&text).map_err(|e| e.to_string())
    };
    parsed.map_err(|msg| CliError::Usage(format!("{}: {}", path.display(), msg.trim_end())))
}

pub fn parse_scenario(s: &str) -> Result<Scenario, String> {
    serde_json::from_value(serde_json::Value::String(s.to_string())).map_err(|_| {
        format!("unknown scenario {s:?}; expected dense1d, dense2d, regression_linear, regression_logistic or coefficients")
    })
}

/// `a:b` with `a < b` left to the interval constructor.
pub fn parse_interval(s: &str) -> Result<(f64, f64), String> {
    let (a, b) = s.split_once(':').ok_or_else(|| format!("interval {s:?} is not of the form a:b"))?;
    let num = |t: &str| t.trim().parse::<f64>().map_err(|e| format!("interval {s:?}: {e}"));
    Ok((num(a)?, num(b)?))
}

/// Run `f` on a dedicated pool when a thread count is given.
pub fn with_threads<T: Send>(threads: Option<usize>, f: impl FnOnce() -> T + Send) -> CliResult<T> {
    match threads {
        Some(0) => Err(CliError::Usage("--threads must be at least 1".into())),
        Some(n) => {
            let pool = rayon::ThreadPoolBuilder::new()
                .num_threads(n)
                .build()
                .map_err(|e| CliError::Usage(format!("cannot start {n} threads: {e}")))?;
            Ok(pool.install(f))
        }
        None => Ok(f()),
    }
}

pub fn to_value<T: serde::Serialize>(v: &T) -> serde_json::Value {
    serde_json::to_value(v).expect("configs serialize")
}

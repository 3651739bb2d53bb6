use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("objects live on different domains")]
    DomainMismatch,
    #[error("invalid domain: {0}")]
    InvalidDomain(String),
    #[error("invalid field: {0}")]
    InvalidField(String),
    #[error("invalid band: {0}")]
    InvalidBand(String),
    #[error("invalid interval: a = {a} must be strictly below b = {b}")]
    InvalidInterval { a: f64, b: f64 },
    #[error("level set is empty")]
    EmptyLevels,
    #[error("invalid design matrix: {0}")]
    InvalidDesign(String),
    #[error("design is rank deficient (pivot {pivot} at column {column})")]
    RankDeficient { column: usize, pivot: f64 },
    #[error("IRLS did not converge after {iterations} iterations")]
    NotConverged { iterations: usize },
    #[error("quasi-complete separation detected (|beta| = {max_abs_beta:.3} on standardized scale)")]
    Separation { max_abs_beta: f64 },
    #[error("standard error is zero at point {index}")]
    DegenerateSe { index: usize },
    #[error("bootstrap resampling failed {retries} consecutive times: {last}")]
    BootstrapDegenerate { retries: usize, last: Box<Error> },
    #[error("{failed} of {total} replications failed (limit is 1%)")]
    ExcessiveFailures { failed: usize, total: usize },
    #[error("invalid configuration: {0}")]
    InvalidConfig(String),
    #[error("{path}:{line}: {message}")]
    Parse {
        path: String,
        line: u64,
        message: String,
    },
    #[error("internal invariant violated: {0}")]
    Internal(String),
    #[error(transparent)]
    Io(#[from] std::io::Error),
    #[error(transparent)]
    Csv(#[from] csv::Error),
    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

/// Coarse classification used for process exit codes and failure tallies.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum ErrorKind {
    Usage,
    Data,
    Numeric,
    Internal,
}

impl Error {
    pub fn kind(&self) -> ErrorKind {
        use Error::*;
        match self {
            InvalidConfig(_) => ErrorKind::Usage,
            DomainMismatch | InvalidDomain(_) | InvalidField(_) | InvalidBand(_)
            | InvalidInterval { .. } | EmptyLevels | InvalidDesign(_) | Parse { .. } | Io(_)
            | Csv(_) | Json(_) => ErrorKind::Data,
            RankDeficient { .. }
            | NotConverged { .. }
            | Separation { .. }
            | DegenerateSe { .. }
            | BootstrapDegenerate { .. }
            | ExcessiveFailures { .. } => ErrorKind::Numeric,
            Internal(_) => ErrorKind::Internal,
        }
    }

    /// Short stable name, used as a key in failure tallies.
    pub fn code(&self) -> &'static str {
        use Error::*;
        match self {
            DomainMismatch => "domain_mismatch",
            InvalidDomain(_) => "invalid_domain",
            InvalidField(_) => "invalid_field",
            InvalidBand(_) => "invalid_band",
            InvalidInterval { .. } => "invalid_interval",
            EmptyLevels => "empty_levels",
            InvalidDesign(_) => "invalid_design",
            RankDeficient { .. } => "rank_deficient",
            NotConverged { .. } => "not_converged",
            Separation { .. } => "separation",
            DegenerateSe { .. } => "degenerate_se",
            BootstrapDegenerate { .. } => "bootstrap_degenerate",
            ExcessiveFailures { .. } => "excessive_failures",
            InvalidConfig(_) => "invalid_config",
            Parse { .. } => "parse",
            Internal(_) => "internal",
            Io(_) => "io",
            Csv(_) => "csv",
            Json(_) => "json",
        }
    }
}

use thiserror::Error;

/// Errors produced by the model, sampler, estimator and I/O layers.
#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid grid: {0}")]
    InvalidGrid(String),

    #[error("site index {site} out of range for a lattice of {n} sites")]
    SiteOutOfRange { site: usize, n: usize },

    #[error("time index {t} has no previous slice")]
    NoPastSlice { t: usize },

    #[error("dimension mismatch: {0}")]
    Dimension(String),

    #[error("brute-force enumeration refused for {n} sites (limit {limit})")]
    LatticeTooLarge { n: usize, limit: usize },

    #[error("monotone coupling requires rho1 >= 0 (got {rho1}); use plain Gibbs sampling instead")]
    NonMonotone { rho1: f64 },

    #[error("coupling from the past did not coalesce within {sweeps} sweeps")]
    NoCoalescence { sweeps: u64 },

    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("quasi-Newton did not converge after {iterations} iterations (gradient sup-norm {grad_norm:e})")]
    NoConvergence { iterations: usize, grad_norm: f64 },

    #[error("line search failed at iteration {iteration}")]
    LineSearch { iteration: usize },

    #[error("degenerate design: column `{column}` is identically zero")]
    ZeroColumn { column: String },

    #[error("singular information matrix: column `{column}` is collinear with {others:?}")]
    Singular { column: String, others: Vec<String> },

    #[error("EM iteration {iteration}: {source}")]
    EmStep {
        iteration: usize,
        #[source]
        source: Box<Error>,
    },

    #[error("bootstrap needs at least 2 successful replicates, got {ok}")]
    Bootstrap { ok: usize },

    #[error("data validation: {0}")]
    Validation(String),

    #[error("empty candidate set")]
    EmptyCandidates,

    #[error("duplicate candidate label `{0}`")]
    DuplicateLabel(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Csv(csv::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

impl From<csv::Error> for Error {
    fn from(e: csv::Error) -> Self {
        if e.is_io_error() {
            match e.into_kind() {
                csv::ErrorKind::Io(io) => Error::Io(io),
                _ => unreachable!(),
            }
        } else {
            Error::Csv(e)
        }
    }
}

impl Error {
    /// True for failures of the numerical routines (optimizer, linear
    /// algebra, sampler coalescence) as opposed to bad input.
    pub fn is_numerical(&self) -> bool {
        match self {
            Error::NoCoalescence { .. }
            | Error::NoConvergence { .. }
            | Error::LineSearch { .. }
            | Error::ZeroColumn { .. }
            | Error::Singular { .. }
            | Error::Bootstrap { .. } => true,
            Error::EmStep { source, .. } => source.is_numerical(),
            _ => false,
        }
    }

    /// True for rejected input files.
    pub fn is_validation(&self) -> bool {
        matches!(self, Error::Validation(_) | Error::Csv(_))
    }
}

pub type Result<T, E = Error> = std::result::Result<T, E>;

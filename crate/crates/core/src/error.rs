use thiserror::Error;

/// Errors raised anywhere in the crate.
///
/// The variants map onto the CLI exit codes: configuration and usage problems
/// exit with 2, numerical and precision problems with 3.
#[derive(Debug, Error)]
pub enum Error {
    #[error("configuration error in `{field}`: {message}")]
    Config { field: String, message: String },

    #[error("domain error: {0}")]
    Domain(String),

    #[error("resource limit exceeded: {0}")]
    Resource(String),

    #[error(
        "precision target {target:e} not reachable (best certified tail bound {achievable:e})"
    )]
    Precision { target: f64, achievable: f64 },

    #[error("singular input: {0}")]
    SingularInput(String),

    #[error("point too close to a chamber wall (distance {distance:e}); shrink the step")]
    Boundary { distance: f64 },

    #[error("data error: {0}")]
    Data(String),

    #[error("numerical error: {0}")]
    Numerical(String),

    #[error("internal error: {0}")]
    Internal(String),

    #[error(
        "rejection sampler acceptance rate {rate:e} below 1e-4; use a larger t0 or radial mode"
    )]
    Efficiency { rate: f64 },

    #[error(
        "step size underflow at time {time} (wall distance {distance:e}) after {retries} retries"
    )]
    StepFailure {
        time: f64,
        distance: f64,
        retries: usize,
    },

    #[error("degenerate estimate: {0}")]
    Degenerate(String),

    #[error("statistics error: {0}")]
    Statistics(String),

    #[error("unknown experiment `{0}`")]
    UnknownExperiment(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

impl Error {
    pub(crate) fn config(field: &str, message: impl Into<String>) -> Self {
        Error::Config {
            field: field.to_string(),
            message: message.into(),
        }
    }

    /// Process exit code used by the command line front end.
    pub fn exit_code(&self) -> i32 {
        match self {
            Error::Config { .. } | Error::UnknownExperiment(_) | Error::Domain(_) => 2,
            _ => 3,
        }
    }
}

pub type Result<T> = std::result::Result<T, Error>;

use thiserror::Error;

/// Errors raised by the library. The CLI maps every variant except
/// [`Error::Internal`] to exit code 2.
#[derive(Debug, Error)]
pub enum Error {
    #[error("cutoff below binomial degree: cutoff {cutoff} < N {degree}")]
    CutoffBelowDegree { cutoff: usize, degree: usize },

    #[error("unphysical squeezing: |t| = {0} must be below 1")]
    UnphysicalSqueezing(f64),

    #[error("dimension mismatch: {0}")]
    DimensionMismatch(String),

    #[error("degenerate device pair: Tr[ΛΓ] = 0")]
    DegenerateDevicePair,

    #[error("conditioning event has zero probability")]
    ZeroProbabilityCondition,

    #[error("unknown label `{0}`")]
    UnknownLabel(String),

    #[error("operator `{label}` is not non-negative (smallest eigenvalue {min_eig:.3e})")]
    NotNonNegative { label: String, min_eig: f64 },

    #[error("matrix is not unitary (max |U†U - 1| = {0:.3e})")]
    NotUnitary(f64),

    #[error("photon cap {cap} exceeds the exact expansion limit of {limit}")]
    PhotonCapExceeded { cap: usize, limit: usize },

    #[error("no roots: zero-photon target")]
    ZeroPhotonTarget,

    #[error("all-zero target state")]
    ZeroTarget,

    #[error("first-column zero: state unreachable (|U[{row},0]| = {magnitude:.3e})")]
    Unreachable { row: usize, magnitude: f64 },

    #[error("invalid detection pattern: {0}")]
    InvalidPattern(String),

    #[error("optimizer failed: {0}")]
    Optimizer(String),

    #[error("invalid samples: {0}")]
    InvalidSamples(String),

    #[error("unitary is not the discrete Fourier transform required for this measurement")]
    NotDft,

    #[error("missing phase settings: {}", .0.join(", "))]
    MissingPhaseSettings(Vec<String>),

    #[error("zero scaling factor: the estimator is undefined")]
    ZeroScaling,

    #[error("invalid detector efficiency {0}: must lie in (0, 1]")]
    InvalidEfficiency(f64),

    #[error("invalid configuration: {0}")]
    InvalidConfig(String),

    #[error("I/O error: {0}")]
    Io(#[from] std::io::Error),

    #[error("JSON error: {0}")]
    Json(#[from] serde_json::Error),

    #[error("CSV error: {0}")]
    Csv(#[from] csv::Error),

    #[error("internal error: {0}")]
    Internal(String),
}

impl Error {
    /// True for failures caused by the caller's input rather than the library.
    pub fn is_user_error(&self) -> bool {
        !matches!(self, Error::Internal(_))
    }
}

pub type Result<T> = std::result::Result<T, Error>;

use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("N = {n} must exceed N0 = {n_zero}")]
    Range { n: u64, n_zero: u64 },

    #[error("invalid finite-difference step {step:e} (allowed range (0, {max:e}])")]
    Step { step: f64, max: f64 },

    #[error("non-finite field value at {0:?}")]
    Evaluation(Vec<f64>),

    #[error("matrix is not symmetric (relative asymmetry {0:e})")]
    Symmetry(f64),

    #[error("ambiguous maximum classification: {0}")]
    AmbiguousClassification(String),

    #[error("maximum is not unique: {0}")]
    NonUniqueMaximum(String),

    /// A modelling assumption failed numerically; `equation` names the
    /// defining quantity (for example `F'(2)_Omega`).
    #[error("assumption violated ({equation}): {detail}")]
    AssumptionViolation { equation: &'static str, detail: String },

    #[error("Hessian is not negative definite at {0:?}")]
    Definiteness(Vec<f64>),

    #[error("theorem mismatch: {0}")]
    TheoremMismatch(String),

    #[error("missing constant {0}")]
    MissingConstant(&'static str),

    #[error("degenerate Hessian at the maximizer (|det| = {0:e})")]
    Degeneracy(f64),

    #[error("domain error: {0}")]
    Domain(String),

    #[error("quadrature budget exhausted: best estimate {estimate:e}, error estimate {error:e}")]
    Budget { estimate: f64, error: f64 },

    #[error("tilt too large: {0}")]
    TiltTooLarge(String),

    #[error("xi_1 = {xi} is at or beyond the MGF pole (rate {rate})")]
    Pole { xi: f64, rate: f64 },

    #[error("rejection envelope failure: acceptance rate {0:e}")]
    Envelope(f64),

    #[error("insufficient samples: {0} < 100")]
    InsufficientSamples(usize),

    #[error("invalid problem definition: {0}")]
    InvalidProblem(String),

    #[error("precondition failed: {0}")]
    Precondition(String),

    #[error("config error: {0}")]
    Config(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

impl Error {
    pub(crate) fn assumption(equation: &'static str, detail: impl Into<String>) -> Self {
        Error::AssumptionViolation {
            equation,
            detail: detail.into(),
        }
    }
}

use thiserror::Error;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid density: {0}")]
    InvalidDensity(String),

    #[error("reversed integration bounds: lo = {lo} > hi = {hi}")]
    ReversedBounds { lo: f64, hi: f64 },

    #[error("polynomial degree {degree} exceeds the cap of {cap}; use a grid convolution instead")]
    DegreeCap { degree: usize, cap: usize },

    #[error("scale factor must be nonzero")]
    ZeroScale,

    #[error("density is not normalized (mass = {0})")]
    NotNormalized(f64),

    #[error("mass must be positive (mass = {0})")]
    NonPositiveMass(f64),

    #[error("negative density value {value} at x = {x}")]
    NegativeDensity { x: f64, value: f64 },

    #[error("hypothesis not satisfied: {0}")]
    Hypothesis(String),

    #[error("parameter out of domain: {0}")]
    Domain(String),

    #[error("invalid model: {0}")]
    InvalidModel(String),

    #[error("grid too coarse: estimated error {estimate:e} above {limit:e}")]
    GridTooCoarse { estimate: f64, limit: f64 },

    #[error("theorem-grade check failed: {0}")]
    TheoremViolation(String),

    #[error("certificate did not re-verify: {0}")]
    Certificate(String),

    #[error("seed {seed} trial {trial} ({family}): {source}")]
    InTrial { seed: u64, trial: u64, family: &'static str, source: Box<Error> },

    #[error("configuration error: {0}")]
    Config(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

impl Error {
    /// The innermost error, skipping trial context.
    pub fn root(&self) -> &Error {
        match self {
            Error::InTrial { source, .. } => source.root(),
            other => other,
        }
    }
}

pub type Result<T> = std::result::Result<T, Error>;

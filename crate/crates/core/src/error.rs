use thiserror::Error;

/// Errors surfaced by the simulator, calibration, environment and learning layers.
#[derive(Debug, Error)]
pub enum Error {
    #[error("non-finite simulation state at t = {t:.4} s")]
    NonFiniteState { t: f64 },

    #[error("offset calibration requires at least one frame")]
    EmptyWindow,

    #[error("desired endpoints coincide (|P1 - P2| = {0:e})")]
    DegeneratePoints(f64),

    #[error("unknown reference kind `{0}`")]
    UnknownKind(String),

    #[error("unknown observation variant `{0}`")]
    UnknownVariant(String),

    #[error("initial-state sampling exhausted: {accepted} accepted out of {attempts} attempts")]
    ExhaustedSampling { accepted: usize, attempts: usize },

    #[error("backlash probe at q_d = {q_d:.4} saturated against a joint limit")]
    SaturatedProbe { q_d: f64 },

    #[error("covariance matrix lost positive definiteness")]
    DegenerateCovariance,

    #[error("shape mismatch: expected {expected}, got {got}")]
    ShapeMismatch { expected: usize, got: usize },

    #[error("non-finite loss during policy update")]
    NonFiniteLoss,

    #[error("{0} self-test check(s) failed")]
    CheckFailed(usize),

    #[error("invalid configuration: {0}")]
    InvalidConfig(String),

    #[error("malformed input: {0}")]
    Malformed(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Csv(#[from] csv::Error),

    #[error(transparent)]
    TomlDe(#[from] toml::de::Error),

    #[error(transparent)]
    TomlSer(#[from] toml::ser::Error),
}

pub type Result<T> = std::result::Result<T, Error>;

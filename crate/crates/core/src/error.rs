use thiserror::Error;

#[derive(Debug, Error)]
pub enum Error {
    #[error("matrix is not unitary (deviation {0:.3e})")]
    NotUnitary(f64),
    #[error("su(2) logarithm undefined near -I (rotation angle pi)")]
    AntipodalSingularity,
    #[error("matrix is singular (smallest singular value {0:.3e})")]
    Singular(f64),
    #[error("aliasing risk: {samples} samples per quadrant cannot resolve degree {degree}")]
    AliasingRisk { samples: usize, degree: usize },
    #[error("need at least {needed} points, got {got}")]
    InsufficientPoints { needed: usize, got: usize },
    #[error("spline knots must be strictly increasing")]
    NonMonotonicKnots,
    #[error("time {t} outside pulse domain [0, {duration}]")]
    OutOfDomain { t: f64, duration: f64 },
    #[error("segment rotation angle {0:.4} is outside the Magnus convergence range (< pi)")]
    MagnusRangeViolation(f64),
    #[error("sample angles do not match the canonical midpoint grid: {0}")]
    GridMismatch(String),
    #[error("leading coefficient vanished at degree {degree} (trace {trace:.3e})")]
    DegenerateCoefficient { degree: usize, trace: f64 },
    #[error("reference PTM block is ill-conditioned (smallest eigenvalue {0:.3e})")]
    ReferenceIllConditioned(f64),
    #[error("polar projection failed: {0}")]
    PolarSingular(String),
    #[error("need at least {needed} phases, got {got}")]
    TooFewPoints { needed: usize, got: usize },
    #[error("mismatched reconstruction inputs: {0}")]
    MismatchedConfig(String),
    #[error("Fisher information matrix is singular")]
    SingularFim,
    #[error("invalid configuration: {0}")]
    Config(String),
    #[error(transparent)]
    Io(#[from] std::io::Error),
    #[error(transparent)]
    Csv(#[from] csv::Error),
    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

pub type Result<T> = std::result::Result<T, Error>;

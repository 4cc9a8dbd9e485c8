use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Clone, Error)]
pub enum Error {
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),
    #[error("time {t} outside scenario domain [0, {t_max}]")]
    Domain { t: f64, t_max: f64 },
    #[error("dimension mismatch: expected {expected}, found {found}")]
    DimensionMismatch { expected: usize, found: usize },
    #[error("truncation: tail mass {tail:.3e} beyond n_max={n_max} exceeds {threshold:.1e}")]
    Truncation { tail: f64, n_max: usize, threshold: f64 },
    #[error("chart singularity at t={t}")]
    ChartSingularity { t: f64 },
    #[error("step size underflow at t={t}")]
    StepUnderflow { t: f64 },
    #[error("condition violated: {0}")]
    ConditionViolated(String),
    #[error("series did not converge: {0}")]
    SeriesDivergence(String),
    #[error("quadrature failed on [{a}, {b}]")]
    QuadratureFailure { a: f64, b: f64 },
    #[error("need at least {needed} uniformly spaced samples")]
    InsufficientSamples { needed: usize },
    #[error("no closed form for this case: {0}")]
    NoClosedForm(String),
    #[error("parse error: {0}")]
    Parse(String),
    #[error("io error: {0}")]
    Io(String),
}

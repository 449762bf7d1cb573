use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("{name} must be positive, got {value}")]
    NonPositiveParameter { name: &'static str, value: f64 },

    #[error("{name} must be finite, got {value}")]
    NonFiniteParameter { name: &'static str, value: f64 },

    #[error("beta = {beta} lies outside the admissible range [{lo}, {hi}]")]
    ConstantBetaOutOfRange { beta: f64, lo: f64, hi: f64 },

    #[error(
        "beta running average {average} at t = {t} lies outside the admissible range [{lo}, {hi}]"
    )]
    BetaOutOfRange {
        t: f64,
        average: f64,
        lo: f64,
        hi: f64,
    },

    #[error("beta table is empty")]
    EmptyTable,

    #[error("invalid beta table: {0}")]
    InvalidTable(String),

    #[error("time must be positive, got {0}")]
    NonPositiveTime(f64),

    #[error("time must be nonnegative, got {0}")]
    NegativeTime(f64),

    #[error("probability {0} outside [0, 1)")]
    ProbabilityOutOfRange(f64),

    #[error("service distribution is degenerate at the origin (beta = -lambda)")]
    DegenerateDistribution,

    #[error("kernel integral diverges: tail rate lambda + beta = {tail_rate} is not positive")]
    DivergentKernelIntegral { tail_rate: f64 },

    #[error("grid steps differ: {0} vs {1}")]
    StepMismatch(f64, f64),

    #[error(
        "grid step {step} too coarse: step * (lambda + max|beta|) = {product} exceeds {limit}"
    )]
    StepTooCoarse { step: f64, product: f64, limit: f64 },

    #[error("convolution series needs {needed} terms, budget is {budget}")]
    TruncationBudgetExceeded { needed: usize, budget: usize },

    #[error("Laplace variable must be nonnegative, got {0}")]
    NegativeS(f64),

    #[error("quadrature failed to converge on [{a}, {b}] (estimated error {error})")]
    QuadratureFailure { a: f64, b: f64, error: f64 },

    #[error("sample is empty")]
    EmptySample,

    #[error("invalid grid: {0}")]
    InvalidGrid(String),

    #[error("i/o error: {0}")]
    Io(String),
}

impl From<std::io::Error> for Error {
    fn from(e: std::io::Error) -> Self {
        Error::Io(e.to_string())
    }
}

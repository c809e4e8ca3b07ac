use thiserror::Error;

use crate::series::RationalMode;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("chain does not resolve the series: series level {series_level} does not divide {last}")]
    ChainDoesNotResolve { series_level: u64, last: u64 },

    #[error("integer overflow while computing {0}")]
    Overflow(&'static str),

    #[error("diophantine certificate failed at k = {k:?}: |w.k| |k|^e = {value:e} <= gamma = {gamma:e}")]
    CertificateFailure { k: Vec<i64>, value: f64, gamma: f64 },

    #[error("series has a nonzero average (zero-mode coefficient {re:e} + {im:e}i)")]
    NonzeroAverage { re: f64, im: f64 },

    #[error("resonant mode {mode}: divisor {divisor:e}")]
    ResonantMode { mode: RationalMode, divisor: f64 },

    #[error("support touches the zero-padding margin at ({x}, {y})")]
    SupportInPadding { x: f64, y: f64 },

    #[error("Beltrami coefficient sup {sup} is not below 1 (bound {bound})")]
    NotContractive { sup: f64, bound: f64 },

    #[error("iteration budget of {max_iter} exceeded; last successive difference {last_diff:e}")]
    IterationBudgetExceeded { max_iter: usize, last_diff: f64 },

    #[error("successive-difference ratio {ratio} exceeds 1 at iteration {iteration}")]
    ContractivityViolated { iteration: usize, ratio: f64 },

    #[error("degenerate normalization: |f(1)| = {0:e}")]
    DegenerateNormalization(f64),

    #[error("|1 - mu conj(nu)| = {0:e} is too close to zero")]
    DenominatorNearZero(f64),

    #[error("coefficient is limit periodic; a periodic coefficient is required")]
    NotPeriodic,

    #[error("level {level} is not compatible with the declared period {period}")]
    PeriodMismatch { level: u64, period: String },

    #[error("level {level} (chain index {index}): {source}")]
    Level {
        index: usize,
        level: u64,
        #[source]
        source: Box<Error>,
    },

    #[error("grid mismatch: {0}")]
    GridMismatch(String),

    #[error("i/o: {0}")]
    Io(String),
}

impl From<std::io::Error> for Error {
    fn from(e: std::io::Error) -> Self {
        Error::Io(e.to_string())
    }
}

use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("malformed row at line {line}: {reason}")]
    MalformedRow { line: u64, reason: String },

    #[error("a tick series needs at least two observations, got {0}")]
    FewerThanTwoTicks(usize),

    #[error("non-finite value in {field} at record {index}")]
    NonFiniteValue { field: &'static str, index: usize },

    #[error("observation times not strictly increasing at record {index}")]
    NonMonotoneTimes { index: usize },

    #[error("invalid tuning parameter K={k} for n={n}: {reason}")]
    InvalidK { k: usize, n: usize, reason: &'static str },

    #[error("invalid index sequence: {0}")]
    InvalidIndices(String),

    #[error("invalid window: {0}")]
    InvalidWindow(String),

    #[error("window of {s} blocks starting at block {start} exceeds {n} increments (K={k})")]
    WindowOutOfRange {
        start: usize,
        s: usize,
        k: usize,
        n: usize,
    },

    #[error("statistic is not finite: {0}")]
    NonFiniteStatistic(f64),

    #[error("invalid simulation config: {0}")]
    InvalidConfig(String),

    #[error("fractional MA parameter u={0} outside (-0.5, 0.5)")]
    InvalidU(f64),

    #[error("block too small: {0}")]
    BlockTooSmall(String),

    #[error("degenerate regression design: {0}")]
    DegenerateDesign(String),

    #[error("io: {0}")]
    Io(#[from] std::io::Error),
}

impl Error {
    /// Stable machine-readable name of the variant.
    pub fn code(&self) -> &'static str {
        match self {
            Error::MalformedRow { .. } => "MalformedRow",
            Error::FewerThanTwoTicks(_) => "FewerThanTwoTicks",
            Error::NonFiniteValue { .. } => "NonFiniteValue",
            Error::NonMonotoneTimes { .. } => "NonMonotoneTimes",
            Error::InvalidK { .. } => "InvalidK",
            Error::InvalidIndices(_) => "InvalidIndices",
            Error::InvalidWindow(_) => "InvalidWindow",
            Error::WindowOutOfRange { .. } => "WindowOutOfRange",
            Error::NonFiniteStatistic(_) => "NonFiniteStatistic",
            Error::InvalidConfig(_) => "InvalidConfig",
            Error::InvalidU(_) => "InvalidU",
            Error::BlockTooSmall(_) => "BlockTooSmall",
            Error::DegenerateDesign(_) => "DegenerateDesign",
            Error::Io(_) => "Io",
        }
    }
}

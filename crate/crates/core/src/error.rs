use alloc::string::String;

pub type Result<T> = core::result::Result<T, Error>;

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum Error {
    #[error("invalid {what}: {detail}")]
    InvalidParameter { what: &'static str, detail: String },

    #[error("bit count {bits} is not a multiple of {bits_per_symbol} bits per symbol")]
    BitCount { bits: usize, bits_per_symbol: usize },

    #[error("realized period of symbol {symbol} is non-positive ({period:e} s)")]
    NonPositivePeriod { symbol: usize, period: f64 },

    #[error("{clipped} of {total} samples exceed full scale {full_scale} (peak {peak})")]
    Clipping {
        clipped: usize,
        total: usize,
        peak: f64,
        full_scale: f64,
    },

    #[error("power-series output diverges: higher-order power is {ratio:.3}x the linear term")]
    Divergence { ratio: f64 },

    #[error("estimation window of {len} samples too short for order {order}")]
    WindowTooShort { len: usize, order: usize },

    #[error("fit did not converge after {iterations} iterations (residual {residual_db:.3} dB)")]
    FitDidNotConverge { iterations: usize, residual_db: f64 },

    #[error("ill-conditioned fit (condition estimate {condition:e})")]
    IllConditioned { condition: f64 },

    #[error("no preamble found: variance never exceeded the threshold")]
    NoPreamble,

    #[error("FFT size {n_fft} is smaller than the capture length {len}")]
    FftTooShort { n_fft: usize, len: usize },

    #[error("receiver response is singular: {detail}")]
    SingularResponse { detail: String },

    #[error("insufficient training data: {detail}")]
    InsufficientTraining { detail: String },

    #[error("degenerate reference for device {device}: zero spread")]
    DegenerateReference { device: String },

    #[error("fingerprint database is empty")]
    EmptyDatabase,

    #[error("dimension mismatch: expected {expected}, found {found}")]
    DimensionMismatch { expected: usize, found: usize },

    #[error("cannot normalize an all-zero vector")]
    ZeroVector,

    #[error("operation not supported for {0}")]
    Unsupported(&'static str),

    #[error("{function}: argument out of range ({detail})")]
    OutOfRange {
        function: &'static str,
        detail: String,
    },

    #[error("database has no trained projection")]
    NotTrained,

    #[error("database has no identification threshold")]
    NoThreshold,
}

pub(crate) fn invalid(what: &'static str, detail: impl Into<String>) -> Error {
    Error::InvalidParameter {
        what,
        detail: detail.into(),
    }
}

pub(crate) fn out_of_range(function: &'static str, detail: impl Into<String>) -> Error {
    Error::OutOfRange {
        function,
        detail: detail.into(),
    }
}

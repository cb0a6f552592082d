use thiserror::Error;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid parameters: {0}")]
    InvalidParams(String),

    #[error("builder index {index} out of range for {len} builders")]
    IndexOutOfRange { index: usize, len: usize },

    #[error("total bid is zero")]
    ZeroTotalBid,

    #[error("bid h[{index}] = {value} is not positive")]
    NonPositiveBid { index: usize, value: f64 },

    #[error("numeric domain error in {context}: {detail}")]
    Domain { context: &'static str, detail: String },

    #[error("{solver} failed to converge after {iterations} iterations (last change {last_change:e})")]
    NonConvergence {
        solver: &'static str,
        iterations: usize,
        last_change: f64,
    },

    #[error("operation requires {required}, got {actual}")]
    Unsupported { required: &'static str, actual: String },

    #[error("io error: {0}")]
    Io(#[from] std::io::Error),
}

pub type Result<T> = std::result::Result<T, Error>;

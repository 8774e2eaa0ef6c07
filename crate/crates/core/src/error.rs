use alloc::string::String;

pub type Result<T, E = Error> = core::result::Result<T, E>;

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum Error {
    /// Malformed or inconsistent serialized data.
    #[error("format error: {0}")]
    Format(String),
    /// A numeric value outside the accepted domain (NaN, infinity, non-positive scale, ...).
    #[error("value error: {0}")]
    Value(String),
    /// Invalid parameters such as a bit width outside 2..=8.
    #[error("config error: {0}")]
    Config(String),
    #[error("prediction error: {0}")]
    Prediction(String),
    #[error("coding error: {0}")]
    Coding(String),
    #[error("analysis error: {0}")]
    Analysis(String),
}

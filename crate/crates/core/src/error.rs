use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("input error: {0}")]
    Input(String),
    #[error("unsupported: {0}")]
    Unsupported(String),
    #[error("budget exceeded: {what} needs more than {budget}")]
    Budget { what: String, budget: u64 },
    #[error("partition error: {0}")]
    Partition(String),
    #[error("numerical error: {0}")]
    Numerical(String),
    #[error("setup error: {0}")]
    Setup(String),
}

pub type Result<T> = std::result::Result<T, Error>;

pub(crate) fn input<T>(msg: impl Into<String>) -> Result<T> {
    Err(Error::Input(msg.into()))
}

use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("event scheduled at t={time} before the clock (t={clock})")]
    EventInPast { time: f64, clock: f64 },

    #[error("preemption requested on a node without a priority discipline")]
    PreemptionWithoutPriority,

    #[error("measurement window is empty")]
    EmptyWindow,

    #[error("{0}")]
    Logic(String),
}

pub type Result<T, E = Error> = std::result::Result<T, E>;

pub(crate) fn invalid(msg: impl Into<String>) -> Error {
    Error::InvalidParameter(msg.into())
}

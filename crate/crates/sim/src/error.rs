use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum SimError {
    #[error("invalid configuration: {0}")]
    InvalidConfig(String),
    #[error("no {0} peer to act as source")]
    NoEligibleSource(&'static str),
    #[error("invariant violated at t = {time}: {what}")]
    InvariantViolated { time: f64, what: String },
    #[error("no messages left after discarding the warm-up window")]
    EmptyWindow,
}

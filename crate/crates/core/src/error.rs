use thiserror::Error;

/// Errors raised by the simulator. All numeric guards surface here instead of
/// propagating NaN through the totals.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum SimError {
    #[error("invalid parameter `{name}` = {value}: {reason}")]
    InvalidParameter {
        name: &'static str,
        value: f64,
        reason: &'static str,
    },

    #[error("need more bidders than slots (slots = {slots}, bidders = {bidders})")]
    TooFewBidders { slots: usize, bidders: usize },

    #[error("invalid position bias: {0}")]
    InvalidBias(String),

    #[error("non-finite ranking score for bidder {index} at alpha = {alpha}")]
    NonFiniteScore { index: usize, alpha: f64 },

    #[error("bidders are not in ranking order at slot {slot}")]
    NotRankOrdered { slot: usize },

    #[error("series is empty, negative or all zero")]
    DegenerateSeries,

    #[error("need at least {needed} samples, got {got}")]
    TooFewSamples { needed: usize, got: usize },

    #[error("sweep aborted at alpha = {alpha}: {source}")]
    Sweep {
        alpha: f64,
        #[source]
        source: Box<SimError>,
    },
}

pub type Result<T> = std::result::Result<T, SimError>;

pub(crate) fn invalid(name: &'static str, value: f64, reason: &'static str) -> SimError {
    SimError::InvalidParameter {
        name,
        value,
        reason,
    }
}

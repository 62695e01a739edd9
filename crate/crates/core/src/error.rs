//! Error type shared across the crate.

use std::fmt;

/// Errors produced by lattice construction, radio math, and the simulators.
#[derive(Debug, Clone, PartialEq)]
pub enum Error {
    /// A node id that does not exist in the lattice.
    NodeOutOfRange { id: u32, count: u32 },
    /// Ring index outside the valid range for the operation.
    RingOutOfRange { ring: u32, reason: &'static str },
    /// Perturbation radius must satisfy eps < 3/4 for the interference
    /// bound to hold.
    EpsilonOutOfRange(f64),
    /// Path-loss exponent must exceed 2 where the closed-form bounds are
    /// used (they diverge at alpha = 2).
    AlphaOutOfRange(f64),
    /// Non-positive distance passed to a path-loss computation.
    NonPositiveDistance(f64),
    /// The receiver cannot be part of the active transmitter set.
    ReceiverIsActive(u32),
    /// Traffic generation needs at least two nodes.
    TooFewNodes(u32),
    /// Chernoff tail bound requires delta > 0 and expectation > 0.
    InvalidTailArguments { expectation: f64, delta: f64 },
    /// Regression needs at least three strictly positive points.
    InvalidFitInput(&'static str),
    /// Scaling orders outside the allowed parameter ranges.
    InvalidOrders(String),
    /// A tier list that is empty or inconsistent with its configuration.
    InvalidTier(String),
    /// No tier carried traffic, so a network minimum cannot be formed.
    NoTraffickedTier,
}

impl fmt::Display for Error {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Error::NodeOutOfRange { id, count } => {
                write!(f, "node id {id} out of range (lattice has {count} nodes)")
            }
            Error::RingOutOfRange { ring, reason } => {
                write!(f, "ring index {ring} invalid: {reason}")
            }
            Error::EpsilonOutOfRange(eps) => {
                write!(f, "perturbation radius eps = {eps} must lie in [0, 3/4)")
            }
            Error::AlphaOutOfRange(alpha) => {
                write!(f, "path-loss exponent alpha = {alpha} must exceed 2")
            }
            Error::NonPositiveDistance(d) => {
                write!(f, "distance {d} must be positive")
            }
            Error::ReceiverIsActive(id) => {
                write!(f, "receiver {id} is listed in the active transmitter set")
            }
            Error::TooFewNodes(n) => {
                write!(f, "need at least 2 nodes, got {n}")
            }
            Error::InvalidTailArguments { expectation, delta } => {
                write!(
                    f,
                    "tail bound needs expectation > 0 and delta > 0 (got {expectation}, {delta})"
                )
            }
            Error::InvalidFitInput(why) => write!(f, "cannot fit scaling exponent: {why}"),
            Error::InvalidOrders(why) => write!(f, "invalid scaling orders: {why}"),
            Error::InvalidTier(why) => write!(f, "invalid tier configuration: {why}"),
            Error::NoTraffickedTier => {
                write!(f, "no tier carried traffic; network rate undefined")
            }
        }
    }
}

impl std::error::Error for Error {}

pub type Result<T> = std::result::Result<T, Error>;

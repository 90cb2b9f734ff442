//! Error type shared across the crate.

use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    /// A configuration or input value violates a documented invariant.
    #[error("invalid configuration: {0}")]
    InvalidConfig(String),

    /// Channel gains must be nonnegative.
    #[error("channel gain must be nonnegative, got {0}")]
    NegativeGain(f64),

    /// Traffic is scheduled on a link whose achievable rate is zero.
    #[error("{bits} bits scheduled on a link with zero rate (link {link:?})")]
    InfeasibleLink { link: Option<(usize, usize)>, bits: f64 },

    /// A layer index fell outside `1..=num_layers`.
    #[error("layer {layer} out of range 1..={num_layers}")]
    LayerOutOfRange { layer: usize, num_layers: usize },

    /// Aggregation was requested over a selection whose scores sum to zero.
    #[error("degenerate gate: selected experts have zero total score")]
    DegenerateGate,

    /// Expert selection needs at least one candidate.
    #[error("no candidate experts")]
    EmptyCandidates,

    /// A parameter fell outside its documented domain.
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    /// An exhaustive oracle was asked to enumerate beyond its size guard.
    #[error("enumeration guard exceeded: {0}")]
    EnumerationGuard(String),

    /// More links need subcarriers than there are subcarriers.
    #[error("{links} active links exceed {subcarriers} subcarriers")]
    CapacityExceeded { links: usize, subcarriers: usize },

    /// No finite-cost subcarrier matching covers every active link.
    #[error("no finite-cost subcarrier matching exists")]
    InfeasibleAssignment,
}

//! Energy-optimal expert selection and subcarrier allocation for distributed
//! mixture-of-experts (DMoE) edge systems.
//!
//! A DMoE deployment spreads the experts of a mixture-of-experts model over
//! wireless edge nodes. Serving a query then couples two resource decisions
//! per inference round: which experts process each token (trading gating
//! score against transmission and compute energy) and which OFDMA subcarrier
//! carries each inter-expert link. This crate provides the building blocks
//! for that optimization:
//!
//! - [`sysmodel`] — channel, rate and energy models plus seeded Rayleigh
//!   channel sampling;
//! - [`gating`] — synthetic gating tensors, QoS thresholds and aggregation
//!   weights;
//! - [`selection`] — per-token dynamic expert selection (DES) by branch and
//!   bound with an LP-relaxation bound, a brute-force oracle and a Top-k
//!   baseline;
//! - [`assignment`] — optimal subcarrier allocation as min-cost bipartite
//!   matching, with an exhaustive oracle;
//! - [`jesa`] — joint expert and subcarrier allocation (JESA) by block
//!   coordinate descent, benchmark schemes and a joint enumeration oracle.
//!
//! All numeric code is generic over the scalar type through [`Scalar`];
//! `f64` is the precision used by the bundled CLI and the aliases below.

// Negated comparisons like `!(x > 0)` deliberately treat NaN as a failure;
// indexed loops over parallel arrays stay indexed for symmetry with the
// surrounding math.
#![allow(clippy::neg_cmp_op_on_partial_ord, clippy::needless_range_loop)]

pub mod assignment;
pub mod error;
pub mod gating;
pub mod jesa;
pub mod rng;
pub mod scalar;
pub mod selection;
pub mod sysmodel;

pub use error::{Error, Result};
pub use scalar::Scalar;

/// Double-precision aliases, the default for simulation work.
pub type SystemConfig64 = sysmodel::SystemConfig<f64>;
pub type ExpertProfile64 = sysmodel::ExpertProfile<f64>;
pub type ChannelRealization64 = sysmodel::ChannelRealization<f64>;
pub type EnergyReport64 = sysmodel::EnergyReport<f64>;
pub type GatingTensor64 = gating::GatingTensor<f64>;
pub type QosPolicy64 = gating::QosPolicy<f64>;
pub type Scenario64 = jesa::Scenario<f64>;
pub type SchemeKind64 = jesa::SchemeKind<f64>;

/// Single-precision aliases for memory-constrained sweeps.
pub type SystemConfig32 = sysmodel::SystemConfig<f32>;
pub type ExpertProfile32 = sysmodel::ExpertProfile<f32>;
pub type ChannelRealization32 = sysmodel::ChannelRealization<f32>;
pub type EnergyReport32 = sysmodel::EnergyReport<f32>;
pub type GatingTensor32 = gating::GatingTensor<f32>;
pub type QosPolicy32 = gating::QosPolicy<f32>;
pub type Scenario32 = jesa::Scenario<f32>;
pub type SchemeKind32 = jesa::SchemeKind<f32>;

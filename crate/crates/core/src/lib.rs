//! Stochastic-geometry models for mobile infrastructure sharing between a
//! buyer operator and a set of seller operators.
//!
//! - [`coverage`]: analytic SINR coverage probability and its approximation.
//! - [`sim`]: Poisson point process Monte Carlo used to validate `coverage`.
//! - [`tradeoff`]: minimum transmit power, cell radius and areal power.
//! - [`buyer`]: the buyer's cost-minimal purchase and greedy seller selection.
//! - [`market`]: Cournot competition among sellers and market clearing.

pub mod buyer;
pub mod coverage;
pub mod error;
pub mod market;
pub mod numeric;
pub mod scenario;
pub mod sim;
pub mod tradeoff;
pub mod units;

pub use error::{Error, Result};
pub use scenario::{Assumption, Fading, OperatorProfile, RadioParams, SharedSeller, SharingScenario};

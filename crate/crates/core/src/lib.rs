//! Decentralized online stochastic optimization over time-varying directed
//! networks.
//!
//! The crate is organised around the pieces of a simulation run:
//!
//! * [`network`] generates strongly connected round graphs, the row- and
//!   column-stochastic mixing pairs `(A_t, B_t)` and the absolute
//!   probability sequences `φ_t`, `π_t`.
//! * [`data`] owns the per-agent streaming losses, their stochastic and exact
//!   gradient oracles and curvature constants.
//! * [`algorithms`] implements TV-HSGT and the DSGD / DSGT / DSGT-HB
//!   baselines as round-by-round state machines.
//! * [`metrics`] computes dynamic regret, consensus and tracking errors.
//! * [`analysis`] turns measured contraction constants into the 4×4
//!   stability matrix `M(α)`, a certified step size and lemma monitors.
//! * [`experiment`] runs declarative experiments and writes CSV artifacts.

// Checks such as `!(x > 0.0)` are meant to reject NaN as well.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod algorithms;
pub mod analysis;
pub mod data;
mod error;
pub mod experiment;
pub mod linalg;
pub mod metrics;
pub mod network;
pub mod rng;

pub use error::{Error, Result};

//! Time-varying directed communication graphs and their mixing matrices.

mod digraph;
mod io;
mod mixing;
mod sequences;
mod stats;
mod topology;

pub use digraph::{generate_round_graph, BaseKind, Digraph};
pub use io::{read_graph_sequence, write_graph_sequence};
pub use mixing::{build_mixing_pair, uniform_complete_weights, MixingPair};
pub use sequences::{phi_backward, phi_sequence, pi_sequence, ProbSequences};
pub use stats::{graph_stats, GraphStats};
pub use topology::TopologyPlan;

/// Default convergence tolerance for the backward-product estimate of `φ_t`.
pub const DEFAULT_PHI_TOL: f64 = 1e-10;

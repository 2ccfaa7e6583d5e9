//! Per-agent loss oracles, minibatch streams and curvature constants.

mod constants;
mod loss;
mod optimum;
mod oracle;
mod synthetic;

pub use constants::{estimate_constants, global_profile, LossProfile};
pub use loss::{
    binary_logistic_value_grad, least_squares_value_grad, softmax_logistic_value_grad, LossKind,
    CLASSES,
};
pub use optimum::{optima_sequence, round_optimum, SolverOptions};
pub use oracle::{AgentOracle, Drift, StreamSpec};
pub use synthetic::{synthetic_shards, SyntheticSpec};

/// One observation. `b` is the regression target, the binary label in
/// `{0, 1}`, or the class index for multiclass data.
#[derive(Debug, Clone, PartialEq)]
pub struct Sample {
    pub a: Vec<f64>,
    pub b: f64,
}

pub type Shard = Vec<Sample>;

use std::sync::Arc;

use rand::seq::SliceRandom;

use super::{LossKind, Sample, Shard};
use crate::rng::{self, Domain};
use crate::{Error, Result};

/// Deterministic drift of the local data distribution between rounds.
#[derive(Debug, Clone, Copy, Default, PartialEq, serde::Deserialize, serde::Serialize)]
#[serde(default, deny_unknown_fields)]
pub struct Drift {
    /// Feature rotation angle per round, applied in the coordinate planes
    /// `(0,1), (2,3), …`.
    pub rotation: f64,
    /// Additive change of every regression target per round.
    pub target_shift: f64,
}

impl Drift {
    pub fn is_static(&self) -> bool {
        self.rotation == 0.0 && self.target_shift == 0.0
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct StreamSpec {
    pub batch_size: usize,
    /// Start a new shuffled pass once the shard is exhausted.
    pub cycle: bool,
    pub seed: u64,
}

/// Agent `i`'s loss `f_{i,t}` and its minibatch stream `ξ_{i,t}`.
///
/// At round `t` the features are rotated by `R^t` and the regression targets
/// shifted by `t · target_shift`; the rotation is realised by evaluating the
/// undrifted loss at `R^{-t}θ` and rotating the gradient back.
#[derive(Debug, Clone)]
pub struct AgentOracle {
    pub agent: usize,
    pub kind: LossKind,
    pub r: f64,
    pub drift: Drift,
    shard: Arc<Shard>,
    d: usize,
    stream: StreamSpec,
}

impl AgentOracle {
    pub fn new(
        agent: usize,
        kind: LossKind,
        r: f64,
        shard: Arc<Shard>,
        stream: StreamSpec,
        drift: Drift,
    ) -> Result<Self> {
        let Some(first) = shard.first() else {
            return Err(Error::domain(format!("agent {agent} has an empty shard")));
        };
        let d = first.a.len();
        if shard.iter().any(|s| s.a.len() != d) {
            return Err(Error::domain(format!("agent {agent}: ragged feature dimensions")));
        }
        if stream.batch_size == 0 || stream.batch_size > shard.len() {
            return Err(Error::config(
                "dataset.batch_size",
                format!("must lie in 1..={} for agent {agent}", shard.len()),
            ));
        }
        if !(r >= 0.0) {
            return Err(Error::config("dataset.r", "regularization must be nonnegative"));
        }
        if kind != LossKind::LeastSquares && drift.target_shift != 0.0 {
            return Err(Error::config(
                "dataset.drift.target_shift",
                "target shift applies to the least-squares loss only",
            ));
        }
        Ok(Self {
            agent,
            kind,
            r,
            drift,
            shard,
            d,
            stream,
        })
    }

    /// The same loss with an independent minibatch stream.
    pub fn with_stream_seed(&self, seed: u64) -> Self {
        let mut o = self.clone();
        o.stream.seed = seed;
        o
    }

    pub fn stream_seed(&self) -> u64 {
        self.stream.seed
    }

    pub fn feature_dim(&self) -> usize {
        self.d
    }

    pub fn param_dim(&self) -> usize {
        self.kind.param_dim(self.d)
    }

    pub fn shard(&self) -> &Shard {
        &self.shard
    }

    pub fn batch_size(&self) -> usize {
        self.stream.batch_size
    }

    /// Sample indices `ξ_{i,t}`. Each pass over the shard is a fresh seeded
    /// permutation cut into contiguous batches; a batch covering the whole
    /// shard uses it in natural order.
    pub fn batch(&self, t: usize) -> Result<Vec<usize>> {
        let m = self.shard.len();
        let bs = self.stream.batch_size;
        if bs == m {
            return Ok((0..m).collect());
        }
        let per_pass = m / bs;
        let (pass, k) = (t / per_pass, t % per_pass);
        if pass > 0 && !self.stream.cycle {
            return Err(Error::Stream {
                agent: self.agent,
                message: format!("shard exhausted at round {t} and cycling is disabled"),
            });
        }
        let mut perm: Vec<usize> = (0..m).collect();
        perm.shuffle(&mut rng::stream(
            self.stream.seed,
            Domain::Batch,
            &[self.agent as u64, pass as u64],
        ));
        Ok(perm[k * bs..(k + 1) * bs].to_vec())
    }

    /// Gradient of the round-`t` loss on the given sample indices.
    pub fn grad_on(&self, theta: &[f64], t: usize, batch: &[usize]) -> Result<Vec<f64>> {
        Ok(self.eval(theta, t, batch.iter().map(|&k| &self.shard[k]))?.1)
    }

    /// `∇f̂_{i,t}(θ; ξ_{i,t})`.
    pub fn stochastic_grad(&self, theta: &[f64], t: usize) -> Result<Vec<f64>> {
        self.grad_on(theta, t, &self.batch(t)?)
    }

    /// Exact local value and gradient of `f_{i,t}`.
    pub fn full_value_grad(&self, theta: &[f64], t: usize) -> Result<(f64, Vec<f64>)> {
        self.eval(theta, t, self.shard.iter())
    }

    pub fn full_grad(&self, theta: &[f64], t: usize) -> Result<Vec<f64>> {
        Ok(self.full_value_grad(theta, t)?.1)
    }

    /// Value and gradient at a drift phase given directly as a rotation
    /// angle and a target shift.
    pub(crate) fn eval_phase<'a>(
        &self,
        theta: &[f64],
        angle: f64,
        shift: f64,
        samples: impl IntoIterator<Item = &'a Sample>,
    ) -> Result<(f64, Vec<f64>)> {
        if angle == 0.0 {
            return self.kind.value_grad_shifted(theta, samples, self.r, shift);
        }
        let local = self.rotate(theta, -angle);
        let (v, g) = self.kind.value_grad_shifted(&local, samples, self.r, shift)?;
        Ok((v, self.rotate(&g, angle)))
    }

    fn eval<'a>(
        &self,
        theta: &[f64],
        t: usize,
        samples: impl IntoIterator<Item = &'a Sample>,
    ) -> Result<(f64, Vec<f64>)> {
        let (angle, shift) = self.phase(t);
        self.eval_phase(theta, angle, shift, samples)
    }

    pub(crate) fn phase(&self, t: usize) -> (f64, f64) {
        (self.drift.rotation * t as f64, self.drift.target_shift * t as f64)
    }

    /// Applies the feature-space rotation by `angle` to every class block.
    pub(crate) fn rotate(&self, v: &[f64], angle: f64) -> Vec<f64> {
        let (s, c) = angle.sin_cos();
        let mut out = v.to_vec();
        for block in out.chunks_mut(self.d) {
            for pair in block.chunks_exact_mut(2) {
                let (x, y) = (pair[0], pair[1]);
                pair[0] = c * x - s * y;
                pair[1] = s * x + c * y;
            }
        }
        out
    }

    /// Accuracy of the round-`t` model `θ` on the shard with drift applied.
    pub fn accuracy(&self, theta: &[f64], t: usize) -> Option<f64> {
        let local = self.rotate(theta, -self.phase(t).0);
        self.kind.accuracy(&local, self.shard.iter())
    }
}

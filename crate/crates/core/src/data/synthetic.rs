use rand::Rng;
use rand_distr::{Distribution, StandardNormal};

use super::loss::{sigmoid, CLASSES};
use super::{LossKind, Sample, Shard};
use crate::rng::{self, Domain};
use crate::{Error, Result};

/// Gaussian features `a ~ N(0, scale² I)` with labels drawn from a planted
/// model whose margin `aᵀθ` has standard deviation `signal`. Each agent's
/// planted model is the shared one plus `heterogeneity` times an
/// independent perturbation of the same scale.
#[derive(Debug, Clone, PartialEq, serde::Deserialize, serde::Serialize)]
#[serde(default, deny_unknown_fields)]
pub struct SyntheticSpec {
    pub samples_per_agent: usize,
    pub dim: usize,
    pub feature_scale: f64,
    pub signal: f64,
    pub heterogeneity: f64,
    /// Standard deviation of additive target noise (least squares only).
    pub noise: f64,
}

impl Default for SyntheticSpec {
    fn default() -> Self {
        Self {
            samples_per_agent: 500,
            dim: 20,
            feature_scale: 1.0,
            signal: 1.0,
            heterogeneity: 0.5,
            noise: 0.1,
        }
    }
}

pub fn synthetic_shards(spec: &SyntheticSpec, kind: LossKind, agents: usize, seed: u64) -> Result<Vec<Shard>> {
    if spec.samples_per_agent == 0 || spec.dim == 0 {
        return Err(Error::config("dataset.synthetic", "samples_per_agent and dim must be positive"));
    }
    if !(spec.feature_scale > 0.0) {
        return Err(Error::config("dataset.synthetic.feature_scale", "must be positive"));
    }
    let d = spec.dim;
    let p = kind.param_dim(d);
    let coef = spec.signal / (spec.feature_scale * (d as f64).sqrt());
    let mut shared_rng = rng::stream(seed, Domain::SyntheticData, &[u64::MAX]);
    let shared: Vec<f64> = (0..p).map(|_| coef * normal(&mut shared_rng)).collect();
    (0..agents)
        .map(|i| {
            let mut rng = rng::stream(seed, Domain::SyntheticData, &[i as u64]);
            let planted: Vec<f64> = shared
                .iter()
                .map(|s| s + spec.heterogeneity * coef * normal(&mut rng))
                .collect();
            Ok((0..spec.samples_per_agent)
                .map(|_| {
                    let a: Vec<f64> = (0..d).map(|_| spec.feature_scale * normal(&mut rng)).collect();
                    let b = label(kind, &a, &planted, spec.noise, &mut rng);
                    Sample { a, b }
                })
                .collect())
        })
        .collect()
}

fn label(kind: LossKind, a: &[f64], theta: &[f64], noise: f64, rng: &mut impl Rng) -> f64 {
    let d = a.len();
    let margin = |k: usize| crate::linalg::dot(a, &theta[k * d..(k + 1) * d]);
    match kind {
        LossKind::LeastSquares => margin(0) + noise * normal(rng),
        LossKind::BinaryLogistic => f64::from(rng.random_bool(sigmoid(margin(0)))),
        LossKind::Softmax => {
            let logits: Vec<f64> = (0..CLASSES).map(margin).collect();
            let max = logits.iter().copied().fold(f64::NEG_INFINITY, f64::max);
            let w: Vec<f64> = logits.iter().map(|u| (u - max).exp()).collect();
            let mut u = rng.random::<f64>() * w.iter().sum::<f64>();
            for (k, wk) in w.iter().enumerate() {
                if u < *wk {
                    return k as f64;
                }
                u -= wk;
            }
            (CLASSES - 1) as f64
        }
    }
}

fn normal(rng: &mut impl Rng) -> f64 {
    StandardNormal.sample(rng)
}

use nalgebra::DMatrix;
use rand::seq::index;

use super::{AgentOracle, LossKind, Sample};
use crate::linalg::{dist2, sym_power_max};
use crate::rng::{self, Domain};
use crate::{Error, Result};

const POWER_TOL: f64 = 1e-9;
const POWER_MAX_ITER: usize = 100_000;

/// Curvature and noise constants of a local (or global) objective.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LossProfile {
    /// Smoothness constant `L_g`.
    pub l_g: f64,
    /// Strong-convexity constant `μ`.
    pub mu: f64,
    /// Variance bound of the stochastic gradient.
    pub sigma2: f64,
    pub r: f64,
}

/// `(1/M) Σ a aᵀ` over the shard.
fn second_moment(samples: &[Sample]) -> DMatrix<f64> {
    let d = samples[0].a.len();
    let x = DMatrix::from_fn(samples.len(), d, |k, j| samples[k].a[j]);
    x.tr_mul(&x) / samples.len() as f64
}

/// `L_g = c·λ_max((1/M) Σ a aᵀ) + r` with `c` = 1, 1/4 or 1/2 for least
/// squares, binary and multiclass logistic loss. `μ = r` for the logistic
/// losses and `λ_min + r` for least squares. `σ²` is the largest Monte Carlo
/// estimate of `E‖∇f̂_t(θ; ξ) − ∇f_t(θ)‖²` over the probe pairs `(t, θ)`,
/// using `sigma_samples` independent uniformly drawn minibatches per probe.
/// Under drift the noise level depends on the round, so probes should cover
/// the horizon.
pub fn estimate_constants(
    oracle: &AgentOracle,
    probes: &[(usize, Vec<f64>)],
    sigma_samples: usize,
) -> Result<LossProfile> {
    let shard = oracle.shard();
    let gram = second_moment(shard);
    let top = sym_power_max(&gram, POWER_TOL, POWER_MAX_ITER)?;
    let r = oracle.r;
    let mu = match oracle.kind {
        LossKind::LeastSquares => min_eigenvalue(&gram) + r,
        _ => r,
    };
    let l_g = oracle.kind.curvature_factor() * top + r;

    let m = shard.len();
    let bs = oracle.batch_size();
    let mut sigma2: f64 = 0.0;
    if bs < m {
        let mut rng = rng::stream(0, Domain::Sigma, &[oracle.agent as u64]);
        for (t, theta) in probes {
            let full = oracle.full_grad(theta, *t)?;
            let mut acc = 0.0;
            for _ in 0..sigma_samples {
                let batch = index::sample(&mut rng, m, bs).into_vec();
                acc += dist2(&oracle.grad_on(theta, *t, &batch)?, &full);
            }
            sigma2 = sigma2.max(acc / sigma_samples.max(1) as f64);
        }
    }
    Ok(LossProfile {
        l_g,
        mu,
        sigma2,
        r,
    })
}

/// Constants of the global objective `(1/n) Σ f_i`: the largest local
/// `L_g` and `σ²`, and the strong convexity of the averaged objective.
pub fn global_profile(oracles: &[AgentOracle], locals: &[LossProfile]) -> Result<LossProfile> {
    let Some(first) = oracles.first() else {
        return Err(Error::domain("no agents"));
    };
    let r = first.r;
    let mu = match first.kind {
        LossKind::LeastSquares => {
            let mut avg = second_moment(first.shard());
            for o in &oracles[1..] {
                avg += second_moment(o.shard());
            }
            min_eigenvalue(&(avg / oracles.len() as f64)) + r
        }
        _ => r,
    };
    Ok(LossProfile {
        l_g: locals.iter().map(|p| p.l_g).fold(0.0, f64::max),
        mu,
        sigma2: locals.iter().map(|p| p.sigma2).fold(0.0, f64::max),
        r,
    })
}

fn min_eigenvalue(m: &DMatrix<f64>) -> f64 {
    m.clone()
        .symmetric_eigenvalues()
        .iter()
        .copied()
        .fold(f64::INFINITY, f64::min)
        .max(0.0)
}

use super::AgentOracle;
use crate::linalg::{axpy, dot, norm};
use crate::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SolverOptions {
    /// Stop once `‖∇f_t‖ ≤ tol`.
    pub tol: f64,
    pub max_iter: usize,
}

impl Default for SolverOptions {
    fn default() -> Self {
        Self {
            tol: 1e-10,
            max_iter: 1_000_000,
        }
    }
}

/// Minimizer of the round-`t` global objective `f_t = (1/n) Σ_i f_{i,t}` by
/// accelerated gradient descent with step `1/l_g` and gradient-based
/// momentum restarts.
pub fn round_optimum(
    oracles: &[AgentOracle],
    t: usize,
    l_g: f64,
    opts: SolverOptions,
    warm: Option<&[f64]>,
) -> Result<Vec<f64>> {
    let (angle, shift) = oracles[0].phase(t);
    minimize_phase(oracles, angle, shift, l_g, opts, warm)
}

fn minimize_phase(
    oracles: &[AgentOracle],
    angle: f64,
    shift: f64,
    l_g: f64,
    opts: SolverOptions,
    warm: Option<&[f64]>,
) -> Result<Vec<f64>> {
    let p = oracles[0].param_dim();
    let n = oracles.len() as f64;
    let grad = |theta: &[f64]| -> Result<Vec<f64>> {
        let mut g = vec![0.0; p];
        for o in oracles {
            let (_, gi) = o.eval_phase(theta, angle, shift, o.shard().iter())?;
            axpy(1.0 / n, &gi, &mut g);
        }
        Ok(g)
    };
    let step = 1.0 / l_g;
    let mut x = warm.map_or_else(|| vec![0.0; p], <[f64]>::to_vec);
    let mut y = x.clone();
    let mut k = 0usize;
    let mut residual = f64::INFINITY;
    for _ in 0..opts.max_iter {
        let g = grad(&y)?;
        residual = norm(&g);
        if residual <= opts.tol {
            return Ok(y);
        }
        let mut x_new = y.clone();
        axpy(-step, &g, &mut x_new);
        let dx: Vec<f64> = x_new.iter().zip(&x).map(|(a, b)| a - b).collect();
        if dot(&g, &dx) > 0.0 {
            k = 0;
            y.clone_from(&x_new);
        } else {
            k += 1;
            let m = (k as f64 - 1.0) / (k as f64 + 2.0);
            y.clone_from(&x_new);
            axpy(m, &dx, &mut y);
        }
        x = x_new;
    }
    Err(Error::Analysis {
        message: format!("round optimum not reached in {} iterations", opts.max_iter),
        residual,
    })
}

/// `x_t^*` for `t = 0..=last`. Rotation drift moves the optimum by the same
/// rotation, and a target shift moves the least-squares optimum affinely,
/// so at most two solves are needed.
pub fn optima_sequence(
    oracles: &[AgentOracle],
    last: usize,
    l_g: f64,
    opts: SolverOptions,
) -> Result<Vec<Vec<f64>>> {
    let drift = oracles[0].drift;
    if oracles.iter().any(|o| o.drift != drift) {
        return Err(Error::domain("agents must share the same drift"));
    }
    let base = minimize_phase(oracles, 0.0, 0.0, l_g, opts, None)?;
    if drift.is_static() {
        return Ok(vec![base; last + 1]);
    }
    let slope = if drift.target_shift != 0.0 {
        let shifted = minimize_phase(oracles, 0.0, drift.target_shift, l_g, opts, Some(&base))?;
        shifted.iter().zip(&base).map(|(a, b)| a - b).collect()
    } else {
        vec![0.0; base.len()]
    };
    Ok((0..=last)
        .map(|t| {
            let mut v = base.clone();
            axpy(t as f64, &slope, &mut v);
            oracles[0].rotate(&v, drift.rotation * t as f64)
        })
        .collect())
}

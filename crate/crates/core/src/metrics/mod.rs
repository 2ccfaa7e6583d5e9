//! Per-round performance measures and their CSV encoding.

mod csv;

pub use csv::{encode as encode_csv, write_metrics_csv, CSV_HEADER};

use crate::linalg::{axpy, dist2, norm2};
use crate::{Error, Result};

/// Quantities reported after every round `t = 1..=T`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RoundMetrics {
    pub t: usize,
    /// `f_t(x̂_t) − f_t(x_t^*)`.
    pub regret_inc: f64,
    /// Cumulative regret divided by `t`.
    pub regret_avg: f64,
    /// `‖x_t − x̂_t‖²_{φ_t}`.
    pub consensus2: f64,
    /// `S²(y_t, π_t)`; NaN for methods without a tracker.
    pub tracking2: f64,
    /// `‖x̂_t − x_t^*‖²`.
    pub opt2: f64,
    /// `‖z_t − ∇F_t(x_t)‖²`.
    pub gradest2: f64,
    /// Estimated gradient drift `q_t`; NaN when not estimated.
    pub q_t: f64,
    /// Optimum drift `‖x_{t+1}^* − x_t^*‖`.
    pub p_t: f64,
    /// `f_t` at the unweighted mean iterate.
    pub loss: f64,
    /// Accuracy of the mean iterate; NaN for regression.
    pub accuracy: f64,
}

/// `x̂ = Σ_i φ_i x_i`.
pub fn weighted_average(xs: &[Vec<f64>], phi: &[f64]) -> Result<Vec<f64>> {
    if xs.len() != phi.len() || xs.is_empty() {
        return Err(Error::Metrics(format!(
            "{} vectors but {} weights",
            xs.len(),
            phi.len()
        )));
    }
    let d = xs[0].len();
    let mut out = vec![0.0; d];
    for (x, &w) in xs.iter().zip(phi) {
        if x.len() != d {
            return Err(Error::Metrics("vectors differ in dimension".into()));
        }
        axpy(w, x, &mut out);
    }
    Ok(out)
}

/// `‖x − x̂‖²_φ = Σ_i φ_i ‖x_i − x̂‖²`.
pub fn consensus_error(xs: &[Vec<f64>], phi: &[f64]) -> Result<f64> {
    let xhat = weighted_average(xs, phi)?;
    Ok(xs.iter().zip(phi).map(|(x, w)| w * dist2(x, &xhat)).sum())
}

/// `S²(y, π) = Σ_i π_i ‖y_i/π_i − Σ_j y_j‖²`.
pub fn tracking_error(ys: &[Vec<f64>], pi: &[f64]) -> Result<f64> {
    if let Some((i, p)) = pi.iter().enumerate().find(|(_, &p)| !(p > 0.0)) {
        return Err(Error::domain(format!("π_{i} = {p} is not positive")));
    }
    let ones = vec![1.0; pi.len()];
    let total = weighted_average(ys, &ones)?;
    Ok(ys
        .iter()
        .zip(pi)
        .map(|(y, &p)| {
            let scaled: Vec<f64> = y.iter().map(|v| v / p).collect();
            p * dist2(&scaled, &total)
        })
        .sum())
}

/// `‖y‖²_{π⁻¹} = Σ_i ‖y_i‖²/π_i`.
pub fn inverse_weighted_norm2(ys: &[Vec<f64>], pi: &[f64]) -> f64 {
    ys.iter().zip(pi).map(|(y, p)| norm2(y) / p).sum()
}

/// Total dynamic regret and the running average `R_t / t`.
pub fn regret_accumulate(increments: &[f64]) -> (f64, Vec<f64>) {
    let mut total = 0.0;
    let avg = increments
        .iter()
        .enumerate()
        .map(|(k, r)| {
            total += r;
            total / (k + 1) as f64
        })
        .collect();
    (total, avg)
}

/// `p_t = ‖x_{t+1}^* − x_t^*‖` for consecutive optima.
pub fn optimum_drift(optima: &[Vec<f64>]) -> Vec<f64> {
    optima.windows(2).map(|w| dist2(&w[1], &w[0]).sqrt()).collect()
}

/// `max_x max_i ‖g_next_i(x) − g_cur_i(x)‖` over the supplied evaluations,
/// indexed `[probe][agent]`.
pub fn gradient_drift(next: &[Vec<Vec<f64>>], cur: &[Vec<Vec<f64>>]) -> f64 {
    next.iter()
        .zip(cur)
        .flat_map(|(a, b)| a.iter().zip(b))
        .map(|(g1, g0)| dist2(g1, g0).sqrt())
        .fold(0.0, f64::max)
}

use super::MixingPair;
use crate::{Error, Result};

/// Absolute probability sequences of a run: `phi[t]` for the row-stochastic
/// chain and `pi[t]` for the column-stochastic chain, `t = 0..=T`.
#[derive(Debug, Clone)]
pub struct ProbSequences {
    pub phi: Vec<Vec<f64>>,
    pub pi: Vec<Vec<f64>>,
    /// Backward-product length that was needed to pin down the last `φ`.
    pub window: usize,
}

/// `π_0 = 1/n`, `π_{t+1} = B_t π_t`. Returns `pairs.len() + 1` vectors.
pub fn pi_sequence(pairs: &[MixingPair]) -> Vec<Vec<f64>> {
    let Some(first) = pairs.first() else {
        return Vec::new();
    };
    let n = first.graph.n();
    let mut out = Vec::with_capacity(pairs.len() + 1);
    out.push(vec![1.0 / n as f64; n]);
    for p in pairs {
        let prev = out.last().unwrap();
        let next: Vec<f64> = (0..n)
            .map(|i| (0..n).map(|j| p.b[(i, j)] * prev[j]).sum())
            .collect();
        out.push(next);
    }
    out
}

/// `φ_t` as the common row of `A_{t+W-1} ··· A_t`, growing `W` until the
/// largest column spread of the product drops below `tol`. `pairs[k]` must
/// hold round `k`.
pub fn phi_sequence(pairs: &[MixingPair], t: usize, tol: f64) -> Result<(Vec<f64>, usize)> {
    if !(tol > 0.0) {
        return Err(Error::config("phi.tol", "tolerance must be positive"));
    }
    if t >= pairs.len() {
        return Err(Error::Diagnostics {
            message: format!("no mixing matrices available from round {t}"),
            achieved: f64::INFINITY,
        });
    }
    let mut prod = pairs[t].a.clone();
    let mut spread = row_spread(&prod);
    let mut window = 1;
    while spread >= tol {
        let Some(next) = pairs.get(t + window) else {
            return Err(Error::Diagnostics {
                message: format!("backward product from round {t} did not converge within {window} rounds"),
                achieved: spread,
            });
        };
        prod = &next.a * prod;
        window += 1;
        spread = row_spread(&prod);
    }
    let n = prod.nrows();
    let mut phi: Vec<f64> = (0..n).map(|j| prod.column(j).sum() / n as f64).collect();
    normalize(&mut phi);
    Ok((phi, window))
}

/// `φ_0 ..= φ_last`: `φ_last` from the backward product, then
/// `φ_t = A_tᵀ φ_{t+1}` down to round 0.
pub fn phi_backward(pairs: &[MixingPair], last: usize, tol: f64) -> Result<(Vec<Vec<f64>>, usize)> {
    let (phi_last, window) = phi_sequence(pairs, last, tol)?;
    let n = phi_last.len();
    let mut out = vec![Vec::new(); last + 1];
    out[last] = phi_last;
    for t in (0..last).rev() {
        let a = &pairs[t].a;
        let next = &out[t + 1];
        let mut v: Vec<f64> = (0..n).map(|j| (0..n).map(|i| next[i] * a[(i, j)]).sum()).collect();
        normalize(&mut v);
        out[t] = v;
    }
    Ok((out, window))
}

fn row_spread(m: &nalgebra::DMatrix<f64>) -> f64 {
    m.column_iter()
        .map(|c| c.max() - c.min())
        .fold(0.0, f64::max)
}

fn normalize(v: &mut [f64]) {
    let s: f64 = v.iter().sum();
    v.iter_mut().for_each(|x| *x /= s);
}

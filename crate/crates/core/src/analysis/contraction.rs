use crate::network::{graph_stats, MixingPair, ProbSequences};
use crate::{Error, Result};

/// Per-round quantities derived from `φ_t`, `π_t` and the round graph.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RoundConstants {
    /// `sqrt(1/min φ_t)`
    pub varphi: f64,
    /// `sqrt(1/min π_t)`
    pub kappa: f64,
    /// `sqrt(max_i φ_{t,i} π_{t,i})`
    pub gamma: f64,
    /// `κ_t²`
    pub psi: f64,
    /// `φ_tᵀ π_t`
    pub phi_pi: f64,
    /// Row-mixing contraction `c_t`; NaN for the final round.
    pub c: f64,
    /// Column-mixing contraction `τ_t`; NaN for the final round.
    pub tau: f64,
    pub diameter: usize,
    pub utility: usize,
}

/// Uniform bounds over a horizon plus the per-round values behind them.
#[derive(Debug, Clone, PartialEq)]
pub struct ContractionParams {
    pub c: f64,
    pub tau: f64,
    pub eta: f64,
    pub psi: f64,
    pub kappa: f64,
    pub varphi: f64,
    pub gamma: f64,
    /// Smallest positive entries of `A_t` and `B_t` over the horizon.
    pub a: f64,
    pub b: f64,
    /// Rounds `0..=T`.
    pub rounds: Vec<RoundConstants>,
}

impl ContractionParams {
    /// `ζ = 24 L² φ² τ² ψ / (1 − τ)`, the bound used in `M(α)`.
    pub fn zeta(&self, l_g: f64) -> f64 {
        24.0 * l_g.powi(2) * self.varphi.powi(2) * self.tau.powi(2) * self.psi / (1.0 - self.tau)
    }

    /// `ν = 6 L² (cφ + 1)² τ² ψ / (1 − τ)`, the bound used in `M(α)`.
    pub fn nu(&self, l_g: f64) -> f64 {
        6.0 * l_g.powi(2) * (self.c * self.varphi + 1.0).powi(2) * self.tau.powi(2) * self.psi
            / (1.0 - self.tau)
    }

    /// Per-round `ζ_t = 6 L² (cφ_{t+1} + φ_t)² τ² ψ_t / (1 − τ)`.
    pub fn zeta_t(&self, t: usize, l_g: f64) -> f64 {
        let (r, next) = (&self.rounds[t], &self.rounds[t + 1]);
        6.0 * l_g.powi(2) * (self.c * next.varphi + r.varphi).powi(2) * self.tau.powi(2) * r.psi
            / (1.0 - self.tau)
    }

    /// Per-round `ν_t = 6 L² (cφ_{t+1} + 1)² γ_t² τ² ψ_t / (1 − τ)`.
    pub fn nu_t(&self, t: usize, l_g: f64) -> f64 {
        let (r, next) = (&self.rounds[t], &self.rounds[t + 1]);
        6.0 * l_g.powi(2) * (self.c * next.varphi + 1.0).powi(2) * r.gamma.powi(2)
            * self.tau.powi(2)
            * r.psi
            / (1.0 - self.tau)
    }

    pub fn horizon(&self) -> usize {
        self.rounds.len().saturating_sub(1)
    }
}

/// Evaluates the per-round contraction quantities over `pairs` (rounds
/// `0..T`) and `seqs` (vectors `0..=T`) and takes their uniform bounds.
pub fn measure_contraction(pairs: &[MixingPair], seqs: &ProbSequences) -> Result<ContractionParams> {
    if pairs.is_empty() {
        return Err(Error::Certificate("need at least one round".into()));
    }
    let t_len = pairs.len();
    if seqs.phi.len() < t_len + 1 || seqs.pi.len() < t_len + 1 {
        return Err(Error::Certificate("probability sequences shorter than the horizon".into()));
    }
    let a = pairs.iter().map(|p| p.a_min).fold(f64::INFINITY, f64::min);
    let b = pairs.iter().map(|p| p.b_min).fold(f64::INFINITY, f64::min);
    let min = |v: &[f64]| v.iter().copied().fold(f64::INFINITY, f64::min);
    let max = |v: &[f64]| v.iter().copied().fold(f64::NEG_INFINITY, f64::max);

    let mut rounds = Vec::with_capacity(t_len + 1);
    let mut last_graph = None;
    let mut stats = None;
    for t in 0..=t_len {
        let (phi, pi) = (&seqs.phi[t], &seqs.pi[t]);
        let gamma2 = phi.iter().zip(pi).map(|(f, p)| f * p).fold(0.0, f64::max);
        let mut rc = RoundConstants {
            varphi: (1.0 / min(phi)).sqrt(),
            kappa: (1.0 / min(pi)).sqrt(),
            gamma: gamma2.sqrt(),
            psi: 1.0 / min(pi),
            phi_pi: phi.iter().zip(pi).map(|(f, p)| f * p).sum(),
            c: f64::NAN,
            tau: f64::NAN,
            diameter: 0,
            utility: 0,
        };
        if t < t_len {
            let g = &pairs[t].graph;
            if last_graph != Some(g) {
                stats = Some(graph_stats(g));
                last_graph = Some(g);
            }
            let s = stats.unwrap();
            let dk = (s.diameter * s.max_edge_utility) as f64;
            let (phi1, pi1) = (&seqs.phi[t + 1], &seqs.pi[t + 1]);
            rc.c = (1.0 - min(phi1) * a * a / (max(phi).powi(2) * dk)).sqrt();
            rc.tau = (1.0 - min(pi).powi(2) * b * b / (max(pi).powi(2) * max(pi1) * dk)).sqrt();
            rc.diameter = s.diameter;
            rc.utility = s.max_edge_utility;
            for (name, v) in [("c", rc.c), ("tau", rc.tau)] {
                if !(v > 0.0 && v < 1.0) {
                    return Err(Error::Certificate(format!("{name}_{t} = {v} lies outside (0, 1)")));
                }
            }
        }
        rounds.push(rc);
    }
    let over = |f: fn(&RoundConstants) -> f64| rounds.iter().map(f).fold(f64::NEG_INFINITY, f64::max);
    let body = &rounds[..t_len];
    Ok(ContractionParams {
        c: body.iter().map(|r| r.c).fold(0.0, f64::max),
        tau: body.iter().map(|r| r.tau).fold(0.0, f64::max),
        eta: rounds.iter().map(|r| r.phi_pi).fold(f64::INFINITY, f64::min),
        psi: over(|r| r.psi),
        kappa: over(|r| r.kappa),
        varphi: over(|r| r.varphi),
        gamma: over(|r| r.gamma),
        a,
        b,
        rounds,
    })
}

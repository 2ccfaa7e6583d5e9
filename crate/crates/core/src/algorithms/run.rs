use rand_distr::{Distribution, StandardNormal};

use super::{baseline_round, init_agents, tvhsgt_round, AgentState, AlgoConfig, Method};
use crate::data::{estimate_constants, optima_sequence, AgentOracle, SolverOptions};
use crate::linalg::{axpy, dist2, norm};
use crate::metrics::{
    consensus_error, inverse_weighted_norm2, tracking_error, weighted_average, RoundMetrics,
};
use crate::network::{uniform_complete_weights, MixingPair, ProbSequences, TopologyPlan};
use crate::rng::{self, Domain};
use crate::{Error, Result};

/// Everything a run over `T` rounds needs besides the algorithm settings:
/// the oracles, the mixing pairs for rounds `0..T`, `φ_t`/`π_t` for
/// `t = 0..=T` and the round optima for `t = 0..=T+1`.
#[derive(Debug, Clone)]
pub struct Environment {
    pub oracles: Vec<AgentOracle>,
    pub pairs: Vec<MixingPair>,
    pub seqs: ProbSequences,
    pub optima: Vec<Vec<f64>>,
    /// Smoothness bound of the global objective used by the inner solver.
    pub l_g: f64,
}

impl Environment {
    pub fn new(
        oracles: Vec<AgentOracle>,
        plan: &TopologyPlan,
        rounds: usize,
        solver: SolverOptions,
        phi_tol: f64,
    ) -> Result<Self> {
        if oracles.len() != plan.n() {
            return Err(Error::config(
                "topology",
                format!("{} agents but a {}-node topology", oracles.len(), plan.n()),
            ));
        }
        let (pairs, seqs) = plan.sequences(rounds, phi_tol)?;
        let mut l_g: f64 = 0.0;
        for o in &oracles {
            l_g = l_g.max(estimate_constants(o, &[], 0)?.l_g);
        }
        let optima = optima_sequence(&oracles, rounds + 1, l_g, solver)?;
        Ok(Self {
            oracles,
            pairs,
            seqs,
            optima,
            l_g,
        })
    }

    pub fn n(&self) -> usize {
        self.oracles.len()
    }

    pub fn rounds(&self) -> usize {
        self.pairs.len()
    }

    /// `f_t(θ) = (1/n) Σ_i f_{i,t}(θ)`.
    pub fn global_value(&self, theta: &[f64], t: usize) -> Result<f64> {
        let mut v = 0.0;
        for o in &self.oracles {
            v += o.full_value_grad(theta, t)?.0;
        }
        Ok(v / self.n() as f64)
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RunOptions {
    /// Random perturbations added to the probe set of the `q_t` estimator;
    /// `None` skips the estimate.
    pub q_probes: Option<usize>,
    pub record_trace: bool,
}

impl Default for RunOptions {
    fn default() -> Self {
        Self {
            q_probes: Some(8),
            record_trace: false,
        }
    }
}

/// Per-round quantities used by the lemma monitors. Row `t` describes the
/// state after round `t`; the `d*` fields describe the step `t → t+1`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TraceRow {
    /// `‖x_t − x̂_t‖²_{φ_t}`
    pub v1: f64,
    /// `S²(y_t, π_t)`
    pub v2: f64,
    /// `‖x̂_t − x_t^*‖²`
    pub v3: f64,
    /// `‖z_t − ∇F_t(x_t)‖²`
    pub v4: f64,
    /// `‖Σ_i y_{i,t}‖²`
    pub sum_y2: f64,
    /// `‖y_t‖²_{π_t⁻¹}`
    pub y_pi2: f64,
    /// `‖x_{t+1} − x_t‖²`
    pub dx2: f64,
    /// `‖z_{t+1} − z_t‖²`
    pub dz2: f64,
    pub q: f64,
    pub p: f64,
}

#[derive(Debug, Clone)]
pub struct RunOutput {
    pub states: Vec<AgentState>,
    pub metrics: Vec<RoundMetrics>,
    /// Rows `0..=T` when requested.
    pub trace: Vec<TraceRow>,
}

/// Runs `T = env.rounds()` rounds from `x0`, emitting metrics after every
/// round. TV-HSGT uses the environment's time-varying mixing pairs; the
/// baselines use uniform weights on a fixed complete graph.
pub fn run_horizon(
    cfg: &AlgoConfig,
    env: &Environment,
    x0: &[Vec<f64>],
    opts: &RunOptions,
) -> Result<RunOutput> {
    cfg.validate()?;
    let n = env.n();
    let w = uniform_complete_weights(n);
    let uniform = vec![1.0 / n as f64; n];
    let weights = |t: usize| -> (&[f64], &[f64]) {
        match cfg.method {
            Method::TvHsgt => (&env.seqs.phi[t], &env.seqs.pi[t]),
            _ => (&uniform, &uniform),
        }
    };

    let mut states = init_agents(x0, &env.oracles)?;
    let mut metrics = Vec::with_capacity(env.rounds());
    let mut trace = Vec::new();
    let mut regret = 0.0;
    let mut row = if opts.record_trace {
        let (phi, pi) = weights(0);
        Some(trace_row(env, &states, 0, phi, pi, cfg.method, opts)?)
    } else {
        None
    };

    for t in 0..env.rounds() {
        let next = match cfg.method {
            Method::TvHsgt => tvhsgt_round(&states, &env.pairs[t], &env.oracles, cfg, t)?,
            _ => baseline_round(&states, &w, &env.oracles, cfg, t)?,
        };
        let (phi, pi) = weights(t + 1);
        if let Some(mut r) = row.take() {
            r.dx2 = next.iter().zip(&states).map(|(a, b)| dist2(&a.x, &b.x)).sum();
            r.dz2 = next.iter().zip(&states).map(|(a, b)| dist2(&a.z, &b.z)).sum();
            trace.push(r);
            row = Some(trace_row(env, &next, t + 1, phi, pi, cfg.method, opts)?);
        }
        states = next;

        let m = round_metrics(env, &states, t + 1, phi, pi, cfg.method, opts, &mut regret)?;
        metrics.push(m);
    }
    trace.extend(row);
    Ok(RunOutput {
        states,
        metrics,
        trace,
    })
}

#[allow(clippy::too_many_arguments)]
fn round_metrics(
    env: &Environment,
    states: &[AgentState],
    t: usize,
    phi: &[f64],
    pi: &[f64],
    method: Method,
    opts: &RunOptions,
    regret: &mut f64,
) -> Result<RoundMetrics> {
    let xs: Vec<Vec<f64>> = states.iter().map(|s| s.x.clone()).collect();
    let ys: Vec<Vec<f64>> = states.iter().map(|s| s.y.clone()).collect();
    let xhat = weighted_average(&xs, phi)?;
    let xstar = &env.optima[t];
    let regret_inc = env.global_value(&xhat, t)? - env.global_value(xstar, t)?;
    *regret += regret_inc;
    let mean = weighted_average(&xs, &vec![1.0 / xs.len() as f64; xs.len()])?;
    let accuracy = mean_accuracy(env, &mean, t);
    Ok(RoundMetrics {
        t,
        regret_inc,
        regret_avg: *regret / t as f64,
        consensus2: consensus_error(&xs, phi)?,
        tracking2: if method == Method::Dsgd {
            f64::NAN
        } else {
            tracking_error(&ys, pi)?
        },
        opt2: dist2(&xhat, xstar),
        gradest2: gradient_error(env, states, t)?,
        q_t: q_estimate(env, &xs, t, opts)?,
        p_t: dist2(&env.optima[t + 1], xstar).sqrt(),
        loss: env.global_value(&mean, t)?,
        accuracy,
    })
}

fn mean_accuracy(env: &Environment, theta: &[f64], t: usize) -> f64 {
    let mut hits = 0.0;
    let mut total = 0usize;
    for o in &env.oracles {
        match o.accuracy(theta, t) {
            Some(a) => {
                hits += a * o.shard().len() as f64;
                total += o.shard().len();
            }
            None => return f64::NAN,
        }
    }
    hits / total as f64
}

fn trace_row(
    env: &Environment,
    states: &[AgentState],
    t: usize,
    phi: &[f64],
    pi: &[f64],
    method: Method,
    opts: &RunOptions,
) -> Result<TraceRow> {
    let xs: Vec<Vec<f64>> = states.iter().map(|s| s.x.clone()).collect();
    let ys: Vec<Vec<f64>> = states.iter().map(|s| s.y.clone()).collect();
    let xhat = weighted_average(&xs, phi)?;
    let mut sum_y = vec![0.0; ys[0].len()];
    ys.iter().for_each(|y| axpy(1.0, y, &mut sum_y));
    Ok(TraceRow {
        v1: consensus_error(&xs, phi)?,
        v2: if method == Method::Dsgd {
            f64::NAN
        } else {
            tracking_error(&ys, pi)?
        },
        v3: dist2(&xhat, &env.optima[t]),
        v4: gradient_error(env, states, t)?,
        sum_y2: norm(&sum_y).powi(2),
        y_pi2: inverse_weighted_norm2(&ys, pi),
        dx2: f64::NAN,
        dz2: f64::NAN,
        q: q_estimate(env, &xs, t, opts)?,
        p: dist2(&env.optima[t + 1], &env.optima[t]).sqrt(),
    })
}

/// `Σ_i ‖z_i − ∇f_{i,t}(x_i)‖²`.
fn gradient_error(env: &Environment, states: &[AgentState], t: usize) -> Result<f64> {
    let mut acc = 0.0;
    for (s, o) in states.iter().zip(&env.oracles) {
        acc += dist2(&s.z, &o.full_grad(&s.x, t)?);
    }
    Ok(acc)
}

/// Largest local gradient change between rounds `t` and `t+1` over the
/// current iterates and random perturbations of their mean.
fn q_estimate(env: &Environment, xs: &[Vec<f64>], t: usize, opts: &RunOptions) -> Result<f64> {
    let Some(extra) = opts.q_probes else {
        return Ok(f64::NAN);
    };
    if env.oracles.iter().all(|o| o.drift.is_static()) {
        return Ok(0.0);
    }
    let n = xs.len();
    let mean = weighted_average(xs, &vec![1.0 / n as f64; n])?;
    let scale = (1.0 + norm(&mean)) / (mean.len() as f64).sqrt();
    let mut rng = rng::stream(0, Domain::Probe, &[t as u64]);
    let mut probes = xs.to_vec();
    for _ in 0..extra {
        let mut p = mean.clone();
        for v in &mut p {
            let e: f64 = StandardNormal.sample(&mut rng);
            *v += scale * e;
        }
        probes.push(p);
    }
    let mut best: f64 = 0.0;
    for x in &probes {
        for o in &env.oracles {
            let g1 = o.full_grad(x, t + 1)?;
            let g0 = o.full_grad(x, t)?;
            best = best.max(dist2(&g1, &g0).sqrt());
        }
    }
    Ok(best)
}

#[cfg(test)]
mod tests {
    use std::sync::Arc;

    use super::*;
    use crate::data::{Drift, LossKind, Sample, StreamSpec};
    use crate::metrics::encode_csv;
    use crate::network::{BaseKind, Digraph};

    fn env(drift: Drift, rounds: usize, batch_size: usize) -> Environment {
        let oracles = (0..3)
            .map(|i| {
                let shard: Vec<Sample> = (0..8)
                    .map(|k| Sample {
                        a: vec![1.0, ((i * 8 + k) as f64).sin()],
                        b: (k as f64 * 0.3).cos() + i as f64,
                    })
                    .collect();
                let stream = StreamSpec { batch_size, cycle: true, seed: 3 };
                AgentOracle::new(i, LossKind::LeastSquares, 0.1, Arc::new(shard), stream, drift).unwrap()
            })
            .collect();
        let plan = TopologyPlan::sampled(BaseKind::Complete, 3, 0.5, 11).unwrap();
        Environment::new(oracles, &plan, rounds, SolverOptions::default(), 1e-10).unwrap()
    }

    #[test]
    fn zero_rounds_returns_initial_state() {
        let e = env(Drift::default(), 0, 8);
        let x0 = vec![vec![0.0, 0.0]; 3];
        let out = run_horizon(&AlgoConfig::default(), &e, &x0, &RunOptions::default()).unwrap();
        assert!(out.metrics.is_empty());
        assert_eq!(out.states, init_agents(&x0, &e.oracles).unwrap());
    }

    #[test]
    fn reruns_are_byte_identical() {
        let e = env(Drift { rotation: 0.01, target_shift: 0.0 }, 40, 2);
        let x0 = vec![vec![0.0, 0.0]; 3];
        let cfg = AlgoConfig { alpha: 0.05, beta: 0.2, ..Default::default() };
        let a = run_horizon(&cfg, &e, &x0, &RunOptions::default()).unwrap();
        let b = run_horizon(&cfg, &e, &x0, &RunOptions::default()).unwrap();
        assert_eq!(encode_csv(&a.metrics), encode_csv(&b.metrics));
        assert_eq!(a.metrics.len(), 40);
    }

    #[test]
    fn static_run_has_zero_drift_measures() {
        let e = env(Drift::default(), 5, 2);
        let cfg = AlgoConfig { alpha: 0.05, ..Default::default() };
        let out = run_horizon(&cfg, &e, &vec![vec![0.0, 0.0]; 3], &RunOptions::default()).unwrap();
        assert!(out.metrics.iter().all(|m| m.p_t == 0.0 && m.q_t == 0.0));
    }

    #[test]
    fn target_shift_drift_is_detected_by_q_estimate() {
        let shift = 0.2;
        let e = env(Drift { rotation: 0.0, target_shift: shift }, 5, 8);
        // ∇f_{i,t+1} − ∇f_{i,t} = −shift · mean(a) for every x.
        let g = e
            .oracles
            .iter()
            .map(|o| {
                let mean: Vec<f64> = (0..2)
                    .map(|j| o.shard().iter().map(|s| s.a[j]).sum::<f64>() / 8.0)
                    .collect();
                shift * norm(&mean)
            })
            .fold(0.0, f64::max);
        let out = run_horizon(&AlgoConfig::default(), &e, &vec![vec![0.0, 0.0]; 3], &RunOptions::default()).unwrap();
        for m in &out.metrics {
            assert!(m.q_t >= g * (1.0 - 1e-6));
        }
    }

    #[test]
    fn dsgt_with_full_batch_converges_to_optimum() {
        let e = env(Drift::default(), 600, 8);
        let cfg = AlgoConfig { method: Method::Dsgt, alpha: 0.3, beta: 1.0, ..Default::default() };
        let out = run_horizon(&cfg, &e, &vec![vec![0.0, 0.0]; 3], &RunOptions { q_probes: None, record_trace: false }).unwrap();
        // Independent optimum of the averaged least-squares objective.
        let mut h = nalgebra::Matrix2::<f64>::identity() * 0.1;
        let mut rhs = nalgebra::Vector2::<f64>::zeros();
        for o in &e.oracles {
            for s in o.shard() {
                let a = nalgebra::Vector2::new(s.a[0], s.a[1]);
                h += a * a.transpose() / 24.0;
                rhs += a * s.b / 24.0;
            }
        }
        let xs = h.lu().solve(&rhs).unwrap();
        for s in &out.states {
            assert!((s.x[0] - xs[0]).abs() < 1e-9 && (s.x[1] - xs[1]).abs() < 1e-9);
        }
    }

    #[test]
    fn full_batch_beta_one_matches_dsgt_on_uniform_weights() {
        let e0 = env(Drift::default(), 30, 8);
        let plan = TopologyPlan::fixed(Digraph::complete(3).unwrap());
        let e = Environment::new(e0.oracles.clone(), &plan, 30, SolverOptions::default(), 1e-10).unwrap();
        let x0 = vec![vec![1.0, -1.0], vec![0.0, 2.0], vec![0.5, 0.5]];
        let opts = RunOptions { q_probes: None, record_trace: false };
        let a = run_horizon(&AlgoConfig { beta: 1.0, alpha: 0.1, ..Default::default() }, &e, &x0, &opts).unwrap();
        let b = run_horizon(&AlgoConfig { method: Method::Dsgt, beta: 1.0, alpha: 0.1, ..Default::default() }, &e, &x0, &opts).unwrap();
        for (sa, sb) in a.states.iter().zip(&b.states) {
            for k in 0..2 {
                assert!((sa.x[k] - sb.x[k]).abs() < 1e-12);
            }
        }
    }

    #[test]
    fn dsgd_and_dsgt_share_the_first_averaged_step() {
        let e = env(Drift::default(), 1, 2);
        let x0 = vec![vec![1.0, -1.0], vec![0.0, 2.0], vec![0.5, 0.5]];
        let opts = RunOptions { q_probes: None, record_trace: false };
        let a = run_horizon(&AlgoConfig { method: Method::Dsgd, alpha: 0.1, ..Default::default() }, &e, &x0, &opts).unwrap();
        let b = run_horizon(&AlgoConfig { method: Method::Dsgt, alpha: 0.1, ..Default::default() }, &e, &x0, &opts).unwrap();
        let avg = |s: &[AgentState]| -> Vec<f64> {
            (0..2).map(|k| s.iter().map(|st| st.x[k]).sum::<f64>() / 3.0).collect()
        };
        let (pa, pb) = (avg(&a.states), avg(&b.states));
        assert!((pa[0] - pb[0]).abs() < 1e-14 && (pa[1] - pb[1]).abs() < 1e-14);
    }
}

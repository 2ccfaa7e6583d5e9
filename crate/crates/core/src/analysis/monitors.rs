use nalgebra::{Matrix4, Vector4};

use super::ContractionParams;
use crate::algorithms::TraceRow;
use crate::{Error, Result};

/// Minimum number of independent replicas averaged into each expectation.
pub const MIN_REPLICAS: usize = 20;
/// Multiplicative slack absorbing Monte Carlo error.
pub const SLACK: f64 = 1.1;
const FLOOR: f64 = 1e-14;

/// The per-round inequalities checked against simulated traces.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Bound {
    /// `E‖Σ_i y_i‖²` in terms of `V_t`.
    TrackerSum,
    /// `E‖y‖²_{π⁻¹}` in terms of `V_t`.
    TrackerNorm,
    /// One-step recursion of `E‖x̂ − x^*‖²`.
    Optimality,
    /// One-step recursion of the weighted consensus error.
    Consensus,
    /// `E‖x_{t+1} − x_t‖²` in terms of `V_t`.
    StepLength,
    /// `E‖z_{t+1} − z_t‖²` in terms of `V_t`.
    GradientStep,
    /// `E S²(y_{t+1}, π_{t+1}) ≤ τ E S² + τ²κ_t²/(1−τ) E‖z_{t+1} − z_t‖²`.
    TrackingContraction,
    /// One-step recursion of the gradient-estimation error.
    EstimatorError,
    /// All four components of `V_{t+1} ≤ M(α)V_t + b_{1,t} + b_2`.
    System,
}

impl Bound {
    pub const DEFAULT: [Bound; 8] = [
        Bound::TrackerSum,
        Bound::TrackerNorm,
        Bound::Consensus,
        Bound::StepLength,
        Bound::GradientStep,
        Bound::TrackingContraction,
        Bound::EstimatorError,
        Bound::System,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Bound::TrackerSum => "tracker_sum",
            Bound::TrackerNorm => "tracker_norm",
            Bound::Optimality => "optimality",
            Bound::Consensus => "consensus",
            Bound::StepLength => "step_length",
            Bound::GradientStep => "gradient_step",
            Bound::TrackingContraction => "tracking_contraction",
            Bound::EstimatorError => "estimator_error",
            Bound::System => "system",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Violation {
    pub t: usize,
    /// Row of `V` for the system check, 0 otherwise.
    pub component: usize,
    pub lhs: f64,
    pub rhs: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct BoundResult {
    pub bound: Bound,
    pub checked: usize,
    pub violations: Vec<Violation>,
    /// Largest `lhs / rhs` seen.
    pub worst_ratio: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct MonitorReport {
    pub replicas: usize,
    pub rounds: usize,
    pub results: Vec<BoundResult>,
}

impl MonitorReport {
    pub fn result(&self, bound: Bound) -> Option<&BoundResult> {
        self.results.iter().find(|r| r.bound == bound)
    }

    pub fn total_violations(&self) -> usize {
        self.results.iter().map(|r| r.violations.len()).sum()
    }
}

/// Constants entering the bounds. `traces` holds one trace (rows `0..=T`)
/// per replica; replicas share the topology and differ in sampling.
#[derive(Debug, Clone)]
pub struct MonitorInputs<'a> {
    pub traces: &'a [Vec<TraceRow>],
    pub params: &'a ContractionParams,
    pub n: usize,
    pub alpha: f64,
    pub beta: f64,
    pub zeta0: f64,
    pub l_g: f64,
    pub mu: f64,
    pub sigma2: f64,
    /// `M(α)` for the system check.
    pub m: Option<Matrix4<f64>>,
}

/// Replica-averaged trace row; `q` is the largest estimate across replicas.
fn average(traces: &[Vec<TraceRow>], t: usize) -> TraceRow {
    let k = traces.len() as f64;
    let mean = |f: fn(&TraceRow) -> f64| traces.iter().map(|tr| f(&tr[t])).sum::<f64>() / k;
    TraceRow {
        v1: mean(|r| r.v1),
        v2: mean(|r| r.v2),
        v3: mean(|r| r.v3),
        v4: mean(|r| r.v4),
        sum_y2: mean(|r| r.sum_y2),
        y_pi2: mean(|r| r.y_pi2),
        dx2: mean(|r| r.dx2),
        dz2: mean(|r| r.dz2),
        q: traces.iter().map(|tr| tr[t].q).fold(0.0, f64::max),
        p: traces[0][t].p,
    }
}

/// Evaluates the selected bounds on replica averages and reports every
/// round where `lhs > 1.1 · rhs`.
pub fn lemma_monitors(inp: &MonitorInputs, select: &[Bound]) -> Result<MonitorReport> {
    let replicas = inp.traces.len();
    if replicas < MIN_REPLICAS {
        return Err(Error::Diagnostics {
            message: format!("need at least {MIN_REPLICAS} replicas"),
            achieved: replicas as f64,
        });
    }
    let len = inp.traces[0].len();
    if len == 0 || inp.traces.iter().any(|t| t.len() != len) {
        return Err(Error::Diagnostics {
            message: "replica traces differ in length".into(),
            achieved: len as f64,
        });
    }
    if inp.params.rounds.len() < len {
        return Err(Error::Diagnostics {
            message: "contraction constants shorter than the trace".into(),
            achieved: inp.params.rounds.len() as f64,
        });
    }
    let rounds = len - 1;
    let rows: Vec<TraceRow> = (0..len).map(|t| average(inp.traces, t)).collect();

    let p = inp.params;
    let (c, tau) = (p.c, p.tau);
    let nf = inp.n as f64;
    let (a, b) = (inp.alpha, inp.beta);
    let (l2, mu) = (inp.l_g * inp.l_g, inp.mu);
    let keep = (1.0 - b).powi(2);
    let s2 = inp.sigma2;

    let mut results = Vec::new();
    for &bound in select {
        let mut res = BoundResult {
            bound,
            checked: 0,
            violations: Vec::new(),
            worst_ratio: 0.0,
        };
        let mut check = |t: usize, component: usize, lhs: f64, rhs: f64| {
            res.checked += 1;
            if rhs > 0.0 {
                res.worst_ratio = res.worst_ratio.max(lhs / rhs);
            }
            if lhs > SLACK * rhs + FLOOR {
                res.violations.push(Violation { t, component, lhs, rhs });
            }
        };
        for t in 0..len {
            let v = &rows[t];
            let k = &p.rounds[t];
            let ph2 = k.varphi * k.varphi;
            let sum_bound = 2.0 * nf * v.v4 + 2.0 * l2 * nf * ph2 * (v.v3 + v.v1);
            match bound {
                Bound::TrackerSum => check(t, 0, v.sum_y2, sum_bound),
                Bound::TrackerNorm => check(t, 0, v.y_pi2, sum_bound + v.v2),
                _ if t == rounds => {}
                _ => {
                    let next = &rows[t + 1];
                    let k1 = &p.rounds[t + 1];
                    let g2 = k.gamma * k.gamma;
                    let cp1 = (c * k1.varphi + 1.0).powi(2);
                    let cpp = (c * k1.varphi + k.varphi).powi(2);
                    let fp = k.phi_pi;
                    match bound {
                        Bound::Optimality => {
                            let rhs = (1.0 - mu * a * nf * fp) * v.v3
                                + 4.0 * a / (mu * nf * fp) * v.v2
                                + 4.0 * a * fp / mu * v.v4
                                + 4.0 / (mu * a * nf * fp) * v.p * v.p
                                + 4.0 * a * fp * l2 * ph2 / mu * v.v1;
                            check(t, 0, next.v3, rhs);
                        }
                        Bound::Consensus => {
                            let c2 = c * c;
                            let w = a * a * c2 * g2 * (1.0 + c2) / (1.0 - c2);
                            let rhs = ((1.0 + c2) / 2.0 + 2.0 * w * l2 * nf * ph2) * v.v1
                                + w * v.v2
                                + 2.0 * w * l2 * nf * ph2 * v.v3
                                + 2.0 * w * nf * v.v4;
                            check(t, 0, next.v1, rhs);
                        }
                        Bound::StepLength => check(t, 0, v.dx2, step_length_bound(v, cpp, cp1, a, g2, l2, nf, ph2)),
                        Bound::GradientStep => {
                            let e = a * a * cp1 * g2;
                            let rhs = (6.0 * l2 * cpp + 12.0 * e * l2 * l2 * nf * ph2) * v.v1
                                + 12.0 * e * l2 * l2 * nf * ph2 * v.v3
                                + (12.0 * e * l2 * nf + 3.0 * b * b) * v.v4
                                + 6.0 * e * l2 * v.v2
                                + 6.0 * b * b * nf * (v.q * v.q + s2);
                            check(t, 0, v.dz2, rhs);
                        }
                        Bound::TrackingContraction => {
                            let rhs = tau * v.v2 + tau * tau * k.kappa * k.kappa / (1.0 - tau) * v.dz2;
                            check(t, 0, next.v2, rhs);
                        }
                        Bound::EstimatorError => {
                            let rhs = keep * (1.0 + inp.zeta0) * v.v4
                                + (8.0 + 1.0 / inp.zeta0) * nf * keep * v.q * v.q
                                + nf * b * b * s2
                                + 12.0 * keep * l2 * v.dx2;
                            check(t, 0, next.v4, rhs);
                        }
                        Bound::System => {
                            let Some(m) = inp.m else { continue };
                            let vt = Vector4::new(v.v1, v.v2, v.v3, v.v4);
                            let q2 = v.q * v.q;
                            let k1c = 6.0 * nf * b * b * tau * tau * p.psi / (1.0 - tau);
                            let drive = Vector4::new(
                                0.0,
                                k1c * (q2 + s2),
                                4.0 / (mu * a * nf * p.eta) * v.p * v.p,
                                (8.0 + 1.0 / inp.zeta0) * nf * keep * q2 + 2.0 * nf * b * b * s2,
                            );
                            let rhs = m * vt + drive;
                            let lhs = [next.v1, next.v2, next.v3, next.v4];
                            for i in 0..4 {
                                check(t, i + 1, lhs[i], rhs[i]);
                            }
                        }
                        Bound::TrackerSum | Bound::TrackerNorm => unreachable!(),
                    }
                }
            }
        }
        results.push(res);
    }
    Ok(MonitorReport {
        replicas,
        rounds,
        results,
    })
}

#[allow(clippy::too_many_arguments)]
fn step_length_bound(v: &TraceRow, cpp: f64, cp1: f64, a: f64, g2: f64, l2: f64, nf: f64, ph2: f64) -> f64 {
    let e = a * a * g2 * cp1;
    (2.0 * cpp + 4.0 * e * l2 * nf * ph2) * v.v1
        + 4.0 * e * l2 * nf * ph2 * v.v3
        + 4.0 * e * nf * v.v4
        + 2.0 * e * v.v2
}

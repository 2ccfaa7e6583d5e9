//! TV-HSGT and the DSGD / DSGT / DSGT-HB baselines as per-round updates.

mod run;
mod snapshot;

pub use run::{run_horizon, Environment, RunOptions, RunOutput, TraceRow};
pub use snapshot::{read_snapshot, write_snapshot};

use nalgebra::DMatrix;

use crate::data::AgentOracle;
use crate::linalg::{all_finite, axpy};
use crate::network::MixingPair;
use crate::{Error, Result};

/// Per-agent iterates. For the baselines `z` holds the latest stochastic
/// gradient and `x_prev` doubles as the heavy-ball memory.
#[derive(Debug, Clone, PartialEq)]
pub struct AgentState {
    pub x: Vec<f64>,
    pub y: Vec<f64>,
    pub z: Vec<f64>,
    pub x_prev: Vec<f64>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, serde::Deserialize, serde::Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Method {
    TvHsgt,
    Dsgd,
    Dsgt,
    DsgtHb,
}

impl Method {
    pub fn name(self) -> &'static str {
        match self {
            Method::TvHsgt => "tv_hsgt",
            Method::Dsgd => "dsgd",
            Method::Dsgt => "dsgt",
            Method::DsgtHb => "dsgt_hb",
        }
    }

    pub fn uses_beta(self) -> bool {
        self == Method::TvHsgt
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct AlgoConfig {
    pub method: Method,
    pub alpha: f64,
    pub beta: f64,
    /// Heavy-ball coefficient, used by DSGT-HB only.
    pub momentum: f64,
}

impl Default for AlgoConfig {
    fn default() -> Self {
        Self {
            method: Method::TvHsgt,
            alpha: 0.001,
            beta: 0.01,
            momentum: 0.9,
        }
    }
}

impl AlgoConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.alpha > 0.0 && self.alpha.is_finite()) {
            return Err(Error::config("run.alpha", format!("must be positive, got {}", self.alpha)));
        }
        if !(0.0..=1.0).contains(&self.beta) {
            return Err(Error::config("run.betas", format!("must lie in [0, 1], got {}", self.beta)));
        }
        if !(0.0..1.0).contains(&self.momentum) {
            return Err(Error::config("run.momentum", "must lie in [0, 1)"));
        }
        Ok(())
    }
}

/// `z_0 = ∇f̂_0(x_0; ξ_0)`, `y_0 = z_0`, `x_prev = x_0`.
pub fn init_agents(x0: &[Vec<f64>], oracles: &[AgentOracle]) -> Result<Vec<AgentState>> {
    if x0.len() != oracles.len() {
        return Err(Error::domain(format!(
            "{} initial points for {} agents",
            x0.len(),
            oracles.len()
        )));
    }
    x0.iter()
        .zip(oracles)
        .map(|(x, o)| {
            let z = o.stochastic_grad(x, 0)?;
            Ok(AgentState {
                x: x.clone(),
                y: z.clone(),
                z,
                x_prev: x.clone(),
            })
        })
        .collect()
}

/// One TV-HSGT transition `t → t+1` over the round-`t` mixing pair.
pub fn tvhsgt_round(
    states: &[AgentState],
    pair: &MixingPair,
    oracles: &[AgentOracle],
    cfg: &AlgoConfig,
    t: usize,
) -> Result<Vec<AgentState>> {
    let n = states.len();
    // x_{i,t+1} = Σ_j A_ij (x_j − α y_j)
    let sent: Vec<Vec<f64>> = states
        .iter()
        .map(|s| {
            let mut v = s.x.clone();
            axpy(-cfg.alpha, &s.y, &mut v);
            v
        })
        .collect();
    let x_new = mix(&pair.a, &sent);
    check(&x_new, t + 1)?;

    // Hybrid gradient on one shared sample ξ_{i,t+1}.
    let z_new = (0..n)
        .map(|i| {
            let o = &oracles[i];
            let batch = o.batch(t + 1)?;
            let g_new = o.grad_on(&x_new[i], t + 1, &batch)?;
            if cfg.beta == 1.0 {
                return Ok(g_new);
            }
            let g_old = o.grad_on(&states[i].x, t + 1, &batch)?;
            let keep = 1.0 - cfg.beta;
            Ok(states[i]
                .z
                .iter()
                .zip(&g_old)
                .zip(&g_new)
                .map(|((z, go), gn)| gn + keep * (z - go))
                .collect())
        })
        .collect::<Result<Vec<Vec<f64>>>>()?;
    check(&z_new, t + 1)?;

    // y_{i,t+1} = Σ_j B_ij (y_j + z_{j,t+1} − z_{j,t})
    let sent: Vec<Vec<f64>> = (0..n)
        .map(|j| {
            let s = &states[j];
            s.y.iter()
                .zip(&z_new[j])
                .zip(&s.z)
                .map(|((y, zn), zo)| y + zn - zo)
                .collect()
        })
        .collect();
    let y_new = mix(&pair.b, &sent);
    check(&y_new, t + 1)?;

    Ok(assemble(states, x_new, y_new, z_new))
}

/// One baseline transition `t → t+1` with doubly stochastic weights `w`.
pub fn baseline_round(
    states: &[AgentState],
    w: &DMatrix<f64>,
    oracles: &[AgentOracle],
    cfg: &AlgoConfig,
    t: usize,
) -> Result<Vec<AgentState>> {
    let xs: Vec<Vec<f64>> = states.iter().map(|s| s.x.clone()).collect();
    let x_new = match cfg.method {
        Method::Dsgd => {
            // x_{t+1} = W x_t − α g_t
            let mut mixed = mix(w, &xs);
            for (m, s) in mixed.iter_mut().zip(states) {
                axpy(-cfg.alpha, &s.z, m);
            }
            mixed
        }
        Method::Dsgt | Method::DsgtHb => {
            let sent: Vec<Vec<f64>> = states
                .iter()
                .map(|s| {
                    let mut v = s.x.clone();
                    axpy(-cfg.alpha, &s.y, &mut v);
                    v
                })
                .collect();
            let mut mixed = mix(w, &sent);
            if cfg.method == Method::DsgtHb {
                for (m, s) in mixed.iter_mut().zip(states) {
                    axpy(cfg.momentum, &s.x, m);
                    axpy(-cfg.momentum, &s.x_prev, m);
                }
            }
            mixed
        }
        Method::TvHsgt => {
            return Err(Error::domain("baseline_round called with the TV-HSGT method"));
        }
    };
    check(&x_new, t + 1)?;
    let g_new = x_new
        .iter()
        .zip(oracles)
        .map(|(x, o)| o.stochastic_grad(x, t + 1))
        .collect::<Result<Vec<_>>>()?;
    check(&g_new, t + 1)?;
    let y_new = if cfg.method == Method::Dsgd {
        g_new.clone()
    } else {
        let sent: Vec<Vec<f64>> = states
            .iter()
            .zip(&g_new)
            .map(|(s, g)| s.y.iter().zip(g).zip(&s.z).map(|((y, gn), go)| y + gn - go).collect())
            .collect();
        mix(w, &sent)
    };
    check(&y_new, t + 1)?;
    Ok(assemble(states, x_new, y_new, g_new))
}

fn mix(w: &DMatrix<f64>, vs: &[Vec<f64>]) -> Vec<Vec<f64>> {
    crate::linalg::mix(w, vs)
}

fn check(vs: &[Vec<f64>], round: usize) -> Result<()> {
    match vs.iter().position(|v| !all_finite(v)) {
        Some(agent) => Err(Error::Divergence { agent, round }),
        None => Ok(()),
    }
}

fn assemble(
    states: &[AgentState],
    x: Vec<Vec<f64>>,
    y: Vec<Vec<f64>>,
    z: Vec<Vec<f64>>,
) -> Vec<AgentState> {
    states
        .iter()
        .zip(x.into_iter().zip(y).zip(z))
        .map(|(s, ((x, y), z))| AgentState {
            x,
            y,
            z,
            x_prev: s.x.clone(),
        })
        .collect()
}

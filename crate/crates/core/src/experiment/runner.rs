use std::fmt::Write as _;
use std::path::{Path, PathBuf};
use std::sync::Arc;

use rayon::prelude::*;

use super::config::{DatasetKind, ExperimentConfig};
use super::ingest::{parse_idx, parse_libsvm};
use super::manifest::{sha256_hex, write_manifest};
use super::svg::{line_chart, Series};
use super::write_atomic;
use crate::algorithms::{run_horizon, AlgoConfig, Environment, Method, RunOptions, TraceRow};
use crate::analysis::{
    build_m, certificate_report, certify_step_size, default_zeta0, lemma_monitors,
    measure_contraction, steady_state, Bound, Certificate, CertifyMode, ContractionParams,
    MonitorInputs, MonitorReport,
};
use crate::data::{
    estimate_constants, global_profile, synthetic_shards, AgentOracle, LossProfile, Shard,
    SolverOptions, StreamSpec,
};
use crate::metrics::{write_metrics_csv, RoundMetrics};
use crate::network::{read_graph_sequence, write_graph_sequence, TopologyPlan};
use crate::rng::{self, Domain};
use crate::{Error, Result};

/// One `(method, β, seed)` job; methods without `β` carry `None`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Cell {
    pub method: Method,
    pub beta: Option<f64>,
    pub seed: u64,
}

impl Cell {
    pub fn file_name(&self) -> String {
        match self.beta {
            Some(b) => format!("{}_b{}_s{}.csv", self.method.name(), b, self.seed),
            None => format!("{}_s{}.csv", self.method.name(), self.seed),
        }
    }
}

/// Cells in `(method, β, seed)` order.
pub fn cells(cfg: &ExperimentConfig) -> Vec<Cell> {
    let mut out = Vec::new();
    for &method in &cfg.run.methods {
        let betas: Vec<Option<f64>> = if method.uses_beta() {
            cfg.run.betas.iter().map(|&b| Some(b)).collect()
        } else {
            vec![None]
        };
        for beta in betas {
            for &seed in &cfg.run.seeds {
                out.push(Cell { method, beta, seed });
            }
        }
    }
    out
}

#[derive(Debug, Clone)]
pub struct CellResult {
    pub cell: Cell,
    pub metrics: Vec<RoundMetrics>,
}

/// Seed-averaged curve point of one `(method, β)` group.
#[derive(Debug, Clone, PartialEq)]
pub struct SummaryRow {
    pub method: Method,
    pub beta: Option<f64>,
    pub t: usize,
    pub seeds: usize,
    pub regret_avg: f64,
    pub regret_avg_std: f64,
    pub opt2: f64,
    pub consensus2: f64,
    pub tracking2: f64,
    pub gradest2: f64,
    pub loss: f64,
    pub accuracy: f64,
}

pub const SUMMARY_HEADER: &str =
    "method,beta,t,seeds,regret_avg,regret_avg_std,opt2,consensus2,tracking2,gradest2,loss,accuracy";

#[derive(Debug, Clone)]
pub struct ExperimentOutput {
    pub dir: PathBuf,
    pub cells: Vec<CellResult>,
    pub summary: Vec<SummaryRow>,
    /// `(file name, sha256)` of every artifact listed in the manifest.
    pub files: Vec<(String, String)>,
}

impl ExperimentOutput {
    /// Seed mean of the final time-averaged regret of a group.
    pub fn final_regret(&self, method: Method, beta: Option<f64>) -> Option<f64> {
        self.summary
            .iter()
            .rev()
            .find(|r| r.method == method && r.beta == beta)
            .map(|r| r.regret_avg)
    }
}

/// Loads LIBSVM or IDX data, truncated to `max_samples`; `None` for
/// synthetic data.
pub fn load_real_data(cfg: &ExperimentConfig) -> Result<Option<Shard>> {
    let d = &cfg.dataset;
    let mut shard = match d.kind {
        DatasetKind::Synthetic => return Ok(None),
        DatasetKind::Libsvm => parse_libsvm(d.path.as_deref().expect("validated"), d.dim)?,
        DatasetKind::Idx => parse_idx(
            d.images.as_deref().expect("validated"),
            d.labels.as_deref().expect("validated"),
        )?,
    };
    shard.truncate(d.max_samples);
    if shard.len() < d.agents {
        return Err(Error::config(
            "dataset",
            format!("{} samples cannot be split over {} agents", shard.len(), d.agents),
        ));
    }
    Ok(Some(shard))
}

/// Per-agent shards for one seed: freshly generated synthetic data, or the
/// real data shuffled with the seed and cut into equal contiguous parts.
pub fn agent_shards(cfg: &ExperimentConfig, seed: u64, real: Option<&Shard>) -> Result<Vec<Shard>> {
    let n = cfg.dataset.agents;
    match real {
        None => synthetic_shards(&cfg.dataset.synthetic, cfg.dataset.loss_kind(), n, seed),
        Some(all) => {
            let mut order: Vec<usize> = (0..all.len()).collect();
            rand::seq::SliceRandom::shuffle(&mut order[..], &mut rng::stream(seed, Domain::Shuffle, &[]));
            let per = all.len() / n;
            Ok((0..n)
                .map(|i| order[i * per..(i + 1) * per].iter().map(|&k| all[k].clone()).collect())
                .collect())
        }
    }
}

/// Minibatch stream seed of replica `replica`; replica 0 uses the run seed.
pub fn stream_seed(seed: u64, replica: usize) -> u64 {
    if replica == 0 {
        seed
    } else {
        rng::derive_seed(seed, Domain::Batch, &[u64::MAX, replica as u64])
    }
}

pub fn build_oracles(cfg: &ExperimentConfig, seed: u64, real: Option<&Shard>) -> Result<Vec<AgentOracle>> {
    let d = &cfg.dataset;
    agent_shards(cfg, seed, real)?
        .into_iter()
        .enumerate()
        .map(|(i, shard)| {
            let stream = StreamSpec {
                batch_size: d.batch_size,
                cycle: d.cycle,
                seed,
            };
            AgentOracle::new(i, d.loss_kind(), d.r, Arc::new(shard), stream, d.drift)
        })
        .collect()
}

pub fn build_plan(cfg: &ExperimentConfig, seed: u64) -> Result<TopologyPlan> {
    let t = &cfg.topology;
    let plan = match &t.graph_file {
        Some(path) => TopologyPlan::Recorded(read_graph_sequence(path)?),
        None => TopologyPlan::sampled(t.base, cfg.dataset.agents, t.keep_prob, seed)?,
    };
    if plan.n() != cfg.dataset.agents {
        return Err(Error::config(
            "topology.graph_file",
            format!("graphs have {} nodes but dataset.agents = {}", plan.n(), cfg.dataset.agents),
        ));
    }
    Ok(plan)
}

pub fn build_environment(cfg: &ExperimentConfig, seed: u64, real: Option<&Shard>) -> Result<Environment> {
    let oracles = build_oracles(cfg, seed, real)?;
    let plan = build_plan(cfg, seed)?;
    let solver = SolverOptions {
        tol: cfg.run.solver_tol,
        max_iter: cfg.run.solver_max_iter,
    };
    Environment::new(oracles, &plan, cfg.run.rounds, solver, cfg.run.phi_tol)
}

pub fn run_options(cfg: &ExperimentConfig, record_trace: bool) -> RunOptions {
    RunOptions {
        q_probes: cfg.run.estimate_q.then_some(cfg.run.q_probes),
        record_trace,
    }
}

pub fn zero_start(env: &Environment) -> Vec<Vec<f64>> {
    env.oracles.iter().map(|o| vec![0.0; o.param_dim()]).collect()
}

/// Certificate inputs and result for one environment and `β`.
#[derive(Debug, Clone)]
pub struct CertificateOutcome {
    pub cert: Certificate,
    pub params: ContractionParams,
    pub profile: LossProfile,
    pub steady: [f64; 4],
}

/// Global constants probed across the horizon, the contraction
/// constants of the environment's mixing sequence, and the step-size
/// certificate.
pub fn certify_environment(
    env: &Environment,
    beta: f64,
    sigma_samples: usize,
    mode: Option<CertifyMode>,
) -> Result<CertificateOutcome> {
    // The origin, the first optimum and the current optimum at the start,
    // middle and end of the horizon.
    let last = env.rounds();
    let mut probes = Vec::new();
    for t in [0, last / 2, last] {
        probes.push((t, vec![0.0; env.optima[0].len()]));
        probes.push((t, env.optima[0].clone()));
        if t > 0 {
            probes.push((t, env.optima[t].clone()));
        }
    }
    probes.dedup();
    let locals = env
        .oracles
        .iter()
        .map(|o| estimate_constants(o, &probes, sigma_samples))
        .collect::<Result<Vec<_>>>()?;
    let profile = global_profile(&env.oracles, &locals)?;
    let params = measure_contraction(&env.pairs, &env.seqs)?;
    let mode = match mode {
        Some(m) => m,
        None => CertifyMode::Online {
            zeta0: default_zeta0(beta)?,
        },
    };
    let cert = certify_step_size(&params, env.n(), profile.mu, profile.l_g, beta, mode)?;
    let steady = steady_state(&cert, profile.sigma2)?;
    Ok(CertificateOutcome {
        cert,
        params,
        profile,
        steady,
    })
}

pub fn certificate_text(c: &CertificateOutcome) -> String {
    let mut s = certificate_report(&c.cert, &c.params, Some(c.steady));
    let _ = writeln!(s, "sigma2      {:.6e}", c.profile.sigma2);
    s
}

#[derive(Debug, Clone)]
pub struct MonitorOutcome {
    pub alpha: f64,
    pub beta: f64,
    pub certificate: CertificateOutcome,
    pub report: MonitorReport,
}

/// Runs `replicas` TV-HSGT copies that share data and topology but draw
/// independent minibatches, and checks the per-round bounds on their
/// averaged traces. `alpha = None` uses the certified step size.
pub fn monitor_environment(
    env: &Environment,
    beta: f64,
    alpha: Option<f64>,
    replicas: usize,
    sigma_samples: usize,
    opts: RunOptions,
) -> Result<MonitorOutcome> {
    let certificate = certify_environment(env, beta, sigma_samples, None)?;
    let alpha = alpha.unwrap_or(certificate.cert.alpha);
    let cfg = AlgoConfig {
        method: Method::TvHsgt,
        alpha,
        beta,
        ..AlgoConfig::default()
    };
    let opts = RunOptions {
        record_trace: true,
        ..opts
    };
    let x0 = zero_start(env);
    let traces: Vec<Vec<TraceRow>> = (0..replicas)
        .into_par_iter()
        .map(|r| {
            let mut e = env.clone();
            let seed = stream_seed(e.oracles[0].stream_seed(), r);
            e.oracles = e.oracles.iter().map(|o| o.with_stream_seed(seed)).collect();
            Ok(run_horizon(&cfg, &e, &x0, &opts)?.trace)
        })
        .collect::<Result<_>>()?;
    let c = &certificate;
    let zeta0 = default_zeta0(beta)?;
    let mode = CertifyMode::Online { zeta0 };
    let (_, m) = build_m(alpha, beta, &c.params, env.n(), c.profile.mu, c.profile.l_g, mode)?;
    let inputs = MonitorInputs {
        traces: &traces,
        params: &c.params,
        n: env.n(),
        alpha,
        beta,
        zeta0,
        l_g: c.profile.l_g,
        mu: c.profile.mu,
        sigma2: c.profile.sigma2,
        m: Some(m),
    };
    let report = lemma_monitors(&inputs, &Bound::DEFAULT)?;
    Ok(MonitorOutcome {
        alpha,
        beta,
        certificate,
        report,
    })
}

pub fn monitor_text(m: &MonitorOutcome) -> String {
    let mut s = String::new();
    let _ = writeln!(s, "# bound monitors");
    let _ = writeln!(s, "alpha       {:.6e}", m.alpha);
    let _ = writeln!(s, "beta        {:.6e}", m.beta);
    let _ = writeln!(s, "replicas    {}", m.report.replicas);
    let _ = writeln!(s, "rounds      {}", m.report.rounds);
    let _ = writeln!(s, "violations  {}", m.report.total_violations());
    let _ = writeln!(s);
    let _ = writeln!(s, "bound,checked,violations,worst_ratio");
    for r in &m.report.results {
        let _ = writeln!(s, "{},{},{},{:.6e}", r.bound.name(), r.checked, r.violations.len(), r.worst_ratio);
    }
    for r in m.report.results.iter().filter(|r| !r.violations.is_empty()) {
        let _ = writeln!(s);
        let _ = writeln!(s, "# {} violations: t,component,lhs,rhs", r.bound.name());
        for v in &r.violations {
            let _ = writeln!(s, "{},{},{:e},{:e}", v.t, v.component, v.lhs, v.rhs);
        }
    }
    s
}

fn summarize(cells: &[CellResult]) -> Vec<SummaryRow> {
    let mut groups: Vec<(Method, Option<f64>, Vec<&CellResult>)> = Vec::new();
    for c in cells {
        match groups
            .iter_mut()
            .find(|(m, b, _)| *m == c.cell.method && *b == c.cell.beta)
        {
            Some(g) => g.2.push(c),
            None => groups.push((c.cell.method, c.cell.beta, vec![c])),
        }
    }
    let mut rows = Vec::new();
    for (method, beta, members) in groups {
        let k = members.len() as f64;
        let rounds = members[0].metrics.len();
        for i in 0..rounds {
            let mean = |f: fn(&RoundMetrics) -> f64| members.iter().map(|c| f(&c.metrics[i])).sum::<f64>() / k;
            let avg = mean(|m| m.regret_avg);
            let var = if members.len() > 1 {
                members
                    .iter()
                    .map(|c| (c.metrics[i].regret_avg - avg).powi(2))
                    .sum::<f64>()
                    / (k - 1.0)
            } else {
                0.0
            };
            rows.push(SummaryRow {
                method,
                beta,
                t: members[0].metrics[i].t,
                seeds: members.len(),
                regret_avg: avg,
                regret_avg_std: var.sqrt(),
                opt2: mean(|m| m.opt2),
                consensus2: mean(|m| m.consensus2),
                tracking2: mean(|m| m.tracking2),
                gradest2: mean(|m| m.gradest2),
                loss: mean(|m| m.loss),
                accuracy: mean(|m| m.accuracy),
            });
        }
    }
    rows
}

fn beta_text(beta: Option<f64>) -> String {
    beta.map(|b| b.to_string()).unwrap_or_default()
}

pub fn encode_summary(rows: &[SummaryRow]) -> String {
    let mut s = String::from(SUMMARY_HEADER);
    s.push('\n');
    for r in rows {
        let _ = writeln!(
            s,
            "{},{},{},{},{},{},{},{},{},{},{},{}",
            r.method.name(),
            beta_text(r.beta),
            r.t,
            r.seeds,
            r.regret_avg,
            r.regret_avg_std,
            r.opt2,
            r.consensus2,
            r.tracking2,
            r.gradest2,
            r.loss,
            r.accuracy
        );
    }
    s
}

fn charts(rows: &[SummaryRow]) -> Vec<(String, String)> {
    let metrics: [(&str, fn(&SummaryRow) -> f64, bool); 5] = [
        ("regret_avg", |r| r.regret_avg, false),
        ("opt2", |r| r.opt2, true),
        ("consensus2", |r| r.consensus2, true),
        ("loss", |r| r.loss, false),
        ("accuracy", |r| r.accuracy, false),
    ];
    let mut keys: Vec<(Method, Option<f64>)> = Vec::new();
    for r in rows {
        if !keys.contains(&(r.method, r.beta)) {
            keys.push((r.method, r.beta));
        }
    }
    metrics
        .iter()
        .map(|(name, f, log)| {
            let series: Vec<Series> = keys
                .iter()
                .map(|&(m, b)| Series {
                    label: match b {
                        Some(b) => format!("{} β={b}", m.name()),
                        None => m.name().to_string(),
                    },
                    points: rows
                        .iter()
                        .filter(|r| r.method == m && r.beta == b)
                        .map(|r| (r.t as f64, f(r)))
                        .collect(),
                })
                .collect();
            (format!("chart_{name}.svg"), line_chart(name, name, &series, *log))
        })
        .collect()
}

/// Runs every cell of the experiment and writes the artifact directory:
/// per-cell metrics CSVs, `summary.csv`, optional certificates, monitor
/// reports, charts and graph sequences, the canonical `config.toml`, and
/// `manifest.txt` with the SHA-256 of every file.
pub fn run_experiment(cfg: &ExperimentConfig) -> Result<ExperimentOutput> {
    cfg.validate()?;
    match cfg.run.workers {
        0 => run_in_pool(cfg),
        w => rayon::ThreadPoolBuilder::new()
            .num_threads(w)
            .build()
            .map_err(|e| Error::config("run.workers", e.to_string()))?
            .install(|| run_in_pool(cfg)),
    }
}

fn run_in_pool(cfg: &ExperimentConfig) -> Result<ExperimentOutput> {
    let dir = cfg.output.clone();
    std::fs::create_dir_all(&dir)?;
    let real = load_real_data(cfg)?;
    let envs: Vec<Environment> = cfg
        .run
        .seeds
        .par_iter()
        .map(|&s| build_environment(cfg, s, real.as_ref()))
        .collect::<Result<_>>()?;
    let env_of = |seed: u64| {
        let k = cfg.run.seeds.iter().position(|&s| s == seed).expect("known seed");
        &envs[k]
    };

    let opts = run_options(cfg, false);
    let cell_list = cells(cfg);
    let results: Vec<CellResult> = cell_list
        .par_iter()
        .map(|&cell| {
            let env = env_of(cell.seed);
            let algo = cfg.algo(cell.method, cell.beta.unwrap_or(cfg.run.betas[0]));
            let out = run_horizon(&algo, env, &zero_start(env), &opts)?;
            write_metrics_csv(&dir.join(cell.file_name()), &out.metrics)?;
            Ok(CellResult {
                cell,
                metrics: out.metrics,
            })
        })
        .collect::<Result<_>>()?;
    // Cell CSVs are already on disk; everything else is written here.
    let mut files: Vec<(String, String)> = Vec::new();
    for r in &results {
        let name = r.cell.file_name();
        files.push((sha_of(&dir, &name)?, name));
    }
    let mut emit = |name: String, bytes: &[u8]| -> Result<()> {
        write_atomic(&dir.join(&name), bytes)?;
        files.push((sha256_hex(bytes), name));
        Ok(())
    };

    let summary = summarize(&results);
    emit("summary.csv".into(), encode_summary(&summary).as_bytes())?;
    if cfg.run.charts {
        for (name, svg) in charts(&summary) {
            emit(name, svg.as_bytes())?;
        }
    }

    let tv_betas: Vec<f64> = if cfg.run.methods.contains(&Method::TvHsgt) {
        cfg.run.betas.clone()
    } else {
        Vec::new()
    };
    if cfg.certificate {
        let jobs: Vec<(u64, f64)> = cfg
            .run
            .seeds
            .iter()
            .flat_map(|&s| tv_betas.iter().map(move |&b| (s, b)))
            .filter(|&(_, b)| b > 0.0 && b < 1.0)
            .collect();
        let texts: Vec<(String, String)> = jobs
            .par_iter()
            .map(|&(s, b)| {
                let c = certify_environment(env_of(s), b, cfg.run.sigma_samples, None)?;
                Ok((format!("certificate_b{b}_s{s}.txt"), certificate_text(&c)))
            })
            .collect::<Result<_>>()?;
        for (name, text) in texts {
            emit(name, text.as_bytes())?;
        }
    }
    if cfg.monitor {
        let seed = cfg.run.seeds[0];
        for &b in tv_betas.iter().filter(|&&b| b > 0.0 && b < 1.0) {
            let m = monitor_environment(
                env_of(seed),
                b,
                Some(cfg.run.alpha),
                cfg.run.replicas,
                cfg.run.sigma_samples,
                opts,
            )?;
            emit(format!("monitor_b{b}_s{seed}.txt"), monitor_text(&m).as_bytes())?;
        }
    }
    let config_text = cfg.to_toml();
    emit("config.toml".into(), config_text.as_bytes())?;
    if cfg.topology.export {
        for (&s, env) in cfg.run.seeds.iter().zip(&envs) {
            let name = format!("graphs_s{s}.txt");
            // Include the rounds past the horizon that pinned down the last
            // φ, so a replay from the file reproduces every φ_t.
            let plan = build_plan(cfg, s)?;
            let graphs = (0..env.rounds() + env.seqs.window)
                .map(|t| plan.graph(t))
                .collect::<Result<Vec<_>>>()?;
            write_graph_sequence(&dir.join(&name), &graphs)?;
            files.push((sha_of(&dir, &name)?, name));
        }
    }
    let mut files: Vec<(String, String)> = files.into_iter().map(|(h, n)| (n, h)).collect();
    files.sort();
    write_manifest(&dir.join("manifest.txt"), cfg, &config_text, &files)?;
    Ok(ExperimentOutput {
        dir,
        cells: results,
        summary,
        files,
    })
}

fn sha_of(dir: &Path, name: &str) -> Result<String> {
    Ok(sha256_hex(&std::fs::read(dir.join(name))?))
}

/// Reruns the experiment recorded in `dir` into `scratch` and returns the
/// names of artifacts whose bytes differ from the manifest.
pub fn replay(dir: &Path, scratch: &Path) -> Result<Vec<String>> {
    let recorded = super::manifest::read_manifest(&dir.join("manifest.txt"))?;
    let mut cfg = ExperimentConfig::load(&dir.join("config.toml"))?;
    cfg.output = scratch.to_path_buf();
    let out = run_experiment(&cfg)?;
    let mut diff: Vec<String> = recorded
        .iter()
        .filter(|(name, hash)| out.files.iter().find(|(n, _)| n == name).map(|(_, h)| h) != Some(hash))
        .map(|(name, _)| name.clone())
        .collect();
    for (name, _) in &out.files {
        if !recorded.iter().any(|(n, _)| n == name) {
            diff.push(name.clone());
        }
    }
    Ok(diff)
}

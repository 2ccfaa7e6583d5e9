use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::algorithms::{AlgoConfig, Method};
use crate::data::{Drift, LossKind, SyntheticSpec};
use crate::network::BaseKind;
use crate::{Error, Result};

pub const CONFIG_VERSION: u32 = 1;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Deserialize, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum DatasetKind {
    Synthetic,
    Libsvm,
    Idx,
}

#[derive(Debug, Clone, PartialEq, Deserialize, Serialize)]
#[serde(default, deny_unknown_fields)]
pub struct DatasetConfig {
    pub kind: DatasetKind,
    /// Defaults to binary logistic for synthetic and LIBSVM data and to the
    /// softmax loss for IDX images.
    pub loss: Option<LossKind>,
    /// LIBSVM file.
    pub path: Option<PathBuf>,
    /// Feature dimension of LIBSVM data; the largest index seen otherwise.
    pub dim: Option<usize>,
    /// IDX image and label files.
    pub images: Option<PathBuf>,
    pub labels: Option<PathBuf>,
    /// Real data is truncated to this many samples before sharding.
    pub max_samples: usize,
    pub agents: usize,
    pub batch_size: usize,
    pub r: f64,
    pub cycle: bool,
    pub synthetic: SyntheticSpec,
    pub drift: Drift,
}

impl Default for DatasetConfig {
    fn default() -> Self {
        Self {
            kind: DatasetKind::Synthetic,
            loss: None,
            path: None,
            dim: None,
            images: None,
            labels: None,
            max_samples: 20_000,
            agents: 10,
            batch_size: 100,
            r: 1e-5,
            cycle: true,
            synthetic: SyntheticSpec::default(),
            drift: Drift::default(),
        }
    }
}

impl DatasetConfig {
    pub fn loss_kind(&self) -> LossKind {
        self.loss.unwrap_or(match self.kind {
            DatasetKind::Idx => LossKind::Softmax,
            _ => LossKind::BinaryLogistic,
        })
    }
}

#[derive(Debug, Clone, PartialEq, Deserialize, Serialize)]
#[serde(default, deny_unknown_fields)]
pub struct TopologyConfig {
    pub base: BaseKind,
    pub keep_prob: f64,
    /// Recorded graph sequence replacing the sampled topology.
    pub graph_file: Option<PathBuf>,
    /// Write each seed's graph sequence next to the metrics.
    pub export: bool,
}

impl Default for TopologyConfig {
    fn default() -> Self {
        Self {
            base: BaseKind::Complete,
            keep_prob: 0.5,
            graph_file: None,
            export: false,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Deserialize, Serialize)]
#[serde(default, deny_unknown_fields)]
pub struct RunConfig {
    pub methods: Vec<Method>,
    pub rounds: usize,
    pub alpha: f64,
    pub betas: Vec<f64>,
    pub momentum: f64,
    pub seeds: Vec<u64>,
    /// Random probes of the `q_t` estimator; `estimate_q = false` skips it.
    pub q_probes: usize,
    pub estimate_q: bool,
    pub solver_tol: f64,
    pub solver_max_iter: usize,
    pub phi_tol: f64,
    /// Minibatches per probe for the `σ²` estimate.
    pub sigma_samples: usize,
    /// Seed replicas of the lemma monitors.
    pub replicas: usize,
    /// Worker threads; 0 uses the global pool. Not part of the
    /// reproducibility hash since it never changes the output.
    #[serde(skip_serializing)]
    pub workers: usize,
    pub charts: bool,
}

impl Default for RunConfig {
    fn default() -> Self {
        let algo = AlgoConfig::default();
        Self {
            methods: vec![Method::TvHsgt],
            rounds: 2000,
            alpha: algo.alpha,
            betas: vec![algo.beta],
            momentum: algo.momentum,
            seeds: vec![0],
            q_probes: 8,
            estimate_q: true,
            solver_tol: 1e-10,
            solver_max_iter: 1_000_000,
            phi_tol: crate::network::DEFAULT_PHI_TOL,
            sigma_samples: 1000,
            replicas: 20,
            workers: 0,
            charts: false,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Deserialize, Serialize)]
#[serde(default, deny_unknown_fields)]
pub struct ExperimentConfig {
    pub version: u32,
    /// Artifact directory; not part of the reproducibility hash.
    #[serde(skip_serializing)]
    pub output: PathBuf,
    pub certificate: bool,
    pub monitor: bool,
    pub dataset: DatasetConfig,
    pub topology: TopologyConfig,
    pub run: RunConfig,
}

impl Default for ExperimentConfig {
    fn default() -> Self {
        Self {
            version: CONFIG_VERSION,
            output: PathBuf::from("tvhsgt-out"),
            certificate: false,
            monitor: false,
            dataset: DatasetConfig::default(),
            topology: TopologyConfig::default(),
            run: RunConfig::default(),
        }
    }
}

fn fail<T>(path: impl Into<String>, message: impl Into<String>) -> Result<T> {
    Err(Error::config(path, message))
}

impl ExperimentConfig {
    pub fn from_toml(text: &str) -> Result<Self> {
        let cfg: Self = toml::from_str(text).map_err(|e| {
            let at = e
                .span()
                .map(|s| {
                    let line = text[..s.start].matches('\n').count() + 1;
                    format!("line {line}")
                })
                .unwrap_or_else(|| "config".into());
            Error::config(at, e.message().to_string())
        })?;
        cfg.validate()?;
        Ok(cfg)
    }

    /// Reads and validates a config file; relative data paths resolve
    /// against the file's directory.
    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| Error::config(path.display().to_string(), e.to_string()))?;
        let mut cfg = Self::from_toml(&text)?;
        let base = path.parent().unwrap_or(Path::new(""));
        for p in [
            &mut cfg.dataset.path,
            &mut cfg.dataset.images,
            &mut cfg.dataset.labels,
            &mut cfg.topology.graph_file,
        ]
        .into_iter()
        .flatten()
        {
            if p.is_relative() {
                *p = std::path::absolute(base.join(&*p))?;
            }
        }
        Ok(cfg)
    }

    /// Canonical text of every setting except the output directory.
    pub fn to_toml(&self) -> String {
        toml::to_string(self).expect("config serializes")
    }

    pub fn algo(&self, method: Method, beta: f64) -> AlgoConfig {
        AlgoConfig {
            method,
            alpha: self.run.alpha,
            beta,
            momentum: self.run.momentum,
        }
    }

    /// Rejects every setting outside the assumptions before any compute.
    pub fn validate(&self) -> Result<()> {
        if self.version != CONFIG_VERSION {
            return fail("version", format!("unsupported version {}, expected {CONFIG_VERSION}", self.version));
        }
        let d = &self.dataset;
        if d.agents < 2 {
            return fail("dataset.agents", format!("need at least 2 agents, got {}", d.agents));
        }
        if d.batch_size == 0 {
            return fail("dataset.batch_size", "must be at least 1");
        }
        if !(d.r >= 0.0 && d.r.is_finite()) {
            return fail("dataset.r", "must be finite and nonnegative");
        }
        if d.max_samples == 0 {
            return fail("dataset.max_samples", "must be positive");
        }
        match d.kind {
            DatasetKind::Libsvm if d.path.is_none() => return fail("dataset.path", "required for libsvm data"),
            DatasetKind::Idx if d.images.is_none() => return fail("dataset.images", "required for idx data"),
            DatasetKind::Idx if d.labels.is_none() => return fail("dataset.labels", "required for idx data"),
            _ => {}
        }
        if !(d.drift.rotation.is_finite() && d.drift.target_shift.is_finite()) {
            return fail("dataset.drift", "must be finite");
        }
        if d.kind != DatasetKind::Synthetic && !d.drift.is_static() {
            return fail("dataset.drift", "drift is available for synthetic data only");
        }
        if d.drift.target_shift != 0.0 && d.loss_kind() != LossKind::LeastSquares {
            return fail("dataset.drift.target_shift", "applies to the least-squares loss only");
        }
        if d.kind == DatasetKind::Idx && d.loss_kind() != LossKind::Softmax {
            return fail("dataset.loss", "idx data carries ten classes and needs the softmax loss");
        }

        let t = &self.topology;
        if !(t.keep_prob > 0.0 && t.keep_prob <= 1.0) {
            return fail("topology.keep_prob", format!("must lie in (0, 1], got {}", t.keep_prob));
        }

        let r = &self.run;
        if r.methods.is_empty() {
            return fail("run.methods", "must not be empty");
        }
        for (i, m) in r.methods.iter().enumerate() {
            if r.methods[..i].contains(m) {
                return fail(format!("run.methods[{i}]"), format!("duplicate method {}", m.name()));
            }
        }
        if r.rounds < 1 {
            return fail("run.rounds", "T must be at least 1");
        }
        if !(r.alpha > 0.0 && r.alpha.is_finite()) {
            return fail("run.alpha", format!("must be positive, got {}", r.alpha));
        }
        if r.betas.is_empty() {
            return fail("run.betas", "must not be empty");
        }
        for (i, b) in r.betas.iter().enumerate() {
            if !(0.0..=1.0).contains(b) {
                return fail(format!("run.betas[{i}]"), format!("must lie in [0, 1], got {b}"));
            }
            if r.betas[..i].contains(b) {
                return fail(format!("run.betas[{i}]"), format!("duplicate value {b}"));
            }
        }
        if !(0.0..1.0).contains(&r.momentum) {
            return fail("run.momentum", "must lie in [0, 1)");
        }
        if r.seeds.is_empty() {
            return fail("run.seeds", "must not be empty");
        }
        for (i, s) in r.seeds.iter().enumerate() {
            if r.seeds[..i].contains(s) {
                return fail(format!("run.seeds[{i}]"), format!("duplicate seed {s}"));
            }
        }
        if !(r.solver_tol > 0.0) || r.solver_max_iter == 0 {
            return fail("run.solver_tol", "solver tolerance and iteration cap must be positive");
        }
        if !(r.phi_tol > 0.0) {
            return fail("run.phi_tol", "must be positive");
        }
        if self.monitor && r.replicas < crate::analysis::MIN_REPLICAS {
            return fail(
                "run.replicas",
                format!("the monitors need at least {} replicas", crate::analysis::MIN_REPLICAS),
            );
        }
        Ok(())
    }
}

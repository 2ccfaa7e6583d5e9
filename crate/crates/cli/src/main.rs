//! Command line front end: `run`, `certify`, `monitor` and `replay`.

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use tvhsgt::algorithms::Method;
use tvhsgt::analysis::CertifyMode;
use tvhsgt::experiment::{
    build_environment, certificate_text, certify_environment, load_real_data,
    monitor_environment, monitor_text, replay, run_experiment, run_options, write_atomic,
    ExperimentConfig,
};
use tvhsgt::network::BaseKind;
use tvhsgt::{Error, Result};

#[derive(Parser)]
#[command(name = "tvhsgt", version, about = "Decentralized online optimization over time-varying digraphs")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run every (method, beta, seed) cell and write the artifact directory.
    Run(Overrides),
    /// Print the step-size certificate for one seed's topology and data.
    Certify {
        #[command(flatten)]
        common: Overrides,
        /// Seed whose topology and data are certified (default: first seed).
        #[arg(long)]
        seed: Option<u64>,
        /// Beta to certify (default: first beta).
        #[arg(long)]
        beta: Option<f64>,
        /// Use the fixed-objective estimator coupling (1-beta)^2.
        #[arg(long = "static")]
        static_mode: bool,
        /// Also write the report to this file.
        #[arg(long)]
        report: Option<PathBuf>,
    },
    /// Check the per-round error bounds on replica-averaged traces.
    Monitor {
        #[command(flatten)]
        common: Overrides,
        #[arg(long)]
        seed: Option<u64>,
        #[arg(long)]
        beta: Option<f64>,
        /// Step size of the monitored runs (default: the certified one).
        #[arg(long = "step")]
        step: Option<f64>,
        #[arg(long)]
        replicas: Option<usize>,
        /// Exit with status 1 when any bound is violated.
        #[arg(long)]
        strict: bool,
        #[arg(long)]
        report: Option<PathBuf>,
    },
    /// Rerun a recorded artifact directory and compare every file hash.
    Replay {
        dir: PathBuf,
        /// Scratch directory for the rerun (default: a temporary one).
        #[arg(long)]
        scratch: Option<PathBuf>,
    },
}

/// Flags mirroring the config fields; they override the file.
#[derive(Args)]
struct Overrides {
    /// TOML experiment config; defaults apply when omitted.
    #[arg(long, short)]
    config: Option<PathBuf>,
    #[arg(long)]
    out: Option<PathBuf>,
    #[arg(long)]
    rounds: Option<usize>,
    #[arg(long)]
    alpha: Option<f64>,
    #[arg(long, value_delimiter = ',')]
    betas: Option<Vec<f64>>,
    #[arg(long, value_delimiter = ',')]
    seeds: Option<Vec<u64>>,
    /// Comma-separated subset of tv_hsgt, dsgd, dsgt, dsgt_hb.
    #[arg(long, value_delimiter = ',', value_parser = parse_method)]
    methods: Option<Vec<Method>>,
    #[arg(long)]
    agents: Option<usize>,
    #[arg(long)]
    batch_size: Option<usize>,
    /// complete, ring or random.
    #[arg(long, value_parser = parse_base)]
    base: Option<BaseKind>,
    #[arg(long)]
    keep_prob: Option<f64>,
    #[arg(long)]
    workers: Option<usize>,
    #[arg(long)]
    certificate: bool,
    #[arg(long)]
    monitor: bool,
    #[arg(long)]
    charts: bool,
}

fn parse_method(s: &str) -> std::result::Result<Method, String> {
    match s {
        "tv_hsgt" => Ok(Method::TvHsgt),
        "dsgd" => Ok(Method::Dsgd),
        "dsgt" => Ok(Method::Dsgt),
        "dsgt_hb" => Ok(Method::DsgtHb),
        _ => Err(format!("unknown method `{s}`")),
    }
}

fn parse_base(s: &str) -> std::result::Result<BaseKind, String> {
    match s {
        "complete" => Ok(BaseKind::Complete),
        "ring" => Ok(BaseKind::Ring),
        "random" => Ok(BaseKind::Random),
        _ => Err(format!("unknown base graph `{s}`")),
    }
}

impl Overrides {
    fn resolve(&self) -> Result<ExperimentConfig> {
        let mut cfg = match &self.config {
            Some(p) => ExperimentConfig::load(p)?,
            None => ExperimentConfig::default(),
        };
        if let Some(v) = &self.out {
            cfg.output = v.clone();
        }
        if let Some(v) = self.rounds {
            cfg.run.rounds = v;
        }
        if let Some(v) = self.alpha {
            cfg.run.alpha = v;
        }
        if let Some(v) = &self.betas {
            cfg.run.betas = v.clone();
        }
        if let Some(v) = &self.seeds {
            cfg.run.seeds = v.clone();
        }
        if let Some(v) = &self.methods {
            cfg.run.methods = v.clone();
        }
        if let Some(v) = self.agents {
            cfg.dataset.agents = v;
        }
        if let Some(v) = self.batch_size {
            cfg.dataset.batch_size = v;
        }
        if let Some(v) = self.base {
            cfg.topology.base = v;
        }
        if let Some(v) = self.keep_prob {
            cfg.topology.keep_prob = v;
        }
        if let Some(v) = self.workers {
            cfg.run.workers = v;
        }
        cfg.certificate |= self.certificate;
        cfg.monitor |= self.monitor;
        cfg.run.charts |= self.charts;
        cfg.validate()?;
        Ok(cfg)
    }
}

fn pick<T: Copy>(explicit: Option<T>, list: &[T]) -> T {
    explicit.unwrap_or(list[0])
}

fn emit(text: &str, report: Option<&PathBuf>) -> Result<()> {
    print!("{text}");
    if let Some(path) = report {
        write_atomic(path, text.as_bytes())?;
    }
    Ok(())
}

fn execute(cli: Cli) -> Result<i32> {
    match cli.command {
        Command::Run(o) => {
            let cfg = o.resolve()?;
            let out = run_experiment(&cfg)?;
            println!("wrote {} files to {}", out.files.len() + 1, out.dir.display());
            for r in out.summary.iter().filter(|r| r.t == cfg.run.rounds) {
                let beta = r.beta.map(|b| format!(" beta={b}")).unwrap_or_default();
                println!("{}{beta}: final time-averaged regret {:.6e}", r.method.name(), r.regret_avg);
            }
            Ok(0)
        }
        Command::Certify {
            common,
            seed,
            beta,
            static_mode,
            report,
        } => {
            let cfg = common.resolve()?;
            let real = load_real_data(&cfg)?;
            let env = build_environment(&cfg, pick(seed, &cfg.run.seeds), real.as_ref())?;
            let mode = static_mode.then_some(CertifyMode::Static);
            let c = certify_environment(&env, pick(beta, &cfg.run.betas), cfg.run.sigma_samples, mode)?;
            emit(&certificate_text(&c), report.as_ref())?;
            Ok(0)
        }
        Command::Monitor {
            common,
            seed,
            beta,
            step,
            replicas,
            strict,
            report,
        } => {
            let cfg = common.resolve()?;
            let real = load_real_data(&cfg)?;
            let env = build_environment(&cfg, pick(seed, &cfg.run.seeds), real.as_ref())?;
            let m = monitor_environment(
                &env,
                pick(beta, &cfg.run.betas),
                step,
                replicas.unwrap_or(cfg.run.replicas),
                cfg.run.sigma_samples,
                run_options(&cfg, true),
            )?;
            emit(&monitor_text(&m), report.as_ref())?;
            Ok(if strict && m.report.total_violations() > 0 { 1 } else { 0 })
        }
        Command::Replay { dir, scratch } => {
            let tmp;
            let scratch = match scratch {
                Some(s) => s,
                None => {
                    tmp = tempfile::tempdir()?;
                    tmp.path().to_path_buf()
                }
            };
            let diff = replay(&dir, &scratch)?;
            if diff.is_empty() {
                println!("replay of {} matches the manifest", dir.display());
                Ok(0)
            } else {
                for name in &diff {
                    println!("mismatch: {name}");
                }
                Err(Error::Diagnostics {
                    message: format!("{} artifacts differ from the manifest", diff.len()),
                    achieved: diff.len() as f64,
                })
            }
        }
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match execute(cli) {
        Ok(code) => ExitCode::from(code as u8),
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}

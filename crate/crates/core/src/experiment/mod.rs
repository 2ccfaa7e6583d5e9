//! Declarative experiments: configuration, data ingestion, the cell runner
//! and its artifacts.

mod config;
mod ingest;
mod manifest;
mod runner;
mod svg;

use std::path::Path;

pub use config::{
    DatasetConfig, DatasetKind, ExperimentConfig, RunConfig, TopologyConfig, CONFIG_VERSION,
};
pub use ingest::{encode_libsvm, parse_idx, parse_idx_bytes, parse_libsvm, parse_libsvm_str};
pub use manifest::{read_manifest, sha256_hex};
pub use runner::{
    agent_shards, build_environment, build_oracles, build_plan, cells, certificate_text,
    certify_environment, encode_summary, load_real_data, monitor_environment, monitor_text,
    replay, run_experiment, run_options, stream_seed, zero_start, Cell, CellResult,
    CertificateOutcome, ExperimentOutput, MonitorOutcome, SummaryRow, SUMMARY_HEADER,
};
pub use svg::{line_chart, Series};

use crate::Result;

/// Writes `bytes` to a sibling temporary file and renames it into place.
pub fn write_atomic(path: &Path, bytes: &[u8]) -> Result<()> {
    let dir = path.parent().filter(|p| !p.as_os_str().is_empty()).unwrap_or(Path::new("."));
    let mut tmp = tempfile::NamedTempFile::new_in(dir)?;
    std::io::Write::write_all(&mut tmp, bytes)?;
    tmp.persist(path).map_err(|e| e.error)?;
    Ok(())
}

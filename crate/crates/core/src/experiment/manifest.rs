use std::fmt::Write as _;
use std::path::Path;

use sha2::{Digest, Sha256};

use super::config::ExperimentConfig;
use super::write_atomic;
use crate::{Error, Result};

const MAGIC: &str = "tvhsgt-manifest 1";

pub fn sha256_hex(bytes: &[u8]) -> String {
    Sha256::digest(bytes).iter().fold(String::with_capacity(64), |mut s, b| {
        let _ = write!(s, "{b:02x}");
        s
    })
}

/// Records the package version, the config hash, the seeds and the hash of
/// every artifact. Contains no timestamps, so reruns reproduce it exactly.
pub fn write_manifest(
    path: &Path,
    cfg: &ExperimentConfig,
    config_text: &str,
    files: &[(String, String)],
) -> Result<()> {
    let mut s = String::new();
    let _ = writeln!(s, "{MAGIC}");
    let _ = writeln!(s, "package {} {}", env!("CARGO_PKG_NAME"), env!("CARGO_PKG_VERSION"));
    let _ = writeln!(s, "config_sha256 {}", sha256_hex(config_text.as_bytes()));
    let seeds: Vec<String> = cfg.run.seeds.iter().map(u64::to_string).collect();
    let _ = writeln!(s, "seeds {}", seeds.join(" "));
    for (name, hash) in files {
        let _ = writeln!(s, "file {hash} {name}");
    }
    write_atomic(path, s.as_bytes())
}

/// `(file name, sha256)` entries of a manifest.
pub fn read_manifest(path: &Path) -> Result<Vec<(String, String)>> {
    let text = std::fs::read_to_string(path)?;
    let bad = |line: usize, message: &str| Error::Ingestion {
        file: path.to_path_buf(),
        line,
        column: 1,
        message: message.into(),
    };
    let mut lines = text.lines().enumerate();
    match lines.next() {
        Some((_, MAGIC)) => {}
        _ => return Err(bad(1, "not a manifest")),
    }
    let mut files = Vec::new();
    for (i, line) in lines {
        if let Some(rest) = line.strip_prefix("file ") {
            let (hash, name) = rest.split_once(' ').ok_or_else(|| bad(i + 1, "expected `file <sha256> <name>`"))?;
            files.push((name.to_string(), hash.to_string()));
        }
    }
    Ok(files)
}

use std::fmt::Write as _;
use std::path::Path;

use super::RoundMetrics;
use crate::Result;

pub const CSV_HEADER: &str =
    "t,regret_inc,regret_avg,consensus2,tracking2,opt2,gradest2,q_t,p_t,loss,accuracy";

/// Encodes rows with Rust's shortest round-trip float formatting, so equal
/// runs produce byte-identical files.
pub fn encode(rows: &[RoundMetrics]) -> String {
    let mut out = String::with_capacity(64 * (rows.len() + 1));
    out.push_str(CSV_HEADER);
    out.push('\n');
    for m in rows {
        writeln!(
            out,
            "{},{},{},{},{},{},{},{},{},{},{}",
            m.t,
            m.regret_inc,
            m.regret_avg,
            m.consensus2,
            m.tracking2,
            m.opt2,
            m.gradest2,
            m.q_t,
            m.p_t,
            m.loss,
            m.accuracy
        )
        .unwrap();
    }
    out
}

pub fn write_metrics_csv(path: &Path, rows: &[RoundMetrics]) -> Result<()> {
    crate::experiment::write_atomic(path, encode(rows).as_bytes())
}

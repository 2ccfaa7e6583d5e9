//! Flat binary snapshot of agent states: the magic bytes `TVHS`, a `u32`
//! format version, then `u64` agent count, dimension and round, followed by
//! `x, y, z, x_prev` of every agent as little-endian `f64`.

use std::path::Path;

use super::AgentState;
use crate::{Error, Result};

const MAGIC: &[u8; 4] = b"TVHS";
const VERSION: u32 = 1;

pub fn write_snapshot(path: &Path, round: usize, states: &[AgentState]) -> Result<()> {
    let d = states.first().map_or(0, |s| s.x.len());
    let mut out = Vec::with_capacity(28 + states.len() * 4 * d * 8);
    out.extend_from_slice(MAGIC);
    out.extend_from_slice(&VERSION.to_le_bytes());
    for v in [states.len() as u64, d as u64, round as u64] {
        out.extend_from_slice(&v.to_le_bytes());
    }
    for s in states {
        for v in [&s.x, &s.y, &s.z, &s.x_prev] {
            if v.len() != d {
                return Err(Error::domain("agent states differ in dimension"));
            }
            v.iter().for_each(|x| out.extend_from_slice(&x.to_le_bytes()));
        }
    }
    crate::experiment::write_atomic(path, &out)
}

/// Returns the round and the agent states.
pub fn read_snapshot(path: &Path) -> Result<(usize, Vec<AgentState>)> {
    let bytes = std::fs::read(path)?;
    let bad = |message: &str| Error::Ingestion {
        file: path.to_path_buf(),
        line: 0,
        column: 0,
        message: message.to_string(),
    };
    if bytes.len() < 32 || &bytes[..4] != MAGIC {
        return Err(bad("not a state snapshot"));
    }
    let version = u32::from_le_bytes(bytes[4..8].try_into().unwrap());
    if version != VERSION {
        return Err(bad(&format!("unsupported snapshot version {version}")));
    }
    let word = |k: usize| u64::from_le_bytes(bytes[8 + 8 * k..16 + 8 * k].try_into().unwrap()) as usize;
    let (n, d, round) = (word(0), word(1), word(2));
    let body = &bytes[32..];
    if n.checked_mul(d)
        .and_then(|v| v.checked_mul(32))
        .is_none_or(|len| len != body.len())
    {
        return Err(bad("snapshot length does not match its header"));
    }
    let mut vals = body
        .chunks_exact(8)
        .map(|c| f64::from_le_bytes(c.try_into().unwrap()));
    let mut take = || -> Vec<f64> { (&mut vals).take(d).collect() };
    let states = (0..n)
        .map(|_| AgentState {
            x: take(),
            y: take(),
            z: take(),
            x_prev: take(),
        })
        .collect();
    Ok((round, states))
}

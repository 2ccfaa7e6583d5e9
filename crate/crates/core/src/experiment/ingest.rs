use std::fmt::Write;
use std::path::Path;

use crate::data::{Sample, Shard};
use crate::{Error, Result};

const IDX_IMAGES: u32 = 0x0000_0803;
const IDX_LABELS: u32 = 0x0000_0801;

fn ingestion(file: &Path, line: usize, column: usize, message: impl Into<String>) -> Error {
    Error::Ingestion {
        file: file.to_path_buf(),
        line,
        column,
        message: message.into(),
    }
}

/// Reads a sparse `label idx:val …` file into dense samples. Labels `±1`
/// map to `{0, 1}` (`0` is accepted for the negative class); indices are
/// one-based. `dim` fixes the feature dimension, otherwise the largest
/// index seen is used.
pub fn parse_libsvm(path: &Path, dim: Option<usize>) -> Result<Shard> {
    let text = std::fs::read_to_string(path)?;
    parse_libsvm_str(&text, path, dim)
}

pub fn parse_libsvm_str(text: &str, file: &Path, dim: Option<usize>) -> Result<Shard> {
    let mut rows: Vec<(f64, Vec<(usize, f64)>)> = Vec::new();
    let mut max_idx = 0;
    for (ln, line) in text.lines().enumerate() {
        let ln = ln + 1;
        let content = line.split('#').next().unwrap_or("");
        let mut tokens = tokens(content);
        let Some((col, label)) = tokens.next() else {
            continue;
        };
        let b = match label {
            "+1" | "1" | "1.0" | "+1.0" => 1.0,
            "-1" | "0" | "-1.0" | "0.0" => 0.0,
            other => return Err(ingestion(file, ln, col, format!("label `{other}` is not ±1"))),
        };
        let mut feats = Vec::new();
        let mut last = 0;
        for (col, tok) in tokens {
            let (idx, val) = tok
                .split_once(':')
                .ok_or_else(|| ingestion(file, ln, col, format!("expected `index:value`, found `{tok}`")))?;
            let idx: usize = idx
                .parse()
                .map_err(|_| ingestion(file, ln, col, format!("bad feature index `{idx}`")))?;
            if idx == 0 {
                return Err(ingestion(file, ln, col, "feature indices start at 1"));
            }
            if idx <= last {
                return Err(ingestion(file, ln, col, format!("index {idx} not increasing")));
            }
            if let Some(d) = dim.filter(|&d| idx > d) {
                return Err(ingestion(file, ln, col, format!("index {idx} exceeds dimension {d}")));
            }
            let vcol = col + idx_len(tok) + 1;
            let val: f64 = val
                .parse()
                .ok()
                .filter(|v: &f64| v.is_finite())
                .ok_or_else(|| ingestion(file, ln, vcol, format!("bad feature value `{val}`")))?;
            last = idx;
            max_idx = max_idx.max(idx);
            feats.push((idx, val));
        }
        rows.push((b, feats));
    }
    let d = dim.unwrap_or(max_idx);
    Ok(rows
        .into_iter()
        .map(|(b, feats)| {
            let mut a = vec![0.0; d];
            for (i, v) in feats {
                a[i - 1] = v;
            }
            Sample { a, b }
        })
        .collect())
}

fn idx_len(tok: &str) -> usize {
    tok.find(':').unwrap_or(tok.len())
}

/// Whitespace-separated tokens with their one-based columns.
fn tokens(line: &str) -> impl Iterator<Item = (usize, &str)> {
    let mut rest = line;
    let mut offset = 0;
    std::iter::from_fn(move || {
        let start = rest.find(|c: char| !c.is_whitespace())?;
        let len = rest[start..].find(char::is_whitespace).unwrap_or(rest.len() - start);
        let tok = &rest[start..start + len];
        let col = offset + start + 1;
        offset += start + len;
        rest = &rest[start + len..];
        Some((col, tok))
    })
}

/// LIBSVM text of binary-labelled samples, listing nonzero features only.
pub fn encode_libsvm(samples: &[Sample]) -> String {
    let mut s = String::new();
    for sample in samples {
        s.push_str(if sample.b > 0.5 { "+1" } else { "-1" });
        for (i, v) in sample.a.iter().enumerate().filter(|(_, v)| **v != 0.0) {
            let _ = write!(s, " {}:{}", i + 1, v);
        }
        s.push('\n');
    }
    s
}

/// Reads an IDX image file (`0x00000803`) and its label file
/// (`0x00000801`); pixels are scaled to `[0, 1]`.
pub fn parse_idx(images: &Path, labels: &Path) -> Result<Shard> {
    let img = std::fs::read(images)?;
    let lab = std::fs::read(labels)?;
    parse_idx_bytes(&img, images, &lab, labels)
}

/// Binary inputs report the byte offset as the column, with line 0.
pub fn parse_idx_bytes(img: &[u8], img_file: &Path, lab: &[u8], lab_file: &Path) -> Result<Shard> {
    let be = |bytes: &[u8], at: usize, file: &Path| -> Result<u32> {
        bytes
            .get(at..at + 4)
            .map(|b| u32::from_be_bytes([b[0], b[1], b[2], b[3]]))
            .ok_or_else(|| ingestion(file, 0, at, "truncated header"))
    };
    let magic = be(img, 0, img_file)?;
    if magic != IDX_IMAGES {
        return Err(ingestion(img_file, 0, 0, format!("magic {magic:#010x}, expected {IDX_IMAGES:#010x}")));
    }
    let magic = be(lab, 0, lab_file)?;
    if magic != IDX_LABELS {
        return Err(ingestion(lab_file, 0, 0, format!("magic {magic:#010x}, expected {IDX_LABELS:#010x}")));
    }
    let count = be(img, 4, img_file)? as usize;
    let rows = be(img, 8, img_file)? as usize;
    let cols = be(img, 12, img_file)? as usize;
    let n_labels = be(lab, 4, lab_file)? as usize;
    if count != n_labels {
        return Err(ingestion(lab_file, 0, 4, format!("{n_labels} labels for {count} images")));
    }
    let d = rows * cols;
    let pixels = img.get(16..16 + count * d).ok_or_else(|| {
        ingestion(img_file, 0, img.len(), format!("truncated: {count} images of {d} pixels need {} bytes", 16 + count * d))
    })?;
    let classes = lab
        .get(8..8 + count)
        .ok_or_else(|| ingestion(lab_file, 0, lab.len(), format!("truncated: {count} labels need {} bytes", 8 + count)))?;
    let mut shard = Vec::with_capacity(count);
    for (k, (px, &c)) in pixels.chunks_exact(d.max(1)).zip(classes).enumerate() {
        if c > 9 {
            return Err(ingestion(lab_file, 0, 8 + k, format!("label {c} outside 0..=9")));
        }
        shard.push(Sample {
            a: px.iter().map(|&p| p as f64 / 255.0).collect(),
            b: c as f64,
        });
    }
    Ok(shard)
}

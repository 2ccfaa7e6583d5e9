//! Line-oriented graph sequence format: a header `n T`, then one `t: j i`
//! line per edge `j → i` of round `t`. Self-loops are implied.

use std::fmt::Write as _;
use std::path::Path;

use super::Digraph;
use crate::{Error, Result};

pub fn write_graph_sequence(path: &Path, graphs: &[Digraph]) -> Result<()> {
    let n = graphs.first().map_or(0, Digraph::n);
    let mut out = format!("{n} {}\n", graphs.len());
    for (t, g) in graphs.iter().enumerate() {
        for (j, i) in g.edges() {
            writeln!(out, "{t}: {j} {i}").unwrap();
        }
    }
    crate::experiment::write_atomic(path, out.as_bytes())
}

pub fn read_graph_sequence(path: &Path) -> Result<Vec<Digraph>> {
    let text = std::fs::read_to_string(path)?;
    parse_graph_sequence(&text, path)
}

pub(crate) fn parse_graph_sequence(text: &str, path: &Path) -> Result<Vec<Digraph>> {
    let err = |line: usize, column: usize, message: String| Error::Ingestion {
        file: path.to_path_buf(),
        line,
        column,
        message,
    };
    let mut lines = text.lines().enumerate().filter(|(_, l)| !l.trim().is_empty());
    let (_, header) = lines.next().ok_or_else(|| err(1, 1, "missing header".into()))?;
    let fields = tokens(header);
    let [(c0, n), (c1, rounds)] = fields[..] else {
        return Err(err(1, 1, "header must be `n T`".into()));
    };
    let n: usize = n.parse().map_err(|_| err(1, c0, format!("bad agent count `{n}`")))?;
    let rounds: usize = rounds
        .parse()
        .map_err(|_| err(1, c1, format!("bad round count `{rounds}`")))?;
    let mut edges = vec![Vec::new(); rounds];
    for (idx, line) in lines {
        let lineno = idx + 1;
        let fields = tokens(line);
        let [(ct, t), (cj, j), (ci, i)] = fields[..] else {
            return Err(err(lineno, 1, "expected `t: j i`".into()));
        };
        let t = t
            .strip_suffix(':')
            .and_then(|s| s.parse::<usize>().ok())
            .ok_or_else(|| err(lineno, ct, format!("bad round label `{t}`")))?;
        let node = |s: &str, col: usize| -> Result<usize> {
            match s.parse::<usize>() {
                Ok(v) if v < n => Ok(v),
                _ => Err(err(lineno, col, format!("bad node `{s}` for n = {n}"))),
            }
        };
        let (j, i) = (node(j, cj)?, node(i, ci)?);
        edges
            .get_mut(t)
            .ok_or_else(|| err(lineno, ct, format!("round {t} beyond declared {rounds}")))?
            .push((j, i));
    }
    edges
        .into_iter()
        .enumerate()
        .map(|(t, e)| {
            Digraph::new(n, e).map_err(|e| err(1, 1, format!("round {t}: {e}")))
        })
        .collect()
}

/// Whitespace-separated tokens with their 1-based column.
fn tokens(line: &str) -> Vec<(usize, &str)> {
    let mut out = Vec::new();
    let mut start = None;
    for (k, ch) in line.char_indices().chain(std::iter::once((line.len(), ' '))) {
        match (ch.is_whitespace(), start) {
            (false, None) => start = Some(k),
            (true, Some(s)) => {
                out.push((s + 1, &line[s..k]));
                start = None;
            }
            _ => {}
        }
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::network::generate_round_graph;

    #[test]
    fn round_trip() {
        let base = Digraph::random(5, 0.5, 1).unwrap();
        let graphs: Vec<_> = (0..7)
            .map(|t| generate_round_graph(&base, 0.5, 3, t).unwrap())
            .collect();
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("g.txt");
        write_graph_sequence(&path, &graphs).unwrap();
        assert_eq!(read_graph_sequence(&path).unwrap(), graphs);
    }

    #[test]
    fn reports_position_of_bad_token() {
        let p = Path::new("x");
        match parse_graph_sequence("2 1\n0: 0 1\n0: 1 9\n", p) {
            Err(Error::Ingestion { line, column, .. }) => assert_eq!((line, column), (3, 6)),
            other => panic!("{other:?}"),
        }
        assert!(parse_graph_sequence("2 1\n0: 0 1\n", p).is_err());
    }
}

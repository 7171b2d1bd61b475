//! Edge-list files: two integer columns per line, whitespace or comma
//! separated, zero-based ids. Blank lines and `#` comments are ignored.

use std::io::{BufRead, Write};
use std::path::Path;

use super::Graph;
use crate::error::GraphError;

/// Raw pairs as they appear in the file. Integral floats such as `12.0` are
/// accepted since several public dumps are written that way.
pub fn parse_edge_pairs(reader: impl BufRead) -> Result<Vec<(i64, i64)>, GraphError> {
    let mut pairs = Vec::new();
    for (i, line) in reader.lines().enumerate() {
        let line = line?;
        let body = line.split('#').next().unwrap_or("").trim();
        if body.is_empty() {
            continue;
        }
        let cols: Vec<&str> = body
            .split(|c: char| c == ',' || c.is_whitespace())
            .filter(|t| !t.is_empty())
            .collect();
        if cols.len() != 2 {
            return Err(GraphError::Parse {
                line: i + 1,
                msg: format!("expected 2 columns, found {}", cols.len()),
            });
        }
        let a = parse_id(cols[0]).ok_or_else(|| bad(i, cols[0]))?;
        let b = parse_id(cols[1]).ok_or_else(|| bad(i, cols[1]))?;
        pairs.push((a, b));
    }
    Ok(pairs)
}

fn parse_id(tok: &str) -> Option<i64> {
    if let Ok(v) = tok.parse::<i64>() {
        return Some(v);
    }
    let f: f64 = tok.parse().ok()?;
    (f.fract() == 0.0 && f.is_finite()).then_some(f as i64)
}

fn bad(i: usize, tok: &str) -> GraphError {
    GraphError::Parse {
        line: i + 1,
        msg: format!("`{tok}` is not an integer node id"),
    }
}

/// Load an edge list over `n` nodes, deduplicating repeated or reversed pairs.
/// Returns the graph and the number of dropped lines.
pub fn read_edge_list(path: impl AsRef<Path>, n: usize) -> Result<(Graph, usize), GraphError> {
    let file = std::fs::File::open(path)?;
    let pairs = parse_edge_pairs(std::io::BufReader::new(file))?;
    let mut ids = Vec::with_capacity(pairs.len());
    for (line, (a, b)) in pairs.into_iter().enumerate() {
        if a < 0 || b < 0 {
            return Err(GraphError::Parse {
                line: line + 1,
                msg: "negative node id".into(),
            });
        }
        ids.push((a as usize, b as usize));
    }
    let (g, dropped) = Graph::from_pairs_dedup(n, ids)?;
    if dropped > 0 {
        log::warn!("dropped {dropped} duplicate, reversed or self-loop edge lines");
    }
    Ok((g, dropped))
}

pub fn write_edge_list(g: &Graph, mut out: impl Write) -> std::io::Result<()> {
    for &(u, v) in g.edges() {
        writeln!(out, "{u} {v}")?;
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn parses_mixed_separators() {
        let text = "0 1\n1,2\n# comment\n\n2\t3.0\n";
        let pairs = parse_edge_pairs(text.as_bytes()).unwrap();
        assert_eq!(pairs, vec![(0, 1), (1, 2), (2, 3)]);
    }

    #[test]
    fn rejects_garbage() {
        assert!(matches!(
            parse_edge_pairs("0 1 2\n".as_bytes()),
            Err(GraphError::Parse { line: 1, .. })
        ));
        assert!(matches!(
            parse_edge_pairs("0 x\n".as_bytes()),
            Err(GraphError::Parse { line: 1, .. })
        ));
    }

    #[test]
    fn round_trip_with_dedup() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("edges.txt");
        std::fs::write(&path, "0 1\n1 0\n1 2\n2 2\n").unwrap();
        let (g, dropped) = read_edge_list(&path, 3).unwrap();
        assert_eq!((g.m(), dropped), (2, 2));
        let mut buf = Vec::new();
        write_edge_list(&g, &mut buf).unwrap();
        std::fs::write(&path, &buf).unwrap();
        let (g2, dropped2) = read_edge_list(&path, 3).unwrap();
        assert_eq!((g2, dropped2), (g, 0));
    }
}

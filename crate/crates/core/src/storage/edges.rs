use std::io::{BufRead, BufReader};
use std::path::Path;

use crate::error::{Error, Result};
use crate::storage::{DataMatrix, Format, Layout};

/// Undirected edge list read from `src \t dst` lines (0-based ids).
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct EdgeList {
    pub n_vertices: usize,
    pub edges: Vec<(usize, usize)>,
}

pub fn load_edge_list(path: impl AsRef<Path>) -> Result<EdgeList> {
    let path = path.as_ref();
    let file = std::fs::File::open(path).map_err(|e| Error::io(path, e))?;
    parse_edge_list(BufReader::new(file), path)
}

pub fn parse_edge_list(reader: impl BufRead, path: &Path) -> Result<EdgeList> {
    let mut edges = Vec::new();
    let mut n_vertices = 0usize;
    for (lineno, line) in reader.lines().enumerate() {
        let lineno = lineno + 1;
        let line = line.map_err(|e| Error::io(path, e))?;
        let t = line.trim();
        if t.is_empty() || t.starts_with('#') {
            continue;
        }
        let mut it = t.split_whitespace();
        let mut id = |name: &str| -> Result<usize> {
            let tok = it
                .next()
                .ok_or_else(|| Error::parse(path, lineno, format!("missing {name}")))?;
            tok.parse()
                .map_err(|_| Error::parse(path, lineno, format!("bad vertex id {tok:?}")))
        };
        let (u, v) = (id("src")?, id("dst")?);
        if it.next().is_some() {
            return Err(Error::parse(path, lineno, "expected exactly two columns"));
        }
        n_vertices = n_vertices.max(u + 1).max(v + 1);
        // self loops carry no (x_u - x_v) term
        if u != v {
            edges.push((u, v));
        }
    }
    if n_vertices == 0 {
        return Err(Error::parse(path, 0, "empty edge list"));
    }
    Ok(EdgeList { n_vertices, edges })
}

impl EdgeList {
    /// Signed incidence matrix: one row per edge with `+1` at the smaller
    /// endpoint and `-1` at the larger, so `(a_e . x)^2 = (x_u - x_v)^2`.
    pub fn incidence_matrix(&self) -> Result<DataMatrix> {
        let mut offsets = Vec::with_capacity(self.edges.len() + 1);
        let mut indices = Vec::with_capacity(2 * self.edges.len());
        let mut values = Vec::with_capacity(2 * self.edges.len());
        offsets.push(0);
        for &(u, v) in &self.edges {
            let (a, b) = if u < v { (u, v) } else { (v, u) };
            indices.extend_from_slice(&[a, b]);
            values.extend_from_slice(&[1.0, -1.0]);
            offsets.push(indices.len());
        }
        let m = DataMatrix::from_csr(self.edges.len(), self.n_vertices, offsets, indices, values)?;
        debug_assert_eq!(m.layout(), Layout::RowMajor);
        debug_assert_eq!(m.format(), Format::Sparse);
        m.with_labels(vec![0.0; self.edges.len()])
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn parses_tsv_and_builds_incidence() {
        let g = parse_edge_list(
            "# snap header\n0\t1\n2\t1\n3\t3\n".as_bytes(),
            Path::new("g"),
        )
        .unwrap();
        assert_eq!(g.n_vertices, 4);
        assert_eq!(g.edges, vec![(0, 1), (2, 1)]);
        let m = g.incidence_matrix().unwrap();
        assert_eq!((m.n_rows(), m.n_cols()), (2, 4));
        assert_eq!(m.get(1, 1), 1.0);
        assert_eq!(m.get(1, 2), -1.0);
    }

    #[test]
    fn malformed_line() {
        let err = parse_edge_list("0\t1\n0 x\n".as_bytes(), Path::new("g")).unwrap_err();
        assert!(matches!(err, Error::Parse { line: 2, .. }));
        assert!(parse_edge_list("1 2 3\n".as_bytes(), Path::new("g")).is_err());
    }
}

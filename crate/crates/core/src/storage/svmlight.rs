use std::io::{BufRead, BufReader};
use std::path::Path;

use crate::error::{Error, Result};
use crate::storage::DataMatrix;

/// Load an svmlight/libsvm file into a sparse row-major matrix.
pub fn load_svmlight(path: impl AsRef<Path>) -> Result<DataMatrix> {
    let path = path.as_ref();
    let file = std::fs::File::open(path).map_err(|e| Error::io(path, e))?;
    parse_svmlight(BufReader::new(file), path)
}

/// Parse svmlight text: one `label idx:val ...` record per line, 1-based
/// strictly ascending indices. `#` starts a comment.
pub fn parse_svmlight(reader: impl BufRead, path: &Path) -> Result<DataMatrix> {
    let mut offsets = vec![0usize];
    let mut indices = Vec::new();
    let mut values = Vec::new();
    let mut labels = Vec::new();
    let mut n_cols = 0usize;

    for (lineno, line) in reader.lines().enumerate() {
        let lineno = lineno + 1;
        let line = line.map_err(|e| Error::io(path, e))?;
        let record = line.split('#').next().unwrap_or("");
        if record.trim().is_empty() {
            if line.trim_start().starts_with('#') {
                continue;
            }
            return Err(Error::parse(path, lineno, "empty line"));
        }
        let mut tokens = record.split_whitespace();
        let label_tok = tokens.next().unwrap();
        let label: f64 = label_tok
            .parse()
            .map_err(|_| Error::parse(path, lineno, format!("bad label {label_tok:?}")))?;
        let mut prev = 0usize;
        for tok in tokens {
            if tok.starts_with("qid:") {
                continue;
            }
            let (idx, val) = tok.split_once(':').ok_or_else(|| {
                Error::parse(path, lineno, format!("expected idx:val, got {tok:?}"))
            })?;
            let idx: usize = idx
                .parse()
                .map_err(|_| Error::parse(path, lineno, format!("bad index {idx:?}")))?;
            let val: f64 = val
                .parse()
                .map_err(|_| Error::parse(path, lineno, format!("bad value {val:?}")))?;
            if idx == 0 {
                return Err(Error::parse(path, lineno, "indices are 1-based"));
            }
            if idx <= prev {
                return Err(Error::parse(
                    path,
                    lineno,
                    format!("index {idx} not ascending after {prev}"),
                ));
            }
            prev = idx;
            n_cols = n_cols.max(idx);
            if val != 0.0 {
                indices.push(idx - 1);
                values.push(val);
            }
        }
        labels.push(label);
        offsets.push(indices.len());
    }
    if labels.is_empty() {
        return Err(Error::parse(path, 0, "empty file"));
    }
    DataMatrix::from_csr(labels.len(), n_cols, offsets, indices, values)?.with_labels(labels)
}

/// Write a matrix as svmlight text (labels default to 0).
pub fn write_svmlight(m: &DataMatrix, mut out: impl std::io::Write) -> std::io::Result<()> {
    let csr = m
        .to_layout(
            crate::storage::Layout::RowMajor,
            crate::storage::Format::Sparse,
        )
        .map_err(std::io::Error::other)?;
    for i in 0..csr.n_rows() {
        write!(out, "{}", csr.label(i))?;
        for (j, v) in csr.row(i).iter() {
            write!(out, " {}:{}", j + 1, v)?;
        }
        writeln!(out)?;
    }
    Ok(())
}

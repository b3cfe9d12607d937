//! Binary matrix cache.
//!
//! ```text
//! "DWMX" | version u8 = 1 | endian u8 (1 = little) | layout u8 | format u8
//! | has_labels u8 | 3 reserved bytes | n_rows u64 | n_cols u64 | nnz u64
//! sparse: offsets (outer + 1) u64 | indices (nnz) u64 | values (nnz) f64
//! dense:  values (n_rows * n_cols) f64 in layout order
//! labels (n_rows) f64 when has_labels
//! ```
//! All integers and floats are little-endian.

use std::io::{Read, Write};
use std::path::Path;

use crate::error::{Error, Result};
use crate::storage::{DataMatrix, Format, Layout};

pub const MAGIC: &[u8; 4] = b"DWMX";
pub const VERSION: u8 = 1;
const LITTLE_ENDIAN: u8 = 1;

fn put_u64(out: &mut Vec<u8>, v: u64) {
    out.extend_from_slice(&v.to_le_bytes());
}

fn put_f64(out: &mut Vec<u8>, v: f64) {
    out.extend_from_slice(&v.to_le_bytes());
}

pub fn encode(m: &DataMatrix) -> Vec<u8> {
    let mut out = Vec::with_capacity(32 + m.nnz() * 16);
    out.extend_from_slice(MAGIC);
    out.push(VERSION);
    out.push(LITTLE_ENDIAN);
    out.push(match m.layout() {
        Layout::RowMajor => 0,
        Layout::ColMajor => 1,
    });
    out.push(match m.format() {
        Format::Dense => 0,
        Format::Sparse => 1,
    });
    out.push(u8::from(m.labels().is_some()));
    out.extend_from_slice(&[0, 0, 0]);
    put_u64(&mut out, m.n_rows() as u64);
    put_u64(&mut out, m.n_cols() as u64);
    put_u64(&mut out, m.nnz() as u64);
    let n_outer = match m.layout() {
        Layout::RowMajor => m.n_rows(),
        Layout::ColMajor => m.n_cols(),
    };
    match m.format() {
        Format::Sparse => {
            let mut offset = 0u64;
            put_u64(&mut out, 0);
            let mut idx = Vec::with_capacity(m.nnz());
            let mut vals = Vec::with_capacity(m.nnz());
            for k in 0..n_outer {
                for (i, v) in m.lane(k).iter() {
                    idx.push(i as u64);
                    vals.push(v);
                }
                offset = idx.len() as u64;
                put_u64(&mut out, offset);
            }
            debug_assert_eq!(offset as usize, m.nnz());
            idx.into_iter().for_each(|i| put_u64(&mut out, i));
            vals.into_iter().for_each(|v| put_f64(&mut out, v));
        }
        Format::Dense => {
            for k in 0..n_outer {
                if let crate::storage::Lane::Dense(vals) = m.lane(k) {
                    vals.iter().for_each(|&v| put_f64(&mut out, v));
                }
            }
        }
    }
    if let Some(labels) = m.labels() {
        labels.iter().for_each(|&v| put_f64(&mut out, v));
    }
    out
}

struct Cursor<'a> {
    buf: &'a [u8],
    pos: usize,
    path: &'a Path,
}

impl Cursor<'_> {
    fn take(&mut self, n: usize) -> Result<&[u8]> {
        if self.pos + n > self.buf.len() {
            return Err(Error::parse(self.path, 0, "truncated matrix cache"));
        }
        let s = &self.buf[self.pos..self.pos + n];
        self.pos += n;
        Ok(s)
    }

    fn u8(&mut self) -> Result<u8> {
        Ok(self.take(1)?[0])
    }

    fn u64(&mut self) -> Result<u64> {
        Ok(u64::from_le_bytes(self.take(8)?.try_into().unwrap()))
    }

    fn usize(&mut self) -> Result<usize> {
        usize::try_from(self.u64()?)
            .map_err(|_| Error::parse(self.path, 0, "size does not fit in usize"))
    }

    fn f64s(&mut self, n: usize) -> Result<Vec<f64>> {
        let bytes = self.take(
            n.checked_mul(8)
                .ok_or_else(|| Error::parse(self.path, 0, "overflow"))?,
        )?;
        Ok(bytes
            .chunks_exact(8)
            .map(|c| f64::from_le_bytes(c.try_into().unwrap()))
            .collect())
    }

    fn usizes(&mut self, n: usize) -> Result<Vec<usize>> {
        (0..n).map(|_| self.usize()).collect()
    }
}

pub fn decode(buf: &[u8], path: &Path) -> Result<DataMatrix> {
    let mut c = Cursor { buf, pos: 0, path };
    if c.take(4)? != MAGIC {
        return Err(Error::parse(path, 0, "bad magic, not a matrix cache"));
    }
    let version = c.u8()?;
    if version != VERSION {
        return Err(Error::parse(
            path,
            0,
            format!("unsupported cache version {version}"),
        ));
    }
    if c.u8()? != LITTLE_ENDIAN {
        return Err(Error::parse(
            path,
            0,
            "only little-endian caches are supported",
        ));
    }
    let layout = match c.u8()? {
        0 => Layout::RowMajor,
        1 => Layout::ColMajor,
        t => return Err(Error::parse(path, 0, format!("bad layout tag {t}"))),
    };
    let format = match c.u8()? {
        0 => Format::Dense,
        1 => Format::Sparse,
        t => return Err(Error::parse(path, 0, format!("bad format tag {t}"))),
    };
    let has_labels = c.u8()? != 0;
    c.take(3)?;
    let n_rows = c.usize()?;
    let n_cols = c.usize()?;
    let nnz = c.usize()?;
    let n_outer = match layout {
        Layout::RowMajor => n_rows,
        Layout::ColMajor => n_cols,
    };
    let m = match format {
        Format::Sparse => {
            let offsets = c.usizes(n_outer + 1)?;
            let indices = c.usizes(nnz)?;
            let values = c.f64s(nnz)?;
            match layout {
                Layout::RowMajor => DataMatrix::from_csr(n_rows, n_cols, offsets, indices, values)?,
                Layout::ColMajor => DataMatrix::from_csc(n_rows, n_cols, offsets, indices, values)?,
            }
        }
        Format::Dense => {
            let values = c.f64s(n_rows.saturating_mul(n_cols))?;
            let row_major = DataMatrix::from_dense(
                n_rows,
                n_cols,
                match layout {
                    Layout::RowMajor => values,
                    Layout::ColMajor => {
                        let mut t = vec![0.0; values.len()];
                        for j in 0..n_cols {
                            for i in 0..n_rows {
                                t[i * n_cols + j] = values[j * n_rows + i];
                            }
                        }
                        t
                    }
                },
            )?;
            row_major.to_layout(layout, Format::Dense)?
        }
    };
    if m.nnz() != nnz {
        return Err(Error::parse(
            path,
            0,
            "header non-zero count disagrees with body",
        ));
    }
    let m = if has_labels {
        let labels = c.f64s(n_rows)?;
        m.with_labels(labels)?
    } else {
        m
    };
    if c.pos != buf.len() {
        return Err(Error::parse(path, 0, "trailing bytes after matrix cache"));
    }
    Ok(m)
}

pub fn write_cache(m: &DataMatrix, path: impl AsRef<Path>) -> Result<()> {
    let path = path.as_ref();
    let mut f = std::fs::File::create(path).map_err(|e| Error::io(path, e))?;
    f.write_all(&encode(m)).map_err(|e| Error::io(path, e))
}

pub fn read_cache(path: impl AsRef<Path>) -> Result<DataMatrix> {
    let path = path.as_ref();
    let mut buf = Vec::new();
    std::fs::File::open(path)
        .and_then(|mut f| f.read_to_end(&mut buf))
        .map_err(|e| Error::io(path, e))?;
    decode(&buf, path)
}

pub fn is_cache(bytes: &[u8]) -> bool {
    bytes.starts_with(MAGIC)
}

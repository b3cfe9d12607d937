use rand::Rng as _;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::rng::SeedStream;

/// Default limit on the number of elements a dense representation may hold.
pub const DEFAULT_DENSE_CAP: usize = 1 << 28;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Layout {
    RowMajor,
    ColMajor,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Format {
    Dense,
    Sparse,
}

#[derive(Debug, Clone, PartialEq)]
enum Values {
    /// `n_outer * n_inner` values in layout order.
    Dense(Vec<f64>),
    /// Compressed along the major axis (CSR for `RowMajor`, CSC for `ColMajor`).
    Sparse {
        offsets: Vec<usize>,
        indices: Vec<usize>,
        values: Vec<f64>,
    },
}

/// Immutable example matrix `A` (N x d) with optional per-row labels.
#[derive(Debug, Clone, PartialEq)]
pub struct DataMatrix {
    n_rows: usize,
    n_cols: usize,
    layout: Layout,
    values: Values,
    row_nnz: Vec<usize>,
    labels: Option<Vec<f64>>,
}

/// A borrowed row or column.
#[derive(Debug, Clone, Copy)]
pub enum Lane<'a> {
    Sparse {
        indices: &'a [usize],
        values: &'a [f64],
    },
    Dense(&'a [f64]),
}

pub struct LaneIter<'a> {
    lane: Lane<'a>,
    pos: usize,
}

impl Iterator for LaneIter<'_> {
    type Item = (usize, f64);

    #[inline]
    fn next(&mut self) -> Option<(usize, f64)> {
        match self.lane {
            Lane::Sparse { indices, values } => {
                let p = self.pos;
                if p < indices.len() {
                    self.pos += 1;
                    Some((indices[p], values[p]))
                } else {
                    None
                }
            }
            Lane::Dense(vals) => {
                while self.pos < vals.len() {
                    let p = self.pos;
                    self.pos += 1;
                    if vals[p] != 0.0 {
                        return Some((p, vals[p]));
                    }
                }
                None
            }
        }
    }
}

impl<'a> Lane<'a> {
    /// Iterate over the non-zero entries as `(index, value)`.
    #[inline]
    pub fn iter(&self) -> LaneIter<'a> {
        LaneIter {
            lane: *self,
            pos: 0,
        }
    }

    /// Value at inner index `k` (zero when not stored).
    pub fn get(&self, k: usize) -> f64 {
        match self {
            Lane::Sparse { indices, values } => match indices.binary_search(&k) {
                Ok(p) => values[p],
                Err(_) => 0.0,
            },
            Lane::Dense(vals) => vals.get(k).copied().unwrap_or(0.0),
        }
    }

    /// Number of stored entries read when scanning this lane.
    pub fn stored_len(&self) -> usize {
        match self {
            Lane::Sparse { indices, .. } => indices.len(),
            Lane::Dense(vals) => vals.len(),
        }
    }

    #[inline]
    pub fn dot_with(&self, mut x: impl FnMut(usize) -> f64) -> f64 {
        match self {
            Lane::Sparse { indices, values } => indices
                .iter()
                .zip(values.iter())
                .map(|(&k, &v)| v * x(k))
                .sum(),
            Lane::Dense(vals) => vals
                .iter()
                .enumerate()
                .map(|(k, &v)| if v != 0.0 { v * x(k) } else { 0.0 })
                .sum(),
        }
    }
}

fn check_sparse(
    n_outer: usize,
    n_inner: usize,
    offsets: &[usize],
    indices: &[usize],
    values: &[f64],
) -> Result<()> {
    if offsets.len() != n_outer + 1 || offsets[0] != 0 {
        return Err(Error::InvalidArgument(format!(
            "offsets must have length {} and start at 0",
            n_outer + 1
        )));
    }
    if indices.len() != values.len() || *offsets.last().unwrap() != indices.len() {
        return Err(Error::InvalidArgument(
            "offsets, indices and values disagree on the non-zero count".into(),
        ));
    }
    for k in 0..n_outer {
        let (s, e) = (offsets[k], offsets[k + 1]);
        if s > e {
            return Err(Error::InvalidArgument(
                "offsets must be non-decreasing".into(),
            ));
        }
        let lane = &indices[s..e];
        if lane.windows(2).any(|w| w[0] >= w[1]) {
            return Err(Error::InvalidArgument(format!(
                "indices of lane {k} are not strictly increasing"
            )));
        }
        if lane.last().is_some_and(|&i| i >= n_inner) {
            return Err(Error::InvalidArgument(format!(
                "index out of range in lane {k}"
            )));
        }
    }
    Ok(())
}

impl DataMatrix {
    /// Dense row-major matrix from `n_rows * n_cols` values.
    pub fn from_dense(n_rows: usize, n_cols: usize, data: Vec<f64>) -> Result<Self> {
        if data.len() != n_rows * n_cols {
            return Err(Error::DimensionMismatch {
                expected: n_rows * n_cols,
                got: data.len(),
            });
        }
        let row_nnz = (0..n_rows)
            .map(|i| {
                data[i * n_cols..(i + 1) * n_cols]
                    .iter()
                    .filter(|v| **v != 0.0)
                    .count()
            })
            .collect();
        Ok(DataMatrix {
            n_rows,
            n_cols,
            layout: Layout::RowMajor,
            values: Values::Dense(data),
            row_nnz,
            labels: None,
        })
    }

    pub fn from_rows(rows: &[Vec<f64>]) -> Result<Self> {
        let n_cols = rows.first().map_or(0, |r| r.len());
        if let Some(bad) = rows.iter().find(|r| r.len() != n_cols) {
            return Err(Error::DimensionMismatch {
                expected: n_cols,
                got: bad.len(),
            });
        }
        Self::from_dense(rows.len(), n_cols, rows.concat())
    }

    /// Sparse row-major (CSR) matrix. Explicit zeros are dropped.
    pub fn from_csr(
        n_rows: usize,
        n_cols: usize,
        offsets: Vec<usize>,
        indices: Vec<usize>,
        values: Vec<f64>,
    ) -> Result<Self> {
        Self::from_compressed(Layout::RowMajor, n_rows, n_cols, offsets, indices, values)
    }

    /// Sparse column-major (CSC) matrix. Explicit zeros are dropped.
    pub fn from_csc(
        n_rows: usize,
        n_cols: usize,
        offsets: Vec<usize>,
        indices: Vec<usize>,
        values: Vec<f64>,
    ) -> Result<Self> {
        Self::from_compressed(Layout::ColMajor, n_rows, n_cols, offsets, indices, values)
    }

    fn from_compressed(
        layout: Layout,
        n_rows: usize,
        n_cols: usize,
        offsets: Vec<usize>,
        indices: Vec<usize>,
        values: Vec<f64>,
    ) -> Result<Self> {
        let (n_outer, n_inner) = match layout {
            Layout::RowMajor => (n_rows, n_cols),
            Layout::ColMajor => (n_cols, n_rows),
        };
        check_sparse(n_outer, n_inner, &offsets, &indices, &values)?;
        let (offsets, indices, values) = if values.contains(&0.0) {
            let mut o = Vec::with_capacity(offsets.len());
            let mut ix = Vec::with_capacity(indices.len());
            let mut vs = Vec::with_capacity(values.len());
            o.push(0);
            for k in 0..n_outer {
                for p in offsets[k]..offsets[k + 1] {
                    if values[p] != 0.0 {
                        ix.push(indices[p]);
                        vs.push(values[p]);
                    }
                }
                o.push(ix.len());
            }
            (o, ix, vs)
        } else {
            (offsets, indices, values)
        };
        let mut row_nnz = vec![0usize; n_rows];
        match layout {
            Layout::RowMajor => {
                for (i, n) in row_nnz.iter_mut().enumerate() {
                    *n = offsets[i + 1] - offsets[i];
                }
            }
            Layout::ColMajor => {
                for &i in &indices {
                    row_nnz[i] += 1;
                }
            }
        }
        Ok(DataMatrix {
            n_rows,
            n_cols,
            layout,
            values: Values::Sparse {
                offsets,
                indices,
                values,
            },
            row_nnz,
            labels: None,
        })
    }

    /// Build from `(row, col, value)` triplets. Duplicate coordinates are summed.
    pub fn from_triplets(
        n_rows: usize,
        n_cols: usize,
        triplets: &[(usize, usize, f64)],
        layout: Layout,
        format: Format,
    ) -> Result<Self> {
        if let Some(&(i, j, _)) = triplets.iter().find(|t| t.0 >= n_rows || t.1 >= n_cols) {
            return Err(Error::InvalidArgument(format!(
                "triplet ({i}, {j}) outside {n_rows}x{n_cols}"
            )));
        }
        let mut sorted: Vec<(usize, usize, f64)> = triplets.to_vec();
        sorted.sort_by_key(|&(i, j, _)| (i, j));
        let mut offsets = vec![0usize; n_rows + 1];
        let mut indices = Vec::with_capacity(sorted.len());
        let mut values: Vec<f64> = Vec::with_capacity(sorted.len());
        let mut last: Option<(usize, usize)> = None;
        for &(i, j, v) in &sorted {
            if last == Some((i, j)) {
                *values.last_mut().unwrap() += v;
                continue;
            }
            last = Some((i, j));
            offsets[i + 1] += 1;
            indices.push(j);
            values.push(v);
        }
        for i in 0..n_rows {
            offsets[i + 1] += offsets[i];
        }
        let csr = Self::from_csr(n_rows, n_cols, offsets, indices, values)?;
        csr.to_layout(layout, format)
    }

    pub fn with_labels(mut self, labels: Vec<f64>) -> Result<Self> {
        if labels.len() != self.n_rows {
            return Err(Error::DimensionMismatch {
                expected: self.n_rows,
                got: labels.len(),
            });
        }
        self.labels = Some(labels);
        Ok(self)
    }

    pub fn without_labels(mut self) -> Self {
        self.labels = None;
        self
    }

    pub fn n_rows(&self) -> usize {
        self.n_rows
    }

    pub fn n_cols(&self) -> usize {
        self.n_cols
    }

    pub fn layout(&self) -> Layout {
        self.layout
    }

    pub fn format(&self) -> Format {
        match self.values {
            Values::Dense(_) => Format::Dense,
            Values::Sparse { .. } => Format::Sparse,
        }
    }

    pub fn row_nnz(&self) -> &[usize] {
        &self.row_nnz
    }

    pub fn labels(&self) -> Option<&[f64]> {
        self.labels.as_deref()
    }

    /// Label of row `i`, zero when the matrix carries no labels.
    #[inline]
    pub fn label(&self, i: usize) -> f64 {
        self.labels.as_ref().map_or(0.0, |l| l[i])
    }

    pub fn nnz(&self) -> usize {
        self.row_nnz.iter().sum()
    }

    fn n_outer(&self) -> usize {
        match self.layout {
            Layout::RowMajor => self.n_rows,
            Layout::ColMajor => self.n_cols,
        }
    }

    fn n_inner(&self) -> usize {
        match self.layout {
            Layout::RowMajor => self.n_cols,
            Layout::ColMajor => self.n_rows,
        }
    }

    /// Lane `k` along the storage's major axis.
    #[inline]
    pub fn lane(&self, k: usize) -> Lane<'_> {
        match &self.values {
            Values::Dense(data) => {
                let w = self.n_inner();
                Lane::Dense(&data[k * w..(k + 1) * w])
            }
            Values::Sparse {
                offsets,
                indices,
                values,
            } => {
                let (s, e) = (offsets[k], offsets[k + 1]);
                Lane::Sparse {
                    indices: &indices[s..e],
                    values: &values[s..e],
                }
            }
        }
    }

    /// Row `i`. Panics unless the layout is `RowMajor`.
    #[inline]
    pub fn row(&self, i: usize) -> Lane<'_> {
        assert_eq!(
            self.layout,
            Layout::RowMajor,
            "row access on column-major storage"
        );
        self.lane(i)
    }

    /// Column `j`. Panics unless the layout is `ColMajor`.
    #[inline]
    pub fn col(&self, j: usize) -> Lane<'_> {
        assert_eq!(
            self.layout,
            Layout::ColMajor,
            "column access on row-major storage"
        );
        self.lane(j)
    }

    /// Entry `(i, j)` regardless of representation.
    pub fn get(&self, i: usize, j: usize) -> f64 {
        match self.layout {
            Layout::RowMajor => self.lane(i).get(j),
            Layout::ColMajor => self.lane(j).get(i),
        }
    }

    /// Non-zero entries as `(row, col, value)` in storage order.
    pub fn triplets(&self) -> Vec<(usize, usize, f64)> {
        let mut out = Vec::with_capacity(self.nnz());
        for k in 0..self.n_outer() {
            for (inner, v) in self.lane(k).iter() {
                out.push(match self.layout {
                    Layout::RowMajor => (k, inner, v),
                    Layout::ColMajor => (inner, k, v),
                });
            }
        }
        out
    }

    /// `A x`.
    pub fn mul_vec(&self, x: &[f64]) -> Result<Vec<f64>> {
        if x.len() != self.n_cols {
            return Err(Error::DimensionMismatch {
                expected: self.n_cols,
                got: x.len(),
            });
        }
        Ok(match self.layout {
            Layout::RowMajor => (0..self.n_rows)
                .map(|i| self.lane(i).dot_with(|j| x[j]))
                .collect(),
            Layout::ColMajor => {
                let mut z = vec![0.0; self.n_rows];
                for (j, &xj) in x.iter().enumerate() {
                    if xj != 0.0 {
                        for (i, v) in self.lane(j).iter() {
                            z[i] += v * xj;
                        }
                    }
                }
                z
            }
        })
    }

    /// `A^T y`.
    pub fn mul_t_vec(&self, y: &[f64]) -> Result<Vec<f64>> {
        if y.len() != self.n_rows {
            return Err(Error::DimensionMismatch {
                expected: self.n_rows,
                got: y.len(),
            });
        }
        Ok(match self.layout {
            Layout::ColMajor => (0..self.n_cols)
                .map(|j| self.lane(j).dot_with(|i| y[i]))
                .collect(),
            Layout::RowMajor => {
                let mut g = vec![0.0; self.n_cols];
                for (i, &yi) in y.iter().enumerate() {
                    if yi != 0.0 {
                        for (j, v) in self.lane(i).iter() {
                            g[j] += v * yi;
                        }
                    }
                }
                g
            }
        })
    }

    /// Convert with the default dense memory cap.
    pub fn to_layout(&self, layout: Layout, format: Format) -> Result<DataMatrix> {
        self.to_layout_capped(layout, format, DEFAULT_DENSE_CAP)
    }

    /// Numerically identical copy in the requested layout and format.
    pub fn to_layout_capped(
        &self,
        layout: Layout,
        format: Format,
        dense_cap: usize,
    ) -> Result<DataMatrix> {
        if layout == self.layout && format == self.format() {
            return Ok(self.clone());
        }
        let (n_outer, n_inner) = match layout {
            Layout::RowMajor => (self.n_rows, self.n_cols),
            Layout::ColMajor => (self.n_cols, self.n_rows),
        };
        let values = match format {
            Format::Dense => {
                let needed = self.n_rows.saturating_mul(self.n_cols);
                if needed > dense_cap {
                    return Err(Error::MemoryCap {
                        what: "dense matrix",
                        needed,
                        cap: dense_cap,
                    });
                }
                let mut data = vec![0.0; needed];
                for (i, j, v) in self.triplets() {
                    let (o, inn) = match layout {
                        Layout::RowMajor => (i, j),
                        Layout::ColMajor => (j, i),
                    };
                    data[o * n_inner + inn] = v;
                }
                Values::Dense(data)
            }
            Format::Sparse => {
                let trip = self.triplets();
                let mut offsets = vec![0usize; n_outer + 1];
                for &(i, j, _) in &trip {
                    let o = if layout == Layout::RowMajor { i } else { j };
                    offsets[o + 1] += 1;
                }
                for k in 0..n_outer {
                    offsets[k + 1] += offsets[k];
                }
                let mut cursor = offsets.clone();
                let mut indices = vec![0usize; trip.len()];
                let mut values = vec![0.0; trip.len()];
                // triplets come out sorted by the source major axis; a stable
                // counting sort keeps the inner indices increasing in the target
                let mut order: Vec<usize> = (0..trip.len()).collect();
                if layout != self.layout {
                    order.sort_by_key(|&p| {
                        let (i, j, _) = trip[p];
                        if layout == Layout::RowMajor {
                            (i, j)
                        } else {
                            (j, i)
                        }
                    });
                }
                for p in order {
                    let (i, j, v) = trip[p];
                    let (o, inn) = if layout == Layout::RowMajor {
                        (i, j)
                    } else {
                        (j, i)
                    };
                    let slot = cursor[o];
                    cursor[o] += 1;
                    indices[slot] = inn;
                    values[slot] = v;
                }
                Values::Sparse {
                    offsets,
                    indices,
                    values,
                }
            }
        };
        Ok(DataMatrix {
            n_rows: self.n_rows,
            n_cols: self.n_cols,
            layout,
            values,
            row_nnz: self.row_nnz.clone(),
            labels: self.labels.clone(),
        })
    }

    pub fn stats(&self) -> MatrixStats {
        MatrixStats::from_row_nnz(self.n_rows, self.n_cols, &self.row_nnz)
    }

    /// Keep each non-zero independently with probability `keep_fraction`.
    pub fn subsample_rows(&self, keep_fraction: f64, seed: u64) -> Result<DataMatrix> {
        if !(keep_fraction > 0.0 && keep_fraction <= 1.0) {
            return Err(Error::InvalidArgument(format!(
                "keep_fraction {keep_fraction} outside (0, 1]"
            )));
        }
        if self.format() != Format::Sparse {
            return Err(Error::InvalidArgument(
                "subsample_rows needs a sparse matrix".into(),
            ));
        }
        if keep_fraction == 1.0 {
            return Ok(self.clone());
        }
        let csr = self.to_layout(Layout::RowMajor, Format::Sparse)?;
        let mut rng = SeedStream::new(seed).rng("data", &[0x5ab5]);
        let mut offsets = Vec::with_capacity(self.n_rows + 1);
        let mut indices = Vec::new();
        let mut values = Vec::new();
        offsets.push(0);
        for i in 0..self.n_rows {
            for (j, v) in csr.row(i).iter() {
                if rng.random::<f64>() < keep_fraction {
                    indices.push(j);
                    values.push(v);
                }
            }
            offsets.push(indices.len());
        }
        let mut out = Self::from_csr(self.n_rows, self.n_cols, offsets, indices, values)?;
        out.labels = self.labels.clone();
        out.to_layout(self.layout, Format::Sparse)
    }
}

/// The column-to-row index: for each column `j` the sorted rows `S(j)` with `a_ij != 0`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct CtrIndex {
    offsets: Vec<usize>,
    rows: Vec<usize>,
}

impl CtrIndex {
    pub fn build(m: &DataMatrix) -> CtrIndex {
        let d = m.n_cols();
        let mut offsets = vec![0usize; d + 1];
        let trip = m.triplets();
        for &(_, j, _) in &trip {
            offsets[j + 1] += 1;
        }
        for j in 0..d {
            offsets[j + 1] += offsets[j];
        }
        let mut cursor = offsets.clone();
        let mut rows = vec![0usize; trip.len()];
        let mut order: Vec<(usize, usize)> = trip.iter().map(|&(i, j, _)| (j, i)).collect();
        if m.layout() == Layout::RowMajor {
            order.sort_unstable();
        }
        for (j, i) in order {
            rows[cursor[j]] = i;
            cursor[j] += 1;
        }
        CtrIndex { offsets, rows }
    }

    #[inline]
    pub fn rows_of(&self, j: usize) -> &[usize] {
        &self.rows[self.offsets[j]..self.offsets[j + 1]]
    }

    pub fn n_cols(&self) -> usize {
        self.offsets.len() - 1
    }

    pub fn total(&self) -> usize {
        self.rows.len()
    }
}

/// Sparsity statistics consumed by the cost model.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MatrixStats {
    pub n: usize,
    pub d: usize,
    pub nnz: usize,
    pub sum_ni: u64,
    pub sum_ni_sq: u64,
    pub density: f64,
}

impl MatrixStats {
    pub fn from_row_nnz(n: usize, d: usize, row_nnz: &[usize]) -> MatrixStats {
        let sum_ni: u64 = row_nnz.iter().map(|&k| k as u64).sum();
        let sum_ni_sq: u64 = row_nnz.iter().map(|&k| (k as u64) * (k as u64)).sum();
        let cells = (n as f64) * (d as f64);
        MatrixStats {
            n,
            d,
            nnz: sum_ni as usize,
            sum_ni,
            sum_ni_sq,
            density: if cells > 0.0 {
                sum_ni as f64 / cells
            } else {
                0.0
            },
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn eye2() -> DataMatrix {
        DataMatrix::from_rows(&[vec![1.0, 0.0], vec![0.0, 1.0]]).unwrap()
    }

    #[test]
    fn round_trip_dense_csc_csr_dense() {
        let m = eye2();
        let back = m
            .to_layout(Layout::ColMajor, Format::Sparse)
            .unwrap()
            .to_layout(Layout::RowMajor, Format::Sparse)
            .unwrap()
            .to_layout(Layout::RowMajor, Format::Dense)
            .unwrap();
        assert_eq!(back, m);
    }

    #[test]
    fn csr_to_csc_columns() {
        let m =
            DataMatrix::from_csr(2, 2, vec![0, 2, 3], vec![0, 1, 1], vec![1.0, 2.0, 3.0]).unwrap();
        let c = m.to_layout(Layout::ColMajor, Format::Sparse).unwrap();
        let col0: Vec<_> = c.col(0).iter().collect();
        let col1: Vec<_> = c.col(1).iter().collect();
        assert_eq!(col0, vec![(0, 1.0)]);
        assert_eq!(col1, vec![(0, 2.0), (1, 3.0)]);
    }

    #[test]
    fn identity_conversion_is_equal() {
        let m = eye2();
        assert_eq!(m.to_layout(m.layout(), m.format()).unwrap(), m);
    }

    #[test]
    fn dense_over_cap_is_rejected() {
        let m = DataMatrix::from_csr(1000, 1000, vec![0; 1001], vec![], vec![]).unwrap();
        let err = m
            .to_layout_capped(Layout::RowMajor, Format::Dense, 10_000)
            .unwrap_err();
        assert!(matches!(err, Error::MemoryCap { .. }));
    }

    #[test]
    fn invalid_csr_rejected() {
        assert!(DataMatrix::from_csr(1, 3, vec![0, 2], vec![2, 1], vec![1.0, 1.0]).is_err());
        assert!(DataMatrix::from_csr(1, 3, vec![0, 1], vec![3], vec![1.0]).is_err());
        assert!(DataMatrix::from_csr(1, 3, vec![0, 2], vec![1, 1], vec![1.0, 1.0]).is_err());
    }

    #[test]
    fn explicit_zeros_are_dropped() {
        let m = DataMatrix::from_csr(1, 3, vec![0, 2], vec![0, 2], vec![0.0, 5.0]).unwrap();
        assert_eq!(m.nnz(), 1);
        assert_eq!(m.get(0, 2), 5.0);
    }

    #[test]
    fn ctr_index_examples() {
        let s = CtrIndex::build(&eye2());
        assert_eq!(s.rows_of(0), &[0]);
        assert_eq!(s.rows_of(1), &[1]);
        let m = DataMatrix::from_rows(&[vec![1.0, 2.0], vec![0.0, 3.0]]).unwrap();
        let s = CtrIndex::build(&m);
        assert_eq!(s.rows_of(0), &[0]);
        assert_eq!(s.rows_of(1), &[0, 1]);
        let z = DataMatrix::from_rows(&[vec![0.0; 3], vec![0.0; 3]]).unwrap();
        let s = CtrIndex::build(&z);
        assert!((0..3).all(|j| s.rows_of(j).is_empty()));
        assert_eq!(s.total(), 0);
    }

    #[test]
    fn stats_examples() {
        let s = eye2().stats();
        assert_eq!((s.sum_ni, s.sum_ni_sq), (2, 2));
        let ones = DataMatrix::from_rows(&[vec![1.0, 1.0], vec![1.0, 1.0]]).unwrap();
        let s = ones.stats();
        assert_eq!((s.sum_ni, s.sum_ni_sq), (4, 8));
        assert_eq!(s.density, 1.0);
        let k = 7;
        let row = DataMatrix::from_rows(&[vec![2.0; k]]).unwrap().stats();
        assert_eq!((row.sum_ni, row.sum_ni_sq), (k as u64, (k * k) as u64));
    }

    #[test]
    fn subsample_keep_all_and_determinism() {
        let m = DataMatrix::from_rows(&[vec![1.0, 2.0, 3.0], vec![4.0, 0.0, 6.0]])
            .unwrap()
            .to_layout(Layout::RowMajor, Format::Sparse)
            .unwrap()
            .with_labels(vec![1.0, -1.0])
            .unwrap();
        assert_eq!(m.subsample_rows(1.0, 3).unwrap(), m);
        let a = m.subsample_rows(0.5, 3).unwrap();
        let b = m.subsample_rows(0.5, 3).unwrap();
        assert_eq!(a, b);
        assert_eq!(a.labels(), m.labels());
        assert_eq!((a.n_rows(), a.n_cols()), (2, 3));
        assert!(m.subsample_rows(0.0, 1).is_err());
        assert!(m.subsample_rows(1.5, 1).is_err());
    }

    #[test]
    fn products_agree_across_layouts() {
        let m = DataMatrix::from_rows(&[vec![1.0, 2.0, 0.0], vec![0.0, 3.0, -1.0]]).unwrap();
        let c = m.to_layout(Layout::ColMajor, Format::Sparse).unwrap();
        let x = [1.0, -1.0, 2.0];
        assert_eq!(m.mul_vec(&x).unwrap(), c.mul_vec(&x).unwrap());
        let y = [0.5, 2.0];
        assert_eq!(m.mul_t_vec(&y).unwrap(), c.mul_t_vec(&y).unwrap());
        assert_eq!(m.mul_vec(&x).unwrap(), vec![-1.0, -5.0]);
    }
}

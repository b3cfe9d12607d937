//! Access kernels: `f_row`, `f_col` and `f_ctr`.
//!
//! All kernels write through a [`SharedVec`] and never lock; they may run
//! concurrently against the same replica.

use crate::error::{Error, Result};
use crate::models::{ModelSpec, TaskKind, UpdateSparsity};
use crate::shared::SharedVec;
use crate::storage::{DataMatrix, Lane, Layout};

/// Derivative of the per-row loss with respect to the margin `z = <x, a_i>`.
#[inline]
pub(crate) fn dloss(kind: TaskKind, z: f64, b: f64) -> f64 {
    match kind {
        TaskKind::Svm => {
            if b * z < 1.0 {
                -b
            } else {
                0.0
            }
        }
        TaskKind::Lr => {
            let t = b * z;
            if t > 0.0 {
                let e = (-t).exp();
                -b * e / (1.0 + e)
            } else {
                -b / (1.0 + t.exp())
            }
        }
        TaskKind::Ls => 2.0 * (z - b),
        TaskKind::Qp => z - b,
        TaskKind::Lp => {
            let r = z - b;
            if r > 0.0 {
                1.0
            } else if r < 0.0 {
                -1.0
            } else {
                0.0
            }
        }
    }
}

/// Per-row loss at margin `z`.
#[inline]
pub(crate) fn row_loss(kind: TaskKind, z: f64, b: f64) -> f64 {
    match kind {
        TaskKind::Svm => (1.0 - b * z).max(0.0),
        TaskKind::Lr => {
            let t = -b * z;
            if t > 0.0 {
                t + (-t).exp().ln_1p()
            } else {
                t.exp().ln_1p()
            }
        }
        TaskKind::Ls => (z - b) * (z - b),
        TaskKind::Qp => 0.5 * (z - b) * (z - b),
        TaskKind::Lp => (z - b).abs(),
    }
}

/// Curvature of the quadratic per-row losses (`c` in `c/2 * r^2`).
fn quadratic_scale(kind: TaskKind) -> Option<f64> {
    match kind {
        TaskKind::Ls => Some(2.0),
        TaskKind::Qp => Some(1.0),
        _ => None,
    }
}

/// One SGD step on row `a_i` with label `b_i`.
///
/// `reg_per_row` is the share of the `lambda/2 ||x||^2` term charged to
/// this row (`lambda / N`); it only applies to dense-update specs.
#[inline]
pub(crate) fn row_step(
    spec: &ModelSpec,
    x: &SharedVec,
    row: Lane<'_>,
    label: f64,
    step: f64,
    reg_per_row: f64,
    weight: f64,
) {
    let z = row.dot_with(|j| x.get(j));
    let g = weight * dloss(spec.kind(), z, label);
    if spec.update_sparsity() == UpdateSparsity::DenseUpdate && reg_per_row > 0.0 {
        let shrink = 1.0 - step * reg_per_row;
        for j in 0..x.len() {
            x.set(j, x.get(j) * shrink);
        }
    }
    if g != 0.0 {
        for (j, a) in row.iter() {
            x.add(j, -step * g * a);
        }
    }
}

/// `f_row`: read one example, estimate the gradient, update the model.
pub fn apply_row(
    spec: &ModelSpec,
    x: &SharedVec,
    row: Lane<'_>,
    label: f64,
    step: f64,
    reg_per_row: f64,
) -> Result<()> {
    if !spec.kernels().row {
        return Err(Error::Unsupported(format!(
            "{} has no row kernel",
            spec.kind()
        )));
    }
    if x.len() != spec.dim() {
        return Err(Error::DimensionMismatch {
            expected: spec.dim(),
            got: x.len(),
        });
    }
    row_step(spec, x, row, label, step, reg_per_row, 1.0);
    Ok(())
}

/// Write `x_j += delta` and keep the cache `z = A x` in step.
#[inline]
fn write_coordinate(x: &SharedVec, j: usize, delta: f64, col: Lane<'_>, cache: &SharedVec) {
    if delta == 0.0 {
        return;
    }
    x.add(j, delta);
    for (i, a) in col.iter() {
        cache.add(i, a * delta);
    }
}

#[inline]
pub(crate) fn col_step(
    spec: &ModelSpec,
    x: &SharedVec,
    j: usize,
    m: &DataMatrix,
    cache: &SharedVec,
    step: f64,
) {
    let col = m.col(j);
    let lambda = spec.hyper().lambda;
    let kind = spec.kind();
    let xj = x.get(j);
    let delta = if let Some(c) = quadratic_scale(kind) {
        let (mut num, mut den) = (lambda * xj, lambda);
        for (i, a) in col.iter() {
            num += c * a * (cache.get(i) - m.label(i));
            den += c * a * a;
        }
        if den > 0.0 {
            -num / den
        } else {
            0.0
        }
    } else {
        let mut g = lambda * xj;
        for (i, a) in col.iter() {
            g += a * dloss(kind, cache.get(i), m.label(i));
        }
        -step * g
    };
    write_coordinate(x, j, delta, col, cache);
}

/// `f_col`: update coordinate `j` from column `j` and the replica's cache of `A x`.
///
/// Quadratic losses take the exact coordinate minimizer; the others take one
/// gradient-coordinate step of size `step`.
pub fn apply_col(
    spec: &ModelSpec,
    x: &SharedVec,
    j: usize,
    m: &DataMatrix,
    cache: &SharedVec,
    step: f64,
) -> Result<()> {
    if !spec.kernels().col {
        return Err(Error::Unsupported(format!(
            "{} has no column kernel",
            spec.kind()
        )));
    }
    if j >= spec.dim() || j >= m.n_cols() {
        return Err(Error::InvalidArgument(format!("column {j} out of range")));
    }
    if m.layout() != Layout::ColMajor {
        return Err(Error::InvalidArgument(
            "f_col needs column-major storage".into(),
        ));
    }
    if cache.len() != m.n_rows() {
        return Err(Error::DimensionMismatch {
            expected: m.n_rows(),
            got: cache.len(),
        });
    }
    col_step(spec, x, j, m, cache, step);
    Ok(())
}

fn weighted_median(points: &mut [(f64, f64)]) -> f64 {
    points.sort_by(|a, b| a.0.total_cmp(&b.0));
    let total: f64 = points.iter().map(|p| p.1).sum();
    let mut acc = 0.0;
    for &(v, w) in points.iter() {
        acc += w;
        if acc >= 0.5 * total {
            return v;
        }
    }
    points.last().map_or(0.0, |p| p.0)
}

#[inline]
pub(crate) fn ctr_step(
    spec: &ModelSpec,
    x: &SharedVec,
    j: usize,
    rows: &[usize],
    m: &DataMatrix,
    step: f64,
) {
    if spec.anchor(j).is_some() || rows.is_empty() {
        return;
    }
    let kind = spec.kind();
    let lambda = spec.hyper().lambda;
    let xj = x.get(j);
    match kind {
        TaskKind::Lp => {
            let mut points: Vec<(f64, f64)> = rows
                .iter()
                .filter_map(|&i| {
                    let row = m.row(i);
                    let a = row.get(j);
                    (a != 0.0).then(|| {
                        let r = row.dot_with(|k| x.get(k)) - m.label(i);
                        (xj - r / a, a.abs())
                    })
                })
                .collect();
            if !points.is_empty() {
                x.set(j, weighted_median(&mut points));
            }
        }
        _ => {
            let quad = quadratic_scale(kind);
            let (mut num, mut den) = (lambda * xj, lambda);
            for &i in rows {
                let row = m.row(i);
                let a = row.get(j);
                let z = row.dot_with(|k| x.get(k));
                match quad {
                    Some(c) => {
                        num += c * a * (z - m.label(i));
                        den += c * a * a;
                    }
                    None => num += a * dloss(kind, z, m.label(i)),
                }
            }
            let delta = match quad {
                Some(_) if den > 0.0 => -num / den,
                Some(_) => 0.0,
                None => -step * num,
            };
            if delta != 0.0 {
                x.set(j, xj + delta);
            }
        }
    }
}

/// `f_ctr`: update coordinate `j` after reading every row in `S(j)`.
///
/// Anchored coordinates and columns with an empty `S(j)` are left unchanged.
pub fn apply_ctr(
    spec: &ModelSpec,
    x: &SharedVec,
    j: usize,
    rows: &[usize],
    m: &DataMatrix,
    step: f64,
) -> Result<()> {
    if !spec.kernels().ctr {
        return Err(Error::Unsupported(format!(
            "{} has no column-to-row kernel",
            spec.kind()
        )));
    }
    if j >= spec.dim() || j >= m.n_cols() {
        return Err(Error::InvalidArgument(format!("column {j} out of range")));
    }
    if m.layout() != Layout::RowMajor {
        return Err(Error::InvalidArgument(
            "f_ctr needs row-major storage".into(),
        ));
    }
    ctr_step(spec, x, j, rows, m, step);
    Ok(())
}

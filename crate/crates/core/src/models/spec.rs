use std::fmt;
use std::str::FromStr;

use rand::seq::SliceRandom;
use rand::Rng as _;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::rng::SeedStream;
use crate::storage::{DataMatrix, EdgeList};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum TaskKind {
    Svm,
    Lr,
    Ls,
    Lp,
    Qp,
}

impl TaskKind {
    pub const ALL: [TaskKind; 5] = [
        TaskKind::Svm,
        TaskKind::Lr,
        TaskKind::Ls,
        TaskKind::Lp,
        TaskKind::Qp,
    ];

    /// Graph tasks solved over an edge incidence matrix with anchored vertices.
    pub fn is_graph(self) -> bool {
        matches!(self, TaskKind::Lp | TaskKind::Qp)
    }

    pub fn name(self) -> &'static str {
        match self {
            TaskKind::Svm => "svm",
            TaskKind::Lr => "lr",
            TaskKind::Ls => "ls",
            TaskKind::Lp => "lp",
            TaskKind::Qp => "qp",
        }
    }
}

impl fmt::Display for TaskKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for TaskKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        TaskKind::ALL
            .into_iter()
            .find(|k| k.name().eq_ignore_ascii_case(s))
            .ok_or_else(|| Error::InvalidArgument(format!("unknown task kind {s:?}")))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum UpdateSparsity {
    SparseUpdate,
    DenseUpdate,
}

/// Which single-coordinate kernel a spec carries.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum ColumnFamily {
    /// `f_col`: reads one column plus a per-replica cache of `A x`.
    Col,
    /// `f_ctr`: reads every row in `S(j)`.
    Ctr,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Hyper {
    pub step: f64,
    pub lambda: f64,
    pub decay: f64,
}

impl Hyper {
    pub const DEFAULT_DECAY: f64 = 0.95;

    pub fn new(step: f64) -> Hyper {
        Hyper {
            step,
            lambda: 0.0,
            decay: Self::DEFAULT_DECAY,
        }
    }

    pub fn with_lambda(self, lambda: f64) -> Hyper {
        Hyper { lambda, ..self }
    }

    pub fn with_decay(self, decay: f64) -> Hyper {
        Hyper { decay, ..self }
    }

    /// Step size used during `epoch` (0-based).
    pub fn step_at(&self, epoch: usize) -> f64 {
        self.step * self.decay.powi(epoch as i32)
    }
}

/// The kernels a spec defines.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct KernelSet {
    pub row: bool,
    pub col: bool,
    pub ctr: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ModelSpec {
    kind: TaskKind,
    dim: usize,
    hyper: Hyper,
    column: ColumnFamily,
    /// Fixed coordinates of graph tasks: `anchors[j] = Some(v)` pins `x_j = v`.
    anchors: Vec<Option<f64>>,
}

/// Build a model specification with the kernels wired per kind.
pub fn make_spec(kind: TaskKind, dim: usize, hyper: Hyper) -> Result<ModelSpec> {
    if dim == 0 {
        return Err(Error::InvalidArgument(
            "model dimension must be at least 1".into(),
        ));
    }
    if !(hyper.step > 0.0 && hyper.step.is_finite()) {
        return Err(Error::InvalidArgument(format!(
            "step size must be positive, got {}",
            hyper.step
        )));
    }
    if !(hyper.lambda >= 0.0 && hyper.lambda.is_finite()) {
        return Err(Error::InvalidArgument(
            "regularization must be nonnegative".into(),
        ));
    }
    if !(hyper.decay > 0.0 && hyper.decay <= 1.0) {
        return Err(Error::InvalidArgument(
            "step decay must lie in (0, 1]".into(),
        ));
    }
    if kind == TaskKind::Lp && hyper.lambda != 0.0 {
        return Err(Error::Unsupported(
            "LP median steps take no regularization".into(),
        ));
    }
    Ok(ModelSpec {
        kind,
        dim,
        hyper,
        column: if kind.is_graph() {
            ColumnFamily::Ctr
        } else {
            ColumnFamily::Col
        },
        anchors: Vec::new(),
    })
}

impl ModelSpec {
    pub fn kind(&self) -> TaskKind {
        self.kind
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn hyper(&self) -> Hyper {
        self.hyper
    }

    pub fn with_hyper(&self, hyper: Hyper) -> Result<ModelSpec> {
        let mut s = make_spec(self.kind, self.dim, hyper)?;
        s.column = self.column;
        s.anchors = self.anchors.clone();
        Ok(s)
    }

    pub fn column_family(&self) -> ColumnFamily {
        self.column
    }

    /// Swap the single-coordinate kernel. Graph tasks only have `f_ctr`.
    pub fn with_column_family(mut self, family: ColumnFamily) -> Result<ModelSpec> {
        if self.kind.is_graph() && family == ColumnFamily::Col {
            return Err(Error::Unsupported(format!(
                "{} has no f_col kernel",
                self.kind
            )));
        }
        self.column = family;
        Ok(self)
    }

    pub fn kernels(&self) -> KernelSet {
        KernelSet {
            row: !self.kind.is_graph(),
            col: self.column == ColumnFamily::Col,
            ctr: self.column == ColumnFamily::Ctr,
        }
    }

    pub fn update_sparsity(&self) -> UpdateSparsity {
        if self.hyper.lambda > 0.0 {
            UpdateSparsity::DenseUpdate
        } else {
            UpdateSparsity::SparseUpdate
        }
    }

    pub fn with_anchors(mut self, anchors: &[(usize, f64)]) -> Result<ModelSpec> {
        if !self.kind.is_graph() {
            return Err(Error::Unsupported(format!(
                "{} takes no anchored coordinates",
                self.kind
            )));
        }
        let mut a = vec![None; self.dim];
        for &(j, v) in anchors {
            if j >= self.dim {
                return Err(Error::InvalidArgument(format!("anchor {j} out of range")));
            }
            a[j] = Some(v);
        }
        self.anchors = a;
        Ok(self)
    }

    #[inline]
    pub fn anchor(&self, j: usize) -> Option<f64> {
        self.anchors.get(j).copied().flatten()
    }

    pub fn anchors(&self) -> impl Iterator<Item = (usize, f64)> + '_ {
        self.anchors
            .iter()
            .enumerate()
            .filter_map(|(j, a)| a.map(|v| (j, v)))
    }

    /// Starting model: zeros, with anchored coordinates at their fixed values.
    pub fn initial_model(&self) -> Vec<f64> {
        (0..self.dim)
            .map(|j| self.anchor(j).unwrap_or(0.0))
            .collect()
    }

    pub fn check_data(&self, m: &DataMatrix) -> Result<()> {
        if m.n_cols() != self.dim {
            return Err(Error::DimensionMismatch {
                expected: self.dim,
                got: m.n_cols(),
            });
        }
        Ok(())
    }
}

/// Pick `ceil(fraction * n)` anchored vertices with random `+-1` labels.
pub fn random_anchors(n: usize, fraction: f64, seed: u64) -> Vec<(usize, f64)> {
    let mut rng = SeedStream::new(seed).rng("data", &[0xa4c]);
    let k = ((fraction * n as f64).ceil() as usize).min(n);
    let mut ids: Vec<usize> = (0..n).collect();
    ids.shuffle(&mut rng);
    let mut chosen: Vec<(usize, f64)> = ids[..k]
        .iter()
        .map(|&j| (j, if rng.random::<bool>() { 1.0 } else { -1.0 }))
        .collect();
    chosen.sort_by_key(|a| a.0);
    chosen
}

/// Label-propagation instance over a graph: incidence matrix plus anchored spec.
pub fn graph_task(
    kind: TaskKind,
    graph: &EdgeList,
    anchor_fraction: f64,
    hyper: Hyper,
    seed: u64,
) -> Result<(ModelSpec, DataMatrix)> {
    if !kind.is_graph() {
        return Err(Error::InvalidArgument(format!(
            "{kind} is not a graph task"
        )));
    }
    let m = graph.incidence_matrix()?;
    let anchors = random_anchors(graph.n_vertices, anchor_fraction, seed);
    let spec = make_spec(kind, graph.n_vertices, hyper)?.with_anchors(&anchors)?;
    Ok((spec, m))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn svm_spec_has_row_and_col() {
        let s = make_spec(TaskKind::Svm, 3, Hyper::new(0.1)).unwrap();
        assert_eq!(
            s.kernels(),
            KernelSet {
                row: true,
                col: true,
                ctr: false
            }
        );
        assert_eq!(s.update_sparsity(), UpdateSparsity::SparseUpdate);
    }

    #[test]
    fn qp_spec_has_ctr_only() {
        let s = make_spec(TaskKind::Qp, 5, Hyper::new(0.1)).unwrap();
        let k = s.kernels();
        assert!(k.ctr && !k.col && !k.row);
        assert!(s.with_column_family(ColumnFamily::Col).is_err());
    }

    #[test]
    fn rejects_bad_hyperparameters() {
        assert!(make_spec(TaskKind::Ls, 3, Hyper::new(0.0)).is_err());
        assert!(make_spec(TaskKind::Ls, 3, Hyper::new(-1.0)).is_err());
        assert!(make_spec(TaskKind::Ls, 0, Hyper::new(1.0)).is_err());
        assert!(make_spec(TaskKind::Ls, 3, Hyper::new(1.0).with_decay(0.0)).is_err());
        assert!(make_spec(TaskKind::Lp, 3, Hyper::new(1.0).with_lambda(0.1)).is_err());
        assert!("nope".parse::<TaskKind>().is_err());
        assert_eq!("QP".parse::<TaskKind>().unwrap(), TaskKind::Qp);
    }

    #[test]
    fn exactly_one_column_family() {
        for kind in TaskKind::ALL {
            let k = make_spec(kind, 2, Hyper::new(1.0)).unwrap().kernels();
            assert!(k.col ^ k.ctr, "{kind}");
        }
    }

    #[test]
    fn regularized_spec_is_dense_update() {
        let s = make_spec(TaskKind::Lr, 3, Hyper::new(0.1).with_lambda(0.01)).unwrap();
        assert_eq!(s.update_sparsity(), UpdateSparsity::DenseUpdate);
    }

    #[test]
    fn anchors_seed_initial_model() {
        let s = make_spec(TaskKind::Qp, 3, Hyper::new(1.0))
            .unwrap()
            .with_anchors(&[(1, 1.0)])
            .unwrap();
        assert_eq!(s.initial_model(), vec![0.0, 1.0, 0.0]);
        let a = random_anchors(100, 0.1, 3);
        assert_eq!(a.len(), 10);
        assert_eq!(a, random_anchors(100, 0.1, 3));
        assert!(a.iter().all(|&(_, v)| v == 1.0 || v == -1.0));
    }

    #[test]
    fn decay_schedule() {
        let h = Hyper::new(1.0).with_decay(0.5);
        assert_eq!(h.step_at(0), 1.0);
        assert_eq!(h.step_at(2), 0.25);
    }
}

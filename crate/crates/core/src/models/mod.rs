//! Statistical tasks: loss functions and their access kernels.
//!
//! Objectives (labels `b_i` stored with the data, `z_i = <x, a_i>`):
//!
//! | kind | per-row loss            | kernels          |
//! |------|-------------------------|------------------|
//! | SVM  | `max(0, 1 - b z)`       | `f_row`, `f_col` |
//! | LR   | `ln(1 + exp(-b z))`     | `f_row`, `f_col` |
//! | LS   | `(z - b)^2`             | `f_row`, `f_col` |
//! | QP   | `1/2 (z - b)^2`         | `f_ctr`          |
//! | LP   | `|z - b|`               | `f_ctr`          |
//!
//! plus `lambda/2 ||x||^2` for every kind except LP. QP and LP run over an
//! edge incidence matrix (`z_e = x_u - x_v`) with some vertices anchored.

mod kernels;
mod loss;
mod spec;

pub use kernels::{apply_col, apply_ctr, apply_row};
pub(crate) use kernels::{col_step, ctr_step, row_step};
pub use loss::{grad_norm, gradient, loss};
pub use spec::{
    graph_task, make_spec, random_anchors, ColumnFamily, Hyper, KernelSet, ModelSpec, TaskKind,
    UpdateSparsity,
};

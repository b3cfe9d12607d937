//! Per-epoch cost model and access-method selection.

use std::hint::black_box;
use std::time::{Duration, Instant};

use crate::engine::{AccessMethod, MachineTopology};
use crate::error::{Error, Result};
use crate::models::{ModelSpec, UpdateSparsity};
use crate::rng::SeedStream;
use crate::shared::SharedVec;
use crate::storage::MatrixStats;

pub const ALPHA_MIN: f64 = 1.0;
pub const ALPHA_MAX: f64 = 100.0;
/// Band over which a decision is expected to be stable.
pub const SENSITIVITY_BAND: (f64, f64) = (4.0, 100.0);

/// Estimated reads plus `alpha` times writes for one epoch.
pub fn estimate_cost(
    method: AccessMethod,
    s: &MatrixStats,
    sparsity: UpdateSparsity,
    alpha: f64,
) -> f64 {
    let sum_ni = s.sum_ni as f64;
    match method {
        AccessMethod::RowWise => {
            let writes = match sparsity {
                UpdateSparsity::SparseUpdate => sum_ni,
                UpdateSparsity::DenseUpdate => s.n as f64 * s.d as f64,
            };
            sum_ni + alpha * writes
        }
        AccessMethod::ColWise | AccessMethod::ColToRow => s.sum_ni_sq as f64 + alpha * s.d as f64,
    }
}

/// `(1 + alpha) sum n_i / (sum n_i^2 + alpha d)`; row-wise wins below 1.
pub fn cost_ratio(s: &MatrixStats, alpha: f64) -> f64 {
    let col = estimate_cost(
        AccessMethod::ColWise,
        s,
        UpdateSparsity::SparseUpdate,
        alpha,
    );
    let row = estimate_cost(
        AccessMethod::RowWise,
        s,
        UpdateSparsity::SparseUpdate,
        alpha,
    );
    if col == 0.0 {
        return if row == 0.0 { 1.0 } else { f64::INFINITY };
    }
    row / col
}

/// The access methods a spec has kernels for, row-wise first.
pub fn candidate_methods(spec: &ModelSpec) -> Vec<AccessMethod> {
    let k = spec.kernels();
    let mut out = Vec::with_capacity(2);
    if k.row {
        out.push(AccessMethod::RowWise);
    }
    if k.col {
        out.push(AccessMethod::ColWise);
    }
    if k.ctr {
        out.push(AccessMethod::ColToRow);
    }
    out
}

/// Cheapest method the spec defines. Ties go to row-wise.
pub fn choose_access_method(spec: &ModelSpec, s: &MatrixStats, alpha: f64) -> AccessMethod {
    let sparsity = spec.update_sparsity();
    let mut best: Option<(AccessMethod, f64)> = None;
    // strict comparison keeps the earliest (row-wise) candidate on ties
    for m in candidate_methods(spec) {
        let c = estimate_cost(m, s, sparsity, alpha);
        if best.is_none_or(|(_, bc)| c < bc) {
            best = Some((m, c));
        }
    }
    best.map_or(AccessMethod::RowWise, |(m, _)| m)
}

#[derive(Debug, Clone, PartialEq)]
pub struct SensitivityReport {
    pub stable: bool,
    pub decisions: Vec<(f64, AccessMethod)>,
}

/// Log-spaced grid over `[lo, hi]` with both endpoints.
pub fn alpha_grid(lo: f64, hi: f64, points: usize) -> Vec<f64> {
    let points = points.max(2);
    let (a, b) = (lo.ln(), hi.ln());
    (0..points)
        .map(|k| {
            if k + 1 == points {
                hi
            } else {
                (a + (b - a) * k as f64 / (points - 1) as f64).exp()
            }
        })
        .collect()
}

/// Is the chosen method constant for every alpha in the sensitivity band?
pub fn sensitivity_check(s: &MatrixStats, spec: &ModelSpec) -> SensitivityReport {
    let decisions: Vec<(f64, AccessMethod)> =
        alpha_grid(SENSITIVITY_BAND.0, SENSITIVITY_BAND.1, 33)
            .into_iter()
            .map(|a| (a, choose_access_method(spec, s, a)))
            .collect();
    let stable = decisions.windows(2).all(|w| w[0].1 == w[1].1);
    SensitivityReport { stable, decisions }
}

/// Smallest nonzero step of the monotonic clock.
fn timer_resolution() -> Duration {
    let mut best = Duration::MAX;
    for _ in 0..64 {
        let t0 = Instant::now();
        let mut t1 = Instant::now();
        while t1 == t0 {
            t1 = Instant::now();
        }
        best = best.min(t1 - t0);
    }
    best
}

fn best_of<F: FnMut() -> Duration>(reps: usize, mut f: F) -> Duration {
    (0..reps).map(|_| f()).min().unwrap_or_default()
}

/// Write/read cost factor: uncontended sequential-read throughput over the
/// throughput of every worker read-modify-writing one shared vector.
///
/// Each timed pass must span at least 1000 clock ticks.
pub fn calibrate_alpha(topology: &MachineTopology, trial_size: usize, seed: u64) -> Result<f64> {
    let workers = topology.workers();
    if workers == 0 {
        return Err(Error::InvalidArgument(
            "calibration needs at least one worker".into(),
        ));
    }
    if trial_size == 0 {
        return Err(Error::InvalidArgument("trial size must be positive".into()));
    }
    let res = timer_resolution();
    let min_pass = res.saturating_mul(1000);
    let mut rng = SeedStream::new(seed).rng("calibrate", &[]);
    let data: Vec<f64> = (0..trial_size)
        .map(|_| rand::Rng::random::<f64>(&mut rng))
        .collect();

    let read = best_of(5, || {
        let t = Instant::now();
        black_box(data.iter().sum::<f64>());
        t.elapsed()
    });
    if read < min_pass {
        return Err(Error::TimerResolution {
            elapsed_ns: read.as_nanos(),
        });
    }

    // every worker sweeps the whole shared vector from a different offset
    let shared = SharedVec::zeros(trial_size);
    let write = best_of(5, || {
        let t = Instant::now();
        std::thread::scope(|s| {
            for w in 0..workers {
                let shared = &shared;
                let data = &data;
                s.spawn(move || {
                    topology.pin_worker(w);
                    let off = w * trial_size / workers;
                    for k in 0..trial_size {
                        let j = (k + off) % trial_size;
                        shared.add(j, data[j]);
                    }
                });
            }
        });
        t.elapsed()
    });
    let read_tput = trial_size as f64 / read.as_secs_f64();
    let write_tput = (trial_size * workers) as f64 / write.as_secs_f64();
    Ok((read_tput / write_tput).clamp(ALPHA_MIN, ALPHA_MAX))
}

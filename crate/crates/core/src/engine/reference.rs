use nalgebra::{DMatrix, DVector};

use crate::engine::{plan, AccessMethod, MachineTopology, ModelReplication, Overrides, StopRule};
use crate::engine::{DataReplication, Engine};
use crate::error::{Error, Result};
use crate::models::{self, Hyper, ModelSpec, TaskKind};
use crate::storage::DataMatrix;

/// Step sizes searched by default.
pub const STEP_GRID: [f64; 7] = [100.0, 10.0, 1.0, 0.1, 0.01, 0.001, 0.0001];

/// Largest dimension solved in closed form.
const DENSE_SOLVE_LIMIT: usize = 4096;

/// 64-bit fingerprint of a dataset and the objective's regularizer.
pub fn fingerprint(spec: &ModelSpec, m: &DataMatrix) -> u64 {
    let mut h: u64 = 0xcbf2_9ce4_8422_2325;
    let mut mix = |x: u64| {
        for b in x.to_le_bytes() {
            h ^= u64::from(b);
            h = h.wrapping_mul(0x0100_0000_01b3);
        }
    };
    mix(m.n_rows() as u64);
    mix(m.n_cols() as u64);
    for (i, j, v) in m.triplets() {
        mix(i as u64);
        mix(j as u64);
        mix(v.to_bits());
    }
    for i in 0..m.n_rows() {
        mix(m.label(i).to_bits());
    }
    mix(spec.hyper().lambda.to_bits());
    for (j, v) in spec.anchors() {
        mix(j as u64);
        mix(v.to_bits());
    }
    h
}

/// Minimizer of `sum (a_i x - b_i)^2 + lambda/2 |x|^2` from the normal equations.
pub fn least_squares_optimum(spec: &ModelSpec, m: &DataMatrix) -> Result<(Vec<f64>, f64)> {
    if spec.kind() != TaskKind::Ls {
        return Err(Error::Unsupported(
            "closed form exists only for least squares".into(),
        ));
    }
    let d = m.n_cols();
    if d > DENSE_SOLVE_LIMIT {
        return Err(Error::Unsupported(format!(
            "d = {d} is too large for a dense solve"
        )));
    }
    let lambda = spec.hyper().lambda;
    let mut gram = DMatrix::<f64>::identity(d, d) * lambda;
    let mut rhs = DVector::<f64>::zeros(d);
    let rows = m.to_layout(crate::storage::Layout::RowMajor, m.format())?;
    for i in 0..m.n_rows() {
        let r: Vec<(usize, f64)> = rows.row(i).iter().collect();
        for &(j, a) in &r {
            rhs[j] += 2.0 * a * m.label(i);
            for &(k, b) in &r {
                gram[(j, k)] += 2.0 * a * b;
            }
        }
    }
    let x = match gram.clone().cholesky() {
        Some(c) => c.solve(&rhs),
        None => gram
            .svd(true, true)
            .solve(&rhs, 1e-12)
            .map_err(|_| Error::Singular)?,
    };
    let x: Vec<f64> = x.iter().copied().collect();
    let loss = models::loss(spec, &x, m)?;
    Ok((x, loss))
}

/// Reference optimum: the closed form for least squares, otherwise the lowest
/// loss seen by single-threaded runs over the step grid.
pub fn optimal_loss(spec: &ModelSpec, m: &DataMatrix, epochs: usize, seed: u64) -> Result<f64> {
    if spec.kind() == TaskKind::Ls && m.n_cols() <= DENSE_SOLVE_LIMIT {
        return Ok(least_squares_optimum(spec, m)?.1);
    }
    let mut best = models::loss(spec, &spec.initial_model(), m)?;
    let k = spec.kernels();
    let mut methods = Vec::new();
    if k.row {
        methods.push(AccessMethod::RowWise);
    }
    if k.col {
        methods.push(AccessMethod::ColWise);
    }
    if k.ctr {
        methods.push(AccessMethod::ColToRow);
    }
    for access in methods {
        for step in STEP_GRID {
            let s = spec.with_hyper(Hyper {
                step,
                decay: 0.98,
                ..spec.hyper()
            })?;
            let o = Overrides {
                access: Some(access),
                model_rep: Some(ModelReplication::PerMachine),
                data_rep: Some(DataReplication::Sharding),
                ..Overrides::default()
            };
            let p = plan(&s, m, MachineTopology::single(), o, seed)?;
            match Engine::new(p, &s, m)?.train(&StopRule::epochs(epochs)) {
                Ok(r) => best = best.min(r.best_loss()),
                Err(e) if e.is_numerical() => continue,
                Err(e) => return Err(e),
            }
        }
    }
    Ok(best)
}

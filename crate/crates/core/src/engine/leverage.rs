use nalgebra::{DMatrix, DVector};
use rand::distr::weighted::WeightedIndex;
use rand::distr::Distribution;

use crate::error::{Error, Result};
use crate::rng::SeedStream;
use crate::storage::DataMatrix;

/// Ridge added to `A^T A` when it is not positive definite.
pub const LEVERAGE_RIDGE: f64 = 1e-8;

/// `s(i) = a_i^T (A^T A)^{-1} a_i`, falling back to a tiny ridge when `A^T A` is singular.
pub fn leverage_scores(m: &DataMatrix) -> Result<Vec<f64>> {
    leverage_scores_with(m, true)
}

pub fn leverage_scores_with(m: &DataMatrix, ridge: bool) -> Result<Vec<f64>> {
    let (n, d) = (m.n_rows(), m.n_cols());
    let rows = m.to_layout(crate::storage::Layout::RowMajor, m.format())?;
    let mut gram = DMatrix::<f64>::zeros(d, d);
    let mut dense_rows = Vec::with_capacity(n);
    for i in 0..n {
        let r: Vec<(usize, f64)> = rows.row(i).iter().collect();
        for &(j, a) in &r {
            for &(k, b) in &r {
                gram[(j, k)] += a * b;
            }
        }
        dense_rows.push(r);
    }
    let chol = match gram.clone().cholesky() {
        Some(c) => c,
        None if ridge => (gram + DMatrix::identity(d, d) * LEVERAGE_RIDGE)
            .cholesky()
            .ok_or(Error::Singular)?,
        None => return Err(Error::Singular),
    };
    let l = chol.l();
    Ok(dense_rows
        .iter()
        .map(|r| {
            let mut a = DVector::<f64>::zeros(d);
            for &(j, v) in r {
                a[j] = v;
            }
            // s = |L^{-1} a|^2
            l.solve_lower_triangular(&a)
                .map_or(0.0, |y| y.norm_squared())
        })
        .collect())
}

/// Draws per worker for leverage sampling: `ceil(2 eps^-2 d ln d)`, at least one.
pub fn importance_sample_size(epsilon: f64, d: usize) -> usize {
    let d = d as f64;
    ((2.0 / (epsilon * epsilon) * d * d.ln()).ceil() as usize).max(1)
}

/// Row sampler with probabilities proportional to the scores.
#[derive(Debug, Clone)]
pub struct ImportanceSampler {
    dist: WeightedIndex<f64>,
    /// `1 / (N p_i)`: scales a draw's gradient so its expectation is the row average.
    pub weights: Vec<f64>,
    pub draws: usize,
}

impl ImportanceSampler {
    pub fn new(scores: &[f64], epsilon: f64, d: usize) -> Result<Self> {
        if !(epsilon > 0.0 && epsilon < 1.0) {
            return Err(Error::InvalidArgument(format!(
                "epsilon must lie in (0,1), got {epsilon}"
            )));
        }
        if scores.iter().any(|s| !s.is_finite() || *s < 0.0) {
            return Err(Error::InvalidArgument(
                "scores must be finite and nonnegative".into(),
            ));
        }
        let total: f64 = scores.iter().sum();
        if total <= 0.0 {
            return Err(Error::InvalidArgument(
                "all importance scores are zero".into(),
            ));
        }
        let dist = WeightedIndex::new(scores)
            .map_err(|e| Error::InvalidArgument(format!("bad importance scores: {e}")))?;
        let n = scores.len() as f64;
        let weights = scores
            .iter()
            .map(|&s| if s > 0.0 { total / (n * s) } else { 0.0 })
            .collect();
        Ok(ImportanceSampler {
            dist,
            weights,
            draws: importance_sample_size(epsilon, d),
        })
    }

    pub fn sample(&self, rng: &mut impl rand::Rng) -> usize {
        self.dist.sample(rng)
    }
}

/// `m` row ids drawn with replacement, `P(i)` proportional to `scores[i]`.
pub fn importance_sample(scores: &[f64], epsilon: f64, d: usize, seed: u64) -> Result<Vec<usize>> {
    let s = ImportanceSampler::new(scores, epsilon, d)?;
    let mut rng = SeedStream::new(seed).rng("importance", &[]);
    Ok((0..s.draws).map(|_| s.sample(&mut rng)).collect())
}

//! Seeded synthetic instances.

use rand::seq::index::sample;
use rand::Rng;
use rand_distr::{Binomial, Distribution, StandardNormal};

use crate::error::{Error, Result};
use crate::gibbs::{Factor, FactorGraph};
use crate::rng::SeedStream;
use crate::storage::{DataMatrix, Format, Layout};

/// `N x N` diagonal least-squares instance with entries in `[1, 2]`. The
/// optimum `x_i = b_i / a_ii` has zero loss.
pub fn diag_ls(n: usize, seed: u64) -> Result<DataMatrix> {
    if n == 0 {
        return Err(Error::InvalidArgument("diag-ls needs N >= 1".into()));
    }
    let mut rng = SeedStream::new(seed).rng("data", &[1]);
    let trip: Vec<(usize, usize, f64)> = (0..n)
        .map(|i| (i, i, rng.random_range(1.0..=2.0)))
        .collect();
    let labels = (0..n).map(|_| rng.random_range(-1.0..=1.0)).collect();
    DataMatrix::from_triplets(n, n, &trip, Layout::RowMajor, Format::Sparse)?.with_labels(labels)
}

fn sparse_rows(
    n: usize,
    d: usize,
    density: f64,
    rng: &mut impl Rng,
) -> Result<(Vec<usize>, Vec<usize>, Vec<f64>)> {
    let per_row = Binomial::new(d as u64, density)
        .map_err(|e| Error::InvalidArgument(format!("bad density {density}: {e}")))?;
    let mut offsets = vec![0];
    let mut indices = Vec::new();
    let mut values = Vec::new();
    for _ in 0..n {
        let k = per_row.sample(rng) as usize;
        let mut cols = sample(rng, d, k).into_vec();
        cols.sort_unstable();
        for j in cols {
            indices.push(j);
            let v: f64 = rng.sample(StandardNormal);
            values.push(if v == 0.0 { 1.0 } else { v });
        }
        offsets.push(indices.len());
    }
    Ok((offsets, indices, values))
}

/// Sparse Gaussian regression instance: each entry is nonzero with
/// probability `density`; labels are `A x* + 0.1 noise`.
pub fn gaussian(n: usize, d: usize, density: f64, seed: u64) -> Result<DataMatrix> {
    if n == 0 || d == 0 || !(density > 0.0 && density <= 1.0) {
        return Err(Error::InvalidArgument(
            "gaussian needs N, d >= 1 and density in (0, 1]".into(),
        ));
    }
    let mut rng = SeedStream::new(seed).rng("data", &[2]);
    let (offsets, indices, values) = sparse_rows(n, d, density, &mut rng)?;
    let m = DataMatrix::from_csr(n, d, offsets, indices, values)?;
    let truth: Vec<f64> = (0..d).map(|_| rng.sample(StandardNormal)).collect();
    let labels = m
        .mul_vec(&truth)?
        .into_iter()
        .map(|z| z + 0.1 * rng.sample::<f64, _>(StandardNormal))
        .collect();
    m.with_labels(labels)
}

/// Two Gaussian clusters with 70/30 class skew, rows grouped by class and
/// 5% label noise. Labels are `+-1`.
pub fn two_cluster_skew(n: usize, d: usize, seed: u64) -> Result<DataMatrix> {
    if n < 2 || d == 0 {
        return Err(Error::InvalidArgument(
            "two-cluster-skew needs N >= 2 and d >= 1".into(),
        ));
    }
    let mut rng = SeedStream::new(seed).rng("data", &[3]);
    let center: Vec<f64> = (0..d)
        .map(|_| rng.sample::<f64, _>(StandardNormal))
        .collect();
    let norm = center.iter().map(|c| c * c).sum::<f64>().sqrt().max(1e-12);
    let n_pos = (n * 7).div_ceil(10).min(n - 1);
    let mut data = Vec::with_capacity(n * d);
    let mut labels = Vec::with_capacity(n);
    for i in 0..n {
        let class = if i < n_pos { 1.0 } else { -1.0 };
        for &c in &center {
            let noise: f64 = rng.sample(StandardNormal);
            data.push(class * c / norm * 1.5 + noise);
        }
        let flip = rng.random::<f64>() < 0.05;
        labels.push(if flip { -class } else { class });
    }
    DataMatrix::from_dense(n, d, data)?
        .to_layout(Layout::RowMajor, Format::Sparse)?
        .with_labels(labels)
}

/// Binary chain with couplings `J` between neighbours and seeded unary
/// biases in `[-0.5, 0.5]`.
pub fn ising_chain(v: usize, coupling: f64, seed: u64) -> Result<FactorGraph> {
    if v == 0 || !coupling.is_finite() {
        return Err(Error::InvalidArgument(
            "ising-chain needs V >= 1 and a finite coupling".into(),
        ));
    }
    let mut rng = SeedStream::new(seed).rng("data", &[4]);
    let mut factors = Vec::with_capacity(2 * v);
    for i in 0..v {
        let h: f64 = rng.random_range(-0.5..=0.5);
        factors.push(Factor {
            vars: vec![i],
            log_weights: vec![-h, h],
        });
        if i + 1 < v {
            let j = coupling;
            factors.push(Factor {
                vars: vec![i, i + 1],
                log_weights: vec![j, -j, -j, j],
            });
        }
    }
    FactorGraph::new(vec![2; v], factors)
}

/// Sparse underdetermined profile: 10^4 rows of 2 or 3 nonzeros over 10^4 columns.
pub fn rcv1_like(seed: u64) -> Result<DataMatrix> {
    let (n, d) = (10_000, 10_000);
    let mut rng = SeedStream::new(seed).rng("data", &[5]);
    let mut offsets = vec![0];
    let mut indices = Vec::new();
    let mut values = Vec::new();
    for _ in 0..n {
        let k = rng.random_range(2..=3);
        let mut cols = sample(&mut rng, d, k).into_vec();
        cols.sort_unstable();
        for j in cols {
            indices.push(j);
            values.push(rng.random_range(0.1..1.0));
        }
        offsets.push(indices.len());
    }
    let labels = (0..n)
        .map(|_| if rng.random() { 1.0 } else { -1.0 })
        .collect();
    DataMatrix::from_csr(n, d, offsets, indices, values)?.with_labels(labels)
}

/// Dense overdetermined profile: 10^4 rows over 150 columns.
pub fn music_like(seed: u64) -> Result<DataMatrix> {
    let (n, d) = (10_000, 150);
    let mut rng = SeedStream::new(seed).rng("data", &[6]);
    let data: Vec<f64> = (0..n * d)
        .map(|_| rng.sample::<f64, _>(StandardNormal))
        .collect();
    let labels = (0..n)
        .map(|_| rng.sample::<f64, _>(StandardNormal))
        .collect();
    DataMatrix::from_dense(n, d, data)?.with_labels(labels)
}

/// A generator invocation such as `gaussian 100 10 0.1`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Recipe {
    DiagLs { n: usize },
    Gaussian { n: usize, d: usize, density: f64 },
    IsingChain { v: usize, coupling: f64 },
    TwoClusterSkew { n: usize, d: usize },
}

pub enum Generated {
    Matrix(DataMatrix),
    Graph(FactorGraph),
}

impl Recipe {
    pub fn parse(tokens: &[impl AsRef<str>]) -> Result<Recipe> {
        let t: Vec<&str> = tokens.iter().map(|s| s.as_ref()).collect();
        let bad = || {
            Error::InvalidArgument(format!(
                "invalid recipe {:?}; expected `diag-ls N`, `gaussian N d density`, \
                 `ising-chain V coupling` or `two-cluster-skew N d`",
                t.join(" ")
            ))
        };
        fn num<T: std::str::FromStr>(s: &str, bad: impl Fn() -> Error) -> Result<T> {
            s.parse().map_err(|_| bad())
        }
        match t.as_slice() {
            ["diag-ls", n] => Ok(Recipe::DiagLs { n: num(n, bad)? }),
            ["gaussian", n, d, p] => Ok(Recipe::Gaussian {
                n: num(n, bad)?,
                d: num(d, bad)?,
                density: num(p, bad)?,
            }),
            ["ising-chain", v, j] => Ok(Recipe::IsingChain {
                v: num(v, bad)?,
                coupling: num(j, bad)?,
            }),
            ["two-cluster-skew", n, d] => Ok(Recipe::TwoClusterSkew {
                n: num(n, bad)?,
                d: num(d, bad)?,
            }),
            _ => Err(bad()),
        }
    }

    /// Parse a whitespace-separated recipe string.
    pub fn parse_str(s: &str) -> Result<Recipe> {
        Recipe::parse(&s.split_whitespace().collect::<Vec<_>>())
    }

    pub fn generate(&self, seed: u64) -> Result<Generated> {
        Ok(match *self {
            Recipe::DiagLs { n } => Generated::Matrix(diag_ls(n, seed)?),
            Recipe::Gaussian { n, d, density } => Generated::Matrix(gaussian(n, d, density, seed)?),
            Recipe::IsingChain { v, coupling } => Generated::Graph(ising_chain(v, coupling, seed)?),
            Recipe::TwoClusterSkew { n, d } => Generated::Matrix(two_cluster_skew(n, d, seed)?),
        })
    }

    pub fn matrix(&self, seed: u64) -> Result<DataMatrix> {
        match self.generate(seed)? {
            Generated::Matrix(m) => Ok(m),
            Generated::Graph(_) => Err(Error::InvalidArgument(
                "recipe produces a factor graph".into(),
            )),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn diag_optimum_is_zero() {
        let m = diag_ls(5, 3).unwrap();
        let x: Vec<f64> = (0..5).map(|i| m.label(i) / m.get(i, i)).collect();
        let r = m.mul_vec(&x).unwrap();
        for (i, ri) in r.iter().enumerate() {
            assert!((ri - m.label(i)).abs() < 1e-15);
        }
    }

    #[test]
    fn gaussian_density_in_band() {
        let m = gaussian(100, 10, 0.1, 7).unwrap();
        let dens = m.stats().density;
        assert!((0.05..=0.15).contains(&dens), "{dens}");
    }

    #[test]
    fn same_seed_same_bytes() {
        let write = |m: &DataMatrix| {
            let mut b = Vec::new();
            crate::storage::write_svmlight(m, &mut b).unwrap();
            b
        };
        let a = write(&gaussian(50, 8, 0.3, 1).unwrap());
        assert_eq!(a, write(&gaussian(50, 8, 0.3, 1).unwrap()));
        assert_ne!(a, write(&gaussian(50, 8, 0.3, 2).unwrap()));
    }

    #[test]
    fn skew_is_seventy_thirty() {
        let m = two_cluster_skew(100, 4, 1).unwrap();
        let pos = (0..70).filter(|&i| m.label(i) > 0.0).count();
        assert!(pos > 55);
        assert_eq!(m.n_cols(), 4);
    }

    #[test]
    fn recipes_parse() {
        assert_eq!(
            Recipe::parse_str("diag-ls 5").unwrap(),
            Recipe::DiagLs { n: 5 }
        );
        assert!(Recipe::parse_str("diag-ls").is_err());
        assert!(Recipe::parse_str("gaussian 1 2 x").is_err());
        assert!(Recipe::parse_str("mystery 3").is_err());
        assert!(matches!(
            Recipe::parse_str("ising-chain 4 0.5")
                .unwrap()
                .generate(1)
                .unwrap(),
            Generated::Graph(_)
        ));
    }

    #[test]
    fn profiles_have_expected_shape() {
        let r = rcv1_like(1).unwrap().stats();
        assert!(r.n <= r.d);
        let m = music_like(1).unwrap().stats();
        assert_eq!(m.density, 1.0);
    }
}

//! Gibbs sampling over factor graphs.
//!
//! Resampling variable `v` reads every factor in `S(v)` and the variables
//! those factors touch, which is column-to-row access on the factor-by-variable
//! incidence matrix.

mod chains;
mod format;

pub use chains::{run_chains, ChainOptions, ChainReport};
pub use format::{load_factor_graph, parse_factor_graph, write_factor_graph};

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Largest state space `exact_marginals` will enumerate.
pub const EXACT_LIMIT: u64 = 1 << 20;

/// A log-weight table over the joint values of `vars`, first variable most
/// significant.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Factor {
    pub vars: Vec<usize>,
    pub log_weights: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct FactorGraph {
    domains: Vec<u32>,
    factors: Vec<Factor>,
    strides: Vec<Vec<usize>>,
    var_factors: Vec<Vec<usize>>,
}

impl FactorGraph {
    pub fn new(domains: Vec<u32>, factors: Vec<Factor>) -> Result<Self> {
        if let Some(v) = domains.iter().position(|&d| d == 0) {
            return Err(Error::InvalidArgument(format!(
                "variable {v} has an empty domain"
            )));
        }
        let mut var_factors = vec![Vec::new(); domains.len()];
        let mut strides = Vec::with_capacity(factors.len());
        for (fi, f) in factors.iter().enumerate() {
            if f.vars.is_empty() {
                return Err(Error::InvalidArgument(format!(
                    "factor {fi} has no variables"
                )));
            }
            let mut size = 1usize;
            let mut st = vec![0; f.vars.len()];
            for (k, &v) in f.vars.iter().enumerate().rev() {
                let d = *domains.get(v).ok_or_else(|| {
                    Error::InvalidArgument(format!("factor {fi} names variable {v} out of range"))
                })?;
                st[k] = size;
                size = size.saturating_mul(d as usize);
            }
            if f.log_weights.len() != size {
                return Err(Error::InvalidArgument(format!(
                    "factor {fi} table has {} entries, expected {size}",
                    f.log_weights.len()
                )));
            }
            if f.log_weights.iter().any(|w| !w.is_finite()) {
                return Err(Error::InvalidArgument(format!(
                    "factor {fi} has a non-finite weight"
                )));
            }
            let mut seen = f.vars.clone();
            seen.sort_unstable();
            seen.dedup();
            if seen.len() != f.vars.len() {
                return Err(Error::InvalidArgument(format!(
                    "factor {fi} repeats a variable"
                )));
            }
            for &v in &f.vars {
                var_factors[v].push(fi);
            }
            strides.push(st);
        }
        Ok(FactorGraph {
            domains,
            factors,
            strides,
            var_factors,
        })
    }

    pub fn n_vars(&self) -> usize {
        self.domains.len()
    }

    pub fn n_factors(&self) -> usize {
        self.factors.len()
    }

    pub fn domain(&self, v: usize) -> u32 {
        self.domains[v]
    }

    pub fn domains(&self) -> &[u32] {
        &self.domains
    }

    pub fn factors(&self) -> &[Factor] {
        &self.factors
    }

    /// Factors incident to `v`.
    pub fn factors_of(&self, v: usize) -> &[usize] {
        &self.var_factors[v]
    }

    /// Product of all domain sizes, saturating.
    pub fn state_space(&self) -> u64 {
        self.domains
            .iter()
            .fold(1u64, |acc, &d| acc.saturating_mul(u64::from(d)))
    }

    pub(crate) fn approx_bytes(&self) -> usize {
        self.factors
            .iter()
            .map(|f| f.vars.len() * 16 + f.log_weights.len() * 8)
            .sum::<usize>()
            + self.domains.len() * 32
    }

    fn table_index(&self, f: usize, value: impl Fn(usize) -> u32) -> usize {
        self.factors[f]
            .vars
            .iter()
            .zip(&self.strides[f])
            .map(|(&u, &s)| value(u) as usize * s)
            .sum()
    }

    /// Unnormalized log measure of a full assignment.
    pub fn log_weight(&self, a: &[u32]) -> f64 {
        (0..self.factors.len())
            .map(|f| self.factors[f].log_weights[self.table_index(f, |u| a[u])])
            .sum()
    }

    /// `P(v = k | rest)` for each `k`, reading other variables through `value`.
    pub(crate) fn conditional_with(
        &self,
        v: usize,
        value: impl Fn(usize) -> u32,
        out: &mut Vec<f64>,
    ) {
        let d = self.domains[v] as usize;
        out.clear();
        out.resize(d, 0.0);
        for &f in &self.var_factors[v] {
            let fac = &self.factors[f];
            let pos = fac
                .vars
                .iter()
                .position(|&u| u == v)
                .expect("incidence is consistent");
            let stride = self.strides[f][pos];
            let base = self.table_index(f, |u| if u == v { 0 } else { value(u) });
            for (k, o) in out.iter_mut().enumerate() {
                *o += fac.log_weights[base + k * stride];
            }
        }
        let max = out.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
        let mut total = 0.0;
        for o in out.iter_mut() {
            *o = (*o - max).exp();
            total += *o;
        }
        for o in out.iter_mut() {
            *o /= total;
        }
    }
}

fn check_assignment(g: &FactorGraph, a: &[u32]) -> Result<()> {
    if a.len() != g.n_vars() {
        return Err(Error::DimensionMismatch {
            expected: g.n_vars(),
            got: a.len(),
        });
    }
    if let Some(v) = (0..a.len()).find(|&v| a[v] >= g.domains[v]) {
        return Err(Error::InvalidArgument(format!(
            "value {} out of domain for variable {v}",
            a[v]
        )));
    }
    Ok(())
}

/// Conditional distribution of `v` given the rest of `a`.
pub fn conditional(g: &FactorGraph, v: usize, a: &[u32]) -> Result<Vec<f64>> {
    if v >= g.n_vars() {
        return Err(Error::InvalidArgument(format!("variable {v} out of range")));
    }
    check_assignment(g, a)?;
    let mut out = Vec::new();
    g.conditional_with(v, |u| a[u], &mut out);
    Ok(out)
}

/// Index drawn from a normalized distribution.
pub(crate) fn draw(p: &[f64], rng: &mut impl Rng) -> u32 {
    let u: f64 = rng.random();
    let mut acc = 0.0;
    for (k, &pk) in p.iter().enumerate() {
        acc += pk;
        if u < acc {
            return k as u32;
        }
    }
    // rounding left u above the cumulative sum: take the last supported value
    p.iter().rposition(|&pk| pk > 0.0).unwrap_or(0) as u32
}

/// Resample `a[v]` from its conditional.
pub fn gibbs_step(g: &FactorGraph, v: usize, a: &mut [u32], rng: &mut impl Rng) {
    let mut p = Vec::new();
    g.conditional_with(v, |u| a[u], &mut p);
    a[v] = draw(&p, rng);
}

/// Per-variable empirical distribution of `samples`.
pub fn marginals(g: &FactorGraph, samples: &[Vec<u32>]) -> Result<Vec<Vec<f64>>> {
    if samples.is_empty() {
        return Err(Error::InvalidArgument("no samples".into()));
    }
    let mut counts: Vec<Vec<f64>> = g.domains.iter().map(|&d| vec![0.0; d as usize]).collect();
    for s in samples {
        check_assignment(g, s)?;
        for (v, &k) in s.iter().enumerate() {
            counts[v][k as usize] += 1.0;
        }
    }
    let n = samples.len() as f64;
    for c in &mut counts {
        for x in c.iter_mut() {
            *x /= n;
        }
    }
    Ok(counts)
}

/// Marginals by enumerating every assignment.
pub fn exact_marginals(g: &FactorGraph) -> Result<Vec<Vec<f64>>> {
    let states = g.state_space();
    if states > EXACT_LIMIT {
        return Err(Error::InvalidArgument(format!(
            "state space {states} exceeds the enumeration limit {EXACT_LIMIT}"
        )));
    }
    let mut a = vec![0u32; g.n_vars()];
    let mut logw = Vec::with_capacity(states as usize);
    for _ in 0..states {
        logw.push(g.log_weight(&a));
        increment(&mut a, &g.domains);
    }
    let max = logw.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    let mut out: Vec<Vec<f64>> = g.domains.iter().map(|&d| vec![0.0; d as usize]).collect();
    let mut total = 0.0;
    a.fill(0);
    for lw in logw {
        let w = (lw - max).exp();
        total += w;
        for (v, &k) in a.iter().enumerate() {
            out[v][k as usize] += w;
        }
        increment(&mut a, &g.domains);
    }
    for o in &mut out {
        for x in o.iter_mut() {
            *x /= total;
        }
    }
    Ok(out)
}

/// Mixed-radix increment, last variable fastest.
fn increment(a: &mut [u32], domains: &[u32]) {
    for v in (0..a.len()).rev() {
        a[v] += 1;
        if a[v] < domains[v] {
            return;
        }
        a[v] = 0;
    }
}

/// Largest per-variable L1 distance between two sets of marginals.
pub fn max_l1(a: &[Vec<f64>], b: &[Vec<f64>]) -> f64 {
    a.iter()
        .zip(b)
        .map(|(p, q)| p.iter().zip(q).map(|(x, y)| (x - y).abs()).sum::<f64>())
        .fold(0.0, f64::max)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng::SeedStream;

    fn unary(w: [f64; 2]) -> FactorGraph {
        FactorGraph::new(
            vec![2],
            vec![Factor {
                vars: vec![0],
                log_weights: w.to_vec(),
            }],
        )
        .unwrap()
    }

    fn pair(j: f64) -> FactorGraph {
        FactorGraph::new(
            vec![2, 2],
            vec![Factor {
                vars: vec![0, 1],
                log_weights: vec![j, -j, -j, j],
            }],
        )
        .unwrap()
    }

    #[test]
    fn isolated_variable_is_uniform() {
        let g = FactorGraph::new(vec![2, 3], vec![]).unwrap();
        assert_eq!(conditional(&g, 0, &[0, 0]).unwrap(), vec![0.5, 0.5]);
        let p = conditional(&g, 1, &[0, 2]).unwrap();
        assert!(p.iter().all(|x| (x - 1.0 / 3.0).abs() < 1e-15));
        assert_eq!(exact_marginals(&g).unwrap()[0], vec![0.5, 0.5]);
    }

    #[test]
    fn unary_ln3() {
        let g = unary([0.0, 3f64.ln()]);
        let p = conditional(&g, 0, &[0]).unwrap();
        assert!((p[0] - 0.25).abs() < 1e-12 && (p[1] - 0.75).abs() < 1e-12);
        let e = exact_marginals(&g).unwrap();
        assert!((e[0][1] - 0.75).abs() < 1e-12);
    }

    #[test]
    fn strong_coupling_follows_neighbour() {
        let j = 5.0;
        let g = pair(j);
        let p = conditional(&g, 0, &[0, 1]).unwrap();
        let expect = 1.0 / (1.0 + (-2.0 * j).exp());
        assert!((p[1] - expect).abs() < 1e-12);
        assert!(p[1] > 0.9999);
        assert!(conditional(&g, 2, &[0, 1]).is_err());
    }

    #[test]
    fn degenerate_conditional_always_zero() {
        let g = unary([0.0, -800.0]);
        let mut rng = SeedStream::new(1).rng("test", &[]);
        let mut a = vec![1];
        for _ in 0..100 {
            gibbs_step(&g, 0, &mut a, &mut rng);
            assert_eq!(a[0], 0);
        }
    }

    #[test]
    fn isolated_binary_frequency() {
        let g = FactorGraph::new(vec![2], vec![]).unwrap();
        let mut rng = SeedStream::new(2).rng("test", &[]);
        let mut a = vec![0];
        let n = 10_000;
        let mut ones = 0;
        for _ in 0..n {
            gibbs_step(&g, 0, &mut a, &mut rng);
            ones += a[0];
        }
        let sigma = (n as f64 * 0.25).sqrt();
        assert!((f64::from(ones) - n as f64 / 2.0).abs() < 4.0 * sigma);
    }

    #[test]
    fn seeded_trajectory_repeats() {
        let g = pair(0.3);
        let run = || {
            let mut rng = SeedStream::new(9).rng("test", &[]);
            let mut a = vec![0, 0];
            (0..50)
                .map(|t| {
                    gibbs_step(&g, t % 2, &mut a, &mut rng);
                    a.clone()
                })
                .collect::<Vec<_>>()
        };
        assert_eq!(run(), run());
    }

    #[test]
    fn marginals_examples() {
        let g = FactorGraph::new(vec![2], vec![]).unwrap();
        assert_eq!(
            marginals(&g, &[vec![1], vec![1]]).unwrap()[0],
            vec![0.0, 1.0]
        );
        assert_eq!(
            marginals(&g, &[vec![0], vec![1]]).unwrap()[0],
            vec![0.5, 0.5]
        );
        assert!(marginals(&g, &[]).is_err());
    }

    #[test]
    fn uniform_factors_give_uniform_marginals() {
        let g = FactorGraph::new(
            vec![2, 2, 2],
            vec![
                Factor {
                    vars: vec![0, 1],
                    log_weights: vec![0.7; 4],
                },
                Factor {
                    vars: vec![2, 1],
                    log_weights: vec![-0.2; 4],
                },
            ],
        )
        .unwrap();
        for m in exact_marginals(&g).unwrap() {
            assert!((m[0] - 0.5).abs() < 1e-12);
        }
    }

    #[test]
    fn exact_matches_hand_computed_pair() {
        let g = FactorGraph::new(
            vec![2, 2],
            vec![
                Factor {
                    vars: vec![0, 1],
                    log_weights: vec![1.0, -1.0, -1.0, 1.0],
                },
                Factor {
                    vars: vec![1],
                    log_weights: vec![0.0, 2f64.ln()],
                },
            ],
        )
        .unwrap();
        // weights: (0,0)=e, (0,1)=2/e, (1,0)=1/e, (1,1)=2e
        let e = std::f64::consts::E;
        let z = e + 2.0 / e + 1.0 / e + 2.0 * e;
        let m = exact_marginals(&g).unwrap();
        assert!((m[0][1] - (1.0 / e + 2.0 * e) / z).abs() < 1e-12);
        assert!((m[1][1] - (2.0 / e + 2.0 * e) / z).abs() < 1e-12);
    }

    #[test]
    fn rejects_bad_graphs() {
        let f = |vars: Vec<usize>, n: usize| Factor {
            vars,
            log_weights: vec![0.0; n],
        };
        assert!(FactorGraph::new(vec![2], vec![f(vec![], 1)]).is_err());
        assert!(FactorGraph::new(vec![2], vec![f(vec![1], 2)]).is_err());
        assert!(FactorGraph::new(vec![2], vec![f(vec![0], 3)]).is_err());
        assert!(FactorGraph::new(vec![2, 2], vec![f(vec![0, 0], 4)]).is_err());
        assert!(FactorGraph::new(vec![0], vec![]).is_err());
        let big = FactorGraph::new(vec![2; 21], vec![]).unwrap();
        assert!(exact_marginals(&big).is_err());
    }
}

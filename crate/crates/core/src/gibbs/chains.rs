use std::sync::atomic::{AtomicU32, Ordering};
use std::sync::Barrier;
use std::time::Instant;

use rand::seq::SliceRandom;
use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::engine::{MachineTopology, ModelReplication, DEFAULT_MEMORY_CAP};
use crate::error::{Error, Result};
use crate::gibbs::{draw, FactorGraph};
use crate::rng::SeedStream;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct ChainOptions {
    pub sweeps: usize,
    pub burn_in: usize,
    /// Keep every post-burn-in `(chain, sweep, var, value)` record.
    pub keep_samples: bool,
}

impl ChainOptions {
    pub fn new(sweeps: usize, burn_in: usize) -> Self {
        ChainOptions {
            sweeps,
            burn_in,
            keep_samples: false,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ChainReport {
    pub replication: ModelReplication,
    pub chains: usize,
    pub sweeps: usize,
    pub burn_in: usize,
    /// Pooled post-burn-in samples across chains.
    pub samples: u64,
    pub seconds: f64,
    /// Sweeps completed across all chains per second, burn-in included.
    pub samples_per_sec: f64,
    pub marginals: Vec<Vec<f64>>,
    #[serde(skip)]
    pub records: Vec<SampleRecord>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct SampleRecord {
    pub chain: usize,
    pub sweep: usize,
    pub var: usize,
    pub value: u32,
}

struct WorkerOut {
    counts: Vec<(usize, Vec<u64>)>,
    records: Vec<SampleRecord>,
}

/// Run Gibbs chains: one per group (`PerNode`), one per worker (`PerCore`)
/// or one shared by every worker (`PerMachine`). Workers of a chain sweep
/// contiguous variable blocks of a shared assignment without locks.
pub fn run_chains(
    g: &FactorGraph,
    replication: ModelReplication,
    topology: &MachineTopology,
    opts: ChainOptions,
    seed: u64,
) -> Result<ChainReport> {
    if opts.sweeps <= opts.burn_in {
        return Err(Error::InvalidArgument(format!(
            "sweeps ({}) must exceed burn-in ({})",
            opts.sweeps, opts.burn_in
        )));
    }
    let (chains, per_chain) = match replication {
        ModelReplication::PerMachine => (1, topology.workers()),
        ModelReplication::PerNode => (topology.n_nodes, topology.cores_per_node),
        ModelReplication::PerCore => (topology.workers(), 1),
    };
    let needed = g.approx_bytes().saturating_mul(chains);
    if chains > 1 && needed > DEFAULT_MEMORY_CAP {
        return Err(Error::MemoryCap {
            what: "factor graph replicas",
            needed,
            cap: DEFAULT_MEMORY_CAP,
        });
    }
    let seeds = SeedStream::new(seed);
    let copies: Vec<FactorGraph> = (0..chains).map(|_| g.clone()).collect();
    let states: Vec<Vec<AtomicU32>> = (0..chains)
        .map(|c| {
            let mut rng = seeds.rng("gibbs-init", &[c as u64]);
            (0..g.n_vars())
                .map(|v| AtomicU32::new(rng.random_range(0..g.domain(v))))
                .collect()
        })
        .collect();
    let vars: Vec<usize> = (0..g.n_vars()).collect();
    let blocks = crate::engine::split_even(&vars, per_chain);
    let barriers: Vec<Barrier> = (0..chains).map(|_| Barrier::new(per_chain)).collect();

    let t = Instant::now();
    let outs: Vec<std::thread::Result<WorkerOut>> = std::thread::scope(|s| {
        let mut handles = Vec::new();
        for c in 0..chains {
            for (slot, block) in blocks.iter().enumerate() {
                let (g, a, barrier, seeds) = (&copies[c], &states[c], &barriers[c], &seeds);
                let worker = c * per_chain + slot;
                handles.push(s.spawn(move || {
                    topology.pin_worker(worker);
                    let mut rng = seeds.rng("gibbs", &[c as u64, slot as u64]);
                    let mut order = block.clone();
                    let mut p = Vec::new();
                    let mut counts: Vec<(usize, Vec<u64>)> = block
                        .iter()
                        .map(|&v| (v, vec![0; g.domain(v) as usize]))
                        .collect();
                    let mut records = Vec::new();
                    for sweep in 0..opts.sweeps {
                        order.shuffle(&mut rng);
                        for &v in &order {
                            g.conditional_with(v, |u| a[u].load(Ordering::Relaxed), &mut p);
                            a[v].store(draw(&p, &mut rng), Ordering::Relaxed);
                        }
                        if sweep >= opts.burn_in {
                            for (v, cnt) in &mut counts {
                                let value = a[*v].load(Ordering::Relaxed);
                                cnt[value as usize] += 1;
                                if opts.keep_samples {
                                    records.push(SampleRecord {
                                        chain: c,
                                        sweep,
                                        var: *v,
                                        value,
                                    });
                                }
                            }
                        }
                        barrier.wait();
                    }
                    WorkerOut { counts, records }
                }));
            }
        }
        handles.into_iter().map(|h| h.join()).collect()
    });
    let seconds = t.elapsed().as_secs_f64();

    let mut totals: Vec<Vec<u64>> = g.domains().iter().map(|&d| vec![0; d as usize]).collect();
    let mut records = Vec::new();
    for out in outs {
        let out = out.map_err(|_| Error::WorkerPanic { epoch: 0 })?;
        for (v, cnt) in out.counts {
            for (k, n) in cnt.into_iter().enumerate() {
                totals[v][k] += n;
            }
        }
        records.extend(out.records);
    }
    records.sort_by_key(|r| (r.chain, r.sweep, r.var));
    let samples = (chains * (opts.sweeps - opts.burn_in)) as u64;
    let marginals = totals
        .iter()
        .map(|cnt| cnt.iter().map(|&n| n as f64 / samples as f64).collect())
        .collect();
    Ok(ChainReport {
        replication,
        chains,
        sweeps: opts.sweeps,
        burn_in: opts.burn_in,
        samples,
        seconds,
        samples_per_sec: (chains * opts.sweeps) as f64 / seconds.max(1e-12),
        marginals,
        records,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::engine::Pinning;
    use crate::gibbs::{exact_marginals, max_l1, Factor};

    fn chain3() -> FactorGraph {
        FactorGraph::new(
            vec![2, 2, 2],
            vec![
                Factor {
                    vars: vec![0, 1],
                    log_weights: vec![0.8, -0.8, -0.8, 0.8],
                },
                Factor {
                    vars: vec![1, 2],
                    log_weights: vec![0.5, -0.5, -0.5, 0.5],
                },
                Factor {
                    vars: vec![0],
                    log_weights: vec![0.0, 0.7],
                },
            ],
        )
        .unwrap()
    }

    #[test]
    fn sequential_chain_matches_oracle() {
        let g = chain3();
        let r = run_chains(
            &g,
            ModelReplication::PerMachine,
            &MachineTopology::single(),
            ChainOptions::new(100_000, 1_000),
            4,
        )
        .unwrap();
        assert_eq!(r.samples, 99_000);
        assert!(max_l1(&r.marginals, &exact_marginals(&g).unwrap()) <= 0.02);
    }

    #[test]
    fn per_node_pools_k_chains() {
        let g = chain3();
        let t = MachineTopology::new(3, 1, Pinning::Os).unwrap();
        let r = run_chains(
            &g,
            ModelReplication::PerNode,
            &t,
            ChainOptions::new(200, 10),
            4,
        )
        .unwrap();
        assert_eq!(r.chains, 3);
        assert_eq!(r.samples, 3 * 190);
        let s: f64 = r.marginals[1].iter().sum();
        assert!((s - 1.0).abs() < 1e-12);
    }

    #[test]
    fn one_worker_is_reproducible() {
        let g = chain3();
        let mut o = ChainOptions::new(50, 5);
        o.keep_samples = true;
        let run = || {
            run_chains(
                &g,
                ModelReplication::PerMachine,
                &MachineTopology::single(),
                o,
                8,
            )
            .unwrap()
        };
        let (a, b) = (run(), run());
        assert_eq!(a.records, b.records);
        assert_eq!(a.records.len(), 45 * 3);
    }

    #[test]
    fn burn_in_must_be_shorter() {
        let g = chain3();
        assert!(run_chains(
            &g,
            ModelReplication::PerMachine,
            &MachineTopology::single(),
            ChainOptions::new(5, 5),
            1
        )
        .is_err());
    }
}

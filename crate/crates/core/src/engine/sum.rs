use std::time::Instant;

use serde::{Deserialize, Serialize};

use crate::engine::plan::split_even;
use crate::engine::MachineTopology;
use crate::shared::SharedVec;

/// Cells between per-node accumulators, so each owns its cache line.
const PAD: usize = 16;
/// Doubles summed locally before each shared add.
const ROW: usize = 8;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum SumStrategy {
    /// Every worker adds into one shared accumulator.
    SharedSingle,
    /// One accumulator per locality group, combined at the end.
    PerNodeAccumulators,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SumReport {
    pub sum: f64,
    pub seconds: f64,
    pub gb_per_s: f64,
}

/// Sum `values` with every worker of the topology, adding one row of
/// eight doubles at a time into the strategy's accumulator.
pub fn parallel_sum(
    values: &[f64],
    topology: &MachineTopology,
    strategy: SumStrategy,
) -> SumReport {
    let workers = topology.workers();
    let n_acc = match strategy {
        SumStrategy::SharedSingle => 1,
        SumStrategy::PerNodeAccumulators => topology.n_nodes,
    };
    let acc = SharedVec::zeros(n_acc * PAD);
    let idx: Vec<usize> = (0..values.len().div_ceil(ROW)).collect();
    let chunks = split_even(&idx, workers);
    let t = Instant::now();
    std::thread::scope(|s| {
        for (w, rows) in chunks.iter().enumerate() {
            let acc = &acc;
            s.spawn(move || {
                topology.pin_worker(w);
                let slot = match strategy {
                    SumStrategy::SharedSingle => 0,
                    SumStrategy::PerNodeAccumulators => topology.node_of(w) * PAD,
                };
                for &r in rows {
                    let end = ((r + 1) * ROW).min(values.len());
                    let part: f64 = values[r * ROW..end].iter().sum();
                    acc.add_exact(slot, part);
                }
            });
        }
    });
    let seconds = t.elapsed().as_secs_f64();
    let sum = (0..n_acc).map(|k| acc.get(k * PAD)).sum();
    let bytes = (values.len() * 8) as f64;
    SumReport {
        sum,
        seconds,
        gb_per_s: if seconds > 0.0 {
            bytes / seconds / 1e9
        } else {
            f64::INFINITY
        },
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::engine::Pinning;

    #[test]
    fn small_sums() {
        let t = MachineTopology::new(2, 2, Pinning::Os).unwrap();
        let v: Vec<f64> = (1..=1000).map(f64::from).collect();
        for s in [SumStrategy::SharedSingle, SumStrategy::PerNodeAccumulators] {
            assert_eq!(parallel_sum(&v, &t, s).sum, 500_500.0);
            assert_eq!(parallel_sum(&[], &t, s).sum, 0.0);
        }
    }
}

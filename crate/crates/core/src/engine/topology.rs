use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Worker placement policy.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Pinning {
    /// Leave scheduling to the operating system.
    Os,
    /// Spread workers evenly across locality domains and pin them.
    Numa,
}

impl std::str::FromStr for Pinning {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "os" => Ok(Pinning::Os),
            "numa" => Ok(Pinning::Numa),
            other => Err(Error::InvalidArgument(format!("unknown pinning {other:?}"))),
        }
    }
}

/// Logical locality domains. Worker `w` lives on node `w / cores_per_node`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct MachineTopology {
    pub n_nodes: usize,
    pub cores_per_node: usize,
    pub pinning: Pinning,
}

impl MachineTopology {
    pub fn new(n_nodes: usize, cores_per_node: usize, pinning: Pinning) -> Result<Self> {
        if n_nodes == 0 || cores_per_node == 0 {
            return Err(Error::InvalidArgument(
                "topology needs at least one node and one core per node".into(),
            ));
        }
        Ok(MachineTopology {
            n_nodes,
            cores_per_node,
            pinning,
        })
    }

    /// One node, one worker.
    pub fn single() -> Self {
        MachineTopology {
            n_nodes: 1,
            cores_per_node: 1,
            pinning: Pinning::Os,
        }
    }

    pub fn workers(&self) -> usize {
        self.n_nodes * self.cores_per_node
    }

    pub fn node_of(&self, worker: usize) -> usize {
        worker / self.cores_per_node
    }

    /// Best-effort pin of the calling thread. No-op under `Os` or when the
    /// platform does not expose core ids.
    pub fn pin_worker(&self, worker: usize) {
        if self.pinning == Pinning::Os {
            return;
        }
        if let Some(cores) = core_affinity::get_core_ids() {
            if !cores.is_empty() {
                // node-major: consecutive workers of one node share a block of cores
                let _ = core_affinity::set_for_current(cores[worker % cores.len()]);
            }
        }
    }
}

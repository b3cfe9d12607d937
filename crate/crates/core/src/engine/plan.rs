use rand::seq::SliceRandom;
use serde::{Deserialize, Serialize};

use crate::engine::MachineTopology;
use crate::error::{Error, Result};
use crate::models::ModelSpec;
use crate::optimizer;
use crate::rng::SeedStream;
use crate::storage::{CtrIndex, DataMatrix, Format, Layout, DEFAULT_DENSE_CAP};

pub const DEFAULT_ALPHA: f64 = 10.0;
/// Bytes of data the plan may hold across all replicated groups.
pub const DEFAULT_MEMORY_CAP: usize = 1 << 31;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum AccessMethod {
    RowWise,
    ColWise,
    ColToRow,
}

impl AccessMethod {
    /// Storage layout the method's kernel reads.
    pub fn layout(self) -> Layout {
        match self {
            AccessMethod::ColWise => Layout::ColMajor,
            AccessMethod::RowWise | AccessMethod::ColToRow => Layout::RowMajor,
        }
    }

    pub fn is_row(self) -> bool {
        self == AccessMethod::RowWise
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum ModelReplication {
    PerCore,
    PerNode,
    PerMachine,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub enum DataReplication {
    Sharding,
    FullReplication,
    /// Each worker draws rows with probability proportional to leverage.
    Importance {
        epsilon: f64,
    },
}

/// How often replicas are averaged while an epoch runs.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum SyncPolicy {
    /// A dedicated thread averages back to back.
    Continuous,
    IntervalMs(u64),
    /// Only at the epoch barrier.
    PerEpoch,
}

macro_rules! parse_enum {
    ($t:ty, $what:literal, $($s:literal => $v:expr),+ $(,)?) => {
        impl std::str::FromStr for $t {
            type Err = Error;
            fn from_str(s: &str) -> Result<Self> {
                match s.to_ascii_lowercase().replace(['-', '_'], "").as_str() {
                    $($s => Ok($v),)+
                    _ => Err(Error::InvalidArgument(format!(concat!("unknown ", $what, " {:?}"), s))),
                }
            }
        }
    };
}

parse_enum!(AccessMethod, "access method",
    "rowwise" => AccessMethod::RowWise, "row" => AccessMethod::RowWise,
    "colwise" => AccessMethod::ColWise, "col" => AccessMethod::ColWise,
    "coltorow" => AccessMethod::ColToRow, "ctr" => AccessMethod::ColToRow);
parse_enum!(ModelReplication, "model replication",
    "percore" => ModelReplication::PerCore,
    "pernode" => ModelReplication::PerNode,
    "permachine" => ModelReplication::PerMachine);

impl std::str::FromStr for DataReplication {
    type Err = Error;

    /// `sharding`, `fullreplication` or `importance:<epsilon>`.
    fn from_str(s: &str) -> Result<Self> {
        let t = s.to_ascii_lowercase().replace(['-', '_'], "");
        if let Some(eps) = t.strip_prefix("importance") {
            let eps = eps.trim_start_matches([':', '=']);
            let epsilon = if eps.is_empty() {
                0.5
            } else {
                eps.parse()
                    .map_err(|_| Error::InvalidArgument(format!("bad epsilon {eps:?}")))?
            };
            return Ok(DataReplication::Importance { epsilon });
        }
        match t.as_str() {
            "sharding" => Ok(DataReplication::Sharding),
            "fullreplication" | "full" => Ok(DataReplication::FullReplication),
            _ => Err(Error::InvalidArgument(format!(
                "unknown data replication {s:?}"
            ))),
        }
    }
}

/// A set of workers, the ids they process and where their replica lives.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LocalityGroup {
    pub id: usize,
    pub workers: Vec<usize>,
    /// Replica id of each worker, parallel to `workers`.
    pub replicas: Vec<usize>,
    /// Row ids (row-wise) or column ids (column methods).
    pub assignment: Vec<usize>,
    /// Rows read by owned columns under column-to-row sharding.
    pub replicated_rows: Vec<usize>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExecutionPlan {
    pub access: AccessMethod,
    pub model_rep: ModelReplication,
    pub data_rep: DataReplication,
    pub sync: SyncPolicy,
    pub topology: MachineTopology,
    pub groups: Vec<LocalityGroup>,
    pub alpha: f64,
    pub seed: u64,
}

/// The axes of a plan, enough to rebuild it against the same data.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PlanEcho {
    pub access: AccessMethod,
    pub model_rep: ModelReplication,
    pub data_rep: DataReplication,
    pub sync: SyncPolicy,
    pub topology: MachineTopology,
    pub alpha: f64,
    pub seed: u64,
}

/// Forced plan choices. Unset axes are chosen by the planner.
#[derive(Debug, Clone, Copy, Default, PartialEq)]
pub struct Overrides {
    pub access: Option<AccessMethod>,
    pub model_rep: Option<ModelReplication>,
    pub data_rep: Option<DataReplication>,
    pub sync: Option<SyncPolicy>,
    pub alpha: Option<f64>,
    pub memory_cap: Option<usize>,
}

impl Overrides {
    pub fn from_echo(e: &PlanEcho) -> Self {
        Overrides {
            access: Some(e.access),
            model_rep: Some(e.model_rep),
            data_rep: Some(e.data_rep),
            sync: Some(e.sync),
            alpha: Some(e.alpha),
            memory_cap: None,
        }
    }
}

impl ExecutionPlan {
    pub fn n_replicas(&self) -> usize {
        replica_count(self.model_rep, &self.topology)
    }

    pub fn echo(&self) -> PlanEcho {
        PlanEcho {
            access: self.access,
            model_rep: self.model_rep,
            data_rep: self.data_rep,
            sync: self.sync,
            topology: self.topology,
            alpha: self.alpha,
            seed: self.seed,
        }
    }
}

pub fn replica_count(rep: ModelReplication, t: &MachineTopology) -> usize {
    match rep {
        ModelReplication::PerCore => t.workers(),
        ModelReplication::PerNode => t.n_nodes,
        ModelReplication::PerMachine => 1,
    }
}

fn replica_of(rep: ModelReplication, t: &MachineTopology, worker: usize) -> usize {
    match rep {
        ModelReplication::PerCore => worker,
        ModelReplication::PerNode => t.node_of(worker),
        ModelReplication::PerMachine => 0,
    }
}

/// Default averaging cadence: continuous for per-node replicas, at the
/// barrier otherwise.
pub fn default_sync(rep: ModelReplication) -> SyncPolicy {
    match rep {
        ModelReplication::PerNode => SyncPolicy::Continuous,
        _ => SyncPolicy::PerEpoch,
    }
}

/// Rule of thumb: gradient methods on per-node replicas, coordinate methods on one.
pub fn default_model_rep(access: AccessMethod) -> ModelReplication {
    match access {
        AccessMethod::RowWise => ModelReplication::PerNode,
        _ => ModelReplication::PerMachine,
    }
}

fn matrix_bytes(m: &DataMatrix) -> usize {
    match m.format() {
        Format::Dense => m.n_rows() * m.n_cols() * 8,
        Format::Sparse => m.nnz() * 16 + (m.n_rows().max(m.n_cols()) + 1) * 8,
    }
}

fn check_supported(spec: &ModelSpec, access: AccessMethod) -> Result<()> {
    let k = spec.kernels();
    let ok = match access {
        AccessMethod::RowWise => k.row,
        AccessMethod::ColWise => k.col,
        AccessMethod::ColToRow => k.ctr,
    };
    if ok {
        Ok(())
    } else {
        Err(Error::Unsupported(format!(
            "{} has no kernel for {access:?}",
            spec.kind()
        )))
    }
}

/// Build an execution plan, filling unforced axes with the cost model and
/// the replication rules of thumb.
pub fn plan(
    spec: &ModelSpec,
    m: &DataMatrix,
    topology: MachineTopology,
    overrides: Overrides,
    seed: u64,
) -> Result<ExecutionPlan> {
    spec.check_data(m)?;
    if topology.workers() == 0 {
        return Err(Error::InvalidArgument(
            "plan needs at least one worker".into(),
        ));
    }
    let alpha = overrides.alpha.unwrap_or(DEFAULT_ALPHA);
    if !(alpha > 0.0 && alpha.is_finite()) {
        return Err(Error::InvalidArgument(format!(
            "alpha must be positive, got {alpha}"
        )));
    }
    let access = match (overrides.access, overrides.data_rep) {
        (Some(a), _) => a,
        // importance sampling draws rows, so it fixes the access method
        (None, Some(DataReplication::Importance { .. })) => AccessMethod::RowWise,
        (None, _) => optimizer::choose_access_method(spec, &m.stats(), alpha),
    };
    check_supported(spec, access)?;
    if access.layout() != m.layout() && m.format() == Format::Dense {
        let needed = m.n_rows().saturating_mul(m.n_cols());
        if needed > DEFAULT_DENSE_CAP {
            return Err(Error::MemoryCap {
                what: "layout conversion",
                needed,
                cap: DEFAULT_DENSE_CAP,
            });
        }
    }
    let model_rep = overrides
        .model_rep
        .unwrap_or_else(|| default_model_rep(access));
    let cap = overrides.memory_cap.unwrap_or(DEFAULT_MEMORY_CAP);
    let data_rep = match overrides.data_rep {
        Some(d) => d,
        None if matrix_bytes(m).saturating_mul(topology.n_nodes) <= cap => {
            DataReplication::FullReplication
        }
        None => DataReplication::Sharding,
    };
    if let DataReplication::Importance { epsilon } = data_rep {
        if access != AccessMethod::RowWise {
            return Err(Error::Unsupported(
                "importance sampling needs row-wise access".into(),
            ));
        }
        if !(epsilon > 0.0 && epsilon < 1.0) {
            return Err(Error::InvalidArgument(format!(
                "epsilon must lie in (0,1), got {epsilon}"
            )));
        }
    }
    let sync = overrides.sync.unwrap_or_else(|| default_sync(model_rep));

    let assign = assign_data(data_rep, m, access, topology.n_nodes, seed)?;
    let groups = assign
        .into_iter()
        .enumerate()
        .map(|(g, (assignment, replicated_rows))| {
            let workers: Vec<usize> =
                (g * topology.cores_per_node..(g + 1) * topology.cores_per_node).collect();
            let replicas = workers
                .iter()
                .map(|&w| replica_of(model_rep, &topology, w))
                .collect();
            LocalityGroup {
                id: g,
                workers,
                replicas,
                assignment,
                replicated_rows,
            }
        })
        .collect();
    Ok(ExecutionPlan {
        access,
        model_rep,
        data_rep,
        sync,
        topology,
        groups,
        alpha,
        seed,
    })
}

/// Split `ids` into `parts` near-equal runs; earlier parts get the extras.
pub(crate) fn split_even<T: Clone>(ids: &[T], parts: usize) -> Vec<Vec<T>> {
    let (q, r) = (ids.len() / parts, ids.len() % parts);
    let mut out = Vec::with_capacity(parts);
    let mut start = 0;
    for p in 0..parts {
        let len = q + usize::from(p < r);
        out.push(ids[start..start + len].to_vec());
        start += len;
    }
    out
}

/// Per-group id lists plus, for column-to-row sharding, the rows each group
/// must also hold.
pub fn assign_data(
    strategy: DataReplication,
    m: &DataMatrix,
    access: AccessMethod,
    groups: usize,
    seed: u64,
) -> Result<Vec<(Vec<usize>, Vec<usize>)>> {
    let n_ids = if access.is_row() {
        m.n_rows()
    } else {
        m.n_cols()
    };
    if groups == 0 {
        return Err(Error::InvalidArgument("need at least one group".into()));
    }
    if groups > n_ids {
        return Err(Error::InvalidArgument(format!(
            "{groups} groups but only {n_ids} {}",
            if access.is_row() { "rows" } else { "columns" }
        )));
    }
    let seeds = SeedStream::new(seed);
    let ids: Vec<usize> = (0..n_ids).collect();
    let lists = match strategy {
        DataReplication::Sharding => {
            let mut shuffled = ids;
            shuffled.shuffle(&mut seeds.rng("assign", &[0]));
            split_even(&shuffled, groups)
        }
        DataReplication::FullReplication | DataReplication::Importance { .. } => (0..groups)
            .map(|g| {
                let mut p = ids.clone();
                p.shuffle(&mut seeds.rng("assign", &[1, g as u64]));
                p
            })
            .collect(),
    };
    let needs_rows =
        access == AccessMethod::ColToRow && strategy == DataReplication::Sharding && groups > 1;
    let index = needs_rows.then(|| CtrIndex::build(m));
    Ok(lists
        .into_iter()
        .map(|cols| {
            let rows = match &index {
                Some(idx) => {
                    let mut r: Vec<usize> = cols
                        .iter()
                        .flat_map(|&j| idx.rows_of(j).iter().copied())
                        .collect();
                    r.sort_unstable();
                    r.dedup();
                    r
                }
                None => Vec::new(),
            };
            (cols, rows)
        })
        .collect())
}

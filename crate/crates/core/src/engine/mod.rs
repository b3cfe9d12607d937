//! Execution plans and the epoch loop.
//!
//! Workers of one locality group share the group's ids and, depending on
//! the replication level, a model replica. Replicas are written lock-free
//! and averaged by an optional background thread; every epoch ends with a
//! barrier and a full average.

mod leverage;
mod plan;
mod reference;
mod run;
mod sum;
mod topology;
mod trace;

pub use leverage::{
    importance_sample, importance_sample_size, leverage_scores, leverage_scores_with,
    ImportanceSampler, LEVERAGE_RIDGE,
};
pub(crate) use plan::split_even;
pub use plan::{
    assign_data, default_model_rep, default_sync, plan, replica_count, AccessMethod,
    DataReplication, ExecutionPlan, LocalityGroup, ModelReplication, Overrides, PlanEcho,
    SyncPolicy, DEFAULT_ALPHA, DEFAULT_MEMORY_CAP,
};
pub use reference::{fingerprint, least_squares_optimum, optimal_loss, STEP_GRID};
pub use run::{average_replicas, train, Engine, EpochStats, StopReason, StopRule};
pub use sum::{parallel_sum, SumReport, SumStrategy};
pub use topology::{MachineTopology, Pinning};
pub use trace::{within, RunEcho, TrainResult, ZERO_OPT_FLOOR};

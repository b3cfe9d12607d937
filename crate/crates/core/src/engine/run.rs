use std::borrow::Cow;
use std::sync::atomic::{AtomicBool, AtomicU64, Ordering};
use std::time::{Duration, Instant};

use rand::seq::SliceRandom;
use serde::{Deserialize, Serialize};

use crate::engine::leverage::{leverage_scores, ImportanceSampler};
use crate::engine::plan::split_even;
use crate::engine::{AccessMethod, DataReplication, ExecutionPlan, SyncPolicy, TrainResult};
use crate::error::{Error, Result};
use crate::models::{self, col_step, ctr_step, row_step, ModelSpec};
use crate::rng::SeedStream;
use crate::shared::SharedVec;
use crate::storage::{CtrIndex, DataMatrix};

/// Kernel calls between voluntary yields while an averager is running.
const YIELD_EVERY: u64 = 256;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EpochStats {
    pub epoch: usize,
    /// Cumulative training time at the end of this epoch.
    pub wall_ms: f64,
    pub epoch_ms: f64,
    pub loss: f64,
    pub grad_norm: f64,
    /// Kernel invocations: rows for row-wise, columns otherwise.
    pub processed: u64,
    pub averaging_passes: u64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum StopReason {
    MaxEpochs,
    LossTarget,
    Timeout,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct StopRule {
    pub max_epochs: usize,
    pub loss_target: Option<f64>,
    pub timeout: Option<Duration>,
    /// Run one untimed, discarded epoch first.
    pub warmup: bool,
}

impl StopRule {
    pub fn epochs(max_epochs: usize) -> Self {
        StopRule {
            max_epochs,
            loss_target: None,
            timeout: None,
            warmup: false,
        }
    }

    pub fn with_target(mut self, target: f64) -> Self {
        self.loss_target = Some(target);
        self
    }

    pub fn with_timeout(mut self, timeout: Duration) -> Self {
        self.timeout = Some(timeout);
        self
    }
}

/// Average every replica coordinate-wise and write the mean back, one
/// sequential pass per replica. Reads may be torn under concurrent writers.
pub fn average_replicas(replicas: &[SharedVec]) {
    if replicas.len() < 2 {
        return;
    }
    let d = replicas[0].len();
    let mut mean = vec![0.0; d];
    for r in replicas {
        for (j, m) in mean.iter_mut().enumerate() {
            *m += r.get(j);
        }
    }
    let k = replicas.len() as f64;
    for m in &mut mean {
        *m /= k;
    }
    for r in replicas {
        r.store_all(&mean);
    }
}

/// A plan bound to a spec and data, with live replicas.
#[derive(Debug, Clone)]
pub struct Engine<'a> {
    plan: ExecutionPlan,
    spec: ModelSpec,
    eval: &'a DataMatrix,
    work: Cow<'a, DataMatrix>,
    ctr: Option<CtrIndex>,
    sampler: Option<ImportanceSampler>,
    replicas: Vec<SharedVec>,
    /// Per-replica `A x` for column-wise access, refreshed at epoch start
    /// whenever averaging or concurrent writers may have invalidated it.
    caches: Vec<SharedVec>,
    epoch: usize,
}

impl<'a> Engine<'a> {
    pub fn new(plan: ExecutionPlan, spec: &ModelSpec, m: &'a DataMatrix) -> Result<Self> {
        spec.check_data(m)?;
        let layout = plan.access.layout();
        let work = if m.layout() == layout {
            Cow::Borrowed(m)
        } else {
            Cow::Owned(m.to_layout(layout, m.format())?)
        };
        let ctr = (plan.access == AccessMethod::ColToRow).then(|| CtrIndex::build(&work));
        let sampler = match plan.data_rep {
            DataReplication::Importance { epsilon } => Some(ImportanceSampler::new(
                &leverage_scores(m)?,
                epsilon,
                m.n_cols(),
            )?),
            _ => None,
        };
        let x0 = spec.initial_model();
        let replicas = (0..plan.n_replicas())
            .map(|_| SharedVec::from_slice(&x0))
            .collect();
        let caches = if plan.access == AccessMethod::ColWise {
            (0..plan.n_replicas())
                .map(|_| SharedVec::zeros(m.n_rows()))
                .collect()
        } else {
            Vec::new()
        };
        Ok(Engine {
            plan,
            spec: spec.clone(),
            eval: m,
            work,
            ctr,
            sampler,
            replicas,
            caches,
            epoch: 0,
        })
    }

    pub fn plan(&self) -> &ExecutionPlan {
        &self.plan
    }

    pub fn replicas(&self) -> &[SharedVec] {
        &self.replicas
    }

    pub fn epochs_done(&self) -> usize {
        self.epoch
    }

    /// Current consensus model (replica 0 after the last barrier).
    pub fn model(&self) -> Vec<f64> {
        self.replicas[0].snapshot()
    }

    fn evaluate(&self, x: &[f64]) -> Result<(f64, f64)> {
        Ok((
            models::loss(&self.spec, x, self.eval)?,
            models::grad_norm(&self.spec, x, self.eval)?,
        ))
    }

    /// Loss and gradient norm of the current consensus model.
    pub fn current_stats(&self) -> Result<EpochStats> {
        let (loss, grad_norm) = self.evaluate(&self.model())?;
        Ok(EpochStats {
            epoch: self.epoch,
            wall_ms: 0.0,
            epoch_ms: 0.0,
            loss,
            grad_norm,
            processed: 0,
            averaging_passes: 0,
        })
    }

    fn averager_active(&self) -> bool {
        self.replicas.len() > 1 && self.plan.sync != SyncPolicy::PerEpoch
    }

    /// One pass over each worker's assignment, closed by a barrier and a
    /// final averaging of all replicas.
    pub fn run_epoch(&mut self) -> Result<EpochStats> {
        let e = self.epoch;
        let step = self.spec.hyper().step_at(e);
        // one replica written by one worker keeps its cache exact across epochs
        let cache_exact = e > 0 && self.replicas.len() == 1 && self.plan.topology.workers() == 1;
        if self.plan.access == AccessMethod::ColWise && !cache_exact {
            for (x, z) in self.replicas.iter().zip(&self.caches) {
                z.store_all(&self.work.mul_vec(&x.snapshot())?);
            }
        }
        let seeds = SeedStream::new(self.plan.seed);
        let orders: Vec<Vec<usize>> = self
            .plan
            .groups
            .iter()
            .map(|g| {
                let mut o = g.assignment.clone();
                o.shuffle(&mut seeds.rng("order", &[g.id as u64, e as u64]));
                o
            })
            .collect();
        let processed = AtomicU64::new(0);
        let passes = AtomicU64::new(0);
        let done = AtomicBool::new(false);
        let yield_often = self.averager_active();
        let reg = self.spec.hyper().lambda / self.work.n_rows().max(1) as f64;
        let this = &*self;

        let t0 = Instant::now();
        let panicked = std::thread::scope(|s| {
            let mut handles = Vec::new();
            for (g, order) in this.plan.groups.iter().zip(&orders) {
                let chunks = split_even(order, g.workers.len());
                for ((&w, &rid), chunk) in g.workers.iter().zip(&g.replicas).zip(chunks) {
                    let processed = &processed;
                    let seeds = &seeds;
                    handles.push(s.spawn(move || {
                        this.plan.topology.pin_worker(w);
                        let x = &this.replicas[rid];
                        let mut count = 0u64;
                        let mut tick = || {
                            count += 1;
                            if yield_often && count.is_multiple_of(YIELD_EVERY) {
                                std::thread::yield_now();
                            }
                        };
                        match (this.plan.access, &this.sampler) {
                            (AccessMethod::RowWise, Some(sampler)) => {
                                let mut rng = seeds.rng("importance", &[w as u64, e as u64]);
                                for _ in 0..sampler.draws {
                                    let i = sampler.sample(&mut rng);
                                    let (row, b) = (this.work.row(i), this.work.label(i));
                                    row_step(&this.spec, x, row, b, step, reg, sampler.weights[i]);
                                    tick();
                                }
                            }
                            (AccessMethod::RowWise, None) => {
                                for &i in &chunk {
                                    let (row, b) = (this.work.row(i), this.work.label(i));
                                    row_step(&this.spec, x, row, b, step, reg, 1.0);
                                    tick();
                                }
                            }
                            (AccessMethod::ColWise, _) => {
                                let z = &this.caches[rid];
                                for &j in &chunk {
                                    col_step(&this.spec, x, j, &this.work, z, step);
                                    tick();
                                }
                            }
                            (AccessMethod::ColToRow, _) => {
                                let idx = this.ctr.as_ref().expect("ctr index built");
                                for &j in &chunk {
                                    ctr_step(&this.spec, x, j, idx.rows_of(j), &this.work, step);
                                    tick();
                                }
                            }
                        }
                        processed.fetch_add(count, Ordering::Relaxed);
                    }));
                }
            }
            let averager = this.averager_active().then(|| {
                let (done, passes) = (&done, &passes);
                s.spawn(move || {
                    let pause = match this.plan.sync {
                        SyncPolicy::IntervalMs(ms) => Some(Duration::from_millis(ms)),
                        _ => None,
                    };
                    while !done.load(Ordering::Acquire) {
                        average_replicas(&this.replicas);
                        passes.fetch_add(1, Ordering::Relaxed);
                        match pause {
                            Some(p) => std::thread::sleep(p),
                            None => std::thread::yield_now(),
                        }
                    }
                })
            });
            let mut panicked = false;
            for h in handles {
                panicked |= h.join().is_err();
            }
            done.store(true, Ordering::Release);
            if let Some(a) = averager {
                panicked |= a.join().is_err();
            }
            panicked
        });
        if panicked {
            return Err(Error::WorkerPanic { epoch: e + 1 });
        }
        average_replicas(&self.replicas);
        let elapsed = t0.elapsed();
        self.epoch += 1;

        let x = self.model();
        if x.iter().any(|v| !v.is_finite()) {
            return Err(Error::NonFinite { epoch: self.epoch });
        }
        let (loss, grad_norm) = self.evaluate(&x)?;
        if !loss.is_finite() {
            return Err(Error::NonFinite { epoch: self.epoch });
        }
        let ms = elapsed.as_secs_f64() * 1e3;
        Ok(EpochStats {
            epoch: self.epoch,
            wall_ms: ms,
            epoch_ms: ms,
            loss,
            grad_norm,
            processed: processed.into_inner(),
            averaging_passes: passes.into_inner(),
        })
    }

    /// Run epochs until a stop condition holds. The trace starts with the
    /// initial model at epoch 0.
    pub fn train(&mut self, stop: &StopRule) -> Result<TrainResult> {
        if stop.warmup {
            self.clone().run_epoch()?;
        }
        let mut epochs = vec![self.current_stats()?];
        let mut total_ms = 0.0;
        let started = Instant::now();
        let reason = loop {
            let last = epochs.last().map_or(f64::INFINITY, |s| s.loss);
            if stop.loss_target.is_some_and(|t| last <= t) {
                break StopReason::LossTarget;
            }
            if stop.timeout.is_some_and(|t| started.elapsed() >= t) {
                break StopReason::Timeout;
            }
            if epochs.len() > stop.max_epochs {
                break StopReason::MaxEpochs;
            }
            let mut s = self.run_epoch()?;
            total_ms += s.epoch_ms;
            s.wall_ms = total_ms;
            epochs.push(s);
        };
        Ok(TrainResult {
            plan: self.plan.echo(),
            task: self.spec.kind(),
            hyper: self.spec.hyper(),
            stop: reason,
            epochs,
            model: self.model(),
        })
    }
}

/// Bind `plan` to the data and train it.
pub fn train(
    plan: &ExecutionPlan,
    spec: &ModelSpec,
    m: &DataMatrix,
    stop: &StopRule,
) -> Result<TrainResult> {
    Engine::new(plan.clone(), spec, m)?.train(stop)
}

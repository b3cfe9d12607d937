use serde::{Deserialize, Serialize};

use crate::engine::{EpochStats, PlanEcho, StopReason};
use crate::error::Result;
use crate::models::{Hyper, TaskKind};

/// Scale below which an optimal loss counts as zero, relative to the
/// starting loss.
pub const ZERO_OPT_FLOOR: f64 = 1e-6;

/// Is `loss` within `frac` of `opt`? A zero optimum is measured against
/// `ZERO_OPT_FLOOR * initial` instead.
pub fn within(loss: f64, opt: f64, frac: f64, initial: f64) -> bool {
    let scale = opt.abs().max(ZERO_OPT_FLOOR * initial.abs());
    loss - opt <= frac * scale
}

/// What a trace needs to re-run its configuration.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RunEcho {
    pub plan: PlanEcho,
    pub task: TaskKind,
    pub hyper: Hyper,
}

impl RunEcho {
    /// Read the echo from a JSON trace or from the `# ` header line of a CSV
    /// trace.
    pub fn parse(text: &str) -> Result<RunEcho> {
        let json = match text.strip_prefix("# ") {
            Some(rest) => rest.lines().next().unwrap_or(""),
            None => text,
        };
        serde_json::from_str(json)
            .map_err(|e| crate::Error::InvalidArgument(format!("bad trace echo: {e}")))
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrainResult {
    pub plan: PlanEcho,
    pub task: TaskKind,
    pub hyper: Hyper,
    pub stop: StopReason,
    /// Epoch 0 is the initial model.
    pub epochs: Vec<EpochStats>,
    #[serde(skip)]
    pub model: Vec<f64>,
}

impl TrainResult {
    pub fn initial_loss(&self) -> f64 {
        self.epochs[0].loss
    }

    pub fn final_loss(&self) -> f64 {
        self.epochs.last().map_or(f64::NAN, |e| e.loss)
    }

    pub fn best_loss(&self) -> f64 {
        self.epochs
            .iter()
            .map(|e| e.loss)
            .fold(f64::INFINITY, f64::min)
    }

    /// First epoch whose loss is within `frac` of `opt`.
    pub fn epochs_to_within(&self, opt: f64, frac: f64) -> Option<usize> {
        let init = self.initial_loss();
        self.epochs
            .iter()
            .find(|e| within(e.loss, opt, frac, init))
            .map(|e| e.epoch)
    }

    /// Cumulative milliseconds until the loss is within `frac` of `opt`.
    pub fn time_to_within(&self, opt: f64, frac: f64) -> Option<f64> {
        let init = self.initial_loss();
        self.epochs
            .iter()
            .find(|e| within(e.loss, opt, frac, init))
            .map(|e| e.wall_ms)
    }

    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(self).expect("trace serializes"))
    }

    pub fn from_json(s: &str) -> Result<Self> {
        serde_json::from_str(s)
            .map_err(|e| crate::Error::InvalidArgument(format!("bad trace: {e}")))
    }

    pub fn echo(&self) -> RunEcho {
        RunEcho {
            plan: self.plan,
            task: self.task,
            hyper: self.hyper,
        }
    }

    /// CSV trace; the first line is `# ` followed by the JSON run echo.
    pub fn to_csv(&self) -> String {
        let echo = serde_json::to_string(&self.echo()).expect("echo serializes");
        let mut out = format!("# {echo}\nepoch,wall_ms,loss,grad_norm\n");
        for e in &self.epochs {
            out.push_str(&format!(
                "{},{},{},{}\n",
                e.epoch, e.wall_ms, e.loss, e.grad_norm
            ));
        }
        out
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn relative_and_floor() {
        assert!(within(1.009, 1.0, 0.01, 100.0));
        assert!(!within(1.02, 1.0, 0.01, 100.0));
        assert!(within(1e-9, 0.0, 0.01, 100.0));
        assert!(!within(1e-5, 0.0, 0.01, 100.0));
    }

    #[test]
    fn echo_round_trips_through_both_formats() {
        use crate::engine::{
            AccessMethod, DataReplication, MachineTopology, ModelReplication, SyncPolicy,
        };
        let t = TrainResult {
            plan: PlanEcho {
                access: AccessMethod::ColWise,
                model_rep: ModelReplication::PerNode,
                data_rep: DataReplication::Importance { epsilon: 0.25 },
                sync: SyncPolicy::IntervalMs(5),
                topology: MachineTopology::single(),
                alpha: 7.5,
                seed: 42,
            },
            task: TaskKind::Lr,
            hyper: Hyper::new(0.1).with_lambda(0.01).with_decay(0.9),
            stop: StopReason::MaxEpochs,
            epochs: Vec::new(),
            model: Vec::new(),
        };
        assert_eq!(RunEcho::parse(&t.to_csv()).unwrap(), t.echo());
        assert_eq!(RunEcho::parse(&t.to_json().unwrap()).unwrap(), t.echo());
        assert!(RunEcho::parse("epoch,wall_ms\n").is_err());
    }
}

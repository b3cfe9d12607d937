//! Command-line harness. All parallel work happens in `engine` and `gibbs`;
//! this module resolves configuration and writes results.

use std::fmt::Write as _;
use std::path::{Path, PathBuf};
use std::time::Duration;

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde::Serialize;

use crate::config::{ConfigStore, DEFAULT_CONFIG};
use crate::engine::{
    self, AccessMethod, DataReplication, Engine, MachineTopology, ModelReplication, Overrides,
    Pinning, RunEcho, StopRule, SumStrategy, SyncPolicy,
};
use crate::error::{Error, Result};
use crate::gibbs::{self, ChainOptions, ChainReport, FactorGraph};
use crate::models::{graph_task, make_spec, ColumnFamily, Hyper, ModelSpec, TaskKind};
use crate::optimizer;
use crate::storage::{self, DataMatrix, Format, Layout};
use crate::synth::{Generated, Recipe};

/// Loss gaps reported in training summaries.
pub const GAPS: [f64; 4] = [1.0, 0.5, 0.1, 0.01];
pub const DEFAULT_FRACTIONS: [f64; 9] = [0.01, 0.02, 0.05, 0.1, 0.2, 0.3, 0.5, 0.7, 1.0];

#[derive(Debug, Parser)]
#[command(
    name = "memsa",
    version,
    about = "In-memory statistical analytics engine"
)]
pub struct Cli {
    #[command(flatten)]
    pub global: Global,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum OutFormat {
    Csv,
    Json,
}

#[derive(Debug, Args)]
pub struct Global {
    /// Logical locality domains.
    #[arg(long, global = true)]
    pub nodes: Option<usize>,
    #[arg(long, global = true)]
    pub cores_per_node: Option<usize>,
    /// Worker placement: os or numa.
    #[arg(long, global = true)]
    pub pin: Option<String>,
    #[arg(long, global = true)]
    pub seed: Option<u64>,
    /// Write/read cost factor of the cost model.
    #[arg(long, global = true)]
    pub alpha: Option<f64>,
    /// Output file or directory.
    #[arg(long, global = true)]
    pub out: Option<PathBuf>,
    #[arg(long, global = true, value_enum)]
    pub format: Option<OutFormat>,
    #[arg(long, global = true, default_value = DEFAULT_CONFIG)]
    pub config: PathBuf,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Train over a step-size grid and report time to reach the optimum.
    Train(TrainArgs),
    /// Time row-wise and column-to-row epochs while thinning rows.
    SweepCrossover(SweepArgs),
    /// Measure the write/read cost factor and store it in the config file.
    Calibrate(CalibrateArgs),
    /// Run Gibbs chains on a factor graph.
    Gibbs(GibbsArgs),
    /// Parallel-sum throughput under both accumulator strategies.
    BenchSum(BenchSumArgs),
    /// Generate a synthetic dataset: diag-ls N | gaussian N d density |
    /// ising-chain V coupling | two-cluster-skew N d.
    Gen(GenArgs),
}

#[derive(Debug, Args, Clone)]
pub struct DataArgs {
    /// svmlight text or binary cache file.
    #[arg(long)]
    pub data: Option<PathBuf>,
    /// Synthetic recipe, e.g. "diag-ls 100".
    #[arg(long)]
    pub recipe: Option<String>,
    /// Edge list for graph tasks (lp, qp).
    #[arg(long)]
    pub edges: Option<PathBuf>,
    #[arg(long, default_value_t = 0.1)]
    pub anchor_fraction: f64,
}

#[derive(Debug, Args)]
pub struct TrainArgs {
    #[arg(long)]
    pub task: Option<String>,
    #[command(flatten)]
    pub data: DataArgs,
    #[arg(long)]
    pub force_access: Option<String>,
    #[arg(long)]
    pub force_model_rep: Option<String>,
    /// sharding, fullreplication or importance:<epsilon>.
    #[arg(long)]
    pub force_data_rep: Option<String>,
    /// continuous, per-epoch, or an interval in milliseconds.
    #[arg(long)]
    pub sync: Option<String>,
    /// Comma-separated step sizes.
    #[arg(long, value_delimiter = ',')]
    pub steps: Option<Vec<f64>>,
    #[arg(long, default_value_t = 0.0)]
    pub lambda: f64,
    #[arg(long, default_value_t = 0.95)]
    pub decay: f64,
    #[arg(long, default_value_t = 100)]
    pub max_epochs: usize,
    #[arg(long)]
    pub loss_target: Option<f64>,
    #[arg(long)]
    pub timeout_secs: Option<f64>,
    /// Skip the untimed warm-up epoch.
    #[arg(long)]
    pub no_warmup: bool,
    /// Replay the configuration recorded in a CSV or JSON trace.
    #[arg(long)]
    pub from_echo: Option<PathBuf>,
    /// Epoch budget for computing a non-closed-form optimum.
    #[arg(long, default_value_t = 300)]
    pub reference_epochs: usize,
}

#[derive(Debug, Args)]
pub struct SweepArgs {
    #[arg(long, default_value = "ls")]
    pub task: String,
    #[command(flatten)]
    pub data: DataArgs,
    #[arg(long, value_delimiter = ',')]
    pub fractions: Option<Vec<f64>>,
    /// Small enough that the timed epochs stay finite on dense rows.
    #[arg(long, default_value_t = 1e-4)]
    pub step: f64,
    /// Timed epochs per point; the median is reported.
    #[arg(long, default_value_t = 1)]
    pub repeats: usize,
}

#[derive(Debug, Args)]
pub struct CalibrateArgs {
    #[arg(long, default_value_t = 1 << 22)]
    pub trial_size: usize,
}

#[derive(Debug, Args)]
pub struct GibbsArgs {
    #[arg(long)]
    pub graph: Option<PathBuf>,
    /// Synthetic recipe, e.g. "ising-chain 12 0.5".
    #[arg(long)]
    pub recipe: Option<String>,
    #[arg(long, default_value_t = 10_000)]
    pub sweeps: usize,
    #[arg(long, default_value_t = 1_000)]
    pub burn_in: usize,
    #[arg(long, default_value = "pernode")]
    pub replication: String,
    /// Run both PerNode and PerMachine and report both throughputs.
    #[arg(long)]
    pub compare: bool,
    /// Also enumerate exact marginals and report the largest L1 gap.
    #[arg(long)]
    pub exact: bool,
    /// Write every post-burn-in sample as CSV `chain,sweep,var,value`.
    #[arg(long)]
    pub samples: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct BenchSumArgs {
    /// Number of doubles to sum.
    #[arg(long, default_value_t = 1 << 24)]
    pub size: usize,
}

#[derive(Debug, Args)]
pub struct GenArgs {
    #[arg(required = true, num_args = 1..)]
    pub recipe: Vec<String>,
    /// Write matrices in the binary cache format instead of svmlight.
    #[arg(long)]
    pub binary: bool,
}

/// Global settings after merging flags over the config file.
#[derive(Debug, Clone)]
pub struct Resolved {
    pub topology: MachineTopology,
    pub seed: Option<u64>,
    pub alpha: f64,
    pub out: Option<PathBuf>,
    pub format: OutFormat,
    pub config: ConfigStore,
}

impl Resolved {
    pub fn from_global(g: &Global) -> Result<Self> {
        let config = ConfigStore::load(&g.config)?;
        let nodes = pick(g.nodes, &config, "nodes")?.unwrap_or(1);
        let cores = pick(g.cores_per_node, &config, "cores_per_node")?.unwrap_or(1);
        let pin = match &g.pin {
            Some(p) => p.parse()?,
            None => config.get_parsed::<Pinning>("pin")?.unwrap_or(Pinning::Os),
        };
        let format = match g.format {
            Some(f) => f,
            None => match config.get("format") {
                None | Some("csv") => OutFormat::Csv,
                Some("json") => OutFormat::Json,
                Some(other) => {
                    return Err(Error::InvalidArgument(format!(
                        "bad format {other:?} in config"
                    )))
                }
            },
        };
        let alpha = pick(g.alpha, &config, "alpha")?.unwrap_or(engine::DEFAULT_ALPHA);
        if !(alpha > 0.0 && alpha.is_finite()) {
            return Err(Error::InvalidArgument(format!(
                "alpha must be positive, got {alpha}"
            )));
        }
        Ok(Resolved {
            topology: MachineTopology::new(nodes, cores, pin)?,
            seed: pick(g.seed, &config, "seed")?,
            alpha,
            out: g
                .out
                .clone()
                .or_else(|| config.get("out").map(PathBuf::from)),
            format,
            config,
        })
    }

    pub fn seed(&self) -> Result<u64> {
        self.seed.ok_or_else(|| {
            Error::InvalidArgument(
                "a seed is required: pass --seed or set `seed` in the config".into(),
            )
        })
    }
}

fn pick<T: std::str::FromStr>(
    flag: Option<T>,
    config: &ConfigStore,
    key: &str,
) -> Result<Option<T>> {
    match flag {
        Some(v) => Ok(Some(v)),
        None => config.get_parsed(key),
    }
}

/// Files to write once a command has fully succeeded.
#[derive(Debug, Default)]
pub struct Outputs {
    pub files: Vec<(PathBuf, Vec<u8>)>,
    pub stdout: String,
}

impl Outputs {
    fn file(&mut self, path: PathBuf, body: impl Into<Vec<u8>>) {
        self.files.push((path, body.into()));
    }

    /// Write every file, then print stdout.
    pub fn commit(self) -> Result<()> {
        for (path, body) in &self.files {
            if let Some(dir) = path.parent().filter(|d| !d.as_os_str().is_empty()) {
                std::fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
            }
            std::fs::write(path, body).map_err(|e| Error::io(path, e))?;
        }
        print!("{}", self.stdout);
        Ok(())
    }
}

/// Exit status for a finished command: 0, 2 for usage or data errors, 3 for
/// numerical failures.
pub fn exit_code(r: &Result<()>) -> i32 {
    match r {
        Ok(()) => 0,
        Err(e) if e.is_numerical() => 3,
        Err(_) => 2,
    }
}

/// Run a parsed command line.
pub fn run(cli: Cli) -> Result<()> {
    let mut r = Resolved::from_global(&cli.global)?;
    let outputs = match &cli.command {
        Command::Train(a) => cmd_train(&mut r, a)?,
        Command::SweepCrossover(a) => cmd_sweep_crossover(&r, a)?,
        Command::Calibrate(a) => cmd_calibrate(&mut r, a)?,
        Command::Gibbs(a) => cmd_gibbs(&r, a)?,
        Command::BenchSum(a) => cmd_bench_sum(&r, a)?,
        Command::Gen(a) => cmd_gen(&r, a)?,
    };
    outputs.commit()
}

fn parse_task(s: &str) -> Result<TaskKind> {
    s.parse()
}

fn parse_sync(s: &str) -> Result<SyncPolicy> {
    match s.to_ascii_lowercase().replace(['-', '_'], "").as_str() {
        "continuous" => Ok(SyncPolicy::Continuous),
        "perepoch" | "epoch" => Ok(SyncPolicy::PerEpoch),
        other => other
            .trim_end_matches("ms")
            .parse()
            .map(SyncPolicy::IntervalMs)
            .map_err(|_| Error::InvalidArgument(format!("bad sync policy {s:?}"))),
    }
}

/// The dataset a command runs on, with the spec built for `kind`.
pub fn load_task(
    kind: TaskKind,
    data: &DataArgs,
    hyper: Hyper,
    seed: u64,
) -> Result<(ModelSpec, DataMatrix)> {
    if kind.is_graph() {
        let path = data.edges.as_ref().ok_or_else(|| {
            Error::InvalidArgument(format!("{kind} needs an edge list (--edges)"))
        })?;
        let g = storage::load_edge_list(path)?;
        return graph_task(kind, &g, data.anchor_fraction, hyper, seed);
    }
    let m = match (&data.data, &data.recipe) {
        (Some(p), None) => storage::load_matrix(p)?,
        (None, Some(r)) => Recipe::parse_str(r)?.matrix(seed)?,
        (Some(_), Some(_)) => {
            return Err(Error::InvalidArgument(
                "give either --data or --recipe, not both".into(),
            ))
        }
        (None, None) => {
            return Err(Error::InvalidArgument(
                "no dataset: pass --data or --recipe".into(),
            ))
        }
    };
    let spec = make_spec(kind, m.n_cols(), hyper)?;
    Ok((spec, m))
}

/// Optimal loss for `spec` on `m`, cached in the config under
/// `optimal.<task>.<fingerprint>`.
pub fn cached_optimum(
    config: &mut ConfigStore,
    spec: &ModelSpec,
    m: &DataMatrix,
    epochs: usize,
    seed: u64,
) -> Result<f64> {
    let key = format!(
        "optimal.{}.{:016x}",
        spec.kind().name(),
        engine::fingerprint(spec, m)
    );
    if let Some(v) = config.get_parsed::<f64>(&key)? {
        return Ok(v);
    }
    let opt = engine::optimal_loss(spec, m, epochs, seed)?;
    config.set(&key, format!("{opt:?}"));
    Ok(opt)
}

#[derive(Debug, Serialize)]
struct GridRow {
    step: f64,
    status: String,
    final_loss: Option<f64>,
    epochs: Option<usize>,
    ms_to_within: Vec<Option<f64>>,
}

fn fmt_opt(v: Option<f64>) -> String {
    v.map_or_else(|| "-".into(), |x| format!("{x:.3}"))
}

pub fn cmd_train(r: &mut Resolved, a: &TrainArgs) -> Result<Outputs> {
    let echo = match &a.from_echo {
        Some(p) => {
            let text = std::fs::read_to_string(p).map_err(|e| Error::io(p, e))?;
            Some(RunEcho::parse(&text)?)
        }
        None => None,
    };
    let (kind, seed, topology, hypers) = match &echo {
        Some(t) => (t.task, t.plan.seed, t.plan.topology, vec![t.hyper]),
        None => {
            let kind = parse_task(a.task.as_deref().ok_or_else(|| {
                Error::InvalidArgument("--task is required unless --from-echo is given".into())
            })?)?;
            let steps = a
                .steps
                .clone()
                .unwrap_or_else(|| engine::STEP_GRID.to_vec());
            if steps.is_empty() {
                return Err(Error::InvalidArgument("empty step grid".into()));
            }
            let hypers = steps
                .iter()
                .map(|&s| Hyper::new(s).with_lambda(a.lambda).with_decay(a.decay))
                .collect();
            (kind, r.seed()?, r.topology, hypers)
        }
    };
    let (spec0, m) = load_task(kind, &a.data, hypers[0], seed)?;
    let overrides = match &echo {
        Some(t) => Overrides::from_echo(&t.plan),
        None => Overrides {
            access: a.force_access.as_deref().map(str::parse).transpose()?,
            model_rep: a.force_model_rep.as_deref().map(str::parse).transpose()?,
            data_rep: a.force_data_rep.as_deref().map(str::parse).transpose()?,
            sync: a.sync.as_deref().map(parse_sync).transpose()?,
            alpha: Some(r.alpha),
            memory_cap: None,
        },
    };
    let mut stop = StopRule::epochs(a.max_epochs);
    stop.warmup = !a.no_warmup;
    stop.loss_target = a.loss_target;
    stop.timeout = a.timeout_secs.map(Duration::from_secs_f64);

    let opt = cached_optimum(&mut r.config, &spec0, &m, a.reference_epochs, seed)?;
    let out_dir = r.out.clone().unwrap_or_else(|| PathBuf::from("memsa-out"));
    let mut out = Outputs::default();
    let mut rows = Vec::new();
    let mut plan_echo = None;
    for (k, hyper) in hypers.iter().enumerate() {
        let spec = spec0.with_hyper(*hyper)?;
        let plan = engine::plan(&spec, &m, topology, overrides, seed)?;
        plan_echo.get_or_insert_with(|| plan.echo());
        match Engine::new(plan, &spec, &m)?.train(&stop) {
            Ok(t) => {
                let (name, body) = match r.format {
                    OutFormat::Csv => (format!("train_step{k}.csv"), t.to_csv()),
                    OutFormat::Json => (format!("train_step{k}.json"), t.to_json()?),
                };
                out.file(out_dir.join(name), body);
                rows.push(GridRow {
                    step: hyper.step,
                    status: "ok".into(),
                    final_loss: Some(t.final_loss()),
                    epochs: Some(t.epochs.len() - 1),
                    ms_to_within: GAPS.iter().map(|&g| t.time_to_within(opt, g)).collect(),
                });
            }
            Err(e) if e.is_numerical() => rows.push(GridRow {
                step: hyper.step,
                status: "diverged".into(),
                final_loss: None,
                epochs: None,
                ms_to_within: vec![None; GAPS.len()],
            }),
            Err(e) => return Err(e),
        }
    }
    if rows.iter().all(|g| g.final_loss.is_none()) {
        return Err(Error::NonFinite { epoch: 0 });
    }
    let best = rows
        .iter()
        .filter(|g| g.final_loss.is_some())
        .min_by(|x, y| {
            let key = |g: &GridRow| {
                (
                    g.ms_to_within[3].unwrap_or(f64::INFINITY),
                    g.final_loss.unwrap(),
                )
            };
            key(x)
                .partial_cmp(&key(y))
                .unwrap_or(std::cmp::Ordering::Equal)
        })
        .map(|g| g.step);

    let mut summary = String::from(
        "step,status,final_loss,epochs,ms_to_100pct,ms_to_50pct,ms_to_10pct,ms_to_1pct\n",
    );
    for g in &rows {
        let _ = writeln!(
            summary,
            "{},{},{},{},{}",
            g.step,
            g.status,
            g.final_loss.map_or("-".into(), |l| format!("{l:e}")),
            g.epochs.map_or("-".into(), |e| e.to_string()),
            g.ms_to_within
                .iter()
                .map(|&v| fmt_opt(v))
                .collect::<Vec<_>>()
                .join(","),
        );
    }
    out.file(out_dir.join("summary.csv"), summary.clone());
    let echo_json = serde_json::to_string(&plan_echo).expect("plan serializes");
    out.stdout = format!(
        "plan {echo_json}\noptimal_loss {opt:e}\n{summary}best_step {}\n",
        best.map_or("-".into(), |s| s.to_string())
    );
    r.config.save()?;
    Ok(out)
}

/// Median of one or more timed epochs after a warm-up epoch.
fn time_epoch(
    spec: &ModelSpec,
    m: &DataMatrix,
    access: AccessMethod,
    topology: MachineTopology,
    repeats: usize,
    seed: u64,
) -> Result<f64> {
    let o = Overrides {
        access: Some(access),
        model_rep: Some(ModelReplication::PerMachine),
        data_rep: Some(DataReplication::Sharding),
        ..Overrides::default()
    };
    let mut e = Engine::new(engine::plan(spec, m, topology, o, seed)?, spec, m)?;
    e.run_epoch()?;
    let mut ms: Vec<f64> = (0..repeats.max(1))
        .map(|_| e.run_epoch().map(|s| s.epoch_ms))
        .collect::<Result<_>>()?;
    ms.sort_by(f64::total_cmp);
    Ok(ms[ms.len() / 2])
}

#[derive(Debug, Clone, Serialize)]
pub struct SweepRow {
    pub keep_fraction: f64,
    pub n: usize,
    pub d: usize,
    pub sum_ni: u64,
    pub sum_ni_sq: u64,
    pub alpha: f64,
    pub cost_ratio: f64,
    pub row_epoch_ms: f64,
    pub col_epoch_ms: f64,
}

/// Row-wise against column-to-row over thinned copies of `m`. Column-to-row
/// reads every row touching a column, which is the column cost the cost model
/// prices; the cached column kernel reads only the column itself.
pub fn crossover_sweep(
    spec: &ModelSpec,
    m: &DataMatrix,
    fractions: &[f64],
    alpha: f64,
    topology: MachineTopology,
    repeats: usize,
    seed: u64,
) -> Result<Vec<SweepRow>> {
    if !spec.kernels().row {
        return Err(Error::Unsupported(format!(
            "{} has no row kernel to compare",
            spec.kind()
        )));
    }
    let spec = &spec.clone().with_column_family(ColumnFamily::Ctr)?;
    let base = m.to_layout(Layout::RowMajor, Format::Sparse)?;
    fractions
        .iter()
        .map(|&f| {
            let sub = base.subsample_rows(f, seed)?;
            let s = sub.stats();
            Ok(SweepRow {
                keep_fraction: f,
                n: s.n,
                d: s.d,
                sum_ni: s.sum_ni,
                sum_ni_sq: s.sum_ni_sq,
                alpha,
                cost_ratio: optimizer::cost_ratio(&s, alpha),
                row_epoch_ms: time_epoch(
                    spec,
                    &sub,
                    AccessMethod::RowWise,
                    topology,
                    repeats,
                    seed,
                )?,
                col_epoch_ms: time_epoch(
                    spec,
                    &sub,
                    AccessMethod::ColToRow,
                    topology,
                    repeats,
                    seed,
                )?,
            })
        })
        .collect()
}

pub fn sweep_csv(rows: &[SweepRow]) -> String {
    let mut s = String::from(
        "keep_fraction,n,d,sum_ni,sum_ni_sq,alpha,cost_ratio,row_epoch_ms,col_epoch_ms\n",
    );
    for r in rows {
        let _ = writeln!(
            s,
            "{},{},{},{},{},{},{},{},{}",
            r.keep_fraction,
            r.n,
            r.d,
            r.sum_ni,
            r.sum_ni_sq,
            r.alpha,
            r.cost_ratio,
            r.row_epoch_ms,
            r.col_epoch_ms
        );
    }
    s
}

pub fn cmd_sweep_crossover(r: &Resolved, a: &SweepArgs) -> Result<Outputs> {
    let seed = r.seed()?;
    let kind = parse_task(&a.task)?;
    if kind.is_graph() {
        return Err(Error::Unsupported(
            "the crossover sweep needs a task with a row kernel".into(),
        ));
    }
    let (spec, m) = load_task(kind, &a.data, Hyper::new(a.step).with_decay(1.0), seed)?;
    let fractions = a
        .fractions
        .clone()
        .unwrap_or_else(|| DEFAULT_FRACTIONS.to_vec());
    let rows = crossover_sweep(&spec, &m, &fractions, r.alpha, r.topology, a.repeats, seed)?;
    let body = match r.format {
        OutFormat::Csv => sweep_csv(&rows),
        OutFormat::Json => serde_json::to_string_pretty(&rows).expect("rows serialize") + "\n",
    };
    let mut out = Outputs::default();
    match &r.out {
        Some(p) => out.file(p.clone(), body),
        None => out.stdout = body,
    }
    Ok(out)
}

pub fn cmd_calibrate(r: &mut Resolved, a: &CalibrateArgs) -> Result<Outputs> {
    let alpha = optimizer::calibrate_alpha(&r.topology, a.trial_size, r.seed()?)?;
    r.config.set("alpha", format!("{alpha:.4}"));
    r.config.save()?;
    Ok(Outputs {
        files: Vec::new(),
        stdout: format!(
            "alpha {alpha:.4}\nstored in {}\n",
            r.config.path().display()
        ),
    })
}

#[derive(Debug, Serialize)]
struct GibbsOutput {
    runs: Vec<ChainReport>,
    exact_max_l1: Option<f64>,
}

fn load_graph(a: &GibbsArgs, seed: u64) -> Result<FactorGraph> {
    match (&a.graph, &a.recipe) {
        (Some(p), None) => gibbs::load_factor_graph(p),
        (None, Some(rc)) => match Recipe::parse_str(rc)?.generate(seed)? {
            Generated::Graph(g) => Ok(g),
            Generated::Matrix(_) => Err(Error::InvalidArgument(
                "recipe does not produce a factor graph".into(),
            )),
        },
        _ => Err(Error::InvalidArgument(
            "give exactly one of --graph or --recipe".into(),
        )),
    }
}

pub fn cmd_gibbs(r: &Resolved, a: &GibbsArgs) -> Result<Outputs> {
    let seed = r.seed()?;
    let g = load_graph(a, seed)?;
    let reps: Vec<ModelReplication> = if a.compare {
        vec![ModelReplication::PerNode, ModelReplication::PerMachine]
    } else {
        vec![a.replication.parse()?]
    };
    let mut opts = ChainOptions::new(a.sweeps, a.burn_in);
    opts.keep_samples = a.samples.is_some();
    let runs: Vec<ChainReport> = reps
        .iter()
        .map(|&rep| gibbs::run_chains(&g, rep, &r.topology, opts, seed))
        .collect::<Result<_>>()?;
    let exact_max_l1 = if a.exact {
        let e = gibbs::exact_marginals(&g)?;
        Some(
            runs.iter()
                .map(|run| gibbs::max_l1(&run.marginals, &e))
                .fold(0.0, f64::max),
        )
    } else {
        None
    };
    let mut out = Outputs::default();
    if let Some(p) = &a.samples {
        let mut csv = String::from("replication,chain,sweep,var,value\n");
        for run in &runs {
            for s in &run.records {
                let _ = writeln!(
                    csv,
                    "{:?},{},{},{},{}",
                    run.replication, s.chain, s.sweep, s.var, s.value
                );
            }
        }
        out.file(p.clone(), csv);
    }
    let mut text = String::new();
    for run in &runs {
        let _ = writeln!(
            text,
            "# {:?}: {} chains, {} samples, {:.1} samples/sec",
            run.replication, run.chains, run.samples, run.samples_per_sec
        );
    }
    if let Some(l1) = exact_max_l1 {
        let _ = writeln!(text, "# max L1 to exact marginals: {l1:.5}");
    }
    let json = serde_json::to_string_pretty(&GibbsOutput { runs, exact_max_l1 })
        .expect("report serializes");
    match &r.out {
        Some(p) => {
            out.file(p.clone(), json + "\n");
            out.stdout = text;
        }
        None => out.stdout = format!("{text}{json}\n"),
    }
    Ok(out)
}

pub fn cmd_bench_sum(r: &Resolved, a: &BenchSumArgs) -> Result<Outputs> {
    let values: Vec<f64> = (0..a.size).map(|i| (i % 1024) as f64).collect();
    let rows: Vec<(SumStrategy, engine::SumReport)> =
        [SumStrategy::SharedSingle, SumStrategy::PerNodeAccumulators]
            .into_iter()
            .map(|s| (s, engine::parallel_sum(&values, &r.topology, s)))
            .collect();
    let body = match r.format {
        OutFormat::Csv => {
            let mut s = String::from("strategy,sum,seconds,gb_per_s\n");
            for (st, rep) in &rows {
                let _ = writeln!(s, "{st:?},{},{},{}", rep.sum, rep.seconds, rep.gb_per_s);
            }
            s
        }
        OutFormat::Json => {
            let v: Vec<serde_json::Value> = rows
                .iter()
                .map(|(st, rep)| serde_json::json!({"strategy": format!("{st:?}"), "sum": rep.sum, "seconds": rep.seconds, "gb_per_s": rep.gb_per_s}))
                .collect();
            serde_json::to_string_pretty(&v).expect("rows serialize") + "\n"
        }
    };
    let mut out = Outputs::default();
    match &r.out {
        Some(p) => out.file(p.clone(), body),
        None => out.stdout = body,
    }
    Ok(out)
}

pub fn cmd_gen(r: &Resolved, a: &GenArgs) -> Result<Outputs> {
    let seed = r.seed()?;
    let body = match Recipe::parse(&a.recipe)?.generate(seed)? {
        Generated::Matrix(m) if a.binary => storage::encode_cache(&m),
        Generated::Matrix(m) => {
            let mut b = Vec::new();
            storage::write_svmlight(&m, &mut b).map_err(|e| Error::io(Path::new("<buffer>"), e))?;
            b
        }
        Generated::Graph(g) => {
            let mut b = Vec::new();
            gibbs::write_factor_graph(&g, &mut b)
                .map_err(|e| Error::io(Path::new("<buffer>"), e))?;
            b
        }
    };
    let mut out = Outputs::default();
    match &r.out {
        Some(p) => out.file(p.clone(), body),
        None => {
            out.stdout = String::from_utf8(body)
                .map_err(|_| Error::InvalidArgument("binary output needs --out".into()))?
        }
    }
    Ok(out)
}

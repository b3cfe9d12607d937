//! C interface to the memsa engine.
//!
//! Every function returns an `MsStatus` code and writes results through out
//! pointers. On failure the message is kept per thread and can be read with
//! `ms_last_error`. Handles are opaque and must be released with the matching
//! `*_free` function.

use std::cell::RefCell;
use std::ffi::{c_char, CStr, CString};
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::path::PathBuf;
use std::ptr;

use memsa::engine::{
    self, AccessMethod, DataReplication, MachineTopology, ModelReplication, Overrides, Pinning,
    StopRule, TrainResult,
};
use memsa::gibbs::{self, ChainOptions, FactorGraph};
use memsa::models::{self, graph_task, make_spec, Hyper, ModelSpec, TaskKind};
use memsa::storage::{self, DataMatrix, Format, Layout};
use memsa::synth::Recipe;
use memsa::{optimizer, Error};

/// Status codes returned by every `ms_*` function.
#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum MsStatus {
    Ok = 0,
    NullPointer = 1,
    InvalidArgument = 2,
    Io = 3,
    Parse = 4,
    Numerical = 5,
    Unsupported = 6,
    MemoryCap = 7,
    Panic = 8,
}

#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum MsTask {
    Svm = 0,
    Lr = 1,
    Ls = 2,
    Lp = 3,
    Qp = 4,
}

/// Access method codes; `Auto` lets the cost model decide.
#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum MsAccess {
    Auto = -1,
    RowWise = 0,
    ColWise = 1,
    ColToRow = 2,
}

#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum MsModelRep {
    Auto = -1,
    PerCore = 0,
    PerNode = 1,
    PerMachine = 2,
}

#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum MsDataRep {
    Auto = -1,
    Sharding = 0,
    FullReplication = 1,
    Importance = 2,
}

/// Training configuration. Start from `ms_train_config_default`. Enum-like
/// fields hold `MsTask`, `MsAccess`, `MsModelRep` and `MsDataRep` codes;
/// unknown codes are rejected.
#[repr(C)]
#[derive(Debug, Clone, Copy)]
pub struct MsTrainConfig {
    pub task: i32,
    pub step: f64,
    pub lambda: f64,
    pub decay: f64,
    pub max_epochs: u32,
    pub nodes: u32,
    pub cores_per_node: u32,
    /// Non-zero pins workers to cores.
    pub pin: i32,
    pub access: i32,
    pub model_rep: i32,
    pub data_rep: i32,
    /// Only read when `data_rep` is `Importance`.
    pub epsilon: f64,
    /// Non-positive means the default write/read cost factor.
    pub alpha: f64,
    pub seed: u64,
}

#[repr(C)]
#[derive(Debug, Clone, Copy)]
pub struct MsGibbsConfig {
    /// An `MsModelRep` code; `Auto` means one chain per node.
    pub replication: i32,
    pub nodes: u32,
    pub cores_per_node: u32,
    pub sweeps: u32,
    pub burn_in: u32,
    pub seed: u64,
}

/// Example matrix, plus anchors when built from an edge list.
pub struct MsMatrix {
    m: DataMatrix,
    anchors: Vec<(usize, f64)>,
    graph_task: Option<TaskKind>,
}

pub struct MsResult {
    r: TrainResult,
}

pub struct MsGraph {
    g: FactorGraph,
}

thread_local! {
    static LAST_ERROR: RefCell<Option<CString>> = const { RefCell::new(None) };
}

fn set_error(msg: String) {
    let c = CString::new(msg.replace('\0', " ")).expect("nul bytes removed");
    LAST_ERROR.with(|e| *e.borrow_mut() = Some(c));
}

fn status_of(e: &Error) -> MsStatus {
    match e {
        Error::Parse { .. } => MsStatus::Parse,
        Error::Io { .. } => MsStatus::Io,
        Error::MemoryCap { .. } => MsStatus::MemoryCap,
        Error::Unsupported(_) => MsStatus::Unsupported,
        e if e.is_numerical() => MsStatus::Numerical,
        _ => MsStatus::InvalidArgument,
    }
}

struct Fail(MsStatus, String);

impl From<Error> for Fail {
    fn from(e: Error) -> Self {
        Fail(status_of(&e), e.to_string())
    }
}

fn null(what: &str) -> Fail {
    Fail(MsStatus::NullPointer, format!("{what} is null"))
}

/// Run `f`, translating errors and panics into status codes.
fn guard(f: impl FnOnce() -> Result<(), Fail>) -> MsStatus {
    match catch_unwind(AssertUnwindSafe(f)) {
        Ok(Ok(())) => MsStatus::Ok,
        Ok(Err(Fail(code, msg))) => {
            set_error(msg);
            code
        }
        Err(_) => {
            set_error("internal panic".into());
            MsStatus::Panic
        }
    }
}

unsafe fn str_arg<'a>(p: *const c_char, what: &str) -> Result<&'a str, Fail> {
    if p.is_null() {
        return Err(null(what));
    }
    CStr::from_ptr(p)
        .to_str()
        .map_err(|_| Fail(MsStatus::InvalidArgument, format!("{what} is not UTF-8")))
}

unsafe fn put<T>(out: *mut *mut T, value: T) {
    *out = Box::into_raw(Box::new(value));
}

unsafe fn free<T>(p: *mut T) {
    if !p.is_null() {
        drop(Box::from_raw(p));
    }
}

fn bad_code(what: &str, code: i32) -> Fail {
    Fail(
        MsStatus::InvalidArgument,
        format!("unknown {what} code {code}"),
    )
}

fn task_kind(code: i32) -> Result<TaskKind, Fail> {
    Ok(match code {
        c if c == MsTask::Svm as i32 => TaskKind::Svm,
        c if c == MsTask::Lr as i32 => TaskKind::Lr,
        c if c == MsTask::Ls as i32 => TaskKind::Ls,
        c if c == MsTask::Lp as i32 => TaskKind::Lp,
        c if c == MsTask::Qp as i32 => TaskKind::Qp,
        c => return Err(bad_code("task", c)),
    })
}

fn access(code: i32) -> Result<Option<AccessMethod>, Fail> {
    Ok(match code {
        c if c == MsAccess::Auto as i32 => None,
        c if c == MsAccess::RowWise as i32 => Some(AccessMethod::RowWise),
        c if c == MsAccess::ColWise as i32 => Some(AccessMethod::ColWise),
        c if c == MsAccess::ColToRow as i32 => Some(AccessMethod::ColToRow),
        c => return Err(bad_code("access method", c)),
    })
}

fn model_rep(code: i32) -> Result<Option<ModelReplication>, Fail> {
    Ok(match code {
        c if c == MsModelRep::Auto as i32 => None,
        c if c == MsModelRep::PerCore as i32 => Some(ModelReplication::PerCore),
        c if c == MsModelRep::PerNode as i32 => Some(ModelReplication::PerNode),
        c if c == MsModelRep::PerMachine as i32 => Some(ModelReplication::PerMachine),
        c => return Err(bad_code("model replication", c)),
    })
}

fn data_rep(code: i32, epsilon: f64) -> Result<Option<DataReplication>, Fail> {
    Ok(match code {
        c if c == MsDataRep::Auto as i32 => None,
        c if c == MsDataRep::Sharding as i32 => Some(DataReplication::Sharding),
        c if c == MsDataRep::FullReplication as i32 => Some(DataReplication::FullReplication),
        c if c == MsDataRep::Importance as i32 => Some(DataReplication::Importance { epsilon }),
        c => return Err(bad_code("data replication", c)),
    })
}

fn topology(nodes: u32, cores: u32, pin: bool) -> Result<MachineTopology, Fail> {
    let pin = if pin { Pinning::Numa } else { Pinning::Os };
    Ok(MachineTopology::new(nodes as usize, cores as usize, pin)?)
}

fn spec_for(h: &MsMatrix, kind: TaskKind, hyper: Hyper) -> Result<ModelSpec, Fail> {
    if kind.is_graph() != h.graph_task.is_some() {
        return Err(Fail(
            MsStatus::InvalidArgument,
            format!("task {kind} does not match how the matrix was built"),
        ));
    }
    let spec = make_spec(kind, h.m.n_cols(), hyper)?;
    Ok(if h.anchors.is_empty() {
        spec
    } else {
        spec.with_anchors(&h.anchors)?
    })
}

/// Message of the last failure on this thread, or null. Valid until the next
/// failing call on the same thread.
#[no_mangle]
pub extern "C" fn ms_last_error() -> *const c_char {
    LAST_ERROR.with(|e| e.borrow().as_ref().map_or(ptr::null(), |c| c.as_ptr()))
}

/// Load an svmlight or binary-cache file.
///
/// # Safety
/// `path` must be a NUL-terminated string and `out` a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn ms_matrix_load(path: *const c_char, out: *mut *mut MsMatrix) -> MsStatus {
    guard(|| {
        let path = str_arg(path, "path")?;
        if out.is_null() {
            return Err(null("out"));
        }
        let m = storage::load_matrix(PathBuf::from(path))?;
        put(
            out,
            MsMatrix {
                m,
                anchors: Vec::new(),
                graph_task: None,
            },
        );
        Ok(())
    })
}

/// Generate a synthetic matrix from a recipe such as `"gaussian 1000 20 0.1"`.
///
/// # Safety
/// `recipe` must be a NUL-terminated string and `out` a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn ms_matrix_generate(
    recipe: *const c_char,
    seed: u64,
    out: *mut *mut MsMatrix,
) -> MsStatus {
    guard(|| {
        let recipe = str_arg(recipe, "recipe")?;
        if out.is_null() {
            return Err(null("out"));
        }
        let m = Recipe::parse_str(recipe)?.matrix(seed)?;
        put(
            out,
            MsMatrix {
                m,
                anchors: Vec::new(),
                graph_task: None,
            },
        );
        Ok(())
    })
}

/// Build a labelled matrix from `nnz` coordinate triplets and `n_rows` labels.
///
/// # Safety
/// `rows`, `cols` and `vals` must point to `nnz` elements, `labels` to
/// `n_rows` elements, and `out` must be valid.
#[no_mangle]
pub unsafe extern "C" fn ms_matrix_from_triplets(
    n_rows: usize,
    n_cols: usize,
    rows: *const usize,
    cols: *const usize,
    vals: *const f64,
    nnz: usize,
    labels: *const f64,
    out: *mut *mut MsMatrix,
) -> MsStatus {
    guard(|| {
        if out.is_null()
            || labels.is_null()
            || (nnz > 0 && (rows.is_null() || cols.is_null() || vals.is_null()))
        {
            return Err(null("argument"));
        }
        let trip: Vec<(usize, usize, f64)> = (0..nnz)
            .map(|k| (*rows.add(k), *cols.add(k), *vals.add(k)))
            .collect();
        let labels = std::slice::from_raw_parts(labels, n_rows).to_vec();
        let m = DataMatrix::from_triplets(n_rows, n_cols, &trip, Layout::RowMajor, Format::Sparse)?
            .with_labels(labels)?;
        put(
            out,
            MsMatrix {
                m,
                anchors: Vec::new(),
                graph_task: None,
            },
        );
        Ok(())
    })
}

/// Build a graph task (`Lp` or `Qp`) from an edge-list file, anchoring a
/// random `anchor_fraction` of vertices.
///
/// # Safety
/// `path` must be a NUL-terminated string and `out` a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn ms_matrix_from_edges(
    path: *const c_char,
    task: i32,
    anchor_fraction: f64,
    seed: u64,
    out: *mut *mut MsMatrix,
) -> MsStatus {
    guard(|| {
        let path = str_arg(path, "path")?;
        if out.is_null() {
            return Err(null("out"));
        }
        let kind = task_kind(task)?;
        let g = storage::load_edge_list(PathBuf::from(path))?;
        let (spec, m) = graph_task(kind, &g, anchor_fraction, Hyper::new(1.0), seed)?;
        let anchors = spec.anchors().collect();
        put(
            out,
            MsMatrix {
                m,
                anchors,
                graph_task: Some(kind),
            },
        );
        Ok(())
    })
}

/// # Safety
/// `m` must be a valid handle; any out pointer may be null.
#[no_mangle]
pub unsafe extern "C" fn ms_matrix_shape(
    m: *const MsMatrix,
    n_rows: *mut usize,
    n_cols: *mut usize,
    nnz: *mut usize,
) -> MsStatus {
    guard(|| {
        let h = m.as_ref().ok_or_else(|| null("matrix"))?;
        if !n_rows.is_null() {
            *n_rows = h.m.n_rows();
        }
        if !n_cols.is_null() {
            *n_cols = h.m.n_cols();
        }
        if !nnz.is_null() {
            *nnz = h.m.nnz();
        }
        Ok(())
    })
}

/// # Safety
/// `m` must be null or a handle from this library, freed at most once.
#[no_mangle]
pub unsafe extern "C" fn ms_matrix_free(m: *mut MsMatrix) {
    free(m)
}

/// Access method the cost model picks for `task` on `m`. `alpha <= 0` uses
/// the default cost factor.
///
/// # Safety
/// `m` and `out` must be valid pointers.
#[no_mangle]
pub unsafe extern "C" fn ms_choose_access(
    m: *const MsMatrix,
    task: i32,
    alpha: f64,
    out: *mut MsAccess,
) -> MsStatus {
    guard(|| {
        let h = m.as_ref().ok_or_else(|| null("matrix"))?;
        if out.is_null() {
            return Err(null("out"));
        }
        let spec = spec_for(h, task_kind(task)?, Hyper::new(1.0))?;
        let alpha = if alpha > 0.0 {
            alpha
        } else {
            engine::DEFAULT_ALPHA
        };
        *out = match optimizer::choose_access_method(&spec, &h.m.stats(), alpha) {
            AccessMethod::RowWise => MsAccess::RowWise,
            AccessMethod::ColWise => MsAccess::ColWise,
            AccessMethod::ColToRow => MsAccess::ColToRow,
        };
        Ok(())
    })
}

/// Defaults: least squares, step 0.01, no regularization, decay 0.95,
/// 100 epochs, one worker, every plan axis automatic, seed 0.
#[no_mangle]
pub extern "C" fn ms_train_config_default() -> MsTrainConfig {
    MsTrainConfig {
        task: MsTask::Ls as i32,
        step: 0.01,
        lambda: 0.0,
        decay: 0.95,
        max_epochs: 100,
        nodes: 1,
        cores_per_node: 1,
        pin: 0,
        access: MsAccess::Auto as i32,
        model_rep: MsModelRep::Auto as i32,
        data_rep: MsDataRep::Auto as i32,
        epsilon: 0.5,
        alpha: 0.0,
        seed: 0,
    }
}

/// Train a model on `m`.
///
/// # Safety
/// `m`, `cfg` and `out` must be valid pointers.
#[no_mangle]
pub unsafe extern "C" fn ms_train(
    m: *const MsMatrix,
    cfg: *const MsTrainConfig,
    out: *mut *mut MsResult,
) -> MsStatus {
    guard(|| {
        let h = m.as_ref().ok_or_else(|| null("matrix"))?;
        let c = cfg.as_ref().ok_or_else(|| null("config"))?;
        if out.is_null() {
            return Err(null("out"));
        }
        let hyper = Hyper::new(c.step).with_lambda(c.lambda).with_decay(c.decay);
        let spec = spec_for(h, task_kind(c.task)?, hyper)?;
        let o = Overrides {
            access: access(c.access)?,
            model_rep: model_rep(c.model_rep)?,
            data_rep: data_rep(c.data_rep, c.epsilon)?,
            alpha: (c.alpha > 0.0).then_some(c.alpha),
            ..Overrides::default()
        };
        let topo = topology(c.nodes, c.cores_per_node, c.pin != 0)?;
        let plan = engine::plan(&spec, &h.m, topo, o, c.seed)?;
        let mut stop = StopRule::epochs(c.max_epochs as usize);
        stop.warmup = false;
        let r = engine::train(&plan, &spec, &h.m, &stop)?;
        put(out, MsResult { r });
        Ok(())
    })
}

/// Number of recorded epochs, counting the initial state as epoch 0.
///
/// # Safety
/// `r` must be a valid handle.
#[no_mangle]
pub unsafe extern "C" fn ms_result_epochs(r: *const MsResult) -> usize {
    r.as_ref().map_or(0, |h| h.r.epochs.len())
}

/// Loss after `epoch` epochs.
///
/// # Safety
/// `r` and `out` must be valid pointers.
#[no_mangle]
pub unsafe extern "C" fn ms_result_loss(
    r: *const MsResult,
    epoch: usize,
    out: *mut f64,
) -> MsStatus {
    guard(|| {
        let h = r.as_ref().ok_or_else(|| null("result"))?;
        if out.is_null() {
            return Err(null("out"));
        }
        let e = h.r.epochs.get(epoch).ok_or_else(|| {
            Fail(
                MsStatus::InvalidArgument,
                format!("epoch {epoch} out of range 0..{}", h.r.epochs.len()),
            )
        })?;
        *out = e.loss;
        Ok(())
    })
}

/// Copy the trained model into `buf`. `len` must be at least the model
/// dimension; `written` receives the dimension.
///
/// # Safety
/// `buf` must hold `len` doubles; `r` and `written` must be valid.
#[no_mangle]
pub unsafe extern "C" fn ms_result_model(
    r: *const MsResult,
    buf: *mut f64,
    len: usize,
    written: *mut usize,
) -> MsStatus {
    guard(|| {
        let h = r.as_ref().ok_or_else(|| null("result"))?;
        if written.is_null() {
            return Err(null("written"));
        }
        let x = &h.r.model;
        *written = x.len();
        if len < x.len() || buf.is_null() {
            return Err(Fail(
                MsStatus::InvalidArgument,
                format!("model needs {} slots", x.len()),
            ));
        }
        ptr::copy_nonoverlapping(x.as_ptr(), buf, x.len());
        Ok(())
    })
}

/// Loss of the model in `r` on `m` under the task it was trained for.
///
/// # Safety
/// `r`, `m` and `out` must be valid pointers.
#[no_mangle]
pub unsafe extern "C" fn ms_result_eval(
    r: *const MsResult,
    m: *const MsMatrix,
    out: *mut f64,
) -> MsStatus {
    guard(|| {
        let h = r.as_ref().ok_or_else(|| null("result"))?;
        let mh = m.as_ref().ok_or_else(|| null("matrix"))?;
        if out.is_null() {
            return Err(null("out"));
        }
        let spec = spec_for(mh, h.r.task, h.r.hyper)?;
        *out = models::loss(&spec, &h.r.model, &mh.m)?;
        Ok(())
    })
}

/// # Safety
/// `r` must be null or a handle from this library, freed at most once.
#[no_mangle]
pub unsafe extern "C" fn ms_result_free(r: *mut MsResult) {
    free(r)
}

/// Load a factor graph in the text format.
///
/// # Safety
/// `path` must be a NUL-terminated string and `out` a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn ms_graph_load(path: *const c_char, out: *mut *mut MsGraph) -> MsStatus {
    guard(|| {
        let path = str_arg(path, "path")?;
        if out.is_null() {
            return Err(null("out"));
        }
        put(
            out,
            MsGraph {
                g: gibbs::load_factor_graph(PathBuf::from(path))?,
            },
        );
        Ok(())
    })
}

/// Number of marginal slots a graph needs: the sum of its domain sizes.
///
/// # Safety
/// `g` must be a valid handle.
#[no_mangle]
pub unsafe extern "C" fn ms_graph_marginal_len(g: *const MsGraph) -> usize {
    g.as_ref()
        .map_or(0, |h| h.g.domains().iter().map(|&k| k as usize).sum())
}

/// Run Gibbs chains. Marginals are written variable by variable into
/// `marginals`, which must hold `ms_graph_marginal_len` doubles.
///
/// # Safety
/// `g` and `cfg` must be valid; `marginals` must hold `len` doubles;
/// `samples_per_sec` may be null.
#[no_mangle]
pub unsafe extern "C" fn ms_gibbs_run(
    g: *const MsGraph,
    cfg: *const MsGibbsConfig,
    marginals: *mut f64,
    len: usize,
    samples_per_sec: *mut f64,
) -> MsStatus {
    guard(|| {
        let h = g.as_ref().ok_or_else(|| null("graph"))?;
        let c = cfg.as_ref().ok_or_else(|| null("config"))?;
        let need = ms_graph_marginal_len(g);
        if marginals.is_null() || len < need {
            return Err(Fail(
                MsStatus::InvalidArgument,
                format!("marginals need {need} slots"),
            ));
        }
        let rep = model_rep(c.replication)?.unwrap_or(ModelReplication::PerNode);
        let topo = topology(c.nodes, c.cores_per_node, false)?;
        let opts = ChainOptions::new(c.sweeps as usize, c.burn_in as usize);
        let report = gibbs::run_chains(&h.g, rep, &topo, opts, c.seed)?;
        let flat: Vec<f64> = report.marginals.iter().flatten().copied().collect();
        ptr::copy_nonoverlapping(flat.as_ptr(), marginals, flat.len());
        if !samples_per_sec.is_null() {
            *samples_per_sec = report.samples_per_sec;
        }
        Ok(())
    })
}

/// # Safety
/// `g` must be null or a handle from this library, freed at most once.
#[no_mangle]
pub unsafe extern "C" fn ms_graph_free(g: *mut MsGraph) {
    free(g)
}

//! C interface to `dmpopt`.
//!
//! Networks and trajectories are opaque handles created by `dmp_*` calls and
//! released with the matching `*_free`. Every fallible call returns a
//! [`DmpStatus`]; on failure `dmp_last_error` describes the cause. The
//! message is thread-local and stays valid until the next failing call on the
//! same thread.
//!
//! Arrays are time-major: entry `(i, t)` of a per-node, per-step array lives
//! at `t * n + i`. Initial conditions are `n` triples `(P_S, P_I, P_R)`.

use std::cell::RefCell;
use std::ffi::{c_char, c_int, CStr, CString};
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::path::Path;

use dmpopt::dmp::{run_forward, ControlSchedule, DmpTrajectory as Trajectory, Sense, TargetSpec};
use dmpopt::network::EdgeListDialect;
use dmpopt::optim::{forward_backward_iterate, Mode, OptimizerConfig, ProblemSpec};
use dmpopt::{Error, InitialCondition, SpreadingNetwork};

/// Result code of every fallible call.
#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum DmpStatus {
    Ok = 0,
    NullPointer = 1,
    InvalidArgument = 2,
    Parse = 3,
    InfeasibleBudget = 4,
    Numerical = 5,
    Io = 6,
    Timeout = 7,
    Panic = 8,
}

/// Opaque spreading network.
pub struct DmpNetwork {
    inner: SpreadingNetwork,
}

/// Opaque forward solution.
pub struct DmpTrajectory {
    inner: Trajectory,
}

thread_local! {
    static LAST_ERROR: RefCell<Option<CString>> = const { RefCell::new(None) };
}

fn set_error(msg: String) {
    let c = CString::new(msg.replace('\0', " ")).expect("interior NULs removed");
    LAST_ERROR.with(|e| *e.borrow_mut() = Some(c));
}

fn status_of(e: &Error) -> DmpStatus {
    match e {
        Error::Parse { .. } | Error::Json(_) | Error::Csv(_) => DmpStatus::Parse,
        Error::InfeasibleBudget { .. } => DmpStatus::InfeasibleBudget,
        Error::OutOfRange { .. } | Error::NonFinite { .. } => DmpStatus::Numerical,
        Error::Io(_) => DmpStatus::Io,
        Error::Timeout(_) => DmpStatus::Timeout,
        _ => DmpStatus::InvalidArgument,
    }
}

/// Runs `f`, converting errors and panics into a status code.
fn guard<F: FnOnce() -> Result<(), Error>>(f: F) -> DmpStatus {
    match catch_unwind(AssertUnwindSafe(f)) {
        Ok(Ok(())) => DmpStatus::Ok,
        Ok(Err(e)) => {
            let s = status_of(&e);
            set_error(e.to_string());
            s
        }
        Err(p) => {
            let msg = p
                .downcast_ref::<&str>()
                .map(|s| s.to_string())
                .or_else(|| p.downcast_ref::<String>().cloned())
                .unwrap_or_else(|| "unknown panic".into());
            set_error(format!("internal panic: {msg}"));
            DmpStatus::Panic
        }
    }
}

unsafe fn read_initial(ptr: *const f64, n: usize) -> Result<InitialCondition, Error> {
    if ptr.is_null() {
        return Ok(InitialCondition::all_susceptible(n));
    }
    let raw = std::slice::from_raw_parts(ptr, 3 * n);
    InitialCondition::from_triples(raw.chunks_exact(3).map(|c| [c[0], c[1], c[2]]).collect())
}

/// Message of the last failure on this thread, or NULL if none. Owned by the
/// library; do not free.
#[no_mangle]
pub extern "C" fn dmp_last_error() -> *const c_char {
    LAST_ERROR.with(|e| e.borrow().as_ref().map_or(std::ptr::null(), |c| c.as_ptr()))
}

/// Library version as a static NUL-terminated string.
#[no_mangle]
pub extern "C" fn dmp_version() -> *const c_char {
    concat!(env!("CARGO_PKG_VERSION"), "\0").as_ptr().cast()
}

/// Loads an edge list (`src dst alpha` per line) or a `.json` network.
/// `default_alpha` is used for two-column lines; pass a negative value to
/// require the third column.
///
/// # Safety
/// `path` must be a valid NUL-terminated string and `out` a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn dmp_network_load(
    path: *const c_char,
    undirected: c_int,
    default_alpha: f64,
    out: *mut *mut DmpNetwork,
) -> DmpStatus {
    if path.is_null() || out.is_null() {
        set_error("path or out is NULL".into());
        return DmpStatus::NullPointer;
    }
    guard(|| {
        let path = CStr::from_ptr(path)
            .to_str()
            .map_err(|e| Error::Invalid(format!("path is not UTF-8: {e}")))?;
        let dialect = EdgeListDialect {
            undirected: undirected != 0,
            default_alpha: (default_alpha >= 0.0).then_some(default_alpha),
            lenient: false,
        };
        let inner = SpreadingNetwork::load_path(Path::new(path), &dialect)?;
        *out = Box::into_raw(Box::new(DmpNetwork { inner }));
        Ok(())
    })
}

/// Builds a network with nodes `0..n` (labelled by their index) from `m`
/// directed edges.
///
/// # Safety
/// `src`, `dst` and `alpha` must point to `m` elements; `out` must be valid.
#[no_mangle]
pub unsafe extern "C" fn dmp_network_from_edges(
    n: usize,
    src: *const usize,
    dst: *const usize,
    alpha: *const f64,
    m: usize,
    out: *mut *mut DmpNetwork,
) -> DmpStatus {
    if src.is_null() || dst.is_null() || alpha.is_null() || out.is_null() {
        set_error("edge arrays or out is NULL".into());
        return DmpStatus::NullPointer;
    }
    guard(|| {
        let s = std::slice::from_raw_parts(src, m);
        let d = std::slice::from_raw_parts(dst, m);
        let a = std::slice::from_raw_parts(alpha, m);
        let edges = (0..m).map(|k| (s[k], d[k], a[k]));
        let inner = SpreadingNetwork::with_unlabeled(n, edges)?;
        *out = Box::into_raw(Box::new(DmpNetwork { inner }));
        Ok(())
    })
}

/// # Safety
/// `net` must be NULL or a handle from this library.
#[no_mangle]
pub unsafe extern "C" fn dmp_network_node_count(net: *const DmpNetwork) -> usize {
    net.as_ref().map_or(0, |n| n.inner.node_count())
}

/// Number of directed edges.
///
/// # Safety
/// `net` must be NULL or a handle from this library.
#[no_mangle]
pub unsafe extern "C" fn dmp_network_edge_count(net: *const DmpNetwork) -> usize {
    net.as_ref().map_or(0, |n| n.inner.edge_count())
}

/// # Safety
/// `net` must be NULL or a handle from this library not yet freed.
#[no_mangle]
pub unsafe extern "C" fn dmp_network_free(net: *mut DmpNetwork) {
    if !net.is_null() {
        drop(Box::from_raw(net));
    }
}

/// Runs the forward equations for `horizon` steps. `initial` holds `n`
/// triples or is NULL for all susceptible; `nu` and `mu` hold
/// `horizon * n` entries or are NULL for zero.
///
/// # Safety
/// Pointers must be NULL where allowed or point to arrays of the stated size.
#[no_mangle]
pub unsafe extern "C" fn dmp_forward(
    net: *const DmpNetwork,
    initial: *const f64,
    nu: *const f64,
    mu: *const f64,
    horizon: usize,
    out: *mut *mut DmpTrajectory,
) -> DmpStatus {
    let Some(net) = net.as_ref() else {
        set_error("net is NULL".into());
        return DmpStatus::NullPointer;
    };
    if out.is_null() {
        set_error("out is NULL".into());
        return DmpStatus::NullPointer;
    }
    guard(|| {
        let n = net.inner.node_count();
        let ic = read_initial(initial, n)?;
        let mut c = ControlSchedule::zeros(n, horizon);
        if !nu.is_null() {
            let v = std::slice::from_raw_parts(nu, n * horizon);
            for t in 0..horizon {
                c.nu_at_mut(t).copy_from_slice(&v[t * n..(t + 1) * n]);
            }
        }
        if !mu.is_null() {
            let v = std::slice::from_raw_parts(mu, n * horizon);
            for t in 0..horizon {
                c.mu_at_mut(t).copy_from_slice(&v[t * n..(t + 1) * n]);
            }
        }
        c.validate()?;
        let traj = run_forward(&net.inner, &ic, &c, horizon)?;
        *out = Box::into_raw(Box::new(DmpTrajectory { inner: traj }));
        Ok(())
    })
}

/// # Safety
/// `traj` must be NULL or a handle from this library.
#[no_mangle]
pub unsafe extern "C" fn dmp_trajectory_horizon(traj: *const DmpTrajectory) -> usize {
    traj.as_ref().map_or(0, |t| t.inner.horizon())
}

/// Copies the `n` triples `(P_S, P_I, P_R)` at step `t` into `out`, which
/// must hold `len >= 3 n` doubles.
///
/// # Safety
/// `traj` must be a handle from this library and `out` must hold `len` doubles.
#[no_mangle]
pub unsafe extern "C" fn dmp_trajectory_marginals(
    traj: *const DmpTrajectory,
    t: usize,
    out: *mut f64,
    len: usize,
) -> DmpStatus {
    let Some(traj) = traj.as_ref() else {
        set_error("traj is NULL".into());
        return DmpStatus::NullPointer;
    };
    if out.is_null() {
        set_error("out is NULL".into());
        return DmpStatus::NullPointer;
    }
    guard(|| {
        let tr = &traj.inner;
        let n = tr.node_count();
        if t > tr.horizon() {
            return Err(Error::Invalid(format!("step {t} beyond horizon {}", tr.horizon())));
        }
        if len < 3 * n {
            return Err(Error::Invalid(format!("output holds {len} doubles, need {}", 3 * n)));
        }
        let dst = std::slice::from_raw_parts_mut(out, 3 * n);
        for i in 0..n {
            dst[3 * i] = tr.ps(i, t);
            dst[3 * i + 1] = tr.pi(i, t);
            dst[3 * i + 2] = tr.pr(i, t);
        }
        Ok(())
    })
}

/// # Safety
/// `traj` must be NULL or a handle from this library not yet freed.
#[no_mangle]
pub unsafe extern "C" fn dmp_trajectory_free(traj: *mut DmpTrajectory) {
    if !traj.is_null() {
        drop(Box::from_raw(traj));
    }
}

/// Optimal seeding: distributes `budget` of spontaneous activation over all
/// nodes at `t = 0` to maximize the expected number infected at `horizon`.
/// Writes the `n` activation probabilities to `out_nu` and the objective to
/// `out_objective`. `max_iters = 0` keeps the default cap.
///
/// # Safety
/// `net` must be a handle from this library; `initial` NULL or `3 n`
/// doubles; `out_nu` must hold `n` doubles; `out_objective` must be valid.
#[no_mangle]
pub unsafe extern "C" fn dmp_optimize_seeding(
    net: *const DmpNetwork,
    initial: *const f64,
    horizon: usize,
    budget: f64,
    max_iters: usize,
    out_nu: *mut f64,
    out_objective: *mut f64,
) -> DmpStatus {
    let Some(net) = net.as_ref() else {
        set_error("net is NULL".into());
        return DmpStatus::NullPointer;
    };
    if out_nu.is_null() || out_objective.is_null() {
        set_error("output pointer is NULL".into());
        return DmpStatus::NullPointer;
    }
    guard(|| {
        let n = net.inner.node_count();
        let ic = read_initial(initial, n)?;
        let target = TargetSpec::total_spread(n, horizon, Sense::MaximizeInfected)?;
        let spec = ProblemSpec::new(&net.inner, ic, horizon, Mode::Seeding, target, vec![budget]);
        let mut cfg = OptimizerConfig::default();
        if max_iters > 0 {
            cfg.max_iters = max_iters;
        }
        let report = forward_backward_iterate(&spec, &cfg)?;
        let dst = std::slice::from_raw_parts_mut(out_nu, n);
        dst.copy_from_slice(report.schedule.nu_at(0));
        *out_objective = report.objective;
        Ok(())
    })
}

//! C interface to `plap-core`.
//!
//! Graphs and reports cross the boundary as opaque handles that the caller
//! releases with the matching `*_free` function. Every fallible call returns a
//! [`PlapStatus`]; on failure [`plap_last_error_message`] describes the cause.
//! Panics are caught at the boundary and reported as `PLAP_STATUS_PANIC`.

use std::cell::RefCell;
use std::ffi::{c_char, CStr, CString};
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::ptr;

use plap_core::analysis::residual;
use plap_core::flow::run_flow;
use plap_core::{EigenReport, Error, FlowConfig, Graph, Init};

/// Result code of every fallible call.
#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum PlapStatus {
    Ok = 0,
    NullPointer = 1,
    InvalidArgument = 2,
    InvalidGraph = 3,
    /// The flow stopped at `max_iter`; the report is still written.
    NotConverged = 4,
    Numerical = 5,
    BufferTooSmall = 6,
    Panic = 7,
}

/// Opaque graph handle.
pub struct PlapGraph(Graph);

/// Opaque result of [`plap_solve`].
pub struct PlapReport(EigenReport);

/// Flow parameters. Start from [`plap_flow_config_default`].
#[repr(C)]
#[derive(Debug, Clone, Copy)]
pub struct PlapFlowConfig {
    pub p: f64,
    /// 1-based spectral index.
    pub k: usize,
    pub tau: f64,
    pub delta: f64,
    pub tol: f64,
    pub max_iter: usize,
    /// Draw the initial weights from `seed` instead of starting at ones.
    pub random_init: bool,
    pub seed: u64,
}

impl From<&PlapFlowConfig> for FlowConfig {
    fn from(c: &PlapFlowConfig) -> Self {
        FlowConfig {
            tau: c.tau,
            delta: c.delta,
            tol: c.tol,
            max_iter: c.max_iter,
            init: if c.random_init {
                Init::Random { seed: c.seed }
            } else {
                Init::Ones
            },
            ..FlowConfig::new(c.p, c.k)
        }
    }
}

thread_local! {
    static LAST_ERROR: RefCell<CString> = RefCell::new(CString::default());
}

fn set_last_error(msg: &str) {
    let c = CString::new(msg.replace('\0', " ")).unwrap_or_default();
    LAST_ERROR.with(|e| *e.borrow_mut() = c);
}

fn status_of(err: &Error) -> PlapStatus {
    match err {
        Error::GridTooSmall { .. }
        | Error::SelfLoop { .. }
        | Error::DuplicateEdge { .. }
        | Error::BadEdgeWeight { .. }
        | Error::NodeOutOfRange { .. }
        | Error::Json(_) => PlapStatus::InvalidGraph,
        Error::InvalidParameter { .. } | Error::DimensionMismatch { .. } => PlapStatus::InvalidArgument,
        Error::NotConverged { .. } => PlapStatus::NotConverged,
        _ => PlapStatus::Numerical,
    }
}

/// Runs `body`, records any error or panic, and returns its status.
fn guard(body: impl FnOnce() -> Result<PlapStatus, (PlapStatus, String)>) -> PlapStatus {
    match catch_unwind(AssertUnwindSafe(body)) {
        Ok(Ok(status)) => status,
        Ok(Err((status, msg))) => {
            set_last_error(&msg);
            status
        }
        Err(_) => {
            set_last_error("panic inside plap");
            PlapStatus::Panic
        }
    }
}

fn core_err(e: Error) -> (PlapStatus, String) {
    (status_of(&e), e.to_string())
}

fn null(what: &str) -> (PlapStatus, String) {
    (PlapStatus::NullPointer, format!("{what} is null"))
}

/// Message of the last failure on this thread, or an empty string. The
/// pointer stays valid until the next failing call on the same thread.
#[no_mangle]
pub extern "C" fn plap_last_error_message() -> *const c_char {
    LAST_ERROR.with(|e| e.borrow().as_ptr())
}

/// Library version as a static NUL-terminated string.
#[no_mangle]
pub extern "C" fn plap_version() -> *const c_char {
    concat!(env!("CARGO_PKG_VERSION"), "\0").as_ptr().cast()
}

/// Parses a graph from a NUL-terminated JSON document.
///
/// # Safety
/// `json` must be a valid C string and `out` a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn plap_graph_from_json(json: *const c_char, out: *mut *mut PlapGraph) -> PlapStatus {
    guard(|| {
        if json.is_null() {
            return Err(null("json"));
        }
        if out.is_null() {
            return Err(null("out"));
        }
        let text = CStr::from_ptr(json)
            .to_str()
            .map_err(|e| (PlapStatus::InvalidArgument, format!("json is not UTF-8: {e}")))?;
        let graph = Graph::from_json(text).map_err(core_err)?;
        *out = Box::into_raw(Box::new(PlapGraph(graph)));
        Ok(PlapStatus::Ok)
    })
}

/// Builds a `rows` x `cols` grid whose outer ring is the boundary.
///
/// # Safety
/// `out` must be a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn plap_graph_grid(rows: usize, cols: usize, out: *mut *mut PlapGraph) -> PlapStatus {
    guard(|| {
        if out.is_null() {
            return Err(null("out"));
        }
        let graph = Graph::grid(rows, cols).map_err(core_err)?;
        *out = Box::into_raw(Box::new(PlapGraph(graph)));
        Ok(PlapStatus::Ok)
    })
}

/// Number of interior nodes, or 0 for a null handle.
///
/// # Safety
/// `graph` must be null or a live handle.
#[no_mangle]
pub unsafe extern "C" fn plap_graph_num_interior(graph: *const PlapGraph) -> usize {
    graph.as_ref().map_or(0, |g| g.0.num_interior())
}

/// # Safety
/// `graph` must be null or a handle not yet freed.
#[no_mangle]
pub unsafe extern "C" fn plap_graph_free(graph: *mut PlapGraph) {
    if !graph.is_null() {
        drop(Box::from_raw(graph));
    }
}

/// Default flow parameters for `p` and `k`.
#[no_mangle]
pub extern "C" fn plap_flow_config_default(p: f64, k: usize) -> PlapFlowConfig {
    let c = FlowConfig::new(p, k);
    PlapFlowConfig {
        p,
        k,
        tau: c.tau,
        delta: c.delta,
        tol: c.tol,
        max_iter: c.max_iter,
        random_init: false,
        seed: 0,
    }
}

/// Runs the flow. On `PLAP_STATUS_OK` and `PLAP_STATUS_NOT_CONVERGED` a report
/// is written to `out` and must be released with [`plap_report_free`].
///
/// # Safety
/// `graph` must be a live handle; `config` and `out` valid pointers.
#[no_mangle]
pub unsafe extern "C" fn plap_solve(
    graph: *const PlapGraph,
    config: *const PlapFlowConfig,
    out: *mut *mut PlapReport,
) -> PlapStatus {
    guard(|| {
        let graph = graph.as_ref().ok_or_else(|| null("graph"))?;
        let config = config.as_ref().ok_or_else(|| null("config"))?;
        if out.is_null() {
            return Err(null("out"));
        }
        let (report, _) = run_flow(&graph.0, &config.into()).map_err(core_err)?;
        let status = if report.converged {
            PlapStatus::Ok
        } else {
            set_last_error(&format!("flow did not converge within {} iterations", report.iters));
            PlapStatus::NotConverged
        };
        *out = Box::into_raw(Box::new(PlapReport(report)));
        Ok(status)
    })
}

/// `λ_p` of the report, or NaN for a null handle.
///
/// # Safety
/// `report` must be null or a live handle.
#[no_mangle]
pub unsafe extern "C" fn plap_report_lambda_p(report: *const PlapReport) -> f64 {
    report.as_ref().map_or(f64::NAN, |r| r.0.lambda_p)
}

/// Relative residual of the eigen-equation, or NaN for a null handle.
///
/// # Safety
/// `report` must be null or a live handle.
#[no_mangle]
pub unsafe extern "C" fn plap_report_residual(report: *const PlapReport) -> f64 {
    report.as_ref().map_or(f64::NAN, |r| r.0.residual)
}

/// # Safety
/// `report` must be null or a live handle.
#[no_mangle]
pub unsafe extern "C" fn plap_report_iters(report: *const PlapReport) -> usize {
    report.as_ref().map_or(0, |r| r.0.iters)
}

/// # Safety
/// `report` must be null or a live handle.
#[no_mangle]
pub unsafe extern "C" fn plap_report_converged(report: *const PlapReport) -> bool {
    report.as_ref().is_some_and(|r| r.0.converged)
}

/// Copies the eigenfunction (one value per interior node, in interior order)
/// into `buf`. Returns `PLAP_STATUS_BUFFER_TOO_SMALL` if `len` is short.
///
/// # Safety
/// `report` must be a live handle and `buf` valid for `len` writes.
#[no_mangle]
pub unsafe extern "C" fn plap_report_eigenfunction(report: *const PlapReport, buf: *mut f64, len: usize) -> PlapStatus {
    guard(|| {
        let report = report.as_ref().ok_or_else(|| null("report"))?;
        let f = &report.0.f;
        if len < f.len() {
            return Err((
                PlapStatus::BufferTooSmall,
                format!("buffer holds {len} values, eigenfunction has {}", f.len()),
            ));
        }
        if buf.is_null() {
            return Err(null("buf"));
        }
        ptr::copy_nonoverlapping(f.as_ptr(), buf, f.len());
        Ok(PlapStatus::Ok)
    })
}

/// # Safety
/// `report` must be null or a handle not yet freed.
#[no_mangle]
pub unsafe extern "C" fn plap_report_free(report: *mut PlapReport) {
    if !report.is_null() {
        drop(Box::from_raw(report));
    }
}

/// Relative residual of `Δ_p f = λ_lin^(p/2) |f|^(p-2) f` for `f` given on
/// the interior nodes.
///
/// # Safety
/// `graph` must be a live handle, `f` valid for `len` reads and `out` a valid
/// pointer.
#[no_mangle]
pub unsafe extern "C" fn plap_residual(
    graph: *const PlapGraph,
    f: *const f64,
    len: usize,
    lambda_lin: f64,
    p: f64,
    out: *mut f64,
) -> PlapStatus {
    guard(|| {
        let graph = graph.as_ref().ok_or_else(|| null("graph"))?;
        if f.is_null() {
            return Err(null("f"));
        }
        if out.is_null() {
            return Err(null("out"));
        }
        let f = std::slice::from_raw_parts(f, len);
        *out = residual(&graph.0, f, lambda_lin, p).map_err(core_err)?;
        Ok(PlapStatus::Ok)
    })
}

//! C ABI for the slab transport solver.
//!
//! Every entry point returns a [`SlabStatus`]; values come back through out
//! pointers. A failing call leaves a description in a thread-local buffer
//! readable with [`slab_last_error`]. Panics never cross the boundary: they
//! are caught and reported as `SLAB_STATUS_PANIC`.

use std::cell::RefCell;
use std::ffi::{c_char, CStr, CString};
use std::panic::{catch_unwind, AssertUnwindSafe};

use slab_transport::harness::{builtin_problem, relative_l2_error, HarnessError};
use slab_transport::{persisted_bytes, MethodKind, Simulation, SolveError};

/// Result code of every call.
#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SlabStatus {
    Ok = 0,
    NullPointer = 1,
    InvalidArgument = 2,
    /// The iteration did not converge; the simulation stays at its last
    /// completed step.
    Nonconvergence = 3,
    /// Singular or non-finite linear solve.
    SolverFailure = 4,
    BufferTooSmall = 5,
    /// All configured steps have been taken.
    Finished = 6,
    Panic = 7,
}

/// Opaque simulation handle.
pub struct SlabSimulation {
    inner: Simulation,
}

thread_local! {
    static LAST_ERROR: RefCell<Option<CString>> = const { RefCell::new(None) };
}

fn set_error(message: impl Into<String>) {
    let text = message.into().replace('\0', " ");
    let c = CString::new(text).unwrap_or_default();
    LAST_ERROR.with(|e| *e.borrow_mut() = Some(c));
}

fn fail(status: SlabStatus, message: impl Into<String>) -> SlabStatus {
    set_error(message);
    status
}

fn guarded(f: impl FnOnce() -> SlabStatus) -> SlabStatus {
    match catch_unwind(AssertUnwindSafe(f)) {
        Ok(status) => status,
        Err(payload) => {
            let msg = payload
                .downcast_ref::<&str>()
                .map(|s| s.to_string())
                .or_else(|| payload.downcast_ref::<String>().cloned())
                .unwrap_or_else(|| "unknown panic".into());
            fail(SlabStatus::Panic, format!("panic: {msg}"))
        }
    }
}

fn solve_status(e: &SolveError) -> SlabStatus {
    match e {
        SolveError::NonConvergence { .. } => SlabStatus::Nonconvergence,
        _ => SlabStatus::SolverFailure,
    }
}

fn harness_status(e: HarnessError) -> SlabStatus {
    fail(SlabStatus::InvalidArgument, e.to_string())
}

/// # Safety
/// `s` is null or a valid NUL-terminated string.
unsafe fn optional_str<'a>(s: *const c_char, what: &str) -> Result<Option<&'a str>, SlabStatus> {
    if s.is_null() {
        return Ok(None);
    }
    CStr::from_ptr(s).to_str().map(Some).map_err(|_| {
        fail(
            SlabStatus::InvalidArgument,
            format!("{what} is not valid UTF-8"),
        )
    })
}

/// # Safety
/// `sim` is null or a live handle.
unsafe fn handle<'a>(sim: *const SlabSimulation) -> Result<&'a SlabSimulation, SlabStatus> {
    sim.as_ref()
        .ok_or_else(|| fail(SlabStatus::NullPointer, "simulation handle is null"))
}

macro_rules! tri {
    ($e:expr) => {
        match $e {
            Ok(v) => v,
            Err(status) => return status,
        }
    };
}

fn out_null(what: &str) -> SlabStatus {
    fail(SlabStatus::NullPointer, format!("{what} is null"))
}

/// Creates a simulation of a built-in problem (`"test-a"` or `"test-b"`).
///
/// `method` may be null to keep the problem's default (the reference
/// scheme, or whatever `config` sets). `config` is null or `key = value`
/// lines applied on top of the built-in problem. On success `*out` owns a
/// handle that must be released with [`slab_simulation_free`].
///
/// # Safety
/// String arguments are null or valid NUL-terminated strings; `out` is null
/// or writable.
#[no_mangle]
pub unsafe extern "C" fn slab_simulation_new(
    problem: *const c_char,
    method: *const c_char,
    config: *const c_char,
    out: *mut *mut SlabSimulation,
) -> SlabStatus {
    guarded(|| {
        if out.is_null() {
            return out_null("out");
        }
        *out = std::ptr::null_mut();
        let Some(name) = tri!(optional_str(problem, "problem")) else {
            return out_null("problem");
        };
        let mut spec = match builtin_problem(name) {
            Ok(s) => s,
            Err(e) => return harness_status(e),
        };
        if let Some(text) = tri!(optional_str(config, "config")) {
            if let Err(e) = spec.apply_config(text) {
                return harness_status(e);
            }
        }
        if let Some(m) = tri!(optional_str(method, "method")) {
            match m.parse::<MethodKind>() {
                Ok(m) => spec.method = m,
                Err(e) => return fail(SlabStatus::InvalidArgument, e.to_string()),
            }
        }
        let p = match spec.build(1) {
            Ok(p) => p,
            Err(e) => return harness_status(e),
        };
        *out = Box::into_raw(Box::new(SlabSimulation {
            inner: Simulation::new(p, spec.method),
        }));
        SlabStatus::Ok
    })
}

/// Releases a handle. Null is ignored.
///
/// # Safety
/// `sim` is null or a handle from [`slab_simulation_new`] not yet freed.
#[no_mangle]
pub unsafe extern "C" fn slab_simulation_free(sim: *mut SlabSimulation) {
    if !sim.is_null() {
        drop(Box::from_raw(sim));
    }
}

/// Advances one time step. `iterations` may be null; otherwise it receives
/// the number of iteration passes the step took.
///
/// Returns `SLAB_STATUS_FINISHED` without doing anything once the last step
/// has been taken.
///
/// # Safety
/// `sim` is null or a live handle; `iterations` is null or writable.
#[no_mangle]
pub unsafe extern "C" fn slab_simulation_step(
    sim: *mut SlabSimulation,
    iterations: *mut usize,
) -> SlabStatus {
    guarded(|| {
        let Some(sim) = sim.as_mut() else {
            return out_null("simulation handle");
        };
        if sim.inner.is_finished() {
            return SlabStatus::Finished;
        }
        match sim.inner.advance() {
            Ok(r) => {
                if !iterations.is_null() {
                    *iterations = r.iterations;
                }
                SlabStatus::Ok
            }
            Err(e) => fail(solve_status(&e), e.to_string()),
        }
    })
}

/// Advances through every remaining step.
///
/// # Safety
/// `sim` is null or a live handle.
#[no_mangle]
pub unsafe extern "C" fn slab_simulation_run(sim: *mut SlabSimulation) -> SlabStatus {
    guarded(|| {
        let Some(sim) = sim.as_mut() else {
            return out_null("simulation handle");
        };
        match sim.inner.run() {
            Ok(_) => SlabStatus::Ok,
            Err((_, e)) => fail(solve_status(&e), e.to_string()),
        }
    })
}

/// # Safety
/// `sim` is null or a live handle; `out` is null or writable.
#[no_mangle]
pub unsafe extern "C" fn slab_simulation_cell_count(
    sim: *const SlabSimulation,
    out: *mut usize,
) -> SlabStatus {
    guarded(|| {
        let sim = tri!(handle(sim));
        if out.is_null() {
            return out_null("out");
        }
        *out = sim.inner.problem().cells();
        SlabStatus::Ok
    })
}

/// Steps taken so far and the configured total (either pointer may be null).
///
/// # Safety
/// `sim` is null or a live handle; outputs are null or writable.
#[no_mangle]
pub unsafe extern "C" fn slab_simulation_steps(
    sim: *const SlabSimulation,
    taken: *mut usize,
    total: *mut usize,
) -> SlabStatus {
    guarded(|| {
        let sim = tri!(handle(sim));
        if !taken.is_null() {
            *taken = sim.inner.steps_taken();
        }
        if !total.is_null() {
            *total = sim.inner.problem().steps;
        }
        SlabStatus::Ok
    })
}

/// Current simulation time in ns.
///
/// # Safety
/// `sim` is null or a live handle; `out` is null or writable.
#[no_mangle]
pub unsafe extern "C" fn slab_simulation_time(
    sim: *const SlabSimulation,
    out: *mut f64,
) -> SlabStatus {
    guarded(|| {
        let sim = tri!(handle(sim));
        if out.is_null() {
            return out_null("out");
        }
        *out = sim.inner.steps_taken() as f64 * sim.inner.problem().dt;
        SlabStatus::Ok
    })
}

/// Copies the cell-average and first-moment scalar flux of the latest step
/// into `avg` and `slope` (either may be null), each of length `len`.
///
/// # Safety
/// `sim` is null or a live handle; non-null buffers hold `len` writable
/// doubles.
#[no_mangle]
pub unsafe extern "C" fn slab_simulation_scalar_flux(
    sim: *const SlabSimulation,
    avg: *mut f64,
    slope: *mut f64,
    len: usize,
) -> SlabStatus {
    guarded(|| {
        let sim = tri!(handle(sim));
        let low = &sim.inner.persisted().low_order;
        let cells = low.cells();
        if len < cells {
            return fail(
                SlabStatus::BufferTooSmall,
                format!("buffer holds {len} values, need {cells}"),
            );
        }
        if !avg.is_null() {
            std::slice::from_raw_parts_mut(avg, cells).copy_from_slice(&low.avg_flux);
        }
        if !slope.is_null() {
            std::slice::from_raw_parts_mut(slope, cells).copy_from_slice(&low.slope_flux);
        }
        SlabStatus::Ok
    })
}

/// Bytes the simulation currently carries between steps.
///
/// # Safety
/// `sim` is null or a live handle; `out` is null or writable.
#[no_mangle]
pub unsafe extern "C" fn slab_simulation_persisted_bytes(
    sim: *const SlabSimulation,
    out: *mut usize,
) -> SlabStatus {
    guarded(|| {
        let sim = tri!(handle(sim));
        if out.is_null() {
            return out_null("out");
        }
        *out = persisted_bytes(
            sim.inner.method(),
            sim.inner.problem().cells(),
            sim.inner.problem().directions(),
        );
        SlabStatus::Ok
    })
}

/// Bytes a method persists between steps on a `cells × directions` grid.
///
/// # Safety
/// `method` is null or a valid NUL-terminated string; `out` is null or
/// writable.
#[no_mangle]
pub unsafe extern "C" fn slab_persisted_bytes(
    method: *const c_char,
    cells: usize,
    directions: usize,
    out: *mut usize,
) -> SlabStatus {
    guarded(|| {
        if out.is_null() {
            return out_null("out");
        }
        let Some(name) = tri!(optional_str(method, "method")) else {
            return out_null("method");
        };
        match name.parse::<MethodKind>() {
            Ok(m) => {
                *out = persisted_bytes(m, cells, directions);
                SlabStatus::Ok
            }
            Err(e) => fail(SlabStatus::InvalidArgument, e.to_string()),
        }
    })
}

/// `‖candidate − reference‖₂ / ‖reference‖₂`. When the reference norm is
/// zero, `*out` is the absolute norm of `candidate` and `*absolute` (if not
/// null) is set to true.
///
/// # Safety
/// `candidate` and `reference` hold `len` readable doubles; `out` is
/// writable; `absolute` is null or writable.
#[no_mangle]
pub unsafe extern "C" fn slab_relative_l2_error(
    candidate: *const f64,
    reference: *const f64,
    len: usize,
    out: *mut f64,
    absolute: *mut bool,
) -> SlabStatus {
    guarded(|| {
        if candidate.is_null() || reference.is_null() || out.is_null() {
            return out_null("candidate, reference or out");
        }
        let c = std::slice::from_raw_parts(candidate, len);
        let r = std::slice::from_raw_parts(reference, len);
        let e = relative_l2_error(c, r);
        *out = e.value;
        if !absolute.is_null() {
            *absolute = e.absolute_fallback;
        }
        SlabStatus::Ok
    })
}

/// Message of the last failing call on this thread, or null. The pointer
/// stays valid until the next failing call on the same thread.
#[no_mangle]
pub extern "C" fn slab_last_error() -> *const c_char {
    LAST_ERROR.with(|e| e.borrow().as_ref().map_or(std::ptr::null(), |c| c.as_ptr()))
}

/// Static name of a status code; takes a plain integer so that any value
/// coming from C is safe to pass.
#[no_mangle]
pub extern "C" fn slab_status_name(status: i32) -> *const c_char {
    let s: &'static CStr = match status {
        0 => c"ok",
        1 => c"null pointer",
        2 => c"invalid argument",
        3 => c"nonconvergence",
        4 => c"solver failure",
        5 => c"buffer too small",
        6 => c"finished",
        7 => c"panic",
        _ => c"unknown status",
    };
    s.as_ptr()
}

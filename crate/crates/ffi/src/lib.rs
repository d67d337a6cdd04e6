//! C interface to the simulator.
//!
//! A simulation is an opaque `QslSimulation*` from `qsl_sim_new` and must be
//! released with `qsl_sim_free`. Fallible calls return a `QslStatus`; on
//! failure `qsl_last_error_message` describes the error for the calling
//! thread. Panics never cross the boundary.

use std::cell::RefCell;
use std::ffi::{c_char, CStr, CString};
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::ptr;

use qsl::harness::{RunConfig, Simulation};
use qsl::profiles::{quasi_dist_uni, surface_tension};
use qsl::qspace::{bulk_energy, BulkParams, QTensor};
use qsl::QslError;

/// Status codes; nonzero values match the CLI exit codes where they overlap.
#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum QslStatus {
    Ok = 0,
    Io = 1,
    Config = 2,
    Invariant = 3,
    NonConvergence = 4,
    NullPointer = 5,
    BufferTooSmall = 6,
    Panic = 7,
}

/// One diagnostics snapshot. `r_measured` is NaN when no radius is defined.
#[repr(C)]
#[derive(Debug, Clone, Copy, Default, PartialEq)]
pub struct QslDiagnostics {
    pub t: f64,
    pub e: f64,
    pub e_vol: f64,
    pub kinetic: f64,
    pub gl_energy: f64,
    pub diss_parallel_cum: f64,
    pub diss_transport_cum: f64,
    pub max_q: f64,
    pub r_measured: f64,
    pub clamp_count: u64,
}

/// Opaque simulation handle.
pub struct QslSimulation {
    sim: Simulation,
}

thread_local! {
    static LAST_ERROR: RefCell<CString> = RefCell::new(CString::default());
}

fn set_error(msg: &str) {
    let c = CString::new(msg.replace('\0', " ")).expect("interior nuls removed");
    LAST_ERROR.with(|e| *e.borrow_mut() = c);
}

fn status_of(e: &QslError) -> QslStatus {
    match e {
        QslError::Io(_) => QslStatus::Io,
        QslError::Config(_) | QslError::InvalidInput(_) | QslError::Json(_) => QslStatus::Config,
        QslError::Invariant { .. } => QslStatus::Invariant,
        QslError::NonConvergence { .. } => QslStatus::NonConvergence,
    }
}

fn guard(f: impl FnOnce() -> Result<(), QslStatus>) -> QslStatus {
    match catch_unwind(AssertUnwindSafe(f)) {
        Ok(Ok(())) => QslStatus::Ok,
        Ok(Err(s)) => s,
        Err(_) => {
            set_error("internal panic");
            QslStatus::Panic
        }
    }
}

fn fail(e: QslError) -> QslStatus {
    set_error(&e.to_string());
    status_of(&e)
}

fn null(what: &str) -> QslStatus {
    set_error(&format!("{what} is null"));
    QslStatus::NullPointer
}

fn params(a: f64, b: f64, c: f64) -> Result<BulkParams, QslStatus> {
    BulkParams::new(a, b, c).map_err(fail)
}

/// Message of the last failed call on this thread; empty if none. The
/// pointer stays valid until the next failing call on the same thread.
#[no_mangle]
pub extern "C" fn qsl_last_error_message() -> *const c_char {
    LAST_ERROR.with(|e| e.borrow().as_ptr())
}

/// Create a simulation for one ε from a JSON configuration (NULL for the
/// defaults). On success `*out` owns the new handle.
///
/// # Safety
/// `config_json` must be NULL or a valid NUL-terminated string and `out` a
/// valid pointer.
#[no_mangle]
pub unsafe extern "C" fn qsl_sim_new(config_json: *const c_char, eps: f64, out: *mut *mut QslSimulation) -> QslStatus {
    guard(|| {
        if out.is_null() {
            return Err(null("out"));
        }
        *out = ptr::null_mut();
        let cfg = if config_json.is_null() {
            RunConfig::default()
        } else {
            let text = CStr::from_ptr(config_json)
                .to_str()
                .map_err(|_| fail(QslError::Config("config is not UTF-8".into())))?;
            RunConfig::from_json(text).map_err(fail)?
        };
        let sim = Simulation::new(&cfg, eps).map_err(fail)?;
        *out = Box::into_raw(Box::new(QslSimulation { sim }));
        Ok(())
    })
}

/// Advance up to `n` steps, stopping at the final time. `taken` (optional)
/// receives the number of steps performed.
///
/// # Safety
/// `sim` must come from `qsl_sim_new`; `taken` must be NULL or valid.
#[no_mangle]
pub unsafe extern "C" fn qsl_sim_step(sim: *mut QslSimulation, n: usize, taken: *mut usize) -> QslStatus {
    guard(|| {
        let s = sim.as_mut().ok_or_else(|| null("sim"))?;
        let mut k = 0;
        let r = (|| {
            while k < n && !s.sim.finished() {
                s.sim.step()?;
                k += 1;
            }
            Ok(())
        })();
        if let Some(t) = taken.as_mut() {
            *t = k;
        }
        r.map_err(fail)
    })
}

/// Current time, or NaN for a NULL handle.
///
/// # Safety
/// `sim` must be NULL or come from `qsl_sim_new`.
#[no_mangle]
pub unsafe extern "C" fn qsl_sim_time(sim: *const QslSimulation) -> f64 {
    sim.as_ref().map_or(f64::NAN, |s| s.sim.state.t)
}

/// Steps taken so far and total steps to the final time.
///
/// # Safety
/// `sim` must come from `qsl_sim_new`; the out pointers must be NULL or valid.
#[no_mangle]
pub unsafe extern "C" fn qsl_sim_progress(sim: *const QslSimulation, step: *mut usize, total: *mut usize) -> QslStatus {
    guard(|| {
        let s = sim.as_ref().ok_or_else(|| null("sim"))?;
        if let Some(p) = step.as_mut() {
            *p = s.sim.state.step;
        }
        if let Some(p) = total.as_mut() {
            *p = s.sim.total_steps;
        }
        Ok(())
    })
}

/// Evaluate the diagnostics on the current state.
///
/// # Safety
/// `sim` must come from `qsl_sim_new` and `out` must be valid.
#[no_mangle]
pub unsafe extern "C" fn qsl_sim_diagnostics(sim: *mut QslSimulation, out: *mut QslDiagnostics) -> QslStatus {
    guard(|| {
        let s = sim.as_mut().ok_or_else(|| null("sim"))?;
        let o = out.as_mut().ok_or_else(|| null("out"))?;
        let (_, r) = s.sim.snapshot().map_err(fail)?;
        *o = QslDiagnostics {
            t: r.t,
            e: r.e,
            e_vol: r.e_vol,
            kinetic: r.kinetic,
            gl_energy: r.gl_energy,
            diss_parallel_cum: r.diss_parallel_cum,
            diss_transport_cum: r.diss_transport_cum,
            max_q: r.max_q,
            r_measured: r.r_measured,
            clamp_count: r.clamp_count,
        };
        Ok(())
    })
}

/// Grid size of the simulation.
///
/// # Safety
/// `sim` must come from `qsl_sim_new`; `nx` and `ny` must be valid.
#[no_mangle]
pub unsafe extern "C" fn qsl_sim_grid(sim: *const QslSimulation, nx: *mut usize, ny: *mut usize) -> QslStatus {
    guard(|| {
        let s = sim.as_ref().ok_or_else(|| null("sim"))?;
        let g = s.sim.state.q.grid;
        *nx.as_mut().ok_or_else(|| null("nx"))? = g.nx;
        *ny.as_mut().ok_or_else(|| null("ny"))? = g.ny;
        Ok(())
    })
}

/// Copy the Q field as `(q11, q12, q13, q22, q23)` per cell, row-major with
/// x fastest. `len` is the capacity of `buf` in doubles and must be at least
/// `5·nx·ny`.
///
/// # Safety
/// `sim` must come from `qsl_sim_new` and `buf` must hold `len` doubles.
#[no_mangle]
pub unsafe extern "C" fn qsl_sim_q_field(sim: *const QslSimulation, buf: *mut f64, len: usize) -> QslStatus {
    guard(|| {
        let s = sim.as_ref().ok_or_else(|| null("sim"))?;
        if buf.is_null() {
            return Err(null("buf"));
        }
        let q = &s.sim.state.q.data;
        if len < 5 * q.len() {
            set_error(&format!("buffer holds {len} doubles, need {}", 5 * q.len()));
            return Err(QslStatus::BufferTooSmall);
        }
        let out = std::slice::from_raw_parts_mut(buf, 5 * q.len());
        for (chunk, t) in out.chunks_exact_mut(5).zip(q) {
            chunk.copy_from_slice(&t.components());
        }
        Ok(())
    })
}

/// Release a handle; NULL is ignored.
///
/// # Safety
/// `sim` must be NULL or come from `qsl_sim_new`, and not be used afterwards.
#[no_mangle]
pub unsafe extern "C" fn qsl_sim_free(sim: *mut QslSimulation) {
    if !sim.is_null() {
        drop(Box::from_raw(sim));
    }
}

/// Surface tension of the bulk potential with parameters `(a, b, c)`.
///
/// # Safety
/// `out` must be valid.
#[no_mangle]
pub unsafe extern "C" fn qsl_surface_tension(a: f64, b: f64, c: f64, out: *mut f64) -> QslStatus {
    guard(|| {
        let o = out.as_mut().ok_or_else(|| null("out"))?;
        *o = surface_tension(&params(a, b, c)?);
        Ok(())
    })
}

/// Quasi-distance `g(s)` on the uniaxial branch.
///
/// # Safety
/// `out` must be valid.
#[no_mangle]
pub unsafe extern "C" fn qsl_quasi_distance(s: f64, a: f64, b: f64, c: f64, out: *mut f64) -> QslStatus {
    guard(|| {
        let o = out.as_mut().ok_or_else(|| null("out"))?;
        *o = quasi_dist_uni(s, &params(a, b, c)?);
        Ok(())
    })
}

/// Bulk energy of `q = (q11, q12, q13, q22, q23)`.
///
/// # Safety
/// `q` must point to 5 doubles and `out` must be valid.
#[no_mangle]
pub unsafe extern "C" fn qsl_bulk_energy(q: *const f64, a: f64, b: f64, c: f64, out: *mut f64) -> QslStatus {
    guard(|| {
        if q.is_null() {
            return Err(null("q"));
        }
        let o = out.as_mut().ok_or_else(|| null("out"))?;
        let mut comp = [0.0; 5];
        comp.copy_from_slice(std::slice::from_raw_parts(q, 5));
        *o = bulk_energy(&QTensor::from_components(comp), &params(a, b, c)?);
        Ok(())
    })
}

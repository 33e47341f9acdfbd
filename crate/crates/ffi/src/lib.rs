//! C interface to the simulator.
//!
//! A simulation lives behind an opaque `BsflowSim` handle. Every call returns a
//! `BsflowStatus`; on failure the message is kept per thread and can be fetched
//! with `bsflow_last_error`. Panics never cross the boundary.

use std::cell::RefCell;
use std::ffi::{c_char, CStr};
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::ptr;

use bsflow::assembly::Scheme;
use bsflow::config::{self, ExperimentConfig};
use bsflow::runner::Run;
use bsflow::Error;

/// Result codes.
#[repr(C)]
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum BsflowStatus {
    Ok = 0,
    NullPointer = 1,
    InvalidArgument = 2,
    Config = 3,
    Geometric = 4,
    Solver = 5,
    Io = 6,
    BufferTooSmall = 7,
    Panic = 8,
}

#[repr(C)]
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum BsflowScheme {
    Gd = 0,
    Bgn = 1,
}

/// Per-step scalar diagnostics.
#[repr(C)]
#[derive(Clone, Copy, Debug, Default, PartialEq)]
pub struct BsflowDiagnostics {
    pub step: u64,
    pub t: f64,
    pub kinetic: f64,
    pub surface_kinetic: f64,
    pub interface_energy: f64,
    pub total_psi: f64,
    pub total_rho_gamma: f64,
    pub area: f64,
    pub min_psi: f64,
    pub min_rho_gamma: f64,
    pub edge_ratio: f64,
    pub dissipation: f64,
    pub energy_old: f64,
    pub energy_new: f64,
}

/// Opaque simulation handle.
pub struct BsflowSim {
    run: Run,
}

thread_local! {
    static LAST_ERROR: RefCell<Vec<u8>> = const { RefCell::new(Vec::new()) };
}

fn set_error(msg: &str) {
    LAST_ERROR.with(|e| {
        let mut e = e.borrow_mut();
        e.clear();
        e.extend(msg.bytes().filter(|&b| b != 0));
    });
}

fn status_of(e: &Error) -> BsflowStatus {
    match e {
        Error::Geometric(_) | Error::PointOutside(..) | Error::Refinement(_) | Error::StaleGeneration { .. } => BsflowStatus::Geometric,
        Error::Solver(_) => BsflowStatus::Solver,
        Error::Io(_) => BsflowStatus::Io,
        Error::Config(_) | Error::Json(_) => BsflowStatus::Config,
        Error::InvalidParameter(_) | Error::EosDomain { .. } => BsflowStatus::InvalidArgument,
    }
}

fn guard(f: impl FnOnce() -> Result<(), (BsflowStatus, String)>) -> BsflowStatus {
    match catch_unwind(AssertUnwindSafe(f)) {
        Ok(Ok(())) => BsflowStatus::Ok,
        Ok(Err((s, msg))) => {
            set_error(&msg);
            s
        }
        Err(p) => {
            let msg = p
                .downcast_ref::<&str>()
                .map(|s| s.to_string())
                .or_else(|| p.downcast_ref::<String>().cloned())
                .unwrap_or_else(|| "panic".into());
            set_error(&format!("internal panic: {msg}"));
            BsflowStatus::Panic
        }
    }
}

fn lib(e: Error) -> (BsflowStatus, String) {
    (status_of(&e), e.to_string())
}

fn null(what: &str) -> (BsflowStatus, String) {
    (BsflowStatus::NullPointer, format!("{what} is null"))
}

unsafe fn read_str<'a>(s: *const c_char, what: &str) -> Result<&'a str, (BsflowStatus, String)> {
    if s.is_null() {
        return Err(null(what));
    }
    CStr::from_ptr(s)
        .to_str()
        .map_err(|_| (BsflowStatus::InvalidArgument, format!("{what} is not valid UTF-8")))
}

unsafe fn sim_ref<'a>(sim: *const BsflowSim) -> Result<&'a BsflowSim, (BsflowStatus, String)> {
    sim.as_ref().ok_or_else(|| null("simulation handle"))
}

unsafe fn sim_mut<'a>(sim: *mut BsflowSim) -> Result<&'a mut BsflowSim, (BsflowStatus, String)> {
    sim.as_mut().ok_or_else(|| null("simulation handle"))
}

unsafe fn create(config: ExperimentConfig, out: *mut *mut BsflowSim) -> Result<(), (BsflowStatus, String)> {
    let run = Run::new(config).map_err(lib)?;
    *out = Box::into_raw(Box::new(BsflowSim { run }));
    Ok(())
}

/// Copy `src` into a caller buffer of `cap` doubles; `len` receives the required count.
unsafe fn copy_out(src: &[f64], buf: *mut f64, cap: usize, len: *mut usize) -> Result<(), (BsflowStatus, String)> {
    if !len.is_null() {
        *len = src.len();
    }
    if buf.is_null() {
        return if cap == 0 { Ok(()) } else { Err(null("output buffer")) };
    }
    if cap < src.len() {
        return Err((BsflowStatus::BufferTooSmall, format!("buffer holds {cap} values, {} needed", src.len())));
    }
    ptr::copy_nonoverlapping(src.as_ptr(), buf, src.len());
    Ok(())
}

/// Library version as a static NUL-terminated string.
#[no_mangle]
pub extern "C" fn bsflow_version() -> *const c_char {
    concat!(env!("CARGO_PKG_VERSION"), "\0").as_ptr().cast()
}

/// Copy the last error message of this thread into `buf` (NUL-terminated,
/// truncated to `cap`). Returns the full message length without the NUL.
///
/// # Safety
/// `buf` must be null or point to `cap` writable bytes.
#[no_mangle]
pub unsafe extern "C" fn bsflow_last_error(buf: *mut c_char, cap: usize) -> usize {
    LAST_ERROR.with(|e| {
        let e = e.borrow();
        if !buf.is_null() && cap > 0 {
            let n = e.len().min(cap - 1);
            ptr::copy_nonoverlapping(e.as_ptr().cast(), buf, n);
            *buf.add(n) = 0;
        }
        e.len()
    })
}

/// Create a simulation from a named preset.
///
/// # Safety
/// `name` must be a NUL-terminated string and `out` a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn bsflow_sim_from_preset(name: *const c_char, scheme: BsflowScheme, out: *mut *mut BsflowSim) -> BsflowStatus {
    guard(|| {
        if out.is_null() {
            return Err(null("output handle pointer"));
        }
        *out = ptr::null_mut();
        let mut c = config::preset(read_str(name, "preset name")?).map_err(lib)?;
        c.scheme = match scheme {
            BsflowScheme::Gd => Scheme::Gd,
            BsflowScheme::Bgn => Scheme::Bgn,
        };
        create(c, out)
    })
}

/// Create a simulation from a JSON configuration.
///
/// # Safety
/// `json` must be a NUL-terminated string and `out` a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn bsflow_sim_from_json(json: *const c_char, out: *mut *mut BsflowSim) -> BsflowStatus {
    guard(|| {
        if out.is_null() {
            return Err(null("output handle pointer"));
        }
        *out = ptr::null_mut();
        let c = ExperimentConfig::from_json(read_str(json, "configuration")?).map_err(lib)?;
        create(c, out)
    })
}

/// Release a handle. Null is ignored.
///
/// # Safety
/// `sim` must come from this library and not be used afterwards.
#[no_mangle]
pub unsafe extern "C" fn bsflow_sim_free(sim: *mut BsflowSim) {
    if !sim.is_null() {
        let _ = catch_unwind(AssertUnwindSafe(|| drop(Box::from_raw(sim))));
    }
}

/// Advance `n` time steps.
///
/// # Safety
/// `sim` must be a live handle.
#[no_mangle]
pub unsafe extern "C" fn bsflow_sim_step(sim: *mut BsflowSim, n: u64) -> BsflowStatus {
    guard(|| {
        let s = sim_mut(sim)?;
        for _ in 0..n {
            s.run.step().map_err(lib)?;
        }
        Ok(())
    })
}

/// Current time and step count.
///
/// # Safety
/// `sim` must be a live handle; `t` and `step` may be null.
#[no_mangle]
pub unsafe extern "C" fn bsflow_sim_time(sim: *const BsflowSim, t: *mut f64, step: *mut u64) -> BsflowStatus {
    guard(|| {
        let s = sim_ref(sim)?;
        if !t.is_null() {
            *t = s.run.state.t;
        }
        if !step.is_null() {
            *step = s.run.state.m as u64;
        }
        Ok(())
    })
}

/// Diagnostics of the latest step (or of the initial state).
///
/// # Safety
/// `sim` must be a live handle and `out` valid.
#[no_mangle]
pub unsafe extern "C" fn bsflow_sim_diagnostics(sim: *const BsflowSim, out: *mut BsflowDiagnostics) -> BsflowStatus {
    guard(|| {
        let s = sim_ref(sim)?;
        if out.is_null() {
            return Err(null("diagnostics pointer"));
        }
        let d = s.run.history.last().cloned().unwrap_or_default();
        *out = BsflowDiagnostics {
            step: d.step as u64,
            t: d.t,
            kinetic: d.kinetic,
            surface_kinetic: d.surface_kinetic,
            interface_energy: d.interface_energy,
            total_psi: d.total_psi,
            total_rho_gamma: d.total_rho_gamma,
            area: d.area,
            min_psi: d.min_psi,
            min_rho_gamma: d.min_rho_gamma,
            edge_ratio: d.edge_ratio,
            dissipation: d.dissipation,
            energy_old: d.energy_old,
            energy_new: d.energy_new,
        };
        Ok(())
    })
}

/// Interface vertices as interleaved x, y pairs (2K values).
/// Pass a null buffer with `cap` 0 to query the length.
///
/// # Safety
/// `sim` must be a live handle; `buf` must hold `cap` doubles.
#[no_mangle]
pub unsafe extern "C" fn bsflow_sim_vertices(sim: *const BsflowSim, buf: *mut f64, cap: usize, len: *mut usize) -> BsflowStatus {
    guard(|| {
        let s = sim_ref(sim)?;
        let flat: Vec<f64> = s.run.state.poly.vertices.iter().flat_map(|q| [q[0], q[1]]).collect();
        copy_out(&flat, buf, cap, len)
    })
}

/// Vertex values of the surface material density.
///
/// # Safety
/// As for `bsflow_sim_vertices`.
#[no_mangle]
pub unsafe extern "C" fn bsflow_sim_rho_gamma(sim: *const BsflowSim, buf: *mut f64, cap: usize, len: *mut usize) -> BsflowStatus {
    guard(|| copy_out(&sim_ref(sim)?.run.state.rho_gamma, buf, cap, len))
}

/// Vertex values of the surfactant concentration.
///
/// # Safety
/// As for `bsflow_sim_vertices`.
#[no_mangle]
pub unsafe extern "C" fn bsflow_sim_psi(sim: *const BsflowSim, buf: *mut f64, cap: usize, len: *mut usize) -> BsflowStatus {
    guard(|| copy_out(&sim_ref(sim)?.run.state.psi, buf, cap, len))
}

/// Run summary as JSON, NUL-terminated. `len` receives the length without the NUL.
///
/// # Safety
/// `sim` must be a live handle; `buf` must be null or hold `cap` bytes.
#[no_mangle]
pub unsafe extern "C" fn bsflow_sim_summary_json(sim: *const BsflowSim, buf: *mut c_char, cap: usize, len: *mut usize) -> BsflowStatus {
    guard(|| {
        let s = sim_ref(sim)?;
        let json = serde_json::to_string(&s.run.summary).map_err(|e| lib(e.into()))?;
        if !len.is_null() {
            *len = json.len();
        }
        if buf.is_null() && cap == 0 {
            return Ok(());
        }
        if buf.is_null() {
            return Err(null("output buffer"));
        }
        if cap <= json.len() {
            return Err((BsflowStatus::BufferTooSmall, format!("buffer holds {cap} bytes, {} needed", json.len() + 1)));
        }
        ptr::copy_nonoverlapping(json.as_ptr().cast(), buf, json.len());
        *buf.add(json.len()) = 0;
        Ok(())
    })
}

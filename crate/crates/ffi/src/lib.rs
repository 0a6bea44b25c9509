//! C interface to the `vqs` solver.
//!
//! Every fallible function returns a [`VqsStatus`]; on failure the message is
//! kept per thread and can be read with [`vqs_last_error_message`]. Handles
//! are opaque and must be released with the matching `*_free` function.
//! Panics never cross the boundary; they are reported as
//! [`VqsStatus::Panic`].

use std::cell::RefCell;
use std::ffi::{c_char, CStr};
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::path::Path;
use std::ptr;

use vqs::basis::{eigen_energy, BoxSystem};
use vqs::cli::compute_oracles;
use vqs::config::ExperimentConfig;
use vqs::{train, Error, TrainReport};

/// Result code of every fallible call.
#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum VqsStatus {
    Ok = 0,
    NullPointer = 1,
    InvalidUtf8 = 2,
    Config = 3,
    Domain = 4,
    DegenerateState = 5,
    Diverged = 6,
    NoConvergence = 7,
    Io = 8,
    BufferTooSmall = 9,
    Panic = 10,
    Other = 11,
}

/// Experiment configuration handle.
pub struct VqsConfig(ExperimentConfig);

/// Result of a training run.
pub struct VqsReport(TrainReport);

thread_local! {
    static LAST_ERROR: RefCell<String> = const { RefCell::new(String::new()) };
}

fn set_error(message: String) {
    LAST_ERROR.with(|e| *e.borrow_mut() = message);
}

fn status_of(err: &Error) -> VqsStatus {
    match err {
        Error::Config(_) => VqsStatus::Config,
        Error::Domain(_) => VqsStatus::Domain,
        Error::DegenerateState { .. } => VqsStatus::DegenerateState,
        Error::Diverged { .. } => VqsStatus::Diverged,
        Error::NoConvergence { .. } => VqsStatus::NoConvergence,
        Error::Io(_) | Error::Checkpoint(_) => VqsStatus::Io,
        Error::Autodiff(_) | Error::NotSymmetric { .. } => VqsStatus::Other,
    }
}

/// Runs `f`, converting errors and panics into a status code.
fn guard(f: impl FnOnce() -> Result<(), (VqsStatus, String)>) -> VqsStatus {
    match catch_unwind(AssertUnwindSafe(f)) {
        Ok(Ok(())) => {
            set_error(String::new());
            VqsStatus::Ok
        }
        Ok(Err((status, message))) => {
            set_error(message);
            status
        }
        Err(payload) => {
            let message = payload
                .downcast_ref::<&str>()
                .map(|s| s.to_string())
                .or_else(|| payload.downcast_ref::<String>().cloned())
                .unwrap_or_else(|| "panic".into());
            set_error(format!("internal panic: {message}"));
            VqsStatus::Panic
        }
    }
}

fn lift(err: Error) -> (VqsStatus, String) {
    (status_of(&err), err.to_string())
}

fn null(name: &str) -> (VqsStatus, String) {
    (VqsStatus::NullPointer, format!("{name} is null"))
}

unsafe fn read_str<'a>(p: *const c_char, name: &str) -> Result<&'a str, (VqsStatus, String)> {
    if p.is_null() {
        return Err(null(name));
    }
    CStr::from_ptr(p)
        .to_str()
        .map_err(|e| (VqsStatus::InvalidUtf8, format!("{name}: {e}")))
}

unsafe fn out_ptr<'a, T>(p: *mut T, name: &str) -> Result<&'a mut T, (VqsStatus, String)> {
    p.as_mut().ok_or_else(|| null(name))
}

unsafe fn handle<'a, T>(p: *const T, name: &str) -> Result<&'a T, (VqsStatus, String)> {
    p.as_ref().ok_or_else(|| null(name))
}

/// Copies the calling thread's last error message into `buf` as a
/// NUL-terminated string, truncating if needed. Returns the full message
/// length in bytes, excluding the terminator. `buf` may be null to query
/// the length.
///
/// # Safety
/// `buf` must be null or point to `len` writable bytes.
#[no_mangle]
pub unsafe extern "C" fn vqs_last_error_message(buf: *mut c_char, len: usize) -> usize {
    LAST_ERROR.with(|e| {
        let msg = e.borrow();
        if !buf.is_null() && len > 0 {
            let n = msg.len().min(len - 1);
            ptr::copy_nonoverlapping(msg.as_ptr(), buf.cast::<u8>(), n);
            *buf.add(n) = 0;
        }
        msg.len()
    })
}

/// Loads a bundled preset (`unperturbed`, `perturbed_a`, `perturbed_b`).
///
/// # Safety
/// `name` must be a NUL-terminated string; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn vqs_config_preset(name: *const c_char, out: *mut *mut VqsConfig) -> VqsStatus {
    guard(|| {
        let out = out_ptr(out, "out")?;
        let name = read_str(name, "name")?;
        let cfg = ExperimentConfig::preset(name)
            .ok_or_else(|| (VqsStatus::Config, format!("unknown preset {name:?}")))?;
        *out = Box::into_raw(Box::new(VqsConfig(cfg)));
        Ok(())
    })
}

/// Parses configuration text.
///
/// # Safety
/// `text` must be a NUL-terminated string; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn vqs_config_parse(text: *const c_char, out: *mut *mut VqsConfig) -> VqsStatus {
    guard(|| {
        let out = out_ptr(out, "out")?;
        let cfg = ExperimentConfig::parse(read_str(text, "text")?).map_err(lift)?;
        *out = Box::into_raw(Box::new(VqsConfig(cfg)));
        Ok(())
    })
}

/// Reads a configuration file, falling back to a preset of the same name.
///
/// # Safety
/// `path` must be a NUL-terminated string; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn vqs_config_load(path: *const c_char, out: *mut *mut VqsConfig) -> VqsStatus {
    guard(|| {
        let out = out_ptr(out, "out")?;
        let cfg = ExperimentConfig::load(Path::new(read_str(path, "path")?)).map_err(lift)?;
        *out = Box::into_raw(Box::new(VqsConfig(cfg)));
        Ok(())
    })
}

/// Overrides the iteration cap.
///
/// # Safety
/// `cfg` must be null or a live handle.
#[no_mangle]
pub unsafe extern "C" fn vqs_config_set_max_iters(cfg: *mut VqsConfig, max_iters: usize) -> VqsStatus {
    guard(|| {
        out_ptr(cfg, "cfg")?.0.train.max_iters = max_iters;
        Ok(())
    })
}

/// Overrides the initialization seed.
///
/// # Safety
/// `cfg` must be null or a live handle.
#[no_mangle]
pub unsafe extern "C" fn vqs_config_set_seed(cfg: *mut VqsConfig, seed: u64) -> VqsStatus {
    guard(|| {
        out_ptr(cfg, "cfg")?.0.train.seed = seed;
        Ok(())
    })
}

/// Overrides the basis size N and quadrature size G.
///
/// # Safety
/// `cfg` must be null or a live handle.
#[no_mangle]
pub unsafe extern "C" fn vqs_config_set_sizes(cfg: *mut VqsConfig, basis_size: usize, grid_size: usize) -> VqsStatus {
    guard(|| {
        let c = &mut out_ptr(cfg, "cfg")?.0;
        let mut next = c.clone();
        next.basis.n = basis_size;
        next.quadrature.g = grid_size;
        next.train_config().and_then(|t| t.validate()).map_err(lift)?;
        *c = next;
        Ok(())
    })
}

/// Releases a configuration. Null is ignored.
///
/// # Safety
/// `cfg` must be null or a handle not yet freed.
#[no_mangle]
pub unsafe extern "C" fn vqs_config_free(cfg: *mut VqsConfig) {
    if !cfg.is_null() {
        drop(Box::from_raw(cfg));
    }
}

/// Box eigenvalue `E_n` for width `a`, mass `mu`, and `hbar`.
///
/// # Safety
/// `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn vqs_box_energy(n: usize, a: f64, mu: f64, hbar: f64, out: *mut f64) -> VqsStatus {
    guard(|| {
        let out = out_ptr(out, "out")?;
        let sys = BoxSystem::with_units(a, mu, hbar, 0.0).map_err(lift)?;
        *out = eigen_energy(n, &sys).map_err(lift)?;
        Ok(())
    })
}

/// Ground energies from the truncated-basis eigensolver and the
/// finite-difference grid solver.
///
/// # Safety
/// `cfg` must be a live handle; the outputs must be writable.
#[no_mangle]
pub unsafe extern "C" fn vqs_oracle_energies(
    cfg: *const VqsConfig,
    basis_energy: *mut f64,
    grid_energy: *mut f64,
) -> VqsStatus {
    guard(|| {
        let cfg = handle(cfg, "cfg")?;
        let basis_energy = out_ptr(basis_energy, "basis_energy")?;
        let grid_energy = out_ptr(grid_energy, "grid_energy")?;
        let o = compute_oracles(&cfg.0).map_err(lift)?;
        *basis_energy = o.basis_energy();
        *grid_energy = o.fd.energy;
        Ok(())
    })
}

/// Trains a network for `cfg`. Blocks until training stops.
///
/// # Safety
/// `cfg` must be a live handle; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn vqs_train(cfg: *const VqsConfig, out: *mut *mut VqsReport) -> VqsStatus {
    guard(|| {
        let cfg = handle(cfg, "cfg")?;
        let out = out_ptr(out, "out")?;
        let tc = cfg.0.train_config().map_err(lift)?;
        let report = train(&tc).map_err(lift)?;
        *out = Box::into_raw(Box::new(VqsReport(report)));
        Ok(())
    })
}

/// Scalar summary of a report. Any output pointer may be null.
///
/// # Safety
/// `report` must be a live handle; non-null outputs must be writable.
#[no_mangle]
pub unsafe extern "C" fn vqs_report_summary(
    report: *const VqsReport,
    final_energy: *mut f64,
    oracle_energy: *mut f64,
    oracle_overlap: *mut f64,
    iterations: *mut usize,
    converged: *mut bool,
) -> VqsStatus {
    guard(|| {
        let r = &handle(report, "report")?.0;
        if let Some(p) = final_energy.as_mut() {
            *p = r.final_energy;
        }
        if let Some(p) = oracle_energy.as_mut() {
            *p = r.oracle_energy;
        }
        if let Some(p) = oracle_overlap.as_mut() {
            *p = r.oracle_overlap;
        }
        if let Some(p) = iterations.as_mut() {
            *p = r.iterations;
        }
        if let Some(p) = converged.as_mut() {
            *p = r.converged;
        }
        Ok(())
    })
}

fn copy_out(values: &[f64], buf: *mut f64, len: usize, needed: *mut usize) -> Result<(), (VqsStatus, String)> {
    if let Some(n) = unsafe { needed.as_mut() } {
        *n = values.len();
    }
    if buf.is_null() {
        return if len == 0 { Ok(()) } else { Err(null("buf")) };
    }
    if len < values.len() {
        return Err((
            VqsStatus::BufferTooSmall,
            format!("buffer holds {len} values, {} needed", values.len()),
        ));
    }
    unsafe { ptr::copy_nonoverlapping(values.as_ptr(), buf, values.len()) };
    Ok(())
}

/// Copies the sign-fixed unit coefficient vector into `buf`. The required
/// length is written to `needed` when it is non-null; pass a null `buf` with
/// `len = 0` to query it.
///
/// # Safety
/// `report` must be a live handle; `buf` must be null or hold `len` values.
#[no_mangle]
pub unsafe extern "C" fn vqs_report_coefficients(
    report: *const VqsReport,
    buf: *mut f64,
    len: usize,
    needed: *mut usize,
) -> VqsStatus {
    guard(|| {
        let r = &handle(report, "report")?.0;
        copy_out(r.final_coefficients.as_slice().expect("contiguous"), buf, len, needed)
    })
}

/// Copies the per-iteration energy trace into `buf`, same protocol as
/// [`vqs_report_coefficients`].
///
/// # Safety
/// `report` must be a live handle; `buf` must be null or hold `len` values.
#[no_mangle]
pub unsafe extern "C" fn vqs_report_energy_trace(
    report: *const VqsReport,
    buf: *mut f64,
    len: usize,
    needed: *mut usize,
) -> VqsStatus {
    guard(|| {
        let r = &handle(report, "report")?.0;
        let energies: Vec<f64> = r.trace.iter().map(|t| t.energy).collect();
        copy_out(&energies, buf, len, needed)
    })
}

/// Releases a report. Null is ignored.
///
/// # Safety
/// `report` must be null or a handle not yet freed.
#[no_mangle]
pub unsafe extern "C" fn vqs_report_free(report: *mut VqsReport) {
    if !report.is_null() {
        drop(Box::from_raw(report));
    }
}

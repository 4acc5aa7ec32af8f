//! C interface to the pulsatile-loop channel model and particle simulator.
//!
//! Every fallible function returns a [`PlStatus`] code and writes results
//! through out-pointers. On failure, `pl_last_error` returns a description
//! for the calling thread. Handles are opaque and owned by the caller, who
//! releases them with the matching `*_free` function.

use std::cell::RefCell;
use std::ffi::{c_char, CStr, CString};
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::ptr;

use pulsatile_loop::bench::{load_scenario, Scenario};
use pulsatile_loop::cir::{cir_timeseries, received_signal, steady_flow_reference};
use pulsatile_loop::dispersion::moments;
use pulsatile_loop::pbs::{simulate, PbsRun};
use pulsatile_loop::{Error, PbsConfig};

/// Result codes shared by every function.
#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum PlStatus {
    Ok = 0,
    /// A required pointer argument was null.
    NullPointer = 1,
    /// Malformed configuration or invalid parameter.
    Config = 2,
    /// Outside the dispersive regime, or not a slender channel.
    Regime = 3,
    /// Numerical failure (quadrature, Bessel range, degenerate variance).
    Numerical = 5,
    Io = 6,
    /// Output buffer too small.
    BufferTooSmall = 7,
    /// Internal panic caught at the boundary.
    Panic = 99,
}

/// Opaque scenario handle.
pub struct PlScenario(Scenario);

/// Opaque handle to a finished particle simulation.
pub struct PlPbsRun(PbsRun);

/// Particle simulation settings.
#[repr(C)]
#[derive(Debug, Clone, Copy)]
pub struct PlPbsConfig {
    pub particles: usize,
    pub timestep: f64,
    pub duration: f64,
    pub seed: u64,
    pub sample_interval: f64,
    /// 0 uses all cores; results never depend on it.
    pub workers: usize,
}

impl From<PlPbsConfig> for PbsConfig {
    fn from(c: PlPbsConfig) -> Self {
        PbsConfig {
            particles: c.particles,
            timestep: c.timestep,
            duration: c.duration,
            seed: c.seed,
            sample_interval: c.sample_interval,
            workers: c.workers,
        }
    }
}

impl From<PbsConfig> for PlPbsConfig {
    fn from(c: PbsConfig) -> Self {
        PlPbsConfig {
            particles: c.particles,
            timestep: c.timestep,
            duration: c.duration,
            seed: c.seed,
            sample_interval: c.sample_interval,
            workers: c.workers,
        }
    }
}

thread_local! {
    static LAST_ERROR: RefCell<Option<CString>> = const { RefCell::new(None) };
}

fn set_error(message: String) {
    let c = CString::new(message.replace('\0', " ")).unwrap_or_default();
    LAST_ERROR.with(|e| *e.borrow_mut() = Some(c));
}

fn status_of(e: &Error) -> PlStatus {
    match e {
        Error::Config { .. }
        | Error::InvalidParameter { .. }
        | Error::Csv(_)
        | Error::GridMismatch(_) => PlStatus::Config,
        Error::Regime(_) | Error::NotSlender { .. } => PlStatus::Regime,
        Error::BesselOutOfRange(_)
        | Error::DegenerateDistribution(_)
        | Error::Quadrature { .. } => PlStatus::Numerical,
        Error::Io { .. } => PlStatus::Io,
    }
}

/// Runs `f`, recording any error or panic for `pl_last_error`.
fn guard(f: impl FnOnce() -> Result<(), (PlStatus, String)>) -> PlStatus {
    match catch_unwind(AssertUnwindSafe(f)) {
        Ok(Ok(())) => PlStatus::Ok,
        Ok(Err((status, message))) => {
            set_error(message);
            status
        }
        Err(panic) => {
            let message = panic
                .downcast_ref::<&str>()
                .map(|s| s.to_string())
                .or_else(|| panic.downcast_ref::<String>().cloned())
                .unwrap_or_else(|| "unknown panic".into());
            set_error(format!("internal panic: {message}"));
            PlStatus::Panic
        }
    }
}

fn lift<T>(r: pulsatile_loop::Result<T>) -> Result<T, (PlStatus, String)> {
    r.map_err(|e| (status_of(&e), e.to_string()))
}

fn null(what: &str) -> (PlStatus, String) {
    (PlStatus::NullPointer, format!("`{what}` is null"))
}

unsafe fn times<'a>(t: *const f64, n: usize) -> Result<&'a [f64], (PlStatus, String)> {
    if n == 0 {
        return Ok(&[]);
    }
    if t.is_null() {
        return Err(null("t"));
    }
    Ok(std::slice::from_raw_parts(t, n))
}

/// Description of the last error on this thread, or null. Valid until the
/// next failing call on the same thread.
#[no_mangle]
pub extern "C" fn pl_last_error() -> *const c_char {
    LAST_ERROR.with(|e| e.borrow().as_ref().map_or(ptr::null(), |c| c.as_ptr()))
}

/// Library version as a static NUL-terminated string.
#[no_mangle]
pub extern "C" fn pl_version() -> *const c_char {
    concat!(env!("CARGO_PKG_VERSION"), "\0").as_ptr().cast()
}

/// Parses a TOML scenario configuration.
///
/// # Safety
/// `config` must be a NUL-terminated string and `out` a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn pl_scenario_from_toml(
    config: *const c_char,
    out: *mut *mut PlScenario,
) -> PlStatus {
    guard(|| {
        if config.is_null() {
            return Err(null("config"));
        }
        if out.is_null() {
            return Err(null("out"));
        }
        let text = CStr::from_ptr(config)
            .to_str()
            .map_err(|e| (PlStatus::Config, format!("config is not UTF-8: {e}")))?;
        let scenario = lift(load_scenario(text))?;
        *out = Box::into_raw(Box::new(PlScenario(scenario)));
        Ok(())
    })
}

/// # Safety
/// `scenario` must come from `pl_scenario_from_toml` and not be used
/// afterwards. Null is ignored.
#[no_mangle]
pub unsafe extern "C" fn pl_scenario_free(scenario: *mut PlScenario) {
    if !scenario.is_null() {
        drop(Box::from_raw(scenario));
    }
}

/// Whether the scenario's regime report carries any advisory verdict.
///
/// # Safety
/// `scenario` must be a live handle.
#[no_mangle]
pub unsafe extern "C" fn pl_scenario_has_advisory(scenario: *const PlScenario) -> bool {
    scenario.as_ref().is_some_and(|s| s.0.regime.has_advisory())
}

/// Mean (m) and variance (m²) of the unwrapped axial displacement at `t`.
///
/// # Safety
/// `scenario` must be a live handle; `mean` and `variance` valid pointers.
#[no_mangle]
pub unsafe extern "C" fn pl_moments(
    scenario: *const PlScenario,
    t: f64,
    mean: *mut f64,
    variance: *mut f64,
) -> PlStatus {
    guard(|| {
        let s = &scenario.as_ref().ok_or_else(|| null("scenario"))?.0;
        if mean.is_null() || variance.is_null() {
            return Err(null("mean/variance"));
        }
        let m = moments(&s.waveform, &s.geometry, &s.transport, t);
        *mean = m.mean;
        *variance = m.variance;
        Ok(())
    })
}

/// Fraction of all molecules inside the receiver at `t` (not normalized).
///
/// # Safety
/// `scenario` must be a live handle; `fraction` a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn pl_received_signal(
    scenario: *const PlScenario,
    t: f64,
    fraction: *mut f64,
) -> PlStatus {
    guard(|| {
        let s = &scenario.as_ref().ok_or_else(|| null("scenario"))?.0;
        if fraction.is_null() {
            return Err(null("fraction"));
        }
        let m = moments(&s.waveform, &s.geometry, &s.transport, t);
        *fraction = lift(received_signal(&m, s.geometry.loop_length, &s.receiver))?;
        Ok(())
    })
}

/// Normalized analytical received signal at `n` strictly increasing
/// positive times; with `steady`, the constant-flow baseline instead.
///
/// # Safety
/// `t` and `out` must point to `n` doubles each.
#[no_mangle]
pub unsafe extern "C" fn pl_cir(
    scenario: *const PlScenario,
    t: *const f64,
    n: usize,
    steady: bool,
    out: *mut f64,
) -> PlStatus {
    guard(|| {
        let s = &scenario.as_ref().ok_or_else(|| null("scenario"))?.0;
        let grid = times(t, n)?;
        if out.is_null() && n > 0 {
            return Err(null("out"));
        }
        let series = lift(if steady {
            steady_flow_reference(s, grid)
        } else {
            cir_timeseries(s, grid)
        })?;
        std::slice::from_raw_parts_mut(out, n).copy_from_slice(&series.values);
        Ok(())
    })
}

/// Desk-scale simulation settings (5·10⁴ particles, Δt = 0.5 ms, 10 s).
#[no_mangle]
pub extern "C" fn pl_pbs_config_desk() -> PlPbsConfig {
    PbsConfig::desk().into()
}

/// Full-scale simulation settings (5·10⁵ particles, Δt = 0.1 ms, 20 s).
#[no_mangle]
pub extern "C" fn pl_pbs_config_full() -> PlPbsConfig {
    PbsConfig::default().into()
}

/// Particle simulation counted at `n` sample times (positive multiples of
/// the timestep).
///
/// # Safety
/// `scenario` must be a live handle, `config` and `out` valid pointers and
/// `t` must point to `n` doubles.
#[no_mangle]
pub unsafe extern "C" fn pl_pbs_run(
    scenario: *const PlScenario,
    config: *const PlPbsConfig,
    t: *const f64,
    n: usize,
    out: *mut *mut PlPbsRun,
) -> PlStatus {
    guard(|| {
        let s = &scenario.as_ref().ok_or_else(|| null("scenario"))?.0;
        let config: PbsConfig = (*config.as_ref().ok_or_else(|| null("config"))?).into();
        let grid = times(t, n)?;
        if out.is_null() {
            return Err(null("out"));
        }
        let run = lift(simulate(s, &config, grid))?;
        *out = Box::into_raw(Box::new(PlPbsRun(run)));
        Ok(())
    })
}

/// Number of samples in a simulation result.
///
/// # Safety
/// `run` must be a live handle or null.
#[no_mangle]
pub unsafe extern "C" fn pl_pbs_run_len(run: *const PlPbsRun) -> usize {
    run.as_ref().map_or(0, |r| r.0.counts.len())
}

/// Copies the normalized signal (`normalized`) and raw receiver counts
/// (`counts`) into caller buffers of length `capacity`; either may be null.
///
/// # Safety
/// `run` must be a live handle; non-null buffers must hold `capacity`
/// elements.
#[no_mangle]
pub unsafe extern "C" fn pl_pbs_run_copy(
    run: *const PlPbsRun,
    normalized: *mut f64,
    counts: *mut u64,
    capacity: usize,
) -> PlStatus {
    guard(|| {
        let r = &run.as_ref().ok_or_else(|| null("run"))?.0;
        let n = r.counts.len();
        if capacity < n {
            return Err((
                PlStatus::BufferTooSmall,
                format!("need {n} elements, got {capacity}"),
            ));
        }
        if !normalized.is_null() {
            std::slice::from_raw_parts_mut(normalized, n).copy_from_slice(&r.series.values);
        }
        if !counts.is_null() {
            for (dst, &c) in std::slice::from_raw_parts_mut(counts, n)
                .iter_mut()
                .zip(&r.counts)
            {
                *dst = c as u64;
            }
        }
        Ok(())
    })
}

/// Particles clamped onto the wall after exhausting resamples.
///
/// # Safety
/// `run` must be a live handle or null.
#[no_mangle]
pub unsafe extern "C" fn pl_pbs_run_wall_clamps(run: *const PlPbsRun) -> u64 {
    run.as_ref().map_or(0, |r| r.0.manifest.wall_clamps)
}

/// # Safety
/// `run` must come from `pl_pbs_run` and not be used afterwards. Null is
/// ignored.
#[no_mangle]
pub unsafe extern "C" fn pl_pbs_run_free(run: *mut PlPbsRun) {
    if !run.is_null() {
        drop(Box::from_raw(run));
    }
}

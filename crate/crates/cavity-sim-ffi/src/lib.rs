//! C ABI over the simulator: parse a TOML config, integrate, read the rows,
//! write the artifacts. The surface is deliberately small — one opaque run
//! handle, one flat row struct, one status enum — and is mirrored by the
//! hand-maintained header in `include/cavity_sim.h`. A test in this crate
//! keeps the two in sync; when editing either side, edit both.
//!
//! Contract, stated once:
//! * Every function is safe to call from any thread, but a run handle must
//!   not be used concurrently.
//! * Functions returning [`CavitySimStatus`] leave an explanation for the
//!   most recent failure in thread-local storage; read it with
//!   [`cavity_sim_last_error_message`].
//! * Strings passed in must be NUL-terminated UTF-8. Strings returned stay
//!   owned by the library.
//! * Every handle from [`cavity_sim_run_from_toml`] must be released with
//!   [`cavity_sim_run_free`].

use std::cell::RefCell;
use std::ffi::{c_char, CStr, CString};
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::path::Path;

use cavity_sim::output::write_run_outputs;
use cavity_sim::{integrate, RunConfig, SimError, Trajectory};

/// Result of every fallible call. The numeric values are frozen ABI.
#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum CavitySimStatus {
    Ok = 0,
    NullPointer = 1,
    InvalidConfig = 2,
    NumericalFailure = 3,
    Io = 4,
    InvalidUtf8 = 5,
    OutOfRange = 6,
    Internal = 7,
}

/// One output sample, flattened for C. For a frozen-atom run the cross
/// amplitudes c12/c21 are zero and `has_motion` is 0 (x and p read 0).
#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CavitySimRow {
    pub t: f64,
    pub re_c11: f64,
    pub im_c11: f64,
    pub re_c12: f64,
    pub im_c12: f64,
    pub re_c21: f64,
    pub im_c21: f64,
    pub re_c22: f64,
    pub im_c22: f64,
    pub norm: f64,
    pub concurrence: f64,
    pub trace_distance: f64,
    pub x: f64,
    pub p: f64,
    pub has_motion: u8,
}

/// Opaque run handle: the parsed config plus its computed trajectory.
pub struct CavitySimRun {
    config: RunConfig,
    trajectory: Trajectory,
}

thread_local! {
    static LAST_ERROR: RefCell<CString> = RefCell::new(CString::default());
}

fn set_error(message: &str) {
    let sanitized = message.replace('\0', " ");
    LAST_ERROR.with(|slot| {
        *slot.borrow_mut() = CString::new(sanitized).unwrap_or_default();
    });
}

fn clear_error() {
    LAST_ERROR.with(|slot| {
        *slot.borrow_mut() = CString::default();
    });
}

fn status_of(err: &SimError) -> CavitySimStatus {
    match err {
        SimError::Config(_) | SimError::Validation(_) => CavitySimStatus::InvalidConfig,
        SimError::ZeroState { .. }
        | SimError::NotNormalized { .. }
        | SimError::NonFiniteState { .. }
        | SimError::StepUnderflow { .. }
        | SimError::QuotientSingular { .. } => CavitySimStatus::NumericalFailure,
        SimError::Io { .. } => CavitySimStatus::Io,
        SimError::GridMismatch(_) => CavitySimStatus::Internal,
    }
}

fn fail(err: &SimError) -> CavitySimStatus {
    set_error(&err.to_string());
    status_of(err)
}

/// Run `body` with a panic fence: a Rust panic must never unwind across the
/// C boundary, so it degrades into `Internal`.
fn guarded(body: impl FnOnce() -> CavitySimStatus) -> CavitySimStatus {
    match catch_unwind(AssertUnwindSafe(body)) {
        Ok(status) => status,
        Err(_) => {
            set_error("internal panic; this is a bug in cavity-sim");
            CavitySimStatus::Internal
        }
    }
}

/// # Safety
/// `ptr` must be NULL or a NUL-terminated string valid for reads.
unsafe fn utf8_in<'a>(ptr: *const c_char, what: &str) -> Result<&'a str, CavitySimStatus> {
    if ptr.is_null() {
        set_error(&format!("{what} is NULL"));
        return Err(CavitySimStatus::NullPointer);
    }
    unsafe { CStr::from_ptr(ptr) }.to_str().map_err(|_| {
        set_error(&format!("{what} is not valid UTF-8"));
        CavitySimStatus::InvalidUtf8
    })
}

/// Parse a TOML run configuration, integrate it, and hand back a run handle
/// through `out_run`. On any failure `*out_run` is left NULL.
///
/// # Safety
/// `config_toml` must be a NUL-terminated string valid for reads, and
/// `out_run` must be valid for a pointer write.
#[no_mangle]
pub unsafe extern "C" fn cavity_sim_run_from_toml(
    config_toml: *const c_char,
    out_run: *mut *mut CavitySimRun,
) -> CavitySimStatus {
    guarded(|| {
        if out_run.is_null() {
            set_error("out_run is NULL");
            return CavitySimStatus::NullPointer;
        }
        unsafe { out_run.write(std::ptr::null_mut()) };
        let text = match unsafe { utf8_in(config_toml, "config_toml") } {
            Ok(text) => text,
            Err(status) => return status,
        };
        let config = match RunConfig::parse(text) {
            Ok(config) => config,
            Err(e) => return fail(&e),
        };
        let result = config.initial_state().and_then(|initial| {
            integrate(
                &config.system_params(),
                &initial,
                &config.integrator_config(),
                config.mode(),
            )
        });
        match result {
            Ok(trajectory) => {
                let run = Box::new(CavitySimRun { config, trajectory });
                unsafe { out_run.write(Box::into_raw(run)) };
                clear_error();
                CavitySimStatus::Ok
            }
            Err(e) => fail(&e),
        }
    })
}

/// Number of sampled rows in the run (always at least 1: the initial state).
///
/// # Safety
/// `run` must be NULL or a live handle from [`cavity_sim_run_from_toml`].
#[no_mangle]
pub unsafe extern "C" fn cavity_sim_run_row_count(run: *const CavitySimRun) -> usize {
    if run.is_null() {
        return 0;
    }
    unsafe { &*run }.trajectory.rows.len()
}

/// Copy row `index` into `out_row`.
///
/// # Safety
/// `run` must be a live handle and `out_row` valid for a struct write.
#[no_mangle]
pub unsafe extern "C" fn cavity_sim_run_row(
    run: *const CavitySimRun,
    index: usize,
    out_row: *mut CavitySimRow,
) -> CavitySimStatus {
    guarded(|| {
        if run.is_null() || out_row.is_null() {
            set_error("run or out_row is NULL");
            return CavitySimStatus::NullPointer;
        }
        let rows = &unsafe { &*run }.trajectory.rows;
        let Some(row) = rows.get(index) else {
            set_error(&format!(
                "row index {index} out of range (run has {} rows)",
                rows.len()
            ));
            return CavitySimStatus::OutOfRange;
        };
        // 2-slot rows are [c11, c22]; 4-slot rows are [c11, c12, c21, c22].
        let (c11, c12, c21, c22) = match *row.amps {
            [a, b] => (a, Default::default(), Default::default(), b),
            [a, b, c, d] => (a, b, c, d),
            _ => {
                set_error("row has an unexpected amplitude layout");
                return CavitySimStatus::Internal;
            }
        };
        let motion = row.motion;
        unsafe {
            out_row.write(CavitySimRow {
                t: row.t,
                re_c11: c11.re,
                im_c11: c11.im,
                re_c12: c12.re,
                im_c12: c12.im,
                re_c21: c21.re,
                im_c21: c21.im,
                re_c22: c22.re,
                im_c22: c22.im,
                norm: row.norm,
                concurrence: row.concurrence,
                trace_distance: row.trace_distance,
                x: motion.map_or(0.0, |m| m.x),
                p: motion.map_or(0.0, |m| m.p),
                has_motion: u8::from(motion.is_some()),
            });
        }
        clear_error();
        CavitySimStatus::Ok
    })
}

/// Write the run's CSV and meta files (named after the config's `name` key)
/// into the directory `out_dir`.
///
/// # Safety
/// `run` must be a live handle and `out_dir` a NUL-terminated string valid
/// for reads.
#[no_mangle]
pub unsafe extern "C" fn cavity_sim_run_write_outputs(
    run: *const CavitySimRun,
    out_dir: *const c_char,
) -> CavitySimStatus {
    guarded(|| {
        if run.is_null() {
            set_error("run is NULL");
            return CavitySimStatus::NullPointer;
        }
        let dir = match unsafe { utf8_in(out_dir, "out_dir") } {
            Ok(dir) => dir,
            Err(status) => return status,
        };
        let run = unsafe { &*run };
        match write_run_outputs(
            &run.trajectory,
            &run.config,
            Path::new(dir),
            run.config.emit_svg,
            &[],
        ) {
            Ok(_) => {
                clear_error();
                CavitySimStatus::Ok
            }
            Err(e) => fail(&e),
        }
    })
}

/// Release a run handle. NULL is accepted and ignored.
///
/// # Safety
/// `run` must be NULL or a handle from [`cavity_sim_run_from_toml`] that has
/// not been freed before.
#[no_mangle]
pub unsafe extern "C" fn cavity_sim_run_free(run: *mut CavitySimRun) {
    if !run.is_null() {
        drop(unsafe { Box::from_raw(run) });
    }
}

/// Explanation of this thread's most recent failure, empty if the last call
/// succeeded. The pointer stays valid until the next cavity_sim call on the
/// same thread.
#[no_mangle]
pub extern "C" fn cavity_sim_last_error_message() -> *const c_char {
    LAST_ERROR.with(|slot| slot.borrow().as_ptr())
}

/// Library version as a static NUL-terminated string.
#[no_mangle]
pub extern "C" fn cavity_sim_version() -> *const c_char {
    concat!(env!("CARGO_PKG_VERSION"), "\0").as_ptr().cast()
}

#[cfg(test)]
mod tests {
    use super::*;

    const HEADER: &str = include_str!("../include/cavity_sim.h");
    const LIB_RS: &str = include_str!("lib.rs");

    fn run_from(toml: &str) -> (CavitySimStatus, *mut CavitySimRun) {
        let text = CString::new(toml).unwrap();
        let mut run: *mut CavitySimRun = std::ptr::null_mut();
        let status = unsafe { cavity_sim_run_from_toml(text.as_ptr(), &mut run) };
        (status, run)
    }

    fn last_error() -> String {
        unsafe { CStr::from_ptr(cavity_sim_last_error_message()) }
            .to_str()
            .unwrap()
            .to_owned()
    }

    #[test]
    fn runs_end_to_end_and_exposes_rows() {
        let (status, run) = run_from("name = \"ffi\"\nt_end = 0.5\nsample_every = 5\n");
        assert_eq!(status, CavitySimStatus::Ok);
        assert_eq!(last_error(), "");

        let count = unsafe { cavity_sim_run_row_count(run) };
        assert_eq!(count, 101);

        let mut row = CavitySimRow {
            t: f64::NAN,
            re_c11: 0.0,
            im_c11: 0.0,
            re_c12: 0.0,
            im_c12: 0.0,
            re_c21: 0.0,
            im_c21: 0.0,
            re_c22: 0.0,
            im_c22: 0.0,
            norm: 0.0,
            concurrence: 0.0,
            trace_distance: 0.0,
            x: 0.0,
            p: 0.0,
            has_motion: 0,
        };
        assert_eq!(
            unsafe { cavity_sim_run_row(run, 0, &mut row) },
            CavitySimStatus::Ok
        );
        assert_eq!(row.t, 0.0);
        assert_eq!(row.re_c11, 1.0);
        assert_eq!(row.norm, 1.0);
        assert_eq!(row.has_motion, 1);

        assert_eq!(
            unsafe { cavity_sim_run_row(run, count, &mut row) },
            CavitySimStatus::OutOfRange
        );
        assert!(last_error().contains("out of range"));

        unsafe { cavity_sim_run_free(run) };
    }

    #[test]
    fn rejects_broken_configs_with_messages() {
        let (status, run) = run_from("gamma_c = -1.0\n");
        assert_eq!(status, CavitySimStatus::InvalidConfig);
        assert!(run.is_null());
        assert!(last_error().contains("gamma_c"));

        let mut out: *mut CavitySimRun = std::ptr::null_mut();
        assert_eq!(
            unsafe { cavity_sim_run_from_toml(std::ptr::null(), &mut out) },
            CavitySimStatus::NullPointer
        );
        assert_eq!(
            unsafe { cavity_sim_run_from_toml(std::ptr::null(), std::ptr::null_mut()) },
            CavitySimStatus::NullPointer
        );

        let bad_utf8 = [0xffu8, 0xfe, 0x00];
        assert_eq!(
            unsafe { cavity_sim_run_from_toml(bad_utf8.as_ptr().cast(), &mut out) },
            CavitySimStatus::InvalidUtf8
        );
    }

    #[test]
    fn singular_dynamics_surface_as_numerical_failure() {
        let (status, run) =
            run_from("prefactor_term = \"quotient\"\np0 = 0.0\nt_end = 0.1\n");
        assert_eq!(status, CavitySimStatus::NumericalFailure);
        assert!(run.is_null());
    }

    #[test]
    fn writes_outputs_into_a_directory() {
        let dir = tempfile::tempdir().unwrap();
        let (status, run) = run_from("name = \"ffi-out\"\nt_end = 0.2\nsample_every = 10\n");
        assert_eq!(status, CavitySimStatus::Ok);
        let c_dir = CString::new(dir.path().to_str().unwrap()).unwrap();
        assert_eq!(
            unsafe { cavity_sim_run_write_outputs(run, c_dir.as_ptr()) },
            CavitySimStatus::Ok
        );
        assert!(dir.path().join("ffi-out.csv").is_file());
        assert!(dir.path().join("ffi-out.meta").is_file());
        unsafe { cavity_sim_run_free(run) };
    }

    #[test]
    fn version_is_the_package_version() {
        let v = unsafe { CStr::from_ptr(cavity_sim_version()) };
        assert_eq!(v.to_str().unwrap(), env!("CARGO_PKG_VERSION"));
    }

    #[test]
    fn frozen_runs_report_no_motion() {
        let (status, run) = run_from("mode = \"nrw\"\nt_end = 0.1\nsample_every = 10\n");
        assert_eq!(status, CavitySimStatus::Ok);
        let mut row = unsafe { std::mem::zeroed::<CavitySimRow>() };
        assert_eq!(
            unsafe { cavity_sim_run_row(run, 3, &mut row) },
            CavitySimStatus::Ok
        );
        assert_eq!(row.has_motion, 0);
        assert_eq!((row.x, row.p), (0.0, 0.0));
        assert_eq!((row.re_c12, row.im_c12, row.re_c21, row.im_c21), (0.0, 0.0, 0.0, 0.0));
        unsafe { cavity_sim_run_free(run) };
    }

    /// The header is written by hand (no binding generator in the build),
    /// so this test is what keeps it honest: every exported symbol must be
    /// declared, every declaration must exist, and the status values must
    /// match literally.
    #[test]
    fn header_matches_exported_surface() {
        let exported: Vec<&str> = LIB_RS
            .lines()
            .filter(|line| line.contains("extern \"C\" fn "))
            .map(|line| {
                let after = line.split("extern \"C\" fn ").nth(1).unwrap();
                after.split('(').next().unwrap().trim()
            })
            .collect();
        assert!(!exported.is_empty());
        for name in &exported {
            assert!(
                HEADER.contains(&format!("{name}(")),
                "{name} is exported but missing from cavity_sim.h"
            );
        }

        // Prototypes are kept to one line each, so a line scan is enough.
        let declared: Vec<&str> = HEADER
            .lines()
            .map(str::trim)
            .filter(|line| line.ends_with(");") && !line.starts_with("//"))
            .filter_map(|line| {
                let head = line.split('(').next()?;
                let name = head.split_whitespace().last()?.trim_start_matches('*');
                name.starts_with("cavity_sim_").then_some(name)
            })
            .collect();
        assert!(!declared.is_empty());
        for name in declared {
            assert!(
                exported.contains(&name),
                "{name} is declared in cavity_sim.h but not exported"
            );
        }

        for (rust, c) in [
            ("Ok = 0", "CAVITY_SIM_STATUS_OK = 0"),
            ("NullPointer = 1", "CAVITY_SIM_STATUS_NULL_POINTER = 1"),
            ("InvalidConfig = 2", "CAVITY_SIM_STATUS_INVALID_CONFIG = 2"),
            ("NumericalFailure = 3", "CAVITY_SIM_STATUS_NUMERICAL_FAILURE = 3"),
            ("Io = 4", "CAVITY_SIM_STATUS_IO = 4"),
            ("InvalidUtf8 = 5", "CAVITY_SIM_STATUS_INVALID_UTF8 = 5"),
            ("OutOfRange = 6", "CAVITY_SIM_STATUS_OUT_OF_RANGE = 6"),
            ("Internal = 7", "CAVITY_SIM_STATUS_INTERNAL = 7"),
        ] {
            assert!(LIB_RS.contains(rust), "status variant drifted: {rust}");
            assert!(HEADER.contains(c), "header status drifted: {c}");
        }

        // The row struct fields, in ABI order.
        let fields = [
            "t", "re_c11", "im_c11", "re_c12", "im_c12", "re_c21", "im_c21", "re_c22",
            "im_c22", "norm", "concurrence", "trace_distance", "x", "p",
        ];
        for field in fields {
            assert!(
                HEADER.contains(&format!("double {field};")),
                "row field missing from header: {field}"
            );
        }
        assert!(HEADER.contains("uint8_t has_motion;"));
    }
}

//! C interface to `flag-gluer`.
//!
//! Objects cross the boundary as opaque handles that the caller frees with the
//! matching `*_free` function. Every fallible call returns an [`FgStatus`];
//! on failure [`fg_last_error`] describes what went wrong. Strings returned
//! to the caller are freed with [`fg_string_free`]. Panics are caught at the
//! boundary and reported as [`FgStatus::Panic`].

use std::cell::RefCell;
use std::ffi::{c_char, CStr, CString};
use std::panic::{catch_unwind, AssertUnwindSafe};

use flag_gluer::monodromy::Cochain;
use flag_gluer::solver::{self, parse_pin, ResidualSystem, SolveOptions, Status};
use flag_gluer::{geometry, Error, ParamSet, Triangulation};

/// Result codes.
#[repr(C)]
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum FgStatus {
    Ok = 0,
    NullArgument = 1,
    InvalidUtf8 = 2,
    Parse = 3,
    Triangulation = 4,
    Params = 5,
    Degenerate = 6,
    Path = 7,
    Cocycle = 8,
    Numerical = 9,
    Io = 10,
    BufferTooSmall = 11,
    OutOfRange = 12,
    Panic = 13,
}

/// Outcome of a solve.
#[repr(C)]
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum FgSolveStatus {
    Converged = 0,
    Stalled = 1,
    Diverged = 2,
}

#[repr(C)]
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct FgSolveInfo {
    pub status: FgSolveStatus,
    pub residual_norm: f64,
    pub iterations: usize,
    pub jacobian_rank: usize,
}

/// Opaque triangulation handle.
pub struct FgTriangulation(Triangulation);

/// Opaque parameter handle. Only valid with the triangulation it was made for.
pub struct FgParams(ParamSet);

thread_local! {
    static LAST_ERROR: RefCell<CString> = RefCell::new(CString::default());
}

fn set_error(msg: impl Into<String>) {
    let text = msg.into().replace('\0', " ");
    LAST_ERROR.with(|e| *e.borrow_mut() = CString::new(text).expect("nul bytes were removed"));
}

fn status_of(e: &Error) -> FgStatus {
    match e {
        Error::Parse(_) => FgStatus::Parse,
        Error::Triangulation(_) => FgStatus::Triangulation,
        Error::Params(_) => FgStatus::Params,
        Error::Degenerate(_) => FgStatus::Degenerate,
        Error::Path(_) => FgStatus::Path,
        Error::Cocycle(_) => FgStatus::Cocycle,
        Error::Numerical(_) => FgStatus::Numerical,
        Error::Io { .. } => FgStatus::Io,
    }
}

/// Failure inside a call: a status and its message.
struct Fail(FgStatus, String);

impl From<Error> for Fail {
    fn from(e: Error) -> Self {
        Fail(status_of(&e), e.to_string())
    }
}

/// Runs `f`, recording the error message and mapping panics.
fn guard(f: impl FnOnce() -> Result<(), Fail>) -> FgStatus {
    match catch_unwind(AssertUnwindSafe(f)) {
        Ok(Ok(())) => {
            set_error("");
            FgStatus::Ok
        }
        Ok(Err(Fail(status, msg))) => {
            set_error(msg);
            status
        }
        Err(_) => {
            set_error("internal panic");
            FgStatus::Panic
        }
    }
}

fn null(what: &str) -> Fail {
    Fail(FgStatus::NullArgument, format!("{what} is null"))
}

unsafe fn text<'a>(p: *const c_char, what: &str) -> Result<&'a str, Fail> {
    if p.is_null() {
        return Err(null(what));
    }
    CStr::from_ptr(p).to_str().map_err(|_| Fail(FgStatus::InvalidUtf8, format!("{what} is not UTF-8")))
}

unsafe fn handle<'a, T>(p: *const T, what: &str) -> Result<&'a T, Fail> {
    p.as_ref().ok_or_else(|| null(what))
}

fn give<T>(out: *mut *mut T, value: T) {
    // SAFETY: callers check `out` for null before computing `value`.
    unsafe { *out = Box::into_raw(Box::new(value)) };
}

fn give_string(out: *mut *mut c_char, s: String) -> Result<(), Fail> {
    let c = CString::new(s).map_err(|_| Fail(FgStatus::Parse, "output contains a nul byte".into()))?;
    // SAFETY: callers check `out` for null first.
    unsafe { *out = c.into_raw() };
    Ok(())
}

/// Message of the last failed call on this thread; empty after a success.
/// The pointer stays valid until the next call on the same thread.
#[no_mangle]
pub extern "C" fn fg_last_error() -> *const c_char {
    LAST_ERROR.with(|e| e.borrow().as_ptr())
}

/// Frees a string returned by this library. Null is ignored.
///
/// # Safety
/// `s` must come from this library and not have been freed.
#[no_mangle]
pub unsafe extern "C" fn fg_string_free(s: *mut c_char) {
    if !s.is_null() {
        drop(CString::from_raw(s));
    }
}

/// Parses a triangulation file's JSON text.
///
/// # Safety
/// `json` must be a nul-terminated string and `out` a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn fg_triangulation_from_json(json: *const c_char, out: *mut *mut FgTriangulation) -> FgStatus {
    guard(|| {
        if out.is_null() {
            return Err(null("out"));
        }
        let tri = Triangulation::from_json(text(json, "json")?)?;
        give(out, FgTriangulation(tri));
        Ok(())
    })
}

/// # Safety
/// `tri` must come from [`fg_triangulation_from_json`] and not have been freed.
#[no_mangle]
pub unsafe extern "C" fn fg_triangulation_free(tri: *mut FgTriangulation) {
    if !tri.is_null() {
        drop(Box::from_raw(tri));
    }
}

/// Number of tetrahedra, or 0 for a null handle.
///
/// # Safety
/// `tri` must be null or a live handle.
#[no_mangle]
pub unsafe extern "C" fn fg_triangulation_num_tets(tri: *const FgTriangulation) -> usize {
    tri.as_ref().map_or(0, |t| t.0.num_tets())
}

/// Number of edge classes, or 0 for a null handle.
///
/// # Safety
/// `tri` must be null or a live handle.
#[no_mangle]
pub unsafe extern "C" fn fg_triangulation_num_edges(tri: *const FgTriangulation) -> usize {
    tri.as_ref().map_or(0, |t| t.0.edge_cycles().len())
}

/// Number of residuals of the unpinned system, or 0 for a null handle.
///
/// # Safety
/// `tri` must be null or a live handle.
#[no_mangle]
pub unsafe extern "C" fn fg_num_residuals(tri: *const FgTriangulation) -> usize {
    tri.as_ref().and_then(|t| ResidualSystem::assemble(&t.0, &[]).ok()).map_or(0, |s| s.num_residuals())
}

/// Parses a parameter file's JSON text against `tri`.
///
/// # Safety
/// `tri` must be a live handle, `json` a nul-terminated string and `out` a
/// valid pointer.
#[no_mangle]
pub unsafe extern "C" fn fg_params_from_json(
    tri: *const FgTriangulation,
    json: *const c_char,
    out: *mut *mut FgParams,
) -> FgStatus {
    guard(|| {
        if out.is_null() {
            return Err(null("out"));
        }
        let tri = handle(tri, "tri")?;
        let ps = ParamSet::from_json(text(json, "json")?, &tri.0)?;
        give(out, FgParams(ps));
        Ok(())
    })
}

/// Every edge ratio and gluing parameter equal to one.
///
/// # Safety
/// `tri` must be a live handle and `out` a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn fg_params_all_ones(tri: *const FgTriangulation, out: *mut *mut FgParams) -> FgStatus {
    guard(|| {
        if out.is_null() {
            return Err(null("out"));
        }
        give(out, FgParams(ParamSet::all_ones(&handle(tri, "tri")?.0)));
        Ok(())
    })
}

/// # Safety
/// `params` must come from this library and not have been freed.
#[no_mangle]
pub unsafe extern "C" fn fg_params_free(params: *mut FgParams) {
    if !params.is_null() {
        drop(Box::from_raw(params));
    }
}

/// Writes the parameters as a parameter file. Free the result with
/// [`fg_string_free`].
///
/// # Safety
/// Both handles must be live and `out` a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn fg_params_to_json(
    tri: *const FgTriangulation,
    params: *const FgParams,
    out: *mut *mut c_char,
) -> FgStatus {
    guard(|| {
        if out.is_null() {
            return Err(null("out"));
        }
        let (tri, ps) = (handle(tri, "tri")?, handle(params, "params")?);
        ps.0.validate(&tri.0)?;
        give_string(out, ps.0.to_json(&tri.0))
    })
}

/// Evaluates every residual into `buf`, which must hold at least
/// [`fg_num_residuals`] values. `written` receives the count.
///
/// # Safety
/// Both handles must be live, `buf` must point to `len` doubles and
/// `written` must be a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn fg_residuals(
    tri: *const FgTriangulation,
    params: *const FgParams,
    buf: *mut f64,
    len: usize,
    written: *mut usize,
) -> FgStatus {
    guard(|| {
        if buf.is_null() || written.is_null() {
            return Err(null("buf or written"));
        }
        let (tri, ps) = (handle(tri, "tri")?, handle(params, "params")?);
        let r = ResidualSystem::assemble(&tri.0, &[])?.evaluate(&ps.0)?;
        *written = r.len();
        if len < r.len() {
            return Err(Fail(FgStatus::BufferTooSmall, format!("{} residuals do not fit in {len}", r.len())));
        }
        std::slice::from_raw_parts_mut(buf, r.len()).copy_from_slice(&r);
        Ok(())
    })
}

/// Row-major product around edge class `edge`, scaled so its (2,2) entry is 1.
///
/// # Safety
/// Both handles must be live and `out` must point to 16 doubles.
#[no_mangle]
pub unsafe extern "C" fn fg_edge_matrix(
    tri: *const FgTriangulation,
    params: *const FgParams,
    edge: usize,
    out: *mut f64,
) -> FgStatus {
    guard(|| {
        if out.is_null() {
            return Err(null("out"));
        }
        let (tri, ps) = (handle(tri, "tri")?, handle(params, "params")?);
        let matrices = Cochain::new(&tri.0, &ps.0)?.edge_matrices();
        let m = matrices
            .iter()
            .find(|m| m.edge == edge)
            .ok_or_else(|| Fail(FgStatus::OutOfRange, format!("no edge class {edge}")))?;
        std::slice::from_raw_parts_mut(out, 16).copy_from_slice(&m.matrix);
        Ok(())
    })
}

/// Solves from `init` with `num_pins` pins of the form `tet0:e12=2`.
/// `max_iter` 0 and `tol` ≤ 0 select the defaults. A solve that does not
/// converge still returns [`FgStatus::Ok`] with its status in `info`.
///
/// # Safety
/// Handles must be live, `pins` must point to `num_pins` nul-terminated
/// strings (or be null when `num_pins` is 0), and `out` and `info` must be
/// valid pointers.
#[no_mangle]
pub unsafe extern "C" fn fg_solve(
    tri: *const FgTriangulation,
    init: *const FgParams,
    pins: *const *const c_char,
    num_pins: usize,
    tol: f64,
    max_iter: usize,
    out: *mut *mut FgParams,
    info: *mut FgSolveInfo,
) -> FgStatus {
    guard(|| {
        if out.is_null() || info.is_null() {
            return Err(null("out or info"));
        }
        let (tri, init) = (handle(tri, "tri")?, handle(init, "init")?);
        let pins = if num_pins == 0 {
            Vec::new()
        } else {
            if pins.is_null() {
                return Err(null("pins"));
            }
            std::slice::from_raw_parts(pins, num_pins)
                .iter()
                .map(|p| Ok(parse_pin(text(*p, "pin")?)?))
                .collect::<Result<Vec<_>, Fail>>()?
        };
        let system = ResidualSystem::assemble(&tri.0, &pins)?;
        let mut opts = SolveOptions::default();
        if tol > 0.0 {
            opts.tol = tol;
        }
        if max_iter > 0 {
            opts.max_iter = max_iter;
        }
        let r = solver::solve(&system, &system.pinned(&init.0), &opts)?;
        *info = FgSolveInfo {
            status: match r.status {
                Status::Converged => FgSolveStatus::Converged,
                Status::Stalled => FgSolveStatus::Stalled,
                Status::Diverged => FgSolveStatus::Diverged,
            },
            residual_norm: r.residual_norm,
            iterations: r.iterations,
            jacobian_rank: r.jacobian_rank,
        };
        give(out, FgParams(r.params));
        Ok(())
    })
}

/// Classification of every tetrahedron as JSON. Free the result with
/// [`fg_string_free`].
///
/// # Safety
/// Both handles must be live and `out` a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn fg_classify_json(
    tri: *const FgTriangulation,
    params: *const FgParams,
    tol: f64,
    out: *mut *mut c_char,
) -> FgStatus {
    guard(|| {
        if out.is_null() {
            return Err(null("out"));
        }
        let (tri, ps) = (handle(tri, "tri")?, handle(params, "params")?);
        let c = geometry::classify(&tri.0, &ps.0, tol)?;
        give_string(out, serde_json::to_string(&c).expect("classification serializes"))
    })
}

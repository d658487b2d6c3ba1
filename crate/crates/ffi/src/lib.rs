//! C ABI over `metric_magnitude`.
//!
//! Spaces are opaque handles created by `mm_space_from_*` and released with
//! `mm_space_free`. Every other function returns an [`MmStatus`]; on failure
//! a message is kept per thread and can be read with `mm_last_error`.

use std::cell::RefCell;
use std::ffi::{c_char, CString};
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::ptr;

use metric_magnitude::dimension;
use metric_magnitude::diversity::{self, DiversityError, DiversityOptions};
use metric_magnitude::magnitude::{self, MagnitudeError};
use metric_magnitude::metric::{FiniteMetricSpace, DEFAULT_TRIANGLE_TOLERANCE};
use metric_magnitude::nalgebra::DMatrix;
use metric_magnitude::ultra;

/// Status codes returned by every fallible function.
#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum MmStatus {
    Ok = 0,
    NullPointer = 1,
    InvalidArgument = 2,
    InvalidMetric = 3,
    IllConditioned = 4,
    Singular = 5,
    NotConverged = 6,
    NotUltrametric = 7,
    BufferTooSmall = 8,
    Panic = 9,
}

/// Opaque handle to a validated finite metric space.
pub struct MmSpace {
    inner: FiniteMetricSpace,
}

thread_local! {
    static LAST_ERROR: RefCell<Option<CString>> = const { RefCell::new(None) };
}

fn set_error(msg: impl Into<String>) {
    let c = CString::new(msg.into().replace('\0', " ")).unwrap_or_default();
    LAST_ERROR.with(|e| *e.borrow_mut() = Some(c));
}

fn fail(status: MmStatus, msg: impl Into<String>) -> MmStatus {
    set_error(msg);
    status
}

fn magnitude_status(e: &MagnitudeError) -> MmStatus {
    match e {
        MagnitudeError::IllConditioned { .. } => MmStatus::IllConditioned,
        MagnitudeError::SingularSystem { .. } => MmStatus::Singular,
        _ => MmStatus::InvalidArgument,
    }
}

fn guard(f: impl FnOnce() -> MmStatus) -> MmStatus {
    LAST_ERROR.with(|e| *e.borrow_mut() = None);
    match catch_unwind(AssertUnwindSafe(f)) {
        Ok(s) => s,
        Err(_) => fail(MmStatus::Panic, "internal panic"),
    }
}

unsafe fn space_ref<'a>(space: *const MmSpace) -> Result<&'a FiniteMetricSpace, MmStatus> {
    if space.is_null() {
        Err(fail(MmStatus::NullPointer, "space handle is null"))
    } else {
        Ok(&(*space).inner)
    }
}

unsafe fn emit_space(out: *mut *mut MmSpace, space: FiniteMetricSpace) -> MmStatus {
    *out = Box::into_raw(Box::new(MmSpace { inner: space }));
    MmStatus::Ok
}

/// Build a space from a row-major `n × n` distance matrix.
///
/// # Safety
/// `dist` must point to `n * n` readable doubles and `out` to writable
/// storage for one handle pointer.
#[no_mangle]
pub unsafe extern "C" fn mm_space_from_matrix(
    dist: *const f64,
    n: usize,
    out: *mut *mut MmSpace,
) -> MmStatus {
    guard(|| {
        if dist.is_null() || out.is_null() {
            return fail(MmStatus::NullPointer, "null argument");
        }
        if n == 0 {
            return fail(MmStatus::InvalidArgument, "n must be positive");
        }
        let values = std::slice::from_raw_parts(dist, n * n);
        let m = DMatrix::from_row_slice(n, n, values);
        match FiniteMetricSpace::validate(m, DEFAULT_TRIANGLE_TOLERANCE) {
            Ok(s) => emit_space(out, s),
            Err(e) => fail(MmStatus::InvalidMetric, e.to_string()),
        }
    })
}

/// Build a Euclidean space from `n` points of dimension `dim`, row-major.
///
/// # Safety
/// `coords` must point to `n * dim` readable doubles and `out` to writable
/// storage for one handle pointer.
#[no_mangle]
pub unsafe extern "C" fn mm_space_from_points(
    coords: *const f64,
    n: usize,
    dim: usize,
    out: *mut *mut MmSpace,
) -> MmStatus {
    guard(|| {
        if coords.is_null() || out.is_null() {
            return fail(MmStatus::NullPointer, "null argument");
        }
        if n == 0 || dim == 0 {
            return fail(MmStatus::InvalidArgument, "n and dim must be positive");
        }
        let values = std::slice::from_raw_parts(coords, n * dim);
        let points = values.chunks(dim).map(<[f64]>::to_vec).collect();
        match FiniteMetricSpace::from_points(points) {
            Ok(s) => emit_space(out, s),
            Err(e) => fail(MmStatus::InvalidMetric, e.to_string()),
        }
    })
}

/// Release a handle. Null is ignored.
///
/// # Safety
/// `space` must be null or a handle from `mm_space_from_*` not yet freed.
#[no_mangle]
pub unsafe extern "C" fn mm_space_free(space: *mut MmSpace) {
    if !space.is_null() {
        drop(Box::from_raw(space));
    }
}

/// Number of points.
///
/// # Safety
/// `space` must be a live handle and `out` writable.
#[no_mangle]
pub unsafe extern "C" fn mm_space_len(space: *const MmSpace, out: *mut usize) -> MmStatus {
    guard(|| {
        let s = match space_ref(space) {
            Ok(s) => s,
            Err(st) => return st,
        };
        if out.is_null() {
            return fail(MmStatus::NullPointer, "out is null");
        }
        *out = s.len();
        MmStatus::Ok
    })
}

/// Magnitude of `tA`.
///
/// # Safety
/// `space` must be a live handle and `out` writable.
#[no_mangle]
pub unsafe extern "C" fn mm_magnitude(space: *const MmSpace, t: f64, out: *mut f64) -> MmStatus {
    guard(|| {
        let s = match space_ref(space) {
            Ok(s) => s,
            Err(st) => return st,
        };
        if out.is_null() {
            return fail(MmStatus::NullPointer, "out is null");
        }
        match magnitude::magnitude(s, t) {
            Ok(m) => {
                *out = m;
                MmStatus::Ok
            }
            Err(e) => fail(magnitude_status(&e), e.to_string()),
        }
    })
}

/// Weighting of `tA`, written to `out[0..len]`; `len` must equal the
/// number of points.
///
/// # Safety
/// `space` must be a live handle and `out` must point to `len` writable doubles.
#[no_mangle]
pub unsafe extern "C" fn mm_weighting(
    space: *const MmSpace,
    t: f64,
    out: *mut f64,
    len: usize,
) -> MmStatus {
    guard(|| {
        let s = match space_ref(space) {
            Ok(s) => s,
            Err(st) => return st,
        };
        if out.is_null() {
            return fail(MmStatus::NullPointer, "out is null");
        }
        if len != s.len() {
            return fail(
                MmStatus::BufferTooSmall,
                format!("buffer holds {len} values, space has {}", s.len()),
            );
        }
        match magnitude::weighting(s, t) {
            Ok(w) => {
                std::slice::from_raw_parts_mut(out, len).copy_from_slice(w.w.as_slice());
                MmStatus::Ok
            }
            Err(e) => fail(magnitude_status(&e), e.to_string()),
        }
    })
}

/// Maximum diversity of `tA` with duality-gap tolerance `tolerance`
/// (`<= 0` selects the default). The maximizing distribution is written to
/// `mu[0..len]` when `mu` is not null. `certified` (nullable) reports
/// whether the optimum is certified global.
///
/// # Safety
/// `space` must be a live handle, `value` writable, and `mu` null or
/// pointing to `len` writable doubles.
#[no_mangle]
pub unsafe extern "C" fn mm_max_diversity(
    space: *const MmSpace,
    t: f64,
    tolerance: f64,
    value: *mut f64,
    mu: *mut f64,
    len: usize,
    certified: *mut bool,
) -> MmStatus {
    guard(|| {
        let s = match space_ref(space) {
            Ok(s) => s,
            Err(st) => return st,
        };
        if value.is_null() {
            return fail(MmStatus::NullPointer, "value is null");
        }
        if !mu.is_null() && len != s.len() {
            return fail(
                MmStatus::BufferTooSmall,
                format!("buffer holds {len} values, space has {}", s.len()),
            );
        }
        let mut options = DiversityOptions::default();
        if tolerance > 0.0 {
            options.tolerance = tolerance;
        }
        match diversity::max_diversity(s, t, &options) {
            Ok(r) => {
                *value = r.value;
                if !mu.is_null() {
                    std::slice::from_raw_parts_mut(mu, len).copy_from_slice(&r.mu);
                }
                if !certified.is_null() {
                    *certified = r.certified;
                }
                MmStatus::Ok
            }
            Err(e @ DiversityError::MaxIterationsExceeded { .. }) => {
                fail(MmStatus::NotConverged, e.to_string())
            }
            Err(e) => fail(MmStatus::InvalidArgument, e.to_string()),
        }
    })
}

unsafe fn count(
    space: *const MmSpace,
    epsilon: f64,
    out: *mut usize,
    exact: *mut bool,
    f: fn(&FiniteMetricSpace, f64) -> dimension::CountResult,
) -> MmStatus {
    guard(|| {
        let s = match space_ref(space) {
            Ok(s) => s,
            Err(st) => return st,
        };
        if out.is_null() {
            return fail(MmStatus::NullPointer, "out is null");
        }
        if !(epsilon.is_finite() && epsilon >= 0.0) {
            return fail(MmStatus::InvalidArgument, format!("invalid radius {epsilon}"));
        }
        let r = f(s, epsilon);
        *out = r.count;
        if !exact.is_null() {
            *exact = r.exact;
        }
        MmStatus::Ok
    })
}

/// Minimum number of closed `epsilon`-balls centred in the space that
/// cover it. `exact` (nullable) is false when only a greedy bound was
/// computed.
///
/// # Safety
/// `space` must be a live handle, `out` writable, `exact` null or writable.
#[no_mangle]
pub unsafe extern "C" fn mm_covering_number(
    space: *const MmSpace,
    epsilon: f64,
    out: *mut usize,
    exact: *mut bool,
) -> MmStatus {
    count(space, epsilon, out, exact, dimension::covering_number)
}

/// Maximum number of disjoint closed `epsilon`-balls centred in the space.
///
/// # Safety
/// Same as `mm_covering_number`.
#[no_mangle]
pub unsafe extern "C" fn mm_packing_number(
    space: *const MmSpace,
    epsilon: f64,
    out: *mut usize,
    exact: *mut bool,
) -> MmStatus {
    count(space, epsilon, out, exact, dimension::packing_number)
}

/// Ultramagnitude of `tA`. Fails with `NotUltrametric` otherwise.
///
/// # Safety
/// `space` must be a live handle and `out` writable.
#[no_mangle]
pub unsafe extern "C" fn mm_ultramagnitude(space: *const MmSpace, t: f64, out: *mut usize) -> MmStatus {
    guard(|| {
        let s = match space_ref(space) {
            Ok(s) => s,
            Err(st) => return st,
        };
        if out.is_null() {
            return fail(MmStatus::NullPointer, "out is null");
        }
        let u = match ultra::validate_ultrametric(s.clone()) {
            Ok(u) => u,
            Err(e) => return fail(MmStatus::NotUltrametric, e.to_string()),
        };
        match ultra::ultramagnitude(&u, t) {
            Ok(v) => {
                *out = v;
                MmStatus::Ok
            }
            Err(e) => fail(MmStatus::InvalidArgument, e.to_string()),
        }
    })
}

/// Message for the last failure on this thread, or null. The pointer is
/// valid until the next call into this library from the same thread.
#[no_mangle]
pub extern "C" fn mm_last_error() -> *const c_char {
    LAST_ERROR.with(|e| e.borrow().as_ref().map_or(ptr::null(), |c| c.as_ptr()))
}

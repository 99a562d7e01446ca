//! C ABI for salem-lab.
//!
//! Every entry point returns a [`SalemStatus`]; results come back through out
//! pointers. Handles are opaque and owned by the caller once returned, and must
//! be released with the matching `_free` function. When a call fails, the
//! message is available from [`salem_last_error_message`] on the same thread.

use std::cell::RefCell;
use std::ffi::{c_char, CStr, CString};
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::ptr;

use salem_lab::constructions::{
    isotropic_subspace, random_salem_subset, sidon_parabola, DEFAULT_MAX_ATTEMPTS, DEFAULT_SALEM_C,
};
use salem_lab::energy::{additive_energy, lu_norm, Moment};
use salem_lab::experiment::{run_sweep, SweepConfig};
use salem_lab::incidence::{count_incidences, spheres_as_objects};
use salem_lab::report::render_json;
use salem_lab::{FieldDesc, LabError, Limits, PointSet, SValue, Sphere, Vector};

/// Result code of every call.
#[repr(C)]
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum SalemStatus {
    Ok = 0,
    NullPointer = 1,
    InvalidUtf8 = 2,
    /// Bad field description: not a prime power, even characteristic, bad modulus.
    InvalidField = 3,
    /// Bad argument: dimension, element code, moment, parameter range.
    InvalidArgument = 4,
    /// Grid or work budget exceeded.
    LimitExceeded = 5,
    /// Parameters outside the regime a routine supports.
    Unsupported = 6,
    /// An internal identity check failed.
    AssertionFailed = 7,
    Io = 8,
    Parse = 9,
    /// A panic was caught at the boundary.
    Internal = 10,
}

impl From<&LabError> for SalemStatus {
    fn from(e: &LabError) -> Self {
        match e {
            LabError::NonPrime(_)
            | LabError::EvenCharacteristic
            | LabError::ReducibleModulus { .. }
            | LabError::InvalidModulus(_)
            | LabError::FieldTooLarge(_)
            | LabError::FieldMismatch => SalemStatus::InvalidField,
            LabError::GridTooLarge { .. } | LabError::BudgetExceeded { .. } => SalemStatus::LimitExceeded,
            LabError::UnsupportedRegime(_) | LabError::ExhaustedAttempts { .. } | LabError::EmptyReport => {
                SalemStatus::Unsupported
            }
            LabError::HardAssertion(_) | LabError::ReductionMismatch { .. } => SalemStatus::AssertionFailed,
            LabError::Io(_) => SalemStatus::Io,
            LabError::Parse(_) => SalemStatus::Parse,
            _ => SalemStatus::InvalidArgument,
        }
    }
}

/// A finite field F_q.
pub struct SalemField(FieldDesc);

/// A set of points in F_q^d.
pub struct SalemPointSet(PointSet);

thread_local! {
    static LAST_ERROR: RefCell<Option<CString>> = const { RefCell::new(None) };
}

fn set_error(msg: String) {
    let msg = CString::new(msg.replace('\0', " ")).unwrap_or_default();
    LAST_ERROR.with(|e| *e.borrow_mut() = Some(msg));
}

enum Failure {
    Null,
    Utf8,
    Lab(LabError),
}

impl From<LabError> for Failure {
    fn from(e: LabError) -> Self {
        Failure::Lab(e)
    }
}

type FfiResult<T> = Result<T, Failure>;

fn guard(f: impl FnOnce() -> FfiResult<()>) -> SalemStatus {
    LAST_ERROR.with(|e| *e.borrow_mut() = None);
    match catch_unwind(AssertUnwindSafe(f)) {
        Ok(Ok(())) => SalemStatus::Ok,
        Ok(Err(Failure::Null)) => {
            set_error("null pointer argument".into());
            SalemStatus::NullPointer
        }
        Ok(Err(Failure::Utf8)) => {
            set_error("string argument is not valid UTF-8".into());
            SalemStatus::InvalidUtf8
        }
        Ok(Err(Failure::Lab(e))) => {
            set_error(format!("{}: {e}", e.code()));
            SalemStatus::from(&e)
        }
        Err(_) => {
            set_error("internal panic".into());
            SalemStatus::Internal
        }
    }
}

unsafe fn borrow<'a, T>(p: *const T) -> FfiResult<&'a T> {
    p.as_ref().ok_or(Failure::Null)
}

unsafe fn out<'a, T>(p: *mut T) -> FfiResult<&'a mut T> {
    p.as_mut().ok_or(Failure::Null)
}

unsafe fn string<'a>(p: *const c_char) -> FfiResult<&'a str> {
    if p.is_null() {
        return Err(Failure::Null);
    }
    CStr::from_ptr(p).to_str().map_err(|_| Failure::Utf8)
}

unsafe fn slice<'a, T>(p: *const T, len: usize) -> FfiResult<&'a [T]> {
    if len == 0 {
        return Ok(&[]);
    }
    if p.is_null() {
        return Err(Failure::Null);
    }
    Ok(std::slice::from_raw_parts(p, len))
}

fn boxed<T>(value: T) -> *mut T {
    Box::into_raw(Box::new(value))
}

fn to_u64(v: u128) -> FfiResult<u64> {
    u64::try_from(v).map_err(|_| LabError::OutOfRange(format!("{v} does not fit in 64 bits")).into())
}

/// Message of the last failed call on this thread, or null. The pointer stays
/// valid until the next call into this library on the same thread.
#[no_mangle]
pub extern "C" fn salem_last_error_message() -> *const c_char {
    LAST_ERROR.with(|e| e.borrow().as_ref().map_or(ptr::null(), |s| s.as_ptr()))
}

/// Releases a string returned by this library.
///
/// # Safety
/// `s` must be null or a string returned by this library, not yet freed.
#[no_mangle]
pub unsafe extern "C" fn salem_string_free(s: *mut c_char) {
    if !s.is_null() {
        drop(CString::from_raw(s));
    }
}

/// Parses a field description such as `"7"`, `"3^2"` or `"3^2/1,0,1"`.
///
/// # Safety
/// `spec` must be a NUL-terminated string; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn salem_field_new(spec: *const c_char, out_field: *mut *mut SalemField) -> SalemStatus {
    guard(|| {
        let slot = out(out_field)?;
        *slot = boxed(SalemField(FieldDesc::from_spec(string(spec)?)?));
        Ok(())
    })
}

/// # Safety
/// `field` must be null or a handle from [`salem_field_new`], not yet freed.
#[no_mangle]
pub unsafe extern "C" fn salem_field_free(field: *mut SalemField) {
    if !field.is_null() {
        drop(Box::from_raw(field));
    }
}

/// Order `q` of the field.
///
/// # Safety
/// `field` must be a live handle; `q` must be writable.
#[no_mangle]
pub unsafe extern "C" fn salem_field_order(field: *const SalemField, q: *mut u32) -> SalemStatus {
    guard(|| {
        *out(q)? = borrow(field)?.0.q();
        Ok(())
    })
}

/// Builds a point set from vector codes (base-q numerals, first coordinate
/// least significant). Duplicates are removed.
///
/// # Safety
/// `codes` must point to `len` values (or be null when `len` is 0).
#[no_mangle]
pub unsafe extern "C" fn salem_pointset_new(
    field: *const SalemField,
    dim: usize,
    codes: *const u64,
    len: usize,
    out_set: *mut *mut SalemPointSet,
) -> SalemStatus {
    guard(|| {
        let slot = out(out_set)?;
        let set = PointSet::from_codes(&borrow(field)?.0, dim, slice(codes, len)?.iter().copied())?;
        *slot = boxed(SalemPointSet(set));
        Ok(())
    })
}

/// # Safety
/// `set` must be null or a live point set handle.
#[no_mangle]
pub unsafe extern "C" fn salem_pointset_free(set: *mut SalemPointSet) {
    if !set.is_null() {
        drop(Box::from_raw(set));
    }
}

/// Number of points in the set.
///
/// # Safety
/// `set` must be a live handle; `len` must be writable.
#[no_mangle]
pub unsafe extern "C" fn salem_pointset_len(set: *const SalemPointSet, len: *mut usize) -> SalemStatus {
    guard(|| {
        *out(len)? = borrow(set)?.0.len();
        Ok(())
    })
}

/// Copies up to `cap` sorted point codes into `buf` and stores the set size in
/// `len`. Pass `cap = 0` to query the size only.
///
/// # Safety
/// `buf` must have room for `cap` values.
#[no_mangle]
pub unsafe extern "C" fn salem_pointset_codes(
    set: *const SalemPointSet,
    buf: *mut u64,
    cap: usize,
    len: *mut usize,
) -> SalemStatus {
    guard(|| {
        let codes = borrow(set)?.0.codes();
        *out(len)? = codes.len();
        let n = codes.len().min(cap);
        if n > 0 {
            if buf.is_null() {
                return Err(Failure::Null);
            }
            ptr::copy_nonoverlapping(codes.as_ptr(), buf, n);
        }
        Ok(())
    })
}

/// Additive energy `Lambda_k(E)`.
///
/// # Safety
/// `set` must be a live handle; `lambda` must be writable.
#[no_mangle]
pub unsafe extern "C" fn salem_additive_energy(set: *const SalemPointSet, k: u32, lambda: *mut u64) -> SalemStatus {
    guard(|| {
        let report = additive_energy(&borrow(set)?.0, k, &Limits::default())?;
        *out(lambda)? = to_u64(report.lambda)?;
        Ok(())
    })
}

/// Normalized Fourier moment `||A^||_{L^u}`; `u = 0` selects `L^infinity`.
///
/// # Safety
/// `set` must be a live handle; `norm` must be writable.
#[no_mangle]
pub unsafe extern "C" fn salem_lu_norm(set: *const SalemPointSet, u: u32, norm: *mut f64) -> SalemStatus {
    guard(|| {
        let moment = if u == 0 { Moment::Infinity } else { Moment::even(u)? };
        *out(norm)? = lu_norm(&borrow(set)?.0, moment, &Limits::default())?;
        Ok(())
    })
}

/// Point-sphere incidences. Sphere `i` has centre code `centers[i]` and
/// radius code `radii[i]`.
///
/// # Safety
/// `centers` and `radii` must each point to `n_spheres` values.
#[no_mangle]
pub unsafe extern "C" fn salem_incidences(
    points: *const SalemPointSet,
    centers: *const u64,
    radii: *const u32,
    n_spheres: usize,
    count: *mut u64,
) -> SalemStatus {
    guard(|| {
        let p = &borrow(points)?.0;
        let f = p.field();
        let centers = slice(centers, n_spheres)?;
        let radii = slice(radii, n_spheres)?;
        let grid = p.grid_size();
        let mut spheres = Vec::with_capacity(n_spheres);
        for (&c, &r) in centers.iter().zip(radii) {
            if c >= grid {
                return Err(LabError::InvalidElement { code: c, q: grid }.into());
            }
            spheres.push(Sphere::new(Vector::decode(c, f.q(), p.dim()), f.element(r as u64)?));
        }
        *out(count)? = count_incidences(p, &spheres_as_objects(&spheres), &Limits::default())?.count;
        Ok(())
    })
}

/// Totally isotropic subspace of F_q^d with `d/2` dimensions, as a point set.
///
/// # Safety
/// `field` must be a live handle; `out_set` must be writable.
#[no_mangle]
pub unsafe extern "C" fn salem_isotropic_subspace(
    field: *const SalemField,
    dim: usize,
    out_set: *mut *mut SalemPointSet,
) -> SalemStatus {
    guard(|| {
        let slot = out(out_set)?;
        let w = isotropic_subspace(&borrow(field)?.0, dim, &Limits::default())?;
        *slot = boxed(SalemPointSet(w.elements));
        Ok(())
    })
}

/// Sidon parabola in F_q^d. The result lives in the field with the default
/// modulus for `q`.
///
/// # Safety
/// `field` must be a live handle; `out_set` must be writable.
#[no_mangle]
pub unsafe extern "C" fn salem_sidon_parabola(
    field: *const SalemField,
    dim: usize,
    out_set: *mut *mut SalemPointSet,
) -> SalemStatus {
    guard(|| {
        let slot = out(out_set)?;
        let f = &borrow(field)?.0;
        let c = sidon_parabola(f.p() as u64, f.n(), dim, &Limits::default())?;
        *slot = boxed(SalemPointSet(c.points));
        Ok(())
    })
}

/// Random Salem subset of an isotropic subspace with `s = s_num / s_den`,
/// using the default acceptance constant and attempt cap.
///
/// # Safety
/// `field` must be a live handle; `out_set` must be writable.
#[no_mangle]
pub unsafe extern "C" fn salem_salem_subset(
    field: *const SalemField,
    dim: usize,
    s_num: i64,
    s_den: i64,
    seed: u64,
    out_set: *mut *mut SalemPointSet,
) -> SalemStatus {
    guard(|| {
        let slot = out(out_set)?;
        if s_den <= 0 {
            return Err(LabError::OutOfRange(format!("denominator {s_den} must be positive")).into());
        }
        let limits = Limits::default();
        let w = isotropic_subspace(&borrow(field)?.0, dim, &limits)?;
        let c = random_salem_subset(&w, SValue::new(s_num, s_den), seed, DEFAULT_SALEM_C, DEFAULT_MAX_ATTEMPTS, &limits)?;
        *slot = boxed(SalemPointSet(c.points));
        Ok(())
    })
}

/// Runs a sweep from a JSON configuration and returns the rows as JSON. The
/// returned string must be released with [`salem_string_free`].
///
/// # Safety
/// `config_json` must be a NUL-terminated string; `out_json` must be writable.
#[no_mangle]
pub unsafe extern "C" fn salem_sweep_json(config_json: *const c_char, out_json: *mut *mut c_char) -> SalemStatus {
    guard(|| {
        let slot = out(out_json)?;
        let config = SweepConfig::from_json(string(config_json)?)?;
        let text = render_json(&run_sweep(&config)?)?;
        *slot = CString::new(text).map_err(|e| LabError::Parse(e.to_string()))?.into_raw();
        Ok(())
    })
}

//! C ABI for the rumspec library.
//!
//! Frameworks and scan reports are passed across the boundary as opaque
//! handles; every fallible call returns a status code and stores a message
//! retrievable with `rumspec_last_error_message`. Strings returned to the
//! caller are heap-allocated and must be released with
//! `rumspec_string_free`; handles with their `_free` functions.

use std::cell::RefCell;
use std::ffi::{c_char, CStr, CString};

use nalgebra::Complex;

use rumspec::framework::CrystalFramework;
use rumspec::gallery::{self, GalleryId};
use rumspec::json;
use rumspec::output::spectrum_csv;
use rumspec::spectrum::{scan_rum_spectrum, ScanOptions, SpectrumReport, TorusGrid};

/// Status codes returned by every fallible function.
#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum RumspecStatus {
    Ok = 0,
    NullPointer = 1,
    InvalidUtf8 = 2,
    InvalidArgument = 3,
    DomainError = 4,
}

/// Opaque crystal framework handle.
pub struct RumspecFramework {
    inner: CrystalFramework,
}

/// Opaque spectrum scan report handle.
pub struct RumspecReport {
    inner: SpectrumReport,
}

thread_local! {
    static LAST_ERROR: RefCell<Option<CString>> = const { RefCell::new(None) };
}

fn set_error(msg: impl Into<Vec<u8>>) {
    let cstring = CString::new(msg).unwrap_or_else(|_| CString::new("invalid error text").unwrap());
    LAST_ERROR.with(|e| *e.borrow_mut() = Some(cstring));
}

fn clear_error() {
    LAST_ERROR.with(|e| *e.borrow_mut() = None);
}

/// The most recent error message on this thread, or null. The caller owns
/// the returned string and must free it with `rumspec_string_free`.
#[no_mangle]
pub extern "C" fn rumspec_last_error_message() -> *mut c_char {
    LAST_ERROR.with(|e| match e.borrow().as_ref() {
        Some(msg) => msg.clone().into_raw(),
        None => std::ptr::null_mut(),
    })
}

/// Release a string returned by this library.
///
/// # Safety
/// `s` must be a pointer previously returned by a rumspec function, or null.
#[no_mangle]
pub unsafe extern "C" fn rumspec_string_free(s: *mut c_char) {
    if !s.is_null() {
        drop(CString::from_raw(s));
    }
}

unsafe fn read_str<'a>(ptr: *const c_char) -> Result<&'a str, RumspecStatus> {
    if ptr.is_null() {
        set_error("null string pointer");
        return Err(RumspecStatus::NullPointer);
    }
    CStr::from_ptr(ptr).to_str().map_err(|_| {
        set_error("string is not valid UTF-8");
        RumspecStatus::InvalidUtf8
    })
}

/// Construct a built-in gallery framework by name (grid, honeycomb, kagome,
/// kagome3d, octahedron, kite, bipyramid).
///
/// # Safety
/// `name` must be a valid NUL-terminated string and `out` a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn rumspec_framework_gallery(
    name: *const c_char,
    out: *mut *mut RumspecFramework,
) -> RumspecStatus {
    clear_error();
    if out.is_null() {
        set_error("null output pointer");
        return RumspecStatus::NullPointer;
    }
    let name = match read_str(name) {
        Ok(s) => s,
        Err(status) => return status,
    };
    match GalleryId::parse(name) {
        Ok(id) => {
            let handle = Box::new(RumspecFramework { inner: gallery::make(id) });
            *out = Box::into_raw(handle);
            RumspecStatus::Ok
        }
        Err(e) => {
            set_error(e.to_string());
            RumspecStatus::InvalidArgument
        }
    }
}

/// Parse a framework from its JSON description.
///
/// # Safety
/// `text` must be a valid NUL-terminated string and `out` a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn rumspec_framework_from_json(
    text: *const c_char,
    out: *mut *mut RumspecFramework,
) -> RumspecStatus {
    clear_error();
    if out.is_null() {
        set_error("null output pointer");
        return RumspecStatus::NullPointer;
    }
    let text = match read_str(text) {
        Ok(s) => s,
        Err(status) => return status,
    };
    match json::framework_from_json(text) {
        Ok(fw) => {
            *out = Box::into_raw(Box::new(RumspecFramework { inner: fw }));
            RumspecStatus::Ok
        }
        Err(e) => {
            set_error(e.to_string());
            RumspecStatus::DomainError
        }
    }
}

/// Canonical JSON of a framework; null on error.
///
/// # Safety
/// `fw` must be a live handle from this library.
#[no_mangle]
pub unsafe extern "C" fn rumspec_framework_to_json(fw: *const RumspecFramework) -> *mut c_char {
    clear_error();
    if fw.is_null() {
        set_error("null framework handle");
        return std::ptr::null_mut();
    }
    let text = json::framework_to_json(&(*fw).inner);
    CString::new(text).map(CString::into_raw).unwrap_or(std::ptr::null_mut())
}

/// # Safety
/// `fw` must be a live handle from this library, or null.
#[no_mangle]
pub unsafe extern "C" fn rumspec_framework_free(fw: *mut RumspecFramework) {
    if !fw.is_null() {
        drop(Box::from_raw(fw));
    }
}

/// Spatial dimension of the framework; 0 if the handle is null.
///
/// # Safety
/// `fw` must be a live handle from this library, or null.
#[no_mangle]
pub unsafe extern "C" fn rumspec_framework_dimension(fw: *const RumspecFramework) -> usize {
    if fw.is_null() {
        return 0;
    }
    (*fw).inner.dimension()
}

/// Number of motif joints; 0 if the handle is null.
///
/// # Safety
/// `fw` must be a live handle from this library, or null.
#[no_mangle]
pub unsafe extern "C" fn rumspec_framework_joint_count(fw: *const RumspecFramework) -> usize {
    if fw.is_null() {
        return 0;
    }
    (*fw).inner.joint_count()
}

/// Number of motif edges; 0 if the handle is null.
///
/// # Safety
/// `fw` must be a live handle from this library, or null.
#[no_mangle]
pub unsafe extern "C" fn rumspec_framework_edge_count(fw: *const RumspecFramework) -> usize {
    if fw.is_null() {
        return 0;
    }
    (*fw).inner.edge_count()
}

/// Scan the rigid-unit-mode spectrum on a uniform torus grid. `threads = 0`
/// uses all available cores.
///
/// # Safety
/// `fw` must be a live handle and `out` a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn rumspec_scan_rum(
    fw: *const RumspecFramework,
    resolution: usize,
    tol: f64,
    threads: usize,
    out: *mut *mut RumspecReport,
) -> RumspecStatus {
    clear_error();
    if fw.is_null() || out.is_null() {
        set_error("null pointer");
        return RumspecStatus::NullPointer;
    }
    if resolution == 0 {
        set_error("resolution must be positive");
        return RumspecStatus::InvalidArgument;
    }
    let framework = &(*fw).inner;
    let grid = TorusGrid::uniform(framework.dimension(), resolution);
    let opts = ScanOptions { tol, rank_tol: 1e-9, threads: if threads == 0 { None } else { Some(threads) } };
    let report = scan_rum_spectrum(framework, &grid, &opts);
    *out = Box::into_raw(Box::new(RumspecReport { inner: report }));
    RumspecStatus::Ok
}

/// Total number of samples in the scan; 0 if the handle is null.
///
/// # Safety
/// `report` must be a live handle from this library, or null.
#[no_mangle]
pub unsafe extern "C" fn rumspec_report_sample_count(report: *const RumspecReport) -> usize {
    if report.is_null() {
        return 0;
    }
    (*report).inner.sigma_min.len()
}

/// Number of flagged rank-degeneracy points; 0 if the handle is null.
///
/// # Safety
/// `report` must be a live handle from this library, or null.
#[no_mangle]
pub unsafe extern "C" fn rumspec_report_flagged_count(report: *const RumspecReport) -> usize {
    if report.is_null() {
        return 0;
    }
    (*report).inner.flagged.len()
}

/// Fetch flagged point `index`: its phases (dimension many values),
/// sigma_min and kernel dimension.
///
/// # Safety
/// `report` must be a live handle; `thetas_out` must point to at least
/// `dimension` doubles; the scalar outputs must be valid or null.
#[no_mangle]
pub unsafe extern "C" fn rumspec_report_flagged_get(
    report: *const RumspecReport,
    index: usize,
    thetas_out: *mut f64,
    sigma_out: *mut f64,
    kernel_dim_out: *mut usize,
) -> RumspecStatus {
    clear_error();
    if report.is_null() || thetas_out.is_null() {
        set_error("null pointer");
        return RumspecStatus::NullPointer;
    }
    let inner = &(*report).inner;
    let Some(point) = inner.flagged.get(index) else {
        set_error(format!("flagged index {index} out of range ({})", inner.flagged.len()));
        return RumspecStatus::InvalidArgument;
    };
    for (i, &t) in point.thetas.iter().enumerate() {
        *thetas_out.add(i) = t;
    }
    if !sigma_out.is_null() {
        *sigma_out = point.sigma_min;
    }
    if !kernel_dim_out.is_null() {
        *kernel_dim_out = point.kernel_dim;
    }
    RumspecStatus::Ok
}

/// CSV rendering of a scan report (theta columns, sigma_min, flagged);
/// null on error.
///
/// # Safety
/// `report` must be a live handle from this library.
#[no_mangle]
pub unsafe extern "C" fn rumspec_report_to_csv(report: *const RumspecReport) -> *mut c_char {
    clear_error();
    if report.is_null() {
        set_error("null report handle");
        return std::ptr::null_mut();
    }
    CString::new(spectrum_csv(&(*report).inner))
        .map(CString::into_raw)
        .unwrap_or(std::ptr::null_mut())
}

/// # Safety
/// `report` must be a live handle from this library, or null.
#[no_mangle]
pub unsafe extern "C" fn rumspec_report_free(report: *mut RumspecReport) {
    if !report.is_null() {
        drop(Box::from_raw(report));
    }
}

/// Test whether `base` (interleaved per joint, `base_len = dimension *
/// joint_count` complex entries split into re/im arrays) is a kernel vector
/// of the transfer function at multifactor `omega`: the factor-periodic
/// field is a flex exactly when the relative residual is at most `tol`.
///
/// # Safety
/// The array pointers must reference buffers of the stated lengths.
#[no_mangle]
pub unsafe extern "C" fn rumspec_check_factor_flex(
    fw: *const RumspecFramework,
    omega_re: *const f64,
    omega_im: *const f64,
    base_re: *const f64,
    base_im: *const f64,
    base_len: usize,
    tol: f64,
    is_flex_out: *mut u8,
    residual_out: *mut f64,
) -> RumspecStatus {
    clear_error();
    if fw.is_null() || omega_re.is_null() || omega_im.is_null() || base_re.is_null() || base_im.is_null() {
        set_error("null pointer");
        return RumspecStatus::NullPointer;
    }
    let framework = &(*fw).inner;
    let d = framework.dimension();
    if base_len != d * framework.joint_count() {
        set_error(format!(
            "base length {base_len} != dimension * joint count = {}",
            d * framework.joint_count()
        ));
        return RumspecStatus::InvalidArgument;
    }
    let omega: Vec<_> = (0..d)
        .map(|i| Complex::new(*omega_re.add(i), *omega_im.add(i)))
        .collect();
    let base: Vec<_> = (0..base_len)
        .map(|i| Complex::new(*base_re.add(i), *base_im.add(i)))
        .collect();
    match rumspec::flex::check_factor_flex(framework, &omega, &base, tol) {
        Ok((ok, rel)) => {
            if !is_flex_out.is_null() {
                *is_flex_out = ok as u8;
            }
            if !residual_out.is_null() {
                *residual_out = rel;
            }
            RumspecStatus::Ok
        }
        Err(e) => {
            set_error(e.to_string());
            RumspecStatus::DomainError
        }
    }
}

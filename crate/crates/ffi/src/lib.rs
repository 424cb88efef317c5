//! C ABI over `skfb-core`.
//!
//! Volumes cross the boundary as opaque `SkfbVolume` handles owned by the
//! caller and released with `skfb_volume_free`. Every fallible call returns an
//! `SkfbStatus`; on failure `skfb_last_error` gives a message for the calling
//! thread. Panics are caught and reported as `SKFB_STATUS_PANIC`.

use std::cell::RefCell;
use std::ffi::{c_char, CStr, CString};
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::ptr;

use skfb_core::phantom::{phantom_volume, PhantomVolumeConfig};
use skfb_core::{
    bilateral_filter, enl, gaussian_filter, load_vol1, mid_slice, mse, psnr, save_vol1, si, smpi,
    ssi, BilateralParams, BoundaryPolicy, Error, OperatorConfig, Volume,
};

/// Result of every fallible call.
#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SkfbStatus {
    Ok = 0,
    NullPointer = 1,
    InvalidArgument = 2,
    Config = 3,
    Degenerate = 4,
    Io = 5,
    Panic = 6,
}

/// Handling of taps that fall outside the volume.
#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SkfbBoundary {
    Reflect = 0,
    Clamp = 1,
    Periodic = 2,
}

impl From<SkfbBoundary> for BoundaryPolicy {
    fn from(b: SkfbBoundary) -> Self {
        match b {
            SkfbBoundary::Reflect => BoundaryPolicy::Reflect,
            SkfbBoundary::Clamp => BoundaryPolicy::Clamp,
            SkfbBoundary::Periodic => BoundaryPolicy::Periodic,
        }
    }
}

/// Metrics of a filtered region against its original. `enl` and `psnr` are
/// `INFINITY` for a flat region and a perfect match.
#[repr(C)]
#[derive(Debug, Clone, Copy, Default, PartialEq)]
pub struct SkfbMetrics {
    pub si: f64,
    pub ssi: f64,
    pub smpi: f64,
    pub enl: f64,
    pub mse: f64,
    pub psnr: f64,
}

/// Opaque volume handle.
pub struct SkfbVolume(Volume);

thread_local! {
    static LAST_ERROR: RefCell<Option<CString>> = const { RefCell::new(None) };
}

fn set_last_error(msg: String) {
    let c = CString::new(msg.replace('\0', " ")).unwrap_or_default();
    LAST_ERROR.with(|e| *e.borrow_mut() = Some(c));
}

fn status_of(e: &Error) -> SkfbStatus {
    match e {
        e if e.is_degenerate() => SkfbStatus::Degenerate,
        Error::Config(_) => SkfbStatus::Config,
        Error::Io(_) | Error::Format(_) | Error::Json(_) => SkfbStatus::Io,
        _ => SkfbStatus::InvalidArgument,
    }
}

/// Runs `f`, converting errors and panics into a status.
fn guard(f: impl FnOnce() -> Result<(), (SkfbStatus, String)>) -> SkfbStatus {
    match catch_unwind(AssertUnwindSafe(f)) {
        Ok(Ok(())) => SkfbStatus::Ok,
        Ok(Err((status, msg))) => {
            set_last_error(msg);
            status
        }
        Err(_) => {
            set_last_error("internal panic".into());
            SkfbStatus::Panic
        }
    }
}

fn core<T>(r: skfb_core::Result<T>) -> Result<T, (SkfbStatus, String)> {
    r.map_err(|e| (status_of(&e), e.to_string()))
}

fn null(what: &str) -> (SkfbStatus, String) {
    (SkfbStatus::NullPointer, format!("{what} is null"))
}

unsafe fn volume_ref<'a>(
    v: *const SkfbVolume,
    what: &str,
) -> Result<&'a Volume, (SkfbStatus, String)> {
    v.as_ref().map(|h| &h.0).ok_or_else(|| null(what))
}

unsafe fn c_str<'a>(s: *const c_char, what: &str) -> Result<&'a str, (SkfbStatus, String)> {
    if s.is_null() {
        return Err(null(what));
    }
    CStr::from_ptr(s)
        .to_str()
        .map_err(|_| (SkfbStatus::InvalidArgument, format!("{what} is not UTF-8")))
}

unsafe fn store(out: *mut *mut SkfbVolume, v: Volume) -> Result<(), (SkfbStatus, String)> {
    if out.is_null() {
        return Err(null("output handle"));
    }
    *out = Box::into_raw(Box::new(SkfbVolume(v)));
    Ok(())
}

/// Message of the last failed call on this thread, or NULL. The pointer is
/// valid until the next failing call on the same thread.
#[no_mangle]
pub extern "C" fn skfb_last_error() -> *const c_char {
    LAST_ERROR.with(|e| e.borrow().as_ref().map_or(ptr::null(), |c| c.as_ptr()))
}

/// Library version as a static NUL-terminated string.
#[no_mangle]
pub extern "C" fn skfb_version() -> *const c_char {
    concat!(env!("CARGO_PKG_VERSION"), "\0").as_ptr().cast()
}

/// Copies `len` row-major samples into a new node-centered volume.
///
/// # Safety
/// `dims` must point to `ndim` values and `data` to `len` doubles.
#[no_mangle]
pub unsafe extern "C" fn skfb_volume_new(
    dims: *const usize,
    ndim: usize,
    data: *const f64,
    len: usize,
    out: *mut *mut SkfbVolume,
) -> SkfbStatus {
    guard(|| {
        if dims.is_null() {
            return Err(null("dims"));
        }
        if data.is_null() && len > 0 {
            return Err(null("data"));
        }
        let dims = std::slice::from_raw_parts(dims, ndim).to_vec();
        let data = if len == 0 {
            Vec::new()
        } else {
            std::slice::from_raw_parts(data, len).to_vec()
        };
        store(out, core(Volume::new(dims, data))?)
    })
}

/// Releases a handle. NULL is ignored.
///
/// # Safety
/// `v` must come from this library and not be used afterwards.
#[no_mangle]
pub unsafe extern "C" fn skfb_volume_free(v: *mut SkfbVolume) {
    if !v.is_null() {
        drop(Box::from_raw(v));
    }
}

/// Number of axes, or 0 for NULL.
///
/// # Safety
/// `v` must be NULL or a live handle.
#[no_mangle]
pub unsafe extern "C" fn skfb_volume_ndim(v: *const SkfbVolume) -> usize {
    v.as_ref().map_or(0, |h| h.0.ndim())
}

/// Number of samples, or 0 for NULL.
///
/// # Safety
/// `v` must be NULL or a live handle.
#[no_mangle]
pub unsafe extern "C" fn skfb_volume_len(v: *const SkfbVolume) -> usize {
    v.as_ref().map_or(0, |h| h.0.len())
}

/// Writes the axis lengths to `out`, which holds `cap` entries.
///
/// # Safety
/// `v` must be a live handle and `out` must hold `cap` values.
#[no_mangle]
pub unsafe extern "C" fn skfb_volume_dims(
    v: *const SkfbVolume,
    out: *mut usize,
    cap: usize,
) -> SkfbStatus {
    guard(|| {
        let v = volume_ref(v, "volume")?;
        if out.is_null() {
            return Err(null("dims buffer"));
        }
        if cap < v.ndim() {
            return Err((
                SkfbStatus::InvalidArgument,
                format!("dims buffer holds {cap}, need {}", v.ndim()),
            ));
        }
        ptr::copy_nonoverlapping(v.dims().as_ptr(), out, v.ndim());
        Ok(())
    })
}

/// Borrowed pointer to the row-major samples, valid while the handle lives.
///
/// # Safety
/// `v` must be NULL or a live handle.
#[no_mangle]
pub unsafe extern "C" fn skfb_volume_data(v: *const SkfbVolume) -> *const f64 {
    v.as_ref().map_or(ptr::null(), |h| h.0.data().as_ptr())
}

/// Reads a VOL1 file.
///
/// # Safety
/// `path` must be a NUL-terminated string and `out` writable.
#[no_mangle]
pub unsafe extern "C" fn skfb_volume_load(
    path: *const c_char,
    out: *mut *mut SkfbVolume,
) -> SkfbStatus {
    guard(|| {
        let path = c_str(path, "path")?;
        store(out, core(load_vol1(path))?)
    })
}

/// Writes a VOL1 file.
///
/// # Safety
/// `v` must be a live handle and `path` a NUL-terminated string.
#[no_mangle]
pub unsafe extern "C" fn skfb_volume_save(v: *const SkfbVolume, path: *const c_char) -> SkfbStatus {
    guard(|| {
        let v = volume_ref(v, "volume")?;
        let path = c_str(path, "path")?;
        core(save_vol1(path, v))
    })
}

/// 2-D slice at `index` along axis 0 of a 3-D volume.
///
/// # Safety
/// `v` must be a live handle and `out` writable.
#[no_mangle]
pub unsafe extern "C" fn skfb_volume_slice(
    v: *const SkfbVolume,
    index: usize,
    out: *mut *mut SkfbVolume,
) -> SkfbStatus {
    guard(|| {
        let v = volume_ref(v, "volume")?;
        store(out, core(mid_slice(v, index))?)
    })
}

/// Shepp-Logan phantom (modified contrast) rendered at 400 pixels, resized
/// to `size x size` and stacked `depth` times.
///
/// # Safety
/// `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn skfb_phantom_volume(
    size: usize,
    depth: usize,
    out: *mut *mut SkfbVolume,
) -> SkfbStatus {
    guard(|| {
        let cfg = PhantomVolumeConfig {
            size,
            depth,
            ..Default::default()
        };
        store(out, core(phantom_volume(&cfg))?)
    })
}

/// Separable Gaussian blur; `sigma` is in samples.
///
/// # Safety
/// `v` must be a live handle and `out` writable.
#[no_mangle]
pub unsafe extern "C" fn skfb_gaussian_filter(
    v: *const SkfbVolume,
    sigma: f64,
    boundary: SkfbBoundary,
    out: *mut *mut SkfbVolume,
) -> SkfbStatus {
    guard(|| {
        let v = volume_ref(v, "volume")?;
        store(out, core(gaussian_filter(v, sigma, boundary.into()))?)
    })
}

/// Bilateral filter; `sigma_spatial` in samples, `sigma_range` in intensity.
///
/// # Safety
/// `v` must be a live handle and `out` writable.
#[no_mangle]
pub unsafe extern "C" fn skfb_bilateral_filter(
    v: *const SkfbVolume,
    sigma_spatial: f64,
    sigma_range: f64,
    boundary: SkfbBoundary,
    out: *mut *mut SkfbVolume,
) -> SkfbStatus {
    guard(|| {
        let v = volume_ref(v, "volume")?;
        let p = core(BilateralParams::new(sigma_spatial, sigma_range))?;
        store(out, core(bilateral_filter(v, p, boundary.into()))?)
    })
}

/// Applies an operator described by JSON, e.g.
/// `{"op":"wavelet","family":"haar","levels":2,"mode":"hard","lambda":"universal"}`.
///
/// # Safety
/// `v` must be a live handle, `json` NUL-terminated and `out` writable.
#[no_mangle]
pub unsafe extern "C" fn skfb_apply_operator(
    v: *const SkfbVolume,
    json: *const c_char,
    out: *mut *mut SkfbVolume,
) -> SkfbStatus {
    guard(|| {
        let v = volume_ref(v, "volume")?;
        let cfg = core(OperatorConfig::parse(c_str(json, "operator JSON")?))?;
        let (filtered, _) = core(cfg.apply(v))?;
        store(out, filtered)
    })
}

/// Speckle and fidelity metrics of `filtered` against `original`, both
/// already cropped to the region of interest.
///
/// # Safety
/// Both handles must be live and `out` writable.
#[no_mangle]
pub unsafe extern "C" fn skfb_metrics(
    original: *const SkfbVolume,
    filtered: *const SkfbVolume,
    peak: f64,
    out: *mut SkfbMetrics,
) -> SkfbStatus {
    guard(|| {
        let o = volume_ref(original, "original")?;
        let f = volume_ref(filtered, "filtered")?;
        if out.is_null() {
            return Err(null("metrics output"));
        }
        let m = SkfbMetrics {
            si: core(si(f))?,
            ssi: core(ssi(o, f))?,
            smpi: core(smpi(o, f))?,
            enl: core(enl(f))?.as_f64(),
            mse: core(mse(o, f))?,
            psnr: core(psnr(o, f, peak))?.as_f64(),
        };
        *out = m;
        Ok(())
    })
}

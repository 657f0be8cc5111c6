//! C ABI over the `dpsconf` library.
//!
//! Images, disparity maps, matchers and confidence results cross the
//! boundary as opaque heap handles. Every fallible call returns a
//! [`DpsStatus`] and writes its result through an out-pointer; the message
//! of the most recent failure on the calling thread is available from
//! [`dps_last_error_message`]. Every handle must be released with its
//! `_free` function.

use std::cell::RefCell;
use std::ffi::{c_char, CStr, CString};
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::path::PathBuf;
use std::ptr;

use dpsconf::confidence::{sweep_confidence, ConfidenceParams, SweepConfidence};
use dpsconf::error::{Error, ErrorKind};
use dpsconf::eval::{optimal_auc, sparsification_auc, EvalParams};
use dpsconf::imagery::{load_disparity, load_image, save_disparity, DisparityFormat};
use dpsconf::matcher::{
    CensusMatcher, ExternalMatcher, ExternalMatcherSpec, MatcherConfig, StereoMatcher,
};
use dpsconf::raster::{DisparityMap, RasterImage};
use dpsconf::sweep::{SweepOptions, SweepSpec};

/// 16-bit PNG, value / 256, 0 marks invalid.
pub const DPS_FORMAT_KITTI_PNG16: u32 = 0;
/// Portable float map; non-finite values mark invalid.
pub const DPS_FORMAT_PFM: u32 = 1;

/// Call outcome. Codes 2 to 4 match the command-line exit codes.
#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum DpsStatus {
    Ok = 0,
    /// Null pointer, non-UTF-8 string or unknown enum value.
    InvalidArgument = 1,
    Validation = 2,
    Io = 3,
    External = 4,
    /// A Rust panic was caught at the boundary.
    Internal = 6,
}

/// Summary of one sparsification run.
#[repr(C)]
#[derive(Debug, Clone, Copy, Default, PartialEq)]
pub struct DpsAucReport {
    pub epsilon: f64,
    pub auc: f64,
    pub optimal_auc: f64,
    pub n_pixels: usize,
}

pub struct DpsImage(RasterImage);

pub struct DpsDisparity(DisparityMap);

pub struct DpsMatcher(Box<dyn StereoMatcher>);

pub struct DpsConfidence(SweepConfidence);

thread_local! {
    static LAST_ERROR: RefCell<Option<CString>> = const { RefCell::new(None) };
}

fn set_last_error(message: String) {
    let c = CString::new(message.replace('\0', " ")).expect("interior NULs removed");
    LAST_ERROR.with(|slot| *slot.borrow_mut() = Some(c));
}

enum Failure {
    Argument(String),
    Core(Error),
}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        Failure::Core(e)
    }
}

type FfiResult = Result<(), Failure>;

fn guard<F: FnOnce() -> FfiResult>(body: F) -> DpsStatus {
    match catch_unwind(AssertUnwindSafe(body)) {
        Ok(Ok(())) => DpsStatus::Ok,
        Ok(Err(Failure::Argument(msg))) => {
            set_last_error(msg);
            DpsStatus::InvalidArgument
        }
        Ok(Err(Failure::Core(e))) => {
            set_last_error(e.to_string());
            match e.kind() {
                ErrorKind::Validation => DpsStatus::Validation,
                ErrorKind::Io => DpsStatus::Io,
                ErrorKind::External => DpsStatus::External,
                ErrorKind::AllFailed => DpsStatus::Validation,
            }
        }
        Err(_) => {
            set_last_error("internal panic".into());
            DpsStatus::Internal
        }
    }
}

unsafe fn borrow<'a, T>(p: *const T, name: &str) -> Result<&'a T, Failure> {
    p.as_ref().ok_or_else(|| Failure::Argument(format!("{name} is null")))
}

unsafe fn out_ptr<'a, T>(p: *mut T, name: &str) -> Result<&'a mut T, Failure> {
    p.as_mut().ok_or_else(|| Failure::Argument(format!("{name} is null")))
}

unsafe fn path_arg(p: *const c_char, name: &str) -> Result<PathBuf, Failure> {
    Ok(PathBuf::from(str_arg(p, name)?))
}

unsafe fn str_arg(p: *const c_char, name: &str) -> Result<String, Failure> {
    if p.is_null() {
        return Err(Failure::Argument(format!("{name} is null")));
    }
    CStr::from_ptr(p)
        .to_str()
        .map(str::to_owned)
        .map_err(|_| Failure::Argument(format!("{name} is not valid UTF-8")))
}

fn format_arg(format: u32) -> Result<DisparityFormat, Failure> {
    match format {
        DPS_FORMAT_KITTI_PNG16 => Ok(DisparityFormat::KittiPng16),
        DPS_FORMAT_PFM => Ok(DisparityFormat::Pfm),
        other => Err(Failure::Argument(format!("unknown disparity format {other}"))),
    }
}

unsafe fn fill(values: &[f64], valid: &[bool], out: *mut f64, len: usize) -> FfiResult {
    if out.is_null() {
        return Err(Failure::Argument("output buffer is null".into()));
    }
    if len != values.len() {
        return Err(Failure::Argument(format!(
            "buffer holds {len} values, map has {}",
            values.len()
        )));
    }
    let dst = std::slice::from_raw_parts_mut(out, len);
    for ((d, &v), &ok) in dst.iter_mut().zip(values).zip(valid) {
        *d = if ok { v } else { f64::NAN };
    }
    Ok(())
}

/// Message of the last failed call on this thread, or NULL. The pointer
/// stays valid until the next failing call on the same thread.
#[no_mangle]
pub extern "C" fn dps_last_error_message() -> *const c_char {
    LAST_ERROR.with(|slot| slot.borrow().as_ref().map_or(ptr::null(), |c| c.as_ptr()))
}

/// Library version as a static NUL-terminated string.
#[no_mangle]
pub extern "C" fn dps_version() -> *const c_char {
    concat!(env!("CARGO_PKG_VERSION"), "\0").as_ptr().cast()
}

/// # Safety
/// `path` must be a NUL-terminated string and `out` a writable pointer.
#[no_mangle]
pub unsafe extern "C" fn dps_image_load(path: *const c_char, out: *mut *mut DpsImage) -> DpsStatus {
    guard(|| {
        let out = out_ptr(out, "out")?;
        let img = load_image(path_arg(path, "path")?)?;
        *out = Box::into_raw(Box::new(DpsImage(img)));
        Ok(())
    })
}

/// Copies `width * height * channels` row-major bytes into a new image.
/// `channels` is 1 (gray) or 3 (RGB).
///
/// # Safety
/// `data` must point to that many readable bytes; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn dps_image_new(
    width: usize,
    height: usize,
    channels: usize,
    data: *const u8,
    out: *mut *mut DpsImage,
) -> DpsStatus {
    guard(|| {
        let out = out_ptr(out, "out")?;
        if data.is_null() {
            return Err(Failure::Argument("data is null".into()));
        }
        let len = width
            .checked_mul(height)
            .and_then(|a| a.checked_mul(channels))
            .ok_or_else(|| Failure::Argument("image size overflows".into()))?;
        let bytes = std::slice::from_raw_parts(data, len).to_vec();
        let img = RasterImage::new(width, height, channels, bytes)?;
        *out = Box::into_raw(Box::new(DpsImage(img)));
        Ok(())
    })
}

/// # Safety
/// `image` must be a live handle or NULL.
#[no_mangle]
pub unsafe extern "C" fn dps_image_width(image: *const DpsImage) -> usize {
    image.as_ref().map_or(0, |i| i.0.width())
}

/// # Safety
/// `image` must be a live handle or NULL.
#[no_mangle]
pub unsafe extern "C" fn dps_image_height(image: *const DpsImage) -> usize {
    image.as_ref().map_or(0, |i| i.0.height())
}

/// # Safety
/// `image` must come from this library and not be freed twice.
#[no_mangle]
pub unsafe extern "C" fn dps_image_free(image: *mut DpsImage) {
    if !image.is_null() {
        drop(Box::from_raw(image));
    }
}

/// Built-in census/semi-global matcher searching `[0, d_max]` with the
/// remaining parameters at their defaults.
///
/// # Safety
/// `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn dps_matcher_new_builtin(d_max: u32, out: *mut *mut DpsMatcher) -> DpsStatus {
    guard(|| {
        let out = out_ptr(out, "out")?;
        let m = CensusMatcher::new(MatcherConfig::with_d_max(d_max))?;
        *out = Box::into_raw(Box::new(DpsMatcher(Box::new(m))));
        Ok(())
    })
}

/// Matcher that runs `command_template` (with `{left}`, `{right}` and
/// `{out}` placeholders) under `sh -c` in a fresh subdirectory of
/// `work_dir`, expecting a disparity file in `format`.
///
/// # Safety
/// String arguments must be NUL-terminated; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn dps_matcher_new_external(
    command_template: *const c_char,
    work_dir: *const c_char,
    format: u32,
    timeout_secs: f64,
    d_max: u32,
    out: *mut *mut DpsMatcher,
) -> DpsStatus {
    guard(|| {
        let out = out_ptr(out, "out")?;
        let spec = ExternalMatcherSpec {
            command_template: str_arg(command_template, "command_template")?,
            work_dir: path_arg(work_dir, "work_dir")?,
            output_format: format_arg(format)?,
            timeout_secs,
        };
        let m = ExternalMatcher::new(spec)?.with_d_max(d_max);
        *out = Box::into_raw(Box::new(DpsMatcher(Box::new(m))));
        Ok(())
    })
}

/// # Safety
/// `matcher` must come from this library and not be freed twice.
#[no_mangle]
pub unsafe extern "C" fn dps_matcher_free(matcher: *mut DpsMatcher) {
    if !matcher.is_null() {
        drop(Box::from_raw(matcher));
    }
}

/// # Safety
/// Handles must be live; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn dps_match(
    matcher: *const DpsMatcher,
    left: *const DpsImage,
    right: *const DpsImage,
    out: *mut *mut DpsDisparity,
) -> DpsStatus {
    guard(|| {
        let out = out_ptr(out, "out")?;
        let m = borrow(matcher, "matcher")?;
        let disp = m.0.compute(&borrow(left, "left")?.0, &borrow(right, "right")?.0)?;
        *out = Box::into_raw(Box::new(DpsDisparity(disp)));
        Ok(())
    })
}

/// Loads a disparity map; for ground truth, values above `d_max` become
/// invalid when `d_max > 0`.
///
/// # Safety
/// `path` must be NUL-terminated; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn dps_disparity_load(
    path: *const c_char,
    format: u32,
    d_max: f64,
    out: *mut *mut DpsDisparity,
) -> DpsStatus {
    guard(|| {
        let out = out_ptr(out, "out")?;
        let mut disp = load_disparity(path_arg(path, "path")?, format_arg(format)?)?;
        if d_max > 0.0 {
            disp = disp.mask_above(d_max);
        }
        *out = Box::into_raw(Box::new(DpsDisparity(disp)));
        Ok(())
    })
}

/// # Safety
/// `disparity` must be live; `path` must be NUL-terminated.
#[no_mangle]
pub unsafe extern "C" fn dps_disparity_save(
    disparity: *const DpsDisparity,
    path: *const c_char,
    format: u32,
) -> DpsStatus {
    guard(|| {
        let d = borrow(disparity, "disparity")?;
        save_disparity(&d.0, path_arg(path, "path")?, format_arg(format)?)?;
        Ok(())
    })
}

/// # Safety
/// `disparity` must be a live handle or NULL.
#[no_mangle]
pub unsafe extern "C" fn dps_disparity_width(disparity: *const DpsDisparity) -> usize {
    disparity.as_ref().map_or(0, |d| d.0.width())
}

/// # Safety
/// `disparity` must be a live handle or NULL.
#[no_mangle]
pub unsafe extern "C" fn dps_disparity_height(disparity: *const DpsDisparity) -> usize {
    disparity.as_ref().map_or(0, |d| d.0.height())
}

/// Copies the row-major values into `out` (length `width * height`),
/// writing NaN at invalid pixels.
///
/// # Safety
/// `out` must point to `len` writable doubles.
#[no_mangle]
pub unsafe extern "C" fn dps_disparity_read(
    disparity: *const DpsDisparity,
    out: *mut f64,
    len: usize,
) -> DpsStatus {
    guard(|| {
        let d = &borrow(disparity, "disparity")?.0;
        fill(d.values(), d.valid_mask(), out, len)
    })
}

/// # Safety
/// `disparity` must come from this library and not be freed twice.
#[no_mangle]
pub unsafe extern "C" fn dps_disparity_free(disparity: *mut DpsDisparity) {
    if !disparity.is_null() {
        drop(Box::from_raw(disparity));
    }
}

/// Runs the plane sweep over `shifts` (strictly increasing, containing 0,
/// at least two) and derives unreliability and confidence. `sigma <= 0`
/// selects the default `d_max * ln 2`; `parallelism` 0 runs every shift
/// concurrently.
///
/// # Safety
/// Handles must be live; `shifts` must point to `n_shifts` integers;
/// `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn dps_sweep_confidence(
    matcher: *const DpsMatcher,
    left: *const DpsImage,
    right: *const DpsImage,
    shifts: *const i32,
    n_shifts: usize,
    sigma: f64,
    parallelism: usize,
    out: *mut *mut DpsConfidence,
) -> DpsStatus {
    guard(|| {
        let out = out_ptr(out, "out")?;
        let m = &borrow(matcher, "matcher")?.0;
        if shifts.is_null() {
            return Err(Failure::Argument("shifts is null".into()));
        }
        let spec = SweepSpec::new(std::slice::from_raw_parts(shifts, n_shifts).to_vec())?;
        let d_max = f64::from(m.d_max());
        let params = if sigma > 0.0 {
            ConfidenceParams::with_sigma(d_max, sigma)?
        } else {
            ConfidenceParams::new(d_max)
        };
        let sc = sweep_confidence(
            &borrow(left, "left")?.0,
            &borrow(right, "right")?.0,
            &spec,
            m.as_ref(),
            &params,
            &SweepOptions::with_parallelism(parallelism),
        )?;
        *out = Box::into_raw(Box::new(DpsConfidence(sc)));
        Ok(())
    })
}

/// # Safety
/// `confidence` must be a live handle or NULL.
#[no_mangle]
pub unsafe extern "C" fn dps_confidence_width(confidence: *const DpsConfidence) -> usize {
    confidence.as_ref().map_or(0, |c| c.0.confidence.width())
}

/// # Safety
/// `confidence` must be a live handle or NULL.
#[no_mangle]
pub unsafe extern "C" fn dps_confidence_height(confidence: *const DpsConfidence) -> usize {
    confidence.as_ref().map_or(0, |c| c.0.confidence.height())
}

/// Copies the confidence values, NaN where undefined.
///
/// # Safety
/// `out` must point to `len` writable doubles.
#[no_mangle]
pub unsafe extern "C" fn dps_confidence_read(
    confidence: *const DpsConfidence,
    out: *mut f64,
    len: usize,
) -> DpsStatus {
    guard(|| {
        let c = &borrow(confidence, "confidence")?.0.confidence;
        fill(c.values(), c.valid_mask(), out, len)
    })
}

/// Copies the unreliability values, NaN where undefined.
///
/// # Safety
/// `out` must point to `len` writable doubles.
#[no_mangle]
pub unsafe extern "C" fn dps_confidence_read_unreliability(
    confidence: *const DpsConfidence,
    out: *mut f64,
    len: usize,
) -> DpsStatus {
    guard(|| {
        let u = &borrow(confidence, "confidence")?.0.unreliability;
        fill(u.values(), u.valid_mask(), out, len)
    })
}

/// New handle holding a copy of the zero-shift disparity.
///
/// # Safety
/// `confidence` must be live; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn dps_confidence_anchor(
    confidence: *const DpsConfidence,
    out: *mut *mut DpsDisparity,
) -> DpsStatus {
    guard(|| {
        let out = out_ptr(out, "out")?;
        let anchor = borrow(confidence, "confidence")?.0.anchor.clone();
        *out = Box::into_raw(Box::new(DpsDisparity(anchor)));
        Ok(())
    })
}

/// Scores the confidence against `gt` with bad-pixel threshold `tau`,
/// sampling 20 evenly spaced densities.
///
/// # Safety
/// Handles must be live; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn dps_confidence_auc(
    confidence: *const DpsConfidence,
    gt: *const DpsDisparity,
    tau: f64,
    out: *mut DpsAucReport,
) -> DpsStatus {
    guard(|| {
        let out = out_ptr(out, "out")?;
        let sc = &borrow(confidence, "confidence")?.0;
        let params = EvalParams {
            tau,
            ..EvalParams::default()
        };
        let r = sparsification_auc(&sc.confidence, &sc.anchor, &borrow(gt, "gt")?.0, &params)?;
        *out = DpsAucReport {
            epsilon: r.epsilon,
            auc: r.auc,
            optimal_auc: r.optimal_auc,
            n_pixels: r.n_pixels,
        };
        Ok(())
    })
}

/// `eps + (1 - eps) ln(1 - eps)` for `eps` in `[0, 1)`.
///
/// # Safety
/// `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn dps_optimal_auc(epsilon: f64, out: *mut f64) -> DpsStatus {
    guard(|| {
        let out = out_ptr(out, "out")?;
        *out = optimal_auc(epsilon)?;
        Ok(())
    })
}

/// # Safety
/// `confidence` must come from this library and not be freed twice.
#[no_mangle]
pub unsafe extern "C" fn dps_confidence_free(confidence: *mut DpsConfidence) {
    if !confidence.is_null() {
        drop(Box::from_raw(confidence));
    }
}

//! C ABI over the `defocus` library.
//!
//! Every fallible function returns a [`DefocusStatus`]; on failure the
//! message is available from [`defocus_last_error`] on the same thread.
//! Handles are opaque and must be released with their `*_free` function.

use std::cell::RefCell;
use std::ffi::{c_char, CStr, CString};
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::ptr;

use defocus::dct::BlurMap;
use defocus::edas::{rank, Criterion, CriterionKind, DecisionMatrix, Orientation};
use defocus::eval::{f_alpha, precision_recall};
use defocus::segment::{segment, SegmentationMask};
use defocus::{Config, Error, GrayImage};

#[repr(C)]
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum DefocusStatus {
    Ok = 0,
    NullPointer = 1,
    InvalidArgument = 2,
    Io = 3,
    Format = 4,
    Shape = 5,
    Domain = 6,
    Parse = 7,
    Panic = 8,
}

/// Grayscale image with samples in [0, 1].
pub struct DefocusImage {
    inner: GrayImage,
}

/// Binary mask, one byte (0 or 1) per pixel.
pub struct DefocusMask {
    inner: SegmentationMask,
}

/// Refined sharpness map, one double per pixel.
pub struct DefocusBlurMap {
    inner: BlurMap,
}

thread_local! {
    static LAST_ERROR: RefCell<Option<CString>> = const { RefCell::new(None) };
}

fn set_error(msg: String) {
    let c = CString::new(msg.replace('\0', " ")).unwrap_or_default();
    LAST_ERROR.with(|e| *e.borrow_mut() = Some(c));
}

struct Failure(DefocusStatus, String);

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        let status = match e {
            Error::Io { .. } => DefocusStatus::Io,
            Error::Format { .. } => DefocusStatus::Format,
            Error::Shape(_) => DefocusStatus::Shape,
            Error::Domain(_) => DefocusStatus::Domain,
            Error::Parse { .. } => DefocusStatus::Parse,
        };
        Failure(status, e.to_string())
    }
}

fn null(what: &str) -> Failure {
    Failure(DefocusStatus::NullPointer, format!("{what} is null"))
}

fn invalid(msg: impl Into<String>) -> Failure {
    Failure(DefocusStatus::InvalidArgument, msg.into())
}

fn guard(f: impl FnOnce() -> Result<(), Failure>) -> DefocusStatus {
    match catch_unwind(AssertUnwindSafe(f)) {
        Ok(Ok(())) => {
            LAST_ERROR.with(|e| *e.borrow_mut() = None);
            DefocusStatus::Ok
        }
        Ok(Err(Failure(status, msg))) => {
            set_error(msg);
            status
        }
        Err(_) => {
            set_error("internal panic".into());
            DefocusStatus::Panic
        }
    }
}

unsafe fn deref<'a, T>(p: *const T, what: &str) -> Result<&'a T, Failure> {
    p.as_ref().ok_or_else(|| null(what))
}

unsafe fn slice<'a, T>(p: *const T, len: usize, what: &str) -> Result<&'a [T], Failure> {
    if len == 0 {
        return Ok(&[]);
    }
    if p.is_null() {
        return Err(null(what));
    }
    Ok(std::slice::from_raw_parts(p, len))
}

unsafe fn text<'a>(p: *const c_char, what: &str) -> Result<&'a str, Failure> {
    if p.is_null() {
        return Err(null(what));
    }
    CStr::from_ptr(p)
        .to_str()
        .map_err(|_| invalid(format!("{what} is not valid UTF-8")))
}

unsafe fn config(text_or_null: *const c_char) -> Result<Config, Failure> {
    if text_or_null.is_null() {
        return Ok(Config::default());
    }
    Ok(Config::parse(text(text_or_null, "config")?)?)
}

unsafe fn put<T>(out: *mut *mut T, value: T) -> Result<(), Failure> {
    if out.is_null() {
        return Err(null("out"));
    }
    *out = Box::into_raw(Box::new(value));
    Ok(())
}

/// Message for the last failed call on this thread, or NULL after a success.
/// The pointer stays valid until the next call into this library on the same thread.
#[no_mangle]
pub extern "C" fn defocus_last_error() -> *const c_char {
    LAST_ERROR.with(|e| e.borrow().as_ref().map_or(ptr::null(), |s| s.as_ptr()))
}

/// Library version as a static NUL-terminated string.
#[no_mangle]
pub extern "C" fn defocus_version() -> *const c_char {
    concat!(env!("CARGO_PKG_VERSION"), "\0").as_ptr().cast()
}

/// Copies `height * width` row-major samples into a new image.
///
/// # Safety
/// `data` must point to `height * width` doubles; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn defocus_image_new(
    height: usize,
    width: usize,
    data: *const f64,
    out: *mut *mut DefocusImage,
) -> DefocusStatus {
    guard(|| {
        let n = height
            .checked_mul(width)
            .ok_or_else(|| invalid("image size overflows"))?;
        let values = slice(data, n, "data")?.to_vec();
        put(
            out,
            DefocusImage {
                inner: GrayImage::new(height, width, values)?,
            },
        )
    })
}

/// Loads a PGM or PNG file as grayscale.
///
/// # Safety
/// `path` must be a NUL-terminated string; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn defocus_image_load(path: *const c_char, out: *mut *mut DefocusImage) -> DefocusStatus {
    guard(|| {
        let path = text(path, "path")?;
        put(
            out,
            DefocusImage {
                inner: defocus::io::load_gray(path)?,
            },
        )
    })
}

/// # Safety
/// `image` must be NULL or a handle from this library not yet freed.
#[no_mangle]
pub unsafe extern "C" fn defocus_image_free(image: *mut DefocusImage) {
    if !image.is_null() {
        drop(Box::from_raw(image));
    }
}

/// # Safety
/// `image` must be a live handle; `height` and `width` must be writable.
#[no_mangle]
pub unsafe extern "C" fn defocus_image_size(
    image: *const DefocusImage,
    height: *mut usize,
    width: *mut usize,
) -> DefocusStatus {
    guard(|| {
        let img = &deref(image, "image")?.inner;
        if height.is_null() || width.is_null() {
            return Err(null("size output"));
        }
        *height = img.height();
        *width = img.width();
        Ok(())
    })
}

/// Computes the refined blur map. `config_text` is configuration-file text or NULL for defaults.
///
/// # Safety
/// `image` must be a live handle, `config_text` NULL or NUL-terminated, `out` writable.
#[no_mangle]
pub unsafe extern "C" fn defocus_blur_map(
    image: *const DefocusImage,
    config_text: *const c_char,
    out: *mut *mut DefocusBlurMap,
) -> DefocusStatus {
    guard(|| {
        let img = &deref(image, "image")?.inner;
        let cfg = config(config_text)?;
        put(
            out,
            DefocusBlurMap {
                inner: defocus::blur_map(img, &cfg.blur)?,
            },
        )
    })
}

/// Borrows the map values; valid while `map` is alive.
///
/// # Safety
/// `map` must be a live handle; `data` and `len` must be writable.
#[no_mangle]
pub unsafe extern "C" fn defocus_blur_map_data(
    map: *const DefocusBlurMap,
    data: *mut *const f64,
    len: *mut usize,
) -> DefocusStatus {
    guard(|| {
        let values = deref(map, "map")?.inner.values();
        if data.is_null() || len.is_null() {
            return Err(null("data output"));
        }
        *data = values.as_ptr();
        *len = values.len();
        Ok(())
    })
}

/// # Safety
/// `map` must be NULL or a handle from this library not yet freed.
#[no_mangle]
pub unsafe extern "C" fn defocus_blur_map_free(map: *mut DefocusBlurMap) {
    if !map.is_null() {
        drop(Box::from_raw(map));
    }
}

/// Segments the in-focus region. `config_text` is configuration-file text or NULL for defaults.
///
/// # Safety
/// `image` must be a live handle, `config_text` NULL or NUL-terminated, `out` writable.
#[no_mangle]
pub unsafe extern "C" fn defocus_segment(
    image: *const DefocusImage,
    config_text: *const c_char,
    out: *mut *mut DefocusMask,
) -> DefocusStatus {
    guard(|| {
        let img = &deref(image, "image")?.inner;
        let cfg = config(config_text)?;
        put(
            out,
            DefocusMask {
                inner: segment(img, &cfg.pipeline)?,
            },
        )
    })
}

/// Copies `height * width` bytes (nonzero means set) into a new mask.
///
/// # Safety
/// `bits` must point to `height * width` bytes; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn defocus_mask_new(
    height: usize,
    width: usize,
    bits: *const u8,
    out: *mut *mut DefocusMask,
) -> DefocusStatus {
    guard(|| {
        let n = height
            .checked_mul(width)
            .ok_or_else(|| invalid("mask size overflows"))?;
        let bits = slice(bits, n, "bits")?.iter().map(|b| u8::from(*b != 0)).collect();
        put(
            out,
            DefocusMask {
                inner: SegmentationMask::new(height, width, bits)?,
            },
        )
    })
}

/// Borrows the mask bytes (0 or 1, row-major); valid while `mask` is alive.
///
/// # Safety
/// `mask` must be a live handle; the outputs must be writable.
#[no_mangle]
pub unsafe extern "C" fn defocus_mask_data(
    mask: *const DefocusMask,
    data: *mut *const u8,
    height: *mut usize,
    width: *mut usize,
) -> DefocusStatus {
    guard(|| {
        let m = &deref(mask, "mask")?.inner;
        if data.is_null() || height.is_null() || width.is_null() {
            return Err(null("data output"));
        }
        *data = m.bits().as_ptr();
        *height = m.height();
        *width = m.width();
        Ok(())
    })
}

/// # Safety
/// `mask` must be NULL or a handle from this library not yet freed.
#[no_mangle]
pub unsafe extern "C" fn defocus_mask_free(mask: *mut DefocusMask) {
    if !mask.is_null() {
        drop(Box::from_raw(mask));
    }
}

/// Precision and recall of `mask` against `gt`; an empty denominator gives 1.
///
/// # Safety
/// `mask` and `gt` must be live handles; `precision` and `recall` writable.
#[no_mangle]
pub unsafe extern "C" fn defocus_precision_recall(
    mask: *const DefocusMask,
    gt: *const DefocusMask,
    precision: *mut f64,
    recall: *mut f64,
) -> DefocusStatus {
    guard(|| {
        let (p, r) = precision_recall(&deref(mask, "mask")?.inner, &deref(gt, "gt")?.inner)?;
        if precision.is_null() || recall.is_null() {
            return Err(null("output"));
        }
        *precision = p;
        *recall = r;
        Ok(())
    })
}

/// Weighted harmonic F-measure; 0 when both inputs are 0.
#[no_mangle]
pub extern "C" fn defocus_f_alpha(precision: f64, recall: f64, alpha_sq: f64) -> f64 {
    f_alpha(precision, recall, alpha_sq)
}

/// EDAS ranking over a row-major `n_alternatives x n_criteria` score matrix.
///
/// `is_cost`, `weights` and `means` may be NULL (all benefit, equal weights,
/// column means). `canonical` nonzero selects the highest-score-wins variant.
/// `appraisal` may be NULL; `rank_out` receives 1-based ranks.
///
/// # Safety
/// Non-NULL arrays must hold the stated number of elements.
#[no_mangle]
pub unsafe extern "C" fn defocus_edas_rank(
    scores: *const f64,
    n_alternatives: usize,
    n_criteria: usize,
    is_cost: *const u8,
    weights: *const f64,
    means: *const f64,
    canonical: i32,
    appraisal: *mut f64,
    rank_out: *mut u32,
) -> DefocusStatus {
    guard(|| {
        if n_alternatives == 0 || n_criteria == 0 {
            return Err(invalid("need at least one alternative and one criterion"));
        }
        let n = n_alternatives
            .checked_mul(n_criteria)
            .ok_or_else(|| invalid("matrix size overflows"))?;
        let flat = slice(scores, n, "scores")?;
        let kinds = if is_cost.is_null() {
            vec![0; n_criteria]
        } else {
            slice(is_cost, n_criteria, "is_cost")?.to_vec()
        };
        if rank_out.is_null() {
            return Err(null("rank"));
        }
        let criteria = kinds
            .iter()
            .enumerate()
            .map(|(j, k)| Criterion {
                name: format!("c{j}"),
                kind: if *k != 0 {
                    CriterionKind::Cost
                } else {
                    CriterionKind::Benefit
                },
            })
            .collect();
        let mut m = DecisionMatrix::new(
            (0..n_alternatives).map(|i| format!("a{i}")).collect(),
            criteria,
            flat.chunks(n_criteria).map(<[f64]>::to_vec).collect(),
        )?;
        if !weights.is_null() {
            m = m.with_weights(slice(weights, n_criteria, "weights")?.to_vec())?;
        }
        if !means.is_null() {
            m = m.with_means(slice(means, n_criteria, "means")?.to_vec())?;
        }
        let orientation = if canonical != 0 {
            Orientation::Canonical
        } else {
            Orientation::Shortfall
        };
        let r = rank(&m, orientation)?;
        for (i, k) in r.rank.iter().enumerate() {
            *rank_out.add(i) = *k as u32;
        }
        if !appraisal.is_null() {
            for (i, s) in r.as_score.iter().enumerate() {
                *appraisal.add(i) = *s;
            }
        }
        Ok(())
    })
}

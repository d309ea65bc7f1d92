//! C interface to `sigscene`.
//!
//! Every fallible function returns an [`SgsStatus`]; on failure the message
//! is available from [`sgs_last_error_message`] on the same thread. Handles
//! are opaque and must be released with their `_free` function.

use std::cell::RefCell;
use std::ffi::{c_char, CStr, CString};
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::path::Path;
use std::ptr;

use sigscene::embedding::{pairwise_similarity, EmbeddingSet, SimilarityMethod, DEFAULT_T_GRID};
use sigscene::error::Error;
use sigscene::io;
use sigscene::linalg::RowMatrix;
use sigscene::pipeline::{self, RunConfig};
use sigscene::scoring::{score_dataset, DEFAULT_THRESHOLDS_DEG};
use sigscene::sigreg::{epps_pulley_1d, validate_cluster_gaussian, IsotropyThresholds};

#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SgsStatus {
    Ok = 0,
    NullPointer = 1,
    InvalidUtf8 = 2,
    InvalidArgument = 3,
    Io = 4,
    Parse = 5,
    Numerical = 6,
    IdMismatch = 7,
    BufferTooSmall = 8,
    Panic = 99,
}

#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SgsMethod {
    GaussianCosine = 0,
    CharFn = 1,
}

#[repr(C)]
#[derive(Debug, Clone, Copy, Default, PartialEq)]
pub struct SgsVerdict {
    pub eigenvalue_ratio: f64,
    pub mean_norm: f64,
    pub is_isotropic: bool,
    pub mean_near_zero: bool,
    pub passes: bool,
}

#[repr(C)]
#[derive(Debug, Clone, Copy, Default, PartialEq)]
pub struct SgsScore {
    pub precision: f64,
    pub maa: f64,
    pub score: f64,
}

/// Opaque set of named embeddings.
pub struct SgsEmbeddings {
    set: EmbeddingSet,
}

thread_local! {
    static LAST_ERROR: RefCell<Option<CString>> = const { RefCell::new(None) };
}

fn set_error(msg: String) {
    let c = CString::new(msg.replace('\0', " ")).expect("nul bytes removed");
    LAST_ERROR.with(|e| *e.borrow_mut() = Some(c));
}

struct Fail(SgsStatus, String);

impl From<Error> for Fail {
    fn from(e: Error) -> Self {
        let status = match &e {
            Error::Io { .. } => SgsStatus::Io,
            Error::Parse { .. } => SgsStatus::Parse,
            Error::IdMismatch(_) => SgsStatus::IdMismatch,
            Error::InvalidParam(_)
            | Error::DimMismatch(..)
            | Error::EmptyGrid
            | Error::TooFewSamples { .. } => SgsStatus::InvalidArgument,
            _ => SgsStatus::Numerical,
        };
        Fail(status, e.to_string())
    }
}

impl From<pipeline::StageError> for Fail {
    fn from(e: pipeline::StageError) -> Self {
        let msg = e.to_string();
        Fail(Fail::from(e.source).0, msg)
    }
}

fn null(what: &str) -> Fail {
    Fail(SgsStatus::NullPointer, format!("{what} is null"))
}

fn guard(f: impl FnOnce() -> Result<(), Fail>) -> SgsStatus {
    match catch_unwind(AssertUnwindSafe(f)) {
        Ok(Ok(())) => {
            LAST_ERROR.with(|e| *e.borrow_mut() = None);
            SgsStatus::Ok
        }
        Ok(Err(Fail(status, msg))) => {
            set_error(msg);
            status
        }
        Err(_) => {
            set_error("internal panic".into());
            SgsStatus::Panic
        }
    }
}

unsafe fn path_arg<'a>(p: *const c_char, what: &str) -> Result<&'a Path, Fail> {
    if p.is_null() {
        return Err(null(what));
    }
    CStr::from_ptr(p)
        .to_str()
        .map(Path::new)
        .map_err(|_| Fail(SgsStatus::InvalidUtf8, format!("{what} is not valid UTF-8")))
}

unsafe fn handle<'a>(h: *const SgsEmbeddings) -> Result<&'a EmbeddingSet, Fail> {
    h.as_ref()
        .map(|h| &h.set)
        .ok_or_else(|| null("embeddings handle"))
}

unsafe fn slice_arg<'a>(p: *const f64, len: usize, what: &str) -> Result<&'a [f64], Fail> {
    if len == 0 {
        return Ok(&[]);
    }
    if p.is_null() {
        return Err(null(what));
    }
    Ok(std::slice::from_raw_parts(p, len))
}

unsafe fn out_buffer<'a, T>(
    p: *mut T,
    len: usize,
    needed: usize,
    what: &str,
) -> Result<&'a mut [T], Fail> {
    if len < needed {
        return Err(Fail(
            SgsStatus::BufferTooSmall,
            format!("{what} holds {len} values, {needed} needed"),
        ));
    }
    if needed == 0 {
        return Ok(&mut []);
    }
    if p.is_null() {
        return Err(null(what));
    }
    Ok(std::slice::from_raw_parts_mut(p, needed))
}

fn boxed(set: EmbeddingSet) -> *mut SgsEmbeddings {
    Box::into_raw(Box::new(SgsEmbeddings { set }))
}

/// Message for the last failed call on this thread, or NULL. The pointer
/// stays valid until the next call into this library from the same thread.
#[no_mangle]
pub extern "C" fn sgs_last_error_message() -> *const c_char {
    LAST_ERROR.with(|e| e.borrow().as_ref().map_or(ptr::null(), |c| c.as_ptr()))
}

/// Loads an embeddings JSON Lines file.
///
/// # Safety
/// `path` must be a NUL-terminated string and `out` a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn sgs_embeddings_load(
    path: *const c_char,
    out: *mut *mut SgsEmbeddings,
) -> SgsStatus {
    guard(|| {
        let path = path_arg(path, "path")?;
        if out.is_null() {
            return Err(null("out"));
        }
        let set = io::read_embeddings(path)?;
        *out = boxed(set);
        Ok(())
    })
}

/// Builds a set from `n` row-major rows of dimension `d`. Images are named
/// by their row index.
///
/// # Safety
/// `data` must point to `n * d` doubles and `out` must be valid.
#[no_mangle]
pub unsafe extern "C" fn sgs_embeddings_from_rows(
    data: *const f64,
    n: usize,
    d: usize,
    out: *mut *mut SgsEmbeddings,
) -> SgsStatus {
    guard(|| {
        if out.is_null() {
            return Err(null("out"));
        }
        let len = n
            .checked_mul(d)
            .ok_or_else(|| Fail(SgsStatus::InvalidArgument, "n * d overflows".into()))?;
        let values = slice_arg(data, len, "data")?.to_vec();
        let matrix = RowMatrix::new(n, d, values)?;
        let ids = (0..n).map(|i| i.to_string()).collect();
        *out = boxed(EmbeddingSet::new(ids, matrix)?);
        Ok(())
    })
}

/// # Safety
/// `h` must come from this library and not be used afterwards. NULL is a
/// no-op.
#[no_mangle]
pub unsafe extern "C" fn sgs_embeddings_free(h: *mut SgsEmbeddings) {
    if !h.is_null() {
        drop(Box::from_raw(h));
    }
}

/// Number of images, or 0 for NULL.
///
/// # Safety
/// `h` must be NULL or a live handle.
#[no_mangle]
pub unsafe extern "C" fn sgs_embeddings_len(h: *const SgsEmbeddings) -> usize {
    h.as_ref().map_or(0, |h| h.set.len())
}

/// Embedding dimension, or 0 for NULL.
///
/// # Safety
/// `h` must be NULL or a live handle.
#[no_mangle]
pub unsafe extern "C" fn sgs_embeddings_dim(h: *const SgsEmbeddings) -> usize {
    h.as_ref().map_or(0, |h| h.set.dim())
}

/// Copies row `i` into `buf` (`len ≥ dim`).
///
/// # Safety
/// `h` must be a live handle and `buf` must hold `len` doubles.
#[no_mangle]
pub unsafe extern "C" fn sgs_embeddings_row(
    h: *const SgsEmbeddings,
    i: usize,
    buf: *mut f64,
    len: usize,
) -> SgsStatus {
    guard(|| {
        let set = handle(h)?;
        if i >= set.len() {
            return Err(Fail(
                SgsStatus::InvalidArgument,
                format!("row {i} out of range"),
            ));
        }
        out_buffer(buf, len, set.dim(), "buf")?.copy_from_slice(set.embedding(i));
        Ok(())
    })
}

/// New handle with every row scaled to norm √d.
///
/// # Safety
/// `h` must be a live handle and `out` valid.
#[no_mangle]
pub unsafe extern "C" fn sgs_embeddings_normalize(
    h: *const SgsEmbeddings,
    out: *mut *mut SgsEmbeddings,
) -> SgsStatus {
    guard(|| {
        let set = handle(h)?;
        if out.is_null() {
            return Err(null("out"));
        }
        *out = boxed(set.sigreg_normalized()?);
        Ok(())
    })
}

/// Writes the row-major `n × n` similarity matrix of the normalized set.
/// `t_grid` may be NULL to use the default grid; it is ignored for the
/// cosine method.
///
/// # Safety
/// `h` must be live, `t_grid` must hold `t_len` doubles (or be NULL) and
/// `out` must hold `out_len` doubles.
#[no_mangle]
pub unsafe extern "C" fn sgs_similarity(
    h: *const SgsEmbeddings,
    method: SgsMethod,
    t_grid: *const f64,
    t_len: usize,
    out: *mut f64,
    out_len: usize,
) -> SgsStatus {
    guard(|| {
        let set = handle(h)?;
        let method = match method {
            SgsMethod::GaussianCosine => SimilarityMethod::GaussianCosine,
            SgsMethod::CharFn => SimilarityMethod::CharFn {
                t_grid: if t_grid.is_null() {
                    DEFAULT_T_GRID.to_vec()
                } else {
                    slice_arg(t_grid, t_len, "t_grid")?.to_vec()
                },
            },
        };
        let n = set.len();
        let buf = out_buffer(out, out_len, n * n, "out")?;
        let sim = pairwise_similarity(&set.sigreg_normalized()?, &method)?;
        buf.copy_from_slice(sim.entries().as_slice());
        Ok(())
    })
}

/// Runs the clustering pipeline with default settings and the given seed,
/// writing one label per image (`-1` for outliers).
///
/// # Safety
/// `h` must be live and `labels` must hold `len` values.
#[no_mangle]
pub unsafe extern "C" fn sgs_cluster(
    h: *const SgsEmbeddings,
    seed: u64,
    labels: *mut i64,
    len: usize,
) -> SgsStatus {
    guard(|| {
        let set = handle(h)?;
        let buf = out_buffer(labels, len, set.len(), "labels")?;
        let cfg = RunConfig {
            seed,
            ..RunConfig::default()
        };
        let out = pipeline::run(set, &cfg)?;
        buf.copy_from_slice(out.assignment.labels());
        Ok(())
    })
}

/// Eigenvalue-ratio and mean-norm check on `n` row-major rows of
/// dimension `d`.
///
/// # Safety
/// `data` must hold `n * d` doubles and `out` must be valid.
#[no_mangle]
pub unsafe extern "C" fn sgs_validate_cluster(
    data: *const f64,
    n: usize,
    d: usize,
    ratio_max: f64,
    mean_max: f64,
    out: *mut SgsVerdict,
) -> SgsStatus {
    guard(|| {
        if out.is_null() {
            return Err(null("out"));
        }
        let len = n
            .checked_mul(d)
            .ok_or_else(|| Fail(SgsStatus::InvalidArgument, "n * d overflows".into()))?;
        let matrix = RowMatrix::new(n, d, slice_arg(data, len, "data")?.to_vec())?;
        let thresholds = IsotropyThresholds {
            ratio_max,
            mean_max,
            ..IsotropyThresholds::default()
        };
        let v = validate_cluster_gaussian(&matrix, &thresholds)?;
        *out = SgsVerdict {
            eigenvalue_ratio: v.eigenvalue_ratio,
            mean_norm: v.mean_norm,
            is_isotropic: v.is_isotropic,
            mean_near_zero: v.mean_near_zero,
            passes: v.passes,
        };
        Ok(())
    })
}

/// Epps-Pulley normality statistic of a standardized 1-D sample.
///
/// # Safety
/// `sample` must hold `n` doubles and `out` must be valid.
#[no_mangle]
pub unsafe extern "C" fn sgs_epps_pulley(sample: *const f64, n: usize, out: *mut f64) -> SgsStatus {
    guard(|| {
        if out.is_null() {
            return Err(null("out"));
        }
        *out = epps_pulley_1d(slice_arg(sample, n, "sample")?)?;
        Ok(())
    })
}

/// Scores a submission CSV against a ground-truth JSON Lines file with the
/// default 1..10 degree ladder.
///
/// # Safety
/// Both paths must be NUL-terminated strings and `out` must be valid.
#[no_mangle]
pub unsafe extern "C" fn sgs_score_files(
    submission: *const c_char,
    ground_truth: *const c_char,
    out: *mut SgsScore,
) -> SgsStatus {
    guard(|| {
        let sub = path_arg(submission, "submission")?;
        let gt = path_arg(ground_truth, "ground_truth")?;
        if out.is_null() {
            return Err(null("out"));
        }
        let (pred, poses) = io::read_submission(sub)?;
        let gt = io::read_ground_truth(gt)?;
        let r = score_dataset(&pred, &poses, &gt, &DEFAULT_THRESHOLDS_DEG)?;
        *out = SgsScore {
            precision: r.dataset_precision,
            maa: r.dataset_maa,
            score: r.dataset_score,
        };
        Ok(())
    })
}

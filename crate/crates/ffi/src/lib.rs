//! C ABI over genimg-eval.
//!
//! Every function returns a [`GeStatus`]; results come back through out
//! pointers. On failure a message is kept per thread and can be read with
//! [`ge_last_error`]. Objects are opaque handles created by `*_load` /
//! `*_new` / `*_fit` functions and released with the matching `*_free`.
//! Panics never cross the boundary; they are reported as `GE_STATUS_PANIC`.

use std::cell::RefCell;
use std::ffi::{c_char, c_int, CStr, CString};
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::path::Path;

use genimg_eval::embedding::{load_embeddings, EmbeddingMeta, EmbeddingSet};
use genimg_eval::frechet::{fit_gaussian, frechet_distance, relative_fd, GaussianSummary};
use genimg_eval::stats::{
    ks_two_sample, paired_t_test, pearson, two_sample_t_test, Alternative, TTestVariant, TestResult,
};
use genimg_eval::vtt::{analyze_study_with, rates, read_study_file, AnalysisOptions, VttStudy};
use genimg_eval::Error;

/// Result of every call.
#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum GeStatus {
    Ok = 0,
    /// A required pointer was null, a string was not UTF-8 or a code was unknown.
    InvalidArgument = 1,
    /// Input data failed validation (shape, schema, non-finite values).
    Input = 2,
    /// A numerical failure (non-convergent solve, out-of-range result).
    Numerical = 3,
    /// The input is valid but the quantity is undefined (zero baseline distance).
    Degenerate = 4,
    Io = 5,
    Panic = 6,
}

pub const GE_ALTERNATIVE_TWO_SIDED: c_int = 0;
pub const GE_ALTERNATIVE_GREATER: c_int = 1;
pub const GE_ALTERNATIVE_LESS: c_int = 2;

pub const GE_TTEST_POOLED: c_int = 0;
pub const GE_TTEST_WELCH: c_int = 1;

/// Outcome of a hypothesis test. `df` is NaN for tests without degrees of freedom.
#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GeTestResult {
    pub statistic: f64,
    pub p_value: f64,
    pub df: f64,
    pub reject: bool,
    pub degenerate: bool,
}

/// Opaque embedding matrix.
pub struct GeEmbeddingSet(EmbeddingSet);

/// Opaque fitted Gaussian.
pub struct GeGaussian(GaussianSummary);

/// Opaque visual Turing test response table.
pub struct GeVttStudy(VttStudy);

thread_local! {
    static LAST_ERROR: RefCell<Option<CString>> = const { RefCell::new(None) };
}

fn set_last_error(message: String) {
    let c = CString::new(message.replace('\0', " ")).expect("nul bytes removed");
    LAST_ERROR.with(|e| *e.borrow_mut() = Some(c));
}

fn clear_last_error() {
    LAST_ERROR.with(|e| *e.borrow_mut() = None);
}

struct Failure(GeStatus, String);

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        let status = match e {
            Error::Io { .. } => GeStatus::Io,
            Error::Numerical(_) => GeStatus::Numerical,
            Error::Degenerate(_) => GeStatus::Degenerate,
            _ => GeStatus::Input,
        };
        Failure(status, e.to_string())
    }
}

fn invalid(message: impl Into<String>) -> Failure {
    Failure(GeStatus::InvalidArgument, message.into())
}

/// Runs `f`, records any error and converts panics into `GE_STATUS_PANIC`.
fn guard(f: impl FnOnce() -> Result<(), Failure>) -> GeStatus {
    clear_last_error();
    match catch_unwind(AssertUnwindSafe(f)) {
        Ok(Ok(())) => GeStatus::Ok,
        Ok(Err(Failure(status, message))) => {
            set_last_error(message);
            status
        }
        Err(payload) => {
            let message = payload
                .downcast_ref::<&str>()
                .map(|s| s.to_string())
                .or_else(|| payload.downcast_ref::<String>().cloned())
                .unwrap_or_else(|| "unknown panic".into());
            set_last_error(format!("internal panic: {message}"));
            GeStatus::Panic
        }
    }
}

unsafe fn str_arg<'a>(p: *const c_char, name: &str) -> Result<&'a str, Failure> {
    if p.is_null() {
        return Err(invalid(format!("{name} is null")));
    }
    CStr::from_ptr(p)
        .to_str()
        .map_err(|_| invalid(format!("{name} is not valid UTF-8")))
}

unsafe fn ref_arg<'a, T>(p: *const T, name: &str) -> Result<&'a T, Failure> {
    p.as_ref().ok_or_else(|| invalid(format!("{name} is null")))
}

unsafe fn slice_arg<'a>(p: *const f64, len: usize, name: &str) -> Result<&'a [f64], Failure> {
    if len == 0 {
        return Ok(&[]);
    }
    if p.is_null() {
        return Err(invalid(format!("{name} is null")));
    }
    Ok(std::slice::from_raw_parts(p, len))
}

unsafe fn write_out<T>(out: *mut T, value: T, name: &str) -> Result<(), Failure> {
    if out.is_null() {
        return Err(invalid(format!("{name} is null")));
    }
    out.write(value);
    Ok(())
}

fn alternative(code: c_int) -> Result<Alternative, Failure> {
    match code {
        GE_ALTERNATIVE_TWO_SIDED => Ok(Alternative::TwoSided),
        GE_ALTERNATIVE_GREATER => Ok(Alternative::Greater),
        GE_ALTERNATIVE_LESS => Ok(Alternative::Less),
        other => Err(invalid(format!("unknown alternative code {other}"))),
    }
}

fn variant(code: c_int) -> Result<TTestVariant, Failure> {
    match code {
        GE_TTEST_POOLED => Ok(TTestVariant::Pooled),
        GE_TTEST_WELCH => Ok(TTestVariant::Welch),
        other => Err(invalid(format!("unknown t-test variant code {other}"))),
    }
}

fn test_result(r: &TestResult) -> GeTestResult {
    GeTestResult {
        statistic: r.statistic,
        p_value: r.p_value,
        df: r.df.unwrap_or(f64::NAN),
        reject: r.reject,
        degenerate: r.degenerate,
    }
}

/// Message of the last failed call on this thread, or null after a success.
/// The pointer stays valid until the next call on the same thread.
#[no_mangle]
pub extern "C" fn ge_last_error() -> *const c_char {
    LAST_ERROR.with(|e| e.borrow().as_ref().map_or(std::ptr::null(), |c| c.as_ptr()))
}

/// Library version as a static NUL-terminated string.
#[no_mangle]
pub extern "C" fn ge_version() -> *const c_char {
    concat!(env!("CARGO_PKG_VERSION"), "\0").as_ptr().cast()
}

/// Frees a string returned by this library. Null is ignored.
///
/// # Safety
/// `s` must come from this library and not have been freed.
#[no_mangle]
pub unsafe extern "C" fn ge_string_free(s: *mut c_char) {
    if !s.is_null() {
        drop(CString::from_raw(s));
    }
}

/// Loads an NPY or CSV embedding file (and its `.meta.json` sidecar if present).
///
/// # Safety
/// `path` must be a NUL-terminated string; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn ge_embedding_load(
    path: *const c_char,
    out: *mut *mut GeEmbeddingSet,
) -> GeStatus {
    guard(|| {
        let path = str_arg(path, "path")?;
        let set = load_embeddings(Path::new(path), None)?;
        write_out(out, Box::into_raw(Box::new(GeEmbeddingSet(set))), "out")
    })
}

/// Copies an `n x d` row-major matrix into a new embedding set.
///
/// # Safety
/// `data` must point to `n * d` doubles; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn ge_embedding_new(
    data: *const f64,
    n: usize,
    d: usize,
    out: *mut *mut GeEmbeddingSet,
) -> GeStatus {
    guard(|| {
        let len = n
            .checked_mul(d)
            .ok_or_else(|| invalid("n * d overflows"))?;
        let values = slice_arg(data, len, "data")?;
        let rows: Vec<Vec<f64>> = if d == 0 {
            vec![Vec::new(); n]
        } else {
            values.chunks(d).map(<[f64]>::to_vec).collect()
        };
        let set = EmbeddingSet::from_rows(&rows, EmbeddingMeta::default())?;
        write_out(out, Box::into_raw(Box::new(GeEmbeddingSet(set))), "out")
    })
}

/// # Safety
/// `set` must be a live handle; `n` and `d` must be writable.
#[no_mangle]
pub unsafe extern "C" fn ge_embedding_shape(
    set: *const GeEmbeddingSet,
    n: *mut usize,
    d: *mut usize,
) -> GeStatus {
    guard(|| {
        let set = &ref_arg(set, "set")?.0;
        write_out(n, set.n_samples(), "n")?;
        write_out(d, set.dim(), "d")
    })
}

/// # Safety
/// `set` must be null or a handle not yet freed.
#[no_mangle]
pub unsafe extern "C" fn ge_embedding_free(set: *mut GeEmbeddingSet) {
    if !set.is_null() {
        drop(Box::from_raw(set));
    }
}

/// Mean and unbiased covariance of an embedding set.
///
/// # Safety
/// `set` must be a live handle; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn ge_gaussian_fit(
    set: *const GeEmbeddingSet,
    out: *mut *mut GeGaussian,
) -> GeStatus {
    guard(|| {
        let g = fit_gaussian(&ref_arg(set, "set")?.0)?;
        write_out(out, Box::into_raw(Box::new(GeGaussian(g))), "out")
    })
}

/// # Safety
/// `g` must be null or a handle not yet freed.
#[no_mangle]
pub unsafe extern "C" fn ge_gaussian_free(g: *mut GeGaussian) {
    if !g.is_null() {
        drop(Box::from_raw(g));
    }
}

/// Squared Fréchet distance between two fitted Gaussians.
///
/// # Safety
/// `g1`, `g2` must be live handles; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn ge_frechet_distance(
    g1: *const GeGaussian,
    g2: *const GeGaussian,
    out: *mut f64,
) -> GeStatus {
    guard(|| {
        let r = frechet_distance(&ref_arg(g1, "g1")?.0, &ref_arg(g2, "g2")?.0)?;
        write_out(out, r.value, "out")
    })
}

/// Relative Fréchet distance with the real set split by `seed`.
///
/// # Safety
/// `real`, `gen` must be live handles; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn ge_relative_fd(
    real: *const GeEmbeddingSet,
    gen: *const GeEmbeddingSet,
    seed: u64,
    out: *mut f64,
) -> GeStatus {
    guard(|| {
        let r = relative_fd(&ref_arg(real, "real")?.0, &ref_arg(gen, "gen")?.0, seed)?;
        write_out(out, r.value, "out")
    })
}

/// # Safety
/// `x` and `y` must point to `n` doubles each; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn ge_paired_t_test(
    x: *const f64,
    y: *const f64,
    n: usize,
    alternative_code: c_int,
    alpha: f64,
    out: *mut GeTestResult,
) -> GeStatus {
    guard(|| {
        let r = paired_t_test(
            slice_arg(x, n, "x")?,
            slice_arg(y, n, "y")?,
            alternative(alternative_code)?,
            alpha,
        )?;
        write_out(out, test_result(&r), "out")
    })
}

/// # Safety
/// `a` must point to `na` doubles, `b` to `nb`; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn ge_two_sample_t_test(
    a: *const f64,
    na: usize,
    b: *const f64,
    nb: usize,
    alternative_code: c_int,
    variant_code: c_int,
    alpha: f64,
    out: *mut GeTestResult,
) -> GeStatus {
    guard(|| {
        let r = two_sample_t_test(
            slice_arg(a, na, "a")?,
            slice_arg(b, nb, "b")?,
            alternative(alternative_code)?,
            alpha,
            variant(variant_code)?,
        )?;
        write_out(out, test_result(&r), "out")
    })
}

/// Two-sided two-sample Kolmogorov-Smirnov test.
///
/// # Safety
/// `a` must point to `na` doubles, `b` to `nb`; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn ge_ks_two_sample(
    a: *const f64,
    na: usize,
    b: *const f64,
    nb: usize,
    alpha: f64,
    out: *mut GeTestResult,
) -> GeStatus {
    guard(|| {
        let r = ks_two_sample(slice_arg(a, na, "a")?, slice_arg(b, nb, "b")?, alpha)?;
        write_out(out, test_result(&r), "out")
    })
}

/// Pearson correlation and its two-sided p-value.
///
/// # Safety
/// `x` and `y` must point to `n` doubles each; `r` and `p_value` must be writable.
#[no_mangle]
pub unsafe extern "C" fn ge_pearson(
    x: *const f64,
    y: *const f64,
    n: usize,
    r: *mut f64,
    p_value: *mut f64,
) -> GeStatus {
    guard(|| {
        let c = pearson(slice_arg(x, n, "x")?, slice_arg(y, n, "y")?, 0.05)?;
        write_out(r, c.r, "r")?;
        write_out(p_value, c.p_value, "p_value")
    })
}

/// Reads a response CSV. Errors name the offending line.
///
/// # Safety
/// `study_id` and `path` must be NUL-terminated strings; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn ge_vtt_study_load(
    study_id: *const c_char,
    path: *const c_char,
    out: *mut *mut GeVttStudy,
) -> GeStatus {
    guard(|| {
        let study = read_study_file(str_arg(study_id, "study_id")?, Path::new(str_arg(path, "path")?))?;
        write_out(out, Box::into_raw(Box::new(GeVttStudy(study))), "out")
    })
}

/// # Safety
/// `study` must be null or a handle not yet freed.
#[no_mangle]
pub unsafe extern "C" fn ge_vtt_study_free(study: *mut GeVttStudy) {
    if !study.is_null() {
        drop(Box::from_raw(study));
    }
}

/// Study FPR and FNR in percent.
///
/// # Safety
/// `study` must be a live handle; `fpr` and `fnr` must be writable.
#[no_mangle]
pub unsafe extern "C" fn ge_vtt_rates(
    study: *const GeVttStudy,
    fpr: *mut f64,
    fnr: *mut f64,
) -> GeStatus {
    guard(|| {
        let r = rates(&ref_arg(study, "study")?.0)?;
        write_out(fpr, r.fpr, "fpr")?;
        write_out(fnr, r.fnr, "fnr")
    })
}

/// Full study statistics as a JSON document; free it with [`ge_string_free`].
///
/// # Safety
/// `study` must be a live handle; `out_json` must be writable.
#[no_mangle]
pub unsafe extern "C" fn ge_vtt_analyze(
    study: *const GeVttStudy,
    alpha_t: f64,
    alpha_ks: f64,
    variant_code: c_int,
    out_json: *mut *mut c_char,
) -> GeStatus {
    guard(|| {
        let options = AnalysisOptions {
            alpha_t,
            alpha_ks,
            variant: variant(variant_code)?,
        };
        let stats = analyze_study_with(&ref_arg(study, "study")?.0, &options)?;
        let json = serde_json::to_string(&stats).map_err(|e| Failure::from(Error::from(e)))?;
        let c = CString::new(json).map_err(|_| invalid("statistics contain a NUL byte"))?;
        write_out(out_json, c.into_raw(), "out_json")
    })
}

//! C ABI over `gaussrough`.
//!
//! Models and signatures are opaque handles created by `gr_*_new` and
//! released by the matching `gr_*_free`. Every fallible call returns a
//! [`GrStatus`]; on failure [`gr_last_error_message`] describes the error
//! for the calling thread. Strings returned to C are released with
//! [`gr_string_free`].

use std::cell::RefCell;
use std::ffi::{c_char, CStr, CString};
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::ptr;

use gaussrough::covariance::{CovarianceModel, Interval, Rectangle};
use gaussrough::criteria::{classify, ClassifyOptions};
use gaussrough::error::Error;
use gaussrough::gaussian::sample_cholesky;
use gaussrough::harness::config::parse_model_spec;
use gaussrough::roughpath::{levy_area, signature, PlPath, RoughPathRecord};
use gaussrough::variation::{mixed_var, pvar_1d, Dissection, Mode};

/// Status codes returned by every fallible function.
#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum GrStatus {
    Ok = 0,
    NullPointer = 1,
    InvalidArgument = 2,
    OutOfDomain = 3,
    NotPsd = 4,
    Numerical = 5,
    BufferTooSmall = 6,
    Panic = 7,
}

/// Variation modes, mirroring the library's exact / lower / greedy.
#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum GrMode {
    Exact = 0,
    Lower = 1,
    Greedy = 2,
}

/// Opaque covariance model.
pub struct GrModel {
    inner: CovarianceModel,
}

/// Opaque signature record of a piecewise-linear path.
pub struct GrSignature {
    inner: RoughPathRecord,
}

thread_local! {
    static LAST_ERROR: RefCell<Option<CString>> = const { RefCell::new(None) };
}

fn set_error(msg: String) {
    let c = CString::new(msg.replace('\0', " ")).expect("nul bytes removed");
    LAST_ERROR.with(|e| *e.borrow_mut() = Some(c));
}

fn status_of(e: &Error) -> GrStatus {
    match e {
        Error::OutOfDomain { .. } => GrStatus::OutOfDomain,
        Error::NotPsd { .. } => GrStatus::NotPsd,
        Error::BadExponent(_)
        | Error::InvalidParameter(_)
        | Error::Config(_)
        | Error::UnknownKind(_)
        | Error::TooLargeForExact { .. }
        | Error::DimensionMismatch(_)
        | Error::GridMismatch(_) => GrStatus::InvalidArgument,
        _ => GrStatus::Numerical,
    }
}

/// Failure inside a call: a null argument or a library error.
enum Fail {
    Null(&'static str),
    Buffer { have: usize, need: usize },
    Lib(Error),
}

impl From<Error> for Fail {
    fn from(e: Error) -> Self {
        Fail::Lib(e)
    }
}

/// Runs `f`, translating errors and panics into status codes.
fn guard<F: FnOnce() -> Result<(), Fail>>(f: F) -> GrStatus {
    match catch_unwind(AssertUnwindSafe(f)) {
        Ok(Ok(())) => GrStatus::Ok,
        Ok(Err(Fail::Null(what))) => {
            set_error(format!("{what} is null"));
            GrStatus::NullPointer
        }
        Ok(Err(Fail::Buffer { have, need })) => {
            set_error(format!("output buffer holds {have} values, {need} needed"));
            GrStatus::BufferTooSmall
        }
        Ok(Err(Fail::Lib(e))) => {
            set_error(e.to_string());
            status_of(&e)
        }
        Err(_) => {
            set_error("internal panic".into());
            GrStatus::Panic
        }
    }
}

fn null_err(what: &'static str) -> Fail {
    Fail::Null(what)
}

unsafe fn slice<'a>(p: *const f64, n: usize, what: &'static str) -> Result<&'a [f64], Fail> {
    if n == 0 {
        return Ok(&[]);
    }
    if p.is_null() {
        return Err(null_err(what));
    }
    Ok(std::slice::from_raw_parts(p, n))
}

unsafe fn model<'a>(m: *const GrModel) -> Result<&'a CovarianceModel, Fail> {
    m.as_ref().map(|m| &m.inner).ok_or_else(|| null_err("model"))
}

unsafe fn write_out(out: *mut f64, v: f64) -> Result<(), Fail> {
    if out.is_null() {
        return Err(null_err("out"));
    }
    *out = v;
    Ok(())
}

/// Message of the last error on this thread, or NULL. The pointer stays
/// valid until the next failing call on the same thread.
#[no_mangle]
pub extern "C" fn gr_last_error_message() -> *const c_char {
    LAST_ERROR.with(|e| e.borrow().as_ref().map_or(ptr::null(), |c| c.as_ptr()))
}

/// Releases a string returned by this library.
///
/// # Safety
/// `s` must come from this library and not have been freed.
#[no_mangle]
pub unsafe extern "C" fn gr_string_free(s: *mut c_char) {
    if !s.is_null() {
        drop(CString::from_raw(s));
    }
}

/// Builds a model from a spec string such as `fbm:0.3` or `bifbm:0.6,0.7`.
///
/// # Safety
/// `spec` must be a NUL-terminated string; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn gr_model_new(spec: *const c_char, out: *mut *mut GrModel) -> GrStatus {
    guard(|| {
        if spec.is_null() || out.is_null() {
            return Err(null_err("argument"));
        }
        let s = CStr::from_ptr(spec).to_str().map_err(|_| Error::InvalidParameter("spec is not UTF-8".into()))?;
        let m = parse_model_spec(s)?.build(None)?;
        *out = Box::into_raw(Box::new(GrModel { inner: m }));
        Ok(())
    })
}

/// Restricts a model to `[lo, hi]`.
///
/// # Safety
/// `m` must be a live handle.
#[no_mangle]
pub unsafe extern "C" fn gr_model_set_domain(m: *mut GrModel, lo: f64, hi: f64) -> GrStatus {
    guard(|| {
        let h = m.as_mut().ok_or_else(|| null_err("model"))?;
        h.inner = h.inner.clone().with_domain(Interval::new(lo, hi)?)?;
        Ok(())
    })
}

/// # Safety
/// `m` must be NULL or a handle from [`gr_model_new`] not yet freed.
#[no_mangle]
pub unsafe extern "C" fn gr_model_free(m: *mut GrModel) {
    if !m.is_null() {
        drop(Box::from_raw(m));
    }
}

/// Nominal variation exponent of the model.
///
/// # Safety
/// `m` must be a live handle and `out` writable.
#[no_mangle]
pub unsafe extern "C" fn gr_model_rho(m: *const GrModel, out: *mut f64) -> GrStatus {
    guard(|| write_out(out, model(m)?.nominal_rho))
}

/// R(s, t).
///
/// # Safety
/// `m` must be a live handle and `out` writable.
#[no_mangle]
pub unsafe extern "C" fn gr_model_eval(m: *const GrModel, s: f64, t: f64, out: *mut f64) -> GrStatus {
    guard(|| write_out(out, model(m)?.eval(s, t)?))
}

/// Variance of the increment over `[s, t]`.
///
/// # Safety
/// `m` must be a live handle and `out` writable.
#[no_mangle]
pub unsafe extern "C" fn gr_model_sigma2(m: *const GrModel, s: f64, t: f64, out: *mut f64) -> GrStatus {
    guard(|| write_out(out, model(m)?.sigma2(s, t)?))
}

/// Rectangular increment over `[s, t] × [u, v]`.
///
/// # Safety
/// `m` must be a live handle and `out` writable.
#[no_mangle]
pub unsafe extern "C" fn gr_model_rect_increment(
    m: *const GrModel,
    s: f64,
    t: f64,
    u: f64,
    v: f64,
    out: *mut f64,
) -> GrStatus {
    guard(|| {
        let r = Rectangle::new(Interval::new(s, t)?, Interval::new(u, v)?);
        write_out(out, model(m)?.rect_increment(&r)?)
    })
}

/// p-variation of a sampled scalar path.
///
/// # Safety
/// `x` must point to `n` readable values and `out` be writable.
#[no_mangle]
pub unsafe extern "C" fn gr_pvar_1d(x: *const f64, n: usize, p: f64, out: *mut f64) -> GrStatus {
    guard(|| write_out(out, pvar_1d(slice(x, n, "x")?, p)?))
}

/// Mixed (gamma, rho)-variation of the covariance over the square spanned
/// by a grid of `n` increasing points used on both axes.
///
/// # Safety
/// `m` must be a live handle, `grid` must hold `n` values, `out` writable.
#[no_mangle]
pub unsafe extern "C" fn gr_mixed_variation(
    m: *const GrModel,
    grid: *const f64,
    n: usize,
    gamma: f64,
    rho: f64,
    mode: GrMode,
    out: *mut f64,
) -> GrStatus {
    guard(|| {
        let d = Dissection::new(slice(grid, n, "grid")?.to_vec())?;
        let mode = match mode {
            GrMode::Exact => Mode::Exact,
            GrMode::Lower => Mode::Lower,
            GrMode::Greedy => Mode::Greedy,
        };
        let r = Rectangle::square(d.interval());
        let est = mixed_var(model(m)?, &r, &d, &d, gamma, rho, mode)?;
        write_out(out, est.value)
    })
}

/// Exact samples of `paths` independent `d`-dimensional paths on `grid`.
/// `out` receives `paths × d × n` values, path-major then component, and
/// must hold `out_len` of them.
///
/// # Safety
/// `m` live, `grid` holds `n` values, `out` holds `out_len` values.
#[no_mangle]
pub unsafe extern "C" fn gr_sample_cholesky(
    m: *const GrModel,
    grid: *const f64,
    n: usize,
    d: usize,
    paths: usize,
    seed: u64,
    out: *mut f64,
    out_len: usize,
) -> GrStatus {
    guard(|| {
        let need = paths.saturating_mul(d).saturating_mul(n);
        if out_len < need {
            return Err(Fail::Buffer { have: out_len, need });
        }
        let e = sample_cholesky(model(m)?, slice(grid, n, "grid")?, d, paths, seed)?;
        if out.is_null() {
            return Err(null_err("out"));
        }
        let dst = std::slice::from_raw_parts_mut(out, need);
        for p in 0..paths {
            for c in 0..d {
                let at = (p * d + c) * n;
                dst[at..at + n].copy_from_slice(e.path(p, c));
            }
        }
        Ok(())
    })
}

/// Signature up to `depth` of the piecewise-linear path through `n` points
/// `values[i * d + c]` at `times[i]`.
///
/// # Safety
/// `times` holds `n`, `values` holds `n * d` values; `out` writable.
#[no_mangle]
pub unsafe extern "C" fn gr_signature_new(
    times: *const f64,
    values: *const f64,
    n: usize,
    d: usize,
    depth: usize,
    out: *mut *mut GrSignature,
) -> GrStatus {
    guard(|| {
        if out.is_null() {
            return Err(null_err("out"));
        }
        let path = PlPath::new(slice(times, n, "times")?.to_vec(), d, slice(values, n * d, "values")?.to_vec())?;
        let rec = signature(&path, depth)?;
        *out = Box::into_raw(Box::new(GrSignature { inner: rec }));
        Ok(())
    })
}

/// # Safety
/// `s` must be NULL or a handle from [`gr_signature_new`] not yet freed.
#[no_mangle]
pub unsafe extern "C" fn gr_signature_free(s: *mut GrSignature) {
    if !s.is_null() {
        drop(Box::from_raw(s));
    }
}

/// Copies level `level` of the increment between grid indices `s ≤ t`
/// (`d^level` values, row-major words) into `out`.
///
/// # Safety
/// `sig` live; `out` holds `out_len` values.
#[no_mangle]
pub unsafe extern "C" fn gr_signature_level(
    sig: *const GrSignature,
    s: usize,
    t: usize,
    level: usize,
    out: *mut f64,
    out_len: usize,
) -> GrStatus {
    guard(|| {
        let rec = &sig.as_ref().ok_or_else(|| null_err("signature"))?.inner;
        check_indices(rec, s, t)?;
        if level > rec.depth() {
            return Err(Error::InvalidParameter(format!("level {level} above depth {}", rec.depth())).into());
        }
        let g = rec.increment(s, t);
        copy_into(g.level(level), out, out_len)
    })
}

/// Lévy area matrix (`d × d`, row-major) of the increment between grid
/// indices `s ≤ t`.
///
/// # Safety
/// `sig` live; `out` holds `out_len` values.
#[no_mangle]
pub unsafe extern "C" fn gr_levy_area(
    sig: *const GrSignature,
    s: usize,
    t: usize,
    out: *mut f64,
    out_len: usize,
) -> GrStatus {
    guard(|| {
        let rec = &sig.as_ref().ok_or_else(|| null_err("signature"))?.inner;
        check_indices(rec, s, t)?;
        copy_into(&levy_area(rec, s, t), out, out_len)
    })
}

fn check_indices(rec: &RoughPathRecord, s: usize, t: usize) -> Result<(), Fail> {
    if s > t || t >= rec.grid.len() {
        return Err(Error::InvalidParameter(format!("bad index pair ({s}, {t}) for {} points", rec.grid.len())).into());
    }
    Ok(())
}

unsafe fn copy_into(src: &[f64], out: *mut f64, out_len: usize) -> Result<(), Fail> {
    if out.is_null() {
        return Err(null_err("out"));
    }
    if out_len < src.len() {
        return Err(Fail::Buffer { have: out_len, need: src.len() });
    }
    std::slice::from_raw_parts_mut(out, src.len()).copy_from_slice(src);
    Ok(())
}

/// Classification report of the model as a JSON string, released with
/// [`gr_string_free`].
///
/// # Safety
/// `m` live and `out` writable.
#[no_mangle]
pub unsafe extern "C" fn gr_classify(m: *const GrModel, out: *mut *mut c_char) -> GrStatus {
    guard(|| {
        if out.is_null() {
            return Err(null_err("out"));
        }
        let report = classify(model(m)?, &ClassifyOptions::default())?;
        let json = serde_json::to_string(&report).map_err(|e| Error::Io(e.to_string()))?;
        *out = CString::new(json).map_err(|e| Error::Io(e.to_string()))?.into_raw();
        Ok(())
    })
}

//! C ABI over the numeric core of `mcqdebias`.
//!
//! Every function returns an [`McqStatus`]; on failure a message is
//! available from [`mcq_last_error`] on the same thread. Vectors are
//! `double[4]` in presentation-slot order. Handles are opaque and must be
//! released with their `_free` function.

use std::cell::RefCell;
use std::ffi::{c_char, CStr, CString};
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::path::Path;

use mcqdebias::debias::{self, BiasEstimate};
use mcqdebias::simbias::{synth_logits_for, SyntheticModelParams};
use mcqdebias::types::{BiasVector, LogitVector, OptionSlot};
use mcqdebias::{analyzer, Error, IdentifierAlphabet, OrderingScheme};

/// Result code of every call.
#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum McqStatus {
    Ok = 0,
    NullPointer = 1,
    /// Malformed or out-of-range input, including bad JSON.
    InvalidArgument = 2,
    Io = 3,
    Internal = 4,
    Panic = 5,
}

/// Which bias vector of an estimate to read.
#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum McqBiasKind {
    General = 0,
    Contextual = 1,
    Ensemble = 2,
}

#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum McqAlphabet {
    Alphabetic = 0,
    Numeric = 1,
}

/// Calibrated bias vectors for one identifier alphabet.
pub struct McqBiasEstimate(BiasEstimate);

/// Seeded synthetic answering model.
pub struct McqSyntheticModel(SyntheticModelParams);

thread_local! {
    static LAST_ERROR: RefCell<Option<CString>> = const { RefCell::new(None) };
}

fn set_error(msg: impl Into<String>) {
    let msg = msg.into().replace('\0', "?");
    LAST_ERROR.with(|e| *e.borrow_mut() = CString::new(msg).ok());
}

fn status_of(err: &Error) -> McqStatus {
    match err {
        Error::Io { .. } => McqStatus::Io,
        Error::Internal(_) => McqStatus::Internal,
        _ => McqStatus::InvalidArgument,
    }
}

fn fail(status: McqStatus, msg: impl Into<String>) -> McqStatus {
    set_error(msg);
    status
}

/// Runs `f`, translating errors and panics into status codes.
fn guard(f: impl FnOnce() -> Result<(), McqStatus>) -> McqStatus {
    match catch_unwind(AssertUnwindSafe(f)) {
        Ok(Ok(())) => {
            LAST_ERROR.with(|e| *e.borrow_mut() = None);
            McqStatus::Ok
        }
        Ok(Err(status)) => status,
        Err(payload) => {
            let msg = payload
                .downcast_ref::<&str>()
                .map(|s| s.to_string())
                .or_else(|| payload.downcast_ref::<String>().cloned())
                .unwrap_or_else(|| "unknown panic".into());
            fail(McqStatus::Panic, format!("panic: {msg}"))
        }
    }
}

fn lib<T>(r: mcqdebias::Result<T>) -> Result<T, McqStatus> {
    r.map_err(|e| fail(status_of(&e), e.to_string()))
}

fn check_strength(alpha: f64, tau: f64) -> Result<(), McqStatus> {
    if alpha.is_finite() && alpha > 0.0 && tau.is_finite() {
        Ok(())
    } else {
        Err(fail(
            McqStatus::InvalidArgument,
            format!("alpha must be > 0 and tau finite, got alpha {alpha}, tau {tau}"),
        ))
    }
}

unsafe fn read4(ptr: *const f64, name: &str) -> Result<[f64; 4], McqStatus> {
    if ptr.is_null() {
        return Err(fail(McqStatus::NullPointer, format!("{name} is null")));
    }
    Ok(std::ptr::read_unaligned(ptr as *const [f64; 4]))
}

unsafe fn out_ref<'a, T>(ptr: *mut T, name: &str) -> Result<&'a mut T, McqStatus> {
    ptr.as_mut()
        .ok_or_else(|| fail(McqStatus::NullPointer, format!("{name} is null")))
}

unsafe fn write4(ptr: *mut f64, values: &[f64; 4]) -> Result<(), McqStatus> {
    *out_ref(ptr as *mut [f64; 4], "out")? = *values;
    Ok(())
}

unsafe fn read_str<'a>(ptr: *const c_char, name: &str) -> Result<&'a str, McqStatus> {
    if ptr.is_null() {
        return Err(fail(McqStatus::NullPointer, format!("{name} is null")));
    }
    CStr::from_ptr(ptr)
        .to_str()
        .map_err(|_| fail(McqStatus::InvalidArgument, format!("{name} is not UTF-8")))
}

unsafe fn handle<'a, T>(ptr: *const T, name: &str) -> Result<&'a T, McqStatus> {
    ptr.as_ref()
        .ok_or_else(|| fail(McqStatus::NullPointer, format!("{name} is null")))
}

/// Message of the last failed call on this thread, or NULL. Valid until the
/// next call on the same thread.
#[no_mangle]
pub extern "C" fn mcq_last_error() -> *const c_char {
    LAST_ERROR.with(|e| e.borrow().as_ref().map_or(std::ptr::null(), |s| s.as_ptr()))
}

/// Library version as a static NUL-terminated string.
#[no_mangle]
pub extern "C" fn mcq_version() -> *const c_char {
    concat!(env!("CARGO_PKG_VERSION"), "\0").as_ptr() as *const c_char
}

/// # Safety
/// `logits` and `out` must point to 4 doubles.
#[no_mangle]
pub unsafe extern "C" fn mcq_softmax4(logits: *const f64, out: *mut f64) -> McqStatus {
    guard(|| {
        let l = lib(LogitVector::new(read4(logits, "logits")?))?;
        write4(out, mcqdebias::softmax4(&l).values())
    })
}

/// # Safety
/// `values` and `out` must point to 4 doubles.
#[no_mangle]
pub unsafe extern "C" fn mcq_zero_center(values: *const f64, out: *mut f64) -> McqStatus {
    guard(|| {
        let v = lib(BiasVector::raw(read4(values, "values")?))?;
        write4(out, mcqdebias::zero_center(&v).values())
    })
}

/// `max(L) − mean(L)`.
///
/// # Safety
/// `logits` must point to 4 doubles; `out` to one.
#[no_mangle]
pub unsafe extern "C" fn mcq_confidence(logits: *const f64, out: *mut f64) -> McqStatus {
    guard(|| {
        let l = lib(LogitVector::new(read4(logits, "logits")?))?;
        *out_ref(out, "out")? = debias::confidence(&l);
        Ok(())
    })
}

/// # Safety
/// `out` must point to one double.
#[no_mangle]
pub unsafe extern "C" fn mcq_adaptive_alpha(
    conf: f64,
    alpha: f64,
    tau: f64,
    out: *mut f64,
) -> McqStatus {
    guard(|| {
        check_strength(alpha, tau)?;
        if !conf.is_finite() {
            return Err(fail(McqStatus::InvalidArgument, "conf must be finite"));
        }
        *out_ref(out, "out")? = debias::adaptive_alpha(conf, alpha, tau);
        Ok(())
    })
}

/// Corrects `logits` by the zero-centered `bias`.
///
/// # Safety
/// `logits`, `bias` and `out` must point to 4 doubles.
#[no_mangle]
pub unsafe extern "C" fn mcq_correct_logits(
    logits: *const f64,
    bias: *const f64,
    alpha: f64,
    tau: f64,
    out: *mut f64,
) -> McqStatus {
    guard(|| {
        let l = lib(LogitVector::new(read4(logits, "logits")?))?;
        check_strength(alpha, tau)?;
        let b = lib(BiasVector::centered(read4(bias, "bias")?))?;
        let corrected = lib(debias::correct_logits(&l, &b, alpha, tau))?;
        write4(out, corrected.values())
    })
}

/// Total-variation distance between two probability vectors.
///
/// # Safety
/// `pred` and `truth` must point to 4 doubles; `out` to one.
#[no_mangle]
pub unsafe extern "C" fn mcq_bias_score(
    pred: *const f64,
    truth: *const f64,
    out: *mut f64,
) -> McqStatus {
    guard(|| {
        let score = lib(analyzer::bias_score(
            &read4(pred, "pred")?,
            &read4(truth, "truth")?,
        ))?;
        *out_ref(out, "out")? = score;
        Ok(())
    })
}

fn new_estimate(est: BiasEstimate, out: *mut *mut McqBiasEstimate) -> Result<(), McqStatus> {
    lib(est.check_invariants())?;
    let slot = unsafe { out_ref(out, "out")? };
    *slot = Box::into_raw(Box::new(McqBiasEstimate(est)));
    Ok(())
}

/// Loads a bias estimate file written by `mcqdebias calibrate`.
///
/// # Safety
/// `path` must be a NUL-terminated string; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn mcq_bias_estimate_load(
    path: *const c_char,
    out: *mut *mut McqBiasEstimate,
) -> McqStatus {
    guard(|| {
        let path = read_str(path, "path")?;
        let est: BiasEstimate = lib(mcqdebias::jsonl::read_json(Path::new(path)))?;
        new_estimate(est, out)
    })
}

/// # Safety
/// `json` must be a NUL-terminated string; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn mcq_bias_estimate_from_json(
    json: *const c_char,
    out: *mut *mut McqBiasEstimate,
) -> McqStatus {
    guard(|| {
        let text = read_str(json, "json")?;
        let est: BiasEstimate = serde_json::from_str(text)
            .map_err(|e| fail(McqStatus::InvalidArgument, e.to_string()))?;
        new_estimate(est, out)
    })
}

/// # Safety
/// `est` must come from a `mcq_bias_estimate_*` constructor; `out` must
/// point to 4 doubles.
#[no_mangle]
pub unsafe extern "C" fn mcq_bias_estimate_vector(
    est: *const McqBiasEstimate,
    kind: McqBiasKind,
    out: *mut f64,
) -> McqStatus {
    guard(|| {
        let e = &handle(est, "estimate")?.0;
        let v = match kind {
            McqBiasKind::General => e.b_general,
            McqBiasKind::Contextual => e.b_contextual,
            McqBiasKind::Ensemble => e.b_ensemble,
        };
        write4(out, v.values())
    })
}

/// # Safety
/// `est` must be a live handle; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn mcq_bias_estimate_alphabet(
    est: *const McqBiasEstimate,
    out: *mut McqAlphabet,
) -> McqStatus {
    guard(|| {
        let a = match handle(est, "estimate")?.0.alphabet {
            IdentifierAlphabet::Alphabetic => McqAlphabet::Alphabetic,
            IdentifierAlphabet::Numeric => McqAlphabet::Numeric,
        };
        *out_ref(out, "out")? = a;
        Ok(())
    })
}

/// Applies the estimate's ensemble correction with its stored alpha and tau.
///
/// # Safety
/// `est` must be a live handle; `logits` and `out` must point to 4 doubles.
#[no_mangle]
pub unsafe extern "C" fn mcq_bias_estimate_correct(
    est: *const McqBiasEstimate,
    logits: *const f64,
    out: *mut f64,
) -> McqStatus {
    guard(|| {
        let e = &handle(est, "estimate")?.0;
        let l = lib(LogitVector::new(read4(logits, "logits")?))?;
        let corrected = lib(e.correction().apply(&l))?;
        write4(out, corrected.values())
    })
}

/// # Safety
/// `est` must be NULL or a handle not yet freed.
#[no_mangle]
pub unsafe extern "C" fn mcq_bias_estimate_free(est: *mut McqBiasEstimate) {
    if !est.is_null() {
        drop(Box::from_raw(est));
    }
}

/// Creates a model from a JSON parameter object (`competence`, `token_bias`,
/// `position_bias`, `noise_sigma`, `seed`).
///
/// # Safety
/// `json` must be a NUL-terminated string; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn mcq_synthetic_model_from_json(
    json: *const c_char,
    out: *mut *mut McqSyntheticModel,
) -> McqStatus {
    guard(|| {
        let text = read_str(json, "json")?;
        let params: SyntheticModelParams = serde_json::from_str(text)
            .map_err(|e| fail(McqStatus::InvalidArgument, e.to_string()))?;
        lib(params.validate())?;
        let slot = out_ref(out, "out")?;
        *slot = Box::into_raw(Box::new(McqSyntheticModel(params)));
        Ok(())
    })
}

/// Logits for `item_id` shown under `ordering` (e.g. `"DCBA"`), with the
/// correct option in `correct_slot` (0..3, or -1 for content-free prompts).
///
/// # Safety
/// `model` must be a live handle; strings NUL-terminated; `out` must point
/// to 4 doubles.
#[no_mangle]
pub unsafe extern "C" fn mcq_synthetic_model_logits(
    model: *const McqSyntheticModel,
    item_id: *const c_char,
    ordering: *const c_char,
    correct_slot: i32,
    out: *mut f64,
) -> McqStatus {
    guard(|| {
        let params = &handle(model, "model")?.0;
        let item_id = read_str(item_id, "item_id")?;
        let scheme = lib(OrderingScheme::parse(read_str(ordering, "ordering")?))?;
        let slot = match correct_slot {
            -1 => None,
            s => Some(lib(OptionSlot::new(
                usize::try_from(s).unwrap_or(usize::MAX),
            ))?),
        };
        write4(
            out,
            synth_logits_for(params, item_id, &scheme, slot).values(),
        )
    })
}

/// # Safety
/// `model` must be NULL or a handle not yet freed.
#[no_mangle]
pub unsafe extern "C" fn mcq_synthetic_model_free(model: *mut McqSyntheticModel) {
    if !model.is_null() {
        drop(Box::from_raw(model));
    }
}

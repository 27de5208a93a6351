//! C ABI over `xerm-core`.
//!
//! Every fallible function returns an [`XermStatus`]; on failure a message is
//! kept per thread and can be read with [`xerm_last_error`]. Handles are
//! opaque and must be released with their `_free` function. Panics never
//! cross the boundary; they surface as `XERM_STATUS_PANIC`.

use std::cell::RefCell;
use std::ffi::{c_char, CStr};
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::ptr;
use std::slice;

use xerm_core::balanced_adjust::{adjust_logits, ClassPrior};
use xerm_core::datasets::{decay_counts, DecayProfile};
use xerm_core::model::{load_checkpoint, save_checkpoint, softmax, Architecture, ModelError, ModelParams, ModelShape, Precision};
use xerm_core::xerm::{compute_weights, xerm_loss};

#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum XermStatus {
    Ok = 0,
    NullPointer = 1,
    InvalidArgument = 2,
    ShapeMismatch = 3,
    CorruptCheckpoint = 4,
    NonFinite = 5,
    Io = 6,
    BufferTooSmall = 7,
    Panic = 8,
}

#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum XermArch {
    Linear = 0,
    Mlp1 = 1,
}

/// Trained classifier parameters.
pub struct XermModel {
    params: ModelParams,
}

/// Class prior `π` for logit adjustment.
pub struct XermPrior {
    prior: ClassPrior,
}

thread_local! {
    static LAST_ERROR: RefCell<String> = const { RefCell::new(String::new()) };
}

fn set_error(msg: impl Into<String>) {
    LAST_ERROR.with(|e| *e.borrow_mut() = msg.into());
}

struct Failure(XermStatus, String);

impl From<ModelError> for Failure {
    fn from(e: ModelError) -> Self {
        let status = match e {
            ModelError::ShapeMismatch(_) => XermStatus::ShapeMismatch,
            ModelError::CorruptCheckpoint(_) => XermStatus::CorruptCheckpoint,
            ModelError::NonFinite(_) => XermStatus::NonFinite,
        };
        Failure(status, e.to_string())
    }
}

fn invalid(msg: impl Into<String>) -> Failure {
    Failure(XermStatus::InvalidArgument, msg.into())
}

fn guard(body: impl FnOnce() -> Result<(), Failure>) -> XermStatus {
    match catch_unwind(AssertUnwindSafe(body)) {
        Ok(Ok(())) => XermStatus::Ok,
        Ok(Err(Failure(status, msg))) => {
            set_error(msg);
            status
        }
        Err(_) => {
            set_error("internal panic");
            XermStatus::Panic
        }
    }
}

fn non_null<T>(p: *const T, name: &str) -> Result<(), Failure> {
    if p.is_null() {
        Err(Failure(XermStatus::NullPointer, format!("{name} is null")))
    } else {
        Ok(())
    }
}

unsafe fn input<'a>(p: *const f64, len: usize, name: &str) -> Result<&'a [f64], Failure> {
    non_null(p, name)?;
    Ok(slice::from_raw_parts(p, len))
}

unsafe fn output<'a, T>(p: *mut T, len: usize, name: &str) -> Result<&'a mut [T], Failure> {
    non_null(p, name)?;
    Ok(slice::from_raw_parts_mut(p, len))
}

unsafe fn model_ref<'a>(model: *const XermModel) -> Result<&'a XermModel, Failure> {
    non_null(model, "model")?;
    Ok(&*model)
}

fn check_len(actual: usize, expected: usize, name: &str) -> Result<(), Failure> {
    if actual != expected {
        return Err(Failure(
            XermStatus::ShapeMismatch,
            format!("{name} has length {actual}, expected {expected}"),
        ));
    }
    Ok(())
}

fn publish<T>(out: *mut *mut T, value: T) {
    // SAFETY: callers check `out` for null first.
    unsafe { *out = Box::into_raw(Box::new(value)) };
}

/// Copies the calling thread's last error message into `buf` (NUL
/// terminated, truncated to `cap`). Returns the full message length.
///
/// # Safety
/// `buf` must be null or valid for `cap` bytes.
#[no_mangle]
pub unsafe extern "C" fn xerm_last_error(buf: *mut c_char, cap: usize) -> usize {
    LAST_ERROR.with(|e| {
        let msg = e.borrow();
        if !buf.is_null() && cap > 0 {
            let n = msg.len().min(cap - 1);
            ptr::copy_nonoverlapping(msg.as_ptr(), buf as *mut u8, n);
            *buf.add(n) = 0;
        }
        msg.len()
    })
}

/// Static, NUL-terminated name of a status code.
#[no_mangle]
pub extern "C" fn xerm_status_name(status: XermStatus) -> *const c_char {
    let s: &'static CStr = match status {
        XermStatus::Ok => c"ok",
        XermStatus::NullPointer => c"null pointer",
        XermStatus::InvalidArgument => c"invalid argument",
        XermStatus::ShapeMismatch => c"shape mismatch",
        XermStatus::CorruptCheckpoint => c"corrupt checkpoint",
        XermStatus::NonFinite => c"non-finite value",
        XermStatus::Io => c"i/o error",
        XermStatus::BufferTooSmall => c"buffer too small",
        XermStatus::Panic => c"panic",
    };
    s.as_ptr()
}

/// Glorot-initialized model. `hidden` is ignored for `XERM_ARCH_LINEAR`.
/// `f32_storage` rounds parameters to single precision.
///
/// # Safety
/// `out` must be valid for a pointer write.
#[no_mangle]
pub unsafe extern "C" fn xerm_model_init(
    arch: XermArch,
    dims: usize,
    hidden: usize,
    classes: usize,
    f32_storage: bool,
    seed: u64,
    out: *mut *mut XermModel,
) -> XermStatus {
    guard(|| {
        non_null(out, "out")?;
        let arch = match arch {
            XermArch::Linear => Architecture::Linear,
            XermArch::Mlp1 => Architecture::Mlp1,
        };
        let precision = if f32_storage { Precision::F32 } else { Precision::F64 };
        let params = ModelParams::init(ModelShape::new(arch, dims, hidden, classes), precision, seed)?;
        publish(out, XermModel { params });
        Ok(())
    })
}

/// Parses checkpoint bytes.
///
/// # Safety
/// `bytes` must be valid for `len` bytes; `out` for a pointer write.
#[no_mangle]
pub unsafe extern "C" fn xerm_model_load(bytes: *const u8, len: usize, out: *mut *mut XermModel) -> XermStatus {
    guard(|| {
        non_null(bytes, "bytes")?;
        non_null(out, "out")?;
        let params = load_checkpoint(slice::from_raw_parts(bytes, len))?;
        publish(out, XermModel { params });
        Ok(())
    })
}

/// Reads a checkpoint file.
///
/// # Safety
/// `path` must be a NUL-terminated string; `out` valid for a pointer write.
#[no_mangle]
pub unsafe extern "C" fn xerm_model_load_file(path: *const c_char, out: *mut *mut XermModel) -> XermStatus {
    guard(|| {
        non_null(path, "path")?;
        non_null(out, "out")?;
        let path = CStr::from_ptr(path)
            .to_str()
            .map_err(|_| invalid("path is not UTF-8"))?;
        let bytes = std::fs::read(path).map_err(|e| Failure(XermStatus::Io, format!("{path}: {e}")))?;
        let params = load_checkpoint(&bytes)?;
        publish(out, XermModel { params });
        Ok(())
    })
}

/// Serializes the model. With `buf` null or `cap` too small, only writes the
/// required size to `written` and returns `XERM_STATUS_BUFFER_TOO_SMALL`
/// (`XERM_STATUS_OK` if `buf` is null).
///
/// # Safety
/// `model` must come from this library; `buf` null or valid for `cap`
/// bytes; `written` valid for a write.
#[no_mangle]
pub unsafe extern "C" fn xerm_model_save(
    model: *const XermModel,
    buf: *mut u8,
    cap: usize,
    written: *mut usize,
) -> XermStatus {
    guard(|| {
        let model = model_ref(model)?;
        non_null(written, "written")?;
        let bytes = save_checkpoint(&model.params);
        *written = bytes.len();
        if buf.is_null() {
            return Ok(());
        }
        if cap < bytes.len() {
            return Err(Failure(
                XermStatus::BufferTooSmall,
                format!("need {} bytes, have {cap}", bytes.len()),
            ));
        }
        ptr::copy_nonoverlapping(bytes.as_ptr(), buf, bytes.len());
        Ok(())
    })
}

/// # Safety
/// `model` must be null or come from this library and not be used again.
#[no_mangle]
pub unsafe extern "C" fn xerm_model_free(model: *mut XermModel) {
    if !model.is_null() {
        drop(Box::from_raw(model));
    }
}

/// Input dimension, hidden width (0 for linear) and class count.
///
/// # Safety
/// All pointers must be valid.
#[no_mangle]
pub unsafe extern "C" fn xerm_model_shape(
    model: *const XermModel,
    dims: *mut usize,
    hidden: *mut usize,
    classes: *mut usize,
) -> XermStatus {
    guard(|| {
        let model = model_ref(model)?;
        non_null(dims, "dims")?;
        non_null(hidden, "hidden")?;
        non_null(classes, "classes")?;
        let s = model.params.shape;
        *dims = s.dims;
        *hidden = s.hidden;
        *classes = s.classes;
        Ok(())
    })
}

/// Writes the `classes` logits of one sample.
///
/// # Safety
/// `x` valid for `dims` doubles, `logits` for `classes` doubles.
#[no_mangle]
pub unsafe extern "C" fn xerm_model_logits(
    model: *const XermModel,
    x: *const f64,
    dims: usize,
    logits: *mut f64,
    classes: usize,
) -> XermStatus {
    guard(|| {
        let model = model_ref(model)?;
        let x = input(x, dims, "x")?;
        let out = output(logits, classes, "logits")?;
        check_len(classes, model.params.shape.classes, "logits")?;
        out.copy_from_slice(&model.params.forward_logits(x)?);
        Ok(())
    })
}

/// Argmax class of `n` row-major samples.
///
/// # Safety
/// `x` valid for `n * dims` doubles, `predictions` for `n` entries.
#[no_mangle]
pub unsafe extern "C" fn xerm_model_predict(
    model: *const XermModel,
    x: *const f64,
    n: usize,
    dims: usize,
    predictions: *mut u32,
) -> XermStatus {
    guard(|| {
        let model = model_ref(model)?;
        check_len(dims, model.params.shape.dims, "x row")?;
        let x = input(x, n * dims, "x")?;
        let out = output(predictions, n, "predictions")?;
        for (row, p) in x.chunks(dims.max(1)).zip(out.iter_mut()) {
            *p = xerm_core::argmax(&model.params.forward_logits(row)?) as u32;
        }
        Ok(())
    })
}

/// Class probabilities after logit adjustment `z − τ·ln π`.
///
/// # Safety
/// `x` valid for `dims` doubles, `probs` for `classes` doubles.
#[no_mangle]
pub unsafe extern "C" fn xerm_model_balanced_proba(
    model: *const XermModel,
    prior: *const XermPrior,
    tau: f64,
    x: *const f64,
    dims: usize,
    probs: *mut f64,
    classes: usize,
) -> XermStatus {
    guard(|| {
        let model = model_ref(model)?;
        non_null(prior, "prior")?;
        let prior = &(*prior).prior;
        let x = input(x, dims, "x")?;
        let out = output(probs, classes, "probs")?;
        check_len(classes, model.params.shape.classes, "probs")?;
        check_len(prior.num_classes(), classes, "prior")?;
        if !(tau >= 0.0 && tau.is_finite()) {
            return Err(invalid(format!("tau = {tau}")));
        }
        let logits = model.params.forward_logits(x)?;
        out.copy_from_slice(&softmax(&adjust_logits(&logits, prior, tau)));
        Ok(())
    })
}

/// Normalized class prior from per-class training counts (all positive).
///
/// # Safety
/// `counts` valid for `classes` entries; `out` for a pointer write.
#[no_mangle]
pub unsafe extern "C" fn xerm_prior_from_counts(
    counts: *const u64,
    classes: usize,
    out: *mut *mut XermPrior,
) -> XermStatus {
    guard(|| {
        non_null(counts, "counts")?;
        non_null(out, "out")?;
        let counts: Vec<usize> = slice::from_raw_parts(counts, classes)
            .iter()
            .map(|&c| c as usize)
            .collect();
        let prior = ClassPrior::from_counts(&counts).map_err(|e| invalid(e.to_string()))?;
        publish(out, XermPrior { prior });
        Ok(())
    })
}

/// # Safety
/// `prior` must be null or come from this library and not be used again.
#[no_mangle]
pub unsafe extern "C" fn xerm_prior_free(prior: *mut XermPrior) {
    if !prior.is_null() {
        drop(Box::from_raw(prior));
    }
}

/// Per-sample weights `w_f = ce_f^γ / (ce_f^γ + ce_cf^γ)` and `w_cf = 1 − w_f`.
///
/// # Safety
/// `w_f` and `w_cf` must be valid for writes.
#[no_mangle]
pub unsafe extern "C" fn xerm_compute_weights(
    ce_f: f64,
    ce_cf: f64,
    gamma: f64,
    w_f: *mut f64,
    w_cf: *mut f64,
) -> XermStatus {
    guard(|| {
        non_null(w_f, "w_f")?;
        non_null(w_cf, "w_cf")?;
        if !(ce_f >= 0.0 && ce_cf >= 0.0 && gamma.is_finite()) {
            return Err(invalid(format!("ce_f={ce_f}, ce_cf={ce_cf}, gamma={gamma}")));
        }
        let (a, b) = compute_weights(ce_f, ce_cf, gamma);
        *w_f = a;
        *w_cf = b;
        Ok(())
    })
}

/// Composite loss of prediction `f` against label `y` and soft target
/// `y_hat`; writes the loss and its gradient with respect to the logits.
///
/// # Safety
/// `f`, `y_hat` and `grad` valid for `classes` doubles; `loss` for a write.
#[no_mangle]
pub unsafe extern "C" fn xerm_loss_eval(
    f: *const f64,
    y_hat: *const f64,
    classes: usize,
    y: usize,
    w_f: f64,
    w_cf: f64,
    loss: *mut f64,
    grad: *mut f64,
) -> XermStatus {
    guard(|| {
        let f = input(f, classes, "f")?;
        let y_hat = input(y_hat, classes, "y_hat")?;
        non_null(loss, "loss")?;
        let grad = output(grad, classes, "grad")?;
        let (l, g) = xerm_loss(f, y, y_hat, w_f, w_cf).map_err(|e| invalid(e.to_string()))?;
        *loss = l;
        grad.copy_from_slice(&g);
        Ok(())
    })
}

/// Long-tailed class sizes `floor(n_head · μ^((i−1)/(C−1)))`, clamped to 1.
///
/// # Safety
/// `counts` valid for `classes` entries.
#[no_mangle]
pub unsafe extern "C" fn xerm_decay_counts(n_head: u64, classes: usize, mu: f64, counts: *mut u64) -> XermStatus {
    guard(|| {
        let out = output(counts, classes, "counts")?;
        let profile = DecayProfile::new(n_head as usize, classes, mu).map_err(|e| invalid(e.to_string()))?;
        let sizes = decay_counts(&profile).map_err(|e| invalid(e.to_string()))?;
        for (o, s) in out.iter_mut().zip(sizes) {
            *o = s as u64;
        }
        Ok(())
    })
}

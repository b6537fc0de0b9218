//! C ABI for the metrology toolkit. All entry points return a status code;
//! results travel through out-pointers and the model travels as an opaque
//! handle. The last failure message is kept per thread and can be copied out
//! with [`qml_last_error_message`].

use std::cell::RefCell;
use std::ffi::c_char;
use std::panic::{catch_unwind, AssertUnwindSafe};

use qmetrolab::error::Error;
use qmetrolab::liouville::{spectrum, steady_report};
use qmetrolab::models::SpinModel;
use qmetrolab::qfi::{qfi_dephasing_analytic, ParamTag, QfiMethod};
use qmetrolab::runner::{qfi_point, InitialKind};

/// Status codes returned by every fallible entry point.
#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum QmlStatus {
    /// Success.
    Ok = 0,
    /// A pointer argument was null.
    NullPointer = 1,
    /// Parameters were rejected before any computation started.
    InvalidArgument = 2,
    /// The computation itself failed.
    NumericalFailure = 3,
    /// A panic was caught at the boundary; state may be stale.
    Panic = 4,
}

/// Opaque model handle.
pub struct QmlModel {
    inner: SpinModel,
}

thread_local! {
    static LAST_ERROR: RefCell<String> = const { RefCell::new(String::new()) };
}

fn set_error(msg: impl Into<String>) {
    LAST_ERROR.with(|e| *e.borrow_mut() = msg.into());
}

fn status_of(err: &Error) -> QmlStatus {
    match err {
        Error::InvalidParameter(_) | Error::NegativeRate(_) | Error::Config(_) => {
            QmlStatus::InvalidArgument
        }
        _ => QmlStatus::NumericalFailure,
    }
}

fn guard<F: FnOnce() -> QmlStatus>(f: F) -> QmlStatus {
    match catch_unwind(AssertUnwindSafe(f)) {
        Ok(s) => s,
        Err(_) => {
            set_error("panic crossed the FFI boundary");
            QmlStatus::Panic
        }
    }
}

/// ABI revision; bump on any breaking layout or semantics change.
#[no_mangle]
pub extern "C" fn qml_abi_version() -> u32 {
    1
}

/// Copy the last error message for the calling thread into `buf`
/// (NUL-terminated, truncated to `len`). Returns the full message length.
#[no_mangle]
pub extern "C" fn qml_last_error_message(buf: *mut c_char, len: usize) -> usize {
    LAST_ERROR.with(|e| {
        let msg = e.borrow();
        let bytes = msg.as_bytes();
        if !buf.is_null() && len > 0 {
            let n = bytes.len().min(len - 1);
            unsafe {
                std::ptr::copy_nonoverlapping(bytes.as_ptr(), buf as *mut u8, n);
                *buf.add(n) = 0;
            }
        }
        bytes.len()
    })
}

/// Create a spin model; `out` receives an owned handle on success.
///
/// # Safety
/// `out` must be a valid writable pointer.
#[no_mangle]
pub unsafe extern "C" fn qml_model_new(
    n: usize,
    b: f64,
    vartheta: f64,
    alpha: f64,
    gamma: f64,
    out: *mut *mut QmlModel,
) -> QmlStatus {
    guard(|| {
        if out.is_null() {
            set_error("out pointer is null");
            return QmlStatus::NullPointer;
        }
        match SpinModel::new(n, b, vartheta, alpha, gamma) {
            Ok(inner) => {
                unsafe { *out = Box::into_raw(Box::new(QmlModel { inner })) };
                QmlStatus::Ok
            }
            Err(e) => {
                set_error(e.to_string());
                status_of(&e)
            }
        }
    })
}

/// Release a model handle. A null handle is a no-op.
///
/// # Safety
/// `model` must have come from [`qml_model_new`] and not be freed twice.
#[no_mangle]
pub unsafe extern "C" fn qml_model_free(model: *mut QmlModel) {
    if !model.is_null() {
        drop(unsafe { Box::from_raw(model) });
    }
}

fn param_from(tag: u32) -> Option<ParamTag> {
    match tag {
        0 => Some(ParamTag::B),
        1 => Some(ParamTag::Beta),
        2 => Some(ParamTag::Vartheta),
        _ => None,
    }
}

fn method_from(tag: u32) -> Option<QfiMethod> {
    match tag {
        0 => Some(QfiMethod::Sld),
        1 => Some(QfiMethod::QubitClosed),
        2 => Some(QfiMethod::Bloch),
        _ => None,
    }
}

/// Quantum Fisher information of the evolved state.
///
/// `initial`: 0 = product state at angle `beta`, 1 = GHZ.
/// `param`: 0 = B, 1 = beta, 2 = vartheta. `method`: 0 = sld,
/// 1 = qubit closed form, 2 = Bloch.
///
/// # Safety
/// `model` and `out` must be valid pointers.
#[no_mangle]
pub unsafe extern "C" fn qml_qfi(
    model: *const QmlModel,
    initial: u32,
    beta: f64,
    param: u32,
    t: f64,
    method: u32,
    out: *mut f64,
) -> QmlStatus {
    guard(|| {
        if model.is_null() || out.is_null() {
            set_error("null model or out pointer");
            return QmlStatus::NullPointer;
        }
        let kind = match initial {
            0 => InitialKind::Product,
            1 => InitialKind::Ghz,
            _ => {
                set_error(format!("unknown initial-state tag {initial}"));
                return QmlStatus::InvalidArgument;
            }
        };
        let (Some(p), Some(m)) = (param_from(param), method_from(method)) else {
            set_error(format!("unknown parameter tag {param} or method tag {method}"));
            return QmlStatus::InvalidArgument;
        };
        let inner = unsafe { &(*model).inner };
        match qfi_point(inner, kind, beta, p, t, m) {
            Ok(f) => {
                unsafe { *out = f };
                QmlStatus::Ok
            }
            Err(e) => {
                set_error(e.to_string());
                status_of(&e)
            }
        }
    })
}

/// Closed-form dephasing QFI pair (F_beta, F_B).
///
/// # Safety
/// `out_f_beta` and `out_f_b` must be valid writable pointers.
#[no_mangle]
pub unsafe extern "C" fn qml_dephasing_qfi(
    beta: f64,
    gamma: f64,
    t: f64,
    out_f_beta: *mut f64,
    out_f_b: *mut f64,
) -> QmlStatus {
    guard(|| {
        if out_f_beta.is_null() || out_f_b.is_null() {
            set_error("null out pointer");
            return QmlStatus::NullPointer;
        }
        let (fb, fbb) = qfi_dephasing_analytic(beta, gamma, t);
        unsafe {
            *out_f_beta = fb;
            *out_f_b = fbb;
        }
        QmlStatus::Ok
    })
}

/// Number of Liouvillian eigenvalues (the squared Hilbert dimension).
///
/// # Safety
/// `model` must be a valid handle.
#[no_mangle]
pub unsafe extern "C" fn qml_spectrum_len(model: *const QmlModel) -> usize {
    if model.is_null() {
        return 0;
    }
    let d = unsafe { (*model).inner.dim() };
    d * d
}

/// Liouvillian eigenvalues sorted by descending real part, written into
/// `out_re`/`out_im` (each of capacity `len`).
///
/// # Safety
/// `out_re` and `out_im` must each point to at least `len` writable doubles.
#[no_mangle]
pub unsafe extern "C" fn qml_spectrum(
    model: *const QmlModel,
    out_re: *mut f64,
    out_im: *mut f64,
    len: usize,
) -> QmlStatus {
    guard(|| {
        if model.is_null() || out_re.is_null() || out_im.is_null() {
            set_error("null pointer argument");
            return QmlStatus::NullPointer;
        }
        let inner = unsafe { &(*model).inner };
        let needed = inner.dim() * inner.dim();
        if len < needed {
            set_error(format!("buffer holds {len}, spectrum needs {needed}"));
            return QmlStatus::InvalidArgument;
        }
        let result = inner.liouvillian().and_then(|l| spectrum(&l));
        match result {
            Ok(es) => {
                for (k, z) in es.values.iter().enumerate() {
                    unsafe {
                        *out_re.add(k) = z.re;
                        *out_im.add(k) = z.im;
                    }
                }
                QmlStatus::Ok
            }
            Err(e) => {
                set_error(e.to_string());
                status_of(&e)
            }
        }
    })
}

/// Steady-state timescale 1/|Re lambda_slow| and the kernel dimension.
///
/// # Safety
/// All out-pointers must be valid.
#[no_mangle]
pub unsafe extern "C" fn qml_steady_state_time(
    model: *const QmlModel,
    out_t_sts: *mut f64,
    out_kernel_dim: *mut usize,
) -> QmlStatus {
    guard(|| {
        if model.is_null() || out_t_sts.is_null() || out_kernel_dim.is_null() {
            set_error("null pointer argument");
            return QmlStatus::NullPointer;
        }
        let inner = unsafe { &(*model).inner };
        let result = inner.liouvillian().and_then(|l| steady_report(&l));
        match result {
            Ok(rep) => {
                unsafe {
                    *out_t_sts = rep.t_sts;
                    *out_kernel_dim = rep.zero_eigenvalue_count;
                }
                QmlStatus::Ok
            }
            Err(e) => {
                set_error(e.to_string());
                status_of(&e)
            }
        }
    })
}

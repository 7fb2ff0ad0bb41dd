//! C ABI over the pidmd library.
//!
//! Matrices and models cross the boundary as opaque handles. Every function
//! returns a [`PidmdStatus`]; on failure, [`pidmd_last_error`] describes the
//! problem for the calling thread. Dense data is exchanged row-major as separate
//! real and imaginary `double` arrays.

use std::cell::RefCell;
use std::ffi::{c_char, CStr, CString};
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::ptr;

use num_complex::Complex64;
use pidmd::diagnostics::{predict, residual, resolvent_modes, spectrum};
use pidmd::snapshot::load_matrix;
use pidmd::{fit, ManifoldSpec, Matrix, PiDmdModel, PidmdError, SnapshotPair, TimeKind};

#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum PidmdStatus {
    Ok = 0,
    NullPointer = 1,
    InvalidArgument = 2,
    DimensionMismatch = 3,
    Parse = 4,
    Io = 5,
    Numerical = 6,
    Degenerate = 7,
    SizeLimit = 8,
    NearSingular = 9,
    Panic = 10,
}

#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum PidmdTimeKind {
    Discrete = 0,
    Continuous = 1,
}

impl From<PidmdTimeKind> for TimeKind {
    fn from(t: PidmdTimeKind) -> TimeKind {
        match t {
            PidmdTimeKind::Discrete => TimeKind::Discrete,
            PidmdTimeKind::Continuous => TimeKind::Continuous,
        }
    }
}

/// Dense complex matrix.
pub struct PidmdMatrix {
    inner: Matrix,
}

/// Fitted model together with the time semantics of its data.
pub struct PidmdModel {
    model: PiDmdModel,
    time_kind: TimeKind,
    dt: f64,
}

thread_local! {
    static LAST_ERROR: RefCell<Option<CString>> = const { RefCell::new(None) };
}

fn set_error(msg: String) {
    let c = CString::new(msg.replace('\0', " ")).unwrap_or_default();
    LAST_ERROR.with(|e| *e.borrow_mut() = Some(c));
}

fn status_of(err: &PidmdError) -> PidmdStatus {
    match err {
        PidmdError::Parse { .. } | PidmdError::EmptyInput | PidmdError::Serialization(_) => PidmdStatus::Parse,
        PidmdError::Io(_) => PidmdStatus::Io,
        PidmdError::InsufficientSnapshots { .. } | PidmdError::InvalidArgument(_) => PidmdStatus::InvalidArgument,
        PidmdError::DimensionMismatch(_) => PidmdStatus::DimensionMismatch,
        PidmdError::DegenerateInput(_) => PidmdStatus::Degenerate,
        PidmdError::SizeLimitExceeded { .. } => PidmdStatus::SizeLimit,
        PidmdError::NearSingularResolvent { .. } => PidmdStatus::NearSingular,
        PidmdError::Numerical(_) => PidmdStatus::Numerical,
    }
}

enum Failure {
    Null(&'static str),
    Invalid(String),
    Lib(PidmdError),
}

impl From<PidmdError> for Failure {
    fn from(e: PidmdError) -> Failure {
        Failure::Lib(e)
    }
}

/// Runs `f`, converting errors and panics into a status and a thread-local message.
fn guard(f: impl FnOnce() -> Result<(), Failure>) -> PidmdStatus {
    match catch_unwind(AssertUnwindSafe(f)) {
        Ok(Ok(())) => {
            LAST_ERROR.with(|e| *e.borrow_mut() = None);
            PidmdStatus::Ok
        }
        Ok(Err(Failure::Null(what))) => {
            set_error(format!("null pointer: {what}"));
            PidmdStatus::NullPointer
        }
        Ok(Err(Failure::Invalid(msg))) => {
            set_error(msg);
            PidmdStatus::InvalidArgument
        }
        Ok(Err(Failure::Lib(e))) => {
            set_error(e.to_string());
            status_of(&e)
        }
        Err(_) => {
            set_error("internal panic".into());
            PidmdStatus::Panic
        }
    }
}

unsafe fn deref<'a, T>(p: *const T, what: &'static str) -> Result<&'a T, Failure> {
    p.as_ref().ok_or(Failure::Null(what))
}

unsafe fn out_ptr<'a, T>(p: *mut T, what: &'static str) -> Result<&'a mut T, Failure> {
    p.as_mut().ok_or(Failure::Null(what))
}

unsafe fn c_str<'a>(p: *const c_char, what: &'static str) -> Result<&'a str, Failure> {
    if p.is_null() {
        return Err(Failure::Null(what));
    }
    CStr::from_ptr(p)
        .to_str()
        .map_err(|_| Failure::Invalid(format!("{what} is not valid UTF-8")))
}

fn boxed_matrix(m: Matrix) -> *mut PidmdMatrix {
    Box::into_raw(Box::new(PidmdMatrix { inner: m }))
}

/// Message for the last failed call on this thread, or null. Valid until the next call.
#[no_mangle]
pub extern "C" fn pidmd_last_error() -> *const c_char {
    LAST_ERROR.with(|e| e.borrow().as_ref().map_or(ptr::null(), |c| c.as_ptr()))
}

/// Builds a `rows x cols` matrix from row-major parts; `im` may be null for real data.
///
/// # Safety
/// `re` (and `im` when non-null) must point to `rows * cols` doubles.
#[no_mangle]
pub unsafe extern "C" fn pidmd_matrix_new(
    rows: usize,
    cols: usize,
    re: *const f64,
    im: *const f64,
    out: *mut *mut PidmdMatrix,
) -> PidmdStatus {
    guard(|| {
        let out = out_ptr(out, "out")?;
        if re.is_null() {
            return Err(Failure::Null("re"));
        }
        if rows == 0 || cols == 0 {
            return Err(Failure::Invalid("matrix dimensions must be positive".into()));
        }
        let len = rows.checked_mul(cols).ok_or_else(|| Failure::Invalid("matrix too large".into()))?;
        let re = std::slice::from_raw_parts(re, len);
        let im = if im.is_null() { None } else { Some(std::slice::from_raw_parts(im, len)) };
        let m = Matrix::from_fn(rows, cols, |i, j| {
            let k = i * cols + j;
            Complex64::new(re[k], im.map_or(0.0, |v| v[k]))
        });
        if m.iter().any(|z| !z.re.is_finite() || !z.im.is_finite()) {
            return Err(Failure::Invalid("matrix entries must be finite".into()));
        }
        *out = boxed_matrix(m);
        Ok(())
    })
}

/// Reads a matrix from a CSV file.
///
/// # Safety
/// `path` must be a NUL-terminated string and `out` a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn pidmd_matrix_load_csv(path: *const c_char, out: *mut *mut PidmdMatrix) -> PidmdStatus {
    guard(|| {
        let out = out_ptr(out, "out")?;
        let path = c_str(path, "path")?;
        *out = boxed_matrix(load_matrix(path)?);
        Ok(())
    })
}

/// # Safety
/// `m` must be a live handle; `rows` and `cols` valid pointers.
#[no_mangle]
pub unsafe extern "C" fn pidmd_matrix_shape(m: *const PidmdMatrix, rows: *mut usize, cols: *mut usize) -> PidmdStatus {
    guard(|| {
        let m = deref(m, "matrix")?;
        *out_ptr(rows, "rows")? = m.inner.nrows();
        *out_ptr(cols, "cols")? = m.inner.ncols();
        Ok(())
    })
}

/// Copies entries out row-major; `im` may be null to skip imaginary parts.
///
/// # Safety
/// `re` (and `im` when non-null) must have room for `rows * cols` doubles.
#[no_mangle]
pub unsafe extern "C" fn pidmd_matrix_read(m: *const PidmdMatrix, re: *mut f64, im: *mut f64) -> PidmdStatus {
    guard(|| {
        let m = &deref(m, "matrix")?.inner;
        if re.is_null() {
            return Err(Failure::Null("re"));
        }
        let (rows, cols) = m.shape();
        for i in 0..rows {
            for j in 0..cols {
                let z = m[(i, j)];
                *re.add(i * cols + j) = z.re;
                if !im.is_null() {
                    *im.add(i * cols + j) = z.im;
                }
            }
        }
        Ok(())
    })
}

/// # Safety
/// `m` must be null or a handle from this library, not freed before.
#[no_mangle]
pub unsafe extern "C" fn pidmd_matrix_free(m: *mut PidmdMatrix) {
    if !m.is_null() {
        drop(Box::from_raw(m));
    }
}

/// Fits a model. `spec_json` selects the solver, e.g.
/// `{"manifold":"circulant","variant":{"kind":"plain"}}` or
/// `{"manifold":"triangular","method":"rq_stable","orientation":"upper"}`.
///
/// # Safety
/// `x`, `y` must be live handles, `spec_json` a NUL-terminated string, `out` valid.
#[no_mangle]
pub unsafe extern "C" fn pidmd_fit(
    x: *const PidmdMatrix,
    y: *const PidmdMatrix,
    spec_json: *const c_char,
    time_kind: PidmdTimeKind,
    dt: f64,
    out: *mut *mut PidmdModel,
) -> PidmdStatus {
    guard(|| {
        let out = out_ptr(out, "out")?;
        let x = &deref(x, "x")?.inner;
        let y = &deref(y, "y")?.inner;
        let spec: ManifoldSpec = serde_json::from_str(c_str(spec_json, "spec_json")?)
            .map_err(|e| PidmdError::Serialization(e.to_string()))?;
        spec.validate()?;
        let pair = SnapshotPair::new(x.clone(), y.clone())?;
        let model = fit(&pair, &spec)?;
        *out = Box::into_raw(Box::new(PidmdModel {
            model,
            time_kind: time_kind.into(),
            dt,
        }));
        Ok(())
    })
}

/// # Safety
/// `model` must be a live handle and `n` a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn pidmd_model_n(model: *const PidmdModel, n: *mut usize) -> PidmdStatus {
    guard(|| {
        *out_ptr(n, "n")? = deref(model, "model")?.model.n();
        Ok(())
    })
}

/// Dense `n x n` operator of the model.
///
/// # Safety
/// `model` must be a live handle and `out` a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn pidmd_model_operator(model: *const PidmdModel, out: *mut *mut PidmdMatrix) -> PidmdStatus {
    guard(|| {
        let out = out_ptr(out, "out")?;
        *out = boxed_matrix(deref(model, "model")?.model.materialize());
        Ok(())
    })
}

/// Eigenvalues in canonical order, as a `k x 1` matrix.
///
/// # Safety
/// `model` must be a live handle and `out` a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn pidmd_model_eigenvalues(model: *const PidmdModel, out: *mut *mut PidmdMatrix) -> PidmdStatus {
    guard(|| {
        let out = out_ptr(out, "out")?;
        let m = deref(model, "model")?;
        let spec = spectrum(&m.model, m.time_kind)?;
        let k = spec.eigenvalues.len();
        *out = boxed_matrix(Matrix::from_column_slice(k, 1, &spec.eigenvalues));
        Ok(())
    })
}

/// `||Y - A X||_F` for the fitted operator.
///
/// # Safety
/// Handles must be live and `value` a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn pidmd_model_residual(
    model: *const PidmdModel,
    x: *const PidmdMatrix,
    y: *const PidmdMatrix,
    value: *mut f64,
) -> PidmdStatus {
    guard(|| {
        let value = out_ptr(value, "value")?;
        let m = deref(model, "model")?;
        let pair = SnapshotPair::new(deref(x, "x")?.inner.clone(), deref(y, "y")?.inner.clone())?;
        *value = residual(&m.model, &pair)?;
        Ok(())
    })
}

/// Trajectory with `steps + 1` columns from the `n x 1` state `x0`, using the
/// model's time kind and step.
///
/// # Safety
/// Handles must be live and `out` a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn pidmd_model_predict(
    model: *const PidmdModel,
    x0: *const PidmdMatrix,
    steps: usize,
    out: *mut *mut PidmdMatrix,
) -> PidmdStatus {
    guard(|| {
        let out = out_ptr(out, "out")?;
        let m = deref(model, "model")?;
        let x0 = &deref(x0, "x0")?.inner;
        if x0.ncols() != 1 {
            return Err(PidmdError::DimensionMismatch(format!("x0 must be a column, got {}x{}", x0.nrows(), x0.ncols())).into());
        }
        let traj = predict(&m.model, &x0.column(0).into_owned(), steps, m.time_kind, m.dt)?;
        *out = boxed_matrix(traj);
        Ok(())
    })
}

/// Leading `k` resolvent gains at `omega`, written to `gains`; `count` receives
/// how many were written (at most `k`).
///
/// # Safety
/// `gains` must have room for `k` doubles; other pointers valid.
#[no_mangle]
pub unsafe extern "C" fn pidmd_model_resolvent_gains(
    model: *const PidmdModel,
    omega: f64,
    k: usize,
    gains: *mut f64,
    count: *mut usize,
) -> PidmdStatus {
    guard(|| {
        let count = out_ptr(count, "count")?;
        if gains.is_null() {
            return Err(Failure::Null("gains"));
        }
        let set = resolvent_modes(&deref(model, "model")?.model, omega, k)?;
        for (i, g) in set.gains.iter().enumerate() {
            *gains.add(i) = *g;
        }
        *count = set.gains.len();
        Ok(())
    })
}

/// JSON serialization of the model; release with [`pidmd_string_free`].
///
/// # Safety
/// `model` must be a live handle and `out` a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn pidmd_model_to_json(model: *const PidmdModel, out: *mut *mut c_char) -> PidmdStatus {
    guard(|| {
        let out = out_ptr(out, "out")?;
        let text = serde_json::to_string(&deref(model, "model")?.model)
            .map_err(|e| PidmdError::Serialization(e.to_string()))?;
        *out = CString::new(text).map_err(|e| Failure::Invalid(e.to_string()))?.into_raw();
        Ok(())
    })
}

/// # Safety
/// `s` must be null or a string returned by this library, not freed before.
#[no_mangle]
pub unsafe extern "C" fn pidmd_string_free(s: *mut c_char) {
    if !s.is_null() {
        drop(CString::from_raw(s));
    }
}

/// # Safety
/// `model` must be null or a handle from this library, not freed before.
#[no_mangle]
pub unsafe extern "C" fn pidmd_model_free(model: *mut PidmdModel) {
    if !model.is_null() {
        drop(Box::from_raw(model));
    }
}

//! C ABI over `elemsketch`.
//!
//! Matrices cross the boundary as opaque `EsMatrix` handles owned by the
//! caller and released with `es_matrix_free`. Every fallible call returns an
//! `EsStatus`; on failure `es_last_error_message` describes the error for the
//! calling thread. Dense buffers are row-major `double` arrays.

use std::cell::RefCell;
use std::ffi::{c_char, CStr, CString};
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::path::Path;
use std::ptr;

use elemsketch::harness::{load_matrix, MatrixFormat};
use elemsketch::mixing::{self, DEFAULT_GRID_HI, DEFAULT_GRID_LO, DEFAULT_GRID_STEPS};
use elemsketch::sketch;
use elemsketch::spca::{self, ComponentSet, IterSparseOptions, SpcaMethod};
use elemsketch::{Error, Matrix};

/// Result code of every fallible call.
#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum EsStatus {
    Ok = 0,
    NullPointer = 1,
    InvalidParameter = 2,
    Dimension = 3,
    Degenerate = 4,
    NotConverged = 5,
    Parse = 6,
    Io = 7,
    BufferTooSmall = 8,
    Internal = 9,
}

/// Opaque matrix handle.
pub struct EsMatrix {
    inner: Matrix,
}

thread_local! {
    static LAST_ERROR: RefCell<Option<CString>> = const { RefCell::new(None) };
}

fn set_error(msg: String) {
    let c = CString::new(msg.replace('\0', " ")).expect("interior NULs removed");
    LAST_ERROR.with(|e| *e.borrow_mut() = Some(c));
}

fn status_of(e: &Error) -> EsStatus {
    match e {
        Error::Parameter(_) | Error::SizeGuard(_) | Error::NonFinite { .. } | Error::DuplicateCoordinate { .. } => {
            EsStatus::InvalidParameter
        }
        Error::Dimension(_) | Error::Consistency(_) => EsStatus::Dimension,
        Error::Degenerate(_) => EsStatus::Degenerate,
        Error::NotConverged(_) => EsStatus::NotConverged,
        Error::Parse { .. } | Error::Json(_) | Error::Csv(_) => EsStatus::Parse,
        Error::Io(_) => EsStatus::Io,
    }
}

struct Failure(EsStatus, String);

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        Failure(status_of(&e), e.to_string())
    }
}

fn null(what: &str) -> Failure {
    Failure(EsStatus::NullPointer, format!("{what} is null"))
}

/// Runs `f`, converting errors and panics into a status.
fn guard(f: impl FnOnce() -> Result<(), Failure>) -> EsStatus {
    match catch_unwind(AssertUnwindSafe(f)) {
        Ok(Ok(())) => {
            LAST_ERROR.with(|e| *e.borrow_mut() = None);
            EsStatus::Ok
        }
        Ok(Err(Failure(status, msg))) => {
            set_error(msg);
            status
        }
        Err(_) => {
            set_error("internal panic".into());
            EsStatus::Internal
        }
    }
}

unsafe fn matrix_ref<'a>(m: *const EsMatrix, what: &str) -> Result<&'a Matrix, Failure> {
    // SAFETY: caller guarantees `m` is null or a live handle from this library.
    unsafe { m.as_ref() }.map(|h| &h.inner).ok_or_else(|| null(what))
}

unsafe fn slice<'a, T>(p: *const T, len: usize, what: &str) -> Result<&'a [T], Failure> {
    if len == 0 {
        return Ok(&[]);
    }
    if p.is_null() {
        return Err(null(what));
    }
    // SAFETY: caller guarantees `p` points to `len` readable elements.
    Ok(unsafe { std::slice::from_raw_parts(p, len) })
}

unsafe fn write_out<T>(out: *mut T, value: T, what: &str) -> Result<(), Failure> {
    if out.is_null() {
        return Err(null(what));
    }
    // SAFETY: non-null and, per the contract, writable.
    unsafe { out.write(value) };
    Ok(())
}

unsafe fn emit_matrix(out: *mut *mut EsMatrix, m: Matrix) -> Result<(), Failure> {
    // SAFETY: forwarded caller contract on `out`.
    unsafe { write_out(out, Box::into_raw(Box::new(EsMatrix { inner: m })), "out") }
}

/// Message for the last failed call on this thread, or NULL. Valid until the
/// next call into this library from the same thread.
#[no_mangle]
pub extern "C" fn es_last_error_message() -> *const c_char {
    LAST_ERROR.with(|e| e.borrow().as_ref().map_or(ptr::null(), |c| c.as_ptr()))
}

/// Library version as a static NUL-terminated string.
#[no_mangle]
pub extern "C" fn es_version() -> *const c_char {
    concat!(env!("CARGO_PKG_VERSION"), "\0").as_ptr().cast()
}

/// Dense rows×cols matrix copied from row-major `data`.
///
/// # Safety
/// `data` must point to rows·cols doubles; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn es_matrix_dense_new(
    rows: usize,
    cols: usize,
    data: *const f64,
    out: *mut *mut EsMatrix,
) -> EsStatus {
    guard(|| {
        let len = rows.checked_mul(cols).ok_or_else(|| Failure(EsStatus::InvalidParameter, "size overflow".into()))?;
        let d = unsafe { slice(data, len, "data")? }.to_vec();
        unsafe { emit_matrix(out, Matrix::dense(rows, cols, d)?) }
    })
}

/// Sparse matrix from zero-based coordinate triples.
///
/// # Safety
/// `row_idx`, `col_idx` and `values` must each point to `nnz` elements.
#[no_mangle]
pub unsafe extern "C" fn es_matrix_sparse_new(
    rows: usize,
    cols: usize,
    nnz: usize,
    row_idx: *const usize,
    col_idx: *const usize,
    values: *const f64,
    out: *mut *mut EsMatrix,
) -> EsStatus {
    guard(|| {
        let (ri, ci, v) = unsafe {
            (slice(row_idx, nnz, "row_idx")?, slice(col_idx, nnz, "col_idx")?, slice(values, nnz, "values")?)
        };
        let triples = (0..nnz).map(|t| (ri[t], ci[t], v[t])).collect();
        unsafe { emit_matrix(out, Matrix::sparse(rows, cols, triples)?) }
    })
}

/// Loads a `.mtx` (MatrixMarket coordinate) or `.csv` (dense) file.
///
/// # Safety
/// `path` must be a NUL-terminated string.
#[no_mangle]
pub unsafe extern "C" fn es_matrix_load(path: *const c_char, out: *mut *mut EsMatrix) -> EsStatus {
    guard(|| {
        if path.is_null() {
            return Err(null("path"));
        }
        let p = unsafe { CStr::from_ptr(path) }
            .to_str()
            .map_err(|_| Failure(EsStatus::InvalidParameter, "path is not UTF-8".into()))?;
        let p = Path::new(p);
        let format = MatrixFormat::from_path(p)
            .ok_or_else(|| Failure(EsStatus::InvalidParameter, format!("unknown extension: {}", p.display())))?;
        unsafe { emit_matrix(out, load_matrix(p, format)?) }
    })
}

/// Releases a handle; NULL is ignored.
///
/// # Safety
/// `m` must be NULL or a handle not yet freed.
#[no_mangle]
pub unsafe extern "C" fn es_matrix_free(m: *mut EsMatrix) {
    if !m.is_null() {
        // SAFETY: handle came from Box::into_raw in this library.
        drop(unsafe { Box::from_raw(m) });
    }
}

/// Row count, column count and stored nonzeros.
///
/// # Safety
/// `m` must be a live handle; `rows`, `cols`, `nnz` writable or NULL.
#[no_mangle]
pub unsafe extern "C" fn es_matrix_shape(
    m: *const EsMatrix,
    rows: *mut usize,
    cols: *mut usize,
    nnz: *mut usize,
) -> EsStatus {
    guard(|| {
        let a = unsafe { matrix_ref(m, "matrix")? };
        unsafe {
            if !rows.is_null() {
                rows.write(a.rows());
            }
            if !cols.is_null() {
                cols.write(a.cols());
            }
            if !nnz.is_null() {
                nnz.write(a.nnz());
            }
        }
        Ok(())
    })
}

/// Copies the matrix into a row-major buffer of `len` ≥ rows·cols doubles.
///
/// # Safety
/// `buf` must point to `len` writable doubles.
#[no_mangle]
pub unsafe extern "C" fn es_matrix_to_dense(m: *const EsMatrix, buf: *mut f64, len: usize) -> EsStatus {
    guard(|| {
        let a = unsafe { matrix_ref(m, "matrix")? };
        let d = a.to_dense_vec();
        if len < d.len() {
            return Err(Failure(EsStatus::BufferTooSmall, format!("need {} doubles, got {len}", d.len())));
        }
        if buf.is_null() {
            return Err(null("buf"));
        }
        // SAFETY: `buf` has room for `len` ≥ d.len() doubles.
        unsafe { ptr::copy_nonoverlapping(d.as_ptr(), buf, d.len()) };
        Ok(())
    })
}

/// Column-centered copy.
///
/// # Safety
/// `m` must be a live handle; `out` writable.
#[no_mangle]
pub unsafe extern "C" fn es_matrix_center(m: *const EsMatrix, out: *mut *mut EsMatrix) -> EsStatus {
    guard(|| {
        let a = unsafe { matrix_ref(m, "matrix")? };
        unsafe { emit_matrix(out, a.center_columns()) }
    })
}

/// Mixing weight α* minimizing the sampling bound objective at accuracy
/// `eps` (σ_min² taken as 0).
///
/// # Safety
/// `m` must be a live handle; outputs writable (`objective` may be NULL).
#[no_mangle]
pub unsafe extern "C" fn es_optimize_alpha(
    m: *const EsMatrix,
    eps: f64,
    alpha_star: *mut f64,
    objective: *mut f64,
) -> EsStatus {
    guard(|| {
        let a = unsafe { matrix_ref(m, "matrix")? };
        let p = mixing::optimize_alpha(a, eps, DEFAULT_GRID_LO, DEFAULT_GRID_HI, DEFAULT_GRID_STEPS, 0.0)?;
        unsafe {
            write_out(alpha_star, p.alpha_star, "alpha_star")?;
            if !objective.is_null() {
                objective.write(p.objective_at_star);
            }
        }
        Ok(())
    })
}

/// Hybrid-distribution sketch with `s` draws.
///
/// # Safety
/// `m` must be a live handle; `out` writable.
#[no_mangle]
pub unsafe extern "C" fn es_sketch_hybrid(
    m: *const EsMatrix,
    alpha: f64,
    s: u64,
    seed: u64,
    out: *mut *mut EsMatrix,
) -> EsStatus {
    guard(|| {
        let a = unsafe { matrix_ref(m, "matrix")? };
        let dist = sketch::hybrid_probabilities(a, alpha)?;
        let r = sketch::sample_sketch(a, &dist, s, seed)?;
        unsafe { emit_matrix(out, r.sketch) }
    })
}

/// Uniform sketch over all m·n positions with `s` draws.
///
/// # Safety
/// `m` must be a live handle; `out` writable.
#[no_mangle]
pub unsafe extern "C" fn es_sketch_uniform(m: *const EsMatrix, s: u64, seed: u64, out: *mut *mut EsMatrix) -> EsStatus {
    guard(|| {
        let a = unsafe { matrix_ref(m, "matrix")? };
        let r = sketch::sample_sketch(a, &sketch::uniform_probabilities(a), s, seed)?;
        unsafe { emit_matrix(out, r.sketch) }
    })
}

/// Leverage-score sketch from the top-`rank` factors, `s` draws.
///
/// # Safety
/// `m` must be a live handle; `out` writable.
#[no_mangle]
pub unsafe extern "C" fn es_sketch_leverage(
    m: *const EsMatrix,
    rank: usize,
    s: u64,
    seed: u64,
    out: *mut *mut EsMatrix,
) -> EsStatus {
    guard(|| {
        let a = unsafe { matrix_ref(m, "matrix")? };
        let scores = sketch::leverage_scores(a, rank, seed)?;
        let dist = sketch::leverage_probabilities(&scores, a.rows(), a.cols())?;
        let r = sketch::sample_sketch(a, &dist, s, seed)?;
        unsafe { emit_matrix(out, r.sketch) }
    })
}

/// Thresholded copy with the cutoff chosen for accuracy `eps`.
///
/// # Safety
/// `m` must be a live handle; `out` writable; `delta` writable or NULL.
#[no_mangle]
pub unsafe extern "C" fn es_sketch_threshold(
    m: *const EsMatrix,
    eps: f64,
    delta: *mut f64,
    out: *mut *mut EsMatrix,
) -> EsStatus {
    guard(|| {
        let a = unsafe { matrix_ref(m, "matrix")? };
        let choice = sketch::select_threshold(a, eps)?;
        let t = sketch::threshold_sketch(a, choice.delta)?;
        unsafe {
            if !delta.is_null() {
                delta.write(choice.delta);
            }
            emit_matrix(out, t)
        }
    })
}

/// ‖A − B‖₂ and ‖AᵀA − BᵀB‖₂.
///
/// # Safety
/// `a`, `b` must be live handles; outputs writable or NULL.
#[no_mangle]
pub unsafe extern "C" fn es_spectral_deviation(
    a: *const EsMatrix,
    b: *const EsMatrix,
    op_norm_diff: *mut f64,
    gram_diff: *mut f64,
) -> EsStatus {
    guard(|| {
        let (a, b) = unsafe { (matrix_ref(a, "a")?, matrix_ref(b, "b")?) };
        let d = sketch::spectral_deviation(a, b)?;
        unsafe {
            if !op_norm_diff.is_null() {
                op_norm_diff.write(d.op_norm_diff);
            }
            if !gram_diff.is_null() {
                gram_diff.write(d.gram_diff);
            }
        }
        Ok(())
    })
}

/// Solver selector for `es_sparse_pca`.
#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum EsSpcaMethod {
    Exact = 0,
    MaxR = 1,
    IterSparse = 2,
    BruteForce = 3,
}

/// `k` r-sparse components written to `loadings` as a row-major n×k array
/// (`len` ≥ n·k).
///
/// # Safety
/// `m` must be a live handle; `loadings` must point to `len` writable doubles.
#[no_mangle]
pub unsafe extern "C" fn es_sparse_pca(
    m: *const EsMatrix,
    method: EsSpcaMethod,
    k: usize,
    r: usize,
    seed: u64,
    loadings: *mut f64,
    len: usize,
) -> EsStatus {
    guard(|| {
        let a = unsafe { matrix_ref(m, "matrix")? };
        let need = a.cols().saturating_mul(k);
        if len < need {
            return Err(Failure(EsStatus::BufferTooSmall, format!("need {need} doubles, got {len}")));
        }
        if loadings.is_null() {
            return Err(null("loadings"));
        }
        let v = match method {
            EsSpcaMethod::Exact => spca::exact_pca(a, k, seed)?,
            EsSpcaMethod::MaxR => spca::truncate_components(&spca::exact_pca(a, k, seed)?, r)?,
            EsSpcaMethod::IterSparse => spca::iter_sparse_pca(a, k, r, IterSparseOptions::default(), seed)?,
            EsSpcaMethod::BruteForce => spca::brute_force_spca(a, k, r)?,
        };
        let flat = v.to_row_major();
        // SAFETY: `loadings` has room for `len` ≥ n·k doubles.
        unsafe { ptr::copy_nonoverlapping(flat.as_ptr(), loadings, flat.len()) };
        Ok(())
    })
}

/// trace(VᵀAᵀAV) for a row-major n×k loading array.
///
/// # Safety
/// `loadings` must point to n·k doubles with n = cols(A); `out` writable.
#[no_mangle]
pub unsafe extern "C" fn es_variance(m: *const EsMatrix, loadings: *const f64, k: usize, out: *mut f64) -> EsStatus {
    guard(|| {
        let a = unsafe { matrix_ref(m, "matrix")? };
        let n = a.cols();
        let flat = unsafe { slice(loadings, n.saturating_mul(k), "loadings")? };
        let cols = (0..k).map(|c| (0..n).map(|i| flat[i * k + c]).collect()).collect();
        let v = ComponentSet { loadings: cols, r: n, method: SpcaMethod::Exact, converged: true };
        unsafe { write_out(out, spca::variance(a, &v)?, "out") }
    })
}

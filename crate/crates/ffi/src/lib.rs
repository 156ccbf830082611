//! C ABI over the filtlab library.
//!
//! Every entry point returns a status code (`FILTLAB_OK` on success) and
//! writes results through out-pointers. After a failure,
//! [`filtlab_last_error_message`] describes it. Handles are opaque and must be
//! released with their `_free` function.

use std::cell::RefCell;
use std::ffi::{c_char, CString};
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::sync::Arc;

use filtlab::entropy::epsilon_entropy_bounds;
use filtlab::mmspace::{DiscreteMeasure, SemimetricMatrix};
use filtlab::transport::kantorovich_value;
use filtlab::treewalk::{tree_distance, BaseMetric, TreeLeafSystem};
use filtlab::Error;

pub const FILTLAB_OK: i32 = 0;
/// A required pointer was null.
pub const FILTLAB_ERR_NULL: i32 = 1;
/// Malformed input: shapes, negative or non-finite entries, bad measures.
pub const FILTLAB_ERR_INVALID: i32 = 2;
pub const FILTLAB_ERR_SIZE: i32 = 3;
pub const FILTLAB_ERR_SOLVER: i32 = 4;
/// A Rust panic was caught at the boundary.
pub const FILTLAB_ERR_PANIC: i32 = 5;

/// Finite semimetric space.
pub struct FiltlabMetric {
    d: SemimetricMatrix,
}

/// Labeled tree of fixed shape with a semimetric on its labels.
pub struct FiltlabTree {
    tree: TreeLeafSystem,
}

/// Lower and upper bounds on the epsilon-entropy, in bits.
#[repr(C)]
#[derive(Debug, Clone, Copy, Default)]
pub struct FiltlabEntropyBounds {
    pub epsilon: f64,
    pub lower: f64,
    pub upper: f64,
    /// Transport cost of the quantization achieving `upper`.
    pub upper_cost: f64,
}

thread_local! {
    static LAST_ERROR: RefCell<Option<CString>> = const { RefCell::new(None) };
}

struct Failure {
    code: i32,
    message: String,
}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        let code = match e {
            Error::SizeLimit { .. } => FILTLAB_ERR_SIZE,
            Error::Solver(_) => FILTLAB_ERR_SOLVER,
            _ => FILTLAB_ERR_INVALID,
        };
        Failure {
            code,
            message: e.to_string(),
        }
    }
}

fn null(what: &str) -> Failure {
    Failure {
        code: FILTLAB_ERR_NULL,
        message: format!("{what} is null"),
    }
}

fn set_error(message: String) {
    let c = CString::new(message.replace('\0', " ")).unwrap_or_default();
    LAST_ERROR.with(|e| *e.borrow_mut() = Some(c));
}

fn guard(f: impl FnOnce() -> Result<(), Failure>) -> i32 {
    match catch_unwind(AssertUnwindSafe(f)) {
        Ok(Ok(())) => {
            LAST_ERROR.with(|e| *e.borrow_mut() = None);
            FILTLAB_OK
        }
        Ok(Err(fail)) => {
            set_error(fail.message);
            fail.code
        }
        Err(_) => {
            set_error("internal panic".into());
            FILTLAB_ERR_PANIC
        }
    }
}

/// # Safety
/// `ptr` must be null or point to `len` readable values.
unsafe fn slice<'a, T>(ptr: *const T, len: usize, what: &str) -> Result<&'a [T], Failure> {
    if len == 0 {
        return Ok(&[]);
    }
    if ptr.is_null() {
        return Err(null(what));
    }
    Ok(std::slice::from_raw_parts(ptr, len))
}

/// # Safety
/// `ptr` must be null or point to a live handle created by this library.
unsafe fn handle<'a, T>(ptr: *const T, what: &str) -> Result<&'a T, Failure> {
    ptr.as_ref().ok_or_else(|| null(what))
}

fn out<T>(ptr: *mut T, what: &str) -> Result<*mut T, Failure> {
    if ptr.is_null() {
        Err(null(what))
    } else {
        Ok(ptr)
    }
}

/// Message of the last failed call on this thread, or null after a success.
/// The string stays valid until the next call into the library on the same
/// thread.
#[no_mangle]
pub extern "C" fn filtlab_last_error_message() -> *const c_char {
    LAST_ERROR.with(|e| e.borrow().as_ref().map_or(std::ptr::null(), |c| c.as_ptr()))
}

/// Builds a semimetric from a row-major `size * size` matrix. The matrix must
/// have a zero diagonal, be symmetric and satisfy the triangle inequality.
///
/// # Safety
/// `distances` must point to `size * size` doubles and `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn filtlab_metric_new(
    size: usize,
    distances: *const f64,
    out: *mut *mut FiltlabMetric,
) -> i32 {
    guard(|| {
        let out = self::out(out, "out")?;
        let len = size.checked_mul(size).ok_or(Failure {
            code: FILTLAB_ERR_SIZE,
            message: format!("size {size} overflows"),
        })?;
        let d = SemimetricMatrix::new(size, slice(distances, len, "distances")?.to_vec())?;
        if !filtlab::mmspace::validate_matrix(&d).is_valid() {
            return Err(Failure {
                code: FILTLAB_ERR_INVALID,
                message: "matrix is not a semimetric".into(),
            });
        }
        *out = Box::into_raw(Box::new(FiltlabMetric { d }));
        Ok(())
    })
}

/// Number of points of `metric`, or 0 when it is null.
///
/// # Safety
/// `metric` must be null or a live handle.
#[no_mangle]
pub unsafe extern "C" fn filtlab_metric_size(metric: *const FiltlabMetric) -> usize {
    metric.as_ref().map_or(0, |m| m.d.size())
}

/// # Safety
/// `metric` must be null or a handle from [`filtlab_metric_new`] that has not
/// been freed.
#[no_mangle]
pub unsafe extern "C" fn filtlab_metric_free(metric: *mut FiltlabMetric) {
    if !metric.is_null() {
        drop(Box::from_raw(metric));
    }
}

/// Kantorovich distance between two probability vectors on `metric`.
///
/// # Safety
/// `mu` and `nu` must point to as many doubles as the metric has points.
#[no_mangle]
pub unsafe extern "C" fn filtlab_kantorovich(
    metric: *const FiltlabMetric,
    mu: *const f64,
    nu: *const f64,
    out_value: *mut f64,
) -> i32 {
    guard(|| {
        let m = handle(metric, "metric")?;
        let out = out(out_value, "out_value")?;
        let n = m.d.size();
        let mu = DiscreteMeasure::new(slice(mu, n, "mu")?.to_vec())?;
        let nu = DiscreteMeasure::new(slice(nu, n, "nu")?.to_vec())?;
        *out = kantorovich_value(&mu, &nu, &m.d)?;
        Ok(())
    })
}

/// Bounds on the epsilon-entropy of `(metric, weights)`.
///
/// # Safety
/// `weights` must point to as many doubles as the metric has points.
#[no_mangle]
pub unsafe extern "C" fn filtlab_entropy_bounds(
    metric: *const FiltlabMetric,
    weights: *const f64,
    epsilon: f64,
    out_bounds: *mut FiltlabEntropyBounds,
) -> i32 {
    guard(|| {
        let m = handle(metric, "metric")?;
        let out = out(out_bounds, "out_bounds")?;
        let mu = DiscreteMeasure::new(slice(weights, m.d.size(), "weights")?.to_vec())?;
        let b = epsilon_entropy_bounds(&m.d, &mu, epsilon)?;
        *out = FiltlabEntropyBounds {
            epsilon: b.epsilon,
            lower: b.lower,
            upper: b.upper,
            upper_cost: b.upper_cost,
        };
        Ok(())
    })
}

/// Builds a tree whose level `i` nodes have `radices[i]` children and whose
/// leaves carry `labels` in lexicographic order. Labels index the
/// `alphabet * alphabet` row-major `label_distances`.
///
/// # Safety
/// `radices` must point to `height` values, `labels` to the product of the
/// radices, and `label_distances` to `alphabet * alphabet` doubles.
#[no_mangle]
pub unsafe extern "C" fn filtlab_tree_new(
    radices: *const usize,
    height: usize,
    labels: *const u32,
    label_count: usize,
    alphabet: usize,
    label_distances: *const f64,
    out: *mut *mut FiltlabTree,
) -> i32 {
    guard(|| {
        let out = self::out(out, "out")?;
        let radices = slice(radices, height, "radices")?.to_vec();
        let labels = slice(labels, label_count, "labels")?.to_vec();
        let len = alphabet.saturating_mul(alphabet);
        let base = SemimetricMatrix::new(alphabet, slice(label_distances, len, "label_distances")?.to_vec())?;
        let tree = TreeLeafSystem::new(radices, labels, Arc::new(BaseMetric::Matrix(base)))?;
        *out = Box::into_raw(Box::new(FiltlabTree { tree }));
        Ok(())
    })
}

/// # Safety
/// `tree` must be null or a handle from [`filtlab_tree_new`] that has not
/// been freed.
#[no_mangle]
pub unsafe extern "C" fn filtlab_tree_free(tree: *mut FiltlabTree) {
    if !tree.is_null() {
        drop(Box::from_raw(tree));
    }
}

/// Minimum over tree automorphisms of the mean label distance between the
/// leaves of `a` and `b`. Both trees need the same shape and label metric.
///
/// # Safety
/// `a` and `b` must be live handles.
#[no_mangle]
pub unsafe extern "C" fn filtlab_tree_distance(
    a: *const FiltlabTree,
    b: *const FiltlabTree,
    out_value: *mut f64,
) -> i32 {
    guard(|| {
        let (a, b) = (handle(a, "a")?, handle(b, "b")?);
        let out = out(out_value, "out_value")?;
        *out = tree_distance(&a.tree, &b.tree)?;
        Ok(())
    })
}

/// Library version as a static NUL-terminated string.
#[no_mangle]
pub extern "C" fn filtlab_version() -> *const c_char {
    concat!(env!("CARGO_PKG_VERSION"), "\0").as_ptr().cast()
}

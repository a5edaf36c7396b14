//! C ABI surface over the solver library.
//!
//! Conventions: every fallible call returns an [`SfnideStatus`] code and
//! writes its result through out-pointers; `SFNIDE_STATUS_OK` (0) means
//! success. On failure a thread-local message is set, readable via
//! [`sfnide_last_error`]. Heap objects cross the boundary as opaque
//! handles with explicit `_free` functions. No call unwinds across the
//! boundary.

use std::cell::RefCell;
use std::os::raw::c_char;
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::slice;

use sfnide::brownian::sample_path;
use sfnide::error::Error;
use sfnide::gronwall::{
    gronwall_bound, Coefficient, GronwallProblem, Inhomogeneity, SeriesPolicy,
};
use sfnide::harness::coupled_error;
use sfnide::model::{example1, Grid};
use sfnide::quadrature::{build_jacobi_rule, JacobiRule};
use sfnide::solver::{em_solve, KernelRules};
use sfnide::specialfn::{beta, gamma, log_gamma, mittag_leffler};

/// Status codes returned by every fallible entry point.
#[repr(C)]
#[derive(Clone, Copy, PartialEq, Eq, Debug)]
pub enum SfnideStatus {
    Ok = 0,
    /// Argument outside the mathematical domain of the operation.
    DomainError = 1,
    /// Computation would overflow double precision.
    Overflow = 2,
    /// Iteration budget exhausted without convergence.
    NotConverged = 3,
    /// A function evaluation produced a non-finite value.
    Evaluation = 4,
    /// Inconsistent shapes, grids, or rules.
    Mismatch = 5,
    /// Invalid configuration values.
    Config = 6,
    /// Operating-system I/O failure.
    Io = 7,
    /// A required pointer argument was null.
    NullPointer = 8,
    /// Unexpected internal failure.
    Internal = 9,
}

thread_local! {
    static LAST_ERROR: RefCell<Vec<u8>> = const { RefCell::new(Vec::new()) };
}

fn set_error(msg: &str) {
    LAST_ERROR.with(|slot| {
        let mut v = slot.borrow_mut();
        v.clear();
        v.extend_from_slice(msg.as_bytes());
        v.push(0);
    });
}

fn status_of(e: &Error) -> SfnideStatus {
    match e {
        Error::Domain { .. } => SfnideStatus::DomainError,
        Error::Overflow { .. } => SfnideStatus::Overflow,
        Error::NotConverged { .. } => SfnideStatus::NotConverged,
        Error::Evaluation { .. } => SfnideStatus::Evaluation,
        Error::Mismatch { .. } => SfnideStatus::Mismatch,
        Error::Config(_) => SfnideStatus::Config,
        Error::Io(_) => SfnideStatus::Io,
    }
}

/// Run a closure, translating errors and panics into status codes.
fn guarded(f: impl FnOnce() -> Result<(), Error>) -> SfnideStatus {
    match catch_unwind(AssertUnwindSafe(f)) {
        Ok(Ok(())) => SfnideStatus::Ok,
        Ok(Err(e)) => {
            set_error(&e.to_string());
            status_of(&e)
        }
        Err(_) => {
            set_error("internal panic");
            SfnideStatus::Internal
        }
    }
}

fn null_ptr(name: &str) -> SfnideStatus {
    set_error(&format!("{name} must not be null"));
    SfnideStatus::NullPointer
}

/// Copy the last error message (NUL-terminated) into `buf`. Returns the
/// full message length including the terminator; if it exceeds `cap` the
/// message is truncated. A zero return means no error has been recorded
/// on this thread.
///
/// # Safety
/// `buf` must point to at least `cap` writable bytes, or be null with
/// `cap` 0 to query the required length.
#[no_mangle]
pub unsafe extern "C" fn sfnide_last_error(buf: *mut c_char, cap: usize) -> usize {
    LAST_ERROR.with(|slot| {
        let v = slot.borrow();
        if v.is_empty() {
            return 0;
        }
        if !buf.is_null() && cap > 0 {
            let n = v.len().min(cap);
            let dst = slice::from_raw_parts_mut(buf as *mut u8, n);
            dst.copy_from_slice(&v[..n]);
            dst[n - 1] = 0;
        }
        v.len()
    })
}

/// Gamma function for positive arguments.
///
/// # Safety
/// `out` must point to a writable double.
#[no_mangle]
pub unsafe extern "C" fn sfnide_gamma(x: f64, out: *mut f64) -> SfnideStatus {
    if out.is_null() {
        return null_ptr("out");
    }
    guarded(|| {
        *out = gamma(x)?;
        Ok(())
    })
}

/// Natural log of the Gamma function for positive arguments.
///
/// # Safety
/// `out` must point to a writable double.
#[no_mangle]
pub unsafe extern "C" fn sfnide_log_gamma(x: f64, out: *mut f64) -> SfnideStatus {
    if out.is_null() {
        return null_ptr("out");
    }
    guarded(|| {
        *out = log_gamma(x)?;
        Ok(())
    })
}

/// Beta function B(x, y) for positive arguments.
///
/// # Safety
/// `out` must point to a writable double.
#[no_mangle]
pub unsafe extern "C" fn sfnide_beta(x: f64, y: f64, out: *mut f64) -> SfnideStatus {
    if out.is_null() {
        return null_ptr("out");
    }
    guarded(|| {
        *out = beta(x, y)?;
        Ok(())
    })
}

/// One-parameter Mittag-Leffler function E_alpha(x) for alpha in (0,1]
/// and x in [0, 50].
///
/// # Safety
/// `out` must point to a writable double.
#[no_mangle]
pub unsafe extern "C" fn sfnide_mittag_leffler(alpha: f64, x: f64, out: *mut f64) -> SfnideStatus {
    if out.is_null() {
        return null_ptr("out");
    }
    guarded(|| {
        *out = mittag_leffler(alpha, x)?;
        Ok(())
    })
}

/// Opaque Gauss-Jacobi rule handle.
pub struct SfnideJacobiRule {
    inner: JacobiRule,
}

/// Build an n-point Gauss-Jacobi rule on (0,1) for the weight
/// (1-u)^exponent_a * u^exponent_b; both exponents must exceed -1.
///
/// # Safety
/// `out` must point to a writable handle slot. The returned handle must
/// be released with [`sfnide_jacobi_rule_free`].
#[no_mangle]
pub unsafe extern "C" fn sfnide_jacobi_rule_new(
    exponent_a: f64,
    exponent_b: f64,
    n: usize,
    out: *mut *mut SfnideJacobiRule,
) -> SfnideStatus {
    if out.is_null() {
        return null_ptr("out");
    }
    guarded(|| {
        let inner = build_jacobi_rule(exponent_a, exponent_b, n)?;
        *out = Box::into_raw(Box::new(SfnideJacobiRule { inner }));
        Ok(())
    })
}

/// Number of nodes in the rule; 0 for a null handle.
///
/// # Safety
/// `rule` must be null or a live handle from [`sfnide_jacobi_rule_new`].
#[no_mangle]
pub unsafe extern "C" fn sfnide_jacobi_rule_len(rule: *const SfnideJacobiRule) -> usize {
    if rule.is_null() {
        return 0;
    }
    (*rule).inner.len()
}

/// Copy nodes and weights (each `sfnide_jacobi_rule_len` doubles) into the
/// caller's arrays. Either destination may be null to skip it.
///
/// # Safety
/// Non-null destinations must have room for the full rule length.
#[no_mangle]
pub unsafe extern "C" fn sfnide_jacobi_rule_copy(
    rule: *const SfnideJacobiRule,
    nodes_out: *mut f64,
    weights_out: *mut f64,
) -> SfnideStatus {
    if rule.is_null() {
        return null_ptr("rule");
    }
    let inner = &(*rule).inner;
    if !nodes_out.is_null() {
        slice::from_raw_parts_mut(nodes_out, inner.len()).copy_from_slice(&inner.nodes);
    }
    if !weights_out.is_null() {
        slice::from_raw_parts_mut(weights_out, inner.len()).copy_from_slice(&inner.weights);
    }
    SfnideStatus::Ok
}

/// Release a rule handle. Null is a no-op.
///
/// # Safety
/// `rule` must be null or a live handle; it is invalid after this call.
#[no_mangle]
pub unsafe extern "C" fn sfnide_jacobi_rule_free(rule: *mut SfnideJacobiRule) {
    if !rule.is_null() {
        drop(Box::from_raw(rule));
    }
}

/// Evaluate the multi-kernel integral-inequality bound at time `t` for
/// constant data: inhomogeneity `g`, singular-kernel coefficient `b` of
/// order `alpha`, and `n_kernels` extra kernels with orders `alpha_i` and
/// coefficients `a_i`. Writes the bound and the number of series shells
/// consumed (`shells_out` may be null).
///
/// # Safety
/// `alpha_i` and `a_i` must point to `n_kernels` doubles each (null only
/// when `n_kernels` is 0); `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn sfnide_gronwall_bound(
    alpha: f64,
    alpha_i: *const f64,
    a_i: *const f64,
    n_kernels: usize,
    b: f64,
    g: f64,
    horizon: f64,
    t: f64,
    k_max: usize,
    tail_tol: f64,
    quad_order: usize,
    out: *mut f64,
    shells_out: *mut usize,
) -> SfnideStatus {
    if out.is_null() {
        return null_ptr("out");
    }
    if n_kernels > 0 && (alpha_i.is_null() || a_i.is_null()) {
        return null_ptr("alpha_i/a_i");
    }
    let orders = if n_kernels > 0 {
        slice::from_raw_parts(alpha_i, n_kernels).to_vec()
    } else {
        Vec::new()
    };
    let coeffs = if n_kernels > 0 {
        slice::from_raw_parts(a_i, n_kernels).to_vec()
    } else {
        Vec::new()
    };
    guarded(|| {
        let problem = GronwallProblem {
            alpha,
            alpha_i: orders.clone(),
            a: coeffs.iter().map(|&c| Coefficient::Constant(c)).collect(),
            b: Coefficient::Constant(b),
            g: Inhomogeneity::Constant(g),
            horizon,
        };
        let policy = SeriesPolicy { k_max, tail_tol, quad_order };
        let bound = gronwall_bound(&problem, t, &policy)?;
        *out = bound.value;
        if !shells_out.is_null() {
            *shells_out = bound.shells_used;
        }
        Ok(())
    })
}

/// Run the Euler-Maruyama scheme for the built-in scalar benchmark
/// problem on `n_steps` uniform steps over [0,1], driven by the Brownian
/// path of stream `stream` under `seed`. Writes the `n_steps + 1` state
/// values (including the initial one) into `out`.
///
/// # Safety
/// `out` must have room for `n_steps + 1` doubles.
#[no_mangle]
pub unsafe extern "C" fn sfnide_benchmark_trajectory(
    alpha: f64,
    alpha1: f64,
    beta1: f64,
    beta2: f64,
    n_steps: usize,
    seed: u64,
    stream: u64,
    quad_order: usize,
    out: *mut f64,
) -> SfnideStatus {
    if out.is_null() {
        return null_ptr("out");
    }
    guarded(|| {
        let problem = example1(alpha, alpha1, beta1, beta2)?;
        let grid = Grid::new(n_steps, problem.horizon)?;
        let rules = KernelRules::build(&problem.orders, quad_order)?;
        let path = sample_path(seed, stream, &grid, problem.wiener_dim)?;
        let traj = em_solve(&problem, &grid, &path, &rules)?;
        let dst = slice::from_raw_parts_mut(out, n_steps + 1);
        for n in 0..=n_steps {
            dst[n] = traj.state(n)[0];
        }
        Ok(())
    })
}

/// Coupled coarse/fine mean-square error estimate at the final time for
/// the built-in benchmark problem: `n_paths` Brownian samples at
/// `coarse_steps` steps against their refinements at twice the
/// resolution.
///
/// # Safety
/// `out` must point to a writable double.
#[no_mangle]
pub unsafe extern "C" fn sfnide_benchmark_coupled_error(
    alpha: f64,
    alpha1: f64,
    beta1: f64,
    beta2: f64,
    coarse_steps: usize,
    n_paths: u64,
    seed: u64,
    quad_order: usize,
    out: *mut f64,
) -> SfnideStatus {
    if out.is_null() {
        return null_ptr("out");
    }
    guarded(|| {
        let problem = example1(alpha, alpha1, beta1, beta2)?;
        let rules = KernelRules::build(&problem.orders, quad_order)?;
        *out = coupled_error(&problem, coarse_steps, n_paths, seed, &rules)?;
        Ok(())
    })
}

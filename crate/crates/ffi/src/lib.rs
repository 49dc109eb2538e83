//! C ABI for the moscale library.
//!
//! Problems are opaque handles created with [`moscale_problem_new`] and
//! released with [`moscale_problem_free`]. Every computation returns a
//! [`MoscaleStatus`] and writes its results through out-pointers; outputs are
//! only valid when the status is `Ok`. Infinite dataset sizes are passed as
//! the sentinel `0`, infinite safety caps as C `INFINITY`.
//!
//! The header `include/moscale.h` is generated by cbindgen at build time.

use std::os::raw::c_char;

use moscale::det_equiv::{l1_det_expected, l2_det_expected, DetEquivResult};
use moscale::error::Error;
use moscale::kappa;
use moscale::market::{self, CompanyConfig, EntryThreshold};
use moscale::market_ext;
use moscale::problem::{PowerLawProblem, RidgeConfig, SampleSize};
use moscale::scaling::{self, Objective};

/// Status codes returned by every entry point.
#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum MoscaleStatus {
    Ok = 0,
    NullPointer = 1,
    InvalidParameter = 2,
    NoRoot = 3,
    NoConvergence = 4,
    Degenerate = 5,
    Unsupported = 6,
    Infeasible = 7,
    NumericError = 8,
}

impl From<&Error> for MoscaleStatus {
    fn from(e: &Error) -> Self {
        match e {
            Error::Parameter { .. } | Error::Config(_) => MoscaleStatus::InvalidParameter,
            Error::NoRoot(_) => MoscaleStatus::NoRoot,
            Error::NoConvergence { .. } => MoscaleStatus::NoConvergence,
            Error::DegenerateQ(_) => MoscaleStatus::Degenerate,
            Error::Unsupported(_) => MoscaleStatus::Unsupported,
            Error::Infeasible(_) => MoscaleStatus::Infeasible,
            Error::Solve(_) => MoscaleStatus::NumericError,
        }
    }
}

/// A static description of a status code.
#[no_mangle]
pub extern "C" fn moscale_status_message(status: MoscaleStatus) -> *const c_char {
    let msg: &'static [u8] = match status {
        MoscaleStatus::Ok => b"ok\0",
        MoscaleStatus::NullPointer => b"null pointer argument\0",
        MoscaleStatus::InvalidParameter => b"parameter violates its bound\0",
        MoscaleStatus::NoRoot => b"fixed point has no positive root\0",
        MoscaleStatus::NoConvergence => b"iteration cap reached before tolerance\0",
        MoscaleStatus::Degenerate => b"degenerate degrees-of-freedom factor\0",
        MoscaleStatus::Unsupported => b"outside the supported regime\0",
        MoscaleStatus::Infeasible => b"empty feasible set\0",
        MoscaleStatus::NumericError => b"numeric failure\0",
    };
    msg.as_ptr() as *const c_char
}

/// Opaque power-law problem handle.
pub struct MoscaleProblem {
    inner: PowerLawProblem,
}

/// Deterministic-equivalent result mirrored into a C layout.
#[repr(C)]
#[derive(Debug, Clone, Copy)]
pub struct MoscaleDetEquiv {
    pub t1: f64,
    pub t2: f64,
    pub t3: f64,
    pub t4: f64,
    pub t5: f64,
    pub q: f64,
    pub kappa: f64,
    pub value: f64,
}

impl From<DetEquivResult> for MoscaleDetEquiv {
    fn from(r: DetEquivResult) -> Self {
        Self {
            t1: r.t1,
            t2: r.t2,
            t3: r.t3,
            t4: r.t4,
            t5: r.t5,
            q: r.q,
            kappa: r.kappa,
            value: r.value,
        }
    }
}

fn sample_size(n: u64) -> SampleSize {
    if n == 0 {
        SampleSize::Infinite
    } else {
        SampleSize::Finite(n)
    }
}

/// Create a problem. `out` receives an owned handle on success.
///
/// # Safety
/// `out` must be a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn moscale_problem_new(
    gamma: f64,
    delta: f64,
    rho: f64,
    p_trunc: usize,
    out: *mut *mut MoscaleProblem,
) -> MoscaleStatus {
    if out.is_null() {
        return MoscaleStatus::NullPointer;
    }
    match PowerLawProblem::new(gamma, delta, rho, p_trunc) {
        Ok(inner) => {
            *out = Box::into_raw(Box::new(MoscaleProblem { inner }));
            MoscaleStatus::Ok
        }
        Err(e) => MoscaleStatus::from(&e),
    }
}

/// Release a handle created by [`moscale_problem_new`]. A null pointer is a
/// no-op.
///
/// # Safety
/// `problem` must be a handle from `moscale_problem_new`, not yet freed.
#[no_mangle]
pub unsafe extern "C" fn moscale_problem_free(problem: *mut MoscaleProblem) {
    if !problem.is_null() {
        drop(Box::from_raw(problem));
    }
}

unsafe fn deref<'a>(problem: *const MoscaleProblem) -> Option<&'a PowerLawProblem> {
    problem.as_ref().map(|p| &p.inner)
}

/// Scaling exponents of the problem family.
///
/// # Safety
/// All pointers must be valid.
#[no_mangle]
pub unsafe extern "C" fn moscale_problem_exponents(
    problem: *const MoscaleProblem,
    nu: *mut f64,
    nu_prime: *mut f64,
) -> MoscaleStatus {
    let Some(p) = deref(problem) else {
        return MoscaleStatus::NullPointer;
    };
    if nu.is_null() || nu_prime.is_null() {
        return MoscaleStatus::NullPointer;
    }
    *nu = p.nu();
    *nu_prime = p.nu_prime();
    MoscaleStatus::Ok
}

/// The objective gap `L*` and the integral bound on its truncated tail.
///
/// # Safety
/// All pointers must be valid.
#[no_mangle]
pub unsafe extern "C" fn moscale_lstar(
    problem: *const MoscaleProblem,
    value: *mut f64,
    tail_bound: *mut f64,
) -> MoscaleStatus {
    let Some(p) = deref(problem) else {
        return MoscaleStatus::NullPointer;
    };
    if value.is_null() || tail_bound.is_null() {
        return MoscaleStatus::NullPointer;
    }
    let lstar = p.lstar();
    *value = lstar.value;
    *tail_bound = lstar.tail_bound;
    MoscaleStatus::Ok
}

/// Truncated resolvent sum `sum i^{-a_exp} / (i^{-1-gamma} + kappa)^{b_pow}`.
///
/// # Safety
/// All pointers must be valid.
#[no_mangle]
pub unsafe extern "C" fn moscale_resolvent_sum(
    problem: *const MoscaleProblem,
    a_exp: f64,
    b_pow: u8,
    kappa: f64,
    out: *mut f64,
) -> MoscaleStatus {
    let Some(p) = deref(problem) else {
        return MoscaleStatus::NullPointer;
    };
    if out.is_null() {
        return MoscaleStatus::NullPointer;
    }
    match p.resolvent_sum(a_exp, b_pow, kappa) {
        Ok(v) => {
            *out = v;
            MoscaleStatus::Ok
        }
        Err(e) => MoscaleStatus::from(&e),
    }
}

/// Solve the effective-regularizer fixed point. `n = 0` means infinite data.
///
/// # Safety
/// All pointers must be valid.
#[no_mangle]
pub unsafe extern "C" fn moscale_solve_kappa(
    problem: *const MoscaleProblem,
    lambda: f64,
    n: u64,
    kappa: *mut f64,
    residual: *mut f64,
    iterations: *mut u32,
) -> MoscaleStatus {
    let Some(p) = deref(problem) else {
        return MoscaleStatus::NullPointer;
    };
    if kappa.is_null() || residual.is_null() || iterations.is_null() {
        return MoscaleStatus::NullPointer;
    }
    match kappa::solve_kappa(lambda, sample_size(n), p) {
        Ok(r) => {
            *kappa = r.kappa;
            *residual = r.residual;
            *iterations = r.iterations;
            MoscaleStatus::Ok
        }
        Err(e) => MoscaleStatus::from(&e),
    }
}

/// Closed-form order of the fixed point, `max(lambda, n^{-1-gamma})`.
///
/// # Safety
/// `out` must be a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn moscale_kappa_asymptotic(
    lambda: f64,
    n: u64,
    gamma: f64,
    out: *mut f64,
) -> MoscaleStatus {
    if out.is_null() {
        return MoscaleStatus::NullPointer;
    }
    match kappa::kappa_asymptotic(lambda, sample_size(n), gamma) {
        Ok(v) => {
            *out = v;
            MoscaleStatus::Ok
        }
        Err(e) => MoscaleStatus::from(&e),
    }
}

unsafe fn det_equiv_common(
    problem: *const MoscaleProblem,
    n: u64,
    alpha: f64,
    lambda: f64,
    out: *mut MoscaleDetEquiv,
    which_l2: bool,
) -> MoscaleStatus {
    let Some(p) = deref(problem) else {
        return MoscaleStatus::NullPointer;
    };
    if out.is_null() {
        return MoscaleStatus::NullPointer;
    }
    let cfg = match RidgeConfig::new(sample_size(n), alpha, lambda) {
        Ok(cfg) => cfg,
        Err(e) => return MoscaleStatus::from(&e),
    };
    let result = if which_l2 {
        l2_det_expected(p, &cfg)
    } else {
        l1_det_expected(p, &cfg)
    };
    match result {
        Ok(r) => {
            *out = r.into();
            MoscaleStatus::Ok
        }
        Err(e) => MoscaleStatus::from(&e),
    }
}

/// Expected performance equivalent at `(n, alpha, lambda)`; `n = 0` means
/// infinite data.
///
/// # Safety
/// All pointers must be valid.
#[no_mangle]
pub unsafe extern "C" fn moscale_l1_det_expected(
    problem: *const MoscaleProblem,
    n: u64,
    alpha: f64,
    lambda: f64,
    out: *mut MoscaleDetEquiv,
) -> MoscaleStatus {
    det_equiv_common(problem, n, alpha, lambda, out, false)
}

/// Expected safety equivalent at `(n, alpha, lambda)`.
///
/// # Safety
/// All pointers must be valid.
#[no_mangle]
pub unsafe extern "C" fn moscale_l2_det_expected(
    problem: *const MoscaleProblem,
    n: u64,
    alpha: f64,
    lambda: f64,
    out: *mut MoscaleDetEquiv,
) -> MoscaleStatus {
    det_equiv_common(problem, n, alpha, lambda, out, true)
}

/// Minimize the expected loss (`objective = 0`) or the excess loss over the
/// infinite-data ridgeless floor (`objective = 1`) over the regularizer.
/// `grid_fallback` reports whether the dense-scan fallback produced the
/// result.
///
/// # Safety
/// All pointers must be valid.
#[no_mangle]
pub unsafe extern "C" fn moscale_optimize_lambda(
    problem: *const MoscaleProblem,
    n: u64,
    alpha: f64,
    objective: u32,
    lambda_star: *mut f64,
    value: *mut f64,
    grid_fallback: *mut u8,
) -> MoscaleStatus {
    let Some(p) = deref(problem) else {
        return MoscaleStatus::NullPointer;
    };
    if lambda_star.is_null() || value.is_null() || grid_fallback.is_null() {
        return MoscaleStatus::NullPointer;
    }
    let objective = match objective {
        0 => Objective::Loss,
        1 => Objective::Excess,
        _ => return MoscaleStatus::InvalidParameter,
    };
    match scaling::optimize_lambda_exact(p, n, alpha, objective) {
        Ok(opt) => {
            *lambda_star = opt.lambda;
            *value = opt.value;
            *grid_fallback = opt.grid_fallback as u8;
            MoscaleStatus::Ok
        }
        Err(e) => MoscaleStatus::from(&e),
    }
}

/// Warm-up entry threshold form `G_I^{-1/nu}`; writes C `INFINITY` and sets
/// `is_infinite` once `tau_i >= L*`.
///
/// # Safety
/// All pointers must be valid.
#[no_mangle]
pub unsafe extern "C" fn moscale_threshold_warmup(
    problem: *const MoscaleProblem,
    tau_i: f64,
    value: *mut f64,
    is_infinite: *mut u8,
) -> MoscaleStatus {
    let Some(p) = deref(problem) else {
        return MoscaleStatus::NullPointer;
    };
    if value.is_null() || is_infinite.is_null() {
        return MoscaleStatus::NullPointer;
    }
    match market::threshold_warmup(p, tau_i) {
        Ok(v) => {
            *value = v;
            *is_infinite = v.is_infinite() as u8;
            MoscaleStatus::Ok
        }
        Err(e) => MoscaleStatus::from(&e),
    }
}

/// Searched market-entry threshold. Dataset sizes use the `0 = infinite`
/// sentinel; safety caps use C `INFINITY` for "unconstrained". When
/// `safety_model_det` is nonzero the deterministic-equivalent safety
/// constraint is used. A threshold that does not exist sets `is_infinite`
/// and leaves `n_e_star` at 0.
///
/// # Safety
/// All pointers must be valid.
#[no_mangle]
pub unsafe extern "C" fn moscale_entry_threshold_search(
    problem: *const MoscaleProblem,
    n_i: u64,
    tau_i: f64,
    tau_e: f64,
    safety_model_det: u8,
    n_e_star: *mut u64,
    is_infinite: *mut u8,
) -> MoscaleStatus {
    let Some(p) = deref(problem) else {
        return MoscaleStatus::NullPointer;
    };
    if n_e_star.is_null() || is_infinite.is_null() {
        return MoscaleStatus::NullPointer;
    }
    let incumbent = CompanyConfig {
        n: sample_size(n_i),
        tau: tau_i,
    };
    let entrant = CompanyConfig {
        n: SampleSize::Finite(1),
        tau: tau_e,
    };
    let searched = if safety_model_det != 0 {
        market_ext::modified_threshold_search(p, &incumbent, &entrant)
    } else {
        market::entry_threshold_search(p, &incumbent, &entrant)
    };
    match searched {
        Ok(EntryThreshold::Finite(n)) => {
            *n_e_star = n;
            *is_infinite = 0;
            MoscaleStatus::Ok
        }
        Ok(EntryThreshold::Infinite) => {
            *n_e_star = 0;
            *is_infinite = 1;
            MoscaleStatus::Ok
        }
        Err(e) => MoscaleStatus::from(&e),
    }
}

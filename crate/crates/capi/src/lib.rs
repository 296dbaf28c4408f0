//! C ABI over the fiber analysis and solvers: flat structs for scalar
//! results, opaque handles for meshes and minimization results, and status
//! codes instead of Rust errors. Every entry point is panic-safe.
//!
//! Absent optional scalars (critical points the classification does not
//! produce) are reported as NaN.

use std::ffi::{CStr, c_char};
use std::panic::{AssertUnwindSafe, catch_unwind};
use std::sync::Arc;

use kirchhoff_fiber::fiber::{
    self, FiberClass, FiberInput, ProblemParams, classify_fiber, closed_form_thresholds,
};
use kirchhoff_fiber::function::discrete_sobolev_constant;
use kirchhoff_fiber::mesh::{Grading, RadialMesh};
use kirchhoff_fiber::solvers::{
    NehariConfig, NehariResult, SolverError, nehari_minus_minimize, standard_starts,
};

/// Status code of every fallible call.
#[repr(C)]
#[derive(Clone, Copy, PartialEq, Eq, Debug)]
pub enum KfStatus {
    Ok = 0,
    InvalidArgument = 1,
    /// The requested extremal parameter is non-positive for this direction
    /// (below the threshold hyperbola); the signed value is still written.
    Subcritical = 2,
    NehariEmpty = 3,
    NotConverged = 4,
    InternalError = 5,
}

/// Static description of a status code.
#[unsafe(no_mangle)]
pub extern "C" fn kf_status_message(status: KfStatus) -> *const c_char {
    let msg: &CStr = match status {
        KfStatus::Ok => c"ok",
        KfStatus::InvalidArgument => c"invalid argument",
        KfStatus::Subcritical => c"direction is below the threshold hyperbola",
        KfStatus::NehariEmpty => c"Nehari branch empty along every start",
        KfStatus::NotConverged => c"iteration finished without reaching tolerance",
        KfStatus::InternalError => c"internal error",
    };
    msg.as_ptr()
}

fn guarded(f: impl FnOnce() -> KfStatus) -> KfStatus {
    match catch_unwind(AssertUnwindSafe(f)) {
        Ok(status) => status,
        Err(_) => KfStatus::InternalError,
    }
}

/// Dimensional constants; see `kf_constants`.
#[repr(C)]
pub struct KfConstants {
    pub n: u32,
    pub two_star: f64,
    pub sobolev: f64,
    pub omega_n: f64,
    pub c1: f64,
    pub c2: f64,
}

/// Fills `out` with the constants for dimension `n >= 5`.
///
/// # Safety
/// `out` must point to writable memory for one `KfConstants`.
#[unsafe(no_mangle)]
pub unsafe extern "C" fn kf_constants(n: u32, out: *mut KfConstants) -> KfStatus {
    if out.is_null() {
        return KfStatus::InvalidArgument;
    }
    guarded(|| match kirchhoff_fiber::sobolev_constant(n) {
        Ok(c) => {
            unsafe {
                *out = KfConstants {
                    n,
                    two_star: c.two_star,
                    sobolev: c.sobolev,
                    omega_n: c.omega_n,
                    c1: c.c1,
                    c2: c.c2,
                };
            }
            KfStatus::Ok
        }
        Err(_) => KfStatus::InvalidArgument,
    })
}

/// Opaque problem definition `(N, a, b, lambda, p)`.
pub struct KfProblem {
    params: ProblemParams,
}

/// Creates a problem handle; fails on invalid parameters.
///
/// # Safety
/// `out` must be a valid pointer. The handle must be released with
/// `kf_problem_free`.
#[unsafe(no_mangle)]
pub unsafe extern "C" fn kf_problem_new(
    n: u32,
    a: f64,
    b: f64,
    lambda: f64,
    p: f64,
    out: *mut *mut KfProblem,
) -> KfStatus {
    if out.is_null() {
        return KfStatus::InvalidArgument;
    }
    guarded(|| match ProblemParams::new(n, a, b, lambda, p) {
        Ok(params) => {
            unsafe { *out = Box::into_raw(Box::new(KfProblem { params })) };
            KfStatus::Ok
        }
        Err(_) => KfStatus::InvalidArgument,
    })
}

/// # Safety
/// `problem` must come from `kf_problem_new` and not be freed twice.
#[unsafe(no_mangle)]
pub unsafe extern "C" fn kf_problem_free(problem: *mut KfProblem) {
    if !problem.is_null() {
        drop(unsafe { Box::from_raw(problem) });
    }
}

/// Fiber-map shape classification.
#[repr(C)]
#[derive(Clone, Copy, PartialEq, Eq, Debug)]
pub enum KfFiberClass {
    Increasing = 0,
    InflectionCritical = 1,
    TwoCritical = 2,
    SingleMax = 3,
}

/// Classification result; absent locations and energies are NaN.
#[repr(C)]
pub struct KfFiberReport {
    pub shape: KfFiberClass,
    pub t_minus: f64,
    pub t_plus: f64,
    pub t_degenerate: f64,
    pub energy_minus: f64,
    pub energy_plus: f64,
    /// Relative margin to the degenerate band.
    pub margin: f64,
}

/// Classifies the fiber map of the direction with norms
/// `A = ||u||^2`, `C = ||u||_{2*}^{2*}`, `P = ||u||_p^p`.
///
/// # Safety
/// `problem` must be a live handle, `out` a valid pointer.
#[unsafe(no_mangle)]
pub unsafe extern "C" fn kf_fiber_classify(
    problem: *const KfProblem,
    grad_sq: f64,
    crit_int: f64,
    pert_int: f64,
    out: *mut KfFiberReport,
) -> KfStatus {
    if problem.is_null() || out.is_null() {
        return KfStatus::InvalidArgument;
    }
    guarded(|| {
        let params = unsafe { (*problem).params };
        let input = FiberInput::unchecked(grad_sq, crit_int, pert_int, params);
        match classify_fiber(&input) {
            Ok(rep) => {
                let class = match rep.class {
                    FiberClass::Increasing => KfFiberClass::Increasing,
                    FiberClass::InflectionCritical => KfFiberClass::InflectionCritical,
                    FiberClass::TwoCritical => KfFiberClass::TwoCritical,
                    FiberClass::SingleMax => KfFiberClass::SingleMax,
                };
                unsafe {
                    *out = KfFiberReport {
                        shape: class,
                        t_minus: rep.t_minus.unwrap_or(f64::NAN),
                        t_plus: rep.t_plus.unwrap_or(f64::NAN),
                        t_degenerate: rep.t_degenerate.unwrap_or(f64::NAN),
                        energy_minus: rep.energy_minus.unwrap_or(f64::NAN),
                        energy_plus: rep.energy_plus.unwrap_or(f64::NAN),
                        margin: rep.margin,
                    };
                }
                KfStatus::Ok
            }
            Err(_) => KfStatus::InvalidArgument,
        }
    })
}

unsafe fn extremal_of_direction(
    problem: *const KfProblem,
    grad_sq: f64,
    crit_int: f64,
    pert_int: f64,
    lambda_out: *mut f64,
    t_out: *mut f64,
    which: fn(&FiberInput) -> Result<fiber::ExtremalOfDirection, fiber::FiberError>,
) -> KfStatus {
    if problem.is_null() || lambda_out.is_null() || t_out.is_null() {
        return KfStatus::InvalidArgument;
    }
    guarded(|| {
        let params = unsafe { (*problem).params };
        let input = FiberInput::unchecked(grad_sq, crit_int, pert_int, params);
        match which(&input) {
            Ok(v) => {
                unsafe {
                    *lambda_out = v.lambda;
                    *t_out = v.t;
                }
                if v.admissible { KfStatus::Ok } else { KfStatus::Subcritical }
            }
            Err(_) => KfStatus::InvalidArgument,
        }
    })
}

/// Unique `lambda0(u)`: the fiber has a zero-energy global minimum there.
/// Returns `KF_STATUS_SUBCRITICAL` (value still written) when it is
/// non-positive.
///
/// # Safety
/// All pointers must be valid; `problem` must be live.
#[unsafe(no_mangle)]
pub unsafe extern "C" fn kf_lambda0_of_direction(
    problem: *const KfProblem,
    grad_sq: f64,
    crit_int: f64,
    pert_int: f64,
    lambda_out: *mut f64,
    t_out: *mut f64,
) -> KfStatus {
    unsafe {
        extremal_of_direction(
            problem,
            grad_sq,
            crit_int,
            pert_int,
            lambda_out,
            t_out,
            fiber::lambda0_of_u,
        )
    }
}

/// Unique `lambda(u)`: the fiber has a degenerate critical point there.
///
/// # Safety
/// All pointers must be valid; `problem` must be live.
#[unsafe(no_mangle)]
pub unsafe extern "C" fn kf_lambda_of_direction(
    problem: *const KfProblem,
    grad_sq: f64,
    crit_int: f64,
    pert_int: f64,
    lambda_out: *mut f64,
    t_out: *mut f64,
) -> KfStatus {
    unsafe {
        extremal_of_direction(
            problem,
            grad_sq,
            crit_int,
            pert_int,
            lambda_out,
            t_out,
            fiber::lambda_of_u,
        )
    }
}

/// Closed-form `lambda = 0` thresholds of a direction.
#[repr(C)]
pub struct KfThresholds {
    pub zero_energy_t: f64,
    pub zero_energy_b: f64,
    pub degenerate_t: f64,
    pub degenerate_b: f64,
}

/// # Safety
/// `out` must be a valid pointer.
#[unsafe(no_mangle)]
pub unsafe extern "C" fn kf_closed_form_thresholds(
    n: u32,
    a: f64,
    grad_sq: f64,
    crit_int: f64,
    out: *mut KfThresholds,
) -> KfStatus {
    if out.is_null() {
        return KfStatus::InvalidArgument;
    }
    guarded(|| match closed_form_thresholds(n, a, grad_sq, crit_int) {
        Ok(cf) => {
            unsafe {
                *out = KfThresholds {
                    zero_energy_t: cf.zero_energy_t,
                    zero_energy_b: cf.zero_energy_b,
                    degenerate_t: cf.degenerate_t,
                    degenerate_b: cf.degenerate_b,
                };
            }
            KfStatus::Ok
        }
        Err(_) => KfStatus::InvalidArgument,
    })
}

/// Opaque radial mesh handle.
pub struct KfMesh {
    mesh: Arc<RadialMesh>,
}

/// Creates a radial mesh on the unit ball. `grading`: 0 uniform, 1 refined
/// (clustering at origin and boundary). `intervals >= 64`.
///
/// # Safety
/// `out` must be a valid pointer; release the handle with `kf_mesh_free`.
#[unsafe(no_mangle)]
pub unsafe extern "C" fn kf_mesh_new(
    n: u32,
    intervals: usize,
    grading: u32,
    out: *mut *mut KfMesh,
) -> KfStatus {
    if out.is_null() {
        return KfStatus::InvalidArgument;
    }
    let grading = match grading {
        0 => Grading::Uniform,
        1 => Grading::Refined,
        _ => return KfStatus::InvalidArgument,
    };
    guarded(|| match RadialMesh::new(n, intervals, grading) {
        Ok(mesh) => {
            unsafe { *out = Box::into_raw(Box::new(KfMesh { mesh: Arc::new(mesh) })) };
            KfStatus::Ok
        }
        Err(_) => KfStatus::InvalidArgument,
    })
}

/// # Safety
/// `mesh` must come from `kf_mesh_new` and not be freed twice.
#[unsafe(no_mangle)]
pub unsafe extern "C" fn kf_mesh_free(mesh: *mut KfMesh) {
    if !mesh.is_null() {
        drop(unsafe { Box::from_raw(mesh) });
    }
}

/// Number of nodes (`intervals + 1`).
///
/// # Safety
/// `mesh` must be a live handle.
#[unsafe(no_mangle)]
pub unsafe extern "C" fn kf_mesh_len(mesh: *const KfMesh) -> usize {
    if mesh.is_null() {
        return 0;
    }
    unsafe { (*mesh).mesh.nodes().len() }
}

/// Copies up to `len` node radii into `buf`; returns the full node count.
///
/// # Safety
/// `buf` must point to at least `len` writable doubles.
#[unsafe(no_mangle)]
pub unsafe extern "C" fn kf_mesh_nodes(mesh: *const KfMesh, buf: *mut f64, len: usize) -> usize {
    if mesh.is_null() || buf.is_null() {
        return 0;
    }
    let nodes = unsafe { (*mesh).mesh.nodes() };
    let m = nodes.len().min(len);
    unsafe { std::ptr::copy_nonoverlapping(nodes.as_ptr(), buf, m) };
    nodes.len()
}

/// Mesh-level Sobolev constant `S_h` by Rayleigh-quotient descent.
/// `KF_STATUS_NOT_CONVERGED` marks a resolution-limited stall; the best
/// value is still written.
///
/// # Safety
/// `mesh` must be live; `s_h_out` valid.
#[unsafe(no_mangle)]
pub unsafe extern "C" fn kf_sobolev_constant(mesh: *const KfMesh, s_h_out: *mut f64) -> KfStatus {
    if mesh.is_null() || s_h_out.is_null() {
        return KfStatus::InvalidArgument;
    }
    guarded(|| match discrete_sobolev_constant(unsafe { &(*mesh).mesh }) {
        Ok(est) => {
            unsafe { *s_h_out = est.value };
            if est.converged { KfStatus::Ok } else { KfStatus::NotConverged }
        }
        Err(_) => KfStatus::InternalError,
    })
}

/// Opaque result of a branch minimization.
pub struct KfNehariResult {
    result: NehariResult,
}

/// Minimizes the energy over the `N^-` branch with `n_starts` standard start
/// directions. On success the handle owns the minimizer.
///
/// # Safety
/// `problem` and `mesh` must be live handles; release the result with
/// `kf_nehari_free`.
#[unsafe(no_mangle)]
pub unsafe extern "C" fn kf_nehari_minimize(
    problem: *const KfProblem,
    mesh: *const KfMesh,
    n_starts: u32,
    seed: u64,
    out: *mut *mut KfNehariResult,
) -> KfStatus {
    if problem.is_null() || mesh.is_null() || out.is_null() {
        return KfStatus::InvalidArgument;
    }
    guarded(|| {
        let params = unsafe { (*problem).params };
        let mesh = unsafe { &(*mesh).mesh };
        let cfg = NehariConfig::default();
        let mut best: Option<NehariResult> = None;
        for start in standard_starts(mesh, n_starts.max(1) as usize, seed) {
            match nehari_minus_minimize(&params, mesh, &start, &cfg) {
                Ok(res) => {
                    if best.as_ref().is_none_or(|b| res.level < b.level) {
                        best = Some(res);
                    }
                }
                Err(SolverError::NehariEmptyAlongStart) => continue,
                Err(_) => return KfStatus::InternalError,
            }
        }
        match best {
            Some(result) => {
                let converged = result.converged;
                unsafe { *out = Box::into_raw(Box::new(KfNehariResult { result })) };
                if converged { KfStatus::Ok } else { KfStatus::NotConverged }
            }
            None => KfStatus::NehariEmpty,
        }
    })
}

/// # Safety
/// `result` must come from `kf_nehari_minimize` and not be freed twice.
#[unsafe(no_mangle)]
pub unsafe extern "C" fn kf_nehari_free(result: *mut KfNehariResult) {
    if !result.is_null() {
        drop(unsafe { Box::from_raw(result) });
    }
}

/// # Safety
/// `result` must be a live handle.
#[unsafe(no_mangle)]
pub unsafe extern "C" fn kf_nehari_level(result: *const KfNehariResult) -> f64 {
    if result.is_null() {
        return f64::NAN;
    }
    unsafe { (*result).result.level }
}

/// # Safety
/// `result` must be a live handle.
#[unsafe(no_mangle)]
pub unsafe extern "C" fn kf_nehari_residual(result: *const KfNehariResult) -> f64 {
    if result.is_null() {
        return f64::NAN;
    }
    unsafe { (*result).result.grad_residual }
}

/// # Safety
/// `result` must be a live handle.
#[unsafe(no_mangle)]
pub unsafe extern "C" fn kf_nehari_converged(result: *const KfNehariResult) -> bool {
    if result.is_null() {
        return false;
    }
    unsafe { (*result).result.converged }
}

/// Copies up to `len` nodal values of the minimizer into `buf`; returns the
/// full value count.
///
/// # Safety
/// `buf` must point to at least `len` writable doubles.
#[unsafe(no_mangle)]
pub unsafe extern "C" fn kf_nehari_minimizer(
    result: *const KfNehariResult,
    buf: *mut f64,
    len: usize,
) -> usize {
    if result.is_null() || buf.is_null() {
        return 0;
    }
    let values = unsafe { (*result).result.minimizer.values() };
    let m = values.len().min(len);
    unsafe { std::ptr::copy_nonoverlapping(values.as_ptr(), buf, m) };
    values.len()
}

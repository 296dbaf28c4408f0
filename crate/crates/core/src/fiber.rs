//! Scalar analysis of fiber maps for the energy of
//! `-(a + b ||grad u||^2) Lap u = |u|^{2*-2} u + lambda |u|^{p-2} u`.
//!
//! Along the ray `t u` the energy depends on `u` only through
//! `A = ||u||^2`, `C = ||u||_{2*}^{2*}` and `P = ||u||_p^p`, so everything in
//! this module is exact scalar work: classification of the fiber map
//!
//! ```text
//! psi(t) = a/2 A t^2 + b/4 A^2 t^4 - C/2* t^{2*} - lambda/p P t^p,
//! ```
//!
//! the auxiliary threshold functions `g`, `h`, the per-direction extremal
//! parameters `lambda0(u)` (zero-energy global minimum) and `lambda(u)`
//! (degenerate critical point), and the closed-form `lambda = 0` thresholds
//! in the Kirchhoff coefficient `b`.

use crate::constants::{self, Constants};
use crate::rootfind::{self, RootError};
use serde::{Deserialize, Serialize};
use thiserror::Error;

/// Relative band inside which a fiber map is declared degenerate
/// (exact equality is measure zero; a band is required).
pub const TOL_DEGENERATE: f64 = 1e-9;

#[derive(Debug, Error, PartialEq)]
pub enum FiberError {
    #[error("invalid parameters: {0}")]
    InvalidParams(String),
    #[error("invalid fiber input: {0}")]
    InvalidInput(String),
    #[error("operation requires b > 0")]
    KirchhoffTermRequired,
    #[error("operation requires a nonzero perturbation norm (P > 0)")]
    PerturbationRequired,
    #[error("root finding failed: {0}")]
    Root(#[from] RootError),
    #[error("internal consistency check failed: {0}")]
    Consistency(String),
}

/// The tuple `(N, a, b, lambda, p)` defining the problem.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ProblemParams {
    pub n: u32,
    pub a: f64,
    pub b: f64,
    pub lambda: f64,
    pub p: f64,
}

impl ProblemParams {
    pub fn new(n: u32, a: f64, b: f64, lambda: f64, p: f64) -> Result<Self, FiberError> {
        let params = Self { n, a, b, lambda, p };
        params.validate()?;
        Ok(params)
    }

    #[allow(clippy::neg_cmp_op_on_partial_ord)] // rejects NaN as well
    pub fn validate(&self) -> Result<(), FiberError> {
        if self.n < 5 {
            return Err(FiberError::InvalidParams(format!("N = {} < 5", self.n)));
        }
        if !(self.a > 0.0) {
            return Err(FiberError::InvalidParams(format!("a = {} <= 0", self.a)));
        }
        if !(self.b >= 0.0) {
            return Err(FiberError::InvalidParams(format!("b = {} < 0", self.b)));
        }
        if !(self.lambda >= 0.0) {
            return Err(FiberError::InvalidParams(format!(
                "lambda = {} < 0",
                self.lambda
            )));
        }
        let ts = self.two_star();
        if !(self.p > 2.0 && self.p < ts) {
            return Err(FiberError::InvalidParams(format!(
                "p = {} outside (2, {ts})",
                self.p
            )));
        }
        Ok(())
    }

    /// Critical exponent `2N/(N-2)`; below 4 since `N > 4`.
    pub fn two_star(&self) -> f64 {
        2.0 * self.n as f64 / (self.n as f64 - 2.0)
    }

    pub fn with_lambda(mut self, lambda: f64) -> Self {
        self.lambda = lambda;
        self
    }

    pub fn with_b(mut self, b: f64) -> Self {
        self.b = b;
        self
    }

    pub fn constants(&self) -> Constants {
        constants::sobolev_constant(self.n).expect("validated N >= 5")
    }
}

/// Reduced functional data of a direction: `A = ||u||^2`,
/// `C = ||u||_{2*}^{2*}`, `P = ||u||_p^p`.
#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
pub struct FiberInput {
    pub grad_sq: f64,
    pub crit_int: f64,
    pub pert_int: f64,
    pub params: ProblemParams,
}

impl FiberInput {
    /// Validating constructor; rejects data violating the exact Sobolev
    /// inequality `C <= S_N^{-2*/2} A^{2*/2}`.
    pub fn new(
        grad_sq: f64,
        crit_int: f64,
        pert_int: f64,
        params: ProblemParams,
    ) -> Result<Self, FiberError> {
        params.validate()?;
        let input = Self::unchecked(grad_sq, crit_int, pert_int, params);
        input.validate_positivity()?;
        let ts = params.two_star();
        let bound = params.constants().sobolev.powf(-ts / 2.0) * grad_sq.powf(ts / 2.0);
        if crit_int > bound * (1.0 + 1e-9) {
            return Err(FiberError::InvalidInput(format!(
                "C = {crit_int} exceeds the Sobolev bound {bound}"
            )));
        }
        Ok(input)
    }

    /// Constructor for mesh-derived data. Discrete norms satisfy the
    /// mesh-level inequality `C <= S_h^{-2*/2} A^{2*/2}` by definition of
    /// `S_h`, which may sit slightly on either side of the exact bound.
    pub fn unchecked(grad_sq: f64, crit_int: f64, pert_int: f64, params: ProblemParams) -> Self {
        Self { grad_sq, crit_int, pert_int, params }
    }

    #[allow(clippy::neg_cmp_op_on_partial_ord)] // rejects NaN as well
    fn validate_positivity(&self) -> Result<(), FiberError> {
        if !(self.grad_sq > 0.0) || !(self.crit_int > 0.0) || !(self.pert_int >= 0.0) {
            return Err(FiberError::InvalidInput(format!(
                "need A > 0, C > 0, P >= 0; got A = {}, C = {}, P = {}",
                self.grad_sq, self.crit_int, self.pert_int
            )));
        }
        Ok(())
    }

    /// The scaling `u -> mu u`, i.e. `(A, C, P) -> (mu^2 A, mu^{2*} C, mu^p P)`.
    pub fn scaled(&self, mu: f64) -> Self {
        let ts = self.params.two_star();
        Self {
            grad_sq: mu * mu * self.grad_sq,
            crit_int: mu.powf(ts) * self.crit_int,
            pert_int: mu.powf(self.params.p) * self.pert_int,
            params: self.params,
        }
    }

    pub fn with_lambda(mut self, lambda: f64) -> Self {
        self.params.lambda = lambda;
        self
    }

    /// `psi(t)`, the energy along the ray.
    pub fn psi(&self, t: f64) -> f64 {
        let pp = &self.params;
        let ts = pp.two_star();
        0.5 * pp.a * self.grad_sq * t * t + 0.25 * pp.b * self.grad_sq * self.grad_sq * t.powi(4)
            - self.crit_int / ts * t.powf(ts)
            - pp.lambda / pp.p * self.pert_int * t.powf(pp.p)
    }

    /// `psi'(t)`.
    pub fn dpsi(&self, t: f64) -> f64 {
        let pp = &self.params;
        let ts = pp.two_star();
        pp.a * self.grad_sq * t + pp.b * self.grad_sq * self.grad_sq * t.powi(3)
            - self.crit_int * t.powf(ts - 1.0)
            - pp.lambda * self.pert_int * t.powf(pp.p - 1.0)
    }

    /// `psi''(t)`.
    pub fn d2psi(&self, t: f64) -> f64 {
        let pp = &self.params;
        let ts = pp.two_star();
        pp.a * self.grad_sq + 3.0 * pp.b * self.grad_sq * self.grad_sq * t * t
            - (ts - 1.0) * self.crit_int * t.powf(ts - 2.0)
            - pp.lambda * (pp.p - 1.0) * self.pert_int * t.powf(pp.p - 2.0)
    }

    /// Magnitude scale of `psi'(t)`: the sum of the absolute values of its
    /// four terms, used to normalize residuals.
    pub fn dpsi_scale(&self, t: f64) -> f64 {
        let pp = &self.params;
        let ts = pp.two_star();
        pp.a * self.grad_sq * t
            + pp.b * self.grad_sq * self.grad_sq * t.powi(3)
            + self.crit_int * t.powf(ts - 1.0)
            + pp.lambda * self.pert_int * t.powf(pp.p - 1.0)
    }

    /// `phi(t) = -b A^2 t^2 + C t^{2*-2} + lambda P t^{p-2}`, so that
    /// `psi'(t) = t (a A - phi(t))`.
    fn phi(&self, t: f64) -> f64 {
        let pp = &self.params;
        let ts = pp.two_star();
        -pp.b * self.grad_sq * self.grad_sq * t * t
            + self.crit_int * t.powf(ts - 2.0)
            + pp.lambda * self.pert_int * t.powf(pp.p - 2.0)
    }

    /// Unique maximizer of `phi` (requires `b > 0`).
    fn phi_argmax(&self) -> Result<f64, FiberError> {
        let pp = &self.params;
        let ts = pp.two_star();
        let (a2, c, lp) = (
            pp.b * self.grad_sq * self.grad_sq,
            self.crit_int,
            pp.lambda * self.pert_int,
        );
        debug_assert!(pp.b > 0.0);
        if lp == 0.0 {
            return Ok(((ts - 2.0) * c / (2.0 * a2)).powf(1.0 / (4.0 - ts)));
        }
        // phi'(t) t^{3-p} = -2 b A^2 t^{4-p} + (2*-2) C t^{2*-p} + (p-2) lambda P,
        // increasing then decreasing, so its unique root lies right of the
        // turning point t_c.
        let p = pp.p;
        let s = |t: f64| -2.0 * a2 * t.powf(4.0 - p) + (ts - 2.0) * c * t.powf(ts - p) + (p - 2.0) * lp;
        let ds = |t: f64| {
            -2.0 * (4.0 - p) * a2 * t.powf(3.0 - p) + (ts - p) * (ts - 2.0) * c * t.powf(ts - p - 1.0)
        };
        let t_c = ((ts - p) * (ts - 2.0) * c / (2.0 * (4.0 - p) * a2)).powf(1.0 / (4.0 - ts));
        let hi = rootfind::expand_up(2.0 * t_c, |t| s(t) < 0.0)?;
        Ok(rootfind::newton_bisect(s, ds, t_c, hi)?.t)
    }
}

/// Shape classification of a fiber map.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum FiberClass {
    /// No critical points, `psi` strictly increasing.
    Increasing,
    /// One degenerate critical point (`psi' = psi'' = 0`), `psi` increasing.
    InflectionCritical,
    /// Local maximum `t^-` followed by local minimum `t^+`.
    TwoCritical,
    /// One critical point, a global maximum; occurs only when `b = 0`.
    SingleMax,
}

/// Output of [`classify_fiber`].
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct FiberReport {
    pub class: FiberClass,
    pub t_minus: Option<f64>,
    pub t_plus: Option<f64>,
    pub t_degenerate: Option<f64>,
    pub energy_minus: Option<f64>,
    pub energy_plus: Option<f64>,
    /// `|psi'|` at the reported roots, scaled by the term magnitudes.
    pub residual_minus: Option<f64>,
    pub residual_plus: Option<f64>,
    /// Relative margin `(a A - max phi) / max(a A, max phi)`. Negative in the
    /// two-critical case; within [`TOL_DEGENERATE`] of zero in the degenerate
    /// band. `+1` for the `b = 0` single-maximum class.
    pub margin: f64,
}

fn solve_dpsi_root(input: &FiberInput, lo: f64, hi: f64) -> Result<(f64, f64), FiberError> {
    let root = rootfind::newton_bisect(|t| input.dpsi(t), |t| input.d2psi(t), lo, hi)?;
    let scaled = root.residual / input.dpsi_scale(root.t);
    if scaled > rootfind::TOL_RESIDUAL {
        return Err(FiberError::Consistency(format!(
            "scaled residual {scaled:e} at t = {} exceeds tolerance",
            root.t
        )));
    }
    Ok((root.t, scaled))
}

/// A point with `psi'(t) > 0` below the first critical point, from the
/// dominant balance `a A > C t^{2*-2} + lambda P t^{p-2}`: each forcing term
/// is pinned under `a A / 2.5` analytically. For `p` close to 2 this point
/// can be extremely small, which geometric contraction would never reach.
#[allow(clippy::neg_cmp_op_on_partial_ord)] // rejects NaN as well
fn lower_slope_point(input: &FiberInput, cap: f64) -> Result<f64, FiberError> {
    let pp = &input.params;
    let ts = pp.two_star();
    let aa = pp.a * input.grad_sq;
    let mut t = (aa / (2.5 * input.crit_int)).powf(1.0 / (ts - 2.0));
    let lp = pp.lambda * input.pert_int;
    if lp > 0.0 {
        t = t.min((aa / (2.5 * lp)).powf(1.0 / (pp.p - 2.0)));
    }
    t = t.min(cap);
    if !(t > 0.0) || !t.is_finite() {
        return Err(FiberError::Consistency(format!(
            "positive-slope neighborhood underflows (t = {t:e})"
        )));
    }
    if input.dpsi(t) > 0.0 {
        Ok(t)
    } else {
        // Rounding pathologies only; contract a little further.
        Ok(rootfind::contract_down(t, |s| input.dpsi(s) > 0.0)?)
    }
}

/// Classifies the fiber map of `input` and locates its critical points.
pub fn classify_fiber(input: &FiberInput) -> Result<FiberReport, FiberError> {
    input.params.validate()?;
    input.validate_positivity()?;
    let pp = &input.params;
    if pp.b == 0.0 {
        // Only the single-maximum shape occurs without the quartic term. The
        // closed-form lambda = 0 root overestimates the true one, but only
        // reaches it exactly when lambda P = 0, so expand past it for a
        // strict sign change.
        let aa = pp.a * input.grad_sq;
        let t1 = (aa / input.crit_int).powf(1.0 / (pp.two_star() - 2.0));
        let lo = lower_slope_point(input, 0.5 * t1)?;
        let hi = rootfind::expand_up(t1, |t| input.dpsi(t) < 0.0)?;
        let (t, residual) = solve_dpsi_root(input, lo, hi)?;
        return Ok(FiberReport {
            class: FiberClass::SingleMax,
            t_minus: Some(t),
            t_plus: None,
            t_degenerate: None,
            energy_minus: Some(input.psi(t)),
            energy_plus: None,
            residual_minus: Some(residual),
            residual_plus: None,
            margin: 1.0,
        });
    }

    let t_star = input.phi_argmax()?;
    let aa = pp.a * input.grad_sq;
    let phi_max = input.phi(t_star);
    let margin = (aa - phi_max) / aa.max(phi_max);

    if margin.abs() <= TOL_DEGENERATE {
        return Ok(FiberReport {
            class: FiberClass::InflectionCritical,
            t_minus: None,
            t_plus: None,
            t_degenerate: Some(t_star),
            energy_minus: None,
            energy_plus: None,
            residual_minus: None,
            residual_plus: None,
            margin,
        });
    }
    if margin > 0.0 {
        return Ok(FiberReport {
            class: FiberClass::Increasing,
            t_minus: None,
            t_plus: None,
            t_degenerate: None,
            energy_minus: None,
            energy_plus: None,
            residual_minus: None,
            residual_plus: None,
            margin,
        });
    }

    let lo = lower_slope_point(input, 0.5 * t_star)?;
    let (t_minus, res_minus) = solve_dpsi_root(input, lo, t_star)?;
    // The coercive tail guarantees psi' > 0 for large t.
    let hi = rootfind::expand_up(2.0 * t_star, |t| input.dpsi(t) > 0.0)?;
    let (t_plus, res_plus) = solve_dpsi_root(input, t_star, hi)?;
    debug_assert!(input.d2psi(t_minus) < 0.0 && input.d2psi(t_plus) > 0.0);
    Ok(FiberReport {
        class: FiberClass::TwoCritical,
        t_minus: Some(t_minus),
        t_plus: Some(t_plus),
        t_degenerate: None,
        energy_minus: Some(input.psi(t_minus)),
        energy_plus: Some(input.psi(t_plus)),
        residual_minus: Some(res_minus),
        residual_plus: Some(res_plus),
        margin,
    })
}

/// `inf_{t>0} psi(t)`; zero unless the fiber has a local minimum with
/// negative energy (`psi -> 0` at the origin).
pub fn fiber_infimum(input: &FiberInput) -> Result<f64, FiberError> {
    let report = classify_fiber(input)?;
    Ok(match report.class {
        FiberClass::TwoCritical => report.energy_plus.unwrap().min(0.0),
        FiberClass::SingleMax => f64::NEG_INFINITY,
        _ => 0.0,
    })
}

/// Analysis of the threshold functions `g`, `h` and of `t^2 g(t)`.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct GhAnalysis {
    /// Minimizer of `g` and the minimum value; `g(t0) > 0` iff the parameter
    /// product exceeds `C1`.
    pub t0_g: f64,
    pub g_min: f64,
    /// Minimizer of `h` and the minimum value; thresholded by `C2`.
    pub t0_h: f64,
    pub h_min: f64,
    /// Critical points of `t^2 g(t)`: present below the `C2` hyperbola,
    /// degenerate on it, absent above.
    pub t_ab_minus: Option<f64>,
    pub t_ab_plus: Option<f64>,
    pub t_ab_degenerate: Option<f64>,
    /// `(2*-2)^2 a^2 / (4 2* (4-2*) b)`, the degenerate-branch energy level.
    pub c0_level: f64,
}

/// Evaluates `g(t) = a/2 + b/4 t^2 - S^{-2*/2} t^{2*-2}/2*`.
pub fn g_value(params: &ProblemParams, s: f64, t: f64) -> f64 {
    let ts = params.two_star();
    0.5 * params.a + 0.25 * params.b * t * t - s.powf(-ts / 2.0) * t.powf(ts - 2.0) / ts
}

/// Evaluates `h(t) = a + b t^2 - S^{-2*/2} t^{2*-2}`.
pub fn h_value(params: &ProblemParams, s: f64, t: f64) -> f64 {
    let ts = params.two_star();
    params.a + params.b * t * t - s.powf(-ts / 2.0) * t.powf(ts - 2.0)
}

/// Minimizers of `g` and `h`, the critical points of `t^2 g(t)`, and the
/// degenerate level `c0`. The supplied [`Constants`] decide whether exact or
/// mesh-level thresholds are used.
pub fn g_h_analysis(params: &ProblemParams, consts: &Constants) -> Result<GhAnalysis, FiberError> {
    params.validate()?;
    if params.b == 0.0 {
        return Err(FiberError::KirchhoffTermRequired);
    }
    let ts = params.two_star();
    let s = consts.sobolev;
    let t0_g = (ts * params.b * s.powf(ts / 2.0) / (2.0 * (ts - 2.0))).powf(1.0 / (ts - 4.0));
    let t0_h = (2.0 * params.b * s.powf(ts / 2.0) / (ts - 2.0)).powf(1.0 / (ts - 4.0));
    let g_min = g_value(params, s, t0_g);
    let h_min = h_value(params, s, t0_h);
    let c0_level =
        (ts - 2.0).powi(2) * params.a * params.a / (4.0 * ts * (4.0 - ts) * params.b);

    // (t^2 g)' = t h(t): the critical points of t^2 g are the roots of h.
    let product = consts.parameter_product(params.a, params.b);
    let band = 1e-9 * consts.c2;
    let (mut minus, mut plus, mut degenerate) = (None, None, None);
    if (product - consts.c2).abs() <= band {
        degenerate = Some(t0_h);
    } else if product < consts.c2 {
        let h = |t: f64| h_value(params, s, t);
        let dh = |t: f64| 2.0 * params.b * t - (ts - 2.0) * s.powf(-ts / 2.0) * t.powf(ts - 3.0);
        let lo = rootfind::contract_down(0.5 * t0_h, |t| h(t) > 0.0)?;
        minus = Some(rootfind::newton_bisect(h, dh, lo, t0_h)?.t);
        let hi = rootfind::expand_up(2.0 * t0_h, |t| h(t) > 0.0)?;
        plus = Some(rootfind::newton_bisect(h, dh, t0_h, hi)?.t);
    }
    Ok(GhAnalysis {
        t0_g,
        g_min,
        t0_h,
        h_min,
        t_ab_minus: minus,
        t_ab_plus: plus,
        t_ab_degenerate: degenerate,
        c0_level,
    })
}

/// A per-direction extremal parameter value with the fiber location realizing it.
#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
pub struct ExtremalOfDirection {
    pub lambda: f64,
    pub t: f64,
    /// False when the direction sits below the relevant `b`-threshold, in
    /// which case `lambda` is reported with its (non-positive) sign rather
    /// than raised as an error.
    pub admissible: bool,
}

/// Unique `lambda0(u) ` with `psi(t) = psi'(t) = 0` at the global fiber
/// minimum. For the power nonlinearity the system is linear in `lambda`, so
/// `lambda` is eliminated and a single scalar root remains.
pub fn lambda0_of_u(input: &FiberInput) -> Result<ExtremalOfDirection, FiberError> {
    let (t, lambda) = eliminated_root(input, EliminationTarget::ZeroEnergy)?;
    let admissible = lambda > 0.0;
    if admissible {
        probe_lambda0(input, lambda)?;
    }
    Ok(ExtremalOfDirection { lambda, t, admissible })
}

/// Unique `lambda(u)` with `psi'(t) = psi''(t) = 0` (degenerate critical
/// point); always strictly below `lambda0(u)`.
pub fn lambda_of_u(input: &FiberInput) -> Result<ExtremalOfDirection, FiberError> {
    let (t, lambda) = eliminated_root(input, EliminationTarget::ZeroSlope)?;
    Ok(ExtremalOfDirection { lambda, t, admissible: lambda > 0.0 })
}

enum EliminationTarget {
    ZeroEnergy,
    ZeroSlope,
}

/// Shared elimination: both 2x2 systems reduce, after substituting the
/// `lambda` that kills the first equation at `t`, to
/// `alpha a A + beta b A^2 t^2 - gamma C t^{2*-2} = 0` with `alpha < 0` and
/// `beta, gamma > 0`, which has exactly one positive root.
fn eliminated_root(
    input: &FiberInput,
    target: EliminationTarget,
) -> Result<(f64, f64), FiberError> {
    input.params.validate()?;
    input.validate_positivity()?;
    let pp = &input.params;
    if pp.b == 0.0 {
        return Err(FiberError::KirchhoffTermRequired);
    }
    if input.pert_int == 0.0 {
        return Err(FiberError::PerturbationRequired);
    }
    let ts = pp.two_star();
    let p = pp.p;
    let (alpha, beta, gamma) = match target {
        EliminationTarget::ZeroEnergy => (1.0 - p / 2.0, 1.0 - p / 4.0, 1.0 - p / ts),
        EliminationTarget::ZeroSlope => (2.0 - p, 4.0 - p, ts - p),
    };
    let aa = pp.a * input.grad_sq;
    let ba2 = pp.b * input.grad_sq * input.grad_sq;
    let c = input.crit_int;
    let r = |t: f64| alpha * aa + beta * ba2 * t * t - gamma * c * t.powf(ts - 2.0);
    let dr = |t: f64| 2.0 * beta * ba2 * t - gamma * (ts - 2.0) * c * t.powf(ts - 3.0);
    // r decreases from alpha a A < 0 to its minimum at t_m, then increases to
    // +infinity, so the root sits right of t_m.
    let t_m = (gamma * (ts - 2.0) * c / (2.0 * beta * ba2)).powf(1.0 / (4.0 - ts));
    let hi = rootfind::expand_up(2.0 * t_m, |t| r(t) > 0.0)?;
    let root = rootfind::newton_bisect(r, dr, t_m, hi)?;
    let t = root.t;
    let lambda = match target {
        EliminationTarget::ZeroEnergy => {
            let zero = input.with_lambda(0.0);
            p * zero.psi(t) / (input.pert_int * t.powf(p))
        }
        EliminationTarget::ZeroSlope => {
            (aa + ba2 * t * t - c * t.powf(ts - 2.0)) / (input.pert_int * t.powf(p - 2.0))
        }
    };
    Ok((t, lambda))
}

/// Monotone consistency probes: above `lambda0` the fiber infimum turns
/// negative, below it stays zero.
fn probe_lambda0(input: &FiberInput, lambda0: f64) -> Result<(), FiberError> {
    let above = fiber_infimum(&input.with_lambda(1.1 * lambda0))?;
    if above >= 0.0 {
        return Err(FiberError::Consistency(format!(
            "inf psi at 1.1 lambda0 is {above:e}, expected < 0"
        )));
    }
    let below = fiber_infimum(&input.with_lambda(0.9 * lambda0))?;
    let scale = input.params.a * input.grad_sq;
    if below.abs() > 1e-9 * scale.max(1.0) {
        return Err(FiberError::Consistency(format!(
            "inf psi at 0.9 lambda0 is {below:e}, expected 0"
        )));
    }
    Ok(())
}

/// Closed-form `lambda = 0` thresholds of a direction, Appendix-style:
/// `(zero_energy_t, zero_energy_b)` solve `psi = psi' = 0` in `(t, b)` and
/// `(degenerate_t, degenerate_b)` solve `psi' = psi'' = 0`.
#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
pub struct ClosedFormThresholds {
    pub zero_energy_t: f64,
    pub zero_energy_b: f64,
    pub degenerate_t: f64,
    pub degenerate_b: f64,
}

/// Evaluates the four closed forms for a direction with data
/// `A = ||u||^2`, `C = ||u||_{2*}^{2*}` at Kirchhoff constant `a`.
pub fn closed_form_thresholds(
    n: u32,
    a: f64,
    grad_sq: f64,
    crit_int: f64,
) -> Result<ClosedFormThresholds, FiberError> {
    if a <= 0.0 || grad_sq <= 0.0 || crit_int <= 0.0 {
        return Err(FiberError::InvalidInput(
            "need a, A, C > 0".into(),
        ));
    }
    let consts = constants::sobolev_constant(n)
        .map_err(|e| FiberError::InvalidParams(e.to_string()))?;
    let ts = consts.two_star;
    let nf = n as f64;
    let ratio = grad_sq / crit_int;
    let shape = (crit_int.powf(1.0 / ts) / grad_sq.sqrt()).powf(nf);
    let b_common = a.powf((4.0 - nf) / 2.0) * consts.sobolev.powf(nf / 2.0) * shape;
    Ok(ClosedFormThresholds {
        zero_energy_t: (ts * a / (4.0 - ts) * ratio).powf(1.0 / (ts - 2.0)),
        zero_energy_b: b_common * consts.c1,
        degenerate_t: (2.0 * a / (4.0 - ts) * ratio).powf(1.0 / (ts - 2.0)),
        degenerate_b: b_common * consts.c2,
    })
}

/// Lower bound `(p-2)^2 a^2 / (4 p (4-p) b)` for the energy of almost-
/// degenerate Nehari sequences; used as a gate for the second solution.
pub fn sigma_lower_bound(params: &ProblemParams) -> Result<f64, FiberError> {
    params.validate()?;
    if params.b == 0.0 {
        return Err(FiberError::KirchhoffTermRequired);
    }
    let p = params.p;
    Ok((p - 2.0).powi(2) * params.a * params.a / (4.0 * p * (4.0 - p) * params.b))
}

pub mod hook {
    //! Pluggable scalar perturbation: the fiber engine for a general
    //! nonlinearity only needs `rho(t) = int F(x, t u)` and two derivatives.
    //! The shipped and tested case is the pure power; the generic path solves
    //! the extremal systems by 2-D Newton instead of the power elimination.

    use super::FiberError;

    pub trait PerturbationProfile {
        /// `rho(t) = int F(x, t u)`.
        fn value(&self, t: f64) -> f64;
        /// `rho'(t) = int f(x, t u) u`.
        fn deriv(&self, t: f64) -> f64;
        fn second(&self, t: f64) -> f64;
    }

    /// `F(x, v) = |v|^p / p` with `int |u|^p = pert_int`.
    #[derive(Debug, Clone, Copy)]
    pub struct PowerProfile {
        pub p: f64,
        pub pert_int: f64,
    }

    impl PerturbationProfile for PowerProfile {
        fn value(&self, t: f64) -> f64 {
            self.pert_int * t.powf(self.p) / self.p
        }
        fn deriv(&self, t: f64) -> f64 {
            self.pert_int * t.powf(self.p - 1.0)
        }
        fn second(&self, t: f64) -> f64 {
            self.pert_int * (self.p - 1.0) * t.powf(self.p - 2.0)
        }
    }

    /// Unperturbed fiber core `k(t) = a/2 A t^2 + b/4 A^2 t^4 - C/2* t^{2*}`.
    #[derive(Debug, Clone, Copy)]
    pub struct FiberCore {
        pub aa: f64,
        pub ba2: f64,
        pub crit_int: f64,
        pub two_star: f64,
    }

    impl FiberCore {
        pub fn k(&self, t: f64) -> f64 {
            0.5 * self.aa * t * t + 0.25 * self.ba2 * t.powi(4)
                - self.crit_int / self.two_star * t.powf(self.two_star)
        }
        pub fn dk(&self, t: f64) -> f64 {
            self.aa * t + self.ba2 * t.powi(3) - self.crit_int * t.powf(self.two_star - 1.0)
        }
        pub fn d2k(&self, t: f64) -> f64 {
            self.aa + 3.0 * self.ba2 * t * t
                - (self.two_star - 1.0) * self.crit_int * t.powf(self.two_star - 2.0)
        }
        pub fn d3k(&self, t: f64) -> f64 {
            6.0 * self.ba2 * t
                - (self.two_star - 1.0) * (self.two_star - 2.0)
                    * self.crit_int
                    * t.powf(self.two_star - 3.0)
        }
    }

    /// 2-D Newton on `(t, lambda)` for `k - lambda rho = 0`, `k' - lambda rho' = 0`.
    pub fn zero_energy_newton(
        core: &FiberCore,
        rho: &dyn PerturbationProfile,
        t0: f64,
        lambda0: f64,
    ) -> Result<(f64, f64), FiberError> {
        newton_2d(
            |t, l| (core.k(t) - l * rho.value(t), core.dk(t) - l * rho.deriv(t)),
            |t, l| {
                (
                    core.dk(t) - l * rho.deriv(t),
                    -rho.value(t),
                    core.d2k(t) - l * rho.second(t),
                    -rho.deriv(t),
                )
            },
            t0,
            lambda0,
        )
    }

    /// 2-D Newton on `(t, lambda)` for `k' - lambda rho' = 0`, `k'' - lambda rho'' = 0`.
    pub fn degenerate_newton(
        core: &FiberCore,
        rho: &dyn PerturbationProfile,
        t0: f64,
        lambda0: f64,
    ) -> Result<(f64, f64), FiberError> {
        let h = 1e-6;
        let rho3 = |t: f64| (rho.second(t + h * t) - rho.second(t - h * t)) / (2.0 * h * t);
        newton_2d(
            |t, l| (core.dk(t) - l * rho.deriv(t), core.d2k(t) - l * rho.second(t)),
            |t, l| {
                (
                    core.d2k(t) - l * rho.second(t),
                    -rho.deriv(t),
                    core.d3k(t) - l * rho3(t),
                    -rho.second(t),
                )
            },
            t0,
            lambda0,
        )
    }

    #[allow(clippy::neg_cmp_op_on_partial_ord)] // rejects NaN as well
    fn newton_2d(
        f: impl Fn(f64, f64) -> (f64, f64),
        jac: impl Fn(f64, f64) -> (f64, f64, f64, f64),
        mut t: f64,
        mut l: f64,
    ) -> Result<(f64, f64), FiberError> {
        for _ in 0..100 {
            let (f1, f2) = f(t, l);
            let (j11, j12, j21, j22) = jac(t, l);
            let det = j11 * j22 - j12 * j21;
            if det == 0.0 || !det.is_finite() {
                return Err(FiberError::Consistency("singular Jacobian".into()));
            }
            let dt = (f1 * j22 - f2 * j12) / det;
            let dl = (j11 * f2 - j21 * f1) / det;
            t -= dt;
            l -= dl;
            if !(t > 0.0) || !t.is_finite() || !l.is_finite() {
                return Err(FiberError::Consistency("Newton left the domain".into()));
            }
            if dt.abs() <= 1e-14 * t.abs().max(1.0) && dl.abs() <= 1e-14 * l.abs().max(1.0) {
                return Ok((t, l));
            }
        }
        Err(FiberError::Consistency("2-D Newton did not converge".into()))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn params(a: f64, b: f64, lambda: f64) -> ProblemParams {
        ProblemParams::new(5, a, b, lambda, 3.0).unwrap()
    }

    fn input(grad_sq: f64, crit_int: f64, pert_int: f64, pp: ProblemParams) -> FiberInput {
        FiberInput::unchecked(grad_sq, crit_int, pert_int, pp)
    }

    /// Independent oracle: sign pattern of psi' on a dense log grid, with a
    /// local refinement of the minimum so that shallow dips are not missed.
    pub(crate) fn sign_scan_class(input: &FiberInput, t_star_hint: f64) -> FiberClass {
        let (lo, hi) = (1e-6 * t_star_hint, 1e3 * t_star_hint);
        let n = 2000;
        let ratio = (hi / lo).powf(1.0 / (n - 1) as f64);
        let mut t = lo;
        let mut min_val = f64::INFINITY;
        let mut min_idx = 0;
        let mut ts = Vec::with_capacity(n);
        let mut saw_negative = false;
        let mut negative_tail = false;
        for i in 0..n {
            ts.push(t);
            let v = input.dpsi(t) / input.dpsi_scale(t);
            if v < min_val {
                min_val = v;
                min_idx = i;
            }
            if v < 0.0 {
                saw_negative = true;
            }
            if i == n - 1 {
                negative_tail = v < 0.0;
            }
            t *= ratio;
        }
        if !saw_negative {
            // Ternary refinement of the scanned minimum catches dips narrower
            // than the grid spacing.
            let lo_i = min_idx.saturating_sub(1);
            let hi_i = (min_idx + 1).min(n - 1);
            let (mut a, mut b) = (ts[lo_i], ts[hi_i]);
            for _ in 0..200 {
                let m1 = a + (b - a) / 3.0;
                let m2 = b - (b - a) / 3.0;
                let f1 = input.dpsi(m1) / input.dpsi_scale(m1);
                let f2 = input.dpsi(m2) / input.dpsi_scale(m2);
                if f1.min(f2) < min_val {
                    min_val = f1.min(f2);
                }
                if f1 < f2 {
                    b = m2;
                } else {
                    a = m1;
                }
            }
        }
        if negative_tail {
            FiberClass::SingleMax
        } else if saw_negative || min_val < -1e-13 {
            FiberClass::TwoCritical
        } else {
            FiberClass::Increasing
        }
    }

    #[test]
    fn rejects_bad_params() {
        assert!(ProblemParams::new(4, 1.0, 1.0, 0.0, 3.0).is_err());
        assert!(ProblemParams::new(5, 0.0, 1.0, 0.0, 3.0).is_err());
        assert!(ProblemParams::new(5, 1.0, -0.1, 0.0, 3.0).is_err());
        assert!(ProblemParams::new(5, 1.0, 1.0, -1.0, 3.0).is_err());
        assert!(ProblemParams::new(5, 1.0, 1.0, 0.0, 2.0).is_err());
        assert!(ProblemParams::new(5, 1.0, 1.0, 0.0, 3.5).is_err()); // >= 2* = 10/3
    }

    #[test]
    fn input_validates_sobolev_consistency() {
        let pp = params(1.0, 0.1, 0.0);
        // The exact bound is C <= S_5^{-5/3} A^{5/3} ~ 0.011 A^{5/3}, so
        // A = C = 1 violates it.
        assert!(FiberInput::new(1.0, 1.0, 1.0, pp).is_err());
        let s = pp.constants().sobolev;
        let bound = s.powf(-pp.two_star() / 2.0);
        assert!(FiberInput::new(1.0, 0.9 * bound, 1.0, pp).is_ok());
    }

    #[test]
    fn classify_examples_match_thresholds() {
        // A = C = 1, lambda = 0: threshold b(u) = S_5^{5/2} C2(5) = 2/3^{3/2}.
        let b_u = 2.0 / 3f64.powf(1.5);
        let rep = classify_fiber(&input(1.0, 1.0, 1.0, params(1.0, 0.5, 0.0))).unwrap();
        assert_eq!(rep.class, FiberClass::Increasing);
        assert!(0.5 > b_u);

        let rep = classify_fiber(&input(1.0, 1.0, 1.0, params(1.0, 0.1, 0.0))).unwrap();
        assert_eq!(rep.class, FiberClass::TwoCritical);
        assert!(0.1 < b_u);
        let (tm, tp) = (rep.t_minus.unwrap(), rep.t_plus.unwrap());
        assert!(0.0 < tm && tm < tp);

        let rep = classify_fiber(&input(2.0, 0.7, 1.3, params(1.0, 0.0, 1.0))).unwrap();
        assert_eq!(rep.class, FiberClass::SingleMax);
        assert!(rep.t_minus.is_some() && rep.t_plus.is_none());
    }

    #[test]
    fn classify_degenerate_band() {
        // Put b exactly on the per-direction threshold b(u): degenerate class.
        let cf = closed_form_thresholds(5, 1.0, 1.0, 1.0).unwrap();
        let rep =
            classify_fiber(&input(1.0, 1.0, 0.7, params(1.0, cf.degenerate_b, 0.0))).unwrap();
        assert_eq!(rep.class, FiberClass::InflectionCritical);
        assert!(rep.margin.abs() <= TOL_DEGENERATE);
        let td = rep.t_degenerate.unwrap();
        assert!((td - cf.degenerate_t).abs() / cf.degenerate_t < 1e-6);
    }

    #[test]
    fn classification_matches_sign_scan() {
        let cases = [
            (1.0, 1.0, 1.0, 1.0, 0.5, 0.0),
            (1.0, 1.0, 1.0, 1.0, 0.1, 0.0),
            (1.0, 1.0, 1.0, 1.0, 0.1, 2.0),
            (2.0, 0.02, 0.5, 0.7, 0.2, 0.3),
            (0.5, 0.008, 2.0, 3.0, 0.9, 1.5),
            (1.0, 0.03, 0.4, 1.0, 0.0, 0.7),
        ];
        for (aa, c, p_int, a, b, lambda) in cases {
            let inp = input(aa, c, p_int, params(a, b, lambda));
            let rep = classify_fiber(&inp).unwrap();
            let hint = rep
                .t_minus
                .or(rep.t_degenerate)
                .unwrap_or((aa * a / c).powf(1.0 / (inp.params.two_star() - 2.0)));
            assert_eq!(rep.class, sign_scan_class(&inp, hint), "case {aa} {c} {b} {lambda}");
        }
    }

    #[test]
    fn g_h_at_first_hyperbola() {
        // a^{(N-4)/2} b = C1: g(t0) = 0.
        let consts = constants::sobolev_constant(5).unwrap();
        let pp = params(1.3, consts.b_on_hyperbola(consts.c1, 1.3), 0.0);
        let gh = g_h_analysis(&pp, &consts).unwrap();
        assert!(gh.g_min.abs() < 1e-12 * pp.a);
        // Strictly above C1: positive minimum; below: negative.
        let above = params(1.3, pp.b * 1.01, 0.0);
        assert!(g_h_analysis(&above, &consts).unwrap().g_min > 0.0);
        let below = params(1.3, pp.b * 0.99, 0.0);
        assert!(g_h_analysis(&below, &consts).unwrap().g_min < 0.0);
    }

    #[test]
    fn g_h_at_second_hyperbola() {
        let consts = constants::sobolev_constant(5).unwrap();
        let a = 0.8;
        let pp = params(a, consts.b_on_hyperbola(consts.c2, a), 0.0);
        let gh = g_h_analysis(&pp, &consts).unwrap();
        assert!(gh.h_min.abs() < 1e-12 * pp.a);
        let t_ab = gh.t_ab_degenerate.unwrap();
        // gbar(t_ab) = (2*-2)^2 a^2 / (4 2* (4-2*) b).
        let gbar = t_ab * t_ab * g_value(&pp, consts.sobolev, t_ab);
        assert!((gbar - gh.c0_level).abs() / gh.c0_level < 1e-9);
        // Below C2 the two critical points bracket t0_h; above there are none.
        let below = params(a, pp.b * 0.9, 0.0);
        let gh_b = g_h_analysis(&below, &consts).unwrap();
        let (tm, tp) = (gh_b.t_ab_minus.unwrap(), gh_b.t_ab_plus.unwrap());
        assert!(tm < gh_b.t0_h && gh_b.t0_h < tp);
        let above = params(a, pp.b * 1.1, 0.0);
        let gh_a = g_h_analysis(&above, &consts).unwrap();
        assert!(gh_a.t_ab_minus.is_none() && gh_a.t_ab_degenerate.is_none());
        assert!(g_h_analysis(&params(1.0, 0.0, 0.0), &consts).is_err());
    }

    #[test]
    fn degenerate_level_is_one_fifth_for_unit_parameters() {
        // N = 5, a = b = 1, 2* = 10/3: (4/3)^2 / (4 (10/3)(2/3)) = 0.2 exactly.
        let consts = constants::sobolev_constant(5).unwrap();
        let gh = g_h_analysis(&params(1.0, 1.0, 0.0), &consts).unwrap();
        assert!((gh.c0_level - 0.2).abs() < 1e-15);
    }

    #[test]
    fn lambda0_zero_homogeneous_and_probed() {
        let inp = input(1.4, 0.02, 0.9, params(1.0, 0.21, 0.0));
        let l0 = lambda0_of_u(&inp).unwrap();
        assert!(l0.admissible && l0.lambda > 0.0);
        for mu in [0.1, 10.0] {
            let scaled = lambda0_of_u(&inp.scaled(mu)).unwrap();
            assert!((scaled.lambda - l0.lambda).abs() / l0.lambda < 1e-10);
            assert!((scaled.t * mu - l0.t).abs() / l0.t < 1e-10);
        }
        // At lambda0 the infimum is zero and attained at t.
        let at = inp.with_lambda(l0.lambda);
        assert!(at.psi(l0.t).abs() < 1e-10 * inp.grad_sq);
        assert!(at.dpsi(l0.t).abs() < 1e-9 * at.dpsi_scale(l0.t));
        assert!(fiber_infimum(&at.with_lambda(1.1 * l0.lambda)).unwrap() < 0.0);
        assert_eq!(fiber_infimum(&at.with_lambda(0.9 * l0.lambda)).unwrap(), 0.0);
    }

    #[test]
    fn lambda0_subcritical_regime_is_signed() {
        // Below the per-direction zero-energy threshold b0(u), lambda0 <= 0.
        let cf = closed_form_thresholds(5, 1.0, 1.0, 1.0).unwrap();
        let inp = input(1.0, 1.0, 1.0, params(1.0, 0.5 * cf.zero_energy_b, 0.0));
        let l0 = lambda0_of_u(&inp).unwrap();
        assert!(!l0.admissible && l0.lambda < 0.0);
        assert!(lambda0_of_u(&input(1.0, 1.0, 1.0, params(1.0, 0.0, 0.0))).is_err());
        assert!(lambda0_of_u(&input(1.0, 1.0, 0.0, params(1.0, 0.3, 0.0))).is_err());
    }

    #[test]
    fn lambda_strictly_below_lambda0() {
        let inp = input(1.0, 0.01, 1.0, params(1.0, 0.4, 0.0));
        let l0 = lambda0_of_u(&inp).unwrap();
        let l1 = lambda_of_u(&inp).unwrap();
        assert!(l1.admissible);
        assert!(l1.lambda < l0.lambda);
        // Below lambda(u) the fiber is increasing; between, it has critical points.
        let below = classify_fiber(&inp.with_lambda(0.9 * l1.lambda)).unwrap();
        assert_eq!(below.class, FiberClass::Increasing);
        let mid = classify_fiber(&inp.with_lambda(0.5 * (l1.lambda + l0.lambda))).unwrap();
        assert_eq!(mid.class, FiberClass::TwoCritical);
        // At lambda(u) the fiber is degenerate.
        let at = classify_fiber(&inp.with_lambda(l1.lambda)).unwrap();
        assert_eq!(at.class, FiberClass::InflectionCritical);
    }

    #[test]
    fn closed_forms_for_unit_data() {
        let cf = closed_form_thresholds(5, 1.0, 1.0, 1.0).unwrap();
        // t0(u) = ((10/3)/(2/3))^{3/4} = 5^{3/4}.
        assert!((cf.zero_energy_t - 5f64.powf(0.75)).abs() < 1e-12);
        assert!((cf.zero_energy_t - 3.343702).abs() < 1e-6);
        // b0(u) = 4/5^{3/2}, b(u) = 2/3^{3/2}: the S_N powers cancel.
        assert!((cf.zero_energy_b - 4.0 / 5f64.powf(1.5)).abs() < 1e-13);
        assert!((cf.degenerate_b - 2.0 / 3f64.powf(1.5)).abs() < 1e-13);
        assert!((cf.zero_energy_b - 0.357771).abs() < 1e-6);
        assert!((cf.degenerate_b - 0.384900).abs() < 1e-6);
    }

    #[test]
    fn closed_forms_satisfy_their_systems() {
        // (t0, b0) solves psi = psi' = 0 and (t, b) solves psi' = psi'' = 0.
        let (a, grad_sq, crit) = (1.7, 2.3, 0.11);
        let cf = closed_form_thresholds(5, a, grad_sq, crit).unwrap();
        let mk = |b: f64| input(grad_sq, crit, 0.0, params(a, b, 0.0));
        let ze = mk(cf.zero_energy_b);
        let scale = a * grad_sq;
        assert!(ze.psi(cf.zero_energy_t).abs() < 1e-10 * scale);
        assert!(ze.dpsi(cf.zero_energy_t).abs() < 1e-10 * ze.dpsi_scale(cf.zero_energy_t));
        let de = mk(cf.degenerate_b);
        assert!(de.dpsi(cf.degenerate_t).abs() < 1e-10 * de.dpsi_scale(cf.degenerate_t));
        assert!(de.d2psi(cf.degenerate_t).abs() < 1e-9 * scale);
        // The ratio of the two b-thresholds is C1/C2 for any data.
        let consts = constants::sobolev_constant(5).unwrap();
        assert!(
            (cf.zero_energy_b / cf.degenerate_b - consts.c1 / consts.c2).abs() < 1e-12
        );
    }

    #[test]
    fn sigma_bound_values() {
        let v = sigma_lower_bound(&params(1.0, 1.0, 0.0)).unwrap();
        assert!((v - 1.0 / 12.0).abs() < 1e-15);
        // Increasing in p on (2, 2*), vanishing as p -> 2+.
        let mut prev = 0.0;
        for p in [2.1, 2.5, 2.9, 3.3] {
            let pp = ProblemParams::new(5, 1.0, 1.0, 0.0, p).unwrap();
            let v = sigma_lower_bound(&pp).unwrap();
            assert!(v > prev);
            prev = v;
        }
        let near2 = ProblemParams::new(5, 1.0, 1.0, 0.0, 2.0 + 1e-8).unwrap();
        assert!(sigma_lower_bound(&near2).unwrap() < 1e-14);
    }

    #[test]
    fn generic_hook_reproduces_power_elimination() {
        use hook::*;
        let inp = input(1.2, 0.015, 0.8, params(1.1, 0.3, 0.0));
        let core = FiberCore {
            aa: 1.1 * 1.2,
            ba2: 0.3 * 1.2 * 1.2,
            crit_int: 0.015,
            two_star: inp.params.two_star(),
        };
        let rho = PowerProfile { p: 3.0, pert_int: 0.8 };
        let l0 = lambda0_of_u(&inp).unwrap();
        let (t, l) = zero_energy_newton(&core, &rho, 0.9 * l0.t, 1.2 * l0.lambda).unwrap();
        assert!((t - l0.t).abs() / l0.t < 1e-10);
        assert!((l - l0.lambda).abs() / l0.lambda < 1e-10);
        let l1 = lambda_of_u(&inp).unwrap();
        let (t, l) = degenerate_newton(&core, &rho, 1.1 * l1.t, 0.8 * l1.lambda).unwrap();
        assert!((t - l1.t).abs() / l1.t < 1e-9);
        assert!((l - l1.lambda).abs() / l1.lambda < 1e-9);
    }
}

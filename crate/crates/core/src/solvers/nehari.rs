//! Constrained minimization on the Nehari set and global minimization of the
//! energy.
//!
//! The branch level `c^- = inf { Phi(u) : psi'_u(1) = 0, psi''_u(1) < 0 }` is
//! computed by an alternating scheme: the fiber projection `t^-(w)` of a unit
//! direction is exact (scalar root finding), and a projected descent step on
//! the unit sphere lowers `w -> Phi(t^-(w) w)`. Since `psi'(t^-) = 0`, the
//! energy gradient at `t^- w` is already tangential, so the full `H^1`
//! residual is the natural convergence measure.

use std::sync::Arc;

use serde::Serialize;

use super::SolverError;
use crate::fiber::{FiberClass, FiberReport, ProblemParams, classify_fiber};
use crate::function::{DiscreteFunction, energy_and_gradient};
use crate::mesh::RadialMesh;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum Branch {
    Nminus,
    Nplus,
    Global,
}

#[derive(Debug, Clone, Copy)]
pub struct NehariConfig {
    pub max_iter: usize,
    /// Stop when the level change drops below this.
    pub level_tol: f64,
    /// Stop when the `H^1` norm of the energy gradient drops below this.
    pub grad_tol: f64,
}

impl Default for NehariConfig {
    fn default() -> Self {
        NehariConfig { max_iter: 20_000, level_tol: 1e-10, grad_tol: 1e-8 }
    }
}

/// A Nehari (or global) level with its minimizer and diagnostics.
#[derive(Debug, Clone)]
pub struct NehariResult {
    pub level: f64,
    /// Rescaled so that its own fiber critical point sits at `t = 1`.
    pub minimizer: DiscreteFunction,
    pub branch: Branch,
    /// Fiber parameter applied to the final direction.
    pub t_projection: f64,
    pub iterations: usize,
    pub converged: bool,
    /// `c^0 - level` when the closed-form degenerate level exists (`b > 0`).
    pub gap_to_c0: Option<f64>,
    /// `H^1` norm of the energy gradient at the minimizer.
    pub grad_residual: f64,
    /// `|psi'(1)|` of the minimizer, scaled by the term magnitudes.
    pub psi_prime_one: Option<f64>,
    pub psi_second_one: Option<f64>,
    /// Converged level at or above the `c^0` bound: likely the wrong branch.
    pub suspect_branch: bool,
    /// Level within the refused band around the degenerate level on the
    /// second hyperbola.
    pub near_degenerate_level: bool,
    /// Descent stopped at the quadrature-resolution guard (concentration
    /// reached the mesh scale).
    pub resolution_limited: bool,
}

/// Serializable view without the grid function.
#[derive(Debug, Clone, Serialize)]
pub struct NehariSummary {
    pub level: f64,
    pub branch: Branch,
    pub t_projection: f64,
    pub iterations: usize,
    pub converged: bool,
    pub gap_to_c0: Option<f64>,
    pub grad_residual: f64,
    pub psi_prime_one: Option<f64>,
    pub psi_second_one: Option<f64>,
    pub suspect_branch: bool,
    pub near_degenerate_level: bool,
    pub resolution_limited: bool,
}

impl NehariResult {
    pub fn summary(&self) -> NehariSummary {
        NehariSummary {
            level: self.level,
            branch: self.branch,
            t_projection: self.t_projection,
            iterations: self.iterations,
            converged: self.converged,
            gap_to_c0: self.gap_to_c0,
            grad_residual: self.grad_residual,
            psi_prime_one: self.psi_prime_one,
            psi_second_one: self.psi_second_one,
            suspect_branch: self.suspect_branch,
            near_degenerate_level: self.near_degenerate_level,
            resolution_limited: self.resolution_limited,
        }
    }
}

const RESOLUTION_TOL: f64 = 5e-3;

fn local_max_t(report: &FiberReport) -> Option<f64> {
    match report.class {
        FiberClass::TwoCritical | FiberClass::SingleMax => report.t_minus,
        _ => None,
    }
}

/// Degenerate-branch level `(2*-2)^2 a^2 / (4 2* (4-2*) b)`.
fn c0_level(params: &ProblemParams) -> Option<f64> {
    if params.b > 0.0 {
        let ts = params.two_star();
        Some((ts - 2.0).powi(2) * params.a * params.a / (4.0 * ts * (4.0 - ts) * params.b))
    } else {
        None
    }
}

/// Minimizes `Phi` over the branch `N^-` from a start direction.
pub fn nehari_minus_minimize(
    params: &ProblemParams,
    mesh: &Arc<RadialMesh>,
    start: &DiscreteFunction,
    cfg: &NehariConfig,
) -> Result<NehariResult, SolverError> {
    params.validate()?;
    if !Arc::ptr_eq(mesh, start.mesh()) {
        return Err(SolverError::Invalid("start lives on a different mesh".into()));
    }
    let mut w = start.clone();
    if w.normalize() == 0.0 {
        return Err(SolverError::Invalid("zero start direction".into()));
    }

    let project = |w: &DiscreteFunction| -> Result<Option<f64>, SolverError> {
        Ok(local_max_t(&classify_fiber(&w.fiber_input(params))?))
    };

    let mut t = project(&w)?.ok_or(SolverError::NehariEmptyAlongStart)?;
    let mut level = w.fiber_input(params).psi(t);
    let mut converged = false;
    let mut resolution_limited = false;
    let mut iterations = 0;
    let mut grad_residual = f64::INFINITY;
    let mut stalled = 0usize;
    // Barzilai-Borwein state: previous direction and scaled tangent.
    let mut prev: Option<(DiscreteFunction, DiscreteFunction)> = None;
    let mut step = 0.2;

    for it in 0..cfg.max_iter {
        iterations = it + 1;
        let u = w.scaled(t);
        let eg = energy_and_gradient(&u, params);
        grad_residual = eg.gradient.h1_norm();
        // psi'(t) = 0 makes the radial component vanish analytically; project
        // anyway to shed root-finding noise.
        let mut tangent = eg.gradient.clone();
        let radial = tangent.h1_inner(&w);
        tangent.axpy(-radial, &w);
        // Sphere gradient of w -> Phi(t(w) w) is t * tangent.
        tangent.scale(t);
        let g_norm = tangent.h1_norm();
        if grad_residual <= cfg.grad_tol {
            converged = true;
            break;
        }

        // BB1 step from the previous accepted move, safeguarded by Armijo.
        if let Some((pw, pg)) = &prev {
            let mut dw = w.clone();
            dw.axpy(-1.0, pw);
            let mut dg = tangent.clone();
            dg.axpy(-1.0, pg);
            let num = dw.h1_inner(&dw);
            let den = dw.h1_inner(&dg);
            if den > 0.0 && num > 0.0 {
                step = (num / den).clamp(1e-6, 1e3);
            }
        }
        prev = Some((w.clone(), tangent.clone()));

        let mut accepted = false;
        let mut s = step;
        for _ in 0..60 {
            let mut trial = w.clone();
            trial.axpy(-s, &tangent);
            trial.normalize();
            let Some(t_trial) = project(&trial)? else {
                s *= 0.5;
                continue;
            };
            if trial.resolution_gap(params) > RESOLUTION_TOL {
                resolution_limited = true;
                s *= 0.5;
                continue;
            }
            let trial_level = trial.fiber_input(params).psi(t_trial);
            if trial_level <= level - 1e-4 * s * g_norm * g_norm {
                let drop = level - trial_level;
                w = trial;
                t = t_trial;
                level = trial_level;
                accepted = true;
                resolution_limited = false;
                stalled = if drop <= cfg.level_tol { stalled + 1 } else { 0 };
                break;
            }
            s *= 0.5;
        }
        // Long stretches of negligible decrease mean the iterate crawls along
        // a resolution-limited valley; stop rather than burn the budget.
        if !accepted || stalled >= 25 {
            break;
        }
    }

    // Near the minimum the certifiable energy decrease drops below f64 noise
    // while the residual is still above tolerance; finish with small plain
    // gradient steps monitored on the residual alone.
    if !converged && grad_residual <= 1e4 * cfg.grad_tol && !resolution_limited {
        let mut s = step.min(0.05);
        let mut best = (w.clone(), t, grad_residual);
        let mut since_improvement = 0;
        for _ in 0..300 {
            iterations += 1;
            let u = w.scaled(t);
            let eg = energy_and_gradient(&u, params);
            let res = eg.gradient.h1_norm();
            if res < best.2 {
                best = (w.clone(), t, res);
                since_improvement = 0;
                s *= 1.15;
            } else {
                since_improvement += 1;
                s *= 0.5;
            }
            if best.2 <= cfg.grad_tol {
                converged = true;
                break;
            }
            if since_improvement > 20 {
                break;
            }
            // Walk from the current point with its own gradient; the best
            // iterate is what gets returned, so excursions are harmless.
            let mut tangent = eg.gradient;
            let radial = tangent.h1_inner(&w);
            tangent.axpy(-radial, &w);
            let mut next = w.clone();
            next.axpy(-s * t, &tangent);
            next.normalize();
            match project(&next)? {
                Some(tn) => {
                    w = next;
                    t = tn;
                }
                None => break,
            }
        }
        w = best.0;
        t = best.1;
        grad_residual = best.2;
        level = w.fiber_input(params).psi(t);
    }

    finish_minus(params, w.scaled(t), level, t, iterations, converged, grad_residual, resolution_limited)
}

#[allow(clippy::too_many_arguments)]
fn finish_minus(
    params: &ProblemParams,
    minimizer: DiscreteFunction,
    level: f64,
    t: f64,
    iterations: usize,
    converged: bool,
    grad_residual: f64,
    resolution_limited: bool,
) -> Result<NehariResult, SolverError> {
    let input = minimizer.fiber_input(params);
    let psi_prime_one = input.dpsi(1.0) / input.dpsi_scale(1.0);
    let psi_second_one = input.d2psi(1.0);
    let c0 = c0_level(params);
    let gap_to_c0 = c0.map(|c| c - level);
    let suspect_branch = matches!(gap_to_c0, Some(g) if g <= 0.0);
    let near_degenerate_level = match c0 {
        Some(c) => {
            let consts = params.constants();
            let product = consts.parameter_product(params.a, params.b);
            (product - consts.c2).abs() <= 1e-9 * consts.c2
                && (level - c).abs() <= 1e-6 * c.abs().max(1.0)
        }
        None => false,
    };
    Ok(NehariResult {
        level,
        minimizer,
        branch: Branch::Nminus,
        t_projection: t,
        iterations,
        converged: converged && !suspect_branch && !near_degenerate_level,
        gap_to_c0,
        grad_residual,
        psi_prime_one: Some(psi_prime_one),
        psi_second_one: Some(psi_second_one),
        suspect_branch,
        near_degenerate_level,
        resolution_limited,
    })
}

/// Unconstrained minimization of `Phi` (Armijo line search). Converges to the
/// zero function with level 0 when no negative-energy direction exists.
pub fn global_minimize(
    params: &ProblemParams,
    mesh: &Arc<RadialMesh>,
    start: &DiscreteFunction,
    cfg: &NehariConfig,
) -> Result<NehariResult, SolverError> {
    params.validate()?;
    if params.b == 0.0 {
        return Err(SolverError::Invalid(
            "global minimization needs b > 0: the critical term dominates and the infimum is -inf"
                .into(),
        ));
    }
    if !Arc::ptr_eq(mesh, start.mesh()) {
        return Err(SolverError::Invalid("start lives on a different mesh".into()));
    }
    let mut u = start.clone();
    let mut eg = energy_and_gradient(&u, params);
    let mut converged = false;
    let mut iterations = 0;
    let mut prev: Option<(DiscreteFunction, DiscreteFunction)> = None;
    let mut step = 0.5;
    // The achievable residual floor is set by the frozen-coefficient operator
    // scale (a + bA)||u||: components of the Riesz right-hand side cancel at
    // that magnitude. Near zero the test degrades to an absolute one.
    let grad_scale =
        |grad_sq: f64| ((params.a + params.b * grad_sq) * grad_sq.sqrt()).max(1.0);
    let mut stalled = 0usize;
    for it in 0..cfg.max_iter {
        iterations = it + 1;
        let g_norm = eg.gradient.h1_norm();
        let scale = grad_scale(eg.functionals.grad_sq);
        if g_norm <= cfg.grad_tol * scale {
            converged = true;
            break;
        }
        if let Some((pu, pg)) = &prev {
            let mut du = u.clone();
            du.axpy(-1.0, pu);
            let mut dg = eg.gradient.clone();
            dg.axpy(-1.0, pg);
            let num = du.h1_inner(&du);
            let den = du.h1_inner(&dg);
            if den > 0.0 && num > 0.0 {
                step = (num / den).clamp(1e-8, 1e3);
            }
        }
        prev = Some((u.clone(), eg.gradient.clone()));
        let mut s = step;
        let mut accepted = false;
        for _ in 0..60 {
            let mut trial = u.clone();
            trial.axpy(-s, &eg.gradient);
            let trial_eg = energy_and_gradient(&trial, params);
            if trial_eg.energy <= eg.energy - 1e-4 * s * g_norm * g_norm {
                let drop = eg.energy - trial_eg.energy;
                u = trial;
                eg = trial_eg;
                accepted = true;
                stalled = if drop <= cfg.level_tol { stalled + 1 } else { 0 };
                break;
            }
            s *= 0.5;
        }
        if eg.energy < -1e12 {
            return Err(SolverError::Diverged);
        }
        // Decreases at the last-bit level mean the iterate is pinned at the
        // floating-point floor; hand over to the residual polish.
        if !accepted || stalled >= 25 {
            break;
        }
    }
    // Residual-monitored polish once energy decreases fall below f64 noise.
    if !converged {
        let mut s = step.min(0.05);
        let mut best = (u.clone(), eg.gradient.h1_norm());
        let mut since_improvement = 0;
        for _ in 0..300 {
            iterations += 1;
            let g = energy_and_gradient(&u, params);
            let scale = grad_scale(g.functionals.grad_sq);
            let res = g.gradient.h1_norm();
            if res < best.1 {
                best = (u.clone(), res);
                since_improvement = 0;
                s *= 1.15;
            } else {
                since_improvement += 1;
                s *= 0.5;
            }
            if best.1 <= cfg.grad_tol * scale {
                converged = true;
                break;
            }
            if since_improvement > 20 {
                break;
            }
            let mut next = u.clone();
            next.axpy(-s, &g.gradient);
            u = next;
        }
        u = best.0;
        eg = energy_and_gradient(&u, params);
    }
    let grad_residual = eg.gradient.h1_norm();
    let nontrivial = eg.functionals.grad_sq > 1e-20;
    let (psi_prime_one, psi_second_one) = if nontrivial {
        let input = u.fiber_input(params);
        (Some(input.dpsi(1.0) / input.dpsi_scale(1.0)), Some(input.d2psi(1.0)))
    } else {
        (None, None)
    };
    Ok(NehariResult {
        level: eg.energy,
        minimizer: u,
        branch: Branch::Global,
        t_projection: 1.0,
        iterations,
        converged,
        gap_to_c0: c0_level(params).map(|c| c - eg.energy),
        grad_residual,
        psi_prime_one,
        psi_second_one,
        suspect_branch: false,
        near_degenerate_level: false,
        resolution_limited: false,
    })
}

//! Upper bounds for the extremal parameters `lambda_0^* = inf_u lambda_0(u)`
//! and `lambda^* = inf_u lambda(u)` by multi-start projected descent over
//! unit directions.
//!
//! Both objectives are smooth functions of the norm triple `(A, C, P)`, so
//! the descent direction combines finite-difference partials of the scalar
//! elimination with the exact `H^1` gradients of the norms. Every evaluation
//! at a grid direction is a rigorous upper bound for the mesh-level infimum;
//! the reported value is the best one found.

use std::sync::Arc;

use serde::Serialize;

use super::{SolverError, standard_starts};
use crate::fiber::{ExtremalOfDirection, FiberInput, ProblemParams, lambda0_of_u, lambda_of_u};
use crate::function::{DiscreteFunction, riesz_of_load};
use crate::mesh::RadialMesh;

#[derive(Debug, Clone)]
pub struct ExtremalOptions {
    pub n_starts: usize,
    pub seed: u64,
    pub max_iter: usize,
    /// Additional start directions (e.g. warm starts from a neighbouring
    /// parameter cell or an injected coarse-mesh argmin).
    pub extra_starts: Vec<DiscreteFunction>,
}

impl Default for ExtremalOptions {
    fn default() -> Self {
        ExtremalOptions { n_starts: 8, seed: 0, max_iter: 600, extra_starts: Vec::new() }
    }
}

/// Best-found upper bound with its argmin direction.
#[derive(Debug, Clone)]
pub struct ExtremalEstimate {
    pub lambda_upper: f64,
    /// Fiber location of the extremal configuration for the argmin.
    pub t_at_extremal: f64,
    pub argmin: DiscreteFunction,
    pub iterations: usize,
    /// Value reached from each start, in start order (NaN when a start was
    /// inadmissible).
    pub start_values: Vec<f64>,
}

#[derive(Debug, Clone, Serialize)]
pub struct ExtremalSummary {
    pub lambda_upper: f64,
    pub t_at_extremal: f64,
    pub iterations: usize,
    pub start_values: Vec<f64>,
}

impl ExtremalEstimate {
    pub fn summary(&self) -> ExtremalSummary {
        ExtremalSummary {
            lambda_upper: self.lambda_upper,
            t_at_extremal: self.t_at_extremal,
            iterations: self.iterations,
            start_values: self.start_values.clone(),
        }
    }
}

/// Upper bound for `lambda_0^*` (zero-energy extremal parameter).
pub fn extremal_lambda0(
    params: &ProblemParams,
    mesh: &Arc<RadialMesh>,
    opts: &ExtremalOptions,
) -> Result<ExtremalEstimate, SolverError> {
    minimize_direction_map(params, mesh, opts, &lambda0_of_u)
}

/// Upper bound for `lambda^*` (degenerate-fiber extremal parameter); always
/// below the `lambda_0^*` bound evaluated on the same directions.
pub fn extremal_lambda(
    params: &ProblemParams,
    mesh: &Arc<RadialMesh>,
    opts: &ExtremalOptions,
) -> Result<ExtremalEstimate, SolverError> {
    minimize_direction_map(params, mesh, opts, &lambda_of_u)
}

type DirectionMap = dyn Fn(&FiberInput) -> Result<ExtremalOfDirection, crate::fiber::FiberError>;

fn minimize_direction_map(
    params: &ProblemParams,
    mesh: &Arc<RadialMesh>,
    opts: &ExtremalOptions,
    objective: &DirectionMap,
) -> Result<ExtremalEstimate, SolverError> {
    params.validate()?;
    if params.b == 0.0 {
        return Err(SolverError::Invalid("extremal parameters need b > 0".into()));
    }
    let mut starts = standard_starts(mesh, opts.n_starts, opts.seed);
    starts.extend(opts.extra_starts.iter().cloned());

    let mut best: Option<(ExtremalOfDirection, DiscreteFunction, usize)> = None;
    let mut start_values = Vec::with_capacity(starts.len());
    for start in &starts {
        match descend_from(params, mesh, start, opts.max_iter, objective) {
            Ok((value, w, iters)) => {
                start_values.push(value.lambda);
                let better = match &best {
                    None => true,
                    Some((b, _, bi)) => {
                        value.lambda < b.lambda
                            || (value.lambda == b.lambda && iters < *bi)
                    }
                };
                if better {
                    best = Some((value, w, iters));
                }
            }
            Err(SolverError::Fiber(_)) => start_values.push(f64::NAN),
            Err(e) => return Err(e),
        }
    }
    let (value, argmin, iterations) = best.ok_or_else(|| {
        SolverError::Invalid("no admissible start direction (below the threshold hyperbola)".into())
    })?;
    Ok(ExtremalEstimate {
        lambda_upper: value.lambda,
        t_at_extremal: value.t,
        argmin,
        iterations,
        start_values,
    })
}

fn descend_from(
    params: &ProblemParams,
    mesh: &Arc<RadialMesh>,
    start: &DiscreteFunction,
    max_iter: usize,
    objective: &DirectionMap,
) -> Result<(ExtremalOfDirection, DiscreteFunction, usize), SolverError> {
    let mut w = start.clone();
    w.normalize();
    let eval = |w: &DiscreteFunction| -> Result<ExtremalOfDirection, SolverError> {
        let value = objective(&w.fiber_input(params))?;
        Ok(value)
    };
    let mut current = eval(&w)?;
    if !current.admissible {
        return Err(SolverError::Fiber(crate::fiber::FiberError::InvalidInput(
            "start direction is below the admissible cone".into(),
        )));
    }
    let mut step = 0.25;
    let mut iterations = 0;
    for it in 0..max_iter {
        iterations = it + 1;
        let gradient = objective_gradient(params, mesh, &w, objective)?;
        let mut tangent = gradient;
        let radial = tangent.h1_inner(&w);
        tangent.axpy(-radial, &w);
        let g_norm = tangent.h1_norm();
        if g_norm <= 1e-10 * current.lambda.abs().max(1e-12) {
            break;
        }
        let mut s = step;
        let mut accepted = false;
        for _ in 0..30 {
            let mut trial = w.clone();
            trial.axpy(-s / g_norm, &tangent);
            trial.normalize();
            match eval(&trial) {
                Ok(v) if v.admissible && v.lambda <= current.lambda - 1e-4 * s * g_norm => {
                    let drop = current.lambda - v.lambda;
                    w = trial;
                    current = v;
                    accepted = true;
                    step = (s * 1.6).min(1.0);
                    if drop <= 1e-12 * current.lambda.abs().max(1e-12) {
                        return Ok((current, w, iterations));
                    }
                    break;
                }
                // Inadmissible or uphill: shrink, per the cone-restart rule.
                _ => s *= 0.5,
            }
        }
        if !accepted {
            break;
        }
    }
    Ok((current, w, iterations))
}

/// `H^1` gradient of `w -> objective(A(w), C(w), P(w))` on the unit sphere:
/// central finite differences of the scalar map composed with the exact norm
/// gradients `dA = 2u`, `dC = 2* |u|^{2*-2} u`, `dP = p |u|^{p-2} u`.
fn objective_gradient(
    params: &ProblemParams,
    mesh: &Arc<RadialMesh>,
    w: &DiscreteFunction,
    objective: &DirectionMap,
) -> Result<DiscreteFunction, SolverError> {
    let f = w.functionals(params);
    let ts = params.two_star();
    let base = FiberInput::unchecked(f.grad_sq, f.crit_int, f.pert_int, *params);
    let partial = |idx: usize| -> Result<f64, SolverError> {
        let x = [f.grad_sq, f.crit_int, f.pert_int][idx];
        let h = 1e-6 * x.abs().max(1e-12);
        let mut up = base;
        let mut dn = base;
        match idx {
            0 => {
                up.grad_sq += h;
                dn.grad_sq -= h;
            }
            1 => {
                up.crit_int += h;
                dn.crit_int -= h;
            }
            _ => {
                up.pert_int += h;
                dn.pert_int -= h;
            }
        }
        Ok((objective(&up)?.lambda - objective(&dn)?.lambda) / (2.0 * h))
    };
    let ga = partial(0)?;
    let gc = partial(1)?;
    let gp = partial(2)?;
    let load: Vec<f64> = w
        .values()
        .iter()
        .map(|&v| {
            gc * ts * v.abs().powf(ts - 2.0) * v + gp * params.p * v.abs().powf(params.p - 2.0) * v
        })
        .collect();
    let mut grad = riesz_of_load(mesh, &load);
    grad.axpy(2.0 * ga, w);
    Ok(grad)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::constants::sobolev_constant;
    use crate::mesh::Grading;

    fn mesh(m: usize) -> Arc<RadialMesh> {
        Arc::new(RadialMesh::new(5, m, Grading::Refined).unwrap())
    }

    fn opts(n_starts: usize, max_iter: usize) -> ExtremalOptions {
        ExtremalOptions { n_starts, max_iter, ..Default::default() }
    }

    #[test]
    fn lambda_star_sits_below_lambda0_star() {
        let mesh = mesh(96);
        let consts = sobolev_constant(5).unwrap();
        // Above C2 so that both extremal parameters are positive.
        let b = 1.2 * consts.b_on_hyperbola(consts.c1, 1.0);
        assert!(b > consts.b_on_hyperbola(consts.c2, 1.0));
        let params = ProblemParams::new(5, 1.0, b, 0.0, 3.0).unwrap();
        let o = opts(4, 150);
        let l0 = extremal_lambda0(&params, &mesh, &o).unwrap();
        assert!(l0.lambda_upper > 0.0);
        let mut o1 = opts(4, 150);
        o1.extra_starts.push(l0.argmin.clone());
        let l1 = extremal_lambda(&params, &mesh, &o1).unwrap();
        assert!(
            l1.lambda_upper < l0.lambda_upper,
            "lambda* bound {} should sit below lambda0* bound {}",
            l1.lambda_upper,
            l0.lambda_upper
        );
        // Below the lambda* estimate no sampled direction has critical points.
        let probe = params.with_lambda(0.5 * l1.lambda_upper);
        for s in standard_starts(&mesh, 6, 3) {
            let rep = crate::fiber::classify_fiber(&s.fiber_input(&probe)).unwrap();
            assert_eq!(rep.class, crate::fiber::FiberClass::Increasing);
        }
    }

    #[test]
    fn descent_improves_on_raw_starts() {
        let mesh = mesh(96);
        let consts = sobolev_constant(5).unwrap();
        let b = 1.5 * consts.b_on_hyperbola(consts.c1, 1.0);
        let params = ProblemParams::new(5, 1.0, b, 0.0, 3.0).unwrap();
        let raw: f64 = standard_starts(&mesh, 4, 0)
            .iter()
            .map(|s| lambda0_of_u(&s.fiber_input(&params)).unwrap().lambda)
            .fold(f64::INFINITY, f64::min);
        let est = extremal_lambda0(&params, &mesh, &opts(4, 200)).unwrap();
        assert!(est.lambda_upper <= raw + 1e-12);
        assert!(est.lambda_upper < raw * 0.999, "descent should strictly improve");
    }

    #[test]
    fn bubble_lambda0_vanishes_on_the_first_hyperbola() {
        // With the parameter product pinned to the mesh-level C1, the
        // zero-energy parameter of concentrating bubbles collapses to zero.
        let mesh = mesh(256);
        let s_h = crate::function::discrete_sobolev_constant(&mesh).unwrap().value;
        let c1_h = crate::constants::constants_with_sobolev(5, s_h).unwrap().c1;
        let params = ProblemParams::new(5, 1.0, c1_h, 0.0, 3.0).unwrap();
        let mut prev = f64::INFINITY;
        for eps in [0.1, 0.03, 0.01] {
            let b = crate::function::bubble(&mesh, eps, 0.8).unwrap().func;
            let l0 = lambda0_of_u(&b.fiber_input(&params)).unwrap();
            assert!(l0.lambda < prev, "lambda0 should decrease with eps");
            prev = l0.lambda;
        }
        assert!(prev < 0.2, "lambda0 of the most concentrated bubble is {prev}");
    }

    #[test]
    fn refinement_with_injection_does_not_increase_the_bound() {
        let coarse = mesh(64);
        let fine = mesh(128);
        let consts = sobolev_constant(5).unwrap();
        let b = 1.3 * consts.b_on_hyperbola(consts.c1, 1.0);
        let params = ProblemParams::new(5, 1.0, b, 0.0, 3.0).unwrap();
        let coarse_est = extremal_lambda0(&params, &coarse, &opts(4, 150)).unwrap();
        let injected = coarse_est.argmin.resample(Arc::clone(&fine));
        let mut o = opts(4, 150);
        o.extra_starts.push(injected.clone());
        let fine_est = extremal_lambda0(&params, &fine, &o).unwrap();
        let injected_value = lambda0_of_u(&injected.fiber_input(&params)).unwrap().lambda;
        assert!(fine_est.lambda_upper <= injected_value + 1e-12);
    }
}

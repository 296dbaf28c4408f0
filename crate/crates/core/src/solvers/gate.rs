//! Existence gate for the second solution: locates the exponent threshold
//! `p_0(a, b)` with `c^-(a,b,0) = (p_0-2)^2 a^2 / (4 p_0 (4-p_0) b)` and the
//! perturbation threshold `lambda~(a,b,p)` past which the branch level drops
//! below the degenerate-sequence bound.

use std::sync::Arc;

use serde::Serialize;

use super::nehari::{NehariConfig, nehari_minus_minimize};
use super::{SolverError, standard_starts};
use crate::fiber::{ProblemParams, sigma_lower_bound};
use crate::mesh::RadialMesh;

#[derive(Debug, Clone, Serialize)]
pub struct GateReport {
    /// Branch level at `lambda = 0`; absent when the branch is empty there.
    pub c_minus_zero: Option<f64>,
    /// Closed-form degenerate level `c^0(a, b, 0)`.
    pub c0_level: f64,
    /// `c^-(a,b,0) < c^0` whenever both exist; a violation flags an
    /// inconsistent state.
    pub consistent: bool,
    /// Exponent threshold: for `p > p_0` the gate passes for every positive
    /// perturbation.
    pub p0: Option<f64>,
    /// `(p-2)^2 a^2 / (4 p (4-p) b)` at the configured `p`.
    pub sigma_at_p: f64,
    /// Smallest tested perturbation strength with `c^-(a,b,lambda) < sigma`;
    /// zero when the gate already passes at `lambda = 0`.
    pub lambda_tilde: Option<f64>,
}

fn sigma_at(a: f64, b: f64, p: f64) -> f64 {
    (p - 2.0).powi(2) * a * a / (4.0 * p * (4.0 - p) * b)
}

fn c_minus(
    params: &ProblemParams,
    mesh: &Arc<RadialMesh>,
    cfg: &NehariConfig,
    seed: u64,
) -> Option<f64> {
    standard_starts(mesh, 4, seed)
        .iter()
        .filter_map(|s| nehari_minus_minimize(params, mesh, s, cfg).ok())
        .map(|r| r.level)
        .min_by(f64::total_cmp)
}

pub fn second_solution_gate(
    params: &ProblemParams,
    mesh: &Arc<RadialMesh>,
    seed: u64,
) -> Result<GateReport, SolverError> {
    params.validate()?;
    if params.b <= 0.0 {
        return Err(SolverError::Invalid("the gate needs b > 0".into()));
    }
    let ts = params.two_star();
    let c0 = (ts - 2.0).powi(2) * params.a * params.a / (4.0 * ts * (4.0 - ts) * params.b);
    let cfg = NehariConfig { max_iter: 6000, level_tol: 1e-10, grad_tol: 1e-7 };

    let at_zero = params.with_lambda(0.0);
    let c_minus_zero = c_minus(&at_zero, mesh, &cfg, seed);
    let consistent = c_minus_zero.is_none_or(|c| c < c0);

    // sigma(p) increases from 0 at p = 2 to exactly c^0 at p = 2*, so the
    // threshold exponent exists and is unique whenever c^- < c^0.
    let p0 = match c_minus_zero {
        Some(target) if consistent => {
            let (mut lo, mut hi) = (2.0 + 1e-12, ts - 1e-12);
            for _ in 0..200 {
                let mid = 0.5 * (lo + hi);
                if sigma_at(params.a, params.b, mid) < target {
                    lo = mid;
                } else {
                    hi = mid;
                }
            }
            Some(0.5 * (lo + hi))
        }
        _ => None,
    };

    let sigma_p = sigma_at(params.a, params.b, params.p);
    let passes = |lambda: f64| -> bool {
        let p = params.with_lambda(lambda);
        matches!(c_minus(&p, mesh, &cfg, seed), Some(level) if level < sigma_p)
    };
    let lambda_tilde = if c_minus_zero.is_some_and(|c| c < sigma_p) {
        Some(0.0)
    } else {
        // Expand to a passing strength, then bisect a modest number of times:
        // the level is non-increasing in lambda.
        let mut hi = 1.0;
        let mut found = None;
        for _ in 0..24 {
            if passes(hi) {
                found = Some(hi);
                break;
            }
            hi *= 2.0;
        }
        found.map(|hi| {
            let mut lo = 0.0;
            let mut hi = hi;
            for _ in 0..12 {
                let mid = 0.5 * (lo + hi);
                if passes(mid) {
                    hi = mid;
                } else {
                    lo = mid;
                }
            }
            hi
        })
    };

    // Cross-check against the module-level bound helper.
    debug_assert!((sigma_lower_bound(params)? - sigma_p).abs() <= 1e-12 * sigma_p.max(1.0));

    Ok(GateReport { c_minus_zero, c0_level: c0, consistent, p0, sigma_at_p: sigma_p, lambda_tilde })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::constants::sobolev_constant;
    use crate::mesh::Grading;

    #[test]
    fn gate_below_the_second_hyperbola() {
        let mesh = Arc::new(RadialMesh::new(5, 96, Grading::Refined).unwrap());
        let consts = sobolev_constant(5).unwrap();
        let b = 0.5 * consts.b_on_hyperbola(consts.c2, 1.0);
        let params = ProblemParams::new(5, 1.0, b, 0.0, 3.0).unwrap();
        let report = second_solution_gate(&params, &mesh, 0).unwrap();
        let c = report.c_minus_zero.expect("branch nonempty below C2");
        assert!(report.consistent && c < report.c0_level);
        let p0 = report.p0.expect("p0 exists when consistent");
        assert!(2.0 < p0 && p0 < params.two_star());
        // sigma crosses the level exactly at p0.
        assert!((sigma_at(1.0, b, p0) - c).abs() / c < 1e-9);
        // For p beyond p0 the gate passes at every tested lambda.
        if params.p > p0 {
            assert_eq!(report.lambda_tilde, Some(0.0));
        } else {
            assert!(report.lambda_tilde.is_some());
        }
    }

    #[test]
    fn small_b_passes_at_fixed_exponent() {
        // As b decreases the bound sigma ~ 1/b blows past the (bounded)
        // level, so the gate passes already at lambda = 0.
        let mesh = Arc::new(RadialMesh::new(5, 96, Grading::Refined).unwrap());
        let params = ProblemParams::new(5, 1.0, 1e-4, 0.0, 3.0).unwrap();
        let report = second_solution_gate(&params, &mesh, 0).unwrap();
        assert_eq!(report.lambda_tilde, Some(0.0));
        assert!(report.consistent);
        // Above the second hyperbola at the same exponent the branch is empty
        // at lambda = 0 and a strictly positive strength is required.
        let above = ProblemParams::new(5, 1.0, 0.01, 0.0, 3.0).unwrap();
        let report = second_solution_gate(&above, &mesh, 0).unwrap();
        assert!(report.c_minus_zero.is_none());
        assert!(matches!(report.lambda_tilde, Some(l) if l > 1.0));
    }
}

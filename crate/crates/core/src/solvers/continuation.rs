//! Warm-started continuation of the `N^-` branch along a decreasing Kirchhoff
//! coefficient sequence `b_k` down to `b = 0`, recovering the limiting
//! equation `-Lap u = |u|^{2*-2} u + lambda |u|^{p-2} u`.

use std::sync::Arc;

use serde::Serialize;

use super::nehari::{NehariConfig, NehariResult, nehari_minus_minimize};
use super::verify::{VerificationReport, verify_solution};
use super::{SolverError, standard_starts};
use crate::fiber::ProblemParams;
use crate::mesh::RadialMesh;

#[derive(Debug, Clone)]
pub struct ContinuationStep {
    pub b: f64,
    pub result: NehariResult,
}

#[derive(Debug, Clone)]
pub struct ContinuationOutcome {
    pub steps: Vec<ContinuationStep>,
    pub completed: bool,
    /// Index into the `b` sequence where the branch was lost, if it was.
    pub failed_index: Option<usize>,
    /// Verification of the final iterate against the equation at the final
    /// `b` (the limiting equation when the sequence ends at zero).
    pub limit_verification: Option<VerificationReport>,
}

#[derive(Debug, Clone, Serialize)]
pub struct ContinuationSummary {
    pub levels: Vec<f64>,
    pub completed: bool,
    pub failed_index: Option<usize>,
    pub limit_verification: Option<VerificationReport>,
}

impl ContinuationOutcome {
    pub fn levels(&self) -> Vec<f64> {
        self.steps.iter().map(|s| s.result.level).collect()
    }

    pub fn summary(&self) -> ContinuationSummary {
        ContinuationSummary {
            levels: self.levels(),
            completed: self.completed,
            failed_index: self.failed_index,
            limit_verification: self.limit_verification,
        }
    }
}

/// Follows `c^-(1, b_k, lambda)` along the given non-increasing sequence,
/// warm-starting each solve with the previous minimizer direction.
pub fn continuation_b_to_zero(
    base: &ProblemParams,
    b_seq: &[f64],
    mesh: &Arc<RadialMesh>,
    cfg: &NehariConfig,
) -> Result<ContinuationOutcome, SolverError> {
    if base.a != 1.0 {
        return Err(SolverError::Invalid("continuation uses the normalization a = 1".into()));
    }
    if base.lambda <= 0.0 {
        return Err(SolverError::Invalid("continuation needs lambda > 0".into()));
    }
    if b_seq.is_empty() {
        return Err(SolverError::Invalid("empty b sequence".into()));
    }
    if b_seq.windows(2).any(|w| w[1] > w[0]) || b_seq.iter().any(|&b| b < 0.0) {
        return Err(SolverError::Invalid("b sequence must be non-increasing and >= 0".into()));
    }

    let mut steps: Vec<ContinuationStep> = Vec::with_capacity(b_seq.len());
    let mut warm: Option<_> = None;
    for (index, &b) in b_seq.iter().enumerate() {
        let params = base.with_b(b);
        let result = match &warm {
            Some(w) => nehari_minus_minimize(&params, mesh, w, cfg),
            None => {
                // First point: take the best of a couple of standard starts.
                let mut best: Option<NehariResult> = None;
                for s in standard_starts(mesh, 4, 0) {
                    if let Ok(r) = nehari_minus_minimize(&params, mesh, &s, cfg)
                        && best.as_ref().is_none_or(|b| r.level < b.level)
                    {
                        best = Some(r);
                    }
                }
                best.ok_or(SolverError::NehariEmptyAlongStart)
            }
        };
        match result {
            Ok(r) => {
                warm = Some(r.minimizer.clone());
                steps.push(ContinuationStep { b, result: r });
            }
            Err(SolverError::NehariEmptyAlongStart) => {
                return Ok(ContinuationOutcome {
                    steps,
                    completed: false,
                    failed_index: Some(index),
                    limit_verification: None,
                });
            }
            Err(e) => return Err(e),
        }
    }
    let last = steps.last().expect("sequence nonempty");
    let limit = verify_solution(&last.result.minimizer, &base.with_b(last.b));
    Ok(ContinuationOutcome {
        steps,
        completed: true,
        failed_index: None,
        limit_verification: Some(limit),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::mesh::Grading;

    #[test]
    fn coarse_continuation_reaches_the_limit_equation() {
        // The b values must sit below the C2 hyperbola (b ~ 4.6e-4 at a = 1)
        // for the branch to exist down to the limit.
        let mesh = Arc::new(RadialMesh::new(5, 96, Grading::Refined).unwrap());
        let base = ProblemParams::new(5, 1.0, 0.0, 1.0, 3.0).unwrap();
        let cfg = NehariConfig { max_iter: 8000, ..Default::default() };
        let out =
            continuation_b_to_zero(&base, &[2e-4, 1e-4, 0.0], &mesh, &cfg).unwrap();
        assert!(out.completed);
        let levels = out.levels();
        assert!(levels.windows(2).all(|w| w[1] <= w[0] + 1e-9), "{levels:?}");
        let report = out.limit_verification.unwrap();
        assert!(report.pde_residual < 1e-4, "residual {}", report.pde_residual);
        assert!(report.pohozaev_defect < 1e-2, "defect {}", report.pohozaev_defect);
        assert!(report.energy > 0.0);
    }

    #[test]
    fn rejects_bad_sequences() {
        let mesh = Arc::new(RadialMesh::new(5, 64, Grading::Refined).unwrap());
        let cfg = NehariConfig::default();
        let base = ProblemParams::new(5, 1.0, 0.0, 1.0, 3.0).unwrap();
        assert!(continuation_b_to_zero(&base, &[0.1, 0.2], &mesh, &cfg).is_err());
        assert!(continuation_b_to_zero(&base, &[], &mesh, &cfg).is_err());
        let a2 = ProblemParams::new(5, 2.0, 0.0, 1.0, 3.0).unwrap();
        assert!(continuation_b_to_zero(&a2, &[0.1], &mesh, &cfg).is_err());
        let l0 = ProblemParams::new(5, 1.0, 0.0, 0.0, 3.0).unwrap();
        assert!(continuation_b_to_zero(&l0, &[0.1], &mesh, &cfg).is_err());
    }
}

//! The `(a, b)` phase diagram: per-cell regime against the two critical
//! hyperbolas (exact and mesh-level constants), Nehari emptiness probes at
//! `lambda = 0`, and optional extremal-parameter estimates. Cells are
//! independent and evaluated as a parallel map; per-cell seeds derive from
//! the global seed and the cell index so parallel scheduling cannot change
//! the output.

use std::sync::Arc;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::{ExtremalOptions, SolverError, extremal_lambda0, standard_starts};
use crate::constants::{Constants, constants_with_sobolev, sobolev_constant};
use crate::fiber::{FiberClass, ProblemParams, classify_fiber, fiber_infimum};
use crate::function::discrete_sobolev_constant;
use crate::mesh::RadialMesh;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Regime {
    BelowC1,
    OnC1,
    Between,
    OnC2,
    AboveC2,
}

impl Regime {
    fn classify(product: f64, consts: &Constants) -> Regime {
        let band = 1e-9;
        if (product - consts.c1).abs() <= band * consts.c1 {
            Regime::OnC1
        } else if (product - consts.c2).abs() <= band * consts.c2 {
            Regime::OnC2
        } else if product < consts.c1 {
            Regime::BelowC1
        } else if product < consts.c2 {
            Regime::Between
        } else {
            Regime::AboveC2
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum LambdaPolicy {
    /// Regime classification and emptiness probes only.
    Skip,
    /// Additionally estimate `lambda_0^*` on cells at or above the mesh-level
    /// `C1` hyperbola.
    Estimate,
}

#[derive(Debug, Clone, Serialize)]
pub struct PhaseCell {
    pub a: f64,
    pub b: f64,
    /// `a^((N-4)/2) b`.
    pub product: f64,
    /// Regime against the exact constants.
    pub regime: Regime,
    /// Regime against the mesh-level (`S_h`) constants.
    pub regime_mesh: Regime,
    /// No probed direction has fiber critical points at `lambda = 0`.
    pub nehari_empty_at_lambda0: bool,
    /// Some probed direction has negative energy at `lambda = 0`.
    pub phi0_negative_found: bool,
    pub lambda0_star_est: Option<f64>,
    pub error: Option<String>,
}

#[derive(Debug, Clone)]
pub struct PhaseGrid {
    pub a_values: Vec<f64>,
    pub b_values: Vec<f64>,
}

/// Evaluates the diagram over the tensor grid, row-major in `(a, b)`.
/// `base` carries the dimension and exponent; its `a`, `b`, `lambda` are
/// ignored.
pub fn phase_diagram(
    base: &ProblemParams,
    grid: &PhaseGrid,
    policy: LambdaPolicy,
    mesh: &Arc<RadialMesh>,
    seed: u64,
) -> Result<Vec<PhaseCell>, SolverError> {
    if grid.a_values.is_empty() || grid.b_values.is_empty() {
        return Err(SolverError::Invalid("empty phase grid".into()));
    }
    let exact = sobolev_constant(base.n).map_err(|e| SolverError::Invalid(e.to_string()))?;
    let s_h = discrete_sobolev_constant(mesh)?.value;
    let mesh_consts =
        constants_with_sobolev(base.n, s_h).map_err(|e| SolverError::Invalid(e.to_string()))?;

    let cells: Vec<(usize, f64, f64)> = grid
        .a_values
        .iter()
        .flat_map(|&a| grid.b_values.iter().map(move |&b| (a, b)))
        .enumerate()
        .map(|(i, (a, b))| (i, a, b))
        .collect();

    Ok(cells
        .par_iter()
        .map(|&(index, a, b)| {
            evaluate_cell(base, a, b, &exact, &mesh_consts, policy, mesh, seed, index)
        })
        .collect())
}

#[allow(clippy::too_many_arguments)]
fn evaluate_cell(
    base: &ProblemParams,
    a: f64,
    b: f64,
    exact: &Constants,
    mesh_consts: &Constants,
    policy: LambdaPolicy,
    mesh: &Arc<RadialMesh>,
    seed: u64,
    index: usize,
) -> PhaseCell {
    let product = exact.parameter_product(a, b);
    let mut cell = PhaseCell {
        a,
        b,
        product,
        regime: Regime::classify(product, exact),
        regime_mesh: Regime::classify(product, mesh_consts),
        nehari_empty_at_lambda0: true,
        phi0_negative_found: false,
        lambda0_star_est: None,
        error: None,
    };
    let params = match ProblemParams::new(base.n, a, b, 0.0, base.p) {
        Ok(p) => p,
        Err(e) => {
            cell.error = Some(e.to_string());
            return cell;
        }
    };
    let cell_seed = seed ^ (index as u64).wrapping_mul(0x9e37_79b9_7f4a_7c15);
    for probe in standard_starts(mesh, 12, cell_seed) {
        let input = probe.fiber_input(&params);
        match classify_fiber(&input) {
            Ok(rep) => {
                if matches!(rep.class, FiberClass::TwoCritical | FiberClass::SingleMax) {
                    cell.nehari_empty_at_lambda0 = false;
                }
            }
            Err(e) => {
                cell.error = Some(e.to_string());
                return cell;
            }
        }
        match fiber_infimum(&input) {
            Ok(inf) if inf < 0.0 => cell.phi0_negative_found = true,
            Ok(_) => {}
            Err(e) => {
                cell.error = Some(e.to_string());
                return cell;
            }
        }
    }
    if policy == LambdaPolicy::Estimate
        && mesh_consts.parameter_product(a, b) >= mesh_consts.c1
    {
        let opts = ExtremalOptions {
            n_starts: 4,
            seed: cell_seed,
            max_iter: 200,
            extra_starts: Vec::new(),
        };
        match extremal_lambda0(&params, mesh, &opts) {
            Ok(est) => cell.lambda0_star_est = Some(est.lambda_upper),
            Err(e) => cell.error = Some(e.to_string()),
        }
    }
    cell
}

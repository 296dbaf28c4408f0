//! Solution-quality checks: discrete PDE residual and the Pohozaev defect of
//! the frozen-coefficient equation on the radial ball.

use serde::Serialize;

use crate::fiber::ProblemParams;
use crate::function::{DiscreteFunction, energy_and_gradient};

#[derive(Debug, Clone, Copy, Serialize)]
pub struct VerificationReport {
    /// `H^1` norm of the Riesz gradient of the energy at the candidate.
    pub pde_residual: f64,
    /// Scaled defect of the Pohozaev identity for
    /// `-(a + bA) Lap u = |u|^{2*-2} u + lambda |u|^{p-2} u` on the unit ball:
    /// `(N-2)/2 (a+bA) A + 1/2 (a+bA) |S^{N-1}| u'(1)^2 - N (C/2* + lambda P/p)`,
    /// normalized by the largest constituent term.
    pub pohozaev_defect: f64,
    pub energy: f64,
}

pub fn verify_solution(u: &DiscreteFunction, params: &ProblemParams) -> VerificationReport {
    let eg = energy_and_gradient(u, params);
    let f = eg.functionals;
    let n = params.n as f64;
    let ts = params.two_star();
    let coeff = params.a + params.b * f.grad_sq;
    let volume = (n - 2.0) / 2.0 * coeff * f.grad_sq;
    let potential = n * (f.crit_int / ts + params.lambda * f.pert_int / params.p);
    let du = u.boundary_derivative();
    let boundary = 0.5 * coeff * u.mesh().surface() * du * du;
    let scale = volume.abs().max(potential.abs()).max(boundary.abs());
    let defect = if scale == 0.0 {
        0.0
    } else {
        (volume + boundary - potential).abs() / scale
    };
    VerificationReport {
        pde_residual: eg.gradient.h1_norm(),
        pohozaev_defect: defect,
        energy: eg.energy,
    }
}

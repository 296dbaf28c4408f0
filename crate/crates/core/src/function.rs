//! Grid functions on a radial mesh: quadrature-backed norms, the energy and
//! its Riesz gradient, truncated extremal bubbles, and the mesh-level Sobolev
//! constant.

use std::fmt::Write as _;
use std::sync::Arc;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::fiber::{FiberInput, ProblemParams};
use crate::mesh::{MeshError, RadialMesh};

#[derive(Debug, Error)]
pub enum FunctionError {
    #[error("function is defined on a different mesh")]
    MeshMismatch,
    #[error("value column length {got} does not match mesh nodes {want}")]
    LengthMismatch { got: usize, want: usize },
    #[error(transparent)]
    Mesh(#[from] MeshError),
    #[error("descent stagnated before tolerance; best value {best}")]
    Stagnation { best: f64 },
}

/// Radial grid function with the Dirichlet value pinned at `r = 1`.
#[derive(Debug, Clone)]
pub struct DiscreteFunction {
    mesh: Arc<RadialMesh>,
    values: Vec<f64>,
}

/// The norms feeding the scalar fiber analysis.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FunctionalValues {
    /// `||u||^2 = int |grad u|^2`.
    pub grad_sq: f64,
    /// `||u||_{2*}^{2*}`.
    pub crit_int: f64,
    /// `||u||_p^p`.
    pub pert_int: f64,
    /// `||u||_2^2`.
    pub l2_sq: f64,
}

impl DiscreteFunction {
    pub fn zeros(mesh: Arc<RadialMesh>) -> Self {
        let values = vec![0.0; mesh.nodes().len()];
        Self { mesh, values }
    }

    /// Samples `f(r)` at the nodes; the boundary node is forced to zero.
    pub fn from_profile(mesh: Arc<RadialMesh>, f: impl Fn(f64) -> f64) -> Self {
        let mut values: Vec<f64> = mesh.nodes().iter().map(|&r| f(r)).collect();
        *values.last_mut().unwrap() = 0.0;
        Self { mesh, values }
    }

    pub fn from_values(mesh: Arc<RadialMesh>, mut values: Vec<f64>) -> Result<Self, FunctionError> {
        if values.len() != mesh.nodes().len() {
            return Err(FunctionError::LengthMismatch {
                got: values.len(),
                want: mesh.nodes().len(),
            });
        }
        *values.last_mut().unwrap() = 0.0;
        Ok(Self { mesh, values })
    }

    pub fn mesh(&self) -> &Arc<RadialMesh> {
        &self.mesh
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn same_mesh(&self, other: &Self) -> bool {
        Arc::ptr_eq(&self.mesh, &other.mesh)
    }

    pub fn scale(&mut self, factor: f64) {
        for v in &mut self.values {
            *v *= factor;
        }
    }

    pub fn scaled(&self, factor: f64) -> Self {
        let mut out = self.clone();
        out.scale(factor);
        out
    }

    /// `self += factor * other`.
    pub fn axpy(&mut self, factor: f64, other: &Self) {
        debug_assert!(self.same_mesh(other));
        for (v, o) in self.values.iter_mut().zip(&other.values) {
            *v += factor * o;
        }
        *self.values.last_mut().unwrap() = 0.0;
    }

    /// Stiffness bilinear form `int grad u . grad v`.
    pub fn h1_inner(&self, other: &Self) -> f64 {
        debug_assert!(self.same_mesh(other));
        self.mesh
            .stiffness()
            .iter()
            .zip(self.values.windows(2))
            .zip(other.values.windows(2))
            .map(|((k, u), v)| k * (u[1] - u[0]) * (v[1] - v[0]))
            .sum()
    }

    pub fn grad_sq(&self) -> f64 {
        self.h1_inner(self)
    }

    pub fn h1_norm(&self) -> f64 {
        self.grad_sq().max(0.0).sqrt()
    }

    /// Normalizes to `||u|| = 1`; no-op on the zero function.
    pub fn normalize(&mut self) -> f64 {
        let norm = self.h1_norm();
        if norm > 0.0 {
            self.scale(1.0 / norm);
        }
        norm
    }

    /// Quadrature norms used by the fiber analysis.
    pub fn functionals(&self, params: &ProblemParams) -> FunctionalValues {
        let ts = params.two_star();
        let p = params.p;
        let mesh = &self.mesh;
        FunctionalValues {
            grad_sq: self.grad_sq(),
            crit_int: mesh.integrate_nodal(|v| v.abs().powf(ts), &self.values),
            pert_int: mesh.integrate_nodal(|v| v.abs().powf(p), &self.values),
            l2_sq: mesh.integrate_nodal(|v| v * v, &self.values),
        }
    }

    /// Fiber-map data of this direction (mesh-level, so the exact Sobolev
    /// check is bypassed: the mesh inequality holds by definition of `S_h`).
    pub fn fiber_input(&self, params: &ProblemParams) -> FiberInput {
        let f = self.functionals(params);
        FiberInput::unchecked(f.grad_sq, f.crit_int, f.pert_int, *params)
    }

    /// One-sided boundary derivative `u'(1)`; enters the boundary term of the
    /// Pohozaev defect.
    pub fn boundary_derivative(&self) -> f64 {
        let nodes = self.mesh.nodes();
        let m = nodes.len() - 1;
        (self.values[m] - self.values[m - 1]) / (nodes[m] - nodes[m - 1])
    }

    /// Linear resampling onto another mesh (used for nested refinement).
    pub fn resample(&self, target: Arc<RadialMesh>) -> Self {
        let src_nodes = self.mesh.nodes();
        let mut j = 0;
        let values: Vec<f64> = target
            .nodes()
            .iter()
            .map(|&r| {
                while j + 2 < src_nodes.len() && src_nodes[j + 1] < r {
                    j += 1;
                }
                let (r0, r1) = (src_nodes[j], src_nodes[j + 1]);
                let t = ((r - r0) / (r1 - r0)).clamp(0.0, 1.0);
                self.values[j] * (1.0 - t) + self.values[j + 1] * t
            })
            .collect();
        let mut out = Self { mesh: target, values };
        *out.values.last_mut().unwrap() = 0.0;
        out
    }

    /// Relative gap between the nodal quadrature of `|u|^{2*}` and a
    /// per-interval Gauss evaluation of the same integral for the
    /// piecewise-linear interpolant. Large gaps flag under-resolved iterates
    /// (concentration reaching the mesh scale).
    pub fn resolution_gap(&self, params: &ProblemParams) -> f64 {
        let ts = params.two_star();
        let nodal = self.mesh.integrate_nodal(|v| v.abs().powf(ts), &self.values);
        let nodes = self.mesh.nodes().to_vec();
        let vals = self.values.clone();
        let reference = self.mesh.integrate_reference(|r| {
            let j = match nodes.binary_search_by(|x| x.partial_cmp(&r).unwrap()) {
                Ok(j) => j.min(nodes.len() - 2),
                Err(j) => (j - 1).min(nodes.len() - 2),
            };
            let t = (r - nodes[j]) / (nodes[j + 1] - nodes[j]);
            (vals[j] * (1.0 - t) + vals[j + 1] * t).abs().powf(ts)
        });
        if reference == 0.0 {
            return 0.0;
        }
        ((nodal - reference) / reference).abs()
    }

    /// Serializes as CSV `r,value` with 17 significant digits.
    pub fn to_csv(&self) -> String {
        let mut out = String::from("r,value\n");
        for (r, v) in self.mesh.nodes().iter().zip(&self.values) {
            let _ = writeln!(out, "{r:.16e},{v:.16e}");
        }
        out
    }

    /// Parses a `r,value` CSV produced by [`Self::to_csv`] back onto a mesh.
    pub fn from_csv(mesh: Arc<RadialMesh>, text: &str) -> Result<Self, FunctionError> {
        let mut lines = text.lines().enumerate();
        match lines.next() {
            Some((_, h)) if h.trim() == "r,value" => {}
            _ => {
                return Err(MeshError::Csv { line: 1, reason: "expected header `r,value`".into() }
                    .into());
            }
        }
        let mut values = Vec::new();
        for (i, line) in lines {
            if line.trim().is_empty() {
                continue;
            }
            let v = line
                .split(',')
                .nth(1)
                .ok_or(MeshError::Csv { line: i + 1, reason: "missing value column".into() })?;
            values.push(v.trim().parse().map_err(|e| MeshError::Csv {
                line: i + 1,
                reason: format!("{e}"),
            })?);
        }
        Self::from_values(mesh, values)
    }
}

/// Energy value and discrete Riesz gradient.
#[derive(Debug, Clone)]
pub struct EnergyGradient {
    pub energy: f64,
    /// `H^1` representative of the energy derivative: for all grid `v`,
    /// `<grad, v>_{H1} = (a + bA) <grad u, grad v> - <|u|^{2*-2}u + lambda |u|^{p-2}u, v>`.
    pub gradient: DiscreteFunction,
    pub functionals: FunctionalValues,
}

/// Energy `Phi(u) = a/2 A + b/4 A^2 - C/2* - lambda/p P` and its gradient.
pub fn energy_and_gradient(u: &DiscreteFunction, params: &ProblemParams) -> EnergyGradient {
    let f = u.functionals(params);
    let ts = params.two_star();
    let energy = 0.5 * params.a * f.grad_sq + 0.25 * params.b * f.grad_sq * f.grad_sq
        - f.crit_int / ts
        - params.lambda / params.p * f.pert_int;

    // Right-hand side: (a + bA) K u - M f(u), Dirichlet row dropped.
    let coeff = params.a + params.b * f.grad_sq;
    let mesh = u.mesh();
    let k = mesh.stiffness();
    let w = mesh.weights();
    let vals = u.values();
    let m = vals.len() - 1;
    let mut rhs = vec![0.0; m];
    for i in 0..m {
        let mut ku = 0.0;
        if i > 0 {
            ku += k[i - 1] * (vals[i] - vals[i - 1]);
        }
        ku += k[i] * (vals[i] - vals[i + 1]);
        let v = vals[i];
        let source = v.abs().powf(ts - 2.0) * v + params.lambda * v.abs().powf(params.p - 2.0) * v;
        rhs[i] = coeff * ku - w[i] * source;
    }
    let free = solve_stiffness(k, &rhs);
    let mut gradient = DiscreteFunction::zeros(Arc::clone(mesh));
    gradient.values[..m].copy_from_slice(&free);
    EnergyGradient { energy, gradient, functionals: f }
}

/// Solves `K x = rhs` for the free nodes `0..M` (node `M` pinned to zero) by
/// the Thomas algorithm. `K` is the radial stiffness matrix, symmetric
/// positive definite because all interval factors are positive.
fn solve_stiffness(k: &[f64], rhs: &[f64]) -> Vec<f64> {
    let m = rhs.len();
    debug_assert_eq!(k.len(), m);
    let mut diag: Vec<f64> = (0..m)
        .map(|i| if i == 0 { k[0] } else { k[i - 1] + k[i] })
        .collect();
    let mut b = rhs.to_vec();
    for i in 1..m {
        let off = -k[i - 1];
        let factor = off / diag[i - 1];
        diag[i] -= factor * off;
        b[i] -= factor * b[i - 1];
    }
    let mut x = vec![0.0; m];
    x[m - 1] = b[m - 1] / diag[m - 1];
    for i in (0..m - 1).rev() {
        x[i] = (b[i] + k[i] * x[i + 1]) / diag[i];
    }
    x
}

/// Riesz representative of the load `v -> sum_i w_i load_i v_i`.
pub fn riesz_of_load(mesh: &Arc<RadialMesh>, load: &[f64]) -> DiscreteFunction {
    let w = mesh.weights();
    let m = mesh.nodes().len() - 1;
    let rhs: Vec<f64> = (0..m).map(|i| w[i] * load[i]).collect();
    let free = solve_stiffness(mesh.stiffness(), &rhs);
    let mut out = DiscreteFunction::zeros(Arc::clone(mesh));
    out.values[..m].copy_from_slice(&free);
    out
}

/// Truncated extremal profile `phi(r) / (eps + r^2)^{(N-2)/2}`, normalized to
/// `||u|| = 1` on the mesh.
#[derive(Debug, Clone)]
pub struct Bubble {
    pub func: DiscreteFunction,
    /// Set when the peak is under-resolved (node spacing at the origin
    /// exceeds `sqrt(eps)`).
    pub under_resolved: bool,
}

/// Quintic cutoff: identically 1 on `[0, c/2]`, identically 0 on `[c, 1]`,
/// with two continuous derivatives.
fn quintic_cutoff(r: f64, c: f64) -> f64 {
    if r <= 0.5 * c {
        1.0
    } else if r >= c {
        0.0
    } else {
        let s = (r - 0.5 * c) / (0.5 * c);
        1.0 - s * s * s * (10.0 - 15.0 * s + 6.0 * s * s)
    }
}

pub fn bubble(mesh: &Arc<RadialMesh>, eps: f64, cutoff_radius: f64) -> Result<Bubble, FunctionError> {
    assert!(eps > 0.0 && eps <= 1.0, "eps must lie in (0, 1]");
    assert!(
        cutoff_radius > 0.0 && cutoff_radius < 1.0,
        "cutoff radius must lie in (0, 1)"
    );
    let n = mesh.dim() as f64;
    let expo = (n - 2.0) / 2.0;
    let mut func = DiscreteFunction::from_profile(Arc::clone(mesh), |r| {
        quintic_cutoff(r, cutoff_radius) / (eps + r * r).powf(expo)
    });
    let norm = func.normalize();
    debug_assert!(norm > 0.0);
    let peak_spacing = mesh.nodes()[1] - mesh.nodes()[0];
    Ok(Bubble { func, under_resolved: peak_spacing > eps.sqrt() })
}

/// Result of the Rayleigh-quotient minimization for the mesh-level Sobolev
/// constant.
#[derive(Debug, Clone)]
pub struct SobolevEstimate {
    /// `S_h = min A / C^{2/2*}` over resolvable grid functions.
    pub value: f64,
    pub minimizer: DiscreteFunction,
    pub iterations: usize,
    /// Gradient tolerance was met.
    pub converged: bool,
    /// The descent stopped at the resolution guard: further concentration
    /// would leave the quadrature-consistent regime.
    pub resolution_limited: bool,
}

/// Minimizes `A / C^{2/2*}` by projected descent on the unit sphere from a
/// bubble start. The iteration refuses steps whose nodal and reference
/// quadratures of `|u|^{2*}` disagree beyond 0.5%, so it stalls at the mesh
/// resolution instead of collapsing onto single-cell spikes; refusal is
/// reported, not silently absorbed.
pub fn discrete_sobolev_constant(mesh: &Arc<RadialMesh>) -> Result<SobolevEstimate, FunctionError> {
    // The exponent pair (p, lambda) is irrelevant here; p only needs validity.
    let nf = mesh.dim() as f64;
    let params = ProblemParams::new(mesh.dim(), 1.0, 0.0, 0.0, 0.5 * (2.0 + 2.0 * nf / (nf - 2.0)))
        .expect("valid params");
    let ts = params.two_star();
    let quotient_exponent = 2.0 / ts;
    const RESOLUTION_TOL: f64 = 5e-3;
    const GRAD_TOL: f64 = 1e-8;
    const MAX_ITER: usize = 20_000;

    let quotient = |u: &DiscreteFunction| {
        let c = mesh.integrate_nodal(|v| v.abs().powf(ts), u.values());
        u.grad_sq() / c.powf(quotient_exponent)
    };

    // Coarse line search over the bubble family picks the deepest resolvable
    // concentration as the start.
    let mut u = bubble(mesh, 0.05, 0.8)?.func;
    let mut q = quotient(&u);
    let mut eps = 0.05;
    while eps > 1e-10 {
        eps *= 0.5;
        let cand = bubble(mesh, eps, 0.8)?.func;
        if cand.resolution_gap(&params) > RESOLUTION_TOL {
            break;
        }
        let cq = quotient(&cand);
        if cq >= q {
            break;
        }
        u = cand;
        q = cq;
    }

    let mut best = u.clone();
    let mut best_q = q;
    let mut converged = false;
    let mut resolution_limited = false;
    let mut iterations = 0;
    let mut stalled = 0usize;
    let mut prev: Option<(DiscreteFunction, DiscreteFunction)> = None;
    let mut step = 0.2;

    for it in 0..MAX_ITER {
        iterations = it + 1;
        // Gradient of A / C^{2/2*} at A = 1 in the H1 metric.
        let c = mesh.integrate_nodal(|v| v.abs().powf(ts), u.values());
        let load: Vec<f64> = u.values().iter().map(|&v| v.abs().powf(ts - 2.0) * v).collect();
        let riesz = riesz_of_load(mesh, &load);
        let cq = c.powf(quotient_exponent);
        let mut grad = u.clone();
        grad.scale(2.0 / cq);
        grad.axpy(-2.0 * u.grad_sq() / (cq * c), &riesz);
        // Tangential projection on the sphere A = 1.
        let radial = grad.h1_inner(&u);
        let mut tangent = grad;
        tangent.axpy(-radial, &u);
        let g_norm = tangent.h1_norm();
        if g_norm <= GRAD_TOL * q.max(1.0) {
            converged = true;
            break;
        }

        if let Some((pu, pg)) = &prev {
            let mut du = u.clone();
            du.axpy(-1.0, pu);
            let mut dg = tangent.clone();
            dg.axpy(-1.0, pg);
            let num = du.h1_inner(&du);
            let den = du.h1_inner(&dg);
            if den > 0.0 && num > 0.0 {
                step = (num / den).clamp(1e-6, 1e3);
            }
        }
        prev = Some((u.clone(), tangent.clone()));

        let mut accepted = false;
        let mut s = step;
        for _ in 0..60 {
            let mut trial = u.clone();
            trial.axpy(-s, &tangent);
            trial.normalize();
            if trial.resolution_gap(&params) > RESOLUTION_TOL {
                s *= 0.5;
                resolution_limited = true;
                continue;
            }
            let tq = quotient(&trial);
            if tq <= q - 1e-4 * s * g_norm * g_norm {
                let drop = q - tq;
                u = trial;
                q = tq;
                accepted = true;
                resolution_limited = false;
                stalled = if drop <= 1e-12 * q.abs().max(1.0) { stalled + 1 } else { 0 };
                break;
            }
            s *= 0.5;
        }
        if q < best_q {
            best_q = q;
            best = u.clone();
        }
        if !accepted || stalled >= 25 {
            // Either the resolution guard or the line search blocked progress.
            return Ok(SobolevEstimate {
                value: best_q,
                minimizer: best,
                iterations,
                converged: false,
                resolution_limited,
            });
        }
    }
    if best_q > q {
        best_q = q;
        best = u;
    }
    Ok(SobolevEstimate {
        value: best_q,
        minimizer: best,
        iterations,
        converged,
        resolution_limited,
    })
}

//! Radial discretization of the unit ball in dimension `N`: node layout and
//! quadrature for integrals `N omega_N int_0^1 f(r) r^{N-1} dr`.
//!
//! Nodal weights come from piecewise-quadratic interpolation of the integrand
//! over node pairs, integrated exactly against the measure `r^{N-1} dr`
//! (Gauss-Legendre of sufficient degree per subinterval). Pairs whose
//! quadratic weights would dip negative (possible near the origin where the
//! measure is extremely skewed) fall back to exact piecewise-linear weights,
//! so all weights are positive and constants are integrated exactly.

use serde::{Deserialize, Serialize};
use std::fmt::Write as _;
use thiserror::Error;

use crate::constants::unit_ball_volume;

#[derive(Debug, Error, PartialEq)]
pub enum MeshError {
    #[error("dimension must satisfy N >= 5, got {0}")]
    DimensionTooLow(u32),
    #[error("mesh needs at least 64 intervals, got {0}")]
    TooCoarse(usize),
    #[error("unknown grading tag `{0}`")]
    BadGrading(String),
    #[error("malformed CSV at line {line}: {reason}")]
    Csv { line: usize, reason: String },
}

/// Node placement strategy.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Grading {
    Uniform,
    /// Smoothstep map clustering nodes at both the origin (bubble peaks) and
    /// the boundary (Dirichlet layer).
    Refined,
}

impl std::str::FromStr for Grading {
    type Err = MeshError;
    fn from_str(s: &str) -> Result<Self, MeshError> {
        match s {
            "uniform" => Ok(Grading::Uniform),
            "refined" => Ok(Grading::Refined),
            other => Err(MeshError::BadGrading(other.into())),
        }
    }
}

/// 8-point Gauss-Legendre rule on [-1, 1]; exact through degree 15, enough
/// for quadratic basis times `r^{N-1}` up to `N = 14`.
const GL_NODES: [f64; 8] = [
    -0.9602898564975363,
    -0.7966664774136267,
    -0.525532409916329,
    -0.1834346424956498,
    0.1834346424956498,
    0.525532409916329,
    0.7966664774136267,
    0.9602898564975363,
];
const GL_WEIGHTS: [f64; 8] = [
    0.1012285362903763,
    0.2223810344533745,
    0.3137066458778873,
    0.362683783378362,
    0.362683783378362,
    0.3137066458778873,
    0.2223810344533745,
    0.1012285362903763,
];

/// Radial mesh with quadrature data.
#[derive(Debug, Clone, PartialEq)]
pub struct RadialMesh {
    n: u32,
    grading: Grading,
    /// Strictly increasing radii `r_0 = 0 < ... < r_M = 1`.
    nodes: Vec<f64>,
    /// Positive nodal weights; `sum w_i = omega_N` to machine precision.
    weights: Vec<f64>,
    /// Per-interval stiffness factors `N omega_N int_i r^{N-1} / dr_i^2`.
    stiffness: Vec<f64>,
    omega_n: f64,
}

impl RadialMesh {
    pub fn new(n: u32, intervals: usize, grading: Grading) -> Result<Self, MeshError> {
        if n < 5 {
            return Err(MeshError::DimensionTooLow(n));
        }
        if intervals < 64 {
            return Err(MeshError::TooCoarse(intervals));
        }
        let m = intervals;
        let nodes: Vec<f64> = (0..=m)
            .map(|i| {
                let s = i as f64 / m as f64;
                match grading {
                    Grading::Uniform => s,
                    Grading::Refined => s * s * (3.0 - 2.0 * s),
                }
            })
            .collect();
        Ok(Self::from_nodes(n, grading, nodes))
    }

    fn from_nodes(n: u32, grading: Grading, nodes: Vec<f64>) -> Self {
        let omega_n = unit_ball_volume(n);
        let surface = n as f64 * omega_n;
        let weights = nodal_weights(n, &nodes, surface);
        let stiffness = nodes
            .windows(2)
            .map(|w| {
                let mass = (w[1].powi(n as i32) - w[0].powi(n as i32)) / n as f64;
                surface * mass / (w[1] - w[0]).powi(2)
            })
            .collect();
        RadialMesh { n, grading, nodes, weights, stiffness, omega_n }
    }

    pub fn dim(&self) -> u32 {
        self.n
    }

    pub fn grading(&self) -> Grading {
        self.grading
    }

    /// Number of intervals `M`; there are `M + 1` nodes.
    pub fn intervals(&self) -> usize {
        self.nodes.len() - 1
    }

    pub fn nodes(&self) -> &[f64] {
        &self.nodes
    }

    pub fn weights(&self) -> &[f64] {
        &self.weights
    }

    pub fn stiffness(&self) -> &[f64] {
        &self.stiffness
    }

    pub fn omega_n(&self) -> f64 {
        self.omega_n
    }

    /// `N omega_N`, the surface area of the unit sphere.
    pub fn surface(&self) -> f64 {
        self.n as f64 * self.omega_n
    }

    /// Nodal quadrature `sum_i w_i f(u_i)`.
    pub fn integrate_nodal(&self, f: impl Fn(f64) -> f64, values: &[f64]) -> f64 {
        self.weights.iter().zip(values).map(|(w, &v)| w * f(v)).sum()
    }

    /// Same refinement (nested nodes) with twice the intervals.
    pub fn refined(&self) -> Result<Self, MeshError> {
        Self::new(self.n, 2 * self.intervals(), self.grading)
    }

    /// Integrates `f(r) r^{N-1}` (times the sphere area) with the per-interval
    /// Gauss rule on the actual radii; reference quadrature for cross-checks
    /// and resolution tests, not the nodal path.
    pub fn integrate_reference(&self, f: impl Fn(f64) -> f64) -> f64 {
        let mut total = 0.0;
        for w in self.nodes.windows(2) {
            let half = 0.5 * (w[1] - w[0]);
            let mid = 0.5 * (w[1] + w[0]);
            for (x, gw) in GL_NODES.iter().zip(GL_WEIGHTS) {
                let r = mid + half * x;
                total += gw * half * f(r) * r.powi(self.n as i32 - 1);
            }
        }
        total * self.surface()
    }

    /// Serializes as CSV `r,weight` with 17 significant digits.
    pub fn to_csv(&self) -> String {
        let mut out = String::from("r,weight\n");
        for (r, w) in self.nodes.iter().zip(&self.weights) {
            let _ = writeln!(out, "{r:.16e},{w:.16e}");
        }
        out
    }
}

fn nodal_weights(n: u32, nodes: &[f64], surface: f64) -> Vec<f64> {
    let m = nodes.len() - 1;
    let mut weights = vec![0.0; nodes.len()];
    let mut start = 0;
    // Odd interval count: do the first (origin) interval linearly.
    if !m.is_multiple_of(2) {
        linear_weights(n, nodes[0], nodes[1], &mut weights[0..2]);
        start = 1;
    }
    let mut pair = start;
    while pair + 2 <= m {
        let idx = [pair, pair + 1, pair + 2];
        let mut local = [0.0; 3];
        quadratic_weights(n, [nodes[idx[0]], nodes[idx[1]], nodes[idx[2]]], &mut local);
        if local.iter().any(|&w| w <= 0.0) {
            let mut left = [0.0; 2];
            linear_weights(n, nodes[idx[0]], nodes[idx[1]], &mut left);
            let mut right = [0.0; 2];
            linear_weights(n, nodes[idx[1]], nodes[idx[2]], &mut right);
            local = [left[0], left[1] + right[0], right[1]];
        }
        for (k, &j) in idx.iter().enumerate() {
            weights[j] += local[k];
        }
        pair += 2;
    }
    for w in &mut weights {
        *w *= surface;
    }
    weights
}

/// Exact integrals of the two hat functions on `[a, b]` against `r^{N-1} dr`.
fn linear_weights(n: u32, a: f64, b: f64, out: &mut [f64]) {
    let half = 0.5 * (b - a);
    let mid = 0.5 * (a + b);
    let (mut left, mut right) = (0.0, 0.0);
    for (x, gw) in GL_NODES.iter().zip(GL_WEIGHTS) {
        let r = mid + half * x;
        let mu = gw * half * r.powi(n as i32 - 1);
        left += mu * (b - r) / (b - a);
        right += mu * (r - a) / (b - a);
    }
    out[0] += left;
    out[1] += right;
}

/// Exact integrals of the three quadratic Lagrange basis functions on
/// `[x0, x2]` (nodes possibly unevenly spaced) against `r^{N-1} dr`.
fn quadratic_weights(n: u32, x: [f64; 3], out: &mut [f64; 3]) {
    let denom = [
        (x[0] - x[1]) * (x[0] - x[2]),
        (x[1] - x[0]) * (x[1] - x[2]),
        (x[2] - x[0]) * (x[2] - x[1]),
    ];
    let half = 0.5 * (x[2] - x[0]);
    let mid = 0.5 * (x[2] + x[0]);
    for (gx, gw) in GL_NODES.iter().zip(GL_WEIGHTS) {
        let r = mid + half * gx;
        let mu = gw * half * r.powi(n as i32 - 1);
        out[0] += mu * (r - x[1]) * (r - x[2]) / denom[0];
        out[1] += mu * (r - x[0]) * (r - x[2]) / denom[1];
        out[2] += mu * (r - x[0]) * (r - x[1]) / denom[2];
    }
}

/// Parses the `r,weight` CSV back into node/weight columns.
pub fn parse_mesh_csv(text: &str) -> Result<(Vec<f64>, Vec<f64>), MeshError> {
    let mut lines = text.lines().enumerate();
    match lines.next() {
        Some((_, header)) if header.trim() == "r,weight" => {}
        _ => {
            return Err(MeshError::Csv { line: 1, reason: "expected header `r,weight`".into() });
        }
    }
    let (mut rs, mut ws) = (Vec::new(), Vec::new());
    for (i, line) in lines {
        if line.trim().is_empty() {
            continue;
        }
        let mut parts = line.split(',');
        let parse = |s: Option<&str>| -> Result<f64, MeshError> {
            s.ok_or(MeshError::Csv { line: i + 1, reason: "missing column".into() })?
                .trim()
                .parse()
                .map_err(|e| MeshError::Csv { line: i + 1, reason: format!("{e}") })
        };
        rs.push(parse(parts.next())?);
        ws.push(parse(parts.next())?);
    }
    Ok((rs, ws))
}

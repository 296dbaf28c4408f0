//! Numerical study of the critical Kirchhoff problem
//! `-(a + b ||grad u||^2) Lap u = |u|^{2*-2} u + lambda |u|^{p-2} u` on the
//! radial unit ball in dimension `N > 4`.
//!
//! The crate has four layers:
//!
//! * [`constants`] — the Sobolev constant and the two critical constants
//!   whose hyperbolas `a^((N-4)/2) b = C_1, C_2` organize the parameter plane;
//! * [`fiber`] — exact scalar analysis of fiber maps `t -> Phi(t u)`:
//!   classification, per-direction extremal parameters, closed-form
//!   thresholds in the Kirchhoff coefficient;
//! * [`mesh`] / [`function`] — radial discretization with quadrature-backed
//!   norms, energy gradients, extremal bubbles and the mesh-level Sobolev
//!   constant;
//! * [`solvers`] — Nehari-branch and global minimization, extremal-parameter
//!   upper bounds, the `(a, b)` phase diagram, the `b -> 0` continuation and
//!   solution verification (PDE residual, Pohozaev defect).
//!
//! The `kirchhoff-fiber` binary exposes all of it as a CLI emitting JSON and
//! CSV; see [`cli`].

pub mod cli;
pub mod constants;
pub mod fiber;
pub mod function;
pub mod mesh;
pub mod rootfind;
pub mod solvers;

pub use constants::{Constants, sobolev_constant};
pub use fiber::{FiberClass, FiberInput, FiberReport, ProblemParams, classify_fiber};
pub use function::{DiscreteFunction, FunctionalValues, bubble, discrete_sobolev_constant};
pub use mesh::{Grading, RadialMesh};

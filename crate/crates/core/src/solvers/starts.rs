//! Standard multi-start profiles: three bubbles, three polynomial wells, and
//! seeded random smooth directions. Everything is normalized to `||u|| = 1`
//! and deterministic for a fixed seed.

use std::sync::Arc;

use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::function::{DiscreteFunction, bubble};
use crate::mesh::RadialMesh;

pub fn standard_starts(mesh: &Arc<RadialMesh>, n_starts: usize, seed: u64) -> Vec<DiscreteFunction> {
    let mut starts = Vec::with_capacity(n_starts);
    for eps in [0.1, 0.03, 0.01] {
        if starts.len() == n_starts {
            return starts;
        }
        if let Ok(b) = bubble(mesh, eps, 0.8) {
            starts.push(b.func);
        }
    }
    for k in 1..=3 {
        if starts.len() == n_starts {
            return starts;
        }
        let mut u =
            DiscreteFunction::from_profile(Arc::clone(mesh), |r| (1.0 - r * r).powi(k));
        u.normalize();
        starts.push(u);
    }
    let mut index = 0u64;
    while starts.len() < n_starts {
        starts.push(random_smooth(mesh, seed, index));
        index += 1;
    }
    starts
}

/// Random positive combination of smooth wells `(1 - r^2) cos(j pi r / 2)`-type
/// modes; low modes dominate so the profiles stay mesh-resolved.
fn random_smooth(mesh: &Arc<RadialMesh>, seed: u64, index: u64) -> DiscreteFunction {
    let mut rng = ChaCha8Rng::seed_from_u64(seed ^ (0x9e37_79b9_7f4a_7c15u64.wrapping_mul(index + 1)));
    let coeffs: Vec<f64> = (0..5).map(|j| rng.random_range(-1.0..1.0) / (1 + j) as f64).collect();
    let offset: f64 = rng.random_range(0.5..1.5);
    let mut u = DiscreteFunction::from_profile(Arc::clone(mesh), |r| {
        let mut v = offset;
        for (j, c) in coeffs.iter().enumerate() {
            v += c * (std::f64::consts::PI * (j + 1) as f64 * r).cos();
        }
        v * (1.0 - r * r)
    });
    u.normalize();
    u
}

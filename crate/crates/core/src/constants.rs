//! Dimensional constants of the critical problem: the Sobolev embedding
//! constant on the unit ball, and the two critical constants whose hyperbolas
//! `a^((N-4)/2) b = const` split the `(a, b)` parameter plane.

use serde::{Deserialize, Serialize};
use thiserror::Error;

#[derive(Debug, Error, PartialEq)]
pub enum ConstantsError {
    /// The constants involve the exponent `(N-4)/2`; they degenerate for `N <= 4`.
    #[error("dimension must satisfy N >= 5, got {0}")]
    DimensionTooLow(u32),
}

/// Sobolev and critical constants for a fixed dimension `N > 4`.
#[derive(Debug, Clone, Copy, Serialize, Deserialize, PartialEq)]
pub struct Constants {
    pub n: u32,
    /// Critical exponent `2N/(N-2)`, strictly below 4 for `N > 4`.
    pub two_star: f64,
    /// Best constant of `H_0^1 -> L^{2*}`, `N(N-2)/4 * |S^N|^{2/N}` with
    /// `|S^N|` the area of the unit `N`-sphere. The extremal bubbles realize
    /// exactly this value of the Rayleigh quotient.
    #[serde(rename = "S_N")]
    pub sobolev: f64,
    /// Volume of the unit ball in dimension `N` (the quadrature domain).
    #[serde(rename = "omega_N")]
    pub omega_n: f64,
    /// Sign threshold of the quartic-term energy.
    #[serde(rename = "C1")]
    pub c1: f64,
    /// Nehari emptiness threshold; always above `C1`.
    #[serde(rename = "C2")]
    pub c2: f64,
}

/// Volume of the unit ball via the exact half-integer recurrence
/// `omega_N = omega_{N-2} * 2 pi / N` (no general Gamma evaluation involved).
pub fn unit_ball_volume(n: u32) -> f64 {
    let two_pi = 2.0 * std::f64::consts::PI;
    let (mut k, mut vol) = if n.is_multiple_of(2) {
        (2u32, std::f64::consts::PI)
    } else {
        (1u32, 2.0)
    };
    while k < n {
        k += 2;
        vol *= two_pi / k as f64;
    }
    vol
}

/// Area of the unit `N`-sphere embedded in dimension `N + 1`, via the exact
/// recurrence `sigma_N = sigma_{N-2} * 2 pi / (N - 1)`.
pub fn unit_sphere_area(n: u32) -> f64 {
    let two_pi = 2.0 * std::f64::consts::PI;
    let (mut k, mut area) = if n.is_multiple_of(2) { (0u32, 2.0) } else { (1u32, two_pi) };
    while k < n {
        k += 2;
        area *= two_pi / (k - 1) as f64;
    }
    area
}

/// Computes all constants for dimension `n >= 5`.
pub fn sobolev_constant(n: u32) -> Result<Constants, ConstantsError> {
    if n < 5 {
        return Err(ConstantsError::DimensionTooLow(n));
    }
    let nf = n as f64;
    let sobolev = nf * (nf - 2.0) / 4.0 * unit_sphere_area(n).powf(2.0 / nf);
    Ok(with_sobolev(n, sobolev, unit_ball_volume(n)))
}

/// Constants with an externally supplied embedding constant (the mesh-level
/// `S_h` replaces `S_N` so that discrete threshold checks stay consistent
/// with discrete norms).
pub fn constants_with_sobolev(n: u32, sobolev: f64) -> Result<Constants, ConstantsError> {
    if n < 5 {
        return Err(ConstantsError::DimensionTooLow(n));
    }
    Ok(with_sobolev(n, sobolev, unit_ball_volume(n)))
}

fn with_sobolev(n: u32, sobolev: f64, omega_n: f64) -> Constants {
    let nf = n as f64;
    let two_star = 2.0 * nf / (nf - 2.0);
    let s_pow = sobolev.powf(nf / 2.0);
    let core = (nf - 4.0).powf((nf - 4.0) / 2.0);
    let c1 = 4.0 * core / (nf.powf((nf - 2.0) / 2.0) * s_pow);
    let c2 = 2.0 * core / ((nf - 2.0).powf((nf - 2.0) / 2.0) * s_pow);
    Constants {
        n,
        two_star,
        sobolev,
        omega_n,
        c1,
        c2,
    }
}

impl Constants {
    /// The product `a^((N-4)/2) b` that the two hyperbolas threshold.
    pub fn parameter_product(&self, a: f64, b: f64) -> f64 {
        a.powf((self.n as f64 - 4.0) / 2.0) * b
    }

    /// `b` on the hyperbola `a^((N-4)/2) b = c` for a given `a`.
    pub fn b_on_hyperbola(&self, c: f64, a: f64) -> f64 {
        c / a.powf((self.n as f64 - 4.0) / 2.0)
    }

    /// Closed-form ratio `C1/C2 = 2 ((N-2)/N)^((N-2)/2)`; the Sobolev constant cancels.
    pub fn ratio_c1_c2(&self) -> f64 {
        let nf = self.n as f64;
        2.0 * ((nf - 2.0) / nf).powf((nf - 2.0) / 2.0)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::PI;

    #[test]
    fn rejects_low_dimension() {
        for n in 0..5 {
            assert!(sobolev_constant(n).is_err());
        }
    }

    #[test]
    fn ball_volumes_match_closed_forms() {
        assert!((unit_ball_volume(2) - PI).abs() < 1e-15);
        assert!((unit_ball_volume(3) - 4.0 * PI / 3.0).abs() < 1e-15);
        assert!((unit_ball_volume(5) - 8.0 * PI * PI / 15.0).abs() < 1e-14);
        assert!((unit_ball_volume(6) - PI.powi(3) / 6.0).abs() < 1e-14);
        assert!((unit_sphere_area(3) - 2.0 * PI * PI).abs() < 1e-14);
        assert!((unit_sphere_area(5) - PI.powi(3)).abs() < 1e-13);
    }

    // Independent route: everything for N = 5 from scratch. |S^5| = pi^3,
    // and the beta-function evaluation of the extremal bubble's Rayleigh
    // quotient gives the same value (45 I6 / (5 I4)^{3/5} omega^{2/5} with
    // I6 = B(7/2,3/2)/2, I4 = B(5/2,5/2)/2).
    fn dimension_five_reference() -> (f64, f64, f64) {
        let s = 15.0 / 4.0 * PI.powi(3).powf(0.4);
        let c1 = 4.0 / (5f64.powf(1.5) * s.powf(2.5));
        let c2 = 2.0 / (3f64.powf(1.5) * s.powf(2.5));
        (s, c1, c2)
    }

    #[test]
    fn sobolev_constant_matches_extremal_quotient() {
        // Quotient of v = (1 + r^2)^{-3/2} over all of R^5, by exact moments:
        // A = 45 omega_5 B(7/2,3/2)/2, C-integral = 5 omega_5 B(5/2,5/2)/2.
        let omega = 8.0 * PI * PI / 15.0;
        let g15 = 0.5 * PI.sqrt();
        let g25 = 1.5 * g15;
        let g35 = 2.5 * g25;
        let i6 = 0.5 * g35 * g15 / 24.0;
        let i4 = 0.5 * g25 * g25 / 24.0;
        let quotient = 45.0 * omega * i6 / (5.0 * omega * i4).powf(0.6);
        let s = sobolev_constant(5).unwrap().sobolev;
        assert!(
            (quotient - s).abs() / s < 1e-13,
            "bubble quotient {quotient} vs S_5 {s}"
        );
    }

    #[test]
    fn dimension_five_values() {
        let c = sobolev_constant(5).unwrap();
        let (s, c1, c2) = dimension_five_reference();
        assert!((c.sobolev - s).abs() / s < 1e-14);
        assert!((c.c1 - c1).abs() / c1 < 1e-13);
        assert!((c.c2 - c2).abs() / c2 < 1e-13);
        assert!((c.two_star - 10.0 / 3.0).abs() < 1e-15);
    }

    #[test]
    fn ratio_cancels_sobolev_constant() {
        // N=5: 2 (3/5)^{3/2} ~ 0.929516
        let c = sobolev_constant(5).unwrap();
        let ratio = c.c1 / c.c2;
        assert!((ratio - 2.0 * 0.6f64.powf(1.5)).abs() < 1e-13);
        assert!((ratio - 0.929516).abs() < 1e-6);
        for n in 5..=12 {
            let c = sobolev_constant(n).unwrap();
            assert!(c.c1 > 0.0 && c.c2 > 0.0);
            assert!(c.c1 < c.c2);
            let rel = (c.c1 / c.c2 - c.ratio_c1_c2()).abs() / c.ratio_c1_c2();
            assert!(rel < 1e-12, "N={n}: ratio mismatch {rel:e}");
        }
    }

    #[test]
    fn c1_times_sobolev_power_is_dimensionless() {
        // S_5^{5/2} C1(5) = 4/5^{3/2} ~ 0.357771
        let c = sobolev_constant(5).unwrap();
        let v = c.sobolev.powf(2.5) * c.c1;
        let expect = 4.0 / 5f64.powf(1.5);
        assert!((v - expect).abs() / expect < 1e-13);
        assert!((v - 0.357771).abs() < 1e-6);
    }

    #[test]
    fn hyperbola_inverts_product() {
        let c = sobolev_constant(7).unwrap();
        let a = 1.7;
        let b = c.b_on_hyperbola(c.c2, a);
        assert!((c.parameter_product(a, b) - c.c2).abs() / c.c2 < 1e-14);
    }
}

//! Scalar root finding: Newton iteration safeguarded by bisection on a
//! bracketing interval, plus geometric bracket expansion.

use thiserror::Error;

/// Relative tolerance on the root location.
pub const TOL_ROOT: f64 = 1e-12;
/// Tolerance on the scaled residual.
pub const TOL_RESIDUAL: f64 = 1e-10;
/// Cap on geometric bracket expansions/contractions.
pub const MAX_DOUBLINGS: u32 = 60;

#[derive(Debug, Error, PartialEq)]
pub enum RootError {
    #[error("interval [{lo}, {hi}] does not bracket a sign change")]
    NotBracketed { lo: f64, hi: f64 },
    #[error("no sign change found after {0} geometric expansions")]
    ExpansionExhausted(u32),
    #[error("iteration limit reached at t = {t}, residual {residual:e}")]
    IterationLimit { t: f64, residual: f64 },
}

#[derive(Debug, Clone, Copy)]
pub struct Root {
    pub t: f64,
    pub residual: f64,
    pub iterations: usize,
}

/// Finds the root of `f` in `[lo, hi]` where `f(lo)` and `f(hi)` have opposite
/// signs. Newton steps are taken when they stay inside the current bracket,
/// bisection otherwise, so the bracket always shrinks.
pub fn newton_bisect(
    f: impl Fn(f64) -> f64,
    df: impl Fn(f64) -> f64,
    lo: f64,
    hi: f64,
) -> Result<Root, RootError> {
    let (mut lo, mut hi) = (lo, hi);
    let (mut flo, fhi) = (f(lo), f(hi));
    if flo == 0.0 {
        return Ok(Root { t: lo, residual: 0.0, iterations: 0 });
    }
    if fhi == 0.0 {
        return Ok(Root { t: hi, residual: 0.0, iterations: 0 });
    }
    if flo.signum() == fhi.signum() {
        return Err(RootError::NotBracketed { lo, hi });
    }
    let mut t = 0.5 * (lo + hi);
    let mut ft = f(t);
    for it in 1..=200 {
        if ft == 0.0 || hi - lo <= TOL_ROOT * t.abs() {
            return Ok(Root { t, residual: ft.abs(), iterations: it });
        }
        if ft.signum() == flo.signum() {
            lo = t;
            flo = ft;
        } else {
            hi = t;
        }
        let d = df(t);
        let newton = t - ft / d;
        t = if d != 0.0 && newton > lo && newton < hi {
            newton
        } else {
            0.5 * (lo + hi)
        };
        ft = f(t);
    }
    Err(RootError::IterationLimit { t, residual: ft.abs() })
}

/// Expands `hi = start * 2^k` until `pred(hi)` holds, up to [`MAX_DOUBLINGS`].
pub fn expand_up(start: f64, pred: impl Fn(f64) -> bool) -> Result<f64, RootError> {
    let mut hi = start;
    for _ in 0..=MAX_DOUBLINGS {
        if pred(hi) {
            return Ok(hi);
        }
        hi *= 2.0;
    }
    Err(RootError::ExpansionExhausted(MAX_DOUBLINGS))
}

/// Contracts `lo = start / 2^k` until `pred(lo)` holds, up to [`MAX_DOUBLINGS`].
pub fn contract_down(start: f64, pred: impl Fn(f64) -> bool) -> Result<f64, RootError> {
    let mut lo = start;
    for _ in 0..=MAX_DOUBLINGS {
        if pred(lo) {
            return Ok(lo);
        }
        lo *= 0.5;
    }
    Err(RootError::ExpansionExhausted(MAX_DOUBLINGS))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn finds_simple_root() {
        let r = newton_bisect(|t| t * t - 2.0, |t| 2.0 * t, 0.5, 4.0).unwrap();
        assert!((r.t - 2f64.sqrt()).abs() < 1e-12);
    }

    #[test]
    fn rejects_unbracketed() {
        assert!(matches!(
            newton_bisect(|t| t * t + 1.0, |t| 2.0 * t, 0.0, 1.0),
            Err(RootError::NotBracketed { .. })
        ));
    }

    #[test]
    fn survives_bad_newton_steps() {
        // Derivative vanishes at the starting midpoint; bisection takes over.
        let r = newton_bisect(|t| t.powi(3) - 8.0, |t| 3.0 * t * t, -1.0, 5.0).unwrap();
        assert!((r.t - 2.0).abs() < 1e-11);
    }

    #[test]
    fn expansion_terminates() {
        let hi = expand_up(1.0, |t| t > 1000.0).unwrap();
        assert!(hi > 1000.0 && hi <= 2048.0);
        assert!(expand_up(1.0, |_| false).is_err());
    }
}

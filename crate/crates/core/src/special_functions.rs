//! Lambert W (principal branch), finite tetration and infinite power towers.
//!
//! The infinite tower `x^x^x^...` converges exactly for bases in Euler's
//! interval `[e^{-e}, e^{1/e}]`; inside it the limit `y` solves `y = x^y`
//! and equals `W(-ln x) / (-ln x)`.

use std::f64::consts::E;

use serde::Serialize;

use crate::error::{Error, Result};

/// `-1/e`, the branch point of `W`.
pub const BRANCH_POINT: f64 = -1.0 / E;

/// Slack below the branch point that is still clamped onto it.
pub const BRANCH_CLAMP: f64 = 1e-15;

/// Iterates above this value declare the tower divergent.
pub const DIVERGENCE_THRESHOLD: f64 = 1e8;

pub const DEFAULT_TOL: f64 = 1e-10;
pub const DEFAULT_MAX_ITER: usize = 10_000;

const HALLEY_MAX_ITER: usize = 50;

/// Upper end of Euler's interval, `e^{1/e}`.
pub fn euler_upper() -> f64 {
    (1.0 / E).exp()
}

/// Lower end of Euler's interval, `e^{-e}`.
pub fn euler_lower() -> f64 {
    (-E).exp()
}

/// Principal branch `W0` of the Lambert function: the `w >= -1` with `w e^w = x`.
pub fn lambert_w0(x: f64) -> Result<f64> {
    if x.is_nan() || x < BRANCH_POINT - BRANCH_CLAMP {
        return Err(Error::Domain {
            function: "lambert_w0",
            value: x,
            reason: "W0 is real only for x >= -1/e",
        });
    }
    if x <= BRANCH_POINT {
        return Ok(-1.0);
    }
    if x == 0.0 {
        return Ok(0.0);
    }
    if x == f64::INFINITY {
        return Ok(f64::INFINITY);
    }

    let p2 = 2.0 * (E * x + 1.0);
    if p2 < 1e-6 {
        // Close enough to the branch point that the series is exact to
        // working precision and Halley's denominator vanishes.
        return Ok(branch_series(p2.max(0.0).sqrt()));
    }

    let mut w = initial_guess(x);
    for _ in 0..HALLEY_MAX_ITER {
        let ew = w.exp();
        let f = w * ew - x;
        if f == 0.0 {
            break;
        }
        let wp1 = w + 1.0;
        let denom = ew * wp1 - (w + 2.0) * f / (2.0 * wp1);
        let next = (w - f / denom).max(-1.0);
        let done = (next - w).abs() <= 4.0 * f64::EPSILON * (1.0 + next.abs());
        w = next;
        if done {
            break;
        }
    }
    Ok(w)
}

fn branch_series(p: f64) -> f64 {
    -1.0 + p - p * p / 3.0 + 11.0 / 72.0 * p * p * p - 43.0 / 540.0 * p.powi(4)
}

fn initial_guess(x: f64) -> f64 {
    if x < -0.3 {
        branch_series((2.0 * (E * x + 1.0)).sqrt())
    } else if x.abs() <= 0.3 {
        x - x * x + 1.5 * x.powi(3) - 8.0 / 3.0 * x.powi(4)
    } else if x <= E {
        let l = x.ln_1p();
        l * (1.0 - (1.0 + l).ln() / (2.0 + l))
    } else {
        let l1 = x.ln();
        let l2 = l1.ln();
        l1 - l2 + l2 / l1
    }
}

/// The `n`-fold right-associated exponential `base^base^...^base`.
///
/// Returns `+inf` as soon as an intermediate overflows.
pub fn power_tower(base: f64, n: u32) -> Result<f64> {
    if !(base > 0.0) || !base.is_finite() {
        return Err(crate::error::invalid(
            "base",
            format!("must be positive and finite, got {base}"),
        ));
    }
    if n == 0 {
        return Err(crate::error::invalid("n", "tower height must be at least 1"));
    }
    let mut t = base;
    for _ in 1..n {
        t = base.powf(t);
        if !t.is_finite() {
            return Ok(f64::INFINITY);
        }
    }
    Ok(t)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum TowerOutcome {
    Converged {
        limit: f64,
    },
    Diverged {
        at_iteration: usize,
    },
    /// Iteration budget exhausted. `cycle` carries the last even/odd
    /// iterates when they settled apart (two-cycle below `e^{-e}`).
    MaxIterReached {
        last_value: f64,
        cycle: Option<(f64, f64)>,
    },
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ConvergenceResult {
    pub outcome: TowerOutcome,
    pub iterations_used: usize,
    /// `|y - base^y|` at termination; NaN when diverged.
    pub residual: f64,
}

impl ConvergenceResult {
    pub fn limit(&self) -> Option<f64> {
        match self.outcome {
            TowerOutcome::Converged { limit } => Some(limit),
            _ => None,
        }
    }

    pub fn diverged(&self) -> bool {
        matches!(self.outcome, TowerOutcome::Diverged { .. })
    }
}

/// Iterates `t_{k+1} = base^{t_k}` from `t_1 = base`.
///
/// Consecutive iterates within `tol` count as convergence; for `base < 1`
/// the iterates alternate around the limit, so a small consecutive gap
/// already forces the even and odd subsequences together.
pub fn tower_limit(base: f64, tol: f64, max_iter: usize) -> Result<ConvergenceResult> {
    if !(base > 0.0) || !base.is_finite() {
        return Err(crate::error::invalid(
            "base",
            format!("must be positive and finite, got {base}"),
        ));
    }
    if !(tol > 0.0) {
        return Err(crate::error::invalid("tol", "must be positive"));
    }
    if max_iter == 0 {
        return Err(crate::error::invalid("max_iter", "must be at least 1"));
    }

    let mut prev = base;
    let mut prev2 = f64::NAN;
    for k in 1..=max_iter {
        let next = base.powf(prev);
        if !(next <= DIVERGENCE_THRESHOLD) {
            return Ok(ConvergenceResult {
                outcome: TowerOutcome::Diverged { at_iteration: k },
                iterations_used: k,
                residual: f64::NAN,
            });
        }
        if (next - prev).abs() <= tol {
            return Ok(ConvergenceResult {
                outcome: TowerOutcome::Converged { limit: next },
                iterations_used: k,
                residual: (next - base.powf(next)).abs(),
            });
        }
        prev2 = prev;
        prev = next;
    }

    let cycle = (base < 1.0 && prev2.is_finite()).then(|| {
        let (lo, hi) = if prev2 < prev { (prev2, prev) } else { (prev, prev2) };
        (lo, hi)
    });
    Ok(ConvergenceResult {
        outcome: TowerOutcome::MaxIterReached {
            last_value: prev,
            cycle,
        },
        iterations_used: max_iter,
        residual: (prev - base.powf(prev)).abs(),
    })
}

/// Closed form of the tower limit: `W(-ln base) / (-ln base)`.
pub fn tower_limit_via_lambert(base: f64) -> Result<f64> {
    if !euler_interval_contains(base) || base == euler_lower() {
        return Err(Error::Domain {
            function: "tower_limit_via_lambert",
            value: base,
            reason: "base must lie in (e^{-e}, e^{1/e}]",
        });
    }
    if base == 1.0 {
        return Ok(1.0);
    }
    let z = -base.ln();
    Ok(lambert_w0(z)? / z)
}

/// Membership in Euler's interval `[e^{-e}, e^{1/e}]`.
pub fn euler_interval_contains(base: f64) -> bool {
    base >= euler_lower() && base <= euler_upper()
}

#[cfg(test)]
mod tests {
    use super::*;

    fn bisect(f: impl Fn(f64) -> f64, mut lo: f64, mut hi: f64) -> f64 {
        let flo = f(lo);
        for _ in 0..200 {
            let mid = 0.5 * (lo + hi);
            if (f(mid) > 0.0) == (flo > 0.0) {
                lo = mid;
            } else {
                hi = mid;
            }
        }
        0.5 * (lo + hi)
    }

    #[test]
    fn lambert_trivial_points() {
        assert_eq!(lambert_w0(0.0).unwrap(), 0.0);
        assert!((lambert_w0(E).unwrap() - 1.0).abs() < 1e-15);
        assert_eq!(lambert_w0(BRANCH_POINT).unwrap(), -1.0);
        assert_eq!(lambert_w0(BRANCH_POINT - 5e-16).unwrap(), -1.0);
    }

    #[test]
    fn lambert_matches_bisection_oracle() {
        let oracle = bisect(|w| w * w.exp() - 2.5, 0.0, 2.0);
        let w = lambert_w0(2.5).unwrap();
        assert!((w - oracle).abs() < 1e-13, "{w} vs {oracle}");
        assert!((w * w.exp() - 2.5).abs() <= 2.5e-12);
    }

    #[test]
    fn lambert_rejects_below_branch_point() {
        assert!(matches!(lambert_w0(-0.4), Err(Error::Domain { .. })));
        assert!(lambert_w0(f64::NAN).is_err());
    }

    #[test]
    fn lambert_near_branch_point_is_accurate() {
        for k in 1..40 {
            let x = BRANCH_POINT + 10f64.powi(-k / 2 - 1) * (1.0 + k as f64 * 0.01);
            let w = lambert_w0(x).unwrap();
            assert!(w >= -1.0);
            assert!((w * w.exp() - x).abs() <= 1e-12, "x={x} w={w}");
        }
    }

    #[test]
    fn power_tower_small_cases() {
        assert_eq!(power_tower(2.0, 2).unwrap(), 4.0);
        assert_eq!(power_tower(2.0, 3).unwrap(), 16.0);
        assert_eq!(power_tower(1.0, 100).unwrap(), 1.0);
        assert_eq!(power_tower(2.0, 6).unwrap(), f64::INFINITY);
        assert!(power_tower(0.0, 2).is_err());
        assert!(power_tower(2.0, 0).is_err());
    }

    #[test]
    fn tower_limit_sqrt2() {
        let r = tower_limit(2f64.sqrt(), DEFAULT_TOL, DEFAULT_MAX_ITER).unwrap();
        assert!((r.limit().unwrap() - 2.0).abs() < 1e-9);
        assert!(r.residual <= DEFAULT_TOL);
    }

    #[test]
    fn tower_limit_outside_euler_interval() {
        let r = tower_limit(1.5, DEFAULT_TOL, DEFAULT_MAX_ITER).unwrap();
        assert!(r.diverged());
        assert!(r.residual.is_nan());

        let r = tower_limit(0.04, DEFAULT_TOL, DEFAULT_MAX_ITER).unwrap();
        match r.outcome {
            TowerOutcome::MaxIterReached {
                cycle: Some((lo, hi)), ..
            } => assert!(hi - lo > 0.1, "two-cycle should stay apart: {lo} {hi}"),
            other => panic!("expected a two-cycle, got {other:?}"),
        }
        assert!(tower_limit(-1.0, 1e-10, 10).is_err());
    }

    #[test]
    fn tower_limit_upper_boundary_is_slow_but_approaches_e() {
        // Convergence is sublinear at e^{1/e}; accept a loose tolerance.
        let r = tower_limit(euler_upper(), 1e-7, 1_000_000).unwrap();
        let y = match r.outcome {
            TowerOutcome::Converged { limit } => limit,
            TowerOutcome::MaxIterReached { last_value, .. } => last_value,
            TowerOutcome::Diverged { .. } => panic!("boundary base must not diverge"),
        };
        assert!((y - E).abs() < 1e-2, "y = {y}");
    }

    #[test]
    fn lambert_closed_form_for_tower() {
        assert!((tower_limit_via_lambert(2f64.sqrt()).unwrap() - 2.0).abs() < 1e-14);
        // W has square-root sensitivity at -1/e: one ulp in ln(base) moves y by ~1e-8.
        assert!((tower_limit_via_lambert(euler_upper()).unwrap() - E).abs() < 1e-7);
        assert_eq!(tower_limit_via_lambert(1.0).unwrap(), 1.0);
        assert!(tower_limit_via_lambert(1.5).is_err());
        assert!(tower_limit_via_lambert(0.05).is_err());

        // Fixed-point oracle from t0 = 1.
        let mut y = 1.0f64;
        for _ in 0..5000 {
            y = 1.2f64.powf(y);
        }
        assert!((tower_limit_via_lambert(1.2).unwrap() - y).abs() < 1e-12);
    }

    #[test]
    fn euler_interval_membership() {
        assert!(euler_interval_contains(1.0));
        assert!(!euler_interval_contains(1.5));
        assert!(!euler_interval_contains(0.05));
        assert!(euler_interval_contains(euler_upper()));
        assert!(euler_interval_contains(euler_lower()));
        assert!(!euler_interval_contains(euler_upper() * (1.0 + f64::EPSILON)));
    }
}

//! The criterion quantity `w = liminf ∫_{tau(t)}^t b(s) ds`, the threshold
//! verdict `w > 1/e`, and a replay of the tetration argument behind it.
//!
//! The argument: a positive non-oscillating solution gives a ratio
//! `zeta >= 1` with `zeta >= e^{zeta w}`, hence `zeta >= a^^n` for every
//! tower height `n` with `a = e^w`. Those towers are increasing and bounded
//! by `zeta`, so they converge, which forces `a` into Euler's interval and
//! `w <= 1/e`. When `w > 1/e` the towers escape and no such solution exists.

use std::f64::consts::E;

use rayon::prelude::*;
use serde::Serialize;

use crate::error::{invalid, Error, Result};
use crate::quadrature::simpson;
use crate::special_functions::{euler_upper, lambert_w0, tower_limit_via_lambert, DEFAULT_TOL, DIVERGENCE_THRESHOLD};

pub const THRESHOLD: f64 = 1.0 / E;
pub const DEFAULT_GRID_POINTS: usize = 512;
pub const DEFAULT_PANELS: usize = crate::quadrature::DEFAULT_PANELS;

/// Slope (per unit time) below which window infima count as flat.
pub const TREND_SLOPE_TOL: f64 = 1e-6;
/// Blocks used for the sliding-window infima.
const TREND_BLOCKS: usize = 8;

/// Composite-Simpson value of `∫_{tau(t)}^t b(s) ds`.
pub fn integral_over_amnesia(
    b: &(dyn Fn(f64) -> f64 + Sync),
    tau: &(dyn Fn(f64) -> f64 + Sync),
    t: f64,
    panels: usize,
) -> Result<f64> {
    let lo = tau(t);
    if !(lo < t) {
        return Err(invalid("tau", format!("tau({t}) = {lo} must be strictly below t")));
    }
    let v = simpson(b, lo, t, panels)?;
    if !v.is_finite() {
        return Err(Error::Numerical(format!(
            "integral of b over [{lo}, {t}] is not finite ({v}); is b defined there?"
        )));
    }
    Ok(v)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Trend {
    Stable,
    Increasing,
    Decreasing,
    Oscillating,
}

impl std::fmt::Display for Trend {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            Trend::Stable => "stable",
            Trend::Increasing => "increasing",
            Trend::Decreasing => "decreasing",
            Trend::Oscillating => "oscillating",
        })
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct LiminfEstimate {
    /// Infimum of the sampled integrals over the tail half of `t_range`.
    pub w_hat: f64,
    /// `(start, inf over [start, t_end])` for every grid point; nested
    /// windows, so the infima are nonincreasing as `start` decreases.
    pub window_infima: Vec<(f64, f64)>,
    pub trend: Trend,
    pub t_range: (f64, f64),
    #[serde(skip)]
    pub samples: Vec<(f64, f64)>,
}

/// Tail-window surrogate for `liminf_{t -> inf} ∫_{tau(t)}^t b(s) ds`.
pub fn estimate_liminf_w(
    b: &(dyn Fn(f64) -> f64 + Sync),
    tau: &(dyn Fn(f64) -> f64 + Sync),
    t_start: f64,
    t_end: f64,
    grid_points: usize,
    panels: usize,
) -> Result<LiminfEstimate> {
    if !(t_start < t_end) {
        return Err(invalid(
            "t_range",
            format!("need t_start < t_end, got [{t_start}, {t_end}]"),
        ));
    }
    if grid_points < 10 {
        return Err(invalid("grid_points", "need at least 10 grid points"));
    }
    let span = t_end - t_start;
    let times: Vec<f64> = (0..grid_points)
        .map(|k| {
            if k + 1 == grid_points {
                t_end
            } else {
                t_start + span * k as f64 / (grid_points - 1) as f64
            }
        })
        .collect();
    let values = times
        .par_iter()
        .map(|&t| integral_over_amnesia(b, tau, t, panels))
        .collect::<Result<Vec<f64>>>()?;

    let mut window_infima = vec![(0.0, 0.0); grid_points];
    let mut running = f64::INFINITY;
    for k in (0..grid_points).rev() {
        running = running.min(values[k]);
        window_infima[k] = (times[k], running);
    }
    let mid = t_start + 0.5 * span;
    let tail_start = times.iter().position(|&t| t >= mid).unwrap_or(grid_points - 1);
    let w_hat = window_infima[tail_start].1;

    let samples: Vec<(f64, f64)> = times.into_iter().zip(values).collect();
    let trend = classify_trend(&samples, tail_start);
    Ok(LiminfEstimate {
        w_hat,
        window_infima,
        trend,
        t_range: (t_start, t_end),
        samples,
    })
}

/// Least-squares slope of `ys` against `xs`.
pub fn least_squares_slope(xs: &[f64], ys: &[f64]) -> f64 {
    let n = xs.len() as f64;
    let mx = xs.iter().sum::<f64>() / n;
    let my = ys.iter().sum::<f64>() / n;
    let (mut sxy, mut sxx) = (0.0, 0.0);
    for (x, y) in xs.iter().zip(ys) {
        sxy += (x - mx) * (y - my);
        sxx += (x - mx) * (x - mx);
    }
    if sxx == 0.0 {
        0.0
    } else {
        sxy / sxx
    }
}

/// Slope of block-wise infima decides a monotone drift; otherwise the RMS
/// residual of the tail samples about their own regression line separates
/// a settled tail from an oscillating one.
fn classify_trend(samples: &[(f64, f64)], tail_start: usize) -> Trend {
    let block = (samples.len() / TREND_BLOCKS).max(1);
    let (centers, infima): (Vec<f64>, Vec<f64>) = samples
        .chunks(block)
        .map(|chunk| {
            let center = 0.5 * (chunk[0].0 + chunk[chunk.len() - 1].0);
            let inf = chunk.iter().map(|&(_, v)| v).fold(f64::INFINITY, f64::min);
            (center, inf)
        })
        .unzip();
    let slope = least_squares_slope(&centers, &infima);
    if slope > TREND_SLOPE_TOL && infima.windows(2).all(|w| w[1] > w[0]) {
        return Trend::Increasing;
    }
    if slope < -TREND_SLOPE_TOL && infima.windows(2).all(|w| w[1] < w[0]) {
        return Trend::Decreasing;
    }

    let tail = &samples[tail_start..];
    let (xs, ys): (Vec<f64>, Vec<f64>) = tail.iter().copied().unzip();
    let tail_slope = least_squares_slope(&xs, &ys);
    let mx = xs.iter().sum::<f64>() / xs.len() as f64;
    let my = ys.iter().sum::<f64>() / ys.len() as f64;
    let rms = (xs
        .iter()
        .zip(&ys)
        .map(|(x, y)| (y - my - tail_slope * (x - mx)).powi(2))
        .sum::<f64>()
        / xs.len() as f64)
        .sqrt();
    if rms > TREND_SLOPE_TOL * my.abs().max(1.0) {
        Trend::Oscillating
    } else {
        Trend::Stable
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum VerdictOutcome {
    PropertyPGuaranteed,
    Inconclusive,
}

impl std::fmt::Display for VerdictOutcome {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            VerdictOutcome::PropertyPGuaranteed => "property_p_guaranteed",
            VerdictOutcome::Inconclusive => "inconclusive",
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Verdict {
    pub outcome: VerdictOutcome,
    pub w_hat: f64,
    pub threshold: f64,
    pub margin: f64,
}

/// Strict comparison `w_hat > 1/e`; equality is inconclusive.
pub fn verdict_for(w_hat: f64) -> Verdict {
    let outcome = if w_hat > THRESHOLD {
        VerdictOutcome::PropertyPGuaranteed
    } else {
        VerdictOutcome::Inconclusive
    };
    Verdict {
        outcome,
        w_hat,
        threshold: THRESHOLD,
        margin: w_hat - THRESHOLD,
    }
}

pub fn theorem_verdict(estimate: &LiminfEstimate) -> Verdict {
    verdict_for(estimate.w_hat)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum TraceDecision {
    DivergesHenceOscillation,
    ConvergesHenceInconclusive,
}

/// What the explicit tower iteration showed, independent of the closed form.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum IterationEvidence {
    Escaped,
    Settled,
    /// Budget exhausted before either happened (slow near `e^{1/e}`).
    Undecided,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct TetrationTrace {
    pub w: f64,
    /// `e^w`.
    pub a: f64,
    /// `a^^1, a^^2, ...` up to escape, settling, or the iteration budget.
    pub iterates: Vec<f64>,
    pub decision: TraceDecision,
    pub evidence: IterationEvidence,
    /// Closed-form tower limit `W(-ln a)/(-ln a)` when it exists.
    pub limit_if_convergent: Option<f64>,
}

/// Replays the tower `a^^n`, `a = e^w`, and cross-checks
/// (tower escapes) ⇔ (a > e^{1/e}) ⇔ (w > 1/e).
///
/// The decision itself comes from the closed-form comparison; the
/// iteration is evidence that must not contradict it.
pub fn tetration_proof_trace(w: f64, max_iter: usize) -> Result<TetrationTrace> {
    if !(w > 0.0) || !w.is_finite() {
        return Err(invalid("w", format!("must be positive and finite, got {w}")));
    }
    if max_iter == 0 {
        return Err(invalid("max_iter", "must be at least 1"));
    }
    let a = w.exp();
    let base_outside = a > euler_upper();
    let w_above = w > THRESHOLD;
    if base_outside != w_above {
        return Err(Error::CrossCheck(format!(
            "a = e^{w} > e^(1/e) is {base_outside} but w > 1/e is {w_above}"
        )));
    }

    let mut iterates = vec![a];
    let mut evidence = IterationEvidence::Undecided;
    while iterates.len() < max_iter {
        let prev = *iterates.last().unwrap();
        let next = a.powf(prev);
        iterates.push(next);
        if !(next <= DIVERGENCE_THRESHOLD) {
            evidence = IterationEvidence::Escaped;
            break;
        }
        if (next - prev).abs() <= DEFAULT_TOL {
            evidence = IterationEvidence::Settled;
            break;
        }
    }
    match (evidence, base_outside) {
        (IterationEvidence::Escaped, false) => {
            return Err(Error::CrossCheck(format!(
                "tower of a = {a} escaped although a <= e^(1/e)"
            )))
        }
        (IterationEvidence::Settled, true) => {
            return Err(Error::CrossCheck(format!(
                "tower of a = {a} settled although a > e^(1/e)"
            )))
        }
        _ => {}
    }

    let (decision, limit_if_convergent) = if base_outside {
        (TraceDecision::DivergesHenceOscillation, None)
    } else {
        (
            TraceDecision::ConvergesHenceInconclusive,
            Some(tower_limit_via_lambert(a)?),
        )
    };
    Ok(TetrationTrace {
        w,
        a,
        iterates,
        decision,
        evidence,
        limit_if_convergent,
    })
}

/// Smallest solution of `zeta = e^{zeta w}`, namely `-W(-w)/w`.
///
/// For `w > 1/e` there is none, which is exactly the contradiction that
/// rules out non-oscillating solutions.
pub fn zeta_fixed_point(w: f64) -> Result<f64> {
    if !(w > 0.0) || w > THRESHOLD {
        return Err(Error::Domain {
            function: "zeta_fixed_point",
            value: w,
            reason: "zeta = e^(zeta w) has a real solution only for 0 < w <= 1/e",
        });
    }
    Ok(-lambert_w0(-w)? / w)
}

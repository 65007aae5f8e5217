//! Method-of-steps integration of `x'(t) = -(Tx)(t)` and classification of
//! the resulting trajectories as oscillatory or monotonically decaying.

use rayon::prelude::*;
use serde::Serialize;

use crate::amnesia_operators::{audit_condition_c, AmnesiaOperator, AuditReport, RandomHistoryFamily, ScalarFn};
use crate::criterion::{estimate_liminf_w, verdict_for, LiminfEstimate, Verdict, VerdictOutcome};
use crate::error::{invalid, Error, Result};
use crate::history::{FourierHistory, History, SignPattern};

pub const DEFAULT_OVERFLOW_GUARD: f64 = 1e12;
pub const DEFAULT_TRANSIENT_FRACTION: f64 = 0.25;
/// Default decay tolerance relative to the transient's peak magnitude.
pub const RELATIVE_DECAY_TOL: f64 = 1e-6;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Interpolation {
    Linear,
    CubicHermite,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct SimulationConfig {
    pub t_end: f64,
    pub step: f64,
    pub interpolation: Interpolation,
    pub overflow_guard: f64,
}

impl SimulationConfig {
    pub fn new(t_end: f64, step: f64) -> Self {
        Self {
            t_end,
            step,
            interpolation: Interpolation::CubicHermite,
            overflow_guard: DEFAULT_OVERFLOW_GUARD,
        }
    }

    pub fn with_interpolation(mut self, interpolation: Interpolation) -> Self {
        self.interpolation = interpolation;
        self
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Trajectory {
    pub times: Vec<f64>,
    pub values: Vec<f64>,
    pub derivative_values: Vec<f64>,
    pub config: SimulationConfig,
    /// Time at which `|x|` first exceeded the overflow guard; the
    /// offending sample is not stored.
    pub overflow_at: Option<f64>,
}

impl Trajectory {
    pub fn overflowed(&self) -> bool {
        self.overflow_at.is_some()
    }

    pub fn len(&self) -> usize {
        self.times.len()
    }

    pub fn is_empty(&self) -> bool {
        self.times.is_empty()
    }
}

/// Initial history for `t <= 0` glued to the interpolated trajectory.
struct DenseHistory<'a> {
    initial: &'a dyn History,
    step: f64,
    values: &'a [f64],
    derivatives: &'a [f64],
    interpolation: Interpolation,
}

impl History for DenseHistory<'_> {
    fn domain(&self) -> (f64, f64) {
        let start = self.initial.domain().0;
        (start, self.step * (self.values.len() - 1) as f64)
    }

    fn value_unchecked(&self, t: f64) -> f64 {
        if t <= 0.0 || self.values.len() < 2 {
            return self.initial.value_unchecked(t.min(0.0));
        }
        let u = t / self.step;
        let k = (u.floor() as usize).min(self.values.len() - 2);
        let theta = (u - k as f64).clamp(0.0, 1.0);
        let (x0, x1) = (self.values[k], self.values[k + 1]);
        match self.interpolation {
            Interpolation::Linear => x0 + theta * (x1 - x0),
            Interpolation::CubicHermite => {
                let (d0, d1) = (self.derivatives[k], self.derivatives[k + 1]);
                let t2 = theta * theta;
                let t3 = t2 * theta;
                (2.0 * t3 - 3.0 * t2 + 1.0) * x0
                    + (t3 - 2.0 * t2 + theta) * self.step * d0
                    + (-2.0 * t3 + 3.0 * t2) * x1
                    + (t3 - t2) * self.step * d1
            }
        }
    }
}

/// Fixed-step classical Runge–Kutta on the uniform grid `k * step`.
///
/// Delayed reads come from `initial_history` for `t <= 0` and from the
/// interpolated trajectory afterwards. With `step` at most a quarter of the
/// smallest lag every read lands on already accepted samples.
pub fn integrate(op: &AmnesiaOperator, initial_history: &dyn History, config: &SimulationConfig) -> Result<Trajectory> {
    let h = config.step;
    if !(config.t_end > 0.0) || !config.t_end.is_finite() {
        return Err(invalid("t_end", "must be positive and finite"));
    }
    if !(h > 0.0) || h > config.t_end {
        return Err(invalid("step", format!("must lie in (0, t_end], got {h}")));
    }
    if !(config.overflow_guard > 0.0) {
        return Err(invalid("overflow_guard", "must be positive"));
    }
    if let Some(lag) = op.min_lag() {
        if h > lag / 4.0 * (1.0 + 1e-12) {
            return Err(Error::StepTooLarge { step: h, min_lag: lag });
        }
    }
    let (start, end) = initial_history.domain();
    let needed = op.sigma(0.0).min(op.sigma(h));
    if needed < start - 1e-12 * (1.0 + start.abs()) || end < 0.0 {
        return Err(invalid(
            "initial_history",
            format!("must cover [{needed}, 0], covers [{start}, {end}]"),
        ));
    }

    let steps = (config.t_end / h * (1.0 + 1e-12)).floor() as usize;
    let mut times = Vec::with_capacity(steps + 1);
    let mut values = Vec::with_capacity(steps + 1);
    let mut derivs = Vec::with_capacity(steps + 1);

    let x0 = initial_history.at(0.0)?;
    times.push(0.0);
    values.push(x0);
    let d0 = {
        let dense = DenseHistory {
            initial: initial_history,
            step: h,
            values: &values,
            derivatives: &derivs,
            interpolation: config.interpolation,
        };
        -op.evaluate(0.0, &dense)?
    };
    derivs.push(d0);

    let mut overflow_at = None;
    for k in 0..steps {
        let t = k as f64 * h;
        let t_next = (k + 1) as f64 * h;
        let (k2, k4) = {
            let dense = DenseHistory {
                initial: initial_history,
                step: h,
                values: &values,
                derivatives: &derivs,
                interpolation: config.interpolation,
            };
            (-op.evaluate(t + 0.5 * h, &dense)?, -op.evaluate(t_next, &dense)?)
        };
        // The right-hand side reads only delayed values, so the two midpoint
        // stages coincide.
        let k1 = derivs[k];
        let k3 = k2;
        let x_next = values[k] + h / 6.0 * (k1 + 2.0 * k2 + 2.0 * k3 + k4);
        if !(x_next.abs() <= config.overflow_guard) {
            overflow_at = Some(t_next);
            break;
        }
        times.push(t_next);
        values.push(x_next);
        // k4 already is -(Tx)(t_next): none of its reads lie past t.
        derivs.push(k4);
    }

    Ok(Trajectory {
        times,
        values,
        derivative_values: derivs,
        config: *config,
        overflow_at,
    })
}

/// Times where the sampled values change strict sign.
///
/// Adjacent samples of opposite sign give a linearly interpolated time; a
/// run of exact zeros between opposite signs is reported once, at its first
/// sample. Zeros between same-signed neighbours are tangencies and skipped.
pub fn crossings_of(times: &[f64], values: &[f64]) -> Vec<f64> {
    let mut out = Vec::new();
    let mut last: Option<(usize, f64)> = None;
    let mut zero_run: Option<usize> = None;
    for (k, &v) in values.iter().enumerate() {
        if v == 0.0 {
            if last.is_some() && zero_run.is_none() {
                zero_run = Some(k);
            }
            continue;
        }
        if let Some((j, prev)) = last {
            if prev.signum() != v.signum() {
                let t = match zero_run {
                    Some(z) => times[z],
                    None => times[j] + (times[k] - times[j]) * prev / (prev - v),
                };
                out.push(t);
            }
        }
        last = Some((k, v));
        zero_run = None;
    }
    out
}

pub fn zero_crossings(traj: &Trajectory) -> Vec<f64> {
    crossings_of(&traj.times, &traj.values)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum SolutionKind {
    Oscillatory,
    MonotoneToZero,
    Inconclusive,
}

impl std::fmt::Display for SolutionKind {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            SolutionKind::Oscillatory => "oscillatory",
            SolutionKind::MonotoneToZero => "monotone_to_zero",
            SolutionKind::Inconclusive => "inconclusive",
        })
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SolutionClass {
    pub class: SolutionKind,
    /// Sign changes at or after the transient cutoff.
    pub zero_crossings: Vec<f64>,
    pub final_value: f64,
    /// Tail is one-signed with nonincreasing magnitude.
    pub tail_monotone: bool,
}

/// Classifies the part of `traj` after `transient_fraction * t_end`.
///
/// `decay_tol = None` uses `1e-6` times the peak magnitude over the
/// transient, which keeps the classification scale-free.
pub fn classify(traj: &Trajectory, transient_fraction: f64, decay_tol: Option<f64>) -> Result<SolutionClass> {
    if !(0.0..1.0).contains(&transient_fraction) {
        return Err(invalid("transient_fraction", "must lie in [0, 1)"));
    }
    if traj.is_empty() {
        return Err(invalid("trajectory", "no samples"));
    }
    let t_last = *traj.times.last().unwrap();
    let cutoff = transient_fraction * t_last;
    let first_tail = traj.times.iter().position(|&t| t >= cutoff).unwrap_or(traj.len() - 1);

    let tail_times = &traj.times[first_tail..];
    let tail = &traj.values[first_tail..];
    let crossings = crossings_of(tail_times, tail);
    let final_value = *tail.last().unwrap();

    let decay_tol = decay_tol.unwrap_or_else(|| {
        let transient = if first_tail > 0 {
            &traj.values[..first_tail]
        } else {
            &traj.values[..]
        };
        RELATIVE_DECAY_TOL * transient.iter().fold(0.0f64, |m, v| m.max(v.abs()))
    });

    let one_signed = tail.iter().all(|&v| v > 0.0) || tail.iter().all(|&v| v < 0.0);
    let tail_monotone = one_signed && tail.windows(2).all(|w| w[1].abs() <= w[0].abs());

    let class = if crossings.len() >= 2 {
        SolutionKind::Oscillatory
    } else if crossings.is_empty() && tail_monotone && final_value.abs() < decay_tol {
        SolutionKind::MonotoneToZero
    } else {
        SolutionKind::Inconclusive
    };
    Ok(SolutionClass {
        class,
        zero_crossings: crossings,
        final_value,
        tail_monotone,
    })
}

#[derive(Debug, Clone)]
pub struct ConcordanceConfig {
    pub simulation: SimulationConfig,
    pub n_histories: usize,
    pub seed: u64,
    /// Peak magnitude of the random initial histories.
    pub amplitude: f64,
    pub pattern: SignPattern,
    pub transient_fraction: f64,
    /// Window for the liminf estimate.
    pub t_range: (f64, f64),
    pub grid_points: usize,
    pub panels: usize,
    /// Condition (C) audit size: time samples and trials per sample.
    pub audit_samples: usize,
    pub audit_trials: usize,
}

impl ConcordanceConfig {
    pub fn new(simulation: SimulationConfig, n_histories: usize, seed: u64) -> Self {
        Self {
            simulation,
            n_histories,
            seed,
            amplitude: 1.0,
            pattern: SignPattern::Mixed,
            transient_fraction: DEFAULT_TRANSIENT_FRACTION,
            t_range: (0.0, simulation.t_end),
            grid_points: crate::criterion::DEFAULT_GRID_POINTS,
            panels: crate::criterion::DEFAULT_PANELS,
            audit_samples: 8,
            audit_trials: 4,
        }
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct HistoryRun {
    pub index: usize,
    pub class: SolutionClass,
    pub overflow_at: Option<f64>,
    #[serde(skip)]
    pub trajectory: Trajectory,
}

impl HistoryRun {
    /// Non-oscillating, bounded and not decaying: a counterexample to
    /// property (P) had the verdict been a guarantee.
    pub fn is_counterexample(&self) -> bool {
        self.overflow_at.is_none()
            && self.class.class == SolutionKind::Inconclusive
            && self.class.zero_crossings.is_empty()
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct ConcordanceReport {
    pub estimate: LiminfEstimate,
    pub verdict: Verdict,
    pub audit: AuditReport,
    pub seed: u64,
    pub runs: Vec<HistoryRun>,
    /// `verdict == PropertyPGuaranteed` implies no run is a counterexample.
    pub concordant: bool,
}

/// Sets the criterion verdict for `(bound_b, op.tau)` against simulated
/// solutions from seeded random Fourier histories.
pub fn concordance_experiment(
    op: &AmnesiaOperator,
    bound_b: &ScalarFn,
    config: &ConcordanceConfig,
) -> Result<ConcordanceReport> {
    if config.n_histories == 0 {
        return Err(invalid("n_histories", "must be at least 1"));
    }
    let op = op.clone().with_bound(bound_b.clone());

    let (t0, t1) = config.t_range;
    let audit_times: Vec<f64> = (0..config.audit_samples)
        .map(|k| t0 + (t1 - t0) * (k as f64 + 0.5) / config.audit_samples as f64)
        .collect();
    let family = RandomHistoryFamily::new(config.seed, config.amplitude);
    let audit = audit_condition_c(&op, &audit_times, &family, config.audit_trials)?;
    if !audit.passed() {
        return Err(invalid(
            "bound_b",
            format!(
                "condition (C) fails for the supplied bound: {} of {} samples violate it",
                audit.violations.len(),
                audit.checked
            ),
        ));
    }

    let b = |s: f64| bound_b(s);
    let tau = |t: f64| op.tau(t);
    let estimate = estimate_liminf_w(&b, &tau, t0, t1, config.grid_points, config.panels)?;
    let verdict = verdict_for(estimate.w_hat);

    let start = op.sigma(0.0).min(op.sigma(config.simulation.step));
    let runs = (0..config.n_histories)
        .into_par_iter()
        .map(|index| {
            let history =
                FourierHistory::random(start, 0.0, config.seed, index as u64, config.pattern, config.amplitude)?;
            let trajectory = integrate(&op, &history, &config.simulation)?;
            let class = classify(&trajectory, config.transient_fraction, None)?;
            Ok(HistoryRun {
                index,
                class,
                overflow_at: trajectory.overflow_at,
                trajectory,
            })
        })
        .collect::<Result<Vec<_>>>()?;

    let concordant =
        verdict.outcome != VerdictOutcome::PropertyPGuaranteed || !runs.iter().any(HistoryRun::is_counterexample);
    Ok(ConcordanceReport {
        estimate,
        verdict,
        audit,
        seed: config.seed,
        runs,
        concordant,
    })
}

//! Causal response operators with amnesia, `(Tx)(t)`.
//!
//! An operator reads the history only on the memory set `H(t)`, whose hull
//! is `[sigma(t), tau(t)]` with `tau(t) < t`. Each operator also carries a
//! bound function `b(t)` for the sign-respecting lower bound
//!
//! ```text
//! (Tx)(t) >= b(t) inf x   whenever x > 0 on the memory window,
//! (Tx)(t) <= b(t) sup x   whenever x < 0 on the memory window,
//! ```
//!
//! which [`audit_condition_c`] samples.

use std::fmt;
use std::sync::Arc;

use serde::Serialize;

use crate::error::{invalid, Error, Result};
use crate::history::{FourierHistory, History, SignPattern};
use crate::quadrature::simpson_nodes;

pub type ScalarFn = Arc<dyn Fn(f64) -> f64 + Send + Sync>;
/// `(t, s, delayed values) -> integrand`.
pub type KernelFn = Arc<dyn Fn(f64, f64, &[f64]) -> f64 + Send + Sync>;
/// `(t, s) -> delayed time`.
pub type DelayMap = Arc<dyn Fn(f64, f64) -> f64 + Send + Sync>;

pub fn scalar_fn(f: impl Fn(f64) -> f64 + Send + Sync + 'static) -> ScalarFn {
    Arc::new(f)
}

pub fn constant_fn(c: f64) -> ScalarFn {
    Arc::new(move |_| c)
}

/// One `p(t) x(t - delay)` term of a point-delay operator.
#[derive(Clone)]
pub struct DelayTerm {
    pub coefficient: ScalarFn,
    pub delay: f64,
}

impl DelayTerm {
    pub fn new(coefficient: ScalarFn, delay: f64) -> Self {
        Self { coefficient, delay }
    }

    pub fn constant(p: f64, delay: f64) -> Self {
        Self::new(constant_fn(p), delay)
    }
}

#[derive(Clone)]
enum Response {
    Discrete(Vec<DelayTerm>),
    Distributed {
        kernel: KernelFn,
        nodes: Vec<(f64, f64)>,
        delay_maps: Vec<DelayMap>,
    },
}

/// The right-hand side `T` of `x'(t) + (Tx)(t) = 0`.
#[derive(Clone)]
pub struct AmnesiaOperator {
    response: Response,
    bound: ScalarFn,
    label: String,
    min_lag: Option<f64>,
}

impl fmt::Debug for AmnesiaOperator {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let kind = match &self.response {
            Response::Discrete(terms) => format!("discrete({} terms)", terms.len()),
            Response::Distributed { nodes, .. } => format!("distributed({} nodes)", nodes.len()),
        };
        f.debug_struct("AmnesiaOperator")
            .field("label", &self.label)
            .field("kind", &kind)
            .field("min_lag", &self.min_lag)
            .finish()
    }
}

/// `sum p_i(t) x(t - delay_i)`.
///
/// Without `bound_override`, `b(t) = sum p_i(t)`, which is a valid bound
/// only where every coefficient is nonnegative; elsewhere it is NaN and
/// downstream integrals fail.
pub fn make_discrete_delay(terms: Vec<DelayTerm>, bound_override: Option<ScalarFn>) -> Result<AmnesiaOperator> {
    if terms.is_empty() {
        return Err(invalid("terms", "at least one delay term is required"));
    }
    if let Some(bad) = terms.iter().find(|term| !(term.delay > 0.0) || !term.delay.is_finite()) {
        return Err(invalid(
            "delay",
            format!("delays must be positive and finite, got {}", bad.delay),
        ));
    }
    let min_lag = terms.iter().map(|term| term.delay).fold(f64::INFINITY, f64::min);

    let bound = bound_override.unwrap_or_else(|| {
        let coefficients: Vec<ScalarFn> = terms.iter().map(|term| term.coefficient.clone()).collect();
        Arc::new(move |t| {
            let mut sum = 0.0;
            for p in &coefficients {
                let v = p(t);
                if v < 0.0 {
                    return f64::NAN;
                }
                sum += v;
            }
            sum
        })
    });

    Ok(AmnesiaOperator {
        response: Response::Discrete(terms),
        bound,
        label: "discrete delay".to_owned(),
        min_lag: Some(min_lag),
    })
}

/// `∫_{s_lo}^{s_hi} kernel(t, s, [x(d(t, s)) for d in delay_maps]) ds` by
/// composite Simpson.
///
/// `sigma`/`tau` are the min/max of the delay maps over the quadrature
/// nodes, which are exactly the points the quadrature reads.
pub fn make_distributed_delay(
    kernel: KernelFn,
    s_range: (f64, f64),
    delay_maps: Vec<DelayMap>,
    panels: usize,
    bound: ScalarFn,
) -> Result<AmnesiaOperator> {
    let (lo, hi) = s_range;
    if !(lo < hi) {
        return Err(invalid("s_range", format!("need s_lo < s_hi, got [{lo}, {hi}]")));
    }
    if delay_maps.is_empty() {
        return Err(invalid("delay_maps", "at least one delay map is required"));
    }
    let nodes = simpson_nodes(lo, hi, panels)?;
    Ok(AmnesiaOperator {
        response: Response::Distributed {
            kernel,
            nodes,
            delay_maps,
        },
        bound,
        label: "distributed delay".to_owned(),
        min_lag: None,
    })
}

impl AmnesiaOperator {
    pub fn with_label(mut self, label: impl Into<String>) -> Self {
        self.label = label.into();
        self
    }

    /// Declares the smallest lag `t - tau(t)` over the operating range,
    /// used by the integrator's step-size check.
    pub fn with_min_lag(mut self, min_lag: f64) -> Self {
        self.min_lag = Some(min_lag);
        self
    }

    pub fn with_bound(mut self, bound: ScalarFn) -> Self {
        self.bound = bound;
        self
    }

    pub fn label(&self) -> &str {
        &self.label
    }

    pub fn min_lag(&self) -> Option<f64> {
        self.min_lag
    }

    pub fn bound_b(&self, t: f64) -> f64 {
        (self.bound)(t)
    }

    pub fn bound_fn(&self) -> ScalarFn {
        self.bound.clone()
    }

    /// `sup H(t)`.
    pub fn tau(&self, t: f64) -> f64 {
        match &self.response {
            Response::Discrete(terms) => terms
                .iter()
                .map(|term| t - term.delay)
                .fold(f64::NEG_INFINITY, f64::max),
            Response::Distributed { nodes, delay_maps, .. } => nodes
                .iter()
                .flat_map(|&(s, _)| delay_maps.iter().map(move |d| d(t, s)))
                .fold(f64::NEG_INFINITY, f64::max),
        }
    }

    /// `inf H(t)`.
    pub fn sigma(&self, t: f64) -> f64 {
        match &self.response {
            Response::Discrete(terms) => terms.iter().map(|term| t - term.delay).fold(f64::INFINITY, f64::min),
            Response::Distributed { nodes, delay_maps, .. } => nodes
                .iter()
                .flat_map(|&(s, _)| delay_maps.iter().map(move |d| d(t, s)))
                .fold(f64::INFINITY, f64::min),
        }
    }

    /// `(Tx)(t)` for the given history.
    pub fn evaluate(&self, t: f64, history: &dyn History) -> Result<f64> {
        match &self.response {
            Response::Discrete(terms) => terms.iter().try_fold(0.0, |acc, term| {
                Ok(acc + (term.coefficient)(t) * history.at(t - term.delay)?)
            }),
            Response::Distributed {
                kernel,
                nodes,
                delay_maps,
            } => {
                let mut delayed = vec![0.0; delay_maps.len()];
                let mut sum = 0.0;
                for &(s, weight) in nodes {
                    for (slot, d) in delayed.iter_mut().zip(delay_maps) {
                        *slot = history.at(d(t, s))?;
                    }
                    sum += weight * kernel(t, s, &delayed);
                }
                Ok(sum)
            }
        }
    }
}

/// Finite-horizon plausibility check for `liminf sigma(t) = +inf`: sampled
/// sigma must be nondecreasing with a positive least-squares slope. It can
/// only refute obvious violations, never prove the limit.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SigmaGrowth {
    pub slope: f64,
    pub nondecreasing: bool,
    pub plausible: bool,
}

pub fn check_sigma_unbounded(op: &AmnesiaOperator, t_start: f64, t_end: f64, samples: usize) -> Result<SigmaGrowth> {
    if !(t_start < t_end) || samples < 3 {
        return Err(invalid("t_range", "need t_start < t_end and at least 3 samples"));
    }
    let ts: Vec<f64> = (0..samples)
        .map(|k| t_start + (t_end - t_start) * k as f64 / (samples - 1) as f64)
        .collect();
    let sig: Vec<f64> = ts.iter().map(|&t| op.sigma(t)).collect();
    let nondecreasing = sig.windows(2).all(|w| w[1] >= w[0] - 1e-12 * (1.0 + w[0].abs()));
    let slope = crate::criterion::least_squares_slope(&ts, &sig);
    Ok(SigmaGrowth {
        slope,
        nondecreasing,
        plausible: nondecreasing && slope > 0.0 && sig[samples - 1] > sig[0],
    })
}

/// Which half of condition (C) a sample exercises.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum ConditionHalf {
    /// `(Tx)(t) >= b(t) inf x` for positive histories.
    Lower,
    /// `(Tx)(t) <= b(t) sup x` for negative histories.
    Upper,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Violation {
    pub t: f64,
    pub trial: usize,
    pub half: ConditionHalf,
    pub operator_value: f64,
    pub bound_value: f64,
    pub margin: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct AuditReport {
    pub checked: usize,
    pub satisfied: usize,
    pub violations: Vec<Violation>,
    /// Smallest signed margin seen; negative means a violation.
    pub worst_margin: f64,
}

impl AuditReport {
    pub fn passed(&self) -> bool {
        self.violations.is_empty()
    }
}

/// Source of one-signed test histories for [`audit_condition_c`].
pub trait HistoryFamily {
    /// A history on `domain` that is strictly positive (`Positive`) or
    /// strictly negative (`Negative`) everywhere.
    fn sample(&self, domain: (f64, f64), pattern: SignPattern, trial: usize) -> Result<Box<dyn History>>;
}

/// Piecewise-linear interpolants of seeded random Fourier sums; their
/// extrema over the memory window are computed exactly.
#[derive(Debug, Clone)]
pub struct RandomHistoryFamily {
    pub seed: u64,
    pub amplitude: f64,
    pub knots: usize,
}

impl RandomHistoryFamily {
    pub fn new(seed: u64, amplitude: f64) -> Self {
        Self {
            seed,
            amplitude,
            knots: 257,
        }
    }
}

impl HistoryFamily for RandomHistoryFamily {
    fn sample(&self, domain: (f64, f64), pattern: SignPattern, trial: usize) -> Result<Box<dyn History>> {
        let stream = 2 * trial as u64 + u64::from(pattern == SignPattern::Negative);
        let smooth = FourierHistory::random(domain.0, domain.1, self.seed, stream, pattern, self.amplitude)?;
        Ok(Box::new(smooth.to_piecewise_linear(self.knots)?))
    }
}

/// Relative slack absorbing rounding in the quadrature sums.
const AUDIT_SLACK: f64 = 1e-12;

/// Samples condition (C) at every `t` in `t_samples` with `trials`
/// positive and `trials` negative histories each.
///
/// The infimum/supremum is taken over the memory window
/// `[sigma(t), tau(t)]`, the hull of the points the operator reads.
pub fn audit_condition_c(
    op: &AmnesiaOperator,
    t_samples: &[f64],
    family: &dyn HistoryFamily,
    trials: usize,
) -> Result<AuditReport> {
    let mut report = AuditReport {
        checked: 0,
        satisfied: 0,
        violations: Vec::new(),
        worst_margin: f64::INFINITY,
    };
    for &t in t_samples {
        let (lo, hi) = (op.sigma(t), op.tau(t));
        let domain = (lo - 0.5, t);
        let b = op.bound_b(t);
        for trial in 0..trials {
            for (half, pattern) in [
                (ConditionHalf::Lower, SignPattern::Positive),
                (ConditionHalf::Upper, SignPattern::Negative),
            ] {
                let history = family.sample(domain, pattern, trial)?;
                let (inf, sup) = history.extrema(lo, hi)?;
                let value = op.evaluate(t, history.as_ref())?;
                let (bound_value, margin) = match half {
                    ConditionHalf::Lower => (b * inf, value - b * inf),
                    ConditionHalf::Upper => (b * sup, b * sup - value),
                };
                report.checked += 1;
                report.worst_margin = report.worst_margin.min(margin);
                let slack = AUDIT_SLACK * (value.abs() + bound_value.abs());
                if margin >= -slack {
                    report.satisfied += 1;
                } else {
                    report.violations.push(Violation {
                        t,
                        trial,
                        half,
                        operator_value: value,
                        bound_value,
                        margin,
                    });
                }
            }
        }
    }
    if report.checked == 0 {
        return Err(Error::InvalidParameter {
            name: "t_samples",
            reason: "audit needs at least one time sample and one trial".into(),
        });
    }
    Ok(report)
}

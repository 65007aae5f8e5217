//! Past-trajectory segments that operators read from.

use std::f64::consts::PI;
use std::sync::Arc;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::error::{invalid, Error, Result};

/// Samples used by the default [`History::extrema`].
const EXTREMA_SAMPLES: usize = 2048;

/// A real function known on a closed interval `[start, end]`.
///
/// Evaluation outside the interval is an error; values within a relative
/// `1e-12` of an endpoint are clamped onto it to absorb rounding in `t - lag`.
pub trait History: Send + Sync {
    fn domain(&self) -> (f64, f64);

    /// Value at `t`, which the caller guarantees is inside the domain.
    fn value_unchecked(&self, t: f64) -> f64;

    fn at(&self, t: f64) -> Result<f64> {
        let (start, end) = self.domain();
        let slack = 1e-12 * (1.0 + t.abs());
        if !(t >= start - slack && t <= end + slack) {
            return Err(Error::HistoryDomain { t, start, end });
        }
        Ok(self.value_unchecked(t.clamp(start, end)))
    }

    /// `(inf, sup)` over `[a, b]`. The default samples a uniform grid;
    /// implementations with exact extrema override it.
    fn extrema(&self, a: f64, b: f64) -> Result<(f64, f64)> {
        let mut lo = self.at(a)?;
        let mut hi = lo;
        if b > a {
            for k in 1..=EXTREMA_SAMPLES {
                let v = self.at(a + (b - a) * k as f64 / EXTREMA_SAMPLES as f64)?;
                lo = lo.min(v);
                hi = hi.max(v);
            }
        }
        Ok((lo, hi))
    }
}

/// History backed by a closure.
#[derive(Clone)]
pub struct HistoryFunction {
    start: f64,
    end: f64,
    f: Arc<dyn Fn(f64) -> f64 + Send + Sync>,
}

impl HistoryFunction {
    pub fn new(start: f64, end: f64, f: impl Fn(f64) -> f64 + Send + Sync + 'static) -> Result<Self> {
        if !(start <= end) {
            return Err(invalid("domain", format!("start {start} must not exceed end {end}")));
        }
        Ok(Self {
            start,
            end,
            f: Arc::new(f),
        })
    }

    pub fn constant(start: f64, end: f64, c: f64) -> Result<Self> {
        Self::new(start, end, move |_| c)
    }

    /// `e^{λ s}`, an exact solution profile for linear autonomous equations.
    pub fn exponential(start: f64, end: f64, lambda: f64) -> Result<Self> {
        Self::new(start, end, move |s| (lambda * s).exp())
    }
}

impl History for HistoryFunction {
    fn domain(&self) -> (f64, f64) {
        (self.start, self.end)
    }

    fn value_unchecked(&self, t: f64) -> f64 {
        (self.f)(t)
    }
}

impl std::fmt::Debug for HistoryFunction {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("HistoryFunction")
            .field("start", &self.start)
            .field("end", &self.end)
            .finish_non_exhaustive()
    }
}

/// Linear interpolation of values on a uniform knot grid. Its extrema over
/// any interval are exact: the max/min over interior knots and endpoints.
#[derive(Debug, Clone, PartialEq)]
pub struct PiecewiseLinearHistory {
    start: f64,
    step: f64,
    knots: Vec<f64>,
}

impl PiecewiseLinearHistory {
    pub fn new(start: f64, step: f64, knots: Vec<f64>) -> Result<Self> {
        if !(step > 0.0) {
            return Err(invalid("step", "must be positive"));
        }
        if knots.len() < 2 {
            return Err(invalid("knots", "need at least two knots"));
        }
        Ok(Self { start, step, knots })
    }

    pub fn from_fn(start: f64, end: f64, knot_count: usize, f: impl Fn(f64) -> f64) -> Result<Self> {
        if knot_count < 2 || !(end > start) {
            return Err(invalid("knot_count", "need at least two knots on a non-empty interval"));
        }
        let step = (end - start) / (knot_count - 1) as f64;
        let knots = (0..knot_count).map(|k| f(start + k as f64 * step)).collect();
        Self::new(start, step, knots)
    }

    fn end(&self) -> f64 {
        self.start + self.step * (self.knots.len() - 1) as f64
    }
}

impl History for PiecewiseLinearHistory {
    fn domain(&self) -> (f64, f64) {
        (self.start, self.end())
    }

    fn value_unchecked(&self, t: f64) -> f64 {
        let x = (t - self.start) / self.step;
        let last = self.knots.len() - 1;
        let k = (x.floor().max(0.0) as usize).min(last - 1);
        let frac = (x - k as f64).clamp(0.0, 1.0);
        self.knots[k] + frac * (self.knots[k + 1] - self.knots[k])
    }

    fn extrema(&self, a: f64, b: f64) -> Result<(f64, f64)> {
        let va = self.at(a)?;
        let vb = self.at(b)?;
        let (mut lo, mut hi) = (va.min(vb), va.max(vb));
        let first = ((a - self.start) / self.step).ceil().max(0.0) as usize;
        let last = (((b - self.start) / self.step).floor().max(0.0) as usize).min(self.knots.len() - 1);
        for &v in self.knots.iter().take(last + 1).skip(first) {
            lo = lo.min(v);
            hi = hi.max(v);
        }
        Ok((lo, hi))
    }
}

/// Sign pattern requested from a random history.
#[derive(Debug, Clone, Copy, PartialEq, Eq, serde::Serialize)]
#[serde(rename_all = "snake_case")]
pub enum SignPattern {
    Mixed,
    Positive,
    Negative,
}

const FOURIER_MODES: usize = 5;
const NORMALIZATION_SAMPLES: usize = 1024;

/// Truncated Fourier sum on `[start, end]`, normalized so that
/// `max |h| = amplitude`.
#[derive(Debug, Clone, PartialEq)]
pub struct FourierHistory {
    start: f64,
    end: f64,
    offset: f64,
    cos: [f64; FOURIER_MODES],
    sin: [f64; FOURIER_MODES],
    shift: f64,
    scale: f64,
}

impl FourierHistory {
    /// Draws coefficients from a ChaCha stream keyed by `(seed, index)`.
    pub fn random(start: f64, end: f64, seed: u64, index: u64, pattern: SignPattern, amplitude: f64) -> Result<Self> {
        if !(end > start) {
            return Err(invalid("domain", "random history needs a non-empty interval"));
        }
        if !(amplitude > 0.0) {
            return Err(invalid("amplitude", "must be positive"));
        }
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        rng.set_stream(index);
        let mut h = Self {
            start,
            end,
            offset: rng.gen_range(-1.0..1.0),
            cos: [0.0; FOURIER_MODES],
            sin: [0.0; FOURIER_MODES],
            shift: 0.0,
            scale: 1.0,
        };
        for k in 0..FOURIER_MODES {
            h.cos[k] = rng.gen_range(-1.0..1.0);
            h.sin[k] = rng.gen_range(-1.0..1.0);
        }

        let (lo, hi) = h.raw_extrema();
        match pattern {
            SignPattern::Mixed => {
                h.scale = amplitude / lo.abs().max(hi.abs()).max(f64::MIN_POSITIVE);
            }
            SignPattern::Positive | SignPattern::Negative => {
                // Shift so the minimum sits at a tenth of the range above zero.
                let range = (hi - lo).max(1e-3);
                h.shift = -lo + 0.1 * range;
                let sign = if pattern == SignPattern::Positive { 1.0 } else { -1.0 };
                h.scale = sign * amplitude / (hi + h.shift);
            }
        }
        Ok(h)
    }

    fn raw(&self, t: f64) -> f64 {
        let theta = 2.0 * PI * (t - self.start) / (self.end - self.start);
        let mut v = self.offset;
        for k in 0..FOURIER_MODES {
            let arg = (k + 1) as f64 * theta;
            v += self.cos[k] * arg.cos() + self.sin[k] * arg.sin();
        }
        v
    }

    fn raw_extrema(&self) -> (f64, f64) {
        (0..=NORMALIZATION_SAMPLES)
            .map(|k| self.raw(self.start + (self.end - self.start) * k as f64 / NORMALIZATION_SAMPLES as f64))
            .fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), v| (lo.min(v), hi.max(v)))
    }

    /// Piecewise-linear interpolant through the knots of this history.
    pub fn to_piecewise_linear(&self, knot_count: usize) -> Result<PiecewiseLinearHistory> {
        PiecewiseLinearHistory::from_fn(self.start, self.end, knot_count, |t| self.value_unchecked(t))
    }
}

impl History for FourierHistory {
    fn domain(&self) -> (f64, f64) {
        (self.start, self.end)
    }

    fn value_unchecked(&self, t: f64) -> f64 {
        self.scale * (self.raw(t) + self.shift)
    }
}

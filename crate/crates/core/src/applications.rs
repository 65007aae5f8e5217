//! Operators for the three worked examples, with their bound functions and
//! the parameter conditions originally stated for them.

use std::f64::consts::E;
use std::sync::Arc;

use serde::Serialize;

use crate::amnesia_operators::{
    constant_fn, make_discrete_delay, make_distributed_delay, scalar_fn, AmnesiaOperator, DelayMap, DelayTerm,
    KernelFn, ScalarFn,
};
use crate::error::{invalid, Result};

/// Example 1 is posed for `t >= 6`; operators here run in `t' = t - 6`.
pub const APP1_TIME_SHIFT: f64 = 6.0;

/// `x' + x(t-6)/(q t) + (t-1) x(t-8)/(q t) = 0`, in shifted time.
///
/// `b = 1/q` and `tau(t) = t - 6`, so `w = 6/q`.
pub fn app1_operator(q: f64) -> Result<AmnesiaOperator> {
    if !(q > 0.0) {
        return Err(invalid("q", format!("must be positive, got {q}")));
    }
    let s = APP1_TIME_SHIFT;
    Ok(make_discrete_delay(
        vec![
            DelayTerm::new(scalar_fn(move |t| 1.0 / (q * (t + s))), 6.0),
            DelayTerm::new(scalar_fn(move |t| (t + s - 1.0) / (q * (t + s))), 8.0),
        ],
        Some(constant_fn(1.0 / q)),
    )?
    .with_label(format!("application 1 (q = {q})")))
}

/// Stated sufficient condition `q > 6e`.
pub fn app1_stated_condition(q: f64) -> bool {
    q > 6.0 * E
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct App2Params {
    pub a1: f64,
    pub a2: f64,
    pub a3: f64,
}

impl Default for App2Params {
    fn default() -> Self {
        Self {
            a1: 1.0,
            a2: 1.0,
            a3: 1.0,
        }
    }
}

impl App2Params {
    fn validate(&self) -> Result<()> {
        if !(self.a2 > 0.0 && self.a3 > 0.0) {
            return Err(invalid("a2/a3", "must be positive"));
        }
        if self.a1 == 0.0 || !self.a1.is_finite() {
            return Err(invalid("a1", "must be a nonzero real"));
        }
        Ok(())
    }

    /// `min(a2, a3)`, the lag of `tau(t) = t - a`.
    pub fn min_lag(&self) -> f64 {
        self.a2.min(self.a3)
    }

    /// `e^{a1}(e^{a1} - 1)/a1 = ∫_1^2 e^{a1 s} ds`.
    pub fn bound(&self) -> f64 {
        self.a1.exp() * self.a1.exp_m1() / self.a1
    }

    /// Stated condition `a e^{1 + a1}(e^{a1} - 1)/a1 > 1`, i.e. `a b e > 1`.
    pub fn stated_condition(&self) -> bool {
        self.min_lag() * E * self.bound() > 1.0
    }
}

/// `x' + ∫_1^2 e^{max(a1 s, x(t - a2 s)^2)} x(t - a3 s) ds = 0`.
pub fn app2_operator(params: App2Params, panels: usize) -> Result<AmnesiaOperator> {
    params.validate()?;
    let App2Params { a1, a2, a3 } = params;
    let kernel: KernelFn = Arc::new(move |_, s, x| (a1 * s).max(x[0] * x[0]).exp() * x[1]);
    let maps: Vec<DelayMap> = vec![Arc::new(move |t, s| t - a2 * s), Arc::new(move |t, s| t - a3 * s)];
    Ok(
        make_distributed_delay(kernel, (1.0, 2.0), maps, panels, constant_fn(params.bound()))?
            .with_min_lag(params.min_lag())
            .with_label(format!("application 2 (a1 = {a1}, a2 = {a2}, a3 = {a3})")),
    )
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct App3Params {
    pub a: f64,
    pub b: f64,
    pub m: f64,
    pub l: u32,
}

impl App3Params {
    fn validate(&self) -> Result<()> {
        if !(self.a > 0.0 && self.b > 0.0 && self.m > 0.0) {
            return Err(invalid("a/b/m", "must be positive"));
        }
        if self.l == 0 {
            return Err(invalid("l", "must be a positive integer"));
        }
        Ok(())
    }

    pub fn l_odd(&self) -> bool {
        self.l % 2 == 1
    }

    /// `∫_0^1 (a s^m - b s^2) ds` for odd `l`, `∫_0^1 a s^m ds` for even `l`:
    /// the kernel's lower bound integrated over `s`.
    pub fn derived_bound(&self) -> f64 {
        let main = self.a / (self.m + 1.0);
        if self.l_odd() {
            main - self.b / 3.0
        } else {
            main
        }
    }

    /// The bound as originally stated: `a/m - b` (odd `l`) or `a/m`.
    pub fn stated_bound(&self) -> f64 {
        if self.l_odd() {
            self.a / self.m - self.b
        } else {
            self.a / self.m
        }
    }

    /// Stated condition `(a - m b) e > m` (odd `l`) or `a e > m` (even `l`).
    pub fn stated_condition(&self) -> bool {
        if self.l_odd() {
            (self.a - self.m * self.b) * E > self.m
        } else {
            self.a * E > self.m
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum App3Bound {
    Derived,
    Stated,
}

/// `x' + ∫_0^1 [a s^m + b s^2 sin^l(x(t-s-5)^3)] x(t-s-1) ds = 0`.
pub fn app3_operator(params: App3Params, panels: usize, bound: App3Bound) -> Result<AmnesiaOperator> {
    params.validate()?;
    let App3Params { a, b, m, l } = params;
    let kernel: KernelFn = Arc::new(move |_, s, x| {
        let osc = (x[0] * x[0] * x[0]).sin().powi(l as i32);
        (a * s.powf(m) + b * s * s * osc) * x[1]
    });
    let maps: Vec<DelayMap> = vec![Arc::new(|t, s| t - s - 5.0), Arc::new(|t, s| t - s - 1.0)];
    let b_value = match bound {
        App3Bound::Derived => params.derived_bound(),
        App3Bound::Stated => params.stated_bound(),
    };
    let bound_fn: ScalarFn = constant_fn(b_value);
    Ok(make_distributed_delay(kernel, (0.0, 1.0), maps, panels, bound_fn)?
        .with_min_lag(1.0)
        .with_label(format!("application 3 (a = {a}, b = {b}, m = {m}, l = {l})")))
}

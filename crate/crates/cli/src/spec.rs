//! Equation-spec JSON (`"schema": 1`).
//!
//! ```json
//! {
//!   "schema": 1,
//!   "label": "x' + x(t-1) = 0",
//!   "kind": "discrete_delay",
//!   "terms": [{ "coef_expr": "1", "delay": 1 }],
//!   "bound_b": "1",
//!   "tau_expr": "t - 1"
//! }
//! ```
//!
//! `kind` is `discrete_delay` (a list of `{coef_expr, delay}` terms) or
//! `distributed_delay` with a catalog kernel:
//!
//! ```json
//! { "kind": "distributed_delay",
//!   "kernel": { "name": "app2", "a1": 1, "a2": 1, "a3": 1 },
//!   "panels": 64, "bound_b": "app2" }
//! ```
//!
//! `bound_b` is an expression in `t` or one of the named bounds `app2`,
//! `app3_derived`, `app3_stated`. It defaults to the coefficient sum for
//! discrete delays and is required for distributed ones. `tau_expr`
//! overrides the operator's own `tau(t)` in the criterion integral.

use std::sync::Arc;

use amnesia_core::amnesia_operators::{constant_fn, make_discrete_delay, AmnesiaOperator, DelayTerm, ScalarFn};
use amnesia_core::applications::{app2_operator, app3_operator, App2Params, App3Bound, App3Params};
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::expr::Expr;

pub const SCHEMA_VERSION: u32 = 1;

#[derive(Debug, Clone, PartialEq, Error)]
#[error("invalid equation spec field `{field}`: {message}")]
pub struct SpecError {
    pub field: String,
    pub message: String,
}

fn spec_error(field: impl Into<String>, message: impl Into<String>) -> SpecError {
    SpecError {
        field: field.into(),
        message: message.into(),
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EquationSpec {
    pub schema: u32,
    #[serde(default)]
    pub label: String,
    #[serde(flatten)]
    pub operator: OperatorSpec,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub bound_b: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub tau_expr: Option<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum OperatorSpec {
    DiscreteDelay {
        terms: Vec<TermSpec>,
    },
    DistributedDelay {
        kernel: KernelSpec,
        #[serde(default = "default_panels")]
        panels: usize,
    },
}

fn default_panels() -> usize {
    amnesia_core::quadrature::DEFAULT_PANELS
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TermSpec {
    pub coef_expr: String,
    pub delay: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "name", rename_all = "snake_case")]
pub enum KernelSpec {
    App2 { a1: f64, a2: f64, a3: f64 },
    App3 { a: f64, b: f64, m: f64, l: u32 },
}

/// An operator ready for analysis, with its bound installed and the
/// `tau` used by the criterion integral.
pub struct BuiltEquation {
    pub operator: AmnesiaOperator,
    pub tau: Arc<dyn Fn(f64) -> f64 + Send + Sync>,
}

impl EquationSpec {
    pub fn from_json(text: &str) -> Result<Self, SpecError> {
        let spec: Self = serde_json::from_str(text).map_err(|e| spec_error(json_field_hint(&e), e.to_string()))?;
        if spec.schema != SCHEMA_VERSION {
            return Err(spec_error(
                "schema",
                format!("unsupported schema version {} (expected {SCHEMA_VERSION})", spec.schema),
            ));
        }
        Ok(spec)
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("equation spec is always serializable")
    }

    pub fn build(&self) -> Result<BuiltEquation, SpecError> {
        let bound = self.bound_b.as_deref().map(|b| self.resolve_bound(b)).transpose()?;
        let operator = match &self.operator {
            OperatorSpec::DiscreteDelay { terms } => {
                if terms.is_empty() {
                    return Err(spec_error("terms", "at least one term is required"));
                }
                let mut built = Vec::with_capacity(terms.len());
                for (i, term) in terms.iter().enumerate() {
                    let coef = Expr::parse(&term.coef_expr)
                        .map_err(|e| spec_error(format!("terms[{i}].coef_expr"), e.to_string()))?;
                    if !(term.delay > 0.0) || !term.delay.is_finite() {
                        return Err(spec_error(format!("terms[{i}].delay"), "must be positive and finite"));
                    }
                    built.push(DelayTerm::new(Arc::new(move |t| coef.eval(t)), term.delay));
                }
                make_discrete_delay(built, bound).map_err(|e| spec_error("terms", e.to_string()))?
            }
            OperatorSpec::DistributedDelay { kernel, panels } => {
                let bound = bound.ok_or_else(|| spec_error("bound_b", "required for distributed_delay"))?;
                let op = match *kernel {
                    KernelSpec::App2 { a1, a2, a3 } => app2_operator(App2Params { a1, a2, a3 }, *panels),
                    KernelSpec::App3 { a, b, m, l } => {
                        app3_operator(App3Params { a, b, m, l }, *panels, App3Bound::Derived)
                    }
                };
                op.map_err(|e| spec_error("kernel", e.to_string()))?.with_bound(bound)
            }
        };
        let operator = if self.label.is_empty() {
            operator
        } else {
            operator.with_label(self.label.clone())
        };

        let tau: Arc<dyn Fn(f64) -> f64 + Send + Sync> = match &self.tau_expr {
            Some(text) => {
                let e = Expr::parse(text).map_err(|e| spec_error("tau_expr", e.to_string()))?;
                Arc::new(move |t| e.eval(t))
            }
            None => {
                let op = operator.clone();
                Arc::new(move |t| op.tau(t))
            }
        };
        Ok(BuiltEquation { operator, tau })
    }

    fn resolve_bound(&self, text: &str) -> Result<ScalarFn, SpecError> {
        let kernel = match &self.operator {
            OperatorSpec::DistributedDelay { kernel, .. } => Some(kernel),
            OperatorSpec::DiscreteDelay { .. } => None,
        };
        match (text.trim(), kernel) {
            ("app2", Some(&KernelSpec::App2 { a1, a2, a3 })) => Ok(constant_fn(App2Params { a1, a2, a3 }.bound())),
            ("app3_derived", Some(&KernelSpec::App3 { a, b, m, l })) => {
                Ok(constant_fn(App3Params { a, b, m, l }.derived_bound()))
            }
            ("app3_stated", Some(&KernelSpec::App3 { a, b, m, l })) => {
                Ok(constant_fn(App3Params { a, b, m, l }.stated_bound()))
            }
            ("app2" | "app3_derived" | "app3_stated", _) => Err(spec_error(
                "bound_b",
                format!("named bound `{text}` does not match the kernel"),
            )),
            (expr, _) => {
                let e = Expr::parse(expr).map_err(|err| spec_error("bound_b", err.to_string()))?;
                Ok(Arc::new(move |t| e.eval(t)))
            }
        }
    }
}

/// Best-effort field name for a serde error message.
fn json_field_hint(err: &serde_json::Error) -> String {
    let msg = err.to_string();
    for marker in ["missing field `", "unknown variant `", "unknown field `"] {
        if let Some(rest) = msg.split(marker).nth(1) {
            if let Some(name) = rest.split('`').next() {
                return name.to_owned();
            }
        }
    }
    if msg.contains("invalid type") || msg.contains("invalid value") {
        return "value".to_owned();
    }
    "json".to_owned()
}

#[cfg(test)]
mod tests {
    use super::*;
    use amnesia_core::history::HistoryFunction;

    const SIMPLE: &str = r#"{
        "schema": 1,
        "label": "unit delay",
        "kind": "discrete_delay",
        "terms": [{ "coef_expr": "1", "delay": 1 }]
    }"#;

    #[test]
    fn parses_and_builds_discrete() {
        let spec = EquationSpec::from_json(SIMPLE).unwrap();
        let built = spec.build().unwrap();
        assert_eq!(built.operator.bound_b(3.0), 1.0);
        assert_eq!((built.tau)(5.0), 4.0);
        assert_eq!(built.operator.label(), "unit delay");
        let h = HistoryFunction::constant(-1.0, 5.0, 2.0).unwrap();
        assert_eq!(built.operator.evaluate(5.0, &h).unwrap(), 2.0);
    }

    #[test]
    fn parses_distributed_with_named_bound() {
        let text = r#"{"schema":1,"kind":"distributed_delay",
            "kernel":{"name":"app2","a1":1,"a2":1,"a3":1},"bound_b":"app2"}"#;
        let spec = EquationSpec::from_json(text).unwrap();
        let built = spec.build().unwrap();
        let e = std::f64::consts::E;
        assert!((built.operator.bound_b(0.0) - e * (e - 1.0)).abs() < 1e-14);
        assert_eq!((built.tau)(10.0), 9.0);

        let missing = r#"{"schema":1,"kind":"distributed_delay",
            "kernel":{"name":"app3","a":3,"b":0.1,"m":1,"l":2}}"#;
        let err = EquationSpec::from_json(missing).unwrap().build().err().unwrap();
        assert_eq!(err.field, "bound_b");

        let mismatch = r#"{"schema":1,"kind":"distributed_delay",
            "kernel":{"name":"app3","a":3,"b":0.1,"m":1,"l":2},"bound_b":"app2"}"#;
        assert_eq!(
            EquationSpec::from_json(mismatch).unwrap().build().err().unwrap().field,
            "bound_b"
        );
    }

    #[test]
    fn errors_name_the_field() {
        let err = EquationSpec::from_json(r#"{"schema":2,"kind":"discrete_delay","terms":[]}"#).unwrap_err();
        assert_eq!(err.field, "schema");
        let err = EquationSpec::from_json(r#"{"schema":1,"kind":"discrete_delay"}"#).unwrap_err();
        assert_eq!(err.field, "terms");
        let err = EquationSpec::from_json(r#"{"schema":1,"kind":"neutral","terms":[]}"#).unwrap_err();
        assert_eq!(err.field, "neutral");
        let err = EquationSpec::from_json("{not json").unwrap_err();
        assert_eq!(err.field, "json");

        let bad_coef = r#"{"schema":1,"kind":"discrete_delay","terms":[{"coef_expr":"1 +","delay":1}]}"#;
        let err = EquationSpec::from_json(bad_coef).unwrap().build().err().unwrap();
        assert_eq!(err.field, "terms[0].coef_expr");
        let bad_delay = r#"{"schema":1,"kind":"discrete_delay","terms":[{"coef_expr":"1","delay":0}]}"#;
        let err = EquationSpec::from_json(bad_delay).unwrap().build().err().unwrap();
        assert_eq!(err.field, "terms[0].delay");
    }
}

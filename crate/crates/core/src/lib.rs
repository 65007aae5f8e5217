//! Oscillation criterion for delay differential equations
//! `x'(t) + (Tx)(t) = 0` whose response operator `T` has amnesia.
//!
//! If `T` satisfies the sign-respecting bound `(Tx)(t) >= b(t) inf x` (and
//! its mirror for negative histories), its memory drifts to infinity, and
//! `w = liminf ∫_{tau(t)}^t b(s) ds > 1/e`, then every solution either
//! oscillates or decreases monotonically to zero.
//!
//! - [`special_functions`]: Lambert W, power towers, Euler's interval.
//! - [`amnesia_operators`]: operators, histories and the bound audit.
//! - [`criterion`]: the estimate of `w`, the verdict, the tower replay.
//! - [`dde_simulator`]: method-of-steps RK4 and trajectory classification.
//! - [`applications`]: the three worked examples.

// `!(x > 0.0)` style checks are deliberate: they also reject NaN.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod amnesia_operators;
pub mod applications;
pub mod criterion;
pub mod dde_simulator;
pub mod error;
pub mod history;
pub mod quadrature;
pub mod special_functions;

pub use amnesia_operators::{audit_condition_c, make_discrete_delay, make_distributed_delay, AmnesiaOperator};
pub use criterion::{estimate_liminf_w, tetration_proof_trace, theorem_verdict, LiminfEstimate, Verdict};
pub use dde_simulator::{classify, integrate, SimulationConfig, Trajectory};
pub use error::{Error, Result};
pub use history::{History, HistoryFunction};

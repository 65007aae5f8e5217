mod common;

use amnesia_core::amnesia_operators::{constant_fn, make_discrete_delay, AmnesiaOperator, DelayTerm};
use amnesia_core::criterion::{estimate_liminf_w, theorem_verdict, Trend, VerdictOutcome};
use amnesia_core::dde_simulator::*;
use amnesia_core::history::{FourierHistory, HistoryFunction, SignPattern};
use common::characteristic_root;
use proptest::prelude::*;

fn single_delay(p: f64, lag: f64) -> AmnesiaOperator {
    make_discrete_delay(vec![DelayTerm::constant(p, lag)], None).unwrap()
}

#[test]
fn unit_delay_oscillates() {
    let op = single_delay(1.0, 1.0);
    let h = HistoryFunction::constant(-1.0, 0.0, 1.0).unwrap();
    let traj = integrate(&op, &h, &SimulationConfig::new(50.0, 0.01)).unwrap();
    let class = classify(&traj, DEFAULT_TRANSIENT_FRACTION, None).unwrap();
    assert_eq!(class.class, SolutionKind::Oscillatory);
    assert!(class.zero_crossings.len() >= 10);
}

#[test]
fn zero_operator_is_inconclusive() {
    let op = single_delay(0.0, 1.0);
    let h = HistoryFunction::constant(-1.0, 0.0, 1.0).unwrap();
    let traj = integrate(&op, &h, &SimulationConfig::new(20.0, 0.05)).unwrap();
    assert!(traj.values.iter().all(|&v| v == 1.0));
    assert_eq!(classify(&traj, 0.25, None).unwrap().class, SolutionKind::Inconclusive);
}

#[test]
fn weak_delay_follows_exponential_solution() {
    let (p, tau) = (0.1, 1.0);
    let lambda = characteristic_root(p, tau);
    let h = HistoryFunction::exponential(-tau, 0.0, lambda).unwrap();
    let traj = integrate(&single_delay(p, tau), &h, &SimulationConfig::new(200.0, 0.01)).unwrap();
    let k = traj.times.iter().position(|&t| (t - 20.0).abs() < 1e-9).unwrap();
    let exact = (lambda * 20.0).exp();
    assert!((traj.values[k] - exact).abs() / exact <= 1e-4);
    assert_eq!(classify(&traj, 0.25, None).unwrap().class, SolutionKind::MonotoneToZero);
}

#[test]
fn linear_interpolation_is_second_order() {
    let (p, tau) = (1.0, 0.1);
    let lambda = characteristic_root(p, tau);
    let h = HistoryFunction::exponential(-tau, 0.0, lambda).unwrap();
    let err = |step: f64| {
        let cfg = SimulationConfig::new(5.0, step).with_interpolation(Interpolation::Linear);
        let traj = integrate(&single_delay(p, tau), &h, &cfg).unwrap();
        traj.times
            .iter()
            .zip(&traj.values)
            .map(|(t, x)| (x - (lambda * t).exp()).abs())
            .fold(0.0, f64::max)
    };
    let ratio = err(0.02) / err(0.01);
    assert!(ratio > 3.0 && ratio < 5.0, "ratio {ratio}");
}

/// A positive solution of a nonoscillatory equation stays positive and
/// nonincreasing once the delay has been passed.
#[test]
fn eventually_positive_solutions_decrease() {
    let op = single_delay(0.2, 1.0);
    let h = HistoryFunction::new(-1.0, 0.0, |s| 1.0 + 0.5 * (5.0 * s).sin()).unwrap();
    let traj = integrate(&op, &h, &SimulationConfig::new(40.0, 0.01)).unwrap();
    for (k, (&t, &x)) in traj.times.iter().zip(&traj.values).enumerate() {
        assert!(x > 0.0, "t={t}");
        if t >= 1.0 {
            assert!(traj.derivative_values[k] <= 0.0, "t={t}");
        }
    }
}

#[test]
fn criterion_on_unit_delay() {
    let b = |_: f64| 1.0;
    let tau = |t: f64| t - 1.0;
    let est = estimate_liminf_w(&b, &tau, 0.0, 50.0, 128, 16).unwrap();
    assert!((est.w_hat - 1.0).abs() < 1e-14);
    assert_eq!(est.trend, Trend::Stable);
    assert_eq!(theorem_verdict(&est).outcome, VerdictOutcome::PropertyPGuaranteed);

    let b = |_: f64| 0.3;
    let est = estimate_liminf_w(&b, &tau, 0.0, 50.0, 128, 16).unwrap();
    assert_eq!(theorem_verdict(&est).outcome, VerdictOutcome::Inconclusive);
}

#[test]
fn concordance_is_deterministic_and_concordant() {
    let op = single_delay(1.0, 1.0);
    let mut cfg = ConcordanceConfig::new(SimulationConfig::new(40.0, 0.02), 6, 99);
    cfg.grid_points = 64;
    let a = concordance_experiment(&op, &constant_fn(1.0), &cfg).unwrap();
    let b = concordance_experiment(&op, &constant_fn(1.0), &cfg).unwrap();
    assert_eq!(a.verdict.outcome, VerdictOutcome::PropertyPGuaranteed);
    assert!(a.concordant && a.audit.passed());
    assert_eq!(a.seed, 99);
    for (x, y) in a.runs.iter().zip(&b.runs) {
        assert_eq!(x.trajectory.values, y.trajectory.values);
        assert_eq!(x.class, y.class);
        assert_eq!(x.class.class, SolutionKind::Oscillatory);
    }
    // An overstated bound fails the audit before any simulation runs.
    assert!(concordance_experiment(&op, &constant_fn(2.0), &cfg).is_err());
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(24))]

    #[test]
    fn classification_is_scale_invariant(
        p in 0.05f64..1.5, tau in 0.5f64..2.0, seed in 0u64..1000, c in prop_oneof![1e-6f64..1e-2, 1e2f64..1e6],
    ) {
        let op = single_delay(p, tau);
        let h = FourierHistory::random(-tau, 0.0, seed, 0, SignPattern::Mixed, 1.0).unwrap();
        let hc = FourierHistory::random(-tau, 0.0, seed, 0, SignPattern::Mixed, c).unwrap();
        let cfg = SimulationConfig::new(30.0, 0.02);
        let x = classify(&integrate(&op, &h, &cfg).unwrap(), 0.25, None).unwrap();
        let y = classify(&integrate(&op, &hc, &cfg).unwrap(), 0.25, None).unwrap();
        prop_assert_eq!(x.class, y.class);
        prop_assert_eq!(x.zero_crossings.len(), y.zero_crossings.len());
        prop_assert!((y.final_value - c * x.final_value).abs() <= 1e-9 * (c * x.final_value).abs().max(1e-300));
    }

    #[test]
    fn crossings_lie_between_sign_changes(seed in 0u64..500) {
        let op = single_delay(1.0, 1.0);
        let h = FourierHistory::random(-1.0, 0.0, seed, 1, SignPattern::Mixed, 1.0).unwrap();
        let traj = integrate(&op, &h, &SimulationConfig::new(20.0, 0.05)).unwrap();
        for t in zero_crossings(&traj) {
            let k = traj.times.iter().position(|&s| s >= t).unwrap();
            prop_assert!(k > 0);
            prop_assert!(traj.values[k - 1] * traj.values[k] <= 0.0 || traj.values[k] == 0.0);
        }
    }
}

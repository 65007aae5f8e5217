use std::fs;
use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use amnesia_cli::report::read_trajectory_csv;
use amnesia_cli::spec::{EquationSpec, KernelSpec, OperatorSpec, TermSpec};
use proptest::prelude::*;
use serde_json::Value;

fn amnesia(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_amnesia")).args(args).output().unwrap()
}

fn stdout(o: &Output) -> String {
    String::from_utf8_lossy(&o.stdout).into_owned()
}

fn write_spec(dir: &Path, name: &str, json: &str) -> PathBuf {
    let path = dir.join(name);
    fs::write(&path, json).unwrap();
    path
}

fn single_delay_spec(p: f64, delay: f64) -> String {
    format!(
        r#"{{"schema":1,"label":"single delay","kind":"discrete_delay","terms":[{{"coef_expr":"{p:?}","delay":{delay:?}}}]}}"#
    )
}

fn app1_spec(q: f64) -> String {
    format!(
        r#"{{"schema":1,"label":"app1","kind":"discrete_delay",
            "terms":[{{"coef_expr":"1/({q:?}*(t+6))","delay":6}},{{"coef_expr":"(t+5)/({q:?}*(t+6))","delay":8}}],
            "bound_b":"1/{q:?}"}}"#
    )
}

#[test]
fn malformed_spec_exits_2_and_names_field() {
    let dir = tempfile::tempdir().unwrap();
    let bad = write_spec(dir.path(), "bad.json", "{ nope");
    let o = amnesia(&["analyze", "--spec", bad.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(2));

    let missing = write_spec(dir.path(), "m.json", r#"{"schema":1,"kind":"discrete_delay"}"#);
    let o = amnesia(&["analyze", "--spec", missing.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&o.stderr).contains("`terms`"));

    let bad_expr = write_spec(
        dir.path(),
        "e.json",
        r#"{"schema":1,"kind":"discrete_delay","terms":[{"coef_expr":"1/(t","delay":1}]}"#,
    );
    let o = amnesia(&["analyze", "--spec", bad_expr.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&o.stderr).contains("terms[0].coef_expr"));

    let o = amnesia(&["analyze", "--spec", dir.path().join("absent.json").to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(2));
}

#[test]
fn analyze_application_one() {
    let dir = tempfile::tempdir().unwrap();
    for (q, w, verdict) in [(10.0, 0.6, "property_p_guaranteed"), (20.0, 0.3, "inconclusive")] {
        let spec = write_spec(dir.path(), "app1.json", &app1_spec(q));
        let out = dir.path().join("report.json");
        let o = amnesia(&[
            "analyze",
            "--spec",
            spec.to_str().unwrap(),
            "--out",
            out.to_str().unwrap(),
        ]);
        assert_eq!(o.status.code(), Some(0));
        assert!(stdout(&o).contains(verdict));
        let report: Value = serde_json::from_str(&fs::read_to_string(&out).unwrap()).unwrap();
        assert!((report["w_hat"].as_f64().unwrap() - w).abs() < 1e-9);
        assert_eq!(report["verdict"], verdict);
        assert_eq!(report["spec"]["kind"], "discrete_delay");
        assert!(report["tool_version"].as_str().unwrap().starts_with("amnesia "));
        let infima = report["window_infima"].as_array().unwrap();
        assert_eq!(infima.len(), 512);
        assert_eq!(infima[0].as_array().unwrap().len(), 2);
    }
}

#[test]
fn analyze_formats() {
    let dir = tempfile::tempdir().unwrap();
    let spec = write_spec(dir.path(), "s.json", &single_delay_spec(1.0, 1.0));
    let o = amnesia(&["analyze", "--spec", spec.to_str().unwrap(), "--format", "json"]);
    let v: Value = serde_json::from_str(&stdout(&o)).unwrap();
    assert_eq!(v["w_hat"].as_f64(), Some(1.0));
    let o = amnesia(&[
        "analyze",
        "--spec",
        spec.to_str().unwrap(),
        "--format",
        "csv",
        "--grid-points",
        "20",
    ]);
    let text = stdout(&o);
    assert!(text.starts_with("t,window_inf\n"));
    assert_eq!(text.lines().count(), 21);
    let o = amnesia(&["analyze", "--spec", spec.to_str().unwrap(), "--format", "yaml"]);
    assert_eq!(o.status.code(), Some(2));
}

#[test]
fn tower_command() {
    let o = amnesia(&["tower", "--base", "1.5"]);
    assert_eq!(o.status.code(), Some(0));
    let s = stdout(&o);
    assert!(s.contains("Diverged") && s.contains("outside Euler interval"), "{s}");

    let s = stdout(&amnesia(&["tower", "--base", "1.4142135"]));
    assert!(
        s.contains("converged to 1.99999") && s.contains("Lambert closed form"),
        "{s}"
    );
    assert!(s.contains("inside Euler interval"));

    let s = stdout(&amnesia(&["tower", "--base", "1"]));
    assert!(s.contains("converged to 1.0 "), "{s}");

    let o = amnesia(&["tower", "--base", "1.2", "--format", "json"]);
    let v: Value = serde_json::from_str(&stdout(&o)).unwrap();
    assert_eq!(v["result"]["outcome"]["kind"], "converged");
    assert_eq!(v["in_euler_interval"], true);

    for bad in ["0", "-2"] {
        assert_eq!(amnesia(&["tower", "--base", bad]).status.code(), Some(2));
    }
}

#[test]
fn simulate_presets() {
    let dir = tempfile::tempdir().unwrap();
    let unit = write_spec(dir.path(), "unit.json", &single_delay_spec(1.0, 1.0));
    let csv = dir.path().join("unit.csv");
    let o = amnesia(&[
        "simulate",
        "--spec",
        unit.to_str().unwrap(),
        "--history",
        "constant:1",
        "--t-end",
        "50",
        "--out",
        csv.to_str().unwrap(),
    ]);
    assert_eq!(o.status.code(), Some(0));
    assert!(stdout(&o).contains("class    : oscillatory"));
    let traj = read_trajectory_csv(fs::read(&csv).unwrap().as_slice()).unwrap();
    assert_eq!(traj.len(), 5001);
    assert_eq!(traj.config.step, 0.01);
    assert!(traj.overflow_at.is_none());

    let zero = write_spec(dir.path(), "zero.json", &single_delay_spec(0.0, 1.0));
    let o = amnesia(&[
        "simulate",
        "--spec",
        zero.to_str().unwrap(),
        "--history",
        "constant:1",
        "--format",
        "csv",
    ]);
    let traj = read_trajectory_csv(o.stdout.as_slice()).unwrap();
    assert!(traj.values.iter().all(|&v| v == 1.0));
    let o = amnesia(&["simulate", "--spec", zero.to_str().unwrap(), "--history", "constant:1"]);
    assert!(stdout(&o).contains("class    : inconclusive"));

    // Dominant root of lambda + 0.1 e^{-lambda} = 0, by bisection.
    let (mut lo, mut hi) = (-1.0f64, 0.0f64);
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if mid + 0.1 * (-mid).exp() > 0.0 {
            hi = mid;
        } else {
            lo = mid;
        }
    }
    let weak = write_spec(dir.path(), "weak.json", &single_delay_spec(0.1, 1.0));
    let preset = format!("exponential:{:?}", 0.5 * (lo + hi));
    let o = amnesia(&[
        "simulate",
        "--spec",
        weak.to_str().unwrap(),
        "--history",
        &preset,
        "--t-end",
        "200",
    ]);
    assert!(stdout(&o).contains("class    : monotone_to_zero"), "{}", stdout(&o));

    let o = amnesia(&[
        "simulate",
        "--spec",
        unit.to_str().unwrap(),
        "--seed",
        "5",
        "--format",
        "json",
    ]);
    let v: Value = serde_json::from_str(&stdout(&o)).unwrap();
    assert_eq!(v["history"], "random:5");

    let o = amnesia(&["simulate", "--spec", unit.to_str().unwrap(), "--history", "sawtooth:1"]);
    assert_eq!(o.status.code(), Some(2));
}

#[test]
fn simulate_overflow_exits_3_with_partial_csv() {
    let dir = tempfile::tempdir().unwrap();
    let spec = write_spec(
        dir.path(),
        "grow.json",
        r#"{"schema":1,"kind":"discrete_delay","terms":[{"coef_expr":"-5","delay":1}],"bound_b":"0"}"#,
    );
    let csv = dir.path().join("grow.csv");
    let o = amnesia(&[
        "simulate",
        "--spec",
        spec.to_str().unwrap(),
        "--history",
        "constant:1",
        "--t-end",
        "100",
        "--step",
        "0.05",
        "--out",
        csv.to_str().unwrap(),
    ]);
    assert_eq!(o.status.code(), Some(3));
    let text = fs::read_to_string(&csv).unwrap();
    assert!(text.lines().last().unwrap().starts_with("# overflow_at="));
    let traj = read_trajectory_csv(text.as_bytes()).unwrap();
    assert!(traj.overflow_at.unwrap() < 100.0);
    assert!(traj.values.iter().all(|v| v.abs() <= 1e12));
}

#[test]
fn reproduce_bundle_matches_analyze() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("bundle");
    let o = amnesia(&[
        "reproduce",
        "--app",
        "2",
        "--seed",
        "4",
        "--histories",
        "3",
        "--out",
        out.to_str().unwrap(),
    ]);
    assert_eq!(o.status.code(), Some(0), "{}", String::from_utf8_lossy(&o.stderr));
    let s = stdout(&o);
    assert!(s.contains("seed             : 4"));
    assert!(!s.contains("DISCREPANCY"));

    let bundle = out.join("app2");
    for f in ["spec.json", "report.json", "summary.json", "traj_00.csv", "traj_02.csv"] {
        assert!(bundle.join(f).exists(), "{f}");
    }
    let again = dir.path().join("again.json");
    let o = amnesia(&[
        "analyze",
        "--spec",
        bundle.join("spec.json").to_str().unwrap(),
        "--out",
        again.to_str().unwrap(),
    ]);
    assert_eq!(o.status.code(), Some(0));
    assert_eq!(fs::read(&again).unwrap(), fs::read(bundle.join("report.json")).unwrap());

    let summary: Value = serde_json::from_str(&fs::read_to_string(bundle.join("summary.json")).unwrap()).unwrap();
    assert_eq!(summary["seed"], 4);
    assert_eq!(summary["runs"].as_array().unwrap().len(), 3);
    assert_eq!(summary["concordant"], true);
}

#[test]
fn reproduce_rejects_bad_input() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().to_str().unwrap();
    assert_eq!(
        amnesia(&["reproduce", "--app", "1", "--param", "z=1", "--out", out])
            .status
            .code(),
        Some(2)
    );
    assert_eq!(
        amnesia(&["reproduce", "--app", "4", "--out", out]).status.code(),
        Some(2)
    );
    assert_eq!(
        amnesia(&["reproduce", "--app", "3", "--param", "l=1.5", "--out", out])
            .status
            .code(),
        Some(2)
    );
    assert_eq!(
        amnesia(&["reproduce", "--app", "1", "--param", "q", "--out", out])
            .status
            .code(),
        Some(2)
    );
}

fn term_strategy() -> impl Strategy<Value = TermSpec> {
    (
        prop_oneof![
            (-5.0f64..5.0).prop_map(|c| format!("{c:?}")),
            (0.1f64..10.0).prop_map(|q| format!("1/({q:?}*(t+6))")),
            Just("exp(-t) + sin(t)^2".to_owned()),
        ],
        0.01f64..20.0,
    )
        .prop_map(|(coef_expr, delay)| TermSpec { coef_expr, delay })
}

fn spec_strategy() -> impl Strategy<Value = EquationSpec> {
    let discrete = prop::collection::vec(term_strategy(), 1..4).prop_map(|terms| OperatorSpec::DiscreteDelay { terms });
    let app2 = (0.1f64..3.0, 0.1f64..3.0, 0.1f64..3.0, 2usize..200).prop_map(|(a1, a2, a3, panels)| {
        OperatorSpec::DistributedDelay {
            kernel: KernelSpec::App2 { a1, a2, a3 },
            panels: panels * 2,
        }
    });
    let app3 =
        (0.1f64..5.0, 0.0f64..1.0, 0.5f64..3.0, 1u32..6).prop_map(|(a, b, m, l)| OperatorSpec::DistributedDelay {
            kernel: KernelSpec::App3 { a, b, m, l },
            panels: 64,
        });
    (
        prop_oneof![discrete, app2, app3],
        "[a-z ,=0-9().'-]{0,40}",
        prop::option::of(prop_oneof![
            Just("app2".to_owned()),
            (0.0f64..9.0).prop_map(|b| format!("{b:?}"))
        ]),
        prop::option::of(Just("t - 1".to_owned())),
    )
        .prop_map(|(operator, label, bound_b, tau_expr)| EquationSpec {
            schema: 1,
            label,
            operator,
            bound_b,
            tau_expr,
        })
}

proptest! {
    #[test]
    fn spec_json_round_trips(spec in spec_strategy()) {
        let text = spec.to_json();
        let back = EquationSpec::from_json(&text).unwrap();
        prop_assert_eq!(&back, &spec);
        prop_assert_eq!(back.to_json(), text);
    }
}

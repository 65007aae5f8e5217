//! The four subcommands: `analyze`, `simulate`, `tower`, `reproduce`.
//!
//! Each takes a writer for its console output and returns a structured
//! outcome; files are written as a side effect.

use std::collections::BTreeMap;
use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use amnesia_core::applications::{App2Params, App3Params, APP1_TIME_SHIFT};
use amnesia_core::criterion::VerdictOutcome;
use amnesia_core::dde_simulator::{
    classify, concordance_experiment, integrate, ConcordanceConfig, SimulationConfig, SolutionClass, SolutionKind,
    Trajectory, DEFAULT_TRANSIENT_FRACTION,
};
use amnesia_core::history::{FourierHistory, History, HistoryFunction, SignPattern};
use amnesia_core::special_functions::{
    euler_interval_contains, tower_limit, tower_limit_via_lambert, ConvergenceResult, TowerOutcome,
};
use serde::Serialize;

use crate::report::{build_report, write_trajectory_csv, AnalyzeOptions, CriterionReport, TOOL_VERSION};
use crate::spec::{EquationSpec, KernelSpec, OperatorSpec, TermSpec, SCHEMA_VERSION};
use crate::CliError;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Format {
    Json,
    Csv,
    Text,
}

impl FromStr for Format {
    type Err = CliError;

    fn from_str(s: &str) -> Result<Self, CliError> {
        match s {
            "json" => Ok(Format::Json),
            "csv" => Ok(Format::Csv),
            "text" => Ok(Format::Text),
            other => Err(CliError::Usage(format!(
                "unknown format `{other}` (expected json, csv or text)"
            ))),
        }
    }
}

fn console(e: std::io::Error) -> CliError {
    CliError::Io {
        context: "writing to stdout".into(),
        source: e,
    }
}

fn write_file(path: &Path, contents: &[u8]) -> Result<(), CliError> {
    if let Some(dir) = path.parent().filter(|d| !d.as_os_str().is_empty()) {
        fs::create_dir_all(dir).map_err(CliError::io(format!("creating {}", dir.display())))?;
    }
    fs::write(path, contents).map_err(CliError::io(format!("writing {}", path.display())))
}

pub fn load_spec(path: &Path) -> Result<EquationSpec, CliError> {
    let text =
        fs::read_to_string(path).map_err(|e| CliError::Usage(format!("cannot read spec {}: {e}", path.display())))?;
    Ok(EquationSpec::from_json(&text)?)
}

// ---------------------------------------------------------------- analyze

pub fn analyze(
    spec_path: &Path,
    opts: &AnalyzeOptions,
    out: Option<&Path>,
    format: Format,
    stdout: &mut dyn Write,
) -> Result<CriterionReport, CliError> {
    let spec = load_spec(spec_path)?;
    let report = build_report(&spec, opts)?;
    let json = report.to_json();
    if let Some(path) = out {
        write_file(path, json.as_bytes())?;
    }
    match format {
        Format::Json => stdout.write_all(json.as_bytes()).map_err(console)?,
        Format::Csv => {
            writeln!(stdout, "t,window_inf").map_err(console)?;
            for [t, v] in &report.window_infima {
                writeln!(stdout, "{t:?},{v:?}").map_err(console)?;
            }
        }
        Format::Text => {
            stdout.write_all(report.text_summary().as_bytes()).map_err(console)?;
            if let Some(path) = out {
                writeln!(stdout, "report   : {}", path.display()).map_err(console)?;
            }
        }
    }
    Ok(report)
}

// --------------------------------------------------------------- simulate

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum HistoryPreset {
    Constant(f64),
    Exponential(f64),
    Random(u64),
}

impl FromStr for HistoryPreset {
    type Err = CliError;

    fn from_str(s: &str) -> Result<Self, CliError> {
        let bad = || {
            CliError::Usage(format!(
                "bad history preset `{s}` (expected constant:c, exponential:lambda or random:seed)"
            ))
        };
        let (kind, arg) = s.split_once(':').ok_or_else(bad)?;
        match kind {
            "constant" => arg.parse().map(HistoryPreset::Constant).map_err(|_| bad()),
            "exponential" => arg.parse().map(HistoryPreset::Exponential).map_err(|_| bad()),
            "random" => arg.parse().map(HistoryPreset::Random).map_err(|_| bad()),
            _ => Err(bad()),
        }
    }
}

impl std::fmt::Display for HistoryPreset {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            HistoryPreset::Constant(c) => write!(f, "constant:{c:?}"),
            HistoryPreset::Exponential(l) => write!(f, "exponential:{l:?}"),
            HistoryPreset::Random(seed) => write!(f, "random:{seed}"),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SimulateOptions {
    pub preset: HistoryPreset,
    pub t_end: f64,
    pub step: f64,
    /// Peak magnitude of `random:` histories.
    pub amplitude: f64,
}

#[derive(Debug, Clone, Serialize)]
pub struct SimulateOutcome {
    pub label: String,
    pub history: String,
    pub history_start: f64,
    pub class: SolutionClass,
    pub overflow_at: Option<f64>,
    pub samples: usize,
    #[serde(skip)]
    pub trajectory: Trajectory,
}

impl SimulateOutcome {
    /// Overflow is reported only after the partial output is written.
    pub fn check_overflow(&self) -> Result<(), CliError> {
        match self.overflow_at {
            Some(at) => Err(CliError::Overflow { at }),
            None => Ok(()),
        }
    }
}

pub fn simulate(
    spec_path: &Path,
    opts: &SimulateOptions,
    out: Option<&Path>,
    format: Format,
    stdout: &mut dyn Write,
) -> Result<SimulateOutcome, CliError> {
    let spec = load_spec(spec_path)?;
    let op = spec.build()?.operator;
    if !(opts.step > 0.0) || !(opts.t_end > 0.0) {
        return Err(CliError::Usage("--t-end and --step must be positive".into()));
    }
    let start = op.sigma(0.0).min(op.sigma(opts.step));
    if !(start < 0.0) {
        return Err(CliError::Usage(format!(
            "operator reads no past at t = 0 (sigma(0) = {start:?})"
        )));
    }
    let history: Box<dyn History> = match opts.preset {
        HistoryPreset::Constant(c) => Box::new(HistoryFunction::constant(start, 0.0, c).map_err(CliError::numerical)?),
        HistoryPreset::Exponential(l) => {
            Box::new(HistoryFunction::exponential(start, 0.0, l).map_err(CliError::numerical)?)
        }
        HistoryPreset::Random(seed) => Box::new(
            FourierHistory::random(start, 0.0, seed, 0, SignPattern::Mixed, opts.amplitude)
                .map_err(CliError::numerical)?,
        ),
    };
    let trajectory =
        integrate(&op, history.as_ref(), &SimulationConfig::new(opts.t_end, opts.step)).map_err(CliError::numerical)?;
    let class = classify(&trajectory, DEFAULT_TRANSIENT_FRACTION, None).map_err(CliError::numerical)?;

    let mut csv = Vec::new();
    write_trajectory_csv(&trajectory, &mut csv).map_err(console)?;
    if let Some(path) = out {
        write_file(path, &csv)?;
    }
    let outcome = SimulateOutcome {
        label: spec.label.clone(),
        history: opts.preset.to_string(),
        history_start: start,
        class,
        overflow_at: trajectory.overflow_at,
        samples: trajectory.len(),
        trajectory,
    };
    match format {
        Format::Csv if out.is_none() => stdout.write_all(&csv).map_err(console)?,
        Format::Json => {
            let json = serde_json::to_string_pretty(&outcome).expect("outcome is serializable");
            writeln!(stdout, "{json}").map_err(console)?;
        }
        _ => {
            let c = &outcome.class;
            if !outcome.label.is_empty() {
                writeln!(stdout, "equation : {}", outcome.label).map_err(console)?;
            }
            writeln!(stdout, "history  : {} on [{start:?}, 0.0]", outcome.history).map_err(console)?;
            writeln!(stdout, "class    : {}", c.class).map_err(console)?;
            writeln!(stdout, "crossings: {} in the tail", c.zero_crossings.len()).map_err(console)?;
            writeln!(stdout, "final x  = {:?}", c.final_value).map_err(console)?;
            if let Some(at) = outcome.overflow_at {
                writeln!(stdout, "OVERFLOW : |x| exceeded the guard at t = {at:?}; run stopped").map_err(console)?;
            }
            if let Some(path) = out {
                writeln!(stdout, "csv      : {} ({} samples)", path.display(), outcome.samples).map_err(console)?;
            }
        }
    }
    Ok(outcome)
}

// ------------------------------------------------------------------ tower

#[derive(Debug, Clone, Serialize)]
pub struct TowerReport {
    pub base: f64,
    pub in_euler_interval: bool,
    pub result: ConvergenceResult,
    pub lambert_limit: Option<f64>,
    /// `base^^1, base^^2, ...` as iterated.
    pub iterates: Vec<f64>,
}

/// Rows shown at each end of the text iterate table.
const TABLE_HEAD: usize = 12;
const TABLE_TAIL: usize = 4;

pub fn tower(
    base: f64,
    tol: f64,
    max_iter: usize,
    format: Format,
    stdout: &mut dyn Write,
) -> Result<TowerReport, CliError> {
    if !(base > 0.0) || !base.is_finite() {
        return Err(CliError::Usage(format!(
            "--base must be positive and finite, got {base}"
        )));
    }
    if max_iter == 0 || !(tol > 0.0) {
        return Err(CliError::Usage("--max-iter and --tol must be positive".into()));
    }
    let result = tower_limit(base, tol, max_iter).map_err(CliError::numerical)?;
    let mut iterates = vec![base];
    for _ in 0..result.iterations_used {
        iterates.push(base.powf(*iterates.last().unwrap()));
    }
    let in_euler_interval = euler_interval_contains(base);
    let lambert_limit = tower_limit_via_lambert(base).ok();
    let report = TowerReport {
        base,
        in_euler_interval,
        result,
        lambert_limit,
        iterates,
    };

    match format {
        Format::Json => {
            let json = serde_json::to_string_pretty(&report).expect("tower report is serializable");
            writeln!(stdout, "{json}").map_err(console)?;
        }
        Format::Csv => {
            writeln!(stdout, "n,value").map_err(console)?;
            for (k, v) in report.iterates.iter().enumerate() {
                writeln!(stdout, "{},{v:?}", k + 1).map_err(console)?;
            }
        }
        Format::Text => write_tower_text(&report, stdout).map_err(console)?,
    }
    Ok(report)
}

fn write_tower_text(r: &TowerReport, out: &mut dyn Write) -> std::io::Result<()> {
    writeln!(out, "base x = {:?}", r.base)?;
    writeln!(out, "   n  x^^n")?;
    let n = r.iterates.len();
    for (k, v) in r.iterates.iter().enumerate() {
        if k < TABLE_HEAD || k + TABLE_TAIL >= n {
            writeln!(out, "{:>4}  {v:?}", k + 1)?;
        } else if k == TABLE_HEAD {
            writeln!(out, "   ...")?;
        }
    }
    match r.result.outcome {
        TowerOutcome::Converged { limit } => writeln!(
            out,
            "converged to {limit:?} after {} iterations (|y - x^y| = {:e})",
            r.result.iterations_used, r.result.residual
        )?,
        TowerOutcome::Diverged { at_iteration } => writeln!(out, "Diverged: exceeded 1e8 at iteration {at_iteration}")?,
        TowerOutcome::MaxIterReached { last_value, cycle } => match cycle {
            Some((lo, hi)) => writeln!(out, "no limit: iterates settle into a two-cycle {lo:?} / {hi:?}")?,
            None => writeln!(
                out,
                "undecided after {} iterations (last {last_value:?})",
                r.result.iterations_used
            )?,
        },
    }
    if r.in_euler_interval {
        writeln!(out, "inside Euler interval [e^-e, e^(1/e)]")?;
    } else {
        writeln!(out, "outside Euler interval [e^-e, e^(1/e)]")?;
    }
    if let Some(l) = r.lambert_limit {
        match r.result.limit() {
            Some(y) => writeln!(
                out,
                "Lambert closed form W(-ln x)/(-ln x) = {l:?} (agrees to {:e})",
                (y - l).abs()
            )?,
            None => writeln!(out, "Lambert closed form W(-ln x)/(-ln x) = {l:?}")?,
        }
    }
    Ok(())
}

// -------------------------------------------------------------- reproduce

#[derive(Debug, Clone)]
pub struct ReproduceOptions {
    pub app: u8,
    pub params: Vec<(String, f64)>,
    pub seed: u64,
    pub histories: usize,
    /// Simulation horizon and step; per-application defaults when `None`.
    pub t_end: Option<f64>,
    pub step: Option<f64>,
    pub out_dir: PathBuf,
    pub analyze: AnalyzeOptions,
}

impl ReproduceOptions {
    pub fn new(app: u8, out_dir: impl Into<PathBuf>) -> Self {
        Self {
            app,
            params: Vec::new(),
            seed: 1,
            histories: 10,
            t_end: None,
            step: None,
            out_dir: out_dir.into(),
            analyze: AnalyzeOptions::default(),
        }
    }
}

/// Parses `name=value`.
pub fn parse_param(s: &str) -> Result<(String, f64), CliError> {
    let (name, value) = s
        .split_once('=')
        .ok_or_else(|| CliError::Usage(format!("parameter `{s}` is not of the form name=value")))?;
    let value: f64 = value
        .trim()
        .parse()
        .map_err(|_| CliError::Usage(format!("parameter `{name}` has a non-numeric value `{value}`")))?;
    Ok((name.trim().to_owned(), value))
}

#[derive(Debug, Clone, Serialize)]
pub struct RunSummary {
    pub index: usize,
    pub class: SolutionKind,
    pub crossings: usize,
    pub final_value: f64,
    pub overflow_at: Option<f64>,
    pub csv: String,
}

#[derive(Debug, Clone, Serialize)]
pub struct ScenarioSummary {
    pub tool_version: String,
    pub app: u8,
    pub scenario: String,
    pub label: String,
    pub params: BTreeMap<String, f64>,
    pub stated_condition: String,
    pub stated_condition_holds: bool,
    pub w_hat: f64,
    pub verdict: VerdictOutcome,
    pub discrepancy: bool,
    pub bound_note: Option<String>,
    pub seed: u64,
    pub n_histories: usize,
    pub sim_t_end: f64,
    pub sim_step: f64,
    pub amplitude: f64,
    pub audit_checked: usize,
    pub audit_violations: usize,
    pub audit_worst_margin: f64,
    pub concordant: bool,
    /// Every run classified Oscillatory or MonotoneToZero.
    pub all_runs_classified: bool,
    pub runs: Vec<RunSummary>,
}

#[derive(Debug, Clone)]
pub struct ScenarioOutcome {
    pub slug: String,
    pub bundle_dir: PathBuf,
    pub spec: EquationSpec,
    pub report: CriterionReport,
    pub summary: ScenarioSummary,
    pub banner: Option<String>,
}

struct Scenario {
    slug: String,
    params: BTreeMap<String, f64>,
    spec: EquationSpec,
    stated_condition: String,
    stated_holds: bool,
    /// Stated bound value when it differs from the one used.
    stated_bound: Option<f64>,
    sim_t_end: f64,
    sim_step: f64,
    amplitude: f64,
}

fn slug_number(v: f64) -> String {
    format!("{v}").replace('-', "m")
}

fn take_params(app: u8, allowed: &[&str], given: &[(String, f64)]) -> Result<BTreeMap<String, f64>, CliError> {
    let mut map = BTreeMap::new();
    for (name, value) in given {
        if !allowed.contains(&name.as_str()) {
            return Err(CliError::Usage(format!(
                "unknown parameter `{name}` for application {app} (expected one of {})",
                allowed.join(", ")
            )));
        }
        if !value.is_finite() {
            return Err(CliError::Usage(format!("parameter `{name}` must be finite")));
        }
        map.insert(name.clone(), *value);
    }
    Ok(map)
}

fn app1_scenarios(given: &[(String, f64)]) -> Result<Vec<Scenario>, CliError> {
    let p = take_params(1, &["q"], given)?;
    let qs = match p.get("q") {
        Some(&q) if q > 0.0 => vec![q],
        Some(_) => return Err(CliError::Usage("parameter `q` must be positive".into())),
        None => vec![10.0, 20.0],
    };
    Ok(qs
        .into_iter()
        .map(|q| {
            let shift = APP1_TIME_SHIFT;
            let spec = EquationSpec {
                schema: SCHEMA_VERSION,
                label: format!("x' + x(t-6)/(q t) + (t-1) x(t-8)/(q t) = 0 with q = {q:?}, time shifted by {shift:?}"),
                operator: OperatorSpec::DiscreteDelay {
                    terms: vec![
                        TermSpec {
                            coef_expr: format!("1/({q:?}*(t+{shift:?}))"),
                            delay: 6.0,
                        },
                        TermSpec {
                            coef_expr: format!("(t+{:?})/({q:?}*(t+{shift:?}))", shift - 1.0),
                            delay: 8.0,
                        },
                    ],
                },
                bound_b: Some(format!("1/{q:?}")),
                tau_expr: None,
            };
            Scenario {
                slug: format!("app1_q{}", slug_number(q)),
                params: BTreeMap::from([("q".to_owned(), q)]),
                spec,
                stated_condition: format!("q > 6e (q = {q:?}, 6e = {:?})", 6.0 * std::f64::consts::E),
                stated_holds: amnesia_core::applications::app1_stated_condition(q),
                stated_bound: None,
                sim_t_end: 400.0,
                sim_step: 0.05,
                amplitude: 1.0,
            }
        })
        .collect())
}

fn app2_scenarios(given: &[(String, f64)]) -> Result<Vec<Scenario>, CliError> {
    let p = take_params(2, &["a1", "a2", "a3"], given)?;
    let d = App2Params::default();
    let params = App2Params {
        a1: p.get("a1").copied().unwrap_or(d.a1),
        a2: p.get("a2").copied().unwrap_or(d.a2),
        a3: p.get("a3").copied().unwrap_or(d.a3),
    };
    let App2Params { a1, a2, a3 } = params;
    let spec = EquationSpec {
        schema: SCHEMA_VERSION,
        label: format!(
            "x' + int_1^2 exp(max(a1 s, x(t-a2 s)^2)) x(t-a3 s) ds = 0 with a1 = {a1:?}, a2 = {a2:?}, a3 = {a3:?}"
        ),
        operator: OperatorSpec::DistributedDelay {
            kernel: KernelSpec::App2 { a1, a2, a3 },
            panels: amnesia_core::quadrature::DEFAULT_PANELS,
        },
        bound_b: Some("app2".to_owned()),
        tau_expr: None,
    };
    let slug = if given.is_empty() {
        "app2".to_owned()
    } else {
        format!(
            "app2_a1_{}_a2_{}_a3_{}",
            slug_number(a1),
            slug_number(a2),
            slug_number(a3)
        )
    };
    let value = params.min_lag() * std::f64::consts::E * params.bound();
    Ok(vec![Scenario {
        slug,
        params: BTreeMap::from([("a1".to_owned(), a1), ("a2".to_owned(), a2), ("a3".to_owned(), a3)]),
        spec,
        stated_condition: format!("a e^(1+a1) (e^a1 - 1)/a1 > 1 with a = min(a2, a3) (value {value:?})"),
        stated_holds: params.stated_condition(),
        stated_bound: None,
        sim_t_end: 30.0,
        sim_step: 0.01,
        amplitude: 0.01,
    }])
}

fn app3_scenarios(given: &[(String, f64)]) -> Result<Vec<Scenario>, CliError> {
    let p = take_params(3, &["a", "b", "m", "l"], given)?;
    let ls: Vec<u32> = match p.get("l") {
        Some(&l) if l >= 1.0 && l.fract() == 0.0 && l <= u32::MAX as f64 => vec![l as u32],
        Some(_) => return Err(CliError::Usage("parameter `l` must be a positive integer".into())),
        None => vec![2, 3],
    };
    let (a, b, m) = (
        p.get("a").copied().unwrap_or(3.0),
        p.get("b").copied().unwrap_or(0.1),
        p.get("m").copied().unwrap_or(1.0),
    );
    Ok(ls
        .into_iter()
        .map(|l| {
            let params = App3Params { a, b, m, l };
            let spec = EquationSpec {
                schema: SCHEMA_VERSION,
                label: format!(
                    "x' + int_0^1 [a s^m + b s^2 sin^l(x(t-s-5)^3)] x(t-s-1) ds = 0 with a = {a:?}, b = {b:?}, m = {m:?}, l = {l}"
                ),
                operator: OperatorSpec::DistributedDelay {
                    kernel: KernelSpec::App3 { a, b, m, l },
                    panels: amnesia_core::quadrature::DEFAULT_PANELS,
                },
                bound_b: Some("app3_derived".to_owned()),
                tau_expr: None,
            };
            let stated_condition = if params.l_odd() {
                format!("(a - m b) e > m for odd l (value {:?} vs {m:?})", (a - m * b) * std::f64::consts::E)
            } else {
                format!("a e > m for even l (value {:?} vs {m:?})", a * std::f64::consts::E)
            };
            let slug = if p.keys().all(|k| k == "l") {
                format!("app3_l{l}")
            } else {
                format!("app3_a{}_b{}_m{}_l{l}", slug_number(a), slug_number(b), slug_number(m))
            };
            Scenario {
                slug,
                params: BTreeMap::from([
                    ("a".to_owned(), a),
                    ("b".to_owned(), b),
                    ("m".to_owned(), m),
                    ("l".to_owned(), l as f64),
                ]),
                spec,
                stated_condition,
                stated_holds: params.stated_condition(),
                stated_bound: (params.stated_bound() != params.derived_bound()).then(|| params.stated_bound()),
                sim_t_end: 60.0,
                sim_step: 0.01,
                amplitude: 1.0,
            }
        })
        .collect())
}

pub fn reproduce(
    opts: &ReproduceOptions,
    format: Format,
    stdout: &mut dyn Write,
) -> Result<Vec<ScenarioOutcome>, CliError> {
    let scenarios = match opts.app {
        1 => app1_scenarios(&opts.params)?,
        2 => app2_scenarios(&opts.params)?,
        3 => app3_scenarios(&opts.params)?,
        other => {
            return Err(CliError::Usage(format!(
                "unknown application {other} (expected 1, 2 or 3)"
            )))
        }
    };
    if opts.histories == 0 {
        return Err(CliError::Usage("--histories must be at least 1".into()));
    }
    let mut outcomes = Vec::with_capacity(scenarios.len());
    for sc in scenarios {
        let outcome = run_scenario(opts, sc)?;
        if format == Format::Text {
            write_scenario_text(&outcome, stdout).map_err(console)?;
        }
        outcomes.push(outcome);
    }
    match format {
        Format::Json => {
            let all: Vec<&ScenarioSummary> = outcomes.iter().map(|o| &o.summary).collect();
            let json = serde_json::to_string_pretty(&all).expect("summaries are serializable");
            writeln!(stdout, "{json}").map_err(console)?;
        }
        Format::Csv => {
            writeln!(
                stdout,
                "scenario,w_hat,verdict,stated_condition_holds,discrepancy,concordant"
            )
            .map_err(console)?;
            for o in &outcomes {
                let s = &o.summary;
                writeln!(
                    stdout,
                    "{},{:?},{},{},{},{}",
                    s.scenario, s.w_hat, s.verdict, s.stated_condition_holds, s.discrepancy, s.concordant
                )
                .map_err(console)?;
            }
        }
        Format::Text => {}
    }
    Ok(outcomes)
}

fn run_scenario(opts: &ReproduceOptions, sc: Scenario) -> Result<ScenarioOutcome, CliError> {
    let report = build_report(&sc.spec, &opts.analyze)?;
    let op = sc.spec.build()?.operator;

    let sim = SimulationConfig::new(opts.t_end.unwrap_or(sc.sim_t_end), opts.step.unwrap_or(sc.sim_step));
    let mut cfg = ConcordanceConfig::new(sim, opts.histories, opts.seed);
    cfg.amplitude = sc.amplitude;
    cfg.t_range = (opts.analyze.t_start, opts.analyze.t_end);
    cfg.grid_points = opts.analyze.grid_points;
    cfg.panels = opts.analyze.panels;
    let conc = concordance_experiment(&op, &op.bound_fn(), &cfg).map_err(CliError::numerical)?;
    if conc.verdict.outcome != report.verdict || conc.estimate.w_hat != report.w_hat {
        return Err(CliError::Numerical(format!(
            "concordance estimate {:?} disagrees with the analysis {:?}",
            conc.estimate.w_hat, report.w_hat
        )));
    }

    let guaranteed = report.verdict == VerdictOutcome::PropertyPGuaranteed;
    let banner = (sc.stated_holds != guaranteed).then(|| {
        if guaranteed {
            format!(
                "DISCREPANCY: the stated condition {} is not met, yet w_hat = {:?} > 1/e gives {}",
                sc.stated_condition, report.w_hat, report.verdict
            )
        } else {
            format!(
                "DISCREPANCY: the stated condition {} holds, yet w_hat = {:?} <= 1/e leaves the criterion {}",
                sc.stated_condition, report.w_hat, report.verdict
            )
        }
    });

    let bound_note = match sc.stated_bound {
        Some(stated) => {
            // x = 1 gives (Tx)(t) = integral of the kernel, the tightest case.
            let t = opts.analyze.t_end;
            let ones = HistoryFunction::constant(op.sigma(t) - 1.0, t, 1.0).map_err(CliError::numerical)?;
            let value = op.evaluate(t, &ones).map_err(CliError::numerical)?;
            let verdict = if value < stated { "fails" } else { "holds" };
            Some(format!(
                "NOTE: stated bound b = {stated:?} differs from the integrated kernel lower bound {:?}, which is used here; \
                 with x = 1 the operator gives {value:?}, so the sign condition {verdict} for the stated bound",
                op.bound_b(0.0),
            ))
        }
        None => None,
    };

    let bundle_dir = opts.out_dir.join(&sc.slug);
    fs::create_dir_all(&bundle_dir).map_err(CliError::io(format!("creating {}", bundle_dir.display())))?;
    let mut spec_json = sc.spec.to_json();
    spec_json.push('\n');
    write_file(&bundle_dir.join("spec.json"), spec_json.as_bytes())?;
    write_file(&bundle_dir.join("report.json"), report.to_json().as_bytes())?;

    let mut runs = Vec::with_capacity(conc.runs.len());
    for run in &conc.runs {
        let name = format!("traj_{:02}.csv", run.index);
        let mut csv = Vec::new();
        write_trajectory_csv(&run.trajectory, &mut csv).map_err(console)?;
        write_file(&bundle_dir.join(&name), &csv)?;
        runs.push(RunSummary {
            index: run.index,
            class: run.class.class,
            crossings: run.class.zero_crossings.len(),
            final_value: run.class.final_value,
            overflow_at: run.overflow_at,
            csv: name,
        });
    }

    let summary = ScenarioSummary {
        tool_version: TOOL_VERSION.to_owned(),
        app: opts.app,
        scenario: sc.slug.clone(),
        label: sc.spec.label.clone(),
        params: sc.params,
        stated_condition: sc.stated_condition,
        stated_condition_holds: sc.stated_holds,
        w_hat: report.w_hat,
        verdict: report.verdict,
        discrepancy: banner.is_some(),
        bound_note,
        seed: opts.seed,
        n_histories: opts.histories,
        sim_t_end: sim.t_end,
        sim_step: sim.step,
        amplitude: sc.amplitude,
        audit_checked: conc.audit.checked,
        audit_violations: conc.audit.violations.len(),
        audit_worst_margin: conc.audit.worst_margin,
        concordant: conc.concordant,
        all_runs_classified: runs
            .iter()
            .all(|r| matches!(r.class, SolutionKind::Oscillatory | SolutionKind::MonotoneToZero)),
        runs,
    };
    let mut summary_json = serde_json::to_string_pretty(&summary).expect("summary is serializable");
    summary_json.push('\n');
    write_file(&bundle_dir.join("summary.json"), summary_json.as_bytes())?;

    Ok(ScenarioOutcome {
        slug: sc.slug,
        bundle_dir,
        spec: sc.spec,
        report,
        summary,
        banner,
    })
}

fn write_scenario_text(o: &ScenarioOutcome, out: &mut dyn Write) -> std::io::Result<()> {
    let s = &o.summary;
    writeln!(out, "== {}", s.scenario)?;
    writeln!(out, "equation         : {}", s.label)?;
    writeln!(
        out,
        "seed             : {} ({} histories, t_end {:?}, step {:?}, amplitude {:?})",
        s.seed, s.n_histories, s.sim_t_end, s.sim_step, s.amplitude
    )?;
    let holds = if s.stated_condition_holds { "met" } else { "not met" };
    writeln!(out, "stated condition : {} -> {holds}", s.stated_condition)?;
    writeln!(
        out,
        "computed verdict : {} (w_hat = {:?}, margin {:?})",
        s.verdict, s.w_hat, o.report.margin
    )?;
    if let Some(banner) = &o.banner {
        writeln!(out, "{banner}")?;
    }
    if let Some(note) = &s.bound_note {
        writeln!(out, "{note}")?;
    }
    let count = |k: SolutionKind| s.runs.iter().filter(|r| r.class == k).count();
    let overflowed = s.runs.iter().filter(|r| r.overflow_at.is_some()).count();
    writeln!(
        out,
        "runs             : {} oscillatory, {} monotone_to_zero, {} inconclusive ({overflowed} hit the overflow guard)",
        count(SolutionKind::Oscillatory),
        count(SolutionKind::MonotoneToZero),
        count(SolutionKind::Inconclusive)
    )?;
    writeln!(
        out,
        "audit            : {} samples, {} violations",
        s.audit_checked, s.audit_violations
    )?;
    writeln!(out, "concordant       : {}", if s.concordant { "yes" } else { "NO" })?;
    writeln!(out, "bundle           : {}", o.bundle_dir.display())?;
    writeln!(out)
}

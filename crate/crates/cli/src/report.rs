//! Criterion report JSON and trajectory CSV.

use std::io::{BufRead, Write};

use amnesia_core::amnesia_operators::check_sigma_unbounded;
use amnesia_core::criterion::{
    estimate_liminf_w, tetration_proof_trace, theorem_verdict, IterationEvidence, TraceDecision, Trend, VerdictOutcome,
    DEFAULT_GRID_POINTS, DEFAULT_PANELS,
};
use amnesia_core::dde_simulator::{Interpolation, SimulationConfig, Trajectory};
use amnesia_core::special_functions::DEFAULT_MAX_ITER;
use serde::Serialize;

use crate::spec::EquationSpec;
use crate::CliError;

pub const TOOL_VERSION: &str = concat!("amnesia ", env!("CARGO_PKG_VERSION"));

/// Samples used to judge whether `sigma(t)` drifts to infinity.
const SIGMA_SAMPLES: usize = 64;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct AnalyzeOptions {
    pub t_start: f64,
    pub t_end: f64,
    pub grid_points: usize,
    pub panels: usize,
    pub trace_max_iter: usize,
}

impl Default for AnalyzeOptions {
    fn default() -> Self {
        Self {
            t_start: 0.0,
            t_end: 200.0,
            grid_points: DEFAULT_GRID_POINTS,
            panels: DEFAULT_PANELS,
            trace_max_iter: DEFAULT_MAX_ITER,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct TraceSummary {
    pub a: f64,
    pub decision: TraceDecision,
    pub evidence: IterationEvidence,
    pub iterations: usize,
    pub last_iterate: f64,
    pub limit_if_convergent: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CriterionReport {
    pub tool_version: String,
    pub label: String,
    pub spec: EquationSpec,
    pub t_range: (f64, f64),
    pub grid_points: usize,
    pub panels: usize,
    pub w_hat: f64,
    pub threshold: f64,
    pub margin: f64,
    pub verdict: VerdictOutcome,
    pub trend: Trend,
    pub sigma_growth_plausible: bool,
    /// `None` when `w_hat <= 0`, where the tower argument does not apply.
    pub tetration_trace: Option<TraceSummary>,
    pub window_infima: Vec<[f64; 2]>,
}

impl CriterionReport {
    pub fn to_json(&self) -> String {
        let mut s = serde_json::to_string_pretty(self).expect("report is always serializable");
        s.push('\n');
        s
    }

    pub fn text_summary(&self) -> String {
        let mut s = String::new();
        if !self.label.is_empty() {
            s.push_str(&format!("equation : {}\n", self.label));
        }
        s.push_str(&format!(
            "window   : [{:?}, {:?}], {} points\n",
            self.t_range.0, self.t_range.1, self.grid_points
        ));
        s.push_str(&format!("w_hat    = {:?}\n", self.w_hat));
        s.push_str(&format!("threshold= {:?} (1/e)\n", self.threshold));
        s.push_str(&format!("margin   = {:?}\n", self.margin));
        s.push_str(&format!("verdict  : {}\n", self.verdict));
        s.push_str(&format!("trend    : {}\n", self.trend));
        if !self.sigma_growth_plausible {
            s.push_str("warning  : sigma(t) does not appear to grow without bound on this window\n");
        }
        match &self.tetration_trace {
            Some(tr) => s.push_str(&format!(
                "tower    : a = e^w_hat = {:?}; {} after {} iterates (last {:?}) -> {}\n",
                tr.a,
                evidence_text(tr.evidence),
                tr.iterations,
                tr.last_iterate,
                decision_text(tr.decision),
            )),
            None => s.push_str("tower    : not applicable (w_hat <= 0)\n"),
        }
        s
    }
}

fn evidence_text(e: IterationEvidence) -> &'static str {
    match e {
        IterationEvidence::Escaped => "escaped",
        IterationEvidence::Settled => "settled",
        IterationEvidence::Undecided => "undecided",
    }
}

fn decision_text(d: TraceDecision) -> &'static str {
    match d {
        TraceDecision::DivergesHenceOscillation => "tower diverges, no eventually positive solution can exist",
        TraceDecision::ConvergesHenceInconclusive => "tower converges, inconclusive",
    }
}

pub fn build_report(spec: &EquationSpec, opts: &AnalyzeOptions) -> Result<CriterionReport, CliError> {
    let built = spec.build()?;
    let b = built.operator.bound_fn();
    let tau = built.tau.clone();
    let b_ref = |s: f64| b(s);
    let tau_ref = |t: f64| tau(t);
    let estimate = estimate_liminf_w(
        &b_ref,
        &tau_ref,
        opts.t_start,
        opts.t_end,
        opts.grid_points,
        opts.panels,
    )
    .map_err(CliError::numerical)?;
    let verdict = theorem_verdict(&estimate);
    let sigma =
        check_sigma_unbounded(&built.operator, opts.t_start, opts.t_end, SIGMA_SAMPLES).map_err(CliError::numerical)?;
    let tetration_trace = if estimate.w_hat > 0.0 {
        let tr = tetration_proof_trace(estimate.w_hat, opts.trace_max_iter).map_err(CliError::numerical)?;
        Some(TraceSummary {
            a: tr.a,
            decision: tr.decision,
            evidence: tr.evidence,
            iterations: tr.iterates.len(),
            last_iterate: *tr.iterates.last().expect("trace has at least one iterate"),
            limit_if_convergent: tr.limit_if_convergent,
        })
    } else {
        None
    };
    Ok(CriterionReport {
        tool_version: TOOL_VERSION.to_owned(),
        label: spec.label.clone(),
        spec: spec.clone(),
        t_range: estimate.t_range,
        grid_points: opts.grid_points,
        panels: opts.panels,
        w_hat: verdict.w_hat,
        threshold: verdict.threshold,
        margin: verdict.margin,
        verdict: verdict.outcome,
        trend: estimate.trend,
        sigma_growth_plausible: sigma.plausible,
        tetration_trace,
        window_infima: estimate.window_infima.iter().map(|&(t, v)| [t, v]).collect(),
    })
}

fn interpolation_name(i: Interpolation) -> &'static str {
    match i {
        Interpolation::Linear => "linear",
        Interpolation::CubicHermite => "cubic_hermite",
    }
}

/// Writes `t,x,dx` rows in shortest round-trip form, followed by `#` trailer
/// lines carrying the run configuration and the overflow flag.
pub fn write_trajectory_csv(traj: &Trajectory, out: impl Write) -> std::io::Result<()> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(["t", "x", "dx"])?;
    for ((t, x), dx) in traj.times.iter().zip(&traj.values).zip(&traj.derivative_values) {
        w.write_record([format!("{t:?}"), format!("{x:?}"), format!("{dx:?}")])?;
    }
    w.flush()?;
    let mut out = w.into_inner().map_err(|e| e.into_error())?;
    let cfg = &traj.config;
    writeln!(out, "# t_end={:?}", cfg.t_end)?;
    writeln!(out, "# step={:?}", cfg.step)?;
    writeln!(out, "# interpolation={}", interpolation_name(cfg.interpolation))?;
    writeln!(out, "# overflow_guard={:?}", cfg.overflow_guard)?;
    if let Some(t) = traj.overflow_at {
        writeln!(out, "# overflow_at={t:?}")?;
    }
    Ok(())
}

#[derive(Debug, thiserror::Error)]
pub enum CsvReadError {
    #[error("io error: {0}")]
    Io(#[from] std::io::Error),
    #[error("csv error: {0}")]
    Csv(#[from] csv::Error),
    #[error("bad trajectory csv: {0}")]
    Format(String),
}

/// Inverse of [`write_trajectory_csv`].
pub fn read_trajectory_csv(input: impl BufRead) -> Result<Trajectory, CsvReadError> {
    let mut body = String::new();
    let mut trailer = Vec::new();
    for line in input.lines() {
        let line = line?;
        match line.strip_prefix('#') {
            Some(rest) => trailer.push(rest.trim().to_owned()),
            None => {
                body.push_str(&line);
                body.push('\n');
            }
        }
    }

    let mut reader = csv::Reader::from_reader(body.as_bytes());
    if reader.headers()? != vec!["t", "x", "dx"] {
        return Err(CsvReadError::Format(format!(
            "expected header t,x,dx, got {:?}",
            reader.headers()?
        )));
    }
    let parse = |s: &str| {
        s.parse::<f64>()
            .map_err(|_| CsvReadError::Format(format!("not a number: `{s}`")))
    };
    let (mut times, mut values, mut derivative_values) = (Vec::new(), Vec::new(), Vec::new());
    for rec in reader.records() {
        let rec = rec?;
        times.push(parse(&rec[0])?);
        values.push(parse(&rec[1])?);
        derivative_values.push(parse(&rec[2])?);
    }

    let mut config = SimulationConfig::new(f64::NAN, f64::NAN);
    let mut overflow_at = None;
    for entry in trailer {
        let Some((key, value)) = entry.split_once('=') else {
            continue;
        };
        match key {
            "t_end" => config.t_end = parse(value)?,
            "step" => config.step = parse(value)?,
            "overflow_guard" => config.overflow_guard = parse(value)?,
            "overflow_at" => overflow_at = Some(parse(value)?),
            "interpolation" => {
                config.interpolation = match value {
                    "linear" => Interpolation::Linear,
                    "cubic_hermite" => Interpolation::CubicHermite,
                    other => return Err(CsvReadError::Format(format!("unknown interpolation `{other}`"))),
                }
            }
            _ => {}
        }
    }
    Ok(Trajectory {
        times,
        values,
        derivative_values,
        config,
        overflow_at,
    })
}

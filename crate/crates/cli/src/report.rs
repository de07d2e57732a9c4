//! Artifact writers: CSV files with locale-independent 17-significant-digit
//! numbers (so identical runs produce byte-identical files) and the JSON
//! verdict report described by `schema/report.schema.json`.

use peas::analysis::Verdict;
use peas::continuous::{SystemKind, Trajectory};
use peas::discrete::IterateHistory;
use peas::objectives::Objective;
use serde_json::{json, Value};

use crate::checks::RunOutput;
use crate::config::ExperimentConfig;

/// Decimal, 17 significant digits, `.` separator (Rust float formatting is
/// locale independent).
pub fn format_float(x: f64) -> String {
    format!("{x:.16e}")
}

fn format_opt(x: Option<f64>) -> String {
    match x {
        Some(v) if v.is_finite() => format_float(v),
        _ => String::new(),
    }
}

/// `k,lambda,tau,value_gap,grad_norm,prox_residual` plus the averaged-iterate
/// columns `x_value_gap,x_grad_norm` when the run recorded x.
pub fn history_csv(history: &IterateHistory, obj: &Objective) -> String {
    let inertial = history.records.first().is_some_and(|r| r.x.is_some());
    let mut out = String::from("k,lambda,tau,value_gap,grad_norm,prox_residual");
    if inertial {
        out.push_str(",x_value_gap,x_grad_norm");
    }
    out.push('\n');
    for record in &history.records {
        out.push_str(&format!(
            "{},{},{},{},{},{}",
            record.k,
            format_opt(record.lambda),
            format_float(record.tau),
            format_opt(record.value_gap),
            format_float(record.grad_norm),
            format_float(record.prox_residual),
        ));
        if inertial {
            let x = record.x.as_ref().expect("inertial records carry x");
            let gap = obj.f_min().map(|m| obj.value(x) - m);
            out.push_str(&format!(
                ",{},{}",
                format_opt(gap),
                format_float(obj.gradient(x).norm())
            ));
        }
        out.push('\n');
    }
    out
}

/// `t,tau,lambda,value_gap,grad_norm`. The value gap is taken at the
/// system's primary variable: the averaged x for the inertial systems and
/// Lin-Jordan, the descent variable itself for steepest descent.
pub fn trajectory_csv(trajectory: &Trajectory) -> String {
    let mut out = String::from("t,tau,lambda,value_gap,grad_norm\n");
    for sample in &trajectory.samples {
        let gap = match trajectory.system {
            SystemKind::Sd | SystemKind::PerturbedSd => sample.value_gap_y,
            _ => sample.value_gap_x,
        };
        out.push_str(&format!(
            "{},{},{},{},{}\n",
            format_float(sample.t),
            format_float(sample.tau),
            format_float(sample.lambda),
            format_opt(gap),
            format_float(sample.grad_norm),
        ));
    }
    out
}

fn verdict_json(v: &Verdict) -> Value {
    json!({
        "name": v.name,
        "passed": v.passed,
        "measured": float_or_null(v.measured),
        "target": float_or_null(v.target),
        "tolerance": float_or_null(v.tolerance),
        "inconclusive": v.inconclusive,
        "details": v.details,
    })
}

fn float_or_null(x: f64) -> Value {
    if x.is_finite() {
        json!(x)
    } else {
        Value::Null
    }
}

/// The deterministic report body (no wall-clock content).
pub fn report_json(config: &ExperimentConfig, output: &RunOutput, verdicts: &[Verdict]) -> Value {
    let run = match output {
        RunOutput::Discrete(history) => json!({
            "kind": "history",
            "records": history.records.len(),
            "termination": format!("{:?}", history.termination),
            "scale": history.scale,
            "final_grad_norm": history.final_record().grad_norm,
        }),
        RunOutput::Continuous(trajectory) => json!({
            "kind": "trajectory",
            "samples": trajectory.samples.len(),
            "stopped_at_gradient_floor": trajectory.stopped_at_gradient_floor,
            "scale": trajectory.scale,
            "t_final": trajectory.last().t,
            "final_grad_norm": trajectory.last().grad_norm,
        }),
    };
    let all_passed = verdicts.iter().all(|v| !v.blocking_failure());
    json!({
        "mode": config.mode.label(),
        "problem": {
            "name": config.problem.name,
            "dimension": config.problem.dimension,
            "seed": config.problem.seed,
            "parameters": config.problem.parameters,
        },
        "run": run,
        "verdicts": verdicts.iter().map(verdict_json).collect::<Vec<_>>(),
        "all_passed": all_passed,
    })
}

/// One sweep summary row; empty cells for inapplicable axes.
pub fn summary_row(
    p: f64,
    q: f64,
    gamma: f64,
    feedback: &str,
    fitted: Option<f64>,
    target: Option<f64>,
    passed: bool,
) -> String {
    format!(
        "{},{},{},{},{},{},{}\n",
        trim_num(p),
        trim_num(q),
        if gamma.is_nan() { String::new() } else { trim_num(gamma) },
        feedback,
        format_opt(fitted),
        format_opt(target),
        passed
    )
}

pub const SUMMARY_HEADER: &str = "p,q,gamma,feedback,fitted_exponent,target,passed\n";

fn trim_num(x: f64) -> String {
    // grid axis values are human-entered; print them plainly
    format!("{x}")
}

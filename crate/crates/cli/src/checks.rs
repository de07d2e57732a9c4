//! Check evaluation for experiment runs: maps check names (with optional
//! target/tolerance overrides) onto the analysis verdicts, with per-mode
//! default sets and targets derived from the exponent table.

use peas::analysis::{
    check_decay_rate, check_monotone, check_summable, check_tau_growth, lin_jordan_targets,
    min_gradient_rate, target_exponents, Direction, FeedbackKind, Verdict, DEFAULT_GAP_FLOOR,
};
use peas::continuous::{
    averaging_jensen_gap, averaging_measure_mass, tau_lower_bound_check, SystemKind, Trajectory,
};
use peas::discrete::{averaged_iterate_oracle, IterateHistory};
use peas::objectives::Objective;

use crate::config::{CheckSpec, Mode};

pub enum RunOutput {
    Discrete(IterateHistory),
    Continuous(Trajectory),
}

impl RunOutput {
    pub fn scale(&self) -> f64 {
        match self {
            RunOutput::Discrete(h) => h.scale,
            RunOutput::Continuous(t) => t.scale,
        }
    }
}

/// The checks run when the config lists none.
pub fn default_check_names(mode: Mode, obj: &Objective, feedback: Option<FeedbackKind>) -> Vec<&'static str> {
    let has_min = obj.f_min().is_some();
    let mut names: Vec<&'static str> = Vec::new();
    match mode {
        Mode::Peas => {
            if has_min {
                names.extend(["value_rate", "summability"]);
            }
            names.extend(["tau_growth", "monotone_values", "monotone_gradients"]);
        }
        Mode::PeasInertial => {
            if has_min {
                names.extend(["value_rate", "summability"]);
            }
            names.extend([
                "tau_growth",
                "monotone_values",
                "monotone_gradients",
                "inertial_identity",
            ]);
        }
        Mode::OdeClosedLoop | Mode::OdeSecondOrder => {
            if has_min {
                names.extend(["value_rate", "jensen"]);
            }
            names.extend(["tau_growth", "monotone_values", "monotone_gradients", "mass"]);
            if feedback == Some(FeedbackKind::Gradient) {
                names.push("min_gradient_rate");
            }
        }
        Mode::OdeSd => {
            if has_min {
                names.push("value_rate");
            }
            names.extend(["monotone_values", "monotone_gradients"]);
        }
        Mode::OdeLinJordan => {
            if has_min {
                names.push("value_rate");
            }
            names.push("min_gradient_rate");
        }
    }
    // Value-based monotonicity needs the minimum only for the gap; the raw
    // values are always available, so keep those checks regardless.
    names
}

struct Targets {
    rate: (f64, f64),
    tau: (f64, f64),
    min_grad: (f64, f64),
}

fn targets(mode: Mode, p: f64, q: f64, feedback: Option<FeedbackKind>) -> Targets {
    match mode {
        Mode::Peas | Mode::PeasInertial => {
            let t = target_exponents(p, 1.0, feedback.unwrap_or(FeedbackKind::Velocity));
            Targets {
                rate: (t.discrete_value, 0.2),
                tau: (t.discrete_tau_growth, 0.15),
                min_grad: (t.discrete_value, 0.5),
            }
        }
        Mode::OdeClosedLoop | Mode::OdeSecondOrder => {
            let t = target_exponents(p, q, feedback.unwrap_or(FeedbackKind::Velocity));
            let rate_tol = match feedback {
                Some(FeedbackKind::Gradient) => 0.5,
                _ => 0.3,
            };
            Targets {
                rate: (t.continuous_value, rate_tol),
                tau: (t.continuous_value, 0.15),
                min_grad: (t.continuous_min_gradient_q2, 0.5),
            }
        }
        Mode::OdeSd => Targets {
            rate: (1.0, 0.3),
            tau: (1.0, 0.15),
            min_grad: (1.0, 0.5),
        },
        Mode::OdeLinJordan => {
            let (value, grad) = lin_jordan_targets(p);
            Targets {
                rate: (value, 0.5),
                tau: (value, 0.5),
                min_grad: (grad, 0.5),
            }
        }
    }
}

fn unavailable(name: &str, reason: &str) -> Verdict {
    Verdict {
        name: name.to_string(),
        passed: false,
        measured: f64::NAN,
        target: f64::NAN,
        tolerance: f64::NAN,
        inconclusive: true,
        details: format!("inconclusive: {reason}"),
    }
}

fn rename(mut verdict: Verdict, name: &str) -> Verdict {
    verdict.name = name.to_string();
    verdict
}

/// Evaluates one named check; `summability` expands to three verdicts.
#[allow(clippy::too_many_lines)]
pub fn evaluate_check(
    spec: &CheckSpec,
    mode: Mode,
    output: &RunOutput,
    obj: &Objective,
    p: f64,
    q: f64,
    feedback: Option<FeedbackKind>,
) -> Vec<Verdict> {
    let scale = output.scale();
    let defaults = targets(mode, p, q, feedback);
    let slack = spec.tolerance.unwrap_or(1e-10 * scale);
    let floor = DEFAULT_GAP_FLOOR * scale;

    match (spec.name.as_str(), output) {
        ("value_rate", RunOutput::Discrete(history)) => {
            let Some(gaps) = rate_series_discrete(mode, history, obj) else {
                return vec![unavailable("value_rate", "objective minimum unknown")];
            };
            let ks: Vec<f64> = (0..gaps.len()).map(|k| k as f64).collect();
            let target = spec.target.unwrap_or(defaults.rate.0);
            let tolerance = spec.tolerance.unwrap_or(defaults.rate.1);
            match check_decay_rate("value_rate", &ks, &gaps, floor, target, tolerance) {
                Ok(v) => vec![v],
                Err(e) => vec![unavailable("value_rate", &e.to_string())],
            }
        }
        ("value_rate", RunOutput::Continuous(trajectory)) => {
            let gaps = match rate_series_continuous(trajectory) {
                Some(g) => g,
                None => return vec![unavailable("value_rate", "objective minimum unknown")],
            };
            let times = trajectory.times();
            let target = spec.target.unwrap_or(defaults.rate.0);
            let tolerance = spec.tolerance.unwrap_or(defaults.rate.1);
            match check_decay_rate("value_rate", &times, &gaps, floor, target, tolerance) {
                Ok(v) => vec![v],
                Err(e) => vec![unavailable("value_rate", &e.to_string())],
            }
        }
        ("tau_growth", RunOutput::Discrete(history)) => {
            let taus = history.taus();
            let ks: Vec<f64> = (0..taus.len()).map(|k| k as f64).collect();
            let target = spec.target.unwrap_or(defaults.tau.0);
            let tolerance = spec.tolerance.unwrap_or(defaults.tau.1);
            match check_tau_growth(&taus, &ks, target, tolerance) {
                Ok(v) => vec![rename(v, "tau_growth")],
                Err(e) => vec![unavailable("tau_growth", &e.to_string())],
            }
        }
        ("tau_growth", RunOutput::Continuous(trajectory)) => {
            let target = spec.target.unwrap_or(defaults.tau.0);
            let tolerance = spec.tolerance.unwrap_or(defaults.tau.1);
            match tau_lower_bound_check(trajectory) {
                Ok(fit) => vec![Verdict {
                    name: "tau_growth".into(),
                    passed: fit.exponent >= target - tolerance,
                    measured: fit.exponent,
                    target,
                    tolerance,
                    inconclusive: fit.r_squared < peas::analysis::R_SQUARED_CONCLUSIVE,
                    details: format!(
                        "lower-bound check: growth fit over {} samples, r_squared {:.4}",
                        fit.n_points, fit.r_squared
                    ),
                }],
                Err(e) => vec![unavailable("tau_growth", &e.to_string())],
            }
        }
        ("monotone_values", output) => {
            let values: Vec<f64> = match output {
                RunOutput::Discrete(h) => h.records.iter().map(|r| obj.value(&r.y)).collect(),
                RunOutput::Continuous(t) => t.samples.iter().map(|s| obj.value(&s.y)).collect(),
            };
            vec![rename(
                check_monotone(&values, Direction::NonIncreasing, slack),
                "monotone_values",
            )]
        }
        ("monotone_gradients", output) => {
            let grads = match output {
                RunOutput::Discrete(h) => h.grad_norms(),
                RunOutput::Continuous(t) => t.grad_norms(),
            };
            vec![rename(
                check_monotone(&grads, Direction::NonIncreasing, slack),
                "monotone_gradients",
            )]
        }
        ("summability", RunOutput::Discrete(history)) => {
            let Some(gaps) = history.value_gaps() else {
                return vec![unavailable("summability", "objective minimum unknown")];
            };
            let grads = history.grad_norms();
            let records = &history.records;
            let steps = records.len() - 1;
            let mut values = Vec::with_capacity(steps);
            let mut gradients = Vec::with_capacity(steps);
            let mut velocities = Vec::with_capacity(steps);
            for k in 0..steps {
                let lambda = records[k].lambda.expect("non-terminal record");
                let tau = records[k].tau;
                values.push(lambda * gaps[k + 1]);
                gradients.push(tau * lambda * grads[k + 1] * grads[k + 1]);
                velocities
                    .push(tau / lambda * (&records[k + 1].y - &records[k].y).norm_squared());
            }
            let share = spec.target.unwrap_or(0.01);
            vec![
                rename(check_summable(&values, 0.2, share), "summability_values"),
                rename(check_summable(&gradients, 0.2, share), "summability_gradients"),
                rename(check_summable(&velocities, 0.2, share), "summability_velocities"),
            ]
        }
        ("inertial_identity", RunOutput::Discrete(history)) => {
            let mut worst = 0.0f64;
            let upper = history.records.len().saturating_sub(2);
            for k in 0..=upper {
                let Ok(oracle) = averaged_iterate_oracle(history, k) else { break };
                let Some(recursive) = history.records[k + 1].x.as_ref() else {
                    return vec![unavailable("inertial_identity", "run has no averaged iterates")];
                };
                worst = worst.max((recursive - &oracle).norm() / (1.0 + oracle.norm()));
            }
            let tolerance = spec.tolerance.unwrap_or(1e-12);
            vec![Verdict {
                name: "inertial_identity".into(),
                passed: worst <= tolerance,
                measured: worst,
                target: 0.0,
                tolerance,
                inconclusive: false,
                details: format!(
                    "upper-bound check: worst relative deviation from the weighted-average oracle over {} steps",
                    upper + 1
                ),
            }]
        }
        ("min_gradient_rate", output) => {
            let (abscissa, grads): (Vec<f64>, Vec<f64>) = match output {
                RunOutput::Discrete(h) => (
                    (0..h.records.len()).map(|k| k as f64).collect(),
                    h.grad_norms(),
                ),
                RunOutput::Continuous(t) => (t.times(), t.grad_norms()),
            };
            let target = spec.target.unwrap_or(defaults.min_grad.0);
            let tolerance = spec.tolerance.unwrap_or(defaults.min_grad.1);
            match min_gradient_rate(&abscissa, &grads, target, tolerance, floor) {
                Ok(v) => vec![rename(v, "min_gradient_rate")],
                Err(e) => vec![unavailable("min_gradient_rate", &e.to_string())],
            }
        }
        ("mass", RunOutput::Continuous(trajectory)) => {
            if !matches!(
                trajectory.system,
                SystemKind::VelocityFeedback
                    | SystemKind::GradientFeedback
                    | SystemKind::SecondOrderInertial
            ) {
                return vec![unavailable("mass", "measure defined only for averaged systems")];
            }
            let mut worst = 0.0f64;
            let n = trajectory.samples.len();
            for i in 1..=10 {
                let t = trajectory.samples[(i * (n - 1)) / 10].t;
                match averaging_measure_mass(trajectory, t) {
                    Ok(mass) => worst = worst.max((mass - 1.0).abs()),
                    Err(e) => return vec![unavailable("mass", &e.to_string())],
                }
            }
            let tolerance = spec.tolerance.unwrap_or(1e-8);
            vec![Verdict {
                name: "mass".into(),
                passed: worst <= tolerance,
                measured: worst,
                target: 0.0,
                tolerance,
                inconclusive: false,
                details: "upper-bound check: worst |mass − 1| at 10 sample times".into(),
            }]
        }
        ("jensen", RunOutput::Continuous(trajectory)) => {
            if obj.f_min().is_none() {
                return vec![unavailable("jensen", "objective minimum unknown")];
            }
            let mut worst = f64::NEG_INFINITY;
            let n = trajectory.samples.len();
            for i in 1..=10 {
                let t = trajectory.samples[(i * (n - 1)) / 10].t;
                match averaging_jensen_gap(trajectory, obj, t) {
                    Ok((lhs, rhs)) => worst = worst.max(lhs - rhs),
                    Err(e) => return vec![unavailable("jensen", &e.to_string())],
                }
            }
            let tolerance = spec.tolerance.unwrap_or(1e-8 * scale);
            vec![Verdict {
                name: "jensen".into(),
                passed: worst <= tolerance,
                measured: worst,
                target: 0.0,
                tolerance,
                inconclusive: false,
                details: "upper-bound check: worst (lhs − rhs) of the Jensen bound at 10 times".into(),
            }]
        }
        (other, _) => vec![unavailable(other, "unknown or inapplicable check for this mode")],
    }
}

fn rate_series_discrete(mode: Mode, history: &IterateHistory, obj: &Objective) -> Option<Vec<f64>> {
    let f_min = obj.f_min()?;
    match mode {
        // The inertial mode's headline quantity is the averaged iterate.
        Mode::PeasInertial => Some(
            history
                .records
                .iter()
                .map(|r| obj.value(r.x.as_ref().expect("inertial run records x")) - f_min)
                .collect(),
        ),
        _ => history.value_gaps(),
    }
}

fn rate_series_continuous(trajectory: &Trajectory) -> Option<Vec<f64>> {
    match trajectory.system {
        SystemKind::Sd | SystemKind::PerturbedSd => trajectory.value_gaps_y(),
        _ => trajectory.value_gaps_x(),
    }
}

/// Runs the configured (or default) checks against a finished run.
pub fn run_all_checks(
    mode: Mode,
    output: &RunOutput,
    obj: &Objective,
    p: f64,
    q: f64,
    feedback: Option<FeedbackKind>,
    requested: Option<&[CheckSpec]>,
) -> Vec<Verdict> {
    let specs: Vec<CheckSpec> = match requested {
        Some(list) => list.to_vec(),
        None => default_check_names(mode, obj, feedback)
            .into_iter()
            .map(|name| CheckSpec {
                name: name.to_string(),
                target: None,
                tolerance: None,
            })
            .collect(),
    };
    specs
        .iter()
        .flat_map(|spec| evaluate_check(spec, mode, output, obj, p, q, feedback))
        .collect()
}

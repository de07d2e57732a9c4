//! Canned verification runs: each criterion builds its benchmark, runs the
//! relevant solver or integrator and reduces the outcome to one pass/fail
//! line. The `verify` CLI subcommand and the acceptance test suite both
//! execute this list; every threshold is pinned here, none is configurable.

use std::time::Instant;

use nalgebra::DVector;

use crate::analysis::{
    check_monotone, check_summable, fit_power_law, lin_jordan_targets, target_exponents,
    Direction, FeedbackKind, DEFAULT_GAP_FLOOR,
};
use crate::continuous::{
    averaging_jensen_gap, averaging_measure_mass, inertial_coefficients, integrate_closed_loop,
    integrate_lin_jordan, integrate_second_order, integrate_steepest_descent, open_loop_tau,
    DynamicsConfig, IntegratorOptions, LinJordanConfig, Trajectory,
};
use crate::discrete::{
    averaged_iterate_oracle, run_peas, run_peas_inertial, IterateHistory, SolverConfig,
};
use crate::objectives::{default_start, make_problem, make_quadratic, Objective, ProblemSpec};
use crate::prox::{inner_tolerance, prox, prox_iterative, DEFAULT_INNER_BUDGET};
use crate::Result;

/// Outcome of one acceptance criterion.
#[derive(Debug, Clone)]
pub struct CriterionResult {
    pub id: usize,
    pub name: String,
    pub passed: bool,
    pub details: String,
}

impl CriterionResult {
    pub fn line(&self) -> String {
        format!(
            "[{}] {:>2}. {} — {}",
            if self.passed { "PASS" } else { "FAIL" },
            self.id,
            self.name,
            self.details
        )
    }
}

/// The seeded 50-dimensional strongly convex quadratic used by the discrete
/// criteria. The conditioning is chosen so the p = 2 velocity run needs the
/// whole 2000-iteration budget without hitting the gradient floor first.
fn discrete_benchmark() -> ProblemSpec {
    ProblemSpec::new("quadratic", 50, 42).with_parameter("cond", 700.0)
}

/// A smaller, better-conditioned quadratic for the continuous criteria: the
/// closed-loop time scale blows up at the gradient floor, and this spectrum
/// leaves a long, well-sampled window before that happens.
fn continuous_benchmark() -> ProblemSpec {
    ProblemSpec::new("quadratic", 10, 42).with_parameter("cond", 1e2)
}

fn discrete_run(p: f64, feedback: FeedbackKind, max_iter: usize) -> Result<IterateHistory> {
    let spec = discrete_benchmark();
    let obj = make_problem(&spec)?;
    let y0 = default_start(&spec);
    let config = SolverConfig {
        max_iter,
        ..SolverConfig::new(p)
    };
    run_peas(&obj, &config, feedback, &y0)
}

fn value_gap_exponent(history: &IterateHistory) -> Result<f64> {
    let gaps = history
        .value_gaps()
        .expect("benchmark minimum is known");
    let ks: Vec<f64> = (0..gaps.len()).map(|k| k as f64).collect();
    let floor = DEFAULT_GAP_FLOOR * history.scale;
    Ok(fit_power_law(&ks, &gaps, floor)?.exponent)
}

fn trajectory_gap_x_exponent(trajectory: &Trajectory) -> Result<f64> {
    let gaps = trajectory
        .value_gaps_x()
        .expect("benchmark minimum is known");
    let times = trajectory.times();
    let floor = DEFAULT_GAP_FLOOR * trajectory.scale;
    Ok(fit_power_law(&times, &gaps, floor)?.exponent)
}

fn discrete_rate_criterion(
    id: usize,
    name: &str,
    feedback: FeedbackKind,
) -> Result<CriterionResult> {
    let mut passed = true;
    let mut parts = Vec::new();
    for p in [1.0, 2.0, 4.0] {
        let start = Instant::now();
        let history = discrete_run(p, feedback, 2000)?;
        let elapsed = start.elapsed();
        let exponent = value_gap_exponent(&history)?;
        let target = target_exponents(p, 1.0, feedback).discrete_value - 0.2;
        let ok = exponent >= target && elapsed.as_secs_f64() < 10.0;
        passed &= ok;
        parts.push(format!(
            "p={p}: exponent {exponent:.2} (target ≥ {target:.2}, {:.2}s)",
            elapsed.as_secs_f64()
        ));
    }
    Ok(CriterionResult {
        id,
        name: name.into(),
        passed,
        details: parts.join("; "),
    })
}

/// Criterion 1: Discrete velocity-feedback value rate ≥ 2 − 1/p − 0.2 for p ∈ {1,2,4}.
pub fn c01_discrete_velocity_rate() -> Result<CriterionResult> {
    discrete_rate_criterion(1, "discrete velocity-feedback rate", FeedbackKind::Velocity)
}

/// Criterion 2: Discrete gradient-feedback value rate, same thresholds.
pub fn c02_discrete_gradient_rate() -> Result<CriterionResult> {
    discrete_rate_criterion(2, "discrete gradient-feedback rate", FeedbackKind::Gradient)
}

/// Criterion 3: τ_k growth exponent ≥ 2 − 1/p − 0.15 for p ∈ {2,4}, both feedbacks.
pub fn c03_discrete_tau_growth() -> Result<CriterionResult> {
    let mut passed = true;
    let mut parts = Vec::new();
    for feedback in [FeedbackKind::Velocity, FeedbackKind::Gradient] {
        for p in [2.0, 4.0] {
            let history = discrete_run(p, feedback, 2000)?;
            let taus = history.taus();
            let ks: Vec<f64> = (0..taus.len()).map(|k| k as f64).collect();
            let fit = fit_power_law(&ks, &taus, 0.0)?;
            let growth = -fit.exponent;
            let target = target_exponents(p, 1.0, feedback).discrete_tau_growth - 0.15;
            let ok = growth >= target;
            passed &= ok;
            parts.push(format!("{feedback}/p={p}: {growth:.2} (≥ {target:.2})"));
        }
    }
    Ok(CriterionResult {
        id: 3,
        name: "discrete tau growth".into(),
        passed,
        details: parts.join("; "),
    })
}

/// Criterion 4: f(y_k) and ‖∇f(y_k)‖ nonincreasing with slack 1e−10·scale on every
/// discrete acceptance run.
pub fn c04_monotonicity() -> Result<CriterionResult> {
    let mut passed = true;
    let mut worst = 0.0f64;
    let mut runs = 0;
    for feedback in [FeedbackKind::Velocity, FeedbackKind::Gradient] {
        for p in [1.0, 2.0, 4.0] {
            let history = discrete_run(p, feedback, 2000)?;
            let slack = 1e-10 * history.scale;
            let gaps = history.value_gaps().unwrap();
            let values = check_monotone(&gaps, Direction::NonIncreasing, slack);
            let grads = check_monotone(&history.grad_norms(), Direction::NonIncreasing, slack);
            passed &= values.passed && grads.passed;
            worst = worst.max(values.measured).max(grads.measured);
            runs += 1;
        }
    }
    Ok(CriterionResult {
        id: 4,
        name: "monotone values and gradient norms".into(),
        passed,
        details: format!("{runs} runs, worst violation {worst:.3e}"),
    })
}

/// Criterion 5: The three partial-sum series have tail share ≤ 1% over the last 20%
/// of the 2000-iteration p = 2 run.
pub fn c05_summability() -> Result<CriterionResult> {
    let history = discrete_run(2.0, FeedbackKind::Velocity, 2000)?;
    let records = &history.records;
    let gaps = history.value_gaps().unwrap();
    let grads = history.grad_norms();
    let steps = records.len() - 1;
    let mut value_terms = Vec::with_capacity(steps);
    let mut gradient_terms = Vec::with_capacity(steps);
    let mut velocity_terms = Vec::with_capacity(steps);
    for k in 0..steps {
        let lambda = records[k].lambda.expect("non-terminal record");
        let tau = records[k].tau;
        value_terms.push(lambda * gaps[k + 1]);
        gradient_terms.push(tau * lambda * grads[k + 1] * grads[k + 1]);
        velocity_terms.push(tau / lambda * (&records[k + 1].y - &records[k].y).norm_squared());
    }
    let verdicts = [
        ("λ·gap", check_summable(&value_terms, 0.2, 0.01)),
        ("τλ‖∇f‖²", check_summable(&gradient_terms, 0.2, 0.01)),
        ("(τ/λ)‖Δy‖²", check_summable(&velocity_terms, 0.2, 0.01)),
    ];
    let passed = verdicts.iter().all(|(_, v)| v.passed);
    let details = verdicts
        .iter()
        .map(|(label, v)| format!("{label}: tail share {:.4e}", v.measured))
        .collect::<Vec<_>>()
        .join("; ");
    Ok(CriterionResult {
        id: 5,
        name: format!("summability over {steps} iterations"),
        passed,
        details,
    })
}

/// Reference classical proximal-point loop with λ ≡ 1, kept deliberately
/// separate from the PEAS driver for the bitwise reduction check.
pub fn reference_proximal_point(
    obj: &Objective,
    y0: &DVector<f64>,
    iterations: usize,
) -> Result<Vec<DVector<f64>>> {
    let scale = crate::tolerance_scale(obj.value(y0));
    let mut iterates = vec![y0.clone()];
    let mut y = y0.clone();
    for _ in 0..iterations {
        let grad_norm = obj.gradient(&y).norm();
        let tol = inner_tolerance(grad_norm, 1.0, scale);
        y = prox(obj, 1.0, &y, tol)?.point;
        iterates.push(y.clone());
    }
    Ok(iterates)
}

/// Criterion 6: p = 1 velocity-feedback PEAS is bitwise identical to the reference
/// proximal-point loop over 500 iterations.
pub fn c06_p1_reduction() -> Result<CriterionResult> {
    let spec = discrete_benchmark();
    let obj = make_problem(&spec)?;
    let y0 = default_start(&spec);
    let config = SolverConfig {
        max_iter: 500,
        ..SolverConfig::new(1.0)
    };
    let history = run_peas(&obj, &config, FeedbackKind::Velocity, &y0)?;
    let reference = reference_proximal_point(&obj, &y0, 500)?;
    let mut passed = history.records.len() == reference.len();
    let mut lambda_one = true;
    if passed {
        for (record, expected) in history.records.iter().zip(&reference) {
            if record.y.as_slice() != expected.as_slice() {
                passed = false;
                break;
            }
            if let Some(lambda) = record.lambda {
                lambda_one &= lambda == 1.0;
            }
        }
    }
    passed &= lambda_one;
    Ok(CriterionResult {
        id: 6,
        name: "p = 1 reduction to proximal point".into(),
        passed,
        details: format!(
            "{} iterates compared bitwise, λ ≡ 1: {lambda_one}",
            reference.len()
        ),
    })
}

/// Criterion 7: Inertial recursion equals the weighted-average oracle to 1e−12
/// relative for every k ≤ 1000, and the averaged value gap keeps the
/// 2 − 1/p − 0.2 exponent.
pub fn c07_inertial_identity_and_rate() -> Result<CriterionResult> {
    let spec = discrete_benchmark();
    let obj = make_problem(&spec)?;
    let y0 = default_start(&spec);
    let config = SolverConfig {
        max_iter: 2000,
        ..SolverConfig::new(2.0)
    };
    let history = run_peas_inertial(&obj, &config, None, &y0)?;
    let mut worst_rel = 0.0f64;
    let k_max = (history.records.len() - 2).min(1000);
    for k in 0..=k_max {
        let oracle = averaged_iterate_oracle(&history, k)?;
        let recursive = history.records[k + 1].x.as_ref().unwrap();
        let rel = (recursive - &oracle).norm() / (1.0 + oracle.norm());
        worst_rel = worst_rel.max(rel);
    }
    let f_min = obj.f_min().unwrap();
    let gaps: Vec<f64> = history
        .records
        .iter()
        .map(|r| obj.value(r.x.as_ref().unwrap()) - f_min)
        .collect();
    let ks: Vec<f64> = (0..gaps.len()).map(|k| k as f64).collect();
    let exponent = fit_power_law(&ks, &gaps, DEFAULT_GAP_FLOOR * history.scale)?.exponent;
    let target = 2.0 - 1.0 / 2.0 - 0.2;
    let passed = worst_rel <= 1e-12 && exponent >= target;
    Ok(CriterionResult {
        id: 7,
        name: "inertial averaging identity and rate".into(),
        passed,
        details: format!(
            "worst identity deviation {worst_rel:.3e} over k ≤ {k_max}; exponent {exponent:.2} (≥ {target:.2})"
        ),
    })
}

fn continuous_run(feedback: FeedbackKind) -> Result<Trajectory> {
    let spec = continuous_benchmark();
    let obj = make_problem(&spec)?;
    let y0 = default_start(&spec);
    let config = DynamicsConfig {
        t_end: 50.0,
        stop_grad_tol: 1e-12,
        ..DynamicsConfig::new(2.0, 2.0, 2.0)
    };
    integrate_closed_loop(&obj, feedback, &config, &y0, None)
}

/// Criterion 8: Continuous velocity feedback, (p,q,γ) = (2,2,2): fitted exponent of
/// f(x(t)) − min ≥ 1 + q − 1/p − 0.3 = 2.2, within 30 s.
pub fn c08_continuous_velocity_rate() -> Result<CriterionResult> {
    let start = Instant::now();
    let trajectory = continuous_run(FeedbackKind::Velocity)?;
    let elapsed = start.elapsed();
    let exponent = trajectory_gap_x_exponent(&trajectory)?;
    let target = target_exponents(2.0, 2.0, FeedbackKind::Velocity).continuous_value - 0.3;
    let passed = exponent >= target && elapsed.as_secs_f64() < 30.0;
    Ok(CriterionResult {
        id: 8,
        name: "continuous velocity-feedback rate".into(),
        passed,
        details: format!(
            "exponent {exponent:.2} (≥ {target:.2}), {} samples, {:.2}s",
            trajectory.samples.len(),
            elapsed.as_secs_f64()
        ),
    })
}

/// Criterion 9: Continuous gradient feedback beats both its own target pq − 0.5 = 3.5
/// and the Lin-Jordan baseline on the same problem.
pub fn c09_continuous_gradient_vs_lin_jordan() -> Result<CriterionResult> {
    let trajectory = continuous_run(FeedbackKind::Gradient)?;
    let exponent = trajectory_gap_x_exponent(&trajectory)?;
    let target = target_exponents(2.0, 2.0, FeedbackKind::Gradient).continuous_value - 0.5;

    let spec = continuous_benchmark();
    let obj = make_problem(&spec)?;
    let y0 = default_start(&spec);
    let lj_config = LinJordanConfig {
        p: 2.0,
        c: 2.0,
        theta: 0.5,
        t_end: 200.0,
        stop_grad_tol: 1e-12,
        ..Default::default()
    };
    let lj = integrate_lin_jordan(&obj, &lj_config, &y0, &y0)?;
    let lj_exponent = trajectory_gap_x_exponent(&lj)?;
    let (lj_theory, _) = lin_jordan_targets(2.0);

    let passed = exponent >= target && exponent > lj_exponent;
    Ok(CriterionResult {
        id: 9,
        name: "continuous gradient feedback vs Lin-Jordan".into(),
        passed,
        details: format!(
            "gradient feedback {exponent:.2} (≥ {target:.2}); Lin-Jordan measured {lj_exponent:.2} (its guaranteed rate is t^-{lj_theory}) and must be exceeded"
        ),
    })
}

/// Criterion 10: Second-order and first-order integrations agree to 1e−5 relative
/// sup-norm on [1, 50] at rel_tol 1e−10.
pub fn c10_second_order_equivalence() -> Result<CriterionResult> {
    let obj = make_problem(&ProblemSpec::new("log_sum_exp", 3, 1))?;
    let config = DynamicsConfig {
        t0: 1.0,
        t_end: 50.0,
        rel_tol: 1e-10,
        abs_tol: 1e-12,
        ..DynamicsConfig::new(2.0, 2.0, 2.0)
    };
    let y0 = DVector::from_vec(vec![1.0, -0.5, 0.2]);
    let first = integrate_closed_loop(&obj, FeedbackKind::Velocity, &config, &y0, None)?;
    let second = integrate_second_order(&obj, FeedbackKind::Velocity, &config, &y0, None)?;
    let mut sup = 0.0f64;
    let mut compared = 0;
    for (a, b) in first.samples.iter().zip(&second.samples) {
        if (a.t - b.t).abs() > 1e-9 * a.t {
            continue;
        }
        sup = sup.max((&a.x - &b.x).norm() / (1.0 + a.x.norm()));
        compared += 1;
    }
    let passed = sup <= 1e-5 && compared >= 50;
    Ok(CriterionResult {
        id: 10,
        name: "second-order / first-order equivalence".into(),
        passed,
        details: format!("sup relative difference {sup:.3e} over {compared} shared sample times"),
    })
}

/// Criterion 11: μ_t has unit mass to 1e−8 at ten sample times and the Jensen bound
/// holds at each, on the velocity-feedback averaged run.
pub fn c11_averaging_measure() -> Result<CriterionResult> {
    let spec = continuous_benchmark();
    let obj = make_problem(&spec)?;
    let y0 = default_start(&spec);
    let config = DynamicsConfig {
        t_end: 50.0,
        stop_grad_tol: 1e-12,
        ..DynamicsConfig::new(2.0, 2.0, 2.0)
    };
    let trajectory = integrate_closed_loop(&obj, FeedbackKind::Velocity, &config, &y0, None)?;
    let n = trajectory.samples.len();
    let mut worst_mass = 0.0f64;
    let mut jensen_ok = true;
    let mut checked = 0;
    for i in 1..=10 {
        let idx = (i * (n - 1)) / 10;
        let t = trajectory.samples[idx].t;
        let mass = averaging_measure_mass(&trajectory, t)?;
        worst_mass = worst_mass.max((mass - 1.0).abs());
        let (lhs, rhs) = averaging_jensen_gap(&trajectory, &obj, t)?;
        jensen_ok &= lhs <= rhs + 1e-8 * trajectory.scale;
        checked += 1;
    }
    let passed = worst_mass <= 1e-8 && jensen_ok && checked == 10;
    Ok(CriterionResult {
        id: 11,
        name: "averaging measure mass and Jensen bound".into(),
        passed,
        details: format!("worst |mass − 1| = {worst_mass:.3e} at {checked} times; Jensen holds: {jensen_ok}"),
    })
}

/// Criterion 12: Open-loop specialization p = 1, q = 2: damping coefficient α/t with
/// α = 2γ + 1 and gradient coefficient (α − 1)/2, to 1e−10.
pub fn c12_open_loop_coefficients() -> Result<CriterionResult> {
    let gamma = 2.0;
    let alpha = 2.0 * gamma + 1.0;
    let mut worst_damping = 0.0f64;
    let mut worst_grad = 0.0f64;
    for i in 0..10 {
        let t = 1.0 + 0.7 * i as f64;
        let (tau, td, tdd) = open_loop_tau(t, 2.0);
        let (damping, grad_coeff) = inertial_coefficients(gamma, tau, td, tdd);
        worst_damping = worst_damping.max((damping - alpha / t).abs());
        worst_grad = worst_grad.max((grad_coeff - (alpha - 1.0) / 2.0).abs());
    }
    let passed = worst_damping <= 1e-10 && worst_grad <= 1e-10;
    Ok(CriterionResult {
        id: 12,
        name: "open-loop damping and gradient coefficients".into(),
        passed,
        details: format!(
            "max |damping − α/t| = {worst_damping:.3e}, max |coeff − (α−1)/2| = {worst_grad:.3e} (α = {alpha})"
        ),
    })
}

/// Criterion 13: Steepest-descent baseline: e^{−t} decay on ½‖x‖², t·gap decreasing
/// over the final decade, and a summable perturbation still drives the
/// gradient below 1e−6.
pub fn c13_steepest_descent_baseline() -> Result<CriterionResult> {
    let obj = make_quadratic(
        &nalgebra::DMatrix::identity(2, 2),
        &DVector::zeros(2),
    )?;
    let y0 = DVector::from_vec(vec![1.0, 0.0]);
    let options = IntegratorOptions::default();

    let plain = integrate_steepest_descent(&obj, &y0, 30.0, None, &options)?;
    // Integrator-tolerance comparison: mixed absolute/relative bound with a
    // 1e3 margin over (abs_tol, rel_tol) for accumulation across the run.
    let mut worst_decay = 0.0f64;
    for s in &plain.samples {
        let exact = (-s.t).exp();
        let allowed = 1e3 * (options.abs_tol + options.rel_tol * exact);
        worst_decay = worst_decay.max((s.y[0] - exact).abs() / allowed);
    }
    let t_final = plain.last().t;
    let tail: Vec<f64> = plain
        .samples
        .iter()
        .filter(|s| s.t >= t_final / 10.0)
        .map(|s| s.t * s.value_gap_y.unwrap())
        .collect();
    let decreasing = tail.windows(2).all(|w| w[1] <= w[0]);

    let pert = |t: f64| DVector::from_vec(vec![(t + 1.0).powi(-2), 0.0]);
    let perturbed = integrate_steepest_descent(&obj, &y0, 1500.0, Some(&pert), &options)?;
    let final_grad = perturbed.last().grad_norm;

    let passed = worst_decay <= 1.0 && decreasing && final_grad <= 1e-6;
    Ok(CriterionResult {
        id: 13,
        name: "steepest-descent baseline".into(),
        passed,
        details: format!(
            "worst e^-t error {worst_decay:.3e} of the tolerance budget; t·gap decreasing over final decade: {decreasing}; perturbed final ‖∇f‖ = {final_grad:.3e}"
        ),
    })
}

/// Criterion 14: γ = 1 regime: gap_x · τ/ln τ bounded and nonincreasing over the
/// final decade. Run on the open-loop instance (p = 1, q = 2) of the
/// averaged system, where the logarithmic-rate guarantee applies directly;
/// the feedback instances end at the gradient floor while their transient
/// still sits inside the final decade.
pub fn c14_gamma_one_regime() -> Result<CriterionResult> {
    let spec = continuous_benchmark();
    let obj = make_problem(&spec)?;
    let y0 = default_start(&spec);
    let config = DynamicsConfig {
        t_end: 120.0,
        stop_grad_tol: 1e-12,
        ..DynamicsConfig::new(1.0, 2.0, 1.0)
    };
    let trajectory = integrate_closed_loop(&obj, FeedbackKind::Velocity, &config, &y0, None)?;
    let t_final = trajectory.last().t;
    let weighted: Vec<f64> = trajectory
        .samples
        .iter()
        .filter(|s| s.t >= t_final / 10.0 && s.tau > std::f64::consts::E)
        .map(|s| s.value_gap_x.unwrap() * s.tau / s.tau.ln())
        .collect();
    let bounded = weighted.iter().all(|w| w.is_finite());
    let verdict = check_monotone(&weighted, Direction::NonIncreasing, 1e-10 * trajectory.scale);
    let passed = bounded && verdict.passed && weighted.len() >= 20;
    Ok(CriterionResult {
        id: 14,
        name: "gamma = 1 logarithmic regime".into(),
        passed,
        details: format!(
            "gap·τ/ln τ over final decade: {} points, first {:.3e}, last {:.3e}, worst rise {:.3e}",
            weighted.len(),
            weighted.first().copied().unwrap_or(f64::NAN),
            weighted.last().copied().unwrap_or(f64::NAN),
            verdict.measured
        ),
    })
}

/// Criterion 15: Prox oracle: forced iterative prox matches the analytic map on
/// quadratics to 1e−8, and every inner solve in a log-sum-exp run is
/// certified by its residual.
pub fn c15_prox_oracle() -> Result<CriterionResult> {
    let spec = ProblemSpec::new("quadratic", 6, 9);
    let obj = make_problem(&spec)?;
    let mut stream = crate::rng::Stream::substream(2024, 0);
    let mut worst_deviation = 0.0f64;
    for _ in 0..6 {
        let y = DVector::from_fn(6, |_, _| 2.0 * stream.normal());
        let lambda = 0.1 + 5.0 * stream.uniform();
        let analytic = obj.analytic_prox(lambda, &y).unwrap();
        let iterative = prox_iterative(&obj, lambda, &y, 1e-12, DEFAULT_INNER_BUDGET)?;
        worst_deviation = worst_deviation.max((&iterative.point - &analytic).norm());
    }

    let lse = make_problem(&ProblemSpec::new("log_sum_exp", 3, 5))?;
    let config = SolverConfig {
        max_iter: 120,
        ..SolverConfig::new(2.0)
    };
    let y0 = DVector::from_vec(vec![2.0, -1.0, 0.5]);
    let history = run_peas(&lse, &config, FeedbackKind::Gradient, &y0)?;
    let mut certified = true;
    for pair in history.records.windows(2) {
        let (prev, next) = (&pair[0], &pair[1]);
        let Some(lambda) = prev.lambda else { continue };
        let tol = inner_tolerance(prev.grad_norm, lambda, history.scale);
        certified &= next.prox_residual <= tol * (1.0 + 1e-12);
    }

    let passed = worst_deviation <= 1e-8 && certified && history.records.len() > 100;
    Ok(CriterionResult {
        id: 15,
        name: "prox oracle and residual certification".into(),
        passed,
        details: format!(
            "iterative vs analytic worst deviation {worst_deviation:.3e}; {} log-sum-exp steps certified: {certified}",
            history.records.len() - 1
        ),
    })
}

type Criterion = fn() -> Result<CriterionResult>;

const CRITERIA: [(usize, &str, Criterion); 15] = [
    (1, "discrete velocity-feedback rate", c01_discrete_velocity_rate),
    (2, "discrete gradient-feedback rate", c02_discrete_gradient_rate),
    (3, "discrete tau growth", c03_discrete_tau_growth),
    (4, "monotone values and gradient norms", c04_monotonicity),
    (5, "summability", c05_summability),
    (6, "p = 1 reduction to proximal point", c06_p1_reduction),
    (7, "inertial averaging identity and rate", c07_inertial_identity_and_rate),
    (8, "continuous velocity-feedback rate", c08_continuous_velocity_rate),
    (9, "continuous gradient feedback vs Lin-Jordan", c09_continuous_gradient_vs_lin_jordan),
    (10, "second-order / first-order equivalence", c10_second_order_equivalence),
    (11, "averaging measure mass and Jensen bound", c11_averaging_measure),
    (12, "open-loop damping and gradient coefficients", c12_open_loop_coefficients),
    (13, "steepest-descent baseline", c13_steepest_descent_baseline),
    (14, "gamma = 1 logarithmic regime", c14_gamma_one_regime),
    (15, "prox oracle and residual certification", c15_prox_oracle),
];

/// Runs every acceptance criterion in order. Infrastructure errors are
/// folded into failing results rather than aborting the suite.
pub fn run_all() -> Vec<CriterionResult> {
    CRITERIA
        .iter()
        .map(|(id, name, criterion)| match criterion() {
            Ok(result) => result,
            Err(error) => CriterionResult {
                id: *id,
                name: (*name).into(),
                passed: false,
                details: format!("error: {error}"),
            },
        })
        .collect()
}

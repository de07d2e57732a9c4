//! Proximal algorithms with adaptive step sizes (the PEAS family).
//!
//! One outer loop drives all variants: the step size is an explicit feedback
//! of the state,
//!
//! ```text
//! λ_k = ‖y_k − y_{k−1}‖^{−(p−1)/p}   (velocity feedback)
//! λ_k = ‖∇f(y_k)‖^{−(p−1)/p}         (gradient feedback)
//! y_{k+1} = prox_{λ_k f}(y_k)
//! τ_{k+1} = τ_k + λ_k,  τ_0 = 0
//! ```
//!
//! and the inertial variant additionally relaxes
//! `x_{k+1} = (1 − λ_k/τ_{k+1}) x_k + (λ_k/τ_{k+1}) y_{k+1}`, which makes
//! `x_{k+1}` the λ-weighted average of `y_1 … y_{k+1}`.
//! The accumulated time scale fixes q = 1, so τ accumulates λ directly.

use nalgebra::DVector;
use serde::{Deserialize, Serialize};

use crate::analysis::FeedbackKind;
use crate::objectives::{Objective, ProblemSpec};
use crate::prox::{inner_tolerance, prox};
use crate::{tolerance_scale, Error, Result};

/// How λ_0 is chosen: from the feedback formula (the algorithms' pseudocode)
/// or as the fixed constant t_0 (the convention used next to the τ
/// recursion). The feedback choice is the default; the rate and summability
/// properties hold for any positive step sequence.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Lambda0Policy {
    #[default]
    Feedback,
    T0,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct SolverConfig {
    /// Feedback strength; p = 1 reduces to the classical proximal point
    /// method with unit steps.
    pub p: f64,
    /// Initial step when `lambda0 = t0`.
    pub t0: f64,
    pub lambda0: Lambda0Policy,
    /// Stop when ‖∇f(y_k)‖ falls below this; `None` means 1e−13 · scale with
    /// scale = 1 + |f(y_0)|.
    pub stop_grad_tol: Option<f64>,
    /// Stop when ‖y_k − y_{k−1}‖ falls below this (velocity feedback, p > 1:
    /// a fixed point of the prox is a minimizer); `None` means 1e−14 · scale.
    pub stop_velocity_tol: Option<f64>,
    /// Optional cap on λ_k; the run terminates with `LambdaOverflow` once the
    /// cap binds 10 consecutive iterations. Off by default: the closed-loop
    /// rule wants λ_k → ∞ near the optimum.
    pub lambda_cap: Option<f64>,
    pub max_iter: usize,
    /// Coefficient δ of the y_{−1} initialisation
    /// `y_{−1} = y_0 + δ (1 + ‖y_0‖) e_1`, which guarantees y_0 ≠ y_{−1}.
    pub y_minus1_offset: f64,
}

impl Default for SolverConfig {
    fn default() -> Self {
        SolverConfig {
            p: 1.0,
            t0: 1.0,
            lambda0: Lambda0Policy::Feedback,
            stop_grad_tol: None,
            stop_velocity_tol: None,
            lambda_cap: None,
            max_iter: 1000,
            y_minus1_offset: 1e-3,
        }
    }
}

impl SolverConfig {
    pub fn new(p: f64) -> Self {
        SolverConfig {
            p,
            ..SolverConfig::default()
        }
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.p >= 1.0) {
            return Err(Error::InvalidConfig(format!("p must be >= 1, got {}", self.p)));
        }
        if !(self.t0 > 0.0) {
            return Err(Error::InvalidConfig(format!("t0 must be positive, got {}", self.t0)));
        }
        if self.max_iter == 0 {
            return Err(Error::InvalidConfig("max_iter must be >= 1".into()));
        }
        for (name, tol) in [
            ("stop_grad_tol", self.stop_grad_tol),
            ("stop_velocity_tol", self.stop_velocity_tol),
            ("lambda_cap", self.lambda_cap),
        ] {
            if let Some(v) = tol {
                if !(v > 0.0) {
                    return Err(Error::InvalidConfig(format!("{name} must be positive, got {v}")));
                }
            }
        }
        if !(self.y_minus1_offset > 0.0) {
            return Err(Error::InvalidConfig(format!(
                "y_minus1_offset must be positive, got {}",
                self.y_minus1_offset
            )));
        }
        Ok(())
    }
}

/// Why a run stopped.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Termination {
    /// ‖∇f(y_k)‖ under the gradient tolerance: y_k is a minimizer to
    /// working precision.
    GradZero,
    /// ‖y_k − y_{k−1}‖ under the velocity tolerance: y_k is a fixed point of
    /// the prox, hence a minimizer.
    VelocityZero,
    MaxIter,
    /// The λ cap bound for 10 consecutive iterations.
    LambdaOverflow,
}

/// One visited iterate. `lambda` is the step taken *from* this iterate and is
/// absent on the terminal record; `prox_residual` certifies the step that
/// *produced* this iterate (zero for k = 0).
#[derive(Debug, Clone)]
pub struct IterateRecord {
    pub k: usize,
    pub lambda: Option<f64>,
    pub tau: f64,
    pub y: DVector<f64>,
    pub x: Option<DVector<f64>>,
    pub value_gap: Option<f64>,
    pub grad_norm: f64,
    pub prox_residual: f64,
}

#[derive(Debug, Clone)]
pub struct IterateHistory {
    pub records: Vec<IterateRecord>,
    pub config: SolverConfig,
    pub feedback: FeedbackKind,
    pub problem: Option<ProblemSpec>,
    pub termination: Termination,
    /// 1 + |f(y_0)|, the scale of the default tolerances.
    pub scale: f64,
}

impl IterateHistory {
    /// Attaches the registry spec that produced the objective, for
    /// serialization alongside the run.
    pub fn with_problem(mut self, problem: ProblemSpec) -> Self {
        self.problem = Some(problem);
        self
    }

    pub fn final_record(&self) -> &IterateRecord {
        self.records.last().expect("history is never empty")
    }

    /// λ_0 … λ_{n−1} of the steps actually taken.
    pub fn lambdas(&self) -> Vec<f64> {
        self.records.iter().filter_map(|r| r.lambda).collect()
    }

    pub fn value_gaps(&self) -> Option<Vec<f64>> {
        self.records.iter().map(|r| r.value_gap).collect()
    }

    pub fn grad_norms(&self) -> Vec<f64> {
        self.records.iter().map(|r| r.grad_norm).collect()
    }

    pub fn taus(&self) -> Vec<f64> {
        self.records.iter().map(|r| r.tau).collect()
    }
}

/// `‖y_k − y_{k−1}‖^{−(p−1)/p}`; exactly 1 when p = 1.
pub fn velocity_stepsize(y_k: &DVector<f64>, y_km1: &DVector<f64>, p: f64) -> f64 {
    if p == 1.0 {
        return 1.0;
    }
    let velocity = (y_k - y_km1).norm();
    debug_assert!(velocity > 0.0, "velocity feedback needs y_k != y_{{k-1}}");
    velocity.powf(-(p - 1.0) / p)
}

/// `‖∇f(y_k)‖^{−(p−1)/p}`; exactly 1 when p = 1.
pub fn gradient_stepsize(grad_norm: f64, p: f64) -> f64 {
    if p == 1.0 {
        return 1.0;
    }
    debug_assert!(grad_norm > 0.0, "gradient feedback needs a nonzero gradient");
    grad_norm.powf(-(p - 1.0) / p)
}

/// Runs PEAS with the chosen feedback from `y0`.
pub fn run_peas(
    obj: &Objective,
    config: &SolverConfig,
    feedback: FeedbackKind,
    y0: &DVector<f64>,
) -> Result<IterateHistory> {
    run_loop(obj, config, feedback, y0, None)
}

/// Runs the inertial averaged variant (velocity feedback). `x0` defaults to
/// `y0` when `None`.
pub fn run_peas_inertial(
    obj: &Objective,
    config: &SolverConfig,
    x0: Option<&DVector<f64>>,
    y0: &DVector<f64>,
) -> Result<IterateHistory> {
    let x0 = x0.cloned().unwrap_or_else(|| y0.clone());
    run_loop(obj, config, FeedbackKind::Velocity, y0, Some(x0))
}

fn run_loop(
    obj: &Objective,
    config: &SolverConfig,
    feedback: FeedbackKind,
    y0: &DVector<f64>,
    mut averaged: Option<DVector<f64>>,
) -> Result<IterateHistory> {
    config.validate()?;
    assert!(y0.iter().all(|v| v.is_finite()), "y0 must be finite");

    let scale = tolerance_scale(obj.value(y0));
    let grad_tol = config.stop_grad_tol.unwrap_or(1e-13 * scale);
    let velocity_tol = config.stop_velocity_tol.unwrap_or(1e-14 * scale);

    // y_{-1} = y_0 + δ e_1 with a scale-aware δ, so the first velocity
    // feedback is well defined.
    let delta = config.y_minus1_offset * (1.0 + y0.norm());
    let mut y_prev = y0.clone();
    y_prev[0] += delta;
    let mut y = y0.clone();

    let mut tau = 0.0f64;
    let mut incoming_residual = 0.0f64;
    let mut cap_streak = 0usize;
    let mut records: Vec<IterateRecord> = Vec::new();

    let push = |records: &mut Vec<IterateRecord>,
                    k: usize,
                    lambda: Option<f64>,
                    tau: f64,
                    y: &DVector<f64>,
                    x: Option<&DVector<f64>>,
                    value: f64,
                    grad_norm: f64,
                    prox_residual: f64| {
        records.push(IterateRecord {
            k,
            lambda,
            tau,
            y: y.clone(),
            x: x.cloned(),
            value_gap: obj.f_min().map(|m| value - m),
            grad_norm,
            prox_residual,
        });
    };

    let termination;
    let mut k = 0usize;
    loop {
        let grad = obj.gradient(&y);
        let grad_norm = grad.norm();
        let value = obj.value(&y);

        if grad_norm < grad_tol {
            push(&mut records, k, None, tau, &y, averaged.as_ref(), value, grad_norm, incoming_residual);
            termination = Termination::GradZero;
            break;
        }
        if k >= config.max_iter {
            push(&mut records, k, None, tau, &y, averaged.as_ref(), value, grad_norm, incoming_residual);
            termination = Termination::MaxIter;
            break;
        }

        let lambda_raw = if k == 0 && config.lambda0 == Lambda0Policy::T0 {
            config.t0
        } else {
            match feedback {
                FeedbackKind::Velocity => {
                    let velocity = (&y - &y_prev).norm();
                    if config.p > 1.0 && velocity < velocity_tol {
                        push(&mut records, k, None, tau, &y, averaged.as_ref(), value, grad_norm, incoming_residual);
                        termination = Termination::VelocityZero;
                        break;
                    }
                    velocity_stepsize(&y, &y_prev, config.p)
                }
                FeedbackKind::Gradient => gradient_stepsize(grad_norm, config.p),
            }
        };

        let lambda = match config.lambda_cap {
            Some(cap) if lambda_raw > cap => {
                cap_streak += 1;
                if cap_streak >= 10 {
                    push(&mut records, k, None, tau, &y, averaged.as_ref(), value, grad_norm, incoming_residual);
                    termination = Termination::LambdaOverflow;
                    break;
                }
                cap
            }
            _ => {
                cap_streak = 0;
                lambda_raw
            }
        };

        let tol = inner_tolerance(grad_norm, lambda, scale);
        let step = prox(obj, lambda, &y, tol).map_err(|e| match e {
            Error::ProxBudgetExceeded {
                budget,
                best_residual,
                tol,
                ..
            } => Error::ProxBudgetExceeded {
                budget,
                index: k,
                best_residual,
                tol,
            },
            other => other,
        })?;

        push(&mut records, k, Some(lambda), tau, &y, averaged.as_ref(), value, grad_norm, incoming_residual);

        tau += lambda;
        if let Some(x) = averaged.as_mut() {
            // x_{k+1} = (1 − λ/τ_{k+1}) x_k + (λ/τ_{k+1}) y_{k+1}
            let weight = lambda / tau;
            *x = &*x * (1.0 - weight) + &step.point * weight;
        }
        incoming_residual = step.residual;
        y_prev = std::mem::replace(&mut y, step.point);
        k += 1;
    }

    Ok(IterateHistory {
        records,
        config: config.clone(),
        feedback,
        problem: None,
        termination,
        scale,
    })
}

/// Independent oracle for the averaged iterate:
/// `x_{k+1} = Σ_{i=0..k} λ_i y_{i+1} / τ_{k+1}` computed by direct summation
/// rather than through the recursive update.
pub fn averaged_iterate_oracle(history: &IterateHistory, k: usize) -> Result<DVector<f64>> {
    if k + 1 >= history.records.len() {
        return Err(Error::IndexOutOfRange {
            index: k,
            len: history.records.len(),
        });
    }
    let dim = history.records[0].y.len();
    let mut weighted = DVector::zeros(dim);
    let mut tau = 0.0;
    for i in 0..=k {
        let lambda = history.records[i]
            .lambda
            .expect("records before the terminal one carry lambda");
        weighted += &history.records[i + 1].y * lambda;
        tau += lambda;
    }
    Ok(weighted / tau)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::objectives::{default_start, make_problem, make_quadratic, ProblemSpec};
    use approx::assert_relative_eq;
    use nalgebra::DMatrix;

    fn identity_quadratic(dim: usize) -> Objective {
        make_quadratic(&DMatrix::identity(dim, dim), &DVector::zeros(dim)).unwrap()
    }

    #[test]
    fn velocity_stepsize_examples() {
        let a = DVector::from_vec(vec![4.0, 0.0]);
        let b = DVector::from_vec(vec![0.0, 0.0]);
        assert_eq!(velocity_stepsize(&a, &b, 1.0), 1.0);
        assert_relative_eq!(velocity_stepsize(&a, &b, 2.0), 0.5);
        let c = DVector::from_vec(vec![1.0 / 16.0, 0.0]);
        assert_relative_eq!(velocity_stepsize(&c, &b, 4.0), 8.0, max_relative = 1e-14);
    }

    #[test]
    fn gradient_stepsize_examples() {
        assert_relative_eq!(gradient_stepsize(4.0, 2.0), 0.5);
        assert_eq!(gradient_stepsize(123.0, 1.0), 1.0);
        assert_relative_eq!(gradient_stepsize(8.0, 3.0), 0.25, max_relative = 1e-14);
    }

    #[test]
    fn unit_steps_halve_the_iterate_on_norm_squared() {
        // prox_{1,½‖·‖²}(y) = y/2, so y_k = 2^{−k} y_0.
        let obj = identity_quadratic(2);
        let config = SolverConfig {
            max_iter: 10,
            ..SolverConfig::new(1.0)
        };
        let y0 = DVector::from_vec(vec![1.0, 0.0]);
        let history = run_peas(&obj, &config, FeedbackKind::Velocity, &y0).unwrap();
        assert_eq!(history.termination, Termination::MaxIter);
        for (k, record) in history.records.iter().enumerate() {
            assert_relative_eq!(record.y[0], 0.5f64.powi(k as i32), max_relative = 1e-14);
            if k < 10 {
                assert_eq!(record.lambda, Some(1.0));
            }
        }
    }

    #[test]
    fn gradient_feedback_first_step_by_hand() {
        // p = 2, y_0 = (4,0): λ_0 = ‖(4,0)‖^{−1/2} = 0.5, y_1 = y_0/1.5.
        let obj = identity_quadratic(2);
        let config = SolverConfig {
            max_iter: 2,
            ..SolverConfig::new(2.0)
        };
        let y0 = DVector::from_vec(vec![4.0, 0.0]);
        let history = run_peas(&obj, &config, FeedbackKind::Gradient, &y0).unwrap();
        assert_eq!(history.records[0].lambda, Some(0.5));
        assert_relative_eq!(history.records[1].y[0], 8.0 / 3.0, max_relative = 1e-14);
        // τ accumulates: τ_0 = 0, τ_1 = 0.5, τ_2 = 0.5 + λ_1
        assert_eq!(history.records[0].tau, 0.0);
        assert_relative_eq!(history.records[1].tau, 0.5);
        let lambda1 = history.records[1].lambda.unwrap();
        assert_relative_eq!(history.records[2].tau, 0.5 + lambda1);
    }

    #[test]
    fn tau_equals_prefix_sums_of_lambda() {
        let spec = ProblemSpec::new("quadratic", 6, 3);
        let obj = make_problem(&spec).unwrap();
        let config = SolverConfig {
            max_iter: 60,
            ..SolverConfig::new(2.0)
        };
        let history = run_peas(&obj, &config, FeedbackKind::Velocity, &default_start(&spec)).unwrap();
        let mut sum = 0.0;
        for record in &history.records {
            assert_relative_eq!(record.tau, sum, max_relative = 1e-12, epsilon = 1e-300);
            if let Some(lambda) = record.lambda {
                assert!(lambda > 0.0);
                sum += lambda;
            }
        }
    }

    #[test]
    fn values_and_gradients_decrease_monotonically() {
        for feedback in [FeedbackKind::Velocity, FeedbackKind::Gradient] {
            let spec = ProblemSpec::new("quadratic", 8, 5);
            let obj = make_problem(&spec).unwrap();
            let config = SolverConfig {
                max_iter: 200,
                ..SolverConfig::new(2.0)
            };
            let history = run_peas(&obj, &config, feedback, &default_start(&spec)).unwrap();
            let slack = 1e-10 * history.scale;
            let gaps = history.value_gaps().unwrap();
            for w in gaps.windows(2) {
                assert!(w[1] <= w[0] + slack, "value gap rose: {} -> {}", w[0], w[1]);
            }
            for w in history.grad_norms().windows(2) {
                assert!(w[1] <= w[0] + slack, "grad norm rose: {} -> {}", w[0], w[1]);
            }
        }
    }

    #[test]
    fn lambda0_policy_t0_overrides_feedback() {
        let obj = identity_quadratic(2);
        let config = SolverConfig {
            t0: 7.5,
            lambda0: Lambda0Policy::T0,
            max_iter: 1,
            ..SolverConfig::new(2.0)
        };
        let y0 = DVector::from_vec(vec![4.0, 0.0]);
        let history = run_peas(&obj, &config, FeedbackKind::Gradient, &y0).unwrap();
        assert_eq!(history.records[0].lambda, Some(7.5));
    }

    #[test]
    fn strongly_convex_run_terminates_near_minimum() {
        let spec = ProblemSpec::new("quadratic", 8, 7);
        let obj = make_problem(&spec).unwrap();
        let config = SolverConfig {
            max_iter: 5000,
            ..SolverConfig::new(2.0)
        };
        let history = run_peas(&obj, &config, FeedbackKind::Velocity, &default_start(&spec)).unwrap();
        assert!(matches!(
            history.termination,
            Termination::VelocityZero | Termination::GradZero
        ));
        let grad_tol = 1e-13 * history.scale;
        assert!(history.final_record().grad_norm <= 10.0 * grad_tol || {
            // VelocityZero can fire first; the iterate is then a prox fixed
            // point to tolerance, whose gradient is still tiny.
            history.final_record().grad_norm <= 1e-9 * history.scale
        });
    }

    #[test]
    fn degenerate_problem_converges_into_argmin() {
        let spec = ProblemSpec::new("degenerate_quadratic", 6, 11);
        let obj = make_problem(&spec).unwrap();
        let config = SolverConfig {
            max_iter: 5000,
            ..SolverConfig::new(2.0)
        };
        let history = run_peas(&obj, &config, FeedbackKind::Velocity, &default_start(&spec)).unwrap();
        assert!(matches!(
            history.termination,
            Termination::VelocityZero | Termination::GradZero
        ));
        assert!(history.final_record().grad_norm <= 1e-9 * history.scale);
    }

    #[test]
    fn lambda_cap_triggers_overflow_termination() {
        let spec = ProblemSpec::new("quadratic", 4, 13);
        let obj = make_problem(&spec).unwrap();
        let config = SolverConfig {
            lambda_cap: Some(1.0),
            max_iter: 5000,
            ..SolverConfig::new(2.0)
        };
        let history = run_peas(&obj, &config, FeedbackKind::Velocity, &default_start(&spec)).unwrap();
        assert_eq!(history.termination, Termination::LambdaOverflow);
        assert!(history.lambdas().iter().all(|&l| l <= 1.0));
    }

    #[test]
    fn inertial_first_step_replaces_x() {
        let spec = ProblemSpec::new("quadratic", 4, 17);
        let obj = make_problem(&spec).unwrap();
        let config = SolverConfig {
            max_iter: 5,
            ..SolverConfig::new(2.0)
        };
        let history = run_peas_inertial(&obj, &config, None, &default_start(&spec)).unwrap();
        // weight λ_0/τ_1 = 1, so x_1 = y_1 exactly
        assert_eq!(history.records[1].x.as_ref().unwrap(), &history.records[1].y);
    }

    #[test]
    fn averaged_oracle_hand_examples() {
        let mk = |lambdas: &[f64], ys: &[f64]| IterateHistory {
            records: (0..ys.len())
                .map(|k| IterateRecord {
                    k,
                    lambda: lambdas.get(k).copied(),
                    tau: lambdas[..k].iter().sum(),
                    y: DVector::from_vec(vec![ys[k]]),
                    x: None,
                    value_gap: None,
                    grad_norm: 1.0,
                    prox_residual: 0.0,
                })
                .collect(),
            config: SolverConfig::default(),
            feedback: FeedbackKind::Velocity,
            problem: None,
            termination: Termination::MaxIter,
            scale: 1.0,
        };

        // single step: x_1 = y_1
        let h = mk(&[2.0], &[5.0, 3.0]);
        assert_eq!(averaged_iterate_oracle(&h, 0).unwrap()[0], 3.0);

        // equal λ, constant y: average of a constant
        let h = mk(&[1.0, 1.0, 1.0], &[4.0, 4.0, 4.0, 4.0]);
        assert_eq!(averaged_iterate_oracle(&h, 2).unwrap()[0], 4.0);

        // equal-weight mean: λ = (1,1), y_1 = 2, y_2 = 4 → x_2 = 3
        let h = mk(&[1.0, 1.0], &[0.0, 2.0, 4.0]);
        assert_relative_eq!(averaged_iterate_oracle(&h, 1).unwrap()[0], 3.0);

        // λ = (1,2,1), y_{1..3} = (0,3,8): x_3 = (0 + 6 + 8)/4 = 3.5
        let h = mk(&[1.0, 2.0, 1.0], &[9.0, 0.0, 3.0, 8.0]);
        assert_relative_eq!(averaged_iterate_oracle(&h, 2).unwrap()[0], 3.5);

        // out of range
        assert!(averaged_iterate_oracle(&h, 3).is_err());
    }

    #[test]
    fn recursive_average_matches_oracle() {
        let spec = ProblemSpec::new("quadratic", 6, 19);
        let obj = make_problem(&spec).unwrap();
        let config = SolverConfig {
            max_iter: 120,
            ..SolverConfig::new(2.0)
        };
        let history = run_peas_inertial(&obj, &config, None, &default_start(&spec)).unwrap();
        for k in 0..history.records.len() - 1 {
            let oracle = averaged_iterate_oracle(&history, k).unwrap();
            let recursive = history.records[k + 1].x.as_ref().unwrap();
            let rel = (recursive - &oracle).norm() / (1.0 + oracle.norm());
            assert!(rel <= 1e-12, "k={k}: relative deviation {rel:.3e}");
        }
    }

    #[test]
    fn huber_regression_runs_on_the_iterative_prox() {
        // C¹ but not C²: the inner Newton works off a finite-difference
        // Hessian with kinks in the gradient.
        let spec = ProblemSpec::new("huber_regression", 4, 21);
        let obj = make_problem(&spec).unwrap();
        assert!(!obj.has_analytic_prox());
        let config = SolverConfig {
            max_iter: 60,
            ..SolverConfig::new(2.0)
        };
        let history = run_peas(&obj, &config, FeedbackKind::Velocity, &default_start(&spec)).unwrap();
        assert!(history.records.len() >= 5);
        assert!(matches!(
            history.termination,
            Termination::GradZero | Termination::VelocityZero
        ));
        let slack = 1e-10 * history.scale;
        let values: Vec<f64> = history.records.iter().map(|r| obj.value(&r.y)).collect();
        for w in values.windows(2) {
            assert!(w[1] <= w[0] + slack);
        }
        // every accepted step was certified by its residual
        for pair in history.records.windows(2) {
            let Some(lambda) = pair[0].lambda else { continue };
            let tol = inner_tolerance(pair[0].grad_norm, lambda, history.scale);
            assert!(pair[1].prox_residual <= tol * (1.0 + 1e-12));
        }
    }

    #[test]
    fn one_dimensional_problems_construct_and_run() {
        for name in ["quadratic", "least_squares", "degenerate_quadratic"] {
            if name == "degenerate_quadratic" {
                // needs a nontrivial positive part; skip the 1-d case
                continue;
            }
            let spec = ProblemSpec::new(name, 1, 5);
            let obj = make_problem(&spec).unwrap();
            let config = SolverConfig {
                max_iter: 50,
                ..SolverConfig::new(2.0)
            };
            let history =
                run_peas(&obj, &config, FeedbackKind::Gradient, &default_start(&spec)).unwrap();
            assert!(history.final_record().grad_norm < history.records[0].grad_norm);
        }
    }

    #[test]
    fn starting_at_the_minimizer_stops_immediately() {
        let spec = ProblemSpec::new("quadratic", 4, 3);
        let obj = make_problem(&spec).unwrap();
        let y0 = obj.minimizer().unwrap().clone();
        let config = SolverConfig {
            max_iter: 50,
            ..SolverConfig::new(2.0)
        };
        let history = run_peas(&obj, &config, FeedbackKind::Gradient, &y0).unwrap();
        assert_eq!(history.termination, Termination::GradZero);
        assert_eq!(history.records.len(), 1);
        assert_eq!(history.records[0].lambda, None);
    }

    #[test]
    fn invalid_configs_are_rejected() {
        assert!(SolverConfig::new(0.5).validate().is_err());
        let mut c = SolverConfig::new(1.0);
        c.max_iter = 0;
        assert!(c.validate().is_err());
        let mut c = SolverConfig::new(1.0);
        c.stop_grad_tol = Some(0.0);
        assert!(c.validate().is_err());
    }
}

//! Continuous-time dynamics: plain and perturbed steepest descent, the
//! closed-loop rescaled descent with velocity or gradient feedback coupled
//! to the averaging equation, the equivalent second-order inertial system,
//! and the Lin-Jordan comparison system.
//!
//! Shared structure of the closed-loop systems:
//!
//! ```text
//! ẏ(t) + τ̇(t) ∇f(y(t)) = 0
//! ẋ(t) + γ (τ̇/τ) (x − y) = 0            (averaging)
//! τ̇(t) = τ^{(q−1)/q} λ^{1/q},  τ(t0) = (t0/q)^q
//! λ^p 𝒢^{p−1} = 1         with 𝒢 = ‖ẏ‖ (velocity) or ‖∇f(y)‖ (gradient)
//! ```
//!
//! For velocity feedback the algebraic constraint is solved in closed form
//! using `‖ẏ‖ = τ̇ ‖∇f(y)‖`, giving
//! `λ = τ^{−(q−1)(p−1)/(pq+p−1)} ‖∇f(y)‖^{−(p−1)q/(pq+p−1)}`.

pub mod averaging;
pub mod rk;
mod systems;

pub use averaging::{averaging_jensen_gap, averaging_measure_mass, averaging_quadrature_oracle};
pub use rk::IntegratorOptions;
pub use systems::{
    integrate_closed_loop, integrate_lin_jordan, integrate_second_order,
    integrate_steepest_descent, inertial_coefficients, open_loop_tau, LinJordanConfig,
};

use nalgebra::DVector;
use serde::{Deserialize, Serialize};

use crate::analysis::{fit_power_law, FeedbackKind, RateFit};
use crate::objectives::Objective;
use crate::{Error, Result};

/// Geometric factor of the sampling grid: trajectories record state at
/// `t0 · factor^j`, independent of the internal integrator steps, so
/// log-log rate fits see uniformly spaced abscissae.
pub const GRID_FACTOR: f64 = 1.05;

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct DynamicsConfig {
    pub p: f64,
    pub q: f64,
    /// Averaging strength γ ≥ 1; γ > 1 for the main rate regime, γ = 1 is
    /// the logarithmic regime.
    pub gamma: f64,
    pub t0: f64,
    pub t_end: f64,
    pub rel_tol: f64,
    pub abs_tol: f64,
    /// Integration ends early once ‖∇f(y)‖ falls below this: the closed-loop
    /// constraint is singular at the optimum (λ → ∞ for p > 1).
    pub stop_grad_tol: f64,
    pub max_steps: usize,
}

impl Default for DynamicsConfig {
    fn default() -> Self {
        DynamicsConfig {
            p: 1.0,
            q: 1.0,
            gamma: 2.0,
            t0: 1.0,
            t_end: 50.0,
            rel_tol: 1e-10,
            abs_tol: 1e-12,
            stop_grad_tol: 1e-12,
            max_steps: 2_000_000,
        }
    }
}

impl DynamicsConfig {
    pub fn new(p: f64, q: f64, gamma: f64) -> Self {
        DynamicsConfig {
            p,
            q,
            gamma,
            ..Default::default()
        }
    }

    pub fn validate(&self, feedback: Option<FeedbackKind>) -> Result<()> {
        if !(self.p >= 1.0) {
            return Err(Error::InvalidConfig(format!("p must be >= 1, got {}", self.p)));
        }
        if !(self.q > 0.0) {
            return Err(Error::InvalidConfig(format!("q must be positive, got {}", self.q)));
        }
        if feedback == Some(FeedbackKind::Gradient) && self.q < 0.5 {
            return Err(Error::InvalidConfig(format!(
                "gradient feedback requires q >= 1/2, got q = {}",
                self.q
            )));
        }
        if !(self.gamma >= 1.0) {
            return Err(Error::InvalidConfig(format!(
                "gamma must be >= 1, got {}",
                self.gamma
            )));
        }
        if !(self.t0 > 0.0) {
            return Err(Error::InvalidConfig(format!("t0 must be positive, got {}", self.t0)));
        }
        if !(self.t_end > self.t0) {
            return Err(Error::InvalidConfig(format!(
                "t_end ({}) must exceed t0 ({})",
                self.t_end, self.t0
            )));
        }
        for (name, v) in [
            ("rel_tol", self.rel_tol),
            ("abs_tol", self.abs_tol),
            ("stop_grad_tol", self.stop_grad_tol),
        ] {
            if !(v > 0.0) {
                return Err(Error::InvalidConfig(format!("{name} must be positive, got {v}")));
            }
        }
        if self.max_steps == 0 {
            return Err(Error::InvalidConfig("max_steps must be >= 1".into()));
        }
        Ok(())
    }

    /// τ at the start of integration: (t0/q)^q.
    pub fn tau_initial(&self) -> f64 {
        (self.t0 / self.q).powf(self.q)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum SystemKind {
    Sd,
    PerturbedSd,
    VelocityFeedback,
    GradientFeedback,
    SecondOrderInertial,
    LinJordan,
}

/// One recorded state. In addition to the raw state `(t, y, x, τ, λ)` the
/// sample carries the algebraic derivatives the quadrature oracles need:
/// τ̇, τ̈, ẏ and ÿ, all evaluated from the closed-loop relations at the
/// sample point.
#[derive(Debug, Clone)]
pub struct Sample {
    pub t: f64,
    pub y: DVector<f64>,
    pub x: DVector<f64>,
    pub tau: f64,
    pub lambda: f64,
    pub tau_dot: f64,
    pub tau_ddot: f64,
    pub ydot: DVector<f64>,
    pub yddot: DVector<f64>,
    pub value_gap_y: Option<f64>,
    pub value_gap_x: Option<f64>,
    /// ‖∇f(y)‖ for the descent systems, ‖∇f(x)‖ for Lin-Jordan (the
    /// quantity its feedback controls).
    pub grad_norm: f64,
}

#[derive(Debug, Clone)]
pub struct Trajectory {
    pub samples: Vec<Sample>,
    pub system: SystemKind,
    pub config: DynamicsConfig,
    /// 1 + |f(start)|.
    pub scale: f64,
    /// True when integration ended at the gradient floor rather than t_end.
    pub stopped_at_gradient_floor: bool,
}

impl Trajectory {
    pub fn times(&self) -> Vec<f64> {
        self.samples.iter().map(|s| s.t).collect()
    }

    pub fn taus(&self) -> Vec<f64> {
        self.samples.iter().map(|s| s.tau).collect()
    }

    pub fn grad_norms(&self) -> Vec<f64> {
        self.samples.iter().map(|s| s.grad_norm).collect()
    }

    pub fn value_gaps_y(&self) -> Option<Vec<f64>> {
        self.samples.iter().map(|s| s.value_gap_y).collect()
    }

    pub fn value_gaps_x(&self) -> Option<Vec<f64>> {
        self.samples.iter().map(|s| s.value_gap_x).collect()
    }

    pub fn first(&self) -> &Sample {
        self.samples.first().expect("trajectory is never empty")
    }

    pub fn last(&self) -> &Sample {
        self.samples.last().expect("trajectory is never empty")
    }

    pub fn span(&self) -> (f64, f64) {
        (self.first().t, self.last().t)
    }
}

/// λ from the gradient-feedback constraint `λ^p ‖∇f(y)‖^{p−1} = 1`.
pub fn lambda_gradient_feedback(grad_norm: f64, p: f64) -> Result<f64> {
    if p == 1.0 {
        return Ok(1.0);
    }
    if !(grad_norm > 0.0) {
        return Err(Error::FeedbackUndefined(format!(
            "gradient feedback needs a positive gradient norm, got {grad_norm}"
        )));
    }
    Ok(grad_norm.powf(-(p - 1.0) / p))
}

/// λ from the velocity-feedback constraint `λ^p ‖ẏ‖^{p−1} = 1`, solved in
/// closed form through `‖ẏ‖ = τ̇‖∇f(y)‖` and `τ̇ = τ^{(q−1)/q} λ^{1/q}`.
pub fn lambda_velocity_feedback(tau: f64, grad_norm: f64, p: f64, q: f64) -> Result<f64> {
    if p == 1.0 {
        return Ok(1.0);
    }
    if !(tau > 0.0) || !(grad_norm > 0.0) {
        return Err(Error::FeedbackUndefined(format!(
            "velocity feedback needs tau > 0 and a positive gradient norm, got tau={tau}, grad={grad_norm}"
        )));
    }
    let denom = p * q + p - 1.0;
    let tau_exp = (q - 1.0) * (p - 1.0) / denom;
    let grad_exp = (p - 1.0) * q / denom;
    Ok(tau.powf(-tau_exp) * grad_norm.powf(-grad_exp))
}

/// `τ̇ = τ^{(q−1)/q} λ^{1/q}`.
pub fn tau_dot(tau: f64, lambda: f64, q: f64) -> f64 {
    tau.powf((q - 1.0) / q) * lambda.powf(1.0 / q)
}

pub(crate) fn lambda_for(feedback: FeedbackKind, tau: f64, grad_norm: f64, p: f64, q: f64) -> f64 {
    // The integration stops at the gradient floor before the norm can reach
    // zero; the clamp only guards transient rhs evaluations.
    let gn = grad_norm.max(1e-300);
    match feedback {
        FeedbackKind::Velocity => lambda_velocity_feedback(tau, gn, p, q).expect("guarded inputs"),
        FeedbackKind::Gradient => lambda_gradient_feedback(gn, p).expect("guarded inputs"),
    }
}

/// d(ln λ)/dt from the chain rule through the closed-form λ.
pub(crate) fn lambda_log_derivative(
    feedback: FeedbackKind,
    tau: f64,
    tau_dot: f64,
    grad_norm: f64,
    grad_norm_dot: f64,
    p: f64,
    q: f64,
) -> f64 {
    if p == 1.0 {
        return 0.0;
    }
    match feedback {
        FeedbackKind::Velocity => {
            let denom = p * q + p - 1.0;
            let tau_exp = (q - 1.0) * (p - 1.0) / denom;
            let grad_exp = (p - 1.0) * q / denom;
            -tau_exp * tau_dot / tau - grad_exp * grad_norm_dot / grad_norm
        }
        FeedbackKind::Gradient => -(p - 1.0) / p * grad_norm_dot / grad_norm,
    }
}

/// `τ̈` by analytic differentiation of `τ̇ = τ^{(q−1)/q} λ^{1/q}`.
pub(crate) fn tau_ddot(tau: f64, tau_dot: f64, lambda: f64, lambda_log_dot: f64, q: f64) -> f64 {
    let lam_q = lambda.powf(1.0 / q);
    (q - 1.0) / q * tau.powf(-1.0 / q) * tau_dot * lam_q
        + tau.powf((q - 1.0) / q) * lam_q / q * lambda_log_dot
}

/// Directional curvature `∇²f(y)·v̂` for a unit direction, from a forward
/// difference of the gradient with step `1e−6 (1 + ‖y‖)`.
pub(crate) fn hessian_unit_vec(
    obj: &Objective,
    y: &DVector<f64>,
    grad_at_y: &DVector<f64>,
    unit_dir: &DVector<f64>,
) -> DVector<f64> {
    let h = 1e-6 * (1.0 + y.norm());
    (obj.gradient(&(y + unit_dir * h)) - grad_at_y) / h
}

/// The geometric recording grid. The first sample (at t0) is recorded by the
/// drivers directly; the grid yields the subsequent times.
pub(crate) struct SampleGrid {
    next: f64,
    t_end: f64,
}

impl SampleGrid {
    pub(crate) fn new(t0: f64, t_end: f64) -> Self {
        let next = if t0 > 0.0 {
            t0 * GRID_FACTOR
        } else {
            // Degenerate origin (steepest descent, Lin-Jordan start at 0):
            // open the grid a few decades below the horizon.
            t_end * 1e-6
        };
        SampleGrid { next, t_end }
    }

    /// Times in `(_, t_new]` still due for recording.
    pub(crate) fn due(&mut self, t_new: f64) -> Vec<f64> {
        let mut times = Vec::new();
        while self.next <= t_new && self.next <= self.t_end {
            times.push(self.next);
            self.next *= GRID_FACTOR;
        }
        times
    }
}

/// Fits the growth exponent of τ(t) against (t − t0) over the trajectory
/// tail. The returned fit's `exponent` is the positive growth power, to be
/// compared against `1 + q − 1/p` (velocity) or `p·q` (gradient).
pub fn tau_lower_bound_check(trajectory: &Trajectory) -> Result<RateFit> {
    let t0 = trajectory.config.t0;
    let usable: Vec<&Sample> = trajectory
        .samples
        .iter()
        .filter(|s| s.t >= 2.0 * t0)
        .collect();
    if usable.len() < 50 {
        return Err(Error::InsufficientData {
            usable: usable.len(),
            needed: 50,
        });
    }
    let abscissa: Vec<f64> = usable.iter().map(|s| s.t - t0).collect();
    let tau: Vec<f64> = usable.iter().map(|s| s.tau).collect();
    let mut fit = fit_power_law(&abscissa, &tau, 0.0)?;
    fit.exponent = -fit.exponent; // growth, not decay
    Ok(fit)
}

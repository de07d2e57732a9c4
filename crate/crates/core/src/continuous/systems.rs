//! Drivers for the individual continuous systems. Each one assembles a state
//! vector, integrates it with the embedded RK pair and records samples on
//! the geometric grid, stopping early at the gradient floor where the
//! closed-loop constraint becomes singular.

use nalgebra::DVector;

use crate::analysis::FeedbackKind;
use crate::objectives::Objective;
use crate::{tolerance_scale, Error, Result};

use super::rk::{integrate_dopri5, Control, IntegratorOptions};
use super::{
    hessian_unit_vec, lambda_for, lambda_log_derivative, tau_ddot, tau_dot, DynamicsConfig,
    Sample, SampleGrid, SystemKind, Trajectory,
};

/// Viscous damping and gradient coefficients of the second-order inertial
/// form: `((1+γ)τ̇² − ττ̈)/(ττ̇)` and `γτ̇²/τ`.
pub fn inertial_coefficients(gamma: f64, tau: f64, tau_dot: f64, tau_ddot: f64) -> (f64, f64) {
    let damping = ((1.0 + gamma) * tau_dot * tau_dot - tau * tau_ddot) / (tau * tau_dot);
    let gradient_coefficient = gamma * tau_dot * tau_dot / tau;
    (damping, gradient_coefficient)
}

/// Open-loop time scale `τ(t) = (t/q)^q` with its first two derivatives
/// (the p = 1 case, where λ ≡ 1).
pub fn open_loop_tau(t: f64, q: f64) -> (f64, f64, f64) {
    let base = t / q;
    (
        base.powf(q),
        base.powf(q - 1.0),
        (q - 1.0) / q * base.powf(q - 2.0),
    )
}

fn integrator_options(config: &DynamicsConfig) -> IntegratorOptions {
    IntegratorOptions {
        rel_tol: config.rel_tol,
        abs_tol: config.abs_tol,
        max_steps: config.max_steps,
        initial_step: None,
    }
}

/// Gradient-floor stop: the tolerance and how to read ‖∇f‖ off the state.
type StopCheck<'a> = (f64, &'a dyn Fn(&DVector<f64>) -> f64);

/// Shared integration loop: records the initial state, samples the grid via
/// dense output, applies the optional gradient-floor stop and guarantees a
/// final sample at the end of the run.
fn drive(
    rhs: &mut dyn FnMut(f64, &DVector<f64>) -> DVector<f64>,
    t0: f64,
    z0: &DVector<f64>,
    t_end: f64,
    options: &IntegratorOptions,
    make_sample: &dyn Fn(f64, &DVector<f64>) -> Sample,
    stop: Option<StopCheck<'_>>,
) -> Result<(Vec<Sample>, bool)> {
    let mut samples = vec![make_sample(t0, z0)];
    let mut grid = SampleGrid::new(t0, t_end);

    let outcome = integrate_dopri5(rhs, t0, z0, t_end, options, &mut |t_new, z_new, dense| {
        for ts in grid.due(t_new) {
            let zs = if ts >= t_new {
                z_new.clone()
            } else {
                dense.eval(ts)
            };
            samples.push(make_sample(ts, &zs));
        }
        if let Some((tol, grad_norm_of)) = &stop {
            if grad_norm_of(z_new) < *tol {
                let already = samples
                    .last()
                    .is_some_and(|s| (t_new - s.t).abs() <= 1e-12 * t_new.abs().max(1.0));
                if !already {
                    samples.push(make_sample(t_new, z_new));
                }
                return Control::Stop;
            }
        }
        Control::Continue
    })?;

    if !outcome.stopped_early {
        let already = samples
            .last()
            .is_some_and(|s| (outcome.t_final - s.t).abs() <= 1e-12 * t_end.abs().max(1.0));
        if !already {
            samples.push(make_sample(outcome.t_final, &outcome.y_final));
        }
    }
    Ok((samples, outcome.stopped_early))
}

/// Steepest descent `ż = −∇f(z) + g(t)` from t = 0, with an optional
/// perturbation `g`. The two integrability conditions on `g` (summable norm,
/// summable t‖g‖²) are the caller's responsibility.
pub fn integrate_steepest_descent(
    obj: &Objective,
    y0: &DVector<f64>,
    t_end: f64,
    perturbation: Option<&(dyn Fn(f64) -> DVector<f64> + Sync)>,
    options: &IntegratorOptions,
) -> Result<Trajectory> {
    assert!(t_end > 0.0, "t_end must be positive");
    let scale = tolerance_scale(obj.value(y0));
    let system = if perturbation.is_some() {
        SystemKind::PerturbedSd
    } else {
        SystemKind::Sd
    };

    let eval_rhs = |t: f64, z: &DVector<f64>| -> DVector<f64> {
        let mut dz = -obj.gradient(z);
        if let Some(g) = perturbation {
            dz += g(t);
        }
        dz
    };
    let mut rhs = |t: f64, z: &DVector<f64>| eval_rhs(t, z);

    let make_sample = |t: f64, z: &DVector<f64>| -> Sample {
        let g = obj.gradient(z);
        let ydot = eval_rhs(t, z);
        // Total time derivative of ż by a forward difference along the flow.
        let h = 1e-6 * (1.0 + t);
        let yddot = (eval_rhs(t + h, &(z + &ydot * h)) - &ydot) / h;
        Sample {
            t,
            y: z.clone(),
            x: z.clone(),
            tau: t, // regular time: the open-loop p = q = 1 labelling
            lambda: 1.0,
            tau_dot: 1.0,
            tau_ddot: 0.0,
            ydot,
            yddot,
            value_gap_y: obj.value_gap(z),
            value_gap_x: obj.value_gap(z),
            grad_norm: g.norm(),
        }
    };

    let (samples, stopped) = drive(&mut rhs, 0.0, y0, t_end, options, &make_sample, None)?;
    Ok(Trajectory {
        samples,
        system,
        config: DynamicsConfig {
            p: 1.0,
            q: 1.0,
            gamma: 1.0,
            t0: 0.0,
            t_end,
            rel_tol: options.rel_tol,
            abs_tol: options.abs_tol,
            stop_grad_tol: 0.0,
            max_steps: options.max_steps,
        },
        scale,
        stopped_at_gradient_floor: stopped,
    })
}

/// The coupled closed-loop system: rescaled steepest descent in `y`, the
/// averaging equation in `x` and the accumulated time scale τ, with λ given
/// algebraically by the chosen feedback. `x0` defaults to `y0` (the Cauchy
/// data under which x is the μ_t-average of y).
pub fn integrate_closed_loop(
    obj: &Objective,
    feedback: FeedbackKind,
    config: &DynamicsConfig,
    y0: &DVector<f64>,
    x0: Option<&DVector<f64>>,
) -> Result<Trajectory> {
    config.validate(Some(feedback))?;
    let n = obj.dimension();
    let (p, q, gamma) = (config.p, config.q, config.gamma);
    let scale = tolerance_scale(obj.value(y0));

    let mut z0 = DVector::zeros(2 * n + 1);
    z0.rows_mut(0, n).copy_from(y0);
    z0.rows_mut(n, n).copy_from(x0.unwrap_or(y0));
    z0[2 * n] = config.tau_initial();

    let mut rhs = |_t: f64, z: &DVector<f64>| -> DVector<f64> {
        let y = z.rows(0, n).into_owned();
        let x = z.rows(n, n).into_owned();
        let tau = z[2 * n].max(1e-300);
        let g = obj.gradient(&y);
        let lambda = lambda_for(feedback, tau, g.norm(), p, q);
        let td = tau_dot(tau, lambda, q);
        let mut dz = DVector::zeros(2 * n + 1);
        dz.rows_mut(0, n).copy_from(&(-&g * td));
        dz.rows_mut(n, n).copy_from(&((&y - &x) * (gamma * td / tau)));
        dz[2 * n] = td;
        dz
    };

    let make_sample = |t: f64, z: &DVector<f64>| -> Sample {
        let y = z.rows(0, n).into_owned();
        let x = z.rows(n, n).into_owned();
        let tau = z[2 * n];
        closed_loop_sample(obj, feedback, p, q, t, y, x, tau, None)
    };

    let grad_norm_of = |z: &DVector<f64>| obj.gradient(&z.rows(0, n).into_owned()).norm();
    let (samples, stopped) = drive(
        &mut rhs,
        config.t0,
        &z0,
        config.t_end,
        &integrator_options(config),
        &make_sample,
        Some((config.stop_grad_tol, &grad_norm_of)),
    )?;

    Ok(Trajectory {
        samples,
        system: match feedback {
            FeedbackKind::Velocity => SystemKind::VelocityFeedback,
            FeedbackKind::Gradient => SystemKind::GradientFeedback,
        },
        config: config.clone(),
        scale,
        stopped_at_gradient_floor: stopped,
    })
}

/// Builds a fully decorated sample from (t, y, x, τ). When `tau_dot_state`
/// is given (second-order form integrates τ̇ as a state) it is used as τ̇;
/// otherwise τ̇ comes from the algebraic relation.
#[allow(clippy::too_many_arguments)]
fn closed_loop_sample(
    obj: &Objective,
    feedback: FeedbackKind,
    p: f64,
    q: f64,
    t: f64,
    y: DVector<f64>,
    x: DVector<f64>,
    tau: f64,
    tau_dot_state: Option<f64>,
) -> Sample {
    let g = obj.gradient(&y);
    let gn = g.norm();
    let lambda = lambda_for(feedback, tau, gn, p, q);
    let td = tau_dot_state.unwrap_or_else(|| tau_dot(tau, lambda, q));
    let ydot = -&g * td;

    let (gn_dot, curvature_term) = if gn > 0.0 {
        let ghat = &g / gn;
        let h_ghat = hessian_unit_vec(obj, &y, &g, &ghat);
        // d/dt ‖∇f(y)‖ = ⟨ĝ, H ẏ⟩ with ẏ = −τ̇ g
        (-td * gn * ghat.dot(&h_ghat), h_ghat * (td * td * gn))
    } else {
        (0.0, DVector::zeros(y.len()))
    };
    let llog = lambda_log_derivative(feedback, tau, td, gn.max(1e-300), gn_dot, p, q);
    let tdd = tau_ddot(tau, td, lambda, llog, q);
    let yddot = -&g * tdd + curvature_term;

    Sample {
        t,
        value_gap_y: obj.value_gap(&y),
        value_gap_x: obj.value_gap(&x),
        y,
        x,
        tau,
        lambda,
        tau_dot: td,
        tau_ddot: tdd,
        ydot,
        yddot,
        grad_norm: gn,
    }
}

/// The equivalent second-order inertial form
/// `ẍ + ((1+γ)τ̇² − ττ̈)/(ττ̇) ẋ + γ(τ̇²/τ) ∇f(x + (τ/(γτ̇)) ẋ) = 0`,
/// integrated with state (x, ẋ, τ, τ̇); τ̈ comes from analytic
/// differentiation of the closed-loop relation, with d‖∇f‖/dt formed from a
/// finite-difference Hessian product. `xdot0` defaults to zero, which makes
/// y(t0) = x(t0) and matches the first-order Cauchy data.
pub fn integrate_second_order(
    obj: &Objective,
    feedback: FeedbackKind,
    config: &DynamicsConfig,
    x0: &DVector<f64>,
    xdot0: Option<&DVector<f64>>,
) -> Result<Trajectory> {
    config.validate(Some(feedback))?;
    let n = obj.dimension();
    let (p, q, gamma) = (config.p, config.q, config.gamma);
    let scale = tolerance_scale(obj.value(x0));

    let tau0 = config.tau_initial();
    let v0 = xdot0.cloned().unwrap_or_else(|| DVector::zeros(n));
    // τ̇(t0) must satisfy the algebraic constraint at the initial point.
    // y0 depends on τ̇0 when ẋ0 ≠ 0, so resolve by a short fixed point.
    let mut w0 = {
        let g0 = obj.gradient(x0).norm();
        tau_dot(tau0, lambda_for(feedback, tau0, g0, p, q), q)
    };
    if v0.norm() > 0.0 {
        for _ in 0..50 {
            let y0 = x0 + &v0 * (tau0 / (gamma * w0));
            let g0 = obj.gradient(&y0).norm();
            let next = tau_dot(tau0, lambda_for(feedback, tau0, g0, p, q), q);
            if (next - w0).abs() <= 1e-14 * w0.abs() {
                w0 = next;
                break;
            }
            w0 = next;
        }
    }

    let mut z0 = DVector::zeros(2 * n + 2);
    z0.rows_mut(0, n).copy_from(x0);
    z0.rows_mut(n, n).copy_from(&v0);
    z0[2 * n] = tau0;
    z0[2 * n + 1] = w0;

    let mut rhs = |_t: f64, z: &DVector<f64>| -> DVector<f64> {
        let x = z.rows(0, n).into_owned();
        let v = z.rows(n, n).into_owned();
        let tau = z[2 * n].max(1e-300);
        let w = z[2 * n + 1].max(1e-300);

        let y = &x + &v * (tau / (gamma * w));
        let g = obj.gradient(&y);
        let gn = g.norm();
        let lambda = lambda_for(feedback, tau, gn, p, q);

        let gn_dot = if gn > 0.0 {
            let ghat = &g / gn;
            let h_ghat = hessian_unit_vec(obj, &y, &g, &ghat);
            -w * gn * ghat.dot(&h_ghat)
        } else {
            0.0
        };
        let llog = lambda_log_derivative(feedback, tau, w, gn.max(1e-300), gn_dot, p, q);
        let tdd = tau_ddot(tau, w, lambda, llog, q);

        let (damping, grad_coeff) = inertial_coefficients(gamma, tau, w, tdd);
        let vdot = -&v * damping - &g * grad_coeff;

        let mut dz = DVector::zeros(2 * n + 2);
        dz.rows_mut(0, n).copy_from(&v);
        dz.rows_mut(n, n).copy_from(&vdot);
        dz[2 * n] = w;
        dz[2 * n + 1] = tdd;
        dz
    };

    let y_of_state = |z: &DVector<f64>| -> DVector<f64> {
        let x = z.rows(0, n).into_owned();
        let v = z.rows(n, n).into_owned();
        let tau = z[2 * n];
        let w = z[2 * n + 1];
        &x + &v * (tau / (gamma * w))
    };

    let make_sample = |t: f64, z: &DVector<f64>| -> Sample {
        let x = z.rows(0, n).into_owned();
        let y = y_of_state(z);
        closed_loop_sample(obj, feedback, p, q, t, y, x, z[2 * n], Some(z[2 * n + 1]))
    };

    let grad_norm_of = |z: &DVector<f64>| obj.gradient(&y_of_state(z)).norm();
    let (samples, stopped) = drive(
        &mut rhs,
        config.t0,
        &z0,
        config.t_end,
        &integrator_options(config),
        &make_sample,
        Some((config.stop_grad_tol, &grad_norm_of)),
    )?;

    Ok(Trajectory {
        samples,
        system: SystemKind::SecondOrderInertial,
        config: config.clone(),
        scale,
        stopped_at_gradient_floor: stopped,
    })
}

/// Parameters of the Lin-Jordan comparison system. Time starts at 0 with
/// τ(0) = c²/4 and the feedback constraint is `λ^p ‖∇f(x)‖^{p−1} = θ`.
#[derive(Debug, Clone)]
pub struct LinJordanConfig {
    pub p: f64,
    pub c: f64,
    pub theta: f64,
    pub t_end: f64,
    pub rel_tol: f64,
    pub abs_tol: f64,
    pub stop_grad_tol: f64,
    pub max_steps: usize,
}

impl Default for LinJordanConfig {
    fn default() -> Self {
        LinJordanConfig {
            p: 2.0,
            c: 2.0,
            theta: 0.5,
            t_end: 50.0,
            rel_tol: 1e-10,
            abs_tol: 1e-12,
            stop_grad_tol: 1e-12,
            max_steps: 2_000_000,
        }
    }
}

impl LinJordanConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.p >= 1.0) {
            return Err(Error::InvalidConfig(format!("p must be >= 1, got {}", self.p)));
        }
        if !(self.c > 0.0) {
            return Err(Error::InvalidConfig(format!("c must be positive, got {}", self.c)));
        }
        if !(self.theta > 0.0 && self.theta < 1.0) {
            return Err(Error::InvalidConfig(format!(
                "theta must lie in (0,1), got {}",
                self.theta
            )));
        }
        if !(self.t_end > 0.0) {
            return Err(Error::InvalidConfig(format!(
                "t_end must be positive, got {}",
                self.t_end
            )));
        }
        Ok(())
    }

    /// λ solving `λ^p g^{p−1} = θ`.
    pub fn lambda(&self, grad_norm: f64) -> f64 {
        if self.p == 1.0 {
            self.theta
        } else {
            (self.theta / grad_norm.max(1e-300).powf(self.p - 1.0)).powf(1.0 / self.p)
        }
    }
}

/// The Lin-Jordan first-order system: the gradient is evaluated at `x`
/// (not `y`), and the x-equation carries the extra `(τ̇²/τ)∇f(x)` term.
pub fn integrate_lin_jordan(
    obj: &Objective,
    config: &LinJordanConfig,
    x0: &DVector<f64>,
    y0: &DVector<f64>,
) -> Result<Trajectory> {
    config.validate()?;
    let n = obj.dimension();
    let scale = tolerance_scale(obj.value(x0));
    let tau0 = config.c * config.c / 4.0;

    let mut z0 = DVector::zeros(2 * n + 1);
    z0.rows_mut(0, n).copy_from(y0);
    z0.rows_mut(n, n).copy_from(x0);
    z0[2 * n] = tau0;

    let lj = config.clone();
    let mut rhs = move |_t: f64, z: &DVector<f64>| -> DVector<f64> {
        let y = z.rows(0, n).into_owned();
        let x = z.rows(n, n).into_owned();
        let tau = z[2 * n].max(1e-300);
        let g = obj.gradient(&x);
        let lambda = lj.lambda(g.norm());
        let td = (lambda * tau).sqrt();
        let mut dz = DVector::zeros(2 * n + 1);
        dz.rows_mut(0, n).copy_from(&(-&g * td));
        dz.rows_mut(n, n)
            .copy_from(&((&y - &x) * (td / tau) - &g * (td * td / tau)));
        dz[2 * n] = td;
        dz
    };

    let lj = config.clone();
    let make_sample = move |t: f64, z: &DVector<f64>| -> Sample {
        let y = z.rows(0, n).into_owned();
        let x = z.rows(n, n).into_owned();
        let tau = z[2 * n];
        let g = obj.gradient(&x);
        let gn = g.norm();
        let lambda = lj.lambda(gn);
        let td = (lambda * tau).sqrt();
        let xdot = (&y - &x) * (td / tau) - &g * (td * td / tau);
        let (gn_dot, h_xdot) = {
            let speed = xdot.norm();
            if gn > 0.0 && speed > 0.0 {
                let dir = &xdot / speed;
                let h_dir = hessian_unit_vec(obj, &x, &g, &dir);
                ((g.dot(&h_dir) / gn) * speed, h_dir * speed)
            } else {
                (0.0, DVector::zeros(n))
            }
        };
        let lambda_dot = if lj.p == 1.0 {
            0.0
        } else {
            -lambda * (lj.p - 1.0) / lj.p * gn_dot / gn.max(1e-300)
        };
        let tdd = (lambda_dot * tau + lambda * td) / (2.0 * td);
        Sample {
            t,
            value_gap_y: obj.value_gap(&y),
            value_gap_x: obj.value_gap(&x),
            ydot: -&g * td,
            yddot: -&g * tdd - h_xdot * td,
            y,
            x,
            tau,
            lambda,
            tau_dot: td,
            tau_ddot: tdd,
            grad_norm: gn,
        }
    };

    let grad_norm_of = |z: &DVector<f64>| obj.gradient(&z.rows(n, n).into_owned()).norm();
    let options = IntegratorOptions {
        rel_tol: config.rel_tol,
        abs_tol: config.abs_tol,
        max_steps: config.max_steps,
        initial_step: None,
    };
    let (samples, stopped) = drive(
        &mut rhs,
        0.0,
        &z0,
        config.t_end,
        &options,
        &make_sample,
        Some((config.stop_grad_tol, &grad_norm_of)),
    )?;

    Ok(Trajectory {
        samples,
        system: SystemKind::LinJordan,
        config: DynamicsConfig {
            p: config.p,
            q: 2.0, // the Lin-Jordan τ equation is the q = 2 form
            gamma: 1.0,
            t0: 0.0,
            t_end: config.t_end,
            rel_tol: config.rel_tol,
            abs_tol: config.abs_tol,
            stop_grad_tol: config.stop_grad_tol,
            max_steps: config.max_steps,
        },
        scale,
        stopped_at_gradient_floor: stopped,
    })
}

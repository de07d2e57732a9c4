//! Proximal operator `prox_{λf}(y) = argmin_u f(u) + ‖u − y‖²/(2λ)`.
//!
//! Uses the objective's analytic map when it has one; otherwise solves the
//! strongly convex inner problem by damped Newton (Hessian from finite
//! differences of the gradient) with an Armijo backtracking line search,
//! falling back to gradient steps when a Newton direction is unusable.
//! Every result is certified by the first-order residual
//! `‖∇f(u) + (u − y)/λ‖`.

use nalgebra::{DMatrix, DVector};

use crate::objectives::Objective;
use crate::{Error, Result};

/// Default Newton iteration budget for the inner solve. The inner problem is
/// smooth and strongly convex (modulus at least 1/λ), so this is generous.
pub const DEFAULT_INNER_BUDGET: usize = 200;

/// Outcome of one proximal evaluation.
#[derive(Debug, Clone)]
pub struct ProxResult {
    pub point: DVector<f64>,
    /// Certification residual `‖∇f(u) + (u − y)/λ‖` at the returned point.
    pub residual: f64,
    pub inner_iterations: usize,
    pub used_analytic: bool,
}

/// First-order optimality gap of a candidate prox point `u`.
pub fn prox_fixed_point_gap(obj: &Objective, lambda: f64, y: &DVector<f64>, u: &DVector<f64>) -> f64 {
    (obj.gradient(u) + (u - y) / lambda).norm()
}

/// Inner tolerance policy used by the outer solvers: tight enough that the
/// prox error stays negligible relative to outer progress even when λ grows
/// without bound, floored at the f64 round-off level of the inner gradient.
pub fn inner_tolerance(grad_norm: f64, lambda: f64, scale: f64) -> f64 {
    let target = (1e-3 * grad_norm / lambda).min(1e-10);
    target.max(1e-14 * scale)
}

/// Computes `prox_{λf}(y)` to residual `tol`.
pub fn prox(obj: &Objective, lambda: f64, y: &DVector<f64>, tol: f64) -> Result<ProxResult> {
    assert!(lambda > 0.0, "prox requires lambda > 0, got {lambda}");
    assert!(tol > 0.0, "prox requires tol > 0, got {tol}");
    if let Some(point) = obj.analytic_prox(lambda, y) {
        let residual = prox_fixed_point_gap(obj, lambda, y, &point);
        return Ok(ProxResult {
            point,
            residual,
            inner_iterations: 0,
            used_analytic: true,
        });
    }
    prox_iterative(obj, lambda, y, tol, DEFAULT_INNER_BUDGET)
}

/// Iterative inner solve, also used to cross-check analytic maps in tests.
pub fn prox_iterative(
    obj: &Objective,
    lambda: f64,
    y: &DVector<f64>,
    tol: f64,
    budget: usize,
) -> Result<ProxResult> {
    let inner_value = |u: &DVector<f64>| obj.value(u) + (u - y).norm_squared() / (2.0 * lambda);
    let inner_grad = |u: &DVector<f64>| obj.gradient(u) + (u - y) / lambda;

    // Warm start at the outer iterate.
    let mut u = y.clone();
    let mut grad = inner_grad(&u);
    let mut best = (u.clone(), grad.norm());

    for iteration in 0..budget {
        let residual = grad.norm();
        if residual < best.1 {
            best = (u.clone(), residual);
        }
        if residual <= tol {
            return Ok(ProxResult {
                point: u,
                residual,
                inner_iterations: iteration,
                used_analytic: false,
            });
        }

        let direction = newton_direction(obj, lambda, &u, &grad)
            .unwrap_or_else(|| -grad.clone() * lambda.min(1.0));

        // Armijo backtracking on the inner value. Once the predicted decrease
        // sinks under the round-off of the value itself, fall back to
        // requiring a gradient-norm decrease so Newton can finish the last
        // digits.
        let slope = grad.dot(&direction);
        let direction = if slope < 0.0 { direction } else { -grad.clone() };
        let slope = grad.dot(&direction);
        let phi0 = inner_value(&u);
        let noise_floor = 64.0 * f64::EPSILON * (1.0 + phi0.abs());
        let mut step = 1.0;
        let mut accepted = false;
        let mut fresh_grad: Option<DVector<f64>> = None;
        for _ in 0..60 {
            let candidate = &u + &direction * step;
            let required = -1e-4 * step * slope;
            if required > noise_floor {
                if inner_value(&candidate) <= phi0 - required {
                    u = candidate;
                    accepted = true;
                    break;
                }
                step *= 0.5;
            } else {
                let candidate_grad = inner_grad(&candidate);
                if candidate_grad.norm() < residual {
                    u = candidate;
                    fresh_grad = Some(candidate_grad);
                    accepted = true;
                }
                break;
            }
        }
        if !accepted {
            // Stalled at round-off: no further progress possible.
            break;
        }
        grad = fresh_grad.unwrap_or_else(|| inner_grad(&u));
    }

    let residual = grad.norm();
    if residual < best.1 {
        best = (u, residual);
    }
    if best.1 <= tol {
        return Ok(ProxResult {
            point: best.0,
            residual: best.1,
            inner_iterations: budget,
            used_analytic: false,
        });
    }
    Err(Error::ProxBudgetExceeded {
        budget,
        index: 0,
        best_residual: best.1,
        tol,
    })
}

/// Newton direction for the inner problem: solves
/// `(∇²f(u) + I/λ) d = −∇φ(u)` with the Hessian assembled from forward
/// differences of the objective gradient.
fn newton_direction(
    obj: &Objective,
    lambda: f64,
    u: &DVector<f64>,
    inner_grad: &DVector<f64>,
) -> Option<DVector<f64>> {
    let n = u.len();
    let base = obj.gradient(u);
    let mut hessian = DMatrix::zeros(n, n);
    for j in 0..n {
        let h = 1e-7 * (1.0 + u[j].abs());
        let mut up = u.clone();
        up[j] += h;
        let column = (obj.gradient(&up) - &base) / h;
        hessian.set_column(j, &column);
    }
    // Symmetrize the finite-difference noise, add the prox curvature.
    hessian = (&hessian + hessian.transpose()) * 0.5;
    for i in 0..n {
        hessian[(i, i)] += 1.0 / lambda;
    }
    hessian.cholesky().map(|ch| ch.solve(&(-inner_grad)))
}

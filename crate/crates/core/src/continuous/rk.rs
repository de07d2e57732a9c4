//! Embedded Dormand-Prince 5(4) integrator with PI step-size control and
//! fourth-order dense output, the workhorse behind every trajectory in this
//! crate. The systems integrated here are nonstiff away from the optimum and
//! every run stops at the gradient floor before stiffness dominates.

use nalgebra::DVector;

use crate::{Error, Result};

// Butcher tableau (Dormand & Prince 1980, the 5(4)7M pair).
const C: [f64; 7] = [0.0, 0.2, 0.3, 0.8, 8.0 / 9.0, 1.0, 1.0];
const A2: [f64; 1] = [0.2];
const A3: [f64; 2] = [3.0 / 40.0, 9.0 / 40.0];
const A4: [f64; 3] = [44.0 / 45.0, -56.0 / 15.0, 32.0 / 9.0];
const A5: [f64; 4] = [
    19372.0 / 6561.0,
    -25360.0 / 2187.0,
    64448.0 / 6561.0,
    -212.0 / 729.0,
];
const A6: [f64; 5] = [
    9017.0 / 3168.0,
    -355.0 / 33.0,
    46732.0 / 5247.0,
    49.0 / 176.0,
    -5103.0 / 18656.0,
];
const A7: [f64; 6] = [
    35.0 / 384.0,
    0.0,
    500.0 / 1113.0,
    125.0 / 192.0,
    -2187.0 / 6784.0,
    11.0 / 84.0,
];
// b − b̂: weights of the embedded error estimate.
const E: [f64; 7] = [
    71.0 / 57600.0,
    0.0,
    -71.0 / 16695.0,
    71.0 / 1920.0,
    -17253.0 / 339200.0,
    22.0 / 525.0,
    -1.0 / 40.0,
];
// Dense-output weights for the fifth interpolation coefficient.
const D: [f64; 7] = [
    -12715105075.0 / 11282082432.0,
    0.0,
    87487479700.0 / 32700410799.0,
    -10690763975.0 / 1880347072.0,
    701980252875.0 / 199316789632.0,
    -1453857185.0 / 822651844.0,
    69997945.0 / 29380423.0,
];

const SAFETY: f64 = 0.9;
const FAC_MIN: f64 = 0.2;
const FAC_MAX: f64 = 10.0;
const BETA: f64 = 0.04;

#[derive(Debug, Clone)]
pub struct IntegratorOptions {
    pub rel_tol: f64,
    pub abs_tol: f64,
    pub max_steps: usize,
    pub initial_step: Option<f64>,
}

impl Default for IntegratorOptions {
    fn default() -> Self {
        IntegratorOptions {
            rel_tol: 1e-10,
            abs_tol: 1e-12,
            max_steps: 1_000_000,
            initial_step: None,
        }
    }
}

/// Continuous extension over one accepted step: the standard quartic
/// interpolant of the 5(4) pair, good to one order below the solution.
#[derive(Debug, Clone)]
pub struct DenseOutput {
    pub t_old: f64,
    pub h: f64,
    cont: [DVector<f64>; 5],
}

impl DenseOutput {
    pub fn t_new(&self) -> f64 {
        self.t_old + self.h
    }

    /// Evaluates the interpolant at `t` in `[t_old, t_new]`.
    pub fn eval(&self, t: f64) -> DVector<f64> {
        let theta = (t - self.t_old) / self.h;
        let theta1 = 1.0 - theta;
        &self.cont[0]
            + (&self.cont[1]
                + (&self.cont[2] + (&self.cont[3] + &self.cont[4] * theta1) * theta) * theta1)
                * theta
    }
}

/// Whether to keep integrating after an accepted step.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Control {
    Continue,
    Stop,
}

#[derive(Debug, Clone)]
pub struct IntegrationOutcome {
    pub t_final: f64,
    pub y_final: DVector<f64>,
    pub accepted_steps: usize,
    pub rejected_steps: usize,
    /// True when the observer requested the stop before t_end.
    pub stopped_early: bool,
}

/// Integrates `y' = rhs(t, y)` from `t0` to `t_end`, invoking `observer`
/// after every accepted step with the new state and the dense interpolant
/// over the step. The observer returns [`Control::Stop`] to end the run.
pub fn integrate_dopri5(
    rhs: &mut dyn FnMut(f64, &DVector<f64>) -> DVector<f64>,
    t0: f64,
    y0: &DVector<f64>,
    t_end: f64,
    options: &IntegratorOptions,
    observer: &mut dyn FnMut(f64, &DVector<f64>, &DenseOutput) -> Control,
) -> Result<IntegrationOutcome> {
    assert!(t_end > t0, "t_end must exceed t0");
    let n = y0.len();
    let mut t = t0;
    let mut y = y0.clone();
    let mut k1 = rhs(t, &y);

    let mut h = options
        .initial_step
        .unwrap_or_else(|| initial_step_guess(rhs, t, &y, &k1, options, t_end));
    let mut fac_old: f64 = 1e-4;
    let expo1 = 0.2 - BETA * 0.75;

    let mut accepted = 0usize;
    let mut rejected = 0usize;

    for _ in 0..options.max_steps {
        if t >= t_end {
            return Ok(IntegrationOutcome {
                t_final: t,
                y_final: y,
                accepted_steps: accepted,
                rejected_steps: rejected,
                stopped_early: false,
            });
        }
        if h < 1e4 * f64::EPSILON * t.abs().max(1.0) {
            return Err(Error::StepUnderflow { t, h });
        }
        let mut last = false;
        if t + 1.01 * h >= t_end {
            h = t_end - t;
            last = true;
        }

        let k2 = rhs(t + C[1] * h, &(&y + &k1 * (A2[0] * h)));
        let k3 = rhs(t + C[2] * h, &(&y + (&k1 * A3[0] + &k2 * A3[1]) * h));
        let k4 = rhs(
            t + C[3] * h,
            &(&y + (&k1 * A4[0] + &k2 * A4[1] + &k3 * A4[2]) * h),
        );
        let k5 = rhs(
            t + C[4] * h,
            &(&y + (&k1 * A5[0] + &k2 * A5[1] + &k3 * A5[2] + &k4 * A5[3]) * h),
        );
        let k6 = rhs(
            t + C[5] * h,
            &(&y + (&k1 * A6[0] + &k2 * A6[1] + &k3 * A6[2] + &k4 * A6[3] + &k5 * A6[4]) * h),
        );
        let y_new = &y
            + (&k1 * A7[0] + &k3 * A7[2] + &k4 * A7[3] + &k5 * A7[4] + &k6 * A7[5]) * h;
        // FSAL: the seventh stage is the derivative at the new point.
        let k7 = rhs(t + h, &y_new);

        let err_vec =
            (&k1 * E[0] + &k3 * E[2] + &k4 * E[3] + &k5 * E[4] + &k6 * E[5] + &k7 * E[6]) * h;
        let mut err_norm_sq = 0.0;
        for i in 0..n {
            let sc = options.abs_tol + options.rel_tol * y[i].abs().max(y_new[i].abs());
            let e = err_vec[i] / sc;
            err_norm_sq += e * e;
        }
        let err = (err_norm_sq / n as f64).sqrt();

        if !err.is_finite() {
            // A stage blew up: retry with a much smaller step.
            rejected += 1;
            h *= 0.1;
            continue;
        }

        if err <= 1.0 {
            accepted += 1;
            let ydiff = &y_new - &y;
            let bspl = &k1 * h - &ydiff;
            let cont = [
                y.clone(),
                ydiff.clone(),
                bspl.clone(),
                -(&k7) * h + &ydiff - &bspl,
                (&k1 * D[0] + &k3 * D[2] + &k4 * D[3] + &k5 * D[4] + &k6 * D[5] + &k7 * D[6]) * h,
            ];
            let dense = DenseOutput { t_old: t, h, cont };

            let t_new = if last { t_end } else { t + h };
            let control = observer(t_new, &y_new, &dense);

            t = t_new;
            y = y_new;
            k1 = k7;

            if control == Control::Stop {
                return Ok(IntegrationOutcome {
                    t_final: t,
                    y_final: y,
                    accepted_steps: accepted,
                    rejected_steps: rejected,
                    stopped_early: true,
                });
            }

            // PI controller (Hairer's stabilized step selection).
            let fac11 = err.max(1e-16).powf(expo1);
            let fac = (fac11 / fac_old.powf(BETA) / SAFETY).clamp(1.0 / FAC_MAX, 1.0 / FAC_MIN);
            h /= fac;
            fac_old = err.max(1e-4);
        } else {
            rejected += 1;
            let fac11 = err.powf(expo1);
            h /= (fac11 / SAFETY).min(1.0 / FAC_MIN);
        }
    }
    Err(Error::MaxStepsExceeded(options.max_steps))
}

/// Rough starting step from the magnitude of the initial derivative
/// (a trimmed version of the classical automatic choice).
fn initial_step_guess(
    rhs: &mut dyn FnMut(f64, &DVector<f64>) -> DVector<f64>,
    t0: f64,
    y0: &DVector<f64>,
    f0: &DVector<f64>,
    options: &IntegratorOptions,
    t_end: f64,
) -> f64 {
    let n = y0.len() as f64;
    let sc = |y: &DVector<f64>, i: usize| options.abs_tol + options.rel_tol * y[i].abs();
    let d0 = (y0
        .iter()
        .enumerate()
        .map(|(i, v)| (v / sc(y0, i)).powi(2))
        .sum::<f64>()
        / n)
        .sqrt();
    let d1 = (f0
        .iter()
        .enumerate()
        .map(|(i, v)| (v / sc(y0, i)).powi(2))
        .sum::<f64>()
        / n)
        .sqrt();
    let h0 = if d0 < 1e-5 || d1 < 1e-5 {
        1e-6
    } else {
        0.01 * d0 / d1
    };
    let y1 = y0 + f0 * h0;
    let f1 = rhs(t0 + h0, &y1);
    let d2 = ((&f1 - f0)
        .iter()
        .enumerate()
        .map(|(i, v)| (v / sc(y0, i)).powi(2))
        .sum::<f64>()
        / n)
        .sqrt()
        / h0;
    let max_d = d1.max(d2);
    let h1 = if max_d <= 1e-15 {
        (h0 * 1e-3).max(1e-6)
    } else {
        (0.01 / max_d).powf(0.2)
    };
    (100.0 * h0).min(h1).min(t_end - t0)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn exp_decay_rhs() -> impl FnMut(f64, &DVector<f64>) -> DVector<f64> {
        |_t, y: &DVector<f64>| -y
    }

    #[test]
    fn exponential_decay_to_tolerance() {
        let mut rhs = exp_decay_rhs();
        let opts = IntegratorOptions::default();
        let y0 = DVector::from_vec(vec![1.0, -2.0]);
        let out = integrate_dopri5(&mut rhs, 0.0, &y0, 1.0, &opts, &mut |_, _, _| {
            Control::Continue
        })
        .unwrap();
        let exact = (-1.0f64).exp();
        assert!((out.y_final[0] - exact).abs() < 1e-9);
        assert!((out.y_final[1] + 2.0 * exact).abs() < 1e-9);
        assert!(!out.stopped_early);
    }

    #[test]
    fn dense_output_matches_exact_solution_inside_steps() {
        let mut rhs = exp_decay_rhs();
        let opts = IntegratorOptions {
            rel_tol: 1e-10,
            abs_tol: 1e-12,
            ..Default::default()
        };
        let y0 = DVector::from_vec(vec![1.0]);
        let mut worst = 0.0f64;
        integrate_dopri5(&mut rhs, 0.0, &y0, 3.0, &opts, &mut |_, _, dense| {
            for frac in [0.25, 0.5, 0.75] {
                let t = dense.t_old + frac * dense.h;
                let err = (dense.eval(t)[0] - (-t).exp()).abs();
                worst = worst.max(err);
            }
            Control::Continue
        })
        .unwrap();
        assert!(worst < 1e-9, "dense output error {worst:.3e}");
    }

    #[test]
    fn oscillator_energy_is_preserved_to_tolerance() {
        let mut rhs = |_t: f64, y: &DVector<f64>| DVector::from_vec(vec![y[1], -y[0]]);
        let opts = IntegratorOptions::default();
        let y0 = DVector::from_vec(vec![1.0, 0.0]);
        let out = integrate_dopri5(&mut rhs, 0.0, &y0, 20.0, &opts, &mut |_, _, _| {
            Control::Continue
        })
        .unwrap();
        let energy = out.y_final[0].powi(2) + out.y_final[1].powi(2);
        assert!((energy - 1.0).abs() < 1e-8);
    }

    #[test]
    fn observer_can_stop_the_run() {
        let mut rhs = exp_decay_rhs();
        let opts = IntegratorOptions::default();
        let y0 = DVector::from_vec(vec![1.0]);
        let out = integrate_dopri5(&mut rhs, 0.0, &y0, 100.0, &opts, &mut |t, _, _| {
            if t > 1.0 {
                Control::Stop
            } else {
                Control::Continue
            }
        })
        .unwrap();
        assert!(out.stopped_early);
        assert!(out.t_final > 1.0 && out.t_final < 100.0);
    }

    #[test]
    fn step_endpoints_agree_with_dense_output() {
        let mut rhs = |t: f64, y: &DVector<f64>| DVector::from_vec(vec![y[0] * (t).cos()]);
        let opts = IntegratorOptions::default();
        let y0 = DVector::from_vec(vec![1.0]);
        integrate_dopri5(&mut rhs, 0.0, &y0, 5.0, &opts, &mut |t, y, dense| {
            let at_end = dense.eval(t);
            assert!((at_end[0] - y[0]).abs() < 1e-12);
            let at_start = dense.eval(dense.t_old);
            assert!((at_start[0] - dense.cont[0][0]).abs() < 1e-12);
            Control::Continue
        })
        .unwrap();
    }
}

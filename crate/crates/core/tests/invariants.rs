//! Cross-module trajectory invariants that don't belong to a single unit:
//! convergence surrogates, gradient-norm decay rates and time-scale growth
//! against their theoretical targets.

use peas::analysis::{fit_power_law, FeedbackKind};
use peas::continuous::{
    integrate_closed_loop, integrate_lin_jordan, integrate_steepest_descent,
    tau_lower_bound_check, DynamicsConfig, IntegratorOptions, LinJordanConfig,
};
use peas::objectives::{default_start, make_problem, ProblemSpec};

fn benchmark() -> (peas::objectives::Objective, nalgebra::DVector<f64>) {
    let spec = ProblemSpec::new("quadratic", 10, 42).with_parameter("cond", 1e2);
    let obj = make_problem(&spec).unwrap();
    let y0 = default_start(&spec);
    (obj, y0)
}

/// Convex but not strongly convex: along steepest descent the gradient
/// decays like a power of time, so the closed-loop time scale shows its
/// power-law growth inside a measurable window (on strongly convex problems
/// τ blows up in finite time instead).
fn sextic() -> (peas::objectives::Objective, nalgebra::DVector<f64>) {
    let obj = peas::objectives::Objective::new(
        2,
        |x: &nalgebra::DVector<f64>| x.iter().map(|v| v.powi(6) / 6.0).sum(),
        |x: &nalgebra::DVector<f64>| nalgebra::DVector::from_fn(x.len(), |i, _| x[i].powi(5)),
    )
    .with_minimum(0.0, Some(nalgebra::DVector::zeros(2)));
    let y0 = nalgebra::DVector::from_vec(vec![2.0, -1.5]);
    (obj, y0)
}

#[test]
fn weak_convergence_surrogate() {
    // Long open-loop averaged run: y reaches its numerical gradient floor
    // early, x stabilises well before the horizon.
    let (obj, y0) = benchmark();
    let config = DynamicsConfig {
        t_end: 600.0,
        stop_grad_tol: 1e-10,
        ..DynamicsConfig::new(1.0, 2.0, 4.0)
    };
    let traj = integrate_closed_loop(&obj, FeedbackKind::Velocity, &config, &y0, None).unwrap();
    let t_final = traj.last().t;
    let half = traj
        .samples
        .iter()
        .min_by(|a, b| {
            (a.t - t_final / 2.0)
                .abs()
                .total_cmp(&(b.t - t_final / 2.0).abs())
        })
        .unwrap();
    let drift = (&traj.last().x - &half.x).norm();
    assert!(
        drift <= 1e-4 * traj.scale,
        "x still drifting: ‖x(end) − x(end/2)‖ = {drift:.3e}"
    );
    assert!(
        traj.last().grad_norm <= 10.0 * config.stop_grad_tol,
        "limit gradient {:.3e}",
        traj.last().grad_norm
    );
}

#[test]
fn gradient_norm_rate_under_gradient_feedback() {
    // q = 2, p = 2: ‖∇f(y(t))‖ decays at least like t^{−pq}.
    let (obj, y0) = benchmark();
    let config = DynamicsConfig {
        t_end: 50.0,
        stop_grad_tol: 1e-12,
        ..DynamicsConfig::new(2.0, 2.0, 2.0)
    };
    let traj = integrate_closed_loop(&obj, FeedbackKind::Gradient, &config, &y0, None).unwrap();
    let fit = fit_power_law(&traj.times(), &traj.grad_norms(), 0.0).unwrap();
    let target = 2.0 * 2.0 - 0.5;
    assert!(
        fit.exponent >= target,
        "gradient decay exponent {:.2} < {target}",
        fit.exponent
    );

    // running minimum decays at least like t^{−2p} (it equals the series
    // here, since the norm is monotone along the rescaled descent)
    let mut running = f64::INFINITY;
    for s in &traj.samples {
        assert!(s.grad_norm <= running + 1e-10 * traj.scale);
        running = running.min(s.grad_norm);
    }
}

#[test]
fn tau_growth_open_loop_is_quadratic() {
    let (obj, y0) = benchmark();
    let config = DynamicsConfig {
        t_end: 60.0,
        stop_grad_tol: 1e-300, // keep the full horizon
        ..DynamicsConfig::new(1.0, 2.0, 2.0)
    };
    let traj = integrate_closed_loop(&obj, FeedbackKind::Velocity, &config, &y0, None).unwrap();
    let fit = tau_lower_bound_check(&traj).unwrap();
    assert!(
        (fit.exponent - 2.0).abs() <= 0.1,
        "open-loop tau exponent {:.3}",
        fit.exponent
    );
}

#[test]
fn tau_growth_beats_the_feedback_targets() {
    let (obj, y0) = sextic();
    let config = DynamicsConfig {
        t_end: 400.0,
        stop_grad_tol: 1e-12,
        ..DynamicsConfig::new(2.0, 2.0, 2.0)
    };
    for (feedback, target) in [
        (FeedbackKind::Velocity, 1.0 + 2.0 - 0.5), // 1 + q − 1/p
        (FeedbackKind::Gradient, 4.0),             // p·q
    ] {
        let traj = integrate_closed_loop(&obj, feedback, &config, &y0, None).unwrap();
        let fit = tau_lower_bound_check(&traj).unwrap();
        assert!(
            fit.exponent >= target - 0.15,
            "{feedback}: tau exponent {:.2} < {:.2}",
            fit.exponent,
            target - 0.15
        );
    }
}

#[test]
fn lin_jordan_min_gradient_rate() {
    // Baseline: running min of ‖∇f(x)‖ decays at least like t^{−3p/2}.
    let (obj, y0) = sextic();
    let config = LinJordanConfig {
        p: 2.0,
        t_end: 400.0,
        stop_grad_tol: 1e-12,
        ..Default::default()
    };
    let traj = integrate_lin_jordan(&obj, &config, &y0, &y0).unwrap();
    let mut running = f64::INFINITY;
    let mins: Vec<f64> = traj
        .grad_norms()
        .iter()
        .map(|&g| {
            running = running.min(g);
            running
        })
        .collect();
    let fit = fit_power_law(&traj.times(), &mins, 0.0).unwrap();
    assert!(
        fit.exponent >= 3.0 - 0.5,
        "Lin-Jordan min-gradient exponent {:.2}",
        fit.exponent
    );
}

#[test]
fn sample_times_strictly_increase_from_t0() {
    let (obj, y0) = benchmark();
    let config = DynamicsConfig {
        t_end: 20.0,
        ..DynamicsConfig::new(2.0, 2.0, 2.0)
    };
    let closed =
        integrate_closed_loop(&obj, FeedbackKind::Velocity, &config, &y0, None).unwrap();
    let sd =
        integrate_steepest_descent(&obj, &y0, 20.0, None, &IntegratorOptions::default()).unwrap();
    let lj = integrate_lin_jordan(&obj, &LinJordanConfig::default(), &y0, &y0).unwrap();
    for (traj, t0) in [(&closed, config.t0), (&sd, 0.0), (&lj, 0.0)] {
        assert_eq!(traj.first().t, t0);
        for pair in traj.samples.windows(2) {
            assert!(pair[1].t > pair[0].t, "sample times must strictly increase");
        }
        // τ strictly increases along every trajectory
        for pair in traj.samples.windows(2) {
            assert!(pair[1].tau > pair[0].tau);
        }
    }
}

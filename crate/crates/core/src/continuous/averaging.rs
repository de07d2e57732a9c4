//! Quadrature view of the averaging: along a closed-loop trajectory the
//! averaged state is the expectation of `y` under the probability measure
//!
//! ```text
//! μ_t = e^{−γB(t)} δ_{t0} + γ b(u) e^{γ(B(u) − B(t))} du,
//! b(u) = τ̇(u)/τ(u),   B(u) = ln(τ(u)/τ(t0)),
//! ```
//!
//! so `x(t) = ∫ y dμ_t`, `μ_t` has unit mass, and Jensen's inequality bounds
//! `f(x(t)) − min f` by the μ_t-average of the y-gap. These routines compute
//! the integrals numerically — independent of the ODE path that produced
//! `x` — with per-panel quintic Hermite models (value, first and second
//! derivative at both panel ends, all recorded in the samples) and 7-point
//! Gauss-Legendre quadrature.

use nalgebra::DVector;

use crate::objectives::Objective;
use crate::{Error, Result};

use super::{Sample, SystemKind, Trajectory};

const GAUSS_NODES: [f64; 7] = [
    -0.9491079123427585,
    -0.7415311855993945,
    -0.4058451513773972,
    0.0,
    0.4058451513773972,
    0.7415311855993945,
    0.9491079123427585,
];
const GAUSS_WEIGHTS: [f64; 7] = [
    0.1294849661688697,
    0.2797053914892766,
    0.3818300505051189,
    0.4179591836734694,
    0.3818300505051189,
    0.2797053914892766,
    0.1294849661688697,
];

/// Two-point quintic Hermite model of a scalar function on one panel.
struct Quintic {
    t0: f64,
    h: f64,
    a: [f64; 6],
}

impl Quintic {
    /// From values, first and second time derivatives at the panel ends.
    fn new(t0: f64, t1: f64, f: (f64, f64), d: (f64, f64), s: (f64, f64)) -> Self {
        let h = t1 - t0;
        let (d0, d1) = (d.0 * h, d.1 * h);
        let (s0, s1) = (s.0 * h * h, s.1 * h * h);
        let r0 = f.1 - f.0 - d0 - 0.5 * s0;
        let r1 = d1 - d0 - s0;
        let r2 = s1 - s0;
        Quintic {
            t0,
            h,
            a: [
                f.0,
                d0,
                0.5 * s0,
                10.0 * r0 - 4.0 * r1 + 0.5 * r2,
                -15.0 * r0 + 7.0 * r1 - r2,
                6.0 * r0 - 3.0 * r1 + 0.5 * r2,
            ],
        }
    }

    fn eval(&self, t: f64) -> f64 {
        let xi = (t - self.t0) / self.h;
        self.a
            .iter()
            .rev()
            .fold(0.0, |acc, &coeff| acc * xi + coeff)
    }

    fn deriv(&self, t: f64) -> f64 {
        let xi = (t - self.t0) / self.h;
        let mut acc = 0.0;
        for k in (1..6).rev() {
            acc = acc * xi + k as f64 * self.a[k];
        }
        acc / self.h
    }
}

/// Quintic Hermite model of the vector trajectory y(u) on one panel.
struct VectorQuintic {
    t0: f64,
    h: f64,
    a: [DVector<f64>; 6],
}

impl VectorQuintic {
    fn new(left: &Sample, right: &Sample) -> Self {
        let h = right.t - left.t;
        let d0 = &left.ydot * h;
        let d1 = &right.ydot * h;
        let s0 = &left.yddot * (h * h);
        let s1 = &right.yddot * (h * h);
        let r0 = &right.y - &left.y - &d0 - &s0 * 0.5;
        let r1 = &d1 - &d0 - &s0;
        let r2 = &s1 - &s0;
        VectorQuintic {
            t0: left.t,
            h,
            a: [
                left.y.clone(),
                d0,
                &s0 * 0.5,
                &r0 * 10.0 - &r1 * 4.0 + &r2 * 0.5,
                &r0 * -15.0 + &r1 * 7.0 - &r2,
                &r0 * 6.0 - &r1 * 3.0 + &r2 * 0.5,
            ],
        }
    }

    fn eval(&self, t: f64) -> DVector<f64> {
        let xi = (t - self.t0) / self.h;
        let mut acc = self.a[5].clone();
        for k in (0..5).rev() {
            acc = acc * xi + &self.a[k];
        }
        acc
    }
}

/// Per-panel model of ln τ: the quintic Hermite when its data is sane,
/// otherwise a monotone linear fallback. Near the time-scale blow-up the
/// sampled derivatives can dwarf the panel increment, and an oscillating
/// polynomial inside the exponential kernel would wreck the quadrature.
enum ScalarModel {
    Quintic(Quintic),
    Linear { t0: f64, f0: f64, slope: f64 },
}

impl ScalarModel {
    fn eval(&self, t: f64) -> f64 {
        match self {
            ScalarModel::Quintic(q) => q.eval(t),
            ScalarModel::Linear { t0, f0, slope, .. } => f0 + slope * (t - t0),
        }
    }

    fn deriv(&self, t: f64) -> f64 {
        match self {
            ScalarModel::Quintic(q) => q.deriv(t),
            ScalarModel::Linear { slope, .. } => *slope,
        }
    }
}

enum VectorModel {
    Quintic(VectorQuintic),
    Linear {
        t0: f64,
        h: f64,
        y0: DVector<f64>,
        dy: DVector<f64>,
    },
}

impl VectorModel {
    fn eval(&self, t: f64) -> DVector<f64> {
        match self {
            VectorModel::Quintic(q) => q.eval(t),
            VectorModel::Linear { t0, h, y0, dy } => y0 + dy * ((t - t0) / h),
        }
    }
}

fn log_tau_model(left: &Sample, right: &Sample) -> ScalarModel {
    let (l0, l1) = (left.tau.ln(), right.tau.ln());
    let h = right.t - left.t;
    let delta = l1 - l0;
    let quintic = Quintic::new(
        left.t,
        right.t,
        (l0, l1),
        (left.tau_dot / left.tau, right.tau_dot / right.tau),
        (
            left.tau_ddot / left.tau - (left.tau_dot / left.tau).powi(2),
            right.tau_ddot / right.tau - (right.tau_dot / right.tau).powi(2),
        ),
    );
    // ln τ is increasing and must stay inside the panel's value range.
    let margin = 0.05 * (delta.abs() + 1e-6);
    let slope_floor = -1e-9 * (delta.abs() / h + 1.0);
    let sane = GAUSS_NODES.iter().all(|node| {
        let u = left.t + 0.5 * h * (node + 1.0);
        let value = quintic.eval(u);
        value >= l0 - margin && value <= l1 + margin && quintic.deriv(u) >= slope_floor
    });
    if sane {
        ScalarModel::Quintic(quintic)
    } else {
        ScalarModel::Linear {
            t0: left.t,
            f0: l0,
            slope: delta / h,
        }
    }
}

fn y_model(left: &Sample, right: &Sample, ell_is_quintic: bool) -> VectorModel {
    let h = right.t - left.t;
    let dy = &right.y - &left.y;
    let budget = 16.0 * (dy.norm() + 1e-9 * (1.0 + left.y.norm()));
    let sane = ell_is_quintic
        && left.ydot.norm() * h <= budget
        && right.ydot.norm() * h <= budget
        && left.yddot.norm() * h * h <= budget
        && right.yddot.norm() * h * h <= budget;
    if sane {
        VectorModel::Quintic(VectorQuintic::new(left, right))
    } else {
        VectorModel::Linear {
            t0: left.t,
            h,
            y0: left.y.clone(),
            dy,
        }
    }
}

fn check_system(trajectory: &Trajectory) -> Result<()> {
    match trajectory.system {
        SystemKind::VelocityFeedback
        | SystemKind::GradientFeedback
        | SystemKind::SecondOrderInertial => Ok(()),
        other => Err(Error::InvalidConfig(format!(
            "averaging measure is defined for the averaged closed-loop systems, not {other:?}"
        ))),
    }
}

fn locate(trajectory: &Trajectory, t: f64) -> Result<usize> {
    let (start, end) = trajectory.span();
    if t < start - 1e-12 * start.abs().max(1.0) || t > end + 1e-12 * end.abs().max(1.0) {
        return Err(Error::OutOfSpan { t, start, end });
    }
    // index of the panel whose left edge is the last sample time <= t
    let mut index = 0;
    for (i, s) in trajectory.samples.iter().enumerate() {
        if s.t <= t {
            index = i;
        } else {
            break;
        }
    }
    Ok(index.min(trajectory.samples.len().saturating_sub(2)))
}

/// ln τ(t), exact at sample times and Hermite-modelled inside panels.
fn log_tau_at(trajectory: &Trajectory, t: f64) -> Result<f64> {
    let j = locate(trajectory, t)?;
    let samples = &trajectory.samples;
    if (t - samples[j].t).abs() <= 1e-12 * t.abs().max(1.0) {
        return Ok(samples[j].tau.ln());
    }
    if (t - samples[j + 1].t).abs() <= 1e-12 * t.abs().max(1.0) {
        return Ok(samples[j + 1].tau.ln());
    }
    Ok(log_tau_model(&samples[j], &samples[j + 1]).eval(t))
}

/// Integrates `γ b(u) e^{γ(B(u) − B(t))} · weight(u, y(u))` over `[t0, t]`,
/// the density part of every μ_t functional.
fn integrate_density<Fw>(trajectory: &Trajectory, t: f64, mut weight: Fw) -> Result<f64>
where
    Fw: FnMut(f64, &DVector<f64>) -> f64,
{
    let gamma = trajectory.config.gamma;
    let log_tau_t = log_tau_at(trajectory, t)?;
    let samples = &trajectory.samples;
    let mut total = 0.0;
    for pair in samples.windows(2) {
        let (left, right) = (&pair[0], &pair[1]);
        if left.t >= t {
            break;
        }
        let upper = right.t.min(t);
        if upper <= left.t {
            continue;
        }
        let ell = log_tau_model(left, right);
        let y = y_model(left, right, matches!(ell, ScalarModel::Quintic(_)));
        // Keep the exponent variation per Gauss segment small: the kernel
        // grows like e^{γ Δln τ} across a panel, which can span decades near
        // the time-scale blow-up.
        let exponent_span = gamma * (right.tau.ln() - left.tau.ln()).abs();
        let segments = ((exponent_span / 0.5).ceil() as usize).clamp(1, 64);
        let seg_width = (upper - left.t) / segments as f64;
        for seg in 0..segments {
            let a = left.t + seg as f64 * seg_width;
            let mid = a + 0.5 * seg_width;
            let half = 0.5 * seg_width;
            for (node, w) in GAUSS_NODES.iter().zip(GAUSS_WEIGHTS) {
                let u = mid + half * node;
                let b = ell.deriv(u);
                let kernel = gamma * b * (gamma * (ell.eval(u) - log_tau_t)).exp();
                total += w * half * kernel * weight(u, &y.eval(u));
            }
        }
    }
    Ok(total)
}

/// Dirac weight `e^{−γ B(t)}` of the initial time in μ_t.
pub fn dirac_mass(trajectory: &Trajectory, t: f64) -> Result<f64> {
    check_system(trajectory)?;
    let gamma = trajectory.config.gamma;
    let log_tau0 = trajectory.first().tau.ln();
    Ok((-gamma * (log_tau_at(trajectory, t)? - log_tau0)).exp())
}

/// Total mass of μ_t, computed numerically; equals 1 up to quadrature and
/// sampling error.
pub fn averaging_measure_mass(trajectory: &Trajectory, t: f64) -> Result<f64> {
    check_system(trajectory)?;
    let dirac = dirac_mass(trajectory, t)?;
    let density = integrate_density(trajectory, t, |_, _| 1.0)?;
    Ok(dirac + density)
}

/// The measure representation of the averaged state:
/// `x(t) = e^{−γB(t)} y(t0) + γ e^{−γB(t)} ∫ b e^{γB} y du`, evaluated by
/// quadrature. Serves as the independent oracle for the ODE-integrated x.
pub fn averaging_quadrature_oracle(trajectory: &Trajectory, t: f64) -> Result<DVector<f64>> {
    check_system(trajectory)?;
    let dirac = dirac_mass(trajectory, t)?;
    let dim = trajectory.first().y.len();
    let mut x = &trajectory.first().y * dirac;
    for i in 0..dim {
        let component = integrate_density(trajectory, t, |_, y| y[i])?;
        x[i] += component;
    }
    Ok(x)
}

/// Both sides of the Jensen bound at time `t`:
/// `f(x̂(t)) − min f ≤ ∫ (f(y(u)) − min f) dμ_t(u)` with `x̂` the quadrature
/// oracle. Requires a known minimum.
pub fn averaging_jensen_gap(
    trajectory: &Trajectory,
    obj: &Objective,
    t: f64,
) -> Result<(f64, f64)> {
    check_system(trajectory)?;
    let f_min = obj.f_min().ok_or_else(|| {
        Error::InvalidConfig("Jensen bound needs an objective with a known minimum".into())
    })?;
    let oracle = averaging_quadrature_oracle(trajectory, t)?;
    let lhs = obj.value(&oracle) - f_min;
    let dirac = dirac_mass(trajectory, t)?;
    let gap0 = obj.value(&trajectory.first().y) - f_min;
    let rhs = dirac * gap0 + integrate_density(trajectory, t, |_, y| obj.value(y) - f_min)?;
    Ok((lhs, rhs))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::analysis::FeedbackKind;
    use crate::continuous::{integrate_closed_loop, DynamicsConfig};
    use crate::objectives::{default_start, make_problem, ProblemSpec};
    use approx::assert_relative_eq;

    fn open_loop_run(gamma: f64, t_end: f64) -> (Trajectory, Objective) {
        let spec = ProblemSpec::new("quadratic", 3, 11);
        let obj = make_problem(&spec).unwrap();
        let config = DynamicsConfig {
            t_end,
            ..DynamicsConfig::new(1.0, 2.0, gamma)
        };
        let y0 = default_start(&spec);
        let traj = integrate_closed_loop(&obj, FeedbackKind::Velocity, &config, &y0, None).unwrap();
        (traj, obj)
    }

    #[test]
    fn mass_is_one_at_the_origin() {
        let (traj, _) = open_loop_run(2.0, 10.0);
        let t0 = traj.first().t;
        assert_relative_eq!(averaging_measure_mass(&traj, t0).unwrap(), 1.0, epsilon = 1e-14);
    }

    #[test]
    fn mass_is_one_along_the_run() {
        let (traj, _) = open_loop_run(2.0, 10.0);
        let n = traj.samples.len();
        for idx in [n / 5, n / 2, 4 * n / 5, n - 1] {
            let t = traj.samples[idx].t;
            let mass = averaging_measure_mass(&traj, t).unwrap();
            assert!(
                (mass - 1.0).abs() <= 1e-8,
                "mass at t={t}: {mass} (err {:.3e})",
                (mass - 1.0).abs()
            );
        }
    }

    #[test]
    fn dirac_weight_has_the_closed_form() {
        // γ = 2, τ = t²/4: at t = 2 t0 we have B = ln 4, so the Dirac part
        // is e^{−2 ln 4} = 1/16.
        let (traj, _) = open_loop_run(2.0, 10.0);
        let t0 = traj.first().t;
        let target = 2.0 * t0;
        let dirac = dirac_mass(&traj, target).unwrap();
        assert_relative_eq!(dirac, 1.0 / 16.0, max_relative = 1e-7);
    }

    #[test]
    fn oracle_at_origin_returns_the_start() {
        let (traj, _) = open_loop_run(2.0, 10.0);
        let t0 = traj.first().t;
        let oracle = averaging_quadrature_oracle(&traj, t0).unwrap();
        assert!((oracle - &traj.first().y).norm() <= 1e-12);
    }

    #[test]
    fn oracle_matches_ode_average() {
        let spec = ProblemSpec::new("quadratic", 3, 13);
        let obj = make_problem(&spec).unwrap();
        let config = DynamicsConfig {
            t_end: 12.0,
            ..DynamicsConfig::new(2.0, 2.0, 2.0)
        };
        let y0 = default_start(&spec);
        let traj = integrate_closed_loop(&obj, FeedbackKind::Velocity, &config, &y0, None).unwrap();
        let n = traj.samples.len();
        for idx in (n / 4..n).step_by((n / 10).max(1)) {
            let s = &traj.samples[idx];
            let oracle = averaging_quadrature_oracle(&traj, s.t).unwrap();
            let rel = (&oracle - &s.x).norm() / (1.0 + s.x.norm());
            assert!(rel <= 1e-6, "t={}: oracle deviates by {rel:.3e}", s.t);
        }
    }

    #[test]
    fn jensen_inequality_holds() {
        let (traj, obj) = open_loop_run(2.0, 10.0);
        let n = traj.samples.len();
        for idx in [n / 3, 2 * n / 3, n - 1] {
            let t = traj.samples[idx].t;
            let (lhs, rhs) = averaging_jensen_gap(&traj, &obj, t).unwrap();
            assert!(
                lhs <= rhs + 1e-8 * traj.scale,
                "Jensen violated at t={t}: {lhs} > {rhs}"
            );
        }
    }

    #[test]
    fn out_of_span_is_an_error() {
        let (traj, _) = open_loop_run(2.0, 5.0);
        assert!(matches!(
            averaging_measure_mass(&traj, 100.0),
            Err(Error::OutOfSpan { .. })
        ));
    }
}

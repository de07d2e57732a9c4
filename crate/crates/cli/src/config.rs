//! Experiment configuration: a strict TOML file with one section per
//! concern. Unknown keys are rejected everywhere — a silent typo in p, q or
//! gamma would invalidate every rate target downstream.

use std::fmt;
use std::path::Path;

use peas::analysis::FeedbackKind;
use peas::continuous::{DynamicsConfig, LinJordanConfig};
use peas::discrete::{Lambda0Policy, SolverConfig};
use peas::objectives::ProblemSpec;
use serde::Deserialize;

/// Parse/validation failure with the exit-code-2 contract.
#[derive(Debug)]
pub struct ConfigError(pub String);

impl fmt::Display for ConfigError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.0)
    }
}

impl std::error::Error for ConfigError {}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Deserialize)]
pub enum Mode {
    #[serde(rename = "peas")]
    Peas,
    #[serde(rename = "peas-inertial")]
    PeasInertial,
    #[serde(rename = "ode-closed-loop")]
    OdeClosedLoop,
    #[serde(rename = "ode-second-order")]
    OdeSecondOrder,
    #[serde(rename = "ode-sd")]
    OdeSd,
    #[serde(rename = "ode-lin-jordan")]
    OdeLinJordan,
}

impl Mode {
    pub fn is_discrete(self) -> bool {
        matches!(self, Mode::Peas | Mode::PeasInertial)
    }

    pub fn label(self) -> &'static str {
        match self {
            Mode::Peas => "peas",
            Mode::PeasInertial => "peas-inertial",
            Mode::OdeClosedLoop => "ode-closed-loop",
            Mode::OdeSecondOrder => "ode-second-order",
            Mode::OdeSd => "ode-sd",
            Mode::OdeLinJordan => "ode-lin-jordan",
        }
    }
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SolverSection {
    pub p: f64,
    /// velocity | gradient; required for `peas`, fixed to velocity for
    /// `peas-inertial`.
    pub feedback: Option<String>,
    pub max_iter: usize,
    pub t0: Option<f64>,
    /// "feedback" (default) or "t0".
    pub lambda0: Option<String>,
    pub stop_grad_tol: Option<f64>,
    pub stop_velocity_tol: Option<f64>,
    pub lambda_cap: Option<f64>,
    pub y_minus1_offset: Option<f64>,
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DynamicsSection {
    pub p: f64,
    pub q: Option<f64>,
    pub gamma: Option<f64>,
    /// velocity | gradient; for ode-closed-loop and ode-second-order.
    pub feedback: Option<String>,
    pub t0: Option<f64>,
    pub t_end: f64,
    pub rel_tol: Option<f64>,
    pub abs_tol: Option<f64>,
    pub stop_grad_tol: Option<f64>,
    pub max_steps: Option<usize>,
    /// Lin-Jordan parameters.
    pub c: Option<f64>,
    pub theta: Option<f64>,
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CheckSpec {
    pub name: String,
    pub target: Option<f64>,
    pub tolerance: Option<f64>,
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SweepSection {
    pub p: Option<Vec<f64>>,
    pub q: Option<Vec<f64>>,
    pub gamma: Option<Vec<f64>>,
    pub feedback: Option<Vec<String>>,
    pub seed: Option<Vec<u64>>,
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    pub mode: Mode,
    pub problem: ProblemSpec,
    pub output: Option<String>,
    pub solver: Option<SolverSection>,
    pub dynamics: Option<DynamicsSection>,
    pub checks: Option<Vec<CheckSpec>>,
    pub sweep: Option<SweepSection>,
}

pub fn parse_feedback(raw: &str) -> Result<FeedbackKind, ConfigError> {
    match raw {
        "velocity" => Ok(FeedbackKind::Velocity),
        "gradient" => Ok(FeedbackKind::Gradient),
        other => Err(ConfigError(format!(
            "unknown feedback '{other}'; expected 'velocity' or 'gradient'"
        ))),
    }
}

impl ExperimentConfig {
    pub fn load(path: &Path) -> Result<Self, ConfigError> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| ConfigError(format!("cannot read {}: {e}", path.display())))?;
        let config: ExperimentConfig = toml::from_str(&text).map_err(|e| {
            // toml errors carry the span; surface line/column for the user.
            let location = e
                .span()
                .map(|span| {
                    let prefix = &text[..span.start.min(text.len())];
                    let line = prefix.matches('\n').count() + 1;
                    let column = span.start - prefix.rfind('\n').map(|i| i + 1).unwrap_or(0) + 1;
                    format!(" at line {line}, column {column}")
                })
                .unwrap_or_default();
            ConfigError(format!("config parse error{location}: {}", e.message()))
        })?;
        config.validate()?;
        Ok(config)
    }

    /// Mode-compatible section presence plus the parameter constraints.
    pub fn validate(&self) -> Result<(), ConfigError> {
        if self.mode.is_discrete() {
            if self.dynamics.is_some() {
                return Err(ConfigError(format!(
                    "mode '{}' takes a [solver] section, not [dynamics]",
                    self.mode.label()
                )));
            }
            let solver = self.solver.as_ref().ok_or_else(|| {
                ConfigError(format!("mode '{}' requires a [solver] section", self.mode.label()))
            })?;
            if self.mode == Mode::Peas && solver.feedback.is_none() {
                return Err(ConfigError("mode 'peas' requires solver.feedback".into()));
            }
            if let Some(raw) = &solver.feedback {
                parse_feedback(raw)?;
            }
            if let Some(raw) = &solver.lambda0 {
                if raw != "feedback" && raw != "t0" {
                    return Err(ConfigError(format!(
                        "unknown lambda0 policy '{raw}'; expected 'feedback' or 't0'"
                    )));
                }
            }
            self.solver_config()?
                .validate()
                .map_err(|e| ConfigError(e.to_string()))?;
        } else {
            if self.solver.is_some() {
                return Err(ConfigError(format!(
                    "mode '{}' takes a [dynamics] section, not [solver]",
                    self.mode.label()
                )));
            }
            let dynamics = self.dynamics.as_ref().ok_or_else(|| {
                ConfigError(format!(
                    "mode '{}' requires a [dynamics] section",
                    self.mode.label()
                ))
            })?;
            match self.mode {
                Mode::OdeClosedLoop | Mode::OdeSecondOrder => {
                    let raw = dynamics.feedback.as_deref().ok_or_else(|| {
                        ConfigError(format!(
                            "mode '{}' requires dynamics.feedback",
                            self.mode.label()
                        ))
                    })?;
                    let feedback = parse_feedback(raw)?;
                    self.dynamics_config()?
                        .validate(Some(feedback))
                        .map_err(|e| ConfigError(e.to_string()))?;
                }
                Mode::OdeSd => {
                    if dynamics.feedback.is_some() {
                        return Err(ConfigError("mode 'ode-sd' takes no feedback".into()));
                    }
                }
                Mode::OdeLinJordan => {
                    self.lin_jordan_config()?
                        .validate()
                        .map_err(|e| ConfigError(e.to_string()))?;
                }
                _ => unreachable!(),
            }
        }
        Ok(())
    }

    pub fn solver_config(&self) -> Result<SolverConfig, ConfigError> {
        let section = self
            .solver
            .as_ref()
            .ok_or_else(|| ConfigError("missing [solver] section".into()))?;
        let defaults = SolverConfig::default();
        Ok(SolverConfig {
            p: section.p,
            t0: section.t0.unwrap_or(defaults.t0),
            lambda0: match section.lambda0.as_deref() {
                Some("t0") => Lambda0Policy::T0,
                _ => Lambda0Policy::Feedback,
            },
            stop_grad_tol: section.stop_grad_tol,
            stop_velocity_tol: section.stop_velocity_tol,
            lambda_cap: section.lambda_cap,
            max_iter: section.max_iter,
            y_minus1_offset: section.y_minus1_offset.unwrap_or(defaults.y_minus1_offset),
        })
    }

    pub fn solver_feedback(&self) -> Result<FeedbackKind, ConfigError> {
        if self.mode == Mode::PeasInertial {
            return Ok(FeedbackKind::Velocity);
        }
        let section = self
            .solver
            .as_ref()
            .ok_or_else(|| ConfigError("missing [solver] section".into()))?;
        parse_feedback(section.feedback.as_deref().unwrap_or("velocity"))
    }

    pub fn dynamics_config(&self) -> Result<DynamicsConfig, ConfigError> {
        let section = self
            .dynamics
            .as_ref()
            .ok_or_else(|| ConfigError("missing [dynamics] section".into()))?;
        let defaults = DynamicsConfig::default();
        Ok(DynamicsConfig {
            p: section.p,
            q: section.q.unwrap_or(defaults.q),
            gamma: section.gamma.unwrap_or(defaults.gamma),
            t0: section.t0.unwrap_or(defaults.t0),
            t_end: section.t_end,
            rel_tol: section.rel_tol.unwrap_or(defaults.rel_tol),
            abs_tol: section.abs_tol.unwrap_or(defaults.abs_tol),
            stop_grad_tol: section.stop_grad_tol.unwrap_or(defaults.stop_grad_tol),
            max_steps: section.max_steps.unwrap_or(defaults.max_steps),
        })
    }

    pub fn dynamics_feedback(&self) -> Result<FeedbackKind, ConfigError> {
        let section = self
            .dynamics
            .as_ref()
            .ok_or_else(|| ConfigError("missing [dynamics] section".into()))?;
        parse_feedback(section.feedback.as_deref().unwrap_or("velocity"))
    }

    pub fn lin_jordan_config(&self) -> Result<LinJordanConfig, ConfigError> {
        let section = self
            .dynamics
            .as_ref()
            .ok_or_else(|| ConfigError("missing [dynamics] section".into()))?;
        let defaults = LinJordanConfig::default();
        Ok(LinJordanConfig {
            p: section.p,
            c: section.c.unwrap_or(defaults.c),
            theta: section.theta.unwrap_or(defaults.theta),
            t_end: section.t_end,
            rel_tol: section.rel_tol.unwrap_or(defaults.rel_tol),
            abs_tol: section.abs_tol.unwrap_or(defaults.abs_tol),
            stop_grad_tol: section.stop_grad_tol.unwrap_or(defaults.stop_grad_tol),
            max_steps: section.max_steps.unwrap_or(defaults.max_steps),
        })
    }

    /// The sweep grid: every combination of the listed values, with absent
    /// axes pinned to the base configuration.
    pub fn sweep_cells(&self) -> Result<Vec<SweepCell>, ConfigError> {
        let sweep = self
            .sweep
            .as_ref()
            .ok_or_else(|| ConfigError("sweep requires a [sweep] section".into()))?;
        let base_p = if self.mode.is_discrete() {
            self.solver_config()?.p
        } else {
            self.dynamics_config()?.p
        };
        let ps = sweep.p.clone().unwrap_or_else(|| vec![base_p]);
        let qs = sweep.q.clone().unwrap_or_else(|| {
            vec![if self.mode.is_discrete() {
                1.0
            } else {
                self.dynamics_config().map(|d| d.q).unwrap_or(1.0)
            }]
        });
        let gammas = sweep.gamma.clone().unwrap_or_else(|| {
            vec![self
                .dynamics_config()
                .map(|d| d.gamma)
                .unwrap_or(f64::NAN)]
        });
        let feedbacks = match &sweep.feedback {
            Some(list) => list
                .iter()
                .map(|raw| parse_feedback(raw))
                .collect::<Result<Vec<_>, _>>()?,
            None => vec![if self.mode.is_discrete() {
                self.solver_feedback()?
            } else if matches!(self.mode, Mode::OdeClosedLoop | Mode::OdeSecondOrder) {
                self.dynamics_feedback()?
            } else {
                FeedbackKind::Gradient
            }],
        };
        let seeds = sweep.seed.clone().unwrap_or_else(|| vec![self.problem.seed]);

        let mut cells = Vec::new();
        for &p in &ps {
            for &q in &qs {
                for &gamma in &gammas {
                    for &feedback in &feedbacks {
                        for &seed in &seeds {
                            cells.push(SweepCell {
                                p,
                                q,
                                gamma,
                                feedback,
                                seed,
                            });
                        }
                    }
                }
            }
        }
        Ok(cells)
    }

    /// A copy of this config specialised to one sweep cell.
    pub fn for_cell(&self, cell: &SweepCell) -> ExperimentConfig {
        let mut config = self.clone();
        config.sweep = None;
        config.problem.seed = cell.seed;
        if let Some(solver) = config.solver.as_mut() {
            solver.p = cell.p;
            if self.mode == Mode::Peas {
                solver.feedback = Some(cell.feedback.to_string());
            }
        }
        if let Some(dynamics) = config.dynamics.as_mut() {
            dynamics.p = cell.p;
            if self.sweep.as_ref().is_some_and(|s| s.q.is_some()) {
                dynamics.q = Some(cell.q);
            }
            if self.sweep.as_ref().is_some_and(|s| s.gamma.is_some()) {
                dynamics.gamma = Some(cell.gamma);
            }
            if matches!(self.mode, Mode::OdeClosedLoop | Mode::OdeSecondOrder) {
                dynamics.feedback = Some(cell.feedback.to_string());
            }
        }
        config
    }
}

#[derive(Debug, Clone, Copy)]
pub struct SweepCell {
    pub p: f64,
    pub q: f64,
    pub gamma: f64,
    pub feedback: FeedbackKind,
    pub seed: u64,
}

impl SweepCell {
    pub fn dir_name(&self) -> String {
        let gamma = if self.gamma.is_nan() {
            String::new()
        } else {
            format!("_gamma{}", self.gamma)
        };
        format!(
            "p{}_q{}{gamma}_{}_seed{}",
            self.p, self.q, self.feedback, self.seed
        )
    }
}

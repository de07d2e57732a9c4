//! Single-run execution: build the problem, run the configured solver or
//! integrator, evaluate the checks and write the artifacts.

use std::fs;
use std::path::{Path, PathBuf};

use anyhow::Context;
use peas::analysis::{FeedbackKind, Verdict};
use peas::continuous::{
    integrate_closed_loop, integrate_lin_jordan, integrate_second_order,
    integrate_steepest_descent, IntegratorOptions,
};
use peas::discrete::{run_peas, run_peas_inertial};
use peas::objectives::{default_start, make_problem, Objective};

use crate::checks::{run_all_checks, RunOutput};
use crate::config::{ExperimentConfig, Mode};
use crate::report;

pub struct ExecutedRun {
    pub output: RunOutput,
    pub verdicts: Vec<Verdict>,
    pub objective: Objective,
}

impl ExecutedRun {
    pub fn all_passed(&self) -> bool {
        self.verdicts.iter().all(|v| !v.blocking_failure())
    }

    pub fn rate_verdict(&self) -> Option<&Verdict> {
        self.verdicts.iter().find(|v| v.name == "value_rate")
    }
}

pub fn execute(config: &ExperimentConfig) -> anyhow::Result<ExecutedRun> {
    let obj = make_problem(&config.problem).context("building the problem instance")?;
    let y0 = default_start(&config.problem);

    let (output, p, q, feedback) = match config.mode {
        Mode::Peas => {
            let solver = config.solver_config().map_err(anyhow::Error::msg)?;
            let feedback = config.solver_feedback().map_err(anyhow::Error::msg)?;
            let history =
                run_peas(&obj, &solver, feedback, &y0)?.with_problem(config.problem.clone());
            (RunOutput::Discrete(history), solver.p, 1.0, Some(feedback))
        }
        Mode::PeasInertial => {
            let solver = config.solver_config().map_err(anyhow::Error::msg)?;
            let history =
                run_peas_inertial(&obj, &solver, None, &y0)?.with_problem(config.problem.clone());
            (
                RunOutput::Discrete(history),
                solver.p,
                1.0,
                Some(FeedbackKind::Velocity),
            )
        }
        Mode::OdeClosedLoop => {
            let dynamics = config.dynamics_config().map_err(anyhow::Error::msg)?;
            let feedback = config.dynamics_feedback().map_err(anyhow::Error::msg)?;
            let trajectory = integrate_closed_loop(&obj, feedback, &dynamics, &y0, None)?;
            (
                RunOutput::Continuous(trajectory),
                dynamics.p,
                dynamics.q,
                Some(feedback),
            )
        }
        Mode::OdeSecondOrder => {
            let dynamics = config.dynamics_config().map_err(anyhow::Error::msg)?;
            let feedback = config.dynamics_feedback().map_err(anyhow::Error::msg)?;
            let trajectory = integrate_second_order(&obj, feedback, &dynamics, &y0, None)?;
            (
                RunOutput::Continuous(trajectory),
                dynamics.p,
                dynamics.q,
                Some(feedback),
            )
        }
        Mode::OdeSd => {
            let dynamics = config.dynamics_config().map_err(anyhow::Error::msg)?;
            let options = IntegratorOptions {
                rel_tol: dynamics.rel_tol,
                abs_tol: dynamics.abs_tol,
                max_steps: dynamics.max_steps,
                initial_step: None,
            };
            let trajectory =
                integrate_steepest_descent(&obj, &y0, dynamics.t_end, None, &options)?;
            (RunOutput::Continuous(trajectory), 1.0, 1.0, None)
        }
        Mode::OdeLinJordan => {
            let lj = config.lin_jordan_config().map_err(anyhow::Error::msg)?;
            let trajectory = integrate_lin_jordan(&obj, &lj, &y0, &y0)?;
            (RunOutput::Continuous(trajectory), lj.p, 2.0, None)
        }
    };

    let verdicts = run_all_checks(
        config.mode,
        &output,
        &obj,
        p,
        q,
        feedback,
        config.checks.as_deref(),
    );
    Ok(ExecutedRun {
        output,
        verdicts,
        objective: obj,
    })
}

/// Writes `history.csv` or `trajectory.csv` plus `report.json` into `dir`.
pub fn write_artifacts(
    dir: &Path,
    config: &ExperimentConfig,
    run: &ExecutedRun,
) -> anyhow::Result<()> {
    fs::create_dir_all(dir).with_context(|| format!("creating {}", dir.display()))?;
    match &run.output {
        RunOutput::Discrete(history) => {
            fs::write(
                dir.join("history.csv"),
                report::history_csv(history, &run.objective),
            )?;
        }
        RunOutput::Continuous(trajectory) => {
            fs::write(dir.join("trajectory.csv"), report::trajectory_csv(trajectory))?;
        }
    }
    let report = report::report_json(config, &run.output, &run.verdicts);
    fs::write(
        dir.join("report.json"),
        format!("{}\n", serde_json::to_string_pretty(&report)?),
    )?;
    Ok(())
}

/// Run directory policy: a fresh timestamped subdirectory of the output
/// root, unless `force` allows writing into the root itself.
pub fn resolve_run_dir(base: &Path, force: bool) -> anyhow::Result<PathBuf> {
    if force {
        fs::create_dir_all(base)?;
        return Ok(base.to_path_buf());
    }
    let stamp = chrono::Utc::now().format("%Y%m%dT%H%M%SZ").to_string();
    let mut candidate = base.join(&stamp);
    let mut suffix = 1;
    while candidate.exists() {
        suffix += 1;
        candidate = base.join(format!("{stamp}-{suffix}"));
    }
    fs::create_dir_all(&candidate)?;
    Ok(candidate)
}

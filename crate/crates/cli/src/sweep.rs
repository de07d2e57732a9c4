//! Parameter sweeps: the cartesian grid over p, q, gamma, feedback and seed
//! runs on a bounded worker pool; each cell writes its own artifact
//! directory and one row of `summary.csv`.

use std::fs;
use std::path::Path;

use anyhow::Context;
use rayon::prelude::*;

use crate::config::ExperimentConfig;
use crate::report::{summary_row, SUMMARY_HEADER};
use crate::run::{execute, write_artifacts};

pub struct SweepOutcome {
    pub cells: usize,
    pub failed_cells: usize,
}

pub fn run_sweep(
    config: &ExperimentConfig,
    dir: &Path,
    jobs: Option<usize>,
) -> anyhow::Result<SweepOutcome> {
    let cells = config.sweep_cells().map_err(anyhow::Error::msg)?;
    let workers = jobs
        .unwrap_or_else(|| {
            std::thread::available_parallelism()
                .map(|n| n.get())
                .unwrap_or(1)
        })
        .max(1);
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(workers)
        .build()
        .context("building the worker pool")?;

    // Each cell is fully independent; rows are assembled after the join in
    // grid order so the summary is deterministic.
    let rows: Vec<(String, bool)> = pool.install(|| {
        cells
            .par_iter()
            .map(|cell| {
                let cell_config = config.for_cell(cell);
                let cell_dir = dir.join(cell.dir_name());
                let feedback = cell.feedback.to_string();
                match cell_config
                    .validate()
                    .map_err(anyhow::Error::msg)
                    .and_then(|()| execute(&cell_config))
                    .and_then(|run| {
                        write_artifacts(&cell_dir, &cell_config, &run)?;
                        Ok(run)
                    }) {
                    Ok(run) => {
                        let rate = run.rate_verdict();
                        let row = summary_row(
                            cell.p,
                            cell.q,
                            cell.gamma,
                            &feedback,
                            rate.map(|v| v.measured),
                            rate.map(|v| v.target),
                            run.all_passed(),
                        );
                        (row, true)
                    }
                    Err(error) => {
                        eprintln!("cell {}: {error:#}", cell.dir_name());
                        let row = summary_row(
                            cell.p,
                            cell.q,
                            cell.gamma,
                            &feedback,
                            None,
                            None,
                            false,
                        );
                        (row, false)
                    }
                }
            })
            .collect()
    });

    let mut summary = String::from(SUMMARY_HEADER);
    let mut failed = 0;
    for (row, ok) in &rows {
        summary.push_str(row);
        if !ok {
            failed += 1;
        }
    }
    fs::write(dir.join("summary.csv"), summary)?;
    Ok(SweepOutcome {
        cells: rows.len(),
        failed_cells: failed,
    })
}

//! Experiment harness for the norm-PRR toolkit: flat-format experiment
//! configs, grid execution with per-epoch CSV output, curve aggregation,
//! SVG plots, and trace-level verification of the method's descent and
//! error estimates.

pub mod aggregate;
pub mod check;
pub mod config;
pub mod gen_data;
pub mod plot;
pub mod runner;

pub use config::{parse_config, ExperimentConfig};
pub use runner::{execute, HarnessError, OutputPaths};

/// `compare`: execute the grid, aggregate curves over seeds, and emit
/// plots unless suppressed.
pub fn compare(
    cfg: &ExperimentConfig,
    out: &OutputPaths,
    jobs: usize,
    seed_offset: u64,
    plots: bool,
) -> Result<(runner::GridResult, runner::RunSummary), HarnessError> {
    let (grid, summary) = runner::execute(cfg, out, jobs, seed_offset)?;
    let groups = aggregate::aggregate(&[out.runs_csv.as_path()])?;
    aggregate::write_aggregate_csv(&groups, &out.aggregate_csv)?;
    if plots {
        plot::emit_plot(&groups, plot::Metric::RelErr, &out.dir.join("rel_err.svg"))?;
        plot::emit_plot(&groups, plot::Metric::NatRes, &out.dir.join("nat_res.svg"))?;
    }
    Ok((grid, summary))
}

use std::result::Result;

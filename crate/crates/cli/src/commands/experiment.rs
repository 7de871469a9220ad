use anyhow::Context;
use sparse_fkrige::simgen::{run_experiment, summary_csv, ExperimentOptions};

use super::{binning, create_out_dir, cv_grid, designs, family, solver_config};
use crate::args::{DesignArgs, ExperimentArgs, FitArgs, GridArgs, SolverArgs};
use crate::config::Common;

/// Writes `experiment.csv` (one row per replicate and design),
/// `summary.csv` (mean and sd per design) and, with `--weights`,
/// `weights.csv`.
pub fn run(
    design: &DesignArgs,
    fit: &FitArgs,
    grid: &GridArgs,
    solver: &SolverArgs,
    experiment: &ExperimentArgs,
    common: &Common,
) -> anyhow::Result<()> {
    let designs = designs(design, common.seed)?;
    let options = ExperimentOptions {
        n_replicates: experiment.replicates.unwrap_or(20),
        grid: cv_grid(grid)?,
        sofk: solver_config(solver)?,
        binning: binning(fit)?,
        family: family(fit)?,
        record_weights: experiment.weights.unwrap_or(false),
    };
    create_out_dir(&common.out)?;

    let mut rows = String::new();
    let mut weights = String::new();
    let mut summaries = Vec::new();
    for (k, d) in designs.iter().enumerate() {
        log::info!(
            "design n={} range={}: {} replicates",
            d.n_observed,
            d.range,
            options.n_replicates
        );
        let table = run_experiment(d, &options)
            .with_context(|| format!("experiment stage (n = {}, range = {})", d.n_observed, d.range))?;
        let csv = table.to_csv();
        let body = csv.split_once('\n').map_or("", |(_, b)| b);
        if k == 0 {
            rows.push_str(csv.lines().next().unwrap_or_default());
            rows.push('\n');
        }
        rows.push_str(body);
        if options.record_weights {
            let csv = table.weights_csv();
            let (header, body) = csv.split_once('\n').unwrap_or((&csv, ""));
            if k == 0 {
                weights.push_str("n,range,");
                weights.push_str(header);
                weights.push('\n');
            }
            let prefix = format!("{},{},", d.n_observed, sparse_fkrige::io::fmt_real(d.range));
            for line in body.lines() {
                weights.push_str(&prefix);
                weights.push_str(line);
                weights.push('\n');
            }
        }
        summaries.push(table.summary());
    }
    let write = |name: &str, text: &str| {
        let path = common.out.join(name);
        std::fs::write(&path, text).with_context(|| format!("cannot write {}", path.display()))
    };
    write("experiment.csv", &rows)?;
    write("summary.csv", &summary_csv(&summaries))?;
    if options.record_weights {
        write("weights.csv", &weights)?;
    }
    Ok(())
}

mod experiment;
mod pipeline;
mod report;
mod simulate;

use std::path::{Path, PathBuf};

use anyhow::Context;
use sparse_fkrige::cv::CvGrid;
use sparse_fkrige::simgen::SimulationDesign;
use sparse_fkrige::variogram::BinningConfig;
use sparse_fkrige::{SofkConfig, VariogramFamily};

use crate::args::{Cli, Command, DesignArgs, FitArgs, GridArgs, SolverArgs};
use crate::config::{resolve_common, Common, ConfigFile, Layer};
use crate::failure::{usage, OrUsage};

pub fn run(cli: Cli) -> anyhow::Result<()> {
    let file = match &cli.common.config {
        Some(path) => ConfigFile::load(path)?,
        None => ConfigFile::default(),
    };
    let common = resolve_common(&cli.common, &file)?;
    let mut builder = rayon::ThreadPoolBuilder::new();
    if let Some(jobs) = common.jobs {
        builder = builder.num_threads(jobs);
    }
    let pool = builder.build().context("cannot start worker pool")?;
    pool.install(|| dispatch(cli.command, file, &common))
}

fn dispatch(command: Command, file: ConfigFile, common: &Common) -> anyhow::Result<()> {
    match command {
        Command::Simulate { mut design, replicate } => {
            design.layer(file.design);
            simulate::run(&design, replicate.unwrap_or(0), common)
        }
        Command::Smooth { mut input } => {
            input.layer(file.input);
            pipeline::smooth(&input, common)
        }
        Command::Variogram { mut input, mut fit } => {
            input.layer(file.input);
            fit.layer(file.fit);
            pipeline::variogram(&input, &fit, common)
        }
        Command::Krige {
            mut input,
            mut fit,
            mut grid,
            mut solver,
            mut krige,
        } => {
            input.layer(file.input);
            fit.layer(file.fit);
            grid.layer(file.grid);
            solver.layer(file.solver);
            krige.layer(file.krige);
            pipeline::krige(&input, &fit, &grid, &solver, &krige, common)
        }
        Command::CvSelect {
            mut input,
            mut fit,
            mut grid,
            mut solver,
        } => {
            input.layer(file.input);
            fit.layer(file.fit);
            grid.layer(file.grid);
            solver.layer(file.solver);
            pipeline::cv_select(&input, &fit, &grid, &solver, common)
        }
        Command::Experiment {
            mut design,
            mut fit,
            mut grid,
            mut solver,
            mut experiment,
        } => {
            design.layer(file.design);
            fit.layer(file.fit);
            grid.layer(file.grid);
            solver.layer(file.solver);
            experiment.layer(file.experiment);
            experiment::run(&design, &fit, &grid, &solver, &experiment, common)
        }
        Command::Report { mut report } => {
            report.layer(file.report);
            report::run(&report, common)
        }
    }
}

/// An input file that must exist before any work starts.
fn existing_file(path: Option<&PathBuf>, flag: &str) -> anyhow::Result<PathBuf> {
    match path {
        None => usage(format!("missing required input --{flag}")),
        Some(p) if !p.is_file() => usage(format!("--{flag}: no such file {}", p.display())),
        Some(p) => Ok(p.clone()),
    }
}

fn create_out_dir(out: &Path) -> anyhow::Result<()> {
    std::fs::create_dir_all(out).with_context(|| format!("cannot create output directory {}", out.display()))
}

fn family(fit: &FitArgs) -> anyhow::Result<VariogramFamily> {
    VariogramFamily::parse(fit.family.as_deref().unwrap_or("exponential"), fit.nu).or_usage("--family")
}

fn binning(fit: &FitArgs) -> anyhow::Result<BinningConfig> {
    let defaults = BinningConfig::default();
    let n_bins = fit.bins.unwrap_or(defaults.n_bins);
    if n_bins == 0 {
        return usage("--bins must be at least 1");
    }
    if let Some(c) = fit.cutoff {
        if !(c.is_finite() && c > 0.0) {
            return usage(format!("--cutoff must be positive, got {c}"));
        }
    }
    Ok(BinningConfig {
        n_bins,
        cutoff: fit.cutoff,
        ..defaults
    })
}

fn cv_grid(grid: &GridArgs) -> anyhow::Result<CvGrid> {
    if grid.etas.is_none() && grid.taus.is_none() {
        return Ok(CvGrid::default());
    }
    let default_etas = sparse_fkrige::cv::logspace(1e-4, 10.0, 12);
    let etas = grid.etas.as_deref().unwrap_or(&default_etas);
    let taus = grid.taus.as_deref().unwrap_or(&[0.5, 1.0, 2.0]);
    CvGrid::from_axes(etas, taus).or_usage("cross-validation grid")
}

fn solver_config(solver: &SolverArgs) -> anyhow::Result<SofkConfig> {
    let d = SofkConfig::default();
    let config = SofkConfig {
        rho0: solver.rho0.unwrap_or(d.rho0),
        feas_tol: solver.feas_tol.unwrap_or(d.feas_tol),
        inner_tol: solver.inner_tol.unwrap_or(d.inner_tol),
        max_outer: solver.max_outer.unwrap_or(d.max_outer),
        max_inner: solver.max_inner.unwrap_or(d.max_inner),
        zero_clip: solver.zero_clip.unwrap_or(d.zero_clip),
        ..d
    };
    config.validate().or_usage("solver settings")?;
    Ok(config)
}

/// Every `(n, range)` design requested, `n` outermost.
fn designs(design: &DesignArgs, seed: u64) -> anyhow::Result<Vec<SimulationDesign>> {
    let d = SimulationDesign::default();
    let Some(ranges) = design.range.as_deref() else {
        return usage("missing required --range");
    };
    let ns = design.n.clone().unwrap_or_else(|| vec![d.n_observed]);
    if ranges.is_empty() || ns.is_empty() {
        return usage("--n and --range need at least one value");
    }
    let mut out = Vec::new();
    for &n in &ns {
        for &range in ranges {
            let s = SimulationDesign {
                grid_side: design.grid_side.unwrap_or(d.grid_side),
                n_observed: n,
                range,
                sill: design.sill.unwrap_or(d.sill),
                nugget: design.nugget.unwrap_or(d.nugget),
                noise_sd: design.noise_sd.unwrap_or(d.noise_sd),
                n_time: design.n_time.unwrap_or(d.n_time),
                n_basis: design.n_basis.unwrap_or(d.n_basis),
                seed,
            };
            s.validate().or_usage("simulation design")?;
            out.push(s);
        }
    }
    Ok(out)
}

use std::path::PathBuf;

use clap::{Args, Parser, Subcommand};
use serde::Deserialize;

use crate::config::layered;

#[derive(Debug, Parser)]
#[command(name = "sfkrige", version, about = "Sparse ordinary kriging for functional data")]
pub struct Cli {
    #[command(flatten)]
    pub common: CommonArgs,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Clone, Default, Args)]
pub struct CommonArgs {
    /// TOML config file; flags take precedence over its values
    #[arg(long, global = true, value_name = "PATH")]
    pub config: Option<PathBuf>,
    /// Seed for simulated data
    #[arg(long, global = true)]
    pub seed: Option<u64>,
    /// Worker threads (default: all cores)
    #[arg(long, global = true)]
    pub jobs: Option<usize>,
    /// Output directory (created if missing; default `.`)
    #[arg(long, global = true, value_name = "DIR")]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Draw one replicate of the gridded simulation design
    Simulate {
        #[command(flatten)]
        design: DesignArgs,
        /// Replicate index (selects the random substreams)
        #[arg(long)]
        replicate: Option<usize>,
    },
    /// Fit basis coefficients to every site's series
    Smooth {
        #[command(flatten)]
        input: InputArgs,
    },
    /// Empirical trace-variogram and parametric fit
    Variogram {
        #[command(flatten)]
        input: InputArgs,
        #[command(flatten)]
        fit: FitArgs,
    },
    /// Predict a curve at a target location
    Krige {
        #[command(flatten)]
        input: InputArgs,
        #[command(flatten)]
        fit: FitArgs,
        #[command(flatten)]
        grid: GridArgs,
        #[command(flatten)]
        solver: SolverArgs,
        #[command(flatten)]
        krige: KrigeArgs,
    },
    /// Leave-one-out selection of the penalty parameters
    CvSelect {
        #[command(flatten)]
        input: InputArgs,
        #[command(flatten)]
        fit: FitArgs,
        #[command(flatten)]
        grid: GridArgs,
        #[command(flatten)]
        solver: SolverArgs,
    },
    /// Repeated simulation comparing sparse and ordinary kriging
    Experiment {
        #[command(flatten)]
        design: DesignArgs,
        #[command(flatten)]
        fit: FitArgs,
        #[command(flatten)]
        grid: GridArgs,
        #[command(flatten)]
        solver: SolverArgs,
        #[command(flatten)]
        experiment: ExperimentArgs,
    },
    /// Distance-binned weight summaries, histograms and curve plots
    Report {
        #[command(flatten)]
        report: ReportArgs,
    },
}

/// Simulation design. Config section `[design]`.
#[derive(Debug, Clone, Default, Args, Deserialize)]
#[serde(deny_unknown_fields, rename_all = "kebab-case")]
pub struct DesignArgs {
    /// Observed sites; a comma list runs each value (experiment)
    #[arg(long, value_delimiter = ',')]
    pub n: Option<Vec<usize>>,
    /// Exponential covariance range; a comma list runs each value (experiment)
    #[arg(long, value_delimiter = ',')]
    pub range: Option<Vec<f64>>,
    /// Field variance [default: 2]
    #[arg(long)]
    pub sill: Option<f64>,
    /// [default: 0]
    #[arg(long)]
    pub nugget: Option<f64>,
    /// Measurement noise standard deviation [default: 0.3]
    #[arg(long)]
    pub noise_sd: Option<f64>,
    /// Grid points per side on the unit square [default: 15]
    #[arg(long)]
    pub grid_side: Option<usize>,
    /// Observation times per site [default: 31]
    #[arg(long)]
    pub n_time: Option<usize>,
    /// Cubic B-spline basis size [default: 10]
    #[arg(long)]
    pub n_basis: Option<usize>,
}

layered!(DesignArgs {
    n,
    range,
    sill,
    nugget,
    noise_sd,
    grid_side,
    n_time,
    n_basis
});

/// Observed data and basis. Config section `[input]`.
#[derive(Debug, Clone, Default, Args, Deserialize)]
#[serde(deny_unknown_fields, rename_all = "kebab-case")]
pub struct InputArgs {
    /// CSV with header `site_id,x1,...,xd`
    #[arg(long, value_name = "PATH")]
    pub locations: Option<PathBuf>,
    /// CSV with header `site_id,t,value`
    #[arg(long, value_name = "PATH")]
    pub observations: Option<PathBuf>,
    /// Basis JSON; overrides the basis flags below
    #[arg(long, value_name = "PATH")]
    pub basis: Option<PathBuf>,
    /// `bspline` or `fourier` [default: bspline]
    #[arg(long)]
    pub basis_kind: Option<String>,
    /// Number of basis functions [default: 10]
    #[arg(long)]
    pub basis_size: Option<usize>,
    /// B-spline order [default: 4]
    #[arg(long)]
    pub order: Option<usize>,
    /// Time domain `lo,hi` [default: observed time range]
    #[arg(long, value_delimiter = ',', value_name = "LO,HI")]
    pub domain: Option<Vec<f64>>,
    /// Ridge penalty for smoothing [default: 0]
    #[arg(long)]
    pub ridge: Option<f64>,
}

layered!(InputArgs {
    locations,
    observations,
    basis,
    basis_kind,
    basis_size,
    order,
    domain,
    ridge
});

/// Variogram estimation. Config section `[fit]`.
#[derive(Debug, Clone, Default, Args, Deserialize)]
#[serde(deny_unknown_fields, rename_all = "kebab-case")]
pub struct FitArgs {
    /// `exponential`, `gaussian` or `matern` [default: exponential]
    #[arg(long)]
    pub family: Option<String>,
    /// Matérn smoothness: 0.5, 1.5 or 2.5 [default: 0.5]
    #[arg(long)]
    pub nu: Option<f64>,
    /// Number of lag bins [default: 15]
    #[arg(long)]
    pub bins: Option<usize>,
    /// Largest lag [default: half the largest site distance]
    #[arg(long)]
    pub cutoff: Option<f64>,
    /// Use this fitted model JSON instead of fitting
    #[arg(long, value_name = "PATH")]
    pub model: Option<PathBuf>,
}

layered!(FitArgs {
    family,
    nu,
    bins,
    cutoff,
    model
});

/// Cross-validation grid. Config section `[grid]`.
#[derive(Debug, Clone, Default, Args, Deserialize)]
#[serde(deny_unknown_fields, rename_all = "kebab-case")]
pub struct GridArgs {
    /// Penalty levels [default: 12 log-spaced values in 1e-4..10]
    #[arg(long, value_delimiter = ',')]
    pub etas: Option<Vec<f64>>,
    /// Adaptive weight exponents [default: 0.5,1,2]
    #[arg(long, value_delimiter = ',')]
    pub taus: Option<Vec<f64>>,
}

layered!(GridArgs { etas, taus });

/// Augmented Lagrangian solver. Config section `[solver]`.
#[derive(Debug, Clone, Default, Args, Deserialize)]
#[serde(deny_unknown_fields, rename_all = "kebab-case")]
pub struct SolverArgs {
    /// Initial penalty [default: 1]
    #[arg(long)]
    pub rho0: Option<f64>,
    /// Constraint tolerance [default: 1e-8]
    #[arg(long)]
    pub feas_tol: Option<f64>,
    /// Inner relative-change tolerance [default: 1e-10]
    #[arg(long)]
    pub inner_tol: Option<f64>,
    /// [default: 200]
    #[arg(long)]
    pub max_outer: Option<usize>,
    /// [default: 10000]
    #[arg(long)]
    pub max_inner: Option<usize>,
    /// Weights at or below this magnitude are reported as zero [default: 1e-10]
    #[arg(long)]
    pub zero_clip: Option<f64>,
}

layered!(SolverArgs {
    rho0,
    feas_tol,
    inner_tol,
    max_outer,
    max_inner,
    zero_clip
});

/// Target and estimator. Config section `[krige]`.
#[derive(Debug, Clone, Default, Args, Deserialize)]
#[serde(deny_unknown_fields, rename_all = "kebab-case")]
pub struct KrigeArgs {
    /// Predict this observed site from all the others
    #[arg(long, conflicts_with = "target")]
    pub target_site: Option<String>,
    /// Predict at these coordinates `x1,...,xd`
    #[arg(long, value_delimiter = ',')]
    pub target: Option<Vec<f64>>,
    /// Sparse kriging; without --eta the penalty is chosen by cross-validation
    #[arg(long, num_args = 0..=1, default_missing_value = "true")]
    pub sparse: Option<bool>,
    /// Fixed penalty level (implies --sparse)
    #[arg(long)]
    pub eta: Option<f64>,
    /// Adaptive weight exponent used with --eta [default: 1]
    #[arg(long)]
    pub tau: Option<f64>,
    /// Prediction grid size over the basis domain [default: 101]
    #[arg(long)]
    pub n_grid: Option<usize>,
}

layered!(KrigeArgs {
    target_site,
    target,
    sparse,
    eta,
    tau,
    n_grid
});

/// Config section `[experiment]`.
#[derive(Debug, Clone, Default, Args, Deserialize)]
#[serde(deny_unknown_fields, rename_all = "kebab-case")]
pub struct ExperimentArgs {
    /// Replicates per design [default: 20]
    #[arg(long)]
    pub replicates: Option<usize>,
    /// Also write every target's weights to weights.csv
    #[arg(long, num_args = 0..=1, default_missing_value = "true")]
    pub weights: Option<bool>,
}

layered!(ExperimentArgs { replicates, weights });

/// Config section `[report]`.
#[derive(Debug, Clone, Default, Args, Deserialize)]
#[serde(deny_unknown_fields, rename_all = "kebab-case")]
pub struct ReportArgs {
    /// Long-format weights CSV with `distance` and a weight column
    #[arg(long, value_name = "PATH")]
    pub weights: Option<PathBuf>,
    /// Weight column [default: `lambda`, else `lambda_sofk`]
    #[arg(long)]
    pub column: Option<String>,
    /// Curves CSV `target,t,predicted,observed`
    #[arg(long, value_name = "PATH")]
    pub curves: Option<PathBuf>,
    /// Distance bins [default: 10]
    #[arg(long)]
    pub bins: Option<usize>,
    /// Also render SVG figures
    #[arg(long, num_args = 0..=1, default_missing_value = "true")]
    pub svg: Option<bool>,
}

layered!(ReportArgs {
    weights,
    column,
    curves,
    bins,
    svg
});

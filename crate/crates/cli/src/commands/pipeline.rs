//! smooth, variogram, cv-select and krige: the estimation pipeline on
//! user-supplied data.

use std::fmt::Write as _;
use std::path::Path;

use anyhow::Context;
use nalgebra::DVector;
use rayon::prelude::*;
use serde::Serialize;
use sparse_fkrige::basis::smooth as smooth_table;
use sparse_fkrige::cv::{grid_select_with_folds, prepare_folds, CvReport, LooFold};
use sparse_fkrige::io::{
    euclidean, fmt_real, load_locations, load_longitudinal, read_json, write_coefficients, write_diagnostics,
    write_empirical_variogram, write_json, write_prediction, write_weights,
};
use sparse_fkrige::linalg::{ordered_sum, quad_form};
use sparse_fkrige::ofk::{build_system, ofk_solve, predict};
use sparse_fkrige::sofk::{augmented_lagrangian_solve, IterationRecord};
use sparse_fkrige::variogram::{empirical_trace_variogram, fit_model};
use sparse_fkrige::{
    BasisDescriptor, FunctionalDataset, KrigingSystem, OfkSolution, SofkConfig, SofkProblem, VariogramModel,
};

use super::{binning, create_out_dir, cv_grid, existing_file, family, solver_config};
use crate::args::{FitArgs, GridArgs, InputArgs, KrigeArgs, SolverArgs};
use crate::config::Common;
use crate::failure::{usage, OrUsage};

fn load_dataset(input: &InputArgs) -> anyhow::Result<FunctionalDataset> {
    let loc_path = existing_file(input.locations.as_ref(), "locations")?;
    let obs_path = existing_file(input.observations.as_ref(), "observations")?;
    let basis_path = match &input.basis {
        Some(_) => Some(existing_file(input.basis.as_ref(), "basis")?),
        None => None,
    };
    let ridge = input.ridge.unwrap_or(0.0);
    if !(ridge.is_finite() && ridge >= 0.0) {
        return usage(format!("--ridge must be nonnegative, got {ridge}"));
    }
    let locations = load_locations(&loc_path).context("reading locations")?;
    let table = load_longitudinal(&obs_path, &locations).context("reading observations")?;
    let basis = match basis_path {
        Some(p) => read_json::<BasisDescriptor>(&p).or_usage("--basis")?,
        None => {
            let domain = match input.domain.as_deref() {
                Some([lo, hi]) => (*lo, *hi),
                Some(_) => return usage("--domain takes two values `lo,hi`"),
                None => match table.time_range() {
                    Some(d) => d,
                    None => return usage("observations contain no times"),
                },
            };
            let m = input.basis_size.unwrap_or(10);
            match input.basis_kind.as_deref().unwrap_or("bspline") {
                "bspline" => BasisDescriptor::bspline(m, input.order.unwrap_or(4), domain).or_usage("basis")?,
                "fourier" => BasisDescriptor::fourier(m, domain, None).or_usage("basis")?,
                other => return usage(format!("unknown --basis-kind `{other}` (bspline or fourier)")),
            }
        }
    };
    smooth_table(&table, &locations, &basis, ridge).context("smoothing failed")
}

pub fn smooth(input: &InputArgs, common: &Common) -> anyhow::Result<()> {
    let dataset = load_dataset(input)?;
    create_out_dir(&common.out)?;
    write_coefficients(
        common.out.join("coefficients.csv"),
        &dataset.locations.ids(),
        &dataset.coefs,
    )?;
    write_json(common.out.join("basis.json"), &dataset.basis)?;
    log::info!(
        "smoothed {} sites onto {} basis functions",
        dataset.len(),
        dataset.basis.size()
    );
    Ok(())
}

/// Fits the variogram, or loads `--model`.
fn model_for(dataset: &FunctionalDataset, fit: &FitArgs, out: Option<&Path>) -> anyhow::Result<VariogramModel> {
    let family = family(fit)?;
    let binning = binning(fit)?;
    if let Some(path) = &fit.model {
        let path = existing_file(Some(path), "model")?;
        return read_json::<VariogramModel>(&path).or_usage("--model");
    }
    let gram = dataset.basis.gram_matrix();
    let emp = empirical_trace_variogram(dataset, &gram, &binning).context("variogram stage")?;
    if let Some(out) = out {
        write_empirical_variogram(out.join("empirical_variogram.csv"), &emp)?;
    }
    fit_model(&emp, family).context("variogram fit stage")
}

pub fn variogram(input: &InputArgs, fit: &FitArgs, common: &Common) -> anyhow::Result<()> {
    family(fit)?;
    binning(fit)?;
    let dataset = load_dataset(input)?;
    create_out_dir(&common.out)?;
    let model = model_for(&dataset, fit, Some(&common.out))?;
    write_json(common.out.join("model.json"), &model)?;
    Ok(())
}

fn cv_csv(report: &CvReport) -> String {
    let mut out = String::from("eta,tau,cv_score\n");
    for s in &report.scores {
        let _ = writeln!(out, "{},{},{}", fmt_real(s.eta), fmt_real(s.tau), fmt_real(s.cv_score));
    }
    out
}

fn write_text(path: &Path, text: &str) -> anyhow::Result<()> {
    std::fs::write(path, text).with_context(|| format!("cannot write {}", path.display()))
}

#[derive(Serialize)]
struct CvSummary {
    eta: f64,
    tau: f64,
    cv_score: f64,
    n_sites: usize,
    model: VariogramModel,
}

pub fn cv_select(
    input: &InputArgs,
    fit: &FitArgs,
    grid: &GridArgs,
    solver: &SolverArgs,
    common: &Common,
) -> anyhow::Result<()> {
    let cv = cv_grid(grid)?;
    let config = solver_config(solver)?;
    family(fit)?;
    binning(fit)?;
    let dataset = load_dataset(input)?;
    if dataset.len() < 3 {
        return usage(format!(
            "cross-validation needs at least 3 sites, found {}",
            dataset.len()
        ));
    }
    create_out_dir(&common.out)?;
    let model = model_for(&dataset, fit, Some(&common.out))?;
    let gram = dataset.basis.gram_matrix();
    let folds = prepare_folds(&dataset, &model).context("cross-validation stage")?;
    let report = grid_select_with_folds(&dataset, &folds, &gram, &cv, &config).context("cross-validation stage")?;
    write_text(&common.out.join("cv.csv"), &cv_csv(&report))?;
    write_json(common.out.join("model.json"), &model)?;
    let (eta, tau) = report.best_pair();
    write_json(
        common.out.join("cv_summary.json"),
        &CvSummary {
            eta,
            tau,
            cv_score: report.best_score(),
            n_sites: dataset.len(),
            model,
        },
    )?;
    Ok(())
}

/// What `krige` predicts.
enum Target {
    /// An observed site, removed from the data before anything is fitted.
    Site(usize),
    Coordinates(Vec<f64>),
    /// Every observed site in turn, each from all the others.
    LeaveOneOut,
}

/// Penalty choice for one run.
#[derive(Debug, Clone, Copy)]
enum Penalty {
    None,
    Fixed { eta: f64, tau: f64 },
    CrossValidated,
}

#[derive(Serialize)]
struct TargetSummary {
    target: String,
    support_size: usize,
    /// `|𝟙ᵀλ − 1|` before renormalisation (sparse) or of the kriging weights.
    feasibility_residual: f64,
    converged: bool,
    outer_iters: usize,
    mu: f64,
    /// Integrated squared error against the target's own smoothed curve.
    #[serde(skip_serializing_if = "Option::is_none")]
    ise: Option<f64>,
}

#[derive(Serialize)]
struct KrigeSummary {
    mode: &'static str,
    sparse: bool,
    eta: Option<f64>,
    tau: Option<f64>,
    cv_score: Option<f64>,
    n_sites: usize,
    model: VariogramModel,
    targets: Vec<TargetSummary>,
}

struct Solved {
    lambda: DVector<f64>,
    mu: f64,
    residual: f64,
    converged: bool,
    outer_iters: usize,
    trace: Vec<IterationRecord>,
}

fn solve_one(
    system: &KrigingSystem,
    ofk: &OfkSolution,
    penalty: Option<(f64, f64)>,
    config: &SofkConfig,
) -> sparse_fkrige::Result<Solved> {
    match penalty {
        None => Ok(Solved {
            residual: (ordered_sum(ofk.lambda.as_slice()) - 1.0).abs(),
            lambda: ofk.lambda.clone(),
            mu: ofk.mu,
            converged: true,
            outer_iters: 0,
            trace: Vec::new(),
        }),
        Some((eta, tau)) => {
            let problem = SofkProblem::new(system, ofk, eta, tau)?;
            let sol = augmented_lagrangian_solve(&problem, config)?;
            Ok(Solved {
                lambda: sol.lambda,
                mu: sol.mu,
                residual: sol.residual_before_renorm,
                converged: sol.converged,
                outer_iters: sol.outer_iters,
                trace: sol.trace,
            })
        }
    }
}

pub fn krige(
    input: &InputArgs,
    fit: &FitArgs,
    grid: &GridArgs,
    solver: &SolverArgs,
    krige: &KrigeArgs,
    common: &Common,
) -> anyhow::Result<()> {
    let cv = cv_grid(grid)?;
    let config = solver_config(solver)?;
    family(fit)?;
    binning(fit)?;
    let penalty = match (krige.eta, krige.sparse.unwrap_or(false)) {
        (Some(eta), _) => {
            let tau = krige.tau.unwrap_or(1.0);
            if !(eta.is_finite() && eta >= 0.0) || !(tau.is_finite() && tau > 0.0) {
                return usage(format!("need --eta ≥ 0 and --tau > 0, got {eta} and {tau}"));
            }
            Penalty::Fixed { eta, tau }
        }
        (None, true) => Penalty::CrossValidated,
        (None, false) => Penalty::None,
    };
    let n_grid = krige.n_grid.unwrap_or(101);
    if n_grid < 2 {
        return usage("--n-grid must be at least 2");
    }

    let full = load_dataset(input)?;
    let target = match (&krige.target_site, &krige.target) {
        (Some(id), _) => match full.locations.index_of(id) {
            Some(i) => Target::Site(i),
            None => return usage(format!("--target-site `{id}` is not in the locations file")),
        },
        (None, Some(coords)) => {
            if coords.len() != full.locations.dim() {
                return usage(format!(
                    "--target has {} coordinates but sites have {}",
                    coords.len(),
                    full.locations.dim()
                ));
            }
            Target::Coordinates(coords.clone())
        }
        (None, None) => Target::LeaveOneOut,
    };
    let training = match &target {
        Target::Site(i) => {
            let others: Vec<usize> = (0..full.len()).filter(|j| j != i).collect();
            full.subset(&others).context("selecting training sites")?
        }
        _ => full.clone(),
    };
    let min_sites = match (&target, penalty) {
        (Target::LeaveOneOut, _) | (_, Penalty::CrossValidated) => 3,
        _ => 1,
    };
    if training.len() < min_sites {
        return usage(format!(
            "this run needs at least {min_sites} training sites, found {}",
            training.len()
        ));
    }

    create_out_dir(&common.out)?;
    let out = &common.out;
    let model = model_for(&training, fit, Some(out))?;
    write_json(out.join("model.json"), &model)?;
    let gram = training.basis.gram_matrix();
    let (lo, hi) = training.basis.domain();
    let tgrid: Vec<f64> = (0..n_grid)
        .map(|k| {
            if k + 1 == n_grid {
                hi
            } else {
                lo + (hi - lo) * k as f64 / (n_grid - 1) as f64
            }
        })
        .collect();

    let needs_folds = matches!(target, Target::LeaveOneOut) || matches!(penalty, Penalty::CrossValidated);
    let folds: Vec<LooFold> = if needs_folds {
        prepare_folds(&training, &model).context("cross-validation stage")?
    } else {
        Vec::new()
    };
    let mut cv_score = None;
    let chosen = match penalty {
        Penalty::None => None,
        Penalty::Fixed { eta, tau } => Some((eta, tau)),
        Penalty::CrossValidated => {
            let report =
                grid_select_with_folds(&training, &folds, &gram, &cv, &config).context("cross-validation stage")?;
            write_text(&out.join("cv.csv"), &cv_csv(&report))?;
            cv_score = Some(report.best_score());
            Some(report.best_pair())
        }
    };

    let mut weights_long = String::from("target,site_id,distance,lambda\n");
    let mut curves = String::from("target,t,predicted,observed\n");
    let mut targets = Vec::new();
    let mode = match &target {
        Target::Site(_) | Target::Coordinates(_) => {
            let (label, s0, observed) = match &target {
                Target::Site(i) => (
                    full.locations.sites()[*i].id.clone(),
                    full.locations.coords(*i).to_vec(),
                    Some(full.evaluate_site(*i, &tgrid).context("evaluating target curve")?),
                ),
                Target::Coordinates(c) => ("target".to_string(), c.clone(), None),
                Target::LeaveOneOut => unreachable!(),
            };
            let points = training.locations.coord_slices();
            let system = build_system(&model, &points, &s0).context("kriging system")?;
            let ofk = ofk_solve(&system).context("ordinary kriging stage")?;
            let solved = solve_one(&system, &ofk, chosen, &config).context("sparse kriging stage")?;
            let prediction = predict(&solved.lambda, &training, &tgrid).context("prediction")?;
            let ids = training.locations.ids();
            write_weights(out.join("weights.csv"), &ids, solved.lambda.as_slice())?;
            write_prediction(out.join("prediction.csv"), &tgrid, &prediction.values)?;
            if chosen.is_some() {
                write_diagnostics(out.join("diagnostics.csv"), &solved.trace)?;
            }
            for (k, site) in training.locations.sites().iter().enumerate() {
                let _ = writeln!(
                    weights_long,
                    "{label},{},{},{}",
                    site.id,
                    fmt_real(euclidean(&s0, &site.coords)),
                    fmt_real(solved.lambda[k])
                );
            }
            push_curve(&mut curves, &label, &tgrid, &prediction.values, observed.as_deref());
            let ise = match &target {
                Target::Site(i) => Some(quad_form(&gram, &(full.coef(*i) - &prediction.coefs))),
                _ => None,
            };
            targets.push(summary_of(label, &solved, ise));
            if matches!(target, Target::Site(_)) {
                "site"
            } else {
                "coordinates"
            }
        }
        Target::LeaveOneOut => {
            let solved: Vec<Solved> = folds
                .par_iter()
                .map(|fold| {
                    solve_one(&fold.system, &fold.ofk, chosen, &config).with_context(|| {
                        format!(
                            "sparse kriging stage, site `{}`",
                            training.locations.sites()[fold.target].id
                        )
                    })
                })
                .collect::<anyhow::Result<_>>()?;
            for (fold, solved) in folds.iter().zip(&solved) {
                let label = training.locations.sites()[fold.target].id.clone();
                let s0 = training.locations.coords(fold.target);
                let mut w0 = DVector::zeros(training.basis.size());
                for (k, &j) in fold.others.iter().enumerate() {
                    w0 += training.coef(j) * solved.lambda[k];
                    let site = &training.locations.sites()[j];
                    let _ = writeln!(
                        weights_long,
                        "{label},{},{},{}",
                        site.id,
                        fmt_real(euclidean(s0, &site.coords)),
                        fmt_real(solved.lambda[k])
                    );
                }
                let predicted = training.basis.evaluate_function(w0.as_slice(), &tgrid)?;
                let observed = training.evaluate_site(fold.target, &tgrid)?;
                push_curve(&mut curves, &label, &tgrid, &predicted, Some(&observed));
                let ise = quad_form(&gram, &(training.coef(fold.target) - w0));
                targets.push(summary_of(label, solved, Some(ise)));
            }
            "leave-one-out"
        }
    };
    write_text(&out.join("weights_long.csv"), &weights_long)?;
    write_text(&out.join("curves.csv"), &curves)?;
    write_json(
        out.join("summary.json"),
        &KrigeSummary {
            mode,
            sparse: chosen.is_some(),
            eta: chosen.map(|c| c.0),
            tau: chosen.map(|c| c.1),
            cv_score,
            n_sites: training.len(),
            model,
            targets,
        },
    )?;
    Ok(())
}

fn summary_of(target: String, solved: &Solved, ise: Option<f64>) -> TargetSummary {
    TargetSummary {
        target,
        support_size: solved.lambda.iter().filter(|&&l| l != 0.0).count(),
        feasibility_residual: solved.residual,
        converged: solved.converged,
        outer_iters: solved.outer_iters,
        mu: solved.mu,
        ise,
    }
}

fn push_curve(out: &mut String, label: &str, grid: &[f64], predicted: &[f64], observed: Option<&[f64]>) {
    for (k, (t, p)) in grid.iter().zip(predicted).enumerate() {
        let obs = observed.map(|o| fmt_real(o[k])).unwrap_or_default();
        let _ = writeln!(out, "{label},{},{},{obs}", fmt_real(*t), fmt_real(*p));
    }
}

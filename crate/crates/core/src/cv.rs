//! Leave-one-out cross-validation over a grid of `(η, τ)` pairs.
//!
//! The score of a pair is `Σᵢ (wᵢ − ŵ₀⁽⁻ⁱ⁾)ᵀ Φ (wᵢ − ŵ₀⁽⁻ⁱ⁾)`: the integrated
//! squared error of predicting each site's curve from all other sites. The
//! variogram model is fitted once on the full dataset and shared by all
//! folds. Fold work may run in parallel; fold errors are always summed in
//! fold order.

use nalgebra::{DMatrix, DVector};
use rayon::prelude::*;
use serde::Serialize;

use crate::basis::FunctionalDataset;
use crate::error::{Error, Result};
use crate::linalg::quad_form;
use crate::ofk::{build_system, ofk_solve, KrigingSystem, OfkSolution};
use crate::sofk::{augmented_lagrangian_solve, SofkConfig, SofkProblem};
use crate::variogram::VariogramModel;

/// `n` points evenly spaced in log scale from `lo` to `hi` inclusive.
pub fn logspace(lo: f64, hi: f64, n: usize) -> Vec<f64> {
    match n {
        0 => Vec::new(),
        1 => vec![lo],
        _ => {
            let (a, b) = (lo.log10(), hi.log10());
            (0..n)
                .map(|k| 10f64.powf(a + (b - a) * k as f64 / (n - 1) as f64))
                .collect()
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct CvGrid {
    pairs: Vec<(f64, f64)>,
}

impl CvGrid {
    pub fn new(pairs: Vec<(f64, f64)>) -> Result<Self> {
        if pairs.is_empty() {
            return Err(Error::Contract("hyperparameter grid is empty".into()));
        }
        for (k, &(eta, tau)) in pairs.iter().enumerate() {
            if !(eta.is_finite() && eta >= 0.0) {
                return Err(Error::Contract(format!("grid eta must be ≥ 0, got {eta}")));
            }
            if !(tau.is_finite() && tau > 0.0) {
                return Err(Error::Contract(format!("grid tau must be > 0, got {tau}")));
            }
            if pairs[..k].contains(&(eta, tau)) {
                return Err(Error::Contract(format!("duplicate grid pair ({eta}, {tau})")));
            }
        }
        Ok(Self { pairs })
    }

    /// Cartesian product with `tau` outer and `eta` inner, both in the given order.
    pub fn from_axes(etas: &[f64], taus: &[f64]) -> Result<Self> {
        let pairs = taus
            .iter()
            .flat_map(|&tau| etas.iter().map(move |&eta| (eta, tau)))
            .collect();
        Self::new(pairs)
    }

    pub fn pairs(&self) -> &[(f64, f64)] {
        &self.pairs
    }

    pub fn len(&self) -> usize {
        self.pairs.len()
    }

    pub fn is_empty(&self) -> bool {
        self.pairs.is_empty()
    }
}

impl Default for CvGrid {
    /// η on 12 log-spaced values in [1e-4, 10], τ ∈ {0.5, 1, 2}.
    fn default() -> Self {
        Self::from_axes(&logspace(1e-4, 10.0, 12), &[0.5, 1.0, 2.0]).expect("default grid is valid")
    }
}

/// Ordinary kriging of site `target` from all other sites.
#[derive(Debug, Clone)]
pub struct LooFold {
    pub target: usize,
    /// Indices (into the full dataset) of the sites used for prediction.
    pub others: Vec<usize>,
    pub system: KrigingSystem,
    pub ofk: OfkSolution,
}

/// Builds every leave-one-out fold; these depend only on the variogram
/// model, so they are shared by all grid points.
pub fn prepare_folds(dataset: &FunctionalDataset, model: &VariogramModel) -> Result<Vec<LooFold>> {
    let n = dataset.len();
    if n < 3 {
        return Err(Error::Contract(format!(
            "leave-one-out cross-validation needs at least 3 sites, got {n}"
        )));
    }
    (0..n)
        .into_par_iter()
        .map(|i| {
            let others: Vec<usize> = (0..n).filter(|&j| j != i).collect();
            let points: Vec<&[f64]> = others.iter().map(|&j| dataset.locations.coords(j)).collect();
            let fold = build_system(model, &points, dataset.locations.coords(i))
                .and_then(|system| {
                    let ofk = ofk_solve(&system)?;
                    Ok(LooFold {
                        target: i,
                        others,
                        system,
                        ofk,
                    })
                })
                .map_err(|e| Error::Cv {
                    fold: i,
                    source: Box::new(e),
                })?;
            Ok(fold)
        })
        .collect()
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct FoldScore {
    pub fold: usize,
    pub error: f64,
    pub support_size: usize,
    pub converged: bool,
}

fn fold_error(dataset: &FunctionalDataset, gram: &DMatrix<f64>, fold: &LooFold, lambda: &DVector<f64>) -> f64 {
    let mut w0 = DVector::zeros(dataset.coefs.ncols());
    for (k, &j) in fold.others.iter().enumerate() {
        w0 += dataset.coefs.row(j).transpose() * lambda[k];
    }
    let d = dataset.coef(fold.target) - w0;
    quad_form(gram, &d).max(0.0)
}

/// Per-fold errors of the penalised predictor at `(eta, tau)`.
pub fn fold_scores(
    dataset: &FunctionalDataset,
    folds: &[LooFold],
    gram: &DMatrix<f64>,
    eta: f64,
    tau: f64,
    config: &SofkConfig,
) -> Result<Vec<FoldScore>> {
    folds
        .par_iter()
        .map(|fold| {
            let run = || -> Result<FoldScore> {
                let problem = SofkProblem::new(&fold.system, &fold.ofk, eta, tau)?;
                let sol = augmented_lagrangian_solve(&problem, config)?;
                Ok(FoldScore {
                    fold: fold.target,
                    error: fold_error(dataset, gram, fold, &sol.lambda),
                    support_size: sol.support_size(),
                    converged: sol.converged,
                })
            };
            run().map_err(|e| Error::Cv {
                fold: fold.target,
                source: Box::new(e),
            })
        })
        .collect()
}

/// Per-fold errors of ordinary kriging.
pub fn ofk_fold_scores(dataset: &FunctionalDataset, folds: &[LooFold], gram: &DMatrix<f64>) -> Vec<FoldScore> {
    folds
        .iter()
        .map(|fold| FoldScore {
            fold: fold.target,
            error: fold_error(dataset, gram, fold, &fold.ofk.lambda),
            support_size: fold.ofk.lambda.iter().filter(|&&l| l != 0.0).count(),
            converged: true,
        })
        .collect()
}

fn total(scores: &[FoldScore]) -> f64 {
    scores.iter().fold(0.0, |acc, s| acc + s.error)
}

/// Leave-one-out score of the penalised predictor at `(eta, tau)`.
pub fn loocv_score(
    dataset: &FunctionalDataset,
    model: &VariogramModel,
    gram: &DMatrix<f64>,
    eta: f64,
    tau: f64,
    config: &SofkConfig,
) -> Result<f64> {
    let folds = prepare_folds(dataset, model)?;
    Ok(total(&fold_scores(dataset, &folds, gram, eta, tau, config)?))
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct CvScore {
    pub eta: f64,
    pub tau: f64,
    pub cv_score: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct CvReport {
    pub scores: Vec<CvScore>,
    /// Index into `scores` of the selected pair.
    pub best: usize,
    /// Fold detail per grid point, same order as `scores`.
    pub folds: Vec<Vec<FoldScore>>,
}

impl CvReport {
    pub fn best_pair(&self) -> (f64, f64) {
        let s = &self.scores[self.best];
        (s.eta, s.tau)
    }

    pub fn best_score(&self) -> f64 {
        self.scores[self.best].cv_score
    }
}

/// Index of the minimum score; ties go to the smallest η, then the smallest τ.
pub fn argmin_with_ties(scores: &[CvScore]) -> usize {
    let mut best = 0;
    for (k, s) in scores.iter().enumerate().skip(1) {
        let b = &scores[best];
        let better = s.cv_score < b.cv_score
            || (s.cv_score == b.cv_score && (s.eta < b.eta || (s.eta == b.eta && s.tau < b.tau)));
        if better {
            best = k;
        }
    }
    best
}

/// Scores every grid pair with prepared folds.
pub fn grid_select_with_folds(
    dataset: &FunctionalDataset,
    folds: &[LooFold],
    gram: &DMatrix<f64>,
    grid: &CvGrid,
    config: &SofkConfig,
) -> Result<CvReport> {
    let per_pair: Vec<Vec<FoldScore>> = grid
        .pairs()
        .par_iter()
        .map(|&(eta, tau)| fold_scores(dataset, folds, gram, eta, tau, config))
        .collect::<Result<_>>()?;
    let scores: Vec<CvScore> = grid
        .pairs()
        .iter()
        .zip(&per_pair)
        .map(|(&(eta, tau), f)| CvScore {
            eta,
            tau,
            cv_score: total(f),
        })
        .collect();
    let best = argmin_with_ties(&scores);
    Ok(CvReport {
        scores,
        best,
        folds: per_pair,
    })
}

/// Scores every grid pair and selects the minimiser.
pub fn grid_select(
    dataset: &FunctionalDataset,
    model: &VariogramModel,
    gram: &DMatrix<f64>,
    grid: &CvGrid,
    config: &SofkConfig,
) -> Result<CvReport> {
    let folds = prepare_folds(dataset, model)?;
    grid_select_with_folds(dataset, &folds, gram, grid, config)
}

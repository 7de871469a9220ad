//! Synthetic spatially correlated functional data and the OFK-vs-SOFK
//! experiment loop.
//!
//! A square grid of candidate locations on `[0, 1]²` carries, for every basis
//! index independently, a zero-mean Gaussian field with exponential
//! covariance. A random subset of locations is observed at equally spaced
//! times on `[0, 1]` with Gaussian noise; the remaining locations are held
//! out and predicted.
//!
//! Random streams: every draw comes from a ChaCha8 generator seeded with the
//! design seed and switched to a substream identified by
//! `(replicate, purpose, index)`, so replicates can run in any order or in
//! parallel and still produce identical numbers.

use std::fmt::Write as _;
use std::path::Path;

use nalgebra::{DMatrix, DVector};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};
use rayon::prelude::*;

use crate::basis::{smooth, BasisDescriptor};
use crate::cv::{grid_select_with_folds, prepare_folds, CvGrid};
use crate::error::{Error, Result};
use crate::io::{euclidean, fmt_real, LocationSet, LongitudinalTable, Site, SiteSeries};
use crate::linalg::{cholesky_with_jitter, quad_form};
use crate::ofk::{build_system, ofk_solve};
use crate::sofk::{augmented_lagrangian_solve, SofkConfig, SofkProblem};
use crate::variogram::{empirical_trace_variogram, fit_model, BinningConfig, MaternNu, VariogramFamily};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SimulationDesign {
    pub grid_side: usize,
    pub n_observed: usize,
    pub range: f64,
    pub sill: f64,
    pub nugget: f64,
    pub noise_sd: f64,
    pub n_time: usize,
    pub n_basis: usize,
    pub seed: u64,
}

impl Default for SimulationDesign {
    fn default() -> Self {
        Self {
            grid_side: 15,
            n_observed: 50,
            range: 5.0,
            sill: 2.0,
            nugget: 0.0,
            noise_sd: 0.3,
            n_time: 31,
            n_basis: 10,
            seed: 0,
        }
    }
}

impl SimulationDesign {
    pub fn validate(&self) -> Result<()> {
        if self.grid_side < 2 {
            return Err(Error::Sim(format!("grid_side must be ≥ 2, got {}", self.grid_side)));
        }
        let total = self.grid_side * self.grid_side;
        if self.n_observed == 0 || self.n_observed > total {
            return Err(Error::Sim(format!(
                "n_observed must lie in 1..={total}, got {}",
                self.n_observed
            )));
        }
        if !(self.range.is_finite() && self.range > 0.0) {
            return Err(Error::Sim(format!("range must be positive, got {}", self.range)));
        }
        if !(self.sill.is_finite() && self.sill > 0.0) {
            return Err(Error::Sim(format!("sill must be positive, got {}", self.sill)));
        }
        if !(self.nugget.is_finite() && self.nugget >= 0.0) {
            return Err(Error::Sim(format!("nugget must be ≥ 0, got {}", self.nugget)));
        }
        if !(self.noise_sd.is_finite() && self.noise_sd >= 0.0) {
            return Err(Error::Sim(format!("noise_sd must be ≥ 0, got {}", self.noise_sd)));
        }
        if self.n_basis < 4 || self.n_time < 2 {
            return Err(Error::Sim("need at least 4 basis functions and 2 time points".into()));
        }
        Ok(())
    }

    pub fn basis(&self) -> Result<BasisDescriptor> {
        BasisDescriptor::bspline(self.n_basis, 4, (0.0, 1.0))
    }

    pub fn times(&self) -> Vec<f64> {
        (0..self.n_time).map(|j| j as f64 / (self.n_time - 1) as f64).collect()
    }
}

#[derive(Debug, Clone, Copy)]
#[repr(u64)]
enum Purpose {
    Field = 1,
    Select = 2,
    Noise = 3,
}

fn substream(seed: u64, replicate: usize, purpose: Purpose, index: usize) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(((replicate as u64) << 24) | ((purpose as u64) << 20) | index as u64);
    rng
}

/// `side × side` equally spaced locations on `[0, 1]²`, row-major.
pub fn grid_locations(side: usize) -> LocationSet {
    let step = 1.0 / (side - 1) as f64;
    let sites = (0..side * side)
        .map(|k| Site {
            id: format!("g{k:03}"),
            coords: vec![(k % side) as f64 * step, (k / side) as f64 * step],
        })
        .collect();
    LocationSet::new(sites).expect("grid locations are distinct")
}

/// Field covariance `nugget·δ + sill·exp(−d/range)` over `locations`.
pub fn field_covariance(design: &SimulationDesign, locations: &LocationSet) -> DMatrix<f64> {
    let n = locations.len();
    DMatrix::from_fn(n, n, |i, j| {
        if i == j {
            design.sill + design.nugget
        } else {
            design.sill * (-euclidean(locations.coords(i), locations.coords(j)) / design.range).exp()
        }
    })
}

/// True coefficients over the whole grid plus the observed/held-out split.
#[derive(Debug, Clone, PartialEq)]
pub struct SimulatedField {
    pub locations: LocationSet,
    /// `grid_side² × M`.
    pub truth: DMatrix<f64>,
    /// Sorted indices of observed locations.
    pub observed: Vec<usize>,
    pub held_out: Vec<usize>,
}

impl SimulatedField {
    /// True coefficients of the observed sites (row order = `observed`).
    pub fn observed_truth(&self) -> DMatrix<f64> {
        self.truth.select_rows(&self.observed)
    }
}

/// Draws one replicate's coefficient fields and observed subset.
pub fn generate_coefficients(design: &SimulationDesign, replicate: usize) -> Result<SimulatedField> {
    design.validate()?;
    let locations = grid_locations(design.grid_side);
    let cov = field_covariance(design, &locations);
    let (chol, _) = cholesky_with_jitter(&cov, 1e-10 * design.sill, 1)
        .ok_or_else(|| Error::Sim("field covariance is not positive definite".into()))?;
    let l = chol.l();
    let total = locations.len();
    let mut truth = DMatrix::zeros(total, design.n_basis);
    for m in 0..design.n_basis {
        let mut rng = substream(design.seed, replicate, Purpose::Field, m);
        let z = DVector::from_fn(total, |_, _| StandardNormal.sample(&mut rng));
        truth.set_column(m, &(&l * z));
    }
    let mut rng = substream(design.seed, replicate, Purpose::Select, 0);
    let mut observed = rand::seq::index::sample(&mut rng, total, design.n_observed).into_vec();
    observed.sort_unstable();
    let held_out = (0..total).filter(|k| observed.binary_search(k).is_err()).collect();
    Ok(SimulatedField {
        locations,
        truth,
        observed,
        held_out,
    })
}

/// Noisy observations `wᵢᵀφ(tⱼ) + εᵢⱼ` at the observed sites of `field`.
pub fn generate_longitudinal(
    field: &SimulatedField,
    design: &SimulationDesign,
    replicate: usize,
) -> Result<(LocationSet, LongitudinalTable)> {
    let basis = design.basis()?;
    let times = design.times();
    let x = basis.design_matrix(&times)?;
    let locations = field.locations.subset(&field.observed)?;
    let series = field
        .observed
        .iter()
        .map(|&site| {
            let mut rng = substream(design.seed, replicate, Purpose::Noise, site);
            let clean = &x * field.truth.row(site).transpose();
            let values = clean
                .iter()
                .map(|v| {
                    let e: f64 = StandardNormal.sample(&mut rng);
                    v + design.noise_sd * e
                })
                .collect();
            SiteSeries {
                times: times.clone(),
                values,
            }
        })
        .collect();
    let table = LongitudinalTable::new(&locations, series)?;
    Ok((locations, table))
}

#[derive(Debug, Clone, PartialEq)]
pub struct ExperimentOptions {
    pub n_replicates: usize,
    pub grid: CvGrid,
    pub sofk: SofkConfig,
    pub binning: BinningConfig,
    pub family: VariogramFamily,
    /// Keep per-target weights for distance summaries.
    pub record_weights: bool,
}

impl Default for ExperimentOptions {
    fn default() -> Self {
        Self {
            n_replicates: 20,
            grid: CvGrid::default(),
            sofk: SofkConfig::default(),
            binning: BinningConfig::default(),
            family: VariogramFamily::Matern(MaternNu::Half),
            record_weights: false,
        }
    }
}

/// Weight given to an observed site when predicting a held-out target.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct WeightRecord {
    /// Grid index of the held-out target.
    pub target: usize,
    /// Grid index of the observed site.
    pub site: usize,
    pub distance: f64,
    pub sofk: f64,
    pub ofk: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ReplicateResult {
    pub replicate: usize,
    pub sofk_mse: f64,
    pub ofk_mse: f64,
    pub nonzero_mean: f64,
    pub eta: f64,
    pub tau: f64,
    pub weights: Vec<WeightRecord>,
}

/// Runs the estimation pipeline on one replicate. The estimator only sees the
/// observed sites' noisy series; held-out truth is used for scoring alone.
pub fn run_replicate(
    design: &SimulationDesign,
    options: &ExperimentOptions,
    replicate: usize,
) -> Result<ReplicateResult> {
    let field = generate_coefficients(design, replicate)?;
    let (locations, table) = generate_longitudinal(&field, design, replicate)?;
    let targets: Vec<(usize, Vec<f64>)> = field
        .held_out
        .iter()
        .map(|&k| (k, field.locations.coords(k).to_vec()))
        .collect();
    let estimates = estimate_targets(&locations, &table, design.basis()?, &targets, options)?;

    let gram = design.basis()?.gram_matrix();
    let mut sofk_sum = 0.0;
    let mut ofk_sum = 0.0;
    let mut nonzero = 0usize;
    let mut weights = Vec::new();
    for est in &estimates {
        let truth = field.truth.row(est.target).transpose();
        sofk_sum += quad_form(&gram, &(&truth - &est.sofk_coefs));
        ofk_sum += quad_form(&gram, &(&truth - &est.ofk_coefs));
        nonzero += est.support;
        if options.record_weights {
            for (k, &site) in field.observed.iter().enumerate() {
                weights.push(WeightRecord {
                    target: est.target,
                    site,
                    distance: euclidean(field.locations.coords(est.target), field.locations.coords(site)),
                    sofk: est.sofk_lambda[k],
                    ofk: est.ofk_lambda[k],
                });
            }
        }
    }
    let count = estimates.len().max(1) as f64;
    let (eta, tau) = estimates.first().map(|e| (e.eta, e.tau)).unwrap_or((0.0, 0.0));
    Ok(ReplicateResult {
        replicate,
        sofk_mse: sofk_sum / count,
        ofk_mse: ofk_sum / count,
        nonzero_mean: nonzero as f64 / count,
        eta,
        tau,
        weights,
    })
}

struct TargetEstimate {
    target: usize,
    sofk_coefs: DVector<f64>,
    ofk_coefs: DVector<f64>,
    sofk_lambda: DVector<f64>,
    ofk_lambda: DVector<f64>,
    support: usize,
    eta: f64,
    tau: f64,
}

/// Smooth, fit, cross-validate, then predict every target with both
/// estimators.
fn estimate_targets(
    locations: &LocationSet,
    table: &LongitudinalTable,
    basis: BasisDescriptor,
    targets: &[(usize, Vec<f64>)],
    options: &ExperimentOptions,
) -> Result<Vec<TargetEstimate>> {
    let dataset = smooth(table, locations, &basis, 0.0)?;
    let gram = basis.gram_matrix();
    let emp = empirical_trace_variogram(&dataset, &gram, &options.binning)?;
    let model = fit_model(&emp, options.family)?;
    let folds = prepare_folds(&dataset, &model)?;
    let report = grid_select_with_folds(&dataset, &folds, &gram, &options.grid, &options.sofk)?;
    let (eta, tau) = report.best_pair();
    let points = locations.coord_slices();
    targets
        .par_iter()
        .map(|(target, s0)| {
            let system = build_system(&model, &points, s0)?;
            let ofk = ofk_solve(&system)?;
            let problem = SofkProblem::new(&system, &ofk, eta, tau)?;
            let sol = augmented_lagrangian_solve(&problem, &options.sofk)?;
            Ok(TargetEstimate {
                target: *target,
                sofk_coefs: dataset.coefs.tr_mul(&sol.lambda),
                ofk_coefs: dataset.coefs.tr_mul(&ofk.lambda),
                support: sol.support_size(),
                sofk_lambda: sol.lambda,
                ofk_lambda: ofk.lambda,
                eta,
                tau,
            })
        })
        .collect()
}

#[derive(Debug, Clone, PartialEq)]
pub struct ExperimentTable {
    pub design: SimulationDesign,
    pub rows: Vec<ReplicateResult>,
}

/// Mean and sample standard deviation.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MeanSd {
    pub mean: f64,
    pub sd: f64,
}

impl MeanSd {
    pub fn of(values: &[f64]) -> Self {
        let n = values.len();
        if n == 0 {
            return Self {
                mean: f64::NAN,
                sd: f64::NAN,
            };
        }
        let mean = values.iter().sum::<f64>() / n as f64;
        let sd = if n > 1 {
            (values.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / (n - 1) as f64).sqrt()
        } else {
            0.0
        };
        Self { mean, sd }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ExperimentSummary {
    pub n: usize,
    pub range: f64,
    pub sofk_mse: MeanSd,
    pub ofk_mse: MeanSd,
    pub nonzero: MeanSd,
}

impl ExperimentTable {
    pub fn summary(&self) -> ExperimentSummary {
        let col = |f: fn(&ReplicateResult) -> f64| self.rows.iter().map(f).collect::<Vec<_>>();
        ExperimentSummary {
            n: self.design.n_observed,
            range: self.design.range,
            sofk_mse: MeanSd::of(&col(|r| r.sofk_mse)),
            ofk_mse: MeanSd::of(&col(|r| r.ofk_mse)),
            nonzero: MeanSd::of(&col(|r| r.nonzero_mean)),
        }
    }

    /// `replicate,n,range,sofk_mse,ofk_mse,nonzero_mean`.
    pub fn to_csv(&self) -> String {
        let mut out = String::from("replicate,n,range,sofk_mse,ofk_mse,nonzero_mean\n");
        for r in &self.rows {
            let _ = writeln!(
                out,
                "{},{},{},{},{},{}",
                r.replicate,
                self.design.n_observed,
                fmt_real(self.design.range),
                fmt_real(r.sofk_mse),
                fmt_real(r.ofk_mse),
                fmt_real(r.nonzero_mean)
            );
        }
        out
    }

    /// `replicate,target,site,distance,lambda_sofk,lambda_ofk`.
    pub fn weights_csv(&self) -> String {
        let mut out = String::from("replicate,target,site,distance,lambda_sofk,lambda_ofk\n");
        for r in &self.rows {
            for w in &r.weights {
                let _ = writeln!(
                    out,
                    "{},g{:03},g{:03},{},{},{}",
                    r.replicate,
                    w.target,
                    w.site,
                    fmt_real(w.distance),
                    fmt_real(w.sofk),
                    fmt_real(w.ofk)
                );
            }
        }
        out
    }
}

/// Table-style summary rows:
/// `n,range,sofk_mse_mean,sofk_mse_sd,ofk_mse_mean,ofk_mse_sd,nonzero_mean,nonzero_sd`.
pub fn summary_csv(summaries: &[ExperimentSummary]) -> String {
    let mut out = String::from("n,range,sofk_mse_mean,sofk_mse_sd,ofk_mse_mean,ofk_mse_sd,nonzero_mean,nonzero_sd\n");
    for s in summaries {
        let _ = writeln!(
            out,
            "{},{},{},{},{},{},{},{}",
            s.n,
            fmt_real(s.range),
            fmt_real(s.sofk_mse.mean),
            fmt_real(s.sofk_mse.sd),
            fmt_real(s.ofk_mse.mean),
            fmt_real(s.ofk_mse.sd),
            fmt_real(s.nonzero.mean),
            fmt_real(s.nonzero.sd)
        );
    }
    out
}

pub fn write_text(path: impl AsRef<Path>, text: &str) -> Result<()> {
    let path = path.as_ref();
    std::fs::write(path, text).map_err(|e| Error::io(path, e))
}

/// Runs `options.n_replicates` replicates (in parallel on the current rayon
/// pool); rows come back in replicate order.
pub fn run_experiment(design: &SimulationDesign, options: &ExperimentOptions) -> Result<ExperimentTable> {
    design.validate()?;
    let rows = (0..options.n_replicates)
        .into_par_iter()
        .map(|r| {
            run_replicate(design, options, r).map_err(|e| Error::Replicate {
                replicate: r,
                source: Box::new(e),
            })
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(ExperimentTable { design: *design, rows })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn grid_has_225_sites() {
        let g = grid_locations(15);
        assert_eq!(g.len(), 225);
        assert_eq!(g.coords(224), &[1.0, 1.0]);
    }

    #[test]
    fn equal_distances_give_equal_covariances() {
        let d = SimulationDesign::default();
        let g = grid_locations(15);
        let cov = field_covariance(&d, &g);
        // (0,1) and (1,2) are both horizontal neighbours
        assert_eq!(cov[(0, 1)], cov[(1, 2)]);
        assert_eq!(cov[(0, 15)], cov[(0, 1)]);
    }

    #[test]
    fn fixed_seed_is_bit_identical() {
        let d = SimulationDesign {
            seed: 42,
            ..Default::default()
        };
        let a = generate_coefficients(&d, 3).unwrap();
        let b = generate_coefficients(&d, 3).unwrap();
        assert_eq!(a, b);
        let c = generate_coefficients(&d, 4).unwrap();
        assert_ne!(a.truth, c.truth);
        assert_eq!(a.observed.len(), 50);
        assert_eq!(a.held_out.len(), 175);
    }

    #[test]
    fn noiseless_observations_lie_on_curves() {
        let d = SimulationDesign {
            noise_sd: 0.0,
            n_observed: 10,
            ..Default::default()
        };
        let f = generate_coefficients(&d, 0).unwrap();
        let (_, table) = generate_longitudinal(&f, &d, 0).unwrap();
        let basis = d.basis().unwrap();
        for (k, &site) in f.observed.iter().enumerate() {
            let s = table.series(k);
            assert_eq!(s.len(), 31);
            let w: Vec<f64> = f.truth.row(site).iter().copied().collect();
            let clean = basis.evaluate_function(&w, &s.times).unwrap();
            for (a, b) in clean.iter().zip(&s.values) {
                assert!((a - b).abs() < 1e-12);
            }
        }
    }

    #[test]
    fn invalid_designs() {
        assert!(SimulationDesign {
            n_observed: 300,
            ..Default::default()
        }
        .validate()
        .is_err());
        assert!(SimulationDesign {
            range: 0.0,
            ..Default::default()
        }
        .validate()
        .is_err());
    }

    #[test]
    fn zero_replicates_is_empty() {
        let d = SimulationDesign::default();
        let opts = ExperimentOptions {
            n_replicates: 0,
            ..Default::default()
        };
        let t = run_experiment(&d, &opts).unwrap();
        assert!(t.rows.is_empty());
        assert_eq!(t.to_csv().lines().count(), 1);
    }
}

//! Trace-variogram estimation and parametric models.
//!
//! The empirical trace-variogram of a functional dataset is, per distance
//! bin, half the mean integrated squared difference between curves of site
//! pairs falling in that bin. With curves in a basis expansion the integral
//! reduces to the quadratic form `(wᵢ − wⱼ)ᵀ Φ (wᵢ − wⱼ)`.

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use crate::basis::FunctionalDataset;
use crate::error::{Error, Result};
use crate::io::euclidean;
use crate::linalg::quad_form;
use crate::optim::NelderMead;

pub const VARIOGRAM_SCHEMA_VERSION: u32 = 1;

/// `(wᵢ − wⱼ)ᵀ Φ (wᵢ − wⱼ)`: the integrated squared distance between two
/// curves in the same basis.
pub fn functional_sq_distance(wi: &DVector<f64>, wj: &DVector<f64>, gram: &DMatrix<f64>) -> Result<f64> {
    if wi.len() != wj.len() || gram.nrows() != wi.len() || gram.ncols() != wi.len() {
        return Err(Error::Contract(format!(
            "coefficient lengths {} and {} against a {}×{} Gram matrix",
            wi.len(),
            wj.len(),
            gram.nrows(),
            gram.ncols()
        )));
    }
    let d = wi - wj;
    Ok(quad_form(gram, &d).max(0.0))
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct VariogramBin {
    /// Mean distance of the pairs in the bin.
    pub r_center: f64,
    pub gamma_hat: f64,
    pub pair_count: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EmpiricalTraceVariogram {
    pub bins: Vec<VariogramBin>,
    pub cutoff: f64,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BinningConfig {
    pub n_bins: usize,
    /// Largest lag used; `None` means half the largest inter-site distance.
    pub cutoff: Option<f64>,
    pub min_pairs: usize,
}

impl Default for BinningConfig {
    fn default() -> Self {
        Self {
            n_bins: 15,
            cutoff: None,
            min_pairs: 1,
        }
    }
}

/// Largest distance between any two of `points`.
pub fn max_distance(points: &[&[f64]]) -> f64 {
    let mut best = 0.0f64;
    for i in 0..points.len() {
        for j in (i + 1)..points.len() {
            best = best.max(euclidean(points[i], points[j]));
        }
    }
    best
}

/// Equal-width binned estimate on `(0, cutoff]`.
pub fn empirical_trace_variogram(
    dataset: &FunctionalDataset,
    gram: &DMatrix<f64>,
    config: &BinningConfig,
) -> Result<EmpiricalTraceVariogram> {
    let n = dataset.len();
    if n < 2 {
        return Err(Error::Variogram(format!("need at least 2 sites, got {n}")));
    }
    if config.n_bins == 0 {
        return Err(Error::Variogram("n_bins must be positive".into()));
    }
    let points = dataset.locations.coord_slices();
    let cutoff = config.cutoff.unwrap_or_else(|| 0.5 * max_distance(&points));
    if !(cutoff.is_finite() && cutoff > 0.0) {
        return Err(Error::Variogram(format!("cutoff must be positive, got {cutoff}")));
    }
    let width = cutoff / config.n_bins as f64;
    let coefs: Vec<DVector<f64>> = (0..n).map(|i| dataset.coef(i)).collect();

    let mut sum_sq = vec![0.0; config.n_bins];
    let mut sum_r = vec![0.0; config.n_bins];
    let mut count = vec![0usize; config.n_bins];
    for i in 0..n {
        for j in (i + 1)..n {
            let r = euclidean(points[i], points[j]);
            if r > cutoff || r <= 0.0 {
                continue;
            }
            let b = ((r / width).ceil() as usize).clamp(1, config.n_bins) - 1;
            sum_sq[b] += functional_sq_distance(&coefs[i], &coefs[j], gram)?;
            sum_r[b] += r;
            count[b] += 1;
        }
    }
    if count.iter().all(|&c| c == 0) {
        return Err(Error::Variogram(format!("no site pair within cutoff {cutoff}")));
    }
    let bins = (0..config.n_bins)
        .filter(|&b| count[b] > 0 && count[b] >= config.min_pairs)
        .map(|b| VariogramBin {
            r_center: sum_r[b] / count[b] as f64,
            gamma_hat: sum_sq[b] / (2.0 * count[b] as f64),
            pair_count: count[b],
        })
        .collect();
    Ok(EmpiricalTraceVariogram { bins, cutoff })
}

/// Half-integer Matérn smoothness values with closed-form correlations.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum MaternNu {
    Half,
    ThreeHalves,
    FiveHalves,
}

impl MaternNu {
    pub fn from_value(nu: f64) -> Result<Self> {
        match nu {
            0.5 => Ok(Self::Half),
            1.5 => Ok(Self::ThreeHalves),
            2.5 => Ok(Self::FiveHalves),
            other => Err(Error::Data(format!(
                "Matérn smoothness must be 0.5, 1.5 or 2.5, got {other}"
            ))),
        }
    }

    pub fn value(self) -> f64 {
        match self {
            Self::Half => 0.5,
            Self::ThreeHalves => 1.5,
            Self::FiveHalves => 2.5,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum VariogramFamily {
    Exponential,
    Gaussian,
    Matern(MaternNu),
}

impl VariogramFamily {
    pub fn parse(name: &str, nu: Option<f64>) -> Result<Self> {
        match name {
            "exponential" => Ok(Self::Exponential),
            "gaussian" => Ok(Self::Gaussian),
            "matern" => Ok(Self::Matern(MaternNu::from_value(nu.unwrap_or(0.5))?)),
            other => Err(Error::Data(format!("unknown variogram family `{other}`"))),
        }
    }

    pub fn name(self) -> &'static str {
        match self {
            Self::Exponential => "exponential",
            Self::Gaussian => "gaussian",
            Self::Matern(_) => "matern",
        }
    }

    /// Correlation at distance `r` for scale `range`.
    fn correlation(self, r: f64, range: f64) -> f64 {
        let h = r / range;
        match self {
            Self::Exponential | Self::Matern(MaternNu::Half) => (-h).exp(),
            Self::Gaussian => (-h * h).exp(),
            Self::Matern(MaternNu::ThreeHalves) => {
                let u = 3f64.sqrt() * h;
                (1.0 + u) * (-u).exp()
            }
            Self::Matern(MaternNu::FiveHalves) => {
                let u = 5f64.sqrt() * h;
                (1.0 + u + u * u / 3.0) * (-u).exp()
            }
        }
    }
}

/// Fitted parametric trace-variogram
/// `γ(r) = nugget + psill·(1 − ρ(r))` for `r > 0`, `γ(0) = 0`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "VariogramDocument", into = "VariogramDocument")]
pub struct VariogramModel {
    pub family: VariogramFamily,
    pub nugget: f64,
    pub psill: f64,
    pub range: f64,
}

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct VariogramDocument {
    #[serde(default = "variogram_schema_version")]
    schema_version: u32,
    family: String,
    nugget: f64,
    psill: f64,
    range: f64,
    #[serde(skip_serializing_if = "Option::is_none", default)]
    nu: Option<f64>,
}

fn variogram_schema_version() -> u32 {
    VARIOGRAM_SCHEMA_VERSION
}

impl From<VariogramModel> for VariogramDocument {
    fn from(m: VariogramModel) -> Self {
        let nu = match m.family {
            VariogramFamily::Matern(nu) => Some(nu.value()),
            _ => None,
        };
        Self {
            schema_version: VARIOGRAM_SCHEMA_VERSION,
            family: m.family.name().to_string(),
            nugget: m.nugget,
            psill: m.psill,
            range: m.range,
            nu,
        }
    }
}

impl TryFrom<VariogramDocument> for VariogramModel {
    type Error = Error;

    fn try_from(doc: VariogramDocument) -> Result<Self> {
        if doc.schema_version != VARIOGRAM_SCHEMA_VERSION {
            return Err(Error::Data(format!(
                "unsupported variogram schema_version {}",
                doc.schema_version
            )));
        }
        let family = VariogramFamily::parse(&doc.family, doc.nu)?;
        VariogramModel::new(family, doc.nugget, doc.psill, doc.range)
    }
}

impl VariogramModel {
    pub fn new(family: VariogramFamily, nugget: f64, psill: f64, range: f64) -> Result<Self> {
        if !(nugget.is_finite() && nugget >= 0.0) {
            return Err(Error::Data(format!("nugget must be ≥ 0, got {nugget}")));
        }
        if !(psill.is_finite() && psill >= 0.0) {
            return Err(Error::Data(format!("partial sill must be ≥ 0, got {psill}")));
        }
        if !(range.is_finite() && range > 0.0) {
            return Err(Error::Data(format!("range must be > 0, got {range}")));
        }
        Ok(Self {
            family,
            nugget,
            psill,
            range,
        })
    }

    /// Total sill `nugget + psill`, equal to the trace-covariance at lag 0.
    pub fn sigma_tot(&self) -> f64 {
        self.nugget + self.psill
    }

    /// `γ(r)`.
    ///
    /// # Panics
    /// If `r` is negative or NaN.
    pub fn gamma(&self, r: f64) -> f64 {
        assert!(r >= 0.0, "variogram lag must be nonnegative, got {r}");
        if r == 0.0 {
            return 0.0;
        }
        self.nugget + self.psill * (1.0 - self.family.correlation(r, self.range))
    }

    /// Trace-covariance `C(r) = σ_tot − γ(r)`.
    pub fn covariance(&self, r: f64) -> f64 {
        self.sigma_tot() - self.gamma(r)
    }
}

/// Fit diagnostics for a single start of the simplex search.
#[derive(Debug, Clone, PartialEq)]
pub struct FitAttempt {
    pub start: [f64; 3],
    pub loss: f64,
    pub evals: usize,
}

/// Weighted least-squares fit of `family` to the retained bins, weights equal
/// to pair counts. Box constraints are enforced by the parametrisation
/// `nugget = a²`, `psill = b²`, `range = eᶜ`; the simplex search runs from
/// six deterministic starts and the best optimum is polished with restarts.
pub fn fit_model(emp: &EmpiricalTraceVariogram, family: VariogramFamily) -> Result<VariogramModel> {
    fit_model_with_attempts(emp, family).map(|(m, _)| m)
}

pub fn fit_model_with_attempts(
    emp: &EmpiricalTraceVariogram,
    family: VariogramFamily,
) -> Result<(VariogramModel, Vec<FitAttempt>)> {
    if emp.bins.len() < 3 {
        return Err(Error::Fit(format!("need at least 3 bins, got {}", emp.bins.len())));
    }
    let scale: f64 = emp
        .bins
        .iter()
        .map(|b| b.pair_count as f64 * b.gamma_hat * b.gamma_hat)
        .sum::<f64>()
        .max(f64::MIN_POSITIVE);
    let sill_guess = emp.bins.iter().map(|b| b.gamma_hat).fold(0.0, f64::max);
    let cutoff = emp.cutoff;

    let decode = |x: &[f64]| (x[0] * x[0], x[1] * x[1], x[2].exp());
    let mut loss = |x: &[f64]| -> f64 {
        let (nugget, psill, range) = decode(x);
        if !(range.is_finite() && range > 0.0) {
            return f64::INFINITY;
        }
        let m = VariogramModel {
            family,
            nugget,
            psill,
            range,
        };
        emp.bins
            .iter()
            .map(|b| {
                let e = b.gamma_hat - m.gamma(b.r_center);
                b.pair_count as f64 * e * e
            })
            .sum::<f64>()
            / scale
    };

    let nm = NelderMead {
        max_evals: 4000,
        ftol: 1e-18,
        xtol: 1e-10,
    };
    let mut attempts = Vec::new();
    let mut best: Option<(Vec<f64>, f64)> = None;
    let amp = sill_guess.sqrt().max(1e-8);
    for nugget0 in [0.0, 0.5 * sill_guess] {
        for frac in [0.25, 0.5, 1.0] {
            let psill0 = (sill_guess - nugget0).max(0.1 * sill_guess).max(1e-12);
            let x0 = [nugget0.sqrt(), psill0.sqrt(), (frac * cutoff).ln()];
            let steps = [0.1 * amp, 0.1 * amp, 0.3];
            let r = nm.minimize(&mut loss, &x0, &steps);
            attempts.push(FitAttempt {
                start: [nugget0, psill0, frac * cutoff],
                loss: r.fx,
                evals: r.evals,
            });
            if r.fx.is_finite() && best.as_ref().is_none_or(|(_, f)| r.fx < *f) {
                best = Some((r.x, r.fx));
            }
        }
    }
    let (mut x, mut fx) =
        best.ok_or_else(|| Error::Fit(format!("simplex search failed from every start: {attempts:?}")))?;
    // restarts shake the simplex loose from premature collapse
    for _ in 0..3 {
        let steps = [0.05 * x[0].abs().max(0.1 * amp), 0.05 * x[1].abs().max(0.1 * amp), 0.1];
        let r = nm.minimize(&mut loss, &x, &steps);
        if r.fx < fx {
            x = r.x;
            fx = r.fx;
        } else {
            break;
        }
    }
    let (nugget, psill, range) = decode(&x);
    let model = VariogramModel::new(family, nugget, psill, range)
        .map_err(|e| Error::Fit(format!("fit produced invalid parameters: {e}")))?;
    Ok((model, attempts))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::basis::BasisDescriptor;
    use crate::io::{LocationSet, Site};
    use approx::assert_relative_eq;
    use proptest::prelude::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn line_dataset(coefs: Vec<Vec<f64>>, xs: &[f64], basis: BasisDescriptor) -> FunctionalDataset {
        let sites = xs
            .iter()
            .enumerate()
            .map(|(i, &x)| Site {
                id: format!("s{i}"),
                coords: vec![x],
            })
            .collect();
        let m = coefs[0].len();
        let flat: Vec<f64> = coefs.into_iter().flatten().collect();
        FunctionalDataset::new(
            LocationSet::new(sites).unwrap(),
            basis,
            DMatrix::from_row_slice(xs.len(), m, &flat),
        )
        .unwrap()
    }

    #[test]
    fn sq_distance_basics() {
        let id = DMatrix::identity(2, 2);
        let a = DVector::from_vec(vec![1.0, 2.0]);
        assert_eq!(functional_sq_distance(&a, &a, &id).unwrap(), 0.0);
        let b = DVector::from_vec(vec![4.0, 6.0]);
        assert_eq!(functional_sq_distance(&a, &b, &id).unwrap(), 25.0);
        let c = DVector::from_vec(vec![1.0]);
        assert!(matches!(functional_sq_distance(&a, &c, &id), Err(Error::Contract(_))));
    }

    #[test]
    fn sq_distance_matches_numeric_integral() {
        let basis = BasisDescriptor::bspline(10, 4, (0.0, 1.0)).unwrap();
        let gram = basis.gram_matrix();
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        let wi: Vec<f64> = (0..10).map(|_| rng.random_range(-2.0..2.0)).collect();
        let wj: Vec<f64> = (0..10).map(|_| rng.random_range(-2.0..2.0)).collect();
        let npts = 1_000_000usize;
        let grid: Vec<f64> = (0..npts).map(|k| k as f64 / (npts - 1) as f64).collect();
        let xi = basis.evaluate_function(&wi, &grid).unwrap();
        let xj = basis.evaluate_function(&wj, &grid).unwrap();
        let h = 1.0 / (npts - 1) as f64;
        let mut integral = 0.0;
        for k in 0..npts {
            let d = (xi[k] - xj[k]).powi(2);
            integral += if k == 0 || k == npts - 1 { 0.5 * d } else { d };
        }
        integral *= h;
        let q = functional_sq_distance(&DVector::from_vec(wi), &DVector::from_vec(wj), &gram).unwrap();
        assert_relative_eq!(q, integral, max_relative = 1e-6);
    }

    #[test]
    fn single_pair_bin() {
        let basis = BasisDescriptor::fourier(3, (0.0, 1.0), None).unwrap();
        // ‖w₁ − w₂‖² = 8
        let ds = line_dataset(vec![vec![0.0, 0.0, 0.0], vec![2.0, 2.0, 0.0]], &[0.0, 1.0], basis);
        let cfg = BinningConfig {
            n_bins: 1,
            cutoff: Some(1.0),
            min_pairs: 1,
        };
        let emp = empirical_trace_variogram(&ds, &DMatrix::identity(3, 3), &cfg).unwrap();
        assert_eq!(emp.bins.len(), 1);
        assert_eq!(emp.bins[0].pair_count, 1);
        assert_eq!(emp.bins[0].gamma_hat, 4.0);
    }

    #[test]
    fn collinear_bins() {
        let basis = BasisDescriptor::fourier(1, (0.0, 1.0), None).unwrap();
        let ds = line_dataset(vec![vec![0.0], vec![1.0], vec![3.0]], &[0.0, 1.0, 2.0], basis);
        let cfg = BinningConfig {
            n_bins: 2,
            cutoff: Some(2.0),
            min_pairs: 1,
        };
        let emp = empirical_trace_variogram(&ds, &DMatrix::identity(1, 1), &cfg).unwrap();
        assert_eq!(emp.bins.iter().map(|b| b.pair_count).collect::<Vec<_>>(), vec![2, 1]);
        assert_eq!(emp.bins[0].gamma_hat, (1.0 + 4.0) / 4.0);
        assert_eq!(emp.bins[1].gamma_hat, 9.0 / 2.0);
        let strict = BinningConfig { min_pairs: 2, ..cfg };
        assert_eq!(
            empirical_trace_variogram(&ds, &DMatrix::identity(1, 1), &strict)
                .unwrap()
                .bins
                .len(),
            1
        );
    }

    #[test]
    fn no_pairs_within_cutoff() {
        let basis = BasisDescriptor::fourier(1, (0.0, 1.0), None).unwrap();
        let ds = line_dataset(vec![vec![0.0], vec![1.0]], &[0.0, 5.0], basis);
        let cfg = BinningConfig {
            n_bins: 3,
            cutoff: Some(1.0),
            min_pairs: 1,
        };
        assert!(matches!(
            empirical_trace_variogram(&ds, &DMatrix::identity(1, 1), &cfg),
            Err(Error::Variogram(_))
        ));
    }

    #[test]
    fn gamma_values() {
        for fam in [
            VariogramFamily::Exponential,
            VariogramFamily::Gaussian,
            VariogramFamily::Matern(MaternNu::Half),
            VariogramFamily::Matern(MaternNu::ThreeHalves),
            VariogramFamily::Matern(MaternNu::FiveHalves),
        ] {
            let m = VariogramModel::new(fam, 0.3, 2.0, 5.0).unwrap();
            assert_eq!(m.gamma(0.0), 0.0);
            assert_eq!(m.covariance(0.0), 2.3);
        }
        let m = VariogramModel::new(VariogramFamily::Exponential, 0.0, 2.0, 5.0).unwrap();
        assert_relative_eq!(m.gamma(1e6), 2.0, epsilon = 1e-12);
        assert_relative_eq!(m.covariance(5.0), 2.0 * (-1.0f64).exp(), epsilon = 1e-15);
        assert_relative_eq!(m.covariance(5.0), 0.7358, epsilon = 1e-4);
    }

    #[test]
    #[should_panic]
    fn negative_lag_panics() {
        let m = VariogramModel::new(VariogramFamily::Exponential, 0.0, 2.0, 5.0).unwrap();
        m.gamma(-1.0);
    }

    #[test]
    fn matern_half_is_exponential() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let e = VariogramModel::new(VariogramFamily::Exponential, 0.1, 1.7, 2.5).unwrap();
        let m = VariogramModel::new(VariogramFamily::Matern(MaternNu::Half), 0.1, 1.7, 2.5).unwrap();
        for _ in 0..20 {
            let r = rng.random_range(0.0..20.0);
            assert_eq!(e.gamma(r), m.gamma(r));
        }
    }

    #[test]
    fn model_json() {
        let m = VariogramModel::new(VariogramFamily::Matern(MaternNu::ThreeHalves), 0.0, 2.0, 5.0).unwrap();
        let text = serde_json::to_string(&m).unwrap();
        assert!(text.contains("\"nu\":1.5"));
        let back: VariogramModel = serde_json::from_str(&text).unwrap();
        assert_eq!(back, m);
        assert!(serde_json::from_str::<VariogramModel>(
            r#"{"family":"matern","nugget":0,"psill":1,"range":1,"nu":0.7}"#
        )
        .is_err());
        assert!(
            serde_json::from_str::<VariogramModel>(r#"{"family":"exponential","nugget":0,"psill":1,"range":0}"#)
                .is_err()
        );
    }

    fn synthetic_bins(model: &VariogramModel, cutoff: f64, n: usize) -> EmpiricalTraceVariogram {
        let bins = (1..=n)
            .map(|b| {
                let r = cutoff * (b as f64 - 0.5) / n as f64;
                VariogramBin {
                    r_center: r,
                    gamma_hat: model.gamma(r),
                    pair_count: 10 + b,
                }
            })
            .collect();
        EmpiricalTraceVariogram { bins, cutoff }
    }

    #[test]
    fn recovers_exponential_parameters() {
        let truth = VariogramModel::new(VariogramFamily::Exponential, 0.0, 2.0, 5.0).unwrap();
        let emp = synthetic_bins(&truth, 10.0, 15);
        let fit = fit_model(&emp, VariogramFamily::Exponential).unwrap();
        assert!(fit.nugget <= 0.01 * 2.0, "{fit:?}");
        assert_relative_eq!(fit.psill, 2.0, max_relative = 0.01);
        assert_relative_eq!(fit.range, 5.0, max_relative = 0.01);
    }

    #[test]
    fn recovers_gaussian_and_matern() {
        for fam in [VariogramFamily::Gaussian, VariogramFamily::Matern(MaternNu::FiveHalves)] {
            let truth = VariogramModel::new(fam, 0.2, 1.0, 3.0).unwrap();
            let emp = synthetic_bins(&truth, 8.0, 15);
            let fit = fit_model(&emp, fam).unwrap();
            assert_relative_eq!(fit.nugget, 0.2, max_relative = 0.01);
            assert_relative_eq!(fit.psill, 1.0, max_relative = 0.01);
            assert_relative_eq!(fit.range, 3.0, max_relative = 0.01);
        }
    }

    #[test]
    fn constant_bins_fit_as_nugget() {
        let bins = (1..=6)
            .map(|b| VariogramBin {
                r_center: b as f64,
                gamma_hat: 0.8,
                pair_count: 4,
            })
            .collect();
        let emp = EmpiricalTraceVariogram { bins, cutoff: 6.0 };
        let fit = fit_model(&emp, VariogramFamily::Exponential).unwrap();
        for b in &emp.bins {
            assert_relative_eq!(fit.gamma(b.r_center), 0.8, max_relative = 1e-3);
        }
    }

    #[test]
    fn two_bins_is_fit_error() {
        let bins = (1..=2)
            .map(|b| VariogramBin {
                r_center: b as f64,
                gamma_hat: 0.8,
                pair_count: 4,
            })
            .collect();
        let emp = EmpiricalTraceVariogram { bins, cutoff: 2.0 };
        assert!(matches!(
            fit_model(&emp, VariogramFamily::Exponential),
            Err(Error::Fit(_))
        ));
    }

    fn random_dataset(seed: u64, n: usize) -> FunctionalDataset {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let basis = BasisDescriptor::bspline(6, 4, (0.0, 1.0)).unwrap();
        let sites = (0..n)
            .map(|i| Site {
                id: format!("s{i}"),
                coords: vec![rng.random_range(0.0..10.0), rng.random_range(0.0..10.0)],
            })
            .collect();
        let coefs = DMatrix::from_fn(n, 6, |_, _| rng.random_range(-1.0..1.0));
        FunctionalDataset::new(LocationSet::new(sites).unwrap(), basis, coefs).unwrap()
    }

    proptest! {
        #[test]
        fn model_monotone_and_bounded(
            fam_idx in 0usize..5,
            nugget in 0.0f64..2.0,
            psill in 0.0f64..5.0,
            range in 0.01f64..20.0,
        ) {
            let fam = [
                VariogramFamily::Exponential,
                VariogramFamily::Gaussian,
                VariogramFamily::Matern(MaternNu::Half),
                VariogramFamily::Matern(MaternNu::ThreeHalves),
                VariogramFamily::Matern(MaternNu::FiveHalves),
            ][fam_idx];
            let m = VariogramModel::new(fam, nugget, psill, range).unwrap();
            let tot = m.sigma_tot();
            let mut prev_g = 0.0;
            let mut prev_c = tot;
            for k in 0..1000 {
                let r = 10.0 * range * k as f64 / 999.0;
                let g = m.gamma(r);
                let c = m.covariance(r);
                prop_assert!(g >= prev_g - 1e-15);
                prop_assert!(c <= prev_c + 1e-15);
                prop_assert!((-1e-15..=tot + 1e-15).contains(&c));
                prop_assert!((c + g - tot).abs() <= 1e-12 * tot.max(1.0));
                prev_g = g;
                prev_c = c;
            }
        }

        #[test]
        fn translation_invariant_and_quadratic_scaling(seed in 0u64..200, shift in -5.0f64..5.0, a in 0.1f64..4.0) {
            let ds = random_dataset(seed, 12);
            let gram = ds.basis.gram_matrix();
            let cfg = BinningConfig { n_bins: 5, cutoff: Some(8.0), min_pairs: 1 };
            let base = empirical_trace_variogram(&ds, &gram, &cfg).unwrap();
            let mut moved = ds.clone();
            for mut row in moved.coefs.row_iter_mut() {
                for (m, v) in row.iter_mut().enumerate() {
                    *v += shift * (m as f64 + 1.0);
                }
            }
            let shifted = empirical_trace_variogram(&moved, &gram, &cfg).unwrap();
            let mut scaled_ds = ds.clone();
            scaled_ds.coefs *= a;
            let scaled = empirical_trace_variogram(&scaled_ds, &gram, &cfg).unwrap();
            for ((b, s), c) in base.bins.iter().zip(&shifted.bins).zip(&scaled.bins) {
                prop_assert!((b.gamma_hat - s.gamma_hat).abs() <= 1e-9 * (1.0 + b.gamma_hat));
                prop_assert!((c.gamma_hat - a * a * b.gamma_hat).abs() <= 1e-10 * (1.0 + c.gamma_hat));
            }
        }
    }
}

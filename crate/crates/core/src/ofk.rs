//! Ordinary functional kriging.
//!
//! The weights minimise the integrated prediction variance
//! `λᵀCλ − 2c₀ᵀλ` subject to `𝟙ᵀλ = 1`. Stationarity gives the bordered
//! system `[[C, 𝟙], [𝟙ᵀ, 0]] (λ, μ) = (c₀, 1)`, solved here by Schur
//! reduction onto the Cholesky factor of `C`:
//!
//! ```text
//! μ = (𝟙ᵀC⁻¹c₀ − 1) / (𝟙ᵀC⁻¹𝟙),    λ = C⁻¹(c₀ − μ𝟙)
//! ```

use nalgebra::{Cholesky, DMatrix, DVector, Dyn};

use crate::basis::FunctionalDataset;
use crate::error::{Error, Result};
use crate::io::euclidean;
use crate::linalg::cholesky_with_jitter;
use crate::variogram::VariogramModel;

/// Relative diagonal jitter added when `C` fails to factor.
pub const JITTER: f64 = 1e-10;

/// Kriging matrices for one prediction site.
#[derive(Debug, Clone)]
pub struct KrigingSystem {
    /// Trace-covariances between observed sites.
    pub c: DMatrix<f64>,
    /// Trace-covariances between observed sites and the target.
    pub c0: DVector<f64>,
    pub s0: Vec<f64>,
    /// Diagonal shift that was needed to factor `c` (already included in `c`).
    pub jitter: f64,
    chol: Cholesky<f64, Dyn>,
}

impl KrigingSystem {
    /// Wraps explicit matrices, factoring `c` (with jitter if needed).
    pub fn from_matrices(c: DMatrix<f64>, c0: DVector<f64>, s0: Vec<f64>) -> Result<Self> {
        let n = c.nrows();
        if n == 0 || c.ncols() != n || c0.len() != n {
            return Err(Error::Contract(format!(
                "kriging matrix {}×{} with right-hand side of length {}",
                c.nrows(),
                c.ncols(),
                c0.len()
            )));
        }
        let scale = (0..n)
            .map(|i| c[(i, i)].abs())
            .fold(0.0, f64::max)
            .max(f64::MIN_POSITIVE);
        let (chol, shift) = cholesky_with_jitter(&c, JITTER * scale, 12)
            .ok_or_else(|| Error::Solve("kriging matrix is not positive definite even after jitter".into()))?;
        let mut c = c;
        if shift > 0.0 {
            log::warn!("kriging matrix needed a diagonal jitter of {shift:e}");
            for i in 0..n {
                c[(i, i)] += shift;
            }
        }
        Ok(Self {
            c,
            c0,
            s0,
            jitter: shift,
            chol,
        })
    }

    pub fn len(&self) -> usize {
        self.c0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.c0.is_empty()
    }

    pub fn cholesky(&self) -> &Cholesky<f64, Dyn> {
        &self.chol
    }

    /// `C⁻¹ v` through the stored factor.
    pub fn solve_c(&self, v: &DVector<f64>) -> DVector<f64> {
        self.chol.solve(v)
    }

    /// `c₀ᵀ C⁻¹ c₀`; minus this value bounds the penalised objective below.
    pub fn c0_cinv_c0(&self) -> f64 {
        self.c0.dot(&self.solve_c(&self.c0))
    }

    /// Solves `[[C, 𝟙], [𝟙ᵀ, 0]] (x, y) = (top, bottom)` by Schur reduction.
    fn solve_bordered(&self, top: &DVector<f64>, bottom: f64) -> (DVector<f64>, f64) {
        let ones = DVector::from_element(self.len(), 1.0);
        let a = self.solve_c(top);
        let b = self.solve_c(&ones);
        let y = (a.sum() - bottom) / b.sum();
        let x = a - b * y;
        (x, y)
    }
}

/// Builds `C` and `c₀` from a variogram model for observed sites `points`
/// and target `s0`.
pub fn build_system(model: &VariogramModel, points: &[&[f64]], s0: &[f64]) -> Result<KrigingSystem> {
    let n = points.len();
    if n == 0 {
        return Err(Error::Contract("kriging needs at least one observed site".into()));
    }
    if points.iter().any(|p| p.len() != s0.len()) {
        return Err(Error::Contract(format!(
            "target has dimension {}, sites have {}",
            s0.len(),
            points[0].len()
        )));
    }
    let mut c = DMatrix::zeros(n, n);
    for i in 0..n {
        c[(i, i)] = model.sigma_tot();
        for j in (i + 1)..n {
            let v = model.covariance(euclidean(points[i], points[j]));
            c[(i, j)] = v;
            c[(j, i)] = v;
        }
    }
    let c0 = DVector::from_iterator(n, points.iter().map(|p| model.covariance(euclidean(p, s0))));
    KrigingSystem::from_matrices(c, c0, s0.to_vec())
}

#[derive(Debug, Clone, PartialEq)]
pub struct OfkSolution {
    pub lambda: DVector<f64>,
    /// Multiplier in the `Cλ + μ𝟙 = c₀` convention.
    pub mu: f64,
}

/// Ordinary kriging weights and multiplier, with one step of iterative
/// refinement on the bordered system.
pub fn ofk_solve(system: &KrigingSystem) -> Result<OfkSolution> {
    let (mut lambda, mut mu) = system.solve_bordered(&system.c0, 1.0);
    let r_top = &system.c0 - &system.c * &lambda - DVector::from_element(system.len(), mu);
    let r_bottom = 1.0 - lambda.sum();
    let (dl, dm) = system.solve_bordered(&r_top, r_bottom);
    lambda += dl;
    mu += dm;
    if !mu.is_finite() || lambda.iter().any(|v| !v.is_finite()) {
        return Err(Error::Solve("bordered kriging system is numerically singular".into()));
    }
    Ok(OfkSolution { lambda, mu })
}

/// A predicted curve: its coefficients `w₀ = Wᵀλ` and values on a grid.
#[derive(Debug, Clone, PartialEq)]
pub struct Prediction {
    pub coefs: DVector<f64>,
    pub values: Vec<f64>,
}

/// `x̂(s₀; t) = Σᵢ λᵢ x(sᵢ; t)` on `grid`.
pub fn predict(lambda: &DVector<f64>, dataset: &FunctionalDataset, grid: &[f64]) -> Result<Prediction> {
    if lambda.len() != dataset.len() {
        return Err(Error::Contract(format!(
            "{} weights for {} sites",
            lambda.len(),
            dataset.len()
        )));
    }
    let coefs = dataset.coefs.tr_mul(lambda);
    let w: Vec<f64> = coefs.iter().copied().collect();
    let values = dataset.basis.evaluate_function(&w, grid)?;
    Ok(Prediction { coefs, values })
}

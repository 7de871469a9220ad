//! Sparse ordinary functional kriging.
//!
//! Minimises
//!
//! ```text
//! f(λ) = λᵀCλ − 2c₀ᵀλ + η Σᵢ ŵᵢ |λᵢ|     subject to  g(λ) = 𝟙ᵀλ − 1 = 0
//! ```
//!
//! with adaptive weights `ŵᵢ = |λ̂ᵢ|^{−τ}` taken from the ordinary kriging
//! solution. The constraint is handled by an augmented Lagrangian outer loop;
//! each subproblem
//!
//! ```text
//! f(λ) + ν g(λ) + (ρ/2) g(λ)²
//! ```
//!
//! is a weighted lasso whose smooth part has Hessian `H = 2C + ρ𝟙𝟙ᵀ` and
//! linear term `q = 2c₀ + (ρ − ν)𝟙`; it is solved by FISTA with step `1/L`,
//! `L ≥ λ_max(H)`.
//!
//! Two multiplier scales appear: the augmented Lagrangian multiplier `ν`
//! attaches to `g` directly, while ordinary kriging writes its multiplier as
//! `2μ·g`. Reported multipliers are always in the kriging convention
//! `μ = ν / 2`, so that `η = 0` reproduces [`ofk_solve`](crate::ofk::ofk_solve).

use nalgebra::{DMatrix, DVector};

use crate::error::{Error, Result};
use crate::linalg::{ordered_sum, power_iteration};
use crate::ofk::{KrigingSystem, OfkSolution};

/// `|λ̂ᵢ|` values at or below this are floored before inverting.
pub const WEIGHT_FLOOR: f64 = 1e-8;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SofkConfig {
    pub rho0: f64,
    /// Penalty grows when `|g|` fails to shrink below `alpha` times its last value.
    pub alpha: f64,
    pub kappa: f64,
    pub feas_tol: f64,
    pub inner_tol: f64,
    pub max_outer: usize,
    pub max_inner: usize,
    pub zero_clip: f64,
    /// Gradient-based momentum restart in the inner solver.
    pub restart: bool,
}

impl Default for SofkConfig {
    fn default() -> Self {
        Self {
            rho0: 1.0,
            alpha: 0.9,
            kappa: 2.0,
            feas_tol: 1e-8,
            inner_tol: 1e-10,
            max_outer: 200,
            max_inner: 10_000,
            zero_clip: 1e-10,
            restart: true,
        }
    }
}

impl SofkConfig {
    pub fn validate(&self) -> Result<()> {
        let positive = [
            ("rho0", self.rho0),
            ("feas_tol", self.feas_tol),
            ("inner_tol", self.inner_tol),
            ("zero_clip", self.zero_clip),
        ];
        for (name, v) in positive {
            if !(v.is_finite() && v > 0.0) {
                return Err(Error::Contract(format!("{name} must be positive, got {v}")));
            }
        }
        if !(self.alpha > 0.0 && self.alpha < 1.0) {
            return Err(Error::Contract(format!("alpha must lie in (0, 1), got {}", self.alpha)));
        }
        if !(self.kappa > 1.0 && self.kappa.is_finite()) {
            return Err(Error::Contract(format!("kappa must exceed 1, got {}", self.kappa)));
        }
        if self.max_outer == 0 || self.max_inner == 0 {
            return Err(Error::Contract("iteration caps must be positive".into()));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct AdaptiveWeights {
    pub values: DVector<f64>,
    /// Entries whose kriging weight was at or below [`WEIGHT_FLOOR`].
    pub floored: Vec<bool>,
}

/// `ŵᵢ = max(|λ̂ᵢ|, 1e-8)^{−τ}`.
pub fn adaptive_weights(ofk: &OfkSolution, tau: f64) -> Result<AdaptiveWeights> {
    if !(tau.is_finite() && tau > 0.0) {
        return Err(Error::Contract(format!("tau must be positive, got {tau}")));
    }
    let floored: Vec<bool> = ofk.lambda.iter().map(|l| l.abs() <= WEIGHT_FLOOR).collect();
    let values = ofk.lambda.map(|l| l.abs().max(WEIGHT_FLOOR).powf(-tau));
    Ok(AdaptiveWeights { values, floored })
}

/// `sign(v)·max(|v| − θ, 0)`.
pub fn soft_threshold(v: f64, theta: f64) -> f64 {
    if v > theta {
        v - theta
    } else if v < -theta {
        v + theta
    } else {
        0.0
    }
}

/// One penalised kriging problem: a system, its ordinary kriging solution
/// (used for the adaptive weights and as the starting point) and `(η, τ)`.
#[derive(Debug, Clone)]
pub struct SofkProblem<'a> {
    pub system: &'a KrigingSystem,
    pub ofk: &'a OfkSolution,
    pub eta: f64,
    pub tau: f64,
    pub weights: AdaptiveWeights,
    /// Constant `k` removed from the covariances inside the augmented
    /// Lagrangian solver; defaults to `1/(𝟙ᵀC⁻¹𝟙)`, the largest value keeping
    /// `C − k𝟙𝟙ᵀ` positive semidefinite. A long-range model otherwise carries a
    /// large constant component that swamps the FISTA step size.
    pub shift: f64,
}

impl<'a> SofkProblem<'a> {
    pub fn new(system: &'a KrigingSystem, ofk: &'a OfkSolution, eta: f64, tau: f64) -> Result<Self> {
        if !(eta.is_finite() && eta >= 0.0) {
            return Err(Error::Contract(format!("eta must be nonnegative, got {eta}")));
        }
        if ofk.lambda.len() != system.len() {
            return Err(Error::Contract(format!(
                "kriging solution has {} weights for a system of size {}",
                ofk.lambda.len(),
                system.len()
            )));
        }
        let weights = adaptive_weights(ofk, tau)?;
        let ones = DVector::from_element(system.len(), 1.0);
        let denom = ones.dot(&system.solve_c(&ones));
        let shift = if denom.is_finite() && denom > 0.0 {
            1.0 / denom
        } else {
            0.0
        };
        Ok(Self {
            system,
            ofk,
            eta,
            tau,
            weights,
            shift,
        })
    }

    pub fn len(&self) -> usize {
        self.system.len()
    }

    pub fn is_empty(&self) -> bool {
        self.system.is_empty()
    }

    /// `−c₀ᵀC⁻¹c₀`, a lower bound on `f` over all of ℝⁿ.
    pub fn lower_bound(&self) -> f64 {
        -self.system.c0_cinv_c0()
    }

    fn penalty(&self, lambda: &DVector<f64>) -> f64 {
        self.eta
            * lambda
                .iter()
                .zip(self.weights.values.iter())
                .map(|(l, w)| w * l.abs())
                .sum::<f64>()
    }

    /// Augmented Lagrangian value at multiplier `nu` and penalty `rho`.
    pub fn augmented_value(&self, lambda: &DVector<f64>, nu: f64, rho: f64) -> f64 {
        let g = lambda.sum() - 1.0;
        sofk_objective(self, lambda) + nu * g + 0.5 * rho * g * g
    }
}

/// `f(λ) = λᵀCλ − 2c₀ᵀλ + η Σ ŵᵢ|λᵢ|`.
pub fn sofk_objective(problem: &SofkProblem<'_>, lambda: &DVector<f64>) -> f64 {
    let c = &problem.system.c;
    lambda.dot(&(c * lambda)) - 2.0 * problem.system.c0.dot(lambda) + problem.penalty(lambda)
}

#[derive(Debug, Clone, PartialEq)]
pub struct FistaOutcome {
    pub lambda: DVector<f64>,
    pub iterations: usize,
    pub converged: bool,
    /// Step-size constant used (inflated dominant eigenvalue of `H`).
    pub lipschitz: f64,
}

/// Minimises the augmented Lagrangian subproblem at multiplier `nu` and
/// penalty `rho`, warm-started from `init`: FISTA on
/// `½λᵀHλ − qᵀλ + η Σ ŵᵢ|λᵢ|` with `H = 2C + ρ𝟙𝟙ᵀ`, `q = 2c₀ + (ρ − ν)𝟙`.
pub fn fista_subproblem(
    problem: &SofkProblem<'_>,
    nu: f64,
    rho: f64,
    init: &DVector<f64>,
    config: &SofkConfig,
) -> Result<FistaOutcome> {
    fista_shifted(problem, nu, rho, 0.0, init, config)
}

/// [`fista_subproblem`] for the problem with `(C, c₀)` replaced by
/// `(C − k𝟙𝟙ᵀ, c₀ − k𝟙)`. On `𝟙ᵀλ = 1` that replacement only moves `f` by a
/// constant, so both problems share their minimiser and multiplier, and in
/// `H` and `q` it amounts to using `ρ − 2k` in place of `ρ`.
fn fista_shifted(
    problem: &SofkProblem<'_>,
    nu: f64,
    rho: f64,
    shift: f64,
    init: &DVector<f64>,
    config: &SofkConfig,
) -> Result<FistaOutcome> {
    if !(rho.is_finite() && rho > 0.0) {
        return Err(Error::Contract(format!("rho must be positive, got {rho}")));
    }
    let n = problem.len();
    let rho_eff = rho - 2.0 * shift;
    let mut h: DMatrix<f64> = &problem.system.c * 2.0;
    h.add_scalar_mut(rho_eff);
    let q = &problem.system.c0 * 2.0 + DVector::from_element(n, rho_eff - nu);
    let lipschitz = 1.01 * power_iteration(&h, 1e-10, 100_000);
    let step = 1.0 / lipschitz;
    let thresholds: Vec<f64> = problem.weights.values.iter().map(|w| problem.eta * w * step).collect();

    let mut x = init.clone();
    let mut x_prev = init.clone();
    let mut y = init.clone();
    let mut grad = DVector::zeros(n);
    let mut t = 1.0f64;
    let mut converged = false;
    let mut iterations = 0;
    while iterations < config.max_inner {
        iterations += 1;
        // grad = H y − q
        grad.copy_from(&q);
        grad.gemv(1.0, &h, &y, -1.0);
        let mut change = 0.0f64;
        let mut norm_inf = 0.0f64;
        let mut restart_dot = 0.0;
        for i in 0..n {
            let xi = soft_threshold(y[i] - step * grad[i], thresholds[i]);
            restart_dot += (y[i] - xi) * (xi - x[i]);
            change = change.max((xi - x[i]).abs());
            norm_inf = norm_inf.max(xi.abs());
            x_prev[i] = x[i];
            x[i] = xi;
        }
        if change <= config.inner_tol * norm_inf.max(1.0) {
            converged = true;
            break;
        }
        if config.restart && restart_dot > 0.0 {
            t = 1.0;
            y.copy_from(&x);
            continue;
        }
        let t_next = 0.5 * (1.0 + (1.0 + 4.0 * t * t).sqrt());
        let beta = (t - 1.0) / t_next;
        for i in 0..n {
            y[i] = x[i] + beta * (x[i] - x_prev[i]);
        }
        t = t_next;
    }
    // FISTA is not a descent method; never hand back something worse than the start
    if problem.augmented_value(&x, nu, rho_eff) > problem.augmented_value(init, nu, rho_eff) {
        x.copy_from(init);
    }
    Ok(FistaOutcome {
        lambda: x,
        iterations,
        converged,
        lipschitz,
    })
}

/// Per-outer-iteration diagnostics.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct IterationRecord {
    pub k: usize,
    /// `f(λ_k)`.
    pub f: f64,
    /// `|g(λ_k)|`.
    pub abs_g: f64,
    /// Penalty used to compute `λ_k`.
    pub rho: f64,
    /// Multiplier after the update, kriging convention.
    pub mu: f64,
    pub inner_iters: usize,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SofkSolution {
    pub lambda: DVector<f64>,
    /// Kriging-convention multiplier (`Cλ + μ𝟙 ≈ c₀` on the support when η = 0).
    pub mu: f64,
    pub support: Vec<usize>,
    pub trace: Vec<IterationRecord>,
    pub outer_iters: usize,
    pub inner_iters_total: usize,
    /// Number of inner solves stopped by `max_inner`.
    pub inner_cap_hits: usize,
    pub converged: bool,
    /// `|𝟙ᵀλ − 1|` of the final iterate before snapping and renormalisation.
    pub residual_before_renorm: f64,
    /// `−c₀ᵀC⁻¹c₀`.
    pub lower_bound: f64,
}

impl SofkSolution {
    pub fn objective_trace(&self) -> Vec<f64> {
        self.trace.iter().map(|r| r.f).collect()
    }

    pub fn feas_trace(&self) -> Vec<f64> {
        self.trace.iter().map(|r| r.abs_g).collect()
    }

    pub fn support_size(&self) -> usize {
        self.support.len()
    }
}

/// Next penalty value: grow by `kappa` when feasibility did not improve by
/// the factor `alpha`.
pub fn next_rho(rho: f64, abs_g_new: f64, abs_g_old: f64, config: &SofkConfig) -> f64 {
    if abs_g_new > config.alpha * abs_g_old {
        config.kappa * rho
    } else {
        rho
    }
}

/// Augmented Lagrangian method, starting from the ordinary kriging solution.
pub fn augmented_lagrangian_solve(problem: &SofkProblem<'_>, config: &SofkConfig) -> Result<SofkSolution> {
    config.validate()?;
    let lower_bound = problem.lower_bound();
    let bound_slack = 1e-9 * (1.0 + lower_bound.abs());

    let mut lambda = problem.ofk.lambda.clone();
    let mut nu = 2.0 * problem.ofk.mu;
    let mut rho = config.rho0;
    let mut abs_g_prev = (ordered_sum(lambda.as_slice()) - 1.0).abs();

    let mut trace = Vec::new();
    let mut inner_total = 0;
    let mut cap_hits = 0;
    let mut converged = false;
    let mut best: Option<(DVector<f64>, f64, f64)> = None;

    for k in 1..=config.max_outer {
        let out = fista_shifted(problem, nu, rho, problem.shift, &lambda, config)?;
        inner_total += out.iterations;
        if !out.converged {
            cap_hits += 1;
        }
        lambda = out.lambda;
        let g = ordered_sum(lambda.as_slice()) - 1.0;
        let rho_used = rho;
        nu += rho * g;
        let f = sofk_objective(problem, &lambda);
        if f < lower_bound - bound_slack {
            return Err(Error::Solve(format!(
                "objective {f} fell below its lower bound {lower_bound}"
            )));
        }
        trace.push(IterationRecord {
            k,
            f,
            abs_g: g.abs(),
            rho: rho_used,
            mu: 0.5 * nu,
            inner_iters: out.iterations,
        });
        if best
            .as_ref()
            .is_none_or(|(_, bg, bf)| g.abs() < *bg || (g.abs() == *bg && f < *bf))
        {
            best = Some((lambda.clone(), g.abs(), f));
        }
        if g.abs() <= config.feas_tol && out.converged {
            converged = true;
            break;
        }
        rho = next_rho(rho, g.abs(), abs_g_prev, config);
        abs_g_prev = g.abs();
    }

    if !converged {
        if let Some((l, _, _)) = best {
            lambda = l;
        }
        log::debug!(
            "augmented Lagrangian stopped after {} outer iterations without converging",
            config.max_outer
        );
    }
    let residual_before_renorm = (ordered_sum(lambda.as_slice()) - 1.0).abs();
    snap_and_renormalize(&mut lambda, config.zero_clip);
    let support = (0..lambda.len()).filter(|&i| lambda[i] != 0.0).collect();
    Ok(SofkSolution {
        lambda,
        mu: 0.5 * nu,
        support,
        outer_iters: trace.len(),
        trace,
        inner_iters_total: inner_total,
        inner_cap_hits: cap_hits,
        converged,
        residual_before_renorm,
        lower_bound,
    })
}

/// Zeroes entries with `|λᵢ| ≤ zero_clip`, rescales the rest to sum to one,
/// then resets the last nonzero entry so the index-order sum is exactly 1.
fn snap_and_renormalize(lambda: &mut DVector<f64>, zero_clip: f64) {
    for v in lambda.iter_mut() {
        if v.abs() <= zero_clip {
            *v = 0.0;
        }
    }
    let s = ordered_sum(lambda.as_slice());
    if s == 0.0 || !s.is_finite() {
        return;
    }
    lambda.iter_mut().for_each(|v| *v /= s);
    let Some(last) = lambda.iter().rposition(|&v| v != 0.0) else {
        return;
    };
    if let Some(x) = closing_entry(&lambda.as_slice()[..last]) {
        lambda[last] = x;
        return;
    }
    // `1 − prefix` is not reachable at the scale of λ_last. Move one earlier
    // entry by a few ulps of the prefix and try again.
    let ulp = |v: f64| v.abs().next_up() - v.abs();
    let p = ordered_sum(&lambda.as_slice()[..last]);
    let steps = [ulp(p), 0.25 * ulp(1.0 - p), 0.5 * ulp(1.0 - p)];
    for j in (0..last).rev() {
        let original = lambda[j];
        if original == 0.0 {
            continue;
        }
        for step in steps {
            for k in [1.0, -1.0, 2.0, -2.0, 3.0, -3.0] {
                lambda[j] = original + k * step;
                if lambda[j] == original {
                    continue;
                }
                if let Some(x) = closing_entry(&lambda.as_slice()[..last]) {
                    lambda[last] = x;
                    return;
                }
            }
        }
        lambda[j] = original;
    }
}

/// A value `x` with `ordered_sum(prefix) + x == 1`, if one is near `1 − prefix`.
fn closing_entry(prefix: &[f64]) -> Option<f64> {
    let p = ordered_sum(prefix);
    let mut x = 1.0 - p;
    for _ in 0..4 {
        let s = p + x;
        if s == 1.0 {
            return Some(x);
        }
        x = if s < 1.0 { x.next_up() } else { x.next_down() };
    }
    None
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::ofk::{build_system, ofk_solve};
    use crate::variogram::{VariogramFamily, VariogramModel};
    use approx::assert_abs_diff_eq;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn random_system(seed: u64, n: usize) -> KrigingSystem {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let model = VariogramModel::new(
            VariogramFamily::Exponential,
            rng.random_range(0.0..0.3),
            rng.random_range(0.5..3.0),
            rng.random_range(0.5..5.0),
        )
        .unwrap();
        let pts: Vec<Vec<f64>> = (0..n)
            .map(|_| vec![rng.random_range(0.0..5.0), rng.random_range(0.0..5.0)])
            .collect();
        let refs: Vec<&[f64]> = pts.iter().map(|p| p.as_slice()).collect();
        let s0 = [rng.random_range(0.0..5.0), rng.random_range(0.0..5.0)];
        build_system(&model, &refs, &s0).unwrap()
    }

    #[test]
    fn adaptive_weight_cases() {
        let ofk = OfkSolution {
            lambda: DVector::from_vec(vec![0.5, 0.25]),
            mu: 0.0,
        };
        let w = adaptive_weights(&ofk, 1.0).unwrap();
        assert_eq!(w.values.as_slice(), &[2.0, 4.0]);
        let ofk = OfkSolution {
            lambda: DVector::from_vec(vec![0.0, 1.0]),
            mu: 0.0,
        };
        let w = adaptive_weights(&ofk, 1.0).unwrap();
        assert_abs_diff_eq!(w.values[0], 1e8, epsilon = 1e-6);
        assert_eq!(w.floored, vec![true, false]);
        let ofk = OfkSolution {
            lambda: DVector::from_vec(vec![0.1]),
            mu: 0.0,
        };
        assert_abs_diff_eq!(adaptive_weights(&ofk, 2.0).unwrap().values[0], 100.0, epsilon = 1e-10);
        assert!(adaptive_weights(&ofk, 0.0).is_err());
    }

    #[test]
    fn soft_threshold_cases() {
        assert_eq!(soft_threshold(2.0, 0.5), 1.5);
        assert_eq!(soft_threshold(-0.3, 0.5), 0.0);
        assert_eq!(soft_threshold(-2.0, 0.5), -1.5);
        assert_eq!(soft_threshold(0.77, 0.0), 0.77);
    }

    #[test]
    fn objective_cases() {
        let sys = random_system(1, 6);
        let ofk = ofk_solve(&sys).unwrap();
        let p0 = SofkProblem::new(&sys, &ofk, 0.0, 1.0).unwrap();
        let l = DVector::from_fn(6, |i, _| 0.1 * i as f64 - 0.2);
        let quad = l.dot(&(&sys.c * &l)) - 2.0 * sys.c0.dot(&l);
        assert_abs_diff_eq!(sofk_objective(&p0, &l), quad, epsilon = 1e-14);
        let p = SofkProblem::new(&sys, &ofk, 0.3, 1.0).unwrap();
        assert_eq!(sofk_objective(&p, &DVector::zeros(6)), 0.0);
        let mut rng = ChaCha8Rng::seed_from_u64(2);
        for _ in 0..200 {
            let l = DVector::from_fn(6, |_, _| rng.random_range(-3.0..3.0));
            assert!(sofk_objective(&p, &l) >= p.lower_bound() - 1e-12);
        }
    }

    #[test]
    fn lipschitz_of_identity_pair() {
        let sys =
            KrigingSystem::from_matrices(DMatrix::identity(2, 2), DVector::from_vec(vec![0.3, 0.4]), vec![]).unwrap();
        let ofk = ofk_solve(&sys).unwrap();
        let p = SofkProblem::new(&sys, &ofk, 0.0, 1.0).unwrap();
        let out = fista_subproblem(&p, 0.0, 1.0, &ofk.lambda, &SofkConfig::default()).unwrap();
        assert_abs_diff_eq!(out.lipschitz / 1.01, 4.0, epsilon = 1e-8);
        // the solver's shifted form uses ρ − 2k, here 1 − 2·½ = 0
        assert_abs_diff_eq!(p.shift, 0.5, epsilon = 1e-15);
        let out = fista_shifted(&p, 0.0, 1.0, p.shift, &ofk.lambda, &SofkConfig::default()).unwrap();
        assert_abs_diff_eq!(out.lipschitz / 1.01, 2.0, epsilon = 1e-8);
    }

    #[test]
    fn unpenalised_subproblem_is_linear_solve() {
        let cfg = SofkConfig::default();
        for seed in 0..10 {
            let sys = random_system(seed, 8);
            let ofk = ofk_solve(&sys).unwrap();
            let p = SofkProblem::new(&sys, &ofk, 0.0, 1.0).unwrap();
            let (nu, rho) = (0.37, 2.5);
            let out = fista_subproblem(&p, nu, rho, &DVector::zeros(8), &cfg).unwrap();
            let mut h = &sys.c * 2.0;
            h.add_scalar_mut(rho);
            let q = &sys.c0 * 2.0 + DVector::from_element(8, rho - nu);
            let direct = h.lu().solve(&q).unwrap();
            assert!((out.lambda - direct).amax() <= 1e-8, "seed {seed}");
        }
    }

    #[test]
    fn penalty_free_reduces_to_ofk() {
        for seed in 0..10 {
            let sys = random_system(100 + seed, 10);
            let ofk = ofk_solve(&sys).unwrap();
            let p = SofkProblem::new(&sys, &ofk, 0.0, 1.0).unwrap();
            let sol = augmented_lagrangian_solve(&p, &SofkConfig::default()).unwrap();
            assert!(sol.converged);
            assert!((&sol.lambda - &ofk.lambda).amax() <= 1e-6);
            assert_abs_diff_eq!(sol.mu, ofk.mu, epsilon = 1e-6);
        }
    }

    #[test]
    fn covariance_shift_leaves_solution_unchanged() {
        for seed in 0..10 {
            let sys = random_system(300 + seed, 9);
            let ofk = ofk_solve(&sys).unwrap();
            let shifted = SofkProblem::new(&sys, &ofk, 0.05, 1.0).unwrap();
            assert!(shifted.shift > 0.0);
            let mut plain = shifted.clone();
            plain.shift = 0.0;
            let a = augmented_lagrangian_solve(&shifted, &SofkConfig::default()).unwrap();
            let b = augmented_lagrangian_solve(&plain, &SofkConfig::default()).unwrap();
            assert!(a.converged && b.converged, "seed {seed}");
            assert!((&a.lambda - &b.lambda).amax() <= 1e-6, "seed {seed}");
            assert_abs_diff_eq!(
                sofk_objective(&shifted, &a.lambda),
                sofk_objective(&plain, &b.lambda),
                epsilon = 1e-9
            );
            assert_abs_diff_eq!(a.mu, b.mu, epsilon = 1e-6);
        }
    }

    #[test]
    fn symmetric_pair_splits_evenly() {
        let c = DMatrix::from_row_slice(2, 2, &[2.0, 0.8, 0.8, 2.0]);
        let sys = KrigingSystem::from_matrices(c, DVector::from_vec(vec![1.1, 1.1]), vec![]).unwrap();
        let ofk = ofk_solve(&sys).unwrap();
        for eta in [0.01, 0.5, 5.0] {
            let p = SofkProblem::new(&sys, &ofk, eta, 1.0).unwrap();
            let sol = augmented_lagrangian_solve(&p, &SofkConfig::default()).unwrap();
            assert_abs_diff_eq!(sol.lambda[0], 0.5, epsilon = 1e-8);
            assert_abs_diff_eq!(sol.lambda[1], 0.5, epsilon = 1e-8);
        }
    }

    #[test]
    fn rho_rule() {
        let cfg = SofkConfig::default();
        assert_eq!(next_rho(1.0, 0.095, 0.1, &cfg), 2.0);
        assert_eq!(next_rho(1.0, 0.05, 0.1, &cfg), 1.0);
    }

    #[test]
    fn renormalisation_is_exact_for_mixed_signs() {
        let mut rng = ChaCha8Rng::seed_from_u64(17);
        for _ in 0..50_000 {
            let n = rng.random_range(1..40);
            let raw = DVector::from_fn(n, |_, _| {
                if rng.random_bool(0.3) {
                    0.0
                } else {
                    rng.random_range(-3.0..4.0)
                }
            });
            let mut l = raw.clone();
            snap_and_renormalize(&mut l, 1e-10);
            let s = ordered_sum(raw.as_slice());
            if s == 0.0 {
                continue;
            }
            assert_eq!(ordered_sum(l.as_slice()), 1.0, "{raw:?}");
            let scaled = &raw / s;
            assert!((&l - &scaled).amax() <= 1e-14 * scaled.amax().max(1.0), "{raw:?}");
        }
    }

    #[test]
    fn renormalisation_is_exact() {
        let mut l = DVector::from_vec(vec![0.3, 1e-12, 0.2, 0.5000000001, -1e-11]);
        snap_and_renormalize(&mut l, 1e-10);
        assert_eq!(l[1], 0.0);
        assert_eq!(l[4], 0.0);
        assert_eq!(ordered_sum(l.as_slice()), 1.0);
    }

    #[test]
    fn config_validation() {
        assert!(SofkConfig {
            alpha: 1.0,
            ..Default::default()
        }
        .validate()
        .is_err());
        assert!(SofkConfig {
            kappa: 1.0,
            ..Default::default()
        }
        .validate()
        .is_err());
        assert!(SofkConfig {
            max_inner: 0,
            ..Default::default()
        }
        .validate()
        .is_err());
        assert!(SofkConfig::default().validate().is_ok());
    }
}

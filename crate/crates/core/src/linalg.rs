//! Small dense linear-algebra and quadrature helpers shared across modules.

use nalgebra::{Cholesky, DMatrix, DVector, Dyn};

/// `dᵀ M d` for a symmetric `M`.
pub fn quad_form(m: &DMatrix<f64>, d: &DVector<f64>) -> f64 {
    d.dot(&(m * d))
}

/// Cholesky factor of `m`, adding `jitter·scale` to the diagonal (growing by
/// 10× per attempt, at most `max_tries` times) when the plain factorization
/// fails. Returns the factor and the total diagonal shift applied.
pub fn cholesky_with_jitter(m: &DMatrix<f64>, jitter: f64, max_tries: usize) -> Option<(Cholesky<f64, Dyn>, f64)> {
    if let Some(ch) = Cholesky::new(m.clone()) {
        return Some((ch, 0.0));
    }
    let mut shift = jitter;
    for _ in 0..max_tries {
        let mut shifted = m.clone();
        for i in 0..m.nrows() {
            shifted[(i, i)] += shift;
        }
        if let Some(ch) = Cholesky::new(shifted) {
            return Some((ch, shift));
        }
        shift *= 10.0;
    }
    None
}

/// Largest eigenvalue of a symmetric positive semi-definite matrix by power
/// iteration, stopping when successive Rayleigh quotients agree to `tol`
/// (relative).
pub fn power_iteration(m: &DMatrix<f64>, tol: f64, max_iter: usize) -> f64 {
    let n = m.nrows();
    if n == 0 {
        return 0.0;
    }
    // deterministic start with no special alignment to structured eigenvectors
    let mut v = DVector::from_fn(n, |i, _| 1.0 + (i as f64 + 1.0).sqrt().fract());
    v /= v.norm();
    let mut lambda = 0.0;
    let mut mv = DVector::zeros(n);
    for _ in 0..max_iter {
        mv.gemv(1.0, m, &v, 0.0);
        let next = v.dot(&mv);
        let norm = mv.norm();
        if norm == 0.0 {
            return 0.0;
        }
        v.copy_from(&mv);
        v /= norm;
        if (next - lambda).abs() <= tol * next.abs().max(f64::MIN_POSITIVE) {
            return next.max(norm);
        }
        lambda = next;
    }
    lambda
}

/// Nodes and weights of the `n`-point Gauss–Legendre rule on [-1, 1].
pub fn gauss_legendre(n: usize) -> (Vec<f64>, Vec<f64>) {
    assert!(n >= 1, "Gauss–Legendre rule needs at least one node");
    let mut nodes = vec![0.0; n];
    let mut weights = vec![0.0; n];
    let nf = n as f64;
    for i in 0..n.div_ceil(2) {
        // Chebyshev-type initial guess for the i-th root
        let mut x = (std::f64::consts::PI * (i as f64 + 0.75) / (nf + 0.5)).cos();
        let mut dp = 0.0;
        for _ in 0..100 {
            let (p, d) = legendre_with_derivative(n, x);
            dp = d;
            let dx = p / d;
            x -= dx;
            if dx.abs() < 1e-16 {
                break;
            }
        }
        let (_, d) = legendre_with_derivative(n, x);
        if d != 0.0 {
            dp = d;
        }
        let w = 2.0 / ((1.0 - x * x) * dp * dp);
        nodes[i] = -x;
        nodes[n - 1 - i] = x;
        weights[i] = w;
        weights[n - 1 - i] = w;
    }
    (nodes, weights)
}

fn legendre_with_derivative(n: usize, x: f64) -> (f64, f64) {
    let mut p0 = 1.0;
    let mut p1 = x;
    if n == 0 {
        return (1.0, 0.0);
    }
    for k in 2..=n {
        let kf = k as f64;
        let p2 = ((2.0 * kf - 1.0) * x * p1 - (kf - 1.0) * p0) / kf;
        p0 = p1;
        p1 = p2;
    }
    let nf = n as f64;
    let d = nf * (x * p1 - p0) / (x * x - 1.0);
    (p1, d)
}

/// Sum in index order; every "exact" feasibility statement in the crate is
/// made with respect to this summation order.
pub fn ordered_sum(v: &[f64]) -> f64 {
    v.iter().fold(0.0, |acc, x| acc + x)
}

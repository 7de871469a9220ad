//! Finite basis systems on a time interval, least-squares smoothing of
//! longitudinal observations into basis coefficients, and the Gram matrix
//! `Φ = ∫ φ(t) φ(t)ᵀ dt` that turns coefficient differences into integrated
//! squared distances between curves.

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::io::{LocationSet, LongitudinalTable};
use crate::linalg::gauss_legendre;

pub const BASIS_SCHEMA_VERSION: u32 = 1;

#[derive(Debug, Clone, PartialEq)]
pub enum BasisKind {
    /// Unnormalised B-splines of the given order (degree `order - 1`) on a
    /// clamped knot vector of length `M + order`.
    BSpline { order: usize, knots: Vec<f64> },
    /// Constant plus sine/cosine pairs, orthonormal over one period.
    Fourier { period: f64 },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "BasisDocument", into = "BasisDocument")]
pub struct BasisDescriptor {
    kind: BasisKind,
    m: usize,
    domain: (f64, f64),
}

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct BasisDocument {
    #[serde(default = "schema_version")]
    schema_version: u32,
    kind: String,
    #[serde(rename = "M")]
    m: usize,
    domain: [f64; 2],
    #[serde(skip_serializing_if = "Option::is_none", default)]
    order: Option<usize>,
    #[serde(skip_serializing_if = "Option::is_none", default)]
    knots: Option<Vec<f64>>,
    #[serde(skip_serializing_if = "Option::is_none", default)]
    period: Option<f64>,
}

fn schema_version() -> u32 {
    BASIS_SCHEMA_VERSION
}

impl From<BasisDescriptor> for BasisDocument {
    fn from(b: BasisDescriptor) -> Self {
        let (kind, order, knots, period) = match b.kind {
            BasisKind::BSpline { order, knots } => ("bspline", Some(order), Some(knots), None),
            BasisKind::Fourier { period } => ("fourier", None, None, Some(period)),
        };
        BasisDocument {
            schema_version: BASIS_SCHEMA_VERSION,
            kind: kind.to_string(),
            m: b.m,
            domain: [b.domain.0, b.domain.1],
            order,
            knots,
            period,
        }
    }
}

impl TryFrom<BasisDocument> for BasisDescriptor {
    type Error = Error;

    fn try_from(doc: BasisDocument) -> Result<Self> {
        if doc.schema_version != BASIS_SCHEMA_VERSION {
            return Err(Error::Data(format!(
                "unsupported basis schema_version {}",
                doc.schema_version
            )));
        }
        let domain = (doc.domain[0], doc.domain[1]);
        match doc.kind.as_str() {
            "bspline" => {
                let order = doc.order.unwrap_or(4);
                match doc.knots {
                    Some(knots) => {
                        let b = Self::bspline_with_knots(order, knots, domain)?;
                        if b.m != doc.m {
                            return Err(Error::Data(format!(
                                "knot vector implies M = {}, document says {}",
                                b.m, doc.m
                            )));
                        }
                        Ok(b)
                    }
                    None => Self::bspline(doc.m, order, domain),
                }
            }
            "fourier" => Self::fourier(doc.m, domain, doc.period),
            other => Err(Error::Data(format!("unknown basis kind `{other}`"))),
        }
    }
}

impl BasisDescriptor {
    /// B-spline basis with `m` functions and equally spaced interior knots.
    pub fn bspline(m: usize, order: usize, domain: (f64, f64)) -> Result<Self> {
        check_domain(domain)?;
        if order == 0 {
            return Err(Error::Data("B-spline order must be at least 1".into()));
        }
        if m < order {
            return Err(Error::Data(format!(
                "B-spline basis of order {order} needs M ≥ {order}, got {m}"
            )));
        }
        let (t0, t1) = domain;
        let n_interior = m - order;
        let mut knots = vec![t0; order];
        for j in 1..=n_interior {
            knots.push(t0 + (t1 - t0) * j as f64 / (n_interior + 1) as f64);
        }
        knots.extend(std::iter::repeat_n(t1, order));
        Self::bspline_with_knots(order, knots, domain)
    }

    /// B-spline basis on an explicit clamped knot vector
    /// (`order` copies of each end point around the interior knots).
    pub fn bspline_with_knots(order: usize, knots: Vec<f64>, domain: (f64, f64)) -> Result<Self> {
        check_domain(domain)?;
        if order == 0 {
            return Err(Error::Data("B-spline order must be at least 1".into()));
        }
        if knots.len() < 2 * order {
            return Err(Error::Data(format!(
                "knot vector of order {order} needs at least {} entries",
                2 * order
            )));
        }
        if knots.iter().any(|k| !k.is_finite()) || knots.windows(2).any(|w| w[0] > w[1]) {
            return Err(Error::Data("knot vector must be finite and nondecreasing".into()));
        }
        let m = knots.len() - order;
        let (t0, t1) = domain;
        if knots[..order].iter().any(|&k| k != t0) || knots[m..].iter().any(|&k| k != t1) {
            return Err(Error::Data(
                "knot vector must be clamped: `order` copies of each domain end point".into(),
            ));
        }
        if knots[order..m].iter().any(|&k| k <= t0 || k >= t1) {
            return Err(Error::Data("interior knots must lie strictly inside the domain".into()));
        }
        Ok(Self {
            kind: BasisKind::BSpline { order, knots },
            m,
            domain,
        })
    }

    /// Fourier basis with `m` (odd) functions; `period` defaults to the
    /// domain length.
    pub fn fourier(m: usize, domain: (f64, f64), period: Option<f64>) -> Result<Self> {
        check_domain(domain)?;
        if m == 0 || m.is_multiple_of(2) {
            return Err(Error::Data(format!("Fourier basis needs an odd M ≥ 1, got {m}")));
        }
        let period = period.unwrap_or(domain.1 - domain.0);
        if !(period.is_finite() && period > 0.0) {
            return Err(Error::Data(format!("Fourier period must be positive, got {period}")));
        }
        Ok(Self {
            kind: BasisKind::Fourier { period },
            m,
            domain,
        })
    }

    pub fn kind(&self) -> &BasisKind {
        &self.kind
    }

    pub fn size(&self) -> usize {
        self.m
    }

    pub fn domain(&self) -> (f64, f64) {
        self.domain
    }

    fn check_time(&self, t: f64) -> Result<f64> {
        let (t0, t1) = self.domain;
        let slack = 1e-12 * (t1 - t0);
        if !t.is_finite() || t < t0 - slack || t > t1 + slack {
            return Err(Error::Domain(format!("t = {t} outside [{t0}, {t1}]")));
        }
        Ok(t.clamp(t0, t1))
    }

    /// `(φ₁(t), …, φ_M(t))`.
    pub fn evaluate(&self, t: f64) -> Result<Vec<f64>> {
        let t = self.check_time(t)?;
        let mut out = vec![0.0; self.m];
        self.evaluate_into(t, &mut out);
        Ok(out)
    }

    /// Evaluates into `out` for a `t` already known to lie in the domain.
    fn evaluate_into(&self, t: f64, out: &mut [f64]) {
        match &self.kind {
            BasisKind::BSpline { order, knots } => {
                out.iter_mut().for_each(|v| *v = 0.0);
                let span = find_span(knots, *order, self.m, t);
                let local = bspline_nonzero(knots, *order, span, t);
                let first = span + 1 - order;
                out[first..=span].copy_from_slice(&local);
            }
            BasisKind::Fourier { period } => {
                let p = *period;
                out[0] = 1.0 / p.sqrt();
                let amp = (2.0 / p).sqrt();
                for j in 1..=(self.m - 1) / 2 {
                    let arg = 2.0 * std::f64::consts::PI * j as f64 * t / p;
                    out[2 * j - 1] = amp * arg.sin();
                    out[2 * j] = amp * arg.cos();
                }
            }
        }
    }

    /// Basis values on a grid, one row per grid point.
    pub fn design_matrix(&self, grid: &[f64]) -> Result<DMatrix<f64>> {
        let mut x = DMatrix::zeros(grid.len(), self.m);
        let mut row = vec![0.0; self.m];
        for (r, &t) in grid.iter().enumerate() {
            let t = self.check_time(t)?;
            self.evaluate_into(t, &mut row);
            for (c, v) in row.iter().enumerate() {
                x[(r, c)] = *v;
            }
        }
        Ok(x)
    }

    /// `wᵀφ(t)` on a grid.
    pub fn evaluate_function(&self, w: &[f64], grid: &[f64]) -> Result<Vec<f64>> {
        if w.len() != self.m {
            return Err(Error::Contract(format!(
                "coefficient vector has length {}, basis has {} functions",
                w.len(),
                self.m
            )));
        }
        let mut row = vec![0.0; self.m];
        grid.iter()
            .map(|&t| {
                let t = self.check_time(t)?;
                self.evaluate_into(t, &mut row);
                Ok(row.iter().zip(w).map(|(p, c)| p * c).sum())
            })
            .collect()
    }

    /// Gram matrix `Φ = ∫ φ φᵀ dt` over the domain.
    pub fn gram_matrix(&self) -> DMatrix<f64> {
        let m = self.m;
        match &self.kind {
            BasisKind::Fourier { period } if (*period - (self.domain.1 - self.domain.0)).abs() <= 1e-12 * period => {
                DMatrix::identity(m, m)
            }
            BasisKind::Fourier { period } => {
                // period differs from the domain: integrate numerically
                let spans = 64 + 4 * m;
                let width = self.domain.1 - self.domain.0;
                let breaks: Vec<f64> = (0..=spans)
                    .map(|i| self.domain.0 + width * i as f64 / spans as f64)
                    .collect();
                let _ = period;
                self.gram_by_quadrature(&breaks, 16)
            }
            BasisKind::BSpline { order, knots } => {
                let mut breaks = knots.clone();
                breaks.dedup();
                // k nodes integrate degree 2k-1 exactly ≥ 2(k-1)
                self.gram_by_quadrature(&breaks, *order)
            }
        }
    }

    fn gram_by_quadrature(&self, breaks: &[f64], nodes: usize) -> DMatrix<f64> {
        let m = self.m;
        let (x, w) = gauss_legendre(nodes);
        let mut gram = DMatrix::zeros(m, m);
        let mut phi = vec![0.0; m];
        for span in breaks.windows(2) {
            let (a, b) = (span[0], span[1]);
            if b <= a {
                continue;
            }
            let half = 0.5 * (b - a);
            let mid = 0.5 * (a + b);
            for (xi, wi) in x.iter().zip(&w) {
                let t = mid + half * xi;
                self.evaluate_into(t, &mut phi);
                let wt = wi * half;
                for r in 0..m {
                    if phi[r] == 0.0 {
                        continue;
                    }
                    for c in r..m {
                        gram[(r, c)] += wt * phi[r] * phi[c];
                    }
                }
            }
        }
        for r in 0..m {
            for c in 0..r {
                gram[(r, c)] = gram[(c, r)];
            }
        }
        gram
    }
}

fn check_domain(domain: (f64, f64)) -> Result<()> {
    let (t0, t1) = domain;
    if !(t0.is_finite() && t1.is_finite() && t0 < t1) {
        return Err(Error::Data(format!("invalid time domain [{t0}, {t1}]")));
    }
    Ok(())
}

/// Index `s` with `knots[s] ≤ t < knots[s+1]`; the right end point belongs to
/// the last non-empty span.
fn find_span(knots: &[f64], order: usize, m: usize, t: f64) -> usize {
    if t >= knots[m] {
        return m - 1;
    }
    let (mut lo, mut hi) = (order - 1, m);
    while hi - lo > 1 {
        let mid = (lo + hi) / 2;
        if t < knots[mid] {
            hi = mid;
        } else {
            lo = mid;
        }
    }
    lo
}

/// The `order` B-splines that are nonzero on span `s`, by the triangular
/// Cox–de Boor recurrence.
fn bspline_nonzero(knots: &[f64], order: usize, s: usize, t: f64) -> Vec<f64> {
    let mut n = vec![0.0; order];
    let mut left = vec![0.0; order];
    let mut right = vec![0.0; order];
    n[0] = 1.0;
    for j in 1..order {
        left[j] = t - knots[s + 1 - j];
        right[j] = knots[s + j] - t;
        let mut saved = 0.0;
        for r in 0..j {
            let denom = right[r + 1] + left[j - r];
            let temp = if denom == 0.0 { 0.0 } else { n[r] / denom };
            n[r] = saved + right[r + 1] * temp;
            saved = left[j - r] * temp;
        }
        n[j] = saved;
    }
    n
}

/// Sites, their basis and the `n × M` coefficient matrix (row `i` holds the
/// coefficients of site `i`'s curve).
#[derive(Debug, Clone, PartialEq)]
pub struct FunctionalDataset {
    pub locations: LocationSet,
    pub basis: BasisDescriptor,
    pub coefs: DMatrix<f64>,
}

impl FunctionalDataset {
    pub fn new(locations: LocationSet, basis: BasisDescriptor, coefs: DMatrix<f64>) -> Result<Self> {
        if coefs.nrows() != locations.len() || coefs.ncols() != basis.size() {
            return Err(Error::Contract(format!(
                "coefficient matrix is {}×{}, expected {}×{}",
                coefs.nrows(),
                coefs.ncols(),
                locations.len(),
                basis.size()
            )));
        }
        if coefs.iter().any(|v| !v.is_finite()) {
            return Err(Error::Data("coefficient matrix has non-finite entries".into()));
        }
        Ok(Self {
            locations,
            basis,
            coefs,
        })
    }

    pub fn len(&self) -> usize {
        self.coefs.nrows()
    }

    pub fn is_empty(&self) -> bool {
        self.coefs.nrows() == 0
    }

    pub fn coef(&self, i: usize) -> DVector<f64> {
        self.coefs.row(i).transpose()
    }

    /// Curve of site `i` on a grid.
    pub fn evaluate_site(&self, i: usize, grid: &[f64]) -> Result<Vec<f64>> {
        if i >= self.len() {
            return Err(Error::Contract(format!(
                "site index {i} out of range for {} sites",
                self.len()
            )));
        }
        let w: Vec<f64> = self.coefs.row(i).iter().copied().collect();
        self.basis.evaluate_function(&w, grid)
    }

    /// Sites at `indices`, in the given order.
    pub fn subset(&self, indices: &[usize]) -> Result<Self> {
        let locations = self.locations.subset(indices)?;
        let coefs = self.coefs.select_rows(indices);
        Self::new(locations, self.basis.clone(), coefs)
    }
}

/// Least-squares coefficients for a single series:
/// `argmin_w Σⱼ (xⱼ − wᵀφ(tⱼ))² + ridge·‖w‖²`, solved by QR on the
/// (optionally ridge-augmented) design.
pub fn smooth_series(
    basis: &BasisDescriptor,
    times: &[f64],
    values: &[f64],
    ridge: f64,
) -> std::result::Result<DVector<f64>, String> {
    let m = basis.size();
    let n = times.len();
    if !(ridge >= 0.0 && ridge.is_finite()) {
        return Err(format!("ridge must be a finite nonnegative number, got {ridge}"));
    }
    if ridge == 0.0 && n < m {
        return Err(format!("{n} observations for {m} basis functions without ridge"));
    }
    let design = basis.design_matrix(times).map_err(|e| e.to_string())?;
    let extra = if ridge > 0.0 { m } else { 0 };
    let mut a = DMatrix::zeros(n + extra, m);
    a.rows_mut(0, n).copy_from(&design);
    let mut y = DVector::zeros(n + extra);
    y.rows_mut(0, n).copy_from(&DVector::from_column_slice(values));
    if ridge > 0.0 {
        let s = ridge.sqrt();
        for j in 0..m {
            a[(n + j, j)] = s;
        }
    }
    let qr = a.qr();
    let r = qr.r();
    let max_diag = (0..m).map(|j| r[(j, j)].abs()).fold(0.0, f64::max);
    if max_diag == 0.0 || (0..m).any(|j| r[(j, j)].abs() <= 1e-12 * max_diag) {
        return Err("design matrix is rank deficient".into());
    }
    let qty = qr.q().transpose() * y;
    let w = r
        .solve_upper_triangular(&qty)
        .ok_or_else(|| "triangular solve failed".to_string())?;
    Ok(w)
}

/// Smooths every site of `table` into basis coefficients.
pub fn smooth(
    table: &LongitudinalTable,
    locations: &LocationSet,
    basis: &BasisDescriptor,
    ridge: f64,
) -> Result<FunctionalDataset> {
    if table.n_sites() != locations.len() || table.site_ids().iter().zip(locations.sites()).any(|(a, b)| *a != b.id) {
        return Err(Error::Contract(
            "observation table does not match the location set".into(),
        ));
    }
    let m = basis.size();
    let mut coefs = DMatrix::zeros(table.n_sites(), m);
    for i in 0..table.n_sites() {
        let s = table.series(i);
        let w = smooth_series(basis, &s.times, &s.values, ridge).map_err(|reason| Error::Smoothing {
            site: table.site_id(i).to_string(),
            reason,
        })?;
        coefs.set_row(i, &w.transpose());
    }
    FunctionalDataset::new(locations.clone(), basis.clone(), coefs)
}

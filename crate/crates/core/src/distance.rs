//! Point distances, the Mahalanobis metric and dissimilarity matrices.
//!
//! Clustering code works with squared distances throughout; dissimilarity
//! matrices hold plain (non-squared) distances.

use nalgebra::DMatrix;

use crate::data::{Dataset, DistanceKind};
use crate::error::{Error, Result};

/// Relative pivot floor for accepting a Cholesky factorization as positive definite.
const PIVOT_FLOOR: f64 = 1e-12;

/// Squared Euclidean distance.
pub fn sq_euclidean(a: &[f64], b: &[f64]) -> Result<f64> {
    check_len(a.len(), b.len())?;
    Ok(sq_euclidean_unchecked(a, b))
}

#[inline]
pub(crate) fn sq_euclidean_unchecked(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y) * (x - y)).sum()
}

fn check_len(expected: usize, found: usize) -> Result<()> {
    if expected == found {
        Ok(())
    } else {
        Err(Error::DimensionMismatch { expected, found })
    }
}

/// Inverse covariance defining a Mahalanobis metric.
#[derive(Debug, Clone, PartialEq)]
pub struct CovarianceModel {
    d: usize,
    sigma_inv: Vec<f64>,
    regularization: f64,
}

impl CovarianceModel {
    /// Wraps a row-major `d × d` inverse covariance. It must be symmetric
    /// within 1e-10 and positive definite.
    pub fn from_inverse(d: usize, sigma_inv: Vec<f64>) -> Result<Self> {
        Self::build(d, sigma_inv, 0.0)
    }

    pub fn identity(d: usize) -> Self {
        let sigma_inv = DMatrix::<f64>::identity(d, d);
        Self {
            d,
            sigma_inv: row_major(&sigma_inv),
            regularization: 0.0,
        }
    }

    fn build(d: usize, sigma_inv: Vec<f64>, regularization: f64) -> Result<Self> {
        if d == 0 {
            return Err(Error::InvalidInput(
                "covariance dimension must be positive".into(),
            ));
        }
        check_len(d * d, sigma_inv.len())?;
        if sigma_inv.iter().any(|v| !v.is_finite()) {
            return Err(Error::SingularCovariance);
        }
        for i in 0..d {
            for j in (i + 1)..d {
                if (sigma_inv[i * d + j] - sigma_inv[j * d + i]).abs() > 1e-10 {
                    return Err(Error::InvalidInput(format!(
                        "inverse covariance is not symmetric at ({i}, {j})"
                    )));
                }
            }
        }
        let m = DMatrix::from_row_slice(d, d, &sigma_inv);
        cholesky_checked(m)?;
        Ok(Self {
            d,
            sigma_inv,
            regularization,
        })
    }

    pub fn dim(&self) -> usize {
        self.d
    }

    /// Row-major inverse covariance.
    pub fn sigma_inv(&self) -> &[f64] {
        &self.sigma_inv
    }

    pub fn regularization(&self) -> f64 {
        self.regularization
    }

    #[inline]
    fn quadratic_form(&self, a: &[f64], b: &[f64]) -> f64 {
        let d = self.d;
        let mut acc = 0.0;
        for r in 0..d {
            let dr = a[r] - b[r];
            let row = &self.sigma_inv[r * d..(r + 1) * d];
            let mut inner = 0.0;
            for (k, s) in row.iter().enumerate() {
                inner += s * (a[k] - b[k]);
            }
            acc += dr * inner;
        }
        // Rounding can push the form of a PD matrix a hair below zero.
        acc.max(0.0)
    }
}

fn row_major(m: &DMatrix<f64>) -> Vec<f64> {
    m.transpose().as_slice().to_vec()
}

fn cholesky_checked(m: DMatrix<f64>) -> Result<nalgebra::Cholesky<f64, nalgebra::Dyn>> {
    let scale = m.diagonal().iter().fold(0.0f64, |acc, v| acc.max(v.abs()));
    let chol = m.cholesky().ok_or(Error::SingularCovariance)?;
    let l = chol.l_dirty();
    if (0..l.nrows()).any(|i| l[(i, i)] * l[(i, i)] <= PIVOT_FLOOR * scale) {
        return Err(Error::SingularCovariance);
    }
    Ok(chol)
}

/// Squared Mahalanobis distance `(a − b)ᵀ Σ⁻¹ (a − b)`.
pub fn mahalanobis_sq(a: &[f64], b: &[f64], cov: &CovarianceModel) -> Result<f64> {
    check_len(cov.d, a.len())?;
    check_len(cov.d, b.len())?;
    Ok(cov.quadratic_form(a, b))
}

/// Diagonal loading used when none is requested explicitly: `1e-9 · trace(Σ) / d`.
pub fn default_regularization(data: &Dataset) -> f64 {
    let cov = sample_covariance(data);
    1e-9 * cov.trace() / data.d() as f64
}

fn sample_covariance(data: &Dataset) -> DMatrix<f64> {
    let (n, d) = (data.n(), data.d());
    let mut mean = vec![0.0; d];
    for p in data.points() {
        for (m, x) in mean.iter_mut().zip(p) {
            *m += x;
        }
    }
    mean.iter_mut().for_each(|m| *m /= n as f64);
    let mut cov = DMatrix::<f64>::zeros(d, d);
    for p in data.points() {
        for r in 0..d {
            let dr = p[r] - mean[r];
            for c in r..d {
                cov[(r, c)] += dr * (p[c] - mean[c]);
            }
        }
    }
    let denom = (n.max(2) - 1) as f64;
    for r in 0..d {
        for c in r..d {
            let v = cov[(r, c)] / denom;
            cov[(r, c)] = v;
            cov[(c, r)] = v;
        }
    }
    cov
}

/// Global sample covariance of `data`, loaded with `regularization` on the
/// diagonal and inverted.
pub fn fit_covariance(data: &Dataset, regularization: f64) -> Result<CovarianceModel> {
    if data.n() < 2 {
        return Err(Error::InvalidInput(
            "covariance needs at least two points".into(),
        ));
    }
    if !(regularization.is_finite() && regularization >= 0.0) {
        return Err(Error::InvalidConfig(format!(
            "regularization must be >= 0, got {regularization}"
        )));
    }
    let d = data.d();
    let mut cov = sample_covariance(data);
    for i in 0..d {
        cov[(i, i)] += regularization;
    }
    let inv = cholesky_checked(cov)?.inverse();
    let sym = (&inv + inv.transpose()) * 0.5;
    CovarianceModel::build(d, row_major(&sym), regularization)
}

/// Distance used by the clustering algorithms.
#[derive(Debug, Clone, PartialEq, Default)]
pub enum Metric {
    #[default]
    Euclidean,
    Mahalanobis(CovarianceModel),
}

impl Metric {
    /// Builds the metric for `kind`, fitting a globally regularized
    /// covariance when Mahalanobis is requested.
    pub fn for_data(kind: DistanceKind, data: &Dataset) -> Result<Self> {
        match kind {
            DistanceKind::Euclidean => Ok(Metric::Euclidean),
            DistanceKind::Mahalanobis => Ok(Metric::Mahalanobis(fit_covariance(
                data,
                default_regularization(data),
            )?)),
        }
    }

    pub fn kind(&self) -> DistanceKind {
        match self {
            Metric::Euclidean => DistanceKind::Euclidean,
            Metric::Mahalanobis(_) => DistanceKind::Mahalanobis,
        }
    }

    /// Errors unless the metric can measure `d`-dimensional points.
    pub fn check_dim(&self, d: usize) -> Result<()> {
        match self {
            Metric::Euclidean => Ok(()),
            Metric::Mahalanobis(cov) => check_len(cov.d, d),
        }
    }

    /// Squared distance; callers guarantee matching dimensions.
    #[inline]
    pub fn sq_distance(&self, a: &[f64], b: &[f64]) -> f64 {
        debug_assert_eq!(a.len(), b.len());
        match self {
            Metric::Euclidean => sq_euclidean_unchecked(a, b),
            Metric::Mahalanobis(cov) => cov.quadratic_form(a, b),
        }
    }

    #[inline]
    pub fn distance(&self, a: &[f64], b: &[f64]) -> f64 {
        self.sq_distance(a, b).sqrt()
    }
}

/// Symmetric, zero-diagonal `n × n` matrix of nonnegative dissimilarities.
#[derive(Debug, Clone, PartialEq)]
pub struct DissimilarityMatrix {
    n: usize,
    values: Vec<f64>,
}

impl DissimilarityMatrix {
    /// Validating constructor over a row-major `n × n` buffer.
    pub fn new(n: usize, values: Vec<f64>) -> Result<Self> {
        if n == 0 {
            return Err(Error::InvalidInput(
                "dissimilarity matrix must be non-empty".into(),
            ));
        }
        check_len(n * n, values.len())?;
        for i in 0..n {
            if values[i * n + i] != 0.0 {
                return Err(Error::InvalidInput(format!("nonzero diagonal at {i}")));
            }
            for j in 0..n {
                let v = values[i * n + j];
                if !(v.is_finite() && v >= 0.0) {
                    return Err(Error::InvalidInput(format!(
                        "entry ({i}, {j}) = {v} is not a finite nonnegative value"
                    )));
                }
                if v != values[j * n + i] {
                    return Err(Error::InvalidInput(format!(
                        "matrix is not symmetric at ({i}, {j})"
                    )));
                }
            }
        }
        Ok(Self { n, values })
    }

    pub fn from_rows<R: AsRef<[f64]>>(rows: &[R]) -> Result<Self> {
        let n = rows.len();
        let mut values = Vec::with_capacity(n * n);
        for row in rows {
            let row = row.as_ref();
            check_len(n, row.len())?;
            values.extend_from_slice(row);
        }
        Self::new(n, values)
    }

    pub(crate) fn from_parts(n: usize, values: Vec<f64>) -> Self {
        debug_assert_eq!(values.len(), n * n);
        Self { n, values }
    }

    pub fn n(&self) -> usize {
        self.n
    }

    #[inline]
    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.values[i * self.n + j]
    }

    pub fn row(&self, i: usize) -> &[f64] {
        &self.values[i * self.n..(i + 1) * self.n]
    }

    pub fn as_flat(&self) -> &[f64] {
        &self.values
    }

    pub fn max_value(&self) -> f64 {
        self.values.iter().copied().fold(0.0, f64::max)
    }

    /// Symmetric permutation: entry `(k, l)` of the result is `(order[k], order[l])`.
    pub fn permuted(&self, order: &[usize]) -> Result<Self> {
        check_len(self.n, order.len())?;
        let mut seen = vec![false; self.n];
        for &i in order {
            if i >= self.n || std::mem::replace(&mut seen[i], true) {
                return Err(Error::InvalidInput("order is not a permutation".into()));
            }
        }
        let n = self.n;
        let mut values = Vec::with_capacity(n * n);
        for &i in order {
            for &j in order {
                values.push(self.get(i, j));
            }
        }
        Ok(Self::from_parts(n, values))
    }
}

/// Pairwise (non-squared) distances between the rows of `data`.
pub fn pairwise_matrix(
    data: &Dataset,
    kind: DistanceKind,
    cov: Option<&CovarianceModel>,
) -> Result<DissimilarityMatrix> {
    let metric = match kind {
        DistanceKind::Euclidean => Metric::Euclidean,
        DistanceKind::Mahalanobis => {
            Metric::Mahalanobis(cov.ok_or(Error::MissingCovariance)?.clone())
        }
    };
    metric.check_dim(data.d())?;
    Ok(pairwise_with(data, &metric))
}

pub(crate) fn pairwise_with(data: &Dataset, metric: &Metric) -> DissimilarityMatrix {
    let n = data.n();
    let mut values = vec![0.0; n * n];
    for i in 0..n {
        for j in (i + 1)..n {
            let v = metric.distance(data.point(i), data.point(j));
            values[i * n + j] = v;
            values[j * n + i] = v;
        }
    }
    DissimilarityMatrix::from_parts(n, values)
}

//! Python bindings. Points, centroids and matrices cross the boundary as
//! lists of rows; membership matrices are returned one row per cluster.

use pyo3::exceptions::{PyIOError, PyRuntimeError, PyValueError};
use pyo3::prelude::*;
use pyo3::types::{PyBytes, PyDict};
use softclust::datagen;
use softclust::distance::pairwise_matrix;
use softclust::tendency;
use softclust::validity::{self, Algorithm};
use softclust::{
    fcm, pcm, CentroidSet, ClusteringResult, Dataset, DissimilarityMatrix, DistanceKind, Error,
    MembershipKind, MembershipMatrix, Metric, RunConfig,
};

fn to_py(e: Error) -> PyErr {
    match e {
        Error::Io { .. } => PyIOError::new_err(e.to_string()),
        Error::EmptyCluster { .. }
        | Error::DegenerateCluster { .. }
        | Error::SingularCovariance
        | Error::CoincidentCentroids { .. } => PyRuntimeError::new_err(e.to_string()),
        _ => PyValueError::new_err(e.to_string()),
    }
}

fn dataset(points: Vec<Vec<f64>>) -> PyResult<Dataset> {
    Dataset::from_rows(&points).map_err(to_py)
}

fn metric_kind(name: &str) -> PyResult<DistanceKind> {
    name.parse().map_err(to_py)
}

fn dissimilarity(rows: Vec<Vec<f64>>) -> PyResult<DissimilarityMatrix> {
    DissimilarityMatrix::from_rows(&rows).map_err(to_py)
}

fn rows_of(m: &DissimilarityMatrix) -> Vec<Vec<f64>> {
    (0..m.n()).map(|i| m.row(i).to_vec()).collect()
}

/// Outcome of an FCM or PCM fit.
#[pyclass(name = "FitResult", module = "pysoftclust", get_all, frozen)]
pub struct PyFitResult {
    centroids: Vec<Vec<f64>>,
    /// One row per cluster, one entry per point.
    memberships: Vec<Vec<f64>>,
    labels: Vec<usize>,
    cost_trace: Vec<f64>,
    iterations: usize,
    converged: bool,
    eta: Option<Vec<f64>>,
    coincident_centroids: bool,
}

impl From<ClusteringResult> for PyFitResult {
    fn from(r: ClusteringResult) -> Self {
        let u = &r.memberships;
        Self {
            centroids: r.centroids.iter().map(<[f64]>::to_vec).collect(),
            memberships: (0..u.c()).map(|j| u.cluster(j).to_vec()).collect(),
            labels: r.labels,
            cost_trace: r.cost_trace,
            iterations: r.iterations,
            converged: r.converged,
            eta: r.eta,
            coincident_centroids: r.coincident_centroids,
        }
    }
}

#[pymethods]
impl PyFitResult {
    #[getter]
    fn final_cost(&self) -> f64 {
        self.cost_trace.last().copied().unwrap_or(f64::NAN)
    }

    fn __repr__(&self) -> String {
        format!(
            "FitResult(c={}, iterations={}, converged={})",
            self.centroids.len(),
            self.iterations,
            self.converged
        )
    }
}

fn run_config(
    c: usize,
    q: f64,
    tol: f64,
    max_iter: usize,
    seed: u64,
    metric: &str,
) -> PyResult<RunConfig> {
    Ok(RunConfig::new(c)
        .with_q(q)
        .with_tol(tol)
        .with_max_iter(max_iter)
        .with_seed(seed)
        .with_distance(metric_kind(metric)?))
}

#[pyfunction]
#[allow(clippy::too_many_arguments)]
#[pyo3(signature = (points, c, q=2.0, tol=1e-6, max_iter=300, seed=0, metric="euclidean"))]
fn fcm_fit(
    py: Python<'_>,
    points: Vec<Vec<f64>>,
    c: usize,
    q: f64,
    tol: f64,
    max_iter: usize,
    seed: u64,
    metric: &str,
) -> PyResult<PyFitResult> {
    let data = dataset(points)?;
    let config = run_config(c, q, tol, max_iter, seed, metric)?;
    py.detach(|| {
        let metric = Metric::for_data(config.distance_kind, &data)?;
        fcm::fcm_fit_with_metric(&data, &config, &metric)
    })
    .map(Into::into)
    .map_err(to_py)
}

#[pyfunction]
#[allow(clippy::too_many_arguments)]
#[pyo3(signature = (points, c, k=1.0, q=2.0, tol=1e-6, max_iter=300, seed=0, metric="euclidean"))]
fn pcm_fit(
    py: Python<'_>,
    points: Vec<Vec<f64>>,
    c: usize,
    k: f64,
    q: f64,
    tol: f64,
    max_iter: usize,
    seed: u64,
    metric: &str,
) -> PyResult<PyFitResult> {
    let data = dataset(points)?;
    let config = run_config(c, q, tol, max_iter, seed, metric)?;
    py.detach(|| {
        let metric = Metric::for_data(config.distance_kind, &data)?;
        pcm::pcm_fit_with_metric(&data, &config, k, &metric)
    })
    .map(Into::into)
    .map_err(to_py)
}

/// Fuzzy memberships of `points` for fixed `centroids`, one row per cluster.
#[pyfunction]
#[pyo3(signature = (points, centroids, q=2.0))]
fn update_memberships(
    points: Vec<Vec<f64>>,
    centroids: Vec<Vec<f64>>,
    q: f64,
) -> PyResult<Vec<Vec<f64>>> {
    let data = dataset(points)?;
    let cents = CentroidSet::from_rows(&centroids).map_err(to_py)?;
    let u = fcm::update_memberships(&data, &cents, q, &Metric::Euclidean).map_err(to_py)?;
    Ok((0..u.c()).map(|j| u.cluster(j).to_vec()).collect())
}

#[pyfunction]
#[pyo3(signature = (points, metric="euclidean"))]
fn pairwise(points: Vec<Vec<f64>>, metric: &str) -> PyResult<Vec<Vec<f64>>> {
    let data = dataset(points)?;
    let kind = metric_kind(metric)?;
    let m = match Metric::for_data(kind, &data).map_err(to_py)? {
        Metric::Mahalanobis(cov) => pairwise_matrix(&data, kind, Some(&cov)),
        Metric::Euclidean => pairwise_matrix(&data, kind, None),
    }
    .map_err(to_py)?;
    Ok(rows_of(&m))
}

/// VAT ordering and the reordered matrix.
#[pyfunction]
fn vat(matrix: Vec<Vec<f64>>) -> PyResult<(Vec<usize>, Vec<Vec<f64>>)> {
    let v = tendency::vat_order(&dissimilarity(matrix)?);
    Ok((v.ordering, rows_of(&v.reordered)))
}

/// Min-max path transform, indexed like the input.
#[pyfunction]
fn ivat(matrix: Vec<Vec<f64>>) -> PyResult<Vec<Vec<f64>>> {
    Ok(rows_of(&tendency::ivat_transform(&dissimilarity(matrix)?)))
}

/// Binary PGM image of a matrix, scaled by `scale_max` or its own maximum.
#[pyfunction]
#[pyo3(signature = (matrix, scale_max=None))]
fn pgm<'py>(
    py: Python<'py>,
    matrix: Vec<Vec<f64>>,
    scale_max: Option<f64>,
) -> PyResult<Bound<'py, PyBytes>> {
    let m = dissimilarity(matrix)?;
    let bytes = match scale_max {
        Some(s) => tendency::pgm_bytes_scaled(&m, s),
        None => tendency::pgm_bytes(&m),
    };
    Ok(PyBytes::new(py, &bytes))
}

/// Partition coefficient of a membership matrix given one row per cluster.
/// Columns that do not sum to one are treated as typicalities.
#[pyfunction]
fn partition_coefficient(memberships: Vec<Vec<f64>>) -> PyResult<f64> {
    let c = memberships.len();
    let n = memberships.first().map_or(0, Vec::len);
    let flat: Vec<f64> = memberships.into_iter().flatten().collect();
    let fuzzy = MembershipMatrix::new(c, n, flat.clone(), MembershipKind::Fuzzy);
    let u = match fuzzy {
        Ok(u) => u,
        Err(_) => {
            MembershipMatrix::new(c, n, flat, MembershipKind::Possibilistic).map_err(to_py)?
        }
    };
    Ok(validity::partition_coefficient(&u))
}

#[pyfunction]
fn dunn_index(points: Vec<Vec<f64>>, labels: Vec<usize>) -> PyResult<f64> {
    validity::dunn_index(&dataset(points)?, &labels, &Metric::Euclidean).map_err(to_py)
}

#[pyfunction]
#[pyo3(signature = (points, labels, centroids, scatter_q=2.0))]
fn davies_bouldin(
    points: Vec<Vec<f64>>,
    labels: Vec<usize>,
    centroids: Vec<Vec<f64>>,
    scatter_q: f64,
) -> PyResult<f64> {
    let cents = CentroidSet::from_rows(&centroids).map_err(to_py)?;
    validity::davies_bouldin(
        &dataset(points)?,
        &labels,
        &cents,
        scatter_q,
        &Metric::Euclidean,
    )
    .map_err(to_py)
}

/// Fits every cluster count in `c_min..=c_max` and returns one dict per row.
#[pyfunction]
#[pyo3(signature = (points, c_min, c_max, algorithm="fcm", k=1.0, seed=0))]
fn sweep<'py>(
    py: Python<'py>,
    points: Vec<Vec<f64>>,
    c_min: usize,
    c_max: usize,
    algorithm: &str,
    k: f64,
    seed: u64,
) -> PyResult<Vec<Bound<'py, PyDict>>> {
    let algorithm = match algorithm {
        "fcm" => Algorithm::Fcm,
        "pcm" => Algorithm::Pcm { k },
        other => {
            return Err(PyValueError::new_err(format!(
                "unknown algorithm {other:?}"
            )))
        }
    };
    let data = dataset(points)?;
    let template = RunConfig::new(c_min).with_seed(seed);
    let report = py
        .detach(|| validity::sweep_c(&data, algorithm, c_min, c_max, &template))
        .map_err(to_py)?;
    report
        .rows
        .iter()
        .map(|r| {
            let d = PyDict::new(py);
            d.set_item("c", r.c)?;
            d.set_item("seed", r.seed)?;
            d.set_item("pc", r.pc)?;
            d.set_item("di", r.di)?;
            d.set_item("dbi", r.dbi)?;
            d.set_item("flags", r.flags.clone())?;
            Ok(d)
        })
        .collect()
}

#[pyfunction]
fn scenarios() -> Vec<String> {
    datagen::builtin_scenarios()
        .into_iter()
        .map(|s| s.name)
        .collect()
}

/// Samples a built-in scenario; returns `(points, truth_labels)`.
#[pyfunction]
#[pyo3(signature = (scenario, seed=0))]
fn generate(scenario: &str, seed: u64) -> PyResult<(Vec<Vec<f64>>, Vec<i64>)> {
    let s = datagen::builtin_scenario(scenario).map_err(to_py)?;
    let labeled = datagen::generate(&s, seed).map_err(to_py)?;
    let points = labeled.data.points().map(<[f64]>::to_vec).collect();
    Ok((points, labeled.truth))
}

#[pymodule]
fn pysoftclust(m: &Bound<'_, PyModule>) -> PyResult<()> {
    m.add_class::<PyFitResult>()?;
    m.add_function(wrap_pyfunction!(fcm_fit, m)?)?;
    m.add_function(wrap_pyfunction!(pcm_fit, m)?)?;
    m.add_function(wrap_pyfunction!(update_memberships, m)?)?;
    m.add_function(wrap_pyfunction!(pairwise, m)?)?;
    m.add_function(wrap_pyfunction!(vat, m)?)?;
    m.add_function(wrap_pyfunction!(ivat, m)?)?;
    m.add_function(wrap_pyfunction!(pgm, m)?)?;
    m.add_function(wrap_pyfunction!(partition_coefficient, m)?)?;
    m.add_function(wrap_pyfunction!(dunn_index, m)?)?;
    m.add_function(wrap_pyfunction!(davies_bouldin, m)?)?;
    m.add_function(wrap_pyfunction!(sweep, m)?)?;
    m.add_function(wrap_pyfunction!(scenarios, m)?)?;
    m.add_function(wrap_pyfunction!(generate, m)?)?;
    Ok(())
}

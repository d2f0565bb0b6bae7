//! Possibilistic c-means.
//!
//! Minimizes `Σ_i Σ_j u_ij^q d²(x_i, θ_j) + Σ_j η_j Σ_i (1 − u_ij)^q` with no
//! constraint across clusters. The typicality update is the stationary point
//! of that cost in `u_ij`:
//!
//! ```text
//! u_ij = 1 / (1 + (d²(x_i, θ_j) / η_j)^(1/(q-1)))
//! ```
//!
//! Bandwidths `η_j` start from the fuzzy scatter of an FCM warm start. Points
//! far from every prototype carry real weight in that partition, so `η` is
//! re-estimated from the typicalities until it settles (a few rounds at most).
//! Within each round `η` is held fixed, which keeps the recorded cost of the
//! final round non-increasing.

use crate::data::{
    CentroidSet, ClusteringResult, Dataset, MembershipKind, MembershipMatrix, RunConfig,
};
use crate::distance::Metric;
use crate::error::{Error, Result};
use crate::fcm::{self, check_memberships, check_shapes, has_coincident_pair, update_centroids};

/// Default scale applied to the fuzzy intra-cluster scatter when estimating `η`.
pub const DEFAULT_K: f64 = 1.0;

const ETA_ROUNDS: usize = 20;
const ETA_SETTLE: f64 = 1e-3;

/// Per-cluster bandwidths, in squared-distance units.
#[derive(Debug, Clone, PartialEq)]
pub struct EtaVector(Vec<f64>);

impl EtaVector {
    pub fn new(eta: Vec<f64>) -> Result<Self> {
        if eta.is_empty() {
            return Err(Error::InvalidInput("eta vector is empty".into()));
        }
        if let Some(j) = eta.iter().position(|e| !(e.is_finite() && *e > 0.0)) {
            return Err(Error::DegenerateCluster { cluster: j });
        }
        Ok(Self(eta))
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.0
    }

    pub fn into_vec(self) -> Vec<f64> {
        self.0
    }
}

fn check_eta(centroids: &CentroidSet, eta: &EtaVector) -> Result<()> {
    if eta.len() != centroids.c() {
        return Err(Error::DimensionMismatch {
            expected: centroids.c(),
            found: eta.len(),
        });
    }
    Ok(())
}

/// The possibilistic objective for fixed `η`.
pub fn pcm_cost(
    data: &Dataset,
    centroids: &CentroidSet,
    u: &MembershipMatrix,
    eta: &EtaVector,
    q: f64,
    metric: &Metric,
) -> Result<f64> {
    check_shapes(data, centroids, metric)?;
    check_memberships(data, centroids, u)?;
    check_eta(centroids, eta)?;
    Ok(cost_unchecked(data, centroids, u, eta, q, metric))
}

fn cost_unchecked(
    data: &Dataset,
    centroids: &CentroidSet,
    u: &MembershipMatrix,
    eta: &EtaVector,
    q: f64,
    metric: &Metric,
) -> f64 {
    let scatter = fcm::weighted_scatter(data, centroids, u, q, metric);
    let penalty: f64 = eta
        .as_slice()
        .iter()
        .enumerate()
        .map(|(j, e)| e * u.cluster(j).iter().map(|x| (1.0 - x).powf(q)).sum::<f64>())
        .sum();
    scatter + penalty
}

/// Typicality of every point for every cluster, each cluster independently.
pub fn update_typicalities(
    data: &Dataset,
    centroids: &CentroidSet,
    eta: &EtaVector,
    q: f64,
    metric: &Metric,
) -> Result<MembershipMatrix> {
    if !(q.is_finite() && q > 1.0) {
        return Err(Error::InvalidConfig(format!(
            "fuzzifier must be > 1, got {q}"
        )));
    }
    check_shapes(data, centroids, metric)?;
    check_eta(centroids, eta)?;
    let (n, c) = (data.n(), centroids.c());
    let exponent = 1.0 / (q - 1.0);
    let mut values = vec![0.0; c * n];
    for (j, (theta, e)) in centroids.iter().zip(eta.as_slice()).enumerate() {
        for (i, x) in data.points().enumerate() {
            let ratio = metric.sq_distance(x, theta) / e;
            values[j * n + i] = 1.0 / (1.0 + ratio.powf(exponent));
        }
    }
    Ok(MembershipMatrix::from_parts(
        c,
        n,
        values,
        MembershipKind::Possibilistic,
    ))
}

/// `η_j = K · Σ_i u_ij^q d²(x_i, θ_j) / Σ_i u_ij^q` from a fuzzy partition.
pub fn estimate_eta(
    data: &Dataset,
    fcm_result: &ClusteringResult,
    q: f64,
    k: f64,
    metric: &Metric,
) -> Result<EtaVector> {
    estimate_eta_from(
        data,
        &fcm_result.centroids,
        &fcm_result.memberships,
        q,
        k,
        metric,
    )
}

/// The same weighted-scatter estimate for any membership or typicality matrix.
pub fn estimate_eta_from(
    data: &Dataset,
    centroids: &CentroidSet,
    u: &MembershipMatrix,
    q: f64,
    k: f64,
    metric: &Metric,
) -> Result<EtaVector> {
    if !(k.is_finite() && k > 0.0) {
        return Err(Error::InvalidConfig(format!("K must be positive, got {k}")));
    }
    check_shapes(data, centroids, metric)?;
    check_memberships(data, centroids, u)?;
    let mut eta = Vec::with_capacity(centroids.c());
    for (j, theta) in centroids.iter().enumerate() {
        let mut num = 0.0;
        let mut den = 0.0;
        for (x, &uij) in data.points().zip(u.cluster(j)) {
            if uij <= 0.0 {
                continue;
            }
            let w = uij.powf(q);
            num += w * metric.sq_distance(x, theta);
            den += w;
        }
        let e = if den > 0.0 { k * num / den } else { 0.0 };
        if !(e.is_finite() && e > 0.0) {
            return Err(Error::DegenerateCluster { cluster: j });
        }
        eta.push(e);
    }
    EtaVector::new(eta)
}

/// Index of the largest typicality per point; ties go to the lower index.
pub fn harden_by_max_typicality(u: &MembershipMatrix) -> Vec<usize> {
    (0..u.n())
        .map(|i| {
            let mut best = 0;
            let mut best_u = f64::NEG_INFINITY;
            for (j, x) in u.column(i).enumerate() {
                if x > best_u {
                    best = j;
                    best_u = x;
                }
            }
            best
        })
        .collect()
}

/// FCM warm start, then PCM rounds with `η` re-estimated between them until it settles.
pub fn pcm_fit(data: &Dataset, config: &RunConfig, k: f64) -> Result<ClusteringResult> {
    config.validate(data.n())?;
    let metric = Metric::for_data(config.distance_kind, data)?;
    pcm_fit_with_metric(data, config, k, &metric)
}

pub fn pcm_fit_with_metric(
    data: &Dataset,
    config: &RunConfig,
    k: f64,
    metric: &Metric,
) -> Result<ClusteringResult> {
    let warm = fcm::fcm_fit_with_metric(data, config, metric)?;
    let eta = estimate_eta(data, &warm, config.q, k, metric)?;
    let mut fit = pcm_fit_from(data, config, metric, warm.centroids, eta)?;
    for _ in 0..ETA_ROUNDS {
        let prev = fit.eta.clone().unwrap_or_default();
        // A prototype that shrank onto a single point has no scatter left to
        // re-estimate from; keep the last well-posed round.
        let Ok(refined) =
            estimate_eta_from(data, &fit.centroids, &fit.memberships, config.q, k, metric)
        else {
            break;
        };
        let settled = prev
            .iter()
            .zip(refined.as_slice())
            .all(|(a, b)| (a - b).abs() <= ETA_SETTLE * a);
        let iterations = fit.iterations;
        let converged = fit.converged;
        fit = pcm_fit_from(data, config, metric, fit.centroids, refined)?;
        fit.iterations += iterations;
        fit.converged &= converged;
        if settled {
            break;
        }
    }
    Ok(fit)
}

/// PCM iterations from explicit centroids and bandwidths.
pub fn pcm_fit_from(
    data: &Dataset,
    config: &RunConfig,
    metric: &Metric,
    init: CentroidSet,
    eta: EtaVector,
) -> Result<ClusteringResult> {
    config.validate(data.n())?;
    check_shapes(data, &init, metric)?;
    check_eta(&init, &eta)?;
    let q = config.q;

    let mut centroids = init;
    let mut u = update_typicalities(data, &centroids, &eta, q, metric)?;
    let mut cost_trace = vec![cost_unchecked(data, &centroids, &u, &eta, q, metric)];
    let mut iterations = 0;
    let mut converged = false;
    while iterations < config.max_iter {
        let next = update_centroids(data, &u, q)?;
        let moved = next.max_abs_displacement(&centroids);
        centroids = next;
        u = update_typicalities(data, &centroids, &eta, q, metric)?;
        cost_trace.push(cost_unchecked(data, &centroids, &u, &eta, q, metric));
        iterations += 1;
        if moved < config.tol {
            converged = true;
            break;
        }
    }
    Ok(ClusteringResult {
        labels: harden_by_max_typicality(&u),
        coincident_centroids: has_coincident_pair(&centroids, config.tol),
        centroids,
        memberships: u,
        cost_trace,
        iterations,
        converged,
        eta: Some(eta.into_vec()),
    })
}

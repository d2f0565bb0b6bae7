//! Fuzzy c-means.
//!
//! Alternates the closed-form membership update (with squared distances and
//! exponent `1/(q-1)`) and the weighted-mean centroid update. Each half-step
//! minimizes `J = Σ_i Σ_j u_ij^q d²(x_i, θ_j)` in one block, so the cost
//! recorded after every membership update never increases.

use rand::seq::index;

use crate::data::{
    CentroidSet, ClusteringResult, Dataset, MembershipKind, MembershipMatrix, RunConfig,
};
use crate::distance::Metric;
use crate::error::{Error, Result};
use crate::rng::{seeded_rng, SeededRng};

/// Squared distances below this count as "point sits on the centroid".
pub const COINCIDENCE_SQ: f64 = 1e-24;

/// Clusters whose total weight `Σ_i u_ij^q` falls below this are empty.
pub const EMPTY_WEIGHT: f64 = 1e-30;

pub(crate) fn check_shapes(data: &Dataset, centroids: &CentroidSet, metric: &Metric) -> Result<()> {
    if centroids.d() != data.d() {
        return Err(Error::DimensionMismatch {
            expected: data.d(),
            found: centroids.d(),
        });
    }
    metric.check_dim(data.d())
}

pub(crate) fn check_memberships(
    data: &Dataset,
    centroids: &CentroidSet,
    u: &MembershipMatrix,
) -> Result<()> {
    if u.n() != data.n() {
        return Err(Error::DimensionMismatch {
            expected: data.n(),
            found: u.n(),
        });
    }
    if u.c() != centroids.c() {
        return Err(Error::DimensionMismatch {
            expected: centroids.c(),
            found: u.c(),
        });
    }
    Ok(())
}

fn check_q(q: f64) -> Result<()> {
    if q.is_finite() && q > 1.0 {
        Ok(())
    } else {
        Err(Error::InvalidConfig(format!(
            "fuzzifier must be > 1, got {q}"
        )))
    }
}

/// `Σ_i Σ_j u_ij^q d²(x_i, θ_j)`.
pub fn fcm_cost(
    data: &Dataset,
    centroids: &CentroidSet,
    memberships: &MembershipMatrix,
    q: f64,
    metric: &Metric,
) -> Result<f64> {
    check_shapes(data, centroids, metric)?;
    check_memberships(data, centroids, memberships)?;
    Ok(weighted_scatter(data, centroids, memberships, q, metric))
}

pub(crate) fn weighted_scatter(
    data: &Dataset,
    centroids: &CentroidSet,
    u: &MembershipMatrix,
    q: f64,
    metric: &Metric,
) -> f64 {
    let mut total = 0.0;
    for (j, theta) in centroids.iter().enumerate() {
        for (i, x) in data.points().enumerate() {
            let w = u.get(j, i);
            if w > 0.0 {
                total += w.powf(q) * metric.sq_distance(x, theta);
            }
        }
    }
    total
}

/// Membership of every point in every cluster.
///
/// A point lying on `m` centroids (squared distance below [`COINCIDENCE_SQ`])
/// gets `1/m` on each of them and zero elsewhere.
pub fn update_memberships(
    data: &Dataset,
    centroids: &CentroidSet,
    q: f64,
    metric: &Metric,
) -> Result<MembershipMatrix> {
    check_q(q)?;
    check_shapes(data, centroids, metric)?;
    let (n, c) = (data.n(), centroids.c());
    let exponent = 1.0 / (q - 1.0);
    let mut values = vec![0.0; c * n];
    let mut sq = vec![0.0; c];
    let mut weights = vec![0.0; c];
    for (i, x) in data.points().enumerate() {
        for (s, theta) in sq.iter_mut().zip(centroids.iter()) {
            *s = metric.sq_distance(x, theta);
        }
        let hits = sq.iter().filter(|&&s| s < COINCIDENCE_SQ).count();
        if hits > 0 {
            let share = 1.0 / hits as f64;
            for (j, &s) in sq.iter().enumerate() {
                values[j * n + i] = if s < COINCIDENCE_SQ { share } else { 0.0 };
            }
            continue;
        }
        // u_ij = 1 / Σ_k (d²_j / d²_k)^p, evaluated relative to the nearest
        // centroid so no power overflows.
        let nearest = sq.iter().copied().fold(f64::INFINITY, f64::min);
        for (w, &s) in weights.iter_mut().zip(&sq) {
            *w = (nearest / s).powf(exponent);
        }
        let total: f64 = weights.iter().sum();
        for (j, w) in weights.iter().enumerate() {
            values[j * n + i] = w / total;
        }
    }
    Ok(MembershipMatrix::from_parts(
        c,
        n,
        values,
        MembershipKind::Fuzzy,
    ))
}

/// `θ_j = Σ_i u_ij^q x_i / Σ_i u_ij^q`.
pub fn update_centroids(
    data: &Dataset,
    memberships: &MembershipMatrix,
    q: f64,
) -> Result<CentroidSet> {
    check_q(q)?;
    if memberships.n() != data.n() {
        return Err(Error::DimensionMismatch {
            expected: data.n(),
            found: memberships.n(),
        });
    }
    let (c, d) = (memberships.c(), data.d());
    let mut values = vec![0.0; c * d];
    for j in 0..c {
        let theta = &mut values[j * d..(j + 1) * d];
        let mut weight_sum = 0.0;
        for (x, &u) in data.points().zip(memberships.cluster(j)) {
            if u <= 0.0 {
                continue;
            }
            let w = u.powf(q);
            weight_sum += w;
            for (t, xv) in theta.iter_mut().zip(x) {
                *t += w * xv;
            }
        }
        if weight_sum < EMPTY_WEIGHT {
            return Err(Error::EmptyCluster { cluster: j });
        }
        theta.iter_mut().for_each(|t| *t /= weight_sum);
    }
    CentroidSet::from_flat(c, d, values)
}

/// Index of the nearest centroid for every point; ties go to the lower index.
pub fn harden_by_nearest_centroid(
    data: &Dataset,
    centroids: &CentroidSet,
    metric: &Metric,
) -> Result<Vec<usize>> {
    check_shapes(data, centroids, metric)?;
    Ok(data
        .points()
        .map(|x| {
            let mut best = 0;
            let mut best_sq = f64::INFINITY;
            for (j, theta) in centroids.iter().enumerate() {
                let s = metric.sq_distance(x, theta);
                if s < best_sq {
                    best = j;
                    best_sq = s;
                }
            }
            best
        })
        .collect())
}

/// `c` distinct data points drawn without replacement.
pub fn initial_centroids(data: &Dataset, c: usize, rng: &mut SeededRng) -> Result<CentroidSet> {
    if c == 0 || c > data.n() {
        return Err(Error::InvalidConfig(format!(
            "cannot draw {c} initial centroids from {} points",
            data.n()
        )));
    }
    let picks = index::sample(rng, data.n(), c);
    let mut values = Vec::with_capacity(c * data.d());
    for i in picks.iter() {
        values.extend_from_slice(data.point(i));
    }
    CentroidSet::from_flat(c, data.d(), values)
}

/// Iteration state of an FCM run.
#[derive(Debug, Clone)]
pub struct FcmState {
    pub centroids: CentroidSet,
    pub memberships: MembershipMatrix,
    pub iteration: usize,
    pub last_cost: f64,
}

impl FcmState {
    /// Computes the memberships and cost induced by `centroids`.
    pub fn initialize(
        data: &Dataset,
        centroids: CentroidSet,
        q: f64,
        metric: &Metric,
    ) -> Result<Self> {
        let memberships = update_memberships(data, &centroids, q, metric)?;
        let last_cost = weighted_scatter(data, &centroids, &memberships, q, metric);
        Ok(Self {
            centroids,
            memberships,
            iteration: 0,
            last_cost,
        })
    }

    /// One centroid update followed by one membership update. Returns the
    /// max-abs centroid displacement.
    pub fn step(&mut self, data: &Dataset, q: f64, metric: &Metric) -> Result<f64> {
        let centroids = update_centroids(data, &self.memberships, q)?;
        let moved = centroids.max_abs_displacement(&self.centroids);
        self.memberships = update_memberships(data, &centroids, q, metric)?;
        self.last_cost = weighted_scatter(data, &centroids, &self.memberships, q, metric);
        self.centroids = centroids;
        self.iteration += 1;
        Ok(moved)
    }
}

/// Runs FCM from `c` seeded data points.
pub fn fcm_fit(data: &Dataset, config: &RunConfig) -> Result<ClusteringResult> {
    config.validate(data.n())?;
    let metric = Metric::for_data(config.distance_kind, data)?;
    fcm_fit_with_metric(data, config, &metric)
}

/// As [`fcm_fit`], with a caller-supplied metric.
pub fn fcm_fit_with_metric(
    data: &Dataset,
    config: &RunConfig,
    metric: &Metric,
) -> Result<ClusteringResult> {
    config.validate(data.n())?;
    let init = initial_centroids(data, config.c, &mut seeded_rng(config.seed))?;
    fcm_fit_from(data, config, metric, init)
}

/// Runs FCM from explicit initial centroids; `config.seed` is ignored.
pub fn fcm_fit_from(
    data: &Dataset,
    config: &RunConfig,
    metric: &Metric,
    init: CentroidSet,
) -> Result<ClusteringResult> {
    config.validate(data.n())?;
    if init.c() != config.c {
        return Err(Error::DimensionMismatch {
            expected: config.c,
            found: init.c(),
        });
    }
    check_shapes(data, &init, metric)?;

    let mut state = FcmState::initialize(data, init, config.q, metric)?;
    let mut cost_trace = vec![state.last_cost];
    let mut converged = false;
    while state.iteration < config.max_iter {
        let moved = state.step(data, config.q, metric)?;
        cost_trace.push(state.last_cost);
        if moved < config.tol {
            converged = true;
            break;
        }
    }
    let labels = harden_by_nearest_centroid(data, &state.centroids, metric)?;
    let coincident_centroids = has_coincident_pair(&state.centroids, config.tol);
    Ok(ClusteringResult {
        centroids: state.centroids,
        memberships: state.memberships,
        labels,
        cost_trace,
        iterations: state.iteration,
        converged,
        eta: None,
        coincident_centroids,
    })
}

/// True when some pair of centroids is closer (Euclidean) than `tol`.
pub(crate) fn has_coincident_pair(centroids: &CentroidSet, tol: f64) -> bool {
    let c = centroids.c();
    (0..c).any(|a| {
        ((a + 1)..c).any(|b| {
            crate::distance::sq_euclidean_unchecked(centroids.centroid(a), centroids.centroid(b))
                .sqrt()
                < tol
        })
    })
}

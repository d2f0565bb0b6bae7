//! Cluster validity indices and sweeps over the cluster count.
//!
//! * Partition coefficient: `(1/n) Σ u_ij²` over all entries. On a
//!   possibilistic matrix it is not bounded by one and is reported as
//!   unnormalized.
//! * Dunn index: smallest single-linkage distance between clusters divided
//!   by the largest cluster diameter.
//! * Davies-Bouldin: mean over clusters of the worst `(S_i + S_j) / ‖v_i − v_j‖`,
//!   with `S_i` the order-`q` mean distance of the members to the centroid.

use rayon::prelude::*;
use serde::Serialize;

use crate::data::{
    CentroidSet, ClusteringResult, Dataset, MembershipKind, MembershipMatrix, RunConfig,
};
use crate::distance::Metric;
use crate::error::{Error, Result};
use crate::{fcm, pcm, rng};

/// Centroid separations below this make the Davies-Bouldin ratio undefined.
pub const COINCIDENT_CENTROIDS: f64 = 1e-12;

pub const DEFAULT_SCATTER_Q: f64 = 2.0;

pub mod flags {
    pub const PC_UNNORMALIZED: &str = "pc_unnormalized";
    pub const DI_DEGENERATE: &str = "di_degenerate";
    pub const DI_UNDEFINED: &str = "di_undefined";
    pub const DBI_UNDEFINED: &str = "dbi_undefined";
    pub const FAILED: &str = "failed";
    pub const NOT_CONVERGED: &str = "not_converged";
    pub const COINCIDENT_CENTROIDS: &str = "coincident_centroids";
}

pub fn partition_coefficient(u: &MembershipMatrix) -> f64 {
    u.as_flat().iter().map(|x| x * x).sum::<f64>() / u.n() as f64
}

fn check_labels(data: &Dataset, labels: &[usize]) -> Result<()> {
    if labels.len() != data.n() {
        return Err(Error::DimensionMismatch {
            expected: data.n(),
            found: labels.len(),
        });
    }
    Ok(())
}

/// Dunn index of a crisp labelling. Returns `+∞` when every cluster is a
/// singleton (all diameters zero).
pub fn dunn_index(data: &Dataset, labels: &[usize], metric: &Metric) -> Result<f64> {
    check_labels(data, labels)?;
    metric.check_dim(data.d())?;
    let mut present: Vec<usize> = labels.to_vec();
    present.sort_unstable();
    present.dedup();
    if present.len() < 2 {
        return Err(Error::TooFewClusters {
            found: present.len(),
        });
    }
    let mut separation = f64::INFINITY;
    let mut diameter: f64 = 0.0;
    for i in 0..data.n() {
        for j in (i + 1)..data.n() {
            let dist = metric.distance(data.point(i), data.point(j));
            if labels[i] == labels[j] {
                diameter = diameter.max(dist);
            } else {
                separation = separation.min(dist);
            }
        }
    }
    if diameter == 0.0 {
        return Ok(f64::INFINITY);
    }
    Ok(separation / diameter)
}

/// Davies-Bouldin index of a crisp labelling against `centroids`.
pub fn davies_bouldin(
    data: &Dataset,
    labels: &[usize],
    centroids: &CentroidSet,
    scatter_q: f64,
    metric: &Metric,
) -> Result<f64> {
    check_labels(data, labels)?;
    fcm::check_shapes(data, centroids, metric)?;
    if !(scatter_q.is_finite() && scatter_q > 0.0) {
        return Err(Error::InvalidConfig(format!(
            "scatter order must be positive, got {scatter_q}"
        )));
    }
    let c = centroids.c();
    if c < 2 {
        return Err(Error::TooFewClusters { found: c });
    }
    let mut sums = vec![0.0; c];
    let mut counts = vec![0usize; c];
    for (x, &l) in data.points().zip(labels) {
        if l >= c {
            return Err(Error::InvalidInput(format!(
                "label {l} out of range for {c} clusters"
            )));
        }
        sums[l] += metric.distance(x, centroids.centroid(l)).powf(scatter_q);
        counts[l] += 1;
    }
    if let Some(j) = counts.iter().position(|&k| k == 0) {
        return Err(Error::EmptyCluster { cluster: j });
    }
    let scatter: Vec<f64> = sums
        .iter()
        .zip(&counts)
        .map(|(s, &k)| (s / k as f64).powf(1.0 / scatter_q))
        .collect();
    let mut total = 0.0;
    for a in 0..c {
        let mut worst: f64 = 0.0;
        for b in 0..c {
            if a == b {
                continue;
            }
            let sep = metric.distance(centroids.centroid(a), centroids.centroid(b));
            if sep < COINCIDENT_CENTROIDS {
                return Err(Error::CoincidentCentroids {
                    first: a.min(b),
                    second: a.max(b),
                });
            }
            worst = worst.max((scatter[a] + scatter[b]) / sep);
        }
        total += worst;
    }
    Ok(total / c as f64)
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Algorithm {
    Fcm,
    /// PCM with bandwidth scale `k`.
    Pcm {
        k: f64,
    },
}

impl Algorithm {
    pub fn name(&self) -> &'static str {
        match self {
            Algorithm::Fcm => "fcm",
            Algorithm::Pcm { .. } => "pcm",
        }
    }

    pub fn fit(
        &self,
        data: &Dataset,
        config: &RunConfig,
        metric: &Metric,
    ) -> Result<ClusteringResult> {
        match *self {
            Algorithm::Fcm => fcm::fcm_fit_with_metric(data, config, metric),
            Algorithm::Pcm { k } => pcm::pcm_fit_with_metric(data, config, k, metric),
        }
    }
}

/// Indices for one cluster count. Undefined values are `None` and explained
/// by an entry in `flags`.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ValidityRow {
    pub c: usize,
    pub algorithm: String,
    pub seed: u64,
    pub pc: Option<f64>,
    pub di: Option<f64>,
    pub dbi: Option<f64>,
    pub flags: Vec<String>,
}

impl ValidityRow {
    fn failed(c: usize, algorithm: &Algorithm, seed: u64, err: &Error) -> Self {
        Self {
            c,
            algorithm: algorithm.name().into(),
            seed,
            pc: None,
            di: None,
            dbi: None,
            flags: vec![format!("{}: {err}", flags::FAILED)],
        }
    }

    pub fn is_failed(&self) -> bool {
        self.flags.iter().any(|f| f.starts_with(flags::FAILED))
    }

    pub fn has_flag(&self, flag: &str) -> bool {
        self.flags
            .iter()
            .any(|f| f == flag || f.starts_with(&format!("{flag}:")))
    }
}

/// Scores a fitted partition: PC on its memberships, DI and DBI on its
/// crisp labels and centroids.
pub fn evaluate(
    data: &Dataset,
    result: &ClusteringResult,
    algorithm: &Algorithm,
    seed: u64,
    metric: &Metric,
    scatter_q: f64,
) -> ValidityRow {
    let mut row_flags = Vec::new();
    let pc = partition_coefficient(&result.memberships);
    if result.memberships.kind() == MembershipKind::Possibilistic {
        row_flags.push(flags::PC_UNNORMALIZED.to_string());
    }
    let di = match dunn_index(data, &result.labels, metric) {
        Ok(v) if v.is_infinite() => {
            row_flags.push(flags::DI_DEGENERATE.to_string());
            None
        }
        Ok(v) => Some(v),
        Err(e) => {
            row_flags.push(format!("{}: {e}", flags::DI_UNDEFINED));
            None
        }
    };
    let dbi = match davies_bouldin(data, &result.labels, &result.centroids, scatter_q, metric) {
        Ok(v) => Some(v),
        Err(e) => {
            row_flags.push(format!("{}: {e}", flags::DBI_UNDEFINED));
            None
        }
    };
    if result.coincident_centroids {
        row_flags.push(flags::COINCIDENT_CENTROIDS.to_string());
    }
    if !result.converged {
        row_flags.push(flags::NOT_CONVERGED.to_string());
    }
    ValidityRow {
        c: result.centroids.c(),
        algorithm: algorithm.name().into(),
        seed,
        pc: Some(pc),
        di,
        dbi,
        flags: row_flags,
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ValidityReport {
    pub algorithm: String,
    pub base_seed: u64,
    pub rows: Vec<ValidityRow>,
}

fn best_by(
    rows: &[ValidityRow],
    value: impl Fn(&ValidityRow) -> Option<f64>,
    larger: bool,
) -> Option<usize> {
    let mut best: Option<(usize, f64)> = None;
    for row in rows {
        let Some(v) = value(row) else { continue };
        let better = match best {
            None => true,
            Some((_, b)) => {
                if larger {
                    v > b
                } else {
                    v < b
                }
            }
        };
        if better {
            best = Some((row.c, v));
        }
    }
    best.map(|(c, _)| c)
}

impl ValidityReport {
    /// Cluster count with the largest partition coefficient.
    pub fn best_pc(&self) -> Option<usize> {
        best_by(&self.rows, |r| r.pc, true)
    }

    /// Cluster count with the largest finite Dunn index.
    pub fn best_di(&self) -> Option<usize> {
        best_by(&self.rows, |r| r.di, true)
    }

    /// Cluster count with the smallest Davies-Bouldin index.
    pub fn best_dbi(&self) -> Option<usize> {
        best_by(&self.rows, |r| r.dbi, false)
    }

    pub fn row(&self, c: usize) -> Option<&ValidityRow> {
        self.rows.iter().find(|r| r.c == c)
    }

    /// `c,pc,di,dbi,flags` table; undefined values are empty fields and
    /// flags are `;`-separated.
    pub fn to_csv(&self) -> String {
        fn cell(v: Option<f64>) -> String {
            v.map(|x| x.to_string()).unwrap_or_default()
        }
        let mut out = String::from("c,pc,di,dbi,flags\n");
        for r in &self.rows {
            let flags = r.flags.join(";").replace([',', '"', '\n'], " ");
            out.push_str(&format!(
                "{},{},{},{},{}\n",
                r.c,
                cell(r.pc),
                cell(r.di),
                cell(r.dbi),
                flags
            ));
        }
        out
    }
}

/// One sweep entry: the cluster count, its derived seed, and the fit outcome.
pub type SweepFit = (usize, u64, Result<ClusteringResult>);

/// Fits every `c` in `c_min..=c_max` and scores each partition. Each row
/// uses a seed derived from `(template.seed, c)`; a failing fit marks its
/// row as failed without aborting the sweep.
pub fn sweep_c(
    data: &Dataset,
    algorithm: Algorithm,
    c_min: usize,
    c_max: usize,
    template: &RunConfig,
) -> Result<ValidityReport> {
    Ok(sweep_c_detailed(data, algorithm, c_min, c_max, template)?.0)
}

/// As [`sweep_c`], also returning the individual fits.
pub fn sweep_c_detailed(
    data: &Dataset,
    algorithm: Algorithm,
    c_min: usize,
    c_max: usize,
    template: &RunConfig,
) -> Result<(ValidityReport, Vec<SweepFit>)> {
    if c_min < 2 || c_min > c_max || c_max > data.n() {
        return Err(Error::InvalidConfig(format!(
            "cluster range {c_min}..={c_max} must lie within 2..={}",
            data.n()
        )));
    }
    let metric = Metric::for_data(template.distance_kind, data)?;
    let fits: Vec<SweepFit> = (c_min..=c_max)
        .into_par_iter()
        .map(|c| {
            let seed = rng::derive_seed(template.seed, c as u64);
            let config = RunConfig {
                c,
                seed,
                ..template.clone()
            };
            (c, seed, algorithm.fit(data, &config, &metric))
        })
        .collect();
    let mut rows: Vec<ValidityRow> = fits
        .iter()
        .map(|(c, seed, fit)| match fit {
            Ok(res) => evaluate(data, res, &algorithm, *seed, &metric, DEFAULT_SCATTER_Q),
            Err(e) => ValidityRow::failed(*c, &algorithm, *seed, e),
        })
        .collect();
    rows.sort_by_key(|r| r.c);
    let report = ValidityReport {
        algorithm: algorithm.name().into(),
        base_seed: template.seed,
        rows,
    };
    Ok((report, fits))
}

//! Shared value types and CSV ingestion.

use std::fs::File;
use std::io::{BufWriter, Write};
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Column sums of a fuzzy membership matrix must equal 1 within this bound.
pub const COLUMN_SUM_TOLERANCE: f64 = 1e-9;

/// `n × d` matrix of observations, one point per row.
#[derive(Debug, Clone, PartialEq)]
pub struct Dataset {
    n: usize,
    d: usize,
    values: Vec<f64>,
}

impl Dataset {
    /// Builds a dataset from row-major values.
    pub fn from_flat(n: usize, d: usize, values: Vec<f64>) -> Result<Self> {
        if n == 0 || d == 0 {
            return Err(Error::InvalidInput(format!(
                "dataset must have at least one point and one feature, got {n}x{d}"
            )));
        }
        if values.len() != n * d {
            return Err(Error::DimensionMismatch {
                expected: n * d,
                found: values.len(),
            });
        }
        if let Some(pos) = values.iter().position(|v| !v.is_finite()) {
            return Err(Error::InvalidInput(format!(
                "non-finite coordinate at point {}, feature {}",
                pos / d,
                pos % d
            )));
        }
        Ok(Self { n, d, values })
    }

    pub fn from_rows<R: AsRef<[f64]>>(rows: &[R]) -> Result<Self> {
        let d = rows.first().map_or(0, |r| r.as_ref().len());
        let mut values = Vec::with_capacity(rows.len() * d);
        for row in rows {
            let row = row.as_ref();
            if row.len() != d {
                return Err(Error::DimensionMismatch {
                    expected: d,
                    found: row.len(),
                });
            }
            values.extend_from_slice(row);
        }
        Self::from_flat(rows.len(), d, values)
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn d(&self) -> usize {
        self.d
    }

    pub fn point(&self, i: usize) -> &[f64] {
        &self.values[i * self.d..(i + 1) * self.d]
    }

    pub fn points(&self) -> impl ExactSizeIterator<Item = &[f64]> + '_ {
        self.values.chunks_exact(self.d)
    }

    pub fn as_flat(&self) -> &[f64] {
        &self.values
    }

    /// Copy of the dataset with `point` appended.
    pub fn with_point(&self, point: &[f64]) -> Result<Self> {
        if point.len() != self.d {
            return Err(Error::DimensionMismatch {
                expected: self.d,
                found: point.len(),
            });
        }
        let mut values = self.values.clone();
        values.extend_from_slice(point);
        Self::from_flat(self.n + 1, self.d, values)
    }

    /// Rows reordered so that row `k` of the result is row `order[k]` of `self`.
    pub fn select(&self, order: &[usize]) -> Result<Self> {
        let mut values = Vec::with_capacity(order.len() * self.d);
        for &i in order {
            if i >= self.n {
                return Err(Error::InvalidInput(format!("row index {i} out of range")));
            }
            values.extend_from_slice(self.point(i));
        }
        Self::from_flat(order.len(), self.d, values)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum MembershipKind {
    /// FCM memberships; every column sums to one.
    Fuzzy,
    /// PCM typicalities; columns are unconstrained.
    Possibilistic,
}

/// `c × n` matrix of memberships, stored cluster-major: entry `(j, i)` is
/// the affinity of point `i` for cluster `j`.
#[derive(Debug, Clone, PartialEq)]
pub struct MembershipMatrix {
    c: usize,
    n: usize,
    values: Vec<f64>,
    kind: MembershipKind,
}

impl MembershipMatrix {
    /// Validating constructor. `values` is cluster-major (`values[j * n + i]`).
    pub fn new(c: usize, n: usize, values: Vec<f64>, kind: MembershipKind) -> Result<Self> {
        if c == 0 || n == 0 {
            return Err(Error::InvalidInput(format!(
                "membership matrix must be non-empty, got {c}x{n}"
            )));
        }
        if values.len() != c * n {
            return Err(Error::DimensionMismatch {
                expected: c * n,
                found: values.len(),
            });
        }
        if let Some(v) = values
            .iter()
            .find(|v| !(v.is_finite() && (0.0..=1.0).contains(*v)))
        {
            return Err(Error::InvalidInput(format!(
                "membership {v} outside [0, 1]"
            )));
        }
        let m = Self::from_parts(c, n, values, kind);
        for i in 0..n {
            match kind {
                MembershipKind::Fuzzy => {
                    let sum: f64 = m.column(i).sum();
                    if (sum - 1.0).abs() > COLUMN_SUM_TOLERANCE {
                        return Err(Error::InvalidInput(format!(
                            "fuzzy column {i} sums to {sum}, expected 1"
                        )));
                    }
                }
                MembershipKind::Possibilistic => {
                    if !m.column(i).any(|u| u > 0.0) {
                        return Err(Error::InvalidInput(format!(
                            "typicality column {i} is identically zero"
                        )));
                    }
                }
            }
        }
        Ok(m)
    }

    /// Builds a matrix from per-point columns (`columns[i][j]`).
    pub fn from_columns<R: AsRef<[f64]>>(columns: &[R], kind: MembershipKind) -> Result<Self> {
        let n = columns.len();
        let c = columns.first().map_or(0, |col| col.as_ref().len());
        let mut values = vec![0.0; c * n];
        for (i, col) in columns.iter().enumerate() {
            let col = col.as_ref();
            if col.len() != c {
                return Err(Error::DimensionMismatch {
                    expected: c,
                    found: col.len(),
                });
            }
            for (j, &u) in col.iter().enumerate() {
                values[j * n + i] = u;
            }
        }
        Self::new(c, n, values, kind)
    }

    pub(crate) fn from_parts(c: usize, n: usize, values: Vec<f64>, kind: MembershipKind) -> Self {
        debug_assert_eq!(values.len(), c * n);
        Self { c, n, values, kind }
    }

    pub fn c(&self) -> usize {
        self.c
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn kind(&self) -> MembershipKind {
        self.kind
    }

    pub fn get(&self, cluster: usize, point: usize) -> f64 {
        self.values[cluster * self.n + point]
    }

    /// Memberships of every point in `cluster`.
    pub fn cluster(&self, cluster: usize) -> &[f64] {
        &self.values[cluster * self.n..(cluster + 1) * self.n]
    }

    /// Memberships of `point` across all clusters.
    pub fn column(&self, point: usize) -> impl Iterator<Item = f64> + '_ {
        (0..self.c).map(move |j| self.get(j, point))
    }

    pub fn as_flat(&self) -> &[f64] {
        &self.values
    }
}

/// `c × d` matrix of cluster representatives.
#[derive(Debug, Clone, PartialEq)]
pub struct CentroidSet {
    c: usize,
    d: usize,
    values: Vec<f64>,
}

impl CentroidSet {
    pub fn from_flat(c: usize, d: usize, values: Vec<f64>) -> Result<Self> {
        if c == 0 || d == 0 {
            return Err(Error::InvalidInput(format!(
                "centroid set must be non-empty, got {c}x{d}"
            )));
        }
        if values.len() != c * d {
            return Err(Error::DimensionMismatch {
                expected: c * d,
                found: values.len(),
            });
        }
        if values.iter().any(|v| !v.is_finite()) {
            return Err(Error::InvalidInput("non-finite centroid coordinate".into()));
        }
        Ok(Self { c, d, values })
    }

    pub fn from_rows<R: AsRef<[f64]>>(rows: &[R]) -> Result<Self> {
        let d = rows.first().map_or(0, |r| r.as_ref().len());
        let mut values = Vec::with_capacity(rows.len() * d);
        for row in rows {
            let row = row.as_ref();
            if row.len() != d {
                return Err(Error::DimensionMismatch {
                    expected: d,
                    found: row.len(),
                });
            }
            values.extend_from_slice(row);
        }
        Self::from_flat(rows.len(), d, values)
    }

    pub fn c(&self) -> usize {
        self.c
    }

    pub fn d(&self) -> usize {
        self.d
    }

    pub fn centroid(&self, j: usize) -> &[f64] {
        &self.values[j * self.d..(j + 1) * self.d]
    }

    pub fn iter(&self) -> impl ExactSizeIterator<Item = &[f64]> + '_ {
        self.values.chunks_exact(self.d)
    }

    pub fn as_flat(&self) -> &[f64] {
        &self.values
    }

    /// Largest absolute coordinate change between two centroid sets of equal shape.
    pub fn max_abs_displacement(&self, other: &CentroidSet) -> f64 {
        self.values
            .iter()
            .zip(&other.values)
            .map(|(a, b)| (a - b).abs())
            .fold(0.0, f64::max)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum DistanceKind {
    #[default]
    Euclidean,
    Mahalanobis,
}

impl std::str::FromStr for DistanceKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "euclidean" => Ok(DistanceKind::Euclidean),
            "mahalanobis" => Ok(DistanceKind::Mahalanobis),
            other => Err(Error::InvalidConfig(format!(
                "unknown metric {other:?} (expected euclidean or mahalanobis)"
            ))),
        }
    }
}

/// Parameters shared by FCM and PCM runs.
#[derive(Debug, Clone, PartialEq)]
pub struct RunConfig {
    pub c: usize,
    /// Fuzzifier, strictly greater than one.
    pub q: f64,
    pub max_iter: usize,
    /// Convergence threshold on the max-abs centroid displacement.
    pub tol: f64,
    pub seed: u64,
    pub distance_kind: DistanceKind,
}

impl RunConfig {
    pub const DEFAULT_Q: f64 = 2.0;
    pub const DEFAULT_MAX_ITER: usize = 300;
    pub const DEFAULT_TOL: f64 = 1e-6;

    pub fn new(c: usize) -> Self {
        Self {
            c,
            q: Self::DEFAULT_Q,
            max_iter: Self::DEFAULT_MAX_ITER,
            tol: Self::DEFAULT_TOL,
            seed: 0,
            distance_kind: DistanceKind::Euclidean,
        }
    }

    pub fn with_seed(mut self, seed: u64) -> Self {
        self.seed = seed;
        self
    }

    pub fn with_q(mut self, q: f64) -> Self {
        self.q = q;
        self
    }

    pub fn with_tol(mut self, tol: f64) -> Self {
        self.tol = tol;
        self
    }

    pub fn with_max_iter(mut self, max_iter: usize) -> Self {
        self.max_iter = max_iter;
        self
    }

    pub fn with_distance(mut self, kind: DistanceKind) -> Self {
        self.distance_kind = kind;
        self
    }

    /// Checks the parameters against a dataset of `n` points.
    pub fn validate(&self, n: usize) -> Result<()> {
        if self.c < 2 {
            return Err(Error::InvalidConfig(format!(
                "cluster count must be at least 2, got {}",
                self.c
            )));
        }
        if self.c > n {
            return Err(Error::InvalidConfig(format!(
                "cluster count {} exceeds the number of points {n}",
                self.c
            )));
        }
        if !(self.q.is_finite() && self.q > 1.0) {
            return Err(Error::InvalidConfig(format!(
                "fuzzifier must be finite and > 1, got {}",
                self.q
            )));
        }
        if self.max_iter == 0 {
            return Err(Error::InvalidConfig("max_iter must be positive".into()));
        }
        if !(self.tol.is_finite() && self.tol > 0.0) {
            return Err(Error::InvalidConfig(format!(
                "tolerance must be positive, got {}",
                self.tol
            )));
        }
        Ok(())
    }
}

/// Outcome of an FCM or PCM run.
#[derive(Debug, Clone, PartialEq)]
pub struct ClusteringResult {
    pub centroids: CentroidSet,
    pub memberships: MembershipMatrix,
    /// Crisp assignment; may disagree with the largest membership for FCM.
    pub labels: Vec<usize>,
    /// Objective value after each membership update.
    pub cost_trace: Vec<f64>,
    pub iterations: usize,
    pub converged: bool,
    /// Per-cluster bandwidths (PCM only).
    pub eta: Option<Vec<f64>>,
    /// Set when two centroids ended closer than the convergence tolerance.
    pub coincident_centroids: bool,
}

impl ClusteringResult {
    pub fn final_cost(&self) -> f64 {
        self.cost_trace.last().copied().unwrap_or(f64::NAN)
    }
}

/// Reads a numeric CSV file into a dataset. Row and column numbers in
/// errors are 1-based file positions.
pub fn load_csv(path: impl AsRef<Path>, has_header: bool) -> Result<Dataset> {
    let path = path.as_ref();
    let file = File::open(path).map_err(|e| Error::io(path, e))?;
    let mut reader = csv::ReaderBuilder::new()
        .has_headers(has_header)
        .flexible(true)
        .trim(csv::Trim::All)
        .from_reader(file);

    let mut values = Vec::new();
    let mut width = None;
    let mut n = 0;
    let mut record = csv::StringRecord::new();
    loop {
        let row = reader.position().line() as usize;
        match reader.read_record(&mut record) {
            Ok(false) => break,
            Ok(true) => {}
            Err(e) => {
                let message = e.to_string();
                return Err(match e.into_kind() {
                    csv::ErrorKind::Io(io) => Error::io(path, io),
                    _ => Error::Csv { row, message },
                });
            }
        }
        let row = record.position().map_or(row, |p| p.line() as usize);
        let expected = *width.get_or_insert(record.len());
        if record.len() != expected {
            return Err(Error::RaggedRow {
                row,
                expected,
                found: record.len(),
            });
        }
        for (col, field) in record.iter().enumerate() {
            match field.parse::<f64>() {
                Ok(v) if v.is_finite() => values.push(v),
                _ => {
                    return Err(Error::InvalidField {
                        row,
                        column: col + 1,
                        value: field.to_string(),
                    })
                }
            }
        }
        n += 1;
    }
    match width {
        Some(d) => Dataset::from_flat(n, d, values),
        None => Err(Error::InvalidInput(format!(
            "{} contains no data rows",
            path.display()
        ))),
    }
}

/// Writes the dataset as header-less CSV using shortest round-trip formatting.
pub fn write_csv(data: &Dataset, path: impl AsRef<Path>) -> Result<()> {
    let path = path.as_ref();
    let write = || -> std::io::Result<()> {
        let mut out = BufWriter::new(File::create(path)?);
        for point in data.points() {
            let line: Vec<String> = point.iter().map(|v| v.to_string()).collect();
            writeln!(out, "{}", line.join(","))?;
        }
        out.flush()
    };
    write().map_err(|e| Error::io(path, e))
}

/// Writes one label per line under a `label` header.
pub fn write_labels_csv(labels: &[i64], path: impl AsRef<Path>) -> Result<()> {
    let path = path.as_ref();
    let write = || -> std::io::Result<()> {
        let mut out = BufWriter::new(File::create(path)?);
        writeln!(out, "label")?;
        for l in labels {
            writeln!(out, "{l}")?;
        }
        out.flush()
    };
    write().map_err(|e| Error::io(path, e))
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;
    use std::fs;

    fn csv_file(contents: &str) -> tempfile::NamedTempFile {
        let f = tempfile::NamedTempFile::new().unwrap();
        fs::write(f.path(), contents).unwrap();
        f
    }

    #[test]
    fn load_plain_rows() {
        let f = csv_file("0,0\n1,1\n");
        let data = load_csv(f.path(), false).unwrap();
        assert_eq!((data.n(), data.d()), (2, 2));
        assert_eq!(data.point(0), &[0.0, 0.0]);
        assert_eq!(data.point(1), &[1.0, 1.0]);
    }

    #[test]
    fn header_is_skipped() {
        let f = csv_file("x,y\n0,0\n");
        let data = load_csv(f.path(), true).unwrap();
        assert_eq!((data.n(), data.d()), (1, 2));
    }

    #[test]
    fn crlf_line_endings() {
        let f = csv_file("1.5,-2\r\n3e2,4\r\n");
        let data = load_csv(f.path(), false).unwrap();
        assert_eq!(data.as_flat(), &[1.5, -2.0, 300.0, 4.0]);
    }

    #[test]
    fn ragged_row_reports_row_two() {
        let f = csv_file("0,0\n1\n");
        match load_csv(f.path(), false) {
            Err(Error::RaggedRow {
                row,
                expected,
                found,
            }) => assert_eq!((row, expected, found), (2, 2, 1)),
            other => panic!("expected ragged row error, got {other:?}"),
        }
    }

    #[test]
    fn bad_fields_name_row_and_column() {
        let f = csv_file("0,0\n1,abc\n");
        match load_csv(f.path(), false) {
            Err(Error::InvalidField { row, column, .. }) => assert_eq!((row, column), (2, 2)),
            other => panic!("unexpected {other:?}"),
        }
        let f = csv_file("h1,h2\n0,0\nNaN,1\n");
        match load_csv(f.path(), true) {
            Err(Error::InvalidField { row, column, .. }) => assert_eq!((row, column), (3, 1)),
            other => panic!("unexpected {other:?}"),
        }
        let f = csv_file("inf,1\n");
        assert!(matches!(
            load_csv(f.path(), false),
            Err(Error::InvalidField { .. })
        ));
    }

    #[test]
    fn missing_file_is_io_error() {
        assert!(matches!(
            load_csv("/nonexistent/softclust.csv", false),
            Err(Error::Io { .. })
        ));
    }

    #[test]
    fn empty_file_rejected() {
        let f = csv_file("");
        assert!(matches!(
            load_csv(f.path(), false),
            Err(Error::InvalidInput(_))
        ));
    }

    #[test]
    fn fuzzy_columns_must_sum_to_one() {
        let ok = MembershipMatrix::from_columns(&[[0.25, 0.75], [1.0, 0.0]], MembershipKind::Fuzzy);
        assert!(ok.is_ok());
        let off =
            MembershipMatrix::from_columns(&[[0.5, 0.5 + 2e-9], [1.0, 0.0]], MembershipKind::Fuzzy);
        assert!(off.is_err());
        let within = MembershipMatrix::from_columns(
            &[[0.5, 0.5 - 5e-10], [1.0, 0.0]],
            MembershipKind::Fuzzy,
        );
        assert!(within.is_ok());
    }

    #[test]
    fn possibilistic_columns_unconstrained_but_nonzero() {
        let m = MembershipMatrix::from_columns(
            &[[0.9, 0.8], [0.1, 0.0]],
            MembershipKind::Possibilistic,
        )
        .unwrap();
        assert_eq!(m.get(0, 0), 0.9);
        assert_eq!(m.get(1, 0), 0.8);
        assert_eq!(m.cluster(0), &[0.9, 0.1]);
        assert!(
            MembershipMatrix::from_columns(&[[0.0, 0.0]], MembershipKind::Possibilistic).is_err()
        );
        assert!(
            MembershipMatrix::from_columns(&[[1.5, 0.0]], MembershipKind::Possibilistic).is_err()
        );
    }

    #[test]
    fn config_validation() {
        assert!(RunConfig::new(2).validate(4).is_ok());
        assert!(RunConfig::new(1).validate(4).is_err());
        assert!(RunConfig::new(5).validate(4).is_err());
        assert!(RunConfig::new(2).with_q(1.0).validate(4).is_err());
        assert!(RunConfig::new(2).with_tol(0.0).validate(4).is_err());
        assert!(RunConfig::new(2).with_max_iter(0).validate(4).is_err());
    }

    #[test]
    fn dataset_rejects_non_finite() {
        assert!(Dataset::from_rows(&[[0.0, f64::NAN]]).is_err());
        assert!(Dataset::from_rows::<[f64; 2]>(&[]).is_err());
    }

    proptest! {
        #[test]
        fn csv_round_trip(rows in proptest::collection::vec(
            proptest::collection::vec(-1e6f64..1e6, 3), 1..20)
        ) {
            let data = Dataset::from_rows(&rows).unwrap();
            let f = tempfile::NamedTempFile::new().unwrap();
            write_csv(&data, f.path()).unwrap();
            let back = load_csv(f.path(), false).unwrap();
            prop_assert_eq!((back.n(), back.d()), (data.n(), data.d()));
            for (a, b) in back.as_flat().iter().zip(data.as_flat()) {
                prop_assert!((a - b).abs() <= 1e-12);
            }
        }
    }
}

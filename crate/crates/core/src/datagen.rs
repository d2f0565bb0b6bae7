//! Labelled synthetic datasets built from Gaussian clusters plus optional
//! uniform noise.
//!
//! Scenarios are plain TOML. The built-in set lives in `scenarios.toml` at
//! the crate root and is compiled into the library.

use std::path::Path;

use rand::Rng;
use rand_distr::{Distribution, StandardNormal};
use serde::{Deserialize, Serialize};

use crate::data::Dataset;
use crate::error::{Error, Result};
use crate::rng::seeded_rng;

/// Truth label carried by noise points and appended outliers.
pub const NOISE_LABEL: i64 = -1;

const BUILTIN: &str = include_str!("../scenarios.toml");

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ClusterSpec {
    pub center: Vec<f64>,
    /// Per-axis standard deviation before rotation.
    pub spread: Vec<f64>,
    /// Counter-clockwise rotation in radians; only meaningful in 2-D.
    #[serde(default)]
    pub rotation: f64,
    pub count: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct NoiseBox {
    pub min: Vec<f64>,
    pub max: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Scenario {
    pub name: String,
    #[serde(rename = "cluster")]
    pub clusters: Vec<ClusterSpec>,
    #[serde(default)]
    pub noise_count: usize,
    #[serde(default)]
    pub noise_box: Option<NoiseBox>,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct ScenarioFile {
    scenario: Vec<Scenario>,
}

impl Scenario {
    pub fn dim(&self) -> usize {
        self.clusters.first().map_or(0, |c| c.center.len())
    }

    /// Number of generating clusters (noise excluded).
    pub fn true_clusters(&self) -> usize {
        self.clusters.len()
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |msg: String| Err(Error::Scenario(format!("{}: {msg}", self.name)));
        if self.clusters.is_empty() {
            return bad("no clusters".into());
        }
        let d = self.dim();
        if d == 0 {
            return bad("clusters need at least one coordinate".into());
        }
        for (k, c) in self.clusters.iter().enumerate() {
            if c.center.len() != d || c.spread.len() != d {
                return bad(format!("cluster {k} has inconsistent dimensions"));
            }
            if c.count == 0 {
                return bad(format!("cluster {k} has zero count"));
            }
            if c.spread.iter().any(|s| !(s.is_finite() && *s > 0.0)) {
                return bad(format!("cluster {k} spreads must be positive"));
            }
            if c.center.iter().any(|x| !x.is_finite()) || !c.rotation.is_finite() {
                return bad(format!("cluster {k} has non-finite parameters"));
            }
            if c.rotation != 0.0 && d != 2 {
                return bad(format!("cluster {k}: rotation requires 2-D clusters"));
            }
        }
        if self.noise_count > 0 {
            let Some(b) = &self.noise_box else {
                return bad("noise_count set without noise_box".into());
            };
            if b.min.len() != d || b.max.len() != d {
                return bad("noise box dimension mismatch".into());
            }
            if b.min
                .iter()
                .zip(&b.max)
                .any(|(lo, hi)| !(lo.is_finite() && hi.is_finite() && lo < hi))
            {
                return bad("noise box needs min < max on every axis".into());
            }
        }
        Ok(())
    }
}

pub fn parse_scenarios(text: &str) -> Result<Vec<Scenario>> {
    let file: ScenarioFile = toml::from_str(text).map_err(|e| Error::Scenario(e.to_string()))?;
    for s in &file.scenario {
        s.validate()?;
    }
    Ok(file.scenario)
}

pub fn load_scenarios(path: impl AsRef<Path>) -> Result<Vec<Scenario>> {
    let path = path.as_ref();
    let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    parse_scenarios(&text)
}

pub fn builtin_scenarios() -> Vec<Scenario> {
    parse_scenarios(BUILTIN).expect("built-in scenarios are valid")
}

/// Looks up `name` among `scenarios`; the error lists the valid names.
pub fn find_scenario(scenarios: &[Scenario], name: &str) -> Result<Scenario> {
    scenarios
        .iter()
        .find(|s| s.name == name)
        .cloned()
        .ok_or_else(|| {
            let names: Vec<&str> = scenarios.iter().map(|s| s.name.as_str()).collect();
            Error::Scenario(format!(
                "unknown scenario {name:?}; valid scenarios: {}",
                names.join(", ")
            ))
        })
}

pub fn builtin_scenario(name: &str) -> Result<Scenario> {
    find_scenario(&builtin_scenarios(), name)
}

/// Points with their generating cluster; noise is [`NOISE_LABEL`].
#[derive(Debug, Clone, PartialEq)]
pub struct LabeledDataset {
    pub data: Dataset,
    pub truth: Vec<i64>,
}

/// Samples `scenario` deterministically from `seed`. Points are emitted
/// cluster by cluster, then noise.
pub fn generate(scenario: &Scenario, seed: u64) -> Result<LabeledDataset> {
    scenario.validate()?;
    let d = scenario.dim();
    let mut rng = seeded_rng(seed);
    let mut values = Vec::new();
    let mut truth = Vec::new();
    let mut z = vec![0.0; d];
    for (label, cluster) in scenario.clusters.iter().enumerate() {
        let (sin, cos) = cluster.rotation.sin_cos();
        for _ in 0..cluster.count {
            for (zk, s) in z.iter_mut().zip(&cluster.spread) {
                let g: f64 = StandardNormal.sample(&mut rng);
                *zk = g * s;
            }
            if d == 2 {
                let (x, y) = (z[0], z[1]);
                z[0] = cos * x - sin * y;
                z[1] = sin * x + cos * y;
            }
            values.extend(z.iter().zip(&cluster.center).map(|(a, c)| a + c));
            truth.push(label as i64);
        }
    }
    if let (n, Some(b)) = (scenario.noise_count, &scenario.noise_box) {
        for _ in 0..n {
            values.extend(
                b.min
                    .iter()
                    .zip(&b.max)
                    .map(|(lo, hi)| rng.random_range(*lo..*hi)),
            );
        }
        truth.resize(truth.len() + n, NOISE_LABEL);
    }
    let data = Dataset::from_flat(truth.len(), d, values)?;
    Ok(LabeledDataset { data, truth })
}

/// Appends one point labelled as noise.
pub fn add_outlier(labeled: &LabeledDataset, position: &[f64]) -> Result<LabeledDataset> {
    let data = labeled.data.with_point(position)?;
    let mut truth = labeled.truth.clone();
    truth.push(NOISE_LABEL);
    Ok(LabeledDataset { data, truth })
}

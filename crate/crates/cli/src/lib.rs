//! Command implementations behind the `softclust` binary.
//!
//! Every command returns a [`CliError`] carrying the process exit status:
//! `1` for runtime and I/O failures, `2` for invalid arguments.

use std::fmt;
use std::fs;
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde::Serialize;
use softclust::datagen::{self, Scenario};
use softclust::distance::pairwise_matrix;
use softclust::tendency::{self, VatResult};
use softclust::validity::{self, Algorithm, ValidityReport};
use softclust::{
    load_csv, write_csv, write_labels_csv, ClusteringResult, Dataset, DissimilarityMatrix,
    DistanceKind, Error, Metric, RunConfig,
};

pub const SEED_ENV: &str = "SOFTCLUST_SEED";

#[derive(Debug)]
pub struct CliError {
    pub code: i32,
    pub message: String,
}

impl CliError {
    pub fn usage(message: impl Into<String>) -> Self {
        Self {
            code: 2,
            message: message.into(),
        }
    }

    pub fn runtime(message: impl Into<String>) -> Self {
        Self {
            code: 1,
            message: message.into(),
        }
    }
}

impl fmt::Display for CliError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.message)
    }
}

impl std::error::Error for CliError {}

impl From<Error> for CliError {
    fn from(e: Error) -> Self {
        match e {
            Error::InvalidConfig(_) | Error::Scenario(_) => CliError::usage(e.to_string()),
            _ => CliError::runtime(e.to_string()),
        }
    }
}

pub type CliResult<T = ()> = Result<T, CliError>;

#[derive(Debug, Parser)]
#[command(
    name = "softclust",
    version,
    about = "Fuzzy and possibilistic clustering toolkit"
)]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Sample a synthetic scenario into a data CSV and a truth-label CSV.
    Gen(GenArgs),
    /// Fit FCM or PCM at one cluster count and write the result as JSON.
    Fit(FitArgs),
    /// Render the VAT (or iVAT) image of a dataset.
    Vat(VatArgs),
    /// Sweep cluster counts and report PC, DI and DBI.
    Validate(ValidateArgs),
    /// Generate, assess tendency, fit every cluster count and validate.
    Pipeline(PipelineArgs),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum AlgorithmArg {
    Fcm,
    Pcm,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum MetricArg {
    Euclidean,
    Mahalanobis,
}

impl From<MetricArg> for DistanceKind {
    fn from(m: MetricArg) -> Self {
        match m {
            MetricArg::Euclidean => DistanceKind::Euclidean,
            MetricArg::Mahalanobis => DistanceKind::Mahalanobis,
        }
    }
}

#[derive(Debug, Clone, Args)]
pub struct SeedArg {
    /// Random seed; falls back to $SOFTCLUST_SEED, then 0.
    #[arg(long, env = SEED_ENV, default_value_t = 0)]
    pub seed: u64,
}

#[derive(Debug, Clone, Args)]
pub struct InputArgs {
    /// Numeric CSV, one point per row.
    #[arg(long)]
    pub data: PathBuf,
    /// Skip the first line of the CSV.
    #[arg(long)]
    pub has_header: bool,
}

#[derive(Debug, Clone, Args)]
pub struct ScenarioArgs {
    /// Scenario name.
    #[arg(long)]
    pub scenario: String,
    /// TOML file with additional scenarios; built-ins are used otherwise.
    #[arg(long)]
    pub scenario_file: Option<PathBuf>,
}

#[derive(Debug, Clone, Args)]
pub struct ModelArgs {
    #[arg(long, value_enum, default_value_t = AlgorithmArg::Fcm)]
    pub algorithm: AlgorithmArg,
    /// Fuzzifier.
    #[arg(long, default_value_t = RunConfig::DEFAULT_Q)]
    pub q: f64,
    #[arg(long, value_enum, default_value_t = MetricArg::Euclidean)]
    pub metric: MetricArg,
    /// PCM bandwidth scale.
    #[arg(long = "K", default_value_t = softclust::pcm::DEFAULT_K)]
    pub k: f64,
    #[arg(long, default_value_t = RunConfig::DEFAULT_TOL)]
    pub tol: f64,
    #[arg(long, default_value_t = RunConfig::DEFAULT_MAX_ITER)]
    pub max_iter: usize,
    #[command(flatten)]
    pub seed: SeedArg,
}

impl ModelArgs {
    fn algorithm(&self) -> CliResult<Algorithm> {
        match self.algorithm {
            AlgorithmArg::Fcm => Ok(Algorithm::Fcm),
            AlgorithmArg::Pcm if self.k.is_finite() && self.k > 0.0 => {
                Ok(Algorithm::Pcm { k: self.k })
            }
            AlgorithmArg::Pcm => Err(CliError::usage(format!(
                "--K must be positive, got {}",
                self.k
            ))),
        }
    }

    fn config(&self, c: usize) -> RunConfig {
        RunConfig::new(c)
            .with_q(self.q)
            .with_tol(self.tol)
            .with_max_iter(self.max_iter)
            .with_seed(self.seed.seed)
            .with_distance(self.metric.into())
    }
}

#[derive(Debug, Clone, Args)]
pub struct GenArgs {
    #[command(flatten)]
    pub scenario: ScenarioArgs,
    #[command(flatten)]
    pub seed: SeedArg,
    /// Data CSV path.
    #[arg(long)]
    pub out: PathBuf,
    /// Truth-label CSV path; defaults to `<out stem>.truth.csv`.
    #[arg(long)]
    pub truth: Option<PathBuf>,
}

#[derive(Debug, Clone, Args)]
pub struct FitArgs {
    #[command(flatten)]
    pub input: InputArgs,
    #[command(flatten)]
    pub model: ModelArgs,
    /// Number of clusters.
    #[arg(long)]
    pub c: usize,
    /// Result JSON path.
    #[arg(long)]
    pub out: PathBuf,
}

#[derive(Debug, Clone, Args)]
pub struct VatArgs {
    #[command(flatten)]
    pub input: InputArgs,
    #[arg(long, value_enum, default_value_t = MetricArg::Euclidean)]
    pub metric: MetricArg,
    /// Apply the min-max path transform before rendering.
    #[arg(long)]
    pub ivat: bool,
    /// PGM image path. The ordering goes to `<out stem>.order.txt`.
    #[arg(long)]
    pub out: PathBuf,
}

#[derive(Debug, Clone, Args)]
pub struct ValidateArgs {
    #[command(flatten)]
    pub input: InputArgs,
    #[command(flatten)]
    pub model: ModelArgs,
    #[arg(long, default_value_t = 2)]
    pub c_min: usize,
    #[arg(long, default_value_t = 6)]
    pub c_max: usize,
    /// Report JSON path; the CSV table is written next to it.
    #[arg(long)]
    pub out: PathBuf,
}

#[derive(Debug, Clone, Args)]
pub struct PipelineArgs {
    #[command(flatten)]
    pub scenario: ScenarioArgs,
    #[command(flatten)]
    pub model: ModelArgs,
    #[arg(long, default_value_t = 2)]
    pub c_min: usize,
    #[arg(long, default_value_t = 6)]
    pub c_max: usize,
    /// Output directory, created if missing.
    #[arg(long)]
    pub out: PathBuf,
}

pub fn run(cli: Cli) -> CliResult {
    match cli.command {
        Command::Gen(args) => cmd_gen(&args),
        Command::Fit(args) => cmd_fit(&args),
        Command::Vat(args) => cmd_vat(&args),
        Command::Validate(args) => cmd_validate(&args),
        Command::Pipeline(args) => cmd_pipeline(&args),
    }
}

fn resolve_scenario(args: &ScenarioArgs) -> CliResult<Scenario> {
    let scenarios = match &args.scenario_file {
        Some(path) => datagen::load_scenarios(path)?,
        None => datagen::builtin_scenarios(),
    };
    Ok(datagen::find_scenario(&scenarios, &args.scenario)?)
}

fn sibling(path: &Path, suffix: &str) -> PathBuf {
    let stem = path
        .file_stem()
        .map(|s| s.to_string_lossy().into_owned())
        .unwrap_or_default();
    path.with_file_name(format!("{stem}{suffix}"))
}

fn write_text(path: &Path, text: &str) -> CliResult {
    fs::write(path, text)
        .map_err(|e| CliError::runtime(format!("cannot write {}: {e}", path.display())))
}

fn write_json<T: Serialize>(path: &Path, value: &T) -> CliResult {
    let mut text =
        serde_json::to_string_pretty(value).map_err(|e| CliError::runtime(e.to_string()))?;
    text.push('\n');
    write_text(path, &text)
}

pub fn cmd_gen(args: &GenArgs) -> CliResult {
    let scenario = resolve_scenario(&args.scenario)?;
    let seed = args.seed.seed;
    let labeled = datagen::generate(&scenario, seed)?;
    let truth_path = args
        .truth
        .clone()
        .unwrap_or_else(|| sibling(&args.out, ".truth.csv"));
    write_csv(&labeled.data, &args.out)?;
    write_labels_csv(&labeled.truth, &truth_path)?;
    println!(
        "{}: n={} d={} clusters={} seed={seed}",
        scenario.name,
        labeled.data.n(),
        labeled.data.d(),
        scenario.true_clusters()
    );
    Ok(())
}

/// JSON layout of a single fit.
#[derive(Debug, Serialize)]
pub struct FitRecord {
    pub algorithm: String,
    pub c: usize,
    pub q: f64,
    pub metric: DistanceKind,
    pub tol: f64,
    pub max_iter: usize,
    pub seed: u64,
    #[serde(rename = "K", skip_serializing_if = "Option::is_none")]
    pub k: Option<f64>,
    pub converged: bool,
    pub iterations: usize,
    pub final_cost: f64,
    pub coincident_centroids: bool,
    pub centroids: Vec<Vec<f64>>,
    pub labels: Vec<usize>,
    /// One row per point, one entry per cluster.
    pub memberships: Vec<Vec<f64>>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub eta: Option<Vec<f64>>,
}

impl FitRecord {
    pub fn new(result: &ClusteringResult, algorithm: &Algorithm, config: &RunConfig) -> Self {
        let u = &result.memberships;
        Self {
            algorithm: algorithm.name().into(),
            c: config.c,
            q: config.q,
            metric: config.distance_kind,
            tol: config.tol,
            max_iter: config.max_iter,
            seed: config.seed,
            k: match algorithm {
                Algorithm::Pcm { k } => Some(*k),
                Algorithm::Fcm => None,
            },
            converged: result.converged,
            iterations: result.iterations,
            final_cost: result.final_cost(),
            coincident_centroids: result.coincident_centroids,
            centroids: result.centroids.iter().map(<[f64]>::to_vec).collect(),
            labels: result.labels.clone(),
            memberships: (0..u.n()).map(|i| u.column(i).collect()).collect(),
            eta: result.eta.clone(),
        }
    }
}

pub fn cmd_fit(args: &FitArgs) -> CliResult {
    let algorithm = args.model.algorithm()?;
    let data = load_csv(&args.input.data, args.input.has_header)?;
    let config = args.model.config(args.c);
    config.validate(data.n())?;
    let metric = Metric::for_data(config.distance_kind, &data)?;
    // Valid configurations that still fail are runtime errors.
    let result = algorithm
        .fit(&data, &config, &metric)
        .map_err(|e| CliError::runtime(e.to_string()))?;
    write_json(&args.out, &FitRecord::new(&result, &algorithm, &config))?;
    println!(
        "{} c={} seed={} converged={} iterations={} cost={}",
        algorithm.name(),
        config.c,
        config.seed,
        result.converged,
        result.iterations,
        result.final_cost()
    );
    Ok(())
}

fn dissimilarities(data: &Dataset, kind: DistanceKind) -> CliResult<DissimilarityMatrix> {
    let metric = Metric::for_data(kind, data)?;
    let cov = match &metric {
        Metric::Mahalanobis(cov) => Some(cov),
        Metric::Euclidean => None,
    };
    Ok(pairwise_matrix(data, kind, cov)?)
}

/// The VAT image and, when requested, the iVAT image of the same ordering.
/// Both share the grey scale of the untransformed matrix.
fn tendency_images(dmat: &DissimilarityMatrix) -> (VatResult, DissimilarityMatrix) {
    let vat = tendency::vat_order(dmat);
    let ivat = tendency::ivat_reordered(&vat);
    (vat, ivat)
}

pub fn cmd_vat(args: &VatArgs) -> CliResult {
    let data = load_csv(&args.input.data, args.input.has_header)?;
    let dmat = dissimilarities(&data, args.metric.into())?;
    let scale = dmat.max_value();
    let (vat, ivat) = tendency_images(&dmat);
    let image = if args.ivat { &ivat } else { &vat.reordered };
    tendency::render_pgm_scaled(image, scale, &args.out)?;
    let order_path = sibling(&args.out, ".order.txt");
    let mut order = String::new();
    for i in &vat.ordering {
        order.push_str(&format!("{i}\n"));
    }
    write_text(&order_path, &order)?;
    println!(
        "{} image {}x{} written to {}",
        if args.ivat { "ivat" } else { "vat" },
        dmat.n(),
        dmat.n(),
        args.out.display()
    );
    Ok(())
}

fn check_range(c_min: usize, c_max: usize, n: usize) -> CliResult {
    if c_min < 2 || c_min > c_max || c_max > n {
        return Err(CliError::usage(format!(
            "cluster range {c_min}..={c_max} must satisfy 2 <= c-min <= c-max <= n = {n}"
        )));
    }
    Ok(())
}

fn fmt_cell(v: Option<f64>, best: bool) -> String {
    match v {
        Some(x) => format!("{x:.4}{}", if best { "*" } else { " " }),
        None => "-".into(),
    }
}

/// Plain-text table; `*` marks the best cluster count per index.
pub fn format_report(report: &ValidityReport) -> String {
    let (pc, di, dbi) = (report.best_pc(), report.best_di(), report.best_dbi());
    let mut out = format!(
        "{} seed={}\n{:>3}  {:>10}  {:>10}  {:>10}  flags\n",
        report.algorithm, report.base_seed, "c", "PC", "DI", "DBI"
    );
    for r in &report.rows {
        out.push_str(&format!(
            "{:>3}  {:>10}  {:>10}  {:>10}  {}\n",
            r.c,
            fmt_cell(r.pc, pc == Some(r.c)),
            fmt_cell(r.di, di == Some(r.c)),
            fmt_cell(r.dbi, dbi == Some(r.c)),
            r.flags.join("; ")
        ));
    }
    out
}

pub fn cmd_validate(args: &ValidateArgs) -> CliResult {
    let algorithm = args.model.algorithm()?;
    let data = load_csv(&args.input.data, args.input.has_header)?;
    check_range(args.c_min, args.c_max, data.n())?;
    let template = args.model.config(args.c_min);
    let report = validity::sweep_c(&data, algorithm, args.c_min, args.c_max, &template)?;
    write_json(&args.out, &report)?;
    write_text(&args.out.with_extension("csv"), &report.to_csv())?;
    print!("{}", format_report(&report));
    Ok(())
}

#[derive(Debug, Serialize)]
pub struct ManifestEntry {
    pub kind: &'static str,
    pub path: String,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub c: Option<usize>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub seed: Option<u64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub error: Option<String>,
}

impl ManifestEntry {
    fn file(kind: &'static str, path: &str) -> Self {
        Self {
            kind,
            path: path.into(),
            c: None,
            seed: None,
            error: None,
        }
    }
}

#[derive(Debug, Serialize)]
pub struct Manifest {
    pub scenario: String,
    pub algorithm: String,
    pub seed: u64,
    pub c_min: usize,
    pub c_max: usize,
    pub q: f64,
    pub metric: DistanceKind,
    #[serde(rename = "K", skip_serializing_if = "Option::is_none")]
    pub k: Option<f64>,
    pub tol: f64,
    pub max_iter: usize,
    /// `complete`, or the step that aborted the run.
    pub status: String,
    pub artifacts: Vec<ManifestEntry>,
}

pub const MANIFEST_FILE: &str = "manifest.json";

pub fn cmd_pipeline(args: &PipelineArgs) -> CliResult {
    let algorithm = args.model.algorithm()?;
    let scenario = resolve_scenario(&args.scenario)?;
    check_range(
        args.c_min,
        args.c_max,
        scenario.clusters.iter().map(|c| c.count).sum::<usize>() + scenario.noise_count,
    )?;
    fs::create_dir_all(&args.out)
        .map_err(|e| CliError::runtime(format!("cannot create {}: {e}", args.out.display())))?;

    let template = args.model.config(args.c_min);
    let mut manifest = Manifest {
        scenario: scenario.name.clone(),
        algorithm: algorithm.name().into(),
        seed: template.seed,
        c_min: args.c_min,
        c_max: args.c_max,
        q: template.q,
        metric: template.distance_kind,
        k: match algorithm {
            Algorithm::Pcm { k } => Some(k),
            Algorithm::Fcm => None,
        },
        tol: template.tol,
        max_iter: template.max_iter,
        status: "complete".into(),
        artifacts: Vec::new(),
    };
    let outcome = pipeline_steps(
        args,
        &scenario,
        algorithm,
        &template,
        &mut manifest.artifacts,
    );
    if let Err(e) = &outcome {
        manifest.status = format!("aborted: {e}");
    }
    write_json(&args.out.join(MANIFEST_FILE), &manifest)?;
    outcome?;
    println!(
        "pipeline {} {} seed={}: {} artifacts in {}",
        scenario.name,
        algorithm.name(),
        template.seed,
        manifest.artifacts.len(),
        args.out.display()
    );
    Ok(())
}

fn pipeline_steps(
    args: &PipelineArgs,
    scenario: &Scenario,
    algorithm: Algorithm,
    template: &RunConfig,
    artifacts: &mut Vec<ManifestEntry>,
) -> CliResult {
    let dir = &args.out;
    let labeled = datagen::generate(scenario, template.seed)?;
    let data = &labeled.data;
    write_csv(data, dir.join("data.csv"))?;
    artifacts.push(ManifestEntry {
        seed: Some(template.seed),
        ..ManifestEntry::file("data", "data.csv")
    });

    let dmat = dissimilarities(data, template.distance_kind)?;
    let scale = dmat.max_value();
    let (vat, ivat) = tendency_images(&dmat);
    tendency::render_pgm_scaled(&vat.reordered, scale, dir.join("vat.pgm"))?;
    artifacts.push(ManifestEntry::file("vat", "vat.pgm"));
    tendency::render_pgm_scaled(&ivat, scale, dir.join("ivat.pgm"))?;
    artifacts.push(ManifestEntry::file("ivat", "ivat.pgm"));

    let (report, fits) =
        validity::sweep_c_detailed(data, algorithm, args.c_min, args.c_max, template)?;
    for (c, seed, fit) in &fits {
        let name = format!("fit_c{c}.json");
        let config = RunConfig {
            c: *c,
            seed: *seed,
            ..template.clone()
        };
        let mut entry = ManifestEntry {
            c: Some(*c),
            seed: Some(*seed),
            ..ManifestEntry::file("fit", &name)
        };
        match fit {
            Ok(result) => write_json(
                &dir.join(&name),
                &FitRecord::new(result, &algorithm, &config),
            )?,
            Err(e) => {
                write_json(
                    &dir.join(&name),
                    &serde_json::json!({ "algorithm": algorithm.name(), "c": c, "seed": seed, "error": e.to_string() }),
                )?;
                entry.error = Some(e.to_string());
            }
        }
        artifacts.push(entry);
    }

    write_json(&dir.join("report.json"), &report)?;
    artifacts.push(ManifestEntry {
        seed: Some(template.seed),
        ..ManifestEntry::file("report", "report.json")
    });
    print!("{}", format_report(&report));
    Ok(())
}

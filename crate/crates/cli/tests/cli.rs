use std::fs;
use std::path::Path;
use std::process::{Command, Output};

use serde_json::Value;
use tempfile::TempDir;

fn softclust(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_softclust"))
        .args(args)
        .env_remove("SOFTCLUST_SEED")
        .output()
        .expect("binary runs")
}

fn path_str(p: &Path) -> &str {
    p.to_str().unwrap()
}

fn read_json(p: &Path) -> Value {
    serde_json::from_str(&fs::read_to_string(p).unwrap()).unwrap()
}

fn gen(dir: &TempDir, scenario: &str) -> std::path::PathBuf {
    let out = dir.path().join(format!("{scenario}.csv"));
    let o = softclust(&["gen", "--scenario", scenario, "--out", path_str(&out)]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    out
}

fn pgm(p: &Path) -> (usize, Vec<u8>) {
    let bytes = fs::read(p).unwrap();
    let header: Vec<&[u8]> = bytes.splitn(4, |&b| b == b'\n').collect();
    assert_eq!(header[0], b"P5");
    let dims = std::str::from_utf8(header[1]).unwrap();
    let n: usize = dims.split(' ').next().unwrap().parse().unwrap();
    assert_eq!(dims, format!("{n} {n}"));
    (n, header[3].to_vec())
}

#[test]
fn gen_writes_data_and_truth() {
    let dir = TempDir::new().unwrap();
    let out = dir.path().join("d.csv");
    let o = softclust(&["gen", "--scenario", "two_separate", "--out", path_str(&out)]);
    assert_eq!(o.status.code(), Some(0));
    let stdout = String::from_utf8_lossy(&o.stdout);
    assert!(stdout.contains("n=200") && stdout.contains("d=2") && stdout.contains("clusters=2"));
    assert_eq!(fs::read_to_string(&out).unwrap().lines().count(), 200);
    let truth = fs::read_to_string(dir.path().join("d.truth.csv")).unwrap();
    assert_eq!(truth.lines().next(), Some("label"));
    assert_eq!(truth.lines().count(), 201);
}

#[test]
fn gen_rejects_unknown_scenario() {
    let dir = TempDir::new().unwrap();
    let out = dir.path().join("d.csv");
    let o = softclust(&["gen", "--scenario", "bogus_name", "--out", path_str(&out)]);
    assert_eq!(o.status.code(), Some(2));
    let stderr = String::from_utf8_lossy(&o.stderr);
    assert!(stderr.contains("two_separate") && stderr.contains("five_clusters"));
    assert!(!out.exists());
}

#[test]
fn gen_reports_unwritable_path() {
    let dir = TempDir::new().unwrap();
    let out = dir.path().join("missing").join("d.csv");
    let o = softclust(&["gen", "--scenario", "two_separate", "--out", path_str(&out)]);
    assert_eq!(o.status.code(), Some(1));
}

#[test]
fn gen_reads_scenario_file() {
    let dir = TempDir::new().unwrap();
    let file = dir.path().join("s.toml");
    fs::write(
        &file,
        "[[scenario]]\nname = \"line\"\n[[scenario.cluster]]\ncenter = [0.0]\nspread = [1.0]\ncount = 7\n",
    )
    .unwrap();
    let out = dir.path().join("d.csv");
    let o = softclust(&[
        "gen",
        "--scenario",
        "line",
        "--scenario-file",
        path_str(&file),
        "--out",
        path_str(&out),
    ]);
    assert_eq!(o.status.code(), Some(0));
    assert!(String::from_utf8_lossy(&o.stdout).contains("n=7 d=1"));
}

#[test]
fn fit_fcm_recovers_two_separate() {
    let dir = TempDir::new().unwrap();
    let data = gen(&dir, "two_separate");
    let out = dir.path().join("fit.json");
    let o = softclust(&[
        "fit",
        "--data",
        path_str(&data),
        "--c",
        "2",
        "--out",
        path_str(&out),
    ]);
    assert_eq!(o.status.code(), Some(0));
    let v = read_json(&out);
    assert_eq!(v["converged"], true);
    assert_eq!(v["seed"], 0);
    assert!(v.get("K").is_none());
    let mut cents: Vec<(f64, f64)> = v["centroids"]
        .as_array()
        .unwrap()
        .iter()
        .map(|c| (c[0].as_f64().unwrap(), c[1].as_f64().unwrap()))
        .collect();
    cents.sort_by(|a, b| a.0.total_cmp(&b.0));
    for ((x, y), (tx, ty)) in cents.iter().zip([(0.0, 0.0), (10.0, 10.0)]) {
        assert!((x - tx).abs() < 0.5 && (y - ty).abs() < 0.5, "{cents:?}");
    }
    let u = v["memberships"].as_array().unwrap();
    assert_eq!(u.len(), 200);
    let s: f64 = u[0]
        .as_array()
        .unwrap()
        .iter()
        .map(|x| x.as_f64().unwrap())
        .sum();
    assert!((s - 1.0).abs() < 1e-9);
    assert_eq!(v["labels"].as_array().unwrap().len(), 200);
}

#[test]
fn fit_with_too_many_clusters_is_a_usage_error() {
    let dir = TempDir::new().unwrap();
    let data = dir.path().join("d.csv");
    fs::write(&data, "0,0\n1,1\n2,2\n").unwrap();
    let out = dir.path().join("fit.json");
    let o = softclust(&[
        "fit",
        "--data",
        path_str(&data),
        "--c",
        "4",
        "--out",
        path_str(&out),
    ]);
    assert_eq!(o.status.code(), Some(2));
    assert!(!out.exists());
}

#[test]
fn fit_pcm_records_k() {
    let dir = TempDir::new().unwrap();
    let data = gen(&dir, "two_separate");
    let out = dir.path().join("fit.json");
    let o = softclust(&[
        "fit",
        "--data",
        path_str(&data),
        "--algorithm",
        "pcm",
        "--K",
        "2.5",
        "--c",
        "2",
        "--out",
        path_str(&out),
    ]);
    assert_eq!(
        o.status.code(),
        Some(0),
        "{}",
        String::from_utf8_lossy(&o.stderr)
    );
    let v = read_json(&out);
    assert_eq!(v["K"], 2.5);
    assert_eq!(v["algorithm"], "pcm");
    assert_eq!(v["eta"].as_array().unwrap().len(), 2);
}

#[test]
fn bad_flags_and_inputs() {
    let dir = TempDir::new().unwrap();
    let data = gen(&dir, "two_separate");
    let out = dir.path().join("fit.json");
    let d = path_str(&data);
    let o = path_str(&out);
    let bad_alg = softclust(&[
        "fit",
        "--data",
        d,
        "--algorithm",
        "kmeans",
        "--c",
        "2",
        "--out",
        o,
    ]);
    assert_eq!(bad_alg.status.code(), Some(2));
    let bad_q = softclust(&["fit", "--data", d, "--q", "1", "--c", "2", "--out", o]);
    assert_eq!(bad_q.status.code(), Some(2));
    let bad_k = softclust(&[
        "fit",
        "--data",
        d,
        "--algorithm",
        "pcm",
        "--K",
        "0",
        "--c",
        "2",
        "--out",
        o,
    ]);
    assert_eq!(bad_k.status.code(), Some(2));
    let missing = softclust(&["fit", "--data", "/nonexistent.csv", "--c", "2", "--out", o]);
    assert_eq!(missing.status.code(), Some(1));
    let no_command = softclust(&[]);
    assert_eq!(no_command.status.code(), Some(2));
}

#[test]
fn seed_comes_from_flag_then_env() {
    let dir = TempDir::new().unwrap();
    let data = gen(&dir, "two_separate");
    let out = dir.path().join("fit.json");
    let run = |env: Option<&str>, flag: Option<&str>| {
        let mut cmd = Command::new(env!("CARGO_BIN_EXE_softclust"));
        cmd.args([
            "fit",
            "--data",
            path_str(&data),
            "--c",
            "2",
            "--out",
            path_str(&out),
        ]);
        cmd.env_remove("SOFTCLUST_SEED");
        if let Some(s) = env {
            cmd.env("SOFTCLUST_SEED", s);
        }
        if let Some(s) = flag {
            cmd.args(["--seed", s]);
        }
        assert!(cmd.output().unwrap().status.success());
        read_json(&out)["seed"].as_u64().unwrap()
    };
    assert_eq!(run(None, None), 0);
    assert_eq!(run(Some("11"), None), 11);
    assert_eq!(run(Some("11"), Some("3")), 3);
}

#[test]
fn vat_writes_square_image_and_order() {
    let dir = TempDir::new().unwrap();
    let data = gen(&dir, "two_separate");
    let img = dir.path().join("vat.pgm");
    let o = softclust(&["vat", "--data", path_str(&data), "--out", path_str(&img)]);
    assert_eq!(o.status.code(), Some(0));
    let (n, pixels) = pgm(&img);
    assert_eq!(n, 200);
    assert_eq!(pixels.len(), 200 * 200);
    let mut order: Vec<usize> = fs::read_to_string(dir.path().join("vat.order.txt"))
        .unwrap()
        .lines()
        .map(|l| l.parse().unwrap())
        .collect();
    order.sort_unstable();
    assert_eq!(order, (0..200).collect::<Vec<_>>());
}

#[test]
fn ivat_darkens_a_chain() {
    let dir = TempDir::new().unwrap();
    let data = dir.path().join("chain.csv");
    let rows: String = (0..10).map(|k| format!("{k},0\n")).collect();
    fs::write(&data, rows).unwrap();
    let plain = dir.path().join("plain.pgm");
    let transformed = dir.path().join("ivat.pgm");
    assert!(
        softclust(&["vat", "--data", path_str(&data), "--out", path_str(&plain)])
            .status
            .success()
    );
    assert!(softclust(&[
        "vat",
        "--data",
        path_str(&data),
        "--ivat",
        "--out",
        path_str(&transformed)
    ])
    .status
    .success());
    let (_, a) = pgm(&plain);
    let (_, b) = pgm(&transformed);
    assert_eq!(a.iter().max(), Some(&255));
    assert!(b.iter().max() <= a.iter().max());
    assert!(b.iter().zip(&a).all(|(x, y)| x <= y));
    assert_eq!(b.iter().max(), Some(&28));
}

#[test]
fn vat_single_point_is_black() {
    let dir = TempDir::new().unwrap();
    let data = dir.path().join("one.csv");
    fs::write(&data, "3,4\n").unwrap();
    let img = dir.path().join("one.pgm");
    assert!(
        softclust(&["vat", "--data", path_str(&data), "--out", path_str(&img)])
            .status
            .success()
    );
    assert_eq!(fs::read(&img).unwrap(), b"P5\n1 1\n255\n\0");
}

#[test]
fn validate_marks_three_clusters() {
    let dir = TempDir::new().unwrap();
    let data = gen(&dir, "three_close");
    let out = dir.path().join("report.json");
    let o = softclust(&[
        "validate",
        "--data",
        path_str(&data),
        "--c-min",
        "2",
        "--c-max",
        "6",
        "--out",
        path_str(&out),
    ]);
    assert_eq!(o.status.code(), Some(0));
    let stdout = String::from_utf8_lossy(&o.stdout);
    let row3 = stdout
        .lines()
        .find(|l| l.trim_start().starts_with("3 "))
        .unwrap();
    let dbi_cell = row3.split_whitespace().nth(3).unwrap();
    assert!(dbi_cell.ends_with('*'), "{stdout}");

    // JSON and CSV carry the same numbers.
    let report = read_json(&out);
    let csv = fs::read_to_string(dir.path().join("report.csv")).unwrap();
    let mut lines = csv.lines();
    assert_eq!(lines.next(), Some("c,pc,di,dbi,flags"));
    let rows = report["rows"].as_array().unwrap();
    assert_eq!(rows.len(), 5);
    for (row, line) in rows.iter().zip(lines) {
        let cells: Vec<&str> = line.split(',').collect();
        assert_eq!(cells[0].parse::<u64>().unwrap(), row["c"].as_u64().unwrap());
        for (cell, key) in cells[1..4].iter().zip(["pc", "di", "dbi"]) {
            match row[key].as_f64() {
                Some(v) => assert_eq!(cell.parse::<f64>().unwrap(), v),
                None => assert!(cell.is_empty()),
            }
        }
    }
}

#[test]
fn validate_rejects_inverted_range() {
    let dir = TempDir::new().unwrap();
    let data = gen(&dir, "two_separate");
    let out = dir.path().join("report.json");
    let o = softclust(&[
        "validate",
        "--data",
        path_str(&data),
        "--c-min",
        "5",
        "--c-max",
        "3",
        "--out",
        path_str(&out),
    ]);
    assert_eq!(o.status.code(), Some(2));
}

fn manifest_kinds(manifest: &Value) -> Vec<String> {
    manifest["artifacts"]
        .as_array()
        .unwrap()
        .iter()
        .map(|a| a["kind"].as_str().unwrap().to_string())
        .collect()
}

#[test]
fn pipeline_lists_every_artifact() {
    let dir = TempDir::new().unwrap();
    let out = dir.path().join("run");
    let o = softclust(&[
        "pipeline",
        "--scenario",
        "two_separate",
        "--algorithm",
        "fcm",
        "--c-min",
        "2",
        "--c-max",
        "5",
        "--seed",
        "4",
        "--out",
        path_str(&out),
    ]);
    assert_eq!(
        o.status.code(),
        Some(0),
        "{}",
        String::from_utf8_lossy(&o.stderr)
    );
    let manifest = read_json(&out.join("manifest.json"));
    assert_eq!(manifest["status"], "complete");
    assert_eq!(manifest["seed"], 4);
    let kinds = manifest_kinds(&manifest);
    let count = |k: &str| kinds.iter().filter(|x| *x == k).count();
    assert_eq!(count("data"), 1);
    assert_eq!(count("vat") + count("ivat"), 2);
    assert_eq!(count("fit"), 4);
    assert_eq!(count("report"), 1);
    for a in manifest["artifacts"].as_array().unwrap() {
        assert!(out.join(a["path"].as_str().unwrap()).exists());
    }
    assert_eq!(read_json(&out.join("report.json"))["base_seed"], 4);
}

#[test]
fn pipeline_pcm_covers_the_whole_range() {
    let dir = TempDir::new().unwrap();
    let out = dir.path().join("run");
    let o = softclust(&[
        "pipeline",
        "--scenario",
        "five_clusters",
        "--algorithm",
        "pcm",
        "--c-min",
        "2",
        "--c-max",
        "7",
        "--out",
        path_str(&out),
    ]);
    assert_eq!(
        o.status.code(),
        Some(0),
        "{}",
        String::from_utf8_lossy(&o.stderr)
    );
    let report = read_json(&out.join("report.json"));
    let cs: Vec<u64> = report["rows"]
        .as_array()
        .unwrap()
        .iter()
        .map(|r| r["c"].as_u64().unwrap())
        .collect();
    assert_eq!(cs, (2..=7).collect::<Vec<_>>());
    for r in report["rows"].as_array().unwrap() {
        let flags: Vec<&str> = r["flags"]
            .as_array()
            .unwrap()
            .iter()
            .map(|f| f.as_str().unwrap())
            .collect();
        assert!(r["pc"].is_number() || flags.iter().any(|f| f.starts_with("failed")));
    }
}

#[test]
fn pipeline_bad_scenario_is_a_usage_error() {
    let dir = TempDir::new().unwrap();
    let out = dir.path().join("run");
    let o = softclust(&["pipeline", "--scenario", "nope", "--out", path_str(&out)]);
    assert_eq!(o.status.code(), Some(2));
}

use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use netident_cli::manifest::{sha256_hex, RunManifest};
use netident_cli::spec_file::NetworkSpecFile;
use serde_json::Value;
use tempfile::TempDir;

fn config(name: &str) -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("../../configs").join(name)
}

fn netident(dir: &Path, args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_netident"))
        .args(args)
        .current_dir(dir)
        .env_remove("NETIDENT_OUT_DIR")
        .output()
        .expect("binary runs")
}

fn stdout(out: &Output) -> String {
    String::from_utf8_lossy(&out.stdout).into_owned()
}

fn stderr(out: &Output) -> String {
    String::from_utf8_lossy(&out.stderr).into_owned()
}

fn json(path: &Path) -> Value {
    serde_json::from_str(&std::fs::read_to_string(path).unwrap()).unwrap()
}

fn write_spec(dir: &Path, name: &str, text: &str) -> PathBuf {
    let path = dir.join(name);
    std::fs::write(&path, text).unwrap();
    path
}

fn csv_rows(path: &Path) -> (Vec<String>, Vec<Vec<f64>>) {
    let mut r = csv::Reader::from_path(path).unwrap();
    let header = r.headers().unwrap().iter().map(String::from).collect();
    let rows = r
        .records()
        .map(|rec| rec.unwrap().iter().map(|v| v.parse().unwrap()).collect())
        .collect();
    (header, rows)
}

#[test]
fn version_flag() {
    let dir = TempDir::new().unwrap();
    let out = netident(dir.path(), &["--version"]);
    assert!(out.status.success());
    assert_eq!(stdout(&out).trim(), format!("netident {}", env!("CARGO_PKG_VERSION")));
}

#[test]
fn bundled_configs_round_trip() {
    for name in ["symmetric.toml", "linear.toml", "full_state.toml"] {
        let (spec, _) = NetworkSpecFile::load(&config(name)).unwrap();
        assert_eq!(NetworkSpecFile::parse(&spec.to_toml()).unwrap(), spec, "{name}");
    }
}

#[test]
fn analyze_kuramoto_reports_free_edges() {
    let dir = TempDir::new().unwrap();
    let spec = config("symmetric.toml");
    let out = netident(dir.path(), &["analyze", spec.to_str().unwrap(), "--mu", "0.5", "--samples", "10"]);
    assert_eq!(out.status.code(), Some(0), "{}", stderr(&out));
    assert!(stdout(&out).contains("free edges: (1,2) (3,4)"), "{}", stdout(&out));
    let record = json(&dir.path().join("analysis.json"));
    assert_eq!(record["free_edges"], serde_json::json!([[1, 2], [3, 4]]));
    assert_eq!(record["all_invariant"], Value::Bool(true));
    assert!(record["worst_restricted_abscissa"].as_f64().unwrap() < 0.0);

    let manifest: RunManifest = serde_json::from_value(json(&dir.path().join("analysis.manifest.json"))).unwrap();
    assert_eq!(manifest.command, "analyze");
    assert_eq!(manifest.input_sha256, sha256_hex(&std::fs::read(&spec).unwrap()));
    assert_eq!(manifest.exit_code, 0);
}

#[test]
fn analyze_linear_example() {
    let dir = TempDir::new().unwrap();
    let spec = config("linear.toml");
    let out = netident(dir.path(), &["analyze", spec.to_str().unwrap(), "--mu", "0.99"]);
    assert_eq!(out.status.code(), Some(0), "{}", stderr(&out));
    let record = json(&dir.path().join("analysis.json"));
    assert_eq!(record["worst_abscissa"].as_f64().unwrap(), -1.0);
    assert_eq!(record["all_invariant"], Value::Bool(true));
    assert!(stdout(&out).contains("nullspace invariance: holds"));

    // rate 2 exceeds what alpha = -1 allows
    let out = netident(dir.path(), &["analyze", spec.to_str().unwrap(), "--mu", "2"]);
    assert_eq!(out.status.code(), Some(2));
    assert_eq!(json(&dir.path().join("analysis.manifest.json"))["exit_code"], 2);
}

#[test]
fn input_errors_exit_one() {
    let dir = TempDir::new().unwrap();
    let text = std::fs::read_to_string(config("symmetric.toml")).unwrap();
    let rank = write_spec(
        dir.path(),
        "rank.toml",
        &text.replace("[0.0, 0.0, 1.0, 1.0]]", "[2.0, 2.0, 0.0, 0.0]]"),
    );
    let out = netident(dir.path(), &["analyze", rank.to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(1));
    assert!(stderr(&out).contains("measurement matrix not full row rank"), "{}", stderr(&out));

    let broken = write_spec(dir.path(), "broken.toml", "n = 4\nomega = [1.0,\n");
    let out = netident(dir.path(), &["analyze", broken.to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(1));
    assert!(stderr(&out).contains("line"), "{}", stderr(&out));

    let bad_edge = write_spec(dir.path(), "edge.toml", &text.replace("{ i = 2, j = 4", "{ i = 2, j = 7"));
    let out = netident(dir.path(), &["candidates", bad_edge.to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(1));
    assert!(stderr(&out).contains("edges[2]"), "{}", stderr(&out));

    let out = netident(dir.path(), &["analyze"]);
    assert_eq!(out.status.code(), Some(1));
    let out = netident(dir.path(), &["simulate", config("symmetric.toml").to_str().unwrap(), "--s", "1.5"]);
    assert_eq!(out.status.code(), Some(1));
}

#[test]
fn candidates_for_four_node_ring() {
    let dir = TempDir::new().unwrap();
    let out = netident(dir.path(), &["candidates", config("symmetric.toml").to_str().unwrap(), "--values=1,-1"]);
    assert_eq!(out.status.code(), Some(0), "{}", stderr(&out));
    let record = json(&dir.path().join("candidates.json"));
    let list = record["candidates"].as_array().unwrap();
    // options {0, +1, -1} on each of the two free edges, minus the base network
    assert_eq!(list.len(), 8);
    assert!(list.iter().any(|c| c["connected"] == Value::Bool(false)));
    for cand in list {
        for entry in cand["delta"].as_array().unwrap() {
            let edge = (entry["i"].as_u64().unwrap(), entry["j"].as_u64().unwrap());
            assert!(edge == (1, 2) || edge == (3, 4), "{edge:?}");
        }
    }
    let deletion = list.iter().find(|c| c["delta"].as_array().unwrap().len() == 2
        && c["delta"].as_array().unwrap().iter().all(|e| e["weight"] == -1.0));
    assert!(deletion.is_some());

    let out = netident(dir.path(), &["candidates", config("full_state.toml").to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(0));
    assert!(stdout(&out).contains("no free edges"));
    assert!(json(&dir.path().join("candidates.json"))["candidates"].as_array().unwrap().is_empty());
}

#[test]
fn compare_shared_start_is_exact() {
    let dir = TempDir::new().unwrap();
    let spec = config("symmetric.toml");
    let out = netident(dir.path(), &["compare", spec.to_str().unwrap(), "--same-x0", "--out", "net4.csv"]);
    assert_eq!(out.status.code(), Some(0), "{}", stderr(&out));
    let summary = json(&dir.path().join("net4.summary.json"));
    assert!(summary["max_output_gap"].as_f64().unwrap() < 1e-6);

    let (header, rows) = csv_rows(&dir.path().join("net4.csv"));
    let expected: Vec<&str> = vec![
        "t", "xa1", "xa2", "xa3", "xa4", "xb1", "xb2", "xb3", "xb4", "ya1", "ya2", "yb1", "yb2", "distance", "length",
        "margin_a", "margin_b",
    ];
    assert_eq!(header, expected);
    assert_eq!(rows.len(), 50_001);
    assert_eq!(rows.last().unwrap()[0], 50.0);

    // Net 1 against itself
    let out = netident(dir.path(), &["compare", spec.to_str().unwrap(), "--delta", "", "--out", "self.csv"]);
    assert_eq!(out.status.code(), Some(0), "{}", stderr(&out));
    let (_, rows) = csv_rows(&dir.path().join("self.csv"));
    assert!(rows.iter().all(|r| r[13] == 0.0));
}

#[test]
fn compare_distinct_start_is_phase_shifted() {
    let dir = TempDir::new().unwrap();
    let spec = config("symmetric.toml");
    let out = netident(
        dir.path(),
        &["compare", spec.to_str().unwrap(), "--delta", "1-2=1", "--x0-b", "0.4,0.2,1.0,0.7", "--out", "net2.csv"],
    );
    assert_eq!(out.status.code(), Some(0), "{}", stderr(&out));
    let summary = json(&dir.path().join("net2.summary.json"));
    assert!(summary["phase_alignment"]["residual"].as_f64().unwrap() < 1e-3);
    assert!(summary["max_output_gap"].as_f64().unwrap() > 1e-2);
    assert!(summary["final_length"].as_f64().unwrap() < 1e-6);

    let out = netident(dir.path(), &["compare", spec.to_str().unwrap(), "--candidate", "99"]);
    assert_eq!(out.status.code(), Some(1));
}

#[test]
fn simulate_blends_initial_state() {
    let dir = TempDir::new().unwrap();
    let spec = config("symmetric.toml");
    let out = netident(dir.path(), &["simulate", spec.to_str().unwrap(), "--s", "0.5", "--out", "half.csv"]);
    assert_eq!(out.status.code(), Some(0), "{}", stderr(&out));
    let (header, rows) = csv_rows(&dir.path().join("half.csv"));
    assert_eq!(header, vec!["t", "x1", "x2", "x3", "x4", "y1", "y2"]);
    assert_eq!(&rows[0][1..5], &[0.15, 0.15, 1.0, 1.0]);
    assert!((rows[0][5] - 0.3).abs() < 1e-15 && (rows[0][6] - 2.0).abs() < 1e-15);

    // s = 0 is the base network, which the comparison's first member also is
    netident(dir.path(), &["simulate", spec.to_str().unwrap(), "--out", "base.csv"]);
    netident(dir.path(), &["compare", spec.to_str().unwrap(), "--out", "cmp.csv"]);
    let (_, base) = csv_rows(&dir.path().join("base.csv"));
    let (_, cmp) = csv_rows(&dir.path().join("cmp.csv"));
    for (b, c) in base.iter().zip(&cmp).step_by(997) {
        assert_eq!(&b[..5], &c[..5]);
    }
}

#[test]
fn divergence_keeps_partial_output() {
    let dir = TempDir::new().unwrap();
    let spec = write_spec(
        dir.path(),
        "unstable.toml",
        "n = 1\nmodel = \"linear\"\nc = [[1.0]]\nx0 = [1.0]\n\n[linear]\na = [[3.0]]\n\n[sim]\ndt = 0.01\nt_end = 20.0\n",
    );
    let out = netident(dir.path(), &["simulate", spec.to_str().unwrap(), "--out", "blowup.csv"]);
    assert_eq!(out.status.code(), Some(3), "{}", stderr(&out));
    let (_, rows) = csv_rows(&dir.path().join("blowup.csv"));
    // e^{3t} passes 1e6 near t = 4.6
    assert!(rows.len() > 400 && rows.len() < 500, "{}", rows.len());
    assert_eq!(json(&dir.path().join("blowup.manifest.json"))["exit_code"], 3);

    let out = netident(dir.path(), &["compare", spec.to_str().unwrap(), "--out", "both.csv"]);
    assert_eq!(out.status.code(), Some(3));
    assert!(json(&dir.path().join("both.summary.json"))["diverged"].is_string());
}

#[test]
fn output_dir_override_and_reproducibility() {
    let dir = TempDir::new().unwrap();
    let target = dir.path().join("runs");
    let spec = config("symmetric.toml");
    for name in ["a.csv", "b.csv"] {
        let out = Command::new(env!("CARGO_BIN_EXE_netident"))
            .args(["simulate", spec.to_str().unwrap(), "--s", "1", "--out", name])
            .current_dir(dir.path())
            .env("NETIDENT_OUT_DIR", &target)
            .output()
            .unwrap();
        assert_eq!(out.status.code(), Some(0), "{}", stderr(&out));
    }
    let a = std::fs::read(target.join("a.csv")).unwrap();
    let b = std::fs::read(target.join("b.csv")).unwrap();
    assert_eq!(a, b);
    assert!(target.join("a.manifest.json").exists());
    assert!(!dir.path().join("a.csv").exists());
}

#[test]
fn verdict_on_symmetric_config() {
    let dir = TempDir::new().unwrap();
    let out = netident(dir.path(), &["verdict", config("symmetric.toml").to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(0), "{}", stderr(&out));
    let v = json(&dir.path().join("verdict.json"));
    assert_eq!(v["output_invisible"], Value::Bool(true));
    assert_eq!(v["conclusion"], "indistinguishable");
    // Net 4 is disconnected, so the synchronization bound cannot apply
    assert_eq!(v["sync_status"], "unavailable");
}

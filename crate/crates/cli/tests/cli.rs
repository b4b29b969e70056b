//! End-to-end tests of the binary: exit codes, determinism, file schemas,
//! and the reference constants surfaced by each subcommand.

use std::fs;
use std::path::{Path, PathBuf};
use std::process::{Command, Output};

const GOLDEN_COUNTS_SHA256: &str =
    "288f4a38501eea1218774bddc0ba090624de37506a3faf4502283653de6b7c49";

fn configs() -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("../../configs")
}

fn run(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_drcm"))
        .args(args)
        .output()
        .expect("binary should run")
}

fn run_ok(args: &[&str]) -> Output {
    let out = run(args);
    assert!(
        out.status.success(),
        "command {args:?} failed:\n{}{}",
        String::from_utf8_lossy(&out.stdout),
        String::from_utf8_lossy(&out.stderr)
    );
    out
}

fn sha256_hex(data: &[u8]) -> String {
    use sha2::Digest;
    hex::encode(sha2::Sha256::digest(data))
}

fn json_file(path: &Path) -> serde_json::Value {
    serde_json::from_str(&fs::read_to_string(path).unwrap()).unwrap()
}

#[test]
fn missing_config_is_a_usage_error() {
    let out = run(&["simulate"]);
    assert_eq!(out.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&out.stderr).contains("--config"));
}

#[test]
fn simulate_matches_golden_file_and_reruns_identically() {
    let cfg = configs().join("simulate_dense.json");
    let dir_a = tempfile::tempdir().unwrap();
    let dir_b = tempfile::tempdir().unwrap();
    for dir in [&dir_a, &dir_b] {
        run_ok(&[
            "simulate",
            "--config",
            cfg.to_str().unwrap(),
            "--out",
            dir.path().to_str().unwrap(),
        ]);
    }
    let a = fs::read(dir_a.path().join("counts.csv")).unwrap();
    let b = fs::read(dir_b.path().join("counts.csv")).unwrap();
    assert_eq!(a, b, "same seed must give byte-identical output");
    assert_eq!(sha256_hex(&a), GOLDEN_COUNTS_SHA256);

    let text = String::from_utf8(a).unwrap();
    let mut lines = text.lines();
    assert_eq!(lines.next(), Some("t,motif,value"));
    // Both motifs appear on one shared timeline with nondecreasing times.
    let mut last_t = -1.0f64;
    let (mut edges, mut triangles) = (0usize, 0usize);
    for line in lines {
        let cells: Vec<&str> = line.split(',').collect();
        assert_eq!(cells.len(), 3, "bad row {line:?}");
        let t: f64 = cells[0].parse().unwrap();
        assert!(t >= last_t);
        last_t = t;
        match cells[1] {
            "edge" => edges += 1,
            "triangle" => triangles += 1,
            other => panic!("unexpected motif {other:?}"),
        }
        let _: f64 = cells[2].parse().unwrap();
    }
    assert!(edges > 1 && edges == triangles);
}

#[test]
fn simulate_seed_override_changes_output() {
    let cfg = configs().join("simulate_dense.json");
    let dir_a = tempfile::tempdir().unwrap();
    let dir_b = tempfile::tempdir().unwrap();
    run_ok(&["simulate", "--config", cfg.to_str().unwrap(), "--out", dir_a.path().to_str().unwrap()]);
    run_ok(&[
        "simulate",
        "--config",
        cfg.to_str().unwrap(),
        "--seed",
        "43",
        "--out",
        dir_b.path().to_str().unwrap(),
    ]);
    let a = fs::read(dir_a.path().join("counts.csv")).unwrap();
    let b = fs::read(dir_b.path().join("counts.csv")).unwrap();
    assert_ne!(a, b);
}

#[test]
fn simulate_exports_sample_tensor_for_batch_runs() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("batch.json");
    fs::write(
        &cfg,
        r#"{"model": {"n": 60.0, "nu": 0.05},
            "profile": {"kind": "indicator"},
            "motifs": ["edge", "triangle"], "grid": [0.0, 0.5],
            "replications": 3, "seed": 5}"#,
    )
    .unwrap();
    run_ok(&["simulate", "--config", cfg.to_str().unwrap(), "--out", dir.path().to_str().unwrap()]);
    let text = fs::read_to_string(dir.path().join("samples.csv")).unwrap();
    let lines: Vec<&str> = text.lines().collect();
    assert_eq!(lines[0], "replication,motif,t,raw,normalized");
    // 3 replications x 2 motifs x 2 grid times.
    assert_eq!(lines.len(), 1 + 3 * 2 * 2);
    for line in &lines[1..] {
        let cells: Vec<&str> = line.split(',').collect();
        assert_eq!(cells.len(), 5);
        assert!(cells[3].parse::<f64>().unwrap().is_finite());
        assert!(cells[4].parse::<f64>().unwrap().is_finite());
    }
}

#[test]
fn theory_dense_reports_reference_constants() {
    let dir = tempfile::tempdir().unwrap();
    run_ok(&[
        "theory",
        "--config",
        configs().join("theory_dense.json").to_str().unwrap(),
        "--out",
        dir.path().to_str().unwrap(),
    ]);
    let report = json_file(&dir.path().join("theory.json"));
    assert_eq!(report["regime"], "dense");
    let motifs = report["motifs"].as_array().unwrap();
    let f_of = |name: &str| -> f64 {
        motifs
            .iter()
            .find(|m| m["name"] == name)
            .unwrap_or_else(|| panic!("{name} missing"))["f"]["value"]
            .as_f64()
            .unwrap()
    };
    assert!((f_of("edge") - 2.0).abs() < 1e-12);
    assert!((f_of("wedge") - 4.0).abs() < 1e-12);
    assert!((f_of("triangle") - 3.0).abs() < 1e-9);
    // The composed ratio limit vanishes identically in the dense regime.
    for row in report["ratio"].as_array().unwrap() {
        assert!(row["max_abs_value"].as_f64().unwrap() <= 1e-10);
    }
    assert_eq!(report["ladder"].as_array().unwrap().len(), 4);
}

#[test]
fn theory_sparse_ratio_scales_with_cubed_autocovariance() {
    let dir = tempfile::tempdir().unwrap();
    run_ok(&[
        "theory",
        "--config",
        configs().join("theory_sparse.json").to_str().unwrap(),
        "--out",
        dir.path().to_str().unwrap(),
    ]);
    let report = json_file(&dir.path().join("theory.json"));
    assert_eq!(report["regime"], "sparse");
    let mut seen = 0;
    for row in report["ratio"].as_array().unwrap() {
        // Dividing out the cubed activity autocovariance leaves a constant.
        assert!(row["max_scaled_spread"].as_f64().unwrap() <= 1e-9);
        let c = row["scaled_constant"].as_f64().unwrap();
        if row["numerator"] == "wedge" {
            assert!((c - 4.0 / 9.0).abs() < 1e-9);
        } else {
            assert!((c - 9.0 / 64.0).abs() < 1e-9);
        }
        seen += 1;
    }
    assert_eq!(seen, 2);
}

#[test]
fn verify_default_config_passes() {
    let dir = tempfile::tempdir().unwrap();
    let out = run_ok(&[
        "verify",
        "--config",
        configs().join("verify_default.json").to_str().unwrap(),
        "--out",
        dir.path().to_str().unwrap(),
    ]);
    let stdout = String::from_utf8_lossy(&out.stdout);
    assert!(stdout.contains("[ok]") && !stdout.contains("[FAIL]"));
    let report = json_file(&dir.path().join("verify_report.json"));
    assert!(report.as_array().unwrap().len() >= 3);
}

#[test]
fn verify_zero_tolerance_fails_and_lists_rows() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("zero.json");
    let text = fs::read_to_string(configs().join("verify_default.json"))
        .unwrap()
        .replace("\"mean_z\": 4.0", "\"mean_z\": 0.0")
        .replace("\"cov_rel\": 0.25", "\"cov_rel\": 0.0")
        .replace("\"oracle_rel\": 1e-9", "\"oracle_rel\": 0.0");
    fs::write(&cfg, text).unwrap();
    let out = run(&[
        "verify",
        "--config",
        cfg.to_str().unwrap(),
        "--out",
        dir.path().to_str().unwrap(),
    ]);
    assert_eq!(out.status.code(), Some(1));
    assert!(String::from_utf8_lossy(&out.stdout).contains("[FAIL]"));
}

#[test]
fn verify_diagrams_only_needs_no_simulation() {
    // replications is zero, so any attempt to simulate would error out.
    let dir = tempfile::tempdir().unwrap();
    let out = run_ok(&[
        "verify",
        "--config",
        configs().join("verify_diagrams_only.json").to_str().unwrap(),
        "--out",
        dir.path().to_str().unwrap(),
    ]);
    let stdout = String::from_utf8_lossy(&out.stdout);
    assert!(stdout.contains("oracles"));
    assert!(!stdout.contains("mean ["));
}

#[test]
fn diagrams_two_atom_model_matches_reference_values() {
    let dir = tempfile::tempdir().unwrap();
    run_ok(&[
        "diagrams",
        "--rows",
        "1,1",
        "--config",
        configs().join("diagrams_two_atom.json").to_str().unwrap(),
        "--out",
        dir.path().to_str().unwrap(),
    ]);
    let report = json_file(&dir.path().join("diagrams.json"));
    let results = report["results"].as_array().unwrap();
    let central = results.iter().find(|r| r["statistic"] == "central_moment").unwrap();
    assert_eq!(central["value"].as_f64().unwrap(), 19.0);
    assert_eq!(central["relative_delta"].as_f64().unwrap(), 0.0);
    assert_eq!(report["census"]["admissible"], 2);
}

#[test]
fn diagrams_random_model_agrees_with_oracles() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("model.json");
    fs::write(&cfg, r#"{"intensities": [0.5, 1.5, 0.7], "seed": 3}"#).unwrap();
    run_ok(&[
        "diagrams",
        "--rows",
        "2,2",
        "--config",
        cfg.to_str().unwrap(),
        "--out",
        dir.path().to_str().unwrap(),
    ]);
    let report = json_file(&dir.path().join("diagrams.json"));
    assert_eq!(report["census"]["admissible"], 7);
    assert_eq!(report["census"]["linked_no_singletons"], 2);
    for row in report["results"].as_array().unwrap() {
        assert!(row["relative_delta"].as_f64().unwrap() <= 1e-9);
    }
}

#[test]
fn diagrams_rejects_oversized_row_structures() {
    let dir = tempfile::tempdir().unwrap();
    let out = run(&[
        "diagrams",
        "--rows",
        "6,6,1",
        "--config",
        configs().join("diagrams_two_atom.json").to_str().unwrap(),
        "--out",
        dir.path().to_str().unwrap(),
    ]);
    assert_eq!(out.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&out.stderr).contains("row structure"));
}

#[test]
fn manifest_inventory_hashes_match_files_on_disk() {
    let dir = tempfile::tempdir().unwrap();
    run_ok(&[
        "theory",
        "--config",
        configs().join("theory_dense.json").to_str().unwrap(),
        "--out",
        dir.path().to_str().unwrap(),
    ]);
    let manifest = json_file(&dir.path().join("manifest.json"));
    assert_eq!(manifest["command"], "theory");
    // The config snapshot stored in the manifest is the exact file text.
    let original = fs::read_to_string(configs().join("theory_dense.json")).unwrap();
    assert_eq!(manifest["config_text"].as_str().unwrap(), original);
    let outputs = manifest["outputs"].as_array().unwrap();
    assert!(!outputs.is_empty());
    for entry in outputs {
        let data = fs::read(dir.path().join(entry["path"].as_str().unwrap())).unwrap();
        assert_eq!(sha256_hex(&data), entry["sha256"].as_str().unwrap());
        assert_eq!(data.len() as u64, entry["bytes"].as_u64().unwrap());
    }
}

//! End-to-end runs of the compiled binary: report contracts, determinism,
//! exit codes, and the environment overrides.

use std::path::Path;
use std::process::{Command, Output};

fn bin() -> Command {
    let mut c = Command::new(env!("CARGO_BIN_EXE_strichartz"));
    c.env_remove("STRICHARTZ_OUT_DIR");
    c.env_remove("STRICHARTZ_THREADS");
    c
}

fn run_ok(args: &[&str]) -> Output {
    let out = bin().args(args).output().expect("binary runs");
    assert!(
        out.status.success(),
        "command {args:?} failed:\n{}",
        String::from_utf8_lossy(&out.stderr)
    );
    out
}

fn read(path: &Path) -> String {
    std::fs::read_to_string(path).unwrap_or_else(|e| panic!("{}: {e}", path.display()))
}

#[test]
fn sweep_and_measure_emit_the_contract_columns() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("r");
    run_ok(&[
        "ratio-sweep",
        "--scenario",
        "rt-hyperbolic",
        "--N",
        "2,3",
        "--ensemble",
        "2",
        "--quick",
        "--out",
        out.to_str().unwrap(),
    ]);
    let csv = read(&out.join("ratio-sweep.csv"));
    assert!(csv.starts_with("N,ensembleMax,extremized,fitExponent\n"), "{csv}");

    run_ok(&["measure", "--set", "saddle-annulus", "--C0", "0", "--N", "8,16", "--out", out.to_str().unwrap()]);
    let csv = read(&out.join("measure.csv"));
    let mut lines = csv.lines();
    assert_eq!(lines.next(), Some("N,euclid,rz,maxSlice,impliedC"));
    for (line, n) in lines.zip([8.0f64, 16.0]) {
        let slice: f64 = line.split(',').nth(3).unwrap().parse().unwrap();
        assert_eq!(slice, 2.0 * n, "saddle slice must be exactly 2N");
    }
}

#[test]
fn identical_seed_and_config_reproduce_reports_byte_for_byte() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("c");
    let args = ["lemma-corpus", "--count", "5", "--seed", "7", "--out", out.to_str().unwrap()];
    run_ok(&args);
    let first_csv = read(&out.join("lemma-corpus.csv"));
    let first_meta = read(&out.join("lemma-corpus.meta.json"));
    run_ok(&args);
    assert_eq!(first_csv, read(&out.join("lemma-corpus.csv")));
    assert_eq!(first_meta, read(&out.join("lemma-corpus.meta.json")));

    // a different seed must actually change the corpus
    let other = dir.path().join("d");
    run_ok(&["lemma-corpus", "--count", "5", "--seed", "8", "--out", other.to_str().unwrap()]);
    assert_ne!(first_csv, read(&other.join("lemma-corpus.csv")));
}

#[test]
fn json_format_writes_one_document_with_metadata() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("j");
    run_ok(&[
        "measure",
        "--set",
        "hyperbolic-annulus",
        "--N",
        "8",
        "--format",
        "json",
        "--out",
        out.to_str().unwrap(),
    ]);
    assert!(!out.join("measure.csv").exists());
    assert!(!out.join("measure.meta.json").exists());
    let doc: serde_json::Value = serde_json::from_str(&read(&out.join("measure.json"))).unwrap();
    assert_eq!(doc["metadata"]["rng"], "chacha8");
    assert_eq!(doc["metadata"]["seed"], 7, "default seed");
    assert_eq!(doc["columns"][0], "N");
    assert_eq!(doc["rows"].as_array().unwrap().len(), 1);
    // the echoed config text parses back to the resolved run
    let text = doc["metadata"]["configText"].as_str().unwrap();
    assert!(text.contains("seed = 7"), "{text}");
}

#[test]
fn violated_check_bounds_exit_nonzero_with_a_failure_list() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("run.cfg");
    std::fs::write(&cfg, "[check]\nmax_implied_c = 0\n").unwrap();
    let out = dir.path().join("f");
    let res = bin()
        .args(["measure", "--set", "hyperbolic-annulus", "--N", "8"])
        .args(["--config", cfg.to_str().unwrap(), "--out", out.to_str().unwrap()])
        .output()
        .unwrap();
    assert_eq!(res.status.code(), Some(1));
    assert!(String::from_utf8_lossy(&res.stderr).contains("check failed"));
    let meta: serde_json::Value =
        serde_json::from_str(&read(&out.join("measure.meta.json"))).unwrap();
    let failures = meta["failures"].as_array().unwrap();
    assert_eq!(failures.len(), 1);

    // same config with a satisfiable bound passes
    std::fs::write(&cfg, "[check]\nmax_implied_c = 10\n").unwrap();
    run_ok(&[
        "measure",
        "--set",
        "hyperbolic-annulus",
        "--N",
        "8",
        "--config",
        cfg.to_str().unwrap(),
        "--out",
        out.to_str().unwrap(),
    ]);
}

#[test]
fn unknown_check_keys_are_config_errors() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("run.cfg");
    std::fs::write(&cfg, "[check]\nmax_implied_turnip = 1\n").unwrap();
    let res = bin()
        .args(["measure", "--set", "hyperbolic-annulus", "--N", "8"])
        .args(["--config", cfg.to_str().unwrap(), "--out", dir.path().to_str().unwrap()])
        .output()
        .unwrap();
    assert_eq!(res.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&res.stderr).contains("max_implied_turnip"));
}

#[test]
fn environment_overrides_the_output_directory_but_flags_win() {
    let dir = tempfile::tempdir().unwrap();
    let env_out = dir.path().join("from-env");
    let flag_out = dir.path().join("from-flag");

    let res = bin()
        .env("STRICHARTZ_OUT_DIR", &env_out)
        .args(["measure", "--set", "hyperbolic-annulus", "--N", "8"])
        .output()
        .unwrap();
    assert!(res.status.success());
    assert!(env_out.join("measure.csv").exists());

    let res = bin()
        .env("STRICHARTZ_OUT_DIR", &env_out)
        .env("STRICHARTZ_THREADS", "1")
        .args(["measure", "--set", "hyperbolic-annulus", "--N", "8", "--out", flag_out.to_str().unwrap()])
        .output()
        .unwrap();
    assert!(res.status.success());
    assert!(flag_out.join("measure.csv").exists());
}

#[test]
fn field_dumps_round_trip_between_commands() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("x");
    run_ok(&[
        "extremize",
        "--scenario",
        "rt-hyperbolic",
        "--N",
        "3",
        "--max-iter",
        "6",
        "--samples",
        "33",
        "--out",
        out.to_str().unwrap(),
    ]);
    let field_path = out.join("extremize-field.field");
    let field = strichartz_core::read_field(&field_path).expect("dump parses");
    assert!((field.l2_norm() - 1.0).abs() < 1e-12);

    // feed the dump back in as initial data for the linear flow
    run_ok(&[
        "evolve",
        "--in",
        field_path.to_str().unwrap(),
        "--t1",
        "0.25",
        "--out",
        out.to_str().unwrap(),
    ]);
    let meta: serde_json::Value = serde_json::from_str(&read(&out.join("evolve.meta.json"))).unwrap();
    assert!(meta["ratio"].as_f64().unwrap() > 0.5);
}

#[test]
fn nls_checkpoints_parse_and_tile_the_run() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("n");
    run_ok(&[
        "nls",
        "--N",
        "4",
        "--norm",
        "0.05",
        "--duration",
        "0.25",
        "--checkpoint",
        "16",
        "--out",
        out.to_str().unwrap(),
    ]);
    // 32 steps at dt = 1/128 over 0.25, dumps every 16
    let a = strichartz_core::read_field(&out.join("nls-checkpoint-000016.field")).unwrap();
    let b = strichartz_core::read_field(&out.join("nls-checkpoint-000032.field")).unwrap();
    let final_field = strichartz_core::read_field(&out.join("nls-final.field")).unwrap();
    assert_eq!(b.coef(), final_field.coef());
    assert!((a.l2_norm() - 0.05).abs() < 1e-6, "mass conserved at the checkpoint");

    let meta: serde_json::Value = serde_json::from_str(&read(&out.join("nls.meta.json"))).unwrap();
    assert!(meta["maxDrift"].as_f64().unwrap() < 1e-7);
    assert_eq!(meta["aborted"], serde_json::Value::Bool(false));
}

use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use serde_json::Value;

fn fixture(name: &str) -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("tests/fixtures").join(name)
}

fn corebudget(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_corebudget"))
        .args(args)
        .env_remove("COREBUDGET_THREADS")
        .output()
        .expect("binary runs")
}

fn stdout_json(out: &Output) -> Value {
    assert!(out.status.success(), "stderr: {}", String::from_utf8_lossy(&out.stderr));
    serde_json::from_slice(&out.stdout).expect("report is JSON")
}

fn stderr(out: &Output) -> String {
    String::from_utf8_lossy(&out.stderr).into_owned()
}

struct Blobs {
    emb: String,
    meta: String,
}

fn blobs() -> Blobs {
    Blobs {
        emb: fixture("blobs200.cbed").to_string_lossy().into_owned(),
        meta: fixture("blobs200.jsonl").to_string_lossy().into_owned(),
    }
}

fn select(extra: &[&str]) -> Output {
    let b = blobs();
    let mut args = vec!["select", "--embeddings", &b.emb, "--metadata", &b.meta];
    args.extend_from_slice(extra);
    corebudget(&args)
}

#[test]
fn select_returns_exactly_the_budget() {
    let report = stdout_json(&select(&["--budget", "20", "--clusters", "4", "--seed", "3"]));
    let ids = report["result"]["selected_ids"].as_array().unwrap();
    assert_eq!(ids.len(), 20);
    let quotas: u64 =
        report["result"]["quota_plan"]["quotas"].as_array().unwrap().iter().map(|q| q.as_u64().unwrap()).sum();
    assert_eq!(quotas, 20);
    assert_eq!(report["manifest"]["subcommand"], "select");
    assert_eq!(report["manifest"]["seed"], 3);
    assert_eq!(report["manifest"]["input_digests"].as_object().unwrap().len(), 2);
}

#[test]
fn select_writes_to_out_file() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("report.json");
    let run = select(&["--budget", "10", "--clusters", "4", "--out", out.to_str().unwrap()]);
    assert!(run.status.success(), "{}", stderr(&run));
    let report: Value = serde_json::from_str(&std::fs::read_to_string(&out).unwrap()).unwrap();
    assert_eq!(report["result"]["selected_ids"].as_array().unwrap().len(), 10);
}

#[test]
fn select_budget_larger_than_pool_is_a_validation_error() {
    let out = select(&["--budget", "500", "--clusters", "4"]);
    assert_eq!(out.status.code(), Some(2));
    assert!(stderr(&out).contains("budget"), "{}", stderr(&out));
}

#[test]
fn select_alpha_out_of_range_is_a_validation_error() {
    let out = select(&["--budget", "20", "--alpha", "1.5"]);
    assert_eq!(out.status.code(), Some(2));
    assert!(stderr(&out).contains("alpha"));
}

#[test]
fn select_flags_override_config_file() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("cfg.json");
    std::fs::write(&cfg, r#"{"budget": 30, "clusters": 4, "alpha": 0.2}"#).unwrap();
    let report = stdout_json(&select(&["--config", cfg.to_str().unwrap(), "--budget", "12"]));
    assert_eq!(report["result"]["selected_ids"].as_array().unwrap().len(), 12);
    assert_eq!(report["manifest"]["config"]["alpha"], 0.2);
}

#[test]
fn select_rejects_unknown_config_keys() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("cfg.json");
    std::fs::write(&cfg, r#"{"budget": 30, "bugdet": 4}"#).unwrap();
    assert_eq!(select(&["--config", cfg.to_str().unwrap()]).status.code(), Some(2));
}

#[test]
fn missing_input_file_is_a_validation_error() {
    let out = corebudget(&[
        "select",
        "--embeddings",
        "/nonexistent.cbed",
        "--metadata",
        "/nonexistent.jsonl",
        "--budget",
        "5",
    ]);
    assert_eq!(out.status.code(), Some(2));
}

#[test]
fn coverage_of_the_whole_set_is_zero() {
    let b = blobs();
    let dir = tempfile::tempdir().unwrap();
    let all = dir.path().join("all.txt");
    let ids: Vec<String> = (0..200).map(|i| format!("p{i:03}")).collect();
    std::fs::write(&all, ids.join("\n")).unwrap();
    let report = stdout_json(&corebudget(&[
        "coverage",
        "--embeddings",
        &b.emb,
        "--metadata",
        &b.meta,
        "--selected",
        all.to_str().unwrap(),
    ]));
    assert_eq!(report["coverage"]["selected"]["mean_radius"], 0.0);
    assert_eq!(report["coverage"]["selected"]["maxmin_radius"], 0.0);
}

#[test]
fn coverage_accepts_a_select_report() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("sel.json");
    assert!(select(&["--budget", "20", "--clusters", "4", "--out", out.to_str().unwrap()]).status.success());
    let b = blobs();
    let report = stdout_json(&corebudget(&[
        "coverage",
        "--embeddings",
        &b.emb,
        "--metadata",
        &b.meta,
        "--selected",
        out.to_str().unwrap(),
        "--budget",
        "20",
    ]));
    let sel = &report["coverage"]["selected"];
    let ff = &report["coverage"]["farthest_first"];
    assert_eq!(sel["ids"].as_array().unwrap().len(), 20);
    assert_eq!(ff["ids"].as_array().unwrap().len(), 20);
    assert!(sel["mean_radius"].as_f64().unwrap() > 0.0);
}

#[test]
fn coverage_unknown_id_is_a_validation_error() {
    let b = blobs();
    let dir = tempfile::tempdir().unwrap();
    let bad = dir.path().join("bad.json");
    std::fs::write(&bad, r#"["p000", "zzz"]"#).unwrap();
    let out =
        corebudget(&["coverage", "--embeddings", &b.emb, "--metadata", &b.meta, "--selected", bad.to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(2));
}

fn theory(extra: &[&str]) -> Output {
    let cfg = fixture("theory_params.json");
    let mut args = vec!["theory", "--config", cfg.to_str().unwrap()];
    args.extend_from_slice(extra);
    corebudget(&args)
}

#[test]
fn theory_point_report_satisfies_the_identity() {
    let report = stdout_json(&theory(&["--budget", "100", "--n", "5000"]));
    let t = &report["theory"];
    let b = &t["breakdown"];
    let f = |k: &str| b[k].as_f64().unwrap();
    let lhs = f("direct_bound_rhs") - f("bridge_bound_rhs");
    let rhs = f("delta_struct") + f("delta_sample") - f("delta_overhead");
    assert!((lhs - rhs).abs() < 1e-9);
    assert!((f("delta_adv") - rhs).abs() < 1e-12);
    assert_eq!(t["crossover_n0"], 947);
    assert_eq!(t["preconditions_hold"], true);
}

#[test]
fn theory_sweep_csv_is_monotone_with_one_crossover() {
    let out = theory(&["--budget", "100", "--sweep-n", "10:1e6", "--format", "csv"]);
    assert!(out.status.success(), "{}", stderr(&out));
    let text = String::from_utf8(out.stdout).unwrap();
    let mut lines = text.lines();
    assert!(lines.next().unwrap().starts_with("# {"));
    let body = lines.collect::<Vec<_>>().join("\n");
    let mut reader = csv::Reader::from_reader(body.as_bytes());
    let headers = reader.headers().unwrap().clone();
    let adv = headers.iter().position(|h| h == "delta_adv").unwrap();
    let cross = headers.iter().position(|h| h == "is_crossover").unwrap();
    let rows: Vec<csv::StringRecord> = reader.records().map(|r| r.unwrap()).collect();
    assert!(rows.len() > 10);
    let values: Vec<f64> = rows.iter().map(|r| r[adv].parse().unwrap()).collect();
    assert!(values.windows(2).all(|w| w[1] >= w[0]));
    assert_eq!(rows.iter().filter(|r| &r[cross] == "true").count(), 1);
}

#[test]
fn theory_csv_to_file_writes_manifest_sidecar() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("sweep.csv");
    let run = theory(&["--budget", "100", "--sweep-n", "10:1000", "--format", "csv", "--out", out.to_str().unwrap()]);
    assert!(run.status.success(), "{}", stderr(&run));
    assert!(std::fs::read_to_string(&out).unwrap().starts_with("n,budget,"));
    let sidecar = dir.path().join("sweep.csv.manifest.json");
    let manifest: Value = serde_json::from_str(&std::fs::read_to_string(sidecar).unwrap()).unwrap();
    assert_eq!(manifest["manifest"]["subcommand"], "theory");
}

#[test]
fn theory_malformed_config_is_a_validation_error() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("bad.json");
    std::fs::write(&cfg, "{ not json").unwrap();
    let out = corebudget(&["theory", "--config", cfg.to_str().unwrap(), "--budget", "10"]);
    assert_eq!(out.status.code(), Some(2));
}

#[test]
fn theory_out_of_range_parameter_is_a_validation_error() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("bad.json");
    let mut params: Value =
        serde_json::from_str(&std::fs::read_to_string(fixture("theory_params.json")).unwrap()).unwrap();
    params["delta"] = 1.5.into();
    std::fs::write(&cfg, params.to_string()).unwrap();
    let out = corebudget(&["theory", "--config", cfg.to_str().unwrap(), "--budget", "10"]);
    assert_eq!(out.status.code(), Some(2));
    assert!(stderr(&out).contains("delta"));
}

#[test]
fn simulate_emits_one_row_per_seed_cell_and_arm() {
    let grid = fixture("sim_grid_small.json");
    let out =
        corebudget(&["simulate", "--experiment", "data_scaling", "--seeds", "3", "--grid", grid.to_str().unwrap()]);
    assert!(out.status.success(), "{}", stderr(&out));
    let text = String::from_utf8(out.stdout).unwrap();
    let body: Vec<&str> = text.lines().filter(|l| !l.starts_with('#')).collect();
    assert!(body[0].starts_with("experiment,cell,budget,pool_size"));
    assert_eq!(body.len() - 1, 3 * 3 * 2);
}

#[test]
fn simulate_json_embeds_summary() {
    let grid = fixture("sim_grid_small.json");
    let report = stdout_json(&corebudget(&[
        "simulate",
        "--experiment",
        "data_scaling",
        "--seeds",
        "2",
        "--grid",
        grid.to_str().unwrap(),
        "--format",
        "json",
    ]));
    assert_eq!(report["manifest"]["subcommand"], "simulate");
    assert_eq!(report["table"]["rows"].as_array().unwrap().len(), 2 * 3 * 2);
    assert!(report["table"]["summary"]["gap_trend_spearman"].is_number());
}

#[test]
fn simulate_unknown_experiment_is_a_validation_error() {
    let out = corebudget(&["simulate", "--experiment", "nonsense", "--seeds", "1"]);
    assert_eq!(out.status.code(), Some(2));
}

#[test]
fn invalid_thread_count_is_a_validation_error() {
    let out = Command::new(env!("CARGO_BIN_EXE_corebudget"))
        .args(["theory", "--config", fixture("theory_params.json").to_str().unwrap(), "--budget", "10"])
        .env("COREBUDGET_THREADS", "zero")
        .output()
        .unwrap();
    assert_eq!(out.status.code(), Some(2));
}

#[test]
fn usage_errors_exit_two_and_help_exits_zero() {
    assert_eq!(corebudget(&[]).status.code(), Some(2));
    assert_eq!(corebudget(&["frobnicate"]).status.code(), Some(2));
    assert_eq!(corebudget(&["select", "--budget"]).status.code(), Some(2));
    assert_eq!(corebudget(&["--help"]).status.code(), Some(0));
    assert_eq!(corebudget(&["--version"]).status.code(), Some(0));
}

use std::fs;
use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use serde_json::Value;
use tempfile::TempDir;

fn dea(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_dea"))
        .args(args)
        .output()
        .expect("binary runs")
}

fn ok(args: &[&str]) -> Output {
    let out = dea(args);
    assert!(
        out.status.success(),
        "dea {args:?} failed: {}",
        String::from_utf8_lossy(&out.stderr)
    );
    out
}

fn repo_file(rel: &str) -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("../..").join(rel)
}

fn s(p: &Path) -> &str {
    p.to_str().unwrap()
}

fn read_csv(path: &Path) -> (Vec<String>, Vec<Vec<String>>) {
    let mut rdr = csv::Reader::from_path(path).unwrap();
    let headers = rdr.headers().unwrap().iter().map(str::to_string).collect();
    let rows = rdr
        .records()
        .map(|r| r.unwrap().iter().map(str::to_string).collect())
        .collect();
    (headers, rows)
}

fn column(path: &Path, name: &str) -> Vec<String> {
    let (headers, rows) = read_csv(path);
    let i = headers.iter().position(|h| h == name).unwrap_or_else(|| panic!("no column {name}"));
    rows.into_iter().map(|r| r[i].clone()).collect()
}

fn manifest(dir: &Path, command: &str) -> Value {
    let text = fs::read_to_string(dir.join(format!("{command}.manifest.json"))).unwrap();
    serde_json::from_str(&text).unwrap()
}

fn small_case(dir: &Path) -> (PathBuf, PathBuf) {
    let data = dir.join("three.csv");
    fs::write(&data, "id,x,y\nA,2,4\nB,3,3\nC,4,2\n").unwrap();
    let config = dir.join("three.json");
    fs::write(&config, r#"{"inputs":["x"],"outputs":["y"]}"#).unwrap();
    (data, config)
}

/// Eight units with the demo's role layout, small enough for quick solves.
fn activity_case(dir: &Path) -> (PathBuf, PathBuf) {
    let data = dir.join("eight.csv");
    let rows = [
        "U1,120,40,900,80,10,30,5",
        "U2,200,60,1500,100,25,60,9",
        "U3,90,30,500,90,5,20,2",
        "U4,150,80,1000,50,30,90,12",
        "U5,300,90,2500,200,20,70,8",
        "U6,110,25,800,40,12,45,7",
        "U7,250,70,1200,150,40,80,15",
        "U8,180,50,1400,60,8,35,4",
    ];
    fs::write(&data, format!("id,GE,IE,UGS,MS,DrS,PUB,PRJ\n{}\n", rows.join("\n"))).unwrap();
    (data, repo_file("data/universities.json"))
}

#[test]
fn ccr_three_units_has_an_efficient_one() {
    let tmp = TempDir::new().unwrap();
    let (data, config) = small_case(tmp.path());
    let out = tmp.path().join("out");
    ok(&["--out", s(&out), "ccr", "--data", s(&data), "--config", s(&config)]);
    let scores = column(&out.join("ccr_scores.csv"), "score");
    assert_eq!(scores.len(), 3);
    assert_eq!(scores, ["1.000000", "0.500000", "0.250000"]);
}

#[test]
fn missing_config_exits_two_naming_the_path() {
    let tmp = TempDir::new().unwrap();
    let (data, _) = small_case(tmp.path());
    let missing = tmp.path().join("nowhere.json");
    let out = dea(&["--out", s(&tmp.path().join("o")), "ccr", "--data", s(&data), "--config", s(&missing)]);
    assert_eq!(out.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&out.stderr).contains("nowhere.json"));
}

#[test]
fn malformed_config_exits_two() {
    let tmp = TempDir::new().unwrap();
    let (data, config) = small_case(tmp.path());
    fs::write(&config, r#"{"inputs":["x"],"outputs":["y"],"extra":1}"#).unwrap();
    let out = dea(&["--out", s(&tmp.path().join("o")), "ccr", "--data", s(&data), "--config", s(&config)]);
    assert_eq!(out.status.code(), Some(2));
}

#[test]
fn bad_data_exits_one() {
    let tmp = TempDir::new().unwrap();
    let (data, config) = small_case(tmp.path());
    fs::write(&data, "id,x,y\nA,-2,4\n").unwrap();
    let out = dea(&["--out", s(&tmp.path().join("o")), "ccr", "--data", s(&data), "--config", s(&config)]);
    assert_eq!(out.status.code(), Some(1));
}

#[test]
fn epsilon_is_recorded() {
    let tmp = TempDir::new().unwrap();
    let (data, config) = small_case(tmp.path());
    let out = tmp.path().join("out");
    ok(&["--epsilon", "1e-5", "--out", s(&out), "ccr", "--data", s(&data), "--config", s(&config)]);
    let m = manifest(&out, "ccr");
    assert_eq!(m["epsilon"].as_f64(), Some(1e-5));
    assert_eq!(m["inputs"].as_array().unwrap().len(), 2);
    assert_eq!(m["outputs"][0]["path"], "ccr_scores.csv");
}

#[test]
fn json_output_has_the_same_scores() {
    let tmp = TempDir::new().unwrap();
    let (data, config) = small_case(tmp.path());
    let out = tmp.path().join("out");
    ok(&["--format", "json", "--out", s(&out), "ccr", "--data", s(&data), "--config", s(&config)]);
    let rows: Vec<Value> = serde_json::from_str(&fs::read_to_string(out.join("ccr_scores.json")).unwrap()).unwrap();
    let scores: Vec<f64> = rows.iter().map(|r| r["score"].as_f64().unwrap()).collect();
    assert_eq!(scores, [1.0, 0.5, 0.25]);
}

#[test]
fn paper_style_marks_efficient_units() {
    let tmp = TempDir::new().unwrap();
    let (data, config) = small_case(tmp.path());
    let out = tmp.path().join("out");
    ok(&["--paper-style", "--out", s(&out), "ccr", "--data", s(&data), "--config", s(&config)]);
    assert_eq!(column(&out.join("ccr_scores.csv"), "score"), ["1.00*", "0.50", "0.25"]);
}

#[test]
fn scenario_one_keeps_equal_priorities() {
    let tmp = TempDir::new().unwrap();
    let (data, config) = activity_case(tmp.path());
    let out = tmp.path().join("out");
    ok(&["--out", s(&out), "madea", "--scenario", "s1", "--data", s(&data), "--config", s(&config)]);
    let path = out.join("madea_s1_scores.csv");
    let (headers, rows) = read_csv(&path);
    assert_eq!(
        &headers[..9],
        ["id", "total", "teaching", "research", "alpha_teaching", "alpha_research", "lambda_GE", "lambda_IE", "beta_DrS"]
    );
    assert_eq!(rows.len(), 8);
    assert!(column(&path, "alpha_teaching").iter().all(|a| a == "0.500000"));
    let summary = out.join("madea_s1_summary.csv");
    assert_eq!(column(&summary, "statistic"), ["mean", "std_dev", "efficient_count"]);
}

#[test]
fn scenario_two_keeps_shares_in_box() {
    let tmp = TempDir::new().unwrap();
    let (data, config) = activity_case(tmp.path());
    let out = tmp.path().join("out");
    ok(&["--out", s(&out), "madea", "--scenario", "s2", "--data", s(&data), "--config", s(&config)]);
    let path = out.join("madea_s2_scores.csv");
    for name in ["lambda_GE", "lambda_IE", "beta_DrS"] {
        for v in column(&path, name) {
            let v: f64 = v.parse().unwrap();
            assert!((0.3..=0.9).contains(&v), "{name} = {v}");
        }
    }
    for (t, a) in column(&path, "alpha_teaching").iter().zip(column(&path, "alpha_research")) {
        let sum: f64 = t.parse::<f64>().unwrap() + a.parse::<f64>().unwrap();
        assert!((sum - 1.0).abs() <= 2e-6);
    }
}

#[test]
fn alpha_flag_rejected_for_scenario_two() {
    let tmp = TempDir::new().unwrap();
    let (data, config) = activity_case(tmp.path());
    let out = dea(&[
        "--out",
        s(&tmp.path().join("o")),
        "madea",
        "--scenario",
        "s2",
        "--alpha",
        "0.3",
        "--data",
        s(&data),
        "--config",
        s(&config),
    ]);
    assert_eq!(out.status.code(), Some(1));
}

#[test]
fn seqex_writes_a_table_and_trace_per_mu() {
    let tmp = TempDir::new().unwrap();
    let out = tmp.path().join("out");
    let data = repo_file("data/universities_demo.csv");
    let config = repo_file("data/universities.json");
    ok(&["--out", s(&out), "seqex", "--mu", "0.2,0.5,0.8", "--data", s(&data), "--config", s(&config)]);
    for mu in ["0.2", "0.5", "0.8"] {
        let scores = out.join(format!("seqex_mu{mu}_scores.csv"));
        assert_eq!(column(&scores, "id").len(), 45);
        let trace: Value =
            serde_json::from_str(&fs::read_to_string(out.join(format!("seqex_mu{mu}_trace.json"))).unwrap()).unwrap();
        let rounds = trace["rounds"].as_array().unwrap().len();
        assert!((1..=45).contains(&rounds));
    }
    let m = manifest(&out, "seqex");
    assert_eq!(m["mu"].as_array().unwrap().len(), 3);
    assert_eq!(m["outputs"].as_array().unwrap().len(), 6);
}

#[test]
fn computed_mu_is_recorded() {
    let tmp = TempDir::new().unwrap();
    let out = tmp.path().join("out");
    let data = repo_file("data/universities_demo.csv");
    let config = repo_file("data/universities.json");
    ok(&["--out", s(&out), "seqex", "--mu", "computed", "--data", s(&data), "--config", s(&config)]);
    let m = manifest(&out, "seqex");
    let rounds = m["mu"][0]["computed"].as_array().unwrap();
    assert!(!rounds.is_empty());
    let first = &rounds[0];
    let (mu, mean, max) = (
        first["mu"].as_f64().unwrap(),
        first["mean_distance"].as_f64().unwrap(),
        first["max_distance"].as_f64().unwrap(),
    );
    assert!((mu - mean / max).abs() < 1e-12);
    assert!(out.join("seqex_computed_scores.csv").exists());
}

#[test]
fn compare_self_and_reversal() {
    let tmp = TempDir::new().unwrap();
    let a = tmp.path().join("a.csv");
    let b = tmp.path().join("b.csv");
    fs::write(&a, "id,score\nA,0.9\nB,0.8\nC,0.7\nD,0.6\n").unwrap();
    fs::write(&b, "id,score\nA,0.6\nB,0.7\nC,0.8\nD,0.9\n").unwrap();
    let out = tmp.path().join("out");
    ok(&["--out", s(&out), "compare", "--baseline", s(&a), s(&a), s(&b)]);
    let path = out.join("compare.csv");
    assert_eq!(column(&path, "method"), ["a", "b"]);
    assert_eq!(column(&path, "a"), ["0.000000", "1.000000"]);
}

#[test]
fn compare_rejects_mismatched_ids() {
    let tmp = TempDir::new().unwrap();
    let a = tmp.path().join("a.csv");
    let b = tmp.path().join("b.csv");
    fs::write(&a, "id,score\nA,0.9\nB,0.8\n").unwrap();
    fs::write(&b, "id,score\nA,0.6\nC,0.7\n").unwrap();
    let out = dea(&["--out", s(&tmp.path().join("o")), "compare", s(&a), s(&b)]);
    assert_eq!(out.status.code(), Some(1));
}

#[test]
fn report_lists_every_variable() {
    let tmp = TempDir::new().unwrap();
    let out = tmp.path().join("out");
    let data = repo_file("data/universities_demo.csv");
    let config = repo_file("data/universities.json");
    ok(&["--out", s(&out), "report", "--data", s(&data), "--config", s(&config)]);
    assert_eq!(
        column(&out.join("report_stats.csv"), "variable"),
        ["GE", "IE", "UGS", "MS", "DrS", "PUB", "PRJ"]
    );
    let corr = out.join("report_correlations.csv");
    assert_eq!(column(&corr, "GE")[0], "1.000000");
}

#[test]
fn summarize_reproduces_column_arithmetic() {
    let tmp = TempDir::new().unwrap();
    let out = tmp.path().join("out");
    let fixture = repo_file("crates/core/tests/fixtures/reference_scores.csv");
    ok(&["--out", s(&out), "summarize", "--scores", s(&fixture), "--prefix", "s1_"]);
    let path = out.join("reference_scores_summary.csv");
    let (_, rows) = read_csv(&fixture);
    let (headers, _) = read_csv(&fixture);
    let i = headers.iter().position(|h| h == "s1_total").unwrap();
    let mean = rows.iter().map(|r| r[i].parse::<f64>().unwrap()).sum::<f64>() / rows.len() as f64;
    assert_eq!(column(&path, "total")[0], format!("{mean:.6}"));
}

#[test]
fn replay_reproduces_outputs() {
    let tmp = TempDir::new().unwrap();
    let (data, config) = activity_case(tmp.path());
    let first = tmp.path().join("first");
    let second = tmp.path().join("second");
    ok(&["--seed", "7", "--out", s(&first), "madea", "--scenario", "s1", "--data", s(&data), "--config", s(&config)]);
    ok(&["--out", s(&second), "replay", s(&first.join("madea_s1.manifest.json"))]);
    for name in ["madea_s1_scores.csv", "madea_s1_summary.csv", "madea_s1.manifest.json"] {
        assert_eq!(fs::read(first.join(name)).unwrap(), fs::read(second.join(name)).unwrap(), "{name}");
    }
}

#[test]
fn replay_detects_changed_input() {
    let tmp = TempDir::new().unwrap();
    let (data, config) = small_case(tmp.path());
    let first = tmp.path().join("first");
    ok(&["--out", s(&first), "ccr", "--data", s(&data), "--config", s(&config)]);
    fs::write(&data, "id,x,y\nA,2,4\nB,3,3\nC,4,3\n").unwrap();
    let out = dea(&["--out", s(&tmp.path().join("again")), "replay", s(&first.join("ccr.manifest.json"))]);
    assert_eq!(out.status.code(), Some(1));
    assert!(String::from_utf8_lossy(&out.stderr).contains("changed"));
}

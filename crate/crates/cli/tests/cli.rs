use std::fs;
use std::path::Path;
use std::process::{Command, Output};

fn run(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_autologistic")).args(args).output().unwrap()
}

fn ok(args: &[&str]) -> String {
    let out = run(args);
    assert!(out.status.success(), "{args:?}: {}", String::from_utf8_lossy(&out.stderr));
    String::from_utf8(out.stdout).unwrap()
}

fn p(path: &Path) -> &str {
    path.to_str().unwrap()
}

#[test]
fn simulate_then_fit_is_reproducible() {
    let tmp = tempfile::tempdir().unwrap();
    let data = tmp.path().join("data");
    ok(&["simulate", "--preset", "model1", "--seed", "7", "--out", p(&data)]);
    for f in ["field.csv", "covariates.csv", "metadata.json", "run_config.json"] {
        assert!(data.join(f).exists(), "{f}");
    }
    let a = tmp.path().join("a");
    let b = tmp.path().join("b");
    let table = ok(&["fit", "--data", p(&data), "--out", p(&a)]);
    ok(&["fit", "--data", p(&data), "--out", p(&b)]);
    assert!(table.contains("rho1") && table.contains("intercept"));
    let fa = fs::read(a.join("fit.json")).unwrap();
    assert_eq!(fa, fs::read(b.join("fit.json")).unwrap());
    let v: serde_json::Value = serde_json::from_slice(&fa).unwrap();
    assert_eq!(v["fit"]["names"].as_array().unwrap().len(), 4);
    assert!(v["bootstrap"].is_null());
    let cfg: serde_json::Value = serde_json::from_slice(&fs::read(a.join("run_config.json")).unwrap()).unwrap();
    assert_eq!(cfg["command"], "fit");
}

#[test]
fn fit_with_bootstrap_from_config() {
    let tmp = tempfile::tempdir().unwrap();
    let data = tmp.path().join("data");
    let cfg = tmp.path().join("sim.json");
    fs::write(&cfg, r#"{"shape": {"rows": 8, "cols": 8}, "horizon": 5}"#).unwrap();
    ok(&["simulate", "--config", p(&cfg), "--out", p(&data)]);
    let cfg = tmp.path().join("fit.json");
    fs::write(
        &cfg,
        format!(r#"{{"data": {{"dir": "{}"}}, "bootstrap": {{"replicates": 5}}}}"#, p(&data)),
    )
    .unwrap();
    let out = tmp.path().join("out");
    ok(&["fit", "--config", p(&cfg), "--out", p(&out)]);
    let v: serde_json::Value = serde_json::from_slice(&fs::read(out.join("fit.json")).unwrap()).unwrap();
    assert_eq!(v["bootstrap"]["replicates_ok"], 5);
    assert!(v["fit"]["cov_bootstrap"].is_array());
}

#[test]
fn select_finds_the_generating_neighborhood() {
    let tmp = tempfile::tempdir().unwrap();
    let data = tmp.path().join("data");
    ok(&["simulate", "--preset", "selection", "--seed", "3", "--out", p(&data)]);
    let out = tmp.path().join("sel");
    let stdout = ok(&["select", "--data", p(&data), "--out", p(&out)]);
    assert!(stdout.contains("winner rect(2,1)"), "{stdout}");
    let csv = fs::read_to_string(out.join("selection.csv")).unwrap();
    assert_eq!(csv.lines().count(), 7);
    assert!(out.join("selection.json").exists());
}

#[test]
fn study_writes_every_row() {
    let tmp = tempfile::tempdir().unwrap();
    let out = tmp.path().join("study");
    ok(&["study", "--preset", "model1", "--replicates", "2", "--out", p(&out)]);
    let series = fs::read_to_string(out.join("study_series.csv")).unwrap();
    assert_eq!(series.lines().count(), 1 + 3 * 9 * 51 * 2);
    let bands = fs::read_to_string(out.join("study_bands.csv")).unwrap();
    assert_eq!(bands.lines().count(), 1 + 3 * 9 * 51);
}

#[test]
fn surrogate_from_config() {
    let tmp = tempfile::tempdir().unwrap();
    let cfg = tmp.path().join("s.json");
    fs::write(&cfg, r#"{"shape": {"rows": 6, "cols": 10, "row_spacing": 1.5}, "years": 4}"#).unwrap();
    let out = tmp.path().join("vine");
    ok(&["surrogate", "--config", p(&cfg), "--seed", "5", "--out", p(&out)]);
    let cov = fs::read_to_string(out.join("covariates.csv")).unwrap();
    assert!(cov.starts_with("t,row,col,past_neighbors"));
    assert_eq!(fs::read_to_string(out.join("field.csv")).unwrap().lines().count(), 1 + 4 * 60);
}

#[test]
fn exit_codes_follow_the_failure_class() {
    let tmp = tempfile::tempdir().unwrap();
    let bad = tmp.path().join("bad.json");
    fs::write(&bad, "{ not json").unwrap();
    let out = run(&["simulate", "--config", p(&bad), "--out", p(&tmp.path().join("x"))]);
    assert_eq!(out.status.code(), Some(2));
    let out = run(&["simulate", "--preset", "nope", "--out", p(&tmp.path().join("x"))]);
    assert_eq!(out.status.code(), Some(2));

    let field = tmp.path().join("field.csv");
    fs::write(&field, "t,row,col,z\n0,0,0,0\n0,0,1,2\n1,0,0,1\n1,0,1,0\n").unwrap();
    let cfg = tmp.path().join("fit.json");
    fs::write(&cfg, format!(r#"{{"data": {{"field": "{}"}}}}"#, p(&field))).unwrap();
    let out = run(&["fit", "--config", p(&cfg), "--out", p(&tmp.path().join("y"))]);
    assert_eq!(out.status.code(), Some(3));
    let err = String::from_utf8_lossy(&out.stderr);
    assert!(err.contains("line 3") && err.contains("not binary"), "{err}");

    let out = run(&["fit", "--data", p(&tmp.path().join("missing")), "--out", p(&tmp.path().join("z"))]);
    assert_eq!(out.status.code(), Some(3));
}

use std::path::Path;
use std::process::{Command, Output};

use serde_json::Value;

fn fanforge(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_fanforge")).args(args).output().expect("binary runs")
}

fn code(o: &Output) -> i32 {
    o.status.code().expect("exited normally")
}

fn stdout(o: &Output) -> String {
    String::from_utf8(o.stdout.clone()).unwrap()
}

fn json_file(p: &Path) -> Value {
    serde_json::from_str(&std::fs::read_to_string(p).unwrap()).unwrap()
}

fn p(path: &Path) -> &str {
    path.to_str().unwrap()
}

#[test]
fn classify_exit_codes() {
    let o = fanforge(&["classify", "--set", "pt(1/2)"]);
    assert_eq!(code(&o), 2);
    assert!(stdout(&o).starts_with("infeasible"));
    let o = fanforge(&["classify", "--set", "pt(1)"]);
    assert_eq!((code(&o), stdout(&o).trim()), (0, "feasible CantorFan"));
    let o = fanforge(&["classify", "--set", "iv(0,1)"]);
    assert_eq!((code(&o), stdout(&o).trim()), (0, "feasible LelekFan"));
    let o = fanforge(&["classify", "--set", "pt(1/2"]);
    assert_eq!(code(&o), 1);
    assert!(String::from_utf8_lossy(&o.stderr).contains("parsing"));
}

#[test]
fn build_is_deterministic_and_counts_blades() {
    let dir = tempfile::tempdir().unwrap();
    let (a, b) = (dir.path().join("a.json"), dir.path().join("b.json"));
    for out in [&a, &b] {
        let o = fanforge(&["build", "--set", "pt(0)+pt(1/2)+pt(3/4)", "--depth", "2", "--branch", "6", "--out", p(out)]);
        assert_eq!(code(&o), 0);
    }
    assert_eq!(std::fs::read(&a).unwrap(), std::fs::read(&b).unwrap());
    assert_eq!(json_file(&a)["blades"].as_array().unwrap().len(), 43);

    let prod = dir.path().join("p.json");
    let o = fanforge(&["build", "--set", "pt(0)+pt(1)", "--depth", "2", "--branch", "4", "--cantor-depth", "2", "--out", p(&prod)]);
    assert_eq!(code(&o), 0);
    let v = json_file(&prod);
    assert_eq!(v["provenance"], "product");
    assert_eq!(v["blades"].as_array().unwrap().len(), 5 * 4);

    assert_eq!(code(&fanforge(&["build", "--set", "pt(1/2)"])), 2);
}

#[test]
fn verify_passes_on_deep_build_and_fails_on_shallow() {
    let dir = tempfile::tempdir().unwrap();
    let comb = dir.path().join("x3.json");
    let report = dir.path().join("report.json");
    fanforge(&["build", "--set", "pt(0)+pt(1/2)+pt(3/4)", "--depth", "5", "--branch", "12", "--out", p(&comb)]);
    let o = fanforge(&["verify", "--in", p(&comb), "--eps", "1/27", "--out", p(&report)]);
    assert_eq!(code(&o), 0);
    let v = json_file(&report);
    assert_eq!(v["summary"]["pass"], true);
    assert_eq!(v["eps"], "1/27");
    assert!(v["blades"][0]["gap_upper"].as_str().unwrap().contains('.'));

    let shallow = dir.path().join("shallow.json");
    fanforge(&["build", "--set", "pt(0)+pt(1/2)+pt(3/4)", "--depth", "2", "--branch", "6", "--out", p(&shallow)]);
    assert_eq!(code(&fanforge(&["verify", "--in", p(&shallow), "--eps", "1/27"])), 2);
}

#[test]
fn verify_reports_schema_path() {
    let dir = tempfile::tempdir().unwrap();
    let comb = dir.path().join("c.json");
    fanforge(&["build", "--set", "pt(0)+pt(1/2)", "--depth", "1", "--branch", "2", "--out", p(&comb)]);
    let text = std::fs::read_to_string(&comb).unwrap().replacen("\"x\": \"0\"", "\"x\": \"zero\"", 1);
    std::fs::write(&comb, text).unwrap();
    let o = fanforge(&["verify", "--in", p(&comb)]);
    assert_eq!(code(&o), 1);
    assert!(String::from_utf8_lossy(&o.stderr).contains("$.blades[0].x"));
}

#[test]
fn partition_odd_m1_sees_five_labels() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("part.json");
    let o = fanforge(&["partition", "--scheme", "odd", "--m", "1", "--samples", "200", "--out", p(&out)]);
    assert_eq!(code(&o), 0);
    let v = json_file(&out);
    assert_eq!(v["observed_classes"], 5);
    assert_eq!(v["summary"]["pass"], true);
    for w in v["witnesses"].as_array().unwrap() {
        assert_eq!(w["preserves_labels"], true);
        assert!(w["recipe"].as_array().unwrap().iter().all(|d| d.get("kind").is_some() && d.get("window").is_some()));
    }
}

#[test]
fn equiv_answers() {
    let o = fanforge(&["equiv", "--set1", "pt(0)+pt(1/2)+pt(1)", "--set2", "pt(0)+pt(1/3)+pt(1)"]);
    assert_eq!(code(&o), 0);
    let v: Value = serde_json::from_str(&stdout(&o)).unwrap();
    assert_eq!(v["answer"], "yes");
    assert_eq!(code(&fanforge(&["equiv", "--set1", "pt(0)", "--set2", "pt(1)"])), 2);
}

#[test]
fn spatial_model_has_nonsmooth_witness() {
    let dir = tempfile::tempdir().unwrap();
    let model = dir.path().join("s.json");
    let report = dir.path().join("smooth.json");
    let o = fanforge(&["nonsmooth-demo", "--m", "4", "--depth", "3", "--branch", "3", "--out", p(&model)]);
    assert_eq!(code(&o), 0);
    assert!(stdout(&o).contains("converges: false"));
    let o = fanforge(&["smooth", "--in", p(&model), "--samples", "2", "--out", p(&report)]);
    assert_eq!(code(&o), 2);
    let v = json_file(&report);
    assert!(v["summary"]["max_witness_gap"].as_f64().unwrap() >= 0.2);
}

#[test]
fn smooth_comb_converges() {
    let dir = tempfile::tempdir().unwrap();
    let comb = dir.path().join("x3.json");
    fanforge(&["build", "--set", "pt(0)+pt(1/2)+pt(3/4)", "--depth", "3", "--branch", "6", "--out", p(&comb)]);
    let o = fanforge(&["smooth", "--in", p(&comb), "--samples", "20"]);
    assert_eq!(code(&o), 0);
    let v: Value = serde_json::from_str(&stdout(&o)).unwrap();
    assert_eq!(v["summary"]["all_converge"], true);
}

#[test]
fn render_styles() {
    let dir = tempfile::tempdir().unwrap();
    let comb = dir.path().join("cantor.json");
    fanforge(&["build", "--set", "pt(1)", "--depth", "3", "--branch", "2", "--out", p(&comb)]);
    let o = fanforge(&["render", "--in", p(&comb), "--style", "fan"]);
    assert_eq!(code(&o), 0);
    let svg = stdout(&o);
    assert_eq!(svg.matches("<path class=\"blade\" d=\"M 0.500000000000 1.000000000000 L").count(), 8);
    assert_eq!(code(&fanforge(&["render", "--in", p(&comb), "--style", "spatial"])), 1);
}

#[test]
fn config_file_is_overridden_by_flags() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("run.cfg");
    std::fs::write(&cfg, "depth=2\nbranch=2\n").unwrap();
    let o = fanforge(&["build", "--set", "pt(0)+pt(1/2)", "--config", p(&cfg)]);
    let v: Value = serde_json::from_str(&stdout(&o)).unwrap();
    assert_eq!(v["blades"].as_array().unwrap().len(), 1 + 2 + 4);
    let o = fanforge(&["build", "--set", "pt(0)+pt(1/2)", "--config", p(&cfg), "--branch", "3"]);
    let v: Value = serde_json::from_str(&stdout(&o)).unwrap();
    assert_eq!(v["blades"].as_array().unwrap().len(), 1 + 3 + 9);
}

mod common;

use std::process::{Command, Output};

use common::fixture;

fn run(args: &[&str], out: &std::path::Path) -> Output {
    Command::new(env!("CARGO_BIN_EXE_gridstrength"))
        .args(args)
        .arg("--out")
        .arg(out)
        .env_remove("GRIDSTRENGTH_OUT")
        .output()
        .unwrap()
}

fn path(name: &str) -> String {
    fixture(name).display().to_string()
}

#[test]
fn malformed_case_exits_with_schema_path() {
    let dir = tempfile::tempdir().unwrap();
    let bad = dir.path().join("bad.json");
    let text = std::fs::read_to_string(fixture("two_bus.json")).unwrap().replace("\"x\": 0.1", "\"x\": \"big\"");
    std::fs::write(&bad, text).unwrap();
    let o = run(&["powerflow", "--case", bad.to_str().unwrap()], dir.path());
    assert_eq!(o.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&o.stderr).contains("branches[0].x"));
}

#[test]
fn missing_bus_is_a_usage_error() {
    let dir = tempfile::tempdir().unwrap();
    let o = run(&["strength", "--case", &path("two_bus.json")], dir.path());
    assert_eq!(o.status.code(), Some(2));
    let o = run(&["validate", "--case", &path("two_bus.json"), "--bus", "7"], dir.path());
    assert_eq!(o.status.code(), Some(2));
}

#[test]
fn missing_file_is_io_error() {
    let dir = tempfile::tempdir().unwrap();
    let o = run(&["powerflow", "--case", "/nonexistent/case.json"], dir.path());
    assert_eq!(o.status.code(), Some(1));
}

#[test]
fn two_bus_strength_has_no_first_order() {
    let dir = tempfile::tempdir().unwrap();
    let o = run(&["strength", "--case", &path("two_bus.json"), "--bus", "2"], dir.path());
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    let mut r = csv::Reader::from_path(dir.path().join("indicators.csv")).unwrap();
    let mut seen = 0;
    for rec in r.records() {
        let rec = rec.unwrap();
        if &rec[1] == "first" {
            seen += 1;
            for i in 2..6 {
                assert_eq!(rec[i].parse::<f64>().unwrap(), 0.0);
            }
        }
    }
    assert_eq!(seen, 2);
    let j: serde_json::Value =
        serde_json::from_slice(&std::fs::read(dir.path().join("strength_matrices.json")).unwrap()).unwrap();
    assert_eq!(j["s"]["dim"], 4);
    assert!(dir.path().join("normalized.csv").exists());
}

#[test]
fn validate_reproduces_the_reference_experiment() {
    let dir = tempfile::tempdir().unwrap();
    let o = run(
        &["validate", "--case", &path("ieee39.json"), "--bus", "15", "--t-end", "1.1"],
        dir.path(),
    );
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    assert!(String::from_utf8_lossy(&o.stdout).contains("dtheta"));
    let j: serde_json::Value =
        serde_json::from_slice(&std::fs::read(dir.path().join("validation.json")).unwrap()).unwrap();
    for row in j["jumps"].as_array().unwrap() {
        assert!(row["error"].as_f64().unwrap().abs() <= 1e-6, "{row}");
    }
}

#[test]
fn config_file_and_environment() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("run.json");
    std::fs::write(
        &cfg,
        format!(r#"{{"case": "{}", "bus": 3, "t_end": 0.5, "t_event": 0.1, "dt": 0.002}}"#, path("four_bus.json")),
    )
    .unwrap();
    let out = dir.path().join("env_out");
    let o = Command::new(env!("CARGO_BIN_EXE_gridstrength"))
        .args(["simulate", "--config", cfg.to_str().unwrap(), "--t-end", "0.2"])
        .env("GRIDSTRENGTH_OUT", &out)
        .output()
        .unwrap();
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    let mut r = csv::Reader::from_path(out.join("trajectory.csv")).unwrap();
    let times: Vec<f64> = r.records().map(|x| x.unwrap()[0].parse().unwrap()).collect();
    // the flag wins over the file; the event adds a duplicate time stamp
    assert!((times.last().unwrap() - 0.2).abs() < 1e-12);
    assert_eq!(times.len(), 102);

    std::fs::write(&cfg, r#"{"bogus": 1}"#).unwrap();
    let o = run(&["report", "--config", cfg.to_str().unwrap()], dir.path());
    assert_eq!(o.status.code(), Some(2));
}

#[test]
fn report_writes_tables() {
    let dir = tempfile::tempdir().unwrap();
    let o = run(
        &["report", "--case", &path("four_bus_gfl.json"), "--gfl-blocks", "exact", "--emit-plot-data"],
        dir.path(),
    );
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    let mut r = csv::Reader::from_path(dir.path().join("report.csv")).unwrap();
    assert_eq!(r.headers().unwrap().len(), 13);
    assert_eq!(r.records().count(), 5);
    assert!(dir.path().join("report_raw.csv").exists());
    assert!(dir.path().join("report.json").exists());
}

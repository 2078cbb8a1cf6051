use std::fs;
use std::path::{Path, PathBuf};
use std::process::{Command, Output};

fn vtg(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_vtg")).args(args).output().expect("binary runs")
}

fn corpus(name: &str) -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("../core/tests/data/gcode").join(name)
}

fn small_config(dir: &Path) -> PathBuf {
    let path = dir.join("small.toml");
    fs::write(&path, "[scene]\nlayers = 2\nradius = 10.0\n").unwrap();
    path
}

#[test]
fn check_prints_the_resolved_configuration() {
    let out = vtg(&["check"]);
    assert_eq!(out.status.code(), Some(0));
    let text = String::from_utf8(out.stdout).unwrap();
    assert!(text.contains("limited by NormalAcceleration"));
    assert!(text.contains("[limits]"));
}

#[test]
fn unknown_subcommand_is_a_usage_error() {
    assert_eq!(vtg(&["bogus"]).status.code(), Some(1));
}

#[test]
fn unknown_config_key_is_a_parse_error() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("bad.toml");
    fs::write(&cfg, "[limits]\nv_max = 0.05\nspeed = 3\n").unwrap();
    let out = vtg(&["--config", cfg.to_str().unwrap(), "check"]);
    assert_eq!(out.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&out.stderr).contains("speed"));
}

#[test]
fn unsupported_gcode_is_a_parse_error_with_its_line() {
    let dir = tempfile::tempdir().unwrap();
    let input = dir.path().join("arc.gcode");
    fs::write(&input, "G1 X0 Y0 Z0.2 F1200\nG2 X1 Y1 I1 J0\n").unwrap();
    let out = vtg(&["ingest", "--input", input.to_str().unwrap(), "--out", dir.path().to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&out.stderr).contains("line 2"));
}

#[test]
fn infeasible_curvature_is_a_numeric_error() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("tight.toml");
    fs::write(&cfg, "[scene]\nlayers = 1\nradius = 10.0\n\n[limits]\na_n = 1e-4\n").unwrap();
    let out = vtg(&["--config", cfg.to_str().unwrap(), "vtg", "--out", dir.path().to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(3), "{}", String::from_utf8_lossy(&out.stderr));
}

#[test]
fn ingest_writes_toolpath_json() {
    let dir = tempfile::tempdir().unwrap();
    let out = vtg(&[
        "ingest",
        "--input",
        corpus("01_square_absolute.gcode").to_str().unwrap(),
        "--out",
        dir.path().to_str().unwrap(),
    ]);
    assert_eq!(out.status.code(), Some(0));
    let text = fs::read_to_string(dir.path().join("toolpath.json")).unwrap();
    let summary: serde_json::Value = serde_json::from_slice(&out.stdout).unwrap();
    assert!(summary["points"].as_u64().unwrap() > 0);
    assert!(text.contains("\"layers\""));
}

#[test]
fn metrics_prints_json() {
    let out = vtg(&["metrics", "--input", corpus("01_square_absolute.gcode").to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(0));
    let m: serde_json::Value = serde_json::from_slice(&out.stdout).unwrap();
    assert!(m["l_total"].as_f64().unwrap() > 0.0);
}

#[test]
fn energy_breakdown_adds_up() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = small_config(dir.path());
    let out = vtg(&["--config", cfg.to_str().unwrap(), "energy"]);
    assert_eq!(out.status.code(), Some(0));
    let v: serde_json::Value = serde_json::from_slice(&out.stdout).unwrap();
    let e = &v["energy_j"];
    let parts = e["servo"].as_f64().unwrap() + e["fuse"].as_f64().unwrap() + e["aux"].as_f64().unwrap();
    assert_eq!(e["total"].as_f64().unwrap(), parts);
}

#[test]
fn report_writes_every_artifact() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = small_config(dir.path());
    let bundle = dir.path().join("bundle");
    let out =
        vtg(&["--config", cfg.to_str().unwrap(), "report", "--pattern", "line", "--out", bundle.to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(0), "{}", String::from_utf8_lossy(&out.stderr));
    for f in vtg_core::pipeline::ARTIFACTS {
        assert!(bundle.join(f).is_file(), "{f}");
    }
    let stdout = String::from_utf8(out.stdout).unwrap();
    assert!(stdout.starts_with("table,key,metric,before,after,ratio_percent"));
}

#[test]
fn scene_and_simulate_write_outputs() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = small_config(dir.path());
    let out =
        vtg(&["--config", cfg.to_str().unwrap(), "scene", "--pattern", "grid", "--out", dir.path().to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(0));
    assert!(dir.path().join("scene_grid.json").is_file());

    let out =
        vtg(&["--config", cfg.to_str().unwrap(), "simulate", "--disable-vtg", "--out", dir.path().to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(0), "{}", String::from_utf8_lossy(&out.stderr));
    let trajectory = fs::read_to_string(dir.path().join("trajectory.csv")).unwrap();
    assert!(trajectory.lines().nth(1).unwrap().starts_with("before,0,"));
}

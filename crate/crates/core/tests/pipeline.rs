use std::fs;
use std::time::Duration;

use vtg_core::io::PipelineConfig;
use vtg_core::pipeline::{run_pipeline, write_bundle, ErrorKind, ARTIFACTS};
use vtg_core::scenes::{InfillPattern, SceneShape};

fn small_scene() -> PipelineConfig {
    let mut cfg = PipelineConfig::default();
    cfg.scene.layers = 2;
    cfg.scene.radius = 10.0;
    cfg
}

#[test]
fn report_has_every_table_row() {
    let out = run_pipeline(&small_scene(), None).unwrap();
    let keys = [
        "l_total",
        "n_total",
        "l_infill",
        "n_infill",
        "n_turning",
        "mean_chord_error",
        "max_deviation",
        "min_deviation",
        "mean_deviation",
        "total_energy",
        "material",
        "carbon_emission",
        "servo_energy",
        "rms_acceleration",
    ];
    for key in keys {
        assert!(out.report.comparison.row(key).is_some(), "missing {key}");
    }
    assert_eq!(out.report.layers, 2);
    assert_eq!(out.report.relative_rates.len(), 2);
    let turning = out.report.comparison.row("n_turning").unwrap();
    assert!(turning.after <= turning.before);
}

#[test]
fn disabled_resampling_compares_a_run_with_itself() {
    let mut cfg = small_scene();
    cfg.disable_vtg = true;
    let out = run_pipeline(&cfg, None).unwrap();
    assert!(!out.report.vtg_enabled);
    assert!(out.report.comparison.is_zero());
    assert!(out.report.relative_rates.iter().all(|r| *r == Some(0.0)));
}

#[test]
fn report_json_is_deterministic() {
    let cfg = small_scene();
    let a = run_pipeline(&cfg, None).unwrap().to_json();
    let b = run_pipeline(&cfg, None).unwrap().to_json();
    assert_eq!(a, b);
}

#[test]
fn bundle_contains_every_artifact() {
    let out = run_pipeline(&small_scene(), None).unwrap();
    let dir = tempfile::tempdir().unwrap();
    let notices = write_bundle(&out, dir.path(), Duration::from_millis(5)).unwrap();
    assert!(notices.is_empty(), "{notices:?}");
    for f in ARTIFACTS {
        assert!(dir.path().join(f).is_file(), "{f}");
    }
    let meta: serde_json::Value =
        serde_json::from_str(&fs::read_to_string(dir.path().join("run_meta.json")).unwrap()).unwrap();
    assert_eq!(meta["complete"], true);
    let lengths = fs::read_to_string(dir.path().join("layered_length.csv")).unwrap();
    for p in ["line", "grid", "concentric"] {
        assert!(lengths.lines().any(|l| l.starts_with(p)), "{p} missing from layered_length.csv");
    }
}

#[test]
fn w16_scene_runs() {
    let mut cfg = PipelineConfig::default();
    cfg.scene.shape = SceneShape::W16;
    cfg.scene.pattern = InfillPattern::Line;
    cfg.scene.heights = vec![50.0];
    cfg.scene.spacing = 10.0;
    let out = run_pipeline(&cfg, None).unwrap();
    assert_eq!(out.report.layers, 1);
    assert!(out.after.report.duration_s > 0.0);
}

#[test]
fn gcode_input_runs() {
    let path = std::path::Path::new(env!("CARGO_MANIFEST_DIR")).join("tests/data/gcode/01_square_absolute.gcode");
    let out = run_pipeline(&PipelineConfig::default(), Some(&path)).unwrap();
    assert!(out.report.layered_length.iter().all(|l| l.pattern == "input"));
    assert!(out.report.after.metrics.n_turning <= out.report.before.metrics.n_turning);
}

#[test]
fn unreadable_input_is_an_io_error() {
    let err = run_pipeline(&PipelineConfig::default(), Some(std::path::Path::new("/nonexistent/x.gcode"))).unwrap_err();
    assert_eq!(err.kind, ErrorKind::Io);
}

#[test]
fn example_config_lists_the_defaults() {
    let path = std::path::Path::new(env!("CARGO_MANIFEST_DIR")).join("../../docs/config.example.toml");
    let cfg = vtg_core::io::load_config(&path).unwrap();
    assert_eq!(cfg, PipelineConfig::default());
}

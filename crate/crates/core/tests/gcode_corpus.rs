mod common;

use vtg_core::io::{gcode_to_toolpath, GcodeError};
use vtg_core::metrics::Role;

#[test]
fn corpus_matches_snapshots() {
    assert!(common::corpus().len() >= 20);
    let problems = common::check_snapshots();
    assert!(problems.is_empty(), "{problems:#?}");
}

#[test]
fn parsing_is_deterministic() {
    for file in common::corpus() {
        assert_eq!(common::render(&file), common::render(&file));
    }
}

fn load(name: &str) -> vtg_core::metrics::Toolpath {
    let text = std::fs::read_to_string(common::data_dir().join("gcode").join(name)).unwrap();
    gcode_to_toolpath(&text).unwrap()
}

#[test]
fn absolute_and_relative_squares_agree() {
    let key = |name: &str| -> Vec<_> { load(name).flatten().iter().map(|p| (p.position, p.role, p.layer)).collect() };
    assert_eq!(key("01_square_absolute.gcode"), key("02_square_relative.gcode"));
}

#[test]
fn detected_extrusion_modes_agree() {
    let rel = load("03_auto_relative.gcode").flatten();
    let abs = load("04_auto_absolute.gcode").flatten();
    assert!(rel[1..].iter().all(|p| p.role == Role::Infill));
    assert!(abs[1..].iter().all(|p| p.role == Role::Infill));
}

#[test]
fn layer_rules() {
    assert_eq!(load("05_layer_comments.gcode").layers.len(), 2);
    assert_eq!(load("06_z_hop.gcode").layers.len(), 2);
    assert_eq!(load("21_spiral_layers.gcode").layers.len(), 4);
}

#[test]
fn empty_and_comment_only_files() {
    assert!(load("15_empty.gcode").layers.is_empty());
    assert!(load("16_comments_only.gcode").layers.is_empty());
}

#[test]
fn retraction_does_not_extrude() {
    let flat = load("18_retractions.gcode").flatten();
    let roles: Vec<Role> = flat.iter().map(|p| p.role).collect();
    assert_eq!(roles, vec![Role::Travel, Role::Infill, Role::Travel, Role::Infill]);
}

#[test]
fn errors_carry_locations() {
    let err = gcode_to_toolpath("G0 X0 Y0 Z0\nG1 X1 Y2 E0.1\nG3 X1 Y1 I1 J0").unwrap_err();
    assert_eq!(err.line(), 3);
    let err = gcode_to_toolpath("G0 X0 Y0 Z0\nG1 X1 Y-- E1").unwrap_err();
    assert_eq!(err, GcodeError::MalformedNumber { line: 2, column: 8, text: "--".into() });
    let err = gcode_to_toolpath("G0 X0 Y0 Z0 (open").unwrap_err();
    assert_eq!(err, GcodeError::UnterminatedComment { line: 1, column: 13 });
    let err = gcode_to_toolpath("G1 X1 Y1").unwrap_err();
    assert!(matches!(err, GcodeError::UnknownPosition { line: 1, .. }));
    let err = gcode_to_toolpath("G20\nG0 X0 Y0 Z0").unwrap_err();
    assert!(matches!(err, GcodeError::UnsupportedCommand { line: 1, .. }));
}

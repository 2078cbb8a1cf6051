use std::fs;
use std::path::{Path, PathBuf};

use vtg_core::io::gcode_to_toolpath;

pub fn data_dir() -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("tests/data")
}

pub fn corpus() -> Vec<PathBuf> {
    let mut files: Vec<PathBuf> = fs::read_dir(data_dir().join("gcode"))
        .expect("corpus directory")
        .map(|e| e.unwrap().path())
        .filter(|p| p.extension().is_some_and(|e| e == "gcode"))
        .collect();
    files.sort();
    files
}

pub fn snapshot_path(gcode: &Path) -> PathBuf {
    let stem = gcode.file_stem().unwrap().to_string_lossy();
    data_dir().join("snapshots").join(format!("{stem}.json"))
}

/// Rendered toolpath JSON of one corpus file.
pub fn render(gcode: &Path) -> Result<String, String> {
    let text = fs::read_to_string(gcode).map_err(|e| e.to_string())?;
    let tp = gcode_to_toolpath(&text).map_err(|e| e.to_string())?;
    Ok(tp.to_json() + "\n")
}

/// Compare every corpus file against its stored snapshot, rewriting the
/// snapshots instead when `UPDATE_SNAPSHOTS` is set.
pub fn check_snapshots() -> Vec<String> {
    let update = std::env::var_os("UPDATE_SNAPSHOTS").is_some();
    let mut problems = Vec::new();
    for file in corpus() {
        let name = file.file_name().unwrap().to_string_lossy().to_string();
        let rendered = match render(&file) {
            Ok(r) => r,
            Err(e) => {
                problems.push(format!("{name}: {e}"));
                continue;
            }
        };
        let snap = snapshot_path(&file);
        if update {
            fs::write(&snap, &rendered).unwrap();
            continue;
        }
        match fs::read_to_string(&snap) {
            Ok(stored) if stored == rendered => {}
            Ok(_) => problems.push(format!("{name}: output differs from snapshot")),
            Err(_) => problems.push(format!("{name}: snapshot missing")),
        }
    }
    problems
}

use std::fs;
use std::path::Path;
use std::time::{Duration, SystemTime, UNIX_EPOCH};

use serde_json::json;

use super::{ErrorKind, LayeredLength, PipelineError, PipelineOutput, Stage};
use crate::dynamics::PsdSpectrum;

/// Every file a complete run writes.
pub const ARTIFACTS: [&str; 8] = [
    "report.json",
    "tables.csv",
    "psd.csv",
    "psd_before.csv",
    "layers.csv",
    "layered_length.csv",
    "trajectory.csv",
    "run_meta.json",
];

#[derive(Debug, Clone, PartialEq)]
pub struct LayerRow {
    pub layer: usize,
    /// Per-axis RMS table acceleration, m/s^2.
    pub rms: Option<[f64; 3]>,
    pub relative_rate: Option<f64>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct TrajectoryRow {
    pub run: &'static str,
    pub time: f64,
    pub reference: [f64; 3],
    pub table: [f64; 3],
    pub acceleration: [f64; 3],
}

/// Plot-ready sections; missing ones are skipped when emitting.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct PlotData {
    pub psd: Option<PsdSpectrum>,
    pub psd_before: Option<PsdSpectrum>,
    pub layers: Option<Vec<LayerRow>>,
    pub layered_length: Option<Vec<LayeredLength>>,
    pub trajectory: Option<Vec<TrajectoryRow>>,
}

fn io_err(path: &Path, e: impl std::fmt::Display) -> PipelineError {
    PipelineError::new(Stage::Emit, ErrorKind::Io, format!("{}: {e}", path.display()))
}

fn write_csv<I>(path: &Path, header: &[&str], rows: I) -> Result<(), PipelineError>
where
    I: IntoIterator<Item = Vec<String>>,
{
    let mut w = csv::Writer::from_path(path).map_err(|e| io_err(path, e))?;
    w.write_record(header).map_err(|e| io_err(path, e))?;
    for row in rows {
        w.write_record(&row).map_err(|e| io_err(path, e))?;
    }
    w.flush().map_err(|e| io_err(path, e))
}

fn opt(v: Option<f64>) -> String {
    v.map_or_else(|| "undefined".to_string(), |x| x.to_string())
}

fn psd_rows(p: &PsdSpectrum) -> impl Iterator<Item = Vec<String>> + '_ {
    p.frequencies.iter().zip(&p.power).map(|(f, v)| vec![f.to_string(), v.to_string()])
}

/// Write one CSV per available section into `dir`. Returns a notice for
/// each section that was skipped.
pub fn emit_plot_data(data: &PlotData, dir: &Path) -> Result<Vec<String>, PipelineError> {
    let mut notices = Vec::new();
    let mut skipped = |file: &str, what: &str| notices.push(format!("{file} skipped: no {what} data"));
    let need_dir = data.psd.is_some()
        || data.psd_before.is_some()
        || data.layers.is_some()
        || data.layered_length.is_some()
        || data.trajectory.is_some();
    if need_dir {
        fs::create_dir_all(dir).map_err(|e| io_err(dir, e))?;
    }

    for (file, spectrum) in [("psd.csv", &data.psd), ("psd_before.csv", &data.psd_before)] {
        match spectrum {
            Some(p) => write_csv(&dir.join(file), &["frequency_hz", "power"], psd_rows(p))?,
            None => skipped(file, "PSD"),
        }
    }
    match &data.layers {
        Some(rows) => write_csv(
            &dir.join("layers.csv"),
            &["layer", "rms_x", "rms_y", "rms_z", "relative_rate"],
            rows.iter().map(|r| {
                let rms = |a: usize| r.rms.map_or_else(String::new, |v| v[a].to_string());
                vec![r.layer.to_string(), rms(0), rms(1), rms(2), opt(r.relative_rate)]
            }),
        )?,
        None => skipped("layers.csv", "layered amplitude"),
    }
    match &data.layered_length {
        Some(rows) => write_csv(
            &dir.join("layered_length.csv"),
            &["pattern", "layer", "infill_mm", "total_mm"],
            rows.iter()
                .map(|r| vec![r.pattern.clone(), r.layer.to_string(), r.infill_mm.to_string(), r.total_mm.to_string()]),
        )?,
        None => skipped("layered_length.csv", "layered length"),
    }
    match &data.trajectory {
        Some(rows) => write_csv(
            &dir.join("trajectory.csv"),
            &[
                "run",
                "time_s",
                "ref_x_mm",
                "ref_y_mm",
                "ref_z_mm",
                "table_x_mm",
                "table_y_mm",
                "table_z_mm",
                "acc_x",
                "acc_y",
                "acc_z",
            ],
            rows.iter().map(|r| {
                let mut v = vec![r.run.to_string(), r.time.to_string()];
                v.extend(r.reference.iter().chain(&r.table).chain(&r.acceleration).map(f64::to_string));
                v
            }),
        )?,
        None => skipped("trajectory.csv", "trajectory"),
    }
    Ok(notices)
}

/// Write the report, the comparison table, every plot CSV and a metadata
/// sidecar holding the wall-clock details kept out of `report.json`.
pub fn write_bundle(out: &PipelineOutput, dir: &Path, elapsed: Duration) -> Result<Vec<String>, PipelineError> {
    fs::create_dir_all(dir).map_err(|e| io_err(dir, e))?;
    let report = dir.join("report.json");
    fs::write(&report, out.to_json() + "\n").map_err(|e| io_err(&report, e))?;
    let tables = dir.join("tables.csv");
    let csv = out.report.comparison.to_csv().map_err(|e| PipelineError::new(Stage::Emit, ErrorKind::Io, e))?;
    fs::write(&tables, csv).map_err(|e| io_err(&tables, e))?;
    let notices = emit_plot_data(&out.plot_data(), dir)?;
    let finished = SystemTime::now().duration_since(UNIX_EPOCH).map(|d| d.as_secs()).unwrap_or(0);
    let meta = json!({
        "tool_version": env!("CARGO_PKG_VERSION"),
        "finished_unix_s": finished,
        "elapsed_s": elapsed.as_secs_f64(),
        "complete": notices.is_empty(),
        "notices": notices,
    });
    let meta_path = dir.join("run_meta.json");
    fs::write(&meta_path, serde_json::to_string_pretty(&meta).expect("json") + "\n")
        .map_err(|e| io_err(&meta_path, e))?;
    Ok(notices)
}

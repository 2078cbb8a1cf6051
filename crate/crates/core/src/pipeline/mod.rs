//! End-to-end run: ingest, resample, schedule, simulate both the raw and
//! the resampled toolpath, then measure and compare them.

mod emit;
mod motion;

use std::fmt;
use std::path::Path;

use nalgebra::DVector;
use rayon::prelude::*;
use serde::Serialize;
use thiserror::Error;

use crate::dynamics::{
    assemble_matrices, derive_lumped_params, layered_amplitude, relative_rates, resample_uniform, simulate,
    trajectory_deviation, welch_psd, Excitation, LayerAmplitude, Peak, PsdSpectrum, ReferenceSignal, ServoGains,
    StateTrajectory, TABLE,
};
use crate::energy::{carbon_emission, servo_energy, total_energy, EnergyBreakdown};
use crate::geometry::{dedup_points, fit_curve, FitMode, NurbsCurve, Point3};
use crate::io::{gcode_to_toolpath, PipelineConfig};
use crate::metrics::{
    compare, path_metrics, ComparisonReport, DeviationStats, EnergyStats, Layer, PathMetrics, PathSegment, Role,
    RunSummary, TaggedPoint, Toolpath,
};
use crate::scenes::{build_scene, InfillPattern, SceneConfig};
use crate::vtg::{compute_kcr, generate_path, schedule_feedrate_from, Boundary, KcrDiagnostics, KinematicLimits};

pub use emit::{emit_plot_data, write_bundle, LayerRow, PlotData, TrajectoryRow, ARTIFACTS};
pub use motion::{MotionPlan, MotionSegment};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Stage {
    Config,
    Ingest,
    Fit,
    Vtg,
    Schedule,
    Simulate,
    Metrics,
    Energy,
    Emit,
}

impl fmt::Display for Stage {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let s = match self {
            Stage::Config => "config",
            Stage::Ingest => "ingest",
            Stage::Fit => "fit",
            Stage::Vtg => "vtg",
            Stage::Schedule => "schedule",
            Stage::Simulate => "simulate",
            Stage::Metrics => "metrics",
            Stage::Energy => "energy",
            Stage::Emit => "emit",
        };
        f.write_str(s)
    }
}

/// Broad failure class, used for process exit codes.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ErrorKind {
    Usage,
    Parse,
    Numeric,
    Io,
}

impl ErrorKind {
    pub fn exit_code(self) -> i32 {
        match self {
            ErrorKind::Usage | ErrorKind::Io => 1,
            ErrorKind::Parse => 2,
            ErrorKind::Numeric => 3,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Error)]
#[error("{stage} stage{}: {message}", layer.map(|l| format!(" (layer {l})")).unwrap_or_default())]
pub struct PipelineError {
    pub stage: Stage,
    pub layer: Option<usize>,
    pub kind: ErrorKind,
    pub message: String,
}

impl PipelineError {
    pub fn new(stage: Stage, kind: ErrorKind, message: impl fmt::Display) -> Self {
        Self { stage, layer: None, kind, message: message.to_string() }
    }

    pub fn in_layer(mut self, layer: usize) -> Self {
        self.layer = Some(layer);
        self
    }
}

/// Read a toolpath from G-code, native JSON (`.json`) or a scene
/// description (`.toml`). The scene config is returned when there is one.
pub fn load_input(path: &Path) -> Result<(Toolpath, Option<SceneConfig>, Vec<String>), PipelineError> {
    let text = std::fs::read_to_string(path)
        .map_err(|e| PipelineError::new(Stage::Ingest, ErrorKind::Io, format!("{}: {e}", path.display())))?;
    let parse = |msg: String| PipelineError::new(Stage::Ingest, ErrorKind::Parse, format!("{}: {msg}", path.display()));
    match path.extension().and_then(|e| e.to_str()).map(str::to_ascii_lowercase).as_deref() {
        Some("json") => Ok((Toolpath::from_json(&text).map_err(|e| parse(e.to_string()))?, None, Vec::new())),
        Some("toml") => {
            let scene: SceneConfig = toml::from_str(&text).map_err(|e| parse(e.to_string()))?;
            let (tp, warnings) =
                build_scene(&scene).map_err(|e| PipelineError::new(Stage::Ingest, ErrorKind::Usage, e))?;
            Ok((tp, Some(scene), warnings))
        }
        _ => Ok((gcode_to_toolpath(&text).map_err(|e| parse(e.to_string()))?, None, Vec::new())),
    }
}

/// Raw execution: straight moves at constant feed.
pub fn raw_plan(path: &[TaggedPoint], cfg: &PipelineConfig) -> MotionPlan {
    let v_cap = cfg.limits.v_max * 1e3;
    MotionPlan::constant_feed(path, cfg.raw_feed.unwrap_or(v_cap), v_cap)
}

enum JobKind {
    Extrude(Role),
    Travel,
}

struct Job {
    kind: JobKind,
    layer: usize,
    feed: Option<f64>,
    points: Vec<Point3>,
}

/// Split the flattened path into continuous extrusion polylines and single
/// travel moves.
fn build_jobs(path: &[TaggedPoint]) -> Vec<Job> {
    let mut jobs: Vec<Job> = Vec::new();
    for i in 1..path.len() {
        let (prev, p) = (&path[i - 1], &path[i]);
        if p.role.is_extrusion() {
            if let Some(Job { kind: JobKind::Extrude(r), layer, feed, points }) = jobs.last_mut() {
                if *r == p.role && *layer == p.layer && *feed == p.feed && points.last() == Some(&prev.position) {
                    points.push(p.position);
                    continue;
                }
            }
            jobs.push(Job {
                kind: JobKind::Extrude(p.role),
                layer: p.layer,
                feed: p.feed,
                points: vec![prev.position, p.position],
            });
        } else {
            jobs.push(Job {
                kind: JobKind::Travel,
                layer: p.layer,
                feed: p.feed,
                points: vec![prev.position, p.position],
            });
        }
    }
    jobs
}

struct Piece {
    role: Role,
    layer: usize,
    feed: Option<f64>,
    points: Vec<Point3>,
    /// mm/s.
    speeds: Vec<f64>,
}

fn plan_job(job: &Job, cfg: &PipelineConfig) -> Result<Option<Piece>, PipelineError> {
    let numeric =
        |stage: Stage, e: &dyn fmt::Display| PipelineError::new(stage, ErrorKind::Numeric, e).in_layer(job.layer);
    let mut limits: KinematicLimits = cfg.limits;
    if let Some(f) = job.feed {
        limits.v_max = limits.v_max.min(f * 1e-3);
    }
    let (pts, _) = dedup_points(&job.points);
    if pts.len() < 2 {
        return Ok(None);
    }
    let (curve, role) = match job.kind {
        JobKind::Travel => (NurbsCurve::line(pts[0], pts[pts.len() - 1]), Role::Travel),
        JobKind::Extrude(role) => {
            let degree = cfg.fit.degree.min(pts.len() - 1);
            let mode = if pts.len() <= cfg.fit.max_control_points {
                FitMode::Interpolate
            } else {
                FitMode::Approximate { control_points: cfg.fit.max_control_points }
            };
            let fitted = fit_curve(&pts, degree, mode).map_err(|e| numeric(Stage::Fit, &e))?;
            (fitted.curve, role)
        }
    };
    let path = generate_path(&curve, &cfg.vtg, &limits).map_err(|e| numeric(Stage::Vtg, &e))?;
    let mut points = path.points;
    let mut curvature = path.curvature;
    if points.len() == 2 {
        // A rest-to-rest move needs an interior point to reach a non-zero speed.
        points.insert(1, (points[0] + points[1]) * 0.5);
        curvature.insert(1, 0.5 * (curvature[0] + curvature[1]));
    }
    let feeds = schedule_feedrate_from(&points, &curvature, &limits, Boundary::Speed(0.0), Boundary::Speed(0.0));
    if feeds.len() != points.len() || feeds[1..feeds.len() - 1].iter().any(|v| !(*v > 0.0)) {
        return Err(numeric(Stage::Schedule, &"feed schedule has a stationary interior point"));
    }
    Ok(Some(Piece { role, layer: job.layer, feed: job.feed, points, speeds: feeds.iter().map(|v| v * 1e3).collect() }))
}

/// Fit and resample every extrusion polyline, straighten travel moves, and
/// schedule each piece from rest to rest. Pieces are planned in parallel.
pub fn resample_toolpath(
    path: &[TaggedPoint],
    layers: &[Layer],
    cfg: &PipelineConfig,
) -> Result<(Toolpath, MotionPlan), PipelineError> {
    let jobs = build_jobs(path);
    let pieces: Vec<Option<Piece>> = jobs.par_iter().map(|j| plan_job(j, cfg)).collect::<Result<_, _>>()?;
    let mut out_layers: Vec<Layer> = layers.iter().map(|l| Layer { z: l.z, paths: Vec::new() }).collect();
    let start = path.first().map_or_else(Point3::zeros, |p| p.position);
    let mut plan = MotionPlan { start, segments: Vec::new() };
    for piece in pieces.into_iter().flatten() {
        for k in 1..piece.points.len() {
            plan.segments.push(MotionSegment {
                from: piece.points[k - 1],
                to: piece.points[k],
                v_start: piece.speeds[k - 1],
                v_end: piece.speeds[k],
                role: piece.role,
                layer: piece.layer,
            });
        }
        out_layers[piece.layer - 1].paths.push(PathSegment::new(piece.role, piece.points, piece.feed));
    }
    Ok((Toolpath { units: "mm".into(), layers: out_layers }, plan))
}

/// Measured results of executing one toolpath.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RunReport {
    pub duration_s: f64,
    pub extrusion_time_s: f64,
    pub extrusion_length_mm: f64,
    pub metrics: PathMetrics,
    pub deviation_mm: DeviationStats,
    pub energy_j: EnergyBreakdown,
    pub material_kg: f64,
    pub carbon_kg: f64,
    pub rms_acceleration: f64,
    pub layers: Vec<Option<LayerAmplitude>>,
    pub psd_peaks: Vec<Peak>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct RunOutput {
    pub toolpath: Toolpath,
    pub plan: MotionPlan,
    pub dt: f64,
    /// Commanded position every `dt`, mm.
    pub reference: Vec<Point3>,
    /// Simulated table position, mm.
    pub table: Vec<Point3>,
    /// Table acceleration per axis, m/s^2.
    pub acceleration: [Vec<f64>; 3],
    pub psd: Option<PsdSpectrum>,
    pub report: RunReport,
    pub summary: RunSummary,
}

fn simulate_axes(reference: &[Point3], cfg: &PipelineConfig) -> Result<Vec<StateTrajectory>, PipelineError> {
    let dt = cfg.dt();
    let err = |e: &dyn fmt::Display| PipelineError::new(Stage::Simulate, ErrorKind::Numeric, e);
    let params = derive_lumped_params(&cfg.machine).map_err(|e| err(&e))?;
    let sys = assemble_matrices(&params);
    let gains = ServoGains::with_damping_ratio(cfg.servo.kp, params.m_4, cfg.servo.damping_ratio);
    let origin = reference[0];
    let duration = (reference.len() - 1) as f64 * dt;
    let zeros = DVector::zeros(sys.ndof());
    (0..3)
        .into_par_iter()
        .map(|axis| {
            let positions = reference.iter().map(|p| (p[axis] - origin[axis]) * 1e-3).collect();
            let signal = ReferenceSignal::from_positions(dt, positions);
            simulate(&sys, &Excitation::Servo { gains, reference: &signal }, &zeros, &zeros, dt, duration)
                .map_err(|e| err(&e))
        })
        .collect()
}

/// Simulate `plan` on the three servo axes and measure the result.
pub fn execute_run(
    toolpath: Toolpath,
    plan: MotionPlan,
    cfg: &PipelineConfig,
    warnings: &mut Vec<String>,
) -> Result<RunOutput, PipelineError> {
    if plan.segments.is_empty() {
        return Err(PipelineError::new(Stage::Ingest, ErrorKind::Usage, "toolpath contains no motion"));
    }
    if !plan.is_finite() {
        return Err(PipelineError::new(Stage::Schedule, ErrorKind::Numeric, "a move has zero speed at both ends"));
    }
    let dt = cfg.dt();
    let settle = cfg.servo.settle;
    let reference = plan.sample(dt, settle);
    let axes = simulate_axes(&reference, cfg)?;
    let origin = reference[0];
    let table: Vec<Point3> =
        (0..reference.len()).map(|i| origin + Point3::from_fn(|a, _| axes[a].q(i)[TABLE] * 1e3)).collect();
    let acceleration = [axes[0].acceleration(TABLE), axes[1].acceleration(TABLE), axes[2].acceleration(TABLE)];

    let deviation = trajectory_deviation(&reference, &table)
        .map_err(|e| PipelineError::new(Stage::Metrics, ErrorKind::Numeric, e))?;
    let layer_count = toolpath.layers.len();
    let layers = layered_amplitude(&acceleration, dt, &plan.layer_boundaries(layer_count, settle));

    let resampled = resample_uniform(&acceleration[0], 1.0 / dt, cfg.psd.sample_rate);
    let psd = match welch_psd(&resampled, cfg.psd.sample_rate, &cfg.psd.welch()) {
        Ok(p) => Some(p),
        Err(e) => {
            warnings.push(format!("PSD skipped: {e}"));
            None
        }
    };

    let energy_err = |e: &dyn fmt::Display| PipelineError::new(Stage::Energy, ErrorKind::Numeric, e);
    let servo = servo_energy(&axes.iter().collect::<Vec<_>>());
    let e = &cfg.energy;
    let breakdown = total_energy(servo, e.fuse_energy(plan.extrusion_time()), e.aux_energy(plan.duration()))
        .map_err(|err| energy_err(&err))?;
    let material = e.material_mass(plan.extrusion_length());
    let carbon = carbon_emission(breakdown.total, &e.factors(material));
    let n = reference.len() as f64;
    let rms_acceleration = acceleration.iter().map(|a| a.iter().map(|v| v * v).sum::<f64>() / n).sum::<f64>().sqrt();

    let metrics = path_metrics(&toolpath.flatten(), cfg.vtg.delta_theta);
    let deviation_mm = DeviationStats { max: deviation.max, min: deviation.min, mean: deviation.mean };
    let summary = RunSummary {
        metrics: metrics.clone(),
        deviation: Some(deviation_mm),
        energy: Some(EnergyStats {
            total: breakdown.total,
            servo: breakdown.servo,
            material: material * 1e3,
            carbon: carbon * 1e3,
            rms_acceleration,
        }),
    };
    let report = RunReport {
        duration_s: plan.duration(),
        extrusion_time_s: plan.extrusion_time(),
        extrusion_length_mm: plan.extrusion_length(),
        metrics,
        deviation_mm,
        energy_j: breakdown,
        material_kg: material,
        carbon_kg: carbon,
        rms_acceleration,
        layers,
        psd_peaks: psd.as_ref().map(|p| p.peaks.clone()).unwrap_or_default(),
    };
    Ok(RunOutput { toolpath, plan, dt, reference, table, acceleration, psd, report, summary })
}

/// Length per layer for one infill pattern (or the input itself).
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct LayeredLength {
    pub pattern: String,
    pub layer: usize,
    pub infill_mm: f64,
    pub total_mm: f64,
}

fn layered_lengths(label: &str, tp: &Toolpath) -> Vec<LayeredLength> {
    let flat = tp.flatten();
    let mut rows: Vec<LayeredLength> = (1..=tp.layers.len())
        .map(|layer| LayeredLength { pattern: label.to_string(), layer, infill_mm: 0.0, total_mm: 0.0 })
        .collect();
    for w in flat.windows(2) {
        let d = (w[1].position - w[0].position).norm();
        let row = &mut rows[w[1].layer - 1];
        row.total_mm += d;
        if w[1].role == Role::Infill {
            row.infill_mm += d;
        }
    }
    rows
}

/// Deterministic part of a pipeline run; serialized as `report.json`.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct PipelineReport {
    pub input: String,
    pub layers: usize,
    pub vtg_enabled: bool,
    pub kcr: KcrDiagnostics,
    pub before: RunReport,
    pub after: RunReport,
    pub comparison: ComparisonReport,
    /// Per-layer `(after - before) / before` of the combined RMS table
    /// acceleration.
    pub relative_rates: Vec<Option<f64>>,
    pub layered_length: Vec<LayeredLength>,
    pub warnings: Vec<String>,
    pub config: PipelineConfig,
}

#[derive(Debug, Clone, PartialEq)]
pub struct PipelineOutput {
    pub report: PipelineReport,
    pub before: RunOutput,
    pub after: RunOutput,
}

/// Run everything on the file at `input`, or on the configured scene.
pub fn run_pipeline(cfg: &PipelineConfig, input: Option<&Path>) -> Result<PipelineOutput, PipelineError> {
    cfg.validate().map_err(|e| PipelineError::new(Stage::Config, ErrorKind::Usage, e))?;
    let kcr =
        compute_kcr(&cfg.limits, cfg.vtg.delta).map_err(|e| PipelineError::new(Stage::Config, ErrorKind::Usage, e))?;
    let (toolpath, scene, mut warnings, label) = match input {
        Some(p) => {
            let (tp, scene, w) = load_input(p)?;
            (tp, scene, w, p.display().to_string())
        }
        None => {
            let (tp, w) =
                build_scene(&cfg.scene).map_err(|e| PipelineError::new(Stage::Ingest, ErrorKind::Usage, e))?;
            (tp, Some(cfg.scene.clone()), w, "scene".to_string())
        }
    };
    toolpath.validate().map_err(|e| PipelineError::new(Stage::Ingest, ErrorKind::Parse, e))?;
    let flat = toolpath.flatten();

    let raw = raw_plan(&flat, cfg);
    let resampled = if cfg.disable_vtg { None } else { Some(resample_toolpath(&flat, &toolpath.layers, cfg)?) };
    let before = execute_run(toolpath.clone(), raw, cfg, &mut warnings)?;
    let after = match resampled {
        None => before.clone(),
        Some((tp, plan)) => {
            let mut after_warnings = Vec::new();
            let out = execute_run(tp, plan, cfg, &mut after_warnings)?;
            warnings.extend(after_warnings.into_iter().map(|w| format!("resampled run: {w}")));
            out
        }
    };

    let layered_length = match &scene {
        Some(sc) => {
            let mut rows = Vec::new();
            for pattern in [InfillPattern::Line, InfillPattern::Grid, InfillPattern::Concentric] {
                let (tp, _) = build_scene(&SceneConfig { pattern, ..sc.clone() })
                    .map_err(|e| PipelineError::new(Stage::Metrics, ErrorKind::Usage, e))?;
                rows.extend(layered_lengths(&pattern.to_string(), &tp));
            }
            rows
        }
        None => layered_lengths("input", &toolpath),
    };

    let report = PipelineReport {
        input: label,
        layers: toolpath.layers.len(),
        vtg_enabled: !cfg.disable_vtg,
        kcr,
        comparison: compare(&before.summary, &after.summary),
        relative_rates: relative_rates(&before.report.layers, &after.report.layers),
        before: before.report.clone(),
        after: after.report.clone(),
        layered_length,
        warnings,
        config: cfg.clone(),
    };
    Ok(PipelineOutput { report, before, after })
}

impl PipelineOutput {
    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(&self.report).expect("report serializes")
    }

    pub fn plot_data(&self) -> PlotData {
        let rates = &self.report.relative_rates;
        let layers = self
            .after
            .report
            .layers
            .iter()
            .enumerate()
            .map(|(j, amp)| LayerRow {
                layer: j + 1,
                rms: amp.as_ref().map(|a| [a.rms[0], a.rms[1], a.rms[2]]),
                relative_rate: rates.get(j).copied().flatten(),
            })
            .collect();
        let mut trajectory = Vec::new();
        for (run, out) in [("before", &self.before), ("after", &self.after)] {
            for i in 0..out.reference.len() {
                trajectory.push(TrajectoryRow {
                    run,
                    time: i as f64 * out.dt,
                    reference: out.reference[i].into(),
                    table: out.table[i].into(),
                    acceleration: [out.acceleration[0][i], out.acceleration[1][i], out.acceleration[2][i]],
                });
            }
        }
        PlotData {
            psd: self.after.psd.clone(),
            psd_before: self.before.psd.clone(),
            layers: Some(layers),
            layered_length: Some(self.report.layered_length.clone()),
            trajectory: Some(trajectory),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use nalgebra::Vector3;

    fn tagged(pts: &[(f64, f64, Role)]) -> Vec<TaggedPoint> {
        pts.iter()
            .map(|(x, y, role)| TaggedPoint { position: Vector3::new(*x, *y, 0.0), role: *role, layer: 1, feed: None })
            .collect()
    }

    #[test]
    fn jobs_split_at_travel() {
        let p = tagged(&[
            (0.0, 0.0, Role::Travel),
            (1.0, 0.0, Role::Infill),
            (2.0, 0.0, Role::Infill),
            (2.0, 5.0, Role::Travel),
            (3.0, 5.0, Role::Perimeter),
        ]);
        let jobs = build_jobs(&p);
        let sizes: Vec<usize> = jobs.iter().map(|j| j.points.len()).collect();
        assert_eq!(sizes, vec![3, 2, 2]);
        assert!(matches!(jobs[1].kind, JobKind::Travel));
    }

    #[test]
    fn resampled_pieces_start_and_stop_at_rest() {
        let p = tagged(&[(0.0, 0.0, Role::Travel), (10.0, 0.0, Role::Infill), (10.0, 0.5, Role::Travel)]);
        let layers = vec![Layer { z: 0.0, paths: Vec::new() }];
        let (tp, plan) = resample_toolpath(&p, &layers, &PipelineConfig::default()).unwrap();
        assert_eq!(tp.layers[0].paths.len(), 2);
        assert_eq!(plan.segments[0].v_start, 0.0);
        assert_eq!(plan.segments.last().unwrap().v_end, 0.0);
        assert!(plan.is_finite());
        assert!((plan.extrusion_length() - 10.0).abs() < 1e-9);
    }
}

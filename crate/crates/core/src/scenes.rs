//! Analytic benchmark scenes: the 4 x 4 cylinder array and a single
//! cylinder, filled with line, grid or concentric infill.

use std::f64::consts::PI;
use std::fmt;
use std::str::FromStr;

use nalgebra::Vector3;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::geometry::Point3;
use crate::metrics::{Layer, PathSegment, Role, Toolpath};

#[derive(Debug, Clone, PartialEq, Error)]
pub enum SceneError {
    #[error("normalized height must lie in (0, 100], got {0}")]
    HeightOutOfRange(f64),
    #[error("cylinders overlap: radius {radius} mm >= half the pitch {pitch} mm")]
    Overlap { radius: f64, pitch: f64 },
    #[error("invalid scene parameter: {0}")]
    Invalid(String),
    #[error("unknown infill pattern {0:?} (expected line, grid or concentric)")]
    UnknownPattern(String),
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Circle {
    pub center: [f64; 2],
    pub radius: f64,
}

/// Cross-section of a part at one height.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct LayerRegion {
    /// mm.
    pub z: f64,
    /// Percent of the part height.
    pub h_n: f64,
    pub circles: Vec<Circle>,
}

impl LayerRegion {
    pub fn area(&self) -> f64 {
        self.circles.iter().map(|c| PI * c.radius * c.radius).sum()
    }
}

/// Dimensions of the cylinder array, mm.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct W16Geometry {
    pub pitch: f64,
    pub radius: f64,
    pub height: f64,
}

impl Default for W16Geometry {
    fn default() -> Self {
        Self { pitch: 60.0, radius: 25.0, height: 100.0 }
    }
}

/// The 16 cylinder sections at normalized height `h_n` (percent).
pub fn w16_layer(h_n: f64, geometry: &W16Geometry) -> Result<LayerRegion, SceneError> {
    if !(h_n > 0.0 && h_n <= 100.0) {
        return Err(SceneError::HeightOutOfRange(h_n));
    }
    let W16Geometry { pitch, radius, height } = *geometry;
    if !(radius > 0.0 && pitch > 0.0 && height > 0.0) {
        return Err(SceneError::Invalid("pitch, radius and height must be positive".into()));
    }
    if radius >= pitch / 2.0 {
        return Err(SceneError::Overlap { radius, pitch });
    }
    let mut circles = Vec::with_capacity(16);
    for row in 0..4 {
        for col in 0..4 {
            circles.push(Circle { center: [pitch * (col as f64 + 0.5), pitch * (row as f64 + 0.5)], radius });
        }
    }
    Ok(LayerRegion { z: h_n / 100.0 * height, h_n, circles })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum InfillPattern {
    Line,
    Grid,
    Concentric,
}

impl FromStr for InfillPattern {
    type Err = SceneError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "line" => Ok(InfillPattern::Line),
            "grid" => Ok(InfillPattern::Grid),
            "concentric" => Ok(InfillPattern::Concentric),
            other => Err(SceneError::UnknownPattern(other.to_string())),
        }
    }
}

impl fmt::Display for InfillPattern {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            InfillPattern::Line => "line",
            InfillPattern::Grid => "grid",
            InfillPattern::Concentric => "concentric",
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct InfillSpec {
    pub pattern: InfillPattern,
    /// mm.
    pub spacing: f64,
    /// Scanline direction, rad.
    pub angle: f64,
}

/// Infill paths for one region plus any warnings raised on the way.
#[derive(Debug, Clone, PartialEq)]
pub struct Infill {
    pub layer: Layer,
    pub warnings: Vec<String>,
}

/// Fill every circle of `region` with `spec`.
///
/// Consecutive paths are joined by implicit travel moves. Line infill runs
/// serpentine scanlines at `-r + s/2 + k s`; grid adds a second pass rotated
/// by 90 degrees; concentric rings sit at `r - s/2 - k s` down to `s/2` and
/// are sampled with chords of at most `s/2`.
pub fn generate_infill(region: &LayerRegion, spec: &InfillSpec) -> Result<Infill, SceneError> {
    if !(spec.spacing > 0.0 && spec.spacing.is_finite()) {
        return Err(SceneError::Invalid(format!("spacing must be positive, got {}", spec.spacing)));
    }
    let mut paths = Vec::new();
    let mut warnings = Vec::new();
    for (i, c) in region.circles.iter().enumerate() {
        if c.radius <= 0.0 {
            return Err(SceneError::Invalid(format!("circle {} has non-positive radius", i + 1)));
        }
        let before = paths.len();
        match spec.pattern {
            InfillPattern::Line => scanlines(c, region.z, spec.spacing, spec.angle, &mut paths),
            InfillPattern::Grid => {
                scanlines(c, region.z, spec.spacing, spec.angle, &mut paths);
                scanlines(c, region.z, spec.spacing, spec.angle + PI / 2.0, &mut paths);
            }
            InfillPattern::Concentric => rings(c, region.z, spec.spacing, &mut paths),
        }
        if paths.len() == before {
            warnings.push(format!(
                "circle {} (r = {} mm) is too small for spacing {} mm; left empty",
                i + 1,
                c.radius,
                spec.spacing
            ));
        }
    }
    Ok(Infill { layer: Layer { z: region.z, paths }, warnings })
}

fn scanlines(c: &Circle, z: f64, s: f64, angle: f64, out: &mut Vec<PathSegment>) {
    let center = Vector3::new(c.center[0], c.center[1], z);
    let dir = Vector3::new(angle.cos(), angle.sin(), 0.0);
    let normal = Vector3::new(-angle.sin(), angle.cos(), 0.0);
    let r = c.radius;
    let mut k = 0usize;
    loop {
        let o = -r + s / 2.0 + k as f64 * s;
        if o >= r {
            break;
        }
        let half = (r * r - o * o).max(0.0).sqrt();
        if half > 0.0 {
            let base = center + normal * o;
            let (a, b) = (base - dir * half, base + dir * half);
            let (a, b) = if k.is_multiple_of(2) { (a, b) } else { (b, a) };
            out.push(PathSegment::new(Role::Infill, vec![a, b], None));
        }
        k += 1;
    }
}

/// Largest deviation of a ring chord from the true circle, mm.
pub const RING_SAGITTA: f64 = 1e-3;

/// Vertex count for a ring of radius `rho` with chords no longer than `s/2`
/// and a sagitta of at most [`RING_SAGITTA`].
pub fn ring_vertex_count(rho: f64, s: f64) -> usize {
    let ratio = s / (4.0 * rho);
    let by_chord = if ratio >= 1.0 { 4.0 } else { (PI / ratio.asin()).ceil() };
    let cos = 1.0 - RING_SAGITTA / rho;
    let by_sagitta = if cos <= -1.0 { 4.0 } else { (PI / cos.acos()).ceil() };
    (by_chord.max(by_sagitta) as usize).max(4)
}

fn rings(c: &Circle, z: f64, s: f64, out: &mut Vec<PathSegment>) {
    let mut k = 0usize;
    loop {
        let rho = c.radius - s / 2.0 - k as f64 * s;
        if rho < s / 2.0 || rho <= 0.0 {
            break;
        }
        out.push(PathSegment::new(Role::Infill, ring_points(c.center, rho, z, s), None));
        k += 1;
    }
}

/// Closed sampled ring starting on the +x axis.
pub fn ring_points(center: [f64; 2], rho: f64, z: f64, s: f64) -> Vec<Point3> {
    let n = ring_vertex_count(rho, s);
    (0..=n)
        .map(|i| {
            let t = if i == n { 0.0 } else { 2.0 * PI * i as f64 / n as f64 };
            Vector3::new(center[0] + rho * t.cos(), center[1] + rho * t.sin(), z)
        })
        .collect()
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SceneShape {
    /// One cylinder centred at the origin.
    Circle,
    /// The 4 x 4 cylinder array.
    W16,
}

/// Parameters of a generated multi-layer scene.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct SceneConfig {
    pub shape: SceneShape,
    pub pattern: InfillPattern,
    /// mm.
    pub spacing: f64,
    /// rad.
    pub angle: f64,
    /// Radius of the single cylinder, mm.
    pub radius: f64,
    /// Layer count of the single-cylinder scene.
    pub layers: usize,
    /// Layer pitch of the single-cylinder scene, mm.
    pub layer_height: f64,
    /// Normalized heights (percent) sampled from the cylinder array.
    pub heights: Vec<f64>,
    pub w16: W16Geometry,
    /// Also trace each cylinder outline as a perimeter.
    pub perimeter: bool,
    /// Feed written into the generated paths, mm/s.
    pub feed: Option<f64>,
}

impl Default for SceneConfig {
    fn default() -> Self {
        Self {
            shape: SceneShape::Circle,
            pattern: InfillPattern::Concentric,
            spacing: 4.0,
            angle: 0.0,
            radius: 20.0,
            layers: 5,
            layer_height: 0.5,
            heights: vec![25.0, 50.0, 75.0],
            w16: W16Geometry::default(),
            perimeter: false,
            feed: None,
        }
    }
}

/// Build the full layered toolpath of a scene.
pub fn build_scene(cfg: &SceneConfig) -> Result<(Toolpath, Vec<String>), SceneError> {
    let regions: Vec<LayerRegion> = match cfg.shape {
        SceneShape::Circle => {
            if !(cfg.radius > 0.0 && cfg.layer_height > 0.0) || cfg.layers == 0 {
                return Err(SceneError::Invalid("circle scene needs radius, layer_height > 0 and layers >= 1".into()));
            }
            let total = cfg.layers as f64 * cfg.layer_height;
            (1..=cfg.layers)
                .map(|j| {
                    let z = j as f64 * cfg.layer_height;
                    LayerRegion {
                        z,
                        h_n: z / total * 100.0,
                        circles: vec![Circle { center: [0.0, 0.0], radius: cfg.radius }],
                    }
                })
                .collect()
        }
        SceneShape::W16 => cfg.heights.iter().map(|h| w16_layer(*h, &cfg.w16)).collect::<Result<_, _>>()?,
    };
    let spec = InfillSpec { pattern: cfg.pattern, spacing: cfg.spacing, angle: cfg.angle };
    let mut layers = Vec::with_capacity(regions.len());
    let mut warnings = Vec::new();
    for region in &regions {
        let mut infill = generate_infill(region, &spec)?;
        if cfg.perimeter {
            let mut perims: Vec<PathSegment> = region
                .circles
                .iter()
                .map(|c| {
                    PathSegment::new(Role::Perimeter, ring_points(c.center, c.radius, region.z, cfg.spacing), None)
                })
                .collect();
            perims.append(&mut infill.layer.paths);
            infill.layer.paths = perims;
        }
        if let Some(f) = cfg.feed {
            for p in &mut infill.layer.paths {
                p.feed = Some(f);
            }
        }
        warnings.extend(infill.warnings.into_iter().map(|w| format!("z = {}: {w}", region.z)));
        layers.push(infill.layer);
    }
    Ok((Toolpath { units: "mm".into(), layers }, warnings))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::metrics::path_lengths;

    fn one_circle(r: f64) -> LayerRegion {
        LayerRegion { z: 1.0, h_n: 50.0, circles: vec![Circle { center: [0.0, 0.0], radius: r }] }
    }

    fn infill_length(region: &LayerRegion, pattern: InfillPattern, s: f64) -> f64 {
        let fill = generate_infill(region, &InfillSpec { pattern, spacing: s, angle: 0.0 }).unwrap();
        let tp = Toolpath { units: "mm".into(), layers: vec![fill.layer] };
        path_lengths(&tp.flatten()).infill
    }

    #[test]
    fn w16_layout() {
        let l = w16_layer(50.0, &W16Geometry::default()).unwrap();
        assert_eq!(l.circles.len(), 16);
        assert_eq!(l.z, 50.0);
        assert!((l.area() - 16.0 * PI * 625.0).abs() < 1e-9);
        assert_eq!(l.circles[5].center, [90.0, 90.0]);
        assert!(w16_layer(0.0, &W16Geometry::default()).is_err());
        let bad = W16Geometry { radius: 30.0, ..W16Geometry::default() };
        assert!(matches!(w16_layer(50.0, &bad), Err(SceneError::Overlap { .. })));
    }

    #[test]
    fn line_chords_on_one_circle() {
        let len = infill_length(&one_circle(10.0), InfillPattern::Line, 2.0);
        let expect = 4.0 * (99f64.sqrt() + 91f64.sqrt() + 75f64.sqrt() + 51f64.sqrt() + 19f64.sqrt());
        assert!((len - expect).abs() < 1e-9, "{len}");
        assert!((len - 158.599).abs() < 1e-3);
    }

    #[test]
    fn grid_doubles_line() {
        let region = one_circle(10.0);
        let line = infill_length(&region, InfillPattern::Line, 2.0);
        let grid = infill_length(&region, InfillPattern::Grid, 2.0);
        assert!((grid - 2.0 * line).abs() < 1e-9);
    }

    #[test]
    fn concentric_rings() {
        let fill = generate_infill(
            &one_circle(10.0),
            &InfillSpec { pattern: InfillPattern::Concentric, spacing: 2.0, angle: 0.0 },
        )
        .unwrap();
        let radii: Vec<f64> = fill.layer.paths.iter().map(|p| p.points[0][0]).collect();
        assert_eq!(radii, vec![9.0, 7.0, 5.0, 3.0, 1.0]);
        let polygon: f64 = radii
            .iter()
            .map(|r| {
                let n = ring_vertex_count(*r, 2.0) as f64;
                2.0 * n * r * (PI / n).sin()
            })
            .sum();
        let tp = Toolpath { units: "mm".into(), layers: vec![fill.layer] };
        let len = path_lengths(&tp.flatten()).infill;
        assert!((len - polygon).abs() < 1e-9);
        assert!((len - 2.0 * PI * 25.0).abs() < 0.02, "{len}");
    }

    #[test]
    fn spacing_too_large_warns() {
        let fill = generate_infill(
            &one_circle(1.0),
            &InfillSpec { pattern: InfillPattern::Concentric, spacing: 5.0, angle: 0.0 },
        )
        .unwrap();
        assert!(fill.layer.paths.is_empty());
        assert_eq!(fill.warnings.len(), 1);
    }

    #[test]
    fn pattern_names_parse() {
        assert_eq!("grid".parse::<InfillPattern>().unwrap(), InfillPattern::Grid);
        assert!("hex".parse::<InfillPattern>().is_err());
    }
}

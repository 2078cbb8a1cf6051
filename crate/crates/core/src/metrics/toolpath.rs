use nalgebra::Vector3;
use serde::{Deserialize, Serialize};

use super::MetricsError;
use crate::geometry::{Point3, DUPLICATE_TOLERANCE};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Role {
    Perimeter,
    Infill,
    Travel,
}

impl Role {
    pub fn as_str(self) -> &'static str {
        match self {
            Role::Perimeter => "perimeter",
            Role::Infill => "infill",
            Role::Travel => "travel",
        }
    }

    pub fn is_extrusion(self) -> bool {
        self != Role::Travel
    }
}

/// One polyline with a single role. Its first point is reached by a travel
/// move from wherever the previous path ended.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PathSegment {
    pub role: Role,
    pub points: Vec<[f64; 3]>,
    /// mm/s.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub feed: Option<f64>,
}

impl PathSegment {
    pub fn new(role: Role, points: Vec<Point3>, feed: Option<f64>) -> Self {
        Self { role, points: points.iter().map(|p| [p.x, p.y, p.z]).collect(), feed }
    }

    pub fn positions(&self) -> Vec<Point3> {
        self.points.iter().map(|p| Vector3::new(p[0], p[1], p[2])).collect()
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Layer {
    pub z: f64,
    pub paths: Vec<PathSegment>,
}

/// Layered toolpath; the serde form is the native JSON exchange format.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Toolpath {
    pub units: String,
    pub layers: Vec<Layer>,
}

impl Default for Toolpath {
    fn default() -> Self {
        Self { units: "mm".into(), layers: Vec::new() }
    }
}

/// A point of the flattened toolpath. `role` is the role of the move that
/// arrives at the point; `layer` counts from 1.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TaggedPoint {
    pub position: Point3,
    pub role: Role,
    pub layer: usize,
    pub feed: Option<f64>,
}

impl Toolpath {
    pub fn from_json(text: &str) -> Result<Self, MetricsError> {
        let tp: Toolpath = serde_json::from_str(text).map_err(|e| MetricsError::Json(e.to_string()))?;
        tp.validate()?;
        Ok(tp)
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("toolpath serializes")
    }

    pub fn validate(&self) -> Result<(), MetricsError> {
        if self.units != "mm" {
            return Err(MetricsError::InvalidToolpath(format!("unsupported units {:?}", self.units)));
        }
        for (j, layer) in self.layers.iter().enumerate() {
            for (k, path) in layer.paths.iter().enumerate() {
                if path.points.iter().flatten().any(|v| !v.is_finite()) || !layer.z.is_finite() {
                    return Err(MetricsError::InvalidToolpath(format!(
                        "non-finite coordinate in layer {} path {}",
                        j + 1,
                        k + 1
                    )));
                }
                if let Some(f) = path.feed {
                    if !(f > 0.0 && f.is_finite()) {
                        return Err(MetricsError::InvalidToolpath(format!(
                            "feed must be positive in layer {} path {}",
                            j + 1,
                            k + 1
                        )));
                    }
                }
            }
        }
        Ok(())
    }

    pub fn point_count(&self) -> usize {
        self.layers.iter().flat_map(|l| &l.paths).map(|p| p.points.len()).sum()
    }

    /// Ordered points with move roles. A path's first point is tagged
    /// travel, and dropped when it repeats the previous point.
    pub fn flatten(&self) -> Vec<TaggedPoint> {
        let mut out: Vec<TaggedPoint> = Vec::with_capacity(self.point_count());
        for (j, layer) in self.layers.iter().enumerate() {
            for path in &layer.paths {
                for (k, p) in path.positions().into_iter().enumerate() {
                    if k == 0 {
                        if let Some(prev) = out.last() {
                            if (prev.position - p).norm() <= DUPLICATE_TOLERANCE {
                                continue;
                            }
                        }
                    }
                    let role = if k == 0 { Role::Travel } else { path.role };
                    out.push(TaggedPoint { position: p, role, layer: j + 1, feed: path.feed });
                }
            }
        }
        out
    }

    pub fn layer_count(&self) -> usize {
        self.layers.len()
    }
}

/// Build a single-layer toolpath from flat points, keeping every point.
pub fn from_polyline(points: &[Point3], role: Role) -> Toolpath {
    let z = points.first().map_or(0.0, |p| p.z);
    Toolpath {
        units: "mm".into(),
        layers: vec![Layer { z, paths: vec![PathSegment::new(role, points.to_vec(), None)] }],
    }
}

use serde::Serialize;

use super::{MetricsError, Role, TaggedPoint};
use crate::geometry::{Point3, DUPLICATE_TOLERANCE};

/// Path lengths in mm.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct PathLengths {
    pub total: f64,
    pub infill: f64,
    /// `per_layer[j]` is the length of all moves arriving in layer `j + 1`.
    pub per_layer: Vec<f64>,
}

/// Sum of consecutive distances, split by layer and role.
///
/// Travel moves count towards the total but not the infill length.
pub fn path_lengths(path: &[TaggedPoint]) -> PathLengths {
    let layers = path.iter().map(|p| p.layer).max().unwrap_or(0);
    let mut per_layer = vec![0.0; layers];
    let mut infill = 0.0;
    for w in path.windows(2) {
        let d = (w[1].position - w[0].position).norm();
        per_layer[w[1].layer - 1] += d;
        if w[1].role == Role::Infill {
            infill += d;
        }
    }
    let total = per_layer.iter().sum();
    PathLengths { total, infill, per_layer }
}

/// Angles between consecutive moves.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct TurningAngles {
    /// One angle (rad, in `[0, pi]`) per interior point after removing
    /// zero-length moves.
    pub angles: Vec<f64>,
    /// Index into the input path of the vertex of each angle.
    pub vertices: Vec<usize>,
    /// Input indices of vertices whose angle exceeds the critical angle.
    pub sharp_corners: Vec<usize>,
    pub n_turning: usize,
    /// Vertices that are not collinear with their neighbours.
    pub n_noncollinear: usize,
    /// Mean angle per layer (rad); `None` for layers without vertices.
    pub layer_mean: Vec<Option<f64>>,
    pub skipped_zero_length: usize,
}

const COLLINEAR_EPS: f64 = 1e-9;

fn angle_between(a: &Point3, b: &Point3) -> f64 {
    a.cross(b).norm().atan2(a.dot(b))
}

/// Turning angle at every vertex; sharp corners turn by more than `delta_theta`.
pub fn turning_angles(path: &[TaggedPoint], delta_theta: f64) -> TurningAngles {
    let mut keep: Vec<usize> = Vec::with_capacity(path.len());
    let mut skipped = 0;
    for (i, p) in path.iter().enumerate() {
        if let Some(&last) = keep.last() {
            if (p.position - path[last].position).norm() <= DUPLICATE_TOLERANCE {
                skipped += 1;
                continue;
            }
        }
        keep.push(i);
    }
    let layers = path.iter().map(|p| p.layer).max().unwrap_or(0);
    let mut sums = vec![(0.0, 0usize); layers];
    let mut out = TurningAngles {
        angles: Vec::new(),
        vertices: Vec::new(),
        sharp_corners: Vec::new(),
        n_turning: 0,
        n_noncollinear: 0,
        layer_mean: Vec::new(),
        skipped_zero_length: skipped,
    };
    for w in keep.windows(3) {
        let a = path[w[1]].position - path[w[0]].position;
        let b = path[w[2]].position - path[w[1]].position;
        let theta = angle_between(&a, &b);
        out.angles.push(theta);
        out.vertices.push(w[1]);
        if theta > delta_theta {
            out.sharp_corners.push(w[1]);
        }
        if theta > COLLINEAR_EPS {
            out.n_noncollinear += 1;
        }
        let s = &mut sums[path[w[1]].layer - 1];
        s.0 += theta;
        s.1 += 1;
    }
    out.n_turning = out.sharp_corners.len();
    out.layer_mean = sums.iter().map(|(s, n)| (*n > 0).then(|| s / *n as f64)).collect();
    out
}

/// Chord errors of consecutive triples.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ChordErrors {
    pub values: Vec<f64>,
    pub mean: f64,
    /// Triples containing a repeated point.
    pub skipped_duplicates: usize,
    /// Triples that include a travel move.
    pub skipped_travel: usize,
}

/// Sagitta of the circle through `a, b, c` over the chord `a b` (mm).
///
/// Returns 0 for collinear points. Uses `h^2 / (r + sqrt(r^2 - h^2))`, which
/// stays accurate when the radius is large.
pub fn triple_chord_error(a: &Point3, b: &Point3, c: &Point3) -> f64 {
    let ab = b - a;
    let bc = c - b;
    let ca = a - c;
    let cross = ab.cross(&bc).norm();
    let (la, lb, lc) = (ab.norm(), bc.norm(), ca.norm());
    if cross <= COLLINEAR_EPS * la * lb {
        return 0.0;
    }
    let r = la * lb * lc / (2.0 * cross);
    let h = 0.5 * la;
    let root = (r * r - h * h).max(0.0).sqrt();
    h * h / (r + root)
}

/// Chord error of every triple of extrusion moves.
pub fn chord_errors(path: &[TaggedPoint]) -> ChordErrors {
    let mut out = ChordErrors { values: Vec::new(), mean: 0.0, skipped_duplicates: 0, skipped_travel: 0 };
    for w in path.windows(3) {
        if w[1].role == Role::Travel || w[2].role == Role::Travel {
            out.skipped_travel += 1;
            continue;
        }
        let (a, b, c) = (&w[0].position, &w[1].position, &w[2].position);
        if (b - a).norm() <= DUPLICATE_TOLERANCE
            || (c - b).norm() <= DUPLICATE_TOLERANCE
            || (c - a).norm() <= DUPLICATE_TOLERANCE
        {
            out.skipped_duplicates += 1;
            continue;
        }
        out.values.push(triple_chord_error(a, b, c));
    }
    if !out.values.is_empty() {
        out.mean = out.values.iter().sum::<f64>() / out.values.len() as f64;
    }
    out
}

/// `z_i / z * 100`.
pub fn normalized_height(z_i: f64, z: f64) -> Result<f64, MetricsError> {
    if !(z > 0.0) {
        return Err(MetricsError::InvalidInput(format!("total height must be positive, got {z}")));
    }
    if !(0.0..=z).contains(&z_i) {
        return Err(MetricsError::InvalidInput(format!("layer height {z_i} outside [0, {z}]")));
    }
    Ok(z_i / z * 100.0)
}

/// Toolpath quality summary.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct PathMetrics {
    pub l_total: f64,
    pub l_infill: f64,
    pub layer_lengths: Vec<f64>,
    pub n_total: usize,
    pub n_infill: usize,
    pub n_turning: usize,
    pub n_noncollinear: usize,
    pub layer_mean_angle: Vec<Option<f64>>,
    pub mean_chord_error: f64,
    pub chord_triples: usize,
}

pub fn path_metrics(path: &[TaggedPoint], delta_theta: f64) -> PathMetrics {
    let lengths = path_lengths(path);
    let turns = turning_angles(path, delta_theta);
    let chords = chord_errors(path);
    PathMetrics {
        l_total: lengths.total,
        l_infill: lengths.infill,
        layer_lengths: lengths.per_layer,
        n_total: path.len(),
        n_infill: path.iter().filter(|p| p.role == Role::Infill).count(),
        n_turning: turns.n_turning,
        n_noncollinear: turns.n_noncollinear,
        layer_mean_angle: turns.layer_mean,
        mean_chord_error: chords.mean,
        chord_triples: chords.values.len(),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use nalgebra::Vector3;
    use std::f64::consts::{FRAC_PI_2, FRAC_PI_4};

    fn tagged(pts: &[(f64, f64)]) -> Vec<TaggedPoint> {
        pts.iter()
            .enumerate()
            .map(|(i, (x, y))| TaggedPoint {
                position: Vector3::new(*x, *y, 0.0),
                role: if i == 0 { Role::Travel } else { Role::Infill },
                layer: 1,
                feed: None,
            })
            .collect()
    }

    #[test]
    fn square_length() {
        let p = tagged(&[(0.0, 0.0), (10.0, 0.0), (10.0, 10.0), (0.0, 10.0), (0.0, 0.0)]);
        let l = path_lengths(&p);
        assert_eq!(l.total, 40.0);
        assert_eq!(l.infill, 40.0);
        assert_eq!(path_lengths(&p[..1]).total, 0.0);
    }

    #[test]
    fn angles() {
        let a = turning_angles(&tagged(&[(0.0, 0.0), (1.0, 0.0), (2.0, 0.0)]), FRAC_PI_4);
        assert_eq!(a.angles, vec![0.0]);
        let b = turning_angles(&tagged(&[(0.0, 0.0), (1.0, 0.0), (1.0, 1.0)]), FRAC_PI_4);
        assert!((b.angles[0] - FRAC_PI_2).abs() < 1e-15);
        assert_eq!(b.n_turning, 1);
        let c = turning_angles(&tagged(&[(0.0, 0.0), (1.0, 0.0), (2.0, 1.0)]), FRAC_PI_4);
        assert!((c.angles[0] - FRAC_PI_4).abs() < 1e-15);
        // exactly at the critical angle is not sharp
        assert_eq!(c.n_turning, 0);
    }

    #[test]
    fn duplicate_points_are_skipped_for_angles() {
        let a = turning_angles(&tagged(&[(0.0, 0.0), (1.0, 0.0), (1.0, 0.0), (1.0, 1.0)]), FRAC_PI_4);
        assert_eq!(a.skipped_zero_length, 1);
        assert_eq!(a.angles.len(), 1);
    }

    #[test]
    fn chord_error_on_a_circle() {
        let r = 10.0f64;
        let half = (1.0 / r).asin();
        let pts: Vec<(f64, f64)> =
            (0..3).map(|k| (r * (2.0 * half * k as f64).cos(), r * (2.0 * half * k as f64).sin())).collect();
        let e = chord_errors(&tagged(&pts));
        assert_eq!(e.values.len(), 1);
        assert!((e.mean - (10.0 - 99.0f64.sqrt())).abs() < 1e-12);
        let flat = chord_errors(&tagged(&[(0.0, 0.0), (1.0, 0.0), (2.0, 0.0)]));
        assert_eq!(flat.values, vec![0.0]);
    }

    #[test]
    fn travel_triples_are_excluded() {
        let mut p = tagged(&[(0.0, 0.0), (1.0, 0.0), (1.0, 1.0), (2.0, 3.0)]);
        p[2].role = Role::Travel;
        let e = chord_errors(&p);
        assert_eq!(e.skipped_travel, 2);
        assert!(e.values.is_empty());
    }

    #[test]
    fn heights() {
        assert_eq!(normalized_height(25.0, 100.0).unwrap(), 25.0);
        assert_eq!(normalized_height(0.0, 100.0).unwrap(), 0.0);
        assert_eq!(normalized_height(100.0, 100.0).unwrap(), 100.0);
        assert!(normalized_height(1.0, 0.0).is_err());
    }
}

//! Feedrate scheduling.
//!
//! Works on squared speeds `w = v^2`, where the tangential acceleration over
//! a segment of length `s` is `(w_b - w_a) / (2 s)`. Every pass only ever
//! lowers speeds, so the iteration is monotone and terminates at a profile
//! below the per-point curvature caps.

use serde::Serialize;

use super::{InterpolatedPath, KinematicLimits};
use crate::geometry::Point3;

/// Speed condition at one end of a path.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Boundary {
    /// No constraint beyond the point's own cap.
    Free,
    /// Speed fixed at (or below) this value, m/s. `Speed(0.0)` means the
    /// machine is at rest with zero acceleration outside the path.
    Speed(f64),
}

impl Boundary {
    fn at_rest(self) -> bool {
        matches!(self, Boundary::Speed(v) if v == 0.0)
    }
}

/// Kinematic quantities rebuilt from points and feeds (SI units).
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct KinematicProfile {
    /// Arrival time at each point, s.
    pub times: Vec<f64>,
    /// Tangential acceleration on each segment, m/s^2.
    pub tangential_acceleration: Vec<f64>,
    /// Tangential jerk at each point, m/s^3 (zero where undefined).
    pub tangential_jerk: Vec<f64>,
    /// `v^2 kappa` at each point, m/s^2.
    pub normal_acceleration: Vec<f64>,
    /// `v^3 kappa^2` at each point, m/s^3.
    pub normal_jerk: Vec<f64>,
}

const MAX_SWEEPS: usize = 20_000;

/// Feeds (m/s) for a resampled path with free end conditions.
pub fn schedule_feedrate(path: &InterpolatedPath, limits: &KinematicLimits) -> Vec<f64> {
    schedule_feedrate_from(&path.points, &path.curvature, limits, Boundary::Free, Boundary::Free)
}

/// Feeds (m/s) for `points` (mm) with curvature `curvature` (1/mm) and the
/// given end conditions.
///
/// Each point is first capped by `v_max`, the normal acceleration and the
/// normal jerk. Squared speeds are then lowered by alternating forward and
/// backward sweeps until the tangential acceleration and jerk bounds hold.
pub fn schedule_feedrate_from(
    points: &[Point3],
    curvature: &[f64],
    limits: &KinematicLimits,
    start: Boundary,
    end: Boundary,
) -> Vec<f64> {
    let n = points.len();
    if n < 2 {
        return Vec::new();
    }
    let s = segment_lengths_m(points);
    let mut w: Vec<f64> = curvature
        .iter()
        .map(|k| {
            let v = point_cap(*k, limits);
            v * v
        })
        .collect();
    w.resize(n, limits.v_max * limits.v_max);
    if let Boundary::Speed(v) = start {
        w[0] = w[0].min(v * v);
    }
    if let Boundary::Speed(v) = end {
        w[n - 1] = w[n - 1].min(v * v);
    }
    let ctx = Ctx { s: &s, limits, rest_start: start.at_rest(), rest_end: end.at_rest() };

    for sweep in 0..MAX_SWEEPS {
        let mut changed = 0.0f64;
        let forward = sweep % 2 == 0;
        for k in 0..n {
            let i = if forward { k } else { n - 1 - k };
            let bound = ctx.upper_bound(&w, i).max(0.0);
            if bound < w[i] {
                changed = changed.max((w[i] - bound) / w[i].max(f64::MIN_POSITIVE));
                w[i] = bound;
            }
        }
        if changed < 1e-13 && sweep > 0 {
            break;
        }
    }
    w.iter().map(|x| x.sqrt()).collect()
}

fn point_cap(kappa_mm: f64, limits: &KinematicLimits) -> f64 {
    let k = kappa_mm * 1e3;
    if k > 0.0 {
        limits.v_max.min((limits.a_n / k).sqrt()).min((limits.j_n / (k * k)).cbrt())
    } else {
        limits.v_max
    }
}

fn segment_lengths_m(points: &[Point3]) -> Vec<f64> {
    points.windows(2).map(|p| (p[1] - p[0]).norm() * 1e-3).collect()
}

fn seg_time(s: f64, wa: f64, wb: f64) -> f64 {
    let vs = wa.sqrt() + wb.sqrt();
    if vs > 0.0 {
        2.0 * s / vs
    } else {
        f64::INFINITY
    }
}

struct Ctx<'a> {
    s: &'a [f64],
    limits: &'a KinematicLimits,
    rest_start: bool,
    rest_end: bool,
}

impl Ctx<'_> {
    fn accel(&self, w: &[f64], seg: usize) -> f64 {
        if self.s[seg] > 0.0 {
            (w[seg + 1] - w[seg]) / (2.0 * self.s[seg])
        } else {
            0.0
        }
    }

    /// Acceleration on segment `seg`, extended by zero past rest boundaries.
    /// `None` means the quantity is unconstrained.
    fn accel_ext(&self, w: &[f64], seg: isize) -> Option<f64> {
        let nseg = self.s.len() as isize;
        if seg < 0 {
            self.rest_start.then_some(0.0)
        } else if seg >= nseg {
            self.rest_end.then_some(0.0)
        } else {
            Some(self.accel(w, seg as usize))
        }
    }

    /// Time between the centres of the two segments meeting at `point`.
    fn dt_mid(&self, w: &[f64], point: usize) -> Option<f64> {
        let nseg = self.s.len();
        let left = (point > 0).then(|| seg_time(self.s[point - 1], w[point - 1], w[point]));
        let right = (point < nseg).then(|| seg_time(self.s[point], w[point], w[point + 1]));
        match (left, right) {
            (Some(a), Some(b)) => Some(0.5 * (a + b)),
            (None, Some(b)) if self.rest_start => Some(0.5 * b),
            (Some(a), None) if self.rest_end => Some(0.5 * a),
            _ => None,
        }
    }

    /// Largest admissible `w[i]` given its neighbours. Segment times are
    /// evaluated at the current (higher) speeds, so the bound is conservative.
    fn upper_bound(&self, w: &[f64], i: usize) -> f64 {
        let n = w.len();
        let (a_t, j_t) = (self.limits.a_t, self.limits.j_t);
        let mut bound = w[i];
        if i > 0 {
            let s = self.s[i - 1];
            bound = bound.min(w[i - 1] + 2.0 * a_t * s);
            // jerk at point i-1: a_{i-1} - a_{i-2} <= J dt
            if let (Some(prev), Some(dt)) = (self.accel_ext(w, i as isize - 2), self.dt_mid(w, i - 1)) {
                if s > 0.0 {
                    bound = bound.min(w[i - 1] + 2.0 * s * (prev + j_t * dt));
                }
            }
        }
        if i + 1 < n {
            let s = self.s[i];
            bound = bound.min(w[i + 1] + 2.0 * a_t * s);
            // jerk at point i+1: a_{i+1} - a_i <= J dt
            if let (Some(next), Some(dt)) = (self.accel_ext(w, i as isize + 1), self.dt_mid(w, i + 1)) {
                if s > 0.0 {
                    bound = bound.min(w[i + 1] - 2.0 * s * (next - j_t * dt));
                }
            }
        }
        if i > 0 && i + 1 < n {
            // jerk at point i itself: a_i - a_{i-1} >= -J dt
            let (sl, sr) = (self.s[i - 1], self.s[i]);
            if sl > 0.0 && sr > 0.0 {
                if let Some(dt) = self.dt_mid(w, i) {
                    let cl = 1.0 / (2.0 * sl);
                    let cr = 1.0 / (2.0 * sr);
                    bound = bound.min((w[i + 1] * cr + w[i - 1] * cl + j_t * dt) / (cl + cr));
                }
            }
        }
        bound
    }
}

/// Travel time of each segment, s.
pub fn segment_times(points: &[Point3], feeds: &[f64]) -> Vec<f64> {
    segment_lengths_m(points)
        .iter()
        .enumerate()
        .map(|(i, s)| seg_time(*s, feeds[i] * feeds[i], feeds[i + 1] * feeds[i + 1]))
        .collect()
}

/// Rebuild accelerations and jerks from a scheduled profile.
///
/// Tangential acceleration is constant on each segment; jerk is the change
/// in acceleration between neighbouring segments over the time between
/// their centres. Rest boundaries contribute a zero acceleration outside
/// the path.
pub fn reconstruct_profile(
    points: &[Point3],
    curvature: &[f64],
    feeds: &[f64],
    start: Boundary,
    end: Boundary,
) -> KinematicProfile {
    let n = points.len().min(feeds.len());
    if n < 2 {
        return KinematicProfile {
            times: vec![0.0; n],
            tangential_acceleration: Vec::new(),
            tangential_jerk: vec![0.0; n],
            normal_acceleration: Vec::new(),
            normal_jerk: Vec::new(),
        };
    }
    let s = segment_lengths_m(&points[..n]);
    let w: Vec<f64> = feeds[..n].iter().map(|v| v * v).collect();
    let ctx = Ctx { s: &s, limits: &KinematicLimits::default(), rest_start: start.at_rest(), rest_end: end.at_rest() };
    let mut times = vec![0.0; n];
    for i in 0..n - 1 {
        times[i + 1] = times[i] + seg_time(s[i], w[i], w[i + 1]);
    }
    let tangential_acceleration = (0..n - 1).map(|i| ctx.accel(&w, i)).collect();
    let tangential_jerk = (0..n)
        .map(|i| {
            let l = ctx.accel_ext(&w, i as isize - 1);
            let r = ctx.accel_ext(&w, i as isize);
            match (l, r, ctx.dt_mid(&w, i)) {
                (Some(a), Some(b), Some(dt)) if dt > 0.0 && dt.is_finite() => (b - a) / dt,
                _ => 0.0,
            }
        })
        .collect();
    let k = |i: usize| curvature.get(i).copied().unwrap_or(0.0) * 1e3;
    let normal_acceleration = (0..n).map(|i| w[i] * k(i)).collect();
    let normal_jerk = (0..n).map(|i| w[i] * feeds[i] * k(i) * k(i)).collect();
    KinematicProfile { times, tangential_acceleration, tangential_jerk, normal_acceleration, normal_jerk }
}

#[cfg(test)]
mod tests {
    use super::*;
    use nalgebra::Vector3;

    fn limits() -> KinematicLimits {
        KinematicLimits { v_max: 0.05, a_n: 5.0, a_t: 5.0, j_n: 500.0, j_t: 500.0, t_s: 1e-3, r_n: 0.2 }
    }

    fn straight(n: usize, step: f64) -> Vec<Point3> {
        (0..n).map(|i| Vector3::new(i as f64 * step, 0.0, 0.0)).collect()
    }

    #[test]
    fn straight_path_runs_at_vmax() {
        let pts = straight(20, 1.0);
        let v = schedule_feedrate_from(&pts, &[0.0; 20], &limits(), Boundary::Free, Boundary::Free);
        assert!(v.iter().all(|x| *x == 0.05));
    }

    #[test]
    fn single_point_has_empty_profile() {
        let v = schedule_feedrate_from(&straight(1, 1.0), &[0.0], &limits(), Boundary::Free, Boundary::Free);
        assert!(v.is_empty());
    }

    #[test]
    fn normal_acceleration_cap() {
        let l = KinematicLimits { v_max: 1.0, a_n: 1.0, j_n: 1e9, ..limits() };
        // kappa = 100 1/m = 0.1 1/mm
        let pts = straight(3, 1.0);
        let v = schedule_feedrate_from(&pts, &[0.1; 3], &l, Boundary::Free, Boundary::Free);
        assert!(v.iter().all(|x| *x <= 0.1 + 1e-15));
    }

    #[test]
    fn from_rest_respects_reachable_speed() {
        let l = KinematicLimits { v_max: 10.0, a_t: 2.0, j_t: 1e9, ..limits() };
        let pts = straight(2, 3.0);
        let v = schedule_feedrate_from(&pts, &[0.0; 2], &l, Boundary::Speed(0.0), Boundary::Free);
        assert_eq!(v[0], 0.0);
        assert!(v[1] <= (2.0f64 * 2.0 * 3e-3).sqrt() * (1.0 + 1e-12));
    }

    #[test]
    fn rest_to_rest_profile_respects_limits() {
        let l = limits();
        let pts = straight(60, 0.5);
        let v = schedule_feedrate_from(&pts, &[0.0; 60], &l, Boundary::Speed(0.0), Boundary::Speed(0.0));
        let prof = reconstruct_profile(&pts, &[0.0; 60], &v, Boundary::Speed(0.0), Boundary::Speed(0.0));
        assert!(prof.tangential_acceleration.iter().all(|a| a.abs() <= l.a_t * 1.01));
        assert!(prof.tangential_jerk.iter().all(|j| j.abs() <= l.j_t * 1.01), "{:?}", prof.tangential_jerk);
        assert!(v[30] > 0.04);
        assert_eq!(*v.last().unwrap(), 0.0);
    }
}

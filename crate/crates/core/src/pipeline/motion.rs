use crate::geometry::Point3;
use crate::metrics::{Role, TaggedPoint};

/// Straight move with a linear change of squared speed along its length.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MotionSegment {
    pub from: Point3,
    pub to: Point3,
    /// mm/s at `from`.
    pub v_start: f64,
    /// mm/s at `to`.
    pub v_end: f64,
    pub role: Role,
    /// 1-based.
    pub layer: usize,
}

impl MotionSegment {
    pub fn length(&self) -> f64 {
        (self.to - self.from).norm()
    }

    pub fn duration(&self) -> f64 {
        let s = self.length();
        if s == 0.0 {
            0.0
        } else {
            2.0 * s / (self.v_start + self.v_end)
        }
    }

    /// Distance covered `t` seconds after entering the segment.
    fn distance_at(&self, t: f64) -> f64 {
        let s = self.length();
        let acc = (self.v_end * self.v_end - self.v_start * self.v_start) / (2.0 * s);
        (self.v_start * t + 0.5 * acc * t * t).clamp(0.0, s)
    }
}

/// A complete timed motion, built from consecutive segments.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct MotionPlan {
    pub start: Point3,
    pub segments: Vec<MotionSegment>,
}

impl MotionPlan {
    /// Every move of `path` at its own feed (capped at `v_cap`), or at
    /// `default_feed` where none is given. Speed changes are instantaneous.
    pub fn constant_feed(path: &[TaggedPoint], default_feed: f64, v_cap: f64) -> Self {
        let start = path.first().map_or_else(Point3::zeros, |p| p.position);
        let segments = path
            .windows(2)
            .map(|w| {
                let v = w[1].feed.unwrap_or(default_feed).min(v_cap);
                MotionSegment {
                    from: w[0].position,
                    to: w[1].position,
                    v_start: v,
                    v_end: v,
                    role: w[1].role,
                    layer: w[1].layer,
                }
            })
            .filter(|s| s.length() > 0.0)
            .collect();
        Self { start, segments }
    }

    pub fn duration(&self) -> f64 {
        self.segments.iter().map(MotionSegment::duration).sum()
    }

    pub fn extrusion_time(&self) -> f64 {
        self.segments.iter().filter(|s| s.role.is_extrusion()).map(MotionSegment::duration).sum()
    }

    pub fn extrusion_length(&self) -> f64 {
        self.segments.iter().filter(|s| s.role.is_extrusion()).map(MotionSegment::length).sum()
    }

    pub fn is_finite(&self) -> bool {
        self.segments.iter().all(|s| s.duration().is_finite())
    }

    /// `layers + 1` increasing times: the entry time of each layer and the
    /// end of the motion plus `tail`.
    pub fn layer_boundaries(&self, layers: usize, tail: f64) -> Vec<f64> {
        let mut out = vec![f64::NAN; layers + 1];
        let mut t = 0.0;
        for s in &self.segments {
            if s.layer >= 1 && s.layer <= layers && out[s.layer - 1].is_nan() {
                out[s.layer - 1] = t;
            }
            t += s.duration();
        }
        out[layers] = t + tail;
        out[0] = 0.0;
        for j in (0..layers).rev() {
            if out[j].is_nan() {
                out[j] = out[j + 1];
            }
        }
        out
    }

    /// Position every `dt` seconds, holding the final point for `tail`.
    pub fn sample(&self, dt: f64, tail: f64) -> Vec<Point3> {
        let total = self.duration() + tail;
        let n = (total / dt).ceil() as usize + 1;
        let mut out = Vec::with_capacity(n);
        let mut idx = 0;
        let mut seg_start = 0.0;
        let end = self.segments.last().map_or(self.start, |s| s.to);
        for k in 0..n {
            let t = k as f64 * dt;
            while idx < self.segments.len() && t >= seg_start + self.segments[idx].duration() {
                seg_start += self.segments[idx].duration();
                idx += 1;
            }
            let p = match self.segments.get(idx) {
                None => end,
                Some(s) => {
                    let len = s.length();
                    let d = s.distance_at(t - seg_start);
                    s.from + (s.to - s.from) * (d / len)
                }
            };
            out.push(p);
        }
        out
    }
}

use nalgebra::Vector3;
use serde::{Deserialize, Serialize};

use super::basis::{basis_derivatives, find_span};
use super::{GeometryError, Point3, DEFAULT_SINGULAR_EPS};

/// A rational B-spline curve in 3D (coordinates in mm).
///
/// Immutable once built; every evaluation is a pure function of the curve
/// and the parameter.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "CurveRecord", into = "CurveRecord")]
pub struct NurbsCurve {
    degree: usize,
    knots: Vec<f64>,
    control_points: Vec<Point3>,
    weights: Vec<f64>,
}

/// Wire form used inside the toolpath JSON.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct CurveRecord {
    degree: usize,
    knots: Vec<f64>,
    points: Vec<[f64; 3]>,
    weights: Vec<f64>,
}

impl TryFrom<CurveRecord> for NurbsCurve {
    type Error = GeometryError;

    fn try_from(r: CurveRecord) -> Result<Self, Self::Error> {
        let pts = r.points.iter().map(|p| Vector3::new(p[0], p[1], p[2])).collect();
        NurbsCurve::new(r.degree, r.knots, pts, r.weights)
    }
}

impl From<NurbsCurve> for CurveRecord {
    fn from(c: NurbsCurve) -> Self {
        CurveRecord {
            degree: c.degree,
            points: c.control_points.iter().map(|p| [p.x, p.y, p.z]).collect(),
            knots: c.knots,
            weights: c.weights,
        }
    }
}

impl NurbsCurve {
    pub fn new(
        degree: usize,
        knots: Vec<f64>,
        control_points: Vec<Point3>,
        weights: Vec<f64>,
    ) -> Result<Self, GeometryError> {
        if degree == 0 {
            return Err(GeometryError::InvalidCurve("degree must be at least 1".into()));
        }
        if control_points.len() < degree + 1 {
            return Err(GeometryError::InvalidCurve(format!(
                "{} control points cannot carry degree {degree}",
                control_points.len()
            )));
        }
        if weights.len() != control_points.len() {
            return Err(GeometryError::InvalidCurve(format!(
                "{} weights for {} control points",
                weights.len(),
                control_points.len()
            )));
        }
        if knots.len() != control_points.len() + degree + 1 {
            return Err(GeometryError::InvalidCurve(format!(
                "expected {} knots, got {}",
                control_points.len() + degree + 1,
                knots.len()
            )));
        }
        if knots.iter().any(|k| !k.is_finite()) || knots.windows(2).any(|w| w[1] < w[0]) {
            return Err(GeometryError::InvalidCurve("knots must be finite and non-decreasing".into()));
        }
        if knots[degree] >= knots[control_points.len()] {
            return Err(GeometryError::InvalidCurve("empty parameter domain".into()));
        }
        if weights.iter().any(|w| !(w.is_finite() && *w > 0.0)) {
            return Err(GeometryError::InvalidWeights);
        }
        if control_points.iter().any(|p| !p.iter().all(|c| c.is_finite())) {
            return Err(GeometryError::InvalidCurve("non-finite control point".into()));
        }
        Ok(Self { degree, knots, control_points, weights })
    }

    /// Non-rational curve (all weights one).
    pub fn non_rational(degree: usize, knots: Vec<f64>, control_points: Vec<Point3>) -> Result<Self, GeometryError> {
        let w = vec![1.0; control_points.len()];
        Self::new(degree, knots, control_points, w)
    }

    /// Straight degree-1 segment from `a` to `b` over `[0, 1]`.
    pub fn line(a: Point3, b: Point3) -> Self {
        Self::non_rational(1, vec![0.0, 0.0, 1.0, 1.0], vec![a, b]).expect("two-point line is always valid")
    }

    /// Exact full circle in the plane `z = center.z`, starting at
    /// `center + (radius, 0, 0)` and running counter-clockwise.
    ///
    /// Nine-point rational quadratic with corner weights `sqrt(2)/2`.
    pub fn circle(center: Point3, radius: f64) -> Result<Self, GeometryError> {
        if !(radius.is_finite() && radius > 0.0) {
            return Err(GeometryError::InvalidCurve("circle radius must be positive".into()));
        }
        let w = std::f64::consts::FRAC_1_SQRT_2;
        let offsets = [
            (1.0, 0.0),
            (1.0, 1.0),
            (0.0, 1.0),
            (-1.0, 1.0),
            (-1.0, 0.0),
            (-1.0, -1.0),
            (0.0, -1.0),
            (1.0, -1.0),
            (1.0, 0.0),
        ];
        let pts = offsets.iter().map(|(x, y)| center + Vector3::new(x * radius, y * radius, 0.0)).collect();
        let weights = vec![1.0, w, 1.0, w, 1.0, w, 1.0, w, 1.0];
        let knots = vec![0.0, 0.0, 0.0, 0.25, 0.25, 0.5, 0.5, 0.75, 0.75, 1.0, 1.0, 1.0];
        Self::new(2, knots, pts, weights)
    }

    pub fn degree(&self) -> usize {
        self.degree
    }

    pub fn knots(&self) -> &[f64] {
        &self.knots
    }

    pub fn control_points(&self) -> &[Point3] {
        &self.control_points
    }

    pub fn weights(&self) -> &[f64] {
        &self.weights
    }

    /// Parameter domain `[u_p, u_{n+1}]`.
    pub fn domain(&self) -> (f64, f64) {
        (self.knots[self.degree], self.knots[self.control_points.len()])
    }

    /// True when the first and last knots are repeated `p + 1` times.
    pub fn is_clamped(&self) -> bool {
        let p = self.degree;
        let m = self.knots.len() - 1;
        (0..=p).all(|i| self.knots[i] == self.knots[0]) && (0..=p).all(|i| self.knots[m - i] == self.knots[m])
    }

    /// Length of the control polygon, an upper bound on the arc length of
    /// non-rational curves.
    pub fn control_polygon_length(&self) -> f64 {
        self.control_points.windows(2).map(|w| (w[1] - w[0]).norm()).sum()
    }

    pub fn point_at(&self, u: f64) -> Result<Point3, GeometryError> {
        Ok(self.derivatives(u, 0)?[0])
    }

    /// `C(u)` and its first `order` derivatives.
    ///
    /// Rational derivatives come from the quotient-rule recurrence on the
    /// homogeneous derivatives, not from differencing.
    pub fn derivatives(&self, u: f64, order: usize) -> Result<Vec<Point3>, GeometryError> {
        let (lo, hi) = self.domain();
        if !u.is_finite() || u < lo || u > hi {
            return Err(GeometryError::ParameterOutOfRange { u, lo, hi });
        }
        let p = self.degree;
        let n = self.control_points.len() - 1;
        let span = find_span(n, p, u, &self.knots);
        let nders = basis_derivatives(u, span, p, order, &self.knots)?;

        let mut a_ders = vec![Vector3::zeros(); order + 1];
        let mut w_ders = vec![0.0; order + 1];
        for k in 0..=order {
            for j in 0..=p {
                let i = span - p + j;
                let nw = nders[k][j] * self.weights[i];
                a_ders[k] += self.control_points[i] * nw;
                w_ders[k] += nw;
            }
        }
        if !(w_ders[0] > 0.0) {
            return Err(GeometryError::InvalidWeights);
        }

        let mut ck: Vec<Point3> = Vec::with_capacity(order + 1);
        for k in 0..=order {
            let mut v = a_ders[k];
            let mut binom = 1.0;
            for i in 1..=k {
                binom = binom * (k - i + 1) as f64 / i as f64;
                v -= ck[k - i] * (binom * w_ders[i]);
            }
            ck.push(v / w_ders[0]);
        }
        Ok(ck)
    }

    /// Curvature `|C' x C''| / |C'|^3` with the default singularity guard.
    pub fn curvature(&self, u: f64) -> Result<f64, GeometryError> {
        curve_curvature(self, u, DEFAULT_SINGULAR_EPS)
    }
}

/// Evaluate `C(u)` and derivatives up to order `k`.
pub fn eval_curve(curve: &NurbsCurve, u: f64, k: usize) -> Result<Vec<Point3>, GeometryError> {
    curve.derivatives(u, k)
}

/// Curvature of the curve at `u` (1/mm).
///
/// Fails when `|C'(u)|` drops below `singular_eps`.
pub fn curve_curvature(curve: &NurbsCurve, u: f64, singular_eps: f64) -> Result<f64, GeometryError> {
    let d = curve.derivatives(u, 2)?;
    let speed = d[1].norm();
    if speed < singular_eps {
        return Err(GeometryError::SingularParameterization { u, speed });
    }
    Ok(d[1].cross(&d[2]).norm() / (speed * speed * speed))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn v(x: f64, y: f64, z: f64) -> Point3 {
        Vector3::new(x, y, z)
    }

    #[test]
    fn line_evaluates_linearly() {
        let c = NurbsCurve::line(v(0.0, 0.0, 0.0), v(10.0, 0.0, 0.0));
        let d = eval_curve(&c, 0.3, 1).unwrap();
        assert!((d[0] - v(3.0, 0.0, 0.0)).norm() < 1e-15);
        assert!((d[1] - v(10.0, 0.0, 0.0)).norm() < 1e-12);
        assert_eq!(c.curvature(0.7).unwrap(), 0.0);
    }

    #[test]
    fn clamped_end_hits_last_control_point() {
        let pts = vec![v(0.0, 0.0, 0.0), v(1.0, 2.0, 0.0), v(3.0, 1.0, 1.0), v(4.0, 4.0, 2.0)];
        let c =
            NurbsCurve::new(2, vec![0.0, 0.0, 0.0, 0.4, 1.0, 1.0, 1.0], pts.clone(), vec![1.0, 2.0, 0.5, 1.5]).unwrap();
        assert!(c.is_clamped());
        assert_eq!(c.point_at(0.0).unwrap(), pts[0]);
        assert!((c.point_at(1.0).unwrap() - pts[3]).norm() < 1e-15);
    }

    #[test]
    fn circle_starts_on_axis() {
        let c = NurbsCurve::circle(Vector3::zeros(), 10.0).unwrap();
        assert!((c.point_at(0.0).unwrap() - v(10.0, 0.0, 0.0)).norm() < 1e-15);
        for i in 0..=100 {
            let u = i as f64 / 100.0;
            let k = c.curvature(u).unwrap();
            assert!((k - 0.1).abs() < 1e-12, "u={u} k={k}");
        }
    }

    #[test]
    fn quadratic_bezier_apex_curvature() {
        let c = NurbsCurve::non_rational(
            2,
            vec![0.0, 0.0, 0.0, 1.0, 1.0, 1.0],
            vec![v(0.0, 0.0, 0.0), v(1.0, 1.0, 0.0), v(2.0, 0.0, 0.0)],
        )
        .unwrap();
        assert!((c.curvature(0.5).unwrap() - 1.0).abs() < 1e-12);
    }

    #[test]
    fn constructor_rejects_bad_input() {
        let pts = vec![v(0.0, 0.0, 0.0), v(1.0, 0.0, 0.0)];
        assert!(NurbsCurve::new(1, vec![0.0, 0.0, 1.0, 1.0], pts.clone(), vec![1.0, 0.0]).is_err());
        assert!(NurbsCurve::new(1, vec![0.0, 1.0, 0.5, 1.0], pts.clone(), vec![1.0, 1.0]).is_err());
        assert!(NurbsCurve::new(1, vec![0.0, 0.0, 1.0], pts.clone(), vec![1.0, 1.0]).is_err());
        assert!(NurbsCurve::new(2, vec![0.0; 5], pts, vec![1.0, 1.0]).is_err());
    }

    #[test]
    fn singular_parameterization_is_reported() {
        // repeated control points give C'(0) = 0
        let pts = vec![v(0.0, 0.0, 0.0), v(0.0, 0.0, 0.0), v(1.0, 1.0, 0.0)];
        let c = NurbsCurve::non_rational(2, vec![0.0, 0.0, 0.0, 1.0, 1.0, 1.0], pts).unwrap();
        assert!(matches!(curve_curvature(&c, 0.0, 1e-12), Err(GeometryError::SingularParameterization { .. })));
    }

    #[test]
    fn json_wire_form() {
        let c = NurbsCurve::line(v(0.0, 0.0, 0.0), v(1.0, 2.0, 3.0));
        let s = serde_json::to_string(&c).unwrap();
        assert!(s.contains("\"points\":[[0.0,0.0,0.0],[1.0,2.0,3.0]]"));
        let back: NurbsCurve = serde_json::from_str(&s).unwrap();
        assert_eq!(back, c);
        let bad = r#"{"degree":1,"knots":[0,0,1,1],"points":[[0,0,0],[1,0,0]],"weights":[1,-1]}"#;
        assert!(serde_json::from_str::<NurbsCurve>(bad).is_err());
    }
}

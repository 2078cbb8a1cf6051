//! Parametric surfaces and their curvature through the first and second
//! fundamental forms.

use nalgebra::Vector3;

use super::basis::{basis_derivatives, find_span};
use super::{GeometryError, Point3};

/// A surface point with partial derivatives up to second order.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SurfaceDerivatives {
    pub point: Point3,
    pub su: Vector3<f64>,
    pub sv: Vector3<f64>,
    pub suu: Vector3<f64>,
    pub suv: Vector3<f64>,
    pub svv: Vector3<f64>,
}

/// Anything that maps `(u, v)` to a point with second-order partials.
pub trait ParametricSurface {
    fn derivatives(&self, u: f64, v: f64) -> Result<SurfaceDerivatives, GeometryError>;
}

/// Curvature record at one surface point.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CurvatureSummary {
    pub gaussian: f64,
    pub mean: f64,
    pub k_min: f64,
    pub k_max: f64,
    pub e: f64,
    pub f: f64,
    pub g: f64,
    pub l: f64,
    pub m: f64,
    pub n: f64,
    /// `unit(S_u x S_v)`; the sign of `mean` follows this orientation.
    pub normal: Vector3<f64>,
}

const REGULARITY_EPS: f64 = 1e-14;

/// Mean, Gaussian and principal curvatures at `(u, v)`.
pub fn surface_curvatures<S: ParametricSurface + ?Sized>(
    surface: &S,
    u: f64,
    v: f64,
) -> Result<CurvatureSummary, GeometryError> {
    let d = surface.derivatives(u, v)?;
    let all = [d.su, d.sv, d.suu, d.suv, d.svv];
    if all.iter().any(|w| !w.iter().all(|c| c.is_finite())) {
        return Err(GeometryError::DegenerateSurface { u, v });
    }
    let cross = d.su.cross(&d.sv);
    let area = cross.norm();
    if area <= REGULARITY_EPS * d.su.norm().max(1.0) * d.sv.norm().max(1.0) {
        return Err(GeometryError::DegenerateSurface { u, v });
    }
    let normal = cross / area;
    let e = d.su.dot(&d.su);
    let f = d.su.dot(&d.sv);
    let g = d.sv.dot(&d.sv);
    let l = normal.dot(&d.suu);
    let m = normal.dot(&d.suv);
    let n = normal.dot(&d.svv);
    let det = e * g - f * f;
    let mean = (l * g - 2.0 * m * f + n * e) / (2.0 * det);
    let gaussian = (l * n - m * m) / det;
    let radicand = (mean * mean - gaussian).max(0.0);
    let root = radicand.sqrt();
    Ok(CurvatureSummary { gaussian, mean, k_min: mean - root, k_max: mean + root, e, f, g, l, m, n, normal })
}

/// Plane through `origin` spanned by `axis_u`, `axis_v`.
#[derive(Debug, Clone, Copy)]
pub struct Plane {
    pub origin: Point3,
    pub axis_u: Vector3<f64>,
    pub axis_v: Vector3<f64>,
}

impl ParametricSurface for Plane {
    fn derivatives(&self, u: f64, v: f64) -> Result<SurfaceDerivatives, GeometryError> {
        Ok(SurfaceDerivatives {
            point: self.origin + self.axis_u * u + self.axis_v * v,
            su: self.axis_u,
            sv: self.axis_v,
            suu: Vector3::zeros(),
            suv: Vector3::zeros(),
            svv: Vector3::zeros(),
        })
    }
}

/// Sphere of radius `radius`; `u` is longitude, `v` latitude (radians).
/// `S_u x S_v` points outward, so `H = -1/R` there.
#[derive(Debug, Clone, Copy)]
pub struct Sphere {
    pub radius: f64,
}

impl ParametricSurface for Sphere {
    fn derivatives(&self, u: f64, v: f64) -> Result<SurfaceDerivatives, GeometryError> {
        let r = self.radius;
        let (su_, cu) = u.sin_cos();
        let (sv_, cv) = v.sin_cos();
        Ok(SurfaceDerivatives {
            point: Vector3::new(r * cv * cu, r * cv * su_, r * sv_),
            su: Vector3::new(-r * cv * su_, r * cv * cu, 0.0),
            sv: Vector3::new(-r * sv_ * cu, -r * sv_ * su_, r * cv),
            suu: Vector3::new(-r * cv * cu, -r * cv * su_, 0.0),
            suv: Vector3::new(r * sv_ * su_, -r * sv_ * cu, 0.0),
            svv: Vector3::new(-r * cv * cu, -r * cv * su_, -r * sv_),
        })
    }
}

/// Circular cylinder about the z axis; `u` is the angle, `v` the height.
#[derive(Debug, Clone, Copy)]
pub struct Cylinder {
    pub radius: f64,
}

impl ParametricSurface for Cylinder {
    fn derivatives(&self, u: f64, v: f64) -> Result<SurfaceDerivatives, GeometryError> {
        let r = self.radius;
        let (s, c) = u.sin_cos();
        Ok(SurfaceDerivatives {
            point: Vector3::new(r * c, r * s, v),
            su: Vector3::new(-r * s, r * c, 0.0),
            sv: Vector3::new(0.0, 0.0, 1.0),
            suu: Vector3::new(-r * c, -r * s, 0.0),
            suv: Vector3::zeros(),
            svv: Vector3::zeros(),
        })
    }
}

/// Tensor-product rational B-spline patch.
///
/// `control_points[i][j]` pairs the i-th `u` basis with the j-th `v` basis.
#[derive(Debug, Clone)]
pub struct NurbsSurface {
    degree_u: usize,
    degree_v: usize,
    knots_u: Vec<f64>,
    knots_v: Vec<f64>,
    control_points: Vec<Vec<Point3>>,
    weights: Vec<Vec<f64>>,
}

impl NurbsSurface {
    pub fn new(
        degree_u: usize,
        degree_v: usize,
        knots_u: Vec<f64>,
        knots_v: Vec<f64>,
        control_points: Vec<Vec<Point3>>,
        weights: Vec<Vec<f64>>,
    ) -> Result<Self, GeometryError> {
        let nu = control_points.len();
        let nv = control_points.first().map_or(0, |r| r.len());
        if degree_u == 0 || degree_v == 0 || nu < degree_u + 1 || nv < degree_v + 1 {
            return Err(GeometryError::InvalidCurve("surface net too small for its degrees".into()));
        }
        if control_points.iter().any(|r| r.len() != nv) || weights.len() != nu || weights.iter().any(|r| r.len() != nv)
        {
            return Err(GeometryError::InvalidCurve("ragged control net".into()));
        }
        if knots_u.len() != nu + degree_u + 1 || knots_v.len() != nv + degree_v + 1 {
            return Err(GeometryError::InvalidCurve("knot count mismatch".into()));
        }
        for k in [&knots_u, &knots_v] {
            if k.windows(2).any(|w| w[1] < w[0]) {
                return Err(GeometryError::InvalidCurve("knots must be non-decreasing".into()));
            }
        }
        if weights.iter().flatten().any(|w| !(w.is_finite() && *w > 0.0)) {
            return Err(GeometryError::InvalidWeights);
        }
        Ok(Self { degree_u, degree_v, knots_u, knots_v, control_points, weights })
    }

    pub fn domain(&self) -> ((f64, f64), (f64, f64)) {
        let nu = self.control_points.len();
        let nv = self.control_points[0].len();
        ((self.knots_u[self.degree_u], self.knots_u[nu]), (self.knots_v[self.degree_v], self.knots_v[nv]))
    }
}

impl ParametricSurface for NurbsSurface {
    fn derivatives(&self, u: f64, v: f64) -> Result<SurfaceDerivatives, GeometryError> {
        let ((u0, u1), (v0, v1)) = self.domain();
        if !(u >= u0 && u <= u1) {
            return Err(GeometryError::ParameterOutOfRange { u, lo: u0, hi: u1 });
        }
        if !(v >= v0 && v <= v1) {
            return Err(GeometryError::ParameterOutOfRange { u: v, lo: v0, hi: v1 });
        }
        let (p, q) = (self.degree_u, self.degree_v);
        let nu = self.control_points.len() - 1;
        let nv = self.control_points[0].len() - 1;
        let su = find_span(nu, p, u, &self.knots_u);
        let sv = find_span(nv, q, v, &self.knots_v);
        let bu = basis_derivatives(u, su, p, 2, &self.knots_u)?;
        let bv = basis_derivatives(v, sv, q, 2, &self.knots_v)?;

        // Homogeneous derivatives A^{(k,l)} and w^{(k,l)} for k + l <= 2.
        let mut a = [[Vector3::zeros(); 3]; 3];
        let mut w = [[0.0; 3]; 3];
        for k in 0..=2 {
            for l in 0..=(2 - k) {
                for i in 0..=p {
                    for j in 0..=q {
                        let ci = su - p + i;
                        let cj = sv - q + j;
                        let nw = bu[k][i] * bv[l][j] * self.weights[ci][cj];
                        a[k][l] += self.control_points[ci][cj] * nw;
                        w[k][l] += nw;
                    }
                }
            }
        }
        if !(w[0][0] > 0.0) {
            return Err(GeometryError::InvalidWeights);
        }
        let binom = |n: usize, k: usize| -> f64 {
            match (n, k) {
                (_, 0) => 1.0,
                (2, 1) => 2.0,
                _ => 1.0,
            }
        };
        let mut s = [[Vector3::zeros(); 3]; 3];
        for k in 0..=2 {
            for l in 0..=(2 - k) {
                let mut vv = a[k][l];
                for j in 1..=l {
                    vv -= s[k][l - j] * (binom(l, j) * w[0][j]);
                }
                for i in 1..=k {
                    vv -= s[k - i][l] * (binom(k, i) * w[i][0]);
                    let mut v2 = Vector3::zeros();
                    for j in 1..=l {
                        v2 += s[k - i][l - j] * (binom(l, j) * w[i][j]);
                    }
                    vv -= v2 * binom(k, i);
                }
                s[k][l] = vv / w[0][0];
            }
        }
        Ok(SurfaceDerivatives { point: s[0][0], su: s[1][0], sv: s[0][1], suu: s[2][0], suv: s[1][1], svv: s[0][2] })
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn plane_is_flat() {
        let plane = Plane { origin: Vector3::zeros(), axis_u: Vector3::x(), axis_v: Vector3::y() };
        let c = surface_curvatures(&plane, 0.3, -2.0).unwrap();
        assert_eq!(c.gaussian, 0.0);
        assert_eq!(c.mean, 0.0);
        assert_eq!(c.normal, Vector3::z());
    }

    #[test]
    fn sphere_curvatures() {
        let s = Sphere { radius: 5.0 };
        let c = surface_curvatures(&s, 0.7, 0.3).unwrap();
        assert!((c.gaussian - 0.04).abs() < 1e-12);
        // outward normal: H is negative
        assert!((c.mean + 0.2).abs() < 1e-12);
        assert!((c.gaussian - c.k_min * c.k_max).abs() < 1e-9 * c.gaussian.abs());
    }

    #[test]
    fn cylinder_curvatures() {
        let c = surface_curvatures(&Cylinder { radius: 10.0 }, 1.1, 4.0).unwrap();
        assert!(c.gaussian.abs() < 1e-15);
        assert!((c.mean.abs() - 0.05).abs() < 1e-12);
        assert!((c.k_max.abs().max(c.k_min.abs()) - 0.1).abs() < 1e-12);
    }

    #[test]
    fn sphere_pole_is_degenerate() {
        let s = Sphere { radius: 1.0 };
        assert!(matches!(
            surface_curvatures(&s, 0.0, std::f64::consts::FRAC_PI_2),
            Err(GeometryError::DegenerateSurface { .. })
        ));
    }
}

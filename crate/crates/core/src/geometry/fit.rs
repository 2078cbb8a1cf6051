//! Curve fitting through ordered point data.
//!
//! Interpolation uses chord-length parameters and averaged clamped knots,
//! which keeps the collocation matrix banded (bandwidth `p`) and totally
//! positive, so elimination without pivoting is stable.

use nalgebra::{DMatrix, Vector3};

use super::basis::{basis_functions, find_span};
use super::{GeometryError, NurbsCurve, Point3, DUPLICATE_TOLERANCE};

/// How `fit_curve` uses the data.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum FitMode {
    /// Pass through every (deduplicated) point.
    Interpolate,
    /// Least squares with the given number of control points; the end
    /// points are reproduced exactly.
    Approximate { control_points: usize },
}

#[derive(Debug, Clone)]
pub struct FittedCurve {
    pub curve: NurbsCurve,
    /// Parameter assigned to each surviving data point.
    pub params: Vec<f64>,
    /// Largest distance between a data point and the curve at its parameter.
    pub max_residual: f64,
    /// Consecutive coincident points dropped before fitting.
    pub duplicates_removed: usize,
}

/// Drop consecutive points closer than [`DUPLICATE_TOLERANCE`].
pub fn dedup_points(points: &[Point3]) -> (Vec<Point3>, usize) {
    let mut out: Vec<Point3> = Vec::with_capacity(points.len());
    for p in points {
        match out.last() {
            Some(last) if (p - last).norm() <= DUPLICATE_TOLERANCE => {}
            _ => out.push(*p),
        }
    }
    let removed = points.len() - out.len();
    (out, removed)
}

/// Normalised chord-length parameters in `[0, 1]`.
pub fn chord_length_params(points: &[Point3]) -> Vec<f64> {
    let mut acc = vec![0.0; points.len()];
    for i in 1..points.len() {
        acc[i] = acc[i - 1] + (points[i] - points[i - 1]).norm();
    }
    let total = *acc.last().unwrap_or(&0.0);
    if total > 0.0 {
        for a in acc.iter_mut() {
            *a /= total;
        }
        if let Some(last) = acc.last_mut() {
            *last = 1.0;
        }
    }
    acc
}

/// Clamped knot vector by averaging `p` consecutive parameters.
fn averaged_knots(params: &[f64], p: usize) -> Vec<f64> {
    let n = params.len() - 1;
    let mut knots = vec![0.0; n + p + 2];
    for k in knots.iter_mut().skip(n + 1) {
        *k = 1.0;
    }
    for j in 1..=n.saturating_sub(p) {
        let s: f64 = params[j..j + p].iter().sum();
        knots[j + p] = s / p as f64;
    }
    knots
}

/// Knots for least-squares approximation with `n + 1` control points and
/// `m + 1` data parameters, spread so every span holds data.
fn approximation_knots(params: &[f64], n: usize, p: usize) -> Vec<f64> {
    let m = params.len() - 1;
    let mut knots = vec![0.0; n + p + 2];
    for k in knots.iter_mut().skip(n + 1) {
        *k = 1.0;
    }
    let d = (m + 1) as f64 / (n - p + 1) as f64;
    for j in 1..=(n - p) {
        let jd = j as f64 * d;
        let i = jd.floor() as usize;
        let alpha = jd - i as f64;
        knots[p + j] = (1.0 - alpha) * params[i - 1] + alpha * params[i];
    }
    knots
}

/// Solve a banded system with lower and upper bandwidth `bw` by Gaussian
/// elimination without pivoting. `band[i][j - i + bw]` holds `A[i][j]`.
fn solve_banded(mut band: Vec<Vec<f64>>, mut rhs: Vec<Point3>, bw: usize) -> Result<Vec<Point3>, GeometryError> {
    let n = rhs.len();
    for k in 0..n {
        let pivot = band[k][bw];
        if pivot.abs() < 1e-300 {
            return Err(GeometryError::SingularSystem);
        }
        for i in (k + 1)..n.min(k + bw + 1) {
            let factor = band[i][k + bw - i] / pivot;
            if factor == 0.0 {
                continue;
            }
            for j in k..n.min(k + bw + 1) {
                let v = band[k][j + bw - k];
                band[i][j + bw - i] -= factor * v;
            }
            let r = rhs[k];
            rhs[i] -= r * factor;
        }
    }
    let mut x = vec![Vector3::zeros(); n];
    for i in (0..n).rev() {
        let mut acc = rhs[i];
        for j in (i + 1)..n.min(i + bw + 1) {
            acc -= x[j] * band[i][j + bw - i];
        }
        x[i] = acc / band[i][bw];
    }
    Ok(x)
}

fn max_residual(curve: &NurbsCurve, params: &[f64], points: &[Point3]) -> Result<f64, GeometryError> {
    let mut worst = 0.0f64;
    for (u, q) in params.iter().zip(points) {
        worst = worst.max((curve.point_at(*u)? - q).norm());
    }
    Ok(worst)
}

/// Fit a degree-`p` curve to ordered points.
pub fn fit_curve(points: &[Point3], p: usize, mode: FitMode) -> Result<FittedCurve, GeometryError> {
    if p == 0 {
        return Err(GeometryError::InvalidCurve("degree must be at least 1".into()));
    }
    let (pts, removed) = dedup_points(points);
    if pts.len() < p + 1 {
        return Err(GeometryError::InsufficientData { needed: p + 1, got: pts.len() });
    }
    let params = chord_length_params(&pts);
    let curve = match mode {
        FitMode::Interpolate => interpolate(&pts, &params, p)?,
        FitMode::Approximate { control_points } => approximate(&pts, &params, p, control_points)?,
    };
    let max_residual = max_residual(&curve, &params, &pts)?;
    Ok(FittedCurve { curve, params, max_residual, duplicates_removed: removed })
}

fn interpolate(pts: &[Point3], params: &[f64], p: usize) -> Result<NurbsCurve, GeometryError> {
    let n = pts.len() - 1;
    let knots = averaged_knots(params, p);
    let mut band = vec![vec![0.0; 2 * p + 1]; n + 1];
    for (k, &u) in params.iter().enumerate() {
        let span = find_span(n, p, u, &knots);
        let basis = basis_functions(u, span, p, &knots)?;
        for (j, b) in basis.iter().enumerate() {
            let col = span - p + j;
            if col + p < k || col > k + p {
                if *b != 0.0 {
                    return Err(GeometryError::SingularSystem);
                }
                continue;
            }
            band[k][col + p - k] = *b;
        }
    }
    let ctrl = solve_banded(band, pts.to_vec(), p)?;
    NurbsCurve::non_rational(p, knots, ctrl)
}

fn approximate(pts: &[Point3], params: &[f64], p: usize, count: usize) -> Result<NurbsCurve, GeometryError> {
    let m = pts.len() - 1;
    if count < p + 1 || count > m + 1 {
        return Err(GeometryError::InvalidCurve(format!(
            "control-point count {count} must lie in [{}, {}]",
            p + 1,
            m + 1
        )));
    }
    if count == m + 1 {
        return interpolate(pts, params, p);
    }
    let n = count - 1;
    let knots = approximation_knots(params, n, p);
    if n == 1 {
        return NurbsCurve::non_rational(p, knots, vec![pts[0], pts[m]]);
    }

    // Basis matrix over interior data (rows) and interior controls (cols).
    let mut basis_full = DMatrix::<f64>::zeros(m + 1, n + 1);
    for (k, &u) in params.iter().enumerate() {
        let span = find_span(n, p, u, &knots);
        for (j, b) in basis_functions(u, span, p, &knots)?.into_iter().enumerate() {
            basis_full[(k, span - p + j)] = b;
        }
    }
    let rows = m - 1;
    let cols = n - 1;
    let nmat = basis_full.view((1, 1), (rows, cols)).into_owned();
    let mut rhs = DMatrix::<f64>::zeros(rows, 3);
    for k in 1..m {
        let r = pts[k] - pts[0] * basis_full[(k, 0)] - pts[m] * basis_full[(k, n)];
        for c in 0..3 {
            rhs[(k - 1, c)] = r[c];
        }
    }
    let normal = nmat.transpose() * &nmat;
    let b = nmat.transpose() * rhs;
    let sol = normal.cholesky().ok_or(GeometryError::SingularSystem)?.solve(&b);
    let mut ctrl = Vec::with_capacity(n + 1);
    ctrl.push(pts[0]);
    for i in 0..cols {
        ctrl.push(Vector3::new(sol[(i, 0)], sol[(i, 1)], sol[(i, 2)]));
    }
    ctrl.push(pts[m]);
    NurbsCurve::non_rational(p, knots, ctrl)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn quarter_circle(samples: usize, r: f64) -> Vec<Point3> {
        (0..samples)
            .map(|i| {
                let t = std::f64::consts::FRAC_PI_2 * i as f64 / (samples - 1) as f64;
                Vector3::new(r * t.cos(), r * t.sin(), 0.0)
            })
            .collect()
    }

    #[test]
    fn two_points_give_the_segment() {
        let a = Vector3::new(1.0, 2.0, 3.0);
        let b = Vector3::new(4.0, 6.0, 3.0);
        let f = fit_curve(&[a, b], 1, FitMode::Interpolate).unwrap();
        assert_eq!(f.curve.point_at(0.0).unwrap(), a);
        assert!((f.curve.point_at(1.0).unwrap() - b).norm() < 1e-15);
        assert!((f.curve.point_at(0.5).unwrap() - (a + b) / 2.0).norm() < 1e-14);
    }

    #[test]
    fn interpolation_reproduces_samples() {
        let pts = quarter_circle(17, 10.0);
        let f = fit_curve(&pts, 3, FitMode::Interpolate).unwrap();
        assert!(f.curve.is_clamped());
        for (u, q) in f.params.iter().zip(&pts) {
            assert!((f.curve.point_at(*u).unwrap() - q).norm() < 1e-9);
        }
        assert!(f.max_residual < 1e-9);
    }

    #[test]
    fn approximation_stays_near_the_arc() {
        let r = 10.0;
        let pts = quarter_circle(17, r);
        let f = fit_curve(&pts, 3, FitMode::Approximate { control_points: 8 }).unwrap();
        assert_eq!(f.curve.control_points().len(), 8);
        // residual against the analytic circle, sampled densely
        let mut worst = 0.0f64;
        for i in 0..=2000 {
            let c = f.curve.point_at(i as f64 / 2000.0).unwrap();
            worst = worst.max((c.xy().norm() - r).abs());
        }
        assert!(worst <= 0.01 * r, "worst radial error {worst}");
        assert!(f.max_residual <= 0.01 * r);
        assert_eq!(f.curve.point_at(0.0).unwrap(), pts[0]);
    }

    #[test]
    fn duplicates_are_removed_before_fitting() {
        let a = Vector3::new(0.0, 0.0, 0.0);
        let b = Vector3::new(1.0, 0.0, 0.0);
        let f = fit_curve(&[a, a, b, b, b], 1, FitMode::Interpolate).unwrap();
        assert_eq!(f.duplicates_removed, 3);
        assert_eq!(f.curve.control_points().len(), 2);
        let err = fit_curve(&[a, a, a], 1, FitMode::Interpolate).unwrap_err();
        assert!(matches!(err, GeometryError::InsufficientData { needed: 2, got: 1 }));
    }

    #[test]
    fn large_inputs_use_the_banded_path() {
        let pts: Vec<Point3> = (0..3000)
            .map(|i| {
                let t = i as f64 * 0.01;
                Vector3::new(t * 5.0, (t * 1.3).sin() * 4.0, 0.2)
            })
            .collect();
        let f = fit_curve(&pts, 3, FitMode::Interpolate).unwrap();
        assert!(f.max_residual < 1e-9, "{}", f.max_residual);
    }

    #[test]
    fn approximation_rejects_bad_counts() {
        let pts = quarter_circle(10, 1.0);
        assert!(fit_curve(&pts, 3, FitMode::Approximate { control_points: 3 }).is_err());
        assert!(fit_curve(&pts, 3, FitMode::Approximate { control_points: 11 }).is_err());
        let f = fit_curve(&pts, 3, FitMode::Approximate { control_points: 10 }).unwrap();
        assert!(f.max_residual < 1e-9);
    }
}

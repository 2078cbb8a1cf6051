use serde::Serialize;

use super::{compute_kcr, schedule_feedrate, KinematicLimits, VtgConfig, VtgError};
use crate::geometry::{NurbsCurve, Point3, DUPLICATE_TOLERANCE};

/// Output of [`generate_path`].
///
/// Per-point vectors (`points`, `params`, `curvature`, `feeds`) share one
/// index; per-step vectors (`steps`, `fluctuation`, `predictor_fluctuation`)
/// have one entry fewer.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct InterpolatedPath {
    pub points: Vec<Point3>,
    pub params: Vec<f64>,
    /// Curvature at each accepted parameter, 1/mm.
    pub curvature: Vec<f64>,
    /// Scheduled feed at each point, m/s.
    pub feeds: Vec<f64>,
    /// Local step length used for each segment, mm.
    pub steps: Vec<f64>,
    /// Speed fluctuation of the corrected parameter, percent.
    pub fluctuation: Vec<f64>,
    /// Speed fluctuation the Taylor predictor alone would have produced.
    pub predictor_fluctuation: Vec<f64>,
    /// Nominal step `L_i`, mm.
    pub step_length: f64,
    /// Critical curvature that every accepted point respects, 1/mm.
    pub kcr: f64,
    pub newton_iterations: usize,
}

impl InterpolatedPath {
    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }

    /// Arc length of the resampled polyline, mm.
    pub fn length(&self) -> f64 {
        self.points.windows(2).map(|w| (w[1] - w[0]).norm()).sum()
    }
}

/// `(L - chord) / L * 100`.
pub fn speed_fluctuation(step: f64, chord: f64) -> f64 {
    (step - chord) / step * 100.0
}

/// Second-order Taylor estimate of the parameter one chord `step` ahead of `u`.
///
/// The result never exceeds the end of the domain.
pub fn predict_parameter(curve: &NurbsCurve, u: f64, step: f64, singular_eps: f64) -> Result<f64, VtgError> {
    let d = curve.derivatives(u, 2)?;
    let speed = d[1].norm();
    if speed < singular_eps || speed == 0.0 {
        return Err(VtgError::Singular { u });
    }
    let s2 = speed * speed;
    let first = step / speed;
    let second = d[1].dot(&d[2]) * step * step / (2.0 * s2 * s2);
    let mut next = u + first - second;
    if !(next > u) {
        // The quadratic term overshot backwards; keep the first-order part.
        next = u + first;
    }
    Ok(next.min(curve.domain().1))
}

/// Knobs of the Newton corrector.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CorrectorSettings {
    pub phi: f64,
    pub tau: f64,
    pub max_iters: usize,
    /// Iterates are kept strictly above this parameter (normally `u_i`).
    pub floor: f64,
}

/// Result of [`correct_parameter`].
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Correction {
    pub u: f64,
    /// `|C(u) - P_i|`, mm.
    pub chord: f64,
    pub iterations: usize,
    /// True when the residual reached working precision, false when the
    /// iterate was only inside the `phi` acceptance band.
    pub converged: bool,
    /// The curve ended before the chord reached the requested length.
    pub reached_end: bool,
}

/// Newton iteration on `|C(u) - P_i| - L`.
///
/// Iterates until the residual is at working precision. If the iteration
/// budget runs out, the best iterate is returned unconverged only when it is
/// inside the band `phi * L`; otherwise an error carries it. Steps that end up
/// no longer than `tau * L` are rejected unless the curve itself ended.
pub fn correct_parameter(
    curve: &NurbsCurve,
    u0: f64,
    anchor: &Point3,
    step: f64,
    settings: &CorrectorSettings,
) -> Result<Correction, VtgError> {
    let (_, hi) = curve.domain();
    let tight = 1e-12 * step;
    let mut u = u0.clamp(settings.floor, hi);
    let mut best = (u, f64::INFINITY, f64::NAN);
    for it in 1..=settings.max_iters {
        let d = curve.derivatives(u, 1)?;
        let diff = d[0] - anchor;
        let dist = diff.norm();
        let resid = dist - step;
        if resid.abs() < best.1 {
            best = (u, resid.abs(), dist);
        }
        if resid.abs() <= tight {
            return finish(u, dist, it, true, false, step, settings);
        }
        if u >= hi && resid < 0.0 {
            return finish(u, dist, it, true, true, step, settings);
        }
        if dist == 0.0 {
            return Err(VtgError::Stalled { u });
        }
        let slope = diff.dot(&d[1]) / dist;
        if slope.abs() <= f64::EPSILON * d[1].norm() || !slope.is_finite() {
            return Err(VtgError::Stalled { u });
        }
        let mut next = u - resid / slope;
        if next <= settings.floor {
            next = 0.5 * (settings.floor + u);
        }
        next = next.min(hi);
        if next == u {
            // No representable progress is possible.
            break;
        }
        u = next;
    }
    let (bu, bres, bdist) = best;
    if bres <= settings.phi * step {
        finish(bu, bdist, settings.max_iters, false, false, step, settings)
    } else {
        Err(VtgError::NonConvergence { best_u: bu, residual: bres, iterations: settings.max_iters })
    }
}

fn finish(
    u: f64,
    chord: f64,
    iterations: usize,
    converged: bool,
    reached_end: bool,
    step: f64,
    settings: &CorrectorSettings,
) -> Result<Correction, VtgError> {
    if !reached_end && chord <= settings.tau * step {
        return Err(VtgError::StepTooShort { chord, min: settings.tau * step });
    }
    Ok(Correction { u, chord, iterations, converged, reached_end })
}

/// Robust fallback: bracket the chord length along the curve and bisect.
fn bisect_chord(curve: &NurbsCurve, u_from: f64, anchor: &Point3, step: f64) -> Result<Correction, VtgError> {
    let (_, hi) = curve.domain();
    let dist = |u: f64| -> Result<f64, VtgError> { Ok((curve.point_at(u)? - anchor).norm()) };
    const SCAN: usize = 256;
    let mut a = u_from;
    let mut b = None;
    for k in 1..=SCAN {
        let t = u_from + (hi - u_from) * k as f64 / SCAN as f64;
        if dist(t)? >= step {
            b = Some(t);
            break;
        }
        a = t;
    }
    let Some(mut b) = b else {
        let chord = dist(hi)?;
        return Ok(Correction { u: hi, chord, iterations: SCAN, converged: true, reached_end: true });
    };
    let mut iterations = SCAN;
    while b - a > f64::EPSILON * hi.abs().max(1.0) && iterations < SCAN + 200 {
        let m = 0.5 * (a + b);
        if dist(m)? < step {
            a = m;
        } else {
            b = m;
        }
        iterations += 1;
    }
    Ok(Correction { u: b, chord: dist(b)?, iterations, converged: true, reached_end: false })
}

/// One predictor-corrector step from `(u, anchor)` with local step `h`.
fn advance(
    curve: &NurbsCurve,
    u: f64,
    anchor: &Point3,
    h: f64,
    cfg: &VtgConfig,
) -> Result<(Correction, f64), VtgError> {
    let (lo, hi) = curve.domain();
    let settings = CorrectorSettings { phi: cfg.phi, tau: cfg.tau, max_iters: cfg.max_newton_iters, floor: u };
    let predicted = match predict_parameter(curve, u, h, cfg.singular_eps) {
        Ok(p) => p,
        Err(VtgError::Singular { .. }) => return Ok((bisect_chord(curve, u, anchor, h)?, f64::NAN)),
        Err(e) => return Err(e),
    };
    let pred_chord = (curve.point_at(predicted)? - anchor).norm();
    let attempt = match correct_parameter(curve, predicted, anchor, h, &settings) {
        Err(VtgError::Stalled { u: su }) => {
            let nudge = (su + f64::EPSILON * (hi - lo)).min(hi);
            correct_parameter(curve, nudge, anchor, h, &settings)
        }
        other => other,
    };
    let corr = match attempt {
        Ok(c) => c,
        Err(VtgError::Geometry(e)) => return Err(e.into()),
        Err(_) => bisect_chord(curve, u, anchor, h)?,
    };
    Ok((corr, pred_chord))
}

/// Resample `curve` into points spaced exactly `cfg.step` apart.
///
/// Every accepted parameter has curvature at most `K_cr`; where the cap is
/// violated the local step is halved down to `tau * step` before giving up.
/// The last point is `C(u_max)` and the final step may be shorter than the
/// nominal one. Feeds are scheduled with free boundaries.
pub fn generate_path(
    curve: &NurbsCurve,
    cfg: &VtgConfig,
    limits: &KinematicLimits,
) -> Result<InterpolatedPath, VtgError> {
    cfg.validate()?;
    let kcr = compute_kcr(limits, cfg.delta)?.value;
    let cap = kcr * (1.0 + 1e-12);
    let (lo, hi) = curve.domain();
    let nominal = cfg.step;
    let min_step = cfg.tau * nominal;

    let kappa_at =
        |u: f64| -> Result<f64, VtgError> { Ok(crate::geometry::curve_curvature(curve, u, cfg.singular_eps)?) };

    let start = curve.point_at(lo)?;
    let k0 = kappa_at(lo)?;
    if k0 > cap {
        return Err(VtgError::CurvatureInfeasible { u_start: lo, u_end: lo, kappa: k0, kcr });
    }
    let mut path = InterpolatedPath {
        points: vec![start],
        params: vec![lo],
        curvature: vec![k0],
        feeds: Vec::new(),
        steps: Vec::new(),
        fluctuation: Vec::new(),
        predictor_fluctuation: Vec::new(),
        step_length: nominal,
        kcr,
        newton_iterations: 0,
    };

    // Each accepted chord exceeds tau^2 * L, so this bounds the point count.
    let limit = (curve.control_polygon_length() / (cfg.tau * min_step)).ceil() as usize + 16;

    let mut u = lo;
    let mut anchor = start;
    while u < hi {
        if path.points.len() > limit {
            return Err(VtgError::TooManyPoints { limit });
        }
        let mut h = nominal;
        loop {
            let (corr, pred_chord) = advance(curve, u, &anchor, h, cfg)?;
            path.newton_iterations += corr.iterations;
            if corr.reached_end {
                let end = curve.point_at(hi)?;
                let rest = (end - anchor).norm();
                if rest <= DUPLICATE_TOLERANCE {
                    // Already at the end; snap the last point onto it.
                    *path.points.last_mut().expect("non-empty") = end;
                    *path.params.last_mut().expect("non-empty") = hi;
                } else {
                    let kend = kappa_at(hi)?;
                    if kend > cap {
                        return Err(VtgError::CurvatureInfeasible { u_start: u, u_end: hi, kappa: kend, kcr });
                    }
                    let prev_curve = curve.point_at(u)?;
                    path.points.push(end);
                    path.params.push(hi);
                    path.curvature.push(kend);
                    path.steps.push(rest);
                    path.fluctuation.push(speed_fluctuation(rest, (end - prev_curve).norm()));
                    path.predictor_fluctuation.push(speed_fluctuation(rest, pred_chord.min(rest)));
                }
                u = hi;
                break;
            }
            let k = kappa_at(corr.u)?;
            if k > cap {
                h *= 0.5;
                if h < min_step {
                    return Err(VtgError::CurvatureInfeasible { u_start: u, u_end: corr.u, kappa: k, kcr });
                }
                continue;
            }
            let on_curve = curve.point_at(corr.u)?;
            let prev_curve = curve.point_at(u)?;
            let dir = (on_curve - anchor) / corr.chord;
            let next = if corr.u >= hi { on_curve } else { anchor + dir * h };
            path.points.push(next);
            path.params.push(corr.u);
            path.curvature.push(k);
            path.steps.push(h);
            path.fluctuation.push(speed_fluctuation(h, (on_curve - prev_curve).norm()));
            path.predictor_fluctuation.push(speed_fluctuation(h, pred_chord));
            u = corr.u;
            anchor = next;
            break;
        }
    }
    path.feeds = schedule_feedrate(&path, limits);
    Ok(path)
}

//! Equal-chord resampling of NURBS toolpaths under a curvature cap, and
//! feedrate scheduling against kinematic limits.
//!
//! Geometry is in millimetres and kinematics in SI units. Conversions
//! happen only where the two meet (`compute_kcr` and the scheduler).

mod feed;
mod interp;
mod kcr;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::geometry::{GeometryError, DEFAULT_SINGULAR_EPS};

pub use feed::{
    reconstruct_profile, schedule_feedrate, schedule_feedrate_from, segment_times, Boundary, KinematicProfile,
};
pub use interp::{
    correct_parameter, generate_path, predict_parameter, speed_fluctuation, Correction, CorrectorSettings,
    InterpolatedPath,
};
pub use kcr::{compute_kcr, KcrDiagnostics, KcrTerm};

/// Machine kinematic limits.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct KinematicLimits {
    /// Maximum feed, m/s.
    pub v_max: f64,
    /// Normal acceleration bound, m/s^2.
    pub a_n: f64,
    /// Tangential acceleration bound, m/s^2.
    pub a_t: f64,
    /// Normal jerk bound, m/s^3.
    pub j_n: f64,
    /// Tangential jerk bound, m/s^3.
    pub j_t: f64,
    /// Interpolation cycle, s.
    pub t_s: f64,
    /// Nozzle radius, mm.
    pub r_n: f64,
}

impl Default for KinematicLimits {
    fn default() -> Self {
        Self { v_max: 0.05, a_n: 5.0, a_t: 5.0, j_n: 500.0, j_t: 500.0, t_s: 1e-3, r_n: 0.2 }
    }
}

impl KinematicLimits {
    pub fn validate(&self) -> Result<(), VtgError> {
        let fields = [
            ("v_max", self.v_max),
            ("a_n", self.a_n),
            ("a_t", self.a_t),
            ("j_n", self.j_n),
            ("j_t", self.j_t),
            ("t_s", self.t_s),
            ("r_n", self.r_n),
        ];
        for (name, v) in fields {
            if !(v.is_finite() && v > 0.0) {
                return Err(VtgError::InvalidConfig(format!("{name} must be positive, got {v}")));
            }
        }
        Ok(())
    }
}

/// Parameters of the resampling loop.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct VtgConfig {
    /// Acceptance band of the corrector as a fraction of the step.
    pub phi: f64,
    /// Smallest admissible step as a fraction of the nominal step.
    pub tau: f64,
    /// Nominal interpolation step `L_i`, mm.
    pub step: f64,
    /// Chord-error tolerance, mm.
    pub delta: f64,
    pub max_newton_iters: usize,
    /// Sharp-corner angle, rad.
    pub delta_theta: f64,
    /// Singularity guard on `|C'(u)|`, mm.
    pub singular_eps: f64,
}

impl Default for VtgConfig {
    fn default() -> Self {
        Self {
            phi: 0.02,
            tau: 0.5,
            step: 1.0,
            delta: 0.01,
            max_newton_iters: 20,
            delta_theta: std::f64::consts::FRAC_PI_4,
            singular_eps: DEFAULT_SINGULAR_EPS,
        }
    }
}

impl VtgConfig {
    pub fn validate(&self) -> Result<(), VtgError> {
        let unit = |name: &str, v: f64| {
            if v > 0.0 && v < 1.0 {
                Ok(())
            } else {
                Err(VtgError::InvalidConfig(format!("{name} must lie in (0, 1), got {v}")))
            }
        };
        unit("phi", self.phi)?;
        unit("tau", self.tau)?;
        for (name, v) in [("step", self.step), ("delta", self.delta), ("delta_theta", self.delta_theta)] {
            if !(v.is_finite() && v > 0.0) {
                return Err(VtgError::InvalidConfig(format!("{name} must be positive, got {v}")));
            }
        }
        if self.max_newton_iters == 0 {
            return Err(VtgError::InvalidConfig("max_newton_iters must be at least 1".into()));
        }
        if !(self.singular_eps >= 0.0) {
            return Err(VtgError::InvalidConfig("singular_eps must be non-negative".into()));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Error)]
pub enum VtgError {
    #[error(transparent)]
    Geometry(#[from] GeometryError),
    #[error("invalid configuration: {0}")]
    InvalidConfig(String),
    #[error("singular parameterization at u = {u}")]
    Singular { u: f64 },
    #[error(
        "corrector did not converge after {iterations} iterations (best u = {best_u}, |chord - L| = {residual:e} mm)"
    )]
    NonConvergence { best_u: f64, residual: f64, iterations: usize },
    #[error("step too short: chord {chord} mm <= {min} mm")]
    StepTooShort { chord: f64, min: f64 },
    #[error("Newton stalled at u = {u} (zero derivative)")]
    Stalled { u: f64 },
    #[error("curvature {kappa} 1/mm exceeds K_cr = {kcr} 1/mm on u in [{u_start}, {u_end}] even at the minimum step")]
    CurvatureInfeasible { u_start: f64, u_end: f64, kappa: f64, kcr: f64 },
    #[error("resampling exceeded {limit} points")]
    TooManyPoints { limit: usize },
}

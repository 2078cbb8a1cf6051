//! NURBS curves, fitting, and surface curvature.

pub mod basis;
mod curve;
mod fit;
mod surface;

use thiserror::Error;

pub use curve::{curve_curvature, eval_curve, NurbsCurve};
pub use fit::{chord_length_params, dedup_points, fit_curve, FitMode, FittedCurve};
pub use surface::{
    surface_curvatures, CurvatureSummary, Cylinder, NurbsSurface, ParametricSurface, Plane, Sphere, SurfaceDerivatives,
};

/// Points and vectors are in millimetres.
pub type Point3 = nalgebra::Vector3<f64>;

/// Speeds `|C'(u)|` below this are treated as a singular parameterization.
pub const DEFAULT_SINGULAR_EPS: f64 = 1e-12;

/// Two points closer than this (mm) are considered coincident.
pub const DUPLICATE_TOLERANCE: f64 = 1e-9;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum GeometryError {
    #[error("parameter {u} outside the knot range [{lo}, {hi}]")]
    ParameterOutOfRange { u: f64, lo: f64, hi: f64 },
    #[error("knot span {span} is invalid for degree {degree}")]
    InvalidSpan { span: usize, degree: usize },
    #[error("invalid curve: {0}")]
    InvalidCurve(String),
    #[error("weights must be strictly positive")]
    InvalidWeights,
    #[error("singular parameterization at u = {u} (|C'| = {speed:e})")]
    SingularParameterization { u: f64, speed: f64 },
    #[error("need at least {needed} distinct points, got {got}")]
    InsufficientData { needed: usize, got: usize },
    #[error("fitting system is singular")]
    SingularSystem,
    #[error("degenerate surface point at (u, v) = ({u}, {v})")]
    DegenerateSurface { u: f64, v: f64 },
}

use serde::Serialize;

use super::{KinematicLimits, VtgError};

/// Which bound produced the critical curvature.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum KcrTerm {
    ChordError,
    NormalAcceleration,
    NormalJerk,
    Nozzle,
}

/// The four candidate curvature caps, all in 1/mm.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct KcrDiagnostics {
    pub chord_error: f64,
    pub normal_acceleration: f64,
    pub normal_jerk: f64,
    pub nozzle: f64,
    pub value: f64,
    pub limiting: KcrTerm,
}

/// Critical curvature (1/mm) from the kinematic limits and chord tolerance
/// `delta` (mm).
///
/// The per-cycle travel `v_max * T_s` is converted to mm before it meets
/// `delta`; the acceleration and jerk terms come out in 1/m and are divided
/// by 1000.
pub fn compute_kcr(limits: &KinematicLimits, delta: f64) -> Result<KcrDiagnostics, VtgError> {
    limits.validate()?;
    if !(delta.is_finite() && delta > 0.0) {
        return Err(VtgError::InvalidConfig(format!("delta must be positive, got {delta}")));
    }
    let cycle_mm = limits.v_max * limits.t_s * 1e3;
    let v2 = limits.v_max * limits.v_max;
    let terms = [
        (KcrTerm::ChordError, 8.0 * delta / (cycle_mm * cycle_mm + 4.0 * delta * delta)),
        (KcrTerm::NormalAcceleration, limits.a_n / v2 * 1e-3),
        (KcrTerm::NormalJerk, (limits.j_n / (v2 * limits.v_max)).sqrt() * 1e-3),
        (KcrTerm::Nozzle, 1.0 / limits.r_n),
    ];
    let (limiting, value) = terms.iter().copied().fold(terms[0], |best, t| if t.1 < best.1 { t } else { best });
    Ok(KcrDiagnostics {
        chord_error: terms[0].1,
        normal_acceleration: terms[1].1,
        normal_jerk: terms[2].1,
        nozzle: terms[3].1,
        value,
        limiting,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn limits() -> KinematicLimits {
        KinematicLimits { v_max: 0.1, a_n: 1.0, a_t: 1.0, j_n: 10.0, j_t: 10.0, t_s: 1e-3, r_n: 0.2 }
    }

    #[test]
    fn individual_terms() {
        let d = compute_kcr(&limits(), 0.01).unwrap();
        assert!((d.normal_acceleration - 0.1).abs() < 1e-12);
        assert!((d.normal_jerk - 0.1).abs() < 1e-12);
        assert!((d.chord_error - 7.692307692307692).abs() < 1e-9);
        assert!((d.nozzle - 5.0).abs() < 1e-12);
        assert!((d.value - 0.1).abs() < 1e-12);
    }

    #[test]
    fn nozzle_term_dominates_once_other_bounds_are_loose() {
        let mut l = limits();
        l.r_n = 5.0;
        l.a_n = 1e6;
        // jerk still caps at 0.1 with j_n = 10
        assert!((compute_kcr(&l, 0.01).unwrap().value - 0.1).abs() < 1e-12);
        l.j_n = 1e6;
        let d = compute_kcr(&l, 0.01).unwrap();
        assert!((d.value - 0.2).abs() < 1e-12);
        assert_eq!(d.limiting, KcrTerm::Nozzle);
    }

    #[test]
    fn equal_terms_give_common_value() {
        // cycle = 0.1 mm; choose delta so the chord term equals 0.1 1/mm:
        // 8d / (0.01 + 4d^2) = 0.1  ->  0.4 d^2 - 8 d + 0.001 = 0
        let d = (8.0 - (64.0f64 - 0.0016).sqrt()) / 0.8;
        let mut l = limits();
        l.r_n = 10.0;
        let k = compute_kcr(&l, d).unwrap();
        assert!((k.chord_error - 0.1).abs() < 1e-9);
        assert!((k.value - 0.1).abs() < 1e-9);
    }

    #[test]
    fn rejects_bad_inputs() {
        assert!(compute_kcr(&limits(), 0.0).is_err());
        let mut l = limits();
        l.t_s = -1.0;
        assert!(compute_kcr(&l, 0.01).is_err());
    }
}

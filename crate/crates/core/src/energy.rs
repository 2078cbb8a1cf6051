//! Energy split into servo, fusion and auxiliary parts, and the carbon
//! emission derived from it.

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::dynamics::StateTrajectory;

pub const JOULES_PER_KWH: f64 = 3.6e6;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum EnergyError {
    #[error("energy component {name} is negative ({value} J)")]
    Negative { name: &'static str, value: f64 },
    #[error("force and velocity histories differ in length ({force} vs {velocity})")]
    LengthMismatch { force: usize, velocity: usize },
}

/// Energy components in joules.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct EnergyBreakdown {
    pub servo: f64,
    pub fuse: f64,
    pub aux: f64,
    pub total: f64,
}

/// Emission factors and the material mass they apply to.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EmissionFactors {
    /// kg CO2 per kWh.
    pub f_e: f64,
    /// kg CO2 per kg of material.
    pub f_m: f64,
    /// kg.
    pub m_mater: f64,
}

/// Constant-power placeholders for the non-servo consumers.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct EnergyConfig {
    /// Heater power while extruding, W.
    pub fuse_power: f64,
    /// Fraction of extrusion time the heater draws power.
    pub fuse_duty: f64,
    /// Controller, fans and other constant loads, W.
    pub aux_power: f64,
    /// kg CO2 per kWh.
    pub f_e: f64,
    /// kg CO2 per kg of material.
    pub f_m: f64,
    /// Deposited bead cross-section, mm^2.
    pub bead_area: f64,
    /// Material density, kg/m^3.
    pub material_density: f64,
}

impl Default for EnergyConfig {
    fn default() -> Self {
        Self {
            fuse_power: 60.0,
            fuse_duty: 1.0,
            aux_power: 40.0,
            f_e: 0.5,
            f_m: 2.0,
            bead_area: 0.5,
            material_density: 1240.0,
        }
    }
}

impl EnergyConfig {
    pub fn fuse_energy(&self, extrusion_time: f64) -> f64 {
        self.fuse_power * self.fuse_duty * extrusion_time
    }

    pub fn aux_energy(&self, total_time: f64) -> f64 {
        self.aux_power * total_time
    }

    /// Deposited mass (kg) for an extrusion length in mm.
    pub fn material_mass(&self, extrusion_length_mm: f64) -> f64 {
        extrusion_length_mm * self.bead_area * 1e-9 * self.material_density
    }

    pub fn factors(&self, m_mater: f64) -> EmissionFactors {
        EmissionFactors { f_e: self.f_e, f_m: self.f_m, m_mater }
    }
}

/// Trapezoidal integral of `max(F v, 0)` for scalar histories.
pub fn motoring_work(force: &[f64], velocity: &[f64], dt: f64) -> Result<f64, EnergyError> {
    if force.len() != velocity.len() {
        return Err(EnergyError::LengthMismatch { force: force.len(), velocity: velocity.len() });
    }
    let power: Vec<f64> = force.iter().zip(velocity).map(|(f, v)| (f * v).max(0.0)).collect();
    Ok(trapezoid(&power, dt))
}

fn trapezoid(y: &[f64], dt: f64) -> f64 {
    y.windows(2).map(|w| 0.5 * (w[0] + w[1]) * dt).sum()
}

/// Motoring work (J) summed over one trajectory per machine axis.
///
/// Instantaneous power is `F . q'` over all coordinates; regenerative
/// (negative) power is discarded.
pub fn servo_energy(axes: &[&StateTrajectory]) -> f64 {
    axes.iter()
        .map(|tr| {
            let power: Vec<f64> = (0..tr.len())
                .map(|i| {
                    let p: f64 = tr.force(i).iter().zip(tr.qd(i)).map(|(f, v)| f * v).sum();
                    p.max(0.0)
                })
                .collect();
            trapezoid(&power, tr.dt)
        })
        .sum()
}

pub fn total_energy(servo: f64, fuse: f64, aux: f64) -> Result<EnergyBreakdown, EnergyError> {
    for (name, value) in [("servo", servo), ("fuse", fuse), ("aux", aux)] {
        if !(value >= 0.0) {
            return Err(EnergyError::Negative { name, value });
        }
    }
    Ok(EnergyBreakdown { servo, fuse, aux, total: servo + fuse + aux })
}

/// Emitted CO2 (kg) for an energy in joules; the energy is converted to kWh
/// before the electrical factor is applied.
pub fn carbon_emission(energy_j: f64, factors: &EmissionFactors) -> f64 {
    factors.f_e * energy_j / JOULES_PER_KWH + factors.f_m * factors.m_mater
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn constant_push() {
        let n = 1001;
        let w = motoring_work(&vec![1.0; n], &vec![0.1; n], 0.01).unwrap();
        assert!((w - 1.0).abs() < 1e-12);
        assert_eq!(motoring_work(&vec![5.0; n], &vec![0.0; n], 0.01).unwrap(), 0.0);
    }

    #[test]
    fn sine_squared_integral() {
        let n = 100_001;
        let dt = 2.0 * std::f64::consts::PI / (n - 1) as f64;
        let s: Vec<f64> = (0..n).map(|i| (i as f64 * dt).sin()).collect();
        let w = motoring_work(&s, &s, dt).unwrap();
        assert!((w - std::f64::consts::PI).abs() < 1e-8);
    }

    #[test]
    fn regeneration_is_discarded() {
        let w = motoring_work(&[1.0, 1.0, 1.0], &[-1.0, -1.0, -1.0], 1.0).unwrap();
        assert_eq!(w, 0.0);
    }

    #[test]
    fn totals() {
        assert_eq!(total_energy(1.0, 2.0, 3.0).unwrap().total, 6.0);
        assert_eq!(total_energy(0.0, 0.0, 0.0).unwrap().total, 0.0);
        assert!(total_energy(-1.0, 0.0, 0.0).is_err());
    }

    #[test]
    fn one_kwh_example() {
        let f = EmissionFactors { f_e: 0.5, f_m: 2.0, m_mater: 1.0 };
        assert_eq!(carbon_emission(3.6e6, &f), 2.5);
        assert_eq!(carbon_emission(0.0, &EmissionFactors { m_mater: 0.0, ..f }), 0.0);
    }
}

use serde::{Deserialize, Serialize};

use super::DynamicsError;

/// Sign used for the coupled torsion term `k_t (theta_M +/- theta_S)^2`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum TorsionCoupling {
    #[default]
    Sum,
    Difference,
}

impl TorsionCoupling {
    fn sign(self) -> f64 {
        match self {
            TorsionCoupling::Sum => 1.0,
            TorsionCoupling::Difference => -1.0,
        }
    }
}

/// Catalogue values of one ball-screw drive axis (SI units throughout).
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct MachineSpec {
    /// Screw material density, kg/m^3.
    pub rho: f64,
    /// Screw length, m.
    pub l_s: f64,
    /// Screw radius, m.
    pub r_s: f64,
    /// Elastic modulus, Pa.
    pub e: f64,
    /// Shear modulus, Pa.
    pub g: f64,
    /// Transmission ratio, m/rad (lead / 2 pi).
    pub i_s: f64,
    /// Nut-to-coupling length, m.
    pub l_n: f64,
    pub m_r1: f64,
    pub m_c1: f64,
    pub j_c1: f64,
    pub j_m: f64,
    /// Nut contact stiffness, N/m.
    pub k_c: f64,
    /// Nut preload, N.
    pub f_z: f64,
    /// Nut dynamic load rating, N.
    pub c_a: f64,
    pub k_zn1: f64,
    pub k_zt1: f64,
    pub k_mw: f64,
    pub c_mn: f64,
    pub c_mw: f64,
    pub m_3: f64,
    pub m_4: f64,
    pub torsion_coupling: TorsionCoupling,
}

impl Default for MachineSpec {
    fn default() -> Self {
        Self {
            rho: 7850.0,
            l_s: 1.0,
            r_s: 0.008,
            e: 2.06e11,
            g: 7.9e10,
            i_s: 0.01 / (2.0 * std::f64::consts::PI),
            l_n: 0.5,
            m_r1: 0.5,
            m_c1: 0.2,
            j_c1: 5e-5,
            j_m: 1e-4,
            k_c: 2e8,
            f_z: 1000.0,
            c_a: 1e4,
            k_zn1: 5e8,
            k_zt1: 5e3,
            k_mw: 1e7,
            c_mn: 500.0,
            c_mw: 300.0,
            m_3: 5.0,
            m_4: 20.0,
            torsion_coupling: TorsionCoupling::Sum,
        }
    }
}

impl MachineSpec {
    pub fn validate(&self) -> Result<(), DynamicsError> {
        let fields = [
            ("rho", self.rho),
            ("l_s", self.l_s),
            ("r_s", self.r_s),
            ("e", self.e),
            ("g", self.g),
            ("i_s", self.i_s),
            ("l_n", self.l_n),
            ("m_r1", self.m_r1),
            ("m_c1", self.m_c1),
            ("j_c1", self.j_c1),
            ("j_m", self.j_m),
            ("k_c", self.k_c),
            ("f_z", self.f_z),
            ("c_a", self.c_a),
            ("k_zn1", self.k_zn1),
            ("k_zt1", self.k_zt1),
            ("k_mw", self.k_mw),
            ("c_mn", self.c_mn),
            ("c_mw", self.c_mw),
            ("m_3", self.m_3),
            ("m_4", self.m_4),
        ];
        for (name, v) in fields {
            if !(v.is_finite() && v > 0.0) {
                return Err(DynamicsError::InvalidParameter(format!("{name} must be positive, got {v}")));
            }
        }
        Ok(())
    }
}

/// Intermediate quantities kept for auditing the reduction.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct LumpedDiagnostics {
    pub m_sc1: f64,
    pub j_sc1: f64,
    pub k_sn1: f64,
    pub k_st1: f64,
    pub k_mn: f64,
    pub k_n1: f64,
    pub k_t1: f64,
    pub j_s1: f64,
}

/// Coefficients of the kinetic, potential and dissipation functions.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct LumpedParams {
    pub m_1: f64,
    pub m_2: f64,
    pub m_3: f64,
    pub m_4: f64,
    pub j_m: f64,
    pub j_s: f64,
    pub k_n: f64,
    pub k_t: f64,
    pub k_mn: f64,
    pub k_mw: f64,
    pub c_mn: f64,
    pub c_mw: f64,
    pub i_s: f64,
    pub torsion_coupling: TorsionCoupling,
    pub diagnostics: Option<LumpedDiagnostics>,
}

impl LumpedParams {
    pub(crate) fn torsion_sign(&self) -> f64 {
        self.torsion_coupling.sign()
    }
}

fn series(a: f64, b: f64) -> f64 {
    1.0 / (1.0 / a + 1.0 / b)
}

/// Reduce catalogue values to lumped masses, inertias and springs.
///
/// Screw 2 is taken as the twin of screw 1, so `m_2 = m_1`.
pub fn derive_lumped_params(spec: &MachineSpec) -> Result<LumpedParams, DynamicsError> {
    spec.validate()?;
    let pi = std::f64::consts::PI;
    let r2 = spec.r_s * spec.r_s;
    let m_sc1 = pi * spec.rho * spec.l_s * r2;
    let j_sc1 = pi * spec.rho * spec.l_s * r2 * r2 / 4.0;
    let k_sn1 = pi * r2 * spec.e / spec.l_n;
    let k_st1 = spec.g * pi * r2 / (4.0 * spec.l_n);
    let k_mn = 0.8 * spec.k_c * (spec.f_z / (0.1 * spec.c_a)).cbrt();
    let k_n1 = series(spec.k_zn1, k_sn1);
    let k_t1 = series(spec.k_zt1, k_st1);
    let j_s1 = j_sc1 + spec.j_c1 + spec.i_s * spec.i_s * spec.m_3;
    let m_1 = m_sc1 + spec.m_r1 + spec.m_c1;
    Ok(LumpedParams {
        m_1,
        m_2: m_1,
        m_3: spec.m_3,
        m_4: spec.m_4,
        j_m: spec.j_m,
        j_s: j_s1,
        k_n: k_n1,
        k_t: k_t1,
        k_mn,
        k_mw: spec.k_mw,
        c_mn: spec.c_mn,
        c_mw: spec.c_mw,
        i_s: spec.i_s,
        torsion_coupling: spec.torsion_coupling,
        diagnostics: Some(LumpedDiagnostics { m_sc1, j_sc1, k_sn1, k_st1, k_mn, k_n1, k_t1, j_s1 }),
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn rel(a: f64, b: f64) -> f64 {
        ((a - b) / b).abs()
    }

    #[test]
    fn screw_mass_inertia_and_axial_stiffness() {
        let spec = MachineSpec { r_s: 0.01, l_s: 1.0, l_n: 0.5, ..MachineSpec::default() };
        let d = derive_lumped_params(&spec).unwrap().diagnostics.unwrap();
        assert!(rel(d.m_sc1, 2.466150233) < 1e-8);
        assert!(rel(d.j_sc1, 6.165375583e-5) < 1e-8);
        assert!(rel(d.k_sn1, 1.294336173e8) < 1e-8);
    }

    #[test]
    fn unit_preload_ratio_gives_eight_tenths() {
        let spec = MachineSpec { f_z: 500.0, c_a: 5000.0, ..MachineSpec::default() };
        let p = derive_lumped_params(&spec).unwrap();
        assert!(rel(p.k_mn, 0.8 * spec.k_c) < 1e-15);
    }

    #[test]
    fn equal_springs_in_series_halve() {
        let mut spec = MachineSpec::default();
        let k_sn1 = derive_lumped_params(&spec).unwrap().diagnostics.unwrap().k_sn1;
        spec.k_zn1 = k_sn1;
        let p = derive_lumped_params(&spec).unwrap();
        assert!(rel(p.k_n, k_sn1 / 2.0) < 1e-14);
        assert!(p.k_t <= spec.k_zt1);
    }

    #[test]
    fn twin_screw_and_equivalent_inertia() {
        let spec = MachineSpec::default();
        let p = derive_lumped_params(&spec).unwrap();
        let d = p.diagnostics.unwrap();
        assert_eq!(p.m_1, p.m_2);
        assert_eq!(p.m_1, d.m_sc1 + spec.m_r1 + spec.m_c1);
        assert_eq!(p.j_s, d.j_sc1 + spec.j_c1 + spec.i_s * spec.i_s * spec.m_3);
    }

    #[test]
    fn rejects_non_positive_values() {
        let spec = MachineSpec { m_4: 0.0, ..MachineSpec::default() };
        assert!(derive_lumped_params(&spec).is_err());
    }
}

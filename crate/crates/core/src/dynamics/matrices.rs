use nalgebra::{DMatrix, DVector};

use super::LumpedParams;

/// Number of generalized coordinates `[x1, x2, x3, x4, theta_M, theta_S]`.
pub const NDOF: usize = 6;
/// Index of the working-table coordinate `x4`.
pub const TABLE: usize = 3;

/// Mass, damping and stiffness of `M q'' + C q' + K q = F`.
#[derive(Debug, Clone, PartialEq)]
pub struct SystemMatrices {
    pub m: DMatrix<f64>,
    pub c: DMatrix<f64>,
    pub k: DMatrix<f64>,
}

impl SystemMatrices {
    pub fn ndof(&self) -> usize {
        self.m.nrows()
    }

    /// Keep only the listed coordinates; the others are held fixed at zero.
    pub fn restrict(&self, keep: &[usize]) -> SystemMatrices {
        let pick = |a: &DMatrix<f64>| DMatrix::from_fn(keep.len(), keep.len(), |i, j| a[(keep[i], keep[j])]);
        SystemMatrices { m: pick(&self.m), c: pick(&self.c), k: pick(&self.k) }
    }

    /// Add a grounded spring and damper on one coordinate.
    pub fn with_grounding(&self, dof: usize, stiffness: f64, damping: f64) -> SystemMatrices {
        let mut out = self.clone();
        out.k[(dof, dof)] += stiffness;
        out.c[(dof, dof)] += damping;
        out
    }

    pub fn kinetic_energy(&self, qd: &DVector<f64>) -> f64 {
        0.5 * qd.dot(&(&self.m * qd))
    }

    pub fn potential_energy(&self, q: &DVector<f64>) -> f64 {
        0.5 * q.dot(&(&self.k * q))
    }
}

fn add_outer(k: &mut DMatrix<f64>, coeff: f64, g: &[f64; NDOF]) {
    for i in 0..NDOF {
        for j in 0..NDOF {
            k[(i, j)] += coeff * g[i] * g[j];
        }
    }
}

/// Assemble the 6x6 matrices.
///
/// `K` is the Hessian of the potential
/// `1/2 k_n x1^2 + 1/2 k_t (thM + thS)^2 + 1/2 k_mn (x3 - xs - i_s thS)^2 + k_mw (x4 - x3)^2`
/// with `xs = (x1 + x2)/2`, and `C` the Hessian of `C_mn x3'^2 + 2 C_mw x4'^2`.
/// Both are taken literally, so the flexure hinge contributes `2 k_mw` and
/// the dampers `2 C_mn` and `4 C_mw` on the diagonal.
pub fn assemble_matrices(p: &LumpedParams) -> SystemMatrices {
    let m = DMatrix::from_diagonal(&DVector::from_vec(vec![p.m_1, p.m_2, p.m_3, p.m_4, p.j_m, p.j_s]));
    let mut k = DMatrix::zeros(NDOF, NDOF);
    add_outer(&mut k, p.k_n, &[1.0, 0.0, 0.0, 0.0, 0.0, 0.0]);
    add_outer(&mut k, p.k_t, &[0.0, 0.0, 0.0, 0.0, 1.0, p.torsion_sign()]);
    add_outer(&mut k, p.k_mn, &[-0.5, -0.5, 1.0, 0.0, 0.0, -p.i_s]);
    add_outer(&mut k, 2.0 * p.k_mw, &[0.0, 0.0, -1.0, 1.0, 0.0, 0.0]);
    let mut c = DMatrix::zeros(NDOF, NDOF);
    c[(2, 2)] = 2.0 * p.c_mn;
    c[(3, 3)] = 4.0 * p.c_mw;
    SystemMatrices { m, c, k }
}

/// Potential energy evaluated term by term (not through `K`).
pub fn potential_energy(p: &LumpedParams, q: &[f64]) -> f64 {
    let xs = 0.5 * (q[0] + q[1]);
    let tors = q[4] + p.torsion_sign() * q[5];
    let nut = q[2] - xs - p.i_s * q[5];
    let hinge = q[3] - q[2];
    0.5 * p.k_n * q[0] * q[0] + 0.5 * p.k_t * tors * tors + 0.5 * p.k_mn * nut * nut + p.k_mw * hinge * hinge
}

/// Kinetic energy evaluated term by term.
pub fn kinetic_energy(p: &LumpedParams, qd: &[f64]) -> f64 {
    0.5 * (p.m_1 * qd[0] * qd[0]
        + p.m_2 * qd[1] * qd[1]
        + p.m_3 * qd[2] * qd[2]
        + p.m_4 * qd[3] * qd[3]
        + p.j_m * qd[4] * qd[4]
        + p.j_s * qd[5] * qd[5])
}

/// Dissipation function evaluated term by term.
pub fn dissipation(p: &LumpedParams, qd: &[f64]) -> f64 {
    p.c_mn * qd[2] * qd[2] + 2.0 * p.c_mw * qd[3] * qd[3]
}

/// A vector spanning part of the null space of `K` (sum coupling): the nut
/// stays unloaded while screw 2 and the torsion pair move.
pub fn floating_mode(p: &LumpedParams) -> DVector<f64> {
    let s = p.torsion_sign();
    // theta_S = 1, theta_M = -s, x2 = -2 i_s keeps x3 - xs - i_s theta_S = 0.
    DVector::from_vec(vec![0.0, -2.0 * p.i_s, 0.0, 0.0, -s, 1.0])
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dynamics::{derive_lumped_params, MachineSpec};

    fn params() -> LumpedParams {
        derive_lumped_params(&MachineSpec::default()).unwrap()
    }

    #[test]
    fn mass_is_diagonal() {
        let p = params();
        let s = assemble_matrices(&p);
        let expect = [p.m_1, p.m_2, p.m_3, p.m_4, p.j_m, p.j_s];
        for i in 0..NDOF {
            for j in 0..NDOF {
                let v = if i == j { expect[i] } else { 0.0 };
                assert_eq!(s.m[(i, j)], v);
            }
        }
    }

    #[test]
    fn hinge_only_block() {
        let p = LumpedParams { k_n: 0.0, k_t: 0.0, k_mn: 0.0, k_mw: 3.0, ..params() };
        let k = assemble_matrices(&p).k;
        for i in 0..NDOF {
            for j in 0..NDOF {
                let v = match (i, j) {
                    (2, 2) | (3, 3) => 6.0,
                    (2, 3) | (3, 2) => -6.0,
                    _ => 0.0,
                };
                assert_eq!(k[(i, j)], v, "({i},{j})");
            }
        }
    }

    #[test]
    fn symmetric_and_singular() {
        let p = params();
        let s = assemble_matrices(&p);
        assert_eq!(s.k, s.k.transpose());
        assert_eq!(s.c, s.c.transpose());
        let v = floating_mode(&p);
        assert!((&s.k * &v).norm() < 1e-9 * s.k.norm());
        let trans = DVector::from_vec(vec![0.0, 2.0, 1.0, 1.0, 0.0, 0.0]);
        assert!((&s.k * &trans).norm() < 1e-9 * s.k.norm());
    }

    #[test]
    fn quadratic_forms_match_term_sums() {
        let p = params();
        let s = assemble_matrices(&p);
        let q = [1e-4, -2e-4, 3e-4, 5e-5, 0.01, -0.02];
        let qv = DVector::from_row_slice(&q);
        let a = s.potential_energy(&qv);
        assert!(((a - potential_energy(&p, &q)) / a).abs() < 1e-12);
        let b = s.kinetic_energy(&qv);
        assert!(((b - kinetic_energy(&p, &q)) / b).abs() < 1e-12);
        let d = 0.5 * qv.dot(&(&s.c * &qv));
        assert!(((d - dissipation(&p, &q)) / d).abs() < 1e-12);
    }
}

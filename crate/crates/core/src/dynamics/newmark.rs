use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use super::{DynamicsError, SystemMatrices, TABLE};

const GAMMA: f64 = 0.5;
const BETA: f64 = 0.25;

/// PD gains of the virtual servo acting on the working table.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ServoGains {
    /// N/m.
    pub kp: f64,
    /// N s/m.
    pub kd: f64,
}

impl ServoGains {
    /// `kp` with a derivative gain giving a damping ratio of 0.7 on `table_mass`.
    pub fn with_damping_ratio(kp: f64, table_mass: f64, zeta: f64) -> Self {
        Self { kp, kd: 2.0 * zeta * (kp * table_mass).sqrt() }
    }

    pub fn default_for(table_mass: f64) -> Self {
        Self::with_damping_ratio(1e5, table_mass, 0.7)
    }
}

/// Sampled reference position (m) and velocity (m/s) on a uniform grid.
#[derive(Debug, Clone, PartialEq)]
pub struct ReferenceSignal {
    pub dt: f64,
    pub positions: Vec<f64>,
    pub velocities: Vec<f64>,
}

impl ReferenceSignal {
    /// Velocities from central differences of the positions.
    pub fn from_positions(dt: f64, positions: Vec<f64>) -> Self {
        let n = positions.len();
        let velocities = (0..n)
            .map(|i| match n {
                0 | 1 => 0.0,
                _ if i == 0 => (positions[1] - positions[0]) / dt,
                _ if i == n - 1 => (positions[n - 1] - positions[n - 2]) / dt,
                _ => (positions[i + 1] - positions[i - 1]) / (2.0 * dt),
            })
            .collect();
        Self { dt, positions, velocities }
    }

    pub fn duration(&self) -> f64 {
        self.positions.len().saturating_sub(1) as f64 * self.dt
    }

    /// Linear interpolation; after the last sample the reference holds its
    /// final position at rest.
    pub fn at(&self, t: f64) -> (f64, f64) {
        let n = self.positions.len();
        if n == 0 {
            return (0.0, 0.0);
        }
        let x = (t / self.dt).max(0.0);
        let i = x.floor() as usize;
        if i + 1 >= n {
            let rest = if i + 1 == n && x == i as f64 { self.velocities[n - 1] } else { 0.0 };
            return (self.positions[n - 1], rest);
        }
        let f = x - i as f64;
        (
            self.positions[i] + f * (self.positions[i + 1] - self.positions[i]),
            self.velocities[i] + f * (self.velocities[i + 1] - self.velocities[i]),
        )
    }
}

/// What drives the model.
pub enum Excitation<'a> {
    Free,
    /// Generalized force as a function of time.
    Force(&'a dyn Fn(f64) -> DVector<f64>),
    /// PD tracking of `reference` by a force on the working table.
    Servo {
        gains: ServoGains,
        reference: &'a ReferenceSignal,
    },
}

/// Uniformly sampled simulation output. Row `i` of each history is the
/// state at `i * dt`.
#[derive(Debug, Clone, PartialEq)]
pub struct StateTrajectory {
    pub dt: f64,
    pub ndof: usize,
    q: Vec<f64>,
    qd: Vec<f64>,
    qdd: Vec<f64>,
    force: Vec<f64>,
}

impl StateTrajectory {
    pub fn len(&self) -> usize {
        self.q.len() / self.ndof
    }

    pub fn is_empty(&self) -> bool {
        self.q.is_empty()
    }

    pub fn time(&self, i: usize) -> f64 {
        i as f64 * self.dt
    }

    pub fn q(&self, i: usize) -> &[f64] {
        &self.q[i * self.ndof..(i + 1) * self.ndof]
    }

    pub fn qd(&self, i: usize) -> &[f64] {
        &self.qd[i * self.ndof..(i + 1) * self.ndof]
    }

    pub fn qdd(&self, i: usize) -> &[f64] {
        &self.qdd[i * self.ndof..(i + 1) * self.ndof]
    }

    /// Physically applied force (servo force included).
    pub fn force(&self, i: usize) -> &[f64] {
        &self.force[i * self.ndof..(i + 1) * self.ndof]
    }

    /// History of one coordinate.
    pub fn coordinate(&self, dof: usize) -> Vec<f64> {
        self.q.iter().skip(dof).step_by(self.ndof).copied().collect()
    }

    pub fn velocity(&self, dof: usize) -> Vec<f64> {
        self.qd.iter().skip(dof).step_by(self.ndof).copied().collect()
    }

    pub fn acceleration(&self, dof: usize) -> Vec<f64> {
        self.qdd.iter().skip(dof).step_by(self.ndof).copied().collect()
    }
}

/// Integrate `M q'' + C q' + K q = F` with the average-acceleration Newmark
/// scheme over `[0, duration]`.
///
/// In servo mode the PD law is linear in the state, so it is folded into the
/// stiffness and damping on the table coordinate and the step stays a
/// single linear solve.
pub fn simulate(
    sys: &SystemMatrices,
    excitation: &Excitation<'_>,
    q0: &DVector<f64>,
    qd0: &DVector<f64>,
    dt: f64,
    duration: f64,
) -> Result<StateTrajectory, DynamicsError> {
    let n = sys.ndof();
    if !(dt > 0.0 && dt.is_finite()) || !(duration >= dt) {
        return Err(DynamicsError::InvalidParameter(format!(
            "need dt > 0 and duration >= dt (dt = {dt}, duration = {duration})"
        )));
    }
    if q0.len() != n || qd0.len() != n {
        return Err(DynamicsError::InvalidParameter(format!("initial state must have {n} entries")));
    }
    let servo = match excitation {
        Excitation::Servo { gains, .. } => {
            if n <= TABLE {
                return Err(DynamicsError::InvalidParameter("servo needs the table coordinate".into()));
            }
            Some(*gains)
        }
        _ => None,
    };
    let (k, c) = match servo {
        Some(g) => {
            let s = sys.with_grounding(TABLE, g.kp, g.kd);
            (s.k, s.c)
        }
        None => (sys.k.clone(), sys.c.clone()),
    };

    // External load seen by the folded system, and the physical force.
    let load = |t: f64| -> (DVector<f64>, DVector<f64>) {
        match excitation {
            Excitation::Free => (DVector::zeros(n), DVector::zeros(n)),
            Excitation::Force(f) => {
                let v = f(t);
                (v.clone(), v)
            }
            Excitation::Servo { gains, reference } => {
                let (x, v) = reference.at(t);
                let mut out = DVector::zeros(n);
                out[TABLE] = gains.kp * x + gains.kd * v;
                (out, DVector::zeros(n))
            }
        }
    };
    let physical = |t: f64, q: &DVector<f64>, qd: &DVector<f64>, base: DVector<f64>| -> DVector<f64> {
        match excitation {
            Excitation::Servo { gains, reference } => {
                let (x, v) = reference.at(t);
                let mut out = base;
                out[TABLE] = gains.kp * (x - q[TABLE]) + gains.kd * (v - qd[TABLE]);
                out
            }
            _ => base,
        }
    };

    let steps = (duration / dt).round() as usize;
    let mut hist_q = Vec::with_capacity((steps + 1) * n);
    let mut hist_qd = Vec::with_capacity((steps + 1) * n);
    let mut hist_qdd = Vec::with_capacity((steps + 1) * n);
    let mut hist_f = Vec::with_capacity((steps + 1) * n);

    let m_chol = sys
        .m
        .clone()
        .cholesky()
        .ok_or_else(|| DynamicsError::InvalidParameter("mass matrix is not positive definite".into()))?;
    let (f0, p0) = load(0.0);
    let mut q = q0.clone();
    let mut qd = qd0.clone();
    let mut qdd = m_chol.solve(&(f0 - &c * &qd - &k * &q));
    hist_q.extend(q.iter());
    hist_qd.extend(qd.iter());
    hist_qdd.extend(qdd.iter());
    hist_f.extend(physical(0.0, &q, &qd, p0).iter());

    let a0 = 1.0 / (BETA * dt * dt);
    let a1 = GAMMA / (BETA * dt);
    let a2 = 1.0 / (BETA * dt);
    let a3 = 1.0 / (2.0 * BETA) - 1.0;
    let a4 = GAMMA / BETA - 1.0;
    let a5 = dt * (GAMMA / (2.0 * BETA) - 1.0);
    let k_eff: DMatrix<f64> = &k + &c * a1 + &sys.m * a0;
    let solver = k_eff
        .cholesky()
        .ok_or_else(|| DynamicsError::InvalidParameter("effective stiffness is not positive definite".into()))?;

    for step in 1..=steps {
        let t = step as f64 * dt;
        let (f, p) = load(t);
        let rhs = f + &sys.m * (&q * a0 + &qd * a2 + &qdd * a3) + &c * (&q * a1 + &qd * a4 + &qdd * a5);
        let q_next = solver.solve(&rhs);
        let qdd_next = (&q_next - &q) * a0 - &qd * a2 - &qdd * a3;
        let qd_next = &qd + (&qdd * (1.0 - GAMMA) + &qdd_next * GAMMA) * dt;
        if !(q_next.iter().chain(qd_next.iter()).all(|v| v.is_finite())) {
            return Err(DynamicsError::Diverged { step, time: t });
        }
        q = q_next;
        qd = qd_next;
        qdd = qdd_next;
        hist_q.extend(q.iter());
        hist_qd.extend(qd.iter());
        hist_qdd.extend(qdd.iter());
        hist_f.extend(physical(t, &q, &qd, p).iter());
    }
    Ok(StateTrajectory { dt, ndof: n, q: hist_q, qd: hist_qd, qdd: hist_qdd, force: hist_f })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dynamics::{assemble_matrices, derive_lumped_params, MachineSpec};

    #[test]
    fn equilibrium_stays_at_rest() {
        let sys = assemble_matrices(&derive_lumped_params(&MachineSpec::default()).unwrap());
        let z = DVector::zeros(6);
        let tr = simulate(&sys, &Excitation::Free, &z, &z, 1e-3, 0.5).unwrap();
        assert_eq!(tr.len(), 501);
        assert!((0..tr.len()).all(|i| tr.q(i).iter().all(|v| *v == 0.0)));
    }

    #[test]
    fn reference_interpolation_and_hold() {
        let r = ReferenceSignal::from_positions(0.1, vec![0.0, 1.0, 2.0]);
        assert_eq!(r.at(0.05), (0.5, 10.0));
        assert_eq!(r.at(5.0), (2.0, 0.0));
    }

    #[test]
    fn rejects_bad_step() {
        let sys = assemble_matrices(&derive_lumped_params(&MachineSpec::default()).unwrap());
        let z = DVector::zeros(6);
        assert!(simulate(&sys, &Excitation::Free, &z, &z, 0.0, 1.0).is_err());
        assert!(simulate(&sys, &Excitation::Free, &z, &z, 1e-3, 1e-4).is_err());
    }
}

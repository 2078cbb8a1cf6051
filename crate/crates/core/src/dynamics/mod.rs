//! Lumped-mass model of a ball-screw drive axis, its time integration under
//! a virtual servo, and analysis of the response.

mod analysis;
mod matrices;
mod newmark;
mod params;
mod psd;

use thiserror::Error;

pub use analysis::{
    layered_amplitude, relative_rates, resample_points, trajectory_deviation, Deviation, LayerAmplitude,
};
pub use matrices::{
    assemble_matrices, dissipation, floating_mode, kinetic_energy, potential_energy, SystemMatrices, NDOF, TABLE,
};
pub use newmark::{simulate, Excitation, ReferenceSignal, ServoGains, StateTrajectory};
pub use params::{derive_lumped_params, LumpedDiagnostics, LumpedParams, MachineSpec, TorsionCoupling};
pub use psd::{resample_uniform, welch_psd, Peak, PsdSpectrum, WelchSettings, Window};

#[derive(Debug, Clone, PartialEq, Error)]
pub enum DynamicsError {
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),
    #[error("integration diverged at step {step} (t = {time} s)")]
    Diverged { step: usize, time: f64 },
    #[error("empty input series")]
    EmptyInput,
    #[error("signal has {got} samples; at least {needed} are required")]
    SignalTooShort { got: usize, needed: usize },
}

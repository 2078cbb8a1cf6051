use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::dynamics::{MachineSpec, WelchSettings, Window};
use crate::energy::EnergyConfig;
use crate::scenes::SceneConfig;
use crate::vtg::{KinematicLimits, VtgConfig};

/// Curve fitting applied to each continuous extrusion polyline.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct FitSettings {
    pub degree: usize,
    /// Polylines with more points than this are approximated by least
    /// squares with this many control points instead of interpolated.
    pub max_control_points: usize,
}

impl Default for FitSettings {
    fn default() -> Self {
        Self { degree: 3, max_control_points: 400 }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct ServoConfig {
    /// Proportional gain, N/m.
    pub kp: f64,
    /// Damping ratio of the table under the PD law.
    pub damping_ratio: f64,
    /// Integration step, s. Falls back to the interpolation cycle.
    pub dt: Option<f64>,
    /// Rest appended after the last move so the table settles, s.
    pub settle: f64,
}

impl Default for ServoConfig {
    fn default() -> Self {
        Self { kp: 1e5, damping_ratio: 0.7, dt: None, settle: 0.05 }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct PsdConfig {
    /// Rate the table acceleration is resampled to before the estimate, Hz.
    pub sample_rate: f64,
    pub segment: usize,
    pub overlap: f64,
    pub window: Window,
    pub peaks: usize,
}

impl Default for PsdConfig {
    fn default() -> Self {
        Self { sample_rate: 200.0, segment: 512, overlap: 0.5, window: Window::Hamming, peaks: 3 }
    }
}

impl PsdConfig {
    pub fn welch(&self) -> WelchSettings {
        WelchSettings {
            segment: self.segment,
            overlap: self.overlap,
            window: self.window,
            detrend: false,
            peaks: self.peaks,
        }
    }
}

/// Every tunable of a pipeline run. All sections are optional in the file.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct PipelineConfig {
    pub out_dir: PathBuf,
    /// Constant feed of the raw run where the input gives none, mm/s.
    /// Defaults to `limits.v_max`.
    pub raw_feed: Option<f64>,
    /// Skip resampling; the second run then repeats the raw one.
    pub disable_vtg: bool,
    pub machine: MachineSpec,
    pub limits: KinematicLimits,
    pub vtg: VtgConfig,
    pub fit: FitSettings,
    pub servo: ServoConfig,
    pub psd: PsdConfig,
    pub energy: EnergyConfig,
    pub scene: SceneConfig,
}

impl Default for PipelineConfig {
    fn default() -> Self {
        Self {
            out_dir: PathBuf::from("out"),
            raw_feed: None,
            disable_vtg: false,
            machine: MachineSpec::default(),
            limits: KinematicLimits::default(),
            vtg: VtgConfig::default(),
            fit: FitSettings::default(),
            servo: ServoConfig::default(),
            psd: PsdConfig::default(),
            energy: EnergyConfig::default(),
            scene: SceneConfig::default(),
        }
    }
}

impl PipelineConfig {
    pub fn from_toml(text: &str) -> Result<Self, String> {
        let cfg: PipelineConfig = toml::from_str(text).map_err(|e| e.to_string())?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn to_toml(&self) -> String {
        toml::to_string_pretty(self).expect("config serializes")
    }

    /// Cross-field checks beyond what the schema enforces.
    pub fn validate(&self) -> Result<(), String> {
        self.machine.validate().map_err(|e| format!("[machine] {e}"))?;
        self.limits.validate().map_err(|e| format!("[limits] {e}"))?;
        self.vtg.validate().map_err(|e| format!("[vtg] {e}"))?;
        if self.fit.degree == 0 {
            return Err("[fit] degree must be at least 1".into());
        }
        if self.fit.max_control_points <= self.fit.degree {
            return Err("[fit] max_control_points must exceed the degree".into());
        }
        let s = &self.servo;
        if !(s.kp > 0.0 && s.damping_ratio >= 0.0 && s.settle >= 0.0) || s.dt.is_some_and(|d| !(d > 0.0)) {
            return Err("[servo] kp and dt must be positive, damping_ratio and settle non-negative".into());
        }
        let p = &self.psd;
        if !(p.sample_rate > 0.0) || p.segment < 2 || !(0.0..1.0).contains(&p.overlap) {
            return Err("[psd] need sample_rate > 0, segment >= 2 and overlap in [0, 1)".into());
        }
        if self.raw_feed.is_some_and(|f| !(f > 0.0)) {
            return Err("raw_feed must be positive".into());
        }
        for (name, v) in [
            ("fuse_power", self.energy.fuse_power),
            ("fuse_duty", self.energy.fuse_duty),
            ("aux_power", self.energy.aux_power),
            ("f_e", self.energy.f_e),
            ("f_m", self.energy.f_m),
            ("bead_area", self.energy.bead_area),
            ("material_density", self.energy.material_density),
        ] {
            if !(v >= 0.0 && v.is_finite()) {
                return Err(format!("[energy] {name} must be non-negative, got {v}"));
            }
        }
        if !(self.scene.spacing > 0.0) {
            return Err("[scene] spacing must be positive".into());
        }
        Ok(())
    }

    /// Integration step of the servo simulation, s.
    pub fn dt(&self) -> f64 {
        self.servo.dt.unwrap_or(self.limits.t_s)
    }
}

/// Read and validate a config file.
pub fn load_config(path: &Path) -> Result<PipelineConfig, String> {
    let text = std::fs::read_to_string(path).map_err(|e| format!("{}: {e}", path.display()))?;
    PipelineConfig::from_toml(&text).map_err(|e| format!("{}: {e}", path.display()))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn empty_file_gives_defaults() {
        assert_eq!(PipelineConfig::from_toml("").unwrap(), PipelineConfig::default());
    }

    #[test]
    fn unknown_key_reports_location() {
        let err = PipelineConfig::from_toml("[limits]\nv_max = 0.1\nbogus = 1\n").unwrap_err();
        assert!(err.contains("bogus"), "{err}");
        assert!(err.contains("line 3"), "{err}");
    }

    #[test]
    fn round_trip() {
        let cfg = PipelineConfig::default();
        assert_eq!(PipelineConfig::from_toml(&cfg.to_toml()).unwrap(), cfg);
    }

    #[test]
    fn invalid_values_rejected() {
        assert!(PipelineConfig::from_toml("[limits]\nv_max = -1.0\n").is_err());
        assert!(PipelineConfig::from_toml("[psd]\noverlap = 1.0\n").is_err());
    }
}

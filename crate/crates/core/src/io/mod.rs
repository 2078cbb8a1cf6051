//! Input formats: the G-code subset, native toolpath JSON and the pipeline
//! configuration file.

mod config;
pub mod gcode;

pub use config::{load_config, FitSettings, PipelineConfig, PsdConfig, ServoConfig};
pub use gcode::{gcode_to_toolpath, parse_gcode, GcodeError, GcodeProgram};

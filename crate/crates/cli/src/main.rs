use std::path::{Path, PathBuf};
use std::process::ExitCode;
use std::time::Instant;

use clap::{Args, Parser, Subcommand};
use serde_json::json;

use vtg_core::io::{load_config, PipelineConfig};
use vtg_core::metrics::{path_metrics, Toolpath};
use vtg_core::pipeline::{
    emit_plot_data, execute_run, load_input, raw_plan, resample_toolpath, run_pipeline, write_bundle, ErrorKind,
    PipelineError, PlotData, Stage,
};
use vtg_core::scenes::{build_scene, InfillPattern};
use vtg_core::vtg::compute_kcr;

#[derive(Parser)]
#[command(name = "vtg", version, about = "Vibration-aware toolpath resampling, simulation and reporting")]
struct Cli {
    /// TOML configuration; every key is optional.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// Seed for randomized checks. Pipeline runs are deterministic and do not use it.
    #[arg(long, global = true)]
    seed: Option<u64>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Args)]
struct InputArgs {
    /// G-code, toolpath JSON (.json) or scene description (.toml). Defaults to the configured scene.
    #[arg(long)]
    input: Option<PathBuf>,
    /// Infill pattern of the generated scene.
    #[arg(long)]
    pattern: Option<InfillPattern>,
}

#[derive(Subcommand)]
enum Command {
    /// Parse an input file and write it as toolpath JSON.
    Ingest {
        #[arg(long)]
        input: PathBuf,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Generate the configured benchmark scene as toolpath JSON.
    Scene {
        #[arg(long)]
        pattern: Option<InfillPattern>,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Resample a toolpath and schedule its feed.
    Vtg {
        #[command(flatten)]
        input: InputArgs,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Simulate the servo axes following a toolpath.
    Simulate {
        #[command(flatten)]
        input: InputArgs,
        #[arg(long)]
        out: Option<PathBuf>,
        /// Follow the raw toolpath at constant feed.
        #[arg(long)]
        disable_vtg: bool,
    },
    /// Print toolpath quality metrics as JSON.
    Metrics {
        #[command(flatten)]
        input: InputArgs,
    },
    /// Print the energy and emission breakdown of one run as JSON.
    Energy {
        #[command(flatten)]
        input: InputArgs,
        #[arg(long)]
        disable_vtg: bool,
    },
    /// Run the full before/after comparison and write every artifact.
    Report {
        #[command(flatten)]
        input: InputArgs,
        #[arg(long)]
        out: Option<PathBuf>,
        #[arg(long)]
        disable_vtg: bool,
    },
    /// Validate the configuration and print it with defaults filled in.
    Check,
}

fn usage(msg: impl std::fmt::Display) -> PipelineError {
    PipelineError::new(Stage::Config, ErrorKind::Usage, msg)
}

fn io_error(path: &Path, e: std::io::Error) -> PipelineError {
    PipelineError::new(Stage::Emit, ErrorKind::Io, format!("{}: {e}", path.display()))
}

fn write_file(path: &Path, text: &str) -> Result<(), PipelineError> {
    if let Some(dir) = path.parent() {
        std::fs::create_dir_all(dir).map_err(|e| io_error(dir, e))?;
    }
    std::fs::write(path, text).map_err(|e| io_error(path, e))
}

fn print_json(value: &serde_json::Value) {
    println!("{}", serde_json::to_string_pretty(value).expect("json"));
}

fn toolpath_for(input: &InputArgs, cfg: &PipelineConfig) -> Result<Toolpath, PipelineError> {
    let tp = match &input.input {
        Some(p) => load_input(p)?.0,
        None => {
            let (tp, warnings) = build_scene(&cfg.scene).map_err(usage)?;
            for w in warnings {
                eprintln!("warning: {w}");
            }
            tp
        }
    };
    tp.validate().map_err(|e| PipelineError::new(Stage::Ingest, ErrorKind::Parse, e))?;
    Ok(tp)
}

fn run(cli: Cli) -> Result<(), PipelineError> {
    let mut cfg = match &cli.config {
        Some(p) => load_config(p).map_err(|e| PipelineError::new(Stage::Config, ErrorKind::Parse, e))?,
        None => PipelineConfig::default(),
    };
    let pattern = match &cli.command {
        Command::Scene { pattern, .. } => *pattern,
        Command::Vtg { input, .. }
        | Command::Simulate { input, .. }
        | Command::Metrics { input }
        | Command::Energy { input, .. }
        | Command::Report { input, .. } => input.pattern,
        _ => None,
    };
    if let Some(p) = pattern {
        cfg.scene.pattern = p;
    }
    let out_dir = |out: &Option<PathBuf>, cfg: &PipelineConfig| out.clone().unwrap_or_else(|| cfg.out_dir.clone());

    match &cli.command {
        Command::Check => {
            cfg.validate().map_err(usage)?;
            let kcr = compute_kcr(&cfg.limits, cfg.vtg.delta).map_err(usage)?;
            println!("# configuration is valid");
            println!("# K_cr = {} 1/mm (limited by {:?})", kcr.value, kcr.limiting);
            if let Some(seed) = cli.seed {
                println!("# seed = {seed}");
            }
            print!("{}", cfg.to_toml());
        }
        Command::Ingest { input, out } => {
            let (tp, _, _) = load_input(input)?;
            let path = out_dir(out, &cfg).join("toolpath.json");
            write_file(&path, &(tp.to_json() + "\n"))?;
            print_json(&json!({
                "layers": tp.layer_count(),
                "points": tp.point_count(),
                "output": path.display().to_string(),
            }));
        }
        Command::Scene { out, .. } => {
            let (tp, warnings) = build_scene(&cfg.scene).map_err(usage)?;
            for w in warnings {
                eprintln!("warning: {w}");
            }
            let path = out_dir(out, &cfg).join(format!("scene_{}.json", cfg.scene.pattern));
            write_file(&path, &(tp.to_json() + "\n"))?;
            print_json(
                &json!({ "layers": tp.layer_count(), "points": tp.point_count(), "output": path.display().to_string() }),
            );
        }
        Command::Vtg { input, out } => {
            cfg.validate().map_err(usage)?;
            let tp = toolpath_for(input, &cfg)?;
            let kcr = compute_kcr(&cfg.limits, cfg.vtg.delta).map_err(usage)?;
            let (resampled, plan) = resample_toolpath(&tp.flatten(), &tp.layers, &cfg)?;
            let path = out_dir(out, &cfg).join("vtg_toolpath.json");
            write_file(&path, &(resampled.to_json() + "\n"))?;
            print_json(&json!({
                "kcr": kcr.value,
                "points_before": tp.point_count(),
                "points_after": resampled.point_count(),
                "duration_s": plan.duration(),
                "output": path.display().to_string(),
            }));
        }
        Command::Simulate { input, out, disable_vtg } => {
            cfg.validate().map_err(usage)?;
            let tp = toolpath_for(input, &cfg)?;
            let flat = tp.flatten();
            let (tp, plan) = if *disable_vtg {
                let plan = raw_plan(&flat, &cfg);
                (tp, plan)
            } else {
                resample_toolpath(&flat, &tp.layers, &cfg)?
            };
            let mut warnings = Vec::new();
            let run = execute_run(tp, plan, &cfg, &mut warnings)?;
            let trajectory = (0..run.reference.len())
                .map(|i| vtg_core::pipeline::TrajectoryRow {
                    run: if *disable_vtg { "before" } else { "after" },
                    time: i as f64 * run.dt,
                    reference: run.reference[i].into(),
                    table: run.table[i].into(),
                    acceleration: [run.acceleration[0][i], run.acceleration[1][i], run.acceleration[2][i]],
                })
                .collect();
            let data = PlotData { psd: run.psd.clone(), trajectory: Some(trajectory), ..PlotData::default() };
            let dir = out_dir(out, &cfg);
            let notices = emit_plot_data(&data, &dir)?;
            for w in warnings {
                eprintln!("warning: {w}");
            }
            print_json(&json!({
                "duration_s": run.report.duration_s,
                "rms_acceleration": run.report.rms_acceleration,
                "deviation_mm": run.report.deviation_mm,
                "psd_peaks": run.report.psd_peaks,
                "output": dir.display().to_string(),
                "notices": notices,
            }));
        }
        Command::Metrics { input } => {
            let tp = toolpath_for(input, &cfg)?;
            let m = path_metrics(&tp.flatten(), cfg.vtg.delta_theta);
            println!("{}", serde_json::to_string_pretty(&m).expect("json"));
        }
        Command::Energy { input, disable_vtg } => {
            cfg.validate().map_err(usage)?;
            let tp = toolpath_for(input, &cfg)?;
            let flat = tp.flatten();
            let (tp, plan) =
                if *disable_vtg { (tp, raw_plan(&flat, &cfg)) } else { resample_toolpath(&flat, &tp.layers, &cfg)? };
            let run = execute_run(tp, plan, &cfg, &mut Vec::new())?;
            print_json(&json!({
                "energy_j": run.report.energy_j,
                "material_kg": run.report.material_kg,
                "carbon_kg": run.report.carbon_kg,
            }));
        }
        Command::Report { input, out, disable_vtg } => {
            cfg.disable_vtg |= *disable_vtg;
            let started = Instant::now();
            let output = run_pipeline(&cfg, input.input.as_deref())?;
            let dir = out_dir(out, &cfg);
            let notices = write_bundle(&output, &dir, started.elapsed())?;
            for n in notices {
                eprintln!("notice: {n}");
            }
            for w in &output.report.warnings {
                eprintln!("warning: {w}");
            }
            let c = &output.report.comparison;
            println!("{}", c.to_csv().map_err(|e| PipelineError::new(Stage::Emit, ErrorKind::Io, e))?.trim_end());
            eprintln!("wrote {}", dir.display());
        }
    }
    Ok(())
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { ExitCode::from(1) } else { ExitCode::SUCCESS };
        }
    };
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.kind.exit_code() as u8)
        }
    }
}

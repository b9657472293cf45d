//! `mmsar`: simulate, image and evaluate millimeter-wave SAR scenes.

mod commands;
mod config;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use mmsar_core::{Axis, ReflectionKind};

use config::{Overrides, RunConfig};

#[derive(Debug, thiserror::Error)]
pub enum CliError {
    /// A required input (file, mesh, config) is absent.
    #[error("{0}")]
    Missing(String),
    #[error(transparent)]
    Core(#[from] mmsar_core::Error),
    #[error("{0}")]
    Other(String),
}

impl CliError {
    fn exit_code(&self) -> u8 {
        match self {
            CliError::Missing(_) => 2,
            CliError::Core(mmsar_core::Error::EmptyCloud(_)) => 3,
            _ => 1,
        }
    }
}

#[derive(Debug, Parser)]
#[command(name = "mmsar", version, about = "Millimeter-wave SAR simulation, imaging and evaluation")]
struct Cli {
    #[command(subcommand)]
    command: Command,

    /// JSON run configuration; flags override its fields.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// Triangle mesh (OBJ or PLY).
    #[arg(long, global = true)]
    mesh: Option<PathBuf>,
    /// Simulate only this reflection model.
    #[arg(long, global = true)]
    model: Option<ReflectionKind>,
    /// Specular cone half-angle in degrees.
    #[arg(long, global = true)]
    tau_deg: Option<f64>,
    /// Edge dihedral threshold in degrees.
    #[arg(long, global = true)]
    tau_e_deg: Option<f64>,
    /// Keep voxels/pixels within this many dB of the peak.
    #[arg(long, global = true)]
    threshold_db: Option<f64>,
    /// F-score distance threshold in meters.
    #[arg(long, global = true)]
    tau_f: Option<f64>,
    #[arg(long, global = true)]
    seed: Option<u64>,
    /// Worker threads (0 = all cores). Results do not depend on it.
    #[arg(long, global = true, env = "MMSAR_THREADS")]
    threads: Option<usize>,
    #[arg(long, global = true)]
    out_dir: Option<PathBuf>,
    /// Depth axis collapsed by 2D projections.
    #[arg(long, global = true)]
    project_axis: Option<Axis>,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Synthesize raw signals (one MSIG file per reflection model).
    Simulate,
    /// Backproject an MSIG file into an MVOL volume plus 2D projection.
    Image {
        signals: PathBuf,
        /// Empty-scene MSIG subtracted before imaging.
        #[arg(long)]
        background: Option<PathBuf>,
    },
    /// Score a real volume against specular and edge simulations.
    Eval {
        real: PathBuf,
        specular: PathBuf,
        edge: PathBuf,
    },
    /// Project an MVOL volume to a raw f32 image and a colorized PNG.
    Project { volume: PathBuf },
    /// Pick segmentation prompt pixels from one or two volumes.
    Prompts {
        primary: PathBuf,
        secondary: Option<PathBuf>,
        #[arg(long)]
        count: Option<usize>,
    },
    /// Print theoretical resolutions and mesh diagnostics.
    Info,
}

fn run(cli: Cli) -> Result<(), CliError> {
    if let Some(n) = cli.threads.filter(|n| *n > 0) {
        rayon::ThreadPoolBuilder::new()
            .num_threads(n)
            .build_global()
            .map_err(|e| CliError::Other(e.to_string()))?;
    }
    let mut cfg = match &cli.config {
        Some(path) => RunConfig::load(path)?,
        None => RunConfig::default(),
    };
    cfg.apply(&Overrides {
        mesh: cli.mesh,
        model: cli.model,
        tau_deg: cli.tau_deg,
        tau_e_deg: cli.tau_e_deg,
        threshold_db: cli.threshold_db,
        tau_f: cli.tau_f,
        seed: cli.seed,
        out_dir: cli.out_dir,
        project_axis: cli.project_axis,
    });
    cfg.validate()?;
    match cli.command {
        Command::Simulate => commands::simulate(&cfg),
        Command::Image { signals, background } => commands::image(&cfg, &signals, background.as_deref()),
        Command::Eval { real, specular, edge } => commands::eval(&cfg, &real, &specular, &edge),
        Command::Project { volume } => commands::project(&cfg, &volume),
        Command::Prompts {
            primary,
            secondary,
            count,
        } => {
            if let Some(c) = count {
                cfg.prompt_count = c;
            }
            commands::prompts(&cfg, &primary, secondary.as_deref())
        }
        Command::Info => commands::info(&cfg),
    }
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("info"))
        .format_timestamp(None)
        .init();
    let cli = Cli::parse();
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            log::error!("{e}");
            if let CliError::Core(mmsar_core::Error::EmptyCloud(_)) = e {
                log::error!("lower --threshold-db (keep more voxels) or check that the volumes contain a target");
            }
            ExitCode::from(e.exit_code())
        }
    }
}

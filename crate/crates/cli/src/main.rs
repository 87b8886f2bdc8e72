//! Command line driver: runs, resumes, verification suites and exports.

mod commands;
mod manifest;
mod verify;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};

use capflow::flow::{FlowMode, Scheme};
use capflow::CapflowError;

#[derive(Parser)]
#[command(name = "capflow", version, about = "Volume-preserving capillary curvature flow in the unit ball")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run the flow and write trajectory, checkpoints and report to --out.
    Run(RunArgs),
    /// Continue a run directory from its checkpoint.
    Resume {
        #[arg(long)]
        out: PathBuf,
        /// Defaults to <out>/checkpoint.json.
        #[arg(long)]
        checkpoint: Option<PathBuf>,
    },
    /// Print the cap quermassintegrals f_0 .. f_n as JSON.
    Cap {
        #[arg(long)]
        theta: f64,
        /// Cap radius; `inf` for the flat ball.
        #[arg(long)]
        r: f64,
        #[arg(long, default_value_t = 2)]
        n: usize,
    },
    /// Print the quermassintegral vector of a snapshot or checkpoint as JSON.
    Quermass { snapshot: PathBuf },
    /// Run a verification suite.
    Verify(VerifyArgs),
    /// Write a snapshot as an OBJ triangle mesh.
    ExportObj {
        snapshot: PathBuf,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Write the meridian profile of a snapshot as CSV.
    ExportCsv {
        snapshot: PathBuf,
        #[arg(long)]
        out: Option<PathBuf>,
    },
}

#[derive(Args, Clone)]
pub struct FlowArgs {
    #[arg(long, default_value_t = std::f64::consts::FRAC_PI_3)]
    pub theta: f64,
    #[arg(long, default_value_t = 2)]
    pub n: usize,
    #[arg(long, default_value = "axisym:128")]
    pub grid: String,
    #[arg(long, value_enum, default_value_t = ModeArg::Mct)]
    pub mode: ModeArg,
    #[arg(long, value_enum, default_value_t = SchemeArg::Imex)]
    pub scheme: SchemeArg,
    #[arg(long, default_value_t = 10.0)]
    pub tmax: f64,
    #[arg(long, default_value_t = 1e-6)]
    pub stop_tol: f64,
    #[arg(long, default_value_t = 10)]
    pub monitor_every: usize,
    #[arg(long)]
    pub fixed_dt: Option<f64>,
    #[arg(long)]
    pub max_steps: Option<usize>,
}

#[derive(Args)]
pub struct RunArgs {
    /// Read the whole run description from a manifest; other flags except
    /// --out are ignored.
    #[arg(long)]
    pub manifest: Option<PathBuf>,
    #[command(flatten)]
    pub flow: FlowArgs,
    /// cap, flat, perturbed, random, or a path to a snapshot file.
    #[arg(long, default_value = "perturbed")]
    pub initial: String,
    #[arg(long, default_value_t = 1.0)]
    pub radius: f64,
    #[arg(long, default_value_t = 0.1)]
    pub amplitude: f64,
    #[arg(long, default_value_t = 1)]
    pub wavenumber: u32,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    #[arg(long, default_value_t = 1000)]
    pub checkpoint_every: usize,
    #[arg(long)]
    pub out: PathBuf,
}

#[derive(Clone, Copy, ValueEnum)]
pub enum ModeArg {
    Mct,
    Mcf,
}

impl From<ModeArg> for FlowMode {
    fn from(m: ModeArg) -> Self {
        match m {
            ModeArg::Mct => FlowMode::Mct,
            ModeArg::Mcf => FlowMode::Mcf,
        }
    }
}

#[derive(Clone, Copy, ValueEnum)]
pub enum SchemeArg {
    Explicit,
    Imex,
}

impl From<SchemeArg> for Scheme {
    fn from(s: SchemeArg) -> Self {
        match s {
            SchemeArg::Explicit => Scheme::ExplicitEuler,
            SchemeArg::Imex => Scheme::Imex,
        }
    }
}

#[derive(Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Suite {
    Af,
    Mono,
    Conv,
    Est,
    Order,
}

#[derive(Args)]
pub struct VerifyArgs {
    #[arg(long, value_enum)]
    pub suite: Suite,
    /// Random samples for the af and est suites.
    #[arg(long, default_value_t = 20)]
    pub samples: usize,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    /// Perturbation amplitude of the mono and conv runs.
    #[arg(long, default_value_t = 0.1)]
    pub amplitude: f64,
    #[command(flatten)]
    pub flow: FlowArgs,
    /// Directory for report.json and the CSV tables.
    #[arg(long)]
    pub out: Option<PathBuf>,
}

/// Outcome of a command that ran to completion.
pub enum Status {
    Ok,
    NotConverged,
    GateFailed,
}

fn exit_code(err: &anyhow::Error) -> u8 {
    match err.downcast_ref::<CapflowError>() {
        Some(CapflowError::NotConverged { .. }) => 2,
        Some(e) if e.is_numerical() => 4,
        Some(CapflowError::Io(_)) => 1,
        Some(_) => 3,
        None => 1,
    }
}

fn dispatch(cli: Cli) -> anyhow::Result<Status> {
    match cli.command {
        Command::Run(args) => commands::run(&args),
        Command::Resume { out, checkpoint } => commands::resume(&out, checkpoint.as_deref()),
        Command::Cap { theta, r, n } => commands::cap(theta, r, n),
        Command::Quermass { snapshot } => commands::quermass(&snapshot),
        Command::Verify(args) => verify::verify(&args),
        Command::ExportObj { snapshot, out } => commands::export_obj(&snapshot, out.as_deref()),
        Command::ExportCsv { snapshot, out } => commands::export_csv(&snapshot, out.as_deref()),
    }
}

fn main() -> ExitCode {
    capflow::par::init_from_env();
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return ExitCode::from(if e.use_stderr() { 3 } else { 0 });
        }
    };
    match dispatch(cli) {
        Ok(Status::Ok) => ExitCode::SUCCESS,
        Ok(Status::NotConverged) => ExitCode::from(2),
        Ok(Status::GateFailed) => ExitCode::from(1),
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(exit_code(&e))
        }
    }
}

//! `higs` command-line front end.
//!
//! Every command is deterministic given its inputs. Structured results go
//! to stdout as JSON (CSV for describing-function sweeps); diagnostics go to
//! stderr. See [`error::code`] for the exit-code contract.

pub mod commands;
pub mod demo;
pub mod error;
pub mod scenario;

use std::ffi::OsString;
use std::io::Write;
use std::path::PathBuf;

use clap::{Parser, Subcommand, ValueEnum};

use crate::error::{code, CliError};

#[derive(Debug, Parser)]
#[command(name = "higs", version, about = "Negative-imaginary plants and HIGS controllers")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum MethodArg {
    /// Hamiltonian test, falling back to the sweep when `CB + BᵀCᵀ` is not
    /// positive definite.
    Auto,
    Sweep,
    Hamiltonian,
    Certificate,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum TopologyArg {
    Single,
    Multi,
    Cascade,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Decide whether a plant is negative imaginary. Exit 0 = NI, 1 = not
    /// NI, 2 = unknown.
    CheckNi {
        model: PathBuf,
        #[arg(long, value_enum, default_value = "auto")]
        method: MethodArg,
        /// Lowest sweep frequency, rad/s.
        #[arg(long)]
        grid_min: Option<f64>,
        /// Highest sweep frequency, rad/s.
        #[arg(long)]
        grid_max: Option<f64>,
        #[arg(long, default_value_t = 400)]
        grid_points: usize,
    },
    /// Choose HIGS gains from the plant's DC gain and print a controller.
    Synthesize {
        model: PathBuf,
        #[arg(long, value_enum, default_value = "single")]
        topology: TopologyArg,
        #[arg(long, default_value_t = 0.1)]
        margin: f64,
        #[arg(long, default_value_t = 100.0)]
        cap: f64,
        /// Integrator frequencies, rad/s, comma separated.
        #[arg(long, value_delimiter = ',')]
        omega_h: Option<Vec<f64>>,
    },
    /// Run one or more scenario files.
    Simulate {
        #[arg(required = true)]
        scenarios: Vec<PathBuf>,
        #[arg(long, default_value_t = 1)]
        jobs: usize,
    },
    /// Describing-function sweep of a single HIGS as CSV.
    DescribeFn {
        #[arg(long)]
        k_h: f64,
        #[arg(long)]
        omega_h: f64,
        #[arg(long, default_value_t = 1.0)]
        amplitude: f64,
        /// Frequencies, rad/s, comma separated.
        #[arg(long, value_delimiter = ',', required = true)]
        freqs: Vec<f64>,
        #[arg(long, default_value_t = 10)]
        settle_cycles: usize,
        #[arg(long, default_value_t = 10)]
        measure_cycles: usize,
        #[arg(long, default_value_t = 2000)]
        steps_per_cycle: usize,
        /// Write the CSV here instead of stdout.
        #[arg(long)]
        out: Option<PathBuf>,
        #[arg(long, default_value_t = 1)]
        jobs: usize,
    },
    /// Write the bundled nanopositioner model, controller and scenarios to
    /// `out_dir` and run the full workflow on them.
    DemoMems {
        out_dir: PathBuf,
        #[arg(long, default_value_t = 1)]
        jobs: usize,
    },
}

/// Output of a successful command.
#[derive(Debug, Clone, PartialEq)]
pub struct Outcome {
    pub code: i32,
    pub stdout: String,
    pub stderr: String,
}

impl Outcome {
    pub fn ok(stdout: String) -> Self {
        Outcome {
            code: code::NI,
            stdout,
            stderr: String::new(),
        }
    }
}

pub fn execute(cli: Cli) -> Result<Outcome, CliError> {
    match cli.command {
        Command::CheckNi {
            model,
            method,
            grid_min,
            grid_max,
            grid_points,
        } => commands::check_ni(&model, method, grid_min, grid_max, grid_points),
        Command::Synthesize {
            model,
            topology,
            margin,
            cap,
            omega_h,
        } => commands::synthesize(&model, topology, margin, cap, omega_h),
        Command::Simulate { scenarios, jobs } => commands::simulate(&scenarios, jobs),
        Command::DescribeFn {
            k_h,
            omega_h,
            amplitude,
            freqs,
            settle_cycles,
            measure_cycles,
            steps_per_cycle,
            out,
            jobs,
        } => commands::describe_fn(
            k_h,
            omega_h,
            amplitude,
            &freqs,
            higs_core::DescribingOptions {
                settle_cycles,
                measure_cycles,
                steps_per_cycle,
            },
            out.as_deref(),
            jobs,
        ),
        Command::DemoMems { out_dir, jobs } => demo::run(&out_dir, jobs),
    }
}

/// Parses `args` (including the program name), runs the command and
/// writes its output. Returns the process exit code.
pub fn run<I, T>(args: I, stdout: &mut dyn Write, stderr: &mut dyn Write) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) if e.use_stderr() => {
            let _ = write!(stderr, "{e}");
            return code::VALIDATION;
        }
        Err(e) => {
            // --help and --version.
            let _ = write!(stdout, "{e}");
            return code::NI;
        }
    };
    match execute(cli) {
        Ok(out) => {
            let _ = stdout.write_all(out.stdout.as_bytes());
            let _ = stderr.write_all(out.stderr.as_bytes());
            out.code
        }
        Err(e) => {
            let _ = writeln!(stderr, "error: {e}");
            e.code
        }
    }
}

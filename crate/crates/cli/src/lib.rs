//! The `coyote` command line.
//!
//! [`run`] parses arguments, dispatches to one subcommand and maps failures
//! to exit codes: 0 on success, 1 when the inputs are rejected or a file
//! cannot be read or written, 2 when the arguments themselves are wrong.

mod commands;
pub mod manifest;
pub mod plot;

use std::ffi::OsString;
use std::path::PathBuf;

use clap::{Args, Parser, Subcommand, ValueEnum};

pub use manifest::{RunManifest, SCHEMA_VERSION};
pub use plot::{render_plot, PlotStyle, Series};

#[derive(Debug, Parser)]
#[command(
    name = "coyote",
    version,
    about = "Released hanging spring chains: simulation, hang-time and asymptotics"
)]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Clone, Args)]
pub struct ConfigArgs {
    /// Chain config: a JSON file, or inline JSON starting with `{`.
    #[arg(long)]
    pub config: String,
    /// Replace the effective top mass (g).
    #[arg(long)]
    pub m1: Option<f64>,
    /// Replace the gravitational acceleration (cm/s²).
    #[arg(long)]
    pub g: Option<f64>,
}

#[derive(Debug, Clone, Args)]
pub struct PlotArgs {
    /// Also write an SVG plot here.
    #[arg(long)]
    pub plot: Option<PathBuf>,
    /// Plot log10 |z| against log10 t.
    #[arg(long)]
    pub log_log: bool,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum ModeArg {
    OneShot,
    Reengaging,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum AlignmentArg {
    ReleaseTime,
    BestShift,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum SweepParam {
    M1,
    Lp,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Integrate the released linear chain and write a trajectory CSV.
    Simulate {
        #[command(flatten)]
        config: ConfigArgs,
        /// End time (s).
        #[arg(long)]
        t_end: f64,
        /// Step (s).
        #[arg(long)]
        dt: f64,
        /// Trajectory CSV.
        #[arg(long)]
        out: PathBuf,
        #[command(flatten)]
        plot: PlotArgs,
    },
    /// Integrate the chain with spring cut-offs.
    SimulateCutoff {
        #[command(flatten)]
        config: ConfigArgs,
        /// End time (s).
        #[arg(long)]
        t_end: f64,
        /// Step (s).
        #[arg(long)]
        dt: f64,
        /// Cut-off lengths per spring (cm), comma separated; defaults to the
        /// config's `natural_lengths_cm`.
        #[arg(long, value_delimiter = ',')]
        ls: Option<Vec<f64>>,
        /// Whether slack springs may pull again.
        #[arg(long, value_enum, default_value = "one-shot")]
        mode: ModeArg,
        /// Trajectory CSV.
        #[arg(long)]
        out: PathBuf,
        #[command(flatten)]
        plot: PlotArgs,
    },
    /// Predicted hang-time for one or more detection thresholds.
    Hangtime {
        #[command(flatten)]
        config: ConfigArgs,
        /// Detection threshold(s) L_p (cm), comma separated.
        #[arg(long, value_delimiter = ',', required = true)]
        lp: Vec<f64>,
        /// Write the JSON report here instead of stdout.
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Per-mass short-time prefactors and validity windows.
    Asympt {
        #[command(flatten)]
        config: ConfigArgs,
        /// Write the JSON report here instead of stdout.
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Least-squares spring constant from `displacement_cm,force_dyn` data.
    FitSprings {
        /// Calibration CSV.
        #[arg(long)]
        data: PathBuf,
        /// Write the JSON report here instead of stdout.
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Compare a tracked mass with a simulated trajectory.
    Compare {
        /// Track CSV (`t,z`), or a trajectory CSV with `--track-mass`.
        #[arg(long)]
        track: PathBuf,
        /// Read the track as column `z<j>` of a trajectory CSV.
        #[arg(long)]
        track_mass: Option<usize>,
        /// Trajectory CSV from `simulate`.
        #[arg(long)]
        traj: PathBuf,
        /// Mass of the trajectory to compare (1-based).
        #[arg(long)]
        mass: usize,
        #[arg(long, value_enum, default_value = "release-time")]
        alignment: AlignmentArg,
        /// Half-width of the best-shift search (s).
        #[arg(long, default_value_t = 0.05)]
        window: f64,
        /// Detection threshold for hang-times (cm).
        #[arg(long)]
        lp: Option<f64>,
        /// Write the JSON report here instead of stdout.
        #[arg(long)]
        out: Option<PathBuf>,
        #[command(flatten)]
        plot: PlotArgs,
    },
    /// Hang-time and prefactor over a grid of top masses or thresholds.
    Sweep {
        #[command(flatten)]
        config: ConfigArgs,
        /// Quantity varied across the grid.
        #[arg(long, value_enum)]
        param: SweepParam,
        /// Grid values, comma separated.
        #[arg(long, value_delimiter = ',', conflicts_with = "geom")]
        values: Option<Vec<f64>>,
        /// Geometric grid `start,end,count`.
        #[arg(long, value_delimiter = ',', num_args = 1)]
        geom: Option<Vec<f64>>,
        /// Threshold for m1 sweeps (cm).
        #[arg(long, default_value_t = 0.05)]
        lp: f64,
        /// Also measure the hang-time from a simulation at each point.
        #[arg(long)]
        simulate: bool,
        /// Simulation step (s); defaults to 1/200 of the fastest local time scale of each point.
        #[arg(long)]
        dt: Option<f64>,
        /// Sweep table CSV.
        #[arg(long)]
        out: PathBuf,
        #[command(flatten)]
        plot: PlotArgs,
    },
    /// Nondimensional two-mass cut-off benchmark against the exact solution.
    DemoTwoMass {
        /// Cut-off length L_s.
        #[arg(long, default_value_t = 0.5)]
        ls: f64,
        /// End time; defaults to twice the cut-off time.
        #[arg(long)]
        t_end: Option<f64>,
        /// Step in nondimensional time.
        #[arg(long, default_value_t = 1e-4)]
        dt: f64,
        /// Write samples `t,x,y,x_exact,y_exact` here.
        #[arg(long)]
        out: Option<PathBuf>,
        #[command(flatten)]
        plot: PlotArgs,
    },
}

/// Runs one command line (including the program name) and returns the exit
/// code.
pub fn run<I, T>(argv: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let argv: Vec<OsString> = argv.into_iter().map(Into::into).collect();
    let cli = match Cli::try_parse_from(&argv) {
        Ok(cli) => cli,
        Err(e) => {
            use clap::error::ErrorKind;
            if matches!(e.kind(), ErrorKind::DisplayHelp | ErrorKind::DisplayVersion) {
                print!("{e}");
                return 0;
            }
            let rendered = e.render().to_string();
            let first = rendered.lines().next().unwrap_or("invalid arguments");
            eprintln!("{first} (see `coyote --help`)");
            return 2;
        }
    };
    let argv: Vec<String> = argv
        .iter()
        .map(|a| a.to_string_lossy().into_owned())
        .collect();
    match commands::dispatch(cli.command, &argv) {
        Ok(()) => 0,
        Err(e) => {
            let chain: Vec<String> = e.chain().map(|c| c.to_string()).collect();
            eprintln!("error: {}", chain.join(": "));
            1
        }
    }
}

//! Argument parsing and dispatch.

use std::ffi::OsString;
use std::io::Write;
use std::path::PathBuf;

use clap::{Args, Parser, Subcommand};

use crate::config::{Format, GridFile, PartialConfig, RunConfig};
use crate::error::{config, CliError};
use crate::run;

/// Counting statistics of exciton transfer in small FMO-like models.
#[derive(Debug, Parser)]
#[command(name = "exciton-fcs", version, about)]
pub struct Cli {
    /// Subcommand.
    #[command(subcommand)]
    pub command: Command,
}

/// Subcommands.
#[derive(Debug, Subcommand)]
pub enum Command {
    /// θ(s), activity and Q(s) scans, one file per temperature and channel.
    ThetaScan(Common),
    /// Sign changes and local maxima of Q(s) across temperatures.
    CrossoverMap(Common),
    /// Compare spectral and trajectory estimates at s = 0.
    OracleCheck(OracleArgs),
    /// Rate function φ(k) from the Legendre transform of θ(s).
    RateFunction(RateArgs),
    /// List the built-in models.
    Presets {
        /// Print JSON instead of a table.
        #[arg(long)]
        json: bool,
    },
}

/// Options shared by the computing subcommands.
#[derive(Debug, Args, Default)]
pub struct Common {
    /// JSON config file; flags override its values.
    #[arg(long, value_name = "FILE")]
    pub config: Option<PathBuf>,
    /// Built-in model (fmo2, fmo3, fmo4).
    #[arg(long, conflicts_with = "model")]
    pub preset: Option<String>,
    /// JSON model file.
    #[arg(long, value_name = "FILE")]
    pub model: Option<PathBuf>,
    /// Temperatures in K, comma separated.
    #[arg(long, value_delimiter = ',')]
    pub temps: Option<Vec<f64>>,
    /// Counted channel, e.g. "down:a2->a1", "pair:a1<->a2" or "all-down"; repeatable.
    #[arg(long = "channel")]
    pub channels: Vec<String>,
    /// Smallest s.
    #[arg(long, allow_hyphen_values = true)]
    pub s_min: Option<f64>,
    /// Largest s.
    #[arg(long, allow_hyphen_values = true)]
    pub s_max: Option<f64>,
    /// Number of s points.
    #[arg(long)]
    pub s_points: Option<usize>,
    /// Output directory.
    #[arg(long, value_name = "DIR")]
    pub out: Option<PathBuf>,
    /// Output formats, comma separated (csv, json, svg).
    #[arg(long, value_delimiter = ',')]
    pub format: Option<Vec<String>>,
    /// Worker threads (default: all cores).
    #[arg(long)]
    pub threads: Option<usize>,
}

/// `oracle-check` options.
#[derive(Debug, Args)]
pub struct OracleArgs {
    /// Shared options.
    #[command(flatten)]
    pub common: Common,
    /// Trajectory options.
    #[command(flatten)]
    pub traj: TrajArgs,
    /// Channels counted by the trajectory side, when different from --channel.
    #[arg(long = "trajectory-channel")]
    pub trajectory_channels: Vec<String>,
}

/// `rate-function` options.
#[derive(Debug, Args)]
pub struct RateArgs {
    /// Shared options.
    #[command(flatten)]
    pub common: Common,
    /// Trajectory options for the empirical estimate.
    #[command(flatten)]
    pub traj: TrajArgs,
    /// Also estimate φ(k) from trajectory histograms.
    #[arg(long)]
    pub empirical: bool,
}

/// Trajectory ensemble options.
#[derive(Debug, Args, Default)]
pub struct TrajArgs {
    /// RNG seed.
    #[arg(long)]
    pub seed: Option<u64>,
    /// Number of trajectories.
    #[arg(long)]
    pub traj: Option<usize>,
    /// Trajectory length in ps (default: about 200 counted jumps).
    #[arg(long)]
    pub t_max_ps: Option<f64>,
}

fn partial(
    common: &Common,
    traj: Option<&TrajArgs>,
    trajectory_channels: &[String],
) -> Result<PartialConfig, CliError> {
    let file = match &common.config {
        Some(path) => PartialConfig::from_file(path)?,
        None => PartialConfig::default(),
    };
    let formats = common
        .format
        .as_ref()
        .map(|v| {
            v.iter()
                .map(|s| s.parse::<Format>())
                .collect::<Result<Vec<_>, _>>()
        })
        .transpose()?;
    let s_grid = (common.s_min.is_some() || common.s_max.is_some() || common.s_points.is_some())
        .then_some(GridFile {
            min: common.s_min,
            max: common.s_max,
            points: common.s_points,
        });
    let flags = PartialConfig {
        preset: common.preset.clone(),
        model: common.model.clone(),
        bath: None,
        temperatures: common.temps.clone(),
        channels: (!common.channels.is_empty()).then(|| common.channels.clone()),
        trajectory_channels: (!trajectory_channels.is_empty())
            .then(|| trajectory_channels.to_vec()),
        s_grid,
        out: common.out.clone(),
        formats,
        seed: traj.and_then(|t| t.seed),
        trajectories: traj.and_then(|t| t.traj),
        t_max_ps: traj.and_then(|t| t.t_max_ps),
        threads: common.threads,
    };
    Ok(file.overridden_by(flags))
}

fn print_files(out: &mut impl Write, files: &[PathBuf]) -> Result<(), CliError> {
    for f in files {
        writeln!(out, "{}", f.display()).map_err(|source| CliError::Output {
            path: f.clone(),
            source,
        })?;
    }
    Ok(())
}

/// Runs one parsed command, writing file paths (or the preset listing) to `out`.
pub fn execute(cli: Cli, out: &mut impl Write) -> Result<(), CliError> {
    match cli.command {
        Command::ThetaScan(c) => {
            let cfg = RunConfig::resolve(partial(&c, None, &[])?, &[Format::Csv])?;
            print_files(out, &run::run_theta_scan(&cfg)?)
        }
        Command::CrossoverMap(c) => {
            let cfg = RunConfig::resolve(partial(&c, None, &[])?, &[Format::Json])?;
            print_files(out, &run::run_crossover_map(&cfg)?)
        }
        Command::OracleCheck(a) => {
            let cfg = RunConfig::resolve(
                partial(&a.common, Some(&a.traj), &a.trajectory_channels)?,
                &[Format::Json],
            )?;
            let (files, pass) = run::run_oracle_check(&cfg)?;
            print_files(out, &files)?;
            writeln!(out, "pass={pass}").map_err(|e| config(e.to_string()))
        }
        Command::RateFunction(a) => {
            let cfg = RunConfig::resolve(partial(&a.common, Some(&a.traj), &[])?, &[Format::Csv])?;
            print_files(out, &run::run_rate_function(&cfg, a.empirical)?)
        }
        Command::Presets { json } => {
            let list = run::presets()?;
            let text = if json {
                crate::output::json(&list)
            } else {
                run::presets_text(&list)
            };
            out.write_all(text.as_bytes())
                .map_err(|e| config(e.to_string()))
        }
    }
}

/// Entry point: parses `args`, runs, and returns the process exit code.
/// Errors go to stderr as one JSON line.
pub fn main_with_args<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            use clap::error::ErrorKind;
            if matches!(e.kind(), ErrorKind::DisplayHelp | ErrorKind::DisplayVersion) {
                let _ = e.print();
                return 0;
            }
            let line = serde_json::json!({
                "error": "usage",
                "message": e.to_string().lines().next().unwrap_or("invalid arguments"),
            });
            eprintln!("{line}");
            return 2;
        }
    };
    let stdout = std::io::stdout();
    let mut lock = stdout.lock();
    match execute(cli, &mut lock) {
        Ok(()) => 0,
        Err(e) => {
            eprintln!("{}", e.to_json_line());
            e.exit_code()
        }
    }
}

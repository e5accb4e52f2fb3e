//! Argument parsing and the top-level driver.

use std::ffi::OsString;
use std::io::Write;
use std::path::PathBuf;

use clap::{Args, Parser, Subcommand, ValueEnum};

use crate::commands::{run, Outcome};
use crate::config::{default_tol, parse_angle, parse_grid, parse_pade, CommandKind, Fault, Format, GridSpec, RunConfig};
use crate::error::{CliError, ExitCode};

#[derive(Debug, Parser)]
#[command(name = "rmprod", version, about = "Invariant densities and Lyapunov exponents of random SL(2,C) products")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Invariant density on a grid, with normalization rows.
    Density(CommonArgs),
    /// Exact and asymptotic Lyapunov exponents over a (p, s, alpha) grid.
    Lyapunov(CommonArgs),
    /// Monte Carlo estimates of the exponent and chain moments, or a histogram.
    Simulate(CommonArgs),
    /// Localization rate of the random Schrodinger operator vs wavefunction growth.
    Schrodinger(CommonArgs),
    /// Convergence rate of random Stieltjes continued fractions.
    Pade(CommonArgs),
    /// Run the acceptance checks; exit 1 if any fails.
    Verify(CommonArgs),
}

#[derive(Debug, Clone, Copy, ValueEnum)]
pub enum FormatArg {
    Csv,
    Json,
}

#[derive(Debug, Clone, Copy, ValueEnum)]
pub enum FaultArg {
    Normalization,
}

#[derive(Debug, Clone, Args)]
pub struct CommonArgs {
    /// Gamma shape p (comma-separated list for grid commands).
    #[arg(long, value_delimiter = ',', default_value = "1")]
    pub p: Vec<f64>,
    /// Gamma scale s (sigma for `pade`).
    #[arg(long, value_delimiter = ',', default_value = "1")]
    pub s: Vec<f64>,
    /// Ray angle; accepts reals and forms like pi/6 or -9pi/20.
    #[arg(long, value_delimiter = ',', allow_hyphen_values = true, value_parser = parse_angle, default_value = "pi/6")]
    pub alpha: Vec<f64>,
    /// Sample count (`simulate`, `schrodinger`) or largest truncation (`pade`).
    #[arg(long)]
    pub n: Option<u64>,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    #[arg(long, default_value_t = 1000)]
    pub burn_in: u64,
    /// lo:hi:count grid in r (cone), y (axis) or x (half line); also histogram bins.
    #[arg(long, value_parser = parse_grid, allow_hyphen_values = true)]
    pub grid_r: Option<GridSpec>,
    /// Number of angular cells across the cone.
    #[arg(long, default_value_t = 120)]
    pub grid_theta: u32,
    #[arg(long, value_enum)]
    pub format: Option<FormatArg>,
    /// Output file; stdout when absent.
    #[arg(long)]
    pub out: Option<PathBuf>,
    /// Simulation threads; results depend on this value, not on scheduling.
    #[arg(long, default_value_t = 1)]
    pub workers: u32,
    /// Real part of the continued-fraction argument t.
    #[arg(long, default_value_t = 1.0, allow_hyphen_values = true)]
    pub t_re: f64,
    /// Imaginary part of t.
    #[arg(long, default_value_t = 0.0, allow_hyphen_values = true)]
    pub t_im: f64,
    /// Independent draws for `pade`.
    #[arg(long, default_value_t = 20)]
    pub reps: u64,
    /// Pade degrees L/M for the resummed small-s column of `lyapunov`; the
    /// solver steps down the diagonal when the system is numerically singular.
    #[arg(long, value_parser = parse_pade, default_value = "16/16")]
    pub pade: [u32; 2],
    /// Evaluate Dyson's density at this t instead of the invariant density.
    #[arg(long)]
    pub dyson_t: Option<f64>,
    /// `simulate`: write an empirical histogram on the grid instead of estimates.
    #[arg(long)]
    pub histogram: bool,
    /// `verify`: run only these criteria.
    #[arg(long, value_delimiter = ',')]
    pub only: Vec<u32>,
    /// `verify`: deliberately break a component to exercise the checks.
    #[arg(long, value_enum)]
    pub inject_fault: Option<FaultArg>,
}

fn default_grid(command: CommandKind, alpha: &[f64]) -> GridSpec {
    let axis = alpha.iter().any(|a| (a.abs() - std::f64::consts::FRAC_PI_2).abs() < 1e-12);
    match (command, axis) {
        (_, true) => GridSpec { lo: -20.0, hi: 20.0, count: 400 },
        _ => GridSpec { lo: 0.0, hi: 20.0, count: 400 },
    }
}

fn default_n(command: CommandKind) -> u64 {
    match command {
        CommandKind::Pade => 200,
        CommandKind::Simulate | CommandKind::Schrodinger => 1_000_000,
        _ => 0,
    }
}

/// Turns parsed arguments into a fully resolved configuration.
pub fn resolve(command: CommandKind, args: CommonArgs) -> Result<RunConfig, CliError> {
    let format = match args.format {
        Some(FormatArg::Csv) => Format::Csv,
        Some(FormatArg::Json) => Format::Json,
        None if command == CommandKind::Verify => Format::Json,
        None => Format::Csv,
    };
    if args.workers == 0 {
        return Err(CliError::Usage("--workers must be at least 1".into()));
    }
    if args.grid_theta == 0 {
        return Err(CliError::Usage("--grid-theta must be at least 1".into()));
    }
    Ok(RunConfig {
        command,
        grid_r: args.grid_r.unwrap_or_else(|| default_grid(command, &args.alpha)),
        n: args.n.unwrap_or_else(|| default_n(command)),
        p: args.p,
        s: args.s,
        alpha: args.alpha,
        seed: args.seed,
        burn_in: args.burn_in,
        grid_theta: args.grid_theta,
        format,
        out: args.out.map(|p| p.display().to_string()),
        tol: default_tol()?,
        workers: args.workers,
        t: [args.t_re, args.t_im],
        reps: args.reps,
        pade: args.pade,
        dyson_t: args.dyson_t,
        histogram: args.histogram,
        only: args.only,
        inject_fault: args.inject_fault.map(|FaultArg::Normalization| Fault::Normalization),
    })
}

fn split(command: Command) -> (CommandKind, CommonArgs) {
    match command {
        Command::Density(a) => (CommandKind::Density, a),
        Command::Lyapunov(a) => (CommandKind::Lyapunov, a),
        Command::Simulate(a) => (CommandKind::Simulate, a),
        Command::Schrodinger(a) => (CommandKind::Schrodinger, a),
        Command::Pade(a) => (CommandKind::Pade, a),
        Command::Verify(a) => (CommandKind::Verify, a),
    }
}

fn write_output(config: &RunConfig, text: &str) -> Result<(), CliError> {
    match &config.out {
        Some(path) => std::fs::write(path, text).map_err(|source| CliError::Io { path: path.into(), source }),
        None => {
            let mut stdout = std::io::stdout().lock();
            stdout
                .write_all(text.as_bytes())
                .and_then(|_| stdout.flush())
                .map_err(|source| CliError::Io { path: "<stdout>".into(), source })
        }
    }
}

fn execute(config: &RunConfig) -> Result<ExitCode, CliError> {
    let Outcome { doc, exit, notes } = run(config)?;
    let text = doc.render(config.format)?;
    write_output(config, &text)?;
    for line in notes {
        eprintln!("{line}");
    }
    Ok(exit)
}

/// Parses `args` (program name first), runs the command, and returns the
/// process exit status.
pub fn main_with_args<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { ExitCode::Usage as i32 } else { ExitCode::Success as i32 };
        }
    };
    let (kind, args) = split(cli.command);
    let result = resolve(kind, args).and_then(|config| execute(&config));
    match result {
        Ok(code) => code as i32,
        Err(e) => {
            eprintln!("rmprod: {e}");
            e.exit_code() as i32
        }
    }
}

//! `interlock`: minimize curvature-penalized interface profiles, check their
//! optimality conditions and compare them with circular and polygonal shapes.
//!
//! Exit codes: 0 on success, 2 when a minimization did not converge, 1 on
//! usage or input errors.

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};

mod commands;
mod output;
mod svg;

#[derive(Debug, Parser)]
#[command(
    name = "interlock",
    version,
    about = "Curvature-penalized interface profiles"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Minimize J at fixed area; writes result.json, profile.csv, profile.svg.
    Minimize(MinimizeArgs),
    /// Euler–Lagrange residual of a profile table; writes residual.json, residual.csv, residual.svg.
    Residual(ResidualArgs),
    /// Minimizer vs. circular cap vs. mollified triangles; writes compare.json, compare.csv, compare.svg.
    Compare(CompareArgs),
    /// Minimize over a range of gamma or area values; writes sweep.csv, sweep.json, sweep.svg.
    Sweep(SweepArgs),
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
pub enum Format {
    Json,
    Csv,
    Svg,
}

#[derive(Debug, Args)]
pub struct OutputArgs {
    /// Output directory [default: $INTERLOCK_OUT_DIR, else .]
    #[arg(long, value_name = "DIR")]
    out: Option<PathBuf>,
    /// Files to write.
    #[arg(
        long,
        value_enum,
        value_delimiter = ',',
        default_value = "json,csv,svg"
    )]
    format: Vec<Format>,
}

#[derive(Debug, Args)]
pub struct SolverArgs {
    /// Number of elements.
    #[arg(long, default_value_t = 64, value_parser = clap::value_parser!(u32).range(4..))]
    elements: u32,
    /// Projected-gradient stopping tolerance.
    #[arg(long, default_value_t = 1e-8)]
    tol: f64,
    #[arg(long, default_value_t = 10_000)]
    max_iters: usize,
    /// Quasi-Newton memory (0 = off).
    #[arg(long, default_value_t = 0)]
    lbfgs: usize,
}

#[derive(Debug, Args)]
pub struct MinimizeArgs {
    /// Half-width of the domain.
    #[arg(long, allow_hyphen_values = true)]
    a: f64,
    /// Curvature-penalty weight.
    #[arg(long, allow_hyphen_values = true)]
    gamma: f64,
    /// Enclosed area.
    #[arg(long, allow_hyphen_values = true)]
    area: f64,
    /// Best of three starts (seed scaled by 0.5, 1, 2).
    #[arg(long)]
    multistart: bool,
    #[command(flatten)]
    solver: SolverArgs,
    #[command(flatten)]
    output: OutputArgs,
}

#[derive(Debug, Args)]
#[command(group = clap::ArgGroup::new("multiplier").required(true).args(["lambda", "recover"]))]
pub struct ResidualArgs {
    /// Profile table with header x,f,fp.
    #[arg(long, value_name = "FILE")]
    profile: PathBuf,
    /// Multiplier to use.
    #[arg(long, allow_hyphen_values = true)]
    lambda: Option<f64>,
    /// Recover the least-squares multiplier from the profile.
    #[arg(long)]
    recover: bool,
    /// Curvature-penalty weight (not stored in the table).
    #[arg(long, default_value_t = 0.1)]
    gamma: f64,
    /// Number of residual samples.
    #[arg(long, default_value_t = 128, value_parser = clap::value_parser!(u32).range(16..))]
    samples: u32,
    #[command(flatten)]
    output: OutputArgs,
}

#[derive(Debug, Args)]
pub struct CompareArgs {
    #[arg(long, allow_hyphen_values = true)]
    a: f64,
    #[arg(long, allow_hyphen_values = true)]
    gamma: f64,
    #[arg(long, allow_hyphen_values = true)]
    area: f64,
    /// Blend widths of the mollified triangles.
    #[arg(long, value_delimiter = ',', default_value = "0.2,0.1,0.05,0.025")]
    h_sequence: Vec<f64>,
    #[command(flatten)]
    solver: SolverArgs,
    #[command(flatten)]
    output: OutputArgs,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
pub enum SweepParam {
    Gamma,
    Area,
}

#[derive(Debug, Args)]
pub struct SweepArgs {
    /// Parameter to vary.
    #[arg(long)]
    param: SweepParam,
    #[arg(long, allow_hyphen_values = true)]
    from: f64,
    #[arg(long, allow_hyphen_values = true)]
    to: f64,
    /// Number of evenly spaced values, endpoints included.
    #[arg(long, value_parser = clap::value_parser!(u32).range(2..))]
    steps: u32,
    #[arg(long, default_value_t = 1.0, allow_hyphen_values = true)]
    a: f64,
    #[arg(long, default_value_t = 0.1, allow_hyphen_values = true)]
    gamma: f64,
    #[arg(long, default_value_t = 0.5, allow_hyphen_values = true)]
    area: f64,
    /// Best of three starts (seed scaled by 0.5, 1, 2).
    #[arg(long)]
    multistart: bool,
    #[command(flatten)]
    solver: SolverArgs,
    #[command(flatten)]
    output: OutputArgs,
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return ExitCode::from(if e.use_stderr() { 1 } else { 0 });
        }
    };
    let outcome = match cli.command {
        Command::Minimize(args) => commands::minimize(&args),
        Command::Residual(args) => commands::residual(&args),
        Command::Compare(args) => commands::compare(&args),
        Command::Sweep(args) => commands::sweep(&args),
    };
    match outcome {
        Ok(code) => ExitCode::from(code),
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(1)
        }
    }
}

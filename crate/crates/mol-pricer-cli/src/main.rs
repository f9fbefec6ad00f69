//! Command-line front end for the method-of-lines pricer.
//!
//! Four subcommands over one flat configuration: `price` and `greeks`
//! report a single grid, `converge` walks a list of grid sizes with wall
//! times, and `csweep` walks a list of mesh parameters. Values come from a
//! config file (`--config`), overridden by flags; everything has a
//! default, so `mol-pricer price` alone prices the reference call.

mod config;
mod output;
mod runner;

use clap::{Args, Parser, Subcommand};
use std::error::Error;
use std::path::PathBuf;
use std::process::ExitCode;

use config::{OutputFormat, RunConfig};

#[derive(Parser)]
#[command(name = "mol-pricer", version, about = "Black-Scholes pricing by the method of lines")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Price at the spot for each report time
    Price(CommonArgs),
    /// Delta, gamma, theta, vega, and rho at the spot
    Greeks(CommonArgs),
    /// Timed price per grid size in --n (sequential, honest timing)
    Converge(CommonArgs),
    /// Price per mesh parameter in --c at fixed n (parallel)
    Csweep(CommonArgs),
}

/// One flag per configuration key; unset flags fall back to the config
/// file, then to defaults.
#[derive(Args)]
pub struct CommonArgs {
    /// Flat key/value config file (toml); flags override it
    #[arg(long)]
    config: Option<PathBuf>,
    /// call, put, powered, or cash
    #[arg(long)]
    payoff: Option<String>,
    #[arg(long)]
    strike: Option<f64>,
    /// Exponent p of the powered call
    #[arg(long)]
    power: Option<u32>,
    /// Payout C of the cash-or-nothing option
    #[arg(long)]
    cash_amount: Option<f64>,
    #[arg(long)]
    sigma: Option<f64>,
    #[arg(long)]
    rate: Option<f64>,
    #[arg(long)]
    spot: Option<f64>,
    #[arg(long)]
    maturity: Option<f64>,
    /// Count E for equal spacing, or an explicit comma list of dates
    #[arg(long)]
    exercise_dates: Option<String>,
    /// Interior grid size(s); a comma list for converge
    #[arg(long, value_delimiter = ',')]
    n: Option<Vec<usize>>,
    /// Mesh map parameter(s); a comma list for csweep
    #[arg(long, value_delimiter = ',')]
    c: Option<Vec<f64>>,
    /// Mesh map parameter d
    #[arg(long)]
    d: Option<f64>,
    /// Truncation coordinate in (1, d)
    #[arg(long)]
    eta_tail: Option<f64>,
    /// Report time(s) in years to expiry
    #[arg(long, value_delimiter = ',')]
    tau: Option<Vec<f64>>,
    /// csv or json
    #[arg(long)]
    format: Option<String>,
    /// Output path (stdout when omitted)
    #[arg(long)]
    out: Option<PathBuf>,
}

fn main() -> ExitCode {
    match run() {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::FAILURE
        }
    }
}

fn run() -> Result<(), Box<dyn Error>> {
    let cli = Cli::parse();
    let (args, emit): (&CommonArgs, fn(&RunConfig) -> Result<(), Box<dyn Error>>) =
        match &cli.command {
            Command::Price(args) => (args, |config| {
                emit_rows(&runner::price_rows(config)?, config)
            }),
            Command::Greeks(args) => (args, |config| {
                emit_rows(&runner::greek_rows(config)?, config)
            }),
            Command::Converge(args) => (args, |config| {
                emit_rows(&runner::converge_rows(config)?, config)
            }),
            Command::Csweep(args) => (args, |config| {
                emit_rows(&runner::csweep_rows(config)?, config)
            }),
        };
    let config = RunConfig::resolve(args)?;
    emit(&config)
}

fn emit_rows<R: serde::Serialize>(rows: &[R], config: &RunConfig) -> Result<(), Box<dyn Error>> {
    output::emit(
        rows,
        &config.hash(),
        config.format == OutputFormat::Json,
        config.out.as_deref(),
    )
}

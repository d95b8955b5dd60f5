//! `contact-virial`: experiment runner for contact dynamics and virial
//! identity checks.
//!
//! Exit codes: 0 success, 1 I/O failure, 2 invalid configuration,
//! 3 integration abort (partial artifacts kept), 4 verification failure.

/// Stdout writes that tolerate a closed pipe.
macro_rules! outln {
    ($($t:tt)*) => {{
        use std::io::Write as _;
        let _ = writeln!(std::io::stdout(), $($t)*);
    }};
}

macro_rules! out {
    ($($t:tt)*) => {{
        use std::io::Write as _;
        let _ = write!(std::io::stdout(), $($t)*);
    }};
}

mod commands;
mod config;

use std::process::ExitCode;

use clap::{Parser, Subcommand};
use contact_virial::Error;

use config::Overrides;

#[derive(Debug)]
pub struct CliError {
    pub code: u8,
    pub message: String,
}

impl CliError {
    pub fn config(message: impl Into<String>) -> Self {
        Self { code: 2, message: message.into() }
    }
    pub fn aborted(message: impl Into<String>) -> Self {
        Self { code: 3, message: message.into() }
    }
    pub fn breach(message: impl Into<String>) -> Self {
        Self { code: 4, message: message.into() }
    }
    pub fn io(message: impl Into<String>) -> Self {
        Self { code: 1, message: message.into() }
    }
}

impl From<Error> for CliError {
    fn from(e: Error) -> Self {
        let code = match e {
            Error::Aborted(_)
            | Error::AllAborted(_)
            | Error::NonFinite { .. }
            | Error::SingularHessian { .. }
            | Error::EmptyTrajectory => 3,
            _ => 2,
        };
        Self { code, message: e.to_string() }
    }
}

#[derive(Parser)]
#[command(name = "contact-virial", version, about = "Contact Hamiltonian dynamics and virial identity checks")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// List catalog systems, charts and parameter schemas.
    ListSystems,
    /// Integrate and write trajectory.csv, report.txt and running_averages.csv.
    Simulate(Overrides),
    /// Virial report (report.txt, running_averages.csv) printed to stdout.
    Virial(Overrides),
    /// Ensemble of noisy trajectories with standard-error bars.
    Ensemble(Overrides),
    /// Compare analytic partials with central differences.
    Gradcheck {
        /// Restrict to one system; all catalog systems otherwise.
        #[arg(long)]
        system: Option<String>,
        /// Parameter override `name=value` for `--system`; repeatable.
        #[arg(long = "param", value_name = "NAME=VALUE")]
        params: Vec<String>,
        /// Sample states per chart.
        #[arg(long, default_value_t = 16)]
        points: usize,
    },
    /// Check the exact finite-horizon identity only.
    CheckIdentity(Overrides),
}

fn parse_params(raw: &[String]) -> Result<Vec<(String, f64)>, CliError> {
    raw.iter()
        .map(|kv| {
            let (k, v) = kv
                .split_once('=')
                .ok_or_else(|| CliError::config(format!("--param expects NAME=VALUE, got `{kv}`")))?;
            let v = v
                .trim()
                .parse()
                .map_err(|_| CliError::config(format!("--param {k}: `{v}` is not a number")))?;
            Ok((k.trim().to_string(), v))
        })
        .collect()
}

fn run(cli: Cli) -> Result<(), CliError> {
    match cli.command {
        Command::ListSystems => {
            commands::list_systems();
            Ok(())
        }
        Command::Simulate(o) => commands::simulate(&o.resolve(false)?),
        Command::Virial(o) => commands::virial(&o.resolve(false)?),
        Command::Ensemble(o) => commands::ensemble(&o.resolve(true)?),
        Command::CheckIdentity(o) => commands::check_identity(&o.resolve(false)?),
        Command::Gradcheck { system, params, points } => {
            if system.is_none() && !params.is_empty() {
                return Err(CliError::config("--param needs --system"));
            }
            commands::gradcheck(system.as_deref(), &parse_params(&params)?, points.max(1))
        }
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return ExitCode::from(if e.use_stderr() { 2 } else { 0 });
        }
    };
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {}", e.message);
            ExitCode::from(e.code)
        }
    }
}

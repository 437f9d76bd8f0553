//! `logei-bo`: verification sweeps, acquisition evaluation, GP fitting and
//! benchmark runs on top of `logei-core`.

pub mod config;
pub mod error;
pub mod format;
pub mod problems;

mod evaluate;
mod fit;
mod optimize;
mod verify;

use std::io::Write;
use std::path::PathBuf;

use clap::{Args, Parser, Subcommand};

pub use error::{exit, CliError};
pub use evaluate::EvaluateArgs;
pub use fit::{FitArgs, FitReport};
pub use optimize::{OptimizeArgs, SUMMARY_HEADER};
pub use verify::{VerifyArgs, VERIFY_HEADER};

#[derive(Debug, Parser)]
#[command(name = "logei-bo", version, about = "Expected-improvement Bayesian optimization toolkit")]
pub struct Cli {
    #[command(flatten)]
    pub global: GlobalArgs,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Args)]
pub struct GlobalArgs {
    /// Seed for every random stream (overrides the config file and LOGEI_BO_SEED)
    #[arg(long, global = true)]
    pub seed: Option<u64>,
    /// Output file (verify, fit) or directory (optimize)
    #[arg(long, short, global = true)]
    pub output: Option<PathBuf>,
    /// Suppress progress messages on stderr
    #[arg(long, short, global = true)]
    pub quiet: bool,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Compare closed-form acquisition values with quadrature and Monte Carlo over a grid
    Verify(VerifyArgs),
    /// Run Bayesian optimization on a built-in problem
    Optimize(OptimizeArgs),
    /// Evaluate one acquisition value
    #[command(name = "evaluate-acq")]
    EvaluateAcq(EvaluateArgs),
    /// Tune and fit a GP to a CSV dataset
    Fit(FitArgs),
}

/// Runs a parsed command. Data goes to `stdout`, progress to `stderr`.
pub fn run(cli: &Cli, stdout: &mut dyn Write, stderr: &mut dyn Write) -> Result<(), CliError> {
    let mut log = |msg: String| {
        if !cli.global.quiet {
            let _ = writeln!(stderr, "{msg}");
        }
    };
    match &cli.command {
        Command::Verify(args) => verify::run(args, &cli.global, stdout, &mut log),
        Command::Optimize(args) => optimize::run(args, &cli.global, &mut log),
        Command::EvaluateAcq(args) => evaluate::run(args, stdout),
        Command::Fit(args) => fit::run(args, &cli.global, stdout, &mut log),
    }
}

/// Parses `args`, runs the command, and returns the process exit code.
pub fn main_with<I, T>(args: I, stdout: &mut dyn Write, stderr: &mut dyn Write) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<std::ffi::OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            use clap::error::ErrorKind;
            let rendered = e.render().to_string();
            return match e.kind() {
                ErrorKind::DisplayHelp | ErrorKind::DisplayVersion => {
                    let _ = write!(stdout, "{rendered}");
                    exit::OK
                }
                _ => {
                    let _ = write!(stderr, "{rendered}");
                    exit::USAGE
                }
            };
        }
    };
    match run(&cli, stdout, stderr) {
        Ok(()) => exit::OK,
        Err(e) => {
            let _ = writeln!(stderr, "error: {e}");
            e.exit_code()
        }
    }
}

pub(crate) fn write_output(path: &std::path::Path, contents: &[u8]) -> Result<(), CliError> {
    std::fs::write(path, contents).map_err(|e| CliError::io(path, e))
}

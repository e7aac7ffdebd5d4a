//! `damctl`: exact metrics, asymptotics, optimal control, simulation and
//! verification sweeps for the threshold dam model, from the command line.
//!
//! Exit codes: 0 on success, 2 for configuration errors, 3 for numeric
//! failures.

use std::ffi::OsString;
use std::io::Write;

use clap::{Parser, Subcommand};

pub mod commands;
pub mod config;
pub mod error;
pub mod output;

pub use commands::CommandOutput;
pub use config::{CommonArgs, OptimizeFlags, RunConfig, Settings, SimulateFlags, SweepFlags, VerifyFlags, PRECISION_ENV};
pub use error::CliError;
pub use output::Format;

#[derive(Debug, Parser)]
#[command(name = "damctl", version, about = "Performance analysis and output-rate control of a large dam")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Exact busy-period metrics, p1, p2 and cost for one level.
    Analyze {
        #[command(flatten)]
        common: CommonArgs,
    },
    /// Recommended output rate for the given costs.
    Optimize {
        #[command(flatten)]
        common: CommonArgs,
        #[command(flatten)]
        flags: OptimizeFlags,
    },
    /// Exact versus large-level approximations over a grid of levels.
    Verify {
        #[command(flatten)]
        common: CommonArgs,
        #[command(flatten)]
        flags: VerifyFlags,
    },
    /// Regenerative simulation with confidence intervals.
    Simulate {
        #[command(flatten)]
        common: CommonArgs,
        #[command(flatten)]
        flags: SimulateFlags,
    },
    /// Limiting cost functionals over a grid of C values.
    Sweep {
        #[command(flatten)]
        common: CommonArgs,
        #[command(flatten)]
        flags: SweepFlags,
    },
}

type Runner<'a> = dyn Fn(&Settings) -> Result<CommandOutput, CliError> + 'a;

/// Runs a parsed command. `env_precision` is the value of `DAMCTL_PRECISION`.
pub fn execute(cli: &Cli, env_precision: Option<String>) -> Result<(CommandOutput, Settings), CliError> {
    let (common, run): (&CommonArgs, Box<Runner>) = match &cli.command {
        Command::Analyze { common } => (common, Box::new(commands::cmd_analyze)),
        Command::Optimize { common, flags } => (common, Box::new(move |s| commands::cmd_optimize(s, flags))),
        Command::Verify { common, flags } => (common, Box::new(move |s| commands::cmd_verify(s, flags))),
        Command::Simulate { common, flags } => (common, Box::new(move |s| commands::cmd_simulate(s, flags))),
        Command::Sweep { common, flags } => (common, Box::new(move |s| commands::cmd_sweep(s, flags))),
    };
    let settings = Settings::new(common.clone(), env_precision)?;
    let output = run(&settings)?;
    Ok((output, settings))
}

/// Parses `args`, runs the command, writes its output and returns the exit code.
pub fn run<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return e.exit_code();
        }
    };
    let result = execute(&cli, std::env::var(PRECISION_ENV).ok()).and_then(|(output, settings)| {
        match settings.out() {
            Some(path) => std::fs::write(&path, &output.body)
                .map_err(|e| CliError::Io(format!("cannot write {}: {e}", path.display())))?,
            None => std::io::stdout()
                .write_all(output.body.as_bytes())
                .map_err(|e| CliError::Io(e.to_string()))?,
        }
        if !output.notes.is_empty() {
            eprint!("{}", output.notes);
        }
        Ok(())
    });
    match result {
        Ok(()) => 0,
        Err(e) => {
            eprintln!("error: {e}");
            e.exit_code()
        }
    }
}

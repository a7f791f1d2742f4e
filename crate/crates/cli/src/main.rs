//! `pulsegaze`: heart rate and blink analysis from the command line.
//!
//! Subcommands:
//!
//! - `hr` - windowed heart rate from an RGB trace or frame manifest.
//! - `blink-train` - fit an eye-state classifier on a labeled dataset.
//! - `blink-run` - classify an eye image sequence and report blink events.
//! - `synth` - generate synthetic traces and blink datasets from a config.
//! - `eval` - run a suite of evaluations and print summary tables.
//!
//! Module map:
//!
//! - [`error`] - process exit codes and error-name formatting.
//! - [`keyval`] - strict `key=value` config file parsing.
//! - [`manifest`] - input manifests describing traces or frame globs.
//! - [`cmd_hr`], [`cmd_blink`], [`cmd_synth`], [`cmd_eval`] - one module
//!   per subcommand.
//!
//! Exit codes: 0 on success, 2 on usage or configuration errors, 3 on data,
//! IO or computation errors. All reports go to stdout; errors go to stderr
//! as a single `error: <Name>: <detail>` line.

mod cmd_blink;
mod cmd_eval;
mod cmd_hr;
mod cmd_synth;
mod error;
mod keyval;
mod manifest;

use clap::{Parser, Subcommand};
use error::CliResult;

#[derive(Parser, Debug)]
#[command(name = "pulsegaze", version, about = "Heart rate and blink analysis")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Estimate heart rate from a trace or frame manifest.
    Hr(cmd_hr::HrArgs),
    /// Train an eye-state classifier on a labeled dataset.
    BlinkTrain(cmd_blink::TrainArgs),
    /// Classify an eye sequence and report blink events.
    BlinkRun(cmd_blink::RunArgs),
    /// Generate synthetic traces or blink datasets.
    Synth(cmd_synth::SynthArgs),
    /// Evaluate a suite of rows and print summary tables.
    Eval(cmd_eval::EvalArgs),
}

fn run() -> CliResult<()> {
    let cli = Cli::try_parse().unwrap_or_else(|e| e.exit());
    match &cli.command {
        Command::Hr(args) => cmd_hr::run(args),
        Command::BlinkTrain(args) => cmd_blink::run_train(args),
        Command::BlinkRun(args) => cmd_blink::run_run(args),
        Command::Synth(args) => cmd_synth::run(args),
        Command::Eval(args) => cmd_eval::run(args),
    }
}

fn main() {
    let outcome = std::panic::catch_unwind(run);
    let code = match outcome {
        Ok(Ok(())) => 0,
        Ok(Err(e)) => {
            eprintln!("error: {e}");
            e.code()
        }
        Err(_) => {
            eprintln!("error: internal failure");
            3
        }
    };
    std::process::exit(code);
}

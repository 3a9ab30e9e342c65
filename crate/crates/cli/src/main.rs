mod args;
mod commands;
mod config;
mod error;

use std::process::ExitCode;

use clap::Parser;

use args::{Cli, Command};
use commands::Context;
use config::ConfigFile;
use error::{CliError, CliResult};

pub const THREADS_ENV: &str = "LRLAB_THREADS";

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return ExitCode::from(if e.use_stderr() { 1 } else { 0 });
        }
    };
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            let mut source = std::error::Error::source(&e);
            while let Some(s) = source {
                eprintln!("  caused by: {s}");
                source = s.source();
            }
            ExitCode::from(e.exit_code())
        }
    }
}

fn run(cli: Cli) -> CliResult<()> {
    let config = match &cli.common.config {
        Some(path) => ConfigFile::load(path)?,
        None => ConfigFile::default(),
    };
    configure_threads(cli.common.threads, &config)?;
    let ctx = Context {
        common: cli.common,
        config,
    };
    match &cli.command {
        Command::Synth(a) => commands::synth(&ctx, a),
        Command::Decompose(a) => commands::decompose(&ctx, a),
        Command::Sweep(a) => commands::sweep(&ctx, a),
        Command::Recognize(a) => commands::recognize(&ctx, a),
        Command::Compare(a) => commands::compare(&ctx, a),
        Command::Metrics(a) => commands::metrics(&ctx, a),
    }
}

/// Flag, then config file, then environment; unset leaves rayon's default.
fn configure_threads(flag: Option<usize>, config: &ConfigFile) -> CliResult<()> {
    let threads = match config.pick(flag, "threads")? {
        Some(n) => Some(n),
        None => match std::env::var(THREADS_ENV) {
            Ok(v) => Some(
                v.trim()
                    .parse::<usize>()
                    .map_err(|_| CliError::usage(format!("{THREADS_ENV}='{v}' is not a thread count")))?,
            ),
            Err(_) => None,
        },
    };
    match threads {
        Some(0) => Err(CliError::usage("thread count must be at least 1")),
        Some(n) => rayon::ThreadPoolBuilder::new()
            .num_threads(n)
            .build_global()
            .map_err(|e| CliError::usage(format!("cannot start {n} worker threads: {e}"))),
        None => Ok(()),
    }
}

mod args;
mod cmd;
mod config;
mod exit;
mod extractor;
mod output;
mod pipeline;

use std::process::ExitCode;

use clap::Parser;

use args::{Cli, Command};
use config::JobConfig;
use exit::Status;

fn run(cli: Cli) -> anyhow::Result<Status> {
    let cfg = match &cli.config {
        Some(path) => JobConfig::load(path)?,
        None => JobConfig::default(),
    };
    match cli.command {
        Command::Warp(a) => cmd::warp::run(a, &cfg),
        Command::Chain(a) => cmd::chain::run(a, &cfg),
        Command::Metrics(a) => cmd::metrics::run(a, &cfg),
        Command::ExportTargets(a) => cmd::targets::run(a, &cfg),
        Command::Aggregate(a) => cmd::aggregate::run(a, &cfg),
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let level = match cli.verbose {
        0 => "warn",
        1 => "info",
        _ => "debug",
    };
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or(level))
        .format_timestamp(None)
        .init();
    match run(cli) {
        Ok(status) => status.into(),
        Err(e) => {
            eprintln!("error: {e:#}");
            Status::Failure.into()
        }
    }
}

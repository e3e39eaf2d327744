// negated float comparisons are used on purpose so that NaN fails validation
#![allow(clippy::neg_cmp_op_on_partial_ord)]

mod commands;
mod config;
mod output;

use std::io::IsTerminal;
use std::process::ExitCode;

use clap::Parser;

use crate::commands::{run, RunConfig};
use crate::config::{Cli, CliResult, Failure};

fn use_color() -> bool {
    std::env::var_os("NO_COLOR").is_none_or(|v| v.is_empty()) && std::io::stderr().is_terminal()
}

fn report_error(f: &Failure) {
    let label = if use_color() { "\x1b[31merror\x1b[0m" } else { "error" };
    eprintln!("{label}: {}", f.message());
}

fn execute(cli: &Cli) -> CliResult<()> {
    let cfg = RunConfig::resolve(&cli.common)?;
    if let Some(n) = cfg.threads {
        rayon::ThreadPoolBuilder::new()
            .num_threads(n)
            .build_global()
            .map_err(|e| Failure::Check(format!("cannot start worker pool: {e}")))?;
    }
    let outcome = run(&cli.command, &cfg)?;
    let out = match &cli.common.out {
        Some(p) => Some(p.clone()),
        None => cfg.file.raw("out").map(Into::into),
    };
    outcome.report.emit(cfg.format, out.as_deref())?;
    match outcome.failure {
        Some(msg) => Err(Failure::Check(format!("{} failed: {msg}", cli.command.name()))),
        None => Ok(()),
    }
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let cli = Cli::parse();
    match execute(&cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(f) => {
            report_error(&f);
            ExitCode::from(f.exit_code() as u8)
        }
    }
}

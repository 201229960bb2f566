use std::io::Write;
use std::process::ExitCode;

use clap::Parser;
use posthoc_cli::args::Cli;
use posthoc_cli::error::CliError;
use posthoc_cli::{execute, output_args, render};

fn run(cli: &Cli, argv: &[String]) -> Result<u8, CliError> {
    let execution = execute(cli, argv)?;
    let sinks = output_args(cli);
    match &sinks.out {
        Some(path) => std::fs::write(path, &execution.output)?,
        None => std::io::stdout().write_all(execution.output.as_bytes())?,
    }
    for line in &execution.diagnostics {
        eprintln!("{line}");
    }
    if let Some(path) = &sinks.manifest {
        std::fs::write(path, render::json(&execution.manifest)?)?;
    }
    Ok(execution.exit_code)
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let argv: Vec<String> = std::env::args().collect();
    let cli = Cli::parse();
    match run(&cli, &argv) {
        Ok(code) => ExitCode::from(code),
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code())
        }
    }
}

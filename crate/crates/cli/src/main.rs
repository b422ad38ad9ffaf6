mod args;
mod commands;
mod output;

use std::process::ExitCode;

use clap::Parser;
use serde_json::json;

use crate::args::Cli;

#[tokio::main]
async fn main() -> ExitCode {
    tracing_subscriber::fmt()
        .with_writer(std::io::stderr)
        .with_env_filter(
            tracing_subscriber::EnvFilter::try_from_default_env().unwrap_or_else(|_| "warn".into()),
        )
        .init();
    let cli = Cli::parse();
    let name = commands::name(&cli.command);
    match commands::run(cli).await {
        Ok(code) => code,
        Err(e) => {
            eprintln!("{}", json!({"command": name, "ok": false, "error": format!("{e:#}")}));
            ExitCode::FAILURE
        }
    }
}

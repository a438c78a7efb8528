//! `darkseg` command-line tool.

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};

mod cmd;
mod files;

#[derive(Parser)]
#[command(name = "darkseg", version, about = "Uncertainty-aware evaluation and guided refinement for dark-image segmentation")]
struct Cli {
    /// TOML configuration; defaults to $DARKSEG_CONFIG when set.
    #[arg(long, global = true, value_name = "FILE")]
    config: Option<PathBuf>,

    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    Evaluate(cmd::evaluate::Args),
    Refine(cmd::refine::Args),
    Match(cmd::matching::Args),
    Curriculum(cmd::curriculum::Args),
    Consistency(cmd::consistency::Args),
    Validate(cmd::validate::Args),
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = darkseg::ToolConfig::load(cli.config.as_deref())
        .map_err(anyhow::Error::from)
        .and_then(|config| match cli.command {
            Command::Evaluate(a) => cmd::evaluate::run(a, &config),
            Command::Refine(a) => cmd::refine::run(a, &config),
            Command::Match(a) => cmd::matching::run(a, &config),
            Command::Curriculum(a) => cmd::curriculum::run(a),
            Command::Consistency(a) => cmd::consistency::run(a, &config),
            Command::Validate(a) => cmd::validate::run(a, &config),
        });
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e:#}");
            exit_code(&e)
        }
    }
}

/// 2 for invalid input, 1 for runtime failures.
fn exit_code(e: &anyhow::Error) -> ExitCode {
    let validation = e
        .chain()
        .find_map(|c| c.downcast_ref::<darkseg::Error>())
        .is_some_and(darkseg::Error::is_validation)
        || e.chain().any(|c| c.is::<cmd::ValidationFailed>());
    ExitCode::from(if validation { 2 } else { 1 })
}

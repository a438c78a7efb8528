use std::path::PathBuf;

use anyhow::Result;
use darkseg::curriculum::{plan, run_step, CurriculumConfig, StepContext};

/// Run the day-to-night adaptation schedule described by a plan file.
#[derive(clap::Args)]
pub struct Args {
    /// Curriculum plan (TOML).
    plan: PathBuf,
    /// Validate inputs and print the planned steps without running anything.
    #[arg(long)]
    dry_run: bool,
}

pub fn run(args: Args) -> Result<()> {
    let cfg = CurriculumConfig::read(&args.plan)?;
    let steps = plan(&cfg.domains, &cfg.step)?;
    let ctx = StepContext::from_config(&cfg)?;
    let mut reports = Vec::with_capacity(steps.len());
    for step in &steps {
        eprintln!(
            "step {}: {} -> {}{}",
            step.step,
            step.source.name,
            step.target.name,
            if step.guided() { " (guided)" } else { "" }
        );
        reports.push(run_step(step, &ctx, args.dry_run)?);
    }
    println!("{}", serde_json::to_string_pretty(&reports)?);
    Ok(())
}

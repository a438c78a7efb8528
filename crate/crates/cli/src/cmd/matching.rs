use std::path::PathBuf;

use anyhow::{Context, Result};
use darkseg::correspondence::{match_nearest, smooth_fixes, GpsFix};
use darkseg::io::{correspondences_to_csv, Manifest};
use darkseg::ToolConfig;

/// Assign each query image to the nearest daytime image by GPS position.
#[derive(clap::Args)]
pub struct Args {
    /// Manifest of the dark images to match.
    #[arg(long)]
    queries: PathBuf,
    /// Manifest of the daytime reference images.
    #[arg(long)]
    day: PathBuf,
    /// Acceptance radius in metres.
    #[arg(long)]
    max_dist: Option<f64>,
    /// Median window applied to each GPS track before matching.
    #[arg(long)]
    smooth_window: Option<usize>,
    /// CSV output; standard output when omitted.
    #[arg(long)]
    out: Option<PathBuf>,
}

fn fixes(m: &Manifest, window: usize) -> Result<Vec<(String, GpsFix)>> {
    let fixes = m.gps_fixes()?;
    let track: Vec<GpsFix> = fixes.iter().map(|f| f.1).collect();
    let smooth = smooth_fixes(&track, window);
    Ok(fixes.into_iter().zip(smooth).map(|((id, _), f)| (id, f)).collect())
}

pub fn run(args: Args, config: &ToolConfig) -> Result<()> {
    let max_dist = args.max_dist.unwrap_or(config.matching.max_dist_m);
    let window = args.smooth_window.unwrap_or(config.matching.smooth_window);
    let queries = Manifest::read(&args.queries)?;
    let day = Manifest::read(&args.day)?;
    let table = match_nearest(&fixes(&queries, window)?, &fixes(&day, window)?, max_dist)?;
    let csv = correspondences_to_csv(&table);
    match &args.out {
        Some(p) => std::fs::write(p, csv).with_context(|| format!("write {}", p.display()))?,
        None => print!("{csv}"),
    }
    eprintln!(
        "{} queries, {} matched within {max_dist} m, {} unmatched",
        table.entries.len(),
        table.entries.len() - table.unmatched_count(),
        table.unmatched_count()
    );
    Ok(())
}

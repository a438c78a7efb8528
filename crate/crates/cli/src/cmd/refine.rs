use std::path::PathBuf;

use anyhow::Result;
use darkseg::io::{read_rgb_image, read_soft_tensor, write_label_png, write_soft_tensor};
use darkseg::{refine_guided, ToolConfig};

/// Refine a dark-image prediction with the prediction of the matching daytime image.
#[derive(clap::Args)]
pub struct Args {
    /// Soft prediction of the dark image.
    #[arg(long)]
    dark_soft: PathBuf,
    /// The dark camera frame (PNG or JPEG).
    #[arg(long)]
    dark_image: PathBuf,
    /// Soft prediction of the corresponding daytime image.
    #[arg(long)]
    day_soft: PathBuf,
    /// Refined pseudo-label PNG.
    #[arg(long)]
    out_labels: PathBuf,
    /// Refined soft prediction.
    #[arg(long)]
    out_soft: Option<PathBuf>,
    #[arg(long)]
    sigma_s: Option<f64>,
    #[arg(long)]
    sigma_r: Option<f64>,
    /// Window half-width in multiples of sigma_s.
    #[arg(long)]
    truncation: Option<f64>,
    /// Filter at 1/N resolution; 1 filters at full resolution.
    #[arg(long, value_name = "N")]
    downsample: Option<usize>,
    #[arg(long)]
    alpha_l: Option<f64>,
    #[arg(long)]
    alpha_h: Option<f64>,
    #[arg(long)]
    eta: Option<f64>,
}

pub fn run(args: Args, config: &ToolConfig) -> Result<()> {
    let classes = config.class_set()?;
    let mut bilateral = config.bilateral;
    bilateral.sigma_s = args.sigma_s.unwrap_or(bilateral.sigma_s);
    bilateral.sigma_r = args.sigma_r.unwrap_or(bilateral.sigma_r);
    bilateral.truncation = args.truncation.unwrap_or(bilateral.truncation);
    bilateral.downsample = args.downsample.or(bilateral.downsample);
    let mut fusion = config.fusion;
    fusion.alpha_l = args.alpha_l.unwrap_or(fusion.alpha_l);
    fusion.alpha_h = args.alpha_h.unwrap_or(fusion.alpha_h);
    fusion.eta = args.eta.unwrap_or(fusion.eta);

    let mut dark = read_soft_tensor(&args.dark_soft)?;
    let mut day = read_soft_tensor(&args.day_soft)?;
    dark.renormalize();
    day.renormalize();
    for (what, s) in [("dark", &dark), ("day", &day)] {
        if s.channels() != classes.len() {
            return Err(darkseg::Error::InvalidParameter(format!(
                "{what} prediction has {} channels, class set has {}",
                s.channels(),
                classes.len()
            ))
            .into());
        }
    }
    let image = read_rgb_image(&args.dark_image)?;
    let refined = refine_guided(&dark, &image, &day, &classes, &bilateral, &fusion)?;
    write_label_png(&args.out_labels, &refined.labels)?;
    if let Some(p) = &args.out_soft {
        write_soft_tensor(p, &refined.soft)?;
    }
    let low = refined
        .alpha
        .data()
        .iter()
        .filter(|&&a| f64::from(a) < fusion.alpha_h)
        .count();
    println!(
        "refined {}x{} pixels; reduced guidance on {low} pixels (downsample factor {})",
        refined.labels.width(),
        refined.labels.height(),
        bilateral.downsample_for(refined.labels.width(), refined.labels.height())
    );
    Ok(())
}

use std::path::{Path, PathBuf};

use anyhow::{bail, Context, Result};
use darkseg::io::{curve_to_csv, curve_to_svg, fmt_g6, read_label_png, read_mask_png, read_soft_tensor};
use darkseg::metrics::{exact_theta_grid, uniform_theta_grid, ScoredPrediction, SweepAccumulator};
use darkseg::{ClassSet, ToolConfig, UiouCurve};
use rayon::prelude::*;

use crate::files::{counterparts, AnnotationDir};

/// Score predictions against ground truth with invalid masks over a threshold sweep.
///
/// Files pair by stem: `<gt>/<id>.png`, `<masks>/<id>.png` and either `<pred>/<id>.png`
/// (hard labels, 254 = invalid) or `<soft>/<id>.sftp`.
#[derive(clap::Args)]
pub struct Args {
    /// Ground-truth label PNGs.
    #[arg(long)]
    gt: PathBuf,
    /// Invalid-mask PNGs.
    #[arg(long)]
    masks: PathBuf,
    /// Hard prediction PNGs.
    #[arg(long, conflicts_with = "soft", required_unless_present = "soft")]
    pred: Option<PathBuf>,
    /// Soft prediction tensors.
    #[arg(long)]
    soft: Option<PathBuf>,
    /// Number of uniform thresholds from 1/C to 1, `exact` for every distinct confidence,
    /// or a comma-separated list. Hard predictions default to the single threshold 1/C.
    #[arg(long, value_name = "N|exact|LIST")]
    theta_grid: Option<String>,
    /// Write the curve as CSV.
    #[arg(long, value_name = "FILE")]
    curve_out: Option<PathBuf>,
    /// Write the mean UIoU curve as SVG.
    #[arg(long, value_name = "FILE")]
    plot_out: Option<PathBuf>,
}

enum Grid {
    Uniform(usize),
    Exact,
    List(Vec<f32>),
}

fn parse_grid(spec: &str) -> Result<Grid> {
    let spec = spec.trim();
    if spec.eq_ignore_ascii_case("exact") {
        return Ok(Grid::Exact);
    }
    if !spec.contains(',') && !spec.contains('.') {
        if let Ok(n) = spec.parse::<usize>() {
            return Ok(Grid::Uniform(n));
        }
    }
    let values = spec
        .split(',')
        .map(|v| v.trim().parse::<f32>().with_context(|| format!("bad threshold {v:?}")))
        .collect::<Result<Vec<_>>>()
        .map_err(|e| darkseg::Error::InvalidParameter(format!("{e:#}")))?;
    Ok(Grid::List(values))
}

enum Source {
    Hard(Vec<PathBuf>),
    Soft(Vec<PathBuf>),
}

impl Source {
    fn load(&self, i: usize, classes: &ClassSet) -> Result<ScoredPrediction<f32>> {
        match self {
            Source::Hard(p) => {
                let labels = read_label_png(&p[i])?;
                labels
                    .check_prediction(classes)
                    .with_context(|| p[i].display().to_string())?;
                Ok(ScoredPrediction::from_hard(labels, classes.len()))
            }
            Source::Soft(p) => {
                let mut soft = read_soft_tensor(&p[i])?;
                soft.renormalize();
                Ok(ScoredPrediction::from_soft(&soft))
            }
        }
    }
}

fn load_truth(ann: &AnnotationDir, i: usize) -> Result<(darkseg::LabelMap, darkseg::InvalidMask)> {
    let gt = read_label_png(&ann.labels[i])?;
    let mask = read_mask_png(&ann.masks[i])?;
    Ok((gt, mask))
}

pub fn run(args: Args, config: &ToolConfig) -> Result<()> {
    let classes = config.class_set()?;
    let ann = AnnotationDir::from_dirs(&args.gt, &args.masks)?;
    let source = match (&args.pred, &args.soft) {
        (Some(dir), None) => Source::Hard(counterparts(&ann.stems, dir, "png")?),
        (None, Some(dir)) => Source::Soft(counterparts(&ann.stems, dir, "sftp")?),
        _ => bail!("give exactly one of --pred and --soft"),
    };
    let c = classes.len();
    let spec = match (&args.theta_grid, &source) {
        (Some(s), _) => parse_grid(s)?,
        (None, Source::Hard(_)) => Grid::Uniform(1),
        (None, Source::Soft(_)) if config.evaluate.exact_grid => Grid::Exact,
        (None, Source::Soft(_)) => Grid::Uniform(config.evaluate.grid_points),
    };
    let n = ann.stems.len();
    let grid: Vec<f32> = match spec {
        Grid::Uniform(k) => uniform_theta_grid(c, k)?,
        Grid::List(mut v) => {
            v.sort_by(f32::total_cmp);
            v.dedup();
            v
        }
        Grid::Exact => {
            // first pass: distinct confidences per image, merged
            let per_image = (0..n)
                .into_par_iter()
                .map(|i| Ok(exact_theta_grid(c, [&source.load(i, &classes)?])))
                .collect::<Result<Vec<_>>>()?;
            let mut all: Vec<f32> = per_image.into_iter().flatten().collect();
            all.sort_by(f32::total_cmp);
            all.dedup();
            all
        }
    };

    let empty = SweepAccumulator::new(grid, &classes)?;
    let acc = (0..n)
        .into_par_iter()
        .map(|i| -> Result<_> {
            let (gt, mask) = load_truth(&ann, i)?;
            let scores = source.load(i, &classes)?;
            let mut a = empty.clone();
            a.add(&scores, &gt, &mask)
                .with_context(|| format!("image {}", ann.stems[i]))?;
            Ok(a)
        })
        .try_reduce(
            || empty.clone(),
            |mut a, b| {
                a.merge(&b);
                Ok(a)
            },
        )?;
    let curve = acc.finish()?;

    if let Some(p) = &args.curve_out {
        write(p, &curve_to_csv(&curve))?;
    }
    if let Some(p) = &args.plot_out {
        write(p, &curve_to_svg(&curve, "Mean UIoU over confidence threshold"))?;
    }
    print_summary(&curve, n);
    Ok(())
}

fn write(path: &Path, text: &str) -> Result<()> {
    std::fs::write(path, text).with_context(|| format!("write {}", path.display()))
}

fn print_summary(curve: &UiouCurve, images: usize) {
    let first = &curve.points[0];
    println!("images: {images}");
    println!("thresholds: {}", curve.points.len());
    println!("mean UIoU at theta={}: {:.2}", fmt_g6(first.theta), 100.0 * first.mean);
    println!(
        "max mean UIoU: {:.2} at theta={}",
        100.0 * curve.best.mean,
        fmt_g6(curve.best.theta)
    );
    let best = &curve.points[curve.best.index];
    for (name, v) in curve.class_names.iter().zip(&best.per_class) {
        match v {
            Some(v) => println!("  {name:<16} {:.2}", 100.0 * v),
            None => println!("  {name:<16} n/a"),
        }
    }
}

use std::path::PathBuf;

use anyhow::{Context, Result};
use darkseg::io::{read_label_png, read_mask_png};
use darkseg::{annotation_consistency, ConsistencyCounts, ToolConfig};
use rayon::prelude::*;

use super::percent;
use crate::files::AnnotationDir;

/// Agreement between two annotations of the same images.
///
/// Each directory holds `labels/<id>.png` and `masks/<id>.png`; both must cover the same ids.
#[derive(clap::Args)]
pub struct Args {
    first: PathBuf,
    second: PathBuf,
}

pub fn run(args: Args, config: &ToolConfig) -> Result<()> {
    let classes = config.class_set()?;
    let a = AnnotationDir::open(&args.first)?;
    let b = AnnotationDir::open(&args.second)?;
    if a.stems != b.stems {
        let only_a = a.stems.iter().filter(|s| !b.stems.contains(s)).count();
        let only_b = b.stems.iter().filter(|s| !a.stems.contains(s)).count();
        return Err(darkseg::Error::InvalidParameter(format!(
            "annotation sets differ: {only_a} image(s) only in the first, {only_b} only in the second"
        ))
        .into());
    }
    let total = (0..a.stems.len())
        .into_par_iter()
        .map(|i| -> Result<ConsistencyCounts> {
            let la = read_label_png(&a.labels[i])?;
            let ma = read_mask_png(&a.masks[i])?;
            let lb = read_label_png(&b.labels[i])?;
            let mb = read_mask_png(&b.masks[i])?;
            annotation_consistency((&la, &ma), (&lb, &mb), &classes).with_context(|| a.stems[i].clone())
        })
        .try_reduce(ConsistencyCounts::default, |mut x, y| {
            x.merge(&y);
            Ok(x)
        })?;
    println!("images: {}", a.stems.len());
    println!(
        "semantic agreement: {} of {} jointly labeled pixels",
        percent(total.semantic_percent()),
        total.jointly_labeled
    );
    println!("invalid-mask agreement: {}", percent(total.mask_percent()));
    Ok(())
}

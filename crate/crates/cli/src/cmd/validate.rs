use std::path::{Path, PathBuf};

use anyhow::Result;
use darkseg::io::{read_label_png, read_mask_png, read_soft_tensor, Manifest};
use darkseg::{validate_pair, ClassSet, ToolConfig};

use super::ValidationFailed;
use crate::files::{by_stem, AnnotationDir};

/// Check a manifest (`.jsonl`) or a raster directory.
///
/// A directory with `labels/` and `masks/` is checked as annotation pairs; any other
/// directory has its `.png` files checked as label rasters and `.sftp` files as soft
/// predictions.
#[derive(clap::Args)]
pub struct Args {
    path: PathBuf,
}

pub fn run(args: Args, config: &ToolConfig) -> Result<()> {
    let classes = config.class_set()?;
    let p = &args.path;
    let failures = if p.is_file() {
        validate_manifest(p)?
    } else if p.join("labels").is_dir() && p.join("masks").is_dir() {
        validate_annotations(p, &classes)?
    } else {
        validate_rasters(p, &classes)?
    };
    if failures > 0 {
        return Err(ValidationFailed(failures).into());
    }
    println!("ok");
    Ok(())
}

fn report(name: &str, r: Result<String, darkseg::Error>, failures: &mut usize) {
    match r {
        Ok(detail) => println!("ok      {name} {detail}"),
        Err(e) => {
            *failures += 1;
            println!("invalid {name}: {e}");
        }
    }
}

fn validate_manifest(p: &Path) -> Result<usize> {
    let mut failures = 0;
    match Manifest::read(p) {
        Ok(m) => {
            let missing = m.missing_files();
            for f in &missing {
                println!("missing {}", f.display());
            }
            failures += missing.len();
            println!("{} records", m.records.len());
        }
        Err(e) => report(&p.display().to_string(), Err(e), &mut failures),
    }
    Ok(failures)
}

fn validate_annotations(root: &Path, classes: &ClassSet) -> Result<usize> {
    let ann = AnnotationDir::open(root)?;
    let mut failures = 0;
    for i in 0..ann.stems.len() {
        let r = read_label_png(&ann.labels[i]).and_then(|l| {
            let m = read_mask_png(&ann.masks[i])?;
            let rep = validate_pair(&l, &m, classes)?;
            Ok(format!(
                "{}x{}, {:.1}% of labeled pixels invalid",
                rep.width,
                rep.height,
                100.0 * rep.invalid_fraction
            ))
        });
        report(&ann.stems[i], r, &mut failures);
    }
    Ok(failures)
}

fn validate_rasters(dir: &Path, classes: &ClassSet) -> Result<usize> {
    let mut failures = 0;
    let pngs = by_stem(dir, "png")?;
    let softs = by_stem(dir, "sftp")?;
    if pngs.is_empty() && softs.is_empty() {
        return Err(darkseg::Error::InvalidParameter(format!("no .png or .sftp files in {}", dir.display())).into());
    }
    for (stem, path) in &pngs {
        let r = read_label_png(path).and_then(|l| {
            l.check_ground_truth(classes)?;
            Ok(format!("{}x{}", l.width(), l.height()))
        });
        report(&format!("{stem}.png"), r, &mut failures);
    }
    for (stem, path) in &softs {
        let r = read_soft_tensor(path).and_then(|s| {
            if s.channels() != classes.len() {
                return Err(darkseg::Error::InvalidParameter(format!(
                    "{} channels, class set has {}",
                    s.channels(),
                    classes.len()
                )));
            }
            Ok(format!("{}x{}x{}", s.width(), s.height(), s.channels()))
        });
        report(&format!("{stem}.sftp"), r, &mut failures);
    }
    Ok(failures)
}

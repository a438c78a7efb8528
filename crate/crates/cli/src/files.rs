//! Pairing of per-image files across directories by file stem.

use std::collections::BTreeMap;
use std::path::{Path, PathBuf};

use anyhow::{Context, Result};
use darkseg::Error;

/// Files in `dir` with extension `ext`, keyed by stem, in sorted order.
pub fn by_stem(dir: &Path, ext: &str) -> Result<BTreeMap<String, PathBuf>> {
    let mut out = BTreeMap::new();
    let entries = std::fs::read_dir(dir).with_context(|| format!("read directory {}", dir.display()))?;
    for entry in entries {
        let path = entry?.path();
        if !path.is_file() || path.extension().and_then(|e| e.to_str()) != Some(ext) {
            continue;
        }
        if let Some(stem) = path.file_stem().and_then(|s| s.to_str()) {
            out.insert(stem.to_string(), path);
        }
    }
    Ok(out)
}

/// For every stem in `keys`, the file `<dir>/<stem>.<ext>`, which must exist.
pub fn counterparts<'a>(keys: impl IntoIterator<Item = &'a String>, dir: &Path, ext: &str) -> Result<Vec<PathBuf>> {
    keys.into_iter()
        .map(|k| {
            let p = dir.join(format!("{k}.{ext}"));
            if p.is_file() {
                Ok(p)
            } else {
                Err(Error::MissingFile(p).into())
            }
        })
        .collect()
}

/// Ground-truth labels and invalid masks of an annotation directory (`labels/`, `masks/`).
pub struct AnnotationDir {
    pub stems: Vec<String>,
    pub labels: Vec<PathBuf>,
    pub masks: Vec<PathBuf>,
}

impl AnnotationDir {
    pub fn open(root: &Path) -> Result<Self> {
        Self::from_dirs(&root.join("labels"), &root.join("masks"))
    }

    pub fn from_dirs(labels: &Path, masks: &Path) -> Result<Self> {
        let found = by_stem(labels, "png")?;
        if found.is_empty() {
            return Err(Error::InvalidParameter(format!("no .png label files in {}", labels.display())).into());
        }
        let masks = counterparts(found.keys(), masks, "png")?;
        let (stems, labels) = found.into_iter().unzip();
        Ok(Self { stems, labels, masks })
    }
}

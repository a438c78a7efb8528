//! JSON-lines dataset manifests. Paths inside a manifest are relative to its directory.

use std::collections::HashSet;
use std::fs;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::correspondence::GpsFix;
use crate::error::{Error, Result};

/// Provenance of a training record.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Origin {
    LabeledSynthetic,
    PseudoReal,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ManifestRecord {
    pub id: String,
    pub image_path: PathBuf,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub label_path: Option<PathBuf>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub invalid_mask_path: Option<PathBuf>,
    pub domain: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub gps: Option<GpsFix>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub loss_weight: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub origin: Option<Origin>,
}

impl ManifestRecord {
    pub fn new(id: impl Into<String>, image_path: impl Into<PathBuf>, domain: impl Into<String>) -> Self {
        Self {
            id: id.into(),
            image_path: image_path.into(),
            label_path: None,
            invalid_mask_path: None,
            domain: domain.into(),
            gps: None,
            loss_weight: None,
            origin: None,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Manifest {
    /// Directory that relative record paths are resolved against.
    pub base_dir: PathBuf,
    pub records: Vec<ManifestRecord>,
}

impl Manifest {
    pub fn new(base_dir: impl Into<PathBuf>, records: Vec<ManifestRecord>) -> Result<Self> {
        let m = Self {
            base_dir: base_dir.into(),
            records,
        };
        m.check_unique_ids(Path::new("<memory>"))?;
        Ok(m)
    }

    pub fn read(path: &Path) -> Result<Self> {
        let text = fs::read_to_string(path).map_err(|e| Error::io(format!("read {}", path.display()), e))?;
        let mut records = Vec::new();
        for (i, line) in text.lines().enumerate() {
            if line.trim().is_empty() {
                continue;
            }
            let rec: ManifestRecord = serde_json::from_str(line).map_err(|e| Error::Manifest {
                path: path.to_path_buf(),
                line: i + 1,
                message: e.to_string(),
            })?;
            if let Some(g) = &rec.gps {
                g.validate().map_err(|e| Error::Manifest {
                    path: path.to_path_buf(),
                    line: i + 1,
                    message: e.to_string(),
                })?;
            }
            records.push(rec);
        }
        let m = Self {
            base_dir: path.parent().map(Path::to_path_buf).unwrap_or_default(),
            records,
        };
        m.check_unique_ids(path)?;
        Ok(m)
    }

    fn check_unique_ids(&self, path: &Path) -> Result<()> {
        let mut seen = HashSet::new();
        for (i, r) in self.records.iter().enumerate() {
            if !seen.insert(r.id.as_str()) {
                return Err(Error::Manifest {
                    path: path.to_path_buf(),
                    line: i + 1,
                    message: format!("duplicate id {:?}", r.id),
                });
            }
        }
        Ok(())
    }

    /// One compact JSON object per line, in record order.
    pub fn to_jsonl(&self) -> String {
        let mut out = String::new();
        for r in &self.records {
            out.push_str(&serde_json::to_string(r).expect("records serialize"));
            out.push('\n');
        }
        out
    }

    pub fn write(&self, path: &Path) -> Result<()> {
        fs::write(path, self.to_jsonl()).map_err(|e| Error::io(format!("write {}", path.display()), e))
    }

    pub fn resolve(&self, p: &Path) -> PathBuf {
        if p.is_absolute() {
            p.to_path_buf()
        } else {
            self.base_dir.join(p)
        }
    }

    /// Referenced files that do not exist, in record order.
    pub fn missing_files(&self) -> Vec<PathBuf> {
        let mut missing = Vec::new();
        for r in &self.records {
            let paths = [Some(&r.image_path), r.label_path.as_ref(), r.invalid_mask_path.as_ref()];
            for p in paths.into_iter().flatten() {
                let full = self.resolve(p);
                if !full.exists() {
                    missing.push(full);
                }
            }
        }
        missing
    }

    pub fn get(&self, id: &str) -> Option<&ManifestRecord> {
        self.records.iter().find(|r| r.id == id)
    }

    /// `(id, fix)` for every record with GPS; errors if any record lacks it.
    pub fn gps_fixes(&self) -> Result<Vec<(String, GpsFix)>> {
        self.records
            .iter()
            .map(|r| {
                r.gps
                    .map(|g| (r.id.clone(), g))
                    .ok_or_else(|| Error::InvalidParameter(format!("record {:?} has no GPS fix", r.id)))
            })
            .collect()
    }
}

/// Expresses `target` relative to `base` when it lies below it, otherwise returns it unchanged.
pub fn relative_to(target: &Path, base: &Path) -> PathBuf {
    target
        .strip_prefix(base)
        .map(Path::to_path_buf)
        .unwrap_or_else(|_| target.to_path_buf())
}

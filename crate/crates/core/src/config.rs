//! TOML tool configuration shared by the CLI subcommands.
//!
//! ```toml
//! [classes]            # optional, defaults to the 19 Cityscapes classes
//! names = ["road", "car"]
//! dynamic = ["car"]
//!
//! [bilateral]
//! sigma_s = 80.0
//!
//! [fusion]
//! alpha_l = 0.3
//!
//! [evaluate]
//! grid_points = 101
//!
//! [matching]
//! max_dist_m = 50.0
//! ```

use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::correspondence::DEFAULT_MAX_DIST_M;
use crate::error::{Error, Result};
use crate::metrics::DEFAULT_GRID_POINTS;
use crate::refine::{BilateralParams, FusionParams};
use crate::types::{ClassSet, ClassSetConfig};

/// Names a config file used when no path is given explicitly.
pub const CONFIG_ENV: &str = "DARKSEG_CONFIG";

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct EvaluateConfig {
    pub grid_points: usize,
    /// Sweep every distinct confidence instead of a uniform grid.
    pub exact_grid: bool,
}

impl Default for EvaluateConfig {
    fn default() -> Self {
        Self {
            grid_points: DEFAULT_GRID_POINTS,
            exact_grid: false,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct MatchingConfig {
    pub max_dist_m: f64,
    /// Median window over the GPS track before matching; 0 or 1 disables smoothing.
    pub smooth_window: usize,
}

impl Default for MatchingConfig {
    fn default() -> Self {
        Self {
            max_dist_m: DEFAULT_MAX_DIST_M,
            smooth_window: 0,
        }
    }
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct ToolConfig {
    #[serde(skip_serializing_if = "Option::is_none")]
    pub classes: Option<ClassSetConfig>,
    pub bilateral: BilateralParams,
    pub fusion: FusionParams,
    pub evaluate: EvaluateConfig,
    pub matching: MatchingConfig,
}

impl ToolConfig {
    pub fn parse(text: &str, path: &Path) -> Result<Self> {
        let cfg: ToolConfig = toml::from_str(text).map_err(|e| Error::format(path, e.to_string()))?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn read(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(format!("read {}", path.display()), e))?;
        Self::parse(&text, path)
    }

    /// Reads `explicit` if given, else the file named by `DARKSEG_CONFIG`, else defaults.
    pub fn load(explicit: Option<&Path>) -> Result<Self> {
        match Self::resolve_path(explicit) {
            Some(p) => Self::read(&p),
            None => Ok(Self::default()),
        }
    }

    pub fn resolve_path(explicit: Option<&Path>) -> Option<PathBuf> {
        explicit
            .map(Path::to_path_buf)
            .or_else(|| std::env::var_os(CONFIG_ENV).filter(|v| !v.is_empty()).map(PathBuf::from))
    }

    pub fn validate(&self) -> Result<()> {
        self.class_set()?;
        self.bilateral.validate()?;
        self.fusion.validate()?;
        if self.evaluate.grid_points < 1 {
            return Err(Error::InvalidParameter("evaluate.grid_points must be >= 1".into()));
        }
        if !(self.matching.max_dist_m >= 0.0) {
            return Err(Error::InvalidParameter("matching.max_dist_m must be >= 0".into()));
        }
        Ok(())
    }

    pub fn class_set(&self) -> Result<ClassSet> {
        match &self.classes {
            Some(c) => ClassSet::from_config(c),
            None => Ok(ClassSet::cityscapes()),
        }
    }
}

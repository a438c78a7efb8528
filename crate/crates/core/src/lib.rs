//! Uncertainty-aware evaluation and guided refinement of semantic segmentation for
//! dark images.
//!
//! - [`metrics`]: UIoU with invalid regions, threshold sweeps, and a checker for when
//!   invalidating uncertain pixels must raise the score above plain IoU.
//! - [`refine`]: cross bilateral alignment of a daytime soft prediction to a dark image,
//!   followed by confidence-adaptive fusion.
//! - [`correspondence`]: GPS nearest-neighbour matching of dark images to daytime ones.
//! - [`curriculum`]: the day-to-night adaptation schedule, with training and inference
//!   delegated to external commands.
//! - [`io`]: PNG rasters, soft-prediction tensors, JSON-lines manifests, CSV and SVG reports.
//!
//! Numeric code is generic over [`Scalar`] (`f32` or `f64`); the aliases below name the
//! common instantiations.

pub mod color;
pub mod config;
pub mod consistency;
pub mod correspondence;
pub mod curriculum;
mod error;
pub mod io;
pub mod metrics;
pub mod refine;
mod scalar;
pub mod types;

pub use color::{rgb_to_cielab, srgb_to_lab, LabImage, RgbImage};
pub use config::ToolConfig;
pub use consistency::{annotation_consistency, ConsistencyCounts};
pub use correspondence::{haversine, match_nearest, Correspondence, CorrespondenceTable, GpsFix};
pub use error::{Error, Result};
pub use metrics::{accumulate_confusion, mean_uiou, uiou_curve, verify_theorem1, ConfusionTallies, UiouCurve};
pub use refine::{cross_bilateral_align, fuse, refine_guided, BilateralParams, FusionParams};
pub use scalar::Scalar;
pub use types::{
    validate_pair, ClassSet, ConfidenceMap, InvalidMask, LabelMap, SoftPrediction, DEFAULT_IGNORE, INVALID_SENTINEL,
};

pub type SoftPredictionF32 = SoftPrediction<f32>;
pub type SoftPredictionF64 = SoftPrediction<f64>;
pub type LabImageF32 = LabImage<f32>;
pub type LabImageF64 = LabImage<f64>;
pub type ConfidenceMapF32 = ConfidenceMap<f32>;
pub type ScoredPredictionF32 = metrics::ScoredPrediction<f32>;
pub type ScoredPredictionF64 = metrics::ScoredPrediction<f64>;
pub type AlphaMapF32 = refine::AlphaMap<f32>;
pub type AlphaMapF64 = refine::AlphaMap<f64>;

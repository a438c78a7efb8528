//! Guided refinement of dark-image predictions with a corresponding daytime prediction.
//!
//! The daytime soft prediction is first aligned to the dark image with a cross bilateral
//! filter on the dark image's CIELAB colours, then fused with the dark prediction using
//! confidence-dependent weights. The argmax of the fused prediction is the pseudo-label.

mod bilateral;
mod fusion;

pub use bilateral::{cross_bilateral_align, BilateralParams, AUTO_DOWNSAMPLE_FACTOR, AUTO_DOWNSAMPLE_PIXELS};
pub use fusion::{alpha_map, fuse, fusion_weights, pixel_alpha, AlphaMap, FusionParams};

use crate::color::{rgb_to_cielab, RgbImage};
use crate::error::Result;
use crate::scalar::Scalar;
use crate::types::{ClassSet, ConfidenceMap, LabelMap, SoftPrediction};

/// Per-pixel maximum class probability.
pub fn confidence_map<T: Scalar>(soft: &SoftPrediction<T>) -> ConfidenceMap<T> {
    soft.confidence_map()
}

#[derive(Debug, Clone)]
pub struct Refined<T> {
    pub soft: SoftPrediction<T>,
    pub labels: LabelMap,
    pub alpha: AlphaMap<T>,
}

/// Full refinement: CIELAB conversion, alignment, alpha map, fusion, argmax.
pub fn refine_guided<T: Scalar>(
    dark_soft: &SoftPrediction<T>,
    dark_image: &RgbImage,
    day_soft: &SoftPrediction<T>,
    classes: &ClassSet,
    bilateral: &BilateralParams,
    fusion: &FusionParams,
) -> Result<Refined<T>> {
    fusion.validate()?;
    day_soft.ensure_dims("day prediction vs dark prediction", dark_soft.dims())?;
    let lab = rgb_to_cielab::<T>(dark_image);
    let aligned = cross_bilateral_align(day_soft, &lab, bilateral)?;
    let alpha = alpha_map(&aligned, dark_soft, classes, fusion)?;
    let soft = fuse(dark_soft, &aligned, &alpha)?;
    let labels = soft.argmax();
    Ok(Refined { soft, labels, alpha })
}

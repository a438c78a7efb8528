//! Uncertainty-aware segmentation metrics.
//!
//! A prediction may label pixels as invalid, either explicitly or by thresholding its
//! confidence. Each class is scored over five pixel sets: true positives, false positives,
//! false negatives, true invalids (invalid prediction on a ground-truth invalid region) and
//! false invalids (invalid prediction on a valid region):
//!
//! `UIoU = (TP + TI) / (TP + TI + FP + FN + FI)`
//!
//! At the threshold `1/C` nothing is invalidated and UIoU is the standard IoU.

mod confusion;
mod curve;
mod theorem;
mod threshold;

pub use confusion::{accumulate_confusion, mean_uiou, uiou_per_class, ClassTally, ConfusionTallies};
pub use curve::{uiou_curve, uiou_curve_direct, uiou_curve_scored, BestPoint, CurvePoint, SweepAccumulator, UiouCurve};
pub use theorem::{verify_theorem1, verify_theorem1_scored, ClassVerdict, Theorem1Report};
pub use threshold::{exact_theta_grid, threshold_apply, uniform_theta_grid, ScoredPrediction};

/// Default number of grid points for threshold sweeps.
pub const DEFAULT_GRID_POINTS: usize = 101;

//! UIoU as a function of the confidence threshold.
//!
//! [`SweepAccumulator`] evaluates the whole threshold grid in a single pass over the pixels:
//! each pixel is binned by the first grid index at which it becomes invalid, and per-threshold
//! tallies are recovered from prefix and suffix sums of those bins. [`uiou_curve_direct`]
//! thresholds and tallies once per grid point and serves as the reference route.

use rayon::prelude::*;
use serde::Serialize;

use super::confusion::{accumulate_into, illegal, mean_defined, prediction_table, ConfusionTallies};
use super::threshold::{check_theta, ScoredPrediction};
use crate::error::{Error, Result};
use crate::scalar::Scalar;
use crate::types::{ClassSet, InvalidMask, LabelMap, SoftPrediction, INVALID_SENTINEL};

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CurvePoint {
    pub theta: f64,
    pub per_class: Vec<Option<f64>>,
    pub mean: f64,
    /// Pixels mapped to the invalid label, over all pixels including unlabeled ones.
    pub invalidated: u64,
    pub tallies: ConfusionTallies,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct BestPoint {
    pub index: usize,
    pub theta: f64,
    pub mean: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct UiouCurve {
    pub class_names: Vec<String>,
    pub points: Vec<CurvePoint>,
    /// Grid point of maximal mean UIoU; the lowest threshold wins ties.
    pub best: BestPoint,
}

impl UiouCurve {
    fn from_points(class_names: Vec<String>, points: Vec<CurvePoint>) -> Self {
        let mut best = BestPoint {
            index: 0,
            theta: points[0].theta,
            mean: points[0].mean,
        };
        for (i, p) in points.iter().enumerate().skip(1) {
            if p.mean > best.mean {
                best = BestPoint {
                    index: i,
                    theta: p.theta,
                    mean: p.mean,
                };
            }
        }
        Self {
            class_names,
            points,
            best,
        }
    }

    pub fn thetas(&self) -> Vec<f64> {
        self.points.iter().map(|p| p.theta).collect()
    }

    pub fn means(&self) -> Vec<f64> {
        self.points.iter().map(|p| p.mean).collect()
    }
}

fn check_grid<T: Scalar>(grid: &[T], channels: usize) -> Result<()> {
    if grid.is_empty() {
        return Err(Error::InvalidParameter("empty theta grid".into()));
    }
    for &t in grid {
        check_theta(t, channels)?;
    }
    if grid.windows(2).any(|w| w[0] >= w[1]) {
        return Err(Error::InvalidParameter("theta grid must be strictly ascending".into()));
    }
    Ok(())
}

fn check_channels(channels: usize, classes: &ClassSet) -> Result<()> {
    if channels != classes.len() {
        return Err(Error::InvalidParameter(format!(
            "prediction has {channels} channels but the class set has {}",
            classes.len()
        )));
    }
    Ok(())
}

/// Streaming single-pass evaluator for a fixed threshold grid.
#[derive(Debug, Clone)]
pub struct SweepAccumulator<T> {
    grid: Vec<T>,
    min: T,
    classes: ClassSet,
    // Bins are indexed `class * stride + k`, where k is the first grid index at which the
    // pixel is invalid (k = grid.len() when it never is).
    stride: usize,
    valid_tp: Vec<u64>,
    valid_fn: Vec<u64>,
    valid_fp: Vec<u64>,
    gt_invalid_mask: Vec<u64>,
    gt_valid_mask: Vec<u64>,
    all_pixels: Vec<u64>,
}

impl<T: Scalar> SweepAccumulator<T> {
    pub fn new(grid: Vec<T>, classes: &ClassSet) -> Result<Self> {
        check_grid(&grid, classes.len())?;
        let stride = grid.len() + 1;
        let n = classes.len() * stride;
        Ok(Self {
            min: classes.min_theta(),
            grid,
            classes: classes.clone(),
            stride,
            valid_tp: vec![0; n],
            valid_fn: vec![0; n],
            valid_fp: vec![0; n],
            gt_invalid_mask: vec![0; n],
            gt_valid_mask: vec![0; n],
            all_pixels: vec![0; stride],
        })
    }

    pub fn grid(&self) -> &[T] {
        &self.grid
    }

    /// First grid index at which a pixel of confidence `conf` is invalidated.
    #[inline]
    fn cutoff(&self, conf: T) -> usize {
        let min = self.min;
        self.grid.partition_point(|&t| t <= min || t <= conf)
    }

    pub fn add(&mut self, scores: &ScoredPrediction<T>, gt: &LabelMap, mask: &InvalidMask) -> Result<()> {
        check_channels(scores.channels(), &self.classes)?;
        if gt.dims() != mask.dims() {
            return Err(Error::dims("invalid mask vs ground truth", gt.dims(), mask.dims()));
        }
        if gt.dims() != scores.dims() {
            return Err(Error::dims("prediction vs ground truth", gt.dims(), scores.dims()));
        }
        let n = self.classes.len();
        let ignore = self.classes.ignore_value();
        let legal_pred = prediction_table(&self.classes);
        let width = gt.width();
        let stride = self.stride;
        let px = gt
            .data()
            .iter()
            .zip(scores.labels().data())
            .zip(mask.data())
            .zip(scores.confidence());
        for (i, (((&h, &p), &j), &conf)) in px.enumerate() {
            if !legal_pred[p as usize] {
                return Err(illegal("prediction", i, width, p));
            }
            let k = if p == INVALID_SENTINEL { 0 } else { self.cutoff(conf) };
            self.all_pixels[k] += 1;
            if h == ignore {
                continue;
            }
            let hc = h as usize;
            if hc >= n {
                return Err(illegal("ground truth", i, width, h));
            }
            let row = hc * stride + k;
            if j != 0 {
                self.gt_invalid_mask[row] += 1;
            } else {
                self.gt_valid_mask[row] += 1;
            }
            if p == INVALID_SENTINEL {
                continue;
            }
            if p == h {
                self.valid_tp[row] += 1;
            } else {
                self.valid_fn[row] += 1;
                if (p as usize) < n {
                    self.valid_fp[p as usize * stride + k] += 1;
                }
            }
        }
        Ok(())
    }

    pub fn merge(&mut self, other: &SweepAccumulator<T>) {
        assert_eq!(self.grid, other.grid, "grids differ");
        let pairs = [
            (&mut self.valid_tp, &other.valid_tp),
            (&mut self.valid_fn, &other.valid_fn),
            (&mut self.valid_fp, &other.valid_fp),
            (&mut self.gt_invalid_mask, &other.gt_invalid_mask),
            (&mut self.gt_valid_mask, &other.gt_valid_mask),
            (&mut self.all_pixels, &other.all_pixels),
        ];
        for (a, b) in pairs {
            for (x, y) in a.iter_mut().zip(b) {
                *x += *y;
            }
        }
    }

    /// Tallies at grid index `i`.
    pub fn tallies_at(&self, i: usize) -> ConfusionTallies {
        let mut t = ConfusionTallies::new(self.classes.len(), Some(self.grid[i].as_f64()));
        for (c, tally) in t.classes.iter_mut().enumerate() {
            let base = c * self.stride;
            let still_valid = base + i + 1..base + self.stride;
            let invalid = base..base + i + 1;
            tally.tp = self.valid_tp[still_valid.clone()].iter().sum();
            tally.fn_ = self.valid_fn[still_valid.clone()].iter().sum();
            tally.fp = self.valid_fp[still_valid].iter().sum();
            tally.ti = self.gt_invalid_mask[invalid.clone()].iter().sum();
            tally.fi = self.gt_valid_mask[invalid].iter().sum();
        }
        t
    }

    pub fn invalidated_at(&self, i: usize) -> u64 {
        self.all_pixels[..=i].iter().sum()
    }

    pub fn finish(&self) -> Result<UiouCurve> {
        let points = (0..self.grid.len())
            .map(|i| {
                let tallies = self.tallies_at(i);
                let per_class = tallies.per_class_uiou();
                Ok(CurvePoint {
                    theta: self.grid[i].as_f64(),
                    mean: mean_defined(&per_class)?,
                    per_class,
                    invalidated: self.invalidated_at(i),
                    tallies,
                })
            })
            .collect::<Result<Vec<_>>>()?;
        Ok(UiouCurve::from_points(self.classes.names().to_vec(), points))
    }
}

fn check_aligned(a: usize, b: usize, c: usize) -> Result<()> {
    if a != b || a != c {
        return Err(Error::InvalidParameter(format!(
            "dataset lists differ in length: {a} predictions, {b} ground truths, {c} masks"
        )));
    }
    if a == 0 {
        return Err(Error::EmptyEvaluation);
    }
    Ok(())
}

/// UIoU curve over a dataset of scored predictions; images are processed in parallel.
pub fn uiou_curve_scored<T: Scalar>(
    scores: &[ScoredPrediction<T>],
    gts: &[LabelMap],
    masks: &[InvalidMask],
    classes: &ClassSet,
    grid: &[T],
) -> Result<UiouCurve> {
    check_aligned(scores.len(), gts.len(), masks.len())?;
    let empty = SweepAccumulator::new(grid.to_vec(), classes)?;
    let acc = scores
        .par_iter()
        .zip(gts)
        .zip(masks)
        .map(|((s, g), m)| {
            let mut a = empty.clone();
            a.add(s, g, m)?;
            Ok(a)
        })
        .try_reduce(
            || empty.clone(),
            |mut a, b| {
                a.merge(&b);
                Ok(a)
            },
        )?;
    acc.finish()
}

/// UIoU curve over a dataset of soft predictions.
pub fn uiou_curve<T: Scalar>(
    softs: &[SoftPrediction<T>],
    gts: &[LabelMap],
    masks: &[InvalidMask],
    classes: &ClassSet,
    grid: &[T],
) -> Result<UiouCurve> {
    let scores: Vec<_> = softs.par_iter().map(ScoredPrediction::from_soft).collect();
    uiou_curve_scored(&scores, gts, masks, classes, grid)
}

/// Reference route: threshold every image at every grid point and tally from scratch.
pub fn uiou_curve_direct<T: Scalar>(
    scores: &[ScoredPrediction<T>],
    gts: &[LabelMap],
    masks: &[InvalidMask],
    classes: &ClassSet,
    grid: &[T],
) -> Result<UiouCurve> {
    check_aligned(scores.len(), gts.len(), masks.len())?;
    check_grid(grid, classes.len())?;
    let mut points = Vec::with_capacity(grid.len());
    for &theta in grid {
        let mut tallies = ConfusionTallies::new(classes.len(), Some(theta.as_f64()));
        let mut invalidated = 0u64;
        for ((s, g), m) in scores.iter().zip(gts).zip(masks) {
            check_channels(s.channels(), classes)?;
            let pred = s.threshold(theta)?;
            invalidated += pred.data().iter().filter(|&&v| v == INVALID_SENTINEL).count() as u64;
            accumulate_into(&mut tallies, g, m, &pred, classes)?;
        }
        let per_class = tallies.per_class_uiou();
        points.push(CurvePoint {
            theta: theta.as_f64(),
            mean: mean_defined(&per_class)?,
            per_class,
            invalidated,
            tallies,
        });
    }
    Ok(UiouCurve::from_points(classes.names().to_vec(), points))
}

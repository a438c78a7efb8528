use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::types::{ClassSet, InvalidMask, LabelMap, INVALID_SENTINEL};

/// Pixel counts of the five UIoU sets for one class.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct ClassTally {
    pub tp: u64,
    pub fp: u64,
    #[serde(rename = "fn")]
    pub fn_: u64,
    pub ti: u64,
    pub fi: u64,
}

impl ClassTally {
    pub fn denominator(&self) -> u64 {
        self.tp + self.ti + self.fp + self.fn_ + self.fi
    }

    /// `(tp + ti) / (tp + ti + fp + fn + fi)`, or `None` for an empty denominator.
    pub fn uiou(&self) -> Option<f64> {
        match self.denominator() {
            0 => None,
            d => Some((self.tp + self.ti) as f64 / d as f64),
        }
    }

    /// Pixels of this class in the ground truth, invariant under thresholding.
    pub fn gt_pixels(&self) -> u64 {
        self.tp + self.fn_ + self.ti + self.fi
    }

    fn add(&mut self, o: &ClassTally) {
        self.tp += o.tp;
        self.fp += o.fp;
        self.fn_ += o.fn_;
        self.ti += o.ti;
        self.fi += o.fi;
    }
}

/// Per-class tallies over one image or a whole dataset.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ConfusionTallies {
    /// Threshold the predictions were taken at; `None` for plain hard predictions.
    pub theta: Option<f64>,
    pub classes: Vec<ClassTally>,
}

impl ConfusionTallies {
    pub fn new(num_classes: usize, theta: Option<f64>) -> Self {
        Self {
            theta,
            classes: vec![ClassTally::default(); num_classes],
        }
    }

    pub fn num_classes(&self) -> usize {
        self.classes.len()
    }

    pub fn class(&self, c: usize) -> &ClassTally {
        &self.classes[c]
    }

    /// Adds another set of tallies. Addition is associative, so merge order is irrelevant.
    pub fn merge(&mut self, other: &ConfusionTallies) {
        assert_eq!(self.classes.len(), other.classes.len(), "class count mismatch");
        for (a, b) in self.classes.iter_mut().zip(&other.classes) {
            a.add(b);
        }
    }

    pub fn uiou(&self, c: usize) -> Option<f64> {
        self.classes[c].uiou()
    }

    pub fn per_class_uiou(&self) -> Vec<Option<f64>> {
        self.classes.iter().map(ClassTally::uiou).collect()
    }

    /// Mean over classes with a defined score.
    pub fn mean_uiou(&self) -> Result<f64> {
        mean_defined(&self.per_class_uiou())
    }
}

pub(crate) fn mean_defined(values: &[Option<f64>]) -> Result<f64> {
    let defined: Vec<f64> = values.iter().flatten().copied().collect();
    if defined.is_empty() {
        return Err(Error::EmptyEvaluation);
    }
    Ok(defined.iter().sum::<f64>() / defined.len() as f64)
}

/// Per-class UIoU, `None` when the class is absent from both ground truth and prediction.
pub fn uiou_per_class(t: &ConfusionTallies, c: usize) -> Option<f64> {
    t.uiou(c)
}

/// Mean UIoU over classes with a defined score; errors when none is defined.
pub fn mean_uiou(t: &ConfusionTallies) -> Result<f64> {
    t.mean_uiou()
}

/// Legality lookup for predicted raster values.
pub(crate) fn prediction_table(classes: &ClassSet) -> [bool; 256] {
    let mut t = [false; 256];
    for (v, slot) in t.iter_mut().enumerate() {
        *slot = classes.is_legal_prediction(v as u8);
    }
    t
}

/// Tallies TP, FP, FN, TI, FI per class for one image.
///
/// Ground-truth pixels equal to the ignore value contribute to no set. Prediction values
/// may be classes, [`INVALID_SENTINEL`], or the ignore value (which counts as a wrong label).
pub fn accumulate_confusion(
    gt: &LabelMap,
    mask: &InvalidMask,
    pred: &LabelMap,
    classes: &ClassSet,
) -> Result<ConfusionTallies> {
    let mut out = ConfusionTallies::new(classes.len(), None);
    accumulate_into(&mut out, gt, mask, pred, classes)?;
    Ok(out)
}

pub(crate) fn accumulate_into(
    out: &mut ConfusionTallies,
    gt: &LabelMap,
    mask: &InvalidMask,
    pred: &LabelMap,
    classes: &ClassSet,
) -> Result<()> {
    if gt.dims() != mask.dims() {
        return Err(Error::dims("invalid mask vs ground truth", gt.dims(), mask.dims()));
    }
    if gt.dims() != pred.dims() {
        return Err(Error::dims("prediction vs ground truth", gt.dims(), pred.dims()));
    }
    let n = classes.len();
    let ignore = classes.ignore_value();
    let legal_pred = prediction_table(classes);
    let width = gt.width();
    let tallies = &mut out.classes;
    let iter = gt.data().iter().zip(pred.data()).zip(mask.data());
    for (i, ((&h, &p), &j)) in iter.enumerate() {
        if !legal_pred[p as usize] {
            return Err(illegal("prediction", i, width, p));
        }
        if h == ignore {
            continue;
        }
        let hc = h as usize;
        if hc >= n {
            return Err(illegal("ground truth", i, width, h));
        }
        debug_assert!(j <= 1, "mask must be binary");
        if p == INVALID_SENTINEL {
            if j != 0 {
                tallies[hc].ti += 1;
            } else {
                tallies[hc].fi += 1;
            }
        } else if p == h {
            tallies[hc].tp += 1;
        } else {
            tallies[hc].fn_ += 1;
            if (p as usize) < n {
                tallies[p as usize].fp += 1;
            }
        }
    }
    Ok(())
}

pub(crate) fn illegal(what: &str, i: usize, width: usize, value: u8) -> Error {
    Error::IllegalValue {
        what: what.to_string(),
        x: i % width,
        y: i / width,
        value,
    }
}

//! Checks the confidence-separation guarantee of UIoU over IoU on a concrete dataset.
//!
//! Hypotheses: every labeled invalid-region pixel has confidence at most `theta1`, every
//! labeled valid-region pixel has confidence at least `theta2`, `theta1 < theta2`, and class
//! `c` has an invalid-region pixel among its false negatives or false positives at `1/C`.
//! Conclusion: `IoU(c) < UIoU(c)` at `theta1`.
//!
//! The conclusion needs one more condition. If `c` has no true positive at `1/C` and its
//! only witnesses are false positives, then `IoU(c) = 0` and `UIoU(c)` at `theta1` is 0 or
//! undefined. Such classes are reported as `degenerate` and not checked.
//!
//! Thresholding keeps pixels whose confidence equals the threshold, so the pixel attaining
//! `theta1` would survive a threshold of exactly `theta1`. The conclusion is therefore
//! evaluated at the next representable value above `theta1`, which satisfies the same
//! hypotheses whenever they hold at all.

use serde::Serialize;

use super::confusion::{accumulate_into, ConfusionTallies};
use super::threshold::ScoredPrediction;
use crate::error::{Error, Result};
use crate::scalar::Scalar;
use crate::types::{ClassSet, InvalidMask, LabelMap, SoftPrediction, INVALID_SENTINEL};

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ClassVerdict {
    pub class: usize,
    /// Some invalid-region pixel lies in FN or FP of this class at `1/C`.
    pub witness: bool,
    /// No true positive at `1/C` and no invalid-region false negative: the strict
    /// inequality cannot hold, so the class is not checked.
    pub degenerate: bool,
    pub iou: Option<f64>,
    pub uiou_theta1: Option<f64>,
    /// `Some(IoU < UIoU(theta1))` where both hypotheses hold, `None` otherwise.
    pub inequality_verified: Option<bool>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Theorem1Report {
    /// Maximum confidence over labeled invalid-region pixels.
    pub theta1: Option<f64>,
    /// Minimum confidence over labeled valid-region pixels (1 when there are none).
    pub theta2: Option<f64>,
    /// Threshold at which UIoU was evaluated.
    pub evaluation_theta: Option<f64>,
    /// First hypothesis: `theta1 < theta2`.
    pub separation_holds: bool,
    pub classes: Vec<ClassVerdict>,
}

impl Theorem1Report {
    pub fn assumptions_hold(&self, class: usize) -> bool {
        self.separation_holds && self.classes[class].witness
    }

    pub fn classes_with_witness(&self) -> Vec<usize> {
        self.classes.iter().filter(|v| v.witness).map(|v| v.class).collect()
    }

    /// Classes where the hypotheses hold but the inequality does not.
    pub fn violations(&self) -> Vec<usize> {
        self.classes
            .iter()
            .filter(|v| v.inequality_verified == Some(false))
            .map(|v| v.class)
            .collect()
    }

    pub fn checked_classes(&self) -> usize {
        self.classes.iter().filter(|v| v.inequality_verified.is_some()).count()
    }
}

pub fn verify_theorem1<T: Scalar>(
    softs: &[SoftPrediction<T>],
    gts: &[LabelMap],
    masks: &[InvalidMask],
    classes: &ClassSet,
) -> Result<Theorem1Report> {
    let scores: Vec<_> = softs.iter().map(ScoredPrediction::from_soft).collect();
    verify_theorem1_scored(&scores, gts, masks, classes)
}

pub fn verify_theorem1_scored<T: Scalar>(
    scores: &[ScoredPrediction<T>],
    gts: &[LabelMap],
    masks: &[InvalidMask],
    classes: &ClassSet,
) -> Result<Theorem1Report> {
    if scores.len() != gts.len() || scores.len() != masks.len() {
        return Err(Error::InvalidParameter("dataset lists differ in length".into()));
    }
    let n = classes.len();
    let ignore = classes.ignore_value();
    let mut max_invalid: Option<T> = None;
    let mut min_valid: Option<T> = None;
    let mut witness = vec![false; n];
    let mut fn_witness = vec![false; n];
    for ((s, g), m) in scores.iter().zip(gts).zip(masks) {
        if s.channels() != n {
            return Err(Error::InvalidParameter("channel count differs from class set".into()));
        }
        if g.dims() != s.dims() || g.dims() != m.dims() {
            return Err(Error::dims("theorem inputs", g.dims(), s.dims()));
        }
        let px = g.data().iter().zip(s.labels().data()).zip(m.data()).zip(s.confidence());
        for (((&h, &p), &j), &conf) in px {
            if h == ignore {
                continue;
            }
            if j != 0 {
                max_invalid = Some(max_invalid.map_or(conf, |v| v.max(conf)));
                if p != h && p != INVALID_SENTINEL {
                    // FN for the true class, FP for the predicted one
                    if (h as usize) < n {
                        witness[h as usize] = true;
                        fn_witness[h as usize] = true;
                    }
                    if (p as usize) < n {
                        witness[p as usize] = true;
                    }
                }
            } else {
                min_valid = Some(min_valid.map_or(conf, |v| v.min(conf)));
            }
        }
    }

    let Some(theta1) = max_invalid else {
        return Ok(Theorem1Report {
            theta1: None,
            theta2: min_valid.map(Scalar::as_f64),
            evaluation_theta: None,
            separation_holds: false,
            classes: (0..n)
                .map(|class| ClassVerdict {
                    class,
                    witness: false,
                    degenerate: false,
                    iou: None,
                    uiou_theta1: None,
                    inequality_verified: None,
                })
                .collect(),
        });
    };
    let theta2 = min_valid.unwrap_or_else(T::one);
    let separation = theta1 < theta2;
    let eval_theta = theta1.next_above().max(classes.min_theta());

    let mut iou = ConfusionTallies::new(n, Some(classes.min_theta::<T>().as_f64()));
    let mut uiou = ConfusionTallies::new(n, Some(eval_theta.as_f64()));
    let evaluate = separation && eval_theta <= T::one();
    for ((s, g), m) in scores.iter().zip(gts).zip(masks) {
        accumulate_into(&mut iou, g, m, s.labels(), classes)?;
        if evaluate {
            accumulate_into(&mut uiou, g, m, &s.threshold(eval_theta)?, classes)?;
        }
    }
    let verdicts = (0..n)
        .map(|c| {
            let degenerate = witness[c] && !fn_witness[c] && iou.class(c).tp == 0;
            let holds = evaluate && witness[c] && !degenerate;
            let (i, u) = (iou.uiou(c), holds.then(|| uiou.uiou(c)).flatten());
            ClassVerdict {
                class: c,
                witness: witness[c],
                degenerate,
                iou: i,
                uiou_theta1: u,
                inequality_verified: holds.then_some(matches!((i, u), (Some(a), Some(b)) if a < b)),
            }
        })
        .collect();
    Ok(Theorem1Report {
        theta1: Some(theta1.as_f64()),
        theta2: Some(theta2.as_f64()),
        evaluation_theta: evaluate.then(|| eval_theta.as_f64()),
        separation_holds: separation,
        classes: verdicts,
    })
}

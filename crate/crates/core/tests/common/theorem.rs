//! Instances for the UIoU-over-IoU guarantee and an independent check of its conclusion.

use darkseg::metrics::{verify_theorem1_scored, ScoredPrediction};
use darkseg::{ClassSet, InvalidMask, LabelMap, INVALID_SENTINEL};
use rand::Rng;

use super::*;

pub struct Instance {
    pub scores: Vec<ScoredPrediction<f32>>,
    pub gts: Vec<LabelMap>,
    pub masks: Vec<InvalidMask>,
    pub theta1: f32,
    pub theta2: f32,
}

/// Invalid-region confidences in `[1/C, theta1]`, valid-region ones in `[theta2, 1]`.
/// With `separated == false` one valid pixel is pushed below `theta1`.
pub fn instance(r: &mut impl Rng, c: usize, separated: bool) -> Instance {
    let min = 1.0 / c as f32;
    let theta1 = r.gen_range(min + 0.01..0.85);
    let theta2 = r.gen_range(theta1..1.0).max(theta1.next_up());
    let n = r.gen_range(1..4);
    let (mut scores, mut gts, mut masks) = (Vec::new(), Vec::new(), Vec::new());
    for _ in 0..n {
        let (w, h) = (r.gen_range(3..12), r.gen_range(3..12));
        let gt = random_gt(r, w, h, c, 0.1);
        let mask = random_mask(r, w, h, 0.3);
        let mut pred = random_pred(r, &gt, c, 0.6, false);
        let conf: Vec<f32> = mask
            .data()
            .iter()
            .map(|&j| if j != 0 { r.gen_range(min..=theta1) } else { r.gen_range(theta2..=1.0) })
            .collect();
        // an invalid-region pixel predicted wrongly gives some class a witness
        if let Some(i) = (0..w * h).find(|&i| mask.data()[i] != 0 && gt.data()[i] != IGNORE) {
            let g = gt.data()[i] as usize;
            pred.data_mut()[i] = ((g + 1 + r.gen_range(0..c - 1)) % c) as u8;
        }
        scores.push(ScoredPrediction::new(pred, conf, c).unwrap());
        gts.push(gt);
        masks.push(mask);
    }
    if !separated {
        let k = r.gen_range(0..n);
        let valid = (0..gts[k].data().len()).find(|&i| masks[k].data()[i] == 0 && gts[k].data()[i] != IGNORE);
        let mut conf = scores[k].confidence().to_vec();
        match valid {
            Some(i) => conf[i] = min,
            None => conf[0] = theta1,
        }
        scores[k] = ScoredPrediction::new(scores[k].labels().clone(), conf, c).unwrap();
    }
    Instance {
        scores,
        gts,
        masks,
        theta1,
        theta2,
    }
}

fn threshold(s: &ScoredPrediction<f32>, theta: f32) -> LabelMap {
    let data = s
        .labels()
        .data()
        .iter()
        .zip(s.confidence())
        .map(|(&l, &conf)| if conf < theta { INVALID_SENTINEL } else { l })
        .collect();
    LabelMap::new(s.labels().width(), s.labels().height(), data).unwrap()
}

fn tallies_at(inst: &Instance, theta: Option<f32>, c: usize) -> Vec<[u64; 5]> {
    let mut total = vec![[0u64; 5]; c];
    for ((s, g), m) in inst.scores.iter().zip(&inst.gts).zip(&inst.masks) {
        let pred = match theta {
            Some(t) => threshold(s, t),
            None => s.labels().clone(),
        };
        sum_tallies(&mut total, &naive_tally(g, m, &pred, c));
    }
    total
}

/// Classes with an invalid-region pixel among their false negatives or false positives, and
/// the subset witnessed by a false negative.
fn witnessed(inst: &Instance, c: usize) -> (Vec<bool>, Vec<bool>) {
    let mut w = vec![false; c];
    let mut by_fn = vec![false; c];
    for ((s, g), m) in inst.scores.iter().zip(&inst.gts).zip(&inst.masks) {
        for ((&h, &p), &j) in g.data().iter().zip(s.labels().data()).zip(m.data()) {
            if h == IGNORE || j == 0 || h == p {
                continue;
            }
            w[h as usize] = true;
            by_fn[h as usize] = true;
            w[p as usize] = true;
        }
    }
    (w, by_fn)
}

#[derive(Default)]
pub struct Outcome {
    pub checked: usize,
    pub degenerate: usize,
}

pub fn check(inst: &Instance, c: usize, separated: bool) -> Outcome {
    let classes = ClassSet::numbered(c).unwrap();
    let report = verify_theorem1_scored(&inst.scores, &inst.gts, &inst.masks, &classes).unwrap();
    let (wit, by_fn) = witnessed(inst, c);
    assert_eq!(report.classes.iter().map(|v| v.witness).collect::<Vec<_>>(), wit);
    let mut out = Outcome::default();
    let any_invalid = inst
        .gts
        .iter()
        .zip(&inst.masks)
        .any(|(g, m)| g.data().iter().zip(m.data()).any(|(&h, &j)| h != IGNORE && j != 0));
    if !separated || !any_invalid {
        assert!(!report.separation_holds);
        assert_eq!(report.checked_classes(), 0);
        return out;
    }
    assert!(report.separation_holds);
    assert!(report.violations().is_empty());
    let base = tallies_at(inst, None, c);
    let degenerate: Vec<bool> = (0..c).map(|k| wit[k] && !by_fn[k] && base[k][0] == 0).collect();
    assert_eq!(report.classes.iter().map(|v| v.degenerate).collect::<Vec<_>>(), degenerate);
    // any threshold strictly above the invalid confidences and not above theta2 works
    let thetas = [report.evaluation_theta.unwrap() as f32, inst.theta1.next_up()];
    for theta in thetas.into_iter().filter(|&t| t <= inst.theta2) {
        let at = tallies_at(inst, Some(theta), c);
        for k in (0..c).filter(|&k| wit[k]) {
            let iou = iou(&base[k]).unwrap();
            if degenerate[k] {
                // false positives only, no true positive: both sides vanish
                assert_eq!(iou, 0.0);
                assert!(uiou(&at[k]).is_none_or(|u| u == 0.0));
                out.degenerate += 1;
                continue;
            }
            let u = uiou(&at[k]).unwrap();
            assert!(u > iou, "class {k}: UIoU {u} <= IoU {iou} at {theta}");
            out.checked += 1;
        }
    }
    let expect = (0..c).filter(|&k| wit[k] && !degenerate[k]).count();
    assert_eq!(report.checked_classes(), expect);
    out
}


mod common;

use common::*;
use darkseg::metrics::{
    exact_theta_grid, uiou_curve_direct, uiou_curve_scored, uniform_theta_grid, ScoredPrediction, SweepAccumulator,
};
use darkseg::{accumulate_confusion, uiou_curve, ClassSet, InvalidMask, LabelMap};
use proptest::prelude::*;
use rand::Rng;

fn tally_rows(t: &darkseg::ConfusionTallies) -> Vec<[u64; 5]> {
    (0..t.num_classes())
        .map(|c| {
            let k = t.class(c);
            [k.tp, k.fp, k.fn_, k.ti, k.fi]
        })
        .collect()
}

#[test]
fn confusion_equals_per_set_count() {
    let classes = ClassSet::cityscapes();
    let mut r = rng(4);
    for i in 0..1000 {
        let gt = random_gt(&mut r, 16, 16, 1 + i % 19, 0.1);
        let mask = random_mask(&mut r, 16, 16, 0.3);
        let pred = random_pred(&mut r, &gt, 19, 0.5, i % 2 == 0);
        let got = accumulate_confusion(&gt, &mask, &pred, &classes).unwrap();
        assert_eq!(tally_rows(&got), naive_tally(&gt, &mask, &pred, 19), "instance {i}");
    }
}

#[test]
fn curve_matches_thresholded_oracle() {
    let classes = ClassSet::numbered(5).unwrap();
    let mut r = rng(11);
    for _ in 0..40 {
        let n = r.gen_range(1..4);
        let mut softs = Vec::new();
        let mut gts = Vec::new();
        let mut masks = Vec::new();
        for _ in 0..n {
            let gt = random_gt(&mut r, 12, 9, 5, 0.1);
            masks.push(random_mask(&mut r, 12, 9, 0.4));
            softs.push(random_soft(&mut r, &gt, 5));
            gts.push(gt);
        }
        let scores: Vec<_> = softs.iter().map(ScoredPrediction::from_soft).collect();
        let grid = exact_theta_grid(5, &scores);
        let curve = uiou_curve(&softs, &gts, &masks, &classes, &grid).unwrap();
        let direct = uiou_curve_direct(&scores, &gts, &masks, &classes, &grid).unwrap();
        assert_eq!(curve, direct);
        for (p, &theta) in curve.points.iter().zip(&grid) {
            let mut total = vec![[0u64; 5]; 5];
            for k in 0..n {
                let pred = naive_threshold(&softs[k], theta);
                sum_tallies(&mut total, &naive_tally(&gts[k], &masks[k], &pred, 5));
            }
            assert_eq!(tally_rows(&p.tallies), total, "theta {theta}");
            let want: Vec<_> = total.iter().map(uiou).collect();
            assert_eq!(p.per_class, want);
            assert_eq!(p.mean, mean_defined(want));
        }
    }
}

#[test]
fn lowest_threshold_gives_standard_iou() {
    let classes = ClassSet::cityscapes();
    let grid = uniform_theta_grid::<f32>(19, 101).unwrap();
    let mut r = rng(1);
    for _ in 0..100 {
        let gt = random_gt(&mut r, 32, 32, 19, 0.05);
        let mask = random_mask(&mut r, 32, 32, 0.2);
        let soft = random_soft(&mut r, &gt, 19);
        let curve = uiou_curve(std::slice::from_ref(&soft), std::slice::from_ref(&gt), std::slice::from_ref(&mask), &classes, &grid).unwrap();
        let argmax = naive_threshold(&soft, 1.0 / 19.0);
        let t = naive_tally(&gt, &mask, &argmax, 19);
        assert_eq!(curve.points[0].mean, mean_defined(t.iter().map(iou)));
        assert_eq!(curve.points[0].invalidated, 0);
    }
}

#[test]
fn labeled_pixels_are_conserved_across_thresholds() {
    let classes = ClassSet::cityscapes();
    let grid = uniform_theta_grid::<f32>(19, 101).unwrap();
    let mut r = rng(2);
    for _ in 0..50 {
        let gt = random_gt(&mut r, 16, 16, 19, 0.1);
        let mask = random_mask(&mut r, 16, 16, 0.3);
        let soft = random_soft(&mut r, &gt, 19);
        let curve = uiou_curve(&[soft], &[gt], &[mask], &classes, &grid).unwrap();
        let base = tally_rows(&curve.points[0].tallies);
        for p in &curve.points {
            for (c, t) in tally_rows(&p.tallies).iter().enumerate() {
                assert_eq!(base[c][0] + base[c][2], t[0] + t[2] + t[3] + t[4]);
                assert!(t[0] <= base[c][0] && t[1] <= base[c][1] && t[2] <= base[c][2]);
            }
        }
    }
}

#[test]
fn invalidation_grows_with_threshold() {
    let classes = ClassSet::numbered(7).unwrap();
    let grid = uniform_theta_grid::<f32>(7, 64).unwrap();
    let mut r = rng(3);
    let gt = random_gt(&mut r, 40, 30, 7, 0.1);
    let mask = random_mask(&mut r, 40, 30, 0.3);
    let soft = random_soft(&mut r, &gt, 7);
    let curve = uiou_curve(&[soft], &[gt], &[mask], &classes, &grid).unwrap();
    for pair in curve.points.windows(2) {
        assert!(pair[0].invalidated <= pair[1].invalidated);
        let tp = |p: &darkseg::metrics::CurvePoint| -> u64 { (0..7).map(|c| p.tallies.class(c).tp).sum() };
        assert!(tp(&pair[0]) >= tp(&pair[1]));
    }
    // random softmax confidences stay below 1, so theta = 1 invalidates every pixel
    assert_eq!(curve.points.last().unwrap().invalidated, 40 * 30);
}

#[test]
fn hard_predictions_reduce_to_iou() {
    let classes = ClassSet::cityscapes();
    let mut r = rng(5);
    let gt = random_gt(&mut r, 30, 20, 19, 0.1);
    let mask = random_mask(&mut r, 30, 20, 0.3);
    let pred = random_pred(&mut r, &gt, 19, 0.7, false);
    let scored = ScoredPrediction::<f32>::from_hard(pred.clone(), 19);
    let grid = uniform_theta_grid::<f32>(19, 101).unwrap();
    let curve = uiou_curve_scored(&[scored], std::slice::from_ref(&gt), std::slice::from_ref(&mask), &classes, &grid).unwrap();
    let t = naive_tally(&gt, &mask, &pred, 19);
    let miou = mean_defined(t.iter().map(iou));
    for p in &curve.points {
        assert_eq!(p.mean, miou);
    }
}

#[test]
fn everything_ignored_is_an_empty_evaluation() {
    let classes = ClassSet::numbered(3).unwrap();
    let gt = LabelMap::filled(4, 4, IGNORE);
    let pred = LabelMap::filled(4, 4, IGNORE);
    let scored = ScoredPrediction::<f32>::from_hard(pred, 3);
    let grid = uniform_theta_grid::<f32>(3, 5).unwrap();
    assert!(uiou_curve_scored(&[scored], &[gt], &[InvalidMask::all_valid(4, 4)], &classes, &grid).is_err());
}

#[test]
fn out_of_range_grid_is_rejected() {
    let classes = ClassSet::numbered(4).unwrap();
    assert!(SweepAccumulator::new(vec![0.1f32, 0.5], &classes).is_err());
    assert!(SweepAccumulator::new(vec![0.5f32, 1.2], &classes).is_err());
    assert!(SweepAccumulator::new(vec![0.25f32, 0.5], &classes).is_ok());
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn merged_accumulators_equal_one_pass(seed in any::<u64>(), split in 1usize..5) {
        let classes = ClassSet::numbered(4).unwrap();
        let mut r = rng(seed);
        let mut items = Vec::new();
        for _ in 0..5 {
            let gt = random_gt(&mut r, 8, 6, 4, 0.1);
            let mask = random_mask(&mut r, 8, 6, 0.3);
            let soft = random_soft(&mut r, &gt, 4);
            items.push((ScoredPrediction::from_soft(&soft), gt, mask));
        }
        let grid = exact_theta_grid(4, items.iter().map(|i| &i.0));
        let mut one = SweepAccumulator::new(grid.clone(), &classes).unwrap();
        let mut a = one.clone();
        let mut b = one.clone();
        for (k, (s, g, m)) in items.iter().enumerate() {
            one.add(s, g, m).unwrap();
            if k < split { a.add(s, g, m).unwrap() } else { b.add(s, g, m).unwrap() }
        }
        a.merge(&b);
        prop_assert_eq!(one.finish().unwrap(), a.finish().unwrap());
    }

    #[test]
    fn uiou_lies_in_unit_interval(seed in any::<u64>()) {
        let classes = ClassSet::numbered(3).unwrap();
        let mut r = rng(seed);
        let gt = random_gt(&mut r, 7, 5, 3, 0.2);
        let mask = random_mask(&mut r, 7, 5, 0.5);
        let soft = random_soft(&mut r, &gt, 3);
        let grid = uniform_theta_grid::<f32>(3, 11).unwrap();
        if let Ok(curve) = uiou_curve(&[soft], &[gt], &[mask], &classes, &grid) {
            for p in &curve.points {
                prop_assert!((0.0..=1.0).contains(&p.mean));
                for v in p.per_class.iter().flatten() {
                    prop_assert!((0.0..=1.0).contains(v));
                }
            }
        }
    }
}

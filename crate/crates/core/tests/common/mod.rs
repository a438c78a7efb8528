//! Seeded instance generators and straightforward reference implementations.
#![allow(dead_code)]

pub mod theorem;

use darkseg::{InvalidMask, LabImage, LabelMap, SoftPrediction, INVALID_SENTINEL};
use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

pub const IGNORE: u8 = 255;

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

/// Ground truth with roughly `ignore_p` ignored pixels; the rest are drawn from the first
/// `used` classes so that some classes stay absent.
pub fn random_gt(r: &mut impl Rng, w: usize, h: usize, used: usize, ignore_p: f64) -> LabelMap {
    let data = (0..w * h)
        .map(|_| if r.gen_bool(ignore_p) { IGNORE } else { r.gen_range(0..used) as u8 })
        .collect();
    LabelMap::new(w, h, data).unwrap()
}

pub fn random_mask(r: &mut impl Rng, w: usize, h: usize, p: f64) -> InvalidMask {
    let bits: Vec<bool> = (0..w * h).map(|_| r.gen_bool(p)).collect();
    InvalidMask::from_bools(w, h, &bits).unwrap()
}

/// Hard prediction that copies `gt` with probability `agree`, otherwise a random class,
/// with an occasional invalid sentinel when `with_invalid`.
pub fn random_pred(r: &mut impl Rng, gt: &LabelMap, c: usize, agree: f64, with_invalid: bool) -> LabelMap {
    let data = gt
        .data()
        .iter()
        .map(|&g| {
            if with_invalid && r.gen_bool(0.05) {
                INVALID_SENTINEL
            } else if g != IGNORE && r.gen_bool(agree) {
                g
            } else {
                r.gen_range(0..c) as u8
            }
        })
        .collect();
    LabelMap::new(gt.width(), gt.height(), data).unwrap()
}

/// Softmax of random logits, with the argmax biased towards the ground truth.
pub fn random_soft(r: &mut impl Rng, gt: &LabelMap, c: usize) -> SoftPrediction<f32> {
    let mut data = Vec::with_capacity(gt.data().len() * c);
    for &g in gt.data() {
        let temp = r.gen_range(0.2..4.0f64);
        let mut logits: Vec<f64> = (0..c).map(|_| r.gen_range(-1.0..1.0) * temp).collect();
        if g != IGNORE && r.gen_bool(0.6) {
            logits[g as usize] += r.gen_range(0.0..3.0);
        }
        let m = logits.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
        let e: Vec<f64> = logits.iter().map(|l| (l - m).exp()).collect();
        let s: f64 = e.iter().sum();
        data.extend(e.iter().map(|v| (v / s) as f32));
    }
    SoftPrediction::new_normalized(gt.width(), gt.height(), c, data).unwrap()
}

/// `[tp, fp, fn, ti, fi]` per class, each set counted from its literal definition.
pub fn naive_tally(gt: &LabelMap, mask: &InvalidMask, pred: &LabelMap, c: usize) -> Vec<[u64; 5]> {
    let mut out = vec![[0u64; 5]; c];
    for (class, t) in out.iter_mut().enumerate() {
        let class = class as u8;
        for i in 0..gt.data().len() {
            let h = gt.data()[i];
            let p = pred.data()[i];
            let j = mask.data()[i] != 0;
            if h == IGNORE {
                continue;
            }
            if h == class && p == class {
                t[0] += 1;
            }
            if h != class && p == class {
                t[1] += 1;
            }
            if h == class && p != class && p != INVALID_SENTINEL {
                t[2] += 1;
            }
            if h == class && p == INVALID_SENTINEL && j {
                t[3] += 1;
            }
            if h == class && p == INVALID_SENTINEL && !j {
                t[4] += 1;
            }
        }
    }
    out
}

pub fn sum_tallies(a: &mut [[u64; 5]], b: &[[u64; 5]]) {
    for (x, y) in a.iter_mut().zip(b) {
        for k in 0..5 {
            x[k] += y[k];
        }
    }
}

/// Standard IoU per class, `None` for classes absent from both ground truth and prediction.
pub fn iou(t: &[u64; 5]) -> Option<f64> {
    let den = t[0] + t[1] + t[2];
    (den > 0).then(|| t[0] as f64 / den as f64)
}

pub fn uiou(t: &[u64; 5]) -> Option<f64> {
    let den = t[0] + t[1] + t[2] + t[3] + t[4];
    (den > 0).then(|| (t[0] + t[3]) as f64 / den as f64)
}

pub fn mean_defined(v: impl IntoIterator<Item = Option<f64>>) -> f64 {
    let d: Vec<f64> = v.into_iter().flatten().collect();
    d.iter().sum::<f64>() / d.len() as f64
}

/// Argmax (first maximum) kept where its probability reaches `theta`; nothing is dropped at
/// `theta <= 1/C`.
pub fn naive_threshold(soft: &SoftPrediction<f32>, theta: f32) -> LabelMap {
    let c = soft.channels();
    let min = 1.0 / c as f32;
    let data = soft
        .pixels()
        .map(|px| {
            let mut best = 0;
            for k in 1..c {
                if px[k] > px[best] {
                    best = k;
                }
            }
            if theta > min && px[best] < theta {
                INVALID_SENTINEL
            } else {
                best as u8
            }
        })
        .collect();
    LabelMap::new(soft.width(), soft.height(), data).unwrap()
}

/// Cross bilateral filter by direct summation in `f64` with a clipped square window.
pub fn direct_bilateral(
    src: &SoftPrediction<f64>,
    guide: &LabImage<f64>,
    sigma_s: f64,
    sigma_r: f64,
    radius: usize,
) -> Vec<f64> {
    let (w, h) = src.dims();
    let c = src.channels();
    let mut out = vec![0.0; w * h * c];
    for y in 0..h {
        for x in 0..w {
            let gp = guide.get(x, y);
            let mut acc = vec![0.0; c];
            let mut norm = 0.0;
            for qy in y.saturating_sub(radius)..=(y + radius).min(h - 1) {
                for qx in x.saturating_sub(radius)..=(x + radius).min(w - 1) {
                    let dx = qx as f64 - x as f64;
                    let dy = qy as f64 - y as f64;
                    let gq = guide.get(qx, qy);
                    let d2: f64 = (0..3).map(|k| (gq[k] - gp[k]).powi(2)).sum();
                    let wgt = (-(dx * dx + dy * dy) / (2.0 * sigma_s * sigma_s)).exp()
                        * (-d2 / (2.0 * sigma_r * sigma_r)).exp();
                    norm += wgt;
                    for (a, v) in acc.iter_mut().zip(src.pixel(qx, qy)) {
                        *a += wgt * v;
                    }
                }
            }
            let o = &mut out[(y * w + x) * c..][..c];
            for (o, a) in o.iter_mut().zip(acc) {
                *o = a / norm;
            }
        }
    }
    out
}

/// Plain Gaussian blur with the same clipped window and renormalization.
pub fn gaussian_blur(src: &SoftPrediction<f64>, sigma_s: f64, radius: usize) -> Vec<f64> {
    let (w, h) = src.dims();
    let c = src.channels();
    let mut out = vec![0.0; w * h * c];
    for y in 0..h {
        for x in 0..w {
            let mut norm = 0.0;
            let o = &mut out[(y * w + x) * c..][..c];
            for qy in y.saturating_sub(radius)..=(y + radius).min(h - 1) {
                for qx in x.saturating_sub(radius)..=(x + radius).min(w - 1) {
                    let r2 = (qx as f64 - x as f64).powi(2) + (qy as f64 - y as f64).powi(2);
                    let wgt = (-r2 / (2.0 * sigma_s * sigma_s)).exp();
                    norm += wgt;
                    for (o, v) in o.iter_mut().zip(src.pixel(qx, qy)) {
                        *o += wgt * v;
                    }
                }
            }
            for v in o.iter_mut() {
                *v /= norm;
            }
        }
    }
    out
}

pub fn random_soft64(r: &mut impl Rng, w: usize, h: usize, c: usize) -> SoftPrediction<f64> {
    SoftPrediction::from_fn(w, h, c, |_, _, px| {
        for v in px.iter_mut() {
            *v = r.gen_range(0.01..1.0);
        }
    })
    .unwrap()
}

pub fn random_lab(r: &mut impl Rng, w: usize, h: usize) -> LabImage<f64> {
    let data = (0..w * h)
        .map(|_| [r.gen_range(0.0..100.0), r.gen_range(-40.0..40.0), r.gen_range(-40.0..40.0)])
        .collect();
    LabImage::new(w, h, data).unwrap()
}

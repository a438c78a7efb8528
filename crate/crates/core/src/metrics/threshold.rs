use crate::error::{Error, Result};
use crate::scalar::Scalar;
use crate::types::{argmax, LabelMap, SoftPrediction, INVALID_SENTINEL};

/// Argmax labels and their confidences: everything thresholding needs from a soft prediction.
///
/// Labels may already hold [`INVALID_SENTINEL`]; such pixels stay invalid at every threshold.
#[derive(Debug, Clone, PartialEq)]
pub struct ScoredPrediction<T> {
    channels: usize,
    labels: LabelMap,
    confidence: Vec<T>,
}

impl<T: Scalar> ScoredPrediction<T> {
    pub fn from_soft(soft: &SoftPrediction<T>) -> Self {
        let (labels, confidence): (Vec<u8>, Vec<T>) = soft
            .pixels()
            .map(|px| {
                let (c, v) = argmax(px);
                (c as u8, v)
            })
            .unzip();
        Self {
            channels: soft.channels(),
            labels: LabelMap::new(soft.width(), soft.height(), labels).expect("sizes agree"),
            confidence,
        }
    }

    /// Hard predictions treated as one-hot distributions (confidence 1).
    pub fn from_hard(labels: LabelMap, channels: usize) -> Self {
        let confidence = vec![T::one(); labels.data().len()];
        Self {
            channels,
            labels,
            confidence,
        }
    }

    /// Explicit labels with their confidences.
    pub fn new(labels: LabelMap, confidence: Vec<T>, channels: usize) -> Result<Self> {
        if confidence.len() != labels.data().len() {
            return Err(Error::InvalidParameter(format!(
                "{} confidences for {} labels",
                confidence.len(),
                labels.data().len()
            )));
        }
        Ok(Self {
            channels,
            labels,
            confidence,
        })
    }

    pub fn channels(&self) -> usize {
        self.channels
    }

    pub fn labels(&self) -> &LabelMap {
        &self.labels
    }

    pub fn confidence(&self) -> &[T] {
        &self.confidence
    }

    pub fn dims(&self) -> (usize, usize) {
        self.labels.dims()
    }

    /// Lowest legal threshold `1/C`.
    pub fn min_theta(&self) -> T {
        T::one() / T::of(self.channels as f64)
    }

    /// Replaces labels whose confidence is below `theta` by the invalid sentinel.
    pub fn threshold(&self, theta: T) -> Result<LabelMap> {
        let min = check_theta(theta, self.channels)?;
        let mut out = self.labels.clone();
        // At 1/C nothing is invalidated, even where rounding puts the maximum a hair below 1/C.
        if theta <= min {
            return Ok(out);
        }
        for (l, &conf) in out.data_mut().iter_mut().zip(&self.confidence) {
            if conf < theta {
                *l = INVALID_SENTINEL;
            }
        }
        Ok(out)
    }
}

pub(crate) fn check_theta<T: Scalar>(theta: T, channels: usize) -> Result<T> {
    let min = T::one() / T::of(channels as f64);
    if !(theta >= min && theta <= T::one()) {
        return Err(Error::ThresholdOutOfRange {
            theta: theta.as_f64(),
            min: min.as_f64(),
        });
    }
    Ok(min)
}

/// Argmax class where its probability reaches `theta`, [`INVALID_SENTINEL`] elsewhere.
pub fn threshold_apply<T: Scalar>(soft: &SoftPrediction<T>, theta: T) -> Result<LabelMap> {
    ScoredPrediction::from_soft(soft).threshold(theta)
}

/// `n` evenly spaced thresholds from `1/C` to 1 inclusive.
pub fn uniform_theta_grid<T: Scalar>(channels: usize, n: usize) -> Result<Vec<T>> {
    let min = T::one() / T::of(channels as f64);
    match n {
        0 => Err(Error::InvalidParameter("theta grid needs at least one point".into())),
        1 => Ok(vec![min]),
        _ => {
            let step = (T::one() - min) / T::of((n - 1) as f64);
            let mut g: Vec<T> = (0..n).map(|k| min + step * T::of(k as f64)).collect();
            g[n - 1] = T::one();
            Ok(g)
        }
    }
}

/// Every threshold at which the thresholded output can change: `1/C`, each distinct
/// confidence above it, and 1.
pub fn exact_theta_grid<'a, T: Scalar>(
    channels: usize,
    scores: impl IntoIterator<Item = &'a ScoredPrediction<T>>,
) -> Vec<T> {
    let min = T::one() / T::of(channels as f64);
    let mut g = vec![min, T::one()];
    for s in scores {
        g.extend(s.confidence().iter().copied().filter(|&c| c > min && c <= T::one()));
    }
    g.sort_by(|a, b| a.partial_cmp(b).expect("confidences are finite"));
    g.dedup();
    g
}

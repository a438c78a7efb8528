//! Confidence-adaptive fusion of the dark-image prediction with the aligned daytime one.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::scalar::Scalar;
use crate::types::{argmax, ClassSet, SoftPrediction};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct FusionParams {
    /// Guidance weight where a dynamic-class prediction is contradicted.
    pub alpha_l: f64,
    /// Guidance weight elsewhere.
    pub alpha_h: f64,
    /// Probability at or below which the other prediction counts as disagreeing.
    pub eta: f64,
}

impl Default for FusionParams {
    fn default() -> Self {
        Self {
            alpha_l: 0.3,
            alpha_h: 0.6,
            eta: 0.2,
        }
    }
}

impl FusionParams {
    pub fn validate(&self) -> Result<()> {
        let ok = self.alpha_l > 0.0
            && self.alpha_l <= self.alpha_h
            && self.alpha_h <= 1.0
            && self.eta > 0.0
            && self.eta < 1.0;
        if !ok {
            return Err(Error::InvalidParameter(format!(
                "fusion parameters need 0 < alpha_l <= alpha_h <= 1 and 0 < eta < 1, got {self:?}"
            )));
        }
        Ok(())
    }
}

/// Per-pixel guidance weight, each value exactly `alpha_l` or `alpha_h`.
#[derive(Debug, Clone, PartialEq)]
pub struct AlphaMap<T> {
    width: usize,
    height: usize,
    data: Vec<T>,
}

impl<T: Scalar> AlphaMap<T> {
    pub fn constant(width: usize, height: usize, alpha: T) -> Self {
        Self {
            width,
            height,
            data: vec![alpha; width * height],
        }
    }

    pub fn dims(&self) -> (usize, usize) {
        (self.width, self.height)
    }

    pub fn data(&self) -> &[T] {
        &self.data
    }

    pub fn get(&self, x: usize, y: usize) -> T {
        self.data[y * self.width + x]
    }
}

/// The low weight applies where either prediction's top class is dynamic and the other
/// prediction gives that class at most `eta`.
#[inline]
pub fn pixel_alpha<T: Scalar>(day: &[T], dark: &[T], classes: &ClassSet, params: &FusionParams) -> T {
    let eta = T::of(params.eta);
    let (c1, _) = argmax(day);
    let (c2, _) = argmax(dark);
    let day_dynamic_unsupported = classes.is_dynamic(c1) && dark[c1] <= eta;
    let dark_dynamic_unsupported = classes.is_dynamic(c2) && day[c2] <= eta;
    if day_dynamic_unsupported || dark_dynamic_unsupported {
        T::of(params.alpha_l)
    } else {
        T::of(params.alpha_h)
    }
}

pub fn alpha_map<T: Scalar>(
    aligned_day: &SoftPrediction<T>,
    dark: &SoftPrediction<T>,
    classes: &ClassSet,
    params: &FusionParams,
) -> Result<AlphaMap<T>> {
    params.validate()?;
    check_pair(dark, aligned_day)?;
    if dark.channels() != classes.len() {
        return Err(Error::InvalidParameter(format!(
            "{} channels for {} classes",
            dark.channels(),
            classes.len()
        )));
    }
    let data = aligned_day
        .pixels()
        .zip(dark.pixels())
        .map(|(d1, dz)| pixel_alpha(d1, dz, classes, params))
        .collect();
    Ok(AlphaMap {
        width: dark.width(),
        height: dark.height(),
        data,
    })
}

fn check_pair<T: Scalar>(a: &SoftPrediction<T>, b: &SoftPrediction<T>) -> Result<()> {
    b.ensure_dims("aligned day vs dark prediction", a.dims())?;
    if a.channels() != b.channels() {
        return Err(Error::InvalidParameter(format!(
            "channel counts differ: {} vs {}",
            a.channels(),
            b.channels()
        )));
    }
    Ok(())
}

/// Weights `(w_dark, w_day)` for confidences `f_dark`, `f_day` and guidance weight `alpha`.
#[inline]
pub fn fusion_weights<T: Scalar>(f_dark: T, f_day: T, alpha: T) -> (T, T) {
    let guided = alpha * f_day;
    let den = f_dark + guided;
    (f_dark / den, guided / den)
}

/// Per pixel `w_dark * dark + w_day * aligned_day`, weights from [`fusion_weights`].
pub fn fuse<T: Scalar>(
    dark: &SoftPrediction<T>,
    aligned_day: &SoftPrediction<T>,
    alpha: &AlphaMap<T>,
) -> Result<SoftPrediction<T>> {
    check_pair(dark, aligned_day)?;
    if alpha.dims() != dark.dims() {
        return Err(Error::dims("alpha map vs dark prediction", dark.dims(), alpha.dims()));
    }
    let ch = dark.channels();
    let mut out = Vec::with_capacity(dark.data().len());
    for ((dz, d1), &a) in dark.pixels().zip(aligned_day.pixels()).zip(alpha.data()) {
        let (wz, w1) = fusion_weights(argmax(dz).1, argmax(d1).1, a);
        out.extend(dz.iter().zip(d1).map(|(&z, &o)| wz * z + w1 * o));
    }
    Ok(SoftPrediction::from_parts_unchecked(dark.width(), dark.height(), ch, out))
}

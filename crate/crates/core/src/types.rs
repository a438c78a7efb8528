//! Rasters, class sets and soft predictions shared by every stage.

use std::collections::BTreeSet;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::scalar::Scalar;

/// Raster value marking a pixel predicted as invalid.
pub const INVALID_SENTINEL: u8 = 254;

/// Raster value for unlabeled pixels.
pub const DEFAULT_IGNORE: u8 = 255;

/// Tolerance on the channel sum of a soft prediction accepted at ingestion.
pub const NORMALIZATION_TOLERANCE: f64 = 1e-3;

/// Cityscapes evaluation classes in trainId order.
pub const CITYSCAPES_CLASSES: [&str; 19] = [
    "road",
    "sidewalk",
    "building",
    "wall",
    "fence",
    "pole",
    "traffic light",
    "traffic sign",
    "vegetation",
    "terrain",
    "sky",
    "person",
    "rider",
    "car",
    "truck",
    "bus",
    "train",
    "motorcycle",
    "bicycle",
];

/// Movable Cityscapes classes used as the default dynamic subset.
pub const CITYSCAPES_DYNAMIC: [&str; 8] = [
    "person",
    "rider",
    "car",
    "truck",
    "bus",
    "train",
    "motorcycle",
    "bicycle",
];

/// Ordered set of evaluation classes, the dynamic subset, and the ignore value.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ClassSet {
    names: Vec<String>,
    dynamic: Vec<bool>,
    ignore_value: u8,
}

/// Serialized form of a [`ClassSet`]; dynamic classes are given by name.
#[derive(Debug, Clone, Serialize, Deserialize, PartialEq)]
#[serde(deny_unknown_fields)]
pub struct ClassSetConfig {
    pub names: Vec<String>,
    #[serde(default)]
    pub dynamic: Vec<String>,
    #[serde(default = "default_ignore")]
    pub ignore_value: u8,
}

fn default_ignore() -> u8 {
    DEFAULT_IGNORE
}

impl ClassSet {
    pub fn new(names: Vec<String>, dynamic: &BTreeSet<usize>, ignore_value: u8) -> Result<Self> {
        let c = names.len();
        if c < 2 {
            return Err(Error::ClassSet(format!("need at least 2 classes, got {c}")));
        }
        // Class indices must stay below the invalid sentinel.
        if c > INVALID_SENTINEL as usize {
            return Err(Error::ClassSet(format!(
                "at most {INVALID_SENTINEL} classes fit an 8-bit raster, got {c}"
            )));
        }
        if (ignore_value as usize) < c {
            return Err(Error::ClassSet(format!(
                "ignore value {ignore_value} collides with a class index"
            )));
        }
        if ignore_value == INVALID_SENTINEL {
            return Err(Error::ClassSet(
                "ignore value collides with the invalid sentinel".into(),
            ));
        }
        let mut seen = BTreeSet::new();
        for n in &names {
            if !seen.insert(n.as_str()) {
                return Err(Error::ClassSet(format!("duplicate class name {n:?}")));
            }
        }
        let mut flags = vec![false; c];
        for &d in dynamic {
            if d >= c {
                return Err(Error::ClassSet(format!("dynamic class index {d} out of range")));
            }
            flags[d] = true;
        }
        Ok(Self {
            names,
            dynamic: flags,
            ignore_value,
        })
    }

    /// 19 Cityscapes evaluation classes, movable classes dynamic, ignore 255.
    pub fn cityscapes() -> Self {
        Self::from_config(&ClassSetConfig::default()).expect("built-in class set is valid")
    }

    pub fn from_config(cfg: &ClassSetConfig) -> Result<Self> {
        let mut dynamic = BTreeSet::new();
        for name in &cfg.dynamic {
            let idx = cfg
                .names
                .iter()
                .position(|n| n == name)
                .ok_or_else(|| Error::ClassSet(format!("unknown dynamic class {name:?}")))?;
            dynamic.insert(idx);
        }
        Self::new(cfg.names.clone(), &dynamic, cfg.ignore_value)
    }

    pub fn to_config(&self) -> ClassSetConfig {
        ClassSetConfig {
            names: self.names.clone(),
            dynamic: self
                .dynamic_indices()
                .map(|i| self.names[i].clone())
                .collect(),
            ignore_value: self.ignore_value,
        }
    }

    /// Anonymous class set `class0..class{n-1}` with no dynamic classes.
    pub fn numbered(n: usize) -> Result<Self> {
        Self::new(
            (0..n).map(|i| format!("class{i}")).collect(),
            &BTreeSet::new(),
            DEFAULT_IGNORE,
        )
    }

    pub fn len(&self) -> usize {
        self.names.len()
    }

    pub fn is_empty(&self) -> bool {
        self.names.is_empty()
    }

    pub fn names(&self) -> &[String] {
        &self.names
    }

    pub fn ignore_value(&self) -> u8 {
        self.ignore_value
    }

    pub fn is_dynamic(&self, class: usize) -> bool {
        self.dynamic.get(class).copied().unwrap_or(false)
    }

    pub fn dynamic_indices(&self) -> impl Iterator<Item = usize> + '_ {
        self.dynamic
            .iter()
            .enumerate()
            .filter_map(|(i, &d)| d.then_some(i))
    }

    pub fn index_of(&self, name: &str) -> Option<usize> {
        self.names.iter().position(|n| n == name)
    }

    /// Lowest legal confidence threshold, `1/C`.
    pub fn min_theta<T: Scalar>(&self) -> T {
        T::one() / T::of(self.len() as f64)
    }

    /// Whether `value` may appear in a ground-truth raster.
    pub fn is_legal_gt(&self, value: u8) -> bool {
        (value as usize) < self.len() || value == self.ignore_value
    }

    /// Whether `value` may appear in a predicted raster.
    pub fn is_legal_prediction(&self, value: u8) -> bool {
        self.is_legal_gt(value) || value == INVALID_SENTINEL
    }
}

impl Default for ClassSetConfig {
    fn default() -> Self {
        Self {
            names: CITYSCAPES_CLASSES.iter().map(|s| s.to_string()).collect(),
            dynamic: CITYSCAPES_DYNAMIC.iter().map(|s| s.to_string()).collect(),
            ignore_value: DEFAULT_IGNORE,
        }
    }
}

impl Default for ClassSet {
    fn default() -> Self {
        Self::cityscapes()
    }
}

fn check_len(len: usize, width: usize, height: usize, per_pixel: usize) -> Result<()> {
    if len != width * height * per_pixel {
        return Err(Error::InvalidParameter(format!(
            "buffer of {len} values does not match {width}x{height}x{per_pixel}"
        )));
    }
    Ok(())
}

/// Per-pixel hard labels: class indices, the ignore value, or [`INVALID_SENTINEL`].
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct LabelMap {
    width: usize,
    height: usize,
    data: Vec<u8>,
}

impl LabelMap {
    pub fn new(width: usize, height: usize, data: Vec<u8>) -> Result<Self> {
        check_len(data.len(), width, height, 1)?;
        Ok(Self {
            width,
            height,
            data,
        })
    }

    pub fn filled(width: usize, height: usize, value: u8) -> Self {
        Self {
            width,
            height,
            data: vec![value; width * height],
        }
    }

    pub fn width(&self) -> usize {
        self.width
    }

    pub fn height(&self) -> usize {
        self.height
    }

    pub fn dims(&self) -> (usize, usize) {
        (self.width, self.height)
    }

    pub fn data(&self) -> &[u8] {
        &self.data
    }

    pub fn data_mut(&mut self) -> &mut [u8] {
        &mut self.data
    }

    pub fn into_data(self) -> Vec<u8> {
        self.data
    }

    pub fn get(&self, x: usize, y: usize) -> u8 {
        self.data[y * self.width + x]
    }

    pub fn set(&mut self, x: usize, y: usize, v: u8) {
        self.data[y * self.width + x] = v;
    }

    /// Every pixel failing `legal`, as (x, y, value).
    pub fn illegal_pixels(&self, legal: impl Fn(u8) -> bool) -> Vec<(usize, usize, u8)> {
        self.data
            .iter()
            .enumerate()
            .filter(|(_, &v)| !legal(v))
            .map(|(i, &v)| (i % self.width, i / self.width, v))
            .collect()
    }

    /// Fails with an itemized error unless this is a legal ground-truth map.
    pub fn check_ground_truth(&self, classes: &ClassSet) -> Result<()> {
        itemize("ground truth", self.illegal_pixels(|v| classes.is_legal_gt(v)))
    }

    /// Fails with an itemized error unless this is a legal predicted map.
    pub fn check_prediction(&self, classes: &ClassSet) -> Result<()> {
        itemize("prediction", self.illegal_pixels(|v| classes.is_legal_prediction(v)))
    }
}

const MAX_ITEMIZED: usize = 32;

fn itemize(what: &str, mut bad: Vec<(usize, usize, u8)>) -> Result<()> {
    if bad.is_empty() {
        return Ok(());
    }
    let count = bad.len();
    bad.truncate(MAX_ITEMIZED);
    Err(Error::IllegalValues {
        what: what.to_string(),
        count,
        pixels: bad,
    })
}

/// Binary invalid-region mask: 0 valid, 1 invalid.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct InvalidMask {
    width: usize,
    height: usize,
    data: Vec<u8>,
}

impl InvalidMask {
    /// Builds a mask from a raster, mapping 255 to 1. Any value other than 0, 1, 255 is rejected.
    pub fn from_raster(width: usize, height: usize, mut data: Vec<u8>) -> Result<Self> {
        check_len(data.len(), width, height, 1)?;
        let bad: Vec<_> = data
            .iter()
            .enumerate()
            .filter(|(_, &v)| !matches!(v, 0 | 1 | 255))
            .map(|(i, &v)| (i % width, i / width, v))
            .collect();
        itemize("invalid mask", bad)?;
        for v in &mut data {
            *v = u8::from(*v != 0);
        }
        Ok(Self {
            width,
            height,
            data,
        })
    }

    pub fn from_bools(width: usize, height: usize, bits: &[bool]) -> Result<Self> {
        check_len(bits.len(), width, height, 1)?;
        Ok(Self {
            width,
            height,
            data: bits.iter().map(|&b| u8::from(b)).collect(),
        })
    }

    pub fn all_valid(width: usize, height: usize) -> Self {
        Self {
            width,
            height,
            data: vec![0; width * height],
        }
    }

    pub fn all_invalid(width: usize, height: usize) -> Self {
        Self {
            width,
            height,
            data: vec![1; width * height],
        }
    }

    pub fn width(&self) -> usize {
        self.width
    }

    pub fn height(&self) -> usize {
        self.height
    }

    pub fn dims(&self) -> (usize, usize) {
        (self.width, self.height)
    }

    pub fn data(&self) -> &[u8] {
        &self.data
    }

    pub fn is_invalid(&self, x: usize, y: usize) -> bool {
        self.data[y * self.width + x] != 0
    }
}

/// Summary returned by [`validate_pair`].
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct PairReport {
    pub width: usize,
    pub height: usize,
    pub labeled_pixels: u64,
    pub invalid_labeled_pixels: u64,
    /// Fraction of labeled pixels inside the invalid mask; 0 when nothing is labeled.
    pub invalid_fraction: f64,
}

/// Checks that a ground-truth map and its invalid mask are consistent.
pub fn validate_pair(labels: &LabelMap, mask: &InvalidMask, classes: &ClassSet) -> Result<PairReport> {
    if labels.dims() != mask.dims() {
        return Err(Error::dims("invalid mask vs labels", labels.dims(), mask.dims()));
    }
    labels.check_ground_truth(classes)?;
    let ignore = classes.ignore_value();
    let (mut labeled, mut invalid) = (0u64, 0u64);
    for (&l, &j) in labels.data().iter().zip(mask.data()) {
        if l != ignore {
            labeled += 1;
            invalid += u64::from(j);
        }
    }
    Ok(PairReport {
        width: labels.width(),
        height: labels.height(),
        labeled_pixels: labeled,
        invalid_labeled_pixels: invalid,
        invalid_fraction: if labeled == 0 {
            0.0
        } else {
            invalid as f64 / labeled as f64
        },
    })
}

/// Per-pixel probability distribution over `channels` classes, stored pixel-interleaved.
#[derive(Debug, Clone, PartialEq)]
pub struct SoftPrediction<T> {
    width: usize,
    height: usize,
    channels: usize,
    data: Vec<T>,
}

impl<T: Scalar> SoftPrediction<T> {
    /// Validates non-negativity, finiteness and the channel-sum tolerance. Values are kept as given.
    pub fn new(width: usize, height: usize, channels: usize, data: Vec<T>) -> Result<Self> {
        if channels < 2 {
            return Err(Error::InvalidParameter(format!(
                "soft prediction needs at least 2 channels, got {channels}"
            )));
        }
        check_len(data.len(), width, height, channels)?;
        let tol = T::of(NORMALIZATION_TOLERANCE);
        for (i, px) in data.chunks_exact(channels).enumerate() {
            let (x, y) = (i % width, i / width);
            if let Some(c) = px.iter().position(|v| !v.is_finite() || *v < T::zero()) {
                return Err(Error::BadProbability { x, y, channel: c });
            }
            let sum: T = px.iter().copied().sum();
            if (sum - T::one()).abs() > tol {
                return Err(Error::Normalization {
                    x,
                    y,
                    sum: sum.as_f64(),
                    tolerance: NORMALIZATION_TOLERANCE,
                });
            }
        }
        Ok(Self {
            width,
            height,
            channels,
            data,
        })
    }

    /// Like [`SoftPrediction::new`] followed by [`SoftPrediction::renormalize`].
    pub fn new_normalized(width: usize, height: usize, channels: usize, data: Vec<T>) -> Result<Self> {
        let mut s = Self::new(width, height, channels, data)?;
        s.renormalize();
        Ok(s)
    }

    /// Skips validation. Callers guarantee each pixel already is a distribution.
    pub(crate) fn from_parts_unchecked(width: usize, height: usize, channels: usize, data: Vec<T>) -> Self {
        debug_assert_eq!(data.len(), width * height * channels);
        Self {
            width,
            height,
            channels,
            data,
        }
    }

    /// Builds a tensor pixel by pixel; `f(x, y, out)` fills non-negative scores that are
    /// then normalized. An all-zero pixel is rejected.
    pub fn from_fn(
        width: usize,
        height: usize,
        channels: usize,
        mut f: impl FnMut(usize, usize, &mut [T]),
    ) -> Result<Self> {
        let mut data = vec![T::zero(); width * height * channels];
        for (i, px) in data.chunks_exact_mut(channels).enumerate() {
            f(i % width, i / width, px);
            normalize_slice(px);
        }
        Self::new(width, height, channels, data)
    }

    /// Uniform distribution at every pixel.
    pub fn uniform(width: usize, height: usize, channels: usize) -> Self {
        let v = T::one() / T::of(channels as f64);
        Self::from_parts_unchecked(width, height, channels, vec![v; width * height * channels])
    }

    /// One-hot distributions from class labels. Labels must be below `channels`.
    pub fn one_hot(labels: &LabelMap, channels: usize) -> Result<Self> {
        let mut data = vec![T::zero(); labels.data().len() * channels];
        for (i, &l) in labels.data().iter().enumerate() {
            if l as usize >= channels {
                return Err(Error::IllegalValue {
                    what: "one-hot source".into(),
                    x: i % labels.width(),
                    y: i / labels.width(),
                    value: l,
                });
            }
            data[i * channels + l as usize] = T::one();
        }
        Ok(Self::from_parts_unchecked(labels.width(), labels.height(), channels, data))
    }

    pub fn width(&self) -> usize {
        self.width
    }

    pub fn height(&self) -> usize {
        self.height
    }

    pub fn channels(&self) -> usize {
        self.channels
    }

    pub fn dims(&self) -> (usize, usize) {
        (self.width, self.height)
    }

    pub fn pixel_count(&self) -> usize {
        self.width * self.height
    }

    /// Pixel-interleaved storage, `channels` values per pixel in row-major pixel order.
    pub fn data(&self) -> &[T] {
        &self.data
    }

    pub fn into_data(self) -> Vec<T> {
        self.data
    }

    pub fn pixel(&self, x: usize, y: usize) -> &[T] {
        let i = (y * self.width + x) * self.channels;
        &self.data[i..i + self.channels]
    }

    pub fn pixels(&self) -> std::slice::ChunksExact<'_, T> {
        self.data.chunks_exact(self.channels)
    }

    /// Divides every pixel by its channel sum.
    pub fn renormalize(&mut self) {
        for px in self.data.chunks_exact_mut(self.channels) {
            normalize_slice(px);
        }
    }

    /// Per-pixel channel maximum.
    pub fn confidence_map(&self) -> ConfidenceMap<T> {
        ConfidenceMap {
            width: self.width,
            height: self.height,
            data: self.pixels().map(|px| argmax(px).1).collect(),
        }
    }

    /// Per-pixel argmax, ties broken toward the lowest class index.
    pub fn argmax(&self) -> LabelMap {
        LabelMap {
            width: self.width,
            height: self.height,
            data: self.pixels().map(|px| argmax(px).0 as u8).collect(),
        }
    }

    pub fn ensure_dims(&self, what: &str, dims: (usize, usize)) -> Result<()> {
        if self.dims() != dims {
            return Err(Error::dims(what, dims, self.dims()));
        }
        Ok(())
    }
}

pub(crate) fn normalize_slice<T: Scalar>(px: &mut [T]) {
    let sum: T = px.iter().copied().sum();
    if sum > T::zero() {
        for v in px.iter_mut() {
            *v = *v / sum;
        }
    }
}

/// Index and value of the channel maximum; the first maximal index wins ties.
#[inline]
pub fn argmax<T: Scalar>(px: &[T]) -> (usize, T) {
    let mut best = 0;
    let mut best_v = px[0];
    for (i, &v) in px.iter().enumerate().skip(1) {
        if v > best_v {
            best = i;
            best_v = v;
        }
    }
    (best, best_v)
}

/// Per-pixel prediction confidence, the maximum class probability, in `[1/C, 1]`.
#[derive(Debug, Clone, PartialEq)]
pub struct ConfidenceMap<T> {
    width: usize,
    height: usize,
    data: Vec<T>,
}

impl<T: Scalar> ConfidenceMap<T> {
    pub fn new(width: usize, height: usize, data: Vec<T>) -> Result<Self> {
        check_len(data.len(), width, height, 1)?;
        Ok(Self {
            width,
            height,
            data,
        })
    }

    pub fn width(&self) -> usize {
        self.width
    }

    pub fn height(&self) -> usize {
        self.height
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

//! Agreement between two independent annotations of the same images.

use serde::Serialize;

use crate::error::{Error, Result};
use crate::types::{ClassSet, InvalidMask, LabelMap};

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize)]
pub struct ConsistencyCounts {
    /// Pixels labeled in both annotations.
    pub jointly_labeled: u64,
    /// Jointly labeled pixels with the same class.
    pub semantic_agree: u64,
    pub mask_pixels: u64,
    pub mask_agree: u64,
}

impl ConsistencyCounts {
    pub fn merge(&mut self, o: &ConsistencyCounts) {
        self.jointly_labeled += o.jointly_labeled;
        self.semantic_agree += o.semantic_agree;
        self.mask_pixels += o.mask_pixels;
        self.mask_agree += o.mask_agree;
    }

    /// Semantic agreement in percent; `None` without jointly labeled pixels.
    pub fn semantic_percent(&self) -> Option<f64> {
        (self.jointly_labeled > 0).then(|| 100.0 * self.semantic_agree as f64 / self.jointly_labeled as f64)
    }

    pub fn mask_percent(&self) -> Option<f64> {
        (self.mask_pixels > 0).then(|| 100.0 * self.mask_agree as f64 / self.mask_pixels as f64)
    }
}

pub fn annotation_consistency(
    a: (&LabelMap, &InvalidMask),
    b: (&LabelMap, &InvalidMask),
    classes: &ClassSet,
) -> Result<ConsistencyCounts> {
    let dims = a.0.dims();
    for (what, d) in [("first mask", a.1.dims()), ("second labels", b.0.dims()), ("second mask", b.1.dims())] {
        if d != dims {
            return Err(Error::dims(what, dims, d));
        }
    }
    let ignore = classes.ignore_value();
    let mut c = ConsistencyCounts::default();
    for (&la, &lb) in a.0.data().iter().zip(b.0.data()) {
        if la != ignore && lb != ignore {
            c.jointly_labeled += 1;
            c.semantic_agree += u64::from(la == lb);
        }
    }
    c.mask_pixels = a.1.data().len() as u64;
    c.mask_agree = a.1.data().iter().zip(b.1.data()).filter(|(x, y)| x == y).count() as u64;
    Ok(c)
}

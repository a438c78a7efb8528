//! sRGB (8-bit) to CIELAB conversion under D65.

use crate::error::{Error, Result};
use crate::scalar::Scalar;

/// 8-bit sRGB image, row-major.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct RgbImage {
    width: usize,
    height: usize,
    data: Vec<[u8; 3]>,
}

impl RgbImage {
    pub fn new(width: usize, height: usize, data: Vec<[u8; 3]>) -> Result<Self> {
        if data.len() != width * height {
            return Err(Error::InvalidParameter(format!(
                "{} pixels do not match {width}x{height}",
                data.len()
            )));
        }
        Ok(Self {
            width,
            height,
            data,
        })
    }

    pub fn filled(width: usize, height: usize, rgb: [u8; 3]) -> Self {
        Self {
            width,
            height,
            data: vec![rgb; width * height],
        }
    }

    pub fn from_fn(width: usize, height: usize, mut f: impl FnMut(usize, usize) -> [u8; 3]) -> Self {
        let data = (0..width * height).map(|i| f(i % width, i / width)).collect();
        Self {
            width,
            height,
            data,
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

    pub fn data(&self) -> &[[u8; 3]] {
        &self.data
    }

    pub fn get(&self, x: usize, y: usize) -> [u8; 3] {
        self.data[y * self.width + x]
    }
}

/// CIELAB image: L in [0, 100], a and b roughly within ±128.
#[derive(Debug, Clone, PartialEq)]
pub struct LabImage<T> {
    width: usize,
    height: usize,
    data: Vec<[T; 3]>,
}

impl<T: Scalar> LabImage<T> {
    pub fn new(width: usize, height: usize, data: Vec<[T; 3]>) -> Result<Self> {
        if data.len() != width * height {
            return Err(Error::InvalidParameter(format!(
                "{} pixels do not match {width}x{height}",
                data.len()
            )));
        }
        Ok(Self {
            width,
            height,
            data,
        })
    }

    pub fn filled(width: usize, height: usize, lab: [T; 3]) -> Self {
        Self {
            width,
            height,
            data: vec![lab; width * height],
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

    pub fn data(&self) -> &[[T; 3]] {
        &self.data
    }

    pub fn get(&self, x: usize, y: usize) -> [T; 3] {
        self.data[y * self.width + x]
    }
}

// sRGB primaries to XYZ, D65. Row sums give the reference white.
const RGB_TO_XYZ: [[f64; 3]; 3] = [
    [0.4124564, 0.3575761, 0.1804375],
    [0.2126729, 0.7151522, 0.0721750],
    [0.0193339, 0.1191920, 0.9503041],
];
const WHITE: [f64; 3] = [0.95047, 1.0, 1.08883];
const EPSILON: f64 = 216.0 / 24389.0;
const KAPPA: f64 = 24389.0 / 27.0;

/// Inverse sRGB transfer function for an 8-bit code value.
fn linearize(v: u8) -> f64 {
    let c = v as f64 / 255.0;
    if c <= 0.04045 {
        c / 12.92
    } else {
        ((c + 0.055) / 1.055).powf(2.4)
    }
}

#[inline]
fn lab_f<T: Scalar>(t: T) -> T {
    if t > T::of(EPSILON) {
        t.cbrt()
    } else {
        (T::of(KAPPA) * t + T::of(16.0)) / T::of(116.0)
    }
}

/// Converts one linear-RGB triple to Lab.
#[inline]
fn linear_to_lab<T: Scalar>(lin: [T; 3]) -> [T; 3] {
    let mut f = [T::zero(); 3];
    for (k, row) in RGB_TO_XYZ.iter().enumerate() {
        let xyz = T::of(row[0]) * lin[0] + T::of(row[1]) * lin[1] + T::of(row[2]) * lin[2];
        f[k] = lab_f(xyz / T::of(WHITE[k]));
    }
    let l = (T::of(116.0) * f[1] - T::of(16.0)).max(T::zero()).min(T::of(100.0));
    [
        l,
        T::of(500.0) * (f[0] - f[1]),
        T::of(200.0) * (f[1] - f[2]),
    ]
}

/// Converts a single 8-bit sRGB colour to CIELAB.
pub fn srgb_to_lab<T: Scalar>(rgb: [u8; 3]) -> [T; 3] {
    linear_to_lab(rgb.map(|v| T::of(linearize(v))))
}

/// Converts every pixel of an sRGB image to CIELAB.
pub fn rgb_to_cielab<T: Scalar>(img: &RgbImage) -> LabImage<T> {
    let lut: Vec<T> = (0..=255u8).map(|v| T::of(linearize(v))).collect();
    let data = img
        .data()
        .iter()
        .map(|px| linear_to_lab(px.map(|v| lut[v as usize])))
        .collect();
    LabImage {
        width: img.width(),
        height: img.height(),
        data,
    }
}

//! Cross bilateral filtering of a soft prediction, guided by a CIELAB reference image.
//!
//! Each output pixel is the normalized sum over a square window of
//! `G_s(|q - p|) * G_r(|Lab(q) - Lab(p)|) * S(q)`. The window has half-width
//! `ceil(truncation * sigma_s)` and is clipped at the image border.
//!
//! Range weights below `exp(-30)` are treated as zero.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::color::LabImage;
use crate::error::{Error, Result};
use crate::scalar::Scalar;
use crate::types::{normalize_slice, SoftPrediction};

/// Images at least this large are filtered at reduced resolution unless a factor is given.
pub const AUTO_DOWNSAMPLE_PIXELS: usize = 1_000_000;
pub const AUTO_DOWNSAMPLE_FACTOR: usize = 4;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct BilateralParams {
    /// Spatial standard deviation in pixels.
    pub sigma_s: f64,
    /// Range standard deviation in CIELAB units.
    pub sigma_r: f64,
    /// Window half-width as a multiple of `sigma_s`.
    pub truncation: f64,
    /// Integer downsampling factor for the fast path. `None` picks
    /// [`AUTO_DOWNSAMPLE_FACTOR`] for images of at least [`AUTO_DOWNSAMPLE_PIXELS`] pixels.
    pub downsample: Option<usize>,
}

impl Default for BilateralParams {
    fn default() -> Self {
        Self {
            sigma_s: 80.0,
            sigma_r: 10.0,
            truncation: 2.5,
            downsample: None,
        }
    }
}

impl BilateralParams {
    /// Full-resolution filtering with the default truncation.
    pub fn exact(sigma_s: f64, sigma_r: f64) -> Self {
        Self {
            sigma_s,
            sigma_r,
            downsample: Some(1),
            ..Self::default()
        }
    }

    pub fn validate(&self) -> Result<()> {
        let positive = |v: f64| v.is_finite() && v > 0.0;
        if !positive(self.sigma_s) || !positive(self.sigma_r) {
            return Err(Error::InvalidParameter(format!(
                "bilateral sigmas must be positive, got sigma_s={} sigma_r={}",
                self.sigma_s, self.sigma_r
            )));
        }
        if !positive(self.truncation) {
            return Err(Error::InvalidParameter("truncation factor must be positive".into()));
        }
        if self.downsample == Some(0) {
            return Err(Error::InvalidParameter("downsample factor must be >= 1".into()));
        }
        Ok(())
    }

    pub fn radius(&self) -> usize {
        (self.truncation * self.sigma_s).ceil() as usize
    }

    pub fn downsample_for(&self, width: usize, height: usize) -> usize {
        self.downsample.unwrap_or(if width * height >= AUTO_DOWNSAMPLE_PIXELS {
            AUTO_DOWNSAMPLE_FACTOR
        } else {
            1
        })
    }
}

const RANGE_CUTOFF_EXPONENT: f64 = 30.0;

struct RangeKernel<T> {
    neg_inv_two_var: T,
    floor: T,
}

impl<T: Scalar> RangeKernel<T> {
    fn new(sigma_r: f64) -> Self {
        Self {
            neg_inv_two_var: T::of(-1.0 / (2.0 * sigma_r * sigma_r)),
            floor: T::of(-RANGE_CUTOFF_EXPONENT),
        }
    }

    #[inline(always)]
    fn weight(&self, d2: T) -> T {
        let x = d2 * self.neg_inv_two_var;
        let e = T::exp_nonpositive(x.max(self.floor));
        if x < self.floor {
            T::zero()
        } else {
            e
        }
    }
}

/// Aligns `day` to the reference image: cross bilateral filter of each class channel.
pub fn cross_bilateral_align<T: Scalar>(
    day: &SoftPrediction<T>,
    guide: &LabImage<T>,
    params: &BilateralParams,
) -> Result<SoftPrediction<T>> {
    params.validate()?;
    day.ensure_dims("day prediction vs reference image", guide.dims())?;
    let (w, h) = day.dims();
    let factor = params.downsample_for(w, h).min(w.max(h)).max(1);
    if factor == 1 {
        return Ok(filter_full(day, guide, params.sigma_s, params.sigma_r, params.radius()));
    }
    let small_day = downsample_soft(day, factor);
    let small_guide = downsample_lab(guide, factor);
    let sigma_s = params.sigma_s / factor as f64;
    let radius = (params.truncation * sigma_s).ceil() as usize;
    let filtered = filter_full(&small_day, &small_guide, sigma_s, params.sigma_r, radius);
    Ok(upsample_bilinear(&filtered, w, h, factor))
}

/// Filter at the input resolution. Output pixels are computed independently, so the
/// row-parallel result is bit-identical to a serial run.
fn filter_full<T: Scalar>(
    day: &SoftPrediction<T>,
    guide: &LabImage<T>,
    sigma_s: f64,
    sigma_r: f64,
    radius: usize,
) -> SoftPrediction<T> {
    let (w, h) = day.dims();
    let ch = day.channels();
    let r = radius.min(w.max(h));
    // window width rounded up to whole vectors; the extra columns get zero spatial weight
    let span = (2 * r + 1).div_ceil(BLOCK) * BLOCK;
    // r columns of padding on the left and at least r on the right, so every window is
    // a full contiguous run; padded pixels have all-zero data and contribute nothing
    let wp = w + span;

    // pixel-interleaved, padded to whole vector blocks; channel `ch` is a constant 1
    // whose weighted sum is the normalizer
    let cp = (ch + 1).div_ceil(BLOCK) * BLOCK;
    let mut src = vec![T::zero(); wp * h * cp];
    let mut lab = vec![vec![T::zero(); wp * h]; 3];
    for y in 0..h {
        for x in 0..w {
            let q = y * wp + x + r;
            let dst = &mut src[q * cp..(q + 1) * cp];
            dst[..ch].copy_from_slice(day.pixel(x, y));
            dst[ch] = T::one();
            let g = guide.get(x, y);
            for k in 0..3 {
                lab[k][q] = g[k];
            }
        }
    }

    let inv_two_var_s = 1.0 / (2.0 * sigma_s * sigma_s);
    let full = 2 * r + 1;
    let spatial: Vec<T> = (0..full * span)
        .map(|i| {
            let (dy, dx) = ((i / span) as f64 - r as f64, (i % span) as f64 - r as f64);
            if i % span < full {
                T::of((-(dx * dx + dy * dy) * inv_two_var_s).exp())
            } else {
                T::zero()
            }
        })
        .collect();
    let range = RangeKernel::<T>::new(sigma_r);

    let k = Kernel {
        w,
        h,
        wp,
        ch,
        cp,
        r,
        span,
        src: &src,
        gl: &lab[0],
        ga: &lab[1],
        gb: &lab[2],
        spatial: &spatial,
        range: &range,
    };
    let wide = wide_vectors_available();
    let mut out = vec![T::zero(); w * h * ch];
    out.par_chunks_mut(w * ch).enumerate().for_each(|(y, row_out)| {
        if wide {
            // SAFETY: the required CPU features were detected at runtime
            #[cfg(target_arch = "x86_64")]
            unsafe {
                filter_row_avx2(&k, y, row_out)
            }
        } else {
            filter_row(&k, y, row_out)
        }
    });
    SoftPrediction::from_parts_unchecked(w, h, ch, out)
}

struct Kernel<'a, T> {
    w: usize,
    h: usize,
    /// Row stride of the padded arrays.
    wp: usize,
    ch: usize,
    cp: usize,
    r: usize,
    span: usize,
    src: &'a [T],
    gl: &'a [T],
    ga: &'a [T],
    gb: &'a [T],
    spatial: &'a [T],
    range: &'a RangeKernel<T>,
}

fn wide_vectors_available() -> bool {
    #[cfg(target_arch = "x86_64")]
    {
        std::arch::is_x86_feature_detected!("avx2") && std::arch::is_x86_feature_detected!("fma")
    }
    #[cfg(not(target_arch = "x86_64"))]
    {
        false
    }
}

// Same code as `filter_row`, compiled for wider vectors. Rust neither fuses nor
// reassociates float operations, so both produce identical bits.
#[cfg(target_arch = "x86_64")]
#[target_feature(enable = "avx2,fma")]
unsafe fn filter_row_avx2<T: Scalar>(k: &Kernel<T>, y: usize, row_out: &mut [T]) {
    filter_row(k, y, row_out)
}

#[inline(always)]
fn filter_row<T: Scalar>(k: &Kernel<T>, y: usize, row_out: &mut [T]) {
    let Kernel {
        w,
        h,
        wp,
        ch,
        cp,
        r,
        span,
        src,
        gl,
        ga,
        gb,
        spatial,
        range,
    } = *k;
    let mut weights = vec![T::zero(); span];
    let mut acc = vec![T::zero(); w * cp];
    // window rows outermost: one source row stays in cache for the whole output row
    let y0 = y.saturating_sub(r);
    let y1 = (y + r).min(h - 1);
    for qy in y0..=y1 {
        let srow = &spatial[(qy + r - y) * span..][..span];
        for x in 0..w {
            let p = y * wp + x + r;
            let (lp, ap, bp) = (gl[p], ga[p], gb[p]);
            // padded column x is the left edge of the window centred on x
            let q0 = qy * wp + x;
            let (rl, ra, rb) = (&gl[q0..q0 + span], &ga[q0..q0 + span], &gb[q0..q0 + span]);
            for k in 0..span {
                let (dl, da, db) = (rl[k] - lp, ra[k] - ap, rb[k] - bp);
                weights[k] = srow[k] * range.weight(dl * dl + da * da + db * db);
            }
            accumulate(&mut acc[x * cp..(x + 1) * cp], &weights, &src[q0 * cp..(q0 + span) * cp]);
        }
    }
    // the centre pixel contributes weight 1, so every normalizer is >= 1
    for (dst, a) in row_out.chunks_exact_mut(ch).zip(acc.chunks_exact(cp)) {
        let ws = a[ch];
        for (d, &v) in dst.iter_mut().zip(a) {
            *d = v / ws;
        }
        normalize_slice(dst);
    }
}

const BLOCK: usize = 8;

/// `acc += sum_k weights[k] * src[k]` over padded pixels, three blocks at a time.
#[inline(always)]
fn accumulate<T: Scalar>(acc: &mut [T], weights: &[T], src: &[T]) {
    let cp = acc.len();
    let mut b = 0;
    while b < cp {
        let left = (cp - b) / BLOCK;
        if left >= 3 {
            accumulate_group::<T, 3>(acc, weights, src, b);
            b += 3 * BLOCK;
        } else if left == 2 {
            accumulate_group::<T, 2>(acc, weights, src, b);
            b += 2 * BLOCK;
        } else {
            accumulate_group::<T, 1>(acc, weights, src, b);
            b += BLOCK;
        }
    }
}

#[inline(always)]
fn accumulate_group<T: Scalar, const G: usize>(acc: &mut [T], weights: &[T], src: &[T], offset: usize) {
    let cp = acc.len();
    // even and odd neighbours feed separate sums to halve the add dependency chain
    let mut even = [[T::zero(); BLOCK]; G];
    let mut odd = [[T::zero(); BLOCK]; G];
    let pairs = weights.len() / 2;
    for i in 0..pairs {
        let (w0, w1) = (weights[2 * i], weights[2 * i + 1]);
        let p0 = &src[2 * i * cp + offset..][..G * BLOCK];
        let p1 = &src[(2 * i + 1) * cp + offset..][..G * BLOCK];
        for g in 0..G {
            for j in 0..BLOCK {
                even[g][j] = even[g][j] + w0 * p0[g * BLOCK + j];
                odd[g][j] = odd[g][j] + w1 * p1[g * BLOCK + j];
            }
        }
    }
    if weights.len() % 2 == 1 {
        let last = weights.len() - 1;
        let wl = weights[last];
        let pl = &src[last * cp + offset..][..G * BLOCK];
        for g in 0..G {
            for j in 0..BLOCK {
                even[g][j] = even[g][j] + wl * pl[g * BLOCK + j];
            }
        }
    }
    for g in 0..G {
        for j in 0..BLOCK {
            let a = &mut acc[offset + g * BLOCK + j];
            *a = *a + (even[g][j] + odd[g][j]);
        }
    }
}

/// Block average over `factor x factor` tiles; edge tiles average the pixels they cover.
fn downsample_soft<T: Scalar>(s: &SoftPrediction<T>, factor: usize) -> SoftPrediction<T> {
    let (w, h) = s.dims();
    let ch = s.channels();
    let (sw, sh) = (w.div_ceil(factor), h.div_ceil(factor));
    let mut data = vec![T::zero(); sw * sh * ch];
    let mut counts = vec![0usize; sw * sh];
    for y in 0..h {
        for x in 0..w {
            let j = (y / factor) * sw + x / factor;
            counts[j] += 1;
            for (d, &v) in data[j * ch..(j + 1) * ch].iter_mut().zip(s.pixel(x, y)) {
                *d = *d + v;
            }
        }
    }
    for (px, &n) in data.chunks_exact_mut(ch).zip(&counts) {
        let inv = T::one() / T::of(n as f64);
        px.iter_mut().for_each(|v| *v = *v * inv);
        normalize_slice(px);
    }
    SoftPrediction::from_parts_unchecked(sw, sh, ch, data)
}

fn downsample_lab<T: Scalar>(img: &LabImage<T>, factor: usize) -> LabImage<T> {
    let (w, h) = img.dims();
    let (sw, sh) = (w.div_ceil(factor), h.div_ceil(factor));
    let mut data = vec![[T::zero(); 3]; sw * sh];
    let mut counts = vec![0usize; sw * sh];
    for y in 0..h {
        for x in 0..w {
            let j = (y / factor) * sw + x / factor;
            counts[j] += 1;
            let p = img.get(x, y);
            for k in 0..3 {
                data[j][k] = data[j][k] + p[k];
            }
        }
    }
    for (px, &n) in data.iter_mut().zip(&counts) {
        let inv = T::one() / T::of(n as f64);
        px.iter_mut().for_each(|v| *v = *v * inv);
    }
    LabImage::new(sw, sh, data).expect("sizes agree")
}

/// Bilinear interpolation between block centres, then renormalization.
fn upsample_bilinear<T: Scalar>(s: &SoftPrediction<T>, w: usize, h: usize, factor: usize) -> SoftPrediction<T> {
    let (sw, sh) = s.dims();
    let ch = s.channels();
    let f = factor as f64;
    let coord = |v: usize, n: usize| -> (usize, usize, T) {
        let u = ((v as f64 + 0.5) / f - 0.5).clamp(0.0, (n - 1) as f64);
        let i0 = u.floor() as usize;
        let i1 = (i0 + 1).min(n - 1);
        (i0, i1, T::of(u - i0 as f64))
    };
    let xs: Vec<_> = (0..w).map(|x| coord(x, sw)).collect();
    let mut out = vec![T::zero(); w * h * ch];
    out.par_chunks_mut(w * ch).enumerate().for_each(|(y, row)| {
        let (y0, y1, fy) = coord(y, sh);
        for (x, &(x0, x1, fx)) in xs.iter().enumerate() {
            let w00 = (T::one() - fx) * (T::one() - fy);
            let w10 = fx * (T::one() - fy);
            let w01 = (T::one() - fx) * fy;
            let w11 = fx * fy;
            let (p00, p10, p01, p11) = (s.pixel(x0, y0), s.pixel(x1, y0), s.pixel(x0, y1), s.pixel(x1, y1));
            let dst = &mut row[x * ch..(x + 1) * ch];
            for c in 0..ch {
                dst[c] = w00 * p00[c] + w10 * p10[c] + w01 * p01[c] + w11 * p11[c];
            }
            normalize_slice(dst);
        }
    });
    SoftPrediction::from_parts_unchecked(w, h, ch, out)
}

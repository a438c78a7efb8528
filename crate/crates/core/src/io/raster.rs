//! 8-bit single-channel PNG label and mask rasters, plus RGB camera frames.

use std::fs::File;
use std::io::{BufReader, BufWriter};
use std::path::Path;

use crate::color::RgbImage;
use crate::error::{Error, Result};
use crate::types::{InvalidMask, LabelMap};

/// Reads an 8-bit grayscale or 8-bit indexed PNG as raw values. Palettes are ignored.
pub fn read_gray8_png(path: &Path) -> Result<(usize, usize, Vec<u8>)> {
    let file = File::open(path).map_err(|e| Error::io(format!("open {}", path.display()), e))?;
    let mut decoder = png::Decoder::new(BufReader::new(file));
    decoder.set_transformations(png::Transformations::IDENTITY);
    let mut reader = decoder
        .read_info()
        .map_err(|e| Error::format(path, e.to_string()))?;
    let (color, depth) = reader.output_color_type();
    if depth != png::BitDepth::Eight {
        return Err(Error::format(path, format!("expected 8-bit samples, got {depth:?}")));
    }
    if !matches!(color, png::ColorType::Grayscale | png::ColorType::Indexed) {
        return Err(Error::format(path, format!("expected a single channel, got {color:?}")));
    }
    let size = reader
        .output_buffer_size()
        .ok_or_else(|| Error::format(path, "image too large"))?;
    let mut buf = vec![0u8; size];
    let info = reader
        .next_frame(&mut buf)
        .map_err(|e| Error::format(path, e.to_string()))?;
    let (w, h) = (info.width as usize, info.height as usize);
    if info.line_size != w {
        // rows are padded only for sub-byte depths, which are rejected above
        return Err(Error::format(path, "unexpected row stride"));
    }
    buf.truncate(w * h);
    Ok((w, h, buf))
}

pub fn write_gray8_png(path: &Path, width: usize, height: usize, data: &[u8]) -> Result<()> {
    let file = File::create(path).map_err(|e| Error::io(format!("create {}", path.display()), e))?;
    let mut enc = png::Encoder::new(BufWriter::new(file), width as u32, height as u32);
    enc.set_color(png::ColorType::Grayscale);
    enc.set_depth(png::BitDepth::Eight);
    enc.set_compression(png::Compression::Fast);
    let mut writer = enc
        .write_header()
        .map_err(|e| Error::format(path, e.to_string()))?;
    writer
        .write_image_data(data)
        .map_err(|e| Error::format(path, e.to_string()))?;
    writer.finish().map_err(|e| Error::format(path, e.to_string()))
}

pub fn read_label_png(path: &Path) -> Result<LabelMap> {
    let (w, h, data) = read_gray8_png(path)?;
    LabelMap::new(w, h, data)
}

pub fn write_label_png(path: &Path, labels: &LabelMap) -> Result<()> {
    write_gray8_png(path, labels.width(), labels.height(), labels.data())
}

/// Reads an invalid mask; stored values 0/1 or 0/255.
pub fn read_mask_png(path: &Path) -> Result<InvalidMask> {
    let (w, h, data) = read_gray8_png(path)?;
    InvalidMask::from_raster(w, h, data).map_err(|e| Error::format(path, e.to_string()))
}

/// Writes an invalid mask as 0/255.
pub fn write_mask_png(path: &Path, mask: &InvalidMask) -> Result<()> {
    let data: Vec<u8> = mask.data().iter().map(|&v| v * 255).collect();
    write_gray8_png(path, mask.width(), mask.height(), &data)
}

/// Reads a PNG or JPEG camera frame as 8-bit sRGB.
pub fn read_rgb_image(path: &Path) -> Result<RgbImage> {
    let img = image::open(path)
        .map_err(|e| Error::format(path, e.to_string()))?
        .into_rgb8();
    let (w, h) = (img.width() as usize, img.height() as usize);
    let data = img.pixels().map(|p| p.0).collect();
    RgbImage::new(w, h, data)
}

pub fn write_rgb_png(path: &Path, img: &RgbImage) -> Result<()> {
    let raw: Vec<u8> = img.data().iter().flatten().copied().collect();
    image::save_buffer(
        path,
        &raw,
        img.width() as u32,
        img.height() as u32,
        image::ExtendedColorType::Rgb8,
    )
    .map_err(|e| Error::format(path, e.to_string()))
}

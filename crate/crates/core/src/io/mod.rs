//! File formats: label and mask rasters, soft-prediction tensors, manifests, reports.

mod manifest;
mod raster;
mod report;
mod soft;

pub use manifest::{relative_to, Manifest, ManifestRecord, Origin};
pub use raster::{
    read_gray8_png, read_label_png, read_mask_png, read_rgb_image, write_gray8_png, write_label_png, write_mask_png,
    write_rgb_png,
};
pub use report::{correspondences_to_csv, curve_to_csv, curve_to_svg, fmt_g6};
pub use soft::{decode_soft, encode_soft, read_soft_tensor, write_soft_tensor, SOFT_HEADER_LEN, SOFT_MAGIC, SOFT_VERSION};

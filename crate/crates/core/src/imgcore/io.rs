//! PNG and PNM reading/writing.

use std::path::Path;

use image::{ColorType, DynamicImage, ImageFormat};

use super::{BinaryImage, RasterImage};
use crate::{Error, Result};

/// Decodes any supported raster into 8-bit gray, RGB or RGBA.
pub fn read_raster(path: &Path) -> Result<RasterImage> {
    let dynamic = image::open(path).map_err(|source| Error::Codec { path: path.into(), source })?;
    let (w, h) = (dynamic.width() as usize, dynamic.height() as usize);
    let (channels, data) = match dynamic.color() {
        ColorType::L8 | ColorType::L16 | ColorType::La8 | ColorType::La16 => (1, dynamic.into_luma8().into_raw()),
        ColorType::Rgb8 | ColorType::Rgb16 | ColorType::Rgb32F => (3, dynamic.into_rgb8().into_raw()),
        _ => (4, dynamic.into_rgba8().into_raw()),
    };
    RasterImage::new(w, h, channels, data)
}

/// Encodes by file extension (`.png`, `.pgm`, `.ppm`, `.pnm`).
pub fn write_raster(path: &Path, img: &RasterImage) -> Result<()> {
    let format = ImageFormat::from_path(path).map_err(|source| Error::Codec { path: path.into(), source })?;
    let (w, h) = (img.width() as u32, img.height() as u32);
    let dynamic = match img.channels() {
        1 => DynamicImage::ImageLuma8(image::GrayImage::from_raw(w, h, img.data().to_vec()).expect("sized")),
        3 => DynamicImage::ImageRgb8(image::RgbImage::from_raw(w, h, img.data().to_vec()).expect("sized")),
        _ => DynamicImage::ImageRgba8(image::RgbaImage::from_raw(w, h, img.data().to_vec()).expect("sized")),
    };
    dynamic
        .save_with_format(path, format)
        .map_err(|source| Error::Codec { path: path.into(), source })
}

pub fn read_binary(path: &Path) -> Result<BinaryImage> {
    Ok(BinaryImage::from_raster(&read_raster(path)?))
}

/// Writes ink as 0 and background as 255, single channel.
pub fn write_binary(path: &Path, b: &BinaryImage) -> Result<()> {
    write_raster(path, &b.to_raster())
}

/// Image file extensions picked up by directory scans.
pub fn is_image_path(path: &Path) -> bool {
    matches!(
        path.extension().and_then(|e| e.to_str()).map(|e| e.to_ascii_lowercase()).as_deref(),
        Some("png" | "pgm" | "ppm" | "pnm" | "pbm" | "jpg" | "jpeg" | "tif" | "tiff" | "bmp")
    )
}

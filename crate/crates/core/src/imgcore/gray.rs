use super::RasterImage;

/// BT.601 luma with round-half-away-from-zero, computed in exact integer arithmetic.
/// Alpha is ignored; single-channel input is returned unchanged.
pub fn to_grayscale(img: &RasterImage) -> RasterImage {
    if img.channels() == 1 {
        return img.clone();
    }
    let data = img
        .data()
        .chunks_exact(img.channels())
        .map(|px| luma(px[0], px[1], px[2]))
        .collect();
    RasterImage::new(img.width(), img.height(), 1, data).expect("same extent")
}

#[inline]
pub(crate) fn luma(r: u8, g: u8, b: u8) -> u8 {
    let n = 299 * r as u32 + 587 * g as u32 + 114 * b as u32;
    ((n + 500) / 1000) as u8
}

//! Su, Lu and Tan contrast-based binarization.

use rayon::prelude::*;

use super::otsu::{histogram, otsu_threshold};
use super::{Binarizer, GridAxes, LocalThreshParams};
use crate::imgcore::{integral::clipped_window, BinaryImage, RasterImage, SummedArea};
use crate::Result;

const CONTRAST_EPS: f64 = 1e-8;

#[derive(Clone, Copy, Debug, Default)]
pub struct Su;

/// Local contrast `(max - min) / (max + min + eps)` over the clipped 3x3 neighbourhood.
pub fn contrast_image(gray: &RasterImage) -> Vec<f64> {
    let (w, h) = gray.dims();
    let mut out = Vec::with_capacity(w * h);
    for y in 0..h {
        let (y0, y1) = clipped_window(y, 3, h);
        for x in 0..w {
            let (x0, x1) = clipped_window(x, 3, w);
            let mut lo = u8::MAX;
            let mut hi = u8::MIN;
            for yy in y0..y1 {
                for xx in x0..x1 {
                    let v = gray.get(xx, yy);
                    lo = lo.min(v);
                    hi = hi.max(v);
                }
            }
            out.push((hi as f64 - lo as f64) / (hi as f64 + lo as f64 + CONTRAST_EPS));
        }
    }
    out
}

/// High-contrast pixels: Otsu's upper class on the contrast map quantized to 0..=255.
pub fn high_contrast_mask(contrast: &[f64]) -> Vec<bool> {
    let quantized: Vec<u8> = contrast.iter().map(|&c| quantize_contrast(c)).collect();
    match otsu_threshold(&histogram(quantized.iter().copied())) {
        Some(t) => quantized.iter().map(|&q| q >= t).collect(),
        None => vec![false; contrast.len()],
    }
}

#[inline]
pub(crate) fn quantize_contrast(c: f64) -> u8 {
    (c * 255.0).round().clamp(0.0, 255.0) as u8
}

impl Binarizer for Su {
    fn name(&self) -> &'static str {
        "su"
    }

    fn grid_axes(&self) -> GridAxes {
        GridAxes::WindowMinN
    }

    fn binarize(&self, gray: &RasterImage, params: &LocalThreshParams) -> Result<BinaryImage> {
        gray.require_gray("su")?;
        params.validate()?;
        let (w, h) = gray.dims();
        let hc = high_contrast_mask(&contrast_image(gray));
        let at = |x: usize, y: usize| hc[y * w + x];
        let count = SummedArea::build(w, h, |x, y| at(x, y) as u64);
        let sum = SummedArea::build(w, h, |x, y| if at(x, y) { gray.get(x, y) as u64 } else { 0 });
        let sqsum = SummedArea::build(w, h, |x, y| {
            if at(x, y) {
                let v = gray.get(x, y) as u64;
                v * v
            } else {
                0
            }
        });

        let min_n = params.min_n as u64;
        let rows: Vec<Vec<bool>> = (0..h)
            .into_par_iter()
            .map(|y| {
                let (y0, y1) = clipped_window(y, params.window, h);
                (0..w)
                    .map(|x| {
                        let (x0, x1) = clipped_window(x, params.window, w);
                        let ne = count.sum(x0, y0, x1, y1);
                        if ne == 0 || ne < min_n {
                            return false;
                        }
                        let n = ne as f64;
                        let mean = sum.sum(x0, y0, x1, y1) as f64 / n;
                        let var = (sqsum.sum(x0, y0, x1, y1) as f64 / n - mean * mean).max(0.0);
                        gray.get(x, y) as f64 <= mean + var.sqrt() / 2.0
                    })
                    .collect()
            })
            .collect();
        BinaryImage::from_mask(w, h, rows.concat())
    }
}

use super::{Binarizer, GridAxes, LocalThreshParams};
use crate::imgcore::{BinaryImage, RasterImage};
use crate::Result;

/// Threshold maximizing the between-class variance, where class 0 is `v < T`.
/// Ties go to the smallest `T`. `None` when every candidate has zero variance
/// (a single occupied bin).
pub fn otsu_threshold(hist: &[u64; 256]) -> Option<u8> {
    let total: u64 = hist.iter().sum();
    if total == 0 {
        return None;
    }
    let total_f = total as f64;
    let sum_all: f64 = hist.iter().enumerate().map(|(v, &c)| v as f64 * c as f64).sum();

    let mut n0 = 0u64;
    let mut s0 = 0f64;
    let mut best = 0f64;
    let mut best_t = None;
    for t in 0..256usize {
        // class 0 holds values < t
        if n0 > 0 && n0 < total {
            let n1 = total - n0;
            let w0 = n0 as f64 / total_f;
            let w1 = n1 as f64 / total_f;
            let m0 = s0 / n0 as f64;
            let m1 = (sum_all - s0) / n1 as f64;
            let var = w0 * w1 * (m0 - m1) * (m0 - m1);
            if var > best {
                best = var;
                best_t = Some(t as u8);
            }
        }
        n0 += hist[t];
        s0 += t as f64 * hist[t] as f64;
    }
    best_t
}

pub(crate) fn histogram(values: impl Iterator<Item = u8>) -> [u64; 256] {
    let mut hist = [0u64; 256];
    for v in values {
        hist[v as usize] += 1;
    }
    hist
}

/// Global Otsu thresholding; pixels strictly below the threshold are ink.
#[derive(Clone, Copy, Debug, Default)]
pub struct Otsu;

impl Binarizer for Otsu {
    fn name(&self) -> &'static str {
        "otsu"
    }

    fn grid_axes(&self) -> GridAxes {
        GridAxes::None
    }

    fn binarize(&self, gray: &RasterImage, _params: &LocalThreshParams) -> Result<BinaryImage> {
        gray.require_gray("otsu")?;
        let (w, h) = gray.dims();
        let Some(t) = otsu_threshold(&histogram(gray.data().iter().copied())) else {
            return Ok(BinaryImage::new(w, h));
        };
        BinaryImage::from_mask(w, h, gray.data().iter().map(|&v| v < t).collect())
    }
}

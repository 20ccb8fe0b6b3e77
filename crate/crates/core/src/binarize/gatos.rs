//! Gatos, Pratikakis and Perantonis adaptive binarization: low-pass filter,
//! rough Sauvola pass, background-surface interpolation, and a final
//! threshold that adapts to the local background level.

use rayon::prelude::*;

use super::local::{local_mask, LocalMethod};
use super::{Binarizer, GridAxes, LocalThreshParams};
use crate::imgcore::{integral::clipped_window, BinaryImage, IntegralImage, RasterImage, SummedArea};
use crate::{Error, Result};

const ROUGH_K: f64 = 0.2;
const ROUGH_R: f64 = 128.0;

/// Shape constants of the adaptive distance function.
#[derive(Clone, Copy, Debug, PartialEq, serde::Serialize, serde::Deserialize)]
pub struct GatosConstants {
    pub q: f64,
    pub p1: f64,
    pub p2: f64,
}

impl Default for GatosConstants {
    fn default() -> Self {
        Self { q: 0.6, p1: 0.5, p2: 0.8 }
    }
}

impl GatosConstants {
    /// Minimum background-minus-intensity gap for ink at background level `bg`.
    /// `delta` is the mean text/background distance, `b` the mean background level.
    #[inline]
    pub fn distance(&self, bg: f64, delta: f64, b: f64) -> f64 {
        let GatosConstants { q, p1, p2 } = *self;
        let sigmoid = (1.0 - p2) / (1.0 + (-4.0 * bg / (b * (1.0 - p1)) + 2.0 * (1.0 + p1) / (1.0 - p1)).exp());
        q * delta * (sigmoid + p2)
    }
}

#[derive(Clone, Copy, Debug, Default)]
pub struct Gatos;

/// 3x3 clipped mean, rounded half away from zero.
pub fn lowpass3(gray: &RasterImage) -> RasterImage {
    let (w, h) = gray.dims();
    let ii = IntegralImage::build(gray).expect("gray");
    RasterImage::from_gray_fn(w, h, |x, y| {
        let (x0, x1) = clipped_window(x, 3, w);
        let (y0, y1) = clipped_window(y, 3, h);
        let n = ((x1 - x0) * (y1 - y0)) as u64;
        let s = ii.rect_sum(x0, y0, x1, y1);
        ((2 * s + n) / (2 * n)) as u8
    })
    .expect("sized")
}

impl Binarizer for Gatos {
    fn name(&self) -> &'static str {
        "gatos"
    }

    fn grid_axes(&self) -> GridAxes {
        GridAxes::WindowGlyph
    }

    fn binarize(&self, gray: &RasterImage, params: &LocalThreshParams) -> Result<BinaryImage> {
        gray.require_gray("gatos")?;
        params.validate()?;
        let (w, h) = gray.dims();

        let filtered = lowpass3(gray);
        let fii = IntegralImage::build(&filtered)?;
        let rough = local_mask(&filtered, &fii, LocalMethod::Sauvola, params.window, ROUGH_K, ROUGH_R);

        let ink_count = rough.ink_count();
        if ink_count == 0 {
            return Ok(BinaryImage::new(w, h));
        }
        if ink_count == w * h {
            return Err(Error::BackgroundEstimation);
        }

        let is_bg = |x: usize, y: usize| !rough.is_ink(x, y);
        let bg_count = SummedArea::build(w, h, |x, y| is_bg(x, y) as u64);
        let bg_sum = SummedArea::build(w, h, |x, y| if is_bg(x, y) { filtered.get(x, y) as u64 } else { 0 });
        let total_bg = bg_count.sum(0, 0, w, h);
        let global_bg_mean = bg_sum.sum(0, 0, w, h) as f64 / total_bg as f64;

        let side = 2 * params.glyph + 1;
        let surface: Vec<f64> = (0..h)
            .into_par_iter()
            .flat_map_iter(|y| {
                let (y0, y1) = clipped_window(y, side, h);
                let (filtered, rough, bg_count, bg_sum) = (&filtered, &rough, &bg_count, &bg_sum);
                (0..w).map(move |x| {
                    if !rough.is_ink(x, y) {
                        return filtered.get(x, y) as f64;
                    }
                    let (x0, x1) = clipped_window(x, side, w);
                    let n = bg_count.sum(x0, y0, x1, y1);
                    if n == 0 {
                        global_bg_mean
                    } else {
                        bg_sum.sum(x0, y0, x1, y1) as f64 / n as f64
                    }
                })
            })
            .collect();

        let mut gap = 0f64;
        for y in 0..h {
            for x in 0..w {
                if rough.is_ink(x, y) {
                    gap += surface[y * w + x] - filtered.get(x, y) as f64;
                }
            }
        }
        let delta = gap / ink_count as f64;
        // background pixels copy the filtered image, so their surface mean is the global background mean
        let b = global_bg_mean;

        let c = params.gatos;
        let mask = (0..w * h)
            .map(|i| {
                let bg = surface[i];
                bg - filtered.data()[i] as f64 > c.distance(bg, delta, b)
            })
            .collect();
        BinaryImage::from_mask(w, h, mask)
    }
}

//! Sauvola, NICK and T.R. Singh local thresholds over clipped square windows.

use rayon::prelude::*;

use super::{Binarizer, GridAxes, LocalThreshParams};
use crate::imgcore::{integral::clipped_window, BinaryImage, IntegralImage, RasterImage};
use crate::Result;

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum LocalMethod {
    Sauvola,
    Nick,
    Trsingh,
}

impl LocalMethod {
    pub fn name(self) -> &'static str {
        match self {
            LocalMethod::Sauvola => "sauvola",
            LocalMethod::Nick => "nick",
            LocalMethod::Trsingh => "trsingh",
        }
    }

    pub fn default_k(self) -> f64 {
        match self {
            LocalMethod::Sauvola => 0.2,
            LocalMethod::Nick => -0.2,
            LocalMethod::Trsingh => 0.35,
        }
    }

    /// Threshold for intensity `i` given the window's pixel count, sum and sum of squares.
    #[inline]
    pub fn threshold(self, i: f64, n: u64, sum: u64, sqsum: u64, k: f64, r: f64) -> f64 {
        let n = n as f64;
        let m = sum as f64 / n;
        match self {
            LocalMethod::Sauvola => {
                let var = (sqsum as f64 / n - m * m).max(0.0);
                m * (1.0 + k * (var.sqrt() / r - 1.0))
            }
            LocalMethod::Nick => m + k * ((sqsum as f64 - m * m) / n).sqrt(),
            LocalMethod::Trsingh => {
                let d = (i - m) / 255.0;
                m * (1.0 + k * (d / (1.0 - d) - 1.0))
            }
        }
    }
}

#[derive(Clone, Copy, Debug)]
pub struct LocalThreshold(pub LocalMethod);

impl Binarizer for LocalThreshold {
    fn name(&self) -> &'static str {
        self.0.name()
    }

    fn grid_axes(&self) -> GridAxes {
        GridAxes::Window
    }

    fn binarize(&self, gray: &RasterImage, params: &LocalThreshParams) -> Result<BinaryImage> {
        gray.require_gray(self.0.name())?;
        params.validate()?;
        let ii = IntegralImage::build(gray)?;
        let k = params.k.unwrap_or(self.0.default_k());
        Ok(local_mask(gray, &ii, self.0, params.window, k, params.r))
    }
}

pub(crate) fn local_mask(gray: &RasterImage, ii: &IntegralImage, method: LocalMethod, window: usize, k: f64, r: f64) -> BinaryImage {
    let (w, h) = gray.dims();
    let rows: Vec<Vec<bool>> = (0..h)
        .into_par_iter()
        .map(|y| {
            let (y0, y1) = clipped_window(y, window, h);
            (0..w)
                .map(|x| {
                    let (x0, x1) = clipped_window(x, window, w);
                    let n = ((x1 - x0) * (y1 - y0)) as u64;
                    let i = gray.get(x, y) as f64;
                    let t = method.threshold(i, n, ii.rect_sum(x0, y0, x1, y1), ii.rect_sqsum(x0, y0, x1, y1), k, r);
                    i <= t
                })
                .collect()
        })
        .collect();
    BinaryImage::from_mask(w, h, rows.concat()).expect("sized")
}

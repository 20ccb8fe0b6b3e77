//! DIBCO evaluation measures: F-measure, pseudo F-measure, PSNR and DRD.
//!
//! All measures compare a prediction against a ground truth and are not
//! symmetric in their arguments.

use serde::{Deserialize, Serialize};

use crate::imgcore::{skeletonize, BinaryImage};
use crate::report::inf_f64;
use crate::{Error, Result};

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct ConfusionCounts {
    pub tp: u64,
    pub fp: u64,
    #[serde(rename = "fn")]
    pub fn_: u64,
    pub tn: u64,
}

impl ConfusionCounts {
    pub fn total(&self) -> u64 {
        self.tp + self.fp + self.fn_ + self.tn
    }
}

/// FM, pFM and DRD are percentages / penalties; PSNR may be `+inf` for identical images.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct BinMetricsReport {
    pub fm: f64,
    pub pfm: f64,
    #[serde(with = "inf_f64")]
    pub psnr: f64,
    pub drd: f64,
}

pub fn confusion(pred: &BinaryImage, gt: &BinaryImage) -> Result<ConfusionCounts> {
    pred.check_same_dims(gt)?;
    let mut c = ConfusionCounts::default();
    for (&p, &g) in pred.mask().iter().zip(gt.mask()) {
        match (p, g) {
            (true, true) => c.tp += 1,
            (true, false) => c.fp += 1,
            (false, true) => c.fn_ += 1,
            (false, false) => c.tn += 1,
        }
    }
    Ok(c)
}

/// Harmonic mean of two ratios in percent, with the zero-count conventions:
/// nothing to find and nothing found is 100, a miss on either side is 0.
fn harmonic_percent(hits: u64, predicted: u64, relevant: u64, rel_hits: u64) -> f64 {
    if predicted == 0 && relevant == 0 {
        return 100.0;
    }
    if hits == 0 || rel_hits == 0 {
        return 0.0;
    }
    let precision = hits as f64 / predicted as f64;
    let recall = rel_hits as f64 / relevant as f64;
    100.0 * 2.0 * precision * recall / (precision + recall)
}

pub fn f_measure(c: &ConfusionCounts) -> f64 {
    harmonic_percent(c.tp, c.tp + c.fp, c.tp + c.fn_, c.tp)
}

/// F-measure with recall replaced by the fraction of the ground-truth skeleton that is detected.
pub fn pseudo_f_measure(pred: &BinaryImage, gt: &BinaryImage) -> Result<f64> {
    let c = confusion(pred, gt)?;
    let skeleton = skeletonize(gt);
    pseudo_f_measure_with_skeleton(pred, &c, &skeleton)
}

pub(crate) fn pseudo_f_measure_with_skeleton(pred: &BinaryImage, c: &ConfusionCounts, skeleton: &BinaryImage) -> Result<f64> {
    pred.check_same_dims(skeleton)?;
    let skel_total = skeleton.ink_count() as u64;
    let skel_hits = pred.mask().iter().zip(skeleton.mask()).filter(|(&p, &s)| p && s).count() as u64;
    Ok(harmonic_percent(c.tp, c.tp + c.fp, skel_total, skel_hits))
}

/// PSNR on {0,1} images with peak 1; `+inf` for identical images.
pub fn psnr(pred: &BinaryImage, gt: &BinaryImage) -> Result<f64> {
    pred.check_same_dims(gt)?;
    let diff = pred.mask().iter().zip(gt.mask()).filter(|(a, b)| a != b).count();
    Ok(psnr_from_diff(diff, pred.mask().len()))
}

fn psnr_from_diff(diff: usize, total: usize) -> f64 {
    if diff == 0 {
        f64::INFINITY
    } else {
        10.0 * (total as f64 / diff as f64).log10()
    }
}

/// Reciprocal-distance weights of the 5x5 neighbourhood (centre 0), row-major, unnormalized.
fn drd_weights() -> ([f64; 25], f64) {
    let mut w = [0f64; 25];
    for j in -2i32..=2 {
        for i in -2i32..=2 {
            if i != 0 || j != 0 {
                w[((j + 2) * 5 + i + 2) as usize] = 1.0 / ((i * i + j * j) as f64).sqrt();
            }
        }
    }
    let total = w.iter().sum();
    (w, total)
}

/// Number of 8x8 ground-truth blocks (partial border blocks included) holding both ink and background.
pub fn nubn(gt: &BinaryImage) -> usize {
    let (w, h) = gt.dims();
    let mut count = 0;
    for by in (0..h).step_by(8) {
        for bx in (0..w).step_by(8) {
            let mut ink = false;
            let mut bg = false;
            for y in by..(by + 8).min(h) {
                for x in bx..(bx + 8).min(w) {
                    if gt.is_ink(x, y) {
                        ink = true;
                    } else {
                        bg = true;
                    }
                }
            }
            count += (ink && bg) as usize;
        }
    }
    count
}

/// Distortion of one flipped pixel: weighted disagreement of its 5x5 ground-truth
/// neighbourhood with the predicted value. Out-of-image reads are background.
pub fn drd_pixel(pred: &BinaryImage, gt: &BinaryImage, x: usize, y: usize) -> f64 {
    let (w, total) = drd_weights();
    let p = pred.is_ink(x, y);
    let mut acc = 0f64;
    for j in -2isize..=2 {
        for i in -2isize..=2 {
            let g = gt.is_ink_at(x as isize + i, y as isize + j);
            acc += (g != p) as u8 as f64 * w[((j + 2) * 5 + i + 2) as usize];
        }
    }
    acc / total
}

pub fn drd(pred: &BinaryImage, gt: &BinaryImage) -> Result<f64> {
    pred.check_same_dims(gt)?;
    let (w, h) = gt.dims();
    let mut sum = 0f64;
    let mut flipped = 0usize;
    for y in 0..h {
        for x in 0..w {
            if pred.is_ink(x, y) != gt.is_ink(x, y) {
                flipped += 1;
                sum += drd_pixel(pred, gt, x, y);
            }
        }
    }
    if flipped == 0 {
        return Ok(0.0);
    }
    match nubn(gt) {
        0 => Err(Error::DegenerateGroundTruth { flipped }),
        n => Ok(sum / n as f64),
    }
}

pub fn evaluate(pred: &BinaryImage, gt: &BinaryImage) -> Result<BinMetricsReport> {
    let c = confusion(pred, gt)?;
    let skeleton = skeletonize(gt);
    Ok(BinMetricsReport {
        fm: f_measure(&c),
        pfm: pseudo_f_measure_with_skeleton(pred, &c, &skeleton)?,
        psnr: psnr_from_diff((c.fp + c.fn_) as usize, c.total() as usize),
        drd: drd(pred, gt)?,
    })
}

/// Per-metric arithmetic mean; an infinite PSNR makes the mean PSNR infinite.
pub fn mean_report(reports: &[BinMetricsReport]) -> Option<BinMetricsReport> {
    if reports.is_empty() {
        return None;
    }
    let n = reports.len() as f64;
    let mean = |f: fn(&BinMetricsReport) -> f64| reports.iter().map(f).sum::<f64>() / n;
    Some(BinMetricsReport {
        fm: mean(|r| r.fm),
        pfm: mean(|r| r.pfm),
        psnr: mean(|r| r.psnr),
        drd: mean(|r| r.drd),
    })
}

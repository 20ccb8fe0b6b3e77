//! Difference-of-Gaussians keypoint detector.

use super::{Keypoint, PATCH};
use crate::imgcore::RasterImage;
use crate::Result;

#[derive(Clone, Debug, PartialEq)]
pub struct DogParams {
    pub octaves: usize,
    pub scales: usize,
    pub sigma0: f64,
    /// Minimum of `|DoG| * scales` on an image scaled to [0, 1].
    pub contrast: f64,
    /// Maximum principal curvature ratio.
    pub edge_ratio: f64,
}

impl Default for DogParams {
    fn default() -> Self {
        Self { octaves: 3, scales: 3, sigma0: 1.6, contrast: 0.04, edge_ratio: 10.0 }
    }
}

#[derive(Clone)]
struct Plane {
    w: usize,
    h: usize,
    v: Vec<f64>,
}

impl Plane {
    #[inline]
    fn at(&self, x: usize, y: usize) -> f64 {
        self.v[y * self.w + x]
    }
}

fn kernel(sigma: f64) -> Vec<f64> {
    let r = (3.0 * sigma).ceil() as isize;
    let mut k: Vec<f64> = (-r..=r).map(|i| (-((i * i) as f64) / (2.0 * sigma * sigma)).exp()).collect();
    let s: f64 = k.iter().sum();
    k.iter_mut().for_each(|v| *v /= s);
    k
}

/// Separable Gaussian blur with replicated borders.
fn blur(p: &Plane, sigma: f64) -> Plane {
    let k = kernel(sigma);
    let r = (k.len() / 2) as isize;
    let clamp = |i: isize, n: usize| i.clamp(0, n as isize - 1) as usize;
    let mut tmp = vec![0.0; p.v.len()];
    for y in 0..p.h {
        for x in 0..p.w {
            tmp[y * p.w + x] = k.iter().enumerate().map(|(j, kv)| kv * p.at(clamp(x as isize + j as isize - r, p.w), y)).sum();
        }
    }
    let mut out = vec![0.0; p.v.len()];
    for y in 0..p.h {
        for x in 0..p.w {
            out[y * p.w + x] = k.iter().enumerate().map(|(j, kv)| kv * tmp[clamp(y as isize + j as isize - r, p.h) * p.w + x]).sum();
        }
    }
    Plane { w: p.w, h: p.h, v: out }
}

fn downsample(p: &Plane) -> Plane {
    let (w, h) = (p.w.div_ceil(2), p.h.div_ceil(2));
    let mut v = Vec::with_capacity(w * h);
    for y in 0..h {
        for x in 0..w {
            v.push(p.at(2 * x, 2 * y));
        }
    }
    Plane { w, h, v }
}

fn is_extremum(dogs: &[Plane], s: usize, x: usize, y: usize) -> bool {
    let v = dogs[s].at(x, y);
    let (mut is_max, mut is_min) = (true, true);
    for d in &dogs[s - 1..=s + 1] {
        for ny in y - 1..=y + 1 {
            for nx in x - 1..=x + 1 {
                let n = d.at(nx, ny);
                is_max &= v >= n;
                is_min &= v <= n;
            }
        }
    }
    is_max || is_min
}

fn passes_edge_test(d: &Plane, x: usize, y: usize, ratio: f64) -> bool {
    let c = d.at(x, y);
    let dxx = d.at(x + 1, y) + d.at(x - 1, y) - 2.0 * c;
    let dyy = d.at(x, y + 1) + d.at(x, y - 1) - 2.0 * c;
    let dxy = (d.at(x + 1, y + 1) - d.at(x + 1, y - 1) - d.at(x - 1, y + 1) + d.at(x - 1, y - 1)) / 4.0;
    let tr = dxx + dyy;
    let det = dxx * dyy - dxy * dxy;
    det > 0.0 && tr * tr * ratio < (ratio + 1.0) * (ratio + 1.0) * det
}

/// Scale-space extrema of the difference of Gaussians, reported at integer
/// full-resolution centres, deduplicated and sorted by `(y, x)`.
pub fn detect_keypoints(gray: &RasterImage, params: &DogParams) -> Result<Vec<Keypoint>> {
    gray.require_gray("keypoint detection")?;
    let (w, h) = gray.dims();
    if w < PATCH || h < PATCH {
        return Ok(Vec::new());
    }
    let k = 2f64.powf(1.0 / params.scales as f64);
    let mut base = Plane { w, h, v: gray.data().iter().map(|&v| v as f64 / 255.0).collect() };
    // the input is assumed to carry a blur of 0.5 already
    base = blur(&base, (params.sigma0 * params.sigma0 - 0.25).sqrt());

    let mut found = Vec::new();
    for octave in 0..params.octaves {
        if base.w < 3 || base.h < 3 {
            break;
        }
        let mut gauss = vec![base.clone()];
        for i in 1..params.scales + 3 {
            let prev = params.sigma0 * k.powi(i as i32 - 1);
            let inc = prev * (k * k - 1.0).sqrt();
            gauss.push(blur(&gauss[i - 1], inc));
        }
        let dogs: Vec<Plane> = gauss
            .windows(2)
            .map(|g| Plane { w: g[0].w, h: g[0].h, v: g[1].v.iter().zip(&g[0].v).map(|(a, b)| a - b).collect() })
            .collect();
        let min_response = params.contrast / params.scales as f64;
        for s in 1..=params.scales {
            let d = &dogs[s];
            for y in 1..d.h - 1 {
                for x in 1..d.w - 1 {
                    if d.at(x, y).abs() >= min_response && is_extremum(&dogs, s, x, y) && passes_edge_test(d, x, y, params.edge_ratio) {
                        let (fx, fy) = ((x << octave).min(w - 1), (y << octave).min(h - 1));
                        found.push(Keypoint { x: fx as u32, y: fy as u32 });
                    }
                }
            }
        }
        base = downsample(&gauss[params.scales]);
    }
    found.sort_unstable_by_key(|k| (k.y, k.x));
    found.dedup();
    Ok(found)
}

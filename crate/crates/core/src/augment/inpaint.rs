//! Fast-marching inpainting after Telea.
//!
//! Masked pixels are filled in order of their distance to the mask boundary.
//! Each value is a weighted average of first-order estimates
//! `I(q) + grad I(q) . (p - q)` over already-known pixels `q` within the radius;
//! the weight is the product of a directional, a geometric distance and a
//! level-set term.

use std::cmp::Ordering;
use std::collections::BinaryHeap;

use crate::imgcore::{BinaryImage, RasterImage};
use crate::{Error, Result};

#[derive(Clone, Copy, PartialEq, Eq)]
enum Flag {
    Known,
    Band,
    Inside,
}

struct Entry {
    t: f64,
    idx: usize,
}

impl PartialEq for Entry {
    fn eq(&self, other: &Self) -> bool {
        self.cmp(other) == Ordering::Equal
    }
}

impl Eq for Entry {}

impl PartialOrd for Entry {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

impl Ord for Entry {
    // min-heap on (t, idx)
    fn cmp(&self, other: &Self) -> Ordering {
        other.t.total_cmp(&self.t).then_with(|| other.idx.cmp(&self.idx))
    }
}

struct Marcher {
    w: usize,
    h: usize,
    ch: usize,
    flags: Vec<Flag>,
    dist: Vec<f64>,
    values: Vec<f64>,
    radius: isize,
}

impl Marcher {
    #[inline]
    fn flag_at(&self, x: isize, y: isize) -> Flag {
        if x < 0 || y < 0 || x as usize >= self.w || y as usize >= self.h {
            Flag::Inside
        } else {
            self.flags[y as usize * self.w + x as usize]
        }
    }

    #[inline]
    fn dist_at(&self, x: isize, y: isize) -> f64 {
        self.dist[y as usize * self.w + x as usize]
    }

    fn solve(&self, (x1, y1): (isize, isize), (x2, y2): (isize, isize)) -> f64 {
        let k1 = self.flag_at(x1, y1) != Flag::Inside;
        let k2 = self.flag_at(x2, y2) != Flag::Inside;
        match (k1, k2) {
            (true, true) => {
                let (a, b) = (self.dist_at(x1, y1), self.dist_at(x2, y2));
                if (a - b).abs() >= 1.0 {
                    1.0 + a.min(b)
                } else {
                    (a + b + (2.0 - (a - b) * (a - b)).sqrt()) * 0.5
                }
            }
            (true, false) => 1.0 + self.dist_at(x1, y1),
            (false, true) => 1.0 + self.dist_at(x2, y2),
            (false, false) => f64::INFINITY,
        }
    }

    fn arrival_time(&self, x: isize, y: isize) -> f64 {
        let up = (x, y - 1);
        let down = (x, y + 1);
        let left = (x - 1, y);
        let right = (x + 1, y);
        self.solve(up, left).min(self.solve(down, left)).min(self.solve(up, right)).min(self.solve(down, right))
    }

    /// Central difference when both sides are known, one-sided otherwise.
    fn derivative(&self, x: isize, y: isize, dx: isize, dy: isize, f: impl Fn(usize) -> f64) -> f64 {
        let at = |x: isize, y: isize| f(y as usize * self.w + x as usize);
        let fwd = self.flag_at(x + dx, y + dy) != Flag::Inside;
        let bwd = self.flag_at(x - dx, y - dy) != Flag::Inside;
        match (fwd, bwd) {
            (true, true) => (at(x + dx, y + dy) - at(x - dx, y - dy)) * 0.5,
            (true, false) => at(x + dx, y + dy) - at(x, y),
            (false, true) => at(x, y) - at(x - dx, y - dy),
            (false, false) => 0.0,
        }
    }

    fn fill(&mut self, x: isize, y: isize) {
        let p = y as usize * self.w + x as usize;
        let gtx = self.derivative(x, y, 1, 0, |i| self.dist[i]);
        let gty = self.derivative(x, y, 0, 1, |i| self.dist[i]);
        let gnorm = (gtx * gtx + gty * gty).sqrt();
        let tp = self.dist[p];

        let mut num = vec![0f64; self.ch];
        let mut den = 0f64;
        let r2 = self.radius * self.radius;
        for ky in y - self.radius..=y + self.radius {
            for kx in x - self.radius..=x + self.radius {
                let (rx, ry) = (x - kx, y - ky);
                let len2 = rx * rx + ry * ry;
                if len2 == 0 || len2 > r2 || self.flag_at(kx, ky) == Flag::Inside {
                    continue;
                }
                let len2 = len2 as f64;
                let len = len2.sqrt();
                let q = ky as usize * self.w + kx as usize;

                let mut dir = if gnorm > 0.0 { (rx as f64 * gtx + ry as f64 * gty) / (len * gnorm) } else { 0.0 };
                if dir.abs() <= 0.01 {
                    dir = 1e-6;
                }
                let dst = 1.0 / len2;
                let lev = 1.0 / (1.0 + (self.dist[q] - tp).abs());
                let weight = (dir * dst * lev).abs();

                for c in 0..self.ch {
                    let ch = self.ch;
                    let gx = self.derivative(kx, ky, 1, 0, |i| self.values[i * ch + c]);
                    let gy = self.derivative(kx, ky, 0, 1, |i| self.values[i * ch + c]);
                    let estimate = self.values[q * ch + c] + gx * rx as f64 + gy * ry as f64;
                    num[c] += weight * estimate;
                }
                den += weight;
            }
        }
        if den > 0.0 {
            for (c, n) in num.iter().enumerate() {
                self.values[p * self.ch + c] = (n / den).round().clamp(0.0, 255.0);
            }
        }
    }
}

/// Fills the masked pixels of `img`. Pixels outside the mask are copied bit-exactly.
pub fn inpaint_telea(img: &RasterImage, mask: &BinaryImage, radius: usize) -> Result<RasterImage> {
    if img.dims() != mask.dims() {
        return Err(Error::DimensionMismatch { left: img.dims(), right: mask.dims() });
    }
    if radius < 1 {
        return Err(Error::param("inpainting radius must be >= 1"));
    }
    let (w, h) = img.dims();
    let inside = mask.ink_count();
    if inside == 0 {
        return Ok(img.clone());
    }
    if inside == w * h {
        return Err(Error::NoBoundary);
    }

    let mut m = Marcher {
        w,
        h,
        ch: img.channels(),
        flags: mask.mask().iter().map(|&b| if b { Flag::Inside } else { Flag::Known }).collect(),
        dist: mask.mask().iter().map(|&b| if b { f64::INFINITY } else { 0.0 }).collect(),
        values: img.data().iter().map(|&v| v as f64).collect(),
        radius: radius as isize,
    };

    let mut heap = BinaryHeap::new();
    for y in 0..h as isize {
        for x in 0..w as isize {
            let i = y as usize * w + x as usize;
            if m.flags[i] == Flag::Known
                && [(1, 0), (-1, 0), (0, 1), (0, -1)].iter().any(|&(dx, dy)| {
                    let (nx, ny) = (x + dx, y + dy);
                    nx >= 0 && ny >= 0 && (nx as usize) < w && (ny as usize) < h && m.flags[ny as usize * w + nx as usize] == Flag::Inside
                })
            {
                m.flags[i] = Flag::Band;
                heap.push(Entry { t: 0.0, idx: i });
            }
        }
    }

    while let Some(Entry { idx, .. }) = heap.pop() {
        if m.flags[idx] == Flag::Known {
            continue;
        }
        m.flags[idx] = Flag::Known;
        let (x, y) = ((idx % w) as isize, (idx / w) as isize);
        for (dx, dy) in [(0, -1), (-1, 0), (1, 0), (0, 1)] {
            let (nx, ny) = (x + dx, y + dy);
            if nx < 0 || ny < 0 || nx as usize >= w || ny as usize >= h || m.flag_at(nx, ny) != Flag::Inside {
                continue;
            }
            let n = ny as usize * w + nx as usize;
            m.dist[n] = m.arrival_time(nx, ny);
            // still Inside while filling, so gradients never read the damaged value
            m.fill(nx, ny);
            m.flags[n] = Flag::Band;
            heap.push(Entry { t: m.dist[n], idx: n });
        }
    }

    let mut out = img.clone();
    for y in 0..h {
        for x in 0..w {
            if mask.is_ink(x, y) {
                let i = y * w + x;
                let px = out.pixel_mut(x, y);
                for (c, v) in px.iter_mut().enumerate() {
                    *v = m.values[i * m.ch + c] as u8;
                }
            }
        }
    }
    Ok(out)
}

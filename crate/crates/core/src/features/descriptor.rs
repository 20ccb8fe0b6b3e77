//! Gradient-orientation histogram over a 4x4 cell grid with the Hellinger
//! (square-root) mapping applied at the end.

use super::{Patch, PATCH};
use crate::{Error, Result};

pub const DESCRIPTOR_DIM: usize = 128;
const CELLS: usize = 4;
const BINS: usize = 8;
const CELL: usize = PATCH / CELLS;
const SIGMA: f64 = 8.0;
const CLAMP: f64 = 0.2;

/// Octant of the gradient direction, counter-clockwise from +x. Bins are
/// decided by exact comparisons; `v` and `-v` always land four bins apart.
/// Returns `None` for the zero vector.
pub fn orientation_bin(gx: f64, gy: f64) -> Option<usize> {
    if gx == 0.0 && gy == 0.0 {
        return None;
    }
    let upper = gy > 0.0 || (gy == 0.0 && gx > 0.0);
    if !upper {
        return orientation_bin(-gx, -gy).map(|b| b + 4);
    }
    Some(if gx > 0.0 && gy < gx {
        0
    } else if gx > 0.0 {
        1
    } else if gy > -gx {
        2
    } else {
        3
    })
}

fn l2_normalize(v: &mut [f64]) -> bool {
    let n = v.iter().map(|x| x * x).sum::<f64>().sqrt();
    if n > 0.0 {
        v.iter_mut().for_each(|x| *x /= n);
    }
    n > 0.0
}

pub fn compute_descriptor(patch: &[f32]) -> Result<[f32; DESCRIPTOR_DIM]> {
    if patch.len() != PATCH * PATCH {
        return Err(Error::param(format!("patch must have {} values, got {}", PATCH * PATCH, patch.len())));
    }
    let at = |x: isize, y: isize| patch[y.clamp(0, PATCH as isize - 1) as usize * PATCH + x.clamp(0, PATCH as isize - 1) as usize] as f64;
    let centre = (PATCH as f64 - 1.0) / 2.0;
    let mut hist = [0f64; DESCRIPTOR_DIM];
    for y in 0..PATCH as isize {
        for x in 0..PATCH as isize {
            let gx = (at(x + 1, y) - at(x - 1, y)) / 2.0;
            let gy = (at(x, y + 1) - at(x, y - 1)) / 2.0;
            let Some(bin) = orientation_bin(gx, gy) else { continue };
            let (dx, dy) = (x as f64 - centre, y as f64 - centre);
            let weight = (-(dx * dx + dy * dy) / (2.0 * SIGMA * SIGMA)).exp();
            let cell = (y as usize / CELL) * CELLS + x as usize / CELL;
            hist[cell * BINS + bin] += weight * (gx * gx + gy * gy).sqrt();
        }
    }
    if !l2_normalize(&mut hist) {
        return Ok([0.0; DESCRIPTOR_DIM]);
    }
    hist.iter_mut().for_each(|v| *v = v.min(CLAMP));
    l2_normalize(&mut hist);
    let l1: f64 = hist.iter().sum();
    let mut out = [0f32; DESCRIPTOR_DIM];
    for (o, v) in out.iter_mut().zip(hist) {
        *o = (v / l1).sqrt() as f32;
    }
    Ok(out)
}

/// Row-major `n x 128` descriptor matrix.
pub fn compute_descriptors(patches: &[Patch]) -> Result<Vec<f32>> {
    use rayon::prelude::*;
    let rows: Vec<[f32; DESCRIPTOR_DIM]> = patches.par_iter().map(|p| compute_descriptor(p)).collect::<Result<_>>()?;
    Ok(rows.into_iter().flatten().collect())
}

#[cfg(test)]
mod tests {
    use super::*;

    fn rotate180(p: &[f32]) -> Vec<f32> {
        p.iter().rev().copied().collect()
    }

    #[test]
    fn uniform_patch_gives_zero_vector() {
        for v in [0.0, 1.0] {
            assert!(compute_descriptor(&vec![v; 1024]).unwrap().iter().all(|&x| x == 0.0));
        }
    }

    #[test]
    fn nonzero_descriptors_have_unit_norm() {
        let p: Vec<f32> = (0..1024).map(|i| if (i % 32) * (i / 32) % 7 < 3 { 1.0 } else { 0.0 }).collect();
        let d = compute_descriptor(&p).unwrap();
        let n: f64 = d.iter().map(|&v| (v as f64).powi(2)).sum::<f64>().sqrt();
        assert!((n - 1.0).abs() <= 1e-6);
    }

    #[test]
    fn opposite_vectors_are_four_bins_apart() {
        let vals = [-2.0, -1.0, -0.5, 0.0, 0.5, 1.0, 2.0];
        for &gx in &vals {
            for &gy in &vals {
                match orientation_bin(gx, gy) {
                    None => assert!(gx == 0.0 && gy == 0.0),
                    Some(b) => assert_eq!(orientation_bin(-gx, -gy), Some((b + 4) % 8)),
                }
            }
        }
        assert_eq!(orientation_bin(1.0, 0.0), Some(0));
        assert_eq!(orientation_bin(1.0, 1.0), Some(1));
        assert_eq!(orientation_bin(0.0, 1.0), Some(2));
        assert_eq!(orientation_bin(-1.0, 1.0), Some(3));
        assert_eq!(orientation_bin(-1.0, 0.0), Some(4));
        assert_eq!(orientation_bin(0.0, -1.0), Some(6));
    }

    #[test]
    fn half_turn_permutes_cells_and_bins() {
        // cell (cy, cx) moves to (3-cy, 3-cx) and every direction flips
        let p: Vec<f32> = (0..1024).map(|i| if (i * 37 + i / 32 * 11) % 13 < 5 { 1.0 } else { 0.0 }).collect();
        let d = compute_descriptor(&p).unwrap();
        let r = compute_descriptor(&rotate180(&p)).unwrap();
        for cy in 0..4 {
            for cx in 0..4 {
                for b in 0..8 {
                    let src = (cy * 4 + cx) * 8 + b;
                    let dst = ((3 - cy) * 4 + (3 - cx)) * 8 + (b + 4) % 8;
                    assert!((d[src] - r[dst]).abs() <= 1e-6, "{src} -> {dst}");
                }
            }
        }
    }
}

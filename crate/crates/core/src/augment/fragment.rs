use super::FragmentOverlay;
use crate::imgcore::{to_grayscale, RasterImage};
use crate::{Error, Result};

/// Cuts out the bright surround of a papyrus photograph.
///
/// Pixels brighter than `bg_threshold` that belong to the largest 4-connected
/// bright region touching the image border become opaque (keeping their source
/// colour); everything else is transparent. Photographs where fewer than 1% of
/// the border pixels are bright are rejected.
pub fn extract_fragment(papyrus: &RasterImage, bg_threshold: u8) -> Result<FragmentOverlay> {
    let gray = to_grayscale(papyrus);
    let (w, h) = gray.dims();
    let bright: Vec<bool> = gray.data().iter().map(|&v| v > bg_threshold).collect();

    let border: Vec<usize> = border_indices(w, h);
    let bright_border = border.iter().filter(|&&i| bright[i]).count();
    if bright_border * 100 < border.len() {
        return Err(Error::BackgroundTooDark { bright: bright_border, total: border.len() });
    }

    // label border-touching bright regions, keep the largest (first found on ties)
    let mut label = vec![u32::MAX; w * h];
    let mut best: Option<(u32, usize)> = None;
    let mut next = 0u32;
    let mut stack = Vec::new();
    for &seed in &border {
        if !bright[seed] || label[seed] != u32::MAX {
            continue;
        }
        let mut size = 0usize;
        label[seed] = next;
        stack.push(seed);
        while let Some(i) = stack.pop() {
            size += 1;
            let (x, y) = (i % w, i / w);
            let mut visit = |j: usize| {
                if bright[j] && label[j] == u32::MAX {
                    label[j] = next;
                    stack.push(j);
                }
            };
            if x > 0 {
                visit(i - 1);
            }
            if x + 1 < w {
                visit(i + 1);
            }
            if y > 0 {
                visit(i - w);
            }
            if y + 1 < h {
                visit(i + w);
            }
        }
        if best.is_none_or(|(_, s)| size > s) {
            best = Some((next, size));
        }
        next += 1;
    }
    let (keep, _) = best.ok_or(Error::BackgroundTooDark { bright: 0, total: border.len() })?;

    let rgb = papyrus.to_rgb();
    let mut data = Vec::with_capacity(w * h * 4);
    for (i, px) in rgb.data().chunks_exact(3).enumerate() {
        if label[i] == keep {
            data.extend_from_slice(&[px[0], px[1], px[2], 255]);
        } else {
            data.extend_from_slice(&[0, 0, 0, 0]);
        }
    }
    FragmentOverlay::new(RasterImage::new(w, h, 4, data)?)
}

fn border_indices(w: usize, h: usize) -> Vec<usize> {
    let mut out = Vec::new();
    for y in 0..h {
        for x in 0..w {
            if x == 0 || y == 0 || x + 1 == w || y + 1 == h {
                out.push(y * w + x);
            }
        }
    }
    out
}

use super::{AugmentConfig, FragmentOverlay};
use crate::imgcore::RasterImage;

/// Bilinear resampling with pixel-centre alignment; same-size input is returned unchanged.
pub fn resize_bilinear(img: &RasterImage, width: usize, height: usize) -> RasterImage {
    if img.dims() == (width, height) {
        return img.clone();
    }
    let (sw, sh) = img.dims();
    let ch = img.channels();
    let map = |d: usize, dst: usize, src: usize| -> (usize, usize, f64) {
        let s = ((d as f64 + 0.5) * src as f64 / dst as f64 - 0.5).clamp(0.0, (src - 1) as f64);
        let i0 = s.floor() as usize;
        let i1 = (i0 + 1).min(src - 1);
        (i0, i1, s - i0 as f64)
    };
    let mut data = Vec::with_capacity(width * height * ch);
    for y in 0..height {
        let (y0, y1, fy) = map(y, height, sh);
        for x in 0..width {
            let (x0, x1, fx) = map(x, width, sw);
            for c in 0..ch {
                let p = |xx: usize, yy: usize| img.pixel(xx, yy)[c] as f64;
                let top = p(x0, y0) * (1.0 - fx) + p(x1, y0) * fx;
                let bottom = p(x0, y1) * (1.0 - fx) + p(x1, y1) * fx;
                data.push((top * (1.0 - fy) + bottom * fy).round().clamp(0.0, 255.0) as u8);
            }
        }
    }
    RasterImage::new(width, height, ch, data).expect("sized")
}

pub fn resize_nearest(img: &RasterImage, width: usize, height: usize) -> RasterImage {
    if img.dims() == (width, height) {
        return img.clone();
    }
    let (sw, sh) = img.dims();
    let pick = |d: usize, dst: usize, src: usize| (((d as f64 + 0.5) * src as f64 / dst as f64) as usize).min(src - 1);
    let mut data = Vec::with_capacity(width * height * img.channels());
    for y in 0..height {
        let sy = pick(y, height, sh);
        for x in 0..width {
            data.extend_from_slice(img.pixel(pick(x, width, sw), sy));
        }
    }
    RasterImage::new(width, height, img.channels(), data).expect("sized")
}

/// Fixed-point scale for the texture opacity; opacities are exact to 1e-6.
const ALPHA_SCALE: u64 = 1_000_000;

/// `alpha * t + (1 - alpha) * s`, rounded half away from zero.
#[inline]
pub fn blend(texture: u8, source: u8, alpha: f64) -> u8 {
    let a = (alpha * ALPHA_SCALE as f64).round() as u64;
    ((a * texture as u64 + (ALPHA_SCALE - a) * source as u64 + ALPHA_SCALE / 2) / ALPHA_SCALE) as u8
}

/// Blends the resized texture over the source at `cfg.texture_alpha`, then pastes the opaque overlay pixels.
/// Output is RGB at the source's size.
pub fn compose_augmented(source: &RasterImage, texture: &RasterImage, overlay: &FragmentOverlay, cfg: &AugmentConfig) -> RasterImage {
    let src = source.to_rgb();
    let (w, h) = src.dims();
    let tex = resize_bilinear(&texture.to_rgb(), w, h);
    let ov = resize_nearest(overlay.image(), w, h);

    let mut data = Vec::with_capacity(w * h * 3);
    for ((s, t), o) in src.data().chunks_exact(3).zip(tex.data().chunks_exact(3)).zip(ov.data().chunks_exact(4)) {
        if o[3] == 255 {
            data.extend_from_slice(&o[..3]);
        } else {
            for c in 0..3 {
                data.push(blend(t[c], s[c], cfg.texture_alpha));
            }
        }
    }
    RasterImage::new(w, h, 3, data).expect("sized")
}

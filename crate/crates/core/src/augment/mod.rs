//! Papyrus-style augmentation of binarization training images.
//!
//! Two ingredients are harvested from papyrus photographs: a text-free fibre
//! texture (text mask + inpainting) and the silhouette of the fragment
//! (bright surround cut out as an RGBA overlay). Both are then composited onto
//! an ordinary training image.

mod compose;
mod driver;
mod fragment;
mod inpaint;

pub use compose::{blend, compose_augmented, resize_bilinear, resize_nearest};
pub use driver::{reproduce_entry, run_augmentation, AugmentJob, AugmentManifest, AugmentedEntry};
pub use fragment::extract_fragment;
pub use inpaint::inpaint_telea;

use serde::{Deserialize, Serialize};

use crate::binarize::{Binarizer, LocalThreshParams};
use crate::imgcore::{to_grayscale, BinaryImage, RasterImage};
use crate::{Error, Result};

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct AugmentConfig {
    pub inpaint_radius: usize,
    /// Opacity of the texture layer.
    pub texture_alpha: f64,
    pub bg_threshold: u8,
    pub seed: u64,
}

impl Default for AugmentConfig {
    fn default() -> Self {
        Self { inpaint_radius: 5, texture_alpha: 0.70, bg_threshold: 170, seed: 0 }
    }
}

impl AugmentConfig {
    pub fn validate(&self) -> Result<()> {
        if self.inpaint_radius < 1 {
            return Err(Error::param("inpaint radius must be >= 1"));
        }
        if !(self.texture_alpha > 0.0 && self.texture_alpha <= 1.0) {
            return Err(Error::param(format!("texture alpha must lie in (0, 1], got {}", self.texture_alpha)));
        }
        Ok(())
    }
}

/// RGBA overlay: opaque outside the fragment, fully transparent inside.
#[derive(Clone, Debug, PartialEq)]
pub struct FragmentOverlay(RasterImage);

impl FragmentOverlay {
    pub fn new(img: RasterImage) -> Result<Self> {
        if img.channels() != 4 {
            return Err(Error::InvalidImage("fragment overlay must be RGBA".into()));
        }
        if img.data().chunks_exact(4).any(|px| px[3] != 0 && px[3] != 255) {
            return Err(Error::InvalidImage("fragment overlay alpha must be 0 or 255".into()));
        }
        Ok(Self(img))
    }

    pub fn image(&self) -> &RasterImage {
        &self.0
    }

    pub fn is_opaque(&self, x: usize, y: usize) -> bool {
        self.0.pixel(x, y)[3] == 255
    }
}

/// Where the text mask of a papyrus comes from.
pub enum MaskSource<'a> {
    Binarizer(&'a dyn Binarizer, &'a LocalThreshParams),
    External(&'a BinaryImage),
}

/// Ink mask to be removed before inpainting, grown by one pixel to cover stroke fringes.
pub fn text_mask(papyrus: &RasterImage, source: MaskSource<'_>) -> Result<BinaryImage> {
    let raw = match source {
        MaskSource::Binarizer(b, params) => b.binarize(&to_grayscale(papyrus), params)?,
        MaskSource::External(mask) => {
            if mask.dims() != papyrus.dims() {
                return Err(Error::DimensionMismatch { left: papyrus.dims(), right: mask.dims() });
            }
            mask.clone()
        }
    };
    Ok(raw.dilate8())
}

/// Text-free texture: the papyrus with its (dilated) text mask inpainted.
pub fn synthesize_texture(papyrus: &RasterImage, source: MaskSource<'_>, radius: usize) -> Result<RasterImage> {
    let mask = text_mask(papyrus, source)?;
    inpaint_telea(&papyrus.to_rgb(), &mask, radius)
}

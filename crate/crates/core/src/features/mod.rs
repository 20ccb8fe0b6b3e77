//! Local features for writer identification: keypoints, binary patches,
//! descriptors, k-means codebooks and VLAD embeddings.

mod descriptor;
mod detect;
mod kmeans;
mod pdsc;
mod vlad;

pub use descriptor::{compute_descriptor, compute_descriptors, orientation_bin, DESCRIPTOR_DIM};
pub use detect::{detect_keypoints, DogParams};
pub use kmeans::{assign_clusters, kmeans_fit, Codebook, KmeansParams};
pub use pdsc::{decode_pdsc, encode_pdsc, read_pdsc, write_pdsc};
pub use vlad::{vlad_aggregate, vlad_encode, VladOptions, VladVector};

use serde::{Deserialize, Serialize};

use crate::imgcore::{BinaryImage, RasterImage};
use crate::{Error, Result};

/// Side length of a patch.
pub const PATCH: usize = 32;
const HALF: usize = PATCH / 2;

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub struct Keypoint {
    pub x: u32,
    pub y: u32,
}

/// A 32x32 patch, row-major, ink = 1.
pub type Patch = Vec<f32>;

/// Descriptors of one image. `values` is row-major `n x d`.
#[derive(Clone, Debug, PartialEq)]
pub struct DescriptorSet {
    pub image_id: String,
    pub d: usize,
    pub values: Vec<f32>,
    pub keypoints: Vec<Keypoint>,
}

impl DescriptorSet {
    pub fn new(image_id: impl Into<String>, d: usize, values: Vec<f32>, keypoints: Vec<Keypoint>) -> Result<Self> {
        if d == 0 {
            return Err(Error::param("descriptor dimension must be positive"));
        }
        if values.len() != keypoints.len() * d {
            return Err(Error::Format {
                what: "descriptor set",
                reason: format!("{} values for {} keypoints of dimension {d}", values.len(), keypoints.len()),
            });
        }
        if values.iter().any(|v| !v.is_finite()) {
            return Err(Error::Format { what: "descriptor set", reason: "non-finite value".into() });
        }
        Ok(Self { image_id: image_id.into(), d, values, keypoints })
    }

    pub fn len(&self) -> usize {
        self.keypoints.len()
    }

    pub fn is_empty(&self) -> bool {
        self.keypoints.is_empty()
    }

    pub fn row(&self, i: usize) -> &[f32] {
        &self.values[i * self.d..(i + 1) * self.d]
    }

    pub fn rows(&self) -> impl Iterator<Item = &[f32]> {
        self.values.chunks_exact(self.d)
    }
}

/// Cuts 32x32 patches from `binary` around each keypoint. A patch survives when
/// it lies fully inside the image and at least `min_fg` of its pixels are ink.
pub fn extract_patches(gray: &RasterImage, binary: &BinaryImage, kps: &[Keypoint], min_fg: f64) -> Result<(Vec<Patch>, Vec<Keypoint>)> {
    if gray.dims() != binary.dims() {
        return Err(Error::DimensionMismatch { left: gray.dims(), right: binary.dims() });
    }
    let (w, h) = binary.dims();
    let mut patches = Vec::new();
    let mut kept = Vec::new();
    for &kp in kps {
        let (x, y) = (kp.x as usize, kp.y as usize);
        if x < HALF || y < HALF || x + HALF > w || y + HALF > h {
            continue;
        }
        let mut patch = Vec::with_capacity(PATCH * PATCH);
        for py in y - HALF..y + HALF {
            for px in x - HALF..x + HALF {
                patch.push(if binary.is_ink(px, py) { 1.0 } else { 0.0 });
            }
        }
        let ink = patch.iter().filter(|&&v| v > 0.0).count();
        if ink as f64 >= min_fg * (PATCH * PATCH) as f64 {
            patches.push(patch);
            kept.push(kp);
        }
    }
    Ok((patches, kept))
}

/// Keypoints on `gray`, patches from `binary`, built-in descriptors.
pub fn describe_image(image_id: &str, gray: &RasterImage, binary: &BinaryImage, min_fg: f64) -> Result<DescriptorSet> {
    let kps = detect_keypoints(gray, &DogParams::default())?;
    let (patches, kept) = extract_patches(gray, binary, &kps, min_fg)?;
    let values = compute_descriptors(&patches)?;
    DescriptorSet::new(image_id, DESCRIPTOR_DIM, values, kept)
}

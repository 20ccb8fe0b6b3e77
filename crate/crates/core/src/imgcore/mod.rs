//! Raster and bitmask types shared by every other module.

mod gray;
pub(crate) mod integral;
pub mod io;
mod skeleton;

pub use gray::to_grayscale;
pub use integral::{IntegralImage, SummedArea};
pub use skeleton::skeletonize;

use crate::{Error, Result};

/// Row-major, channel-interleaved 8-bit raster with 1, 3 or 4 channels.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct RasterImage {
    width: usize,
    height: usize,
    channels: usize,
    data: Vec<u8>,
}

impl RasterImage {
    pub fn new(width: usize, height: usize, channels: usize, data: Vec<u8>) -> Result<Self> {
        if width == 0 || height == 0 {
            return Err(Error::InvalidImage(format!("empty extent {width}x{height}")));
        }
        if !matches!(channels, 1 | 3 | 4) {
            return Err(Error::InvalidImage(format!("unsupported channel count {channels}")));
        }
        if data.len() != width * height * channels {
            return Err(Error::InvalidImage(format!(
                "expected {} samples, got {}",
                width * height * channels,
                data.len()
            )));
        }
        Ok(Self { width, height, channels, data })
    }

    /// Image with every sample set to `value`.
    pub fn filled(width: usize, height: usize, channels: usize, value: u8) -> Result<Self> {
        Self::new(width, height, channels, vec![value; width * height * channels])
    }

    /// Single-channel image built from a per-pixel function.
    pub fn from_gray_fn(width: usize, height: usize, f: impl Fn(usize, usize) -> u8) -> Result<Self> {
        let mut data = Vec::with_capacity(width * height);
        for y in 0..height {
            for x in 0..width {
                data.push(f(x, y));
            }
        }
        Self::new(width, height, 1, data)
    }

    pub fn width(&self) -> usize {
        self.width
    }

    pub fn height(&self) -> usize {
        self.height
    }

    pub fn channels(&self) -> usize {
        self.channels
    }

    pub fn dims(&self) -> (usize, usize) {
        (self.width, self.height)
    }

    pub fn data(&self) -> &[u8] {
        &self.data
    }

    pub fn into_data(self) -> Vec<u8> {
        self.data
    }

    pub fn is_gray(&self) -> bool {
        self.channels == 1
    }

    /// Samples of the pixel at (x, y).
    #[inline]
    pub fn pixel(&self, x: usize, y: usize) -> &[u8] {
        let i = (y * self.width + x) * self.channels;
        &self.data[i..i + self.channels]
    }

    #[inline]
    pub fn pixel_mut(&mut self, x: usize, y: usize) -> &mut [u8] {
        let i = (y * self.width + x) * self.channels;
        &mut self.data[i..i + self.channels]
    }

    /// First sample of the pixel; the intensity for single-channel images.
    #[inline]
    pub fn get(&self, x: usize, y: usize) -> u8 {
        self.data[(y * self.width + x) * self.channels]
    }

    pub(crate) fn require_gray(&self, op: &str) -> Result<()> {
        if self.channels != 1 {
            return Err(Error::InvalidImage(format!(
                "{op} expects a 1-channel image, got {} channels",
                self.channels
            )));
        }
        Ok(())
    }

    /// Drops alpha and replicates gray so the result always has three channels.
    pub fn to_rgb(&self) -> RasterImage {
        let mut data = Vec::with_capacity(self.width * self.height * 3);
        for px in self.data.chunks_exact(self.channels) {
            match self.channels {
                1 => data.extend_from_slice(&[px[0], px[0], px[0]]),
                _ => data.extend_from_slice(&px[..3]),
            }
        }
        RasterImage { width: self.width, height: self.height, channels: 3, data }
    }
}

/// Ink/background bitmask. `true` is ink.
#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct BinaryImage {
    width: usize,
    height: usize,
    mask: Vec<bool>,
}

impl BinaryImage {
    /// All-background mask.
    pub fn new(width: usize, height: usize) -> Self {
        Self { width, height, mask: vec![false; width * height] }
    }

    pub fn from_mask(width: usize, height: usize, mask: Vec<bool>) -> Result<Self> {
        if width == 0 || height == 0 {
            return Err(Error::InvalidImage(format!("empty extent {width}x{height}")));
        }
        if mask.len() != width * height {
            return Err(Error::InvalidImage(format!(
                "mask has {} entries for a {width}x{height} image",
                mask.len()
            )));
        }
        Ok(Self { width, height, mask })
    }

    pub fn from_fn(width: usize, height: usize, f: impl Fn(usize, usize) -> bool) -> Self {
        let mut mask = Vec::with_capacity(width * height);
        for y in 0..height {
            for x in 0..width {
                mask.push(f(x, y));
            }
        }
        Self { width, height, mask }
    }

    /// Reads a DIBCO-style raster: samples below 128 (after grayscale conversion) are ink.
    pub fn from_raster(img: &RasterImage) -> Self {
        let gray = to_grayscale(img);
        Self {
            width: gray.width(),
            height: gray.height(),
            mask: gray.data().iter().map(|&v| v < 128).collect(),
        }
    }

    /// Serializes with ink = 0 and background = 255.
    pub fn to_raster(&self) -> RasterImage {
        let data = self.mask.iter().map(|&ink| if ink { 0 } else { 255 }).collect();
        RasterImage { width: self.width, height: self.height, channels: 1, data }
    }

    pub fn width(&self) -> usize {
        self.width
    }

    pub fn height(&self) -> usize {
        self.height
    }

    pub fn dims(&self) -> (usize, usize) {
        (self.width, self.height)
    }

    pub fn mask(&self) -> &[bool] {
        &self.mask
    }

    #[inline]
    pub fn is_ink(&self, x: usize, y: usize) -> bool {
        self.mask[y * self.width + x]
    }

    /// Out-of-bounds reads are background.
    #[inline]
    pub fn is_ink_at(&self, x: isize, y: isize) -> bool {
        x >= 0
            && y >= 0
            && (x as usize) < self.width
            && (y as usize) < self.height
            && self.mask[y as usize * self.width + x as usize]
    }

    #[inline]
    pub fn set(&mut self, x: usize, y: usize, ink: bool) {
        self.mask[y * self.width + x] = ink;
    }

    pub fn ink_count(&self) -> usize {
        self.mask.iter().filter(|&&b| b).count()
    }

    pub fn is_empty(&self) -> bool {
        !self.mask.iter().any(|&b| b)
    }

    pub fn inverted(&self) -> BinaryImage {
        Self {
            width: self.width,
            height: self.height,
            mask: self.mask.iter().map(|&b| !b).collect(),
        }
    }

    /// Grows the ink set by one pixel in the 8-neighbourhood.
    pub fn dilate8(&self) -> BinaryImage {
        Self::from_fn(self.width, self.height, |x, y| {
            (-1..=1).any(|dy| (-1..=1).any(|dx| self.is_ink_at(x as isize + dx, y as isize + dy)))
        })
    }

    pub(crate) fn check_same_dims(&self, other: &BinaryImage) -> Result<()> {
        if self.dims() != other.dims() {
            return Err(Error::DimensionMismatch { left: self.dims(), right: other.dims() });
        }
        Ok(())
    }
}

//! Classical global and local thresholders.
//!
//! Every method implements [`Binarizer`] and is looked up by name through a
//! [`Registry`]; the CLI and the grid search only ever see the trait object.

mod gatos;
mod grid;
mod local;
mod otsu;
mod su;

use std::fmt;

pub use gatos::{Gatos, GatosConstants};
pub use grid::{grid_search, GridCell, GridResult, GridSpec, Objective};
pub use local::{LocalMethod, LocalThreshold};
pub use otsu::{otsu_threshold, Otsu};
pub use su::Su;

use crate::imgcore::{BinaryImage, RasterImage};
use crate::{Error, Result};

/// Tunable parameters shared by the local thresholders. Each method reads the
/// subset it needs; `k = None` selects the method's default sensitivity.
#[derive(Clone, Debug, PartialEq, serde::Serialize, serde::Deserialize)]
pub struct LocalThreshParams {
    pub window: usize,
    pub k: Option<f64>,
    /// Dynamic range of the standard deviation (Sauvola).
    pub r: f64,
    /// Minimum number of high-contrast pixels in the window (Su).
    pub min_n: usize,
    /// Background-surface search radius in pixels (Gatos).
    pub glyph: usize,
    pub gatos: GatosConstants,
}

impl Default for LocalThreshParams {
    fn default() -> Self {
        Self {
            window: 37,
            k: None,
            r: 128.0,
            min_n: 37,
            glyph: 60,
            gatos: GatosConstants::default(),
        }
    }
}

impl LocalThreshParams {
    pub fn with_window(window: usize) -> Self {
        Self { window, ..Self::default() }
    }

    pub fn validate(&self) -> Result<()> {
        if self.window < 3 || self.window % 2 == 0 {
            return Err(Error::param(format!("window must be odd and >= 3, got {}", self.window)));
        }
        if let Some(k) = self.k {
            if !k.is_finite() {
                return Err(Error::param("k must be finite"));
            }
        }
        if !(self.r.is_finite() && self.r > 0.0) {
            return Err(Error::param("R must be positive"));
        }
        if self.min_n < 1 {
            return Err(Error::param("minN must be >= 1"));
        }
        if self.glyph < 1 {
            return Err(Error::param("glyph must be >= 1"));
        }
        Ok(())
    }
}

/// Which grid dimensions a method is searched over.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum GridAxes {
    None,
    Window,
    WindowMinN,
    WindowGlyph,
}

pub trait Binarizer: Send + Sync {
    fn name(&self) -> &'static str;

    fn grid_axes(&self) -> GridAxes;

    /// Binarizes a single-channel image; ink is dark (`I <= T`).
    fn binarize(&self, gray: &RasterImage, params: &LocalThreshParams) -> Result<BinaryImage>;
}

impl fmt::Debug for dyn Binarizer {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "Binarizer({})", self.name())
    }
}

/// Name-keyed collection of binarizers.
pub struct Registry {
    entries: Vec<Box<dyn Binarizer>>,
}

impl Registry {
    pub fn empty() -> Self {
        Self { entries: Vec::new() }
    }

    /// The six built-in methods.
    pub fn builtin() -> Self {
        let mut reg = Self::empty();
        reg.register(Box::new(Otsu));
        reg.register(Box::new(LocalThreshold(LocalMethod::Sauvola)));
        reg.register(Box::new(LocalThreshold(LocalMethod::Nick)));
        reg.register(Box::new(LocalThreshold(LocalMethod::Trsingh)));
        reg.register(Box::new(Su));
        reg.register(Box::new(Gatos));
        reg
    }

    /// Adds a method, replacing any existing entry with the same name.
    pub fn register(&mut self, b: Box<dyn Binarizer>) {
        self.entries.retain(|e| e.name() != b.name());
        self.entries.push(b);
    }

    pub fn get(&self, name: &str) -> Result<&dyn Binarizer> {
        let wanted = name.to_ascii_lowercase();
        self.entries
            .iter()
            .find(|e| e.name() == wanted)
            .map(|b| b.as_ref())
            .ok_or_else(|| Error::param(format!("unknown binarization method '{name}' (known: {})", self.names().join(", "))))
    }

    pub fn names(&self) -> Vec<&'static str> {
        self.entries.iter().map(|e| e.name()).collect()
    }
}

impl Default for Registry {
    fn default() -> Self {
        Self::builtin()
    }
}

/// Polarity flip `I -> 255 - I`, for light ink on a dark ground.
pub fn invert_gray(gray: &RasterImage) -> RasterImage {
    let data = gray.data().iter().map(|&v| 255 - v).collect();
    RasterImage::new(gray.width(), gray.height(), gray.channels(), data).expect("same extent")
}

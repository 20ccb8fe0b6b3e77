//! Document-image toolkit for degraded manuscripts.
//!
//! The crate covers the full experimental loop around binarizing papyri and
//! measuring what binarization does to writer identification:
//!
//! - [`imgcore`]: raster model, grayscale conversion, integral images, thinning, I/O
//! - [`binarize`]: six classical thresholders behind a name-keyed registry, plus grid search
//! - [`metrics`]: DIBCO scoring (FM, pFM, PSNR, DRD)
//! - [`augment`]: texture inpainting, fragment extraction and alpha composition
//! - [`features`]: keypoints, patches, descriptors, k-means codebooks and VLAD
//! - [`writer`]: writer retrieval and nearest-neighbour writer classification
//! - [`analysis`]: correlation between binarization and writer metrics
//! - [`corpus`]: dataset ingestion, checksums and experiment manifests

pub mod analysis;
pub mod augment;
pub mod binarize;
pub mod corpus;
pub mod error;
pub mod features;
pub mod imgcore;
pub mod metrics;
pub mod report;
pub mod seed;
pub mod writer;

pub use error::{Error, Result};
pub use imgcore::{BinaryImage, RasterImage};

/// Version string embedded in every emitted report.
pub const TOOLKIT_VERSION: &str = concat!("papyrion ", env!("CARGO_PKG_VERSION"));

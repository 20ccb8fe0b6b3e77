//! Corpus-level augmentation with a reproducible manifest.

use std::collections::BTreeMap;
use std::path::{Path, PathBuf};

use rand::Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::{compose_augmented, extract_fragment, synthesize_texture, AugmentConfig, FragmentOverlay, MaskSource};
use crate::binarize::{Binarizer, LocalThreshParams};
use crate::imgcore::io::{read_binary, read_raster, write_raster};
use crate::imgcore::RasterImage;
use crate::report::ReportMeta;
use crate::{seed, Error, Result};

pub struct AugmentJob<'a> {
    pub sources: Vec<PathBuf>,
    pub papyri: Vec<PathBuf>,
    /// Directory of precomputed text masks, matched to papyri by file stem.
    pub masks: Option<PathBuf>,
    pub out_dir: PathBuf,
    pub cfg: AugmentConfig,
    pub mask_binarizer: &'a dyn Binarizer,
    pub mask_params: LocalThreshParams,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct AugmentedEntry {
    pub output: String,
    pub source: String,
    pub texture_image: String,
    pub overlay_image: String,
    pub sub_seed: u64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct AugmentManifest {
    pub meta: ReportMeta,
    pub rejected_overlays: Vec<String>,
    pub entries: Vec<AugmentedEntry>,
}

fn stem(p: &Path) -> String {
    p.file_stem().map(|s| s.to_string_lossy().into_owned()).unwrap_or_default()
}

fn texture_for(job: &AugmentJob<'_>, papyrus_path: &Path) -> Result<RasterImage> {
    let papyrus = read_raster(papyrus_path)?;
    let external = match &job.masks {
        Some(dir) => find_by_stem(dir, &stem(papyrus_path))?,
        None => None,
    };
    match external {
        Some(mask_path) => {
            let mask = read_binary(&mask_path)?;
            synthesize_texture(&papyrus, MaskSource::External(&mask), job.cfg.inpaint_radius)
        }
        None => synthesize_texture(&papyrus, MaskSource::Binarizer(job.mask_binarizer, &job.mask_params), job.cfg.inpaint_radius),
    }
}

fn find_by_stem(dir: &Path, wanted: &str) -> Result<Option<PathBuf>> {
    let entries = std::fs::read_dir(dir).map_err(|e| Error::io(dir, e))?;
    let mut hits: Vec<PathBuf> = entries
        .filter_map(|e| e.ok().map(|e| e.path()))
        .filter(|p| crate::imgcore::io::is_image_path(p) && stem(p).eq_ignore_ascii_case(wanted))
        .collect();
    hits.sort();
    Ok(hits.into_iter().next())
}

/// Produces one augmented image per source. Each output draws its texture and
/// overlay papyrus from an RNG seeded with a sub-seed derived from
/// `(cfg.seed, output index)`, so results do not depend on scheduling.
pub fn run_augmentation(job: &AugmentJob<'_>) -> Result<AugmentManifest> {
    job.cfg.validate()?;
    if job.sources.is_empty() || job.papyri.is_empty() {
        return Err(Error::InsufficientData("augmentation needs at least one source and one papyrus image".into()));
    }

    let overlays: Vec<Result<FragmentOverlay>> = job
        .papyri
        .par_iter()
        .map(|p| extract_fragment(&read_raster(p)?, job.cfg.bg_threshold))
        .collect();
    let mut usable = Vec::new();
    let mut rejected = Vec::new();
    for (i, r) in overlays.iter().enumerate() {
        match r {
            Ok(_) => usable.push(i),
            Err(Error::BackgroundTooDark { .. }) => rejected.push(job.papyri[i].display().to_string()),
            Err(e) => return Err(Error::InvalidImage(format!("{}: {e}", job.papyri[i].display()))),
        }
    }
    if usable.is_empty() {
        return Err(Error::InsufficientData("every papyrus background is darker than the threshold".into()));
    }

    let plan: Vec<(usize, usize, u64)> = (0..job.sources.len())
        .map(|i| {
            let sub = seed::derive(job.cfg.seed, i as u64);
            let mut rng = seed::rng(sub);
            let texture = rng.gen_range(0..job.papyri.len());
            let overlay = usable[rng.gen_range(0..usable.len())];
            (texture, overlay, sub)
        })
        .collect();

    let mut needed: Vec<usize> = plan.iter().map(|p| p.0).collect();
    needed.sort_unstable();
    needed.dedup();
    let textures: BTreeMap<usize, RasterImage> = needed
        .par_iter()
        .map(|&i| texture_for(job, &job.papyri[i]).map(|t| (i, t)))
        .collect::<Result<_>>()?;

    std::fs::create_dir_all(&job.out_dir).map_err(|e| Error::io(&job.out_dir, e))?;
    let entries: Vec<AugmentedEntry> = plan
        .par_iter()
        .enumerate()
        .map(|(i, &(t, o, sub))| {
            let source = read_raster(&job.sources[i])?;
            let overlay = overlays[o].as_ref().expect("usable");
            let out = compose_augmented(&source, &textures[&t], overlay, &job.cfg);
            let name = format!("{}_aug.png", stem(&job.sources[i]));
            write_raster(&job.out_dir.join(&name), &out)?;
            Ok(AugmentedEntry {
                output: name,
                source: job.sources[i].display().to_string(),
                texture_image: job.papyri[t].display().to_string(),
                overlay_image: job.papyri[o].display().to_string(),
                sub_seed: sub,
            })
        })
        .collect::<Result<_>>()?;

    let config = serde_json::json!({
        "inpaint_radius": job.cfg.inpaint_radius,
        "texture_alpha": job.cfg.texture_alpha,
        "bg_threshold": job.cfg.bg_threshold,
        "mask_method": job.mask_binarizer.name(),
        "mask_params": job.mask_params,
        "masks": job.masks.as_ref().map(|p| p.display().to_string()),
    });
    Ok(AugmentManifest { meta: ReportMeta::new(job.cfg.seed, config), rejected_overlays: rejected, entries })
}

/// Recomputes a single manifest entry from the images it names.
pub fn reproduce_entry(entry: &AugmentedEntry, job: &AugmentJob<'_>) -> Result<RasterImage> {
    let source = read_raster(Path::new(&entry.source))?;
    let texture = texture_for(job, Path::new(&entry.texture_image))?;
    let overlay = extract_fragment(&read_raster(Path::new(&entry.overlay_image))?, job.cfg.bg_threshold)?;
    Ok(compose_augmented(&source, &texture, &overlay, &job.cfg))
}

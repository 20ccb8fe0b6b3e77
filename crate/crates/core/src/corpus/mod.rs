//! Dataset ingestion: image/ground-truth pairing, writer labels, checksums.

mod experiment;

pub use experiment::{run_manifest, ExperimentManifest, RunReport, Stage, StageOutcome, StageRunner, StageStatus};

use std::collections::BTreeMap;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::imgcore::io::is_image_path;
use crate::{Error, Result};

/// 64-bit FNV-1a.
pub fn fnv1a64(bytes: &[u8]) -> u64 {
    let mut h: u64 = 0xcbf2_9ce4_8422_2325;
    for &b in bytes {
        h ^= b as u64;
        h = h.wrapping_mul(0x0000_0100_0000_01b3);
    }
    h
}

pub fn file_checksum(path: &Path) -> Result<String> {
    let bytes = std::fs::read(path).map_err(|e| Error::io(path, e))?;
    Ok(format!("{:016x}", fnv1a64(&bytes)))
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct DatasetRow {
    pub stem: String,
    pub image: PathBuf,
    pub gt: Option<PathBuf>,
    pub image_checksum: String,
    pub gt_checksum: Option<String>,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct DatasetManifest {
    pub dataset_id: String,
    pub split: String,
    pub rows: Vec<DatasetRow>,
}

impl DatasetManifest {
    /// Checks that every file still exists with its recorded checksum.
    pub fn verify(&self, require_gt: bool) -> Result<()> {
        for row in &self.rows {
            check_file(&row.image, &row.image_checksum)?;
            match (&row.gt, &row.gt_checksum) {
                (Some(p), Some(c)) => check_file(p, c)?,
                (None, _) if require_gt => return Err(Error::Manifest(format!("row {:?} has no ground truth", row.stem))),
                _ => {}
            }
        }
        Ok(())
    }

    pub fn load(path: &Path, require_gt: bool) -> Result<Self> {
        let m: Self = crate::report::read_json(path)?;
        m.verify(require_gt)?;
        Ok(m)
    }
}

fn check_file(path: &Path, expected: &str) -> Result<()> {
    let got = file_checksum(path)?;
    if got != expected {
        return Err(Error::Manifest(format!("{}: checksum {got} differs from recorded {expected}", path.display())));
    }
    Ok(())
}

fn stem_of(p: &Path) -> String {
    p.file_stem().map(|s| s.to_string_lossy().into_owned()).unwrap_or_default()
}

/// Image files of `dir` keyed by lower-cased stem.
fn images_by_stem(dir: &Path, strip_gt_suffix: bool) -> Result<BTreeMap<String, PathBuf>> {
    let entries = std::fs::read_dir(dir).map_err(|e| Error::io(dir, e))?;
    let mut out: BTreeMap<String, PathBuf> = BTreeMap::new();
    for entry in entries {
        let path = entry.map_err(|e| Error::io(dir, e))?.path();
        if !path.is_file() || !is_image_path(&path) {
            continue;
        }
        let mut key = stem_of(&path).to_lowercase();
        if strip_gt_suffix {
            if let Some(s) = key.strip_suffix("_gt") {
                key = s.to_string();
            }
        }
        if let Some(prev) = out.insert(key.clone(), path.clone()) {
            return Err(Error::Manifest(format!("ambiguous stem {key:?}: {} and {}", prev.display(), path.display())));
        }
    }
    Ok(out)
}

/// Pairs images with ground truth by case-insensitive file stem (a trailing
/// `_gt` on the ground-truth stem is ignored). Unpaired files are reported as
/// warnings; rows come out in lexicographic stem order.
pub fn ingest_pairs(image_dir: &Path, gt_dir: &Path, dataset_id: &str, split: &str) -> Result<(DatasetManifest, Vec<String>)> {
    let images = images_by_stem(image_dir, false)?;
    let gts = images_by_stem(gt_dir, true)?;
    let mut warnings = Vec::new();
    let mut rows = Vec::new();
    for (key, img) in &images {
        match gts.get(key) {
            Some(gt) => rows.push(DatasetRow {
                stem: stem_of(img),
                image: img.clone(),
                gt: Some(gt.clone()),
                image_checksum: file_checksum(img)?,
                gt_checksum: Some(file_checksum(gt)?),
            }),
            None => warnings.push(format!("no ground truth for image {:?}", stem_of(img))),
        }
    }
    for (key, gt) in &gts {
        if !images.contains_key(key) {
            warnings.push(format!("no image for ground truth {:?}", stem_of(gt)));
        }
    }
    if rows.is_empty() {
        return Err(Error::InsufficientData(format!("no image/ground-truth pairs between {} and {}", image_dir.display(), gt_dir.display())));
    }
    Ok((DatasetManifest { dataset_id: dataset_id.into(), split: split.into(), rows }, warnings))
}

/// Writer-labelled images of a directory (no ground truth), sorted by stem.
pub fn ingest_images(dir: &Path, dataset_id: &str) -> Result<DatasetManifest> {
    let rows = images_by_stem(dir, false)?
        .into_values()
        .map(|p| Ok(DatasetRow { stem: stem_of(&p), image_checksum: file_checksum(&p)?, image: p, gt: None, gt_checksum: None }))
        .collect::<Result<Vec<_>>>()?;
    if rows.is_empty() {
        return Err(Error::InsufficientData(format!("no images in {}", dir.display())));
    }
    Ok(DatasetManifest { dataset_id: dataset_id.into(), split: String::new(), rows })
}

/// Writer label of a file name: the stem without its final `_<digits>` group.
/// Falls back to the whole stem, with a warning, when there is no such group.
pub fn parse_writer_label(filename: &str) -> (String, Option<String>) {
    let stem = stem_of(Path::new(filename));
    if let Some((head, tail)) = stem.rsplit_once('_') {
        if !head.is_empty() && !tail.is_empty() && tail.bytes().all(|b| b.is_ascii_digit()) {
            return (head.to_string(), None);
        }
    }
    let warning = format!("{filename:?} has no trailing _<digits> group; using the whole stem as writer label");
    (stem, Some(warning))
}

//! Pair manifests: JSON Lines, one support/query pair per line.
//!
//! ```text
//! {"pair_id":"pos-000","polarity":"positive","support_image_path":"images/pos-000_support.png",
//!  "support_mask_path":"masks/pos-000_support.png","query_image_path":"images/pos-000_query.png",
//!  "gt_mask_path":"masks/pos-000_gt.png"}
//! ```
//!
//! Relative paths resolve against the manifest's directory.

use std::fs;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::raster::io::{read_mask, read_raster};
use crate::raster::{BinaryMask, Raster};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Polarity {
    /// The query contains the prompted defect.
    Positive,
    /// The query does not; the correct answer is a null mask.
    Negative,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PairManifestEntry {
    pub pair_id: String,
    pub polarity: Polarity,
    pub support_image_path: PathBuf,
    pub support_mask_path: PathBuf,
    pub query_image_path: PathBuf,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub gt_mask_path: Option<PathBuf>,
}

impl PairManifestEntry {
    fn paths(&self) -> impl Iterator<Item = &PathBuf> {
        [
            Some(&self.support_image_path),
            Some(&self.support_mask_path),
            Some(&self.query_image_path),
            self.gt_mask_path.as_ref(),
        ]
        .into_iter()
        .flatten()
    }

    fn resolve(&mut self, base: &Path) {
        let join = |p: &mut PathBuf| {
            if p.is_relative() {
                *p = base.join(&*p);
            }
        };
        join(&mut self.support_image_path);
        join(&mut self.support_mask_path);
        join(&mut self.query_image_path);
        if let Some(gt) = self.gt_mask_path.as_mut() {
            join(gt);
        }
    }
}

/// Loaded manifest with every path resolved.
#[derive(Clone, Debug, Default, PartialEq)]
pub struct Manifest {
    pub entries: Vec<PairManifestEntry>,
}

impl Manifest {
    pub fn n_positive(&self) -> usize {
        self.entries
            .iter()
            .filter(|e| e.polarity == Polarity::Positive)
            .count()
    }

    pub fn n_negative(&self) -> usize {
        self.entries.len() - self.n_positive()
    }
}

/// Parses and validates a manifest: line-numbered parse errors, positives
/// need a ground-truth path, pair ids are unique, and every referenced file
/// exists. Image dimensions are checked when a pair is loaded.
pub fn load_manifest(path: impl AsRef<Path>) -> Result<Manifest> {
    let path = path.as_ref();
    let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    let base = path.parent().unwrap_or(Path::new(""));
    let mut entries: Vec<PairManifestEntry> = Vec::new();
    for (idx, line) in text.lines().enumerate() {
        if line.trim().is_empty() {
            continue;
        }
        let mut entry: PairManifestEntry =
            serde_json::from_str(line).map_err(|e| Error::Parse {
                path: path.to_path_buf(),
                line: idx + 1,
                message: e.to_string(),
            })?;
        if entry.polarity == Polarity::Positive && entry.gt_mask_path.is_none() {
            return Err(Error::MissingGroundTruth {
                pair_id: entry.pair_id,
            });
        }
        if entries.iter().any(|e| e.pair_id == entry.pair_id) {
            return Err(Error::Parse {
                path: path.to_path_buf(),
                line: idx + 1,
                message: format!("duplicate pair_id `{}`", entry.pair_id),
            });
        }
        entry.resolve(base);
        if let Some(missing) = entry.paths().find(|p| !p.is_file()) {
            return Err(Error::MissingFile {
                pair_id: entry.pair_id.clone(),
                path: missing.clone(),
            });
        }
        entries.push(entry);
    }
    Ok(Manifest { entries })
}

/// Writes entries as JSON Lines, paths as given.
pub fn write_manifest(path: impl AsRef<Path>, entries: &[PairManifestEntry]) -> Result<()> {
    let path = path.as_ref();
    let mut out = String::new();
    for e in entries {
        out.push_str(&serde_json::to_string(e).map_err(|e| Error::Internal(e.to_string()))?);
        out.push('\n');
    }
    if let Some(parent) = path.parent().filter(|p| !p.as_os_str().is_empty()) {
        fs::create_dir_all(parent).map_err(|e| Error::io(parent, e))?;
    }
    fs::write(path, out).map_err(|e| Error::io(path, e))
}

/// Decoded images and masks for one pair.
#[derive(Clone, Debug)]
pub struct PairData {
    pub support_image: Raster,
    pub support_mask: BinaryMask,
    pub query_image: Raster,
    pub gt_mask: Option<BinaryMask>,
}

impl PairData {
    /// Reads every file of the entry and checks mask/image dimensions.
    pub fn load(entry: &PairManifestEntry) -> Result<Self> {
        let inner = || -> Result<Self> {
            let support_image = read_raster(&entry.support_image_path)?;
            let support_mask = read_mask(&entry.support_mask_path)?;
            support_mask.check_dims(support_image.dims())?;
            let query_image = read_raster(&entry.query_image_path)?;
            let gt_mask = match &entry.gt_mask_path {
                Some(p) => {
                    let gt = read_mask(p)?;
                    gt.check_dims(query_image.dims())?;
                    Some(gt)
                }
                None => None,
            };
            Ok(Self {
                support_image,
                support_mask,
                query_image,
                gt_mask,
            })
        };
        inner().map_err(|e| e.for_pair(&entry.pair_id))
    }
}

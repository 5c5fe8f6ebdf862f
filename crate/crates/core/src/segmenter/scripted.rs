//! Table-driven segmenter: every answer is looked up, nothing is computed.
//!
//! On disk the table is JSON Lines, one record per `(pair_id, direction)`:
//!
//! ```text
//! {"pair_id":"p1","direction":"forward","mask_path":"masks/p1_f.png","score":0.9}
//! ```
//!
//! `mask_path` is resolved relative to the table file.

use std::collections::BTreeMap;
use std::fs;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use super::{CallKey, PromptResult};
use crate::error::{Direction, Error, Result};
use crate::raster::io::{read_mask, write_mask};
use crate::raster::BinaryMask;

#[derive(Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct ScriptRecord {
    pair_id: String,
    direction: Direction,
    mask_path: PathBuf,
    score: f64,
}

#[derive(Clone, Debug, Default)]
pub struct ScriptTable {
    entries: BTreeMap<(String, Direction), PromptResult>,
    source: Option<PathBuf>,
}

/// Tables compare by content; where they were loaded from does not matter.
impl PartialEq for ScriptTable {
    fn eq(&self, other: &Self) -> bool {
        self.entries == other.entries
    }
}

impl ScriptTable {
    pub fn insert(
        &mut self,
        pair_id: impl Into<String>,
        direction: Direction,
        mask: BinaryMask,
        score: f64,
    ) {
        self.entries
            .insert((pair_id.into(), direction), PromptResult { mask, score });
    }

    /// File the table was loaded from, if any.
    pub fn source(&self) -> Option<&Path> {
        self.source.as_deref()
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    pub fn lookup(&self, key: CallKey<'_>) -> Result<&PromptResult> {
        self.entries
            .get(&(key.pair_id.to_string(), key.direction))
            .ok_or_else(|| Error::MissingScript {
                pair_id: key.pair_id.to_string(),
                direction: key.direction,
            })
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        let base = path.parent().unwrap_or(Path::new(""));
        let mut table = ScriptTable {
            source: Some(path.to_path_buf()),
            ..ScriptTable::default()
        };
        for (idx, line) in text.lines().enumerate() {
            if line.trim().is_empty() {
                continue;
            }
            let parse_err = |message: String| Error::Parse {
                path: path.to_path_buf(),
                line: idx + 1,
                message,
            };
            let rec: ScriptRecord =
                serde_json::from_str(line).map_err(|e| parse_err(e.to_string()))?;
            if !(0.0..=1.0).contains(&rec.score) {
                return Err(parse_err(format!("score {} outside [0, 1]", rec.score)));
            }
            let mask = read_mask(base.join(&rec.mask_path))?;
            if table
                .entries
                .insert(
                    (rec.pair_id.clone(), rec.direction),
                    PromptResult {
                        mask,
                        score: rec.score,
                    },
                )
                .is_some()
            {
                return Err(parse_err(format!(
                    "duplicate {} entry for pair `{}`",
                    rec.direction, rec.pair_id
                )));
            }
        }
        Ok(table)
    }

    /// Writes the table to `path` with masks under `<dir of path>/masks/`.
    pub fn save(&self, path: impl AsRef<Path>) -> Result<()> {
        let path = path.as_ref();
        let base = path.parent().unwrap_or(Path::new(""));
        let mut out = String::new();
        for ((pair_id, direction), res) in &self.entries {
            let rel = PathBuf::from("masks").join(format!("{pair_id}_{direction}.png"));
            write_mask(base.join(&rel), &res.mask)?;
            let rec = ScriptRecord {
                pair_id: pair_id.clone(),
                direction: *direction,
                mask_path: rel,
                score: res.score,
            };
            out.push_str(&serde_json::to_string(&rec).map_err(|e| Error::Internal(e.to_string()))?);
            out.push('\n');
        }
        fs::write(path, out).map_err(|e| Error::io(path, e))
    }
}

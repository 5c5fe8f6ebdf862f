//! One-shot prompt segmentation.
//!
//! A segmenter takes a support image, its prompt mask, and a query image, and
//! returns a mask over the query plus a top-1 score in `[0, 1]`. The same call
//! serves both cycle phases; only the roles of the two images change.

pub mod ncc;
pub mod scripted;

use std::collections::BTreeMap;
use std::sync::Arc;

pub use ncc::{ncc_response_map, segment_reference, NccParams, ResponseMap};
pub use scripted::ScriptTable;

use crate::error::{Direction, Error, Result};
use crate::raster::{BinaryMask, Raster};

/// Validated segmenter input.
#[derive(Clone, Copy, Debug)]
pub struct PromptQuery<'a> {
    pub support_image: &'a Raster,
    pub support_mask: &'a BinaryMask,
    pub query_image: &'a Raster,
}

impl<'a> PromptQuery<'a> {
    /// Requires matching support image/mask dimensions and a non-empty mask.
    pub fn new(
        support_image: &'a Raster,
        support_mask: &'a BinaryMask,
        query_image: &'a Raster,
    ) -> Result<Self> {
        support_mask.check_dims(support_image.dims())?;
        if support_mask.is_null() {
            return Err(Error::EmptySupportMask);
        }
        Ok(Self {
            support_image,
            support_mask,
            query_image,
        })
    }
}

/// A mask over the query image and its top-1 score.
#[derive(Clone, Debug, PartialEq)]
pub struct PromptResult {
    pub mask: BinaryMask,
    pub score: f64,
}

/// Identifies one segmenter invocation within a cycle.
#[derive(Clone, Copy, Debug)]
pub struct CallKey<'a> {
    pub pair_id: &'a str,
    pub direction: Direction,
}

/// Anything that can answer a prompt query. Implementations must be
/// deterministic and shareable across worker threads.
pub trait Segmenter: Send + Sync {
    fn segment(&self, key: CallKey<'_>, q: &PromptQuery<'_>) -> Result<PromptResult>;
}

/// Built-in segmenter selection.
#[derive(Clone, Debug, PartialEq)]
pub enum SegmenterSpec {
    ReferenceNcc(NccParams),
    /// Table-driven responses keyed by pair id and direction.
    Scripted(Arc<ScriptTable>),
    /// Reserved for integrations outside this crate; segmenting with it fails.
    External {
        name: String,
        parameters: BTreeMap<String, String>,
    },
}

impl SegmenterSpec {
    pub fn reference() -> Self {
        SegmenterSpec::ReferenceNcc(NccParams::default())
    }

    pub fn scripted(table: ScriptTable) -> Self {
        SegmenterSpec::Scripted(Arc::new(table))
    }

    pub fn kind(&self) -> &'static str {
        match self {
            SegmenterSpec::ReferenceNcc(_) => "reference-ncc",
            SegmenterSpec::Scripted(_) => "scripted",
            SegmenterSpec::External { .. } => "external",
        }
    }

    pub fn validate(&self) -> Result<()> {
        match self {
            SegmenterSpec::ReferenceNcc(p) => p.validate(),
            _ => Ok(()),
        }
    }
}

impl Segmenter for SegmenterSpec {
    fn segment(&self, key: CallKey<'_>, q: &PromptQuery<'_>) -> Result<PromptResult> {
        let out = match self {
            SegmenterSpec::ReferenceNcc(params) => segment_reference(params, q)?,
            SegmenterSpec::Scripted(table) => table.lookup(key)?.clone(),
            SegmenterSpec::External { name, .. } => {
                return Err(Error::UnsupportedSegmenter(format!("external:{name}")))
            }
        };
        check_result(&out, q)?;
        Ok(out)
    }
}

/// Enforces the result contract: mask over the query, score in `[0, 1]`.
pub fn check_result(out: &PromptResult, q: &PromptQuery<'_>) -> Result<()> {
    out.mask.check_dims(q.query_image.dims())?;
    if !(0.0..=1.0).contains(&out.score) {
        return Err(Error::param(
            "score",
            format!("segmenter score must be in [0, 1], got {}", out.score),
        ));
    }
    Ok(())
}

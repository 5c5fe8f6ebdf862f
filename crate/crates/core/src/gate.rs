//! Cycle-consistency gating.
//!
//! A prompt is pushed forward onto the query, the forward mask is pushed back
//! onto the support image, and the restored mask is compared with the
//! original prompt. The confidence is
//!
//! ```text
//! p_c = p_f * p_r * miou(m_s, m_r)
//! ```
//!
//! and a stage accepts its forward mask when `p_c >= threshold`. Stages run
//! in order; a later stage only runs when every earlier one rejected. If all
//! stages reject, the final mask is null.

use serde::{Deserialize, Serialize};

use crate::error::{Direction, Error, Result};
use crate::raster::{miou, BinaryMask, MiouMode, Raster};
use crate::segmenter::{CallKey, PromptQuery, PromptResult, Segmenter, SegmenterSpec};

/// Threshold of the primary stage in the default two-stage cascade.
pub const PRIMARY_THRESHOLD: f64 = 0.18;
/// Threshold of the fallback stage in the default two-stage cascade.
pub const FALLBACK_THRESHOLD: f64 = 0.015;

#[derive(Clone, Debug, PartialEq)]
pub struct Stage {
    pub segmenter: SegmenterSpec,
    pub threshold: f64,
}

#[derive(Clone, Debug, PartialEq)]
pub struct GateConfig {
    pub stages: Vec<Stage>,
    pub miou_mode: MiouMode,
}

impl GateConfig {
    pub fn single(segmenter: SegmenterSpec, threshold: f64) -> Self {
        Self {
            stages: vec![Stage {
                segmenter,
                threshold,
            }],
            miou_mode: MiouMode::default(),
        }
    }

    /// Primary model at 0.18 with a fallback model at 0.015.
    pub fn cascade(primary: SegmenterSpec, fallback: SegmenterSpec) -> Self {
        Self {
            stages: vec![
                Stage {
                    segmenter: primary,
                    threshold: PRIMARY_THRESHOLD,
                },
                Stage {
                    segmenter: fallback,
                    threshold: FALLBACK_THRESHOLD,
                },
            ],
            miou_mode: MiouMode::default(),
        }
    }

    pub fn thresholds(&self) -> Vec<f64> {
        self.stages.iter().map(|s| s.threshold).collect()
    }

    pub fn validate(&self) -> Result<()> {
        if self.stages.is_empty() {
            return Err(Error::param("stages", "at least one stage is required"));
        }
        for (i, stage) in self.stages.iter().enumerate() {
            if !(0.0..=1.0).contains(&stage.threshold) {
                return Err(Error::param(
                    format!("stage.{}.threshold", i + 1),
                    format!("must be in [0, 1], got {}", stage.threshold),
                ));
            }
            stage.segmenter.validate()?;
        }
        Ok(())
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Decision {
    Accepted,
    Rejected,
}

/// Forward, reverse and confidence for one stage. Independent of any
/// threshold, so it can be cached across threshold sweeps.
#[derive(Clone, Debug, PartialEq)]
pub struct CycleTrace {
    pub forward_mask: BinaryMask,
    pub forward_score: f64,
    pub reverse_mask: BinaryMask,
    pub reverse_score: f64,
    /// The forward mask was empty, so no reverse query was issued.
    pub reverse_skipped: bool,
    pub miou: f64,
    pub confidence: f64,
}

/// Full account of one gated pair.
#[derive(Clone, Debug, PartialEq)]
pub struct CycleRecord {
    pub pair_id: String,
    /// 1-based index of the deciding stage (the last one when all reject).
    pub stage_index: usize,
    pub threshold: f64,
    pub trace: CycleTrace,
    pub decision: Decision,
    /// The forward mask when accepted, otherwise null.
    pub final_mask: BinaryMask,
}

impl CycleRecord {
    pub fn accepted(&self) -> bool {
        self.decision == Decision::Accepted
    }
}

/// Prompt `(support_image, m_s)` onto the query.
pub fn forward_phase(
    seg: &dyn Segmenter,
    pair_id: &str,
    support_image: &Raster,
    m_s: &BinaryMask,
    query_image: &Raster,
) -> Result<PromptResult> {
    let q = PromptQuery::new(support_image, m_s, query_image)?;
    seg.segment(
        CallKey {
            pair_id,
            direction: Direction::Forward,
        },
        &q,
    )
}

/// Prompt `(query_image, m_f)` back onto the support image. An empty forward
/// mask cannot act as a prompt and yields `(null, 0)`.
pub fn reverse_phase(
    seg: &dyn Segmenter,
    pair_id: &str,
    query_image: &Raster,
    m_f: &BinaryMask,
    support_image: &Raster,
) -> Result<PromptResult> {
    if m_f.is_null() {
        let (w, h) = support_image.dims();
        return Ok(PromptResult {
            mask: BinaryMask::null(w, h),
            score: 0.0,
        });
    }
    let q = PromptQuery::new(query_image, m_f, support_image)?;
    seg.segment(
        CallKey {
            pair_id,
            direction: Direction::Reverse,
        },
        &q,
    )
}

/// `p_f * p_r * miou(m_s, m_r)`.
pub fn confidence(
    p_f: f64,
    p_r: f64,
    m_s: &BinaryMask,
    m_r: &BinaryMask,
    mode: MiouMode,
) -> Result<f64> {
    Ok(p_f * p_r * miou(m_s, m_r, mode)?)
}

/// Runs both phases with one segmenter.
pub fn run_cycle(
    seg: &dyn Segmenter,
    pair_id: &str,
    support_image: &Raster,
    m_s: &BinaryMask,
    query_image: &Raster,
    mode: MiouMode,
) -> Result<CycleTrace> {
    let fwd = forward_phase(seg, pair_id, support_image, m_s, query_image)?;
    let rev = reverse_phase(seg, pair_id, query_image, &fwd.mask, support_image)?;
    let miou_value = miou(m_s, &rev.mask, mode)?;
    Ok(CycleTrace {
        reverse_skipped: fwd.mask.is_null(),
        confidence: fwd.score * rev.score * miou_value,
        forward_mask: fwd.mask,
        forward_score: fwd.score,
        reverse_mask: rev.mask,
        reverse_score: rev.score,
        miou: miou_value,
    })
}

/// Walks the cascade given per-stage thresholds and a source of traces.
///
/// `trace_of(i)` is only called for stages that actually run, so callers can
/// compute lazily or serve from a cache.
pub fn decide(
    pair_id: &str,
    thresholds: &[f64],
    mut trace_of: impl FnMut(usize) -> Result<CycleTrace>,
) -> Result<CycleRecord> {
    let mut last = None;
    for (i, &threshold) in thresholds.iter().enumerate() {
        let trace = trace_of(i).map_err(|e| Error::Stage {
            pair_id: pair_id.to_string(),
            stage: i + 1,
            source: Box::new(e),
        })?;
        if trace.confidence >= threshold {
            return Ok(CycleRecord {
                pair_id: pair_id.to_string(),
                stage_index: i + 1,
                threshold,
                final_mask: trace.forward_mask.clone(),
                trace,
                decision: Decision::Accepted,
            });
        }
        last = Some((i, threshold, trace));
    }
    let (i, threshold, trace) =
        last.ok_or_else(|| Error::param("stages", "at least one stage is required"))?;
    let (w, h) = trace.forward_mask.dims();
    Ok(CycleRecord {
        pair_id: pair_id.to_string(),
        stage_index: i + 1,
        threshold,
        trace,
        decision: Decision::Rejected,
        final_mask: BinaryMask::null(w, h),
    })
}

/// Gates one pair through every configured stage.
pub fn gate(
    config: &GateConfig,
    pair_id: &str,
    support_image: &Raster,
    m_s: &BinaryMask,
    query_image: &Raster,
) -> Result<CycleRecord> {
    config.validate()?;
    decide(pair_id, &config.thresholds(), |i| {
        run_cycle(
            &config.stages[i].segmenter,
            pair_id,
            support_image,
            m_s,
            query_image,
            config.miou_mode,
        )
    })
}

//! Catch-rate / yield-rate scoring of gated predictions.
//!
//! A positive pair is a good catch when the final mask reaches the catch IoU
//! threshold against ground truth (`>=`). A negative pair is a correct yield
//! when the final mask's response rate does not exceed the yield threshold
//! (`<=`, so a null mask always yields). PES is the mean of the two rates.

pub mod manifest;
pub mod report;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

pub use manifest::{
    load_manifest, write_manifest, Manifest, PairData, PairManifestEntry, Polarity,
};

use crate::error::{Error, Result};
use crate::gate::{decide, gate, run_cycle, CycleRecord, CycleTrace, Decision, GateConfig};
use crate::raster::{iou, response_rate};

#[derive(Clone, Debug, PartialEq)]
pub struct EvalConfig {
    pub gate: GateConfig,
    pub catch_iou_threshold: f64,
    pub yield_response_threshold: f64,
}

impl EvalConfig {
    pub fn new(gate: GateConfig) -> Self {
        Self {
            gate,
            catch_iou_threshold: 0.3,
            yield_response_threshold: 0.0,
        }
    }

    pub fn validate(&self) -> Result<()> {
        for (name, v) in [
            ("catch_iou_threshold", self.catch_iou_threshold),
            ("yield_response_threshold", self.yield_response_threshold),
        ] {
            if !(0.0..=1.0).contains(&v) {
                return Err(Error::param(name, format!("must be in [0, 1], got {v}")));
            }
        }
        self.gate.validate()
    }

    /// Copy with the first stage's threshold replaced.
    pub fn with_primary_threshold(&self, tau: f64) -> Self {
        let mut cfg = self.clone();
        cfg.gate.stages[0].threshold = tau;
        cfg
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Verdict {
    GoodCatch,
    Miss,
    CorrectYield,
    FalseAlarm,
}

/// Per-pair outcome as it appears in a report.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct PairOutcome {
    pub pair_id: String,
    pub polarity: Polarity,
    /// IoU against ground truth for positives, response rate for negatives.
    pub measure: f64,
    pub verdict: Verdict,
    pub stage_index: usize,
    pub confidence: f64,
    pub decision: Decision,
}

/// Scores one gated pair. `gt` is required for positive pairs.
pub fn score_pair(
    entry: &PairManifestEntry,
    gt: Option<&crate::raster::BinaryMask>,
    record: &CycleRecord,
    cfg: &EvalConfig,
) -> Result<PairOutcome> {
    let (measure, verdict) = match entry.polarity {
        Polarity::Positive => {
            let gt = gt.ok_or_else(|| Error::MissingGroundTruth {
                pair_id: entry.pair_id.clone(),
            })?;
            let v = iou(&record.final_mask, gt).map_err(|e| e.for_pair(&entry.pair_id))?;
            let verdict = if v >= cfg.catch_iou_threshold {
                Verdict::GoodCatch
            } else {
                Verdict::Miss
            };
            (v, verdict)
        }
        Polarity::Negative => {
            let v = response_rate(&record.final_mask);
            let verdict = if v <= cfg.yield_response_threshold {
                Verdict::CorrectYield
            } else {
                Verdict::FalseAlarm
            };
            (v, verdict)
        }
    };
    Ok(PairOutcome {
        pair_id: entry.pair_id.clone(),
        polarity: entry.polarity,
        measure,
        verdict,
        stage_index: record.stage_index,
        confidence: record.trace.confidence,
        decision: record.decision,
    })
}

/// Catch rate, yield rate and their mean. A rate is `None` when the manifest
/// has no pairs of that polarity; PES is then undefined.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Rates {
    pub catch_rate: Option<f64>,
    pub yield_rate: Option<f64>,
    pub pes: Option<f64>,
}

impl Rates {
    pub fn new(catch_rate: Option<f64>, yield_rate: Option<f64>) -> Self {
        let pes = match (catch_rate, yield_rate) {
            (Some(c), Some(y)) => Some((c + y) / 2.0),
            _ => None,
        };
        Self {
            catch_rate,
            yield_rate,
            pes,
        }
    }

    pub fn from_counts(
        good_catches: usize,
        positives: usize,
        correct_yields: usize,
        negatives: usize,
    ) -> Self {
        let rate = |hits: usize, n: usize| (n > 0).then(|| hits as f64 / n as f64);
        Self::new(
            rate(good_catches, positives),
            rate(correct_yields, negatives),
        )
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct EvalReport {
    /// First-stage threshold the report was produced with.
    pub tau: f64,
    pub rates: Rates,
    pub n_positive: usize,
    pub n_negative: usize,
    pub n_good_catch: usize,
    pub n_correct_yield: usize,
    pub records: Vec<PairOutcome>,
}

impl EvalReport {
    pub fn from_outcomes(tau: f64, records: Vec<PairOutcome>) -> Self {
        let count = |v: Verdict| records.iter().filter(|r| r.verdict == v).count();
        let n_positive = records
            .iter()
            .filter(|r| r.polarity == Polarity::Positive)
            .count();
        let n_negative = records.len() - n_positive;
        let n_good_catch = count(Verdict::GoodCatch);
        let n_correct_yield = count(Verdict::CorrectYield);
        Self {
            tau,
            rates: Rates::from_counts(n_good_catch, n_positive, n_correct_yield, n_negative),
            n_positive,
            n_negative,
            n_good_catch,
            n_correct_yield,
            records,
        }
    }

    pub fn catch_rate(&self) -> Option<f64> {
        self.rates.catch_rate
    }

    pub fn yield_rate(&self) -> Option<f64> {
        self.rates.yield_rate
    }

    pub fn pes(&self) -> Option<f64> {
        self.rates.pes
    }
}

/// Report plus the full cycle record of every pair, in manifest order.
#[derive(Clone, Debug)]
pub struct Evaluation {
    pub report: EvalReport,
    pub cycles: Vec<CycleRecord>,
}

fn pool(workers: usize) -> Result<rayon::ThreadPool> {
    if workers == 0 {
        return Err(Error::param("workers", "must be at least 1"));
    }
    rayon::ThreadPoolBuilder::new()
        .num_threads(workers)
        .build()
        .map_err(|e| Error::Internal(format!("thread pool: {e}")))
}

/// Maps `f` over entries on `workers` threads, keeping manifest order and
/// reporting the first failure in manifest order.
fn fan_out<T: Send>(
    manifest: &Manifest,
    workers: usize,
    f: impl Fn(&PairManifestEntry) -> Result<T> + Sync,
) -> Result<Vec<T>> {
    let results: Vec<Result<T>> =
        pool(workers)?.install(|| manifest.entries.par_iter().map(&f).collect());
    results.into_iter().collect()
}

pub fn evaluate(manifest: &Manifest, cfg: &EvalConfig) -> Result<EvalReport> {
    Ok(evaluate_detailed(manifest, cfg, 1)?.report)
}

/// Gates and scores every pair using `workers` threads. Output does not
/// depend on `workers`.
pub fn evaluate_detailed(
    manifest: &Manifest,
    cfg: &EvalConfig,
    workers: usize,
) -> Result<Evaluation> {
    cfg.validate()?;
    let rows = fan_out(manifest, workers, |entry| {
        let data = PairData::load(entry)?;
        let record = gate(
            &cfg.gate,
            &entry.pair_id,
            &data.support_image,
            &data.support_mask,
            &data.query_image,
        )?;
        let outcome = score_pair(entry, data.gt_mask.as_ref(), &record, cfg)?;
        Ok((outcome, record))
    })?;
    let (outcomes, cycles): (Vec<_>, Vec<_>) = rows.into_iter().unzip();
    Ok(Evaluation {
        report: EvalReport::from_outcomes(cfg.gate.stages[0].threshold, outcomes),
        cycles,
    })
}

/// One report per first-stage threshold, in the order given.
///
/// Each pair's stage traces are computed at most once and reused across
/// thresholds, since only the accept/reject decision depends on them.
pub fn sweep_thresholds(
    manifest: &Manifest,
    base: &EvalConfig,
    taus: &[f64],
    workers: usize,
) -> Result<Vec<(f64, EvalReport)>> {
    if taus.is_empty() {
        return Err(Error::param("taus", "at least one threshold is required"));
    }
    if let Some(bad) = taus.iter().find(|t| !(0.0..=1.0).contains(*t)) {
        return Err(Error::param(
            "taus",
            format!("threshold {bad} outside [0, 1]"),
        ));
    }
    base.validate()?;
    let per_pair = fan_out(manifest, workers, |entry| {
        let data = PairData::load(entry)?;
        let mut cache: Vec<Option<CycleTrace>> = vec![None; base.gate.stages.len()];
        taus.iter()
            .map(|&tau| {
                let cfg = base.with_primary_threshold(tau);
                let record = decide(&entry.pair_id, &cfg.gate.thresholds(), |i| {
                    if let Some(t) = &cache[i] {
                        return Ok(t.clone());
                    }
                    let t = run_cycle(
                        &cfg.gate.stages[i].segmenter,
                        &entry.pair_id,
                        &data.support_image,
                        &data.support_mask,
                        &data.query_image,
                        cfg.gate.miou_mode,
                    )?;
                    cache[i] = Some(t.clone());
                    Ok(t)
                })?;
                score_pair(entry, data.gt_mask.as_ref(), &record, &cfg)
            })
            .collect::<Result<Vec<_>>>()
    })?;
    Ok(taus
        .iter()
        .enumerate()
        .map(|(k, &tau)| {
            let outcomes = per_pair.iter().map(|row| row[k].clone()).collect();
            (tau, EvalReport::from_outcomes(tau, outcomes))
        })
        .collect())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::gate::CycleTrace;
    use crate::raster::{BinaryMask, Rect};
    use std::path::PathBuf;

    fn entry(polarity: Polarity) -> PairManifestEntry {
        PairManifestEntry {
            pair_id: "p".into(),
            polarity,
            support_image_path: PathBuf::new(),
            support_mask_path: PathBuf::new(),
            query_image_path: PathBuf::new(),
            gt_mask_path: None,
        }
    }

    fn record(final_mask: BinaryMask) -> CycleRecord {
        CycleRecord {
            pair_id: "p".into(),
            stage_index: 1,
            threshold: 0.18,
            trace: CycleTrace {
                forward_mask: final_mask.clone(),
                forward_score: 1.0,
                reverse_mask: final_mask.clone(),
                reverse_score: 1.0,
                reverse_skipped: false,
                miou: 1.0,
                confidence: 1.0,
            },
            decision: Decision::Accepted,
            final_mask,
        }
    }

    fn cfg() -> EvalConfig {
        EvalConfig::new(GateConfig::single(
            crate::segmenter::SegmenterSpec::reference(),
            0.18,
        ))
    }

    /// gt = first 10 columns of a 100x1 strip; prediction overlaps `k` of them
    /// and adds nothing else, so iou = k / 10.
    fn strip(k: usize) -> (BinaryMask, BinaryMask) {
        let gt = BinaryMask::from_rect(
            100,
            1,
            Rect {
                x: 0,
                y: 0,
                width: 10,
                height: 1,
            },
        );
        let pred = BinaryMask::from_rect(
            100,
            1,
            Rect {
                x: 0,
                y: 0,
                width: k,
                height: 1,
            },
        );
        (gt, pred)
    }

    #[test]
    fn catch_boundary_is_inclusive() {
        let (gt, pred) = strip(3);
        let out = score_pair(&entry(Polarity::Positive), Some(&gt), &record(pred), &cfg()).unwrap();
        assert_eq!(out.measure, 0.3);
        assert_eq!(out.verdict, Verdict::GoodCatch);

        // 29 of 100 columns -> iou 0.29
        let gt = BinaryMask::from_rect(
            100,
            1,
            Rect {
                x: 0,
                y: 0,
                width: 100,
                height: 1,
            },
        );
        let pred = BinaryMask::from_rect(
            100,
            1,
            Rect {
                x: 0,
                y: 0,
                width: 29,
                height: 1,
            },
        );
        let out = score_pair(&entry(Polarity::Positive), Some(&gt), &record(pred), &cfg()).unwrap();
        assert_eq!(out.measure, 0.29);
        assert_eq!(out.verdict, Verdict::Miss);
    }

    #[test]
    fn null_mask_yields_at_zero_threshold() {
        let out = score_pair(
            &entry(Polarity::Negative),
            None,
            &record(BinaryMask::null(5, 5)),
            &cfg(),
        )
        .unwrap();
        assert_eq!(out.verdict, Verdict::CorrectYield);
        let mut one = BinaryMask::null(5, 5);
        one.set(0, 0, true);
        let out = score_pair(&entry(Polarity::Negative), None, &record(one), &cfg()).unwrap();
        assert_eq!(out.verdict, Verdict::FalseAlarm);
        assert_eq!(out.measure, 0.04);
    }

    #[test]
    fn positive_without_gt_errors() {
        assert!(matches!(
            score_pair(
                &entry(Polarity::Positive),
                None,
                &record(BinaryMask::null(2, 2)),
                &cfg()
            ),
            Err(Error::MissingGroundTruth { .. })
        ));
    }

    #[test]
    fn catch_rate_counts() {
        // ious {0.31, 0.29, 0.5, 0.0} -> two good catches out of four
        let outcome = |m: f64| PairOutcome {
            pair_id: "p".into(),
            polarity: Polarity::Positive,
            measure: m,
            verdict: if m >= 0.3 {
                Verdict::GoodCatch
            } else {
                Verdict::Miss
            },
            stage_index: 1,
            confidence: 0.0,
            decision: Decision::Accepted,
        };
        let rep = EvalReport::from_outcomes(0.18, [0.31, 0.29, 0.5, 0.0].map(outcome).to_vec());
        assert_eq!(rep.catch_rate(), Some(0.5));
        assert_eq!(rep.yield_rate(), None);
        assert_eq!(rep.pes(), None);
    }

    #[test]
    fn pes_is_the_mean() {
        let r = Rates::new(Some(0.775), Some(0.9175));
        assert!((r.pes.unwrap() - 0.84625).abs() < 1e-12);
        assert_eq!(Rates::from_counts(0, 0, 3, 4).pes, None);
    }

    #[test]
    fn sweep_rejects_bad_taus() {
        let m = Manifest::default();
        assert!(sweep_thresholds(&m, &cfg(), &[], 1).is_err());
        assert!(sweep_thresholds(&m, &cfg(), &[0.1, 1.5], 1).is_err());
        assert_eq!(sweep_thresholds(&m, &cfg(), &[0.1], 1).unwrap().len(), 1);
        assert!(evaluate_detailed(&m, &cfg(), 0).is_err());
    }
}

//! Report serialisation: JSON report, CSV summary, per-pair cycle records.
//!
//! Rates are written with five decimals; a rate that does not apply (no pairs
//! of that polarity) is `null` in JSON and `NA` in CSV.

use serde::Serialize;
use serde_json::value::RawValue;

use super::{EvalReport, PairOutcome};
use crate::error::{Error, Result};
use crate::gate::{CycleRecord, Decision};

pub fn fmt_rate(v: Option<f64>) -> String {
    v.map_or_else(|| "NA".to_string(), |v| format!("{v:.5}"))
}

fn raw_rate(v: Option<f64>) -> Box<RawValue> {
    let text = v.map_or_else(|| "null".to_string(), |v| format!("{v:.5}"));
    RawValue::from_string(text).expect("fixed-point literal is valid JSON")
}

#[derive(Serialize)]
struct ReportJson<'a> {
    tau: Box<RawValue>,
    catch_rate: Box<RawValue>,
    yield_rate: Box<RawValue>,
    pes: Box<RawValue>,
    n_positive: usize,
    n_negative: usize,
    n_good_catch: usize,
    n_correct_yield: usize,
    pairs: &'a [PairOutcome],
}

fn to_json<T: Serialize>(v: &T) -> Result<String> {
    serde_json::to_string_pretty(v).map_err(|e| Error::Internal(format!("json: {e}")))
}

/// The report as a pretty-printed JSON document.
pub fn report_json(report: &EvalReport) -> Result<String> {
    let doc = ReportJson {
        tau: raw_rate(Some(report.tau)),
        catch_rate: raw_rate(report.rates.catch_rate),
        yield_rate: raw_rate(report.rates.yield_rate),
        pes: raw_rate(report.rates.pes),
        n_positive: report.n_positive,
        n_negative: report.n_negative,
        n_good_catch: report.n_good_catch,
        n_correct_yield: report.n_correct_yield,
        pairs: &report.records,
    };
    Ok(to_json(&doc)? + "\n")
}

pub const CSV_HEADER: &str = "tau,catch_rate,yield_rate,pes";

pub fn csv_row(report: &EvalReport) -> String {
    format!(
        "{},{},{},{}",
        fmt_rate(Some(report.tau)),
        fmt_rate(report.rates.catch_rate),
        fmt_rate(report.rates.yield_rate),
        fmt_rate(report.rates.pes)
    )
}

/// Header plus one row per report, in the order given.
pub fn summary_csv<'a>(reports: impl IntoIterator<Item = &'a EvalReport>) -> String {
    let mut out = String::from(CSV_HEADER);
    out.push('\n');
    for r in reports {
        out.push_str(&csv_row(r));
        out.push('\n');
    }
    out
}

/// Mask file references attached to a serialised cycle record.
#[derive(Clone, Debug, Default, Serialize)]
pub struct MaskRefs {
    pub forward_mask_path: Option<String>,
    pub reverse_mask_path: Option<String>,
    pub final_mask_path: Option<String>,
}

#[derive(Serialize)]
struct CycleLine<'a> {
    pair_id: &'a str,
    stage_index: usize,
    threshold: f64,
    forward_score: f64,
    reverse_score: f64,
    reverse_skipped: bool,
    miou: f64,
    confidence: f64,
    decision: Decision,
    forward_foreground: usize,
    reverse_foreground: usize,
    final_foreground: usize,
    #[serde(flatten)]
    masks: &'a MaskRefs,
}

/// One JSON Lines record for a gated pair.
pub fn cycle_record_line(rec: &CycleRecord, masks: &MaskRefs) -> Result<String> {
    let line = CycleLine {
        pair_id: &rec.pair_id,
        stage_index: rec.stage_index,
        threshold: rec.threshold,
        forward_score: rec.trace.forward_score,
        reverse_score: rec.trace.reverse_score,
        reverse_skipped: rec.trace.reverse_skipped,
        miou: rec.trace.miou,
        confidence: rec.trace.confidence,
        decision: rec.decision,
        forward_foreground: rec.trace.forward_mask.foreground_count(),
        reverse_foreground: rec.trace.reverse_mask.foreground_count(),
        final_foreground: rec.final_mask.foreground_count(),
        masks,
    };
    serde_json::to_string(&line).map_err(|e| Error::Internal(format!("json: {e}")))
}

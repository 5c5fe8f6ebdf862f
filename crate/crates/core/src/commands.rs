//! Command implementations behind the `cyclegate` binary.
//!
//! Each command computes everything in memory first and then writes its
//! files sequentially from the calling thread, so output never depends on
//! worker scheduling.

use std::fs;
use std::path::{Path, PathBuf};

use serde::Serialize;

use crate::augment::{apply_policy, Draw};
use crate::config::RunConfig;
use crate::error::{Error, Result};
use crate::eval::report::{cycle_record_line, report_json, summary_csv, MaskRefs};
use crate::eval::{
    evaluate_detailed, load_manifest, sweep_thresholds, write_manifest, EvalReport, PairData,
    PairManifestEntry,
};
use crate::raster::io::{mask_to_raster, write_mask, write_raster};
use crate::raster::BinaryMask;
use crate::synth::{write_corpus, SynthSpec};

pub const REPORT_FILE: &str = "report.json";
pub const SUMMARY_FILE: &str = "summary.csv";
pub const CYCLES_FILE: &str = "cycles.jsonl";
pub const SWEEP_FILE: &str = "sweep.csv";
pub const MANIFEST_FILE: &str = "manifest.jsonl";
pub const AUGMENT_LOG_FILE: &str = "augment.jsonl";

/// Command-line values that take precedence over the config file.
#[derive(Clone, Debug, Default)]
pub struct Overrides {
    pub output_dir: Option<PathBuf>,
    pub workers: Option<usize>,
}

pub fn load_config(config_path: &Path, ov: &Overrides) -> Result<RunConfig> {
    let mut cfg = RunConfig::load(config_path)?;
    if let Some(dir) = &ov.output_dir {
        cfg.output_dir = dir.clone();
    }
    if let Some(n) = ov.workers {
        if n == 0 {
            return Err(Error::param("workers", "must be at least 1"));
        }
        cfg.worker_count = n;
    }
    Ok(cfg)
}

fn write_text(path: &Path, text: &str) -> Result<()> {
    if let Some(dir) = path.parent() {
        fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
    }
    fs::write(path, text).map_err(|e| Error::io(path, e))
}

fn mask_file(out: &Path, rel: &str, m: &BinaryMask) -> Result<Option<String>> {
    write_mask(out.join(rel), m)?;
    Ok(Some(rel.to_string()))
}

/// Gates and scores the configured manifest; writes `report.json`,
/// `summary.csv` and `cycles.jsonl` (plus mask PNGs when enabled).
pub fn cmd_evaluate(config_path: &Path, ov: &Overrides) -> Result<EvalReport> {
    let cfg = load_config(config_path, ov)?;
    let manifest = load_manifest(&cfg.manifest_path)?;
    let eval = evaluate_detailed(&manifest, &cfg.eval, cfg.worker_count)?;
    let out = &cfg.output_dir;

    let mut cycles = String::new();
    for rec in &eval.cycles {
        let refs = if cfg.emit_mask_artifacts {
            let id = &rec.pair_id;
            MaskRefs {
                forward_mask_path: mask_file(
                    out,
                    &format!("masks/{id}_forward.png"),
                    &rec.trace.forward_mask,
                )?,
                reverse_mask_path: mask_file(
                    out,
                    &format!("masks/{id}_reverse.png"),
                    &rec.trace.reverse_mask,
                )?,
                final_mask_path: mask_file(out, &format!("masks/{id}_final.png"), &rec.final_mask)?,
            }
        } else {
            MaskRefs::default()
        };
        cycles.push_str(&cycle_record_line(rec, &refs)?);
        cycles.push('\n');
    }
    write_text(&out.join(REPORT_FILE), &report_json(&eval.report)?)?;
    write_text(&out.join(SUMMARY_FILE), &summary_csv([&eval.report]))?;
    write_text(&out.join(CYCLES_FILE), &cycles)?;
    Ok(eval.report)
}

/// Evaluates at each stage-1 threshold and writes `sweep.csv` with rows in
/// the order given.
pub fn cmd_sweep(
    config_path: &Path,
    taus: &[f64],
    ov: &Overrides,
) -> Result<Vec<(f64, EvalReport)>> {
    let cfg = load_config(config_path, ov)?;
    let manifest = load_manifest(&cfg.manifest_path)?;
    let rows = sweep_thresholds(&manifest, &cfg.eval, taus, cfg.worker_count)?;
    write_text(
        &cfg.output_dir.join(SWEEP_FILE),
        &summary_csv(rows.iter().map(|(_, r)| r)),
    )?;
    Ok(rows)
}

/// Writes a synthetic corpus under `out`; returns the manifest path.
pub fn cmd_synth(out: &Path, seed: u64, spec: &SynthSpec) -> Result<PathBuf> {
    spec.validate()?;
    write_corpus(out, seed, spec)
}

#[derive(Serialize)]
struct AugmentLogLine<'a> {
    pair_id: &'a str,
    support: Draw,
    query: Draw,
}

fn ext_of(p: &Path) -> String {
    p.extension()
        .and_then(|e| e.to_str())
        .map_or_else(|| "png".to_string(), str::to_string)
}

/// Applies the configured augmentation policy to every pair and writes a new
/// corpus with its own manifest under the output directory.
///
/// Pair `i` (in manifest order) uses draw `2i` for the support side and
/// `2i + 1` for the query side; the query's ground truth, when present,
/// follows the query's flip. Files keep their original format.
pub fn cmd_augment(config_path: &Path, ov: &Overrides) -> Result<PathBuf> {
    let cfg = load_config(config_path, ov)?;
    cfg.augment.validate()?;
    let manifest = load_manifest(&cfg.manifest_path)?;
    let out = &cfg.output_dir;
    let mut entries = Vec::with_capacity(manifest.entries.len());
    let mut log = String::new();
    for (i, e) in manifest.entries.iter().enumerate() {
        let data = PairData::load(e)?;
        let id = &e.pair_id;
        let (support, support_mask, d_s) = apply_policy(
            &data.support_image,
            &data.support_mask,
            &cfg.augment,
            2 * i as u64,
        )
        .map_err(|err| err.for_pair(id))?;
        let (qw, qh) = data.query_image.dims();
        let gt_in = data
            .gt_mask
            .clone()
            .unwrap_or_else(|| BinaryMask::null(qw, qh));
        let (query, gt, d_q) =
            apply_policy(&data.query_image, &gt_in, &cfg.augment, 2 * i as u64 + 1)
                .map_err(|err| err.for_pair(id))?;

        let rel = |sub: &str, role: &str, src: &Path| {
            PathBuf::from(sub).join(format!("{id}_{role}.{}", ext_of(src)))
        };
        let entry = PairManifestEntry {
            pair_id: id.clone(),
            polarity: e.polarity,
            support_image_path: rel("images", "support", &e.support_image_path),
            support_mask_path: rel("masks", "support", &e.support_mask_path),
            query_image_path: rel("images", "query", &e.query_image_path),
            gt_mask_path: e.gt_mask_path.as_ref().map(|p| rel("masks", "gt", p)),
        };
        write_raster(out.join(&entry.support_image_path), &support)?;
        write_raster(
            out.join(&entry.support_mask_path),
            &mask_to_raster(&support_mask),
        )?;
        write_raster(out.join(&entry.query_image_path), &query)?;
        if let Some(p) = &entry.gt_mask_path {
            write_raster(out.join(p), &mask_to_raster(&gt))?;
        }
        log.push_str(
            &serde_json::to_string(&AugmentLogLine {
                pair_id: id,
                support: d_s,
                query: d_q,
            })
            .map_err(|err| Error::Internal(format!("json: {err}")))?,
        );
        log.push('\n');
        entries.push(entry);
    }
    let manifest_path = out.join(MANIFEST_FILE);
    write_manifest(&manifest_path, &entries)?;
    write_text(&out.join(AUGMENT_LOG_FILE), &log)?;
    Ok(manifest_path)
}

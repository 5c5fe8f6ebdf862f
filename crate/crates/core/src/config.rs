//! Flat `key = value` run configuration.
//!
//! One setting per line, `#` starts a comment line, blank lines are ignored,
//! and every key may appear once. Relative paths resolve against the config
//! file's directory. The full grammar is in `docs/config.md`.
//!
//! ```text
//! manifest = corpus/manifest.jsonl
//! output_dir = out
//! workers = 4
//! stage.1.segmenter = reference-ncc
//! stage.1.threshold = 0.18
//! ```

use std::collections::BTreeMap;
use std::fs;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use crate::augment::{AugmentPolicy, FactorRange};
use crate::error::{Error, Result};
use crate::eval::EvalConfig;
use crate::gate::{GateConfig, Stage};
use crate::raster::MiouMode;
use crate::segmenter::{NccParams, ScriptTable, SegmenterSpec};

#[derive(Clone, Debug, PartialEq)]
pub struct RunConfig {
    pub eval: EvalConfig,
    pub manifest_path: PathBuf,
    pub output_dir: PathBuf,
    pub worker_count: usize,
    pub emit_mask_artifacts: bool,
    /// Policy for the `augment` command; ignored elsewhere.
    pub augment: AugmentPolicy,
}

struct Entry {
    line: usize,
    value: String,
}

struct Parser<'a> {
    path: &'a Path,
    base: PathBuf,
    entries: BTreeMap<String, Entry>,
}

impl Parser<'_> {
    fn err(&self, line: usize, field: &str, message: impl Into<String>) -> Error {
        Error::Config {
            path: self.path.to_path_buf(),
            line,
            field: field.to_string(),
            message: message.into(),
        }
    }

    fn take(&mut self, key: &str) -> Option<Entry> {
        self.entries.remove(key)
    }

    fn required(&mut self, key: &str) -> Result<Entry> {
        self.take(key)
            .ok_or_else(|| self.err(0, key, "required field is missing"))
    }

    fn parse<T: FromStr>(&self, key: &str, e: &Entry) -> Result<T>
    where
        T::Err: std::fmt::Display,
    {
        e.value
            .parse()
            .map_err(|err: T::Err| self.err(e.line, key, format!("`{}`: {err}", e.value)))
    }

    fn opt<T: FromStr>(&mut self, key: &str) -> Result<Option<T>>
    where
        T::Err: std::fmt::Display,
    {
        match self.take(key) {
            Some(e) => self.parse(key, &e).map(Some),
            None => Ok(None),
        }
    }

    fn unit(&mut self, key: &str, default: f64) -> Result<f64> {
        let Some(e) = self.take(key) else {
            return Ok(default);
        };
        self.unit_entry(key, &e)
    }

    fn unit_entry(&self, key: &str, e: &Entry) -> Result<f64> {
        let v: f64 = self.parse(key, e)?;
        if !(0.0..=1.0).contains(&v) {
            return Err(self.err(e.line, key, format!("{v} is outside [0, 1]")));
        }
        Ok(v)
    }

    fn path_value(&self, e: &Entry) -> PathBuf {
        let p = PathBuf::from(&e.value);
        if p.is_relative() {
            self.base.join(p)
        } else {
            p
        }
    }

    fn range(&mut self, key: &str, default: FactorRange) -> Result<FactorRange> {
        let Some(e) = self.take(key) else {
            return Ok(default);
        };
        let parts: Vec<&str> = e.value.split(',').map(str::trim).collect();
        let [lo, hi] = parts[..] else {
            return Err(self.err(e.line, key, "expected `lo, hi`"));
        };
        let num = |s: &str| {
            s.parse::<f64>()
                .map_err(|err| self.err(e.line, key, format!("`{s}`: {err}")))
        };
        let r = FactorRange::new(num(lo)?, num(hi)?);
        if !(r.lo > 0.0 && r.lo <= r.hi && r.hi.is_finite()) {
            return Err(self.err(e.line, key, "need 0 < lo <= hi"));
        }
        Ok(r)
    }

    fn stage(&mut self, n: usize) -> Result<Stage> {
        let prefix = format!("stage.{n}");
        let kind_key = format!("{prefix}.segmenter");
        let kind = self.required(&kind_key)?;
        let threshold_key = format!("{prefix}.threshold");
        let t = self.required(&threshold_key)?;
        let threshold = self.unit_entry(&threshold_key, &t)?;

        let segmenter = match kind.value.as_str() {
            "reference-ncc" => {
                let d = NccParams::default();
                let relative_threshold = self.unit(
                    &format!("{prefix}.relative_threshold"),
                    d.relative_threshold,
                )?;
                let floor_key = format!("{prefix}.absolute_floor");
                let absolute_floor = match self.take(&floor_key) {
                    Some(e) => {
                        let v: f64 = self.parse(&floor_key, &e)?;
                        if !(-1.0..=1.0).contains(&v) {
                            return Err(self.err(
                                e.line,
                                &floor_key,
                                format!("{v} is outside [-1, 1]"),
                            ));
                        }
                        v
                    }
                    None => d.absolute_floor,
                };
                SegmenterSpec::ReferenceNcc(NccParams {
                    relative_threshold,
                    absolute_floor,
                })
            }
            "scripted" => {
                let e = self.required(&format!("{prefix}.script"))?;
                SegmenterSpec::scripted(ScriptTable::load(self.path_value(&e))?)
            }
            "external" => {
                let name = self.required(&format!("{prefix}.name"))?.value;
                let param_prefix = format!("{prefix}.param.");
                let keys: Vec<String> = self
                    .entries
                    .keys()
                    .filter(|k| k.starts_with(&param_prefix))
                    .cloned()
                    .collect();
                let parameters = keys
                    .into_iter()
                    .map(|k| {
                        let e = self.take(&k).expect("key listed above");
                        (k[param_prefix.len()..].to_string(), e.value)
                    })
                    .collect();
                SegmenterSpec::External { name, parameters }
            }
            other => return Err(self.err(
                kind.line,
                &kind_key,
                format!(
                    "unknown segmenter `{other}` (expected reference-ncc, scripted or external)"
                ),
            )),
        };
        Ok(Stage {
            segmenter,
            threshold,
        })
    }
}

impl RunConfig {
    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Self::parse(&text, path)
    }

    /// Parses config text; `path` is used for diagnostics and to resolve
    /// relative paths.
    pub fn parse(text: &str, path: &Path) -> Result<Self> {
        let mut p = Parser {
            path,
            base: path.parent().unwrap_or(Path::new("")).to_path_buf(),
            entries: BTreeMap::new(),
        };
        for (idx, raw) in text.lines().enumerate() {
            let line = raw.trim();
            if line.is_empty() || line.starts_with('#') {
                continue;
            }
            let Some((key, value)) = line.split_once('=') else {
                return Err(p.err(idx + 1, line, "expected `key = value`"));
            };
            let key = key.trim().to_string();
            if let Some(prev) = p.entries.get(&key) {
                return Err(p.err(
                    idx + 1,
                    &key,
                    format!("duplicate key (first set on line {})", prev.line),
                ));
            }
            p.entries.insert(
                key,
                Entry {
                    line: idx + 1,
                    value: value.trim().to_string(),
                },
            );
        }

        let manifest = p.required("manifest")?;
        let manifest_path = p.path_value(&manifest);
        let output_dir = match p.take("output_dir") {
            Some(e) => p.path_value(&e),
            None => p.base.join("out"),
        };
        let worker_count = match p.take("workers") {
            Some(e) => {
                let n: usize = p.parse("workers", &e)?;
                if n == 0 {
                    return Err(p.err(e.line, "workers", "must be at least 1"));
                }
                n
            }
            None => 1,
        };
        let emit_mask_artifacts = p.opt("emit_mask_artifacts")?.unwrap_or(false);
        let catch_iou_threshold = p.unit("catch_iou_threshold", 0.3)?;
        let yield_response_threshold = p.unit("yield_response_threshold", 0.0)?;
        let miou_mode: MiouMode = p.opt("miou_mode")?.unwrap_or_default();

        let mut stages = Vec::new();
        while p
            .entries
            .keys()
            .any(|k| k.starts_with(&format!("stage.{}.", stages.len() + 1)))
        {
            stages.push(p.stage(stages.len() + 1)?);
        }
        if stages.is_empty() {
            return Err(p.err(0, "stage.1.segmenter", "at least one stage is required"));
        }

        let d = AugmentPolicy::default();
        let augment = AugmentPolicy {
            brightness: p.range("augment.brightness", d.brightness)?,
            contrast: p.range("augment.contrast", d.contrast)?,
            saturation: p.range("augment.saturation", d.saturation)?,
            hflip_probability: p.unit("augment.hflip_probability", d.hflip_probability)?,
            seed: p.opt("augment.seed")?.unwrap_or(d.seed),
        };

        if let Some((key, e)) = p.entries.iter().next() {
            return Err(p.err(e.line, key, "unknown key"));
        }

        let cfg = RunConfig {
            eval: EvalConfig {
                gate: GateConfig { stages, miou_mode },
                catch_iou_threshold,
                yield_response_threshold,
            },
            manifest_path,
            output_dir,
            worker_count,
            emit_mask_artifacts,
            augment,
        };
        cfg.eval.validate()?;
        Ok(cfg)
    }

    /// Canonical text form. Scripted stages must have been loaded from a file.
    pub fn to_config_text(&self) -> Result<String> {
        let mut out = String::new();
        let mut kv = |k: &str, v: String| {
            out.push_str(k);
            out.push_str(" = ");
            out.push_str(&v);
            out.push('\n');
        };
        kv("manifest", self.manifest_path.display().to_string());
        kv("output_dir", self.output_dir.display().to_string());
        kv("workers", self.worker_count.to_string());
        kv("emit_mask_artifacts", self.emit_mask_artifacts.to_string());
        kv(
            "catch_iou_threshold",
            self.eval.catch_iou_threshold.to_string(),
        );
        kv(
            "yield_response_threshold",
            self.eval.yield_response_threshold.to_string(),
        );
        kv("miou_mode", self.eval.gate.miou_mode.to_string());
        for (i, stage) in self.eval.gate.stages.iter().enumerate() {
            let p = format!("stage.{}", i + 1);
            kv(
                &format!("{p}.segmenter"),
                stage.segmenter.kind().to_string(),
            );
            kv(&format!("{p}.threshold"), stage.threshold.to_string());
            match &stage.segmenter {
                SegmenterSpec::ReferenceNcc(n) => {
                    kv(
                        &format!("{p}.relative_threshold"),
                        n.relative_threshold.to_string(),
                    );
                    kv(&format!("{p}.absolute_floor"), n.absolute_floor.to_string());
                }
                SegmenterSpec::Scripted(t) => {
                    let src = t.source().ok_or_else(|| {
                        Error::param(format!("{p}.script"), "scripted table has no source file")
                    })?;
                    kv(&format!("{p}.script"), src.display().to_string());
                }
                SegmenterSpec::External { name, parameters } => {
                    kv(&format!("{p}.name"), name.clone());
                    for (k, v) in parameters {
                        kv(&format!("{p}.param.{k}"), v.clone());
                    }
                }
            }
        }
        let a = &self.augment;
        let range = |r: &FactorRange| format!("{}, {}", r.lo, r.hi);
        kv("augment.brightness", range(&a.brightness));
        kv("augment.contrast", range(&a.contrast));
        kv("augment.saturation", range(&a.saturation));
        kv("augment.hflip_probability", a.hflip_probability.to_string());
        kv("augment.seed", a.seed.to_string());
        Ok(out)
    }
}

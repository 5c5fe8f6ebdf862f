//! Deterministic synthetic inspection corpus.
//!
//! Every image is textured noise. Each pair also carries two square patches
//! that share a bright ring motif but differ in their inner texture:
//!
//! - the *defect*, planted once in the support image; its disk is the prompt
//!   mask;
//! - the *fiducial*, a product feature pasted unchanged into both support and
//!   query.
//!
//! Positive queries contain a translated, re-noised copy of the defect.
//! Negative queries contain only the fiducial. The shared ring makes the
//! defect template correlate moderately with the fiducial, so a negative
//! query yields a confident but wrong forward match; the reverse match from
//! that fiducial lands on the support's own fiducial rather than the prompted
//! defect, and the cycle breaks. A small fraction of supports omit the
//! fiducial, which leaves those negatives undetectable by the cycle.

use std::path::{Path, PathBuf};

use rand::RngExt;
use rand_chacha::ChaCha8Rng;
use rand_core::SeedableRng;

use crate::augment::{adjust_brightness, adjust_contrast};
use crate::error::{Error, Result};
use crate::eval::{write_manifest, PairManifestEntry, Polarity};
use crate::raster::io::{write_mask, write_raster};
use crate::raster::{BinaryMask, Raster};

/// Seed of the bundled default corpus.
pub const DEFAULT_SEED: u64 = 7;

const BASE_LEVEL: f64 = 100.0;
const TEXTURE_AMPLITUDE: f64 = 50.0;
const RING_LEVEL: f64 = 60.0;
/// Upper bound of the per-query additive noise amplitude.
const MAX_QUERY_NOISE: f64 = 90.0;
/// Probability that a support image carries no fiducial.
const FIDUCIAL_DROPOUT: f64 = 0.05;

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct SynthSpec {
    pub positives: usize,
    pub negatives: usize,
    pub width: usize,
    pub height: usize,
    /// Radius of the defect disk; patches are `2r + 1` pixels square.
    pub defect_radius: usize,
}

impl Default for SynthSpec {
    fn default() -> Self {
        Self {
            positives: 20,
            negatives: 20,
            width: 96,
            height: 96,
            defect_radius: 7,
        }
    }
}

impl SynthSpec {
    pub fn validate(&self) -> Result<()> {
        if self.defect_radius < 2 {
            return Err(Error::param("defect_radius", "must be at least 2"));
        }
        let side = self.patch_side();
        // room for three non-overlapping patches on one row or column
        if self.width < 3 * side + 4 || self.height < 3 * side + 4 {
            return Err(Error::param(
                "size",
                format!(
                    "{}x{} is too small for defect radius {}",
                    self.width, self.height, self.defect_radius
                ),
            ));
        }
        Ok(())
    }

    fn patch_side(&self) -> usize {
        2 * self.defect_radius + 1
    }
}

/// One generated pair, in memory.
#[derive(Clone, Debug)]
pub struct SynthPair {
    pub pair_id: String,
    pub polarity: Polarity,
    pub support_image: Raster,
    pub support_mask: BinaryMask,
    pub query_image: Raster,
    pub gt_mask: Option<BinaryMask>,
}

/// Gray float canvas composed before quantisation.
struct Canvas {
    width: usize,
    height: usize,
    values: Vec<f64>,
}

impl Canvas {
    fn textured(width: usize, height: usize, rng: &mut ChaCha8Rng) -> Self {
        let values = (0..width * height)
            .map(|_| BASE_LEVEL + rng.random_range(-TEXTURE_AMPLITUDE..=TEXTURE_AMPLITUDE))
            .collect();
        Self {
            width,
            height,
            values,
        }
    }

    fn paste(&mut self, patch: &Patch, x0: usize, y0: usize) {
        for y in 0..patch.side {
            for x in 0..patch.side {
                self.values[(y0 + y) * self.width + x0 + x] = patch.values[y * patch.side + x];
            }
        }
    }

    fn add_noise(&mut self, amplitude: f64, rng: &mut ChaCha8Rng) {
        if amplitude <= 0.0 {
            return;
        }
        for v in &mut self.values {
            *v += rng.random_range(-amplitude..=amplitude);
        }
    }

    /// Quantise to RGB with a per-image channel tint, then apply a mild
    /// brightness/contrast change.
    fn render(&self, rng: &mut ChaCha8Rng, photometric: bool) -> Result<Raster> {
        let tint: [f64; 3] = [
            rng.random_range(-8.0..=8.0),
            rng.random_range(-8.0..=8.0),
            rng.random_range(-8.0..=8.0),
        ];
        let mut samples = Vec::with_capacity(self.values.len() * 3);
        for &v in &self.values {
            for t in tint {
                samples.push((v + t).round().clamp(0.0, 255.0) as u8);
            }
        }
        let img = Raster::rgb(self.width, self.height, samples)?;
        if !photometric {
            return Ok(img);
        }
        let b = rng.random_range(0.9..=1.1);
        let c = rng.random_range(0.9..=1.1);
        adjust_contrast(&adjust_brightness(&img, b)?, c)
    }
}

struct Patch {
    side: usize,
    values: Vec<f64>,
}

impl Patch {
    /// Ring motif plus fresh inner texture.
    fn ringed(radius: usize, rng: &mut ChaCha8Rng) -> Self {
        let side = 2 * radius + 1;
        let r = radius as f64;
        let mut values = Vec::with_capacity(side * side);
        for y in 0..side {
            for x in 0..side {
                let d = (x as f64 - r).hypot(y as f64 - r);
                let ring = if (0.4 * r..=0.85 * r).contains(&d) {
                    RING_LEVEL
                } else {
                    0.0
                };
                values.push(
                    BASE_LEVEL + ring + rng.random_range(-TEXTURE_AMPLITUDE..=TEXTURE_AMPLITUDE),
                );
            }
        }
        Self { side, values }
    }
}

fn disk_mask(w: usize, h: usize, x0: usize, y0: usize, radius: usize) -> BinaryMask {
    let r = radius as f64;
    BinaryMask::from_fn(w, h, |x, y| {
        let (dx, dy) = (x as f64 - (x0 as f64 + r), y as f64 - (y0 as f64 + r));
        dx.hypot(dy) <= r
    })
}

/// Top-left corners for `n` patches of `side` pixels, pairwise separated by a
/// gap of at least 2 px.
fn place(n: usize, side: usize, w: usize, h: usize, rng: &mut ChaCha8Rng) -> Vec<(usize, usize)> {
    let mut spots: Vec<(usize, usize)> = Vec::with_capacity(n);
    while spots.len() < n {
        let cand = (
            rng.random_range(0..=w - side),
            rng.random_range(0..=h - side),
        );
        let clear = spots.iter().all(|&(x, y)| {
            cand.0 + side + 2 <= x
                || x + side + 2 <= cand.0
                || cand.1 + side + 2 <= y
                || y + side + 2 <= cand.1
        });
        if clear {
            spots.push(cand);
        }
    }
    spots
}

/// Generates pair `index` of the corpus keyed by `seed`. Each index draws from
/// its own random stream, so pairs do not depend on one another.
pub fn generate_pair(
    seed: u64,
    index: usize,
    polarity: Polarity,
    spec: &SynthSpec,
) -> Result<SynthPair> {
    spec.validate()?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(index as u64);
    let (w, h, radius) = (spec.width, spec.height, spec.defect_radius);
    let side = spec.patch_side();

    let defect = Patch::ringed(radius, &mut rng);
    let fiducial = Patch::ringed(radius, &mut rng);

    let spots = place(2, side, w, h, &mut rng);
    let (defect_at, fid_at) = (spots[0], spots[1]);
    let mut support = Canvas::textured(w, h, &mut rng);
    support.paste(&defect, defect_at.0, defect_at.1);
    // a few supports lack the fiducial; the cycle then cannot expose a
    // fiducial match on the query
    if rng.random_bool(1.0 - FIDUCIAL_DROPOUT) {
        support.paste(&fiducial, fid_at.0, fid_at.1);
    }
    let support_mask = disk_mask(w, h, defect_at.0, defect_at.1, radius);
    let support_image = support.render(&mut rng, false)?;

    let mut query = Canvas::textured(w, h, &mut rng);
    let spots = place(2, side, w, h, &mut rng);
    query.paste(&fiducial, spots[1].0, spots[1].1);
    let gt_mask = match polarity {
        Polarity::Positive => {
            query.paste(&defect, spots[0].0, spots[0].1);
            Some(disk_mask(w, h, spots[0].0, spots[0].1, radius))
        }
        Polarity::Negative => None,
    };
    let noise = rng.random_range(0.0..=MAX_QUERY_NOISE);
    query.add_noise(noise, &mut rng);
    let query_image = query.render(&mut rng, true)?;

    let prefix = match polarity {
        Polarity::Positive => "pos",
        Polarity::Negative => "neg",
    };
    Ok(SynthPair {
        pair_id: format!("{prefix}-{index:04}"),
        polarity,
        support_image,
        support_mask,
        query_image,
        gt_mask,
    })
}

/// All pairs: positives first (indices `0..positives`), then negatives.
pub fn generate(seed: u64, spec: &SynthSpec) -> Result<Vec<SynthPair>> {
    spec.validate()?;
    let polarities = std::iter::repeat_n(Polarity::Positive, spec.positives)
        .chain(std::iter::repeat_n(Polarity::Negative, spec.negatives));
    polarities
        .enumerate()
        .map(|(i, p)| generate_pair(seed, i, p, spec))
        .collect()
}

/// Writes images, masks and `manifest.jsonl` under `dir`; returns the
/// manifest path.
pub fn write_corpus(dir: impl AsRef<Path>, seed: u64, spec: &SynthSpec) -> Result<PathBuf> {
    let dir = dir.as_ref();
    let mut entries = Vec::new();
    for pair in generate(seed, spec)? {
        let id = &pair.pair_id;
        let rel = |sub: &str, name: String| PathBuf::from(sub).join(name);
        let support_image_path = rel("images", format!("{id}_support.png"));
        let support_mask_path = rel("masks", format!("{id}_support.png"));
        let query_image_path = rel("images", format!("{id}_query.png"));
        write_raster(dir.join(&support_image_path), &pair.support_image)?;
        write_mask(dir.join(&support_mask_path), &pair.support_mask)?;
        write_raster(dir.join(&query_image_path), &pair.query_image)?;
        let gt_mask_path = match &pair.gt_mask {
            Some(gt) => {
                let p = rel("masks", format!("{id}_gt.png"));
                write_mask(dir.join(&p), gt)?;
                Some(p)
            }
            None => None,
        };
        entries.push(PairManifestEntry {
            pair_id: pair.pair_id,
            polarity: pair.polarity,
            support_image_path,
            support_mask_path,
            query_image_path,
            gt_mask_path,
        });
    }
    let manifest = dir.join("manifest.jsonl");
    write_manifest(&manifest, &entries)?;
    Ok(manifest)
}

//! Zero-normalised cross-correlation template matching, used as the
//! deterministic reference segmenter.

use serde::{Deserialize, Serialize};

use super::{PromptQuery, PromptResult};
use crate::error::{Error, Result};
use crate::raster::{crop, crop_mask, BinaryMask, Raster};

/// ZNCC response at every placement of a patch inside a query.
#[derive(Clone, Debug, PartialEq)]
pub struct ResponseMap {
    /// Number of horizontal placements (`query_w - patch_w + 1`).
    pub width: usize,
    pub height: usize,
    pub values: Vec<f64>,
}

impl ResponseMap {
    pub fn get(&self, x: usize, y: usize) -> f64 {
        self.values[y * self.width + x]
    }

    /// Largest response and its first placement in row-major order.
    pub fn peak(&self) -> (f64, usize, usize) {
        let mut best = (f64::NEG_INFINITY, 0, 0);
        for (i, &v) in self.values.iter().enumerate() {
            if v > best.0 {
                best = (v, i % self.width, i / self.width);
            }
        }
        best
    }
}

/// Exact integer summed-area tables of values and squared values.
struct Integral {
    stride: usize,
    sum: Vec<u64>,
    sq: Vec<u64>,
}

impl Integral {
    fn new(img: &Raster) -> Self {
        let (w, h) = img.dims();
        let stride = w + 1;
        let mut sum = vec![0u64; stride * (h + 1)];
        let mut sq = vec![0u64; stride * (h + 1)];
        for y in 0..h {
            let (mut row, mut row_sq) = (0u64, 0u64);
            for x in 0..w {
                let v = u64::from(img.get(x, y, 0));
                row += v;
                row_sq += v * v;
                sum[(y + 1) * stride + x + 1] = sum[y * stride + x + 1] + row;
                sq[(y + 1) * stride + x + 1] = sq[y * stride + x + 1] + row_sq;
            }
        }
        Self { stride, sum, sq }
    }

    fn window(&self, table: &[u64], x: usize, y: usize, w: usize, h: usize) -> u64 {
        let s = self.stride;
        table[(y + h) * s + x + w] + table[y * s + x]
            - table[y * s + x + w]
            - table[(y + h) * s + x]
    }
}

/// ZNCC of `patch` against every window of `query`; both are converted to
/// gray first. Zero variance on either side scores 0 at that placement.
pub fn ncc_response_map(patch: &Raster, query: &Raster) -> Result<ResponseMap> {
    let (pw, ph) = patch.dims();
    let (qw, qh) = query.dims();
    if pw > qw || ph > qh {
        return Err(Error::PatchLargerThanQuery {
            patch_w: pw,
            patch_h: ph,
            query_w: qw,
            query_h: qh,
        });
    }
    let patch = patch.to_gray();
    let query = query.to_gray();
    let n = (pw * ph) as u64;

    // n * sum((t - mean)^2), exact
    let (t_sum, t_sq) = patch.samples().iter().fold((0u64, 0u64), |(a, b), &s| {
        (a + u64::from(s), b + u64::from(s) * u64::from(s))
    });
    let tpl_energy_n = i128::from(n) * i128::from(t_sq) - i128::from(t_sum) * i128::from(t_sum);
    let tpl_mean = t_sum as f64 / n as f64;
    let centered: Vec<f64> = patch
        .samples()
        .iter()
        .map(|&s| f64::from(s) - tpl_mean)
        .collect();

    let integral = Integral::new(&query);
    let q = query.samples();
    let (mw, mh) = (qw - pw + 1, qh - ph + 1);
    let mut values = Vec::with_capacity(mw * mh);
    for y in 0..mh {
        for x in 0..mw {
            let s = integral.window(&integral.sum, x, y, pw, ph);
            let s2 = integral.window(&integral.sq, x, y, pw, ph);
            let win_energy_n = i128::from(n) * i128::from(s2) - i128::from(s) * i128::from(s);
            if tpl_energy_n == 0 || win_energy_n == 0 {
                values.push(0.0);
                continue;
            }
            let mut cross = 0.0;
            for ty in 0..ph {
                let row = &q[(y + ty) * qw + x..(y + ty) * qw + x + pw];
                let trow = &centered[ty * pw..(ty + 1) * pw];
                cross += row
                    .iter()
                    .zip(trow)
                    .map(|(&qv, &tv)| f64::from(qv) * tv)
                    .sum::<f64>();
            }
            // both energies carry a factor n
            let r = cross * n as f64 / (tpl_energy_n as f64 * win_energy_n as f64).sqrt();
            values.push(r.clamp(-1.0, 1.0));
        }
    }
    Ok(ResponseMap {
        width: mw,
        height: mh,
        values,
    })
}

/// Tunables for the reference segmenter.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct NccParams {
    /// Placements scoring at least this fraction of the peak are accepted.
    pub relative_threshold: f64,
    /// Peak responses below this produce a null mask.
    pub absolute_floor: f64,
}

impl Default for NccParams {
    fn default() -> Self {
        Self {
            relative_threshold: 0.8,
            absolute_floor: 0.2,
        }
    }
}

impl NccParams {
    pub fn validate(&self) -> Result<()> {
        if !(0.0..=1.0).contains(&self.relative_threshold) {
            return Err(Error::param(
                "relative_threshold",
                format!("must be in [0, 1], got {}", self.relative_threshold),
            ));
        }
        if !(-1.0..=1.0).contains(&self.absolute_floor) {
            return Err(Error::param(
                "absolute_floor",
                format!("must be in [-1, 1], got {}", self.absolute_floor),
            ));
        }
        Ok(())
    }
}

/// Crops the support-mask bounding box as a template, correlates it over the
/// query, and stamps the template's mask shape at every accepted placement.
///
/// Score is `(peak + 1) / 2`. A template that does not fit inside the query
/// has no placements and returns a null mask with score 0.
pub fn segment_reference(params: &NccParams, q: &PromptQuery<'_>) -> Result<PromptResult> {
    let (qw, qh) = q.query_image.dims();
    let bbox = q
        .support_mask
        .bounding_box()
        .ok_or(Error::EmptySupportMask)?;
    let template = crop(q.support_image, bbox)?;
    let shape = crop_mask(q.support_mask, bbox)?;
    if bbox.width > qw || bbox.height > qh {
        return Ok(PromptResult {
            mask: BinaryMask::null(qw, qh),
            score: 0.0,
        });
    }

    let map = ncc_response_map(&template, q.query_image)?;
    let (peak, _, _) = map.peak();
    let score = ((peak + 1.0) / 2.0).clamp(0.0, 1.0);
    let mut mask = BinaryMask::null(qw, qh);
    if peak < params.absolute_floor {
        return Ok(PromptResult { mask, score });
    }

    let cutoff = params.relative_threshold * peak;
    for py in 0..map.height {
        for px in 0..map.width {
            if map.get(px, py) < cutoff {
                continue;
            }
            for sy in 0..shape.height() {
                for sx in 0..shape.width() {
                    if shape.get(sx, sy) {
                        mask.set(px + sx, py + sy, true);
                    }
                }
            }
        }
    }
    Ok(PromptResult { mask, score })
}

//! Photometric and flip augmentation with a reproducible random stream.
//!
//! All photometric arithmetic rounds half away from zero and clamps to
//! `0..=255`. Randomness comes from a ChaCha8 stream seeded with the policy
//! seed and positioned on stream `draw_index`, so any `(seed, draw_index)`
//! pair maps to one fixed set of draws.

use rand_chacha::ChaCha8Rng;
use rand_core::{Rng, SeedableRng};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::raster::{channel_mean, hflip, hflip_mask, BinaryMask, Raster};

/// Rounds half away from zero after snapping to a 1e-9 grid, so decimal
/// factors such as 1.2 that are inexact in binary land on the same side of a
/// `.5` tie as exact rational arithmetic would.
fn round_half_away(v: f64) -> f64 {
    ((v * 1e9).round() / 1e9).round()
}

fn to_sample(v: f64) -> u8 {
    round_half_away(v).clamp(0.0, 255.0) as u8
}

fn check_factor(name: &str, factor: f64, allow_zero: bool) -> Result<()> {
    let ok = factor.is_finite() && (factor > 0.0 || (allow_zero && factor == 0.0));
    if ok {
        Ok(())
    } else {
        Err(Error::param(
            name,
            format!("factor must be positive, got {factor}"),
        ))
    }
}

fn map_samples(r: &Raster, f: impl Fn(u8) -> u8) -> Raster {
    let samples = r.samples().iter().map(|&s| f(s)).collect();
    Raster::new(r.width(), r.height(), r.channels(), samples).expect("shape preserved")
}

/// `s -> clamp(round(s * factor))`.
pub fn adjust_brightness(r: &Raster, factor: f64) -> Result<Raster> {
    check_factor("brightness", factor, false)?;
    Ok(map_samples(r, |s| to_sample(f64::from(s) * factor)))
}

/// Scales each sample's distance from the image mean level.
pub fn adjust_contrast(r: &Raster, factor: f64) -> Result<Raster> {
    check_factor("contrast", factor, false)?;
    let mean = r.mean_level();
    Ok(map_samples(r, |s| {
        to_sample(mean + (f64::from(s) - mean) * factor)
    }))
}

/// Scales each channel's distance from the pixel's channel-mean gray.
/// Gray rasters are returned unchanged; factor 0 fully desaturates.
pub fn adjust_saturation(r: &Raster, factor: f64) -> Result<Raster> {
    check_factor("saturation", factor, true)?;
    if r.channels() == 1 {
        return Ok(r.clone());
    }
    let mut samples = Vec::with_capacity(r.samples().len());
    for px in r.samples().chunks_exact(3) {
        let g = f64::from(channel_mean(px[0], px[1], px[2]));
        samples.extend(
            px.iter()
                .map(|&c| to_sample(g + (f64::from(c) - g) * factor)),
        );
    }
    Raster::rgb(r.width(), r.height(), samples)
}

/// Closed range `[lo, hi]` of multiplicative factors.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct FactorRange {
    pub lo: f64,
    pub hi: f64,
}

impl FactorRange {
    pub const fn new(lo: f64, hi: f64) -> Self {
        Self { lo, hi }
    }

    pub const fn fixed(v: f64) -> Self {
        Self { lo: v, hi: v }
    }

    fn validate(&self, name: &str) -> Result<()> {
        if self.lo.is_finite() && self.hi.is_finite() && 0.0 < self.lo && self.lo <= self.hi {
            Ok(())
        } else {
            Err(Error::param(
                name,
                format!("need 0 < lo <= hi, got [{}, {}]", self.lo, self.hi),
            ))
        }
    }

    fn sample(&self, u: f64) -> f64 {
        if self.lo == self.hi {
            self.lo
        } else {
            self.lo + u * (self.hi - self.lo)
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct AugmentPolicy {
    pub brightness: FactorRange,
    pub contrast: FactorRange,
    pub saturation: FactorRange,
    pub hflip_probability: f64,
    pub seed: u64,
}

impl Default for AugmentPolicy {
    /// Factors in [0.8, 1.2] for all three photometric ops, flip with p = 0.5.
    fn default() -> Self {
        Self {
            brightness: FactorRange::new(0.8, 1.2),
            contrast: FactorRange::new(0.8, 1.2),
            saturation: FactorRange::new(0.8, 1.2),
            hflip_probability: 0.5,
            seed: 0,
        }
    }
}

impl AugmentPolicy {
    /// Policy that leaves every input untouched.
    pub fn identity(seed: u64) -> Self {
        Self {
            brightness: FactorRange::fixed(1.0),
            contrast: FactorRange::fixed(1.0),
            saturation: FactorRange::fixed(1.0),
            hflip_probability: 0.0,
            seed,
        }
    }

    pub fn validate(&self) -> Result<()> {
        self.brightness.validate("brightness")?;
        self.contrast.validate("contrast")?;
        self.saturation.validate("saturation")?;
        if !(0.0..=1.0).contains(&self.hflip_probability) {
            return Err(Error::param(
                "hflip_probability",
                format!("must be in [0, 1], got {}", self.hflip_probability),
            ));
        }
        Ok(())
    }

    /// The factors and flip decision for one draw.
    pub fn draw(&self, draw_index: u64) -> Draw {
        let mut rng = ChaCha8Rng::seed_from_u64(self.seed);
        rng.set_stream(draw_index);
        let mut unit = || (rng.next_u64() >> 11) as f64 * (1.0 / (1u64 << 53) as f64);
        let brightness = self.brightness.sample(unit());
        let contrast = self.contrast.sample(unit());
        let saturation = self.saturation.sample(unit());
        let flip = unit() < self.hflip_probability;
        Draw {
            brightness,
            contrast,
            saturation,
            flip,
        }
    }
}

/// One realised set of augmentation parameters.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Draw {
    pub brightness: f64,
    pub contrast: f64,
    pub saturation: f64,
    pub flip: bool,
}

/// Applies brightness, contrast and saturation to the image, then flips image
/// and mask together when the coin says so.
pub fn apply_policy(
    r: &Raster,
    m: &BinaryMask,
    policy: &AugmentPolicy,
    draw_index: u64,
) -> Result<(Raster, BinaryMask, Draw)> {
    policy.validate()?;
    if r.dims() != m.dims() {
        return Err(Error::dims(r.dims(), m.dims()));
    }
    let d = policy.draw(draw_index);
    let mut img = adjust_brightness(r, d.brightness)?;
    img = adjust_contrast(&img, d.contrast)?;
    img = adjust_saturation(&img, d.saturation)?;
    if d.flip {
        Ok((hflip(&img), hflip_mask(m), d))
    } else {
        Ok((img, m.clone(), d))
    }
}

use serde::{Deserialize, Serialize};

use super::BinaryMask;
use crate::error::{Error, Result};

/// How `miou` averages over classes for a single binary prompt.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum MiouMode {
    /// Foreground IoU only.
    #[default]
    ForegroundOnly,
    /// Mean of foreground IoU and background IoU.
    TwoClassMean,
}

impl std::str::FromStr for MiouMode {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "foreground-only" => Ok(MiouMode::ForegroundOnly),
            "two-class-mean" => Ok(MiouMode::TwoClassMean),
            other => Err(format!(
                "expected `foreground-only` or `two-class-mean`, got `{other}`"
            )),
        }
    }
}

impl std::fmt::Display for MiouMode {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            MiouMode::ForegroundOnly => f.write_str("foreground-only"),
            MiouMode::TwoClassMean => f.write_str("two-class-mean"),
        }
    }
}

fn counts(a: &BinaryMask, b: &BinaryMask) -> Result<Counts> {
    if a.dims() != b.dims() {
        return Err(Error::dims(a.dims(), b.dims()));
    }
    let mut c = Counts::default();
    for (&pa, &pb) in a.bits().iter().zip(b.bits()) {
        match (pa, pb) {
            (true, true) => c.both += 1,
            (false, false) => c.neither += 1,
            _ => c.one += 1,
        }
    }
    Ok(c)
}

#[derive(Default)]
struct Counts {
    both: usize,
    one: usize,
    neither: usize,
}

fn ratio(intersection: usize, union: usize) -> f64 {
    if union == 0 {
        1.0
    } else {
        intersection as f64 / union as f64
    }
}

/// Foreground intersection over union. Two null masks score 1.0.
pub fn iou(a: &BinaryMask, b: &BinaryMask) -> Result<f64> {
    let c = counts(a, b)?;
    Ok(ratio(c.both, c.both + c.one))
}

pub fn miou(a: &BinaryMask, b: &BinaryMask, mode: MiouMode) -> Result<f64> {
    let c = counts(a, b)?;
    let fg = ratio(c.both, c.both + c.one);
    Ok(match mode {
        MiouMode::ForegroundOnly => fg,
        MiouMode::TwoClassMean => (fg + ratio(c.neither, c.neither + c.one)) / 2.0,
    })
}

/// Fraction of pixels predicted as foreground.
pub fn response_rate(m: &BinaryMask) -> f64 {
    m.foreground_count() as f64 / m.bits().len() as f64
}

//! Cycle-consistency confidence gating for one-shot prompt segmentation.
//!
//! A support image and its prompt mask are matched onto a query image
//! (forward), the resulting mask is matched back onto the support image
//! (reverse), and the agreement between the restored mask and the original
//! prompt weights the two top-1 scores into a confidence. Predictions whose
//! confidence falls below a stage threshold are replaced by a null mask, with
//! an optional cascade of fallback segmenters.
//!
//! Modules:
//! - [`raster`]: images, masks, IoU and response rate, resize/flip, file I/O.
//! - [`augment`]: reproducible brightness/contrast/saturation/flip.
//! - [`segmenter`]: the segmenter trait, a ZNCC reference segmenter and a
//!   scripted table segmenter.
//! - [`gate`]: forward/reverse phases, confidence and the stage cascade.
//! - [`eval`]: manifests, catch/yield/PES scoring and threshold sweeps.
//! - [`config`], [`synth`], [`commands`]: the command-line layer.

pub mod augment;
pub mod commands;
pub mod config;
pub mod error;
pub mod eval;
pub mod gate;
pub mod raster;
pub mod segmenter;
pub mod selfcheck;
pub mod synth;

pub use error::{Direction, Error, Result};

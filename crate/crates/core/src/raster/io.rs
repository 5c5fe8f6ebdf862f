//! PNG and binary PGM/PPM reading and writing.
//!
//! Rasters load from 8-bit gray or RGB PNG, `P5` or `P6`. Masks load from a
//! single-channel PNG (or `P5`) where a sample of 128 or more is foreground,
//! and are always written as PNG with foreground 255 and background 0.

use std::fs;
use std::io::Cursor;
use std::path::Path;

use image::codecs::png::PngEncoder;
use image::{DynamicImage, ExtendedColorType, ImageEncoder, ImageFormat};

use super::{BinaryMask, Raster};
use crate::error::{Error, Result};

const PNG_MAGIC: &[u8] = b"\x89PNG\r\n\x1a\n";

fn decode_err(path: &Path, message: impl Into<String>) -> Error {
    Error::Decode {
        path: path.to_path_buf(),
        message: message.into(),
    }
}

fn read_bytes(path: &Path) -> Result<Vec<u8>> {
    fs::read(path).map_err(|e| Error::io(path, e))
}

pub fn read_raster(path: impl AsRef<Path>) -> Result<Raster> {
    let path = path.as_ref();
    let bytes = read_bytes(path)?;
    decode_raster(&bytes).map_err(|e| match e {
        Error::InvalidRaster(msg) => decode_err(path, msg),
        other => other,
    })
}

/// Decodes PNG or binary PNM bytes, chosen by magic number.
pub fn decode_raster(bytes: &[u8]) -> Result<Raster> {
    if bytes.starts_with(PNG_MAGIC) {
        decode_png(bytes)
    } else if bytes.starts_with(b"P5") || bytes.starts_with(b"P6") {
        decode_pnm(bytes)
    } else {
        Err(Error::InvalidRaster(
            "unrecognised format (expected PNG, P5 or P6)".into(),
        ))
    }
}

fn decode_png(bytes: &[u8]) -> Result<Raster> {
    let img = image::load_from_memory_with_format(bytes, ImageFormat::Png)
        .map_err(|e| Error::InvalidRaster(e.to_string()))?;
    let (w, h) = (img.width() as usize, img.height() as usize);
    match img {
        DynamicImage::ImageLuma8(buf) => Raster::gray(w, h, buf.into_raw()),
        DynamicImage::ImageRgb8(buf) => Raster::rgb(w, h, buf.into_raw()),
        other => Err(Error::InvalidRaster(format!(
            "unsupported PNG color type {:?}; expected 8-bit gray or RGB",
            other.color()
        ))),
    }
}

fn decode_pnm(bytes: &[u8]) -> Result<Raster> {
    let channels = if bytes[1] == b'5' { 1 } else { 3 };
    let mut pos = 2;
    let mut fields = [0usize; 3];
    for field in &mut fields {
        // whitespace and comments
        loop {
            match bytes.get(pos) {
                Some(b) if b.is_ascii_whitespace() => pos += 1,
                Some(b'#') => {
                    while bytes.get(pos).is_some_and(|&b| b != b'\n') {
                        pos += 1;
                    }
                }
                _ => break,
            }
        }
        let start = pos;
        while bytes.get(pos).is_some_and(u8::is_ascii_digit) {
            pos += 1;
        }
        if start == pos {
            return Err(Error::InvalidRaster("malformed PNM header".into()));
        }
        *field = std::str::from_utf8(&bytes[start..pos])
            .ok()
            .and_then(|s| s.parse().ok())
            .ok_or_else(|| Error::InvalidRaster("malformed PNM header".into()))?;
    }
    if !bytes.get(pos).is_some_and(u8::is_ascii_whitespace) {
        return Err(Error::InvalidRaster("malformed PNM header".into()));
    }
    pos += 1;
    let [w, h, maxval] = fields;
    if maxval != 255 {
        return Err(Error::InvalidRaster(format!(
            "only 8-bit PNM is supported, maxval {maxval}"
        )));
    }
    let len = w * h * channels;
    let data = bytes
        .get(pos..pos + len)
        .ok_or_else(|| Error::InvalidRaster("truncated PNM data".into()))?;
    Raster::new(w, h, channels, data.to_vec())
}

/// PNG encoding of a raster (gray or RGB, 8-bit).
pub fn encode_png(r: &Raster) -> Result<Vec<u8>> {
    let color = if r.channels() == 1 {
        ExtendedColorType::L8
    } else {
        ExtendedColorType::Rgb8
    };
    let mut out = Vec::new();
    PngEncoder::new(Cursor::new(&mut out))
        .write_image(r.samples(), r.width() as u32, r.height() as u32, color)
        .map_err(|e| Error::Internal(format!("png encode: {e}")))?;
    Ok(out)
}

pub fn encode_pnm(r: &Raster) -> Vec<u8> {
    let magic = if r.channels() == 1 { "P5" } else { "P6" };
    let mut out = format!("{magic}\n{} {}\n255\n", r.width(), r.height()).into_bytes();
    out.extend_from_slice(r.samples());
    out
}

fn write_bytes(path: &Path, bytes: &[u8]) -> Result<()> {
    if let Some(parent) = path.parent().filter(|p| !p.as_os_str().is_empty()) {
        fs::create_dir_all(parent).map_err(|e| Error::io(parent, e))?;
    }
    fs::write(path, bytes).map_err(|e| Error::io(path, e))
}

/// Writes PNG unless the extension is `.pgm` or `.ppm`.
pub fn write_raster(path: impl AsRef<Path>, r: &Raster) -> Result<()> {
    let path = path.as_ref();
    let ext = path
        .extension()
        .and_then(|e| e.to_str())
        .map(str::to_ascii_lowercase);
    let bytes = match ext.as_deref() {
        Some("pgm") | Some("ppm") => encode_pnm(r),
        _ => encode_png(r)?,
    };
    write_bytes(path, &bytes)
}

pub fn mask_to_raster(m: &BinaryMask) -> Raster {
    let samples = m.bits().iter().map(|&b| if b { 255 } else { 0 }).collect();
    Raster::from_parts_unchecked(m.width(), m.height(), 1, samples)
}

/// Thresholds a single-channel raster at 128.
pub fn raster_to_mask(r: &Raster) -> Result<BinaryMask> {
    if r.channels() != 1 {
        return Err(Error::InvalidRaster(
            "mask image must be single-channel".into(),
        ));
    }
    BinaryMask::new(
        r.width(),
        r.height(),
        r.samples().iter().map(|&s| s >= 128).collect(),
    )
}

pub fn encode_mask_png(m: &BinaryMask) -> Result<Vec<u8>> {
    encode_png(&mask_to_raster(m))
}

pub fn decode_mask(bytes: &[u8]) -> Result<BinaryMask> {
    raster_to_mask(&decode_raster(bytes)?)
}

pub fn read_mask(path: impl AsRef<Path>) -> Result<BinaryMask> {
    let path = path.as_ref();
    let bytes = read_bytes(path)?;
    decode_mask(&bytes).map_err(|e| match e {
        Error::InvalidRaster(msg) => decode_err(path, msg),
        other => other,
    })
}

pub fn write_mask(path: impl AsRef<Path>, m: &BinaryMask) -> Result<()> {
    write_bytes(path.as_ref(), &encode_mask_png(m)?)
}

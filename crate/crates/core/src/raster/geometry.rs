use super::{BinaryMask, Raster, Rect};
use crate::error::{Error, Result};

/// Source index for destination index `i` when mapping `src` samples onto `dst`.
fn nearest(i: usize, src: usize, dst: usize) -> usize {
    i * src / dst
}

fn check_target(w: usize, h: usize) -> Result<()> {
    if w == 0 || h == 0 {
        return Err(Error::param(
            "target size",
            format!("resize target must be positive, got {w}x{h}"),
        ));
    }
    Ok(())
}

/// Nearest-neighbour resize. Destination pixel `x` samples source column
/// `floor(x * src_w / w)`, likewise for rows.
pub fn resize_nearest(r: &Raster, w: usize, h: usize) -> Result<Raster> {
    check_target(w, h)?;
    if r.dims() == (w, h) {
        return Ok(r.clone());
    }
    let c = r.channels();
    let mut out = Vec::with_capacity(w * h * c);
    for y in 0..h {
        let sy = nearest(y, r.height(), h);
        for x in 0..w {
            out.extend_from_slice(r.pixel(nearest(x, r.width(), w), sy));
        }
    }
    Ok(Raster::from_parts_unchecked(w, h, c, out))
}

pub fn resize_nearest_mask(m: &BinaryMask, w: usize, h: usize) -> Result<BinaryMask> {
    check_target(w, h)?;
    if m.dims() == (w, h) {
        return Ok(m.clone());
    }
    Ok(BinaryMask::from_fn(w, h, |x, y| {
        m.get(nearest(x, m.width(), w), nearest(y, m.height(), h))
    }))
}

/// Mirror columns left to right.
pub fn hflip(r: &Raster) -> Raster {
    let c = r.channels();
    let mut out = Vec::with_capacity(r.samples().len());
    for y in 0..r.height() {
        for x in (0..r.width()).rev() {
            out.extend_from_slice(r.pixel(x, y));
        }
    }
    Raster::from_parts_unchecked(r.width(), r.height(), c, out)
}

pub fn hflip_mask(m: &BinaryMask) -> BinaryMask {
    let w = m.width();
    BinaryMask::from_fn(w, m.height(), |x, y| m.get(w - 1 - x, y))
}

fn check_rect(dims: (usize, usize), rect: Rect) -> Result<()> {
    if rect.width == 0
        || rect.height == 0
        || rect.x + rect.width > dims.0
        || rect.y + rect.height > dims.1
    {
        return Err(Error::param(
            "rect",
            format!("{rect:?} is empty or exceeds {}x{}", dims.0, dims.1),
        ));
    }
    Ok(())
}

pub fn crop(r: &Raster, rect: Rect) -> Result<Raster> {
    check_rect(r.dims(), rect)?;
    let c = r.channels();
    let mut out = Vec::with_capacity(rect.width * rect.height * c);
    for y in rect.y..rect.y + rect.height {
        let start = (y * r.width() + rect.x) * c;
        out.extend_from_slice(&r.samples()[start..start + rect.width * c]);
    }
    Ok(Raster::from_parts_unchecked(
        rect.width,
        rect.height,
        c,
        out,
    ))
}

pub fn crop_mask(m: &BinaryMask, rect: Rect) -> Result<BinaryMask> {
    check_rect(m.dims(), rect)?;
    Ok(BinaryMask::from_fn(rect.width, rect.height, |x, y| {
        m.get(rect.x + x, rect.y + y)
    }))
}

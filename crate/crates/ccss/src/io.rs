//! Mask files: binary PGM (P5), plain PGM (P2) and PNG.
//!
//! Pixels are converted to 8-bit luminance; values of 128 and above are
//! object, lower values background.

use std::io::Cursor;
use std::path::Path;

use ccss_core::BinaryMask;
use image::{GrayImage, ImageFormat, Luma};

use crate::error::{Error, Result};

pub const OBJECT_THRESHOLD: u8 = 128;

/// Decodes an in-memory PNG or PGM file into a mask.
pub fn decode_mask(bytes: &[u8]) -> Result<BinaryMask> {
    let img = image::load_from_memory(bytes).map_err(|e| Error::Image(e.to_string()))?;
    mask_from_gray(&img.to_luma8(), OBJECT_THRESHOLD)
}

pub fn read_mask(path: &Path) -> Result<BinaryMask> {
    let bytes = std::fs::read(path).map_err(Error::io(path))?;
    decode_mask(&bytes).map_err(|e| match e {
        Error::Image(msg) => Error::Image(format!("{}: {msg}", path.display())),
        other => other,
    })
}

/// `value >= threshold` marks an object pixel.
pub fn mask_from_gray(img: &GrayImage, threshold: u8) -> Result<BinaryMask> {
    let (w, h) = img.dimensions();
    let bits = img.pixels().map(|p| p.0[0] >= threshold).collect();
    Ok(BinaryMask::from_bits(w as usize, h as usize, bits)?)
}

pub fn mask_to_gray(mask: &BinaryMask) -> GrayImage {
    GrayImage::from_fn(mask.width() as u32, mask.height() as u32, |x, y| {
        Luma([if mask.get(x as usize, y as usize) { 255 } else { 0 }])
    })
}

/// Encodes a mask as binary PGM or PNG.
pub fn encode_mask(mask: &BinaryMask, format: MaskFormat) -> Result<Vec<u8>> {
    let mut out = Cursor::new(Vec::new());
    let fmt = match format {
        MaskFormat::Pgm => ImageFormat::Pnm,
        MaskFormat::Png => ImageFormat::Png,
    };
    mask_to_gray(mask)
        .write_to(&mut out, fmt)
        .map_err(|e| Error::Image(e.to_string()))?;
    Ok(out.into_inner())
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum MaskFormat {
    Pgm,
    Png,
}

impl MaskFormat {
    pub fn extension(self) -> &'static str {
        match self {
            MaskFormat::Pgm => "pgm",
            MaskFormat::Png => "png",
        }
    }
}

pub fn write_mask(mask: &BinaryMask, path: &Path) -> Result<()> {
    let format = match path.extension().and_then(|e| e.to_str()) {
        Some("png") => MaskFormat::Png,
        _ => MaskFormat::Pgm,
    };
    let bytes = encode_mask(mask, format)?;
    std::fs::write(path, bytes).map_err(Error::io(path))
}

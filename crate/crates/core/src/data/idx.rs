//! Big-endian IDX files (the MNIST family): unsigned-byte images with magic
//! `0x00000803` and dimensions `(count, rows, cols)`, labels with magic
//! `0x00000801` and one byte per label.

use std::io::Write;
use std::path::Path;

use super::{Dataset, SampleShape, Split};
use crate::error::{Error, Result};

pub const IDX_IMAGES_MAGIC: u32 = 0x0000_0803;
pub const IDX_LABELS_MAGIC: u32 = 0x0000_0801;

fn read_u32(bytes: &[u8], at: usize) -> Result<u32> {
    let b = bytes
        .get(at..at + 4)
        .ok_or(Error::IdxTruncated { expected: at + 4, found: bytes.len() })?;
    Ok(u32::from_be_bytes([b[0], b[1], b[2], b[3]]))
}

fn check_magic(bytes: &[u8], expected: u32) -> Result<()> {
    let found = read_u32(bytes, 0)?;
    if found != expected {
        return Err(Error::IdxWrongMagic { expected, found });
    }
    Ok(())
}

/// Returns `(rows, cols, pixels)` with `pixels.len() == count * rows * cols`.
pub fn parse_idx_images(bytes: &[u8]) -> Result<(usize, usize, &[u8])> {
    check_magic(bytes, IDX_IMAGES_MAGIC)?;
    let count = read_u32(bytes, 4)? as usize;
    let rows = read_u32(bytes, 8)? as usize;
    let cols = read_u32(bytes, 12)? as usize;
    let need = 16 + count * rows * cols;
    if bytes.len() < need {
        return Err(Error::IdxTruncated { expected: need, found: bytes.len() });
    }
    Ok((rows, cols, &bytes[16..need]))
}

pub fn parse_idx_labels(bytes: &[u8]) -> Result<&[u8]> {
    check_magic(bytes, IDX_LABELS_MAGIC)?;
    let count = read_u32(bytes, 4)? as usize;
    let need = 8 + count;
    if bytes.len() < need {
        return Err(Error::IdxTruncated { expected: need, found: bytes.len() });
    }
    Ok(&bytes[8..need])
}

/// Parses an image/label pair already in memory. Pixels are scaled to `[0, 1]`.
pub fn parse_idx(images: &[u8], labels: &[u8], split: Split) -> Result<Dataset<f64>> {
    let (rows, cols, pixels) = parse_idx_images(images)?;
    let labels = parse_idx_labels(labels)?;
    let per = rows * cols;
    let count = if per == 0 { 0 } else { pixels.len() / per };
    if count != labels.len() {
        return Err(Error::IdxCountMismatch { images: count, labels: labels.len() });
    }
    let labels: Vec<usize> = labels.iter().map(|&l| l as usize).collect();
    let n_classes = labels.iter().max().map_or(0, |m| m + 1);
    let features = pixels.iter().map(|&p| f64::from(p) / 255.0).collect();
    Dataset::new(features, labels, n_classes, SampleShape::Image { height: rows, width: cols, channels: 1 }, split)
}

pub fn load_idx(images_path: impl AsRef<Path>, labels_path: impl AsRef<Path>) -> Result<Dataset<f64>> {
    let images = std::fs::read(images_path)?;
    let labels = std::fs::read(labels_path)?;
    parse_idx(&images, &labels, Split::Train)
}

pub fn write_idx_images<W: Write>(mut out: W, rows: usize, cols: usize, pixels: &[u8]) -> Result<()> {
    let count = if rows * cols == 0 { 0 } else { pixels.len() / (rows * cols) };
    out.write_all(&IDX_IMAGES_MAGIC.to_be_bytes())?;
    for d in [count, rows, cols] {
        out.write_all(&(d as u32).to_be_bytes())?;
    }
    out.write_all(pixels)?;
    Ok(())
}

pub fn write_idx_labels<W: Write>(mut out: W, labels: &[u8]) -> Result<()> {
    out.write_all(&IDX_LABELS_MAGIC.to_be_bytes())?;
    out.write_all(&(labels.len() as u32).to_be_bytes())?;
    out.write_all(labels)?;
    Ok(())
}

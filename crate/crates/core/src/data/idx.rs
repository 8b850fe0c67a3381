//! MNIST-style IDX files (optionally gzip-compressed).

use std::fs;
use std::io::Read;
use std::path::Path;

use flate2::read::GzDecoder;

use super::Dataset;
use crate::error::{Error, Result};
use crate::linalg::Matrix;

pub const IMAGES_MAGIC: u32 = 0x0000_0803;
pub const LABELS_MAGIC: u32 = 0x0000_0801;
const NUM_CLASSES: usize = 10;

fn read_maybe_gz(path: &Path) -> Result<Vec<u8>> {
    let raw = fs::read(path).map_err(|e| Error::io(path, e))?;
    if raw.starts_with(&[0x1f, 0x8b]) {
        let mut out = Vec::new();
        GzDecoder::new(raw.as_slice())
            .read_to_end(&mut out)
            .map_err(|e| Error::io(path, e))?;
        Ok(out)
    } else {
        Ok(raw)
    }
}

struct Cursor<'a> {
    path: &'a Path,
    bytes: &'a [u8],
    pos: usize,
}

impl<'a> Cursor<'a> {
    fn u32(&mut self, what: &str) -> Result<u32> {
        let end = self.pos + 4;
        let b = self.bytes.get(self.pos..end).ok_or_else(|| Error::IdxTruncated {
            path: self.path.to_path_buf(),
            detail: format!("missing {what} at byte {}", self.pos),
        })?;
        self.pos = end;
        Ok(u32::from_be_bytes([b[0], b[1], b[2], b[3]]))
    }

    fn take(&mut self, len: usize, what: &str) -> Result<&'a [u8]> {
        let end = self.pos + len;
        let b = self.bytes.get(self.pos..end).ok_or_else(|| Error::IdxTruncated {
            path: self.path.to_path_buf(),
            detail: format!(
                "{what} needs {len} bytes, only {} remain",
                self.bytes.len().saturating_sub(self.pos)
            ),
        })?;
        self.pos = end;
        Ok(b)
    }
}

fn check_magic(c: &mut Cursor<'_>, field: &'static str, expected: u32) -> Result<()> {
    let found = c.u32(field)?;
    if found != expected {
        return Err(Error::IdxMagic {
            path: c.path.to_path_buf(),
            field,
            expected,
            found,
        });
    }
    Ok(())
}

/// Parses in-memory IDX image and label files. Pixels are scaled by 1/255.
pub fn parse_idx(
    images: &[u8],
    labels: &[u8],
    images_path: &Path,
    labels_path: &Path,
) -> Result<Dataset> {
    let mut ic = Cursor {
        path: images_path,
        bytes: images,
        pos: 0,
    };
    check_magic(&mut ic, "image magic number", IMAGES_MAGIC)?;
    let n_images = ic.u32("image count")? as usize;
    let rows = ic.u32("row count")? as usize;
    let cols = ic.u32("column count")? as usize;
    let dim = rows * cols;
    if dim == 0 {
        return Err(Error::input(format!("{}: zero-sized images", images_path.display())));
    }
    let pixels = ic.take(n_images * dim, "pixel data")?;

    let mut lc = Cursor {
        path: labels_path,
        bytes: labels,
        pos: 0,
    };
    check_magic(&mut lc, "label magic number", LABELS_MAGIC)?;
    let n_labels = lc.u32("label count")? as usize;
    if n_labels != n_images {
        return Err(Error::IdxCountMismatch {
            images: n_images,
            labels: n_labels,
        });
    }
    let raw_labels = lc.take(n_labels, "label data")?;
    let labels: Vec<usize> = raw_labels.iter().map(|&b| b as usize).collect();
    if let Some(bad) = labels.iter().find(|&&l| l >= NUM_CLASSES) {
        return Err(Error::input(format!("{}: label {bad} outside 0..9", labels_path.display())));
    }
    if n_images == 0 {
        return Err(Error::input(format!("{}: no images", images_path.display())));
    }
    let features = Matrix::new(
        n_images,
        dim,
        pixels.iter().map(|&p| f64::from(p) / 255.0).collect(),
    )?;
    Dataset::new(features, labels, NUM_CLASSES)
}

/// Loads an IDX image/label pair; `.gz` files are detected by their header.
pub fn load_idx(images_path: impl AsRef<Path>, labels_path: impl AsRef<Path>) -> Result<Dataset> {
    let (ip, lp) = (images_path.as_ref(), labels_path.as_ref());
    parse_idx(&read_maybe_gz(ip)?, &read_maybe_gz(lp)?, ip, lp)
}

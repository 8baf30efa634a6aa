//! IDX (MNIST-family) image and label files, optionally gzip-compressed.

use std::fs;
use std::io::Read;
use std::path::Path;

use flate2::read::GzDecoder;

use crate::error::{Error, Result};

pub const IMAGES_MAGIC: u32 = 2051;
pub const LABELS_MAGIC: u32 = 2049;

/// Grayscale images with their labels.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct RawImageSet {
    pub rows: usize,
    pub cols: usize,
    /// `count × rows × cols`, row-major.
    pub pixels: Vec<u8>,
    pub labels: Vec<u8>,
    pub classes: usize,
}

impl RawImageSet {
    pub fn new(rows: usize, cols: usize, pixels: Vec<u8>, labels: Vec<u8>) -> Result<Self> {
        if rows == 0 || cols == 0 || pixels.len() != labels.len() * rows * cols {
            return Err(Error::Dimension(format!(
                "{} pixels for {} images of {rows}×{cols}",
                pixels.len(),
                labels.len()
            )));
        }
        let classes = labels.iter().map(|&l| l as usize + 1).max().unwrap_or(0);
        Ok(Self { rows, cols, pixels, labels, classes })
    }

    pub fn len(&self) -> usize {
        self.labels.len()
    }

    pub fn is_empty(&self) -> bool {
        self.labels.is_empty()
    }

    pub fn image(&self, i: usize) -> &[u8] {
        let n = self.rows * self.cols;
        &self.pixels[i * n..(i + 1) * n]
    }
}

/// File contents, transparently gunzipped when the gzip magic is present.
pub fn read_maybe_gz(path: &Path) -> Result<Vec<u8>> {
    let raw = fs::read(path).map_err(|e| Error::io(path, e))?;
    if raw.starts_with(&[0x1f, 0x8b]) {
        let mut out = Vec::new();
        GzDecoder::new(raw.as_slice()).read_to_end(&mut out).map_err(|e| Error::Format {
            what: path.display().to_string(),
            offset: 0,
            reason: format!("gzip stream: {e}"),
        })?;
        Ok(out)
    } else {
        Ok(raw)
    }
}

struct Cursor<'a> {
    bytes: &'a [u8],
    offset: usize,
    what: &'a str,
}

impl Cursor<'_> {
    fn fail(&self, reason: impl Into<String>) -> Error {
        Error::Format { what: self.what.to_string(), offset: self.offset as u64, reason: reason.into() }
    }

    fn u32(&mut self) -> Result<u32> {
        let b = self.bytes.get(self.offset..self.offset + 4).ok_or_else(|| self.fail("truncated header"))?;
        self.offset += 4;
        Ok(u32::from_be_bytes(b.try_into().expect("4 bytes")))
    }

    fn payload(&mut self, n: usize) -> Result<&[u8]> {
        let rest = self.bytes.len() - self.offset;
        if rest < n {
            return Err(self.fail(format!("truncated payload: {n} bytes expected, {rest} present")));
        }
        if rest > n {
            self.offset += n;
            return Err(self.fail(format!("{} trailing bytes", rest - n)));
        }
        Ok(&self.bytes[self.offset..])
    }
}

/// `(count, rows, cols, pixels)` from an IDX image file body.
pub fn parse_images(bytes: &[u8], what: &str) -> Result<(usize, usize, usize, Vec<u8>)> {
    let mut c = Cursor { bytes, offset: 0, what };
    let magic = c.u32()?;
    if magic != IMAGES_MAGIC {
        c.offset = 0;
        return Err(c.fail(format!("bad image magic {magic}, expected {IMAGES_MAGIC}")));
    }
    let (n, rows, cols) = (c.u32()? as usize, c.u32()? as usize, c.u32()? as usize);
    if rows == 0 || cols == 0 {
        return Err(c.fail("zero image dimension"));
    }
    let total = n.checked_mul(rows * cols).ok_or_else(|| c.fail("image count overflows"))?;
    Ok((n, rows, cols, c.payload(total)?.to_vec()))
}

/// Labels from an IDX label file body.
pub fn parse_labels(bytes: &[u8], what: &str) -> Result<Vec<u8>> {
    let mut c = Cursor { bytes, offset: 0, what };
    let magic = c.u32()?;
    if magic != LABELS_MAGIC {
        c.offset = 0;
        return Err(c.fail(format!("bad label magic {magic}, expected {LABELS_MAGIC}")));
    }
    let n = c.u32()? as usize;
    Ok(c.payload(n)?.to_vec())
}

/// Load a paired image/label file set.
pub fn load_idx(images_path: &Path, labels_path: &Path) -> Result<RawImageSet> {
    let img_name = images_path.display().to_string();
    let (n, rows, cols, pixels) = parse_images(&read_maybe_gz(images_path)?, &img_name)?;
    let labels = parse_labels(&read_maybe_gz(labels_path)?, &labels_path.display().to_string())?;
    if labels.len() != n {
        return Err(Error::Format {
            what: img_name,
            offset: 4,
            reason: format!("{n} images but {} labels", labels.len()),
        });
    }
    RawImageSet::new(rows, cols, pixels, labels)
}

/// Serialize images in IDX form.
pub fn encode_images(set: &RawImageSet) -> Vec<u8> {
    let mut out = Vec::with_capacity(16 + set.pixels.len());
    for v in [IMAGES_MAGIC, set.len() as u32, set.rows as u32, set.cols as u32] {
        out.extend_from_slice(&v.to_be_bytes());
    }
    out.extend_from_slice(&set.pixels);
    out
}

/// Serialize labels in IDX form.
pub fn encode_labels(labels: &[u8]) -> Vec<u8> {
    let mut out = Vec::with_capacity(8 + labels.len());
    out.extend_from_slice(&LABELS_MAGIC.to_be_bytes());
    out.extend_from_slice(&(labels.len() as u32).to_be_bytes());
    out.extend_from_slice(labels);
    out
}

/// Write `set` as an image/label file pair.
pub fn write_idx(set: &RawImageSet, images_path: &Path, labels_path: &Path) -> Result<()> {
    fs::write(images_path, encode_images(set)).map_err(|e| Error::io(images_path, e))?;
    fs::write(labels_path, encode_labels(&set.labels)).map_err(|e| Error::io(labels_path, e))
}

//! Binary cache of a preprocessed dataset.
//!
//! Layout (little-endian): magic `WLKAFDAT`, version `u32`, name, image
//! shape, class count, seed, test-source tag, selected indices,
//! standardization constants, split membership, then the three splits
//! (dimension, labels, interleaved complex features).

use std::fs::File;
use std::io::{BufReader, BufWriter, Read, Write};
use std::path::Path;

use super::{ComplexDataset, Split, TestSource};
use crate::error::{Error, Result};
use crate::persist::{invalid, Reader, Writer};

pub const CACHE_MAGIC: &[u8; 8] = b"WLKAFDAT";
pub const CACHE_VERSION: u32 = 1;

fn write_split<W: Write>(w: &mut Writer<W>, s: &Split) -> std::io::Result<()> {
    w.usize(s.dim)?;
    w.usizes(&s.labels)?;
    w.complexes(&s.features)
}

fn read_split<R: Read>(r: &mut Reader<R>) -> std::io::Result<Split> {
    let dim = r.usize()?;
    let labels = r.usizes()?;
    let features = r.complexes()?;
    Split::new(features, labels, dim).map_err(|e| invalid(&e.to_string()))
}

pub fn to_bytes(ds: &ComplexDataset) -> Vec<u8> {
    let mut w = Writer::new(Vec::new());
    write(&mut w, ds).expect("in-memory write");
    w.into_inner()
}

fn write<W: Write>(w: &mut Writer<W>, ds: &ComplexDataset) -> std::io::Result<()> {
    w.bytes(CACHE_MAGIC)?;
    w.u32(CACHE_VERSION)?;
    w.str(&ds.name)?;
    w.usize(ds.rows)?;
    w.usize(ds.cols)?;
    w.usize(ds.classes)?;
    w.u64(ds.seed)?;
    w.u8(match ds.test_source {
        TestSource::SamePool => 0,
        TestSource::SeparatePool => 1,
        TestSource::Synthetic => 2,
    })?;
    w.usizes(&ds.selected)?;
    w.complexes(&ds.mean)?;
    w.f64s(&ds.scale)?;
    w.usizes(&ds.train_index)?;
    w.usizes(&ds.val_index)?;
    w.usizes(&ds.test_index)?;
    for s in [&ds.train, &ds.val, &ds.test] {
        write_split(w, s)?;
    }
    Ok(())
}

fn read<R: Read>(r: &mut Reader<R>) -> std::result::Result<ComplexDataset, String> {
    let io = |e: std::io::Error| e.to_string();
    if r.bytes(8).map_err(io)? != CACHE_MAGIC {
        return Err("not a dataset cache (bad magic)".into());
    }
    let version = r.u32().map_err(io)?;
    if version != CACHE_VERSION {
        return Err(format!("cache format version {version}, expected {CACHE_VERSION}; rebuild it with `preprocess`"));
    }
    let body = (|| -> std::io::Result<ComplexDataset> {
        let name = r.str()?;
        let (rows, cols, classes) = (r.usize()?, r.usize()?, r.usize()?);
        let seed = r.u64()?;
        let test_source = match r.u8()? {
            0 => TestSource::SamePool,
            1 => TestSource::SeparatePool,
            2 => TestSource::Synthetic,
            _ => return Err(invalid("unknown test source tag")),
        };
        let selected = r.usizes()?;
        let mean = r.complexes()?;
        let scale = r.f64s()?;
        let (train_index, val_index, test_index) = (r.usizes()?, r.usizes()?, r.usizes()?);
        let (train, val, test) = (read_split(r)?, read_split(r)?, read_split(r)?);
        r.expect_end()?;
        Ok(ComplexDataset {
            name,
            rows,
            cols,
            classes,
            selected,
            mean,
            scale,
            seed,
            test_source,
            train_index,
            val_index,
            test_index,
            train,
            val,
            test,
        })
    })();
    let ds = body.map_err(|e| format!("{e} (at byte {})", r.offset()))?;
    let dim = ds.train.dim;
    if ds.val.dim != dim || ds.test.dim != dim || ds.mean.len() != ds.scale.len() {
        return Err("inconsistent feature dimensions".into());
    }
    Ok(ds)
}

pub fn from_bytes(bytes: &[u8]) -> Result<ComplexDataset> {
    read(&mut Reader::new(bytes, 1 << 32)).map_err(|reason| Error::Cache { path: "<memory>".into(), reason })
}

/// Write `ds` to `path`.
pub fn cache_dataset(ds: &ComplexDataset, path: &Path) -> Result<()> {
    if let Some(parent) = path.parent().filter(|p| !p.as_os_str().is_empty()) {
        std::fs::create_dir_all(parent).map_err(|e| Error::io(parent, e))?;
    }
    let file = File::create(path).map_err(|e| Error::io(path, e))?;
    let mut w = Writer::new(BufWriter::new(file));
    write(&mut w, ds).map_err(|e| Error::io(path, e))?;
    w.into_inner().flush().map_err(|e| Error::io(path, e))
}

/// Read a cache written by [`cache_dataset`].
pub fn load_cached(path: &Path) -> Result<ComplexDataset> {
    let file = File::open(path).map_err(|e| Error::Cache {
        path: path.to_path_buf(),
        reason: format!("{e}; create it with `preprocess`"),
    })?;
    read(&mut Reader::new(BufReader::new(file), 1 << 32)).map_err(|reason| Error::Cache { path: path.to_path_buf(), reason })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::data::synthetic;
    use crate::data::{build_complex_dataset, RawImageSet, SplitPlan};

    fn sample() -> ComplexDataset {
        let pixels: Vec<u8> = (0..30 * 16).map(|i| (i * 37 % 251) as u8).collect();
        let raw = RawImageSet::new(4, 4, pixels, (0..30).map(|i| (i % 4) as u8).collect()).unwrap();
        build_complex_dataset(&raw, 6, SplitPlan::Counts { train: 20, val: 5, test: 5 }, 9).unwrap()
    }

    #[test]
    fn round_trip_is_exact() {
        let dir = tempfile::tempdir().unwrap();
        for ds in [sample(), synthetic::xor_like(50, 10, 10, 1)] {
            let p = dir.path().join("sub/ds.cache");
            cache_dataset(&ds, &p).unwrap();
            assert_eq!(load_cached(&p).unwrap(), ds);
            assert_eq!(std::fs::read(&p).unwrap(), to_bytes(&ds));
        }
    }

    #[test]
    fn corruption_is_a_cache_error() {
        let bytes = to_bytes(&sample());
        let mut bad = bytes.clone();
        bad[2] ^= 0xff;
        assert!(matches!(from_bytes(&bad), Err(Error::Cache { .. })));
        let mut version = bytes.clone();
        version[8] = 7;
        let err = from_bytes(&version).unwrap_err().to_string();
        assert!(err.contains("rebuild"), "{err}");
        assert!(matches!(from_bytes(&bytes[..bytes.len() / 2]), Err(Error::Cache { .. })));
        assert!(matches!(from_bytes(&[]), Err(Error::Cache { .. })));
        let dir = tempfile::tempdir().unwrap();
        assert!(matches!(load_cached(&dir.path().join("absent")), Err(Error::Cache { .. })));
    }
}

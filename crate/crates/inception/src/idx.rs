//! IDX files on disk. Paths ending in `.gz` are gzip-compressed.

use std::io::{Read, Write};
use std::path::Path;

use flate2::read::GzDecoder;
use flate2::write::GzEncoder;
use flate2::Compression;
use inception_core::data::{self, Dataset};

use crate::{read_file, write_file, Error, Result};

fn is_gzip(path: &Path) -> bool {
    path.extension().is_some_and(|e| e.eq_ignore_ascii_case("gz"))
}

fn read_bytes(path: &Path) -> Result<Vec<u8>> {
    let raw = read_file(path)?;
    if !is_gzip(path) {
        return Ok(raw);
    }
    let mut out = Vec::new();
    GzDecoder::new(raw.as_slice()).read_to_end(&mut out).map_err(|e| Error::format(path.display().to_string(), e))?;
    Ok(out)
}

fn with_path<T>(path: &Path, r: std::result::Result<T, data::DataError>) -> Result<T> {
    r.map_err(|e| Error::format(path.display().to_string(), e))
}

/// Loads an IDX image file as a cardinality-256 dataset.
pub fn load_idx(path: &Path) -> Result<Dataset> {
    with_path(path, data::parse_idx_images(&read_bytes(path)?))
}

/// Loads an IDX label file.
pub fn load_idx_labels(path: &Path) -> Result<Vec<u8>> {
    with_path(path, data::parse_idx_labels(&read_bytes(path)?))
}

pub fn write_idx(path: &Path, dataset: &Dataset) -> Result<()> {
    let bytes = data::write_idx_images(dataset);
    if !is_gzip(path) {
        return write_file(path, &bytes);
    }
    let mut enc = GzEncoder::new(Vec::new(), Compression::default());
    enc.write_all(&bytes).and_then(|_| enc.flush()).map_err(|e| Error::io(path, e))?;
    let gz = enc.finish().map_err(|e| Error::io(path, e))?;
    write_file(path, &gz)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn plain_and_gzip_round_trip() {
        let dir = tempfile::tempdir().unwrap();
        let d = Dataset::new((0..3 * 20).map(|i| (i * 7 % 256) as u8).collect(), 4, 5, 256).unwrap();
        for name in ["a-idx3-ubyte", "a-idx3-ubyte.gz"] {
            let p = dir.path().join(name);
            write_idx(&p, &d).unwrap();
            assert_eq!(load_idx(&p).unwrap(), d);
        }
        let raw = std::fs::read(dir.path().join("a-idx3-ubyte")).unwrap();
        assert_eq!(raw, data::write_idx_images(&d));
    }

    #[test]
    fn errors_name_the_file() {
        let dir = tempfile::tempdir().unwrap();
        let p = dir.path().join("short");
        std::fs::write(&p, [0, 0, 8, 3, 0, 0, 0, 1, 0, 0, 0, 2, 0, 0, 0, 2, 9]).unwrap();
        let msg = load_idx(&p).unwrap_err().to_string();
        assert!(msg.contains("short") && msg.contains("expected 20 bytes, found 17"), "{msg}");
    }
}

//! File formats, experiment plumbing and the command-line front end for
//! [`inception_core`].
//!
//! - [`circuit_io`]: circuit JSON documents.
//! - [`idx`]: IDX image files, optionally gzip-compressed.
//! - [`checkpoint`]: tensorized model checkpoints.
//! - [`config`]: experiment configuration (TOML or JSON).
//! - [`report`]: training logs and reports.
//! - [`ranklab`]: value-matrix rank sweeps.
//! - [`verify`]: the cross-check and acceptance suite.
//! - [`cli`]: the `inception` binary.

pub mod checkpoint;
pub mod circuit_io;
pub mod cli;
pub mod config;
mod error;
pub mod idx;
pub mod ranklab;
pub mod report;
pub mod verify;

pub use error::{Error, Result};
pub use inception_core as core;

pub(crate) fn read_file(path: &std::path::Path) -> Result<Vec<u8>> {
    std::fs::read(path).map_err(|e| Error::io(path, e))
}

pub(crate) fn write_file(path: &std::path::Path, bytes: &[u8]) -> Result<()> {
    if let Some(dir) = path.parent().filter(|d| !d.as_os_str().is_empty()) {
        std::fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
    }
    std::fs::write(path, bytes).map_err(|e| Error::io(path, e))
}

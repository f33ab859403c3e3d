//! File formats: PFM depth, PNG images, binary PLY clouds and the CVGX / CVPM
//! containers for occupancy grids and point-pixel maps.

pub mod cvgx;
pub mod cvpm;
pub mod pfm;
pub mod ply;
pub mod png;

use std::fs::File;
use std::io::{BufReader, BufWriter, Write};
use std::path::Path;

use crate::error::Result;

pub(crate) fn open(path: &Path) -> Result<BufReader<File>> {
    Ok(BufReader::new(File::open(path)?))
}

/// Writes through a buffered file handle and flushes before returning.
pub(crate) fn save(path: &Path, f: impl FnOnce(&mut BufWriter<File>) -> Result<()>) -> Result<()> {
    let mut w = BufWriter::new(File::create(path)?);
    f(&mut w)?;
    w.flush()?;
    Ok(())
}

//! CVGX occupancy grid files.
//!
//! Little-endian: magic `CVGX`, version u32, dims 3 x u32, voxel size 3 x f64
//! (x, y, z), origin 3 x f64, count u64, then `count` records of
//! `(x u32, y u32, z u32, class u16)` in z-major, y, x order.

use std::io::{Read, Write};
use std::path::Path;

use byteorder::{LittleEndian, ReadBytesExt, WriteBytesExt};

use crate::error::{Error, Result};
use crate::scene::ClassId;
use crate::voxelizer::VoxelGrid;

pub const MAGIC: &[u8; 4] = b"CVGX";
pub const VERSION: u32 = 1;

pub fn write_grid<W: Write>(w: &mut W, grid: &VoxelGrid) -> Result<()> {
    w.write_all(MAGIC)?;
    w.write_u32::<LittleEndian>(VERSION)?;
    for d in grid.dims() {
        w.write_u32::<LittleEndian>(d as u32)?;
    }
    for s in grid.voxel_size() {
        w.write_f64::<LittleEndian>(s)?;
    }
    for o in grid.origin() {
        w.write_f64::<LittleEndian>(o)?;
    }
    w.write_u64::<LittleEndian>(grid.count() as u64)?;
    for (v, c) in grid.iter() {
        for i in v {
            w.write_u32::<LittleEndian>(i as u32)?;
        }
        w.write_u16::<LittleEndian>(c.0)?;
    }
    Ok(())
}

pub fn read_grid<R: Read>(r: &mut R) -> Result<VoxelGrid> {
    let bad = |_| Error::format("CVGX", "file is truncated");
    let mut magic = [0u8; 4];
    r.read_exact(&mut magic).map_err(bad)?;
    if &magic != MAGIC {
        return Err(Error::format("CVGX", "bad magic"));
    }
    let version = r.read_u32::<LittleEndian>().map_err(bad)?;
    if version != VERSION {
        return Err(Error::format("CVGX", format!("unsupported version {version}")));
    }
    let mut dims = [0usize; 3];
    for d in &mut dims {
        *d = r.read_u32::<LittleEndian>().map_err(bad)? as usize;
    }
    let mut size = [0.0; 3];
    for s in &mut size {
        *s = r.read_f64::<LittleEndian>().map_err(bad)?;
    }
    let mut origin = [0.0; 3];
    for o in &mut origin {
        *o = r.read_f64::<LittleEndian>().map_err(bad)?;
    }
    if dims.iter().product::<usize>() > 1 << 32 {
        return Err(Error::format("CVGX", format!("grid dims {dims:?} too large")));
    }
    let mut grid = VoxelGrid::new(dims, size, origin).map_err(|e| Error::format("CVGX", e.to_string()))?;
    let count = r.read_u64::<LittleEndian>().map_err(bad)?;
    for _ in 0..count {
        let mut v = [0usize; 3];
        for i in &mut v {
            *i = r.read_u32::<LittleEndian>().map_err(bad)? as usize;
        }
        let c = ClassId(r.read_u16::<LittleEndian>().map_err(bad)?);
        if grid.get(v).is_some() {
            return Err(Error::format("CVGX", format!("duplicate voxel {v:?}")));
        }
        grid.insert(v, c).map_err(|e| Error::format("CVGX", e.to_string()))?;
    }
    let mut rest = [0u8; 1];
    if r.read(&mut rest)? != 0 {
        return Err(Error::format("CVGX", "trailing bytes after records"));
    }
    Ok(grid)
}

pub fn save_grid(path: &Path, grid: &VoxelGrid) -> Result<()> {
    super::save(path, |w| write_grid(w, grid))
}

pub fn load_grid(path: &Path) -> Result<VoxelGrid> {
    read_grid(&mut super::open(path)?)
}

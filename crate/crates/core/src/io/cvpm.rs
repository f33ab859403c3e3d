//! CVPM point-pixel map files: magic `CVPM`, version u32, T, H, W as u32,
//! then `T * H * W` little-endian u32 indices.

use std::io::{Read, Write};
use std::path::Path;

use byteorder::{ByteOrder, LittleEndian, ReadBytesExt, WriteBytesExt};

use crate::error::{Error, Result};
use crate::scene::PointPixelMap;

pub const MAGIC: &[u8; 4] = b"CVPM";
pub const VERSION: u32 = 1;

/// Header fields of a CVPM file.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct MapHeader {
    pub version: u32,
    pub frames: u32,
    pub height: u32,
    pub width: u32,
}

pub fn write_map<W: Write>(w: &mut W, map: &PointPixelMap) -> Result<()> {
    w.write_all(MAGIC)?;
    w.write_u32::<LittleEndian>(VERSION)?;
    for d in [map.frames(), map.height(), map.width()] {
        w.write_u32::<LittleEndian>(
            u32::try_from(d).map_err(|_| Error::InvalidInput("map dimension exceeds u32".into()))?,
        )?;
    }
    let mut buf = vec![0u8; map.indices().len() * 4];
    LittleEndian::write_u32_into(map.indices(), &mut buf);
    w.write_all(&buf)?;
    Ok(())
}

pub fn read_header<R: Read>(r: &mut R) -> Result<MapHeader> {
    let bad = |_| Error::format("CVPM", "file is truncated");
    let mut magic = [0u8; 4];
    r.read_exact(&mut magic).map_err(bad)?;
    if &magic != MAGIC {
        return Err(Error::format("CVPM", "bad magic"));
    }
    let version = r.read_u32::<LittleEndian>().map_err(bad)?;
    if version != VERSION {
        return Err(Error::format("CVPM", format!("unsupported version {version}")));
    }
    Ok(MapHeader {
        version,
        frames: r.read_u32::<LittleEndian>().map_err(bad)?,
        height: r.read_u32::<LittleEndian>().map_err(bad)?,
        width: r.read_u32::<LittleEndian>().map_err(bad)?,
    })
}

pub fn read_map<R: Read>(r: &mut R) -> Result<PointPixelMap> {
    let h = read_header(r)?;
    let n = (h.frames as u64) * (h.height as u64) * (h.width as u64);
    if n > 1 << 32 {
        return Err(Error::format("CVPM", "map too large"));
    }
    let mut buf = vec![0u8; n as usize * 4];
    r.read_exact(&mut buf)
        .map_err(|_| Error::format("CVPM", format!("expected {n} indices")))?;
    let mut rest = [0u8; 1];
    if r.read(&mut rest)? != 0 {
        return Err(Error::format("CVPM", "trailing bytes after indices"));
    }
    let mut idx = vec![0u32; n as usize];
    LittleEndian::read_u32_into(&buf, &mut idx);
    PointPixelMap::from_vec(h.frames as usize, h.height as usize, h.width as usize, idx)
}

pub fn save_map(path: &Path, map: &PointPixelMap) -> Result<()> {
    super::save(path, |w| write_map(w, map))
}

pub fn load_map(path: &Path) -> Result<PointPixelMap> {
    read_map(&mut super::open(path)?)
}

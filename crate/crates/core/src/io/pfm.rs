//! Grayscale portable float maps. Rows are stored bottom to top.

use std::io::{BufRead, Write};
use std::path::Path;

use byteorder::{BigEndian, ByteOrder, LittleEndian};

use crate::error::{Error, Result};
use crate::scene::Raster;

/// Writes a little-endian `Pf` file; values are stored as f32.
pub fn write_pfm<W: Write>(w: &mut W, raster: &Raster<f64>) -> Result<()> {
    write!(w, "Pf\n{} {}\n-1.0\n", raster.width(), raster.height())?;
    let mut row = vec![0u8; raster.width() * 4];
    for p in (0..raster.height()).rev() {
        for q in 0..raster.width() {
            LittleEndian::write_f32(&mut row[q * 4..], *raster.get(p, q) as f32);
        }
        w.write_all(&row)?;
    }
    Ok(())
}

fn token<R: BufRead>(r: &mut R) -> Result<String> {
    let mut tok = Vec::new();
    loop {
        let mut b = [0u8; 1];
        if r.read(&mut b)? == 0 {
            break;
        }
        if b[0].is_ascii_whitespace() {
            if tok.is_empty() {
                continue;
            }
            break;
        }
        tok.push(b[0]);
        if tok.len() > 64 {
            return Err(Error::format("PFM", "header token too long"));
        }
    }
    String::from_utf8(tok).map_err(|_| Error::format("PFM", "header is not ASCII"))
}

/// Reads a grayscale PFM of either byte order.
pub fn read_pfm<R: BufRead>(r: &mut R) -> Result<Raster<f64>> {
    let magic = token(r)?;
    if magic != "Pf" {
        return Err(Error::format("PFM", format!("expected grayscale magic Pf, found {magic:?}")));
    }
    let parse = |t: String, what: &str| -> Result<usize> {
        t.parse().map_err(|_| Error::format("PFM", format!("bad {what} {t:?}")))
    };
    let width = parse(token(r)?, "width")?;
    let height = parse(token(r)?, "height")?;
    let scale: f64 = {
        let t = token(r)?;
        t.parse().map_err(|_| Error::format("PFM", format!("bad scale {t:?}")))?
    };
    if scale == 0.0 || !scale.is_finite() {
        return Err(Error::format("PFM", "scale must be nonzero"));
    }
    let n = width
        .checked_mul(height)
        .filter(|&n| n <= 1 << 30)
        .ok_or_else(|| Error::format("PFM", "raster too large"))?;
    let mut buf = vec![0u8; n * 4];
    r.read_exact(&mut buf)
        .map_err(|_| Error::format("PFM", format!("expected {} bytes of samples", n * 4)))?;
    let mut data = vec![0.0; n];
    for p in 0..height {
        let src = (height - 1 - p) * width;
        for q in 0..width {
            let b = &buf[(src + q) * 4..];
            let v = if scale < 0.0 { LittleEndian::read_f32(b) } else { BigEndian::read_f32(b) };
            data[p * width + q] = v as f64;
        }
    }
    Raster::from_vec(height, width, data)
}

pub fn save_pfm(path: &Path, raster: &Raster<f64>) -> Result<()> {
    super::save(path, |w| write_pfm(w, raster))
}

pub fn load_pfm(path: &Path) -> Result<Raster<f64>> {
    read_pfm(&mut super::open(path)?)
}

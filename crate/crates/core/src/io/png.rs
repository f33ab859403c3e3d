//! PNG images: 8-bit RGB frames, palette-indexed semantics and 1-bit masks.

use std::io::{Read, Write};
use std::path::Path;

use png::{BitDepth, ColorType, Decoder, Encoder, Transformations};

use crate::error::{Error, Result};
use crate::scene::{ClassId, Raster, Rgb};

fn enc_err(e: png::EncodingError) -> Error {
    match e {
        png::EncodingError::IoError(io) => Error::Io(io),
        other => Error::format("PNG", other.to_string()),
    }
}

fn dec_err(e: png::DecodingError) -> Error {
    match e {
        png::DecodingError::IoError(io) => Error::Io(io),
        other => Error::format("PNG", other.to_string()),
    }
}

fn dims(h: usize, w: usize) -> Result<(u32, u32)> {
    if h == 0 || w == 0 {
        return Err(Error::InvalidInput("cannot encode an empty image".into()));
    }
    Ok((
        u32::try_from(w).map_err(|_| Error::InvalidInput("image too wide".into()))?,
        u32::try_from(h).map_err(|_| Error::InvalidInput("image too tall".into()))?,
    ))
}

fn write_raw<W: Write>(
    w: W,
    h: usize,
    wd: usize,
    color: ColorType,
    depth: BitDepth,
    palette: Option<Vec<u8>>,
    data: &[u8],
) -> Result<()> {
    let (pw, ph) = dims(h, wd)?;
    let mut enc = Encoder::new(w, pw, ph);
    enc.set_color(color);
    enc.set_depth(depth);
    if let Some(p) = palette {
        enc.set_palette(p);
    }
    let mut writer = enc.write_header().map_err(enc_err)?;
    writer.write_image_data(data).map_err(enc_err)?;
    writer.finish().map_err(enc_err)
}

pub fn write_rgb<W: Write>(w: W, img: &Raster<Rgb>) -> Result<()> {
    let data: Vec<u8> = img.data().iter().flatten().copied().collect();
    write_raw(w, img.height(), img.width(), ColorType::Rgb, BitDepth::Eight, None, &data)
}

/// Reads any 8-bit PNG as RGB; palettes and gray expand, alpha is dropped.
pub fn read_rgb<R: Read>(r: R) -> Result<Raster<Rgb>> {
    let mut dec = Decoder::new(r);
    dec.set_transformations(Transformations::EXPAND | Transformations::STRIP_16);
    let mut reader = dec.read_info().map_err(dec_err)?;
    let mut buf = vec![0u8; reader.output_buffer_size()];
    let info = reader.next_frame(&mut buf).map_err(dec_err)?;
    let (h, w) = (info.height as usize, info.width as usize);
    let stride = info.line_size;
    let ch = match info.color_type {
        ColorType::Grayscale => 1,
        ColorType::GrayscaleAlpha => 2,
        ColorType::Rgb => 3,
        ColorType::Rgba => 4,
        ColorType::Indexed => return Err(Error::format("PNG", "palette was not expanded")),
    };
    let mut data = Vec::with_capacity(h * w);
    for p in 0..h {
        let row = &buf[p * stride..];
        for q in 0..w {
            let px = &row[q * ch..q * ch + ch];
            data.push(if ch < 3 { [px[0]; 3] } else { [px[0], px[1], px[2]] });
        }
    }
    Raster::from_vec(h, w, data)
}

/// Indexed 8-bit PNG whose pixel values are class ids and whose palette is
/// the class display colors.
pub fn write_semantics<W: Write>(w: W, img: &Raster<ClassId>, palette: &[Rgb]) -> Result<()> {
    if palette.is_empty() || palette.len() > 256 {
        return Err(Error::InvalidInput(format!("palette of {} colors", palette.len())));
    }
    let mut data = Vec::with_capacity(img.len());
    for c in img.data() {
        if c.index() >= palette.len() {
            return Err(Error::InvalidInput(format!("class {} has no palette entry", c.0)));
        }
        data.push(c.0 as u8);
    }
    let pal = palette.iter().flatten().copied().collect();
    write_raw(w, img.height(), img.width(), ColorType::Indexed, BitDepth::Eight, Some(pal), &data)
}

/// Reads the raw indices of an 8-bit palette PNG.
pub fn read_semantics<R: Read>(r: R) -> Result<Raster<ClassId>> {
    let dec = Decoder::new(r);
    let mut reader = dec.read_info().map_err(dec_err)?;
    let mut buf = vec![0u8; reader.output_buffer_size()];
    let info = reader.next_frame(&mut buf).map_err(dec_err)?;
    if info.color_type != ColorType::Indexed || info.bit_depth != BitDepth::Eight {
        return Err(Error::format(
            "PNG",
            format!("semantics must be 8-bit indexed, found {:?} {:?}", info.color_type, info.bit_depth),
        ));
    }
    let (h, w) = (info.height as usize, info.width as usize);
    let mut data = Vec::with_capacity(h * w);
    for p in 0..h {
        data.extend(buf[p * info.line_size..p * info.line_size + w].iter().map(|&v| ClassId(v as u16)));
    }
    Raster::from_vec(h, w, data)
}

/// 1-bit grayscale mask: white is true.
pub fn write_mask<W: Write>(w: W, img: &Raster<bool>) -> Result<()> {
    let stride = img.width().div_ceil(8);
    let mut data = vec![0u8; stride * img.height()];
    for p in 0..img.height() {
        for q in 0..img.width() {
            if *img.get(p, q) {
                data[p * stride + q / 8] |= 0x80 >> (q % 8);
            }
        }
    }
    write_raw(w, img.height(), img.width(), ColorType::Grayscale, BitDepth::One, None, &data)
}

pub fn read_mask<R: Read>(r: R) -> Result<Raster<bool>> {
    let dec = Decoder::new(r);
    let mut reader = dec.read_info().map_err(dec_err)?;
    let mut buf = vec![0u8; reader.output_buffer_size()];
    let info = reader.next_frame(&mut buf).map_err(dec_err)?;
    if info.color_type != ColorType::Grayscale || info.bit_depth != BitDepth::One {
        return Err(Error::format(
            "PNG",
            format!("mask must be 1-bit grayscale, found {:?} {:?}", info.color_type, info.bit_depth),
        ));
    }
    let (h, w) = (info.height as usize, info.width as usize);
    Ok(Raster::from_fn(h, w, |p, q| {
        buf[p * info.line_size + q / 8] & (0x80 >> (q % 8)) != 0
    }))
}

pub fn save_rgb(path: &Path, img: &Raster<Rgb>) -> Result<()> {
    super::save(path, |w| write_rgb(w, img))
}

pub fn load_rgb(path: &Path) -> Result<Raster<Rgb>> {
    read_rgb(super::open(path)?)
}

pub fn save_semantics(path: &Path, img: &Raster<ClassId>, palette: &[Rgb]) -> Result<()> {
    super::save(path, |w| write_semantics(w, img, palette))
}

pub fn load_semantics(path: &Path) -> Result<Raster<ClassId>> {
    read_semantics(super::open(path)?)
}

pub fn save_mask(path: &Path, img: &Raster<bool>) -> Result<()> {
    super::save(path, |w| write_mask(w, img))
}

pub fn load_mask(path: &Path) -> Result<Raster<bool>> {
    read_mask(super::open(path)?)
}

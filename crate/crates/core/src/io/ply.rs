//! Binary little-endian PLY point clouds.
//!
//! Vertex layout: `x y z` (double), `class` (ushort), `sky` (uchar) and
//! optionally `red green blue` (uchar).

use std::io::{BufRead, Write};
use std::path::Path;

use byteorder::{LittleEndian, ReadBytesExt, WriteBytesExt};

use crate::error::{Error, Result};
use crate::scene::{ClassId, PointCloud};

const BASE: [(&str, &str); 5] = [
    ("double", "x"),
    ("double", "y"),
    ("double", "z"),
    ("ushort", "class"),
    ("uchar", "sky"),
];
const COLOR: [(&str, &str); 3] = [("uchar", "red"), ("uchar", "green"), ("uchar", "blue")];

pub fn write_ply<W: Write>(w: &mut W, cloud: &PointCloud) -> Result<()> {
    writeln!(w, "ply\nformat binary_little_endian 1.0\nelement vertex {}", cloud.len())?;
    for (ty, name) in BASE {
        writeln!(w, "property {ty} {name}")?;
    }
    if cloud.rgb().is_some() {
        for (ty, name) in COLOR {
            writeln!(w, "property {ty} {name}")?;
        }
    }
    writeln!(w, "end_header")?;
    for i in 0..cloud.len() {
        for c in cloud.positions()[i] {
            w.write_f64::<LittleEndian>(c)?;
        }
        w.write_u16::<LittleEndian>(cloud.semantics()[i].0)?;
        w.write_u8(cloud.sky()[i] as u8)?;
        if let Some(rgb) = cloud.rgb() {
            w.write_all(&rgb[i])?;
        }
    }
    Ok(())
}

fn header_line<R: BufRead>(r: &mut R) -> Result<String> {
    let mut line = String::new();
    if r.read_line(&mut line)? == 0 {
        return Err(Error::format("PLY", "unexpected end of header"));
    }
    Ok(line.trim_end_matches(['\n', '\r']).to_string())
}

pub fn read_ply<R: BufRead>(r: &mut R) -> Result<PointCloud> {
    if header_line(r)? != "ply" {
        return Err(Error::format("PLY", "missing ply magic"));
    }
    let mut count = None;
    let mut props: Vec<(String, String)> = Vec::new();
    loop {
        let line = header_line(r)?;
        let words: Vec<&str> = line.split_whitespace().collect();
        match words.as_slice() {
            ["end_header"] => break,
            ["comment", ..] | ["obj_info", ..] => {}
            ["format", "binary_little_endian", "1.0"] => {}
            ["format", other, ..] => {
                return Err(Error::format("PLY", format!("unsupported format {other}")));
            }
            ["element", "vertex", n] => {
                if count.is_some() {
                    return Err(Error::format("PLY", "duplicate vertex element"));
                }
                count = Some(n.parse::<usize>().map_err(|_| Error::format("PLY", format!("bad count {n}")))?);
            }
            ["element", other, ..] => {
                return Err(Error::format("PLY", format!("unsupported element {other}")));
            }
            ["property", ty, name] => props.push((ty.to_string(), name.to_string())),
            _ => return Err(Error::format("PLY", format!("unexpected header line {line:?}"))),
        }
    }
    let count = count.ok_or_else(|| Error::format("PLY", "no vertex element"))?;
    let matches = |expected: &[(&str, &str)]| {
        props.len() == expected.len()
            && props.iter().zip(expected).all(|((t, n), (et, en))| t == et && n == en)
    };
    let with_color = if matches(&BASE) {
        false
    } else if matches(&[&BASE[..], &COLOR[..]].concat()) {
        true
    } else {
        return Err(Error::format("PLY", format!("unsupported vertex layout {props:?}")));
    };

    let truncated = |_| Error::format("PLY", format!("expected {count} vertices"));
    let mut positions = Vec::with_capacity(count.min(1 << 24));
    let mut semantics = Vec::with_capacity(count.min(1 << 24));
    let mut sky = Vec::with_capacity(count.min(1 << 24));
    let mut rgb = Vec::new();
    for _ in 0..count {
        let mut p = [0.0; 3];
        for c in &mut p {
            *c = r.read_f64::<LittleEndian>().map_err(truncated)?;
        }
        positions.push(p);
        semantics.push(ClassId(r.read_u16::<LittleEndian>().map_err(truncated)?));
        sky.push(match r.read_u8().map_err(truncated)? {
            0 => false,
            1 => true,
            v => return Err(Error::format("PLY", format!("sky flag {v} is not 0 or 1"))),
        });
        if with_color {
            let mut c = [0u8; 3];
            r.read_exact(&mut c).map_err(truncated)?;
            rgb.push(c);
        }
    }
    let mut cloud = PointCloud::new(positions, semantics, sky)?;
    if with_color {
        cloud.set_rgb(rgb)?;
    }
    Ok(cloud)
}

pub fn save_ply(path: &Path, cloud: &PointCloud) -> Result<()> {
    super::save(path, |w| write_ply(w, cloud))
}

pub fn load_ply(path: &Path) -> Result<PointCloud> {
    read_ply(&mut super::open(path)?)
}

//! Bundled procedural scene: a north-south street with sidewalks, building
//! blocks on both sides, trees, street poles and open terrain.

use crate::colorize::CenterFrame;
use crate::error::{Error, Result};
use crate::panorama::{unproject, zbuffer, PanoramaCamera};
use crate::scene::{
    ClassId, ClassRegistry, Raster, Rgb, SemanticHeightField, BUILDING_LEFT, BUILDING_RIGHT, ROAD,
};
use crate::stylize::{splitmix64, stylize_points, StyleParams};
use crate::voxelizer::VoxelGrid;

pub const SAMPLE_CELLS: usize = 128;
pub const SAMPLE_CELL_SIZE: f64 = 0.5;
const ROAD_HALF_WIDTH: f64 = 4.0;
const SIDEWALK_OUTER: f64 = 6.0;
const BLOCK_PERIOD: f64 = 16.0;
const BLOCK_LENGTH: f64 = 12.0;

fn hash01(a: i64, b: i64, salt: u64) -> f64 {
    let h = splitmix64(splitmix64(splitmix64(salt) ^ a as u64) ^ b as u64);
    (h >> 11) as f64 / (1u64 << 53) as f64
}

fn class(registry: &ClassRegistry, name: &str) -> Result<ClassId> {
    registry
        .by_name(name)
        .ok_or_else(|| Error::Config(format!("sample scene needs class {name:?} in the registry")))
}

/// Height field and satellite image of the sample street.
#[derive(Clone, Debug, PartialEq)]
pub struct SampleScene {
    pub field: SemanticHeightField,
    pub satellite: Raster<Rgb>,
}

pub fn sample_scene(registry: &ClassRegistry) -> Result<SampleScene> {
    let road = class(registry, ROAD)?;
    let sidewalk = class(registry, "sidewalk")?;
    let left = class(registry, BUILDING_LEFT)?;
    let right = class(registry, BUILDING_RIGHT)?;
    let vegetation = class(registry, "vegetation")?;
    let terrain = class(registry, "terrain")?;
    let object = class(registry, "object")?;

    let n = SAMPLE_CELLS;
    let cs = SAMPLE_CELL_SIZE;
    let origin = SemanticHeightField::centered_origin(n, n, cs);
    let mut elevation = Vec::with_capacity(n * n);
    let mut semantics = Vec::with_capacity(n * n);
    for row in 0..n {
        for col in 0..n {
            let x = origin[0] + col as f64 * cs;
            let y = origin[1] - row as f64 * cs;
            let ax = x.abs();
            let side = if x < 0.0 { -1 } else { 1 };
            let block = (y / BLOCK_PERIOD).floor() as i64;
            let along = y - block as f64 * BLOCK_PERIOD;
            let (c, e) = if ax < ROAD_HALF_WIDTH {
                (road, 0.0)
            } else if ax < SIDEWALK_OUTER {
                // a pole every 8 m along the curb
                let pole = (5.0..5.0 + cs).contains(&ax) && (4.0..4.0 + cs).contains(&y.rem_euclid(8.0));
                if pole {
                    (object, 4.0)
                } else {
                    (sidewalk, 0.0)
                }
            } else {
                let depth = 10.0 + 10.0 * hash01(block, side, 1);
                let height = 6.0 + 14.0 * hash01(block, side, 2);
                if along < BLOCK_LENGTH && ax < SIDEWALK_OUTER + depth {
                    (if side < 0 { left } else { right }, height)
                } else if hash01((x / 2.0).floor() as i64, (y / 2.0).floor() as i64, 3) < 0.35 {
                    (vegetation, 2.0 + 3.0 * hash01((x / 2.0).floor() as i64, (y / 2.0).floor() as i64, 4))
                } else {
                    (terrain, 0.0)
                }
            };
            elevation.push(e);
            semantics.push(c);
        }
    }
    let field = SemanticHeightField::new(n, n, cs, origin, elevation, semantics, registry)?;

    let palette = registry.palette();
    let satellite = Raster::from_fn(n, n, |row, col| {
        let base = palette[field.class(row, col).index()];
        let e = field.elevation(row, col);
        let shade = 0.85 + 0.2 * hash01(row as i64, col as i64, 5) + 0.01 * e;
        base.map(|v| (v as f64 * shade).round().clamp(0.0, 255.0) as u8)
    });
    Ok(SampleScene { field, satellite })
}

/// A synthetic captured center frame: z-buffer depth and labels, colored by
/// the procedural point style.
pub fn render_center_frame(
    grid: &VoxelGrid,
    cam: &PanoramaCamera,
    registry: &ClassRegistry,
    sky_radius: f64,
    style: &StyleParams,
) -> Result<CenterFrame> {
    let d = zbuffer(grid, cam, sky_radius, registry.sky())?;
    let (points, _) = unproject(cam, &d, &Raster::filled(cam.height(), cam.width(), 0u32), 0)?;
    let rgb = stylize_points(&points, registry, style)?;
    Ok(CenterFrame {
        rgb: Raster::from_vec(cam.height(), cam.width(), rgb)?,
        semantics: d.semantics().clone(),
        depth: d.depth().clone(),
    })
}

//! Equirectangular cameras, occupancy-grid z-buffering and the
//! project/unproject pair that links points to pixels.

use std::f64::consts::{FRAC_PI_2, PI, TAU};

use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::extraction::render_map;
use crate::scene::{
    column_azimuth, direction_from_angles, norm, row_elevation, sub, ClassId, FrameSequence,
    Point3, PointCloud, PointPixelMap, Raster, Rgb, SemanticHeightField,
};
use crate::voxelizer::VoxelGrid;

pub const DEFAULT_SKY_RADIUS: f64 = 200.0;
/// Relative depth band for point reuse, 0.5%.
pub const DEFAULT_EPSILON: f64 = 0.005;

/// Residual headings are snapped to this grid (2^-32 rad) so that headings
/// differing by whole columns share bit-identical ray directions.
const HEADING_QUANTUM: f64 = 1.0 / 4_294_967_296.0;

/// A full-sphere equirectangular camera.
///
/// The heading is split into a whole number of columns plus a small residual.
/// Rays are generated from the residual and the rotated column index, so two
/// cameras whose headings differ by a multiple of `2 pi / W` produce exactly
/// the same rays, shifted by whole columns.
#[derive(Clone, Debug, PartialEq)]
pub struct PanoramaCamera {
    position: Point3,
    heading: f64,
    height: usize,
    width: usize,
    column_offset: usize,
    residual: f64,
}

impl PanoramaCamera {
    pub fn new(position: Point3, heading: f64, height: usize, width: usize) -> Result<Self> {
        if height < 2 || width < 2 {
            return Err(Error::InvalidInput(format!(
                "panorama raster {height}x{width} must be at least 2x2"
            )));
        }
        if position.iter().any(|c| !c.is_finite()) || !heading.is_finite() {
            return Err(Error::InvalidInput("camera pose must be finite".into()));
        }
        if position[2] <= 0.0 {
            return Err(Error::InvalidInput(format!(
                "camera height {} must be > 0",
                position[2]
            )));
        }
        let step = TAU / width as f64;
        let k = (heading / step).round();
        let residual = ((heading - k * step) / HEADING_QUANTUM).round() * HEADING_QUANTUM;
        let column_offset = (k as i64).rem_euclid(width as i64) as usize;
        Ok(PanoramaCamera {
            position,
            heading,
            height,
            width,
            column_offset,
            residual,
        })
    }

    pub fn position(&self) -> Point3 {
        self.position
    }

    pub fn heading(&self) -> f64 {
        self.heading
    }

    pub fn height(&self) -> usize {
        self.height
    }

    pub fn width(&self) -> usize {
        self.width
    }

    /// Same camera turned by 180 degrees; requires an even width.
    pub fn reversed(&self) -> Result<Self> {
        if self.width % 2 != 0 {
            return Err(Error::InvalidInput("reversing a camera needs an even width".into()));
        }
        let mut cam = self.clone();
        cam.heading += PI;
        cam.column_offset = (cam.column_offset + self.width / 2) % self.width;
        Ok(cam)
    }

    #[inline]
    fn column_yaw(&self, q: usize) -> f64 {
        let c = (q + self.column_offset) % self.width;
        self.residual + column_azimuth(c as f64, self.width)
    }

    /// Unit ray through the center of pixel (p, q).
    #[inline]
    pub fn direction(&self, p: usize, q: usize) -> Point3 {
        direction_from_angles(self.column_yaw(q), row_elevation(p as f64, self.height))
    }

    /// All pixel rays in row-major order.
    pub fn directions(&self) -> Vec<Point3> {
        let cols: Vec<(f64, f64)> = (0..self.width).map(|q| self.column_yaw(q).sin_cos()).collect();
        let mut out = Vec::with_capacity(self.height * self.width);
        for p in 0..self.height {
            let (se, ce) = row_elevation(p as f64, self.height).sin_cos();
            out.extend(cols.iter().map(|&(sy, cy)| [sy * ce, cy * ce, se]));
        }
        out
    }

    /// Pixel whose center is nearest to the direction of `v` (camera-relative).
    /// Rows clamp at the poles; columns wrap.
    pub fn pixel_of(&self, v: Point3) -> Option<(usize, usize)> {
        let horiz = v[0].hypot(v[1]);
        if horiz == 0.0 && v[2] == 0.0 {
            return None;
        }
        let yaw = v[0].atan2(v[1]);
        let elev = v[2].atan2(horiz);
        let u = (yaw - self.residual + PI) / TAU * self.width as f64;
        let c = (u.floor() as i64).rem_euclid(self.width as i64) as usize;
        let q = (c + self.width - self.column_offset) % self.width;
        let s = (FRAC_PI_2 - elev) / PI * self.height as f64;
        let p = (s.floor().max(0.0) as usize).min(self.height - 1);
        Some((p, q))
    }
}

/// Per-pixel ray length and class seen from one camera.
#[derive(Clone, Debug, PartialEq)]
pub struct DepthSemanticsMap {
    depth: Raster<f64>,
    semantics: Raster<ClassId>,
    sky: Raster<bool>,
    sky_radius: f64,
}

impl DepthSemanticsMap {
    /// Checks that sky pixels sit exactly at `sky_radius` and other depths lie in `(0, sky_radius)`.
    pub fn new(
        depth: Raster<f64>,
        semantics: Raster<ClassId>,
        sky: Raster<bool>,
        sky_radius: f64,
    ) -> Result<Self> {
        depth.ensure_same_shape(&semantics)?;
        depth.ensure_same_shape(&sky)?;
        if !(sky_radius.is_finite() && sky_radius > 0.0) {
            return Err(Error::InvalidInput(format!("sky radius {sky_radius} must be > 0")));
        }
        for (i, (&d, &s)) in depth.data().iter().zip(sky.data()).enumerate() {
            let ok = if s {
                d == sky_radius
            } else {
                d.is_finite() && d > 0.0 && d < sky_radius
            };
            if !ok {
                return Err(Error::InvalidInput(format!(
                    "pixel {i}: depth {d} invalid for {} pixel with sky radius {sky_radius}",
                    if s { "sky" } else { "non-sky" }
                )));
            }
        }
        Ok(DepthSemanticsMap {
            depth,
            semantics,
            sky,
            sky_radius,
        })
    }

    pub fn height(&self) -> usize {
        self.depth.height()
    }

    pub fn width(&self) -> usize {
        self.depth.width()
    }

    pub fn depth(&self) -> &Raster<f64> {
        &self.depth
    }

    pub fn semantics(&self) -> &Raster<ClassId> {
        &self.semantics
    }

    pub fn sky(&self) -> &Raster<bool> {
        &self.sky
    }

    pub fn sky_radius(&self) -> f64 {
        self.sky_radius
    }

    /// Multiplies every non-sky depth by `s`. Depths reaching the sky radius are clamped just below it.
    pub fn scaled(&self, s: f64) -> Result<Self> {
        if !(s.is_finite() && s > 0.0) {
            return Err(Error::InvalidInput(format!("depth scale {s} must be > 0")));
        }
        let below = self.sky_radius * (1.0 - f64::EPSILON);
        let depth = Raster::from_vec(
            self.height(),
            self.width(),
            self.depth
                .data()
                .iter()
                .zip(self.sky.data())
                .map(|(&d, &sky)| if sky { d } else { (d * s).min(below) })
                .collect(),
        )?;
        DepthSemanticsMap::new(depth, self.semantics.clone(), self.sky.clone(), self.sky_radius)
    }
}

/// Outcome of marching one ray through a grid.
#[derive(Clone, Copy, Debug, PartialEq)]
pub enum RayHit {
    /// First occupied voxel, entered at ray length `depth`.
    Hit {
        depth: f64,
        class: ClassId,
        voxel: [usize; 3],
    },
    /// The ray leaves the grid or reaches `max_depth` without a hit.
    Miss,
    /// The ray origin lies inside an occupied voxel.
    Inside { voxel: [usize; 3] },
}

/// Steps a ray through the grid voxel by voxel in boundary-crossing order and
/// reports the entry-face distance of the first occupied voxel. Hits at or
/// beyond `max_depth` are misses.
pub fn cast_ray(grid: &VoxelGrid, origin: Point3, dir: Point3, max_depth: f64) -> RayHit {
    let lo = grid.origin();
    let hi = grid.upper();
    let size = grid.voxel_size();
    let dims = grid.dims();

    let mut t_in = 0.0f64;
    let mut t_out = f64::INFINITY;
    for a in 0..3 {
        if dir[a] == 0.0 {
            if origin[a] < lo[a] || origin[a] > hi[a] {
                return RayHit::Miss;
            }
        } else {
            let ta = (lo[a] - origin[a]) / dir[a];
            let tb = (hi[a] - origin[a]) / dir[a];
            t_in = t_in.max(ta.min(tb));
            t_out = t_out.min(ta.max(tb));
        }
    }
    if t_in > t_out || t_in >= max_depth {
        return RayHit::Miss;
    }

    let mut idx = [0usize; 3];
    let mut step = [0i8; 3];
    let mut t_next = [f64::INFINITY; 3];
    for a in 0..3 {
        let pa = origin[a] + t_in * dir[a];
        let f = ((pa - lo[a]) / size[a]).floor();
        idx[a] = (f.max(0.0) as usize).min(dims[a] - 1);
        if dir[a] > 0.0 {
            step[a] = 1;
            t_next[a] = (lo[a] + (idx[a] + 1) as f64 * size[a] - origin[a]) / dir[a];
        } else if dir[a] < 0.0 {
            step[a] = -1;
            t_next[a] = (lo[a] + idx[a] as f64 * size[a] - origin[a]) / dir[a];
        }
    }

    if let Some(class) = grid.get(idx) {
        if t_in == 0.0 {
            return RayHit::Inside { voxel: idx };
        }
        return RayHit::Hit {
            depth: t_in,
            class,
            voxel: idx,
        };
    }

    let t_end = t_out.min(max_depth);
    loop {
        let a = if t_next[0] <= t_next[1] && t_next[0] <= t_next[2] {
            0
        } else if t_next[1] <= t_next[2] {
            1
        } else {
            2
        };
        let t = t_next[a];
        if t >= t_end {
            return RayHit::Miss;
        }
        if step[a] > 0 {
            idx[a] += 1;
            if idx[a] >= dims[a] {
                return RayHit::Miss;
            }
            t_next[a] = (lo[a] + (idx[a] + 1) as f64 * size[a] - origin[a]) / dir[a];
        } else {
            if idx[a] == 0 {
                return RayHit::Miss;
            }
            idx[a] -= 1;
            t_next[a] = (lo[a] + idx[a] as f64 * size[a] - origin[a]) / dir[a];
        }
        if let Some(class) = grid.get(idx) {
            return RayHit::Hit {
                depth: t,
                class,
                voxel: idx,
            };
        }
    }
}

/// Renders the depth and class of the nearest occupied voxel for every pixel.
/// Rays that miss get depth `sky_radius` and class `sky`.
pub fn zbuffer(
    grid: &VoxelGrid,
    cam: &PanoramaCamera,
    sky_radius: f64,
    sky: ClassId,
) -> Result<DepthSemanticsMap> {
    if !(sky_radius.is_finite() && sky_radius > 0.0) {
        return Err(Error::InvalidInput(format!("sky radius {sky_radius} must be > 0")));
    }
    let o = cam.position();
    let lo = grid.origin();
    let hi = grid.upper();
    if o[0] < lo[0] || o[0] > hi[0] || o[1] < lo[1] || o[1] > hi[1] {
        return Err(Error::InvalidInput(format!(
            "camera ({:.3}, {:.3}) lies outside the grid footprint",
            o[0], o[1]
        )));
    }
    let degenerate = Error::DegenerateViewpoint {
        frame: None,
        x: o[0],
        y: o[1],
        z: o[2],
    };
    if let Some(v) = grid.voxel_of(o) {
        if grid.get(v).is_some() {
            return Err(degenerate);
        }
    }

    let (h, w) = (cam.height(), cam.width());
    let dirs = cam.directions();
    let hits: Vec<Option<(f64, ClassId, bool)>> = dirs
        .par_iter()
        .map(|&d| match cast_ray(grid, o, d, sky_radius) {
            RayHit::Hit { depth, class, .. } => Some((depth, class, false)),
            RayHit::Miss => Some((sky_radius, sky, true)),
            // origin on the upper face of an occupied boundary voxel
            RayHit::Inside { .. } => None,
        })
        .collect();
    let hits: Vec<(f64, ClassId, bool)> = hits.into_iter().collect::<Option<_>>().ok_or(degenerate)?;
    let depth = Raster::from_vec(h, w, hits.iter().map(|x| x.0).collect())?;
    let semantics = Raster::from_vec(h, w, hits.iter().map(|x| x.1).collect())?;
    let skymask = Raster::from_vec(h, w, hits.iter().map(|x| x.2).collect())?;
    DepthSemanticsMap::new(depth, semantics, skymask, sky_radius)
}

/// Maps existing points to pixels of a new frame.
///
/// Point `i` is a candidate for the pixel nearest its direction when its ray
/// length `r` satisfies `d (1 - eps) <= r <= d (1 + eps)`. Each pixel keeps the
/// candidate with the smallest `r`, ties going to the smallest index. Entries
/// are 1-based; 0 means no candidate.
pub fn project(
    points: &[Point3],
    cam: &PanoramaCamera,
    d: &DepthSemanticsMap,
    epsilon: f64,
) -> Result<Raster<u32>> {
    if !(epsilon.is_finite() && epsilon > 0.0) {
        return Err(Error::InvalidInput(format!("epsilon {epsilon} must be > 0")));
    }
    if d.height() != cam.height() || d.width() != cam.width() {
        return Err(Error::ShapeMismatch(format!(
            "camera {}x{} vs depth map {}x{}",
            cam.height(),
            cam.width(),
            d.height(),
            d.width()
        )));
    }
    if points.len() >= u32::MAX as usize {
        return Err(Error::InvalidInput("too many points for u32 indices".into()));
    }
    let o = cam.position();
    let w = cam.width();
    let depth = d.depth().data();
    let candidates: Vec<Option<(usize, f64)>> = points
        .par_iter()
        .map(|&x| {
            let v = sub(x, o);
            let r = norm(v);
            let (p, q) = cam.pixel_of(v)?;
            let pix = p * w + q;
            let dp = depth[pix];
            (r >= dp * (1.0 - epsilon) && r <= dp * (1.0 + epsilon)).then_some((pix, r))
        })
        .collect();

    let mut best = vec![(0u32, f64::INFINITY); cam.height() * w];
    for (i, c) in candidates.into_iter().enumerate() {
        if let Some((pix, r)) = c {
            // ascending index order: strict < keeps the smaller index on ties
            if r < best[pix].1 {
                best[pix] = (i as u32 + 1, r);
            }
        }
    }
    Raster::from_vec(cam.height(), w, best.into_iter().map(|b| b.0).collect())
}

/// Creates points for every pixel with `m == 0`, in row-major order.
///
/// Returns the new points and a mapping that numbers them `offset + 1,
/// offset + 2, ...`; pixels already mapped by `m` get 0.
pub fn unproject(
    cam: &PanoramaCamera,
    d: &DepthSemanticsMap,
    m: &Raster<u32>,
    offset: usize,
) -> Result<(PointCloud, Raster<u32>)> {
    d.depth().ensure_same_shape(m)?;
    if d.height() != cam.height() || d.width() != cam.width() {
        return Err(Error::ShapeMismatch("camera and depth map sizes differ".into()));
    }
    let o = cam.position();
    let w = cam.width();
    let mut positions = Vec::new();
    let mut semantics = Vec::new();
    let mut sky = Vec::new();
    let mut m_a = vec![0u32; m.len()];
    let dirs = cam.directions();
    for (pix, &mi) in m.data().iter().enumerate() {
        if mi != 0 {
            continue;
        }
        let (p, q) = (pix / w, pix % w);
        let r = *d.depth().get(p, q);
        let dir = dirs[pix];
        positions.push([o[0] + r * dir[0], o[1] + r * dir[1], o[2] + r * dir[2]]);
        semantics.push(*d.semantics().get(p, q));
        sky.push(*d.sky().get(p, q));
        let idx = offset + positions.len();
        m_a[pix] = u32::try_from(idx)
            .map_err(|_| Error::InvalidInput("point index exceeds u32 range".into()))?;
    }
    Ok((
        PointCloud::new(positions, semantics, sky)?,
        Raster::from_vec(cam.height(), w, m_a)?,
    ))
}

/// Returns an error when `m` and `m_a` both map some pixel.
pub fn check_disjoint(m: &Raster<u32>, m_a: &Raster<u32>) -> Result<()> {
    m.ensure_same_shape(m_a)?;
    if let Some(i) = m
        .data()
        .iter()
        .zip(m_a.data())
        .position(|(&a, &b)| a != 0 && b != 0)
    {
        return Err(Error::Invariant(format!(
            "pixel {i} mapped by both existing point {} and new point {}",
            m.data()[i],
            m_a.data()[i]
        )));
    }
    Ok(())
}

/// Satellite colors carried through the point-pixel map, with a validity mask.
#[derive(Clone, Debug, PartialEq)]
pub struct WarpedFrames {
    pub rgb: FrameSequence<Rgb>,
    pub valid: FrameSequence<bool>,
}

/// Colors each non-sky point with the nearest satellite cell under it and
/// renders those colors through `map`. Sky points and points outside the
/// footprint are invalid and render black.
pub fn warp_satellite(
    satellite: &Raster<Rgb>,
    field: &SemanticHeightField,
    cloud: &PointCloud,
    map: &PointPixelMap,
) -> Result<WarpedFrames> {
    let [x_min, y_min, x_max, y_max] = field.footprint();
    let sx = (x_max - x_min) / satellite.width() as f64;
    let sy = (y_max - y_min) / satellite.height() as f64;
    if satellite.is_empty() || (sx - sy).abs() > 1e-9 * sx.max(sy) {
        return Err(Error::ShapeMismatch(format!(
            "satellite raster {}x{} does not cover the {:.3} m x {:.3} m footprint with square cells",
            satellite.height(),
            satellite.width(),
            y_max - y_min,
            x_max - x_min
        )));
    }
    let colors: Vec<Option<Rgb>> = cloud
        .positions()
        .iter()
        .zip(cloud.sky())
        .map(|(p, &sky)| {
            if sky {
                return None;
            }
            let fx = (p[0] - x_min) / sx;
            let fy = (y_max - p[1]) / sy;
            let slack = 1e-9 / sx;
            let in_range = |f: f64, n: usize| f >= -slack && f <= n as f64 + slack;
            if !(in_range(fx, satellite.width()) && in_range(fy, satellite.height())) {
                return None;
            }
            let col = (fx.floor().max(0.0) as usize).min(satellite.width() - 1);
            let row = (fy.floor().max(0.0) as usize).min(satellite.height() - 1);
            Some(*satellite.get(row, col))
        })
        .collect();
    let frames = render_map(map, &colors)?;
    let rgb = frames
        .frames()
        .iter()
        .map(|f| f.map(|c| c.unwrap_or([0, 0, 0])))
        .collect();
    let valid = frames.frames().iter().map(|f| f.map(|c| c.is_some())).collect();
    Ok(WarpedFrames {
        rgb: FrameSequence::new(rgb)?,
        valid: FrameSequence::new(valid)?,
    })
}

//! Domain types shared across the pipeline and the fixed world/panorama conventions.
//!
//! World frame: x = east, y = north, z = up, meters. Height-field row 0 is the
//! northernmost row. Headings are yaw angles measured clockwise from north, so
//! heading 0 looks along +y and heading pi/2 along +x.
//!
//! Panorama pixel (p, q) has its center at (p + 0.5, q + 0.5). Column q maps to
//! the azimuth `2 pi (q + 0.5) / W - pi`, measured clockwise from the camera
//! heading, so the center of the raster faces the heading. Row p maps to the
//! elevation `pi/2 - pi (p + 0.5) / H`; row 0 looks up, the last row looks down.

mod raster;
mod registry;

use std::f64::consts::{FRAC_PI_2, PI, TAU};

use serde::Serialize;

pub use raster::{FrameSequence, Raster};
pub use registry::{
    class_registry_default, ClassId, ClassInfo, ClassRegistry, Rgb, BUILDING_LEFT, BUILDING_RIGHT,
    ROAD, SKY,
};

use crate::error::{Error, Result};

pub type Point3 = [f64; 3];

/// Version of the convention record below; bump on any change.
pub const CONVENTIONS_VERSION: u32 = 1;

/// The documented coordinate and panorama conventions.
#[derive(Clone, Debug, Serialize)]
pub struct Conventions {
    pub version: u32,
    pub world_axes: &'static str,
    pub height_field_rows: &'static str,
    pub camera_center: &'static str,
    pub heading: &'static str,
    pub azimuth: &'static str,
    pub elevation: &'static str,
    pub ray_direction: &'static str,
    pub depth: &'static str,
}

pub fn world_conventions() -> Conventions {
    Conventions {
        version: CONVENTIONS_VERSION,
        world_axes: "x = east, y = north, z = up (meters)",
        height_field_rows: "row 0 = northernmost; cell (r, c) center = origin + (c * cell_size, -r * cell_size)",
        camera_center: "(L_t.x, L_t.y, camera_height)",
        heading: "yaw in radians, clockwise from north (+y); pi/2 faces east (+x)",
        azimuth: "psi(q) = 2 pi (q + 0.5) / W - pi, clockwise from heading",
        elevation: "theta(p) = pi/2 - pi (p + 0.5) / H",
        ray_direction: "a = heading + psi; d = (sin a cos theta, cos a cos theta, sin theta)",
        depth: "Euclidean ray length from the optical center",
    }
}

/// Azimuth of column `q` relative to the heading.
#[inline]
pub fn column_azimuth(q: f64, width: usize) -> f64 {
    TAU * (q + 0.5) / width as f64 - PI
}

/// Elevation of row `p`.
#[inline]
pub fn row_elevation(p: f64, height: usize) -> f64 {
    FRAC_PI_2 - PI * (p + 0.5) / height as f64
}

/// World unit vector for a compass yaw (clockwise from north) and elevation.
#[inline]
pub fn direction_from_angles(yaw: f64, elevation: f64) -> Point3 {
    let (se, ce) = elevation.sin_cos();
    let (sy, cy) = yaw.sin_cos();
    [sy * ce, cy * ce, se]
}

/// Ray direction of panorama angles (psi, theta) for a camera with the given heading.
#[inline]
pub fn ray_direction(heading: f64, azimuth: f64, elevation: f64) -> Point3 {
    direction_from_angles(heading + azimuth, elevation)
}

#[inline]
pub(crate) fn sub(a: Point3, b: Point3) -> Point3 {
    [a[0] - b[0], a[1] - b[1], a[2] - b[2]]
}

#[inline]
pub(crate) fn norm(v: Point3) -> f64 {
    (v[0] * v[0] + v[1] * v[1] + v[2] * v[2]).sqrt()
}

/// 2.5D satellite product: per-cell elevation and semantic class.
#[derive(Clone, Debug, PartialEq)]
pub struct SemanticHeightField {
    width: usize,
    height: usize,
    cell_size: f64,
    origin: [f64; 2],
    elevation: Vec<f64>,
    semantics: Vec<ClassId>,
}

/// Slack, in meters, for points that sit exactly on the outer footprint edge.
const FOOTPRINT_SLACK: f64 = 1e-9;

impl SemanticHeightField {
    pub fn new(
        width: usize,
        height: usize,
        cell_size: f64,
        origin: [f64; 2],
        elevation: Vec<f64>,
        semantics: Vec<ClassId>,
        registry: &ClassRegistry,
    ) -> Result<Self> {
        if width == 0 || height == 0 {
            return Err(Error::InvalidInput("height field must be non-empty".into()));
        }
        if !(cell_size.is_finite() && cell_size > 0.0) {
            return Err(Error::InvalidInput(format!("cell_size {cell_size} must be > 0")));
        }
        if elevation.len() != width * height || semantics.len() != width * height {
            return Err(Error::ShapeMismatch(format!(
                "height field {height}x{width} needs {} cells, got {} elevations and {} labels",
                width * height,
                elevation.len(),
                semantics.len()
            )));
        }
        if let Some(i) = elevation.iter().position(|e| !(e.is_finite() && *e >= 0.0)) {
            return Err(Error::InvalidInput(format!(
                "elevation at cell ({}, {}) is {}; must be finite and >= 0",
                i / width,
                i % width,
                elevation[i]
            )));
        }
        for (i, &c) in semantics.iter().enumerate() {
            if !registry.contains(c) {
                return Err(Error::InvalidInput(format!(
                    "cell ({}, {}) has unregistered class {}",
                    i / width,
                    i % width,
                    c.0
                )));
            }
            if c == registry.sky() {
                return Err(Error::InvalidInput(format!(
                    "cell ({}, {}) is labeled sky; sky only arises from rays that miss geometry",
                    i / width,
                    i % width
                )));
            }
        }
        Ok(SemanticHeightField {
            width,
            height,
            cell_size,
            origin,
            elevation,
            semantics,
        })
    }

    pub fn width(&self) -> usize {
        self.width
    }

    pub fn height(&self) -> usize {
        self.height
    }

    pub fn cell_size(&self) -> f64 {
        self.cell_size
    }

    pub fn origin(&self) -> [f64; 2] {
        self.origin
    }

    pub fn elevations(&self) -> &[f64] {
        &self.elevation
    }

    pub fn semantics(&self) -> &[ClassId] {
        &self.semantics
    }

    pub fn elevation(&self, row: usize, col: usize) -> f64 {
        self.elevation[row * self.width + col]
    }

    pub fn class(&self, row: usize, col: usize) -> ClassId {
        self.semantics[row * self.width + col]
    }

    /// Builds a field from row-major rasters (row 0 is the northern edge).
    pub fn from_rasters(
        elevation: &Raster<f64>,
        semantics: &Raster<ClassId>,
        cell_size: f64,
        origin: [f64; 2],
        registry: &ClassRegistry,
    ) -> Result<Self> {
        elevation.ensure_same_shape(semantics)?;
        Self::new(
            elevation.width(),
            elevation.height(),
            cell_size,
            origin,
            elevation.data().to_vec(),
            semantics.data().to_vec(),
            registry,
        )
    }

    /// Origin that centers a `width x height` footprint on the world origin.
    pub fn centered_origin(width: usize, height: usize, cell_size: f64) -> [f64; 2] {
        [
            (1.0 - width as f64) * 0.5 * cell_size,
            (height as f64 - 1.0) * 0.5 * cell_size,
        ]
    }

    pub fn elevation_raster(&self) -> Raster<f64> {
        Raster::from_vec(self.height, self.width, self.elevation.clone()).expect("shape checked at construction")
    }

    pub fn semantics_raster(&self) -> Raster<ClassId> {
        Raster::from_vec(self.height, self.width, self.semantics.clone()).expect("shape checked at construction")
    }

    pub fn max_elevation(&self) -> f64 {
        self.elevation.iter().copied().fold(0.0, f64::max)
    }

    /// World (x, y) of the center of cell (row, col).
    pub fn cell_center(&self, row: usize, col: usize) -> [f64; 2] {
        [
            self.origin[0] + col as f64 * self.cell_size,
            self.origin[1] - row as f64 * self.cell_size,
        ]
    }

    /// Footprint as (x_min, y_min, x_max, y_max).
    pub fn footprint(&self) -> [f64; 4] {
        let h = self.cell_size * 0.5;
        let x_min = self.origin[0] - h;
        let y_max = self.origin[1] + h;
        [
            x_min,
            y_max - self.height as f64 * self.cell_size,
            x_min + self.width as f64 * self.cell_size,
            y_max,
        ]
    }

    pub fn center(&self) -> [f64; 2] {
        let [x0, y0, x1, y1] = self.footprint();
        [(x0 + x1) * 0.5, (y0 + y1) * 0.5]
    }

    pub fn contains(&self, x: f64, y: f64) -> bool {
        self.cell_at(x, y).is_some()
    }

    /// Cell (row, col) under world (x, y). Points on the outer edge count as inside.
    pub fn cell_at(&self, x: f64, y: f64) -> Option<(usize, usize)> {
        let [x_min, _, _, y_max] = self.footprint();
        let fx = (x - x_min) / self.cell_size;
        let fy = (y_max - y) / self.cell_size;
        let slack = FOOTPRINT_SLACK / self.cell_size;
        let col = clamp_index(fx, self.width, slack)?;
        let row = clamp_index(fy, self.height, slack)?;
        Some((row, col))
    }
}

fn clamp_index(f: f64, n: usize, slack: f64) -> Option<usize> {
    if !f.is_finite() || f < -slack || f > n as f64 + slack {
        return None;
    }
    Some((f.floor().max(0.0) as usize).min(n - 1))
}

/// Ordered camera locations with per-frame headings.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct Trajectory {
    locations: Vec<[f64; 2]>,
    headings: Vec<f64>,
    camera_height: f64,
    center: usize,
}

pub const DEFAULT_CAMERA_HEIGHT: f64 = 3.0;

impl Trajectory {
    pub fn new(
        locations: Vec<[f64; 2]>,
        headings: Vec<f64>,
        camera_height: f64,
        center: usize,
    ) -> Result<Self> {
        if locations.is_empty() {
            return Err(Error::InvalidInput("trajectory needs at least one location".into()));
        }
        if headings.len() != locations.len() {
            return Err(Error::ShapeMismatch(format!(
                "{} locations but {} headings",
                locations.len(),
                headings.len()
            )));
        }
        if center >= locations.len() {
            return Err(Error::InvalidInput(format!(
                "center index {center} out of range for {} frames",
                locations.len()
            )));
        }
        if !(camera_height.is_finite() && camera_height > 0.0) {
            return Err(Error::InvalidInput(format!(
                "camera height {camera_height} must be > 0"
            )));
        }
        Ok(Trajectory {
            locations,
            headings,
            camera_height,
            center,
        })
    }

    /// Straight path of `frames` samples spaced `step` apart along `heading`,
    /// centered on `center`. The middle sample is the center frame.
    pub fn straight(
        center: [f64; 2],
        heading: f64,
        step: f64,
        frames: usize,
        camera_height: f64,
    ) -> Result<Self> {
        if frames == 0 {
            return Err(Error::InvalidInput("trajectory needs at least one frame".into()));
        }
        let c = (frames - 1) / 2;
        let fwd = [heading.sin(), heading.cos()];
        let locations = (0..frames)
            .map(|i| {
                let s = (i as f64 - c as f64) * step;
                [center[0] + s * fwd[0], center[1] + s * fwd[1]]
            })
            .collect();
        Trajectory::new(locations, vec![heading; frames], camera_height, c)
    }

    /// Out-and-back path: frames `0..T/2` go forward along `heading`, frames
    /// `T/2..T` revisit the same positions in reverse with the opposite heading,
    /// so frame `i` and frame `T-1-i` share a position. The center frame is the
    /// turning point `T/2 - 1`.
    pub fn uturn(
        center: [f64; 2],
        heading: f64,
        step: f64,
        frames: usize,
        camera_height: f64,
    ) -> Result<Self> {
        if frames < 2 || frames % 2 != 0 {
            return Err(Error::InvalidInput(format!(
                "u-turn trajectory needs an even frame count >= 2, got {frames}"
            )));
        }
        let half = frames / 2;
        let fwd = [heading.sin(), heading.cos()];
        let mid = (half - 1) as f64 * 0.5;
        let out: Vec<[f64; 2]> = (0..half)
            .map(|i| {
                let s = (i as f64 - mid) * step;
                [center[0] + s * fwd[0], center[1] + s * fwd[1]]
            })
            .collect();
        let mut locations = out.clone();
        locations.extend(out.iter().rev());
        let back = heading + PI;
        let mut headings = vec![heading; half];
        headings.extend(std::iter::repeat_n(back, half));
        Trajectory::new(locations, headings, camera_height, half - 1)
    }

    pub fn ensure_inside(&self, field: &SemanticHeightField) -> Result<()> {
        for (t, l) in self.locations.iter().enumerate() {
            if !field.contains(l[0], l[1]) {
                return Err(Error::InvalidInput(format!(
                    "trajectory location {t} ({:.3}, {:.3}) lies outside the height-field footprint",
                    l[0], l[1]
                )));
            }
        }
        Ok(())
    }

    pub fn len(&self) -> usize {
        self.locations.len()
    }

    pub fn is_empty(&self) -> bool {
        self.locations.is_empty()
    }

    pub fn locations(&self) -> &[[f64; 2]] {
        &self.locations
    }

    pub fn headings(&self) -> &[f64] {
        &self.headings
    }

    pub fn camera_height(&self) -> f64 {
        self.camera_height
    }

    pub fn center(&self) -> usize {
        self.center
    }

    /// Optical center of frame `t`.
    pub fn position(&self, t: usize) -> Point3 {
        let l = self.locations[t];
        [l[0], l[1], self.camera_height]
    }
}

/// Per-point feature vectors of fixed dimensionality, stored row-major.
#[derive(Clone, Debug, PartialEq)]
pub struct Features {
    dim: usize,
    values: Vec<f64>,
}

impl Features {
    pub fn new(dim: usize, values: Vec<f64>) -> Result<Self> {
        if dim == 0 || values.len() % dim != 0 {
            return Err(Error::ShapeMismatch(format!(
                "{} feature values are not a multiple of dimension {dim}",
                values.len()
            )));
        }
        Ok(Features { dim, values })
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn len(&self) -> usize {
        self.values.len() / self.dim
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    pub fn row(&self, i: usize) -> &[f64] {
        &self.values[i * self.dim..(i + 1) * self.dim]
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }
}

/// Ordered point set. Indices are identities: points are only ever appended.
#[derive(Clone, Debug, Default, PartialEq)]
pub struct PointCloud {
    positions: Vec<Point3>,
    semantics: Vec<ClassId>,
    sky: Vec<bool>,
    rgb: Option<Vec<Rgb>>,
    features: Option<Features>,
}

impl PointCloud {
    pub fn new(positions: Vec<Point3>, semantics: Vec<ClassId>, sky: Vec<bool>) -> Result<Self> {
        if semantics.len() != positions.len() || sky.len() != positions.len() {
            return Err(Error::ShapeMismatch(format!(
                "{} positions, {} labels, {} sky flags",
                positions.len(),
                semantics.len(),
                sky.len()
            )));
        }
        Ok(PointCloud {
            positions,
            semantics,
            sky,
            rgb: None,
            features: None,
        })
    }

    pub fn len(&self) -> usize {
        self.positions.len()
    }

    pub fn is_empty(&self) -> bool {
        self.positions.is_empty()
    }

    pub fn positions(&self) -> &[Point3] {
        &self.positions
    }

    pub fn semantics(&self) -> &[ClassId] {
        &self.semantics
    }

    pub fn sky(&self) -> &[bool] {
        &self.sky
    }

    pub fn rgb(&self) -> Option<&[Rgb]> {
        self.rgb.as_deref()
    }

    pub fn features(&self) -> Option<&Features> {
        self.features.as_ref()
    }

    pub fn set_semantics(&mut self, semantics: Vec<ClassId>) -> Result<()> {
        self.check_len("semantics", semantics.len())?;
        self.semantics = semantics;
        Ok(())
    }

    pub fn set_rgb(&mut self, rgb: Vec<Rgb>) -> Result<()> {
        self.check_len("rgb", rgb.len())?;
        self.rgb = Some(rgb);
        Ok(())
    }

    pub fn set_features(&mut self, features: Features) -> Result<()> {
        self.check_len("features", features.len())?;
        self.features = Some(features);
        Ok(())
    }

    /// Appends `other`, keeping every existing index stable. Optional channels
    /// must be present on both sides or neither.
    pub fn append(&mut self, other: PointCloud) -> Result<()> {
        if self.rgb.is_some() != other.rgb.is_some()
            || self.features.as_ref().map(|f| f.dim) != other.features.as_ref().map(|f| f.dim)
        {
            if !self.is_empty() {
                return Err(Error::ShapeMismatch(
                    "appended cloud carries different optional channels".into(),
                ));
            }
            *self = other;
            return Ok(());
        }
        self.positions.extend(other.positions);
        self.semantics.extend(other.semantics);
        self.sky.extend(other.sky);
        if let (Some(a), Some(b)) = (self.rgb.as_mut(), other.rgb) {
            a.extend(b);
        }
        if let (Some(a), Some(b)) = (self.features.as_mut(), other.features) {
            a.values.extend(b.values);
        }
        Ok(())
    }

    fn check_len(&self, what: &str, n: usize) -> Result<()> {
        if n != self.len() {
            return Err(Error::ShapeMismatch(format!(
                "{what} channel has {n} entries for {} points",
                self.len()
            )));
        }
        Ok(())
    }
}

/// Dense T x H x W tensor of 1-based point indices; 0 marks an unassigned pixel.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct PointPixelMap {
    frames: usize,
    height: usize,
    width: usize,
    indices: Vec<u32>,
}

impl PointPixelMap {
    pub fn zeros(frames: usize, height: usize, width: usize) -> Self {
        PointPixelMap {
            frames,
            height,
            width,
            indices: vec![0; frames * height * width],
        }
    }

    pub fn from_vec(frames: usize, height: usize, width: usize, indices: Vec<u32>) -> Result<Self> {
        if indices.len() != frames * height * width {
            return Err(Error::ShapeMismatch(format!(
                "map {frames}x{height}x{width} needs {} entries, got {}",
                frames * height * width,
                indices.len()
            )));
        }
        Ok(PointPixelMap {
            frames,
            height,
            width,
            indices,
        })
    }

    pub fn frames(&self) -> usize {
        self.frames
    }

    pub fn height(&self) -> usize {
        self.height
    }

    pub fn width(&self) -> usize {
        self.width
    }

    pub fn indices(&self) -> &[u32] {
        &self.indices
    }

    pub fn frame(&self, t: usize) -> &[u32] {
        let n = self.height * self.width;
        &self.indices[t * n..(t + 1) * n]
    }

    pub fn frame_mut(&mut self, t: usize) -> &mut [u32] {
        let n = self.height * self.width;
        &mut self.indices[t * n..(t + 1) * n]
    }

    /// Checks that every entry references a point in `[1, n_points]`.
    pub fn validate_complete(&self, n_points: usize) -> Result<()> {
        if let Some(i) = self
            .indices
            .iter()
            .position(|&v| v == 0 || v as usize > n_points)
        {
            let n = self.height * self.width;
            return Err(Error::Invariant(format!(
                "map entry (t={}, p={}, q={}) = {} outside [1, {n_points}]",
                i / n,
                (i % n) / self.width,
                i % self.width,
                self.indices[i]
            )));
        }
        Ok(())
    }
}

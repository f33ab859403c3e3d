//! Pipeline configuration: defaults, JSON files and `key=value` overrides.
//!
//! Precedence is overrides over file over defaults. [`PipelineConfig::load`]
//! returns a resolved config whose derived fields (frame count, occupancy
//! voxel size) are filled in, so echoing it to JSON and loading it back
//! yields an equal value.

use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use serde_json::Value;

use crate::error::{Error, Result};
use crate::extraction::ExtractionParams;
use crate::scene::Trajectory;

const STEP_TOL: f64 = 1e-9;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SceneConfig {
    /// Per-cell elevation in meters (PFM).
    pub elevation: Option<PathBuf>,
    /// Per-cell class ids (palette PNG).
    pub semantics: Option<PathBuf>,
    /// Satellite RGB image covering the footprint (PNG).
    pub satellite: Option<PathBuf>,
    /// Class registry JSON; the built-in registry when absent.
    pub registry: Option<PathBuf>,
    pub cell_size: f64,
    /// World (x, y) of the center of cell (0, 0). When absent the footprint
    /// is centered on the world origin.
    pub origin: Option<[f64; 2]>,
}

impl Default for SceneConfig {
    fn default() -> Self {
        SceneConfig {
            elevation: None,
            semantics: None,
            satellite: None,
            registry: None,
            cell_size: 0.5,
            origin: None,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct TrajectoryConfig {
    pub range_m: f64,
    pub step_m: f64,
    /// Straight paths derive this from range and step; u-turns default to 60.
    pub frames: Option<usize>,
    pub uturn: bool,
    /// Yaw of travel, clockwise from north (radians).
    pub heading: f64,
    /// Path center; the footprint center when absent.
    pub center: Option<[f64; 2]>,
}

pub const DEFAULT_UTURN_FRAMES: usize = 60;

impl Default for TrajectoryConfig {
    fn default() -> Self {
        TrajectoryConfig {
            range_m: 7.0,
            step_m: 0.5,
            frames: None,
            uturn: false,
            heading: 0.0,
            center: None,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RenderConfig {
    pub height: usize,
    pub width: usize,
    pub epsilon: f64,
    pub sky_radius: f64,
    pub camera_height: f64,
}

impl Default for RenderConfig {
    fn default() -> Self {
        RenderConfig {
            height: 256,
            width: 512,
            epsilon: crate::panorama::DEFAULT_EPSILON,
            sky_radius: crate::panorama::DEFAULT_SKY_RADIUS,
            camera_height: crate::scene::DEFAULT_CAMERA_HEIGHT,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct VoxelConfig {
    /// Occupancy voxel edge in the ground plane; the cell size when absent.
    pub horizontal: Option<f64>,
    pub vertical: f64,
    pub feature: f64,
    /// Occupancy grid top; derived from the scene when absent.
    pub max_height: Option<f64>,
}

impl Default for VoxelConfig {
    fn default() -> Self {
        VoxelConfig {
            horizontal: None,
            vertical: crate::voxelizer::DEFAULT_VERTICAL_VOXEL,
            feature: crate::voxelizer::FEATURE_VOXEL_SIZE,
            max_height: None,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct KnnConfig {
    pub k: usize,
}

impl Default for KnnConfig {
    fn default() -> Self {
        KnnConfig {
            k: crate::colorize::DEFAULT_K,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct StyleConfig {
    pub brightness: bool,
    pub texture_cell: f64,
    pub latent_dim: usize,
    pub feature_width: usize,
}

impl Default for StyleConfig {
    fn default() -> Self {
        StyleConfig {
            brightness: true,
            texture_cell: crate::stylize::DEFAULT_TEXTURE_CELL,
            latent_dim: crate::stylize::DEFAULT_LATENT_DIM,
            feature_width: crate::stylize::DEFAULT_FEATURE_WIDTH,
        }
    }
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct PipelineConfig {
    pub scene: SceneConfig,
    pub trajectory: TrajectoryConfig,
    pub render: RenderConfig,
    pub voxel: VoxelConfig,
    pub knn: KnnConfig,
    pub style: StyleConfig,
    pub seed: u64,
}

/// Recursively merges `patch` into `base`; objects merge key by key, anything
/// else replaces.
pub fn merge(base: &mut Value, patch: Value) {
    match (base, patch) {
        (Value::Object(b), Value::Object(p)) => {
            for (k, v) in p {
                match b.get_mut(&k) {
                    Some(slot) => merge(slot, v),
                    None => {
                        b.insert(k, v);
                    }
                }
            }
        }
        (slot, v) => *slot = v,
    }
}

/// Applies one `dotted.key=value` override. The value is parsed as JSON and
/// falls back to a plain string.
pub fn apply_override(doc: &mut Value, assignment: &str) -> Result<()> {
    let (key, raw) = assignment
        .split_once('=')
        .ok_or_else(|| Error::Config(format!("override {assignment:?} is not key=value")))?;
    let key = key.trim();
    if key.is_empty() || key.split('.').any(str::is_empty) {
        return Err(Error::Config(format!("override key {key:?} is malformed")));
    }
    let value = serde_json::from_str(raw).unwrap_or_else(|_| Value::String(raw.to_string()));
    let mut slot = doc;
    let parts: Vec<&str> = key.split('.').collect();
    for (i, part) in parts.iter().enumerate() {
        let obj = slot
            .as_object_mut()
            .ok_or_else(|| Error::Config(format!("override {key:?}: {:?} is not a section", parts[..i].join("."))))?;
        if !obj.contains_key(*part) {
            return Err(Error::Config(format!("unknown config key {key:?}")));
        }
        slot = obj.get_mut(*part).expect("checked above");
    }
    *slot = value;
    Ok(())
}

fn positive(name: &str, v: f64) -> Result<()> {
    if v.is_finite() && v > 0.0 {
        Ok(())
    } else {
        Err(Error::Config(format!("{name} must be finite and > 0, got {v}")))
    }
}

impl PipelineConfig {
    /// Defaults, then `file`, then `overrides`, validated and resolved.
    pub fn load(file: Option<&Path>, overrides: &[String]) -> Result<Self> {
        let mut doc = serde_json::to_value(PipelineConfig::default()).expect("config serializes");
        if let Some(path) = file {
            let text = std::fs::read_to_string(path)?;
            let patch: Value = serde_json::from_str(&text)
                .map_err(|e| Error::Config(format!("{}: {e}", path.display())))?;
            if !patch.is_object() {
                return Err(Error::Config(format!("{}: top level must be an object", path.display())));
            }
            merge(&mut doc, patch);
        }
        for o in overrides {
            apply_override(&mut doc, o)?;
        }
        let cfg: PipelineConfig = serde_json::from_value(doc).map_err(|e| Error::Config(e.to_string()))?;
        cfg.resolved()
    }

    pub fn from_json(text: &str) -> Result<Self> {
        serde_json::from_str::<PipelineConfig>(text)
            .map_err(|e| Error::Config(e.to_string()))?
            .resolved()
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("config serializes")
    }

    /// Number of frames implied by range and step on a straight path.
    pub fn derived_frames(&self) -> Result<usize> {
        let t = &self.trajectory;
        positive("trajectory.step_m", t.step_m)?;
        if !(t.range_m.is_finite() && t.range_m >= 0.0) {
            return Err(Error::Config(format!("trajectory.range_m must be >= 0, got {}", t.range_m)));
        }
        let steps = t.range_m / t.step_m;
        if (steps - steps.round()).abs() > STEP_TOL * steps.max(1.0) {
            return Err(Error::Config(format!(
                "trajectory.range_m {} is not a whole number of {} m steps",
                t.range_m, t.step_m
            )));
        }
        Ok(steps.round() as usize + 1)
    }

    /// Checks consistency and fills in derived values.
    pub fn resolved(mut self) -> Result<Self> {
        positive("scene.cell_size", self.scene.cell_size)?;
        let r = &self.render;
        if r.height < 2 || r.width < 2 {
            return Err(Error::Config(format!("render size {}x{} must be at least 2x2", r.height, r.width)));
        }
        positive("render.epsilon", r.epsilon)?;
        if r.epsilon >= 1.0 {
            return Err(Error::Config(format!("render.epsilon {} must be < 1", r.epsilon)));
        }
        positive("render.sky_radius", r.sky_radius)?;
        positive("render.camera_height", r.camera_height)?;
        if r.camera_height >= r.sky_radius {
            return Err(Error::Config("render.camera_height must be below the sky radius".into()));
        }
        let horizontal = self.voxel.horizontal.unwrap_or(self.scene.cell_size);
        positive("voxel.horizontal", horizontal)?;
        let ratio = self.scene.cell_size / horizontal;
        if (ratio - ratio.round()).abs() > STEP_TOL * ratio.max(1.0) || ratio.round() < 1.0 {
            return Err(Error::Config(format!(
                "voxel.horizontal {horizontal} must evenly divide scene.cell_size {}",
                self.scene.cell_size
            )));
        }
        self.voxel.horizontal = Some(horizontal);
        positive("voxel.vertical", self.voxel.vertical)?;
        positive("voxel.feature", self.voxel.feature)?;
        if let Some(m) = self.voxel.max_height {
            positive("voxel.max_height", m)?;
        }
        if self.knn.k == 0 {
            return Err(Error::Config("knn.k must be >= 1".into()));
        }
        positive("style.texture_cell", self.style.texture_cell)?;
        if !self.trajectory.heading.is_finite() {
            return Err(Error::Config("trajectory.heading must be finite".into()));
        }

        let frames = if self.trajectory.uturn {
            positive("trajectory.step_m", self.trajectory.step_m)?;
            let n = self.trajectory.frames.unwrap_or(DEFAULT_UTURN_FRAMES);
            if n < 2 || n % 2 != 0 {
                return Err(Error::Config(format!("u-turn trajectories need an even frame count >= 2, got {n}")));
            }
            if self.render.width % 2 != 0 {
                return Err(Error::Config("u-turn direction adjustment needs an even render.width".into()));
            }
            n
        } else {
            let n = self.derived_frames()?;
            if let Some(given) = self.trajectory.frames {
                if given != n {
                    return Err(Error::Config(format!(
                        "trajectory.frames {given} disagrees with range {} m at {} m steps ({n} frames)",
                        self.trajectory.range_m, self.trajectory.step_m
                    )));
                }
            }
            n
        };
        self.trajectory.frames = Some(frames);
        Ok(self)
    }

    pub fn frames(&self) -> usize {
        self.trajectory.frames.expect("resolved config")
    }

    pub fn extraction_params(&self) -> ExtractionParams {
        ExtractionParams {
            height: self.render.height,
            width: self.render.width,
            epsilon: self.render.epsilon,
            sky_radius: self.render.sky_radius,
        }
    }

    /// Trajectory through `default_center` unless the config names a center.
    pub fn trajectory(&self, default_center: [f64; 2]) -> Result<Trajectory> {
        let t = &self.trajectory;
        let c = t.center.unwrap_or(default_center);
        if t.uturn {
            Trajectory::uturn(c, t.heading, t.step_m, self.frames(), self.render.camera_height)
        } else {
            Trajectory::straight(c, t.heading, t.step_m, self.frames(), self.render.camera_height)
        }
    }
}

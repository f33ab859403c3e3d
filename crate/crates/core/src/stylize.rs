//! Deterministic stand-ins for the generative stage: class-masked attentive
//! pooling, per-point procedural coloring and geometric 2x upsampling.

use std::collections::BTreeMap;
use std::path::Path;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::scene::{ClassId, ClassRegistry, FrameSequence, Point3, PointCloud, Raster, Rgb};

pub const DEFAULT_LATENT_DIM: usize = 16;
pub const DEFAULT_FEATURE_WIDTH: usize = 64;
pub const BRIGHTNESS_MIN: f64 = 0.8;
pub const BRIGHTNESS_MAX: f64 = 1.2;
/// Edge of the world-anchored cells that share one brightness value (meters).
pub const DEFAULT_TEXTURE_CELL: f64 = 0.25;

/// Row-major `H x W x C` feature image.
#[derive(Clone, Debug, PartialEq)]
pub struct FeatureMap {
    height: usize,
    width: usize,
    channels: usize,
    data: Vec<f64>,
}

impl FeatureMap {
    pub fn new(height: usize, width: usize, channels: usize, data: Vec<f64>) -> Result<Self> {
        if data.len() != height * width * channels {
            return Err(Error::ShapeMismatch(format!(
                "{} values for a {height}x{width}x{channels} feature map",
                data.len()
            )));
        }
        if let Some(i) = data.iter().position(|v| !v.is_finite()) {
            return Err(Error::InvalidInput(format!("feature value {i} is not finite")));
        }
        Ok(FeatureMap {
            height,
            width,
            channels,
            data,
        })
    }

    pub fn height(&self) -> usize {
        self.height
    }

    pub fn width(&self) -> usize {
        self.width
    }

    pub fn channels(&self) -> usize {
        self.channels
    }

    pub fn pixel(&self, p: usize, q: usize) -> &[f64] {
        let i = (p * self.width + q) * self.channels;
        &self.data[i..i + self.channels]
    }
}

/// One latent vector per class.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(transparent)]
pub struct LatentSet {
    pub vectors: BTreeMap<ClassId, Vec<f64>>,
}

impl LatentSet {
    pub fn get(&self, class: ClassId) -> Option<&[f64]> {
        self.vectors.get(&class).map(Vec::as_slice)
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("latent set serializes")
    }

    pub fn from_json(text: &str) -> Result<Self> {
        serde_json::from_str(text).map_err(|e| Error::Format {
            format: "latent JSON",
            reason: e.to_string(),
        })
    }

    pub fn load(path: &Path) -> Result<Self> {
        Self::from_json(&std::fs::read_to_string(path)?)
    }
}

/// `v_c = sum(S^c F) / sum(S^c)` for every class mask, summed in row-major order.
pub fn attentive_pool(features: &FeatureMap, masks: &[(ClassId, Raster<bool>)]) -> Result<LatentSet> {
    let mut vectors = BTreeMap::new();
    for (class, mask) in masks {
        if mask.shape() != (features.height, features.width) {
            return Err(Error::ShapeMismatch(format!(
                "mask for class {} is {}x{}, features are {}x{}",
                class.0,
                mask.height(),
                mask.width(),
                features.height,
                features.width
            )));
        }
        let mut sum = vec![0.0; features.channels];
        let mut count = 0usize;
        for (i, &m) in mask.data().iter().enumerate() {
            if m {
                count += 1;
                let f = &features.data[i * features.channels..(i + 1) * features.channels];
                for (s, &x) in sum.iter_mut().zip(f) {
                    *s += x;
                }
            }
        }
        if count == 0 {
            return Err(Error::InvalidInput(format!("mask for class {} is empty", class.0)));
        }
        if vectors.insert(*class, sum.into_iter().map(|s| s / count as f64).collect()).is_some() {
            return Err(Error::InvalidInput(format!("class {} has two masks", class.0)));
        }
    }
    Ok(LatentSet { vectors })
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct StyleParams {
    pub seed: u64,
    /// When false every point takes its class color unmodified.
    pub brightness: bool,
    pub texture_cell: f64,
}

impl Default for StyleParams {
    fn default() -> Self {
        StyleParams {
            seed: 0,
            brightness: true,
            texture_cell: DEFAULT_TEXTURE_CELL,
        }
    }
}

pub(crate) fn splitmix64(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// Brightness factor in `[0.8, 1.2)` for a world position, class and seed.
pub fn brightness_factor(p: Point3, class: ClassId, seed: u64, texture_cell: f64) -> f64 {
    let mut h = splitmix64(seed);
    for c in p {
        let cell = (c / texture_cell).floor() as i64;
        h = splitmix64(h ^ cell as u64);
    }
    h = splitmix64(h ^ class.0 as u64);
    let u = (h >> 11) as f64 / (1u64 << 53) as f64;
    BRIGHTNESS_MIN + (BRIGHTNESS_MAX - BRIGHTNESS_MIN) * u
}

/// Per-point color: the class display color scaled by a position-hashed brightness.
pub fn stylize_points(cloud: &PointCloud, registry: &ClassRegistry, params: &StyleParams) -> Result<Vec<Rgb>> {
    if !(params.texture_cell.is_finite() && params.texture_cell > 0.0) {
        return Err(Error::InvalidInput(format!(
            "texture cell {} must be > 0",
            params.texture_cell
        )));
    }
    let palette = registry.palette();
    if let Some((i, c)) = cloud.semantics().iter().enumerate().find(|(_, c)| !registry.contains(**c)) {
        return Err(Error::InvalidInput(format!("point {i} has unregistered class {}", c.0)));
    }
    Ok(cloud
        .positions()
        .par_iter()
        .zip(cloud.semantics().par_iter())
        .map(|(&p, &c)| {
            let base = palette[c.index()];
            if !params.brightness {
                return base;
            }
            let f = brightness_factor(p, c, params.seed, params.texture_cell);
            base.map(|v| (v as f64 * f + 0.5).floor().min(255.0) as u8)
        })
        .collect())
}

/// Source sample positions and weights for half-pixel-aligned 2x resampling
/// along one axis, clamped at the borders.
fn taps(n_out: usize, n_in: usize) -> Vec<(usize, usize, f64)> {
    (0..n_out)
        .map(|i| {
            let x = ((i as f64 + 0.5) / 2.0 - 0.5).clamp(0.0, (n_in - 1) as f64);
            let i0 = x.floor() as usize;
            let i1 = (i0 + 1).min(n_in - 1);
            (i0, i1, x - i0 as f64)
        })
        .collect()
}

/// Bilinear 2x upsampling of a float raster.
pub fn upsample2x_raster(src: &Raster<f64>) -> Raster<f64> {
    let (h, w) = src.shape();
    if h == 0 || w == 0 {
        return Raster::filled(2 * h, 2 * w, 0.0);
    }
    let rows = taps(2 * h, h);
    let cols = taps(2 * w, w);
    Raster::from_fn(2 * h, 2 * w, |p, q| {
        let (r0, r1, fy) = rows[p];
        let (c0, c1, fx) = cols[q];
        let top = src.get(r0, c0) * (1.0 - fx) + src.get(r0, c1) * fx;
        let bot = src.get(r1, c0) * (1.0 - fx) + src.get(r1, c1) * fx;
        top * (1.0 - fy) + bot * fy
    })
}

/// Bilinear 2x upsampling of RGB frames, rounded half up.
pub fn upsample2x(frames: &FrameSequence<Rgb>) -> Result<FrameSequence<Rgb>> {
    let out = frames
        .frames()
        .par_iter()
        .map(|f| {
            let planes: Vec<Raster<f64>> = (0..3)
                .map(|ch| upsample2x_raster(&f.map(|c| c[ch] as f64)))
                .collect();
            let (h, w) = planes[0].shape();
            Raster::from_fn(h, w, |p, q| {
                [0, 1, 2].map(|ch| (planes[ch].get(p, q) + 0.5).floor().clamp(0.0, 255.0) as u8)
            })
        })
        .collect();
    FrameSequence::new(out)
}

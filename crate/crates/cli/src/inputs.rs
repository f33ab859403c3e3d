//! Config, scene and file plumbing shared by the subcommands.

use std::fs;
use std::path::{Path, PathBuf};

use anyhow::{bail, Context, Result};
use crossview_core::config::PipelineConfig;
use crossview_core::io::{pfm, png};
use crossview_core::sample::sample_scene;
use crossview_core::scene::{ClassRegistry, FrameSequence, Raster, Rgb, SemanticHeightField};
use crossview_core::voxelizer::{build_occupancy, VoxelGrid};
use log::info;
use sha2::{Digest, Sha256};

/// Loads the config and makes scene paths relative to the config file.
pub fn load_config(file: Option<&Path>, overrides: &[String]) -> Result<PipelineConfig> {
    let mut cfg = PipelineConfig::load(file, overrides)
        .with_context(|| match file {
            Some(p) => format!("loading config {}", p.display()),
            None => "resolving default config".to_string(),
        })?;
    if let Some(dir) = file.and_then(Path::parent) {
        let s = &mut cfg.scene;
        for p in [&mut s.elevation, &mut s.semantics, &mut s.satellite, &mut s.registry]
            .into_iter()
            .flatten()
        {
            if p.is_relative() {
                *p = dir.join(&*p);
            }
        }
    }
    Ok(cfg)
}

pub struct Scene {
    pub registry: ClassRegistry,
    pub field: SemanticHeightField,
    pub satellite: Option<Raster<Rgb>>,
}

/// The configured scene, or the bundled sample when no rasters are named.
pub fn load_scene(cfg: &PipelineConfig) -> Result<Scene> {
    let s = &cfg.scene;
    let registry = match &s.registry {
        Some(p) => ClassRegistry::load(p).with_context(|| format!("loading registry {}", p.display()))?,
        None => ClassRegistry::default(),
    };
    match (&s.elevation, &s.semantics) {
        (None, None) => {
            let sample = sample_scene(&registry)?;
            Ok(Scene {
                registry,
                field: sample.field,
                satellite: Some(sample.satellite),
            })
        }
        (Some(e), Some(m)) => {
            let elevation = pfm::load_pfm(e).with_context(|| format!("reading {}", e.display()))?;
            let semantics = png::load_semantics(m).with_context(|| format!("reading {}", m.display()))?;
            let origin = s.origin.unwrap_or_else(|| {
                SemanticHeightField::centered_origin(elevation.width(), elevation.height(), s.cell_size)
            });
            let field = SemanticHeightField::from_rasters(&elevation, &semantics, s.cell_size, origin, &registry)?;
            let satellite = match &s.satellite {
                Some(p) => Some(png::load_rgb(p).with_context(|| format!("reading {}", p.display()))?),
                None => None,
            };
            Ok(Scene {
                registry,
                field,
                satellite,
            })
        }
        _ => bail!("scene.elevation and scene.semantics must be given together"),
    }
}

pub fn occupancy(cfg: &PipelineConfig, field: &SemanticHeightField) -> Result<VoxelGrid> {
    let v = &cfg.voxel;
    let horizontal = v.horizontal.expect("resolved config");
    let max_height = v.max_height.unwrap_or(field.max_elevation() + v.vertical);
    let grid = build_occupancy(field, v.vertical, horizontal, max_height)?;
    info!(
        "occupancy grid {:?} voxels of {:?} m, {} occupied",
        grid.dims(),
        grid.voxel_size(),
        grid.count()
    );
    Ok(grid)
}

pub fn create_dir(dir: &Path) -> Result<()> {
    fs::create_dir_all(dir).with_context(|| format!("creating {}", dir.display()))
}

/// Logs the SHA-256 of a file that was just written.
pub fn record(path: &Path) -> Result<()> {
    let bytes = fs::read(path).with_context(|| format!("reading back {}", path.display()))?;
    info!("wrote {} sha256={}", path.display(), hex::encode(Sha256::digest(&bytes)));
    Ok(())
}

pub fn write_text(path: &Path, text: &str) -> Result<()> {
    fs::write(path, text).with_context(|| format!("writing {}", path.display()))?;
    record(path)
}

pub fn write_json<T: serde::Serialize>(path: &Path, value: &T) -> Result<()> {
    let mut text = serde_json::to_string_pretty(value)?;
    text.push('\n');
    write_text(path, &text)
}

/// Runs a core writer and records the result.
pub fn write_with(path: &Path, f: impl FnOnce(&Path) -> crossview_core::Result<()>) -> Result<()> {
    f(path).with_context(|| format!("writing {}", path.display()))?;
    record(path)
}

pub fn frame_name(prefix: &str, t: usize, ext: &str) -> String {
    format!("{prefix}{t:03}.{ext}")
}

/// Sorted `.png` files in `dir` whose names start with `prefix`.
pub fn frame_files(dir: &Path, prefix: &str) -> Result<Vec<PathBuf>> {
    let mut files = Vec::new();
    for entry in fs::read_dir(dir).with_context(|| format!("listing {}", dir.display()))? {
        let path = entry?.path();
        let name = path.file_name().and_then(|n| n.to_str()).unwrap_or("");
        if name.starts_with(prefix) && name.ends_with(".png") && path.is_file() {
            files.push(path);
        }
    }
    files.sort();
    if files.is_empty() {
        bail!("no {prefix}*.png frames in {}", dir.display());
    }
    Ok(files)
}

pub fn load_rgb_frames(files: &[PathBuf]) -> Result<FrameSequence<Rgb>> {
    let frames = files
        .iter()
        .map(|p| png::load_rgb(p).with_context(|| format!("reading {}", p.display())))
        .collect::<Result<Vec<_>>>()?;
    Ok(FrameSequence::new(frames)?)
}

pub fn load_weight_frames(files: &[PathBuf]) -> Result<FrameSequence<f64>> {
    let frames = files
        .iter()
        .map(|p| {
            png::load_mask(p)
                .map(|m| m.map(|&b| if b { 1.0 } else { 0.0 }))
                .with_context(|| format!("reading {}", p.display()))
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(FrameSequence::new(frames)?)
}

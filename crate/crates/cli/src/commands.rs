use std::path::Path;

use anyhow::{bail, Context, Result};
use crossview_core::colorize::{build_ground_truth_video, misalignment_mask, CenterFrame, GroundTruthParams};
use crossview_core::config::PipelineConfig;
use crossview_core::extraction::{extract, render_map, ExtractionResult};
use crossview_core::io::{cvgx, cvpm, pfm, ply, png};
use crossview_core::metrics::{compare_sequences, self_consistency, MetricReport};
use crossview_core::panorama::warp_satellite;
use crossview_core::sample::render_center_frame;
use crossview_core::scene::{ClassId, FrameSequence, PointCloud, Rgb};
use crossview_core::stylize::{stylize_points, upsample2x, StyleParams};
use log::info;
use serde::Serialize;

use crate::inputs::{
    create_dir, frame_files, frame_name, load_config, load_rgb_frames, load_scene, load_weight_frames, occupancy,
    write_json, write_text, write_with, Scene,
};
use crate::{
    Cli, Command, ExtractArgs, GtVideoArgs, MetricsArgs, RenderArgs, SampleArgs, UturnArgs, VoxelizeArgs, WarpArgs,
};

pub fn run(cli: Cli) -> Result<()> {
    if let Some(n) = cli.threads {
        if n == 0 {
            bail!("--threads must be at least 1");
        }
        rayon::ThreadPoolBuilder::new()
            .num_threads(n)
            .build_global()
            .context("configuring the worker pool")?;
    }
    let mut overrides = cli.set.clone();
    if let Command::Uturn(a) = &cli.command {
        if a.input.is_none() {
            overrides.push("trajectory.uturn=true".into());
            if let Some(n) = a.frames {
                overrides.push(format!("trajectory.frames={n}"));
            }
        }
    }
    let cfg = load_config(cli.config.as_deref(), &overrides)?;
    info!("resolved config {}", serde_json::to_string(&cfg)?);
    match &cli.command {
        Command::Config => {
            println!("{}", cfg.to_json());
            Ok(())
        }
        Command::Sample(a) => cmd_sample(&cfg, a),
        Command::Voxelize(a) => cmd_voxelize(&cfg, a),
        Command::Extract(a) => cmd_extract(&cfg, a),
        Command::Render(a) => cmd_render(&cfg, a),
        Command::GtVideo(a) => cmd_gt_video(&cfg, a),
        Command::Warp(a) => cmd_warp(&cfg, a),
        Command::Metrics(a) => cmd_metrics(a),
        Command::Uturn(a) => cmd_uturn(&cfg, a),
    }
}

fn style_params(cfg: &PipelineConfig) -> StyleParams {
    StyleParams {
        seed: cfg.seed,
        brightness: cfg.style.brightness,
        texture_cell: cfg.style.texture_cell,
    }
}

fn cmd_sample(cfg: &PipelineConfig, a: &SampleArgs) -> Result<()> {
    if cfg.scene.elevation.is_some() {
        bail!("`sample` writes the bundled scene; unset scene.elevation and scene.semantics");
    }
    let scene = load_scene(cfg)?;
    let out = &a.out;
    create_dir(out)?;
    let palette = scene.registry.palette();
    write_with(&out.join("elevation.pfm"), |p| pfm::save_pfm(p, &scene.field.elevation_raster()))?;
    write_with(&out.join("semantics.png"), |p| {
        png::save_semantics(p, &scene.field.semantics_raster(), &palette)
    })?;
    let satellite = scene.satellite.as_ref().expect("sample has a satellite image");
    write_with(&out.join("satellite.png"), |p| png::save_rgb(p, satellite))?;
    write_text(&out.join("registry.json"), &(scene.registry.to_json() + "\n"))?;

    let config = serde_json::json!({
        "scene": {
            "elevation": "elevation.pfm",
            "semantics": "semantics.png",
            "satellite": "satellite.png",
            "registry": "registry.json",
            "cell_size": scene.field.cell_size(),
            "origin": scene.field.origin(),
        }
    });
    write_json(&out.join("config.json"), &config)?;

    let grid = occupancy(cfg, &scene.field)?;
    let traj = cfg.trajectory(scene.field.center())?;
    let cams = crossview_core::extraction::trajectory_cameras(&traj, cfg.render.height, cfg.render.width)?;
    let center = render_center_frame(
        &grid,
        &cams[traj.center()],
        &scene.registry,
        cfg.render.sky_radius,
        &style_params(cfg),
    )?;
    write_with(&out.join("center_rgb.png"), |p| png::save_rgb(p, &center.rgb))?;
    write_with(&out.join("center_semantics.png"), |p| {
        png::save_semantics(p, &center.semantics, &palette)
    })?;
    write_with(&out.join("center_depth.pfm"), |p| pfm::save_pfm(p, &center.depth))?;
    Ok(())
}

fn cmd_voxelize(cfg: &PipelineConfig, a: &VoxelizeArgs) -> Result<()> {
    let scene = load_scene(cfg)?;
    let grid = occupancy(cfg, &scene.field)?;
    if let Some(dir) = a.out.parent().filter(|d| !d.as_os_str().is_empty()) {
        create_dir(dir)?;
    }
    write_with(&a.out, |p| cvgx::save_grid(p, &grid))
}

#[derive(Serialize)]
struct CameraRecord {
    frame: usize,
    x: f64,
    y: f64,
    z: f64,
    heading: f64,
}

fn camera_records(result: &ExtractionResult) -> Vec<CameraRecord> {
    result
        .cameras
        .iter()
        .enumerate()
        .map(|(frame, c)| {
            let [x, y, z] = c.position();
            CameraRecord {
                frame,
                x,
                y,
                z,
                heading: c.heading(),
            }
        })
        .collect()
}

/// Extraction on the configured trajectory, labels taken from the height field.
fn run_extraction(cfg: &PipelineConfig, scene: &Scene, grid_path: Option<&Path>) -> Result<ExtractionResult> {
    let grid = match grid_path {
        Some(p) => cvgx::load_grid(p).with_context(|| format!("reading {}", p.display()))?,
        None => occupancy(cfg, &scene.field)?,
    };
    let traj = cfg.trajectory(scene.field.center())?;
    traj.ensure_inside(&scene.field)?;
    let mut result = extract(&grid, &traj, &cfg.extraction_params(), scene.registry.sky())?;
    result.gather_semantics(&scene.field, &scene.registry)?;
    result.map.validate_complete(result.cloud.len())?;
    info!(
        "extracted {} points over {} frames of {}x{}",
        result.cloud.len(),
        result.frames(),
        result.map.height(),
        result.map.width()
    );
    Ok(result)
}

fn cmd_extract(cfg: &PipelineConfig, a: &ExtractArgs) -> Result<()> {
    let scene = load_scene(cfg)?;
    let result = run_extraction(cfg, &scene, a.grid.as_deref())?;
    create_dir(&a.out)?;
    write_with(&a.out.join("cloud.ply"), |p| ply::save_ply(p, &result.cloud))?;
    write_with(&a.out.join("map.cvpm"), |p| cvpm::save_map(p, &result.map))?;
    write_json(&a.out.join("stats.json"), &result.stats)?;
    write_json(&a.out.join("cameras.json"), &camera_records(&result))?;
    Ok(())
}

fn load_extraction(dir: &Path) -> Result<(PointCloud, crossview_core::scene::PointPixelMap)> {
    let cloud_path = dir.join("cloud.ply");
    let map_path = dir.join("map.cvpm");
    let cloud = ply::load_ply(&cloud_path).with_context(|| format!("reading {}", cloud_path.display()))?;
    let map = cvpm::load_map(&map_path).with_context(|| format!("reading {}", map_path.display()))?;
    map.validate_complete(cloud.len())
        .with_context(|| format!("{} does not index {}", map_path.display(), cloud_path.display()))?;
    Ok((cloud, map))
}

fn stylized_frames(
    cfg: &PipelineConfig,
    scene: &Scene,
    cloud: &PointCloud,
    map: &crossview_core::scene::PointPixelMap,
) -> Result<(FrameSequence<Rgb>, FrameSequence<ClassId>)> {
    let rgb = stylize_points(cloud, &scene.registry, &style_params(cfg))?;
    Ok((render_map(map, &rgb)?, render_map(map, cloud.semantics())?))
}

fn write_rgb_frames(dir: &Path, prefix: &str, frames: &FrameSequence<Rgb>) -> Result<()> {
    for (t, f) in frames.frames().iter().enumerate() {
        write_with(&dir.join(frame_name(prefix, t, "png")), |p| png::save_rgb(p, f))?;
    }
    Ok(())
}

fn write_sem_frames(dir: &Path, frames: &FrameSequence<ClassId>, palette: &[Rgb]) -> Result<()> {
    for (t, f) in frames.frames().iter().enumerate() {
        write_with(&dir.join(frame_name("sem_", t, "png")), |p| png::save_semantics(p, f, palette))?;
    }
    Ok(())
}

fn cmd_render(cfg: &PipelineConfig, a: &RenderArgs) -> Result<()> {
    let scene = load_scene(cfg)?;
    let (cloud, map) = load_extraction(&a.extract)?;
    let (rgb, sem) = stylized_frames(cfg, &scene, &cloud, &map)?;
    create_dir(&a.out)?;
    write_rgb_frames(&a.out, "rgb_", &rgb)?;
    write_sem_frames(&a.out, &sem, &scene.registry.palette())?;
    if a.upsample {
        let up = upsample2x(&rgb)?;
        let dir = a.out.join("upsampled");
        create_dir(&dir)?;
        write_rgb_frames(&dir, "rgb_", &up)?;
    }
    Ok(())
}

#[derive(Serialize)]
struct ManifestFrame {
    rgb: String,
    sem: String,
    depth: String,
    camera: ManifestCamera,
}

#[derive(Serialize)]
struct ManifestCamera {
    x: f64,
    y: f64,
    heading: f64,
}

fn cmd_gt_video(cfg: &PipelineConfig, a: &GtVideoArgs) -> Result<()> {
    let scene = load_scene(cfg)?;
    let center = CenterFrame {
        rgb: png::load_rgb(&a.center_rgb).with_context(|| format!("reading {}", a.center_rgb.display()))?,
        semantics: png::load_semantics(&a.center_semantics)
            .with_context(|| format!("reading {}", a.center_semantics.display()))?,
        depth: pfm::load_pfm(&a.center_depth).with_context(|| format!("reading {}", a.center_depth.display()))?,
    };
    center.rgb.ensure_same_shape(&center.semantics)?;
    center.rgb.ensure_same_shape(&center.depth)?;
    let traj = cfg.trajectory(scene.field.center())?;
    let params = GroundTruthParams {
        epsilon: cfg.render.epsilon,
        sky_radius: cfg.render.sky_radius,
        target_height: cfg.render.camera_height,
        k: cfg.knn.k,
    };
    let video = build_ground_truth_video(&center, &traj, scene.registry.sky(), &params)?;
    info!("ground-truth video: {} points", video.extraction.cloud.len());

    create_dir(&a.out)?;
    let palette = scene.registry.palette();
    write_rgb_frames(&a.out, "rgb_", &video.rgb)?;
    write_sem_frames(&a.out, &video.semantics, &palette)?;
    let mut manifest = Vec::new();
    for (t, d) in video.depth.frames().iter().enumerate() {
        let name = frame_name("depth_", t, "pfm");
        write_with(&a.out.join(&name), |p| pfm::save_pfm(p, d))?;
        let cam = &video.extraction.cameras[t];
        let [x, y, _] = cam.position();
        manifest.push(ManifestFrame {
            rgb: frame_name("rgb_", t, "png"),
            sem: frame_name("sem_", t, "png"),
            depth: name,
            camera: ManifestCamera {
                x,
                y,
                heading: cam.heading(),
            },
        });
    }
    write_json(&a.out.join("manifest.json"), &serde_json::json!({ "frames": manifest }))?;

    if let Some(reference) = &a.reference {
        let files = frame_files(reference, "sem_")?;
        let frames = files
            .iter()
            .map(|p| png::load_semantics(p).with_context(|| format!("reading {}", p.display())))
            .collect::<Result<Vec<_>>>()?;
        let masks = misalignment_mask(&video.semantics, &FrameSequence::new(frames)?)?;
        for (t, m) in masks.frames().iter().enumerate() {
            let mask = m.map(|&w| w > 0.5);
            write_with(&a.out.join(frame_name("mask_", t, "png")), |p| png::save_mask(p, &mask))?;
        }
    }
    Ok(())
}

fn cmd_warp(cfg: &PipelineConfig, a: &WarpArgs) -> Result<()> {
    let scene = load_scene(cfg)?;
    let Some(satellite) = &scene.satellite else {
        bail!("warp needs scene.satellite");
    };
    let (cloud, map) = load_extraction(&a.extract)?;
    let warped = warp_satellite(satellite, &scene.field, &cloud, &map)?;
    create_dir(&a.out)?;
    write_rgb_frames(&a.out, "warp_", &warped.rgb)?;
    for (t, v) in warped.valid.frames().iter().enumerate() {
        write_with(&a.out.join(frame_name("valid_", t, "png")), |p| png::save_mask(p, v))?;
    }
    Ok(())
}

fn emit_report(report: &MetricReport, out: Option<&Path>) -> Result<()> {
    print!("{}", report.to_table());
    if let Some(path) = out {
        if let Some(dir) = path.parent().filter(|d| !d.as_os_str().is_empty()) {
            create_dir(dir)?;
        }
        write_text(path, &(report.to_json() + "\n"))?;
    }
    Ok(())
}

fn cmd_metrics(a: &MetricsArgs) -> Result<()> {
    let fa = frame_files(&a.a, &a.prefix)?;
    let fb = frame_files(&a.b, &a.prefix)?;
    let names = |v: &[std::path::PathBuf]| v.iter().map(|p| p.file_name().map(|n| n.to_owned())).collect::<Vec<_>>();
    if names(&fa) != names(&fb) {
        bail!("{} and {} hold different frame names", a.a.display(), a.b.display());
    }
    let seq_a = load_rgb_frames(&fa)?;
    let seq_b = load_rgb_frames(&fb)?;
    let weights = match &a.weights {
        Some(dir) => {
            let files = frame_files(dir, &a.weights_prefix)?;
            if files.len() != fa.len() {
                bail!("{} holds {} masks for {} frames", dir.display(), files.len(), fa.len());
            }
            Some(load_weight_frames(&files)?)
        }
        None => None,
    };
    let report = compare_sequences(&seq_a, &seq_b, weights.as_ref())?;
    emit_report(&report, a.out.as_deref())
}

fn cmd_uturn(cfg: &PipelineConfig, a: &UturnArgs) -> Result<()> {
    let frames = match &a.input {
        Some(dir) => {
            if a.frames.is_some() {
                bail!("--frames only applies when the sequence is generated; drop it with --input");
            }
            load_rgb_frames(&frame_files(dir, &a.prefix)?)?
        }
        None => {
            let scene = load_scene(cfg)?;
            let result = run_extraction(cfg, &scene, None)?;
            let (rgb, _) = stylized_frames(cfg, &scene, &result.cloud, &result.map)?;
            if let Some(dir) = &a.frames_out {
                create_dir(dir)?;
                write_rgb_frames(dir, &a.prefix, &rgb)?;
            }
            rgb
        }
    };
    let report = self_consistency(&frames, None)?;
    info!("u-turn report over {} pairs", report.rows.len());
    emit_report(&report, a.out.as_deref())
}

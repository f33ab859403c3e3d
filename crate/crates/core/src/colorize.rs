//! Ground-truth video construction from a single captured center frame.
//!
//! The center frame's depth is rescaled so the camera stands 3 m above the
//! ground, its pixels become colored source points, and every other frame of
//! the trajectory gets a depth map by splatting those points and diffusing
//! into the holes. Extraction over these depth maps yields the full point set;
//! points not seen from the center are colored from their nearest center
//! points (weighted RGB, voted labels) and everything is rendered back.

use std::collections::VecDeque;

use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::extraction::{extract_with_depths, render_channel, trajectory_cameras, ExtractionResult};
use crate::knn::KnnIndex;
use crate::panorama::{unproject, DepthSemanticsMap, PanoramaCamera};
use crate::scene::{norm, sub, ClassId, FrameSequence, Point3, Raster, Rgb, Trajectory};

/// Guards inverse-distance weights against coincident points (meters).
pub const WEIGHT_DELTA: f64 = 1e-6;
pub const DEFAULT_K: usize = 32;
pub const DEFAULT_TARGET_HEIGHT: f64 = 3.0;
const FILL_TOLERANCE: f64 = 1e-6;
const FILL_MAX_SWEEPS: usize = 200_000;

/// Pixel whose ray is the standing-point ray: bottom row, forward column.
pub fn nadir_pixel(height: usize, width: usize) -> (usize, usize) {
    (height - 1, width / 2)
}

/// Scales non-sky depths so the nadir pixel reads `target_height`.
pub fn normalize_depth(d: &DepthSemanticsMap, target_height: f64) -> Result<DepthSemanticsMap> {
    if !(target_height.is_finite() && target_height > 0.0) {
        return Err(Error::InvalidInput(format!("target height {target_height} must be > 0")));
    }
    let (p, q) = nadir_pixel(d.height(), d.width());
    if *d.sky().get(p, q) {
        return Err(Error::InvalidInput(format!(
            "nadir pixel ({p}, {q}) is sky; cannot normalize depth"
        )));
    }
    let nadir = *d.depth().get(p, q);
    let s = target_height / nadir;
    if s == 1.0 {
        return Ok(d.clone());
    }
    let mut out = d.scaled(s)?;
    // exact target at the reference pixel regardless of rounding in the product
    let mut depth = out.depth().clone();
    if target_height < d.sky_radius() {
        depth.set(p, q, target_height);
        out = DepthSemanticsMap::new(depth, out.semantics().clone(), out.sky().clone(), d.sky_radius())?;
    }
    Ok(out)
}

fn neighbors(pix: usize, height: usize, width: usize) -> impl Iterator<Item = usize> {
    let (p, q) = (pix / width, pix % width);
    let up = (p > 0).then(|| pix - width);
    let down = (p + 1 < height).then(|| pix + width);
    // columns wrap around the panorama seam
    let left = (width > 1).then(|| p * width + (q + width - 1) % width);
    let right = (width > 2).then(|| p * width + (q + 1) % width);
    [up, down, left, right].into_iter().flatten()
}

/// Diffusion fill. Returns the filled raster and, per pixel, the valid pixel
/// it was first reached from during breadth-first initialization.
fn diffuse(depth: &Raster<f64>, valid: &Raster<bool>) -> Result<(Raster<f64>, Vec<usize>)> {
    depth.ensure_same_shape(valid)?;
    let (h, w) = depth.shape();
    let n = h * w;
    let mut values = depth.data().to_vec();
    let mut source = vec![usize::MAX; n];
    let mut layer = vec![usize::MAX; n];
    let mut queue = VecDeque::new();
    for i in 0..n {
        if valid.data()[i] {
            if !values[i].is_finite() {
                return Err(Error::InvalidInput(format!("valid depth pixel {i} is not finite")));
            }
            source[i] = i;
            layer[i] = 0;
            queue.push_back(i);
        }
    }
    if queue.is_empty() {
        return Err(Error::InvalidInput("depth raster has no valid pixel to fill from".into()));
    }
    let holes: Vec<usize> = (0..n).filter(|&i| !valid.data()[i]).collect();
    if holes.is_empty() {
        return Ok((depth.clone(), source));
    }

    while let Some(i) = queue.pop_front() {
        for j in neighbors(i, h, w) {
            if layer[j] == usize::MAX {
                layer[j] = layer[i] + 1;
                source[j] = source[i];
                queue.push_back(j);
            }
        }
    }
    // seed each hole with the mean of its neighbors from earlier layers
    let mut order = holes.clone();
    order.sort_by_key(|&i| (layer[i], i));
    for &i in &order {
        let (mut s, mut c) = (0.0, 0usize);
        for j in neighbors(i, h, w) {
            if layer[j] < layer[i] {
                s += values[j];
                c += 1;
            }
        }
        values[i] = s / c as f64;
    }

    let extent = (holes.len() as f64).sqrt() + 1.0;
    let omega = (2.0 / (1.0 + (std::f64::consts::PI / (extent + 1.0)).sin())).min(1.95);
    for _ in 0..FILL_MAX_SWEEPS {
        let mut worst = 0.0f64;
        for &i in &holes {
            let (mut s, mut c) = (0.0, 0usize);
            for j in neighbors(i, h, w) {
                s += values[j];
                c += 1;
            }
            let old = values[i];
            let new = old + omega * (s / c as f64 - old);
            values[i] = new;
            let scale = new.abs().max(f64::MIN_POSITIVE);
            worst = worst.max((new - old).abs() / scale);
        }
        if worst < FILL_TOLERANCE {
            break;
        }
    }
    Ok((Raster::from_vec(h, w, values)?, source))
}

/// Fills invalid pixels by repeated 4-neighbor averaging (columns wrap)
/// until the largest relative change per sweep drops below 1e-6. Valid
/// pixels are returned untouched.
pub fn fill_depth_holes(depth: &Raster<f64>, valid: &Raster<bool>) -> Result<Raster<f64>> {
    diffuse(depth, valid).map(|(filled, _)| filled)
}

fn check_sources(n_sources: usize, values: usize, k: usize) -> Result<()> {
    if n_sources == 0 {
        return Err(Error::InvalidInput("kNN needs at least one source point".into()));
    }
    if values != n_sources {
        return Err(Error::ShapeMismatch(format!(
            "{values} source values for {n_sources} source points"
        )));
    }
    if k == 0 {
        return Err(Error::InvalidInput("k must be >= 1".into()));
    }
    Ok(())
}

/// Inverse-distance weighted color of the `k` nearest sources, rounded half up.
pub fn weighted_color(neighbors: &[(f64, Rgb)]) -> Rgb {
    let mut num = [0.0f64; 3];
    let mut den = 0.0f64;
    for &(d, c) in neighbors {
        let w = 1.0 / (d + WEIGHT_DELTA);
        for ch in 0..3 {
            num[ch] += w * c[ch] as f64;
        }
        den += w;
    }
    num.map(|v| (v / den + 0.5).floor().clamp(0.0, 255.0) as u8)
}

/// Majority label; ties go to the tied label seen nearest first.
/// `labels` must be sorted by distance.
pub fn vote(labels: &[ClassId]) -> ClassId {
    let mut counts: Vec<(ClassId, usize)> = Vec::new();
    for &l in labels {
        match counts.iter_mut().find(|(c, _)| *c == l) {
            Some(e) => e.1 += 1,
            None => counts.push((l, 1)),
        }
    }
    let best = counts.iter().map(|e| e.1).max().unwrap_or(0);
    // counts is in order of first (nearest) appearance
    counts
        .into_iter()
        .find(|e| e.1 == best)
        .map(|e| e.0)
        .expect("at least one label")
}

/// Colors each target from its `k` nearest sources with weights `1 / (d + 1e-6)`.
/// Targets with a preset color keep it.
pub fn knn_colorize_rgb(
    targets: &[Point3],
    preset: Option<&[Option<Rgb>]>,
    sources: &KnnIndex,
    source_rgb: &[Rgb],
    k: usize,
) -> Result<Vec<Rgb>> {
    check_sources(sources.len(), source_rgb.len(), k)?;
    if let Some(p) = preset {
        if p.len() != targets.len() {
            return Err(Error::ShapeMismatch(format!(
                "{} preset colors for {} targets",
                p.len(),
                targets.len()
            )));
        }
    }
    Ok(targets
        .par_iter()
        .enumerate()
        .map(|(i, &t)| {
            if let Some(c) = preset.and_then(|p| p[i]) {
                return c;
            }
            let nb: Vec<(f64, Rgb)> = sources
                .nearest(t, k)
                .into_iter()
                .map(|n| (n.distance, source_rgb[n.index]))
                .collect();
            weighted_color(&nb)
        })
        .collect())
}

/// Unweighted majority label among the `k` nearest sources; ties go to the
/// nearest neighbor's label.
pub fn knn_label_vote(
    targets: &[Point3],
    sources: &KnnIndex,
    source_labels: &[ClassId],
    k: usize,
) -> Result<Vec<ClassId>> {
    check_sources(sources.len(), source_labels.len(), k)?;
    Ok(targets
        .par_iter()
        .map(|&t| {
            let labels: Vec<ClassId> = sources
                .nearest(t, k)
                .into_iter()
                .map(|n| source_labels[n.index])
                .collect();
            vote(&labels)
        })
        .collect())
}

/// The captured frame at the trajectory center.
#[derive(Clone, Debug, PartialEq)]
pub struct CenterFrame {
    pub rgb: Raster<Rgb>,
    pub semantics: Raster<ClassId>,
    /// Ray lengths in arbitrary units; sky pixels are ignored.
    pub depth: Raster<f64>,
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct GroundTruthParams {
    pub epsilon: f64,
    pub sky_radius: f64,
    pub target_height: f64,
    pub k: usize,
}

impl Default for GroundTruthParams {
    fn default() -> Self {
        GroundTruthParams {
            epsilon: crate::panorama::DEFAULT_EPSILON,
            sky_radius: crate::panorama::DEFAULT_SKY_RADIUS,
            target_height: DEFAULT_TARGET_HEIGHT,
            k: DEFAULT_K,
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct GroundTruthVideo {
    pub rgb: FrameSequence<Rgb>,
    pub semantics: FrameSequence<ClassId>,
    /// Depth maps fed to extraction, in trajectory order.
    pub depth: FrameSequence<f64>,
    pub extraction: ExtractionResult,
}

/// Depth map of the center frame: sky from the semantics, depths clamped into
/// `(0, sky_radius)`, then normalized to the target camera height.
pub fn center_depth_map(center: &CenterFrame, sky: ClassId, params: &GroundTruthParams) -> Result<DepthSemanticsMap> {
    center.rgb.ensure_same_shape(&center.semantics)?;
    center.rgb.ensure_same_shape(&center.depth)?;
    let r = params.sky_radius;
    let below = r * (1.0 - f64::EPSILON);
    let skymask = center.semantics.map(|&c| c == sky);
    let mut depth = Vec::with_capacity(center.depth.len());
    for (i, (&d, &s)) in center.depth.data().iter().zip(skymask.data()).enumerate() {
        if s {
            depth.push(r);
        } else if d.is_finite() && d > 0.0 {
            depth.push(d.min(below));
        } else {
            return Err(Error::InvalidInput(format!("center depth at pixel {i} is {d}")));
        }
    }
    let (h, w) = center.depth.shape();
    let d = DepthSemanticsMap::new(Raster::from_vec(h, w, depth)?, center.semantics.clone(), skymask, r)?;
    normalize_depth(&d, params.target_height)
}

/// Splats points into a camera keeping the nearest per pixel (ties to the
/// smaller index). Returns, per pixel, the winning point index and ray length.
pub fn splat_nearest(points: &[Point3], cam: &PanoramaCamera) -> Vec<Option<(usize, f64)>> {
    let o = cam.position();
    let w = cam.width();
    let hits: Vec<Option<(usize, f64)>> = points
        .par_iter()
        .map(|&x| {
            let v = sub(x, o);
            cam.pixel_of(v).map(|(p, q)| (p * w + q, norm(v)))
        })
        .collect();
    let mut best: Vec<Option<(usize, f64)>> = vec![None; cam.height() * w];
    for (i, h) in hits.into_iter().enumerate() {
        if let Some((pix, r)) = h {
            match best[pix] {
                Some((_, br)) if br <= r => {}
                _ => best[pix] = Some((i, r)),
            }
        }
    }
    best
}

/// Depth map for a non-center frame from splatted center points plus
/// diffusion into the holes. Filled pixels reaching `sky_radius (1 - eps)`
/// become sky.
fn reprojected_depth(
    points: &[Point3],
    labels: &[ClassId],
    point_sky: &[bool],
    cam: &PanoramaCamera,
    sky: ClassId,
    params: &GroundTruthParams,
) -> Result<DepthSemanticsMap> {
    let (h, w) = (cam.height(), cam.width());
    let r_sky = params.sky_radius;
    let below = r_sky * (1.0 - f64::EPSILON);
    let splat = splat_nearest(points, cam);
    let mut depth = vec![0.0; h * w];
    let mut valid = vec![false; h * w];
    let mut class = vec![sky; h * w];
    for (pix, s) in splat.iter().enumerate() {
        if let Some((i, r)) = *s {
            valid[pix] = true;
            class[pix] = labels[i];
            depth[pix] = if point_sky[i] { r_sky } else { r.min(below) };
        }
    }
    let (filled, source) = diffuse(&Raster::from_vec(h, w, depth)?, &Raster::from_vec(h, w, valid.clone())?)?;
    let sky_threshold = r_sky * (1.0 - params.epsilon);
    let mut out_depth = filled.into_vec();
    let mut out_sky = vec![false; h * w];
    for pix in 0..h * w {
        let is_sky = if valid[pix] {
            class[pix] == sky && out_depth[pix] == r_sky
        } else {
            out_depth[pix] > sky_threshold
        };
        if is_sky {
            out_depth[pix] = r_sky;
            class[pix] = sky;
            out_sky[pix] = true;
        } else {
            out_depth[pix] = out_depth[pix].min(below);
            if !valid[pix] {
                class[pix] = class[source[pix]];
            }
        }
    }
    DepthSemanticsMap::new(
        Raster::from_vec(h, w, out_depth)?,
        Raster::from_vec(h, w, class)?,
        Raster::from_vec(h, w, out_sky)?,
        r_sky,
    )
}

/// Builds RGB and semantic frame sequences for every trajectory frame from
/// the captured center frame.
pub fn build_ground_truth_video(
    center: &CenterFrame,
    traj: &Trajectory,
    sky: ClassId,
    params: &GroundTruthParams,
) -> Result<GroundTruthVideo> {
    let (h, w) = center.rgb.shape();
    let c = traj.center();
    let cameras = trajectory_cameras(traj, h, w)?;
    let center_depth = center_depth_map(center, sky, params)?;
    let (seed, _) = unproject(&cameras[c], &center_depth, &Raster::filled(h, w, 0u32), 0)?;
    let seed_positions = seed.positions().to_vec();

    let mut depths: Vec<Option<Raster<f64>>> = vec![None; traj.len()];
    let extraction = extract_with_depths(cameras, c, params.epsilon, |t, cam| {
        let d = if t == c {
            center_depth.clone()
        } else {
            reprojected_depth(&seed_positions, seed.semantics(), seed.sky(), cam, sky, params)?
        };
        depths[t] = Some(d.depth().clone());
        Ok(d)
    })?;
    // the center frame is processed first with an empty cloud, so its pixels
    // become points 0..h*w in row-major order
    if extraction.cloud.positions()[..h * w] != seed_positions[..] {
        return Err(Error::Invariant("center frame points are not the cloud prefix".into()));
    }

    let index = KnnIndex::build(seed_positions);
    let n = extraction.cloud.len();
    let targets = &extraction.cloud.positions()[h * w..];
    let mut rgb: Vec<Rgb> = center.rgb.data().to_vec();
    rgb.extend(knn_colorize_rgb(targets, None, &index, center.rgb.data(), params.k)?);
    let mut labels: Vec<ClassId> = center.semantics.data().to_vec();
    labels.extend(knn_label_vote(targets, &index, center.semantics.data(), params.k)?);
    debug_assert_eq!(rgb.len(), n);

    let rgb_frames = render_channel(&extraction, &rgb)?;
    let sem_frames = render_channel(&extraction, &labels)?;
    Ok(GroundTruthVideo {
        rgb: rgb_frames,
        semantics: sem_frames,
        depth: FrameSequence::new(depths.into_iter().map(|d| d.expect("every frame visited")).collect())?,
        extraction,
    })
}

/// Per-pixel weight 1 where the two label sequences agree, 0 elsewhere.
pub fn misalignment_mask(
    rendered: &FrameSequence<ClassId>,
    reference: &FrameSequence<ClassId>,
) -> Result<FrameSequence<f64>> {
    rendered.ensure_same_shape(reference)?;
    let frames = rendered
        .frames()
        .iter()
        .zip(reference.frames())
        .map(|(a, b)| {
            let data = a.data().iter().zip(b.data()).map(|(x, y)| if x == y { 1.0 } else { 0.0 }).collect();
            Raster::from_vec(a.height(), a.width(), data)
        })
        .collect::<Result<Vec<_>>>()?;
    FrameSequence::new(frames)
}

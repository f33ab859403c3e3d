//! Incremental visible-point extraction.
//!
//! Frames are visited center-out. Each frame's depth map is matched against
//! the points accumulated so far (`project`); pixels left unmatched spawn new
//! points (`unproject`) that are appended to the cloud. The result maps every
//! pixel of every frame to exactly one point, so any per-point channel renders
//! to all frames consistently.

use rayon::prelude::*;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::panorama::{check_disjoint, project, unproject, zbuffer, DepthSemanticsMap, PanoramaCamera};
use crate::scene::{
    ClassId, ClassRegistry, FrameSequence, PointCloud, PointPixelMap, Raster,
    SemanticHeightField, Trajectory,
};
use crate::voxelizer::{gather_point_semantics, VoxelGrid};

/// Center-out visiting order `c, c+1, c-1, c+2, c-2, ...`; once one side
/// runs out the other side continues in sequence.
pub fn frame_order(frames: usize, center: usize) -> Result<Vec<usize>> {
    if center >= frames {
        return Err(Error::InvalidInput(format!(
            "center {center} out of range for {frames} frames"
        )));
    }
    let mut order = Vec::with_capacity(frames);
    order.push(center);
    for k in 1..frames {
        if center + k < frames {
            order.push(center + k);
        }
        if k <= center {
            order.push(center - k);
        }
    }
    Ok(order)
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct ExtractionParams {
    pub height: usize,
    pub width: usize,
    pub epsilon: f64,
    pub sky_radius: f64,
}

impl Default for ExtractionParams {
    fn default() -> Self {
        ExtractionParams {
            height: 256,
            width: 512,
            epsilon: crate::panorama::DEFAULT_EPSILON,
            sky_radius: crate::panorama::DEFAULT_SKY_RADIUS,
        }
    }
}

/// What one iteration did, recorded per trajectory frame.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct FrameStats {
    pub frame: usize,
    /// Position of this frame in the processing order.
    pub step: usize,
    /// Cloud size before the frame was processed.
    pub points_before: usize,
    pub new_points: usize,
    pub reused_pixels: usize,
    pub reuse_ratio: f64,
}

#[derive(Clone, Debug, PartialEq)]
pub struct ExtractionResult {
    pub cloud: PointCloud,
    /// Indexed by trajectory frame, not processing step.
    pub map: PointPixelMap,
    pub cameras: Vec<PanoramaCamera>,
    pub order: Vec<usize>,
    /// Indexed by trajectory frame.
    pub stats: Vec<FrameStats>,
}

impl ExtractionResult {
    /// Replaces point labels with the height-field classes under each point.
    pub fn gather_semantics(&mut self, field: &SemanticHeightField, registry: &ClassRegistry) -> Result<()> {
        let sem = gather_point_semantics(&self.cloud, field, registry)?;
        self.cloud.set_semantics(sem)
    }

    pub fn frames(&self) -> usize {
        self.map.frames()
    }
}

/// Cameras for every trajectory frame at the given raster size.
pub fn trajectory_cameras(traj: &Trajectory, height: usize, width: usize) -> Result<Vec<PanoramaCamera>> {
    (0..traj.len())
        .map(|t| PanoramaCamera::new(traj.position(t), traj.headings()[t], height, width))
        .collect()
}

/// Runs the extraction loop over `cameras` with depth maps supplied by
/// `depth_of(frame, camera)`, visiting frames center-out from `center`.
pub fn extract_with_depths<F>(
    cameras: Vec<PanoramaCamera>,
    center: usize,
    epsilon: f64,
    mut depth_of: F,
) -> Result<ExtractionResult>
where
    F: FnMut(usize, &PanoramaCamera) -> Result<DepthSemanticsMap>,
{
    let frames = cameras.len();
    let order = frame_order(frames, center)?;
    let (h, w) = match cameras.first() {
        Some(c) => (c.height(), c.width()),
        None => return Err(Error::InvalidInput("no cameras".into())),
    };
    if cameras.iter().any(|c| c.height() != h || c.width() != w) {
        return Err(Error::ShapeMismatch("cameras differ in raster size".into()));
    }

    let mut cloud = PointCloud::default();
    let mut map = PointPixelMap::zeros(frames, h, w);
    let mut stats: Vec<Option<FrameStats>> = vec![None; frames];
    for (step, &t) in order.iter().enumerate() {
        let cam = &cameras[t];
        let d = depth_of(t, cam)?;
        if d.height() != h || d.width() != w {
            return Err(Error::ShapeMismatch(format!(
                "depth map for frame {t} is {}x{}, expected {h}x{w}",
                d.height(),
                d.width()
            )));
        }
        let m = project(cloud.positions(), cam, &d, epsilon)?;
        let before = cloud.len();
        let (added, m_a) = unproject(cam, &d, &m, before)?;
        check_disjoint(&m, &m_a)?;
        let reused = m.data().iter().filter(|&&i| i != 0).count();
        let new_points = added.len();
        cloud.append(added)?;
        for ((dst, &a), &b) in map.frame_mut(t).iter_mut().zip(m.data()).zip(m_a.data()) {
            *dst = a + b;
        }
        stats[t] = Some(FrameStats {
            frame: t,
            step,
            points_before: before,
            new_points,
            reused_pixels: reused,
            reuse_ratio: reused as f64 / (h * w) as f64,
        });
    }
    map.validate_complete(cloud.len())?;
    Ok(ExtractionResult {
        cloud,
        map,
        cameras,
        order,
        stats: stats.into_iter().map(|s| s.expect("every frame visited")).collect(),
    })
}

/// Visible-point extraction against an occupancy grid. Point labels are the
/// classes of the voxels hit; see [`ExtractionResult::gather_semantics`] for
/// height-field labels.
pub fn extract(
    grid: &VoxelGrid,
    traj: &Trajectory,
    params: &ExtractionParams,
    sky: ClassId,
) -> Result<ExtractionResult> {
    let cameras = trajectory_cameras(traj, params.height, params.width)?;
    extract_with_depths(cameras, traj.center(), params.epsilon, |t, cam| {
        zbuffer(grid, cam, params.sky_radius, sky).map_err(|e| match e {
            Error::DegenerateViewpoint { x, y, z, .. } => Error::DegenerateViewpoint {
                frame: Some(t),
                x,
                y,
                z,
            },
            other => other,
        })
    })
}

/// Gathers a per-point channel into frames: pixel (t, p, q) takes `channel[M[t,p,q] - 1]`.
pub fn render_map<T: Clone + Send + Sync>(map: &PointPixelMap, channel: &[T]) -> Result<FrameSequence<T>> {
    if let Some(&bad) = map.indices().iter().find(|&&i| i == 0 || i as usize > channel.len()) {
        return Err(Error::ShapeMismatch(format!(
            "map index {bad} has no entry in a channel of {} values",
            channel.len()
        )));
    }
    let frames = (0..map.frames())
        .into_par_iter()
        .map(|t| {
            let data = map.frame(t).iter().map(|&i| channel[i as usize - 1].clone()).collect();
            Raster::from_vec(map.height(), map.width(), data)
        })
        .collect::<Result<Vec<_>>>()?;
    FrameSequence::new(frames)
}

/// Renders a per-point channel of length `|cloud|` through the extraction map.
pub fn render_channel<T: Clone + Send + Sync>(
    result: &ExtractionResult,
    channel: &[T],
) -> Result<FrameSequence<T>> {
    if channel.len() != result.cloud.len() {
        return Err(Error::ShapeMismatch(format!(
            "channel has {} values for {} points",
            channel.len(),
            result.cloud.len()
        )));
    }
    render_map(&result.map, channel)
}

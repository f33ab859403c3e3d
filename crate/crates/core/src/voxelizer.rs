//! Semantic occupancy grids built from height fields, plus the point/voxel
//! feature averaging used by voxel-based feature stages.

use std::collections::HashMap;

use crate::error::{Error, Result};
use crate::scene::{ClassId, ClassRegistry, Features, Point3, PointCloud, SemanticHeightField};

/// Default feature-voxel edge: 32 voxels per meter.
pub const FEATURE_VOXEL_SIZE: f64 = 0.03125;
pub const DEFAULT_VERTICAL_VOXEL: f64 = 0.25;

const EMPTY: u16 = u16::MAX;
/// Tolerance used when a ratio of lengths must be an integer.
const RATIO_TOL: f64 = 1e-9;

/// Occupancy grid over an axis-aligned box. Each occupied voxel carries a class.
///
/// Voxel `(i, j, k)` spans `origin + [i, j, k] * voxel_size` to
/// `origin + [i + 1, j + 1, k + 1] * voxel_size`. Occupancy is stored densely
/// so ray traversal is a single indexed load per step.
#[derive(Clone, Debug, PartialEq)]
pub struct VoxelGrid {
    dims: [usize; 3],
    voxel_size: [f64; 3],
    origin: Point3,
    cells: Vec<u16>,
    count: usize,
}

impl VoxelGrid {
    pub fn new(dims: [usize; 3], voxel_size: [f64; 3], origin: Point3) -> Result<Self> {
        if dims.iter().any(|&d| d == 0 || d > u32::MAX as usize) {
            return Err(Error::InvalidInput(format!("grid dims {dims:?} must be in [1, 2^32)")));
        }
        if voxel_size.iter().any(|s| !(s.is_finite() && *s > 0.0)) {
            return Err(Error::InvalidInput(format!("voxel size {voxel_size:?} must be > 0")));
        }
        if origin.iter().any(|o| !o.is_finite()) {
            return Err(Error::InvalidInput("grid origin must be finite".into()));
        }
        let n = dims[0]
            .checked_mul(dims[1])
            .and_then(|v| v.checked_mul(dims[2]))
            .ok_or_else(|| Error::InvalidInput(format!("grid dims {dims:?} overflow")))?;
        Ok(VoxelGrid {
            dims,
            voxel_size,
            origin,
            cells: vec![EMPTY; n],
            count: 0,
        })
    }

    pub fn dims(&self) -> [usize; 3] {
        self.dims
    }

    pub fn voxel_size(&self) -> [f64; 3] {
        self.voxel_size
    }

    pub fn origin(&self) -> Point3 {
        self.origin
    }

    /// Number of occupied voxels.
    pub fn count(&self) -> usize {
        self.count
    }

    /// Max corner of the grid box.
    pub fn upper(&self) -> Point3 {
        [
            self.origin[0] + self.dims[0] as f64 * self.voxel_size[0],
            self.origin[1] + self.dims[1] as f64 * self.voxel_size[1],
            self.origin[2] + self.dims[2] as f64 * self.voxel_size[2],
        ]
    }

    #[inline]
    fn linear(&self, v: [usize; 3]) -> usize {
        (v[2] * self.dims[1] + v[1]) * self.dims[0] + v[0]
    }

    #[inline]
    pub fn get(&self, v: [usize; 3]) -> Option<ClassId> {
        if v[0] >= self.dims[0] || v[1] >= self.dims[1] || v[2] >= self.dims[2] {
            return None;
        }
        match self.cells[self.linear(v)] {
            EMPTY => None,
            c => Some(ClassId(c)),
        }
    }

    /// Marks `v` occupied with `class`; re-inserting replaces the class.
    pub fn insert(&mut self, v: [usize; 3], class: ClassId) -> Result<()> {
        if v[0] >= self.dims[0] || v[1] >= self.dims[1] || v[2] >= self.dims[2] {
            return Err(Error::InvalidInput(format!(
                "voxel {v:?} outside grid dims {:?}",
                self.dims
            )));
        }
        if class.0 == EMPTY {
            return Err(Error::InvalidInput(format!("class id {} is reserved", EMPTY)));
        }
        let i = self.linear(v);
        if self.cells[i] == EMPTY {
            self.count += 1;
        }
        self.cells[i] = class.0;
        Ok(())
    }

    pub fn remove(&mut self, v: [usize; 3]) -> Option<ClassId> {
        let prev = self.get(v)?;
        let i = self.linear(v);
        self.cells[i] = EMPTY;
        self.count -= 1;
        Some(prev)
    }

    /// Occupied voxels in z-major, then y, then x order.
    pub fn iter(&self) -> impl Iterator<Item = ([usize; 3], ClassId)> + '_ {
        let [nx, ny, _] = self.dims;
        self.cells
            .iter()
            .enumerate()
            .filter(|(_, &c)| c != EMPTY)
            .map(move |(i, &c)| ([i % nx, (i / nx) % ny, i / (nx * ny)], ClassId(c)))
    }

    /// Voxel containing `p`, if inside the grid box (upper faces excluded).
    pub fn voxel_of(&self, p: Point3) -> Option<[usize; 3]> {
        let mut v = [0usize; 3];
        for a in 0..3 {
            let f = ((p[a] - self.origin[a]) / self.voxel_size[a]).floor();
            if !(f >= 0.0 && f < self.dims[a] as f64) {
                return None;
            }
            v[a] = f as usize;
        }
        Some(v)
    }

    /// World-space min and max corners of voxel `v`.
    pub fn voxel_bounds(&self, v: [usize; 3]) -> (Point3, Point3) {
        let mut lo = [0.0; 3];
        let mut hi = [0.0; 3];
        for a in 0..3 {
            lo[a] = self.origin[a] + v[a] as f64 * self.voxel_size[a];
            hi[a] = self.origin[a] + (v[a] + 1) as f64 * self.voxel_size[a];
        }
        (lo, hi)
    }
}

fn ceil_tol(x: f64) -> usize {
    (x - RATIO_TOL).ceil().max(0.0) as usize
}

/// Solid-column extrusion of a height field.
///
/// The grid's bottom layer (z index 0) spans `[-vertical_voxel, 0)` and is the
/// ground layer, occupied under every cell. Above it, a cell of elevation `e`
/// fills `ceil(e / vertical_voxel)` voxels, so roofs sit at
/// `ceil(e / vertical_voxel) * vertical_voxel`. Horizontally each cell splits
/// into `(cell_size / horizontal_voxel)^2` voxels, which requires `cell_size`
/// to be an integer multiple of `horizontal_voxel`.
pub fn build_occupancy(
    field: &SemanticHeightField,
    vertical_voxel: f64,
    horizontal_voxel: f64,
    max_height: f64,
) -> Result<VoxelGrid> {
    if !(vertical_voxel.is_finite() && vertical_voxel > 0.0) {
        return Err(Error::InvalidInput(format!("vertical voxel {vertical_voxel} must be > 0")));
    }
    if !(horizontal_voxel.is_finite() && horizontal_voxel > 0.0) {
        return Err(Error::InvalidInput(format!(
            "horizontal voxel {horizontal_voxel} must be > 0"
        )));
    }
    let ratio_f = field.cell_size() / horizontal_voxel;
    let ratio = ratio_f.round();
    if ratio < 1.0 || (ratio_f - ratio).abs() > RATIO_TOL * ratio_f.max(1.0) {
        return Err(Error::InvalidInput(format!(
            "horizontal voxel {horizontal_voxel} must evenly divide cell size {}",
            field.cell_size()
        )));
    }
    let ratio = ratio as usize;
    if !(max_height.is_finite() && max_height >= 0.0) {
        return Err(Error::InvalidInput(format!("max_height {max_height} must be >= 0")));
    }
    let offending: Vec<(usize, usize)> = (0..field.height())
        .flat_map(|r| (0..field.width()).map(move |c| (r, c)))
        .filter(|&(r, c)| field.elevation(r, c) > max_height * (1.0 + RATIO_TOL))
        .collect();
    if !offending.is_empty() {
        return Err(Error::ElevationTooHigh {
            max_height,
            cells: offending,
        });
    }

    let nz = 1 + ceil_tol(max_height / vertical_voxel);
    let dims = [field.width() * ratio, field.height() * ratio, nz];
    let [x_min, y_min, _, _] = field.footprint();
    let mut grid = VoxelGrid::new(
        dims,
        [horizontal_voxel, horizontal_voxel, vertical_voxel],
        [x_min, y_min, -vertical_voxel],
    )?;
    for r in 0..field.height() {
        let j0 = (field.height() - 1 - r) * ratio;
        for c in 0..field.width() {
            let i0 = c * ratio;
            let top = ceil_tol(field.elevation(r, c) / vertical_voxel).min(nz - 1);
            let class = field.class(r, c);
            for k in 0..=top {
                for j in j0..j0 + ratio {
                    for i in i0..i0 + ratio {
                        grid.insert([i, j, k], class)?;
                    }
                }
            }
        }
    }
    Ok(grid)
}

/// Mean feature per occupied voxel and the point-to-voxel assignment.
#[derive(Clone, Debug, PartialEq)]
pub struct FeatureVoxelization {
    voxel_size: f64,
    dim: usize,
    keys: Vec<[i64; 3]>,
    lookup: HashMap<[i64; 3], usize>,
    features: Vec<f64>,
    assignment: Vec<usize>,
}

impl FeatureVoxelization {
    pub fn voxel_size(&self) -> f64 {
        self.voxel_size
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    /// Number of occupied voxels.
    pub fn len(&self) -> usize {
        self.keys.len()
    }

    pub fn is_empty(&self) -> bool {
        self.keys.is_empty()
    }

    /// Integer voxel keys in order of first appearance.
    pub fn keys(&self) -> &[[i64; 3]] {
        &self.keys
    }

    pub fn feature(&self, voxel: usize) -> &[f64] {
        &self.features[voxel * self.dim..(voxel + 1) * self.dim]
    }

    /// Voxel index of each input point.
    pub fn assignment(&self) -> &[usize] {
        &self.assignment
    }

    pub fn key_of(&self, p: Point3) -> [i64; 3] {
        voxel_key(p, self.voxel_size)
    }

    pub fn lookup(&self, key: [i64; 3]) -> Option<usize> {
        self.lookup.get(&key).copied()
    }
}

fn voxel_key(p: Point3, size: f64) -> [i64; 3] {
    [
        (p[0] / size).floor() as i64,
        (p[1] / size).floor() as i64,
        (p[2] / size).floor() as i64,
    ]
}

/// Averages point features per world-anchored voxel of edge `voxel_size`.
///
/// Means are running means accumulated in point order, so a voxel whose
/// points all carry the same vector reproduces that vector bit for bit.
pub fn voxelize_features(cloud: &PointCloud, voxel_size: f64) -> Result<FeatureVoxelization> {
    if !(voxel_size.is_finite() && voxel_size > 0.0) {
        return Err(Error::InvalidInput(format!("voxel size {voxel_size} must be > 0")));
    }
    let feats = cloud
        .features()
        .ok_or_else(|| Error::InvalidInput("cloud has no feature channel".into()))?;
    let dim = feats.dim();
    let mut keys = Vec::new();
    let mut lookup = HashMap::new();
    let mut counts: Vec<usize> = Vec::new();
    let mut features: Vec<f64> = Vec::new();
    let mut assignment = Vec::with_capacity(cloud.len());
    for (i, &p) in cloud.positions().iter().enumerate() {
        let key = voxel_key(p, voxel_size);
        let v = *lookup.entry(key).or_insert_with(|| {
            keys.push(key);
            counts.push(0);
            features.extend(std::iter::repeat_n(0.0, dim));
            keys.len() - 1
        });
        counts[v] += 1;
        let n = counts[v] as f64;
        let row = feats.row(i);
        let acc = &mut features[v * dim..(v + 1) * dim];
        if counts[v] == 1 {
            acc.copy_from_slice(row);
        } else {
            for (m, &x) in acc.iter_mut().zip(row) {
                *m += (x - *m) / n;
            }
        }
        assignment.push(v);
    }
    Ok(FeatureVoxelization {
        voxel_size,
        dim,
        keys,
        lookup,
        features,
        assignment,
    })
}

/// Gives every point of `cloud` the feature of the voxel containing it.
pub fn devoxelize(vox: &FeatureVoxelization, cloud: &PointCloud) -> Result<Features> {
    let mut values = Vec::with_capacity(cloud.len() * vox.dim);
    for (i, &p) in cloud.positions().iter().enumerate() {
        let key = vox.key_of(p);
        let v = vox.lookup(key).ok_or_else(|| {
            Error::InvalidInput(format!("point {i} at {p:?} falls in unoccupied voxel {key:?}"))
        })?;
        values.extend_from_slice(vox.feature(v));
    }
    Features::new(vox.dim.max(1), values)
}

/// Class of the height-field cell under each point; sky-flagged points get sky.
pub fn gather_point_semantics(
    cloud: &PointCloud,
    field: &SemanticHeightField,
    registry: &ClassRegistry,
) -> Result<Vec<ClassId>> {
    let sky = registry.sky();
    cloud
        .positions()
        .iter()
        .zip(cloud.sky())
        .enumerate()
        .map(|(i, (p, &is_sky))| {
            if is_sky {
                return Ok(sky);
            }
            field
                .cell_at(p[0], p[1])
                .map(|(r, c)| field.class(r, c))
                .ok_or(Error::OutsideFootprint {
                    index: i,
                    x: p[0],
                    y: p[1],
                })
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn reg() -> ClassRegistry {
        ClassRegistry::default()
    }

    fn field_with(w: usize, h: usize, cell: f64, elev: Vec<f64>, sem: Vec<u16>) -> SemanticHeightField {
        SemanticHeightField::new(
            w,
            h,
            cell,
            [0.0, 0.0],
            elev,
            sem.into_iter().map(ClassId).collect(),
            &reg(),
        )
        .unwrap()
    }

    #[test]
    fn flat_field_has_only_ground_layer() {
        let f = field_with(3, 2, 1.0, vec![0.0; 6], vec![0; 6]);
        let g = build_occupancy(&f, 0.25, 1.0, 5.0).unwrap();
        assert_eq!(g.count(), 6);
        assert!(g.iter().all(|(v, c)| v[2] == 0 && c == ClassId(0)));
        assert_eq!(g.dims(), [3, 2, 21]);
    }

    #[test]
    fn two_meter_column_has_eight_voxels_above_ground() {
        let mut elev = vec![0.0; 4];
        elev[1] = 2.0;
        let f = field_with(2, 2, 1.0, elev, vec![2; 4]);
        let g = build_occupancy(&f, 0.25, 1.0, 4.0).unwrap();
        // cell (0, 1): row 0 is the top (north) row, so y index 1
        let above = g.iter().filter(|(v, _)| v[0] == 1 && v[1] == 1 && v[2] > 0).count();
        assert_eq!(above, 8);
        let roof = g.voxel_bounds([1, 1, 8]).1[2];
        assert!((roof - 2.0).abs() < 1e-12);
    }

    #[test]
    fn occupied_count_matches_per_cell_oracle() {
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        for _ in 0..20 {
            let (w, h) = (rng.gen_range(1..8), rng.gen_range(1..8));
            let cell = 1.0;
            let hv = [1.0, 0.5, 0.25][rng.gen_range(0..3)];
            let vv = [0.25, 0.3, 1.0][rng.gen_range(0..3)];
            let elev: Vec<f64> = (0..w * h).map(|_| rng.gen_range(0.0..6.0)).collect();
            let f = field_with(w, h, cell, elev.clone(), vec![1; w * h]);
            let g = build_occupancy(&f, vv, hv, 6.0).unwrap();
            let per_cell = (cell / hv).round() as usize;
            let expected: usize = elev
                .iter()
                .map(|e| ((e / vv).ceil() as usize) * per_cell * per_cell)
                .sum::<usize>()
                + w * h * per_cell * per_cell;
            assert_eq!(g.count(), expected);
        }
    }

    #[test]
    fn elevation_above_max_height_lists_cells() {
        let f = field_with(2, 1, 1.0, vec![1.0, 9.0], vec![0, 0]);
        match build_occupancy(&f, 0.25, 1.0, 5.0) {
            Err(Error::ElevationTooHigh { cells, .. }) => assert_eq!(cells, vec![(0, 1)]),
            other => panic!("unexpected {other:?}"),
        }
    }

    #[test]
    fn horizontal_voxel_must_divide_cell() {
        let f = field_with(1, 1, 1.0, vec![0.0], vec![0]);
        assert!(build_occupancy(&f, 0.25, 0.3, 1.0).is_err());
        assert!(build_occupancy(&f, 0.25, 2.0, 1.0).is_err());
    }

    #[test]
    fn raising_a_cell_never_removes_voxels() {
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        for _ in 0..20 {
            let elev: Vec<f64> = (0..16).map(|_| rng.gen_range(0.0..4.0)).collect();
            let a = build_occupancy(&field_with(4, 4, 1.0, elev.clone(), vec![3; 16]), 0.25, 0.5, 8.0)
                .unwrap();
            let mut raised = elev.clone();
            let i = rng.gen_range(0..16);
            raised[i] += rng.gen_range(0.0..4.0);
            let b = build_occupancy(&field_with(4, 4, 1.0, raised, vec![3; 16]), 0.25, 0.5, 8.0)
                .unwrap();
            assert!(a.iter().all(|(v, _)| b.get(v).is_some()));
        }
    }

    fn feature_cloud(points: Vec<Point3>, feats: Vec<f64>, dim: usize) -> PointCloud {
        let n = points.len();
        let mut c = PointCloud::new(points, vec![ClassId(0); n], vec![false; n]).unwrap();
        c.set_features(Features::new(dim, feats).unwrap()).unwrap();
        c
    }

    #[test]
    fn co_voxel_points_average() {
        let c = feature_cloud(vec![[0.001, 0.001, 0.001], [0.002, 0.002, 0.002]], vec![1.0, 3.0], 1);
        let v = voxelize_features(&c, FEATURE_VOXEL_SIZE).unwrap();
        assert_eq!(v.len(), 1);
        assert_eq!(v.feature(0), &[2.0]);
        let back = devoxelize(&v, &c).unwrap();
        assert_eq!(back.values(), &[2.0, 2.0]);
    }

    #[test]
    fn isolated_points_round_trip() {
        let c = feature_cloud(
            vec![[0.01, 0.0, 0.0], [0.5, 0.0, 0.0], [0.0, 0.9, -0.3]],
            vec![1.0, 2.0, 3.0, 4.0, 5.0, 6.0],
            2,
        );
        let v = voxelize_features(&c, FEATURE_VOXEL_SIZE).unwrap();
        assert_eq!(v.len(), 3);
        assert_eq!(devoxelize(&v, &c).unwrap(), *c.features().unwrap());
    }

    #[test]
    fn empty_cloud_gives_empty_voxelization() {
        let c = feature_cloud(vec![], vec![], 4);
        let v = voxelize_features(&c, 0.1).unwrap();
        assert!(v.is_empty());
    }

    #[test]
    fn missing_feature_channel_is_rejected() {
        let c = PointCloud::new(vec![[0.0; 3]], vec![ClassId(0)], vec![false]).unwrap();
        assert!(voxelize_features(&c, 0.1).is_err());
    }

    #[test]
    fn devoxelize_unknown_voxel_errors() {
        let c = feature_cloud(vec![[0.0; 3]], vec![1.0], 1);
        let v = voxelize_features(&c, 0.1).unwrap();
        let other = feature_cloud(vec![[5.0; 3]], vec![1.0], 1);
        assert!(devoxelize(&v, &other).is_err());
    }

    fn random_cloud(rng: &mut ChaCha8Rng, n: usize, dim: usize) -> PointCloud {
        let pts: Vec<Point3> = (0..n)
            .map(|_| [rng.gen_range(0.0..0.2), rng.gen_range(0.0..0.2), rng.gen_range(0.0..0.1)])
            .collect();
        let feats: Vec<f64> = (0..n * dim).map(|_| rng.gen_range(-10.0..10.0)).collect();
        feature_cloud(pts, feats, dim)
    }

    #[test]
    fn voxel_means_match_group_by_oracle() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let cloud = random_cloud(&mut rng, 1000, 3);
        let vox = voxelize_features(&cloud, FEATURE_VOXEL_SIZE).unwrap();
        // oracle: plain sums grouped by floor(p / size)
        let mut groups: HashMap<[i64; 3], (Vec<f64>, usize)> = HashMap::new();
        for (i, p) in cloud.positions().iter().enumerate() {
            let key = [
                (p[0] / FEATURE_VOXEL_SIZE).floor() as i64,
                (p[1] / FEATURE_VOXEL_SIZE).floor() as i64,
                (p[2] / FEATURE_VOXEL_SIZE).floor() as i64,
            ];
            let e = groups.entry(key).or_insert((vec![0.0; 3], 0));
            for d in 0..3 {
                e.0[d] += cloud.features().unwrap().row(i)[d];
            }
            e.1 += 1;
        }
        assert_eq!(groups.len(), vox.len());
        for (key, (sum, n)) in groups {
            let v = vox.lookup(key).unwrap();
            for d in 0..3 {
                assert!((vox.feature(v)[d] - sum[d] / n as f64).abs() < 1e-12);
            }
        }
        // devoxelized features are constant within each group
        let dev = devoxelize(&vox, &cloud).unwrap();
        let mut seen: HashMap<usize, Vec<f64>> = HashMap::new();
        for (i, &v) in vox.assignment().iter().enumerate() {
            let row = dev.row(i).to_vec();
            assert_eq!(seen.entry(v).or_insert_with(|| row.clone()), &row);
        }
    }

    #[test]
    fn voxelize_after_devoxelize_is_a_projection() {
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        for _ in 0..10 {
            let mut cloud = random_cloud(&mut rng, 500, 2);
            let first = voxelize_features(&cloud, FEATURE_VOXEL_SIZE).unwrap();
            let dev = devoxelize(&first, &cloud).unwrap();
            cloud.set_features(dev).unwrap();
            let second = voxelize_features(&cloud, FEATURE_VOXEL_SIZE).unwrap();
            assert_eq!(first.keys(), second.keys());
            for v in 0..first.len() {
                assert_eq!(first.feature(v), second.feature(v));
            }
        }
    }

    #[test]
    fn semantics_follow_cells_and_sky_flag_wins() {
        let r = reg();
        let f = field_with(2, 1, 1.0, vec![0.0, 5.0], vec![0, 2]);
        let cloud = PointCloud::new(
            vec![[0.1, 0.0, 0.0], [1.2, 0.1, 50.0], [1.2, 0.1, 80.0]],
            vec![ClassId(0); 3],
            vec![false, true, false],
        )
        .unwrap();
        let sem = gather_point_semantics(&cloud, &f, &r).unwrap();
        assert_eq!(sem, vec![ClassId(0), r.sky(), ClassId(2)]);
    }

    #[test]
    fn non_sky_point_outside_footprint_errors() {
        let f = field_with(1, 1, 1.0, vec![0.0], vec![0]);
        let cloud = PointCloud::new(vec![[3.0, 0.0, 0.0]], vec![ClassId(0)], vec![false]).unwrap();
        assert!(matches!(
            gather_point_semantics(&cloud, &f, &reg()),
            Err(Error::OutsideFootprint { index: 0, .. })
        ));
        let sky = PointCloud::new(vec![[300.0, 0.0, 0.0]], vec![ClassId(0)], vec![true]).unwrap();
        assert!(gather_point_semantics(&sky, &f, &reg()).is_ok());
    }

    #[test]
    fn gathered_labels_match_direct_lookup() {
        let mut rng = ChaCha8Rng::seed_from_u64(9);
        let r = reg();
        let (w, h) = (10, 7);
        let sem: Vec<u16> = (0..w * h).map(|_| rng.gen_range(0..7)).collect();
        let f = field_with(w, h, 0.5, vec![0.0; w * h], sem.clone());
        let [x0, y0, x1, y1] = f.footprint();
        let n = 1000;
        let pts: Vec<Point3> = (0..n)
            .map(|_| [rng.gen_range(x0..x1), rng.gen_range(y0..y1), rng.gen_range(0.0..3.0)])
            .collect();
        let sky: Vec<bool> = (0..n).map(|_| rng.gen_bool(0.2)).collect();
        let cloud = PointCloud::new(pts.clone(), vec![ClassId(0); n], sky.clone()).unwrap();
        let got = gather_point_semantics(&cloud, &f, &r).unwrap();
        for i in 0..n {
            let expect = if sky[i] {
                r.sky()
            } else {
                let col = ((pts[i][0] - x0) / 0.5) as usize;
                let row = ((y1 - pts[i][1]) / 0.5) as usize;
                ClassId(sem[row * w + col])
            };
            assert_eq!(got[i], expect);
            if !sky[i] {
                assert_ne!(got[i], r.sky());
            }
        }
    }
}

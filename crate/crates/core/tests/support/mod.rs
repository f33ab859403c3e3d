//! Independent oracles and randomized suites shared by the integration tests
//! and the acceptance report. Each suite returns `Ok(summary)` or
//! `Err(first failure)`.
#![allow(dead_code)]

use std::collections::HashMap;
use std::f64::consts::{FRAC_PI_2, PI, TAU};
use std::time::{Duration, Instant};

use crossview_core::colorize::{knn_colorize_rgb, knn_label_vote};
use crossview_core::extraction::{extract, render_channel, ExtractionParams, ExtractionResult};
use crossview_core::knn::KnnIndex;
use crossview_core::metrics::{mse, psnr, self_consistency, sharp_diff, ssim, PSNR_CAP};
use crossview_core::panorama::{cast_ray, check_disjoint, project, unproject, zbuffer, PanoramaCamera, RayHit};
use crossview_core::scene::{ClassId, Point3, Raster, Rgb, Trajectory};
use crossview_core::voxelizer::VoxelGrid;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

pub type Check = Result<String, String>;

pub const SKY: ClassId = ClassId(9);
pub const SKY_RADIUS: f64 = 200.0;
pub const EPSILON: f64 = 0.005;
pub const DEPTH_TOL: f64 = 1e-9;
pub const SSIM_TOL: f64 = 1e-9;
pub const SCENE_TIME_LIMIT: Duration = Duration::from_secs(10);

// ---------------------------------------------------------------------------
// scenes

/// A 32^3 street-like grid: full ground layer, random columns and a few
/// floating voxels, with 0.5 m voxels and the ground top at z = 0.
pub fn random_scene(rng: &mut ChaCha8Rng) -> VoxelGrid {
    let mut g = VoxelGrid::new([32, 32, 32], [0.5, 0.5, 0.5], [-8.0, -8.0, -0.5]).unwrap();
    let column_p = rng.gen_range(0.05..0.25);
    for x in 0..32 {
        for y in 0..32 {
            g.insert([x, y, 0], ClassId(0)).unwrap();
            if rng.gen_bool(column_p) {
                let top = rng.gen_range(1..32);
                let c = ClassId(rng.gen_range(1..6));
                for z in 1..=top {
                    g.insert([x, y, z], c).unwrap();
                }
            }
            for z in 1..32 {
                if rng.gen_bool(0.005) {
                    g.insert([x, y, z], ClassId(rng.gen_range(1..6))).unwrap();
                }
            }
        }
    }
    g
}

/// Empties the voxel holding `p` so a camera can sit there.
pub fn clear_at(g: &mut VoxelGrid, p: Point3) {
    if let Some(v) = g.voxel_of(p) {
        g.remove(v);
    }
}

pub fn random_camera_height(rng: &mut ChaCha8Rng) -> f64 {
    // off the 0.5 m voxel faces
    rng.gen_range(0..7) as f64 * 0.5 + rng.gen_range(0.1..0.4)
}

/// Straight T-frame path through a random scene with its camera voxels cleared.
pub fn scene_with_path(rng: &mut ChaCha8Rng, frames: usize, uturn: bool) -> (VoxelGrid, Trajectory) {
    let mut g = random_scene(rng);
    let center = [rng.gen_range(-3.0..3.0), rng.gen_range(-3.0..3.0)];
    let heading = rng.gen_range(-PI..PI);
    let z = random_camera_height(rng);
    let traj = if uturn {
        Trajectory::uturn(center, heading, 0.5, frames, z).unwrap()
    } else {
        Trajectory::straight(center, heading, 0.5, frames, z).unwrap()
    };
    for t in 0..traj.len() {
        clear_at(&mut g, traj.position(t));
    }
    (g, traj)
}

pub fn params(height: usize, width: usize) -> ExtractionParams {
    ExtractionParams {
        height,
        width,
        epsilon: EPSILON,
        sky_radius: SKY_RADIUS,
    }
}

pub fn single_threaded<T: Send>(f: impl FnOnce() -> T + Send) -> T {
    rayon::ThreadPoolBuilder::new().num_threads(1).build().unwrap().install(f)
}

// ---------------------------------------------------------------------------
// ray / AABB oracle

/// Entry distance of a ray into a closed box, if it meets it at `t >= 0`.
pub fn slab(o: Point3, d: Point3, lo: Point3, hi: Point3) -> Option<f64> {
    let mut t0 = 0.0f64;
    let mut t1 = f64::INFINITY;
    for a in 0..3 {
        if d[a] == 0.0 {
            if o[a] < lo[a] || o[a] > hi[a] {
                return None;
            }
        } else {
            let ta = (lo[a] - o[a]) / d[a];
            let tb = (hi[a] - o[a]) / d[a];
            t0 = t0.max(ta.min(tb));
            t1 = t1.min(ta.max(tb));
        }
    }
    (t0 <= t1).then_some(t0)
}

/// Minimum entry distance over every occupied voxel, with all classes that
/// reach that minimum within `DEPTH_TOL`.
pub fn brute_force_hit(g: &VoxelGrid, o: Point3, d: Point3) -> Option<(f64, Vec<ClassId>)> {
    let s = g.voxel_size();
    let org = g.origin();
    let mut hits: Vec<(f64, ClassId)> = Vec::new();
    for (v, c) in g.iter() {
        let lo = [0, 1, 2].map(|a| org[a] + v[a] as f64 * s[a]);
        let hi = [0, 1, 2].map(|a| org[a] + (v[a] + 1) as f64 * s[a]);
        if let Some(t) = slab(o, d, lo, hi) {
            hits.push((t, c));
        }
    }
    let best = hits.iter().map(|h| h.0).fold(f64::INFINITY, f64::min);
    if !best.is_finite() {
        return None;
    }
    let mut classes: Vec<ClassId> = hits.iter().filter(|h| h.0 <= best + DEPTH_TOL).map(|h| h.1).collect();
    classes.sort();
    classes.dedup();
    Some((best, classes))
}

fn unit_vector(rng: &mut ChaCha8Rng) -> Point3 {
    let z: f64 = rng.gen_range(-1.0..1.0);
    let phi: f64 = rng.gen_range(0.0..TAU);
    let r = (1.0 - z * z).sqrt();
    [r * phi.cos(), r * phi.sin(), z]
}

/// DDA against the brute-force minimum on `grids * rays` random cases.
pub fn zbuffer_oracle_suite(grids: usize, rays: usize, seed: u64) -> Check {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut cases = 0usize;
    let mut hits = 0usize;
    let mut ties = 0usize;
    let mut worst = 0.0f64;
    for gi in 0..grids {
        let dims = [0; 3].map(|_| rng.gen_range(4..=32usize));
        let size = [0; 3].map(|_| rng.gen_range(0.1..1.0));
        let origin = [0; 3].map(|_| rng.gen_range(-5.0..5.0));
        let mut g = VoxelGrid::new(dims, size, origin).unwrap();
        let fill = rng.gen_range(0.01..0.08);
        for x in 0..dims[0] {
            for y in 0..dims[1] {
                for z in 0..dims[2] {
                    if rng.gen_bool(fill) {
                        g.insert([x, y, z], ClassId(rng.gen_range(0..8))).unwrap();
                    }
                }
            }
        }
        let up = g.upper();
        let mut done = 0;
        while done < rays {
            let o = [0, 1, 2].map(|a| {
                let ext = up[a] - origin[a];
                rng.gen_range(origin[a] - 0.5 * ext..up[a] + 0.5 * ext)
            });
            if g.voxel_of(o).is_some_and(|v| g.get(v).is_some()) {
                continue;
            }
            let mut d = unit_vector(&mut rng);
            if rng.gen_bool(0.05) {
                // axis-parallel components exercise the zero-direction branch
                d[rng.gen_range(0..3)] = 0.0;
                let n = (d[0] * d[0] + d[1] * d[1] + d[2] * d[2]).sqrt();
                if n == 0.0 {
                    continue;
                }
                d = d.map(|c| c / n);
            }
            done += 1;
            cases += 1;
            let got = cast_ray(&g, o, d, f64::INFINITY);
            let want = brute_force_hit(&g, o, d);
            match (got, want) {
                (RayHit::Miss, None) => {}
                (RayHit::Hit { depth, class, .. }, Some((t, classes))) => {
                    let err = (depth - t).abs();
                    worst = worst.max(err);
                    if err > DEPTH_TOL || !classes.contains(&class) {
                        return Err(format!(
                            "grid {gi}: ray {o:?} {d:?}: dda ({depth}, {class:?}) vs oracle ({t}, {classes:?})"
                        ));
                    }
                    if classes.len() > 1 {
                        ties += 1;
                    }
                    hits += 1;
                }
                (got, want) => {
                    return Err(format!("grid {gi}: ray {o:?} {d:?}: dda {got:?} vs oracle {want:?}"));
                }
            }
        }
    }
    Ok(format!(
        "{cases} rays over {grids} grids, {hits} hits, max |depth error| {worst:.1e} m, {ties} exact multi-class ties"
    ))
}

// ---------------------------------------------------------------------------
// Algorithm 1 oracle

/// Pixel containing the direction of `v` from first principles:
/// azimuth measured clockwise from north relative to the heading, columns
/// spanning [-pi, pi) left to right, rows spanning elevation pi/2 to -pi/2.
pub fn oracle_pixel(heading: f64, h: usize, w: usize, v: Point3) -> (usize, usize) {
    let yaw = v[0].atan2(v[1]) - heading;
    let u = (yaw + PI) / TAU * w as f64;
    let q = (u.floor() as i64).rem_euclid(w as i64) as usize;
    let elev = v[2].atan2(v[0].hypot(v[1]));
    let p = ((FRAC_PI_2 - elev) / PI * h as f64).floor().clamp(0.0, (h - 1) as f64) as usize;
    (p, q)
}

/// Given the final cloud, replays the frames center-out and recomputes
/// every frame's mapping by exhaustive projection of the points that existed
/// before it; unmatched pixels must receive fresh indices in row-major order.
pub fn algorithm1_oracle(grid: &VoxelGrid, traj: &Trajectory, p: &ExtractionParams, r: &ExtractionResult) -> Result<usize, String> {
    let (h, w) = (p.height, p.width);
    let t_len = traj.len();
    let c = traj.center();
    let mut order = vec![c];
    for k in 1..t_len {
        if c + k < t_len {
            order.push(c + k);
        }
        if k <= c {
            order.push(c - k);
        }
    }
    if r.order != order {
        return Err(format!("order {:?}, expected {order:?}", r.order));
    }
    let pts = r.cloud.positions();
    let mut before = 0usize;
    for &t in &order {
        let cam = PanoramaCamera::new(traj.position(t), traj.headings()[t], h, w).unwrap();
        let d = zbuffer(grid, &cam, p.sky_radius, SKY).map_err(|e| e.to_string())?;
        let o = traj.position(t);
        let mut best: Vec<Option<(f64, usize)>> = vec![None; h * w];
        for (i, x) in pts[..before].iter().enumerate() {
            let v = [x[0] - o[0], x[1] - o[1], x[2] - o[2]];
            let rr = (v[0] * v[0] + v[1] * v[1] + v[2] * v[2]).sqrt();
            let (pp, qq) = oracle_pixel(traj.headings()[t], h, w, v);
            let pix = pp * w + qq;
            let dp = *d.depth().get(pp, qq);
            if rr < dp * (1.0 - p.epsilon) || rr > dp * (1.0 + p.epsilon) {
                continue;
            }
            let better = match best[pix] {
                None => true,
                Some((br, bi)) => rr < br || (rr == br && i < bi),
            };
            if better {
                best[pix] = Some((rr, i));
            }
        }
        let mut next = before;
        let got = r.map.frame(t);
        for pix in 0..h * w {
            let want = match best[pix] {
                Some((_, i)) => i as u32 + 1,
                None => {
                    next += 1;
                    let (pp, qq) = (pix / w, pix % w);
                    let dir = cam.direction(pp, qq);
                    let dd = *d.depth().get(pp, qq);
                    let x = pts.get(next - 1).ok_or_else(|| format!("frame {t}: cloud too short"))?;
                    for a in 0..3 {
                        if (x[a] - (o[a] + dd * dir[a])).abs() > DEPTH_TOL {
                            return Err(format!("frame {t} pixel {pix}: point {x:?} is not on the pixel ray"));
                        }
                    }
                    if r.cloud.semantics()[next - 1] != *d.semantics().get(pp, qq) {
                        return Err(format!("frame {t} pixel {pix}: new point has the wrong class"));
                    }
                    next as u32
                }
            };
            if got[pix] != want {
                return Err(format!("frame {t} pixel {pix}: M = {}, oracle {want}", got[pix]));
            }
        }
        before = next;
    }
    if before != pts.len() {
        return Err(format!("oracle created {before} points, extraction {}", pts.len()));
    }
    Ok(order.len() * h * w)
}

/// Algorithm 1 on `scenes` random 32^3 scenes, 64x32 frames, T = 3, single-threaded.
pub fn algorithm1_suite(scenes: usize, seed: u64) -> Check {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let p = params(32, 64);
    let mut slowest = Duration::ZERO;
    let mut entries = 0;
    for s in 0..scenes {
        let (g, traj) = scene_with_path(&mut rng, 3, false);
        let start = Instant::now();
        let r = single_threaded(|| extract(&g, &traj, &p, SKY)).map_err(|e| format!("scene {s}: {e}"))?;
        let took = start.elapsed();
        slowest = slowest.max(took);
        if took >= SCENE_TIME_LIMIT {
            return Err(format!("scene {s}: extraction took {took:?}"));
        }
        entries += algorithm1_oracle(&g, &traj, &p, &r).map_err(|e| format!("scene {s}: {e}"))?;
    }
    Ok(format!("{scenes} scenes, {entries} map entries identical, slowest extraction {slowest:.2?}"))
}

/// Runs every extraction of the randomized suites; each iteration checks
/// `m . m_a = 0` internally and aborts on violation. Also confirms the check
/// is live by feeding it an overlapping pair.
pub fn hadamard_suite(scenes: usize, seed: u64) -> Check {
    let m = Raster::from_vec(1, 3, vec![1u32, 0, 0]).unwrap();
    let m_a = Raster::from_vec(1, 3, vec![2u32, 0, 3]).unwrap();
    if check_disjoint(&m, &m_a).is_ok() {
        return Err("an overlapping pair passed the disjointness check".into());
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut iterations = 0;
    for s in 0..scenes {
        let uturn = s % 2 == 1;
        let frames = if uturn { 6 } else { 5 };
        let (g, traj) = scene_with_path(&mut rng, frames, uturn);
        let r = extract(&g, &traj, &params(32, 64), SKY).map_err(|e| format!("scene {s}: {e}"))?;
        for t in 0..r.frames() {
            if r.map.frame(t).contains(&0) {
                return Err(format!("scene {s} frame {t}: unmapped pixel"));
            }
        }
        iterations += r.frames();
    }
    Ok(format!("{iterations} iterations over {scenes} scenes without a violation"))
}

// ---------------------------------------------------------------------------
// consistency by design and round trip

pub fn consistency_suite(scenes: usize, seed: u64) -> Check {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut pixels = 0usize;
    for s in 0..scenes {
        let (g, traj) = scene_with_path(&mut rng, 5, false);
        let r = extract(&g, &traj, &params(32, 64), SKY).map_err(|e| e.to_string())?;
        let channel: Vec<Rgb> = (0..r.cloud.len()).map(|_| rng.gen()).collect();
        let frames = render_channel(&r, &channel).map_err(|e| e.to_string())?;
        let mut seen: HashMap<u32, Rgb> = HashMap::new();
        for t in 0..r.frames() {
            for (&i, &c) in r.map.frame(t).iter().zip(frames.frame(t).data()) {
                if c != channel[i as usize - 1] || *seen.entry(i).or_insert(c) != c {
                    return Err(format!("scene {s} frame {t}: point {i} rendered inconsistently"));
                }
                pixels += 1;
            }
        }
    }
    let mut uturn_pairs = 0;
    for s in 0..scenes {
        let (g, traj) = scene_with_path(&mut rng, 8, true);
        let r = extract(&g, &traj, &params(32, 64), SKY).map_err(|e| e.to_string())?;
        let channel: Vec<Rgb> = (0..r.cloud.len()).map(|_| rng.gen()).collect();
        let frames = render_channel(&r, &channel).map_err(|e| e.to_string())?;
        let report = self_consistency(&frames, None).map_err(|e| e.to_string())?;
        let mean = report.mean.ok_or("empty u-turn report")?;
        if mean.mse != 0.0 || report.rows.iter().any(|row| row.metrics.map_or(true, |m| m.mse != 0.0)) {
            return Err(format!("u-turn scene {s}: mean MSE {}", mean.mse));
        }
        uturn_pairs += report.rows.len();
    }
    Ok(format!(
        "{pixels} pixels bit-identical per index; {uturn_pairs} u-turn pairs over {scenes} scenes with MSE 0"
    ))
}

pub fn round_trip_suite(scenes: usize, cameras: usize, seed: u64) -> Check {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut pixels = 0;
    for s in 0..scenes {
        let mut g = random_scene(&mut rng);
        let mut done = 0;
        while done < cameras {
            let pos = [rng.gen_range(-7.5..7.5), rng.gen_range(-7.5..7.5), random_camera_height(&mut rng)];
            clear_at(&mut g, pos);
            let (h, w) = (rng.gen_range(8..=32), 2 * rng.gen_range(8..=32));
            let cam = PanoramaCamera::new(pos, rng.gen_range(-PI..PI), h, w).unwrap();
            let d = zbuffer(&g, &cam, SKY_RADIUS, SKY).map_err(|e| e.to_string())?;
            let zeros = Raster::filled(h, w, 0u32);
            let (pts, m_a) = unproject(&cam, &d, &zeros, 0).map_err(|e| e.to_string())?;
            let m = project(pts.positions(), &cam, &d, EPSILON).map_err(|e| e.to_string())?;
            if m != m_a {
                let bad = m.data().iter().zip(m_a.data()).filter(|(a, b)| a != b).count();
                return Err(format!("scene {s} camera {done}: {bad} of {} pixels differ", h * w));
            }
            pixels += h * w;
            done += 1;
        }
    }
    Ok(format!("{} cameras, {pixels} pixels map back to themselves", scenes * cameras))
}

// ---------------------------------------------------------------------------
// kNN oracle

/// Sources sorted by (squared distance, index), first `k`.
pub fn linear_scan(sources: &[Point3], q: Point3, k: usize) -> Vec<(f64, usize)> {
    let mut all: Vec<(f64, usize)> = sources
        .iter()
        .enumerate()
        .map(|(i, s)| {
            let d2 = (s[0] - q[0]).powi(2) + (s[1] - q[1]).powi(2) + (s[2] - q[2]).powi(2);
            (d2, i)
        })
        .collect();
    all.sort_by(|a, b| a.0.total_cmp(&b.0).then(a.1.cmp(&b.1)));
    all.truncate(k);
    all
}

pub fn oracle_color(nb: &[(f64, usize)], rgb: &[Rgb]) -> [f64; 3] {
    let mut num = [0.0; 3];
    let mut den = 0.0;
    for &(d2, i) in nb {
        let w = 1.0 / (d2.sqrt() + 1e-6);
        for c in 0..3 {
            num[c] += w * rgb[i][c] as f64;
        }
        den += w;
    }
    num.map(|v| v / den)
}

/// Most frequent label; among equally frequent labels the one whose nearest
/// occurrence comes first.
pub fn oracle_vote(nb: &[(f64, usize)], labels: &[ClassId]) -> ClassId {
    let mut best: Option<(usize, usize, ClassId)> = None;
    for (pos, &(_, i)) in nb.iter().enumerate() {
        let l = labels[i];
        let first = nb.iter().position(|&(_, j)| labels[j] == l).unwrap();
        if first != pos {
            continue;
        }
        let count = nb.iter().filter(|&&(_, j)| labels[j] == l).count();
        if best.map_or(true, |(bc, bf, _)| count > bc || (count == bc && first < bf)) {
            best = Some((count, first, l));
        }
    }
    best.unwrap().2
}

pub fn knn_suite(targets: usize, seed: u64) -> Check {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut sources: Vec<Point3> = Vec::new();
    for _ in 0..1500 {
        sources.push([0; 3].map(|_| rng.gen_range(-10.0..10.0)));
    }
    for _ in 0..500 {
        // lattice points create many distance ties
        sources.push([0; 3].map(|_| rng.gen_range(-4..=4) as f64 * 0.5));
    }
    for i in 0..100 {
        sources.push(sources[i * 7]);
    }
    let rgb: Vec<Rgb> = (0..sources.len()).map(|_| rng.gen()).collect();
    let labels: Vec<ClassId> = (0..sources.len()).map(|_| ClassId(rng.gen_range(0..4))).collect();
    let qs: Vec<Point3> = (0..targets)
        .map(|i| {
            if i % 4 == 0 {
                [0; 3].map(|_| rng.gen_range(-4..=4) as f64 * 0.25)
            } else {
                [0; 3].map(|_| rng.gen_range(-11.0..11.0))
            }
        })
        .collect();
    let index = KnnIndex::build(sources.clone());
    let mut max_dev = 0.0f64;
    let mut compared = 0;
    for k in [1usize, 4, 7, 32] {
        let colors = knn_colorize_rgb(&qs, None, &index, &rgb, k).map_err(|e| e.to_string())?;
        let votes = knn_label_vote(&qs, &index, &labels, k).map_err(|e| e.to_string())?;
        for (t, &q) in qs.iter().enumerate() {
            let nb = linear_scan(&sources, q, k);
            let want = oracle_color(&nb, &rgb);
            for c in 0..3 {
                let dev = (colors[t][c] as f64 - want[c]).abs();
                max_dev = max_dev.max(dev);
                if dev > 1.0 {
                    return Err(format!("k={k} target {t}: color {:?} vs oracle {want:?}", colors[t]));
                }
            }
            let lv = oracle_vote(&nb, &labels);
            if votes[t] != lv {
                return Err(format!("k={k} target {t}: vote {:?} vs oracle {lv:?}", votes[t]));
            }
            compared += 1;
        }
    }
    Ok(format!(
        "{compared} target queries (k = 1, 4, 7, 32), max channel deviation {max_dev:.3}, all votes equal"
    ))
}

// ---------------------------------------------------------------------------
// metrics

pub fn random_frame(rng: &mut ChaCha8Rng, h: usize, w: usize) -> Raster<Rgb> {
    Raster::from_fn(h, w, |_, _| rng.gen())
}

/// Direct per-window SSIM on Rec. 601 luma with population moments.
pub fn naive_ssim(a: &Raster<Rgb>, b: &Raster<Rgb>) -> f64 {
    let k = 8;
    let luma = |c: Rgb| 0.299 * c[0] as f64 + 0.587 * c[1] as f64 + 0.114 * c[2] as f64;
    let c1 = (0.01f64 * 255.0).powi(2);
    let c2 = (0.03f64 * 255.0).powi(2);
    let (h, w) = a.shape();
    let mut total = 0.0;
    let mut windows = 0.0;
    for p in 0..=h - k {
        for q in 0..=w - k {
            let mut xa = Vec::new();
            let mut xb = Vec::new();
            for i in p..p + k {
                for j in q..q + k {
                    xa.push(luma(*a.get(i, j)));
                    xb.push(luma(*b.get(i, j)));
                }
            }
            let n = xa.len() as f64;
            let ma = xa.iter().sum::<f64>() / n;
            let mb = xb.iter().sum::<f64>() / n;
            let va = xa.iter().map(|x| (x - ma).powi(2)).sum::<f64>() / n;
            let vb = xb.iter().map(|x| (x - mb).powi(2)).sum::<f64>() / n;
            let cov = xa.iter().zip(&xb).map(|(x, y)| (x - ma) * (y - mb)).sum::<f64>() / n;
            total += ((2.0 * ma * mb + c1) * (2.0 * cov + c2)) / ((ma * ma + mb * mb + c1) * (va + vb + c2));
            windows += 1.0;
        }
    }
    total / windows
}

pub fn metric_identity_suite(seed: u64) -> Check {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let e = |e: crossview_core::Error| e.to_string();
    for _ in 0..20 {
        let (h, w) = (rng.gen_range(8..40), rng.gen_range(8..40));
        let x = random_frame(&mut rng, h, w);
        if psnr(&x, &x, None).map_err(e)? != PSNR_CAP {
            return Err("PSNR(x, x) is not the cap".into());
        }
        let s = ssim(&x, &x, None).map_err(e)?;
        if (s - 1.0).abs() > SSIM_TOL {
            return Err(format!("SSIM(x, x) = {s}"));
        }
        if sharp_diff(&x, &x, None).map_err(e)? != PSNR_CAP {
            return Err("SharpDiff(x, x) is not the cap".into());
        }
    }
    let black = Raster::filled(16, 16, [0u8; 3]);
    let white = Raster::filled(16, 16, [255u8; 3]);
    let m = mse(&black, &white, None).map_err(e)?;
    if m != 255.0 * 255.0 {
        return Err(format!("MSE(0, 255) = {m}"));
    }
    let mut worst = 0.0f64;
    let mut fixtures = 0;
    for (h, w) in [(8, 8), (16, 16), (16, 16), (24, 40), (31, 17)] {
        for noise in [0u8, 8, 40, 255] {
            let a = random_frame(&mut rng, h, w);
            let b = Raster::from_fn(h, w, |p, q| {
                a.get(p, q).map(|v| v.saturating_add(rng.gen_range(0..=noise)))
            });
            let got = ssim(&a, &b, None).map_err(e)?;
            let want = naive_ssim(&a, &b);
            worst = worst.max((got - want).abs());
            if (got - want).abs() > SSIM_TOL {
                return Err(format!("{h}x{w} fixture: SSIM {got} vs naive {want}"));
            }
            fixtures += 1;
        }
    }
    Ok(format!(
        "PSNR/SharpDiff caps at {PSNR_CAP} dB, MSE(0,255) = 65025, SSIM vs naive on {fixtures} fixtures max |diff| {worst:.1e}"
    ))
}

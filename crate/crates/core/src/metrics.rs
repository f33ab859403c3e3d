//! Image and video quality metrics, and u-turn self-consistency.

use std::fmt::Write as _;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::scene::{FrameSequence, Raster, Rgb};

/// Reported in place of infinite PSNR or sharpness difference.
pub const PSNR_CAP: f64 = 100.0;
pub const SSIM_WINDOW: usize = 8;
const PEAK2: f64 = 255.0 * 255.0;
const C1: f64 = (0.01 * 255.0) * (0.01 * 255.0);
const C2: f64 = (0.03 * 255.0) * (0.03 * 255.0);

fn check_weights(a: (usize, usize), weights: Option<&Raster<f64>>) -> Result<()> {
    if let Some(w) = weights {
        if w.shape() != a {
            return Err(Error::ShapeMismatch(format!(
                "weights {}x{} vs frame {}x{}",
                w.height(),
                w.width(),
                a.0,
                a.1
            )));
        }
        if let Some(i) = w.data().iter().position(|x| !(x.is_finite() && *x >= 0.0)) {
            return Err(Error::InvalidInput(format!("weight {i} must be finite and >= 0")));
        }
    }
    Ok(())
}

fn weight_at(weights: Option<&Raster<f64>>, i: usize) -> f64 {
    weights.map_or(1.0, |w| w.data()[i])
}

/// Weighted mean over pixels of a per-pixel value; errors when all weights are zero.
fn weighted_mean(n: usize, weights: Option<&Raster<f64>>, value: impl Fn(usize) -> f64) -> Result<f64> {
    let mut num = 0.0;
    let mut den = 0.0;
    for i in 0..n {
        let w = weight_at(weights, i);
        if w != 0.0 {
            num += w * value(i);
            den += w;
        }
    }
    if den == 0.0 {
        return Err(Error::InvalidInput("all metric weights are zero".into()));
    }
    Ok(num / den)
}

/// Mean squared error over pixels and RGB channels, optionally pixel-weighted.
pub fn mse(a: &Raster<Rgb>, b: &Raster<Rgb>, weights: Option<&Raster<f64>>) -> Result<f64> {
    a.ensure_same_shape(b)?;
    check_weights(a.shape(), weights)?;
    weighted_mean(a.len(), weights, |i| {
        let (x, y) = (a.data()[i], b.data()[i]);
        (0..3)
            .map(|c| {
                let d = x[c] as f64 - y[c] as f64;
                d * d
            })
            .sum::<f64>()
            / 3.0
    })
}

/// `10 log10(255^2 / v)`, or the cap when `v < 255^2 * 1e-10`.
pub fn log_ratio_db(v: f64) -> f64 {
    if v < PEAK2 * 1e-10 {
        PSNR_CAP
    } else {
        10.0 * (PEAK2 / v).log10()
    }
}

pub fn psnr(a: &Raster<Rgb>, b: &Raster<Rgb>, weights: Option<&Raster<f64>>) -> Result<f64> {
    mse(a, b, weights).map(log_ratio_db)
}

/// Rec. 601 luma scaled by 1000, exact in integers.
fn luma1000(c: Rgb) -> i64 {
    299 * c[0] as i64 + 587 * c[1] as i64 + 114 * c[2] as i64
}

/// Summed-area table with a zero border row and column.
fn integral(h: usize, w: usize, v: impl Fn(usize) -> i64) -> Vec<i64> {
    let mut s = vec![0i64; (h + 1) * (w + 1)];
    for p in 0..h {
        let mut row = 0i64;
        for q in 0..w {
            row += v(p * w + q);
            s[(p + 1) * (w + 1) + q + 1] = s[p * (w + 1) + q + 1] + row;
        }
    }
    s
}

fn window_sum(s: &[i64], w: usize, p: usize, q: usize, k: usize) -> i64 {
    let stride = w + 1;
    s[(p + k) * stride + q + k] - s[p * stride + q + k] - s[(p + k) * stride + q] + s[p * stride + q]
}

/// SSIM of one window from its luma moments.
pub fn ssim_window(mu_a: f64, mu_b: f64, var_a: f64, var_b: f64, cov: f64) -> f64 {
    ((2.0 * mu_a * mu_b + C1) * (2.0 * cov + C2)) / ((mu_a * mu_a + mu_b * mu_b + C1) * (var_a + var_b + C2))
}

/// Mean SSIM over all 8x8 windows (stride 1) of the Rec. 601 luma, with
/// population statistics. With weights, each window counts with the mean
/// weight of its pixels.
pub fn ssim(a: &Raster<Rgb>, b: &Raster<Rgb>, weights: Option<&Raster<f64>>) -> Result<f64> {
    a.ensure_same_shape(b)?;
    check_weights(a.shape(), weights)?;
    let (h, w) = a.shape();
    let k = SSIM_WINDOW;
    if h < k || w < k {
        return Err(Error::InvalidInput(format!(
            "frame {h}x{w} is smaller than the {k}x{k} SSIM window"
        )));
    }
    let ya: Vec<i64> = a.data().iter().map(|&c| luma1000(c)).collect();
    let yb: Vec<i64> = b.data().iter().map(|&c| luma1000(c)).collect();
    let sa = integral(h, w, |i| ya[i]);
    let sb = integral(h, w, |i| yb[i]);
    let saa = integral(h, w, |i| ya[i] * ya[i]);
    let sbb = integral(h, w, |i| yb[i] * yb[i]);
    let sab = integral(h, w, |i| ya[i] * yb[i]);
    let sw: Option<Vec<f64>> = weights.map(|wt| {
        let mut s = vec![0.0; (h + 1) * (w + 1)];
        for p in 0..h {
            let mut row = 0.0;
            for q in 0..w {
                row += wt.data()[p * w + q];
                s[(p + 1) * (w + 1) + q + 1] = s[p * (w + 1) + q + 1] + row;
            }
        }
        s
    });

    let n = (k * k) as f64;
    let scale = 1000.0;
    let mut num = 0.0;
    let mut den = 0.0;
    for p in 0..=h - k {
        for q in 0..=w - k {
            let wt = match &sw {
                None => 1.0,
                Some(s) => {
                    let stride = w + 1;
                    let v = s[(p + k) * stride + q + k] - s[p * stride + q + k] - s[(p + k) * stride + q]
                        + s[p * stride + q];
                    v / n
                }
            };
            if wt == 0.0 {
                continue;
            }
            let s_a = window_sum(&sa, w, p, q, k);
            let s_b = window_sum(&sb, w, p, q, k);
            let nn = (k * k) as i64;
            // exact integer numerators of n^2 * variance
            let var_a = (nn * window_sum(&saa, w, p, q, k) - s_a * s_a) as f64;
            let var_b = (nn * window_sum(&sbb, w, p, q, k) - s_b * s_b) as f64;
            let cov = (nn * window_sum(&sab, w, p, q, k) - s_a * s_b) as f64;
            let d = n * n * scale * scale;
            let v = ssim_window(
                s_a as f64 / (n * scale),
                s_b as f64 / (n * scale),
                var_a / d,
                var_b / d,
                cov / d,
            );
            num += wt * v;
            den += wt;
        }
    }
    if den == 0.0 {
        return Err(Error::InvalidInput("all SSIM windows have zero weight".into()));
    }
    Ok(num / den)
}

/// Per pixel and channel `|dx| + |dy|` with forward differences, zero past the last row and column.
fn gradient(f: &Raster<Rgb>, p: usize, q: usize, c: usize) -> f64 {
    let v = f.get(p, q)[c] as f64;
    let dx = if q + 1 < f.width() { f.get(p, q + 1)[c] as f64 - v } else { 0.0 };
    let dy = if p + 1 < f.height() { f.get(p + 1, q)[c] as f64 - v } else { 0.0 };
    dx.abs() + dy.abs()
}

/// Mean over pixels and channels of the gradient-magnitude difference.
pub fn gradient_difference(a: &Raster<Rgb>, b: &Raster<Rgb>, weights: Option<&Raster<f64>>) -> Result<f64> {
    a.ensure_same_shape(b)?;
    check_weights(a.shape(), weights)?;
    let w = a.width();
    weighted_mean(a.len(), weights, |i| {
        let (p, q) = (i / w, i % w);
        (0..3)
            .map(|c| (gradient(a, p, q, c) - gradient(b, p, q, c)).abs())
            .sum::<f64>()
            / 3.0
    })
}

/// `10 log10(255^2 / GDL)` with the same cap as PSNR.
pub fn sharp_diff(a: &Raster<Rgb>, b: &Raster<Rgb>, weights: Option<&Raster<f64>>) -> Result<f64> {
    gradient_difference(a, b, weights).map(log_ratio_db)
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct FrameMetrics {
    pub mse: f64,
    pub psnr: f64,
    pub ssim: f64,
    pub sharp_diff: f64,
}

pub fn frame_metrics(a: &Raster<Rgb>, b: &Raster<Rgb>, weights: Option<&Raster<f64>>) -> Result<FrameMetrics> {
    let m = mse(a, b, weights)?;
    Ok(FrameMetrics {
        mse: m,
        psnr: log_ratio_db(m),
        ssim: ssim(a, b, weights)?,
        sharp_diff: sharp_diff(a, b, weights)?,
    })
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct MetricRow {
    /// Frame of the first sequence.
    pub a: usize,
    /// Frame of the second sequence (the return frame for u-turn pairs).
    pub b: usize,
    /// None when the weight mask leaves nothing to compare.
    pub metrics: Option<FrameMetrics>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct MetricReport {
    pub rows: Vec<MetricRow>,
    /// Arithmetic mean over rows with metrics.
    pub mean: Option<FrameMetrics>,
    pub weighted: bool,
}

impl MetricReport {
    fn from_rows(rows: Vec<MetricRow>, weighted: bool) -> Self {
        let used: Vec<&FrameMetrics> = rows.iter().filter_map(|r| r.metrics.as_ref()).collect();
        let mean = (!used.is_empty()).then(|| {
            let n = used.len() as f64;
            let avg = |f: fn(&FrameMetrics) -> f64| used.iter().map(|m| f(m)).sum::<f64>() / n;
            FrameMetrics {
                mse: avg(|m| m.mse),
                psnr: avg(|m| m.psnr),
                ssim: avg(|m| m.ssim),
                sharp_diff: avg(|m| m.sharp_diff),
            }
        });
        MetricReport { rows, mean, weighted }
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("report serializes")
    }

    /// Aligned plain-text table, one row per pair plus the mean.
    pub fn to_table(&self) -> String {
        let mut out = String::new();
        let _ = writeln!(
            out,
            "{:>6} {:>6} {:>12} {:>10} {:>10} {:>10}",
            "a", "b", "mse", "psnr_db", "ssim", "sharp_db"
        );
        let cells = |m: &Option<FrameMetrics>| match m {
            Some(m) => format!("{:>12.4} {:>10.4} {:>10.6} {:>10.4}", m.mse, m.psnr, m.ssim, m.sharp_diff),
            None => format!("{:>12} {:>10} {:>10} {:>10}", "-", "-", "-", "-"),
        };
        for r in &self.rows {
            let _ = writeln!(out, "{:>6} {:>6} {}", r.a, r.b, cells(&r.metrics));
        }
        let _ = writeln!(out, "{:>13} {}", "mean", cells(&self.mean));
        out
    }
}

/// Metrics between frame `t` of two sequences, for every `t`.
pub fn compare_sequences(
    a: &FrameSequence<Rgb>,
    b: &FrameSequence<Rgb>,
    weights: Option<&FrameSequence<f64>>,
) -> Result<MetricReport> {
    if a.len() != b.len() {
        return Err(Error::ShapeMismatch(format!("{} vs {} frames", a.len(), b.len())));
    }
    a.ensure_same_shape(b)?;
    if let Some(w) = weights {
        if w.len() != a.len() {
            return Err(Error::ShapeMismatch(format!("{} weight frames for {} frames", w.len(), a.len())));
        }
    }
    let pairs: Vec<(usize, usize)> = (0..a.len()).map(|t| (t, t)).collect();
    compare_pairs(&pairs, |t| Ok(a.frame(t).clone()), |t| Ok(b.frame(t).clone()), weights)
}

fn compare_pairs(
    pairs: &[(usize, usize)],
    first: impl Fn(usize) -> Result<Raster<Rgb>> + Sync,
    second: impl Fn(usize) -> Result<Raster<Rgb>> + Sync,
    weights: Option<&FrameSequence<f64>>,
) -> Result<MetricReport> {
    let rows = pairs
        .par_iter()
        .map(|&(i, j)| {
            let wt = weights.map(|w| w.frame(i));
            let (fa, fb) = (first(i)?, second(j)?);
            check_weights(fa.shape(), wt)?;
            let covered = wt.is_none_or(|w| w.data().iter().any(|&x| x > 0.0));
            let metrics = if covered { Some(frame_metrics(&fa, &fb, wt)?) } else { None };
            Ok(MetricRow { a: i, b: j, metrics })
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(MetricReport::from_rows(rows, weights.is_some()))
}

/// Frame pairs `(i, T-1-i)` that share a position on an out-and-back path.
pub fn uturn_pairs(frames: usize) -> Result<Vec<(usize, usize)>> {
    if frames % 2 != 0 || frames == 0 {
        return Err(Error::InvalidInput(format!(
            "u-turn sequences need an even, nonzero frame count, got {frames}"
        )));
    }
    Ok((0..frames / 2).map(|i| (i, frames - 1 - i)).collect())
}

/// Turns a panorama by 180 degrees: a circular shift by `W/2` columns.
pub fn direction_adjust<T: Clone>(frame: &Raster<T>) -> Result<Raster<T>> {
    if frame.width() % 2 != 0 {
        return Err(Error::InvalidInput(format!(
            "direction adjustment needs an even width, got {}",
            frame.width()
        )));
    }
    Ok(frame.roll_columns(frame.width() / 2))
}

/// Compares each outbound frame with its direction-adjusted return frame.
pub fn self_consistency(frames: &FrameSequence<Rgb>, weights: Option<&FrameSequence<f64>>) -> Result<MetricReport> {
    let pairs = uturn_pairs(frames.len())?;
    if let Some(w) = weights {
        if w.len() != frames.len() {
            return Err(Error::ShapeMismatch(format!(
                "{} weight frames for {} frames",
                w.len(),
                frames.len()
            )));
        }
    }
    compare_pairs(
        &pairs,
        |i| Ok(frames.frame(i).clone()),
        |j| direction_adjust(frames.frame(j)),
        weights,
    )
}

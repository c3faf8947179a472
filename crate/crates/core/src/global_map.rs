//! Global traversability hints over overhead rasters.
//!
//! Trajectories are rasterized into foreground masks, obstacles are turned
//! into distance-graded hint maps, and candidate paths read the map by
//! bilinear sampling. [`fit_tiny_gbpm`] is a small per-pixel logistic model
//! trained with focal loss that stands in for a segmentation network.

use std::fs;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::losses::{focal_loss_logits, logistic, FocalParams};
use crate::raster::{Mask, OverheadRaster, ProbabilityMap, Raster, RasterSpec};

pub const DEFAULT_STROKE_RADIUS: f64 = 0.5;
pub const DEFAULT_SIGMA: f64 = 2.0;
/// Spacing between map samples along a scored path, meters.
pub const SCORE_PITCH: f64 = 0.5;
/// Score of samples that fall outside the raster.
pub const OUTSIDE_SCORE: f64 = 1.0;

/// A driven path in world coordinates.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrajectoryLog {
    pub points: Vec<[f64; 2]>,
    pub timestamps: Option<Vec<f64>>,
}

impl TrajectoryLog {
    pub fn new(points: Vec<[f64; 2]>) -> Result<Self> {
        let log = Self { points, timestamps: None };
        log.validate()?;
        Ok(log)
    }

    pub fn validate(&self) -> Result<()> {
        if self.points.len() < 2 {
            return Err(Error::InvalidArgument(format!(
                "trajectory needs at least 2 points, got {}",
                self.points.len()
            )));
        }
        if self.points.iter().flatten().any(|v| !v.is_finite()) {
            return Err(Error::InvalidArgument("trajectory has non-finite coordinates".into()));
        }
        if let Some(ts) = &self.timestamps {
            if ts.len() != self.points.len() {
                return Err(Error::LengthMismatch { left: self.points.len(), right: ts.len() });
            }
        }
        Ok(())
    }

    /// Parses a `t,x,y` CSV. The `t` column may be left empty on every row.
    pub fn from_csv(text: &str) -> Result<Self> {
        let mut lines = text.lines().enumerate().filter(|(_, l)| !l.trim().is_empty());
        match lines.next() {
            Some((_, h)) if h.trim().replace(' ', "") == "t,x,y" => {}
            Some((i, h)) => {
                return Err(Error::Csv { line: i + 1, msg: format!("expected header `t,x,y`, found `{h}`") })
            }
            None => return Err(Error::Csv { line: 1, msg: "empty file".into() }),
        }
        let mut points = Vec::new();
        let mut times = Vec::new();
        for (i, line) in lines {
            let fields: Vec<&str> = line.split(',').map(str::trim).collect();
            if fields.len() != 3 {
                return Err(Error::Csv { line: i + 1, msg: format!("expected 3 fields, found {}", fields.len()) });
            }
            let num = |s: &str| {
                s.parse::<f64>().map_err(|_| Error::Csv { line: i + 1, msg: format!("`{s}` is not a number") })
            };
            points.push([num(fields[1])?, num(fields[2])?]);
            times.push(if fields[0].is_empty() { None } else { Some(num(fields[0])?) });
        }
        let timestamps = if times.iter().all(Option::is_some) {
            Some(times.into_iter().flatten().collect())
        } else if times.iter().all(Option::is_none) {
            None
        } else {
            return Err(Error::Csv { line: 0, msg: "timestamps must be all present or all empty".into() });
        };
        let log = Self { points, timestamps };
        log.validate()?;
        Ok(log)
    }

    pub fn to_csv(&self) -> String {
        let mut out = String::from("t,x,y\n");
        for (i, p) in self.points.iter().enumerate() {
            let t = self.timestamps.as_ref().map(|ts| ts[i].to_string()).unwrap_or_default();
            out.push_str(&format!("{t},{},{}\n", p[0], p[1]));
        }
        out
    }

    pub fn read(path: &Path) -> Result<Self> {
        Self::from_csv(&fs::read_to_string(path)?)
    }

    pub fn write(&self, path: &Path) -> Result<()> {
        fs::write(path, self.to_csv())?;
        Ok(())
    }
}

fn point_segment_distance(p: [f64; 2], a: [f64; 2], b: [f64; 2]) -> f64 {
    let (dx, dy) = (b[0] - a[0], b[1] - a[1]);
    let len2 = dx * dx + dy * dy;
    let t = if len2 == 0.0 { 0.0 } else { (((p[0] - a[0]) * dx + (p[1] - a[1]) * dy) / len2).clamp(0.0, 1.0) };
    let (cx, cy) = (a[0] + t * dx, a[1] + t * dy);
    (p[0] - cx).hypot(p[1] - cy)
}

/// Foreground mask of pixels whose centers lie within `radius` of any
/// trajectory segment (segments drawn as capsules).
pub fn rasterize_trajectories(logs: &[TrajectoryLog], spec: RasterSpec, radius: f64) -> Result<Mask> {
    if !(radius >= 0.0) {
        return Err(Error::InvalidArgument(format!("stroke radius {radius} must be non-negative")));
    }
    let mut mask = Raster::from_spec(spec, false)?;
    for log in logs {
        log.validate()?;
        if let Some(p) = log.points.iter().find(|p| !mask.contains(p[0], p[1])) {
            return Err(Error::OutsideRaster { x: p[0], y: p[1] });
        }
        let g = spec.georef;
        let to_px = |v: f64, o: f64| (v - o) / g.meters_per_pixel;
        let r_px = radius / g.meters_per_pixel;
        for seg in log.points.windows(2) {
            let (a, b) = (seg[0], seg[1]);
            let c_lo = (to_px(a[0].min(b[0]), g.origin_x) - r_px - 1.0).floor().max(0.0) as usize;
            let c_hi = ((to_px(a[0].max(b[0]), g.origin_x) + r_px + 1.0).ceil() as usize).min(spec.width - 1);
            let r_lo = (to_px(a[1].min(b[1]), g.origin_y) - r_px - 1.0).floor().max(0.0) as usize;
            let r_hi = ((to_px(a[1].max(b[1]), g.origin_y) + r_px + 1.0).ceil() as usize).min(spec.height - 1);
            for row in r_lo..=r_hi {
                for col in c_lo..=c_hi {
                    let (x, y) = mask.pixel_center(col, row);
                    if point_segment_distance([x, y], a, b) <= radius {
                        mask.set(col, row, true);
                    }
                }
            }
        }
    }
    Ok(mask)
}

/// Lower envelope of parabolas rooted at finite samples of `f`.
fn squared_edt_1d(f: &[f64], out: &mut [f64], v: &mut Vec<usize>, z: &mut Vec<f64>) {
    v.clear();
    z.clear();
    for (q, &fq) in f.iter().enumerate() {
        if !fq.is_finite() {
            continue;
        }
        let qf = q as f64;
        loop {
            let Some(&last) = v.last() else {
                v.push(q);
                z.push(f64::NEG_INFINITY);
                break;
            };
            let lf = last as f64;
            let s = ((fq + qf * qf) - (f[last] + lf * lf)) / (2.0 * qf - 2.0 * lf);
            if s <= *z.last().unwrap() {
                v.pop();
                z.pop();
            } else {
                v.push(q);
                z.push(s);
                break;
            }
        }
    }
    if v.is_empty() {
        out.iter_mut().for_each(|o| *o = f64::INFINITY);
        return;
    }
    let mut k = 0;
    for (q, o) in out.iter_mut().enumerate() {
        let qf = q as f64;
        while k + 1 < v.len() && z[k + 1] < qf {
            k += 1;
        }
        let d = qf - v[k] as f64;
        *o = d * d + f[v[k]];
    }
}

/// Exact Euclidean distance (meters) from every pixel center to the nearest
/// foreground pixel center, by separable squared-distance passes.
pub fn distance_transform(mask: &Mask) -> Result<Raster<f64>> {
    if !mask.cells().iter().any(|&b| b) {
        return Err(Error::EmptyMask);
    }
    let (w, h) = (mask.width(), mask.height());
    let mut grid: Vec<f64> = mask.cells().iter().map(|&b| if b { 0.0 } else { f64::INFINITY }).collect();
    let (mut v, mut z) = (Vec::new(), Vec::new());

    let mut col_in = vec![0.0; h];
    let mut col_out = vec![0.0; h];
    for c in 0..w {
        for r in 0..h {
            col_in[r] = grid[r * w + c];
        }
        squared_edt_1d(&col_in, &mut col_out, &mut v, &mut z);
        for r in 0..h {
            grid[r * w + c] = col_out[r];
        }
    }
    let mut row_out = vec![0.0; w];
    for r in 0..h {
        squared_edt_1d(&grid[r * w..(r + 1) * w], &mut row_out, &mut v, &mut z);
        grid[r * w..(r + 1) * w].copy_from_slice(&row_out);
    }
    let mpp = mask.mpp();
    Raster::from_cells(w, h, mask.georef(), grid.into_iter().map(|d| d.sqrt() * mpp).collect())
}

/// Hint cost `exp(-d / sigma)` of the distance `d` to the nearest obstacle.
pub fn synth_hint_map(obstacles: &Mask, sigma: f64) -> Result<ProbabilityMap> {
    if !(sigma > 0.0 && sigma.is_finite()) {
        return Err(Error::InvalidArgument(format!("sigma must be positive, got {sigma}")));
    }
    let dist = distance_transform(obstacles)?;
    ProbabilityMap::new(dist.map(|d| (-d / sigma).exp()))
}

pub fn polyline_length(path: &[[f64; 2]]) -> f64 {
    path.windows(2).map(|s| (s[1][0] - s[0][0]).hypot(s[1][1] - s[0][1])).sum()
}

/// `n >= 2` points equally spaced by arc length along the polyline,
/// including both ends.
pub fn resample_polyline(path: &[[f64; 2]], n: usize) -> Vec<[f64; 2]> {
    let total = polyline_length(path);
    let mut out = Vec::with_capacity(n);
    let mut seg = 0;
    let mut seg_start = 0.0;
    for i in 0..n {
        let target = if n == 1 { 0.0 } else { total * i as f64 / (n - 1) as f64 };
        loop {
            if seg + 1 >= path.len() {
                out.push(*path.last().unwrap());
                break;
            }
            let (a, b) = (path[seg], path[seg + 1]);
            let len = (b[0] - a[0]).hypot(b[1] - a[1]);
            if target <= seg_start + len || seg + 2 == path.len() {
                let t = if len > 0.0 { ((target - seg_start) / len).clamp(0.0, 1.0) } else { 0.0 };
                out.push([a[0] + t * (b[0] - a[0]), a[1] + t * (b[1] - a[1])]);
                break;
            }
            seg_start += len;
            seg += 1;
        }
    }
    out
}

/// Number of samples [`score_path`] reads for a path of this length.
pub fn score_sample_count(length: f64) -> usize {
    ((length / SCORE_PITCH).ceil() as usize).max(2)
}

/// Mean hint cost sampled along a world-frame polyline. Samples outside the
/// raster count as [`OUTSIDE_SCORE`]. An empty path scores [`OUTSIDE_SCORE`].
pub fn score_path(map: &ProbabilityMap, path: &[[f64; 2]]) -> f64 {
    if path.is_empty() {
        return OUTSIDE_SCORE;
    }
    let n = score_sample_count(polyline_length(path));
    let raster = map.raster();
    let sum: f64 =
        resample_polyline(path, n).iter().map(|p| raster.sample_bilinear(p[0], p[1]).unwrap_or(OUTSIDE_SCORE)).sum();
    (sum / n as f64).clamp(0.0, 1.0)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FitOptions {
    pub max_epochs: usize,
    pub focal: FocalParams,
    pub initial_lr: f64,
    /// Stop after this many consecutive epochs with relative improvement below `tol`.
    pub patience: usize,
    pub tol: f64,
}

impl Default for FitOptions {
    fn default() -> Self {
        Self { max_epochs: 200, focal: FocalParams::default(), initial_lr: 1.0, patience: 5, tol: 1e-6 }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct GbpmFit {
    pub map: ProbabilityMap,
    /// Batched focal loss after `i` epochs; index 0 is the initial model.
    pub loss_curve: Vec<f64>,
    /// Bias followed by one weight per standardized feature.
    pub weights: Vec<f64>,
}

/// Box mean of an image with clamped borders.
fn box_mean(img: &Raster<f64>, radius: usize) -> Vec<f64> {
    let (w, h) = (img.width(), img.height());
    let mut out = vec![0.0; w * h];
    for r in 0..h {
        for c in 0..w {
            let (r0, r1) = (r.saturating_sub(radius), (r + radius).min(h - 1));
            let (c0, c1) = (c.saturating_sub(radius), (c + radius).min(w - 1));
            let mut sum = 0.0;
            for rr in r0..=r1 {
                for cc in c0..=c1 {
                    sum += img.get(cc, rr);
                }
            }
            out[r * w + c] = sum / ((r1 - r0 + 1) * (c1 - c0 + 1)) as f64;
        }
    }
    out
}

/// Standardized local intensity features per pixel (row-major, `FEATURES` each).
fn intensity_features(overhead: &OverheadRaster) -> (Vec<f64>, usize) {
    let raw: Vec<Vec<f64>> = vec![
        overhead.cells().to_vec(),
        box_mean(overhead, 1),
        box_mean(overhead, 3),
        overhead.cells().iter().map(|v| v * v).collect(),
    ];
    let n = overhead.cells().len();
    let nf = raw.len();
    let mut out = vec![0.0; n * nf];
    for (f, col) in raw.iter().enumerate() {
        let mean = col.iter().sum::<f64>() / n as f64;
        let var = col.iter().map(|v| (v - mean) * (v - mean)).sum::<f64>() / n as f64;
        let sd = var.sqrt();
        for (i, v) in col.iter().enumerate() {
            out[i * nf + f] = if sd > 1e-12 { (v - mean) / sd } else { 0.0 };
        }
    }
    (out, nf)
}

fn logits(features: &[f64], nf: usize, weights: &[f64]) -> Vec<f64> {
    features
        .chunks_exact(nf)
        .map(|f| weights[0] + f.iter().zip(&weights[1..]).map(|(x, w)| x * w).sum::<f64>())
        .collect()
}

/// Fits per-pixel logistic regression of trajectory foreground on local
/// intensity features with focal loss, and returns `1 - P(traversable)`.
///
/// Full-batch gradient descent with step backtracking: a step that would
/// raise the loss is retried at half the rate, so the recorded curve never
/// increases.
pub fn fit_tiny_gbpm(masks: &[Mask], overhead: &OverheadRaster, opts: FitOptions) -> Result<GbpmFit> {
    let Some(first) = masks.first() else {
        return Err(Error::DegenerateMask("no training masks".into()));
    };
    let mut labels = vec![false; first.cells().len()];
    for m in masks {
        if !m.same_frame(overhead) {
            return Err(Error::GeorefMismatch(format!(
                "mask {}x{} {:?} vs overhead {}x{} {:?}",
                m.width(),
                m.height(),
                m.georef(),
                overhead.width(),
                overhead.height(),
                overhead.georef()
            )));
        }
        labels.iter_mut().zip(m.cells()).for_each(|(l, v)| *l |= *v);
    }
    let fg = labels.iter().filter(|l| **l).count();
    if fg == 0 {
        return Err(Error::DegenerateMask("mask has no foreground pixels".into()));
    }
    if fg == labels.len() {
        return Err(Error::DegenerateMask("mask has no background pixels".into()));
    }

    let (features, nf) = intensity_features(overhead);
    let mut weights = vec![0.0; nf + 1];
    let loss_at = |w: &[f64]| focal_loss_logits(&logits(&features, nf, w), &labels, opts.focal);

    let (mut loss, mut grad_logits) = loss_at(&weights)?;
    let mut curve = vec![loss];
    let mut lr = opts.initial_lr;
    let mut stalled = 0;
    for _ in 0..opts.max_epochs {
        let mut grad = vec![0.0; nf + 1];
        for (f, g) in features.chunks_exact(nf).zip(&grad_logits) {
            grad[0] += g;
            grad[1..].iter_mut().zip(f).for_each(|(acc, x)| *acc += g * x);
        }
        let mut accepted = None;
        for _ in 0..40 {
            let trial: Vec<f64> = weights.iter().zip(&grad).map(|(w, g)| w - lr * g).collect();
            let (trial_loss, trial_grad) = loss_at(&trial)?;
            if trial_loss <= loss {
                accepted = Some((trial, trial_loss, trial_grad));
                break;
            }
            lr *= 0.5;
        }
        let Some((w, l, g)) = accepted else {
            curve.push(loss);
            break;
        };
        let improvement = (loss - l) / loss.max(f64::MIN_POSITIVE);
        weights = w;
        loss = l;
        grad_logits = g;
        curve.push(loss);
        lr *= 1.5;
        stalled = if improvement < opts.tol { stalled + 1 } else { 0 };
        if stalled >= opts.patience {
            break;
        }
    }

    let cost: Vec<f64> = logits(&features, nf, &weights).iter().map(|s| 1.0 - logistic(*s)).collect();
    let map = ProbabilityMap::new(Raster::from_cells(overhead.width(), overhead.height(), overhead.georef(), cost)?)?;
    Ok(GbpmFit { map, loss_curve: curve, weights })
}

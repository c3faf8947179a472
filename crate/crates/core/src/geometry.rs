//! Camera frustum construction, depth lifting and BEV grid indexing.
//!
//! Frames:
//! * camera: z forward, x right, y down (pixels `u` grow with x, `v` with y);
//! * robot: x forward, y left, z up.
//!
//! [`Extrinsics`] maps camera-frame points into the robot frame. Image arrays
//! are stored row-major as `[v][u][...]`, so an `H x W x C` feature image is
//! indexed by `(v * W + u) * C + c`.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

const ROTATION_TOL: f64 = 1e-9;

/// Rigid transform from the camera frame to the robot frame.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Extrinsics {
    pub rotation: [[f64; 3]; 3],
    pub translation: [f64; 3],
}

impl Extrinsics {
    pub fn identity() -> Self {
        Self { rotation: [[1.0, 0.0, 0.0], [0.0, 1.0, 0.0], [0.0, 0.0, 1.0]], translation: [0.0; 3] }
    }

    /// Forward-looking camera mounted `height` meters above the robot origin:
    /// optical axis along robot x, image right along robot -y.
    pub fn forward_facing(height: f64) -> Self {
        Self { rotation: [[0.0, 0.0, 1.0], [-1.0, 0.0, 0.0], [0.0, -1.0, 0.0]], translation: [0.0, 0.0, height] }
    }

    pub fn validate(&self) -> Result<()> {
        let r = &self.rotation;
        if r.iter().flatten().chain(&self.translation).any(|v| !v.is_finite()) {
            return Err(Error::InvalidCamera("non-finite extrinsics".into()));
        }
        for i in 0..3 {
            for j in 0..3 {
                let dot: f64 = (0..3).map(|k| r[k][i] * r[k][j]).sum();
                let want = if i == j { 1.0 } else { 0.0 };
                if (dot - want).abs() > ROTATION_TOL {
                    return Err(Error::InvalidCamera(format!(
                        "rotation is not orthonormal (R^T R [{i}][{j}] = {dot})"
                    )));
                }
            }
        }
        let det = r[0][0] * (r[1][1] * r[2][2] - r[1][2] * r[2][1]) - r[0][1] * (r[1][0] * r[2][2] - r[1][2] * r[2][0])
            + r[0][2] * (r[1][0] * r[2][1] - r[1][1] * r[2][0]);
        if (det - 1.0).abs() > ROTATION_TOL {
            return Err(Error::InvalidCamera(format!("rotation determinant is {det}, expected +1")));
        }
        Ok(())
    }

    pub fn apply(&self, p: [f64; 3]) -> [f64; 3] {
        let r = &self.rotation;
        let t = &self.translation;
        [
            r[0][0] * p[0] + r[0][1] * p[1] + r[0][2] * p[2] + t[0],
            r[1][0] * p[0] + r[1][1] * p[1] + r[1][2] * p[2] + t[1],
            r[2][0] * p[0] + r[2][1] * p[1] + r[2][2] * p[2] + t[2],
        ]
    }
}

/// Pinhole intrinsics plus camera-to-robot extrinsics.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CameraModel {
    pub fx: f64,
    pub fy: f64,
    pub cx: f64,
    pub cy: f64,
    pub extrinsics: Extrinsics,
}

impl CameraModel {
    pub fn new(fx: f64, fy: f64, cx: f64, cy: f64, extrinsics: Extrinsics) -> Result<Self> {
        let cam = Self { fx, fy, cx, cy, extrinsics };
        cam.validate()?;
        Ok(cam)
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.fx > 0.0 && self.fy > 0.0) || !self.cx.is_finite() || !self.cy.is_finite() {
            return Err(Error::InvalidCamera(format!(
                "focal lengths must be positive (fx={}, fy={})",
                self.fx, self.fy
            )));
        }
        self.extrinsics.validate()
    }

    /// Camera-frame point at depth `depth` along the ray through pixel `(u, v)`.
    pub fn unproject(&self, u: f64, v: f64, depth: f64) -> [f64; 3] {
        [depth * (u - self.cx) / self.fx, depth * (v - self.cy) / self.fy, depth]
    }
}

/// Discretized BEV plane and depth lattice.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BevGridSpec {
    pub x_min: f64,
    pub x_max: f64,
    pub x_step: f64,
    pub y_min: f64,
    pub y_max: f64,
    pub y_step: f64,
    pub depth_min: f64,
    pub depth_max: f64,
    pub depth_step: f64,
}

impl Default for BevGridSpec {
    /// 20 m ahead and 5 m behind at 0.25 m, +-10 m laterally at 0.2 m,
    /// depth bins from 1 m to 20 m every 0.25 m.
    fn default() -> Self {
        Self {
            x_min: -5.0,
            x_max: 20.0,
            x_step: 0.25,
            y_min: -10.0,
            y_max: 10.0,
            y_step: 0.2,
            depth_min: 1.0,
            depth_max: 20.0,
            depth_step: 0.25,
        }
    }
}

/// A BEV cell, `x` along the robot's forward axis and `y` lateral.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct CellIndex {
    pub x: usize,
    pub y: usize,
}

impl BevGridSpec {
    pub fn validate(&self) -> Result<()> {
        let ok = self.x_step > 0.0
            && self.y_step > 0.0
            && self.depth_step > 0.0
            && self.x_max > self.x_min
            && self.y_max > self.y_min
            && self.depth_max >= self.depth_min
            && self.depth_min > 0.0;
        if ok {
            Ok(())
        } else {
            Err(Error::InvalidGrid(format!("{self:?}")))
        }
    }

    pub fn nx(&self) -> usize {
        ((self.x_max - self.x_min) / self.x_step).round() as usize
    }

    pub fn ny(&self) -> usize {
        ((self.y_max - self.y_min) / self.y_step).round() as usize
    }

    pub fn cell_count(&self) -> usize {
        self.nx() * self.ny()
    }

    /// Number of depth bins, counting both range endpoints as bin centers.
    pub fn depth_bins(&self) -> usize {
        ((self.depth_max - self.depth_min) / self.depth_step).round() as usize + 1
    }

    pub fn depth_centers(&self) -> Vec<f64> {
        (0..self.depth_bins()).map(|j| self.depth_min + self.depth_step * j as f64).collect()
    }

    /// Cell containing `(x, y)` under half-open `[low, high)` intervals.
    pub fn cell_of(&self, x: f64, y: f64) -> Option<CellIndex> {
        if !(x >= self.x_min && x < self.x_max && y >= self.y_min && y < self.y_max) {
            return None;
        }
        let ix = ((x - self.x_min) / self.x_step).floor() as usize;
        let iy = ((y - self.y_min) / self.y_step).floor() as usize;
        Some(CellIndex { x: ix.min(self.nx() - 1), y: iy.min(self.ny() - 1) })
    }

    pub fn cell_center(&self, cell: CellIndex) -> (f64, f64) {
        (self.x_min + (cell.x as f64 + 0.5) * self.x_step, self.y_min + (cell.y as f64 + 0.5) * self.y_step)
    }

    /// Row-major key used to order points by cell: `x * ny + y`.
    pub fn linear_index(&self, cell: CellIndex) -> usize {
        cell.x * self.ny() + cell.y
    }
}

/// Robot-frame 3D points for every `(v, u, depth bin)` triple.
#[derive(Debug, Clone, PartialEq)]
pub struct Frustum {
    pub width: usize,
    pub height: usize,
    pub depth_bins: usize,
    pub points: Vec<[f64; 3]>,
}

impl Frustum {
    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }

    pub fn point(&self, v: usize, u: usize, j: usize) -> [f64; 3] {
        self.points[(v * self.width + u) * self.depth_bins + j]
    }
}

pub fn make_frustum(image_w: usize, image_h: usize, cam: &CameraModel, grid: &BevGridSpec) -> Result<Frustum> {
    if image_w == 0 || image_h == 0 {
        return Err(Error::InvalidArgument(format!("image size must be at least 1x1, got {image_w}x{image_h}")));
    }
    cam.validate()?;
    grid.validate()?;
    let depths = grid.depth_centers();
    let mut points = Vec::with_capacity(image_w * image_h * depths.len());
    for v in 0..image_h {
        for u in 0..image_w {
            for &d in &depths {
                let p = cam.unproject(u as f64, v as f64, d);
                points.push(cam.extrinsics.apply(p));
            }
        }
    }
    Ok(Frustum { width: image_w, height: image_h, depth_bins: depths.len(), points })
}

/// Dense `H x W x C` per-pixel feature image.
#[derive(Debug, Clone, PartialEq)]
pub struct FeatureImage {
    pub height: usize,
    pub width: usize,
    pub channels: usize,
    pub data: Vec<f64>,
}

impl FeatureImage {
    pub fn new(height: usize, width: usize, channels: usize, data: Vec<f64>) -> Result<Self> {
        if data.len() != height * width * channels {
            return Err(Error::ShapeMismatch {
                expected: format!("{height}x{width}x{channels} = {}", height * width * channels),
                actual: format!("{} values", data.len()),
            });
        }
        Ok(Self { height, width, channels, data })
    }

    pub fn zeros(height: usize, width: usize, channels: usize) -> Self {
        Self { height, width, channels, data: vec![0.0; height * width * channels] }
    }

    pub fn pixel(&self, v: usize, u: usize) -> &[f64] {
        let start = (v * self.width + u) * self.channels;
        &self.data[start..start + self.channels]
    }
}

/// Per-pixel weights over the depth bins.
#[derive(Debug, Clone, PartialEq)]
pub struct DepthDistribution {
    pub height: usize,
    pub width: usize,
    pub bins: usize,
    pub weights: Vec<f64>,
}

impl DepthDistribution {
    /// Raw weights, checked for shape and non-negativity but not normalized.
    pub fn new(height: usize, width: usize, bins: usize, weights: Vec<f64>) -> Result<Self> {
        if weights.len() != height * width * bins {
            return Err(Error::ShapeMismatch {
                expected: format!("{height}x{width}x{bins}"),
                actual: format!("{} values", weights.len()),
            });
        }
        if let Some(w) = weights.iter().find(|w| !(**w >= 0.0) || !w.is_finite()) {
            return Err(Error::InvalidArgument(format!("depth weight {w} is negative or non-finite")));
        }
        Ok(Self { height, width, bins, weights })
    }

    /// Normalizing constructor: per-pixel softmax over the bin axis.
    pub fn from_logits(height: usize, width: usize, bins: usize, logits: &[f64]) -> Result<Self> {
        if logits.len() != height * width * bins || bins == 0 {
            return Err(Error::ShapeMismatch {
                expected: format!("{height}x{width}x{bins}"),
                actual: format!("{} values", logits.len()),
            });
        }
        let mut weights = Vec::with_capacity(logits.len());
        for px in logits.chunks_exact(bins) {
            let max = px.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
            let start = weights.len();
            weights.extend(px.iter().map(|l| (l - max).exp()));
            let total: f64 = weights[start..].iter().sum();
            weights[start..].iter_mut().for_each(|w| *w /= total);
        }
        Ok(Self { height, width, bins, weights })
    }

    pub fn uniform(height: usize, width: usize, bins: usize) -> Self {
        let w = 1.0 / bins as f64;
        Self { height, width, bins, weights: vec![w; height * width * bins] }
    }

    pub fn pixel(&self, v: usize, u: usize) -> &[f64] {
        let start = (v * self.width + u) * self.bins;
        &self.weights[start..start + self.bins]
    }
}

/// `H x W x D x C` lifted features.
#[derive(Debug, Clone, PartialEq)]
pub struct LiftedFeatures {
    pub height: usize,
    pub width: usize,
    pub bins: usize,
    pub channels: usize,
    pub data: Vec<f64>,
}

impl LiftedFeatures {
    pub fn slice(&self, v: usize, u: usize, j: usize) -> &[f64] {
        let start = ((v * self.width + u) * self.bins + j) * self.channels;
        &self.data[start..start + self.channels]
    }

    /// Sum over the depth axis, giving back an `H x W x C` image.
    pub fn depth_marginal(&self) -> FeatureImage {
        let mut out = FeatureImage::zeros(self.height, self.width, self.channels);
        let c = self.channels;
        for (px, chunk) in self.data.chunks_exact(self.bins * c).enumerate() {
            let dst = &mut out.data[px * c..(px + 1) * c];
            for slice in chunk.chunks_exact(c) {
                dst.iter_mut().zip(slice).for_each(|(d, s)| *d += s);
            }
        }
        out
    }
}

/// Outer product of each pixel's depth weights with its feature vector.
pub fn lift(features: &FeatureImage, depth: &DepthDistribution) -> Result<LiftedFeatures> {
    if features.height != depth.height || features.width != depth.width {
        return Err(Error::ShapeMismatch {
            expected: format!("features {}x{}", features.height, features.width),
            actual: format!("depth {}x{}", depth.height, depth.width),
        });
    }
    let (h, w, d, c) = (features.height, features.width, depth.bins, features.channels);
    let mut data = Vec::with_capacity(h * w * d * c);
    for v in 0..h {
        for u in 0..w {
            let f = features.pixel(v, u);
            for &weight in depth.pixel(v, u) {
                data.extend(f.iter().map(|x| weight * x));
            }
        }
    }
    Ok(LiftedFeatures { height: h, width: w, bins: d, channels: c, data })
}

/// BEV cell for every point; `None` marks points outside the grid. Height is ignored.
pub fn project_to_grid(points: &[[f64; 3]], grid: &BevGridSpec) -> Vec<Option<CellIndex>> {
    points.iter().map(|p| grid.cell_of(p[0], p[1])).collect()
}

/// Lifted feature points with precomputed BEV cells, features stored flat.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct FeaturePointCloud {
    channels: usize,
    cells: Vec<Option<CellIndex>>,
    features: Vec<f64>,
}

impl FeaturePointCloud {
    pub fn new(channels: usize) -> Self {
        Self { channels, cells: Vec::new(), features: Vec::new() }
    }

    pub fn with_capacity(channels: usize, n: usize) -> Self {
        Self { channels, cells: Vec::with_capacity(n), features: Vec::with_capacity(n * channels) }
    }

    pub fn from_parts(channels: usize, cells: Vec<Option<CellIndex>>, features: Vec<f64>) -> Result<Self> {
        if features.len() != cells.len() * channels {
            return Err(Error::ShapeMismatch {
                expected: format!("{} points x {channels} channels", cells.len()),
                actual: format!("{} values", features.len()),
            });
        }
        Ok(Self { channels, cells, features })
    }

    /// Pairs a frustum's grid projection with the matching lifted features.
    pub fn from_lifted(frustum: &Frustum, lifted: &LiftedFeatures, grid: &BevGridSpec) -> Result<Self> {
        if frustum.height != lifted.height || frustum.width != lifted.width || frustum.depth_bins != lifted.bins {
            return Err(Error::ShapeMismatch {
                expected: format!("frustum {}x{}x{}", frustum.height, frustum.width, frustum.depth_bins),
                actual: format!("lifted {}x{}x{}", lifted.height, lifted.width, lifted.bins),
            });
        }
        let cells = project_to_grid(&frustum.points, grid);
        Self::from_parts(lifted.channels, cells, lifted.data.clone())
    }

    pub fn push(&mut self, cell: Option<CellIndex>, feature: &[f64]) -> Result<()> {
        if feature.len() != self.channels {
            return Err(Error::ChannelMismatch { expected: self.channels, actual: feature.len() });
        }
        self.cells.push(cell);
        self.features.extend_from_slice(feature);
        Ok(())
    }

    pub fn channels(&self) -> usize {
        self.channels
    }

    pub fn len(&self) -> usize {
        self.cells.len()
    }

    pub fn is_empty(&self) -> bool {
        self.cells.is_empty()
    }

    pub fn cells(&self) -> &[Option<CellIndex>] {
        &self.cells
    }

    pub fn features(&self) -> &[f64] {
        &self.features
    }

    pub fn feature(&self, i: usize) -> &[f64] {
        &self.features[i * self.channels..(i + 1) * self.channels]
    }

    pub fn iter(&self) -> impl Iterator<Item = (Option<CellIndex>, &[f64])> + '_ {
        self.cells.iter().copied().zip(self.features.chunks_exact(self.channels.max(1)))
    }
}

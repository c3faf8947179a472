//! Synthetic occupancy worlds.

use std::fmt;
use std::str::FromStr;

use rand::Rng;
use rand_distr::Normal;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::raster::{Georef, Mask, OverheadRaster, Raster};
use crate::rng::seeded;

pub const DEFAULT_CELL_SIZE: f64 = 0.5;
/// Spacing of collision samples along a straight segment, meters.
pub const COLLISION_PITCH: f64 = 0.05;

const SCATTER_TARGET_DENSITY: f64 = 0.15;
const SCATTER_MAX_DENSITY: f64 = 0.30;
const CORRIDOR_HALF_WIDTH: usize = 2;
const ROOM_SIZE: usize = 12;
const DOOR_WIDTH: usize = 3;

const OVERHEAD_FREE: f64 = 0.8;
const OVERHEAD_OBSTACLE: f64 = 0.2;
const OVERHEAD_NOISE: f64 = 0.05;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum WorldKind {
    Empty,
    Corridor,
    Scatter,
    Rooms,
}

impl FromStr for WorldKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "empty" => Ok(Self::Empty),
            "corridor" => Ok(Self::Corridor),
            "scatter" => Ok(Self::Scatter),
            "rooms" => Ok(Self::Rooms),
            other => Err(Error::InvalidArgument(format!("unknown world kind `{other}`"))),
        }
    }
}

impl fmt::Display for WorldKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let s = match self {
            Self::Empty => "empty",
            Self::Corridor => "corridor",
            Self::Scatter => "scatter",
            Self::Rooms => "rooms",
        };
        f.write_str(s)
    }
}

/// Occupancy grid anchored at the world origin; `true` cells are impassable.
/// Everything outside the grid counts as impassable.
#[derive(Debug, Clone, PartialEq)]
pub struct WorldModel {
    width: usize,
    height: usize,
    cell_size: f64,
    blocked: Vec<bool>,
}

impl WorldModel {
    pub fn new(width: usize, height: usize, cell_size: f64, blocked: Vec<bool>) -> Result<Self> {
        if width == 0 || height == 0 || blocked.len() != width * height {
            return Err(Error::ShapeMismatch {
                expected: format!("{width}x{height} cells"),
                actual: format!("{} cells", blocked.len()),
            });
        }
        if !(cell_size > 0.0 && cell_size.is_finite()) {
            return Err(Error::InvalidArgument(format!("cell size must be positive, got {cell_size}")));
        }
        if blocked.iter().all(|b| *b) {
            return Err(Error::InvalidArgument("world has no free cell".into()));
        }
        Ok(Self { width, height, cell_size, blocked })
    }

    pub fn empty(width: usize, height: usize, cell_size: f64) -> Result<Self> {
        Self::new(width, height, cell_size, vec![false; width * height])
    }

    pub fn width(&self) -> usize {
        self.width
    }

    pub fn height(&self) -> usize {
        self.height
    }

    pub fn cell_size(&self) -> f64 {
        self.cell_size
    }

    /// World extent `(x_max, y_max)`; the lower corner is the origin.
    pub fn bounds(&self) -> (f64, f64) {
        (self.width as f64 * self.cell_size, self.height as f64 * self.cell_size)
    }

    pub fn idx(&self, col: usize, row: usize) -> usize {
        row * self.width + col
    }

    pub fn is_blocked(&self, col: usize, row: usize) -> bool {
        self.blocked[self.idx(col, row)]
    }

    pub fn set_blocked(&mut self, col: usize, row: usize, blocked: bool) {
        let i = self.idx(col, row);
        self.blocked[i] = blocked;
    }

    pub fn blocked_cells(&self) -> &[bool] {
        &self.blocked
    }

    pub fn impassable_count(&self) -> usize {
        self.blocked.iter().filter(|b| **b).count()
    }

    pub fn free_count(&self) -> usize {
        self.blocked.len() - self.impassable_count()
    }

    pub fn density(&self) -> f64 {
        self.impassable_count() as f64 / self.blocked.len() as f64
    }

    pub fn cell_of(&self, x: f64, y: f64) -> Option<(usize, usize)> {
        let (fc, fr) = (x / self.cell_size, y / self.cell_size);
        if !(fc >= 0.0 && fr >= 0.0) {
            return None;
        }
        let (c, r) = (fc.floor() as usize, fr.floor() as usize);
        (c < self.width && r < self.height).then_some((c, r))
    }

    pub fn cell_center(&self, col: usize, row: usize) -> [f64; 2] {
        [(col as f64 + 0.5) * self.cell_size, (row as f64 + 0.5) * self.cell_size]
    }

    pub fn contains(&self, x: f64, y: f64) -> bool {
        self.cell_of(x, y).is_some()
    }

    /// Inside the world and in a free cell.
    pub fn is_free(&self, x: f64, y: f64) -> bool {
        self.cell_of(x, y).is_some_and(|(c, r)| !self.is_blocked(c, r))
    }

    /// Every sample along the straight segment (pitch [`COLLISION_PITCH`],
    /// both ends included) is free.
    pub fn segment_free(&self, a: [f64; 2], b: [f64; 2]) -> bool {
        let len = (b[0] - a[0]).hypot(b[1] - a[1]);
        let n = (len / COLLISION_PITCH).ceil().max(1.0) as usize;
        (0..=n).all(|i| {
            let t = i as f64 / n as f64;
            self.is_free(a[0] + t * (b[0] - a[0]), a[1] + t * (b[1] - a[1]))
        })
    }

    /// Like [`segment_free`](Self::segment_free) for a square footprint of
    /// half-width `margin` centred on the segment.
    pub fn segment_clear(&self, a: [f64; 2], b: [f64; 2], margin: f64) -> bool {
        let len = (b[0] - a[0]).hypot(b[1] - a[1]);
        let n = (len / COLLISION_PITCH).ceil().max(1.0) as usize;
        (0..=n).all(|i| {
            let t = i as f64 / n as f64;
            let (x, y) = (a[0] + t * (b[0] - a[0]), a[1] + t * (b[1] - a[1]));
            [(0.0, 0.0), (-margin, -margin), (-margin, margin), (margin, -margin), (margin, margin)]
                .iter()
                .all(|(dx, dy)| self.is_free(x + dx, y + dy))
        })
    }

    /// Distance from a point to the nearest impassable cell center, searched
    /// within `radius` meters; `radius` when none is that close.
    pub fn clearance(&self, x: f64, y: f64, radius: f64) -> f64 {
        let Some((c, r)) = self.cell_of(x, y) else { return 0.0 };
        let reach = (radius / self.cell_size).ceil() as isize;
        let mut best = radius;
        for dr in -reach..=reach {
            for dc in -reach..=reach {
                let (cc, rr) = (c as isize + dc, r as isize + dr);
                let inside = cc >= 0 && rr >= 0 && (cc as usize) < self.width && (rr as usize) < self.height;
                let center = [(cc as f64 + 0.5) * self.cell_size, (rr as f64 + 0.5) * self.cell_size];
                if !inside || self.is_blocked(cc as usize, rr as usize) {
                    best = best.min((center[0] - x).hypot(center[1] - y));
                }
            }
        }
        best
    }

    pub fn georef(&self) -> Georef {
        Georef { origin_x: 0.0, origin_y: 0.0, meters_per_pixel: self.cell_size }
    }

    pub fn obstacle_mask(&self) -> Mask {
        Raster::from_cells(self.width, self.height, self.georef(), self.blocked.clone())
            .expect("world dimensions are valid")
    }

    /// Occupancy as a `[0, 1]` raster (1 = impassable), the on-disk world form.
    pub fn to_raster(&self) -> Raster<f64> {
        self.obstacle_mask().map(|b| if *b { 1.0 } else { 0.0 })
    }

    /// Inverse of [`to_raster`](Self::to_raster): cells `>= 0.5` are impassable.
    pub fn from_raster(raster: &Raster<f64>) -> Result<Self> {
        let g = raster.georef();
        if g.origin_x != 0.0 || g.origin_y != 0.0 {
            return Err(Error::GeorefMismatch(format!(
                "world rasters must be anchored at the origin, got ({}, {})",
                g.origin_x, g.origin_y
            )));
        }
        Self::new(
            raster.width(),
            raster.height(),
            g.meters_per_pixel,
            raster.cells().iter().map(|v| *v >= 0.5).collect(),
        )
    }

    /// Satellite-like intensity view: bright free ground, dark obstacles,
    /// additive Gaussian noise, clamped to `[0, 1]`.
    pub fn overhead_view(&self, seed: u64) -> OverheadRaster {
        let mut rng = seeded(seed);
        let noise = Normal::new(0.0, OVERHEAD_NOISE).expect("valid std");
        let cells = self
            .blocked
            .iter()
            .map(|b| {
                let base = if *b { OVERHEAD_OBSTACLE } else { OVERHEAD_FREE };
                (base + rng.sample(noise)).clamp(0.0, 1.0)
            })
            .collect();
        Raster::from_cells(self.width, self.height, self.georef(), cells).expect("world dimensions are valid")
    }

    /// 4-connected groups of impassable cells, in scan order of their first cell.
    pub fn obstacle_components(&self) -> Vec<Vec<(usize, usize)>> {
        let mut seen = vec![false; self.blocked.len()];
        let mut out = Vec::new();
        for start in 0..self.blocked.len() {
            if !self.blocked[start] || seen[start] {
                continue;
            }
            seen[start] = true;
            let mut comp = Vec::new();
            let mut stack = vec![start];
            while let Some(i) = stack.pop() {
                let (c, r) = (i % self.width, i / self.width);
                comp.push((c, r));
                let neighbours = [
                    (c > 0).then(|| i - 1),
                    (c + 1 < self.width).then(|| i + 1),
                    (r > 0).then(|| i - self.width),
                    (r + 1 < self.height).then(|| i + self.width),
                ];
                for j in neighbours.into_iter().flatten() {
                    if self.blocked[j] && !seen[j] {
                        seen[j] = true;
                        stack.push(j);
                    }
                }
            }
            comp.sort_unstable_by_key(|&(c, r)| (r, c));
            out.push(comp);
        }
        out
    }

    /// Copy of the world in which each obstacle component is independently
    /// dropped with probability `miss_rate`.
    pub fn with_missed_obstacles(&self, miss_rate: f64, seed: u64) -> Result<Self> {
        if !(0.0..=1.0).contains(&miss_rate) {
            return Err(Error::ProbabilityOutOfRange(miss_rate));
        }
        let mut rng = seeded(seed);
        let mut out = self.clone();
        for comp in self.obstacle_components() {
            if rng.gen_bool(miss_rate) {
                for (c, r) in comp {
                    out.set_blocked(c, r, false);
                }
            }
        }
        Ok(out)
    }
}

fn stamp_disc(world: &mut WorldModel, cx: f64, cy: f64, radius: f64) {
    let cs = world.cell_size;
    let c0 = ((cx - radius) / cs).floor().max(0.0) as usize;
    let r0 = ((cy - radius) / cs).floor().max(0.0) as usize;
    let c1 = (((cx + radius) / cs).ceil() as usize).min(world.width);
    let r1 = (((cy + radius) / cs).ceil() as usize).min(world.height);
    for r in r0..r1 {
        for c in c0..c1 {
            let [x, y] = world.cell_center(c, r);
            if (x - cx).hypot(y - cy) <= radius {
                world.set_blocked(c, r, true);
            }
        }
    }
}

/// Deterministic synthetic world of `dims = (width, height)` cells.
///
/// * `Empty`: no obstacles.
/// * `Corridor`: solid ground pierced by a winding corridor that connects
///   the left border to the right border.
/// * `Scatter`: random round obstacles up to ~15% (never above 30%) density.
/// * `Rooms`: a lattice of rooms with one door in every shared wall.
pub fn gen_world(kind: WorldKind, seed: u64, dims: (usize, usize), cell_size: f64) -> Result<WorldModel> {
    let (w, h) = dims;
    if w < 10 || h < 10 {
        return Err(Error::InvalidArgument(format!("world must be at least 10x10 cells, got {w}x{h}")));
    }
    let mut rng = seeded(seed);
    let mut world = WorldModel::empty(w, h, cell_size)?;
    match kind {
        WorldKind::Empty => {}
        WorldKind::Scatter => {
            let (xm, ym) = world.bounds();
            let mut attempts = 0;
            while world.density() < SCATTER_TARGET_DENSITY && attempts < 10_000 {
                attempts += 1;
                let before = world.blocked.clone();
                let radius = rng.gen_range(0.5..1.5);
                stamp_disc(&mut world, rng.gen_range(0.0..xm), rng.gen_range(0.0..ym), radius);
                if world.density() > SCATTER_MAX_DENSITY {
                    world.blocked = before;
                    break;
                }
            }
        }
        WorldKind::Corridor => {
            world.blocked.iter_mut().for_each(|b| *b = true);
            let hw = CORRIDOR_HALF_WIDTH;
            let lo = hw + 1;
            let hi = h - hw - 2;
            let mut center = rng.gen_range(lo..=hi);
            for c in 0..w {
                for r in center - hw..=center + hw {
                    world.set_blocked(c, r, false);
                }
                // the corridor drifts by at most one row per column, so
                // neighbouring spans always overlap
                let step: i32 = rng.gen_range(-1..=1);
                center = (center as i32 + step).clamp(lo as i32, hi as i32) as usize;
            }
        }
        WorldKind::Rooms => {
            let room = ROOM_SIZE;
            for c in (room..w).step_by(room) {
                (0..h).for_each(|r| world.set_blocked(c, r, true));
            }
            for r in (room..h).step_by(room) {
                (0..w).for_each(|c| world.set_blocked(c, r, true));
            }
            // one door per wall segment between adjacent rooms
            for c in (room..w).step_by(room) {
                for r0 in (0..h).step_by(room) {
                    let r1 = (r0 + room).min(h);
                    let span = r1 - r0;
                    if span <= DOOR_WIDTH + 1 {
                        continue;
                    }
                    let start = r0 + 1 + rng.gen_range(0..span - DOOR_WIDTH - 1);
                    (start..start + DOOR_WIDTH).for_each(|r| world.set_blocked(c, r, false));
                }
            }
            for r in (room..h).step_by(room) {
                for c0 in (0..w).step_by(room) {
                    let c1 = (c0 + room).min(w);
                    let span = c1 - c0;
                    if span <= DOOR_WIDTH + 1 {
                        continue;
                    }
                    let start = c0 + 1 + rng.gen_range(0..span - DOOR_WIDTH - 1);
                    (start..start + DOOR_WIDTH).for_each(|c| world.set_blocked(c, r, false));
                }
            }
        }
    }
    Ok(world)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn missed_obstacles_drop_whole_components() {
        let w = gen_world(WorldKind::Scatter, 4, (40, 40), 0.5).unwrap();
        let comps = w.obstacle_components();
        assert_eq!(comps.iter().map(Vec::len).sum::<usize>(), w.impassable_count());
        assert_eq!(w.with_missed_obstacles(0.0, 1).unwrap(), w);
        assert_eq!(w.with_missed_obstacles(1.0, 1).unwrap().impassable_count(), 0);
        let half = w.with_missed_obstacles(0.5, 1).unwrap();
        for comp in &comps {
            let kept: Vec<bool> = comp.iter().map(|&(c, r)| half.is_blocked(c, r)).collect();
            assert!(kept.iter().all(|k| *k == kept[0]));
        }
        assert!(w.with_missed_obstacles(1.5, 1).is_err());
    }

    #[test]
    fn empty_world_has_no_obstacles() {
        let w = gen_world(WorldKind::Empty, 42, (20, 30), 0.5).unwrap();
        assert_eq!(w.impassable_count(), 0);
        assert_eq!(w.bounds(), (10.0, 15.0));
    }

    #[test]
    fn generation_is_deterministic() {
        for kind in [WorldKind::Corridor, WorldKind::Scatter, WorldKind::Rooms] {
            let a = gen_world(kind, 5, (40, 40), 0.5).unwrap();
            let b = gen_world(kind, 5, (40, 40), 0.5).unwrap();
            assert_eq!(a, b);
        }
    }

    #[test]
    fn scatter_density_is_bounded() {
        for seed in 0..20 {
            let w = gen_world(WorldKind::Scatter, seed, (60, 60), 0.5).unwrap();
            assert!(w.density() <= 0.30);
            assert!(w.density() > 0.05);
        }
    }

    #[test]
    fn degenerate_dims_rejected() {
        assert!(gen_world(WorldKind::Empty, 0, (9, 40), 0.5).is_err());
    }

    #[test]
    fn raster_round_trip() {
        let w = gen_world(WorldKind::Rooms, 1, (30, 25), 0.5).unwrap();
        assert_eq!(WorldModel::from_raster(&w.to_raster()).unwrap(), w);
    }

    #[test]
    fn segment_and_point_queries() {
        let mut w = WorldModel::empty(10, 10, 1.0).unwrap();
        w.set_blocked(5, 5, true);
        assert!(!w.is_free(5.5, 5.5));
        assert!(!w.is_free(-0.1, 2.0));
        assert!(w.segment_free([0.5, 0.5], [9.5, 0.5]));
        assert!(!w.segment_free([0.5, 5.5], [9.5, 5.5]));
        assert!((w.clearance(2.5, 5.5, 5.0) - 3.0).abs() < 1e-12);
    }
}

//! BEV pooling: sum every lifted feature point into its grid cell.
//!
//! Two backends share one contract. [`pool_naive`] scatter-adds point by
//! point. [`pool_interval`] orders points by linearized cell index and reduces
//! each contiguous run once; the ordering only depends on geometry, so an
//! [`IntervalPlan`] can be built once per camera and reused across frames.

use std::time::Instant;

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::geometry::{BevGridSpec, CellIndex, FeaturePointCloud};
use crate::rng::seeded;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Aggregation {
    Sum,
}

/// `nx x ny x C` pooled map, stored as `(x * ny + y) * C + c`.
#[derive(Debug, Clone, PartialEq)]
pub struct BevFeatureMap {
    pub nx: usize,
    pub ny: usize,
    pub channels: usize,
    pub mode: Aggregation,
    pub data: Vec<f64>,
}

impl BevFeatureMap {
    pub fn zeros(nx: usize, ny: usize, channels: usize) -> Self {
        Self { nx, ny, channels, mode: Aggregation::Sum, data: vec![0.0; nx * ny * channels] }
    }

    pub fn cell(&self, x: usize, y: usize) -> &[f64] {
        let start = (x * self.ny + y) * self.channels;
        &self.data[start..start + self.channels]
    }

    /// Largest absolute per-channel difference to `other`, `inf` if shapes differ.
    pub fn max_abs_diff(&self, other: &Self) -> f64 {
        if (self.nx, self.ny, self.channels) != (other.nx, other.ny, other.channels) {
            return f64::INFINITY;
        }
        self.data.iter().zip(&other.data).map(|(a, b)| (a - b).abs()).fold(0.0, f64::max)
    }

    /// FNV-1a over the bit patterns of all cells.
    pub fn checksum(&self) -> u64 {
        let mut h: u64 = 0xcbf2_9ce4_8422_2325;
        for v in &self.data {
            // fold -0.0 into +0.0 so empty cells hash the same in both backends
            let bits = if *v == 0.0 { 0u64 } else { v.to_bits() };
            for b in bits.to_le_bytes() {
                h ^= b as u64;
                h = h.wrapping_mul(0x0000_0100_0000_01b3);
            }
        }
        h
    }

    pub fn channel_totals(&self) -> Vec<f64> {
        let mut totals = vec![0.0; self.channels];
        for cell in self.data.chunks_exact(self.channels.max(1)) {
            totals.iter_mut().zip(cell).for_each(|(t, v)| *t += v);
        }
        totals
    }
}

fn check_cell(cell: CellIndex, nx: usize, ny: usize) -> Result<()> {
    if cell.x >= nx || cell.y >= ny {
        return Err(Error::IndexOutOfGrid { x: cell.x, y: cell.y, nx, ny });
    }
    Ok(())
}

/// Reference scatter-add.
pub fn pool_naive(points: &FeaturePointCloud, grid: &BevGridSpec) -> Result<BevFeatureMap> {
    let (nx, ny, c) = (grid.nx(), grid.ny(), points.channels());
    let mut map = BevFeatureMap::zeros(nx, ny, c);
    for (cell, feature) in points.iter() {
        let Some(cell) = cell else { continue };
        check_cell(cell, nx, ny)?;
        let start = grid.linear_index(cell) * c;
        map.data[start..start + c].iter_mut().zip(feature).for_each(|(acc, f)| *acc += f);
    }
    Ok(map)
}

/// Precomputed point ordering and run boundaries for interval pooling.
#[derive(Debug, Clone, PartialEq)]
pub struct IntervalPlan {
    nx: usize,
    ny: usize,
    n_points: usize,
    /// In-range point indices, stably ordered by linearized cell index.
    order: Vec<u32>,
    /// `(linear cell index, start, end)` runs into `order`.
    intervals: Vec<(u32, u32, u32)>,
}

impl IntervalPlan {
    pub fn new(cells: &[Option<CellIndex>], grid: &BevGridSpec) -> Result<Self> {
        let (nx, ny) = (grid.nx(), grid.ny());
        let n_cells = nx * ny;
        if cells.len() > u32::MAX as usize {
            return Err(Error::InvalidArgument("more than u32::MAX points".into()));
        }
        let mut keys = Vec::with_capacity(cells.len());
        for cell in cells {
            keys.push(match cell {
                Some(c) => {
                    check_cell(*c, nx, ny)?;
                    grid.linear_index(*c) as u32
                }
                None => u32::MAX,
            });
        }

        // Counting sort on the cell key: stable, O(points + cells).
        let mut counts = vec![0u32; n_cells + 1];
        for &k in &keys {
            if k != u32::MAX {
                counts[k as usize + 1] += 1;
            }
        }
        for i in 1..counts.len() {
            counts[i] += counts[i - 1];
        }
        let in_range = counts[n_cells] as usize;
        let mut order = vec![0u32; in_range];
        let mut cursor = counts.clone();
        for (i, &k) in keys.iter().enumerate() {
            if k != u32::MAX {
                let slot = &mut cursor[k as usize];
                order[*slot as usize] = i as u32;
                *slot += 1;
            }
        }
        let intervals =
            (0..n_cells).filter(|&k| counts[k + 1] > counts[k]).map(|k| (k as u32, counts[k], counts[k + 1])).collect();

        Ok(Self { nx, ny, n_points: cells.len(), order, intervals })
    }

    pub fn interval_count(&self) -> usize {
        self.intervals.len()
    }

    /// Segmented reduction over the planned runs. `points` must be the cloud
    /// (or one with identical cells) the plan was built from.
    pub fn pool(&self, points: &FeaturePointCloud) -> Result<BevFeatureMap> {
        if points.len() != self.n_points {
            return Err(Error::LengthMismatch { left: self.n_points, right: points.len() });
        }
        let c = points.channels();
        let mut map = BevFeatureMap::zeros(self.nx, self.ny, c);
        let features = points.features();
        for &(key, start, end) in &self.intervals {
            let dst = &mut map.data[key as usize * c..(key as usize + 1) * c];
            for &p in &self.order[start as usize..end as usize] {
                let src = &features[p as usize * c..(p as usize + 1) * c];
                dst.iter_mut().zip(src).for_each(|(acc, f)| *acc += f);
            }
        }
        Ok(map)
    }
}

/// Sort-then-reduce pooling; same result contract as [`pool_naive`].
pub fn pool_interval(points: &FeaturePointCloud, grid: &BevGridSpec) -> Result<BevFeatureMap> {
    IntervalPlan::new(points.cells(), grid)?.pool(points)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BenchReport {
    pub n_points: usize,
    pub channels: usize,
    pub seed: u64,
    pub naive_ns: u128,
    /// Plan construction plus reduction.
    pub interval_ns: u128,
    /// Reduction only, reusing a prebuilt plan.
    pub interval_cached_ns: u128,
    pub points_per_sec: f64,
    pub naive_checksum: u64,
    pub interval_checksum: u64,
    pub max_abs_diff: f64,
}

/// Deterministic benchmark cloud: uniform cells with ~5% out-of-range points
/// and small integer features, so both backends sum exactly.
pub fn bench_workload(n_points: usize, channels: usize, seed: u64, grid: &BevGridSpec) -> FeaturePointCloud {
    let mut rng = seeded(seed);
    let (nx, ny) = (grid.nx(), grid.ny());
    let mut cloud = FeaturePointCloud::with_capacity(channels, n_points);
    let mut feature = vec![0.0; channels];
    for _ in 0..n_points {
        let cell = if rng.gen_bool(0.05) {
            None
        } else {
            Some(CellIndex { x: rng.gen_range(0..nx), y: rng.gen_range(0..ny) })
        };
        feature.iter_mut().for_each(|f| *f = rng.gen_range(-8i32..=8) as f64);
        cloud.push(cell, &feature).expect("feature length matches channels");
    }
    cloud
}

pub fn bench_pooling(n_points: usize, channels: usize, seed: u64) -> Result<BenchReport> {
    if n_points == 0 {
        return Err(Error::InvalidArgument("n_points must be at least 1".into()));
    }
    if channels == 0 {
        return Err(Error::InvalidArgument("channels must be at least 1".into()));
    }
    let grid = BevGridSpec::default();
    let cloud = bench_workload(n_points, channels, seed, &grid);

    let t = Instant::now();
    let naive = pool_naive(&cloud, &grid)?;
    let naive_ns = t.elapsed().as_nanos().max(1);

    let t = Instant::now();
    let plan = IntervalPlan::new(cloud.cells(), &grid)?;
    let interval = plan.pool(&cloud)?;
    let interval_ns = t.elapsed().as_nanos().max(1);

    let t = Instant::now();
    let cached = plan.pool(&cloud)?;
    let interval_cached_ns = t.elapsed().as_nanos().max(1);
    debug_assert_eq!(cached, interval);

    Ok(BenchReport {
        n_points,
        channels,
        seed,
        naive_ns,
        interval_ns,
        interval_cached_ns,
        points_per_sec: n_points as f64 / (interval_ns as f64 * 1e-9),
        naive_checksum: naive.checksum(),
        interval_checksum: interval.checksum(),
        max_abs_diff: naive.max_abs_diff(&interval),
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn grid() -> BevGridSpec {
        BevGridSpec::default()
    }

    #[test]
    fn three_points_in_one_cell() {
        let mut pc = FeaturePointCloud::new(1);
        for v in [1.0, 2.0, 3.0] {
            pc.push(Some(CellIndex { x: 4, y: 7 }), &[v]).unwrap();
        }
        for map in [pool_naive(&pc, &grid()).unwrap(), pool_interval(&pc, &grid()).unwrap()] {
            assert_eq!(map.cell(4, 7), &[6.0]);
            assert_eq!(map.data.iter().filter(|v| **v != 0.0).count(), 1);
        }
    }

    #[test]
    fn empty_and_out_of_range_clouds_pool_to_zero() {
        let empty = FeaturePointCloud::new(3);
        let mut out = FeaturePointCloud::new(3);
        out.push(None, &[1.0, 1.0, 1.0]).unwrap();
        for pc in [&empty, &out] {
            for map in [pool_naive(pc, &grid()).unwrap(), pool_interval(pc, &grid()).unwrap()] {
                assert_eq!((map.nx, map.ny, map.channels), (100, 100, 3));
                assert!(map.data.iter().all(|v| *v == 0.0));
            }
        }
    }

    #[test]
    fn invalid_cell_is_rejected() {
        let mut pc = FeaturePointCloud::new(1);
        pc.push(Some(CellIndex { x: 100, y: 0 }), &[1.0]).unwrap();
        assert!(matches!(pool_naive(&pc, &grid()), Err(Error::IndexOutOfGrid { .. })));
        assert!(matches!(pool_interval(&pc, &grid()), Err(Error::IndexOutOfGrid { .. })));
    }

    #[test]
    fn plan_runs_cover_in_range_points() {
        let cloud = bench_workload(5000, 2, 3, &grid());
        let plan = IntervalPlan::new(cloud.cells(), &grid()).unwrap();
        let in_range = cloud.cells().iter().filter(|c| c.is_some()).count();
        assert_eq!(plan.order.len(), in_range);
        let covered: u32 = plan.intervals.iter().map(|(_, s, e)| e - s).sum();
        assert_eq!(covered as usize, in_range);
        assert!(plan.intervals.windows(2).all(|w| w[0].0 < w[1].0));
    }

    #[test]
    fn bench_smoke_and_determinism() {
        let a = bench_pooling(1000, 4, 7).unwrap();
        assert!(a.naive_ns > 0 && a.interval_ns > 0);
        assert_eq!(a.naive_checksum, a.interval_checksum);
        let b = bench_pooling(1000, 4, 7).unwrap();
        assert_eq!((a.naive_checksum, a.interval_checksum), (b.naive_checksum, b.interval_checksum));
        assert!(bench_pooling(0, 4, 7).is_err());
    }
}

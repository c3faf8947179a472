//! Lift a synthetic camera image into a frustum point cloud and splat it onto
//! the BEV grid with both pooling backends.
//!
//! cargo run --example bev_lift_pool

use rand::Rng;

use dualbev::geometry::{
    lift, make_frustum, BevGridSpec, CameraModel, DepthDistribution, Extrinsics, FeatureImage, FeaturePointCloud,
};
use dualbev::pooling::{pool_interval, pool_naive, IntervalPlan};
use dualbev::rng::seeded;

fn main() -> dualbev::Result<()> {
    let (w, h, c) = (32, 24, 6);
    let grid = BevGridSpec::default();
    let cam = CameraModel::new(20.0, 20.0, w as f64 / 2.0, h as f64 / 2.0, Extrinsics::forward_facing(1.2))?;
    let frustum = make_frustum(w, h, &cam, &grid)?;

    let mut rng = seeded(3);
    let image = FeatureImage::new(h, w, c, (0..h * w * c).map(|_| rng.gen_range(-1.0..1.0)).collect())?;
    let logits: Vec<f64> = (0..h * w * grid.depth_bins()).map(|_| rng.gen_range(-2.0..2.0)).collect();
    let depth = DepthDistribution::from_logits(h, w, grid.depth_bins(), &logits)?;

    let lifted = lift(&image, &depth)?;
    let cloud = FeaturePointCloud::from_lifted(&frustum, &lifted, &grid)?;
    let inside = cloud.cells().iter().filter(|c| c.is_some()).count();
    println!("frustum points {}, inside the {}x{} grid {inside}", cloud.len(), grid.nx(), grid.ny());

    let naive = pool_naive(&cloud, &grid)?;
    let fast = pool_interval(&cloud, &grid)?;
    let plan = IntervalPlan::new(cloud.cells(), &grid)?;
    println!("non-empty cells {}, max |naive - interval| = {:e}", plan.interval_count(), naive.max_abs_diff(&fast));
    println!("channel totals {:?}", fast.channel_totals().iter().map(|v| format!("{v:.3}")).collect::<Vec<_>>());
    Ok(())
}

use rand::Rng;
use rand_distr::{Normal, StandardNormal};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::geometry::{
    lift, make_frustum, BevGridSpec, CameraModel, DepthDistribution, Extrinsics, FeatureImage, FeaturePointCloud,
    Frustum,
};
use crate::integration::ControlParams;
use crate::losses::LatentGoal;
use crate::pooling::{BevFeatureMap, IntervalPlan};
use crate::rng::{derive_seed, seeded, SimRng};

use super::{CandidatePath, LocalPlanner, ObservationContext, ObservationId, PlanRequest};

/// Side of the square block of BEV cells averaged into one decoder input.
const BEV_BLOCK: usize = 10;
const MAX_TURN_PER_STEP: f64 = 0.5;
const OFFSET_SCALE: f64 = 20.0;
const DISTANCE_SCALE: f64 = 10.0;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum DecodeMode {
    /// Latent goals drawn from the prior `N(0, I)`.
    Exploration,
    /// Latent goals drawn from a posterior conditioned on the goal observation.
    Navigation,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct StubConfig {
    pub candidates: usize,
    pub horizon: usize,
    pub context: usize,
    pub image_width: usize,
    pub image_height: usize,
    pub channels: usize,
    pub latent_dim: usize,
    pub hidden: usize,
    pub seed: u64,
    pub mode: DecodeMode,
    pub control: ControlParams,
}

impl Default for StubConfig {
    fn default() -> Self {
        Self {
            candidates: super::DEFAULT_CANDIDATES,
            horizon: super::DEFAULT_HORIZON,
            context: super::DEFAULT_CONTEXT,
            image_width: 16,
            image_height: 12,
            channels: 8,
            latent_dim: 8,
            hidden: 32,
            seed: 0,
            mode: DecodeMode::Exploration,
            control: ControlParams::default(),
        }
    }
}

/// Dense layer `y = W x + b`, row-major `W`.
#[derive(Debug, Clone)]
struct Affine {
    inputs: usize,
    weights: Vec<f64>,
    bias: Vec<f64>,
}

impl Affine {
    fn random(inputs: usize, outputs: usize, rng: &mut SimRng) -> Self {
        let dist = Normal::new(0.0, 1.0 / (inputs as f64).sqrt()).expect("positive std");
        Self {
            inputs,
            weights: (0..inputs * outputs).map(|_| rng.sample(dist)).collect(),
            bias: (0..outputs).map(|_| 0.1 * rng.sample::<f64, _>(StandardNormal)).collect(),
        }
    }

    fn apply(&self, x: &[f64]) -> Result<Vec<f64>> {
        if x.len() != self.inputs {
            return Err(Error::ShapeMismatch {
                expected: format!("{} decoder inputs", self.inputs),
                actual: format!("{}", x.len()),
            });
        }
        Ok(self
            .weights
            .chunks_exact(self.inputs)
            .zip(&self.bias)
            .map(|(row, b)| b + row.iter().zip(x).map(|(w, v)| w * v).sum::<f64>())
            .collect())
    }
}

/// Fixed-random-weight planner running the full lift -> pool -> decode path
/// on synthetic per-observation images. Produces well-shaped, finite
/// candidates; their geometry means nothing.
#[derive(Debug, Clone)]
pub struct StubPlanner {
    config: StubConfig,
    camera: CameraModel,
    grid: BevGridSpec,
    frustum: Frustum,
    plan: IntervalPlan,
    trunk: Affine,
    posterior_mu: Affine,
    posterior_logvar: Affine,
    head: Affine,
}

impl StubPlanner {
    pub fn new(config: StubConfig) -> Result<Self> {
        let c = &config;
        if c.candidates == 0 || c.horizon == 0 || c.channels == 0 || c.latent_dim == 0 || c.hidden == 0 {
            return Err(Error::InvalidArgument(format!("stub dimensions must be positive: {c:?}")));
        }
        let (w, h) = (c.image_width, c.image_height);
        let f = w.max(h) as f64 / 2.0;
        let camera =
            CameraModel::new(f, f, (w as f64 - 1.0) / 2.0, (h as f64 - 1.0) / 2.0, Extrinsics::forward_facing(1.0))?;
        let grid = BevGridSpec::default();
        let frustum = make_frustum(w, h, &camera, &grid)?;
        let cells = crate::geometry::project_to_grid(&frustum.points, &grid);
        let plan = IntervalPlan::new(&cells, &grid)?;

        let mut rng = seeded(derive_seed(c.seed, 0x57ab));
        let blocks = grid.nx().div_ceil(BEV_BLOCK) * grid.ny().div_ceil(BEV_BLOCK);
        let context_inputs = (c.context + 2) * c.channels;
        let trunk = Affine::random(blocks * c.channels + context_inputs, c.hidden, &mut rng);
        let posterior_mu = Affine::random(2 * c.channels, c.latent_dim, &mut rng);
        let posterior_logvar = Affine::random(2 * c.channels, c.latent_dim, &mut rng);
        let head = Affine::random(c.hidden + c.latent_dim, 1 + c.horizon + 2, &mut rng);
        Ok(Self { config, camera, grid, frustum, plan, trunk, posterior_mu, posterior_logvar, head })
    }

    pub fn config(&self) -> &StubConfig {
        &self.config
    }

    pub fn camera(&self) -> &CameraModel {
        &self.camera
    }

    /// Deterministic synthetic image and depth logits for an observation.
    pub fn synthetic_observation(&self, id: ObservationId) -> Result<(FeatureImage, DepthDistribution)> {
        let c = &self.config;
        let mut rng = seeded(derive_seed(c.seed, id.0.wrapping_add(1)));
        let n_px = c.image_width * c.image_height;
        let data = (0..n_px * c.channels).map(|_| rng.gen_range(-1.0..1.0)).collect();
        let image = FeatureImage::new(c.image_height, c.image_width, c.channels, data)?;
        let bins = self.grid.depth_bins();
        let logits: Vec<f64> = (0..n_px * bins).map(|_| 2.0 * rng.sample::<f64, _>(StandardNormal)).collect();
        let depth = DepthDistribution::from_logits(c.image_height, c.image_width, bins, &logits)?;
        Ok((image, depth))
    }

    /// Lift and pool one observation into the BEV feature map.
    pub fn bev_features(&self, id: ObservationId) -> Result<BevFeatureMap> {
        let (image, depth) = self.synthetic_observation(id)?;
        let lifted = lift(&image, &depth)?;
        let cloud = FeaturePointCloud::from_lifted(&self.frustum, &lifted, &self.grid)?;
        self.plan.pool(&cloud)
    }

    fn block_means(&self, map: &BevFeatureMap) -> Vec<f64> {
        let c = map.channels;
        let (bx, by) = (map.nx.div_ceil(BEV_BLOCK), map.ny.div_ceil(BEV_BLOCK));
        let mut out = vec![0.0; bx * by * c];
        for x in 0..map.nx {
            for y in 0..map.ny {
                let b = (x / BEV_BLOCK) * by + y / BEV_BLOCK;
                out[b * c..(b + 1) * c].iter_mut().zip(map.cell(x, y)).for_each(|(o, v)| *o += v);
            }
        }
        let per_block = (BEV_BLOCK * BEV_BLOCK) as f64;
        out.iter_mut().for_each(|v| *v /= per_block);
        out
    }

    fn mean_feature(&self, id: ObservationId) -> Result<Vec<f64>> {
        let (image, _) = self.synthetic_observation(id)?;
        let c = image.channels;
        let mut mean = vec![0.0; c];
        for px in image.data.chunks_exact(c) {
            mean.iter_mut().zip(px).for_each(|(m, v)| *m += v);
        }
        let n = (image.height * image.width) as f64;
        mean.iter_mut().for_each(|m| *m /= n);
        Ok(mean)
    }

    /// Full pipeline for one context in the given decode mode.
    pub fn forward(&self, ctx: &ObservationContext, mode: DecodeMode) -> Result<Vec<CandidatePath>> {
        let c = &self.config;
        if ctx.past.len() != c.context {
            return Err(Error::LengthMismatch { left: c.context, right: ctx.past.len() });
        }
        let mut input = self.block_means(&self.bev_features(ctx.current)?);
        for id in ctx.past.iter().chain([&ctx.current, &ctx.goal]) {
            input.extend(self.mean_feature(*id)?);
        }
        let hidden: Vec<f64> = self.trunk.apply(&input)?.into_iter().map(f64::tanh).collect();

        let mut goal_input = self.mean_feature(ctx.goal)?;
        goal_input.extend(self.mean_feature(ctx.current)?);
        let mu: Vec<f64> = self.posterior_mu.apply(&goal_input)?.into_iter().map(f64::tanh).collect();
        let logvar: Vec<f64> = self.posterior_logvar.apply(&goal_input)?.into_iter().map(|v| v.tanh() - 1.0).collect();

        let mut rng = seeded(derive_seed(c.seed, ctx.current.0 ^ 0x1a7e_u64.rotate_left(40)));
        let step = c.control.step_length();
        (0..c.candidates)
            .map(|_| {
                let latent = match mode {
                    DecodeMode::Exploration => LatentGoal::from_prior(c.latent_dim, &mut rng)?,
                    DecodeMode::Navigation => LatentGoal::sample(mu.clone(), logvar.clone(), &mut rng)?,
                };
                let mut x = hidden.clone();
                x.extend_from_slice(&latent.sample);
                let out = self.head.apply(&x)?;
                let softplus = |v: f64| if v > 30.0 { v } else { v.exp().ln_1p() };
                let temporal_distance = DISTANCE_SCALE * softplus(out[0]);
                let mut heading = 0.0;
                let mut pos = [0.0, 0.0];
                let waypoints = out[1..=c.horizon]
                    .iter()
                    .map(|o| {
                        heading += MAX_TURN_PER_STEP * o.tanh();
                        pos = [pos[0] + step * heading.cos(), pos[1] + step * heading.sin()];
                        pos
                    })
                    .collect();
                let gps_offset = [OFFSET_SCALE * out[c.horizon + 1].tanh(), OFFSET_SCALE * out[c.horizon + 2].tanh()];
                Ok(CandidatePath { waypoints, temporal_distance, gps_offset })
            })
            .collect()
    }
}

impl LocalPlanner for StubPlanner {
    fn plan_candidates(&self, request: &PlanRequest<'_>) -> Result<Vec<CandidatePath>> {
        self.forward(request.ctx, self.config.mode)
    }
}

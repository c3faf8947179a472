use serde::{Deserialize, Serialize};

use crate::error::Result;

use super::{CandidatePath, LocalPlanner, PlanRequest};

/// Wraps a planner so it only sees part of the world: every obstacle
/// component is missed with probability `miss_rate` (fixed per `seed`).
/// The wrapped planner plans against that partial view; the episode still
/// collides against the true world.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PartialPerception<P> {
    pub inner: P,
    pub miss_rate: f64,
    pub seed: u64,
}

impl<P> PartialPerception<P> {
    pub fn new(inner: P, miss_rate: f64, seed: u64) -> Self {
        Self { inner, miss_rate, seed }
    }
}

impl<P: LocalPlanner> LocalPlanner for PartialPerception<P> {
    fn plan_candidates(&self, req: &PlanRequest<'_>) -> Result<Vec<CandidatePath>> {
        let seen = req.world.with_missed_obstacles(self.miss_rate, self.seed)?;
        // a pose inside a missed obstacle is free as far as the planner knows
        self.inner.plan_candidates(&PlanRequest { ctx: req.ctx, pose: req.pose, goal: req.goal, world: &seen })
    }
}

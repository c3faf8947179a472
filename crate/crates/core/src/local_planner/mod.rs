//! Local planning seam.
//!
//! A [`LocalPlanner`] turns the current observation context and pose into
//! candidate paths, each carrying robot-frame waypoints, a temporal distance
//! (control steps) and a world-frame offset to the goal. Two implementations
//! ship here: [`OraclePlanner`] derives everything from the world's ground
//! truth, [`StubPlanner`] runs lift, pool and a fixed random decoder on
//! synthetic images.

mod oracle;
mod perception;
pub mod search;
mod stub;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::integration::Pose2D;
use crate::simulator::WorldModel;

pub use oracle::{OraclePlanner, DEFAULT_LOOKAHEAD, SAFETY_MARGIN};
pub use perception::PartialPerception;
pub use search::{bfs_hops, oracle_temporal_distance, DistanceField};
pub use stub::{DecodeMode, StubConfig, StubPlanner};

pub const DEFAULT_CANDIDATES: usize = 7;
pub const DEFAULT_HORIZON: usize = 5;
pub const DEFAULT_CONTEXT: usize = 5;
pub const DEFAULT_CURVATURES: [f64; 7] = [-0.3, -0.2, -0.1, 0.0, 0.1, 0.2, 0.3];
/// Steps ahead on the oracle route at which the local sub-goal sits.
pub const DEFAULT_SUBGOAL_STEPS: f64 = 10.0;

/// Opaque handle of one camera observation.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct ObservationId(pub u64);

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ObservationContext {
    pub current: ObservationId,
    /// Oldest first.
    pub past: Vec<ObservationId>,
    pub goal: ObservationId,
}

impl ObservationContext {
    pub fn new(
        current: ObservationId,
        past: Vec<ObservationId>,
        goal: ObservationId,
        context_len: usize,
    ) -> Result<Self> {
        if past.len() != context_len {
            return Err(Error::LengthMismatch { left: context_len, right: past.len() });
        }
        Ok(Self { current, past, goal })
    }
}

/// One proposal. `temporal_distance` is `INFINITY` when the planner knows
/// the path leads nowhere useful (blocked, or the goal is unreachable).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CandidatePath {
    pub waypoints: Vec<[f64; 2]>,
    pub temporal_distance: f64,
    pub gps_offset: [f64; 2],
}

impl CandidatePath {
    pub fn horizon(&self) -> usize {
        self.waypoints.len()
    }

    /// Non-empty, finite, and the first waypoint reachable in one step.
    pub fn check(&self, step_length: f64) -> Result<()> {
        let Some(first) = self.waypoints.first() else {
            return Err(Error::InvalidArgument("candidate has no waypoints".into()));
        };
        if self.waypoints.iter().flatten().chain(&self.gps_offset).any(|v| !v.is_finite()) {
            return Err(Error::InvalidArgument("candidate has non-finite values".into()));
        }
        if !(self.temporal_distance >= 0.0) {
            return Err(Error::InvalidArgument(format!("negative temporal distance {}", self.temporal_distance)));
        }
        if first[0].hypot(first[1]) > 1.5 * step_length + 1e-9 {
            return Err(Error::InvalidArgument(format!("first waypoint {first:?} is beyond one control step")));
        }
        Ok(())
    }
}

pub struct PlanRequest<'a> {
    pub ctx: &'a ObservationContext,
    pub pose: Pose2D,
    pub goal: [f64; 2],
    pub world: &'a WorldModel,
}

pub trait LocalPlanner: Send + Sync {
    fn plan_candidates(&self, request: &PlanRequest<'_>) -> Result<Vec<CandidatePath>>;
}

impl<T: LocalPlanner + ?Sized> LocalPlanner for &T {
    fn plan_candidates(&self, request: &PlanRequest<'_>) -> Result<Vec<CandidatePath>> {
        (**self).plan_candidates(request)
    }
}

/// Robot-frame point at arc length `s` on a constant-curvature arc starting
/// at the origin along +x; positive curvature turns left.
pub fn arc_point(curvature: f64, s: f64) -> [f64; 2] {
    if curvature.abs() < 1e-12 {
        [s, 0.0]
    } else {
        [(curvature * s).sin() / curvature, (1.0 - (curvature * s).cos()) / curvature]
    }
}

/// Robot-frame waypoints of a curvature primitive as the unicycle controller
/// drives it: each step turns by `curvature * step` and then advances `step`,
/// so aiming at waypoint `i` from waypoint `i - 1` lands on it exactly.
pub fn control_arc(curvature: f64, step: f64, n: usize) -> Vec<[f64; 2]> {
    let turn = curvature * step;
    let mut p = [0.0, 0.0];
    (1..=n)
        .map(|i| {
            let h = turn * i as f64;
            p = [p[0] + step * h.cos(), p[1] + step * h.sin()];
            p
        })
        .collect()
}

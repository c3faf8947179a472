//! Dual-layer path selection and the closed control loop.
//!
//! Each cycle the local planner proposes candidates, every candidate is
//! projected into the world and scored on the hint map, and the robot steers
//! toward the first waypoint of the candidate with the lowest
//! `cost = k * score + (1 - k) * min(temporal_distance, d_max) / d_max`.

use std::f64::consts::PI;
use std::fmt::Write as _;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::global_map::score_path;
use crate::local_planner::{CandidatePath, LocalPlanner, ObservationContext, ObservationId, PlanRequest};
use crate::raster::ProbabilityMap;
use crate::simulator::WorldModel;

pub const DEFAULT_K: f64 = 0.5;
pub const DEFAULT_D_MAX: f64 = 20.0;
pub const DEFAULT_SPEED: f64 = 1.5;
pub const DEFAULT_DT: f64 = 0.5;
pub const DEFAULT_OMEGA_MAX: f64 = 1.2;
pub const DEFAULT_GOAL_RADIUS: f64 = 2.0;
pub const DEFAULT_STEP_BUDGET: usize = 200;

/// Wraps an angle into `(-pi, pi]`.
pub fn normalize_angle(a: f64) -> f64 {
    let mut r = a.rem_euclid(2.0 * PI);
    if r > PI {
        r -= 2.0 * PI;
    }
    r
}

/// World-frame robot pose; heading in `(-pi, pi]`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Pose2D {
    pub x: f64,
    pub y: f64,
    pub heading: f64,
}

impl Pose2D {
    pub fn new(x: f64, y: f64, heading: f64) -> Self {
        Self { x, y, heading: normalize_angle(heading) }
    }

    pub fn position(&self) -> [f64; 2] {
        [self.x, self.y]
    }

    pub fn is_finite(&self) -> bool {
        self.x.is_finite() && self.y.is_finite() && self.heading.is_finite()
    }

    pub fn transform_point(&self, p: [f64; 2]) -> [f64; 2] {
        let (s, c) = self.heading.sin_cos();
        [self.x + c * p[0] - s * p[1], self.y + s * p[0] + c * p[1]]
    }

    pub fn inverse_transform_point(&self, p: [f64; 2]) -> [f64; 2] {
        let (s, c) = self.heading.sin_cos();
        let (dx, dy) = (p[0] - self.x, p[1] - self.y);
        [c * dx + s * dy, -s * dx + c * dy]
    }
}

/// Robot-frame waypoints rotated by the heading and shifted to the pose.
pub fn to_world(path: &CandidatePath, pose: &Pose2D) -> Vec<[f64; 2]> {
    path.waypoints.iter().map(|p| pose.transform_point(*p)).collect()
}

pub fn to_robot(points: &[[f64; 2]], pose: &Pose2D) -> Vec<[f64; 2]> {
    points.iter().map(|p| pose.inverse_transform_point(*p)).collect()
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScoredPath {
    pub index: usize,
    pub candidate: CandidatePath,
    pub world_waypoints: Vec<[f64; 2]>,
    pub score: f64,
    pub normalized_distance: f64,
    pub cost: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Selection {
    pub winner: usize,
    pub scored: Vec<ScoredPath>,
}

impl Selection {
    pub fn best(&self) -> &ScoredPath {
        &self.scored[self.winner]
    }
}

pub fn normalized_distance(temporal_distance: f64, d_max: f64) -> f64 {
    temporal_distance.min(d_max) / d_max
}

pub fn mix_cost(k: f64, score: f64, normalized_distance: f64) -> f64 {
    k * score + (1.0 - k) * normalized_distance
}

/// Index of the lowest cost; ties go to the lower temporal distance, then to
/// the lower index. Candidates with an infinite temporal distance (known dead
/// ends) only win when every candidate is one.
pub fn argmin_cost(costs: &[f64], temporal_distances: &[f64]) -> Option<usize> {
    (0..costs.len()).min_by(|&a, &b| {
        temporal_distances[a]
            .is_infinite()
            .cmp(&temporal_distances[b].is_infinite())
            .then(costs[a].total_cmp(&costs[b]))
            .then(temporal_distances[a].total_cmp(&temporal_distances[b]))
            .then(a.cmp(&b))
    })
}

/// Scores every candidate and picks the minimum-cost one. Without a map every
/// score is 0. The scored polyline starts at the robot position.
pub fn select_path(
    candidates: &[CandidatePath],
    pose: &Pose2D,
    map: Option<&ProbabilityMap>,
    k: f64,
    d_max: f64,
) -> Result<Selection> {
    if candidates.is_empty() {
        return Err(Error::NoCandidates);
    }
    if !(0.0..=1.0).contains(&k) {
        return Err(Error::InvalidArgument(format!("k must lie in [0, 1], got {k}")));
    }
    if !(d_max > 0.0) {
        return Err(Error::InvalidArgument(format!("d_max must be positive, got {d_max}")));
    }
    let scored: Vec<ScoredPath> = candidates
        .iter()
        .enumerate()
        .map(|(index, candidate)| {
            let world_waypoints = to_world(candidate, pose);
            let score = match map {
                Some(m) => {
                    let mut poly = Vec::with_capacity(world_waypoints.len() + 1);
                    poly.push(pose.position());
                    poly.extend_from_slice(&world_waypoints);
                    score_path(m, &poly)
                }
                None => 0.0,
            };
            let nd = normalized_distance(candidate.temporal_distance, d_max);
            ScoredPath {
                index,
                candidate: candidate.clone(),
                world_waypoints,
                score,
                normalized_distance: nd,
                cost: mix_cost(k, score, nd),
            }
        })
        .collect();
    let costs: Vec<f64> = scored.iter().map(|s| s.cost).collect();
    let tds: Vec<f64> = scored.iter().map(|s| s.candidate.temporal_distance).collect();
    let winner = argmin_cost(&costs, &tds).expect("non-empty");
    Ok(Selection { winner, scored })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ControlParams {
    pub speed: f64,
    pub dt: f64,
    pub omega_max: f64,
}

impl Default for ControlParams {
    fn default() -> Self {
        Self { speed: DEFAULT_SPEED, dt: DEFAULT_DT, omega_max: DEFAULT_OMEGA_MAX }
    }
}

impl ControlParams {
    pub fn step_length(&self) -> f64 {
        self.speed * self.dt
    }
}

/// Unicycle step: turn toward `target` by at most `omega_max * dt`, then
/// advance `speed * dt` along the new heading. A target at the current
/// position leaves the heading unchanged.
pub fn control_toward(pose: &Pose2D, target: [f64; 2], params: &ControlParams) -> Pose2D {
    let (dx, dy) = (target[0] - pose.x, target[1] - pose.y);
    let max_turn = params.omega_max * params.dt;
    let turn = if dx == 0.0 && dy == 0.0 {
        0.0
    } else {
        normalize_angle(dy.atan2(dx) - pose.heading).clamp(-max_turn, max_turn)
    };
    let heading = pose.heading + turn;
    let step = params.step_length();
    Pose2D::new(pose.x + step * heading.cos(), pose.y + step * heading.sin(), heading)
}

pub fn control_step(winner: &ScoredPath, pose: &Pose2D, params: &ControlParams) -> Pose2D {
    let target = winner.world_waypoints.first().copied().unwrap_or(pose.position());
    control_toward(pose, target, params)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CycleConfig {
    pub k: f64,
    pub d_max: f64,
    pub goal_radius: f64,
    pub step_budget: usize,
    pub context_len: usize,
    pub control: ControlParams,
}

impl Default for CycleConfig {
    fn default() -> Self {
        Self {
            k: DEFAULT_K,
            d_max: DEFAULT_D_MAX,
            goal_radius: DEFAULT_GOAL_RADIUS,
            step_budget: DEFAULT_STEP_BUDGET,
            context_len: crate::local_planner::DEFAULT_CONTEXT,
            control: ControlParams::default(),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "SCREAMING_SNAKE_CASE")]
pub enum Outcome {
    Success,
    Collision,
    Timeout,
}

/// One logged pose. Row 0 is the start pose and carries no decision; row
/// `i > 0` is the pose after step `i` with the values of the path that
/// produced it.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TrajectoryRow {
    pub step: usize,
    pub x: f64,
    pub y: f64,
    pub heading: f64,
    pub cost: Option<f64>,
    pub score: Option<f64>,
    pub dist: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EpisodeResult {
    pub outcome: Outcome,
    pub steps: usize,
    /// Distance travelled along the trajectory, meters.
    pub displacement: f64,
    pub start: Pose2D,
    pub goal: [f64; 2],
    pub final_pose: Pose2D,
    pub trajectory: Vec<TrajectoryRow>,
}

impl EpisodeResult {
    pub const CSV_HEADER: &'static str = "step,x,y,heading,cost,score,dist";

    pub fn trajectory_csv(&self) -> String {
        let mut out = String::from(Self::CSV_HEADER);
        out.push('\n');
        let opt = |v: Option<f64>| v.map(|v| v.to_string()).unwrap_or_default();
        for r in &self.trajectory {
            let _ = writeln!(
                out,
                "{},{},{},{},{},{},{}",
                r.step,
                r.x,
                r.y,
                r.heading,
                opt(r.cost),
                opt(r.score),
                opt(r.dist)
            );
        }
        out
    }

    pub fn path_length(&self) -> f64 {
        self.trajectory.windows(2).map(|w| (w[1].x - w[0].x).hypot(w[1].y - w[0].y)).sum()
    }

    pub fn final_goal_distance(&self) -> f64 {
        (self.final_pose.x - self.goal[0]).hypot(self.final_pose.y - self.goal[1])
    }
}

/// Plan, select and step until the goal is within `goal_radius` (success),
/// the swept motion touches an impassable cell or leaves the world
/// (collision), or the step budget runs out (timeout).
pub fn run_cycle(
    planner: &dyn LocalPlanner,
    map: Option<&ProbabilityMap>,
    world: &WorldModel,
    start: Pose2D,
    goal: [f64; 2],
    config: &CycleConfig,
) -> Result<EpisodeResult> {
    if !start.is_finite() {
        return Err(Error::InvalidArgument("start pose is not finite".into()));
    }
    if !world.contains(start.x, start.y) {
        return Err(Error::OutsideWorld { x: start.x, y: start.y });
    }
    if !world.is_free(start.x, start.y) {
        return Err(Error::Impassable { x: start.x, y: start.y });
    }
    let goal_id = ObservationId(u64::MAX);
    let mut pose = start;
    let mut trajectory = vec![TrajectoryRow {
        step: 0,
        x: pose.x,
        y: pose.y,
        heading: pose.heading,
        cost: None,
        score: None,
        dist: None,
    }];
    let at_goal = |p: &Pose2D| (p.x - goal[0]).hypot(p.y - goal[1]) <= config.goal_radius;
    let mut outcome = Outcome::Timeout;
    let mut steps = 0;
    if at_goal(&pose) {
        outcome = Outcome::Success;
    } else {
        while steps < config.step_budget {
            let t = steps as u64;
            let past = (1..=config.context_len as u64).rev().map(|i| ObservationId(t.saturating_sub(i))).collect();
            let ctx = ObservationContext::new(ObservationId(t), past, goal_id, config.context_len)?;
            let request = PlanRequest { ctx: &ctx, pose, goal, world };
            let candidates = planner.plan_candidates(&request)?;
            let selection = select_path(&candidates, &pose, map, config.k, config.d_max)?;
            let best = selection.best();
            let next = control_step(best, &pose, &config.control);
            steps += 1;
            trajectory.push(TrajectoryRow {
                step: steps,
                x: next.x,
                y: next.y,
                heading: next.heading,
                cost: Some(best.cost),
                score: Some(best.score),
                dist: Some(best.candidate.temporal_distance),
            });
            let swept_free = world.segment_free(pose.position(), next.position());
            pose = next;
            if !swept_free {
                outcome = Outcome::Collision;
                break;
            }
            if at_goal(&pose) {
                outcome = Outcome::Success;
                break;
            }
        }
    }
    let mut result = EpisodeResult { outcome, steps, displacement: 0.0, start, goal, final_pose: pose, trajectory };
    result.displacement = result.path_length();
    Ok(result)
}

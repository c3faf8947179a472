use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::integration::{ControlParams, Pose2D};
use crate::simulator::WorldModel;

use super::search::DistanceField;
use super::{
    control_arc, CandidatePath, LocalPlanner, PlanRequest, DEFAULT_CURVATURES, DEFAULT_HORIZON, DEFAULT_SUBGOAL_STEPS,
};

/// Half-width of the square footprint kept clear along candidate paths, meters.
pub const SAFETY_MARGIN: f64 = 0.1;
pub const DEFAULT_LOOKAHEAD: usize = 3;

/// Ground-truth local planner: a fan of constant-curvature primitives, each
/// cut short before the last waypoint that is free and still leaves some
/// primitive of the fan free for a full horizon (recursively, up to
/// `lookahead` levels deep; when no candidate reaches the full depth the
/// deepest level any of them reaches is used), with temporal distances read
/// off a free-space distance field rooted at the goal.
///
/// A candidate's temporal distance counts the steps to the local sub-goal:
/// the point `subgoal_steps` ahead of the robot along the oracle route (the
/// goal itself once it is that close). Concretely it is the steps driven on
/// the primitive plus the remaining route length from its end, minus the part
/// of the route beyond the sub-goal. An unreachable goal is replaced by the
/// reachable cell closest to it.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct OraclePlanner {
    pub curvatures: Vec<f64>,
    pub horizon: usize,
    pub subgoal_steps: f64,
    /// Levels of full-horizon escape arcs required beyond a candidate's end.
    pub lookahead: usize,
    pub control: ControlParams,
}

impl Default for OraclePlanner {
    fn default() -> Self {
        Self {
            curvatures: DEFAULT_CURVATURES.to_vec(),
            horizon: DEFAULT_HORIZON,
            subgoal_steps: DEFAULT_SUBGOAL_STEPS,
            lookahead: DEFAULT_LOOKAHEAD,
            control: ControlParams::default(),
        }
    }
}

impl OraclePlanner {
    pub fn new(
        curvatures: Vec<f64>,
        horizon: usize,
        subgoal_steps: f64,
        lookahead: usize,
        control: ControlParams,
    ) -> Result<Self> {
        if curvatures.is_empty() || horizon == 0 {
            return Err(Error::InvalidArgument("oracle planner needs at least one curvature and horizon >= 1".into()));
        }
        if !(subgoal_steps > 0.0) {
            return Err(Error::InvalidArgument(format!("sub-goal distance must be positive, got {subgoal_steps}")));
        }
        let max_turn = control.omega_max * control.dt;
        if let Some(k) = curvatures.iter().find(|k| (*k * control.step_length()).abs() > max_turn) {
            return Err(Error::InvalidArgument(format!(
                "curvature {k} needs more than the {max_turn} rad the controller can turn per step"
            )));
        }
        Ok(Self { curvatures, horizon, subgoal_steps, lookahead, control })
    }

    /// Number of leading waypoints of the primitive reachable with the
    /// safety footprint clear of impassable cells.
    fn free_steps(&self, world: &WorldModel, pose: &Pose2D, waypoints: &[[f64; 2]]) -> usize {
        let mut prev = pose.position();
        waypoints
            .iter()
            .take_while(|w| {
                let next = pose.transform_point(**w);
                let ok = world.segment_clear(prev, next, SAFETY_MARGIN);
                prev = next;
                ok
            })
            .count()
    }

    /// Some primitive of the fan is free over the whole horizon from `pose`
    /// and, for `depth > 1`, ends in a pose that is itself escapable at
    /// `depth - 1`.
    fn escapable(&self, world: &WorldModel, pose: &Pose2D, depth: usize) -> bool {
        if depth == 0 {
            return true;
        }
        let step = self.control.step_length();
        self.curvatures.iter().any(|&k| {
            let arc = control_arc(k, step, self.horizon);
            self.free_steps(world, pose, &arc) == self.horizon
                && self.escapable(world, &arc_end_pose(pose, k, step, &arc, self.horizon), depth - 1)
        })
    }
}

impl OraclePlanner {
    /// Distance field the candidates are ranked on: rooted at the goal, or,
    /// when the goal cannot be reached from `pose`, at the reachable cell
    /// closest to it.
    fn route_field(&self, world: &WorldModel, pose: &Pose2D, goal: [f64; 2]) -> Result<DistanceField> {
        let goal_cell = world.cell_of(goal[0], goal[1]).ok_or(Error::OutsideWorld { x: goal[0], y: goal[1] })?;
        let field = DistanceField::from_cell(world, goal_cell);
        if field.remaining(world, pose.x, pose.y).is_finite() {
            return Ok(field);
        }
        let here = world.cell_of(pose.x, pose.y).ok_or(Error::OutsideWorld { x: pose.x, y: pose.y })?;
        let reach = DistanceField::from_cell(world, here);
        let closest = (0..world.height())
            .flat_map(|r| (0..world.width()).map(move |c| (c, r)))
            .filter(|&(c, r)| reach.at(c, r).is_finite())
            .min_by(|&a, &b| {
                let da = world.cell_center(a.0, a.1);
                let db = world.cell_center(b.0, b.1);
                (da[0] - goal[0]).hypot(da[1] - goal[1]).total_cmp(&(db[0] - goal[0]).hypot(db[1] - goal[1]))
            })
            .unwrap_or(here);
        Ok(DistanceField::from_cell(world, closest))
    }
}

/// World pose at waypoint `i` (1-based) of a control arc started at `pose`.
fn arc_end_pose(pose: &Pose2D, kappa: f64, step: f64, arc: &[[f64; 2]], i: usize) -> Pose2D {
    let p = pose.transform_point(arc[i - 1]);
    Pose2D::new(p[0], p[1], pose.heading + kappa * step * i as f64)
}

impl LocalPlanner for OraclePlanner {
    fn plan_candidates(&self, req: &PlanRequest<'_>) -> Result<Vec<CandidatePath>> {
        let world = req.world;
        let pose = req.pose;
        if !world.contains(pose.x, pose.y) {
            return Err(Error::OutsideWorld { x: pose.x, y: pose.y });
        }
        if !world.is_free(pose.x, pose.y) {
            return Err(Error::Impassable { x: pose.x, y: pose.y });
        }
        let field = self.route_field(world, &pose, req.goal)?;
        let step = self.control.step_length();
        let here = field.remaining(world, pose.x, pose.y) / step;
        let beyond_subgoal = (here - self.subgoal_steps).max(0.0);

        let arcs: Vec<Vec<[f64; 2]>> = self.curvatures.iter().map(|&k| control_arc(k, step, self.horizon)).collect();
        // escape depth reached at the end of every free prefix of every arc
        let depths: Vec<Vec<usize>> = self
            .curvatures
            .iter()
            .zip(&arcs)
            .map(|(&kappa, arc)| {
                (1..=self.free_steps(world, &pose, arc))
                    .map(|i| {
                        let end = arc_end_pose(&pose, kappa, step, arc, i);
                        (1..=self.lookahead).rev().find(|&d| self.escapable(world, &end, d)).unwrap_or(0)
                    })
                    .collect()
            })
            .collect();
        // the deepest level any candidate reaches is the bar for all of them
        let level = depths.iter().flatten().copied().max();

        let candidates = arcs
            .iter()
            .zip(&depths)
            .map(|(arc, depth)| {
                let valid = level.map_or(0, |lvl| depth.iter().rposition(|&d| d >= lvl).map_or(0, |i| i + 1));
                if valid == 0 {
                    return CandidatePath {
                        waypoints: vec![[0.0, 0.0]; self.horizon],
                        temporal_distance: f64::INFINITY,
                        gps_offset: [req.goal[0] - pose.x, req.goal[1] - pose.y],
                    };
                }
                let waypoints: Vec<[f64; 2]> = (0..self.horizon).map(|i| arc[i.min(valid - 1)]).collect();
                let end = pose.transform_point(waypoints[valid - 1]);
                let to_go = field.remaining(world, end[0], end[1]) / step;
                let temporal_distance = (valid as f64 + to_go - beyond_subgoal).max(0.0);
                CandidatePath { waypoints, temporal_distance, gps_offset: [req.goal[0] - end[0], req.goal[1] - end[1]] }
            })
            .collect();
        Ok(candidates)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::integration::control_toward;
    use crate::local_planner::{ObservationContext, ObservationId};

    fn ctx() -> ObservationContext {
        ObservationContext::new(ObservationId(0), vec![ObservationId(0); 5], ObservationId(1), 5).unwrap()
    }

    #[test]
    fn seven_arcs_and_straight_is_best_toward_goal_ahead() {
        let world = WorldModel::empty(80, 80, 0.5).unwrap();
        let planner = OraclePlanner::default();
        let c = ctx();
        let req = PlanRequest { ctx: &c, pose: Pose2D::new(10.0, 20.0, 0.0), goal: [30.0, 20.0], world: &world };
        let cands = planner.plan_candidates(&req).unwrap();
        assert_eq!(cands.len(), 7);
        let best =
            cands.iter().enumerate().min_by(|a, b| a.1.temporal_distance.total_cmp(&b.1.temporal_distance)).unwrap().0;
        assert_eq!(best, 3);
        for c in &cands {
            c.check(1.5 * 0.5).unwrap();
            assert_eq!(c.horizon(), 5);
        }
        // curvature sign: positive turns left
        assert!(cands[6].waypoints[4][1] > 0.0 && cands[0].waypoints[4][1] < 0.0);
    }

    #[test]
    fn controller_lands_on_each_waypoint() {
        let ctl = ControlParams::default();
        let arc = control_arc(0.3, ctl.step_length(), 5);
        let mut pose = Pose2D::new(0.0, 0.0, 0.0);
        for w in &arc {
            pose = control_toward(&pose, *w, &ctl);
            assert!((pose.x - w[0]).abs() < 1e-12 && (pose.y - w[1]).abs() < 1e-12);
        }
    }

    #[test]
    fn blocked_arcs_are_truncated_or_marked() {
        let mut world = WorldModel::empty(60, 40, 0.5).unwrap();
        for r in 0..40 {
            world.set_blocked(40, r, true); // wall at x in [20, 20.5)
        }
        let c = ctx();
        let planner = OraclePlanner::default();
        let pose = Pose2D::new(14.0, 10.0, 0.0);
        let req = PlanRequest { ctx: &c, pose, goal: [5.0, 10.0], world: &world };
        let cands = planner.plan_candidates(&req).unwrap();
        let straight = &cands[3];
        assert!(straight.temporal_distance.is_finite());
        assert!(straight.waypoints[4][0] < 5.0 * 0.75);
        assert_eq!(straight.waypoints[3], straight.waypoints[4]);
        for cand in cands.iter().filter(|c| c.temporal_distance.is_finite()) {
            for w in &cand.waypoints {
                let p = pose.transform_point(*w);
                assert!(world.is_free(p[0], p[1]));
            }
        }

        // half a meter from the wall even the first step is blocked
        let req = PlanRequest { ctx: &c, pose: Pose2D::new(19.5, 10.0, 0.0), goal: [5.0, 10.0], world: &world };
        let cands = planner.plan_candidates(&req).unwrap();
        assert!(cands.iter().all(|c| c.temporal_distance.is_infinite() && c.waypoints[0] == [0.0, 0.0]));
    }

    #[test]
    fn sealed_goal_still_yields_free_candidates() {
        let mut world = WorldModel::empty(40, 40, 0.5).unwrap();
        for i in 28..36 {
            for j in [28, 35] {
                world.set_blocked(i, j, true);
                world.set_blocked(j, i, true);
            }
        }
        let c = ctx();
        let req = PlanRequest { ctx: &c, pose: Pose2D::new(4.0, 4.0, 0.0), goal: [16.0, 16.0], world: &world };
        let cands = OraclePlanner::default().plan_candidates(&req).unwrap();
        assert!(cands.iter().all(|c| c.temporal_distance.is_finite()));
    }

    #[test]
    fn pose_in_obstacle_is_an_error() {
        let mut world = WorldModel::empty(20, 20, 0.5).unwrap();
        world.set_blocked(2, 2, true);
        let c = ctx();
        let req = PlanRequest { ctx: &c, pose: Pose2D::new(1.2, 1.2, 0.0), goal: [8.0, 8.0], world: &world };
        assert!(matches!(OraclePlanner::default().plan_candidates(&req), Err(Error::Impassable { .. })));
    }

    #[test]
    fn rejects_curvature_beyond_turn_limit() {
        assert!(OraclePlanner::new(vec![2.0], 5, 10.0, 1, ControlParams::default()).is_err());
    }
}

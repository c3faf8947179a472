use dualbev::integration::{run_cycle, CycleConfig, EpisodeResult, Outcome, Pose2D};
use dualbev::local_planner::{LocalPlanner, OraclePlanner, PartialPerception, StubConfig, StubPlanner};
use dualbev::simulator::{gen_world, hint_map_for, sample_task, Level, WorldKind, WorldModel};

fn check(ep: &EpisodeResult, world: &WorldModel, cfg: &CycleConfig) {
    let step = cfg.control.step_length();
    assert_eq!(ep.trajectory.len(), ep.steps + 1);
    assert!(ep.steps <= cfg.step_budget);
    for w in ep.trajectory.windows(2) {
        assert!(((w[1].x - w[0].x).hypot(w[1].y - w[0].y) - step).abs() < 1e-9);
        assert!(w[1].cost.is_some() && w[1].dist.is_some());
    }
    assert!((ep.displacement - ep.path_length()).abs() < 1e-9);
    assert!((ep.displacement - ep.steps as f64 * step).abs() < 1e-9);
    let straight = (ep.goal[0] - ep.start.x).hypot(ep.goal[1] - ep.start.y);
    match ep.outcome {
        Outcome::Success => {
            assert!(ep.final_goal_distance() <= cfg.goal_radius);
            assert!(ep.displacement >= straight - cfg.goal_radius - 1e-9);
            for r in &ep.trajectory {
                assert!(world.is_free(r.x, r.y));
            }
        }
        Outcome::Timeout => assert_eq!(ep.steps, cfg.step_budget),
        Outcome::Collision => {
            let last = ep.trajectory.last().unwrap();
            let prev = &ep.trajectory[ep.trajectory.len() - 2];
            assert!(!world.segment_free([prev.x, prev.y], [last.x, last.y]));
        }
    }
}

#[test]
fn episodes_respect_kinematics_and_outcome_definitions() {
    let cfg = CycleConfig::default();
    let oracle = OraclePlanner::default();
    let partial = PartialPerception::new(OraclePlanner::default(), 0.5, 3);
    let stub = StubPlanner::new(StubConfig::default()).unwrap();
    let planners: [&dyn LocalPlanner; 3] = [&oracle, &partial, &stub];
    let mut outcomes = std::collections::HashSet::new();
    for (wi, kind) in [WorldKind::Scatter, WorldKind::Rooms, WorldKind::Scatter].into_iter().enumerate() {
        let world = gen_world(kind, 30 + wi as u64, (60, 60), 0.5).unwrap();
        let map = hint_map_for(&world, 2.0).unwrap();
        for (li, level) in [Level::Easy, Level::Medium].into_iter().enumerate() {
            let (start, goal) = sample_task(&world, level, (wi * 10 + li) as u64, &cfg.control).unwrap();
            for planner in planners {
                let ep = run_cycle(planner, Some(&map), &world, start, goal, &cfg).unwrap();
                check(&ep, &world, &cfg);
                outcomes.insert(format!("{:?}", ep.outcome));
            }
        }
    }
    assert!(outcomes.contains("Success"));
}

#[test]
fn oracle_reaches_nearby_goals_in_open_space() {
    let world = WorldModel::empty(60, 60, 0.5).unwrap();
    let cfg = CycleConfig::default();
    for (i, goal) in [[25.0, 15.0], [5.0, 25.0], [15.0, 2.0], [28.0, 28.0]].into_iter().enumerate() {
        let start = Pose2D::new(15.0, 15.0, i as f64);
        let ep = run_cycle(&OraclePlanner::default(), None, &world, start, goal, &cfg).unwrap();
        check(&ep, &world, &cfg);
        assert_eq!(ep.outcome, Outcome::Success, "goal {goal:?}");
    }
}

#[test]
fn start_inside_an_obstacle_is_rejected() {
    let mut world = WorldModel::empty(20, 20, 0.5).unwrap();
    world.set_blocked(4, 4, true);
    let r = run_cycle(
        &OraclePlanner::default(),
        None,
        &world,
        Pose2D::new(2.25, 2.25, 0.0),
        [8.0, 8.0],
        &CycleConfig::default(),
    );
    assert!(r.is_err());
}

#[test]
fn zero_budget_times_out_immediately() {
    let world = WorldModel::empty(20, 20, 0.5).unwrap();
    let cfg = CycleConfig { step_budget: 0, ..CycleConfig::default() };
    let ep = run_cycle(&OraclePlanner::default(), None, &world, Pose2D::new(2.0, 2.0, 0.0), [8.0, 8.0], &cfg).unwrap();
    assert_eq!((ep.outcome, ep.steps), (Outcome::Timeout, 0));
}

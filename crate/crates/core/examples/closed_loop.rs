//! One closed-loop episode per planner on a scatter world, printing the
//! outcome and the first few logged decisions.
//!
//! cargo run --example closed_loop -- [seed]

use dualbev::global_map::DEFAULT_SIGMA;
use dualbev::integration::{run_cycle, CycleConfig};
use dualbev::local_planner::{LocalPlanner, OraclePlanner, StubConfig, StubPlanner};
use dualbev::simulator::{gen_world, hint_map_for, sample_task, Level, WorldKind, DEFAULT_CELL_SIZE};

fn main() -> dualbev::Result<()> {
    let seed: u64 = std::env::args().nth(1).map(|s| s.parse().expect("seed")).unwrap_or(2);
    let world = gen_world(WorldKind::Scatter, seed, (80, 80), DEFAULT_CELL_SIZE)?;
    let map = hint_map_for(&world, DEFAULT_SIGMA)?;
    let cycle = CycleConfig::default();
    let (start, goal) = sample_task(&world, Level::Medium, seed, &cycle.control)?;
    println!(
        "start ({:.1}, {:.1}) heading {:.2}, goal ({:.1}, {:.1})",
        start.x, start.y, start.heading, goal[0], goal[1]
    );

    let oracle = OraclePlanner::default();
    let stub = StubPlanner::new(StubConfig { seed, ..StubConfig::default() })?;
    let planners: [(&str, &dyn LocalPlanner); 2] = [("oracle", &oracle), ("stub", &stub)];
    for (name, planner) in planners {
        let ep = run_cycle(planner, Some(&map), &world, start, goal, &cycle)?;
        println!("{name}: {:?} after {} steps, {:.1} m travelled", ep.outcome, ep.steps, ep.displacement);
        for line in ep.trajectory_csv().lines().take(4) {
            println!("  {line}");
        }
    }
    Ok(())
}

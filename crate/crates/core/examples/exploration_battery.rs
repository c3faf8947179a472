//! Paired exploration battery on scatter worlds, with and without the hint map,
//! for a fully informed oracle and for one that misses some obstacles.
//!
//! cargo run --release --example exploration_battery -- [trials] [seed] [miss_rate]

use dualbev::global_map::DEFAULT_SIGMA;
use dualbev::integration::CycleConfig;
use dualbev::local_planner::{LocalPlanner, OraclePlanner, PartialPerception};
use dualbev::simulator::{eval_exploration, gen_world, ExplorationSetup, WorldKind, DEFAULT_CELL_SIZE};

fn main() -> dualbev::Result<()> {
    let mut args = std::env::args().skip(1);
    let trials: usize = args.next().map(|s| s.parse().expect("trials")).unwrap_or(20);
    let seed: u64 = args.next().map(|s| s.parse().expect("seed")).unwrap_or(1);
    let miss_rate: f64 = args.next().map(|s| s.parse().expect("miss rate")).unwrap_or(0.3);

    let worlds = (0..4)
        .map(|i| gen_world(WorldKind::Scatter, seed + i, (80, 80), DEFAULT_CELL_SIZE))
        .collect::<dualbev::Result<Vec<_>>>()?;
    let informed = OraclePlanner::default();
    let partial = PartialPerception::new(OraclePlanner::default(), miss_rate, seed);
    let planners: [(&str, &dyn LocalPlanner); 2] = [("full perception", &informed), ("partial perception", &partial)];
    for (name, planner) in planners {
        for (label, use_map, k) in [("with map, k=0.5", true, 0.5), ("without map, k=0", false, 0.0)] {
            let setup =
                ExplorationSetup { use_map, sigma: DEFAULT_SIGMA, cycle: CycleConfig { k, ..Default::default() } };
            let run = eval_exploration(planner, &setup, &worlds, trials, seed)?;
            println!("== {name}, {label}\n{}", run.report.to_table());
        }
    }
    Ok(())
}

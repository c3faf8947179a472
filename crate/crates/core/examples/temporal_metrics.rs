//! Score temporal-distance predictors against shortest-path ground truth.
//!
//! cargo run --release --example temporal_metrics -- [pairs]

use dualbev::integration::ControlParams;
use dualbev::simulator::{
    eval_temporal_metrics, gen_world, ConstantPredictor, NoisyPredictor, OraclePredictor, TemporalPredictor, WorldKind,
    DEFAULT_CELL_SIZE,
};

fn main() -> dualbev::Result<()> {
    let pairs: usize = std::env::args().nth(1).map(|s| s.parse().expect("pairs")).unwrap_or(2000);
    let control = ControlParams::default();
    let world = gen_world(WorldKind::Scatter, 9, (80, 80), DEFAULT_CELL_SIZE)?;
    let mut predictors: Vec<(&str, Box<dyn TemporalPredictor>)> = vec![
        ("oracle", Box::new(OraclePredictor::new(control))),
        ("noisy +-2", Box::new(NoisyPredictor::new(control, 2.0, 1))),
        ("noisy +-4", Box::new(NoisyPredictor::new(control, 4.0, 1))),
        ("constant 10", Box::new(ConstantPredictor(10.0))),
    ];
    for (name, p) in predictors.iter_mut() {
        let report = eval_temporal_metrics(p.as_mut(), &world, pairs, 5, &control)?;
        println!("== {name}\n{}", report.to_table());
    }
    Ok(())
}

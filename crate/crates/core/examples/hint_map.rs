//! Build traversability hint maps two ways (distance-transform synthesis and a
//! fitted pixel classifier) and write them as georeferenced PGMs.
//!
//! cargo run --example hint_map -- [out_dir]

use std::path::PathBuf;

use dualbev::global_map::{
    fit_tiny_gbpm, rasterize_trajectories, synth_hint_map, FitOptions, TrajectoryLog, DEFAULT_SIGMA,
};
use dualbev::raster::write_pgm;
use dualbev::simulator::{gen_world, WorldKind, DEFAULT_CELL_SIZE};

fn main() -> dualbev::Result<()> {
    let out = PathBuf::from(std::env::args().nth(1).unwrap_or_else(|| std::env::temp_dir().display().to_string()));
    let world = gen_world(WorldKind::Rooms, 5, (60, 60), DEFAULT_CELL_SIZE)?;

    let synth = synth_hint_map(&world.obstacle_mask(), DEFAULT_SIGMA)?;
    write_pgm(synth.raster(), &out.join("hint_synth.pgm"))?;

    // drive along the room centers to get demonstrations
    let logs =
        vec![TrajectoryLog::new(vec![[2.5, 2.5], [27.5, 2.5]])?, TrajectoryLog::new(vec![[2.5, 2.5], [2.5, 27.5]])?];
    let road = rasterize_trajectories(&logs, world.obstacle_mask().spec(), 0.75)?;
    let fit = fit_tiny_gbpm(&[road], &world.overhead_view(5), FitOptions::default())?;
    write_pgm(fit.map.raster(), &out.join("hint_fit.pgm"))?;

    println!("synth map mean cost {:.3}", mean(synth.raster().cells()));
    println!(
        "fit: {} epochs, loss {:.5} -> {:.5}, mean cost {:.3}",
        fit.loss_curve.len() - 1,
        fit.loss_curve[0],
        fit.loss_curve[fit.loss_curve.len() - 1],
        mean(fit.map.raster().cells())
    );
    println!("wrote hint_synth.pgm and hint_fit.pgm (+ .geo.json) to {}", out.display());
    Ok(())
}

fn mean(v: &[f64]) -> f64 {
    v.iter().sum::<f64>() / v.len() as f64
}

//! Metric batteries: temporal-distance prediction accuracy and single-goal
//! exploration success by difficulty level.

use std::collections::HashMap;
use std::fmt::{self, Write as _};

use rand::seq::SliceRandom;
use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::global_map::synth_hint_map;
use crate::integration::{run_cycle, ControlParams, CycleConfig, EpisodeResult, Outcome, Pose2D};
use crate::local_planner::{DistanceField, LocalPlanner};
use crate::raster::ProbabilityMap;
use crate::rng::{derive_seed, seeded};

use super::world::WorldModel;

/// Labels at or below this many steps are "close", above are "far".
pub const CLOSE_THRESHOLD: f64 = 10.0;
pub const MAX_LABEL: f64 = 20.0;
pub const ERROR_THRESHOLDS: [f64; 3] = [3.0, 2.0, 1.0];
const PAIRS_PER_SOURCE: usize = 8;
const MAX_SAMPLING_ATTEMPTS: usize = 2000;
/// Minimum distance from starts and goals to the nearest obstacle, meters.
const SPAWN_CLEARANCE: f64 = 1.0;
/// Length of the straight, clear stretch required ahead of a start pose, meters.
const START_RUNWAY: f64 = 3.75;
const RUNWAY_MARGIN: f64 = 0.25;

/// Something that estimates the temporal distance between two positions.
pub trait TemporalPredictor {
    fn predict(&mut self, world: &WorldModel, from: [f64; 2], to: [f64; 2]) -> Option<f64>;
}

fn field_steps(
    cache: &mut HashMap<(usize, usize), DistanceField>,
    world: &WorldModel,
    from: [f64; 2],
    to: [f64; 2],
    params: &ControlParams,
) -> Option<f64> {
    let src = world.cell_of(from[0], from[1])?;
    let dst = world.cell_of(to[0], to[1])?;
    if cache.len() > 64 {
        cache.clear();
    }
    let field = cache.entry(src).or_insert_with(|| DistanceField::from_cell(world, src));
    let d = field.at(dst.0, dst.1);
    d.is_finite().then(|| d / params.step_length())
}

/// Exact grid-search temporal distance.
#[derive(Debug, Default)]
pub struct OraclePredictor {
    pub control: ControlParams,
    cache: HashMap<(usize, usize), DistanceField>,
}

impl OraclePredictor {
    pub fn new(control: ControlParams) -> Self {
        Self { control, cache: HashMap::new() }
    }
}

impl TemporalPredictor for OraclePredictor {
    fn predict(&mut self, world: &WorldModel, from: [f64; 2], to: [f64; 2]) -> Option<f64> {
        field_steps(&mut self.cache, world, from, to, &self.control)
    }
}

/// Oracle plus uniform noise in `[-amplitude, amplitude]`.
#[derive(Debug)]
pub struct NoisyPredictor {
    inner: OraclePredictor,
    amplitude: f64,
    rng: crate::rng::SimRng,
}

impl NoisyPredictor {
    pub fn new(control: ControlParams, amplitude: f64, seed: u64) -> Self {
        Self { inner: OraclePredictor::new(control), amplitude, rng: seeded(seed) }
    }
}

impl TemporalPredictor for NoisyPredictor {
    fn predict(&mut self, world: &WorldModel, from: [f64; 2], to: [f64; 2]) -> Option<f64> {
        let base = self.inner.predict(world, from, to)?;
        Some(base + self.rng.gen_range(-self.amplitude..=self.amplitude))
    }
}

/// Always answers the same number of steps.
#[derive(Debug, Clone, Copy)]
pub struct ConstantPredictor(pub f64);

impl TemporalPredictor for ConstantPredictor {
    fn predict(&mut self, _: &WorldModel, _: [f64; 2], _: [f64; 2]) -> Option<f64> {
        Some(self.0)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Level {
    Easy,
    Medium,
    Hard,
}

impl Level {
    pub const ALL: [Level; 3] = [Level::Easy, Level::Medium, Level::Hard];

    /// Start-to-goal straight-line distance range, meters.
    pub fn range(self) -> (f64, f64) {
        match self {
            Level::Easy => (3.0, 10.0),
            Level::Medium => (10.0, 20.0),
            Level::Hard => (20.0, 30.0),
        }
    }
}

impl fmt::Display for Level {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{self:?}")
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DistAccuracy {
    pub error: f64,
    pub accuracy: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LevelReport {
    pub level: Level,
    pub successes: usize,
    pub collisions: usize,
    pub timeouts: usize,
    pub trials: usize,
}

/// Percentages are in `[0, 100]`; fields a battery does not measure are `None`/empty.
#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
pub struct MetricReport {
    pub pairs: usize,
    pub far_close_accuracy: Option<f64>,
    pub dist_accuracy: Vec<DistAccuracy>,
    /// Share of sampled labels in the close class, percent.
    pub close_fraction: Option<f64>,
    pub levels: Vec<LevelReport>,
    pub avg_displacement: Option<f64>,
    pub avg_velocity: Option<f64>,
}

impl MetricReport {
    pub fn accuracy_at(&self, error: f64) -> Option<f64> {
        self.dist_accuracy.iter().find(|d| d.error == error).map(|d| d.accuracy)
    }

    pub fn level(&self, level: Level) -> Option<&LevelReport> {
        self.levels.iter().find(|l| l.level == level)
    }

    /// Aligned plain-text tables.
    pub fn to_table(&self) -> String {
        let mut out = String::new();
        if let Some(fc) = self.far_close_accuracy {
            let _ = writeln!(out, "{:<12} {:>12}", "far_or_close", "|pred-label|<=error");
            let header: Vec<String> =
                self.dist_accuracy.iter().map(|d| format!("{:>8}", format!("e={}", d.error))).collect();
            let _ = writeln!(out, "{:<12} {}", "", header.join(""));
            let vals: Vec<String> = self.dist_accuracy.iter().map(|d| format!("{:>8.2}", d.accuracy)).collect();
            let _ = writeln!(out, "{:<12.2} {}", fc, vals.join(""));
            let _ = writeln!(out, "pairs: {}", self.pairs);
        }
        if !self.levels.is_empty() {
            let _ = writeln!(out, "{:<8} {:>8} {:>10} {:>8}", "Level", "Success", "Collision", "Timeout");
            for l in &self.levels {
                let _ = writeln!(
                    out,
                    "{:<8} {:>8} {:>10} {:>8}",
                    l.level.to_string(),
                    format!("{}/{}", l.successes, l.trials),
                    l.collisions,
                    l.timeouts
                );
            }
            let fmt = |v: Option<f64>| v.map(|v| format!("{v:.2}")).unwrap_or_else(|| "-".into());
            let _ = writeln!(out, "{:<20} {:>10}", "Avg. Displacement(m)", fmt(self.avg_displacement));
            let _ = writeln!(out, "{:<20} {:>10}", "Avg. Velocity(m/s)", fmt(self.avg_velocity));
        }
        out
    }
}

/// Samples `n_pairs` free-cell pairs whose oracle label lies in `[0, 20]`
/// steps and scores the predictor on far/close classification and on
/// `|pred - label| <= error` for errors 3, 2 and 1.
pub fn eval_temporal_metrics(
    predictor: &mut dyn TemporalPredictor,
    world: &WorldModel,
    n_pairs: usize,
    seed: u64,
    control: &ControlParams,
) -> Result<MetricReport> {
    if n_pairs == 0 {
        return Err(Error::InvalidArgument("n_pairs must be at least 1".into()));
    }
    let free: Vec<(usize, usize)> = (0..world.height())
        .flat_map(|r| (0..world.width()).map(move |c| (c, r)))
        .filter(|&(c, r)| !world.is_blocked(c, r))
        .collect();
    if free.len() < 2 {
        return Err(Error::InvalidArgument("world needs at least 2 free cells".into()));
    }
    let mut rng = seeded(seed);
    let step = control.step_length();
    let mut far_close_hits = 0usize;
    let mut dist_hits = [0usize; 3];
    let mut close_labels = 0usize;
    let mut done = 0usize;
    let mut stale = 0usize;
    while done < n_pairs {
        let src = *free.choose(&mut rng).expect("non-empty");
        let field = DistanceField::from_cell(world, src);
        let goals: Vec<(usize, usize)> =
            free.iter().copied().filter(|&(c, r)| field.at(c, r) / step <= MAX_LABEL && (c, r) != src).collect();
        if goals.is_empty() {
            stale += 1;
            if stale > MAX_SAMPLING_ATTEMPTS {
                return Err(Error::Unsatisfiable("no pair with a label within 20 steps".into()));
            }
            continue;
        }
        for _ in 0..PAIRS_PER_SOURCE.min(n_pairs - done) {
            let dst = *goals.choose(&mut rng).expect("non-empty");
            let label = field.at(dst.0, dst.1) / step;
            let from = world.cell_center(src.0, src.1);
            let to = world.cell_center(dst.0, dst.1);
            let is_close = label <= CLOSE_THRESHOLD;
            close_labels += is_close as usize;
            if let Some(pred) = predictor.predict(world, from, to) {
                far_close_hits += ((pred <= CLOSE_THRESHOLD) == is_close) as usize;
                for (hits, err) in dist_hits.iter_mut().zip(ERROR_THRESHOLDS) {
                    // tolerance absorbs rounding in the oracle's own path sums
                    *hits += ((pred - label).abs() <= err + 1e-9) as usize;
                }
            }
            done += 1;
        }
    }
    let pct = |hits: usize| 100.0 * hits as f64 / n_pairs as f64;
    Ok(MetricReport {
        pairs: n_pairs,
        far_close_accuracy: Some(pct(far_close_hits)),
        dist_accuracy: ERROR_THRESHOLDS
            .iter()
            .zip(dist_hits)
            .map(|(&error, hits)| DistAccuracy { error, accuracy: pct(hits) })
            .collect(),
        close_fraction: Some(pct(close_labels)),
        ..Default::default()
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ExplorationSetup {
    /// Use a synthesized hint map; without one every path scores 0.
    pub use_map: bool,
    pub sigma: f64,
    pub cycle: CycleConfig,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrialRecord {
    pub level: Level,
    pub world: usize,
    pub start: Pose2D,
    pub goal: [f64; 2],
    pub outcome: Outcome,
    pub steps: usize,
    pub displacement: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ExplorationRun {
    pub report: MetricReport,
    pub trials: Vec<TrialRecord>,
}

/// Start pose and goal for one trial; depends only on the seed and the
/// world, so runs with different planner settings are paired. Starts and
/// goals keep clear of obstacles, the start faces a clear straight runway,
/// and the goal is reachable.
pub fn sample_task(world: &WorldModel, level: Level, seed: u64, control: &ControlParams) -> Result<(Pose2D, [f64; 2])> {
    let mut rng = seeded(seed);
    let (lo, hi) = level.range();
    let (xm, ym) = world.bounds();
    for _ in 0..MAX_SAMPLING_ATTEMPTS {
        let start = [rng.gen_range(0.0..xm), rng.gen_range(0.0..ym)];
        if !world.is_free(start[0], start[1]) || world.clearance(start[0], start[1], SPAWN_CLEARANCE) < SPAWN_CLEARANCE
        {
            continue;
        }
        let dist = rng.gen_range(lo..hi);
        let bearing = rng.gen_range(-std::f64::consts::PI..std::f64::consts::PI);
        let goal = [start[0] + dist * bearing.cos(), start[1] + dist * bearing.sin()];
        if !world.is_free(goal[0], goal[1]) || world.clearance(goal[0], goal[1], SPAWN_CLEARANCE) < SPAWN_CLEARANCE {
            continue;
        }
        let heading = rng.gen_range(-std::f64::consts::PI..std::f64::consts::PI);
        let ahead = [start[0] + START_RUNWAY * heading.cos(), start[1] + START_RUNWAY * heading.sin()];
        if !world.segment_clear(start, ahead, RUNWAY_MARGIN) {
            continue;
        }
        if crate::local_planner::oracle_temporal_distance(world, start, goal, control.speed, control.dt)?.is_none() {
            continue;
        }
        return Ok((Pose2D::new(start[0], start[1], heading), goal));
    }
    Err(Error::Unsatisfiable(format!("could not place a {level} task ({lo}-{hi} m) in a {:.1}x{:.1} m world", xm, ym)))
}

/// Hint map used for a world when maps are enabled. Worlds without
/// obstacles get an all-zero map.
pub fn hint_map_for(world: &WorldModel, sigma: f64) -> Result<ProbabilityMap> {
    if world.impassable_count() == 0 {
        return ProbabilityMap::uniform(world.width(), world.height(), world.georef(), 0.0);
    }
    synth_hint_map(&world.obstacle_mask(), sigma)
}

/// Runs `trials_per_level` closed-loop episodes per difficulty level, cycling
/// through `worlds`.
pub fn eval_exploration(
    planner: &dyn LocalPlanner,
    setup: &ExplorationSetup,
    worlds: &[WorldModel],
    trials_per_level: usize,
    seed: u64,
) -> Result<ExplorationRun> {
    if trials_per_level == 0 {
        return Err(Error::InvalidArgument("trials_per_level must be at least 1".into()));
    }
    if worlds.is_empty() {
        return Err(Error::InvalidArgument("no worlds given".into()));
    }
    let maps: Vec<Option<ProbabilityMap>> = worlds
        .iter()
        .map(|w| setup.use_map.then(|| hint_map_for(w, setup.sigma)).transpose())
        .collect::<Result<_>>()?;

    let mut trials = Vec::new();
    let mut levels = Vec::new();
    for (li, level) in Level::ALL.into_iter().enumerate() {
        let mut lr = LevelReport { level, successes: 0, collisions: 0, timeouts: 0, trials: trials_per_level };
        for t in 0..trials_per_level {
            let wi = t % worlds.len();
            let world = &worlds[wi];
            let task_seed = derive_seed(seed, (li * 1_000_003 + t) as u64);
            let (start, goal) = sample_task(world, level, task_seed, &setup.cycle.control)?;
            let ep: EpisodeResult = run_cycle(planner, maps[wi].as_ref(), world, start, goal, &setup.cycle)?;
            match ep.outcome {
                Outcome::Success => lr.successes += 1,
                Outcome::Collision => lr.collisions += 1,
                Outcome::Timeout => lr.timeouts += 1,
            }
            trials.push(TrialRecord {
                level,
                world: wi,
                start,
                goal,
                outcome: ep.outcome,
                steps: ep.steps,
                displacement: ep.displacement,
            });
        }
        levels.push(lr);
    }

    let successes: Vec<&TrialRecord> = trials.iter().filter(|t| t.outcome == Outcome::Success).collect();
    let avg_displacement =
        (!successes.is_empty()).then(|| successes.iter().map(|t| t.displacement).sum::<f64>() / successes.len() as f64);
    let moving: Vec<&TrialRecord> = trials.iter().filter(|t| t.steps > 0).collect();
    let avg_velocity = (!moving.is_empty()).then(|| {
        moving.iter().map(|t| t.displacement).sum::<f64>()
            / moving.iter().map(|t| t.steps as f64 * setup.cycle.control.dt).sum::<f64>()
    });
    Ok(ExplorationRun { report: MetricReport { levels, avg_displacement, avg_velocity, ..Default::default() }, trials })
}

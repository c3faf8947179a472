//! Command-line surface. `dualbev <command> --help` lists the flags.
//!
//! Exit codes: 0 success, 1 I/O or processing failure, 2 usage error,
//! 3 episode ended in a collision, 4 episode timed out.

use std::fs;
use std::io::Write as _;
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde::{Deserialize, Serialize};

use crate::error::Error;
use crate::global_map::{fit_tiny_gbpm, rasterize_trajectories, synth_hint_map, FitOptions, TrajectoryLog};
use crate::global_map::{DEFAULT_SIGMA, DEFAULT_STROKE_RADIUS};
use crate::integration::{run_cycle, ControlParams, CycleConfig, EpisodeResult, Outcome, Pose2D};
use crate::local_planner::{
    LocalPlanner, OraclePlanner, PartialPerception, StubConfig, StubPlanner, DEFAULT_CURVATURES, DEFAULT_LOOKAHEAD,
    DEFAULT_SUBGOAL_STEPS,
};
use crate::pooling::bench_pooling;
use crate::raster::{read_pgm, write_pgm, write_ppm, ProbabilityMap, Raster, RgbImage};
use crate::rng::derive_seed;
use crate::simulator::{
    eval_exploration, eval_temporal_metrics, gen_world, ConstantPredictor, ExplorationSetup, NoisyPredictor,
    OraclePredictor, TemporalPredictor, WorldKind, WorldModel, DEFAULT_CELL_SIZE,
};

pub const SEED_ENV: &str = "DUALBEV_SEED";

pub const EXIT_OK: u8 = 0;
pub const EXIT_FAILURE: u8 = 1;
pub const EXIT_USAGE: u8 = 2;
pub const EXIT_COLLISION: u8 = 3;
pub const EXIT_TIMEOUT: u8 = 4;

const EVAL_WORLD_DIMS: (usize, usize) = (80, 80);
const EVAL_WORLDS: u64 = 4;
const NOISE_AMPLITUDE: f64 = 2.0;

#[derive(Debug, thiserror::Error)]
pub enum CliError {
    #[error("{0}")]
    Usage(String),
    #[error(transparent)]
    Failed(#[from] Error),
}

impl CliError {
    pub fn exit_code(&self) -> u8 {
        match self {
            Self::Usage(_) => EXIT_USAGE,
            Self::Failed(_) => EXIT_FAILURE,
        }
    }
}

type CliResult<T> = std::result::Result<T, CliError>;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, ValueEnum)]
#[serde(rename_all = "lowercase")]
pub enum PlannerKind {
    Oracle,
    Stub,
}

/// JSON run configuration. Every key is optional; unknown keys are rejected.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    pub k: Option<f64>,
    #[serde(rename = "K")]
    pub candidates: Option<usize>,
    #[serde(rename = "H")]
    pub horizon: Option<usize>,
    #[serde(rename = "P")]
    pub context: Option<usize>,
    pub curvatures: Option<Vec<f64>>,
    #[serde(rename = "v")]
    pub speed: Option<f64>,
    pub dt: Option<f64>,
    pub omega_max: Option<f64>,
    pub goal_radius: Option<f64>,
    pub step_budget: Option<usize>,
    pub d_max: Option<f64>,
    pub sigma: Option<f64>,
    pub seed: Option<u64>,
    pub planner: Option<PlannerKind>,
    pub miss_rate: Option<f64>,
    pub subgoal_steps: Option<f64>,
    pub lookahead: Option<usize>,
    pub world: Option<PathBuf>,
    pub map: Option<PathBuf>,
}

impl RunConfig {
    pub fn from_json(text: &str) -> CliResult<Self> {
        serde_json::from_str(text).map_err(|e| CliError::Usage(format!("bad config: {e}")))
    }

    pub fn load(path: &Path) -> CliResult<Self> {
        let text = fs::read_to_string(path).map_err(Error::from)?;
        Self::from_json(&text)
    }

    /// Keys set in `over` win.
    pub fn merge(self, over: RunConfig) -> RunConfig {
        macro_rules! pick {
            ($($f:ident),*) => { RunConfig { $($f: over.$f.or(self.$f)),* } };
        }
        pick!(
            k,
            candidates,
            horizon,
            context,
            curvatures,
            speed,
            dt,
            omega_max,
            goal_radius,
            step_budget,
            d_max,
            sigma,
            seed,
            planner,
            miss_rate,
            subgoal_steps,
            lookahead,
            world,
            map
        )
    }

    /// Fills defaults and validates ranges. The seed falls back to
    /// `DUALBEV_SEED`, then 0.
    pub fn resolve(&self) -> CliResult<Settings> {
        let seed = match self.seed {
            Some(s) => s,
            None => env_seed()?.unwrap_or(0),
        };
        let control = ControlParams {
            speed: self.speed.unwrap_or(crate::integration::DEFAULT_SPEED),
            dt: self.dt.unwrap_or(crate::integration::DEFAULT_DT),
            omega_max: self.omega_max.unwrap_or(crate::integration::DEFAULT_OMEGA_MAX),
        };
        let defaults = CycleConfig::default();
        let cycle = CycleConfig {
            k: self.k.unwrap_or(defaults.k),
            d_max: self.d_max.unwrap_or(defaults.d_max),
            goal_radius: self.goal_radius.unwrap_or(defaults.goal_radius),
            step_budget: self.step_budget.unwrap_or(defaults.step_budget),
            context_len: self.context.unwrap_or(defaults.context_len),
            control,
        };
        let candidates = self.candidates.unwrap_or(crate::local_planner::DEFAULT_CANDIDATES);
        let curvatures = match (&self.curvatures, self.candidates) {
            (Some(c), Some(k)) if c.len() != k => {
                return Err(CliError::Usage(format!("K = {k} but {} curvatures given", c.len())))
            }
            (Some(c), _) => c.clone(),
            (None, Some(k)) => sweep(k),
            (None, None) => DEFAULT_CURVATURES.to_vec(),
        };
        let s = Settings {
            cycle,
            candidates,
            horizon: self.horizon.unwrap_or(crate::local_planner::DEFAULT_HORIZON),
            curvatures,
            sigma: self.sigma.unwrap_or(DEFAULT_SIGMA),
            seed,
            planner: self.planner.unwrap_or(PlannerKind::Oracle),
            miss_rate: self.miss_rate.unwrap_or(0.0),
            subgoal_steps: self.subgoal_steps.unwrap_or(DEFAULT_SUBGOAL_STEPS),
            lookahead: self.lookahead.unwrap_or(DEFAULT_LOOKAHEAD),
        };
        s.validate()?;
        Ok(s)
    }
}

/// `n` curvatures evenly spread over the default sweep's range.
fn sweep(n: usize) -> Vec<f64> {
    let (lo, hi) = (DEFAULT_CURVATURES[0], DEFAULT_CURVATURES[DEFAULT_CURVATURES.len() - 1]);
    match n {
        0 => Vec::new(),
        1 => vec![0.0],
        _ => (0..n).map(|i| lo + (hi - lo) * i as f64 / (n - 1) as f64).collect(),
    }
}

fn env_seed() -> CliResult<Option<u64>> {
    match std::env::var(SEED_ENV) {
        Ok(v) => v
            .trim()
            .parse()
            .map(Some)
            .map_err(|_| CliError::Usage(format!("{SEED_ENV}={v:?} is not an unsigned integer"))),
        Err(_) => Ok(None),
    }
}

/// Fully resolved run settings.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Settings {
    pub cycle: CycleConfig,
    pub candidates: usize,
    pub horizon: usize,
    pub curvatures: Vec<f64>,
    pub sigma: f64,
    pub seed: u64,
    pub planner: PlannerKind,
    pub miss_rate: f64,
    pub subgoal_steps: f64,
    pub lookahead: usize,
}

impl Settings {
    fn validate(&self) -> CliResult<()> {
        let bad = |m: String| Err(CliError::Usage(m));
        let c = &self.cycle;
        if !(0.0..=1.0).contains(&c.k) {
            return bad(format!("k must lie in [0, 1], got {}", c.k));
        }
        if self.candidates == 0 || self.horizon == 0 || c.context_len == 0 {
            return bad("K, H and P must be at least 1".into());
        }
        for (name, v) in [
            ("v", c.control.speed),
            ("dt", c.control.dt),
            ("omega_max", c.control.omega_max),
            ("goal_radius", c.goal_radius),
            ("d_max", c.d_max),
            ("sigma", self.sigma),
            ("subgoal_steps", self.subgoal_steps),
        ] {
            if !(v > 0.0 && v.is_finite()) {
                return bad(format!("{name} must be positive, got {v}"));
            }
        }
        if c.step_budget == 0 {
            return bad("step_budget must be at least 1".into());
        }
        if !(0.0..=1.0).contains(&self.miss_rate) {
            return bad(format!("miss_rate must lie in [0, 1], got {}", self.miss_rate));
        }
        Ok(())
    }

    pub fn build_planner(&self) -> CliResult<Box<dyn LocalPlanner>> {
        let planner: Box<dyn LocalPlanner> = match self.planner {
            PlannerKind::Oracle => {
                let oracle = OraclePlanner::new(
                    self.curvatures.clone(),
                    self.horizon,
                    self.subgoal_steps,
                    self.lookahead,
                    self.cycle.control,
                )
                .map_err(|e| CliError::Usage(e.to_string()))?;
                if self.miss_rate > 0.0 {
                    Box::new(PartialPerception::new(oracle, self.miss_rate, derive_seed(self.seed, 0x9e5)))
                } else {
                    Box::new(oracle)
                }
            }
            PlannerKind::Stub => Box::new(StubPlanner::new(StubConfig {
                candidates: self.candidates,
                horizon: self.horizon,
                context: self.cycle.context_len,
                seed: self.seed,
                control: self.cycle.control,
                ..StubConfig::default()
            })?),
        };
        Ok(planner)
    }
}

#[derive(Debug, Parser)]
#[command(name = "dualbev", version, about = "BEV pooling, hint maps and closed-loop navigation on synthetic worlds")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Generate a synthetic world and write it as PGM + georeferencing sidecar.
    GenWorld(GenWorldArgs),
    /// Build a hint map from a world (synth) or from trajectories over an overhead view (fit).
    MakeMap(MakeMapArgs),
    /// Run one closed-loop episode.
    Run(RunArgs),
    /// Run a metric battery.
    Eval(EvalArgs),
    /// Time naive against interval pooling; prints one JSON line.
    BenchmarkPooling(BenchArgs),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum MapMode {
    Synth,
    Fit,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Suite {
    Temporal,
    Exploration,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum PredictorKind {
    Oracle,
    Noisy,
    Constant,
}

#[derive(Debug, Args)]
pub struct GenWorldArgs {
    #[arg(long, value_parser = parse_kind)]
    pub kind: WorldKind,
    #[arg(long)]
    pub seed: Option<u64>,
    /// Cells as WIDTHxHEIGHT.
    #[arg(long, value_parser = parse_dims, default_value = "80x80")]
    pub dims: (usize, usize),
    #[arg(long, default_value_t = DEFAULT_CELL_SIZE)]
    pub cell_size: f64,
    #[arg(long)]
    pub out: PathBuf,
}

#[derive(Debug, Args)]
pub struct MakeMapArgs {
    #[arg(long)]
    pub world: PathBuf,
    #[arg(long, value_enum)]
    pub mode: MapMode,
    #[arg(long, default_value_t = DEFAULT_SIGMA)]
    pub sigma: f64,
    /// Trajectory CSVs (`t,x,y`), repeat or comma-separate; fit mode only.
    #[arg(long, value_delimiter = ',')]
    pub trajectories: Vec<PathBuf>,
    /// Overhead image PGM for fit mode; synthesized from the world when absent.
    #[arg(long)]
    pub overhead: Option<PathBuf>,
    #[arg(long, default_value_t = DEFAULT_STROKE_RADIUS)]
    pub stroke_radius: f64,
    #[arg(long, default_value_t = FitOptions::default().max_epochs)]
    pub epochs: usize,
    #[arg(long)]
    pub seed: Option<u64>,
    #[arg(long)]
    pub out: PathBuf,
}

#[derive(Debug, Args)]
pub struct RunArgs {
    /// World PGM; may come from the config file instead.
    #[arg(long)]
    pub world: Option<PathBuf>,
    #[arg(long)]
    pub map: Option<PathBuf>,
    #[arg(long)]
    pub config: Option<PathBuf>,
    /// Goal as X,Y in meters.
    #[arg(long, value_parser = parse_point)]
    pub goal: [f64; 2],
    /// Start as X,Y[,HEADING]; defaults to the world center facing the goal.
    #[arg(long, value_parser = parse_pose)]
    pub start: Option<Pose2D>,
    #[arg(long)]
    pub out_prefix: PathBuf,
    /// Also write `<prefix>.ppm`, the trajectory drawn over the map (or world).
    #[arg(long)]
    pub render: bool,
    #[command(flatten)]
    pub overrides: Overrides,
}

#[derive(Debug, Args)]
pub struct EvalArgs {
    #[arg(long, value_enum)]
    pub suite: Suite,
    /// Pairs (temporal) or trials per level (exploration).
    #[arg(long, default_value_t = 5)]
    pub trials: usize,
    #[arg(long, value_parser = parse_kind, default_value = "scatter")]
    pub world_kind: WorldKind,
    #[arg(long, value_enum, default_value = "oracle")]
    pub predictor: PredictorKind,
    /// Exploration without a hint map (forces k = 0).
    #[arg(long)]
    pub no_map: bool,
    #[arg(long)]
    pub config: Option<PathBuf>,
    /// Also write the report JSON here.
    #[arg(long)]
    pub json: Option<PathBuf>,
    #[command(flatten)]
    pub overrides: Overrides,
}

/// Flags that override config-file keys.
#[derive(Debug, Args, Default)]
pub struct Overrides {
    #[arg(long)]
    pub seed: Option<u64>,
    #[arg(long)]
    pub k: Option<f64>,
    #[arg(long)]
    pub sigma: Option<f64>,
    #[arg(long)]
    pub goal_radius: Option<f64>,
    #[arg(long)]
    pub step_budget: Option<usize>,
    #[arg(long, value_enum)]
    pub planner: Option<PlannerKind>,
    #[arg(long)]
    pub miss_rate: Option<f64>,
}

impl Overrides {
    fn as_config(&self) -> RunConfig {
        RunConfig {
            seed: self.seed,
            k: self.k,
            sigma: self.sigma,
            goal_radius: self.goal_radius,
            step_budget: self.step_budget,
            planner: self.planner,
            miss_rate: self.miss_rate,
            ..RunConfig::default()
        }
    }
}

#[derive(Debug, Args)]
pub struct BenchArgs {
    #[arg(long, default_value_t = 100_000)]
    pub n: usize,
    #[arg(long, default_value_t = 8)]
    pub channels: usize,
    #[arg(long)]
    pub seed: Option<u64>,
}

fn parse_kind(s: &str) -> Result<WorldKind, String> {
    s.parse().map_err(|e: Error| e.to_string())
}

fn parse_dims(s: &str) -> Result<(usize, usize), String> {
    let (w, h) = s.split_once(['x', 'X']).ok_or_else(|| format!("expected WIDTHxHEIGHT, got `{s}`"))?;
    let p = |v: &str| v.trim().parse::<usize>().map_err(|e| format!("`{v}`: {e}"));
    Ok((p(w)?, p(h)?))
}

fn parse_floats(s: &str) -> Result<Vec<f64>, String> {
    s.split(',').map(|v| v.trim().parse::<f64>().map_err(|e| format!("`{v}`: {e}"))).collect()
}

fn parse_point(s: &str) -> Result<[f64; 2], String> {
    match parse_floats(s)?.as_slice() {
        [x, y] => Ok([*x, *y]),
        _ => Err(format!("expected X,Y, got `{s}`")),
    }
}

fn parse_pose(s: &str) -> Result<Pose2D, String> {
    match parse_floats(s)?.as_slice() {
        [x, y] => Ok(Pose2D::new(*x, *y, f64::NAN)),
        [x, y, h] => Ok(Pose2D::new(*x, *y, *h)),
        _ => Err(format!("expected X,Y[,HEADING], got `{s}`")),
    }
}

fn seed_or_env(flag: Option<u64>) -> CliResult<u64> {
    Ok(match flag {
        Some(s) => s,
        None => env_seed()?.unwrap_or(0),
    })
}

fn load_world(path: &Path) -> CliResult<WorldModel> {
    Ok(WorldModel::from_raster(&read_pgm(path)?)?)
}

/// Parses `args` (program name first), runs the command and returns the exit code.
pub fn run_from_args<I, T>(args: I) -> u8
where
    I: IntoIterator<Item = T>,
    T: Into<std::ffi::OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { EXIT_USAGE } else { EXIT_OK };
        }
    };
    match execute(cli.command) {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {e}");
            e.exit_code()
        }
    }
}

pub fn execute(command: Command) -> CliResult<u8> {
    match command {
        Command::GenWorld(a) => gen_world_cmd(a),
        Command::MakeMap(a) => make_map_cmd(a),
        Command::Run(a) => run_cmd(a),
        Command::Eval(a) => eval_cmd(a),
        Command::BenchmarkPooling(a) => bench_cmd(a),
    }
}

fn gen_world_cmd(a: GenWorldArgs) -> CliResult<u8> {
    let seed = seed_or_env(a.seed)?;
    let world = gen_world(a.kind, seed, a.dims, a.cell_size).map_err(|e| CliError::Usage(e.to_string()))?;
    write_pgm(&world.to_raster(), &a.out)?;
    eprintln!(
        "{} world {}x{} seed {seed}: {} impassable cells -> {}",
        a.kind,
        world.width(),
        world.height(),
        world.impassable_count(),
        a.out.display()
    );
    Ok(EXIT_OK)
}

fn make_map_cmd(a: MakeMapArgs) -> CliResult<u8> {
    let world = load_world(&a.world)?;
    let map = match a.mode {
        MapMode::Synth => synth_hint_map(&world.obstacle_mask(), a.sigma)?,
        MapMode::Fit => {
            if a.trajectories.is_empty() {
                return Err(CliError::Usage("--mode fit needs --trajectories".into()));
            }
            let logs = a.trajectories.iter().map(|p| TrajectoryLog::read(p)).collect::<Result<Vec<_>, _>>()?;
            let overhead = match &a.overhead {
                Some(p) => read_pgm(p)?,
                None => world.overhead_view(seed_or_env(a.seed)?),
            };
            let mask = rasterize_trajectories(&logs, overhead.spec(), a.stroke_radius)?;
            let fit = fit_tiny_gbpm(&[mask], &overhead, FitOptions { max_epochs: a.epochs, ..FitOptions::default() })?;
            for (epoch, loss) in fit.loss_curve.iter().enumerate() {
                eprintln!("epoch {epoch:>4} focal loss {loss:.6}");
            }
            fit.map
        }
    };
    write_pgm(map.raster(), &a.out)?;
    Ok(EXIT_OK)
}

fn run_cmd(a: RunArgs) -> CliResult<u8> {
    let file = match &a.config {
        Some(p) => RunConfig::load(p)?,
        None => RunConfig::default(),
    };
    let flags = RunConfig { world: a.world.clone(), map: a.map.clone(), ..a.overrides.as_config() };
    let cfg = file.merge(flags);
    let settings = cfg.resolve()?;
    let world_path =
        cfg.world.clone().ok_or_else(|| CliError::Usage("no world given (--world or config `world`)".into()))?;
    let world = load_world(&world_path)?;
    let map = cfg.map.as_deref().map(|p| read_pgm(p).and_then(ProbabilityMap::new)).transpose()?;

    let start = match a.start {
        Some(s) => s,
        None => {
            let (w, h) = world.bounds();
            Pose2D::new(w / 2.0, h / 2.0, f64::NAN)
        }
    };
    let start = if start.heading.is_nan() {
        Pose2D::new(start.x, start.y, (a.goal[1] - start.y).atan2(a.goal[0] - start.x))
    } else {
        start
    };
    let planner = settings.build_planner()?;
    let episode = run_cycle(planner.as_ref(), map.as_ref(), &world, start, a.goal, &settings.cycle)?;

    let with_ext = |ext: &str| {
        let mut p = a.out_prefix.clone().into_os_string();
        p.push(ext);
        PathBuf::from(p)
    };
    if let Some(dir) = a.out_prefix.parent().filter(|d| !d.as_os_str().is_empty()) {
        fs::create_dir_all(dir).map_err(Error::from)?;
    }
    fs::write(with_ext(".csv"), episode.trajectory_csv()).map_err(Error::from)?;
    fs::write(with_ext(".json"), serde_json::to_vec_pretty(&episode).map_err(Error::from)?).map_err(Error::from)?;
    if a.render {
        let img = render_episode(&episode, map.as_ref().map(ProbabilityMap::raster), &world);
        write_ppm(&img, &with_ext(".ppm"))?;
    }
    eprintln!(
        "{:?} after {} steps, {:.2} m travelled, {:.2} m from goal",
        episode.outcome,
        episode.steps,
        episode.displacement,
        episode.final_goal_distance()
    );
    Ok(match episode.outcome {
        Outcome::Success => EXIT_OK,
        Outcome::Collision => EXIT_COLLISION,
        Outcome::Timeout => EXIT_TIMEOUT,
    })
}

/// Map (or world) in gray, trajectory red, start green, goal blue.
pub fn render_episode(episode: &EpisodeResult, map: Option<&Raster<f64>>, world: &WorldModel) -> RgbImage {
    let world_raster;
    let base = match map {
        Some(m) => m,
        None => {
            world_raster = world.to_raster();
            &world_raster
        }
    };
    let mut img = RgbImage::from_gray(base);
    let mut mark = |x: f64, y: f64, rgb: [u8; 3]| {
        if let Some((c, r)) = base.pixel_of(x, y) {
            img.put(c, r, rgb);
        }
    };
    for pair in episode.trajectory.windows(2) {
        let (a, b) = (pair[0], pair[1]);
        let n = ((b.x - a.x).hypot(b.y - a.y) / (0.5 * base.mpp())).ceil().max(1.0) as usize;
        for i in 0..=n {
            let t = i as f64 / n as f64;
            mark(a.x + t * (b.x - a.x), a.y + t * (b.y - a.y), [220, 30, 30]);
        }
    }
    mark(episode.start.x, episode.start.y, [30, 200, 30]);
    mark(episode.goal[0], episode.goal[1], [40, 80, 240]);
    img
}

fn eval_cmd(a: EvalArgs) -> CliResult<u8> {
    let file = match &a.config {
        Some(p) => RunConfig::load(p)?,
        None => RunConfig::default(),
    };
    let mut flags = a.overrides.as_config();
    if a.no_map {
        flags.k = Some(0.0);
    }
    let settings = file.merge(flags).resolve()?;
    if a.trials == 0 {
        return Err(CliError::Usage("--trials must be at least 1".into()));
    }
    let worlds = (0..EVAL_WORLDS)
        .map(|i| gen_world(a.world_kind, derive_seed(settings.seed, i), EVAL_WORLD_DIMS, DEFAULT_CELL_SIZE))
        .collect::<Result<Vec<_>, _>>()?;
    let report = match a.suite {
        Suite::Temporal => {
            let control = settings.cycle.control;
            let mut predictor: Box<dyn TemporalPredictor> = match a.predictor {
                PredictorKind::Oracle => Box::new(OraclePredictor::new(control)),
                PredictorKind::Noisy => Box::new(NoisyPredictor::new(control, NOISE_AMPLITUDE, settings.seed)),
                PredictorKind::Constant => Box::new(ConstantPredictor(crate::simulator::metrics::CLOSE_THRESHOLD)),
            };
            eval_temporal_metrics(predictor.as_mut(), &worlds[0], a.trials, settings.seed, &control)?
        }
        Suite::Exploration => {
            let planner = settings.build_planner()?;
            let setup = ExplorationSetup { use_map: !a.no_map, sigma: settings.sigma, cycle: settings.cycle };
            eval_exploration(planner.as_ref(), &setup, &worlds, a.trials, settings.seed)?.report
        }
    };
    let json = serde_json::to_string(&report).map_err(Error::from)?;
    if let Some(p) = &a.json {
        fs::write(p, &json).map_err(Error::from)?;
    }
    println!("{json}");
    eprint!("{}", report.to_table());
    Ok(EXIT_OK)
}

fn bench_cmd(a: BenchArgs) -> CliResult<u8> {
    let seed = seed_or_env(a.seed)?;
    if a.n == 0 || a.channels == 0 {
        return Err(CliError::Usage("--n and --channels must be at least 1".into()));
    }
    let report = bench_pooling(a.n, a.channels, seed)?;
    let line = serde_json::to_string(&report).map_err(Error::from)?;
    let mut out = std::io::stdout().lock();
    writeln!(out, "{line}").map_err(Error::from)?;
    Ok(EXIT_OK)
}

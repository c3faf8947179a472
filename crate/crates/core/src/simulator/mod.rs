//! Synthetic worlds and the evaluation batteries run on them.

pub mod metrics;
pub mod world;

pub use metrics::{
    eval_exploration, eval_temporal_metrics, hint_map_for, sample_task, ConstantPredictor, DistAccuracy,
    ExplorationRun, ExplorationSetup, Level, LevelReport, MetricReport, NoisyPredictor, OraclePredictor,
    TemporalPredictor, TrialRecord,
};
pub use world::{gen_world, WorldKind, WorldModel, DEFAULT_CELL_SIZE};

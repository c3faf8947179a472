use std::path::PathBuf;

use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid camera: {0}")]
    InvalidCamera(String),

    #[error("invalid grid spec: {0}")]
    InvalidGrid(String),

    #[error("shape mismatch: expected {expected}, got {actual}")]
    ShapeMismatch { expected: String, actual: String },

    #[error("channel count mismatch: cloud has {expected} channels, point has {actual}")]
    ChannelMismatch { expected: usize, actual: usize },

    #[error("grid index ({x}, {y}) outside {nx}x{ny} grid")]
    IndexOutOfGrid { x: usize, y: usize, nx: usize, ny: usize },

    #[error("length mismatch: {left} vs {right}")]
    LengthMismatch { left: usize, right: usize },

    #[error("probability {0} out of range")]
    ProbabilityOutOfRange(f64),

    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("raster has no foreground pixels")]
    EmptyMask,

    #[error("degenerate training mask: {0}")]
    DegenerateMask(String),

    #[error("georeferencing mismatch: {0}")]
    GeorefMismatch(String),

    #[error("point ({x}, {y}) lies outside the raster")]
    OutsideRaster { x: f64, y: f64 },

    #[error("position ({x}, {y}) lies outside the world bounds")]
    OutsideWorld { x: f64, y: f64 },

    #[error("position ({x}, {y}) is in an impassable cell")]
    Impassable { x: f64, y: f64 },

    #[error("empty candidate list")]
    NoCandidates,

    #[error("{0}")]
    Unsatisfiable(String),

    #[error("malformed PNM data: {0}")]
    Format(String),

    #[error("missing georeferencing sidecar {0}")]
    MissingSidecar(PathBuf),

    #[error("malformed CSV at line {line}: {msg}")]
    Csv { line: usize, msg: String },

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

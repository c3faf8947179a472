//! Dual-layer BEV navigation.
//!
//! A local layer lifts camera features into a bird's-eye-view grid and
//! proposes short candidate paths; a global layer keeps a georeferenced map
//! of traversability hints. Each control cycle projects the candidates onto
//! the map and drives along the one minimizing
//! `k * score + (1 - k) * normalized temporal distance`.
//!
//! Learned components are replaced by checkable stand-ins: an oracle local
//! planner backed by grid search, a fixed-weight stub that exercises the
//! lift/pool/decode pipeline, and a small logistic hint-map model.

// `!(x > 0.0)` style checks are deliberate: they also reject NaN.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod cli;
pub mod error;
pub mod geometry;
pub mod global_map;
pub mod integration;
pub mod local_planner;
pub mod losses;
pub mod pooling;
pub mod raster;
pub mod rng;
pub mod simulator;

pub use error::{Error, Result};

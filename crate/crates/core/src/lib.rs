//! Desk-scale pool-based active-learning laboratory.
//!
//! The crate trains small MLP classifiers on synthetic blob datasets and
//! compares acquisition strategies: prediction stability (variance of
//! per-epoch prediction snapshots), ablations of it, and spatial baselines
//! (entropy, least confidence, random). Experiments run multiple paired
//! trials from a single master seed and are bit-for-bit reproducible.

pub mod acquisition;
pub mod error;
pub mod exec;
pub mod experiment;
pub mod matrix;
pub mod nn;
pub mod pool;
pub mod seeding;

pub use error::{Error, Result};

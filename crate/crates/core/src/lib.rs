//! Dataset factory for optimization-code instruction tuning.
//!
//! The pipeline synthesizes optimization problems, benchmarks a pool of
//! configured optimizers to label each problem with its best solver,
//! renders problems as prompts in several writing styles paired with
//! optimizer code, and provides sampling, contrastive-loss and evaluation
//! metric utilities over the resulting instruction set.

pub mod bench;
pub mod dataset;
pub mod error;
pub mod expr;
pub mod jsonl;
pub mod metrics;
pub mod optim;
pub mod problem;
pub mod render;
pub mod seed;

pub use error::{Error, Result};

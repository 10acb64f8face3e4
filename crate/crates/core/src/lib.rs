//! Critic/generator feature transformation for tabular data.

pub mod agents;
pub mod dataset;
pub mod diagnosis;
pub mod expr;
pub mod harness;
pub mod refine;
pub mod rng;

//! Desk-scale online continual learning on hierarchically expanding label
//! spaces.
//!
//! The crate is organized around the pieces of an online class-incremental
//! experiment:
//!
//! - [`taxonomy`]: rooted, level-stratified label trees and their file format
//! - [`dataset`]: labeled feature vectors, a synthetic hierarchical-Gaussian
//!   generator, and stratified splitting
//! - [`stream`]: task-partitioned online streams (single-depth, multi-depth,
//!   and classic disjoint scenarios)
//! - [`learner`]: a multi-head MLP classifier with one softmax head per
//!   hierarchy level, trained by plain SGD with analytic gradients
//! - [`memory`]: bounded rehearsal memory with pseudo-label eviction,
//!   reservoir sampling, and class-balanced policies
//! - [`sampler`]: training-batch construction (flexible memory sampling,
//!   replay-style 50/50 batches, memory-only batches)
//! - [`trainer`]: the online loop, any-time evaluation, and metrics export

pub mod dataset;
pub mod learner;
pub mod memory;
pub mod sampler;
pub mod stream;
pub mod taxonomy;
pub mod trainer;

pub use dataset::{Dataset, Labels, Sample};
pub use learner::{Batch, BatchItem, BatchSource, MultiHeadModel, StepResult};
pub use memory::{ImportanceMode, ImportanceTracker, RehearsalMemory};
pub use sampler::FmsState;
pub use stream::{Scenario, TaskSpec, TaskStream};
pub use taxonomy::{LabelId, Taxonomy};
pub use trainer::{Method, MetricsLog, RunConfig, Summary};

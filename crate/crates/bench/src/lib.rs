//! Shared fixtures for the pipeline benchmarks.

use std::sync::Arc;

use hlecl_core::dataset::{gen_hier_gaussians, Dataset, Labels, Sample, SamplesPerLeaf};
use hlecl_core::learner::MultiHeadModel;
use hlecl_core::memory::{pl_insert, ImportanceTracker, RehearsalMemory};
use hlecl_core::taxonomy::{LabelId, Taxonomy};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

/// Two-level taxonomy plus a matched dataset at benchmark scale.
pub fn two_level_dataset(parents: usize, children: usize, per_leaf: usize) -> Dataset {
    let tax = Arc::new(Taxonomy::uniform(&[parents, children]).unwrap());
    gen_hier_gaussians(
        &tax,
        32,
        &SamplesPerLeaf::Uniform(per_leaf),
        10.0,
        2.5,
        2.0,
        7,
    )
    .unwrap()
}

/// Model with registered heads for both levels and randomized parameters.
pub fn warm_model(taxonomy: &Taxonomy, seed: u64) -> MultiHeadModel {
    let mut model = MultiHeadModel::init(32, &[64], seed).unwrap();
    for h in 1..=taxonomy.num_levels() {
        for &label in taxonomy.level_labels(h).unwrap() {
            model.expand_head(h, label).unwrap();
        }
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut params = model.params_flat();
    for v in params.iter_mut() {
        *v = rng.random_range(-0.3..0.3);
    }
    model.set_params_flat(&params).unwrap();
    model
}

/// Memory filled to capacity through the pseudo-label policy.
pub fn full_memory(
    dataset: &Dataset,
    model: &MultiHeadModel,
    capacity: usize,
) -> (RehearsalMemory, ImportanceTracker) {
    let mut memory = RehearsalMemory::new(capacity);
    let mut tracker = ImportanceTracker::ema(0.1);
    let mut rng = ChaCha8Rng::seed_from_u64(11);
    for s in dataset.samples.iter().take(capacity) {
        pl_insert(&mut memory, &mut tracker, model, s.clone()).unwrap();
    }
    for slot in 0..memory.len() {
        tracker.set_value(slot, rng.random_range(-0.5..0.5));
    }
    (memory, tracker)
}

/// A stream buffer of leaf-labeled samples.
pub fn stream_buffer(dataset: &Dataset, size: usize) -> Vec<Sample> {
    dataset.samples[..size].to_vec()
}

/// Convenience label constructor used by the batch benchmarks.
pub fn single(level: usize, label: u32) -> Labels {
    Labels::Single((level, LabelId(label)))
}

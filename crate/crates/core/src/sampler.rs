//! Training-batch construction.
//!
//! Flexible memory sampling (FMS) gates each incoming stream sample through
//! a per-class Bernoulli whose acceptance probability ramps linearly from 0
//! (class just appeared) to 1 over `ramp` iterations. Rejected stream
//! samples are swapped for extra memory draws, so right after a class shows
//! up training is effectively memory-only, and once the ramp saturates the
//! batch matches the replay-style 50/50 composition.
//!
//! The 0 and 1 endpoints never consume randomness, so a saturated FMS batch
//! is draw-for-draw identical to the replay batch under a shared rng.

use std::collections::{BTreeMap, BTreeSet};

use rand::Rng;
use thiserror::Error;

use crate::dataset::Sample;
use crate::learner::{Batch, BatchSource};
use crate::memory::RehearsalMemory;
use crate::taxonomy::LabelId;

#[derive(Debug, Error)]
pub enum SamplerError {
    #[error("cannot build a batch: stream buffer and memory are both empty")]
    EmptyBatch,
    #[error("memory is empty")]
    EmptyMemory,
}

/// First-seen iterations per class plus the ramp length `T`.
#[derive(Debug, Clone)]
pub struct FmsState {
    first_seen: BTreeMap<(usize, LabelId), u64>,
    pub ramp: u64,
}

impl FmsState {
    pub fn new(ramp: u64) -> FmsState {
        assert!(ramp >= 1, "ramp must be >= 1");
        FmsState {
            first_seen: BTreeMap::new(),
            ramp,
        }
    }

    /// Records the first-seen iteration of `class`; later calls never
    /// overwrite it.
    pub fn note_first_seen(&mut self, class: (usize, LabelId), t: u64) {
        self.first_seen.entry(class).or_insert(t);
    }

    pub fn first_seen(&self, class: (usize, LabelId)) -> Option<u64> {
        self.first_seen.get(&class).copied()
    }

    /// Acceptance probability for a class at iteration `t`:
    /// `min((t - T_c) / T, 1)`, and 0 for classes never seen.
    pub fn acceptance(&self, class: (usize, LabelId), t: u64) -> f64 {
        match self.first_seen(class) {
            Some(tc) => ((t.saturating_sub(tc)) as f64 / self.ramp as f64).min(1.0),
            None => 0.0,
        }
    }
}

fn draw_memory_base<R: Rng>(
    memory: &RehearsalMemory,
    amount: usize,
    rng: &mut R,
    batch: &mut Batch,
    used: &mut BTreeSet<usize>,
) {
    if amount == 0 || memory.is_empty() {
        return;
    }
    for slot in rand::seq::index::sample(rng, memory.len(), amount) {
        batch.push(memory.get(slot).clone(), BatchSource::Memory { slot });
        used.insert(slot);
    }
}

/// Flexible memory sampling. The batch starts with `min(|stream|, |memory|)`
/// uniform memory draws; each stream sample is then admitted with the ramp
/// probability of its finest class or, when rejected, replaced with a fresh
/// memory draw outside the current batch (falling back to the stream sample
/// if no memory sample remains).
pub fn fms_build_batch<R: Rng>(
    stream: &[Sample],
    memory: &RehearsalMemory,
    state: &FmsState,
    t: u64,
    rng: &mut R,
) -> Result<Batch, SamplerError> {
    if stream.is_empty() && memory.is_empty() {
        return Err(SamplerError::EmptyBatch);
    }
    let mut batch = Batch::default();
    let mut used = BTreeSet::new();
    draw_memory_base(memory, stream.len().min(memory.len()), rng, &mut batch, &mut used);

    for sample in stream {
        let p = state.acceptance(sample.labels.finest(), t);
        // endpoints are exact and consume no randomness
        let accept = if p >= 1.0 {
            true
        } else if p <= 0.0 {
            false
        } else {
            rng.random_bool(p)
        };
        if accept {
            batch.push(sample.clone(), BatchSource::Stream);
            continue;
        }
        let remaining: Vec<usize> = (0..memory.len()).filter(|s| !used.contains(s)).collect();
        if remaining.is_empty() {
            // nothing left to replace with; keep the stream sample
            batch.push(sample.clone(), BatchSource::Stream);
        } else {
            let slot = remaining[rng.random_range(0..remaining.len())];
            batch.push(memory.get(slot).clone(), BatchSource::Memory { slot });
            used.insert(slot);
        }
    }
    Ok(batch)
}

/// Replay-style batch: `min(|stream|, |memory|)` uniform memory draws
/// without replacement, then the whole stream buffer.
pub fn er_build_batch<R: Rng>(
    stream: &[Sample],
    memory: &RehearsalMemory,
    rng: &mut R,
) -> Batch {
    let mut batch = Batch::default();
    let mut used = BTreeSet::new();
    draw_memory_base(memory, stream.len().min(memory.len()), rng, &mut batch, &mut used);
    for sample in stream {
        batch.push(sample.clone(), BatchSource::Stream);
    }
    batch
}

/// `batch_size` uniform memory draws without replacement (capped at
/// `|memory|`); contains no stream samples.
pub fn memory_only_batch<R: Rng>(
    memory: &RehearsalMemory,
    batch_size: usize,
    rng: &mut R,
) -> Result<Batch, SamplerError> {
    if memory.is_empty() {
        return Err(SamplerError::EmptyMemory);
    }
    let mut batch = Batch::default();
    let mut used = BTreeSet::new();
    draw_memory_base(
        memory,
        batch_size.min(memory.len()),
        rng,
        &mut batch,
        &mut used,
    );
    Ok(batch)
}

//! The trainable model: a shared MLP encoder with a rectifier nonlinearity
//! and one softmax classifier head per hierarchy level. Heads grow a
//! zero-initialized row whenever a new class is registered, so logits of
//! already-registered classes never move on registration.
//!
//! Everything runs in double precision with hand-derived reverse-mode
//! gradients; `params_flat`/`set_params_flat` expose the parameter vector for
//! finite-difference checks and checkpointing.

use std::collections::BTreeMap;
use std::fs;
use std::io::{self, BufRead, Write};
use std::path::Path;

use ndarray::{Array1, Array2};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use thiserror::Error;

use crate::dataset::Sample;
use crate::taxonomy::LabelId;

#[derive(Debug, Error)]
pub enum LearnerError {
    #[error("bad shape: {0}")]
    BadShape(String),
    #[error("feature length {got} does not match model input {expected}")]
    DimMismatch { expected: usize, got: usize },
    #[error("no classes registered yet")]
    NoClassesRegistered,
    #[error("no classes registered at level {0}")]
    NoClassesAtLevel(usize),
    #[error("class (level {0}, label {1}) already registered")]
    AlreadyRegistered(usize, LabelId),
    #[error("class (level {0}, label {1}) is not registered")]
    UnregisteredClass(usize, LabelId),
    #[error("non-finite gradient; step aborted, model unchanged")]
    NaNGradient,
    #[error("learning rate must be finite and >= 0")]
    InvalidLearningRate,
    #[error("training batch is empty")]
    EmptyBatch,
    #[error("checkpoint: {0}")]
    Checkpoint(String),
    #[error(transparent)]
    Io(#[from] io::Error),
}

/// Where a training-batch sample came from; memory provenance keeps the slot
/// so importance updates can be routed back.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum BatchSource {
    Stream,
    Memory { slot: usize },
}

#[derive(Debug, Clone)]
pub struct BatchItem {
    pub sample: Sample,
    pub source: BatchSource,
    pub weight: f64,
}

/// A training batch; per-sample weights default to 1.
#[derive(Debug, Clone, Default)]
pub struct Batch {
    pub items: Vec<BatchItem>,
}

impl Batch {
    pub fn push(&mut self, sample: Sample, source: BatchSource) {
        self.items.push(BatchItem {
            sample,
            source,
            weight: 1.0,
        });
    }

    pub fn of_stream(samples: &[Sample]) -> Batch {
        let mut b = Batch::default();
        for s in samples {
            b.push(s.clone(), BatchSource::Stream);
        }
        b
    }

    pub fn len(&self) -> usize {
        self.items.len()
    }

    pub fn is_empty(&self) -> bool {
        self.items.is_empty()
    }
}

/// Per-sample losses measured at the parameters before and after one
/// gradient step, paired with each sample's provenance.
#[derive(Debug, Clone)]
pub struct StepResult {
    pub sources: Vec<BatchSource>,
    pub loss_before: Vec<f64>,
    pub loss_after: Vec<f64>,
}

impl StepResult {
    pub fn mean_before(&self) -> f64 {
        mean(&self.loss_before)
    }

    pub fn mean_after(&self) -> f64 {
        mean(&self.loss_after)
    }
}

fn mean(v: &[f64]) -> f64 {
    if v.is_empty() {
        0.0
    } else {
        v.iter().sum::<f64>() / v.len() as f64
    }
}

#[derive(Debug, Clone, PartialEq)]
struct Layer {
    w: Array2<f64>,
    b: Array1<f64>,
}

/// Per-layer (weight, bias) gradients, in layer order.
type LayerGrads = Vec<(Array2<f64>, Array1<f64>)>;
/// Per-level (weight, bias) head gradients.
type HeadGrads = BTreeMap<usize, (Array2<f64>, Array1<f64>)>;

#[derive(Debug, Clone, PartialEq)]
struct Head {
    w: Array2<f64>,
    b: Array1<f64>,
    classes: Vec<LabelId>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Schedule {
    Constant,
}

/// Shared encoder plus one growing softmax head per hierarchy level.
#[derive(Debug, Clone, PartialEq)]
pub struct MultiHeadModel {
    feature_dim: usize,
    layers: Vec<Layer>,
    heads: BTreeMap<usize, Head>,
    class_row: BTreeMap<(usize, LabelId), usize>,
    enc_out: usize,
    pub learning_rate: f64,
    pub schedule: Schedule,
}

/// Logits and softmax probabilities of one head, with the row-to-label map.
#[derive(Debug, Clone)]
pub struct LevelOutput {
    pub logits: Vec<f64>,
    pub probs: Vec<f64>,
    pub classes: Vec<LabelId>,
}

struct EncoderTrace {
    /// activations[0] is the input; activations[i] the output of layer i
    activations: Vec<Array1<f64>>,
    preacts: Vec<Array1<f64>>,
}

fn softmax(logits: &Array1<f64>) -> Array1<f64> {
    let max = logits.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let exps = logits.mapv(|v| (v - max).exp());
    let sum = exps.sum();
    exps / sum
}

fn log_prob(logits: &Array1<f64>, row: usize) -> f64 {
    let max = logits.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let lse = logits.mapv(|v| (v - max).exp()).sum().ln() + max;
    logits[row] - lse
}

impl MultiHeadModel {
    /// Fresh model with fan-in-scaled uniform encoder weights, zero biases,
    /// and no classifier heads. Deterministic per seed. An empty
    /// `encoder_layers` makes the encoder an identity passthrough.
    pub fn init(
        feature_dim: usize,
        encoder_layers: &[usize],
        seed: u64,
    ) -> Result<MultiHeadModel, LearnerError> {
        if feature_dim == 0 {
            return Err(LearnerError::BadShape("feature_dim must be >= 1".into()));
        }
        if encoder_layers.contains(&0) {
            return Err(LearnerError::BadShape("layer widths must be >= 1".into()));
        }
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut layers = Vec::new();
        let mut fan_in = feature_dim;
        for &width in encoder_layers {
            let bound = 1.0 / (fan_in as f64).sqrt();
            let w = Array2::from_shape_fn((width, fan_in), |_| rng.random_range(-bound..bound));
            layers.push(Layer {
                w,
                b: Array1::zeros(width),
            });
            fan_in = width;
        }
        Ok(MultiHeadModel {
            feature_dim,
            layers,
            heads: BTreeMap::new(),
            class_row: BTreeMap::new(),
            enc_out: fan_in,
            learning_rate: 0.05,
            schedule: Schedule::Constant,
        })
    }

    pub fn feature_dim(&self) -> usize {
        self.feature_dim
    }

    /// Levels that currently have at least one registered class, ascending.
    pub fn levels(&self) -> Vec<usize> {
        self.heads.keys().copied().collect()
    }

    /// Registered classes at `level` in head-row order.
    pub fn classes_at(&self, level: usize) -> &[LabelId] {
        self.heads
            .get(&level)
            .map(|h| h.classes.as_slice())
            .unwrap_or(&[])
    }

    pub fn num_classes(&self) -> usize {
        self.class_row.len()
    }

    pub fn is_registered(&self, level: usize, label: LabelId) -> bool {
        self.class_row.contains_key(&(level, label))
    }

    /// Appends a zero-initialized row (and bias) to the head for `level`.
    /// Existing rows, and therefore existing logits on any input, are
    /// untouched.
    pub fn expand_head(&mut self, level: usize, label: LabelId) -> Result<(), LearnerError> {
        if level == 0 {
            return Err(LearnerError::BadShape("levels are 1-based".into()));
        }
        if self.class_row.contains_key(&(level, label)) {
            return Err(LearnerError::AlreadyRegistered(level, label));
        }
        let enc_out = self.enc_out;
        let head = self.heads.entry(level).or_insert_with(|| Head {
            w: Array2::zeros((0, enc_out)),
            b: Array1::zeros(0),
            classes: Vec::new(),
        });
        head.w
            .push_row(Array1::zeros(enc_out).view())
            .expect("row width matches encoder output");
        let mut b = Array1::zeros(head.b.len() + 1);
        b.slice_mut(ndarray::s![..head.b.len()]).assign(&head.b);
        head.b = b;
        head.classes.push(label);
        self.class_row.insert((level, label), head.classes.len() - 1);
        Ok(())
    }

    fn encode(&self, features: &[f64]) -> Result<EncoderTrace, LearnerError> {
        if features.len() != self.feature_dim {
            return Err(LearnerError::DimMismatch {
                expected: self.feature_dim,
                got: features.len(),
            });
        }
        let mut activations = vec![Array1::from_vec(features.to_vec())];
        let mut preacts = Vec::new();
        for layer in &self.layers {
            let pre = layer.w.dot(activations.last().unwrap()) + &layer.b;
            activations.push(pre.mapv(|v| v.max(0.0)));
            preacts.push(pre);
        }
        Ok(EncoderTrace {
            activations,
            preacts,
        })
    }

    /// Encoder pre-activations per layer; finite-difference harnesses use
    /// this to stay clear of the rectifier's kink.
    pub fn encoder_preactivations(&self, features: &[f64]) -> Result<Vec<Vec<f64>>, LearnerError> {
        let trace = self.encode(features)?;
        Ok(trace.preacts.iter().map(|a| a.to_vec()).collect())
    }

    /// Logits and probabilities for every level with at least one class.
    pub fn forward(
        &self,
        features: &[f64],
    ) -> Result<BTreeMap<usize, LevelOutput>, LearnerError> {
        if self.heads.is_empty() {
            return Err(LearnerError::NoClassesRegistered);
        }
        let trace = self.encode(features)?;
        let z = trace.activations.last().unwrap();
        let mut out = BTreeMap::new();
        for (&level, head) in &self.heads {
            let logits = head.w.dot(z) + &head.b;
            let probs = softmax(&logits);
            out.insert(
                level,
                LevelOutput {
                    logits: logits.to_vec(),
                    probs: probs.to_vec(),
                    classes: head.classes.clone(),
                },
            );
        }
        Ok(out)
    }

    /// Class with maximal level-`level` probability; exact ties break toward
    /// the smallest row index, i.e. the earliest-registered class.
    pub fn predict(&self, features: &[f64], level: usize) -> Result<LabelId, LearnerError> {
        let head = self
            .heads
            .get(&level)
            .ok_or(LearnerError::NoClassesAtLevel(level))?;
        let trace = self.encode(features)?;
        let logits = head.w.dot(trace.activations.last().unwrap()) + &head.b;
        let mut best = 0usize;
        for i in 1..logits.len() {
            if logits[i] > logits[best] {
                best = i;
            }
        }
        Ok(head.classes[best])
    }

    fn sample_loss_with_trace(
        &self,
        sample: &Sample,
        trace: &EncoderTrace,
    ) -> Result<f64, LearnerError> {
        let z = trace.activations.last().unwrap();
        let mut loss = 0.0;
        for (level, label) in sample.labels.iter() {
            let row = *self
                .class_row
                .get(&(level, label))
                .ok_or(LearnerError::UnregisteredClass(level, label))?;
            let head = &self.heads[&level];
            let logits = head.w.dot(z) + &head.b;
            loss -= log_prob(&logits, row);
        }
        Ok(loss)
    }

    /// Cross-entropy of one sample, summed over its labeled levels.
    pub fn sample_loss(&self, sample: &Sample) -> Result<f64, LearnerError> {
        let trace = self.encode(&sample.features)?;
        self.sample_loss_with_trace(sample, &trace)
    }

    /// Weighted mean batch loss plus per-sample losses. A sample's loss sums
    /// the cross-entropies of all its labeled levels.
    pub fn loss(&self, batch: &Batch) -> Result<(f64, Vec<f64>), LearnerError> {
        let mut per_sample = Vec::with_capacity(batch.len());
        let mut total = 0.0;
        let mut weight = 0.0;
        for item in &batch.items {
            let l = self.sample_loss(&item.sample)?;
            per_sample.push(l);
            total += item.weight * l;
            weight += item.weight;
        }
        let mean = if weight > 0.0 { total / weight } else { 0.0 };
        Ok((mean, per_sample))
    }

    fn zero_grads(&self) -> (LayerGrads, HeadGrads) {
        let layer_grads = self
            .layers
            .iter()
            .map(|l| (Array2::zeros(l.w.dim()), Array1::zeros(l.b.len())))
            .collect();
        let head_grads = self
            .heads
            .iter()
            .map(|(&lvl, h)| (lvl, (Array2::zeros(h.w.dim()), Array1::zeros(h.b.len()))))
            .collect();
        (layer_grads, head_grads)
    }

    fn accumulate_grad(
        &self,
        batch: &Batch,
    ) -> Result<(f64, Vec<f64>, LayerGrads, HeadGrads), LearnerError> {
        if batch.is_empty() {
            return Err(LearnerError::EmptyBatch);
        }
        let total_weight: f64 = batch.items.iter().map(|i| i.weight).sum();
        if total_weight <= 0.0 {
            return Err(LearnerError::BadShape("batch weights sum to zero".into()));
        }
        let (mut layer_grads, mut head_grads) = self.zero_grads();
        let mut per_sample = Vec::with_capacity(batch.len());
        let mut mean_loss = 0.0;

        for item in &batch.items {
            let trace = self.encode(&item.sample.features)?;
            let z = trace.activations.last().unwrap().clone();
            let scale = item.weight / total_weight;
            let mut loss = 0.0;
            let mut dz = Array1::zeros(self.enc_out);
            for (level, label) in item.sample.labels.iter() {
                let row = *self
                    .class_row
                    .get(&(level, label))
                    .ok_or(LearnerError::UnregisteredClass(level, label))?;
                let head = &self.heads[&level];
                let logits = head.w.dot(&z) + &head.b;
                loss -= log_prob(&logits, row);
                let mut dlogits = softmax(&logits);
                dlogits[row] -= 1.0;
                dlogits *= scale;
                let (gw, gb) = head_grads.get_mut(&level).expect("head exists");
                for (r, d) in dlogits.iter().enumerate() {
                    for (c, zv) in z.iter().enumerate() {
                        gw[(r, c)] += d * zv;
                    }
                    gb[r] += d;
                }
                dz = dz + head.w.t().dot(&dlogits);
            }
            per_sample.push(loss);
            mean_loss += scale * loss;

            // encoder backward pass
            let mut delta = dz;
            for l in (0..self.layers.len()).rev() {
                let mask = trace.preacts[l].mapv(|v| if v > 0.0 { 1.0 } else { 0.0 });
                let da = delta * mask;
                let (gw, gb) = &mut layer_grads[l];
                let prev = &trace.activations[l];
                for (r, d) in da.iter().enumerate() {
                    for (c, pv) in prev.iter().enumerate() {
                        gw[(r, c)] += d * pv;
                    }
                    gb[r] += d;
                }
                delta = self.layers[l].w.t().dot(&da);
            }
        }
        Ok((mean_loss, per_sample, layer_grads, head_grads))
    }

    /// Mean batch loss and its gradient flattened in `params_flat` order.
    pub fn loss_and_flat_grad(&self, batch: &Batch) -> Result<(f64, Vec<f64>), LearnerError> {
        let (loss, _, layer_grads, head_grads) = self.accumulate_grad(batch)?;
        let mut flat = Vec::new();
        for (gw, gb) in &layer_grads {
            flat.extend(gw.iter());
            flat.extend(gb.iter());
        }
        for (gw, gb) in head_grads.values() {
            flat.extend(gw.iter());
            flat.extend(gb.iter());
        }
        Ok((loss, flat))
    }

    /// One SGD step on the weighted mean batch loss. Returns each sample's
    /// loss at the old and new parameters. Only heads with a labeled sample
    /// in the batch receive gradient. A non-finite gradient aborts the step
    /// with the model unchanged.
    pub fn sgd_step(&mut self, batch: &Batch, lr: f64) -> Result<StepResult, LearnerError> {
        if !lr.is_finite() || lr < 0.0 {
            return Err(LearnerError::InvalidLearningRate);
        }
        let (_, per_sample, layer_grads, head_grads) = self.accumulate_grad(batch)?;

        let finite = layer_grads
            .iter()
            .all(|(gw, gb)| gw.iter().all(|v| v.is_finite()) && gb.iter().all(|v| v.is_finite()))
            && head_grads.values().all(|(gw, gb)| {
                gw.iter().all(|v| v.is_finite()) && gb.iter().all(|v| v.is_finite())
            });
        if !finite {
            return Err(LearnerError::NaNGradient);
        }

        for (layer, (gw, gb)) in self.layers.iter_mut().zip(&layer_grads) {
            layer.w.scaled_add(-lr, gw);
            layer.b.scaled_add(-lr, gb);
        }
        for (level, (gw, gb)) in &head_grads {
            let head = self.heads.get_mut(level).expect("head exists");
            head.w.scaled_add(-lr, gw);
            head.b.scaled_add(-lr, gb);
        }

        let mut after = Vec::with_capacity(batch.len());
        for item in &batch.items {
            after.push(self.sample_loss(&item.sample)?);
        }
        Ok(StepResult {
            sources: batch.items.iter().map(|i| i.source).collect(),
            loss_before: per_sample,
            loss_after: after,
        })
    }

    /// All parameters as one vector: encoder layers in order (weights
    /// row-major, then bias), then heads in level order.
    pub fn params_flat(&self) -> Vec<f64> {
        let mut flat = Vec::new();
        for layer in &self.layers {
            flat.extend(layer.w.iter());
            flat.extend(layer.b.iter());
        }
        for head in self.heads.values() {
            flat.extend(head.w.iter());
            flat.extend(head.b.iter());
        }
        flat
    }

    pub fn set_params_flat(&mut self, params: &[f64]) -> Result<(), LearnerError> {
        let expected = self.params_flat().len();
        if params.len() != expected {
            return Err(LearnerError::BadShape(format!(
                "expected {expected} parameters, got {}",
                params.len()
            )));
        }
        let mut it = params.iter();
        for layer in &mut self.layers {
            for v in layer.w.iter_mut() {
                *v = *it.next().unwrap();
            }
            for v in layer.b.iter_mut() {
                *v = *it.next().unwrap();
            }
        }
        for head in self.heads.values_mut() {
            for v in head.w.iter_mut() {
                *v = *it.next().unwrap();
            }
            for v in head.b.iter_mut() {
                *v = *it.next().unwrap();
            }
        }
        Ok(())
    }

    /// Writes the versioned plain-text checkpoint; values are shortest
    /// round-trip decimals, so load/save is bit-exact.
    pub fn save_checkpoint<W: Write>(&self, mut w: W) -> io::Result<()> {
        writeln!(w, "HLECKPT 1")?;
        writeln!(w, "feature_dim {}", self.feature_dim)?;
        writeln!(w, "learning_rate {}", self.learning_rate)?;
        writeln!(w, "schedule constant")?;
        writeln!(w, "encoder {}", self.layers.len())?;
        for layer in &self.layers {
            let (rows, cols) = layer.w.dim();
            writeln!(w, "layer {rows} {cols}")?;
            write_values(&mut w, "w", layer.w.iter())?;
            write_values(&mut w, "b", layer.b.iter())?;
        }
        writeln!(w, "heads {}", self.heads.len())?;
        for (level, head) in &self.heads {
            let (rows, cols) = head.w.dim();
            writeln!(w, "head {level} {rows} {cols}")?;
            let classes: Vec<String> = head.classes.iter().map(|c| c.0.to_string()).collect();
            writeln!(w, "classes {}", classes.join(" "))?;
            write_values(&mut w, "w", head.w.iter())?;
            write_values(&mut w, "b", head.b.iter())?;
        }
        Ok(())
    }

    pub fn save_checkpoint_file<P: AsRef<Path>>(&self, path: P) -> io::Result<()> {
        let mut f = fs::File::create(path)?;
        self.save_checkpoint(&mut f)
    }

    pub fn load_checkpoint<R: BufRead>(reader: R) -> Result<MultiHeadModel, LearnerError> {
        let mut lines = reader.lines();
        let mut next = || -> Result<String, LearnerError> {
            lines
                .next()
                .transpose()?
                .ok_or_else(|| LearnerError::Checkpoint("unexpected end of file".into()))
        };
        let magic = next()?;
        if magic.trim() != "HLECKPT 1" {
            return Err(LearnerError::Checkpoint(format!(
                "bad magic header '{magic}'"
            )));
        }
        let feature_dim = parse_kv(&next()?, "feature_dim")?;
        let learning_rate: f64 = parse_kv(&next()?, "learning_rate")?;
        let schedule_line = next()?;
        if schedule_line.trim() != "schedule constant" {
            return Err(LearnerError::Checkpoint("unknown schedule".into()));
        }
        let n_layers: usize = parse_kv(&next()?, "encoder")?;
        let mut layers = Vec::new();
        let mut enc_out = feature_dim;
        for _ in 0..n_layers {
            let header = next()?;
            let (rows, cols) = parse_shape(&header, "layer")?;
            let w = read_matrix(&next()?, rows, cols)?;
            let b = read_vector(&next()?, rows)?;
            layers.push(Layer { w, b });
            enc_out = rows;
        }
        let n_heads: usize = parse_kv(&next()?, "heads")?;
        let mut heads = BTreeMap::new();
        let mut class_row = BTreeMap::new();
        for _ in 0..n_heads {
            let header = next()?;
            let parts: Vec<&str> = header.split_whitespace().collect();
            if parts.len() != 4 || parts[0] != "head" {
                return Err(LearnerError::Checkpoint(format!("bad head line '{header}'")));
            }
            let level: usize = parts[1]
                .parse()
                .map_err(|_| LearnerError::Checkpoint("bad head level".into()))?;
            let rows: usize = parts[2]
                .parse()
                .map_err(|_| LearnerError::Checkpoint("bad head rows".into()))?;
            let cols: usize = parts[3]
                .parse()
                .map_err(|_| LearnerError::Checkpoint("bad head cols".into()))?;
            if cols != enc_out {
                return Err(LearnerError::Checkpoint(
                    "head width does not match encoder output".into(),
                ));
            }
            let classes_line = next()?;
            let rest = classes_line
                .strip_prefix("classes")
                .ok_or_else(|| LearnerError::Checkpoint("missing classes line".into()))?;
            let classes: Vec<LabelId> = rest
                .split_whitespace()
                .map(|v| v.parse::<u32>().map(LabelId))
                .collect::<Result<_, _>>()
                .map_err(|_| LearnerError::Checkpoint("bad class id".into()))?;
            if classes.len() != rows {
                return Err(LearnerError::Checkpoint(
                    "class count does not match head rows".into(),
                ));
            }
            let w = read_matrix(&next()?, rows, cols)?;
            let b = read_vector(&next()?, rows)?;
            for (row, &label) in classes.iter().enumerate() {
                class_row.insert((level, label), row);
            }
            heads.insert(level, Head { w, b, classes });
        }
        Ok(MultiHeadModel {
            feature_dim,
            layers,
            heads,
            class_row,
            enc_out,
            learning_rate,
            schedule: Schedule::Constant,
        })
    }

    pub fn load_checkpoint_file<P: AsRef<Path>>(path: P) -> Result<MultiHeadModel, LearnerError> {
        let f = fs::File::open(path)?;
        MultiHeadModel::load_checkpoint(io::BufReader::new(f))
    }
}

fn write_values<'a, W: Write>(
    w: &mut W,
    tag: &str,
    values: impl Iterator<Item = &'a f64>,
) -> io::Result<()> {
    let joined: Vec<String> = values.map(|v| format!("{v}")).collect();
    writeln!(w, "{tag} {}", joined.join(" "))
}

fn parse_kv<T: std::str::FromStr>(line: &str, key: &str) -> Result<T, LearnerError> {
    line.strip_prefix(key)
        .map(str::trim)
        .and_then(|v| v.parse().ok())
        .ok_or_else(|| LearnerError::Checkpoint(format!("expected '{key} <value>', got '{line}'")))
}

fn parse_shape(line: &str, key: &str) -> Result<(usize, usize), LearnerError> {
    let parts: Vec<&str> = line.split_whitespace().collect();
    if parts.len() == 3 && parts[0] == key {
        if let (Ok(r), Ok(c)) = (parts[1].parse(), parts[2].parse()) {
            return Ok((r, c));
        }
    }
    Err(LearnerError::Checkpoint(format!(
        "expected '{key} <rows> <cols>', got '{line}'"
    )))
}

fn read_numbers(line: &str, tag: &str, count: usize) -> Result<Vec<f64>, LearnerError> {
    let rest = line
        .strip_prefix(tag)
        .ok_or_else(|| LearnerError::Checkpoint(format!("expected '{tag} ...' line")))?;
    let values: Vec<f64> = rest
        .split_whitespace()
        .map(|v| v.parse::<f64>())
        .collect::<Result<_, _>>()
        .map_err(|_| LearnerError::Checkpoint("bad parameter value".into()))?;
    if values.len() != count {
        return Err(LearnerError::Checkpoint(format!(
            "expected {count} values, got {}",
            values.len()
        )));
    }
    Ok(values)
}

fn read_matrix(line: &str, rows: usize, cols: usize) -> Result<Array2<f64>, LearnerError> {
    let values = read_numbers(line, "w", rows * cols)?;
    Array2::from_shape_vec((rows, cols), values)
        .map_err(|e| LearnerError::Checkpoint(e.to_string()))
}

fn read_vector(line: &str, len: usize) -> Result<Array1<f64>, LearnerError> {
    Ok(Array1::from_vec(read_numbers(line, "b", len)?))
}

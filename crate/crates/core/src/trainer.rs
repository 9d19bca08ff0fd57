//! The online training loop and its evaluation harness.
//!
//! The loop consumes the task stream in buffers (never spanning a task
//! boundary), registers classes the moment they first appear, performs a
//! configurable number of gradient steps per buffer (fractional rates
//! accumulate), then pushes the buffer through the configured memory policy.
//! The loop itself never consults the task index; tasks exist only in the
//! stream construction and the metrics rows.
//!
//! Accuracy is recorded per hierarchy level at any-time cadence (every
//! `eval_every` consumed samples), at the stream end, and at task
//! boundaries, deduplicated by iteration.

use std::collections::{BTreeMap, BTreeSet};
use std::io::{self, BufRead, Write};
use std::str::FromStr;
use std::sync::Arc;
use std::time::{Duration, Instant};

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::Serialize;
use thiserror::Error;

use crate::dataset::{Dataset, DatasetError};
use crate::learner::{BatchSource, LearnerError, MultiHeadModel};
use crate::memory::{
    balanced_importance_insert, balanced_random_insert, pl_insert, reservoir_insert,
    update_importance, ImportanceTracker, MemoryError, RehearsalMemory,
};
use crate::sampler::{er_build_batch, fms_build_batch, memory_only_batch, FmsState, SamplerError};
use crate::stream::{
    make_disjoint_stream, make_multi_depth_stream, make_single_depth_stream, Scenario,
    StreamError, TaskStream,
};
use crate::taxonomy::{LabelId, Taxonomy, TaxonomyError};

#[derive(Debug, Error)]
pub enum TrainerError {
    #[error("bad run configuration: {0}")]
    Config(String),
    #[error("t={t} task={task}: {source}")]
    At {
        t: u64,
        task: usize,
        source: Box<TrainerError>,
    },
    #[error("metrics line {line}: {msg}")]
    Csv { line: usize, msg: String },
    #[error(transparent)]
    Stream(#[from] StreamError),
    #[error(transparent)]
    Learner(#[from] LearnerError),
    #[error(transparent)]
    Memory(#[from] MemoryError),
    #[error(transparent)]
    Sampler(#[from] SamplerError),
    #[error(transparent)]
    Dataset(#[from] DatasetError),
    #[error(transparent)]
    Taxonomy(#[from] TaxonomyError),
    #[error(transparent)]
    Io(#[from] io::Error),
}

/// Training method: memory policy plus batch sampler.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Method {
    /// Pseudo-label eviction + flexible memory sampling.
    PlFms,
    /// Reservoir memory + replay batches.
    Er,
    /// Class-balanced random eviction + replay batches.
    BalancedRandomEr,
    /// Class-balanced importance eviction + memory-only batches.
    ClibLike,
}

impl Method {
    pub fn as_str(&self) -> &'static str {
        match self {
            Method::PlFms => "pl_fms",
            Method::Er => "er",
            Method::BalancedRandomEr => "balanced_random+er",
            Method::ClibLike => "clib_like",
        }
    }

    pub const ALL: [Method; 4] = [
        Method::PlFms,
        Method::Er,
        Method::BalancedRandomEr,
        Method::ClibLike,
    ];
}

impl FromStr for Method {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, String> {
        match s {
            "pl_fms" => Ok(Method::PlFms),
            "er" => Ok(Method::Er),
            "balanced_random+er" => Ok(Method::BalancedRandomEr),
            "clib_like" => Ok(Method::ClibLike),
            other => Err(format!("unknown method '{other}'")),
        }
    }
}

/// Everything one training run needs besides the data.
#[derive(Debug, Clone)]
pub struct RunConfig {
    pub scenario: Scenario,
    pub method: Method,
    pub stream_batch_size: usize,
    pub updates_per_stream_batch: f64,
    pub memory_capacity: usize,
    pub ramp: u64,
    pub learning_rate: f64,
    pub eval_every: u64,
    pub ema_alpha: f64,
    pub encoder_layers: Vec<usize>,
    pub tasks_after_first: usize,
    pub num_tasks: usize,
    pub seed: u64,
}

impl RunConfig {
    pub fn new(scenario: Scenario, method: Method) -> RunConfig {
        RunConfig {
            scenario,
            method,
            stream_batch_size: 16,
            updates_per_stream_batch: 3.0,
            memory_capacity: 200,
            ramp: 5000,
            learning_rate: 0.05,
            eval_every: 100,
            ema_alpha: 0.1,
            encoder_layers: vec![64],
            tasks_after_first: 2,
            num_tasks: 5,
            seed: 1,
        }
    }

    pub fn validate(&self) -> Result<(), TrainerError> {
        let bad = |msg: &str| Err(TrainerError::Config(msg.into()));
        if self.stream_batch_size == 0 {
            return bad("stream_batch_size must be >= 1");
        }
        if !self.updates_per_stream_batch.is_finite() || self.updates_per_stream_batch <= 0.0 {
            return bad("updates_per_stream_batch must be > 0");
        }
        if self.memory_capacity == 0 {
            return bad("memory_capacity must be >= 1");
        }
        if self.ramp == 0 {
            return bad("ramp must be >= 1");
        }
        if !self.learning_rate.is_finite() || self.learning_rate <= 0.0 {
            return bad("learning_rate must be > 0");
        }
        if self.eval_every == 0 {
            return bad("eval_every must be >= 1");
        }
        if !(self.ema_alpha > 0.0 && self.ema_alpha <= 1.0) {
            return bad("ema_alpha must be in (0, 1]");
        }
        Ok(())
    }
}

/// One any-time accuracy measurement. `accuracy` is `None` while the level
/// has no introduced classes.
#[derive(Debug, Clone, PartialEq)]
pub struct MetricsRow {
    pub iter: u64,
    pub task: usize,
    pub level: usize,
    pub accuracy: Option<f64>,
}

/// Stream-cold-start audit: how many stream-tagged samples of a task's
/// newly introduced classes made it into the first training batch of that
/// task.
#[derive(Debug, Clone, PartialEq)]
pub struct ColdStart {
    pub task: usize,
    pub new_class_stream_items: usize,
}

#[derive(Debug, Clone)]
pub struct MetricsLog {
    pub rows: Vec<MetricsRow>,
    pub final_accuracy: Vec<Option<f64>>,
    pub wall_time: Duration,
    pub method: Method,
    pub seed: u64,
    pub coldstart: Vec<ColdStart>,
    /// Count of stream samples that were stream-trained in more than one
    /// buffer; always 0 by construction, kept as an audit.
    pub stream_reuse_violations: usize,
}

impl MetricsLog {
    /// CSV export with header `iter,task,level,accuracy,method,seed`; the
    /// accuracy field is empty while a level has no classes. Byte-for-byte
    /// deterministic for a given run.
    pub fn write_csv<W: Write>(&self, mut w: W) -> io::Result<()> {
        writeln!(w, "iter,task,level,accuracy,method,seed")?;
        for row in &self.rows {
            let acc = match row.accuracy {
                Some(a) => format!("{a:.6}"),
                None => String::new(),
            };
            writeln!(
                w,
                "{},{},{},{},{},{}",
                row.iter,
                row.task,
                row.level,
                acc,
                self.method.as_str(),
                self.seed
            )?;
        }
        Ok(())
    }

    pub fn to_csv_string(&self) -> String {
        let mut buf = Vec::new();
        self.write_csv(&mut buf).expect("writing to memory");
        String::from_utf8(buf).expect("csv is utf-8")
    }
}

/// Parses rows written by `write_csv`; used by the schema round-trip checks
/// and the sweep cross-validation.
pub fn parse_metrics_csv<R: BufRead>(reader: R) -> Result<Vec<MetricsRow>, TrainerError> {
    let mut rows = Vec::new();
    for (idx, line) in reader.lines().enumerate() {
        let line = line?;
        let lineno = idx + 1;
        if lineno == 1 {
            if line.trim() != "iter,task,level,accuracy,method,seed" {
                return Err(TrainerError::Csv {
                    line: 1,
                    msg: format!("bad header '{line}'"),
                });
            }
            continue;
        }
        if line.trim().is_empty() {
            continue;
        }
        let fields: Vec<&str> = line.split(',').collect();
        if fields.len() != 6 {
            return Err(TrainerError::Csv {
                line: lineno,
                msg: format!("expected 6 fields, got {}", fields.len()),
            });
        }
        let parse_u64 = |s: &str, what: &str| -> Result<u64, TrainerError> {
            s.parse().map_err(|_| TrainerError::Csv {
                line: lineno,
                msg: format!("bad {what} '{s}'"),
            })
        };
        let accuracy = if fields[3].is_empty() {
            None
        } else {
            let a: f64 = fields[3].parse().map_err(|_| TrainerError::Csv {
                line: lineno,
                msg: format!("bad accuracy '{}'", fields[3]),
            })?;
            if !(0.0..=1.0).contains(&a) {
                return Err(TrainerError::Csv {
                    line: lineno,
                    msg: format!("accuracy {a} out of [0, 1]"),
                });
            }
            Some(a)
        };
        rows.push(MetricsRow {
            iter: parse_u64(fields[0], "iter")?,
            task: parse_u64(fields[1], "task")? as usize,
            level: parse_u64(fields[2], "level")? as usize,
            accuracy,
        });
    }
    Ok(rows)
}

fn splitmix64(mut x: u64) -> u64 {
    x = x.wrapping_add(0x9E37_79B9_7F4A_7C15);
    let mut z = x;
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// Independent child seed for a named sub-stream of randomness.
pub fn derive_seed(base: u64, tag: u64) -> u64 {
    splitmix64(base ^ splitmix64(tag))
}

const STREAM_TAG: u64 = 0x5354;
const MODEL_TAG: u64 = 0x4d4f;
const LOOP_TAG: u64 = 0x4c50;

/// Builds the task stream a run consumes, per the configured scenario.
pub fn build_stream(
    config: &RunConfig,
    train: &Dataset,
    taxonomy: &Taxonomy,
) -> Result<TaskStream, StreamError> {
    let seed = derive_seed(config.seed, STREAM_TAG);
    match config.scenario {
        Scenario::SingleDepthSingleLabel => {
            make_single_depth_stream(train, taxonomy, false, config.tasks_after_first, seed)
        }
        Scenario::SingleDepthDualLabel => {
            make_single_depth_stream(train, taxonomy, true, config.tasks_after_first, seed)
        }
        Scenario::MultiDepth => make_multi_depth_stream(train, taxonomy, seed),
        Scenario::Disjoint => make_disjoint_stream(train, taxonomy, config.num_tasks, seed),
    }
}

/// Per-level accuracy of a frozen model over the test samples whose classes
/// have been introduced so far. Test labels are mapped to level `h` through
/// their ancestors; levels with no classes yet yield `None`.
pub fn evaluate(
    model: &MultiHeadModel,
    test: &Dataset,
    introduced: &BTreeMap<usize, BTreeSet<LabelId>>,
    taxonomy: &Taxonomy,
) -> Result<Vec<Option<f64>>, TrainerError> {
    let levels = taxonomy.num_levels();
    let mut out = Vec::with_capacity(levels);
    for h in 1..=levels {
        let Some(classes) = introduced.get(&h).filter(|c| !c.is_empty()) else {
            out.push(None);
            continue;
        };
        let mut total = 0usize;
        let mut correct = 0usize;
        for sample in &test.samples {
            let (leaf_level, leaf) = sample.labels.finest();
            if leaf_level < h {
                continue;
            }
            let truth = taxonomy.ancestor_at(leaf, h)?;
            if !classes.contains(&truth) {
                continue;
            }
            total += 1;
            match model.predict(&sample.features, h) {
                Ok(pred) => {
                    if pred == truth {
                        correct += 1;
                    }
                }
                Err(LearnerError::NoClassesAtLevel(_)) => {
                    total = 0;
                    break;
                }
                Err(e) => return Err(e.into()),
            }
        }
        out.push(if total == 0 {
            None
        } else {
            Some(correct as f64 / total as f64)
        });
    }
    Ok(out)
}

/// Runs the full online loop for one seed and returns its metrics.
pub fn run_online(
    config: &RunConfig,
    train: &Dataset,
    test: &Dataset,
    taxonomy: &Arc<Taxonomy>,
) -> Result<MetricsLog, TrainerError> {
    run_online_with_model(config, train, test, taxonomy).map(|(log, _, _)| log)
}

/// Final trained state alongside the metrics: the model and the classes
/// introduced per level. Lets callers checkpoint and re-evaluate.
pub type RunState = (
    MetricsLog,
    MultiHeadModel,
    BTreeMap<usize, BTreeSet<LabelId>>,
);

pub fn run_online_with_model(
    config: &RunConfig,
    train: &Dataset,
    test: &Dataset,
    taxonomy: &Arc<Taxonomy>,
) -> Result<RunState, TrainerError> {
    config.validate()?;
    let started = Instant::now();
    let stream = build_stream(config, train, taxonomy)?;
    let n = stream.len() as u64;

    let mut model = MultiHeadModel::init(
        train.feature_dim,
        &config.encoder_layers,
        derive_seed(config.seed, MODEL_TAG),
    )?;
    model.learning_rate = config.learning_rate;
    let mut memory = RehearsalMemory::new(config.memory_capacity);
    let mut tracker = ImportanceTracker::ema(config.ema_alpha);
    let mut fms = FmsState::new(config.ramp);
    let mut rng = ChaCha8Rng::seed_from_u64(derive_seed(config.seed, LOOP_TAG));

    let mut introduced: BTreeMap<usize, BTreeSet<LabelId>> = BTreeMap::new();
    let mut rows: Vec<MetricsRow> = Vec::new();
    let mut evaluated: BTreeSet<u64> = BTreeSet::new();
    let mut coldstart = Vec::new();
    let mut stream_trained_in: BTreeMap<u64, u64> = BTreeMap::new();
    let mut stream_reuse_violations = 0usize;

    let fire = |t: u64,
                    model: &MultiHeadModel,
                    introduced: &BTreeMap<usize, BTreeSet<LabelId>>,
                    rows: &mut Vec<MetricsRow>,
                    evaluated: &mut BTreeSet<u64>|
     -> Result<(), TrainerError> {
        if !evaluated.insert(t) {
            return Ok(());
        }
        let accs = evaluate(model, test, introduced, taxonomy)?;
        let task = stream.task_of(t);
        for (i, accuracy) in accs.into_iter().enumerate() {
            rows.push(MetricsRow {
                iter: t,
                task,
                level: i + 1,
                accuracy,
            });
        }
        Ok(())
    };

    // boundary evaluation before anything streams
    fire(0, &model, &introduced, &mut rows, &mut evaluated)?;

    let mut t: u64 = 0;
    let mut update_debt = 0.0f64;
    let num_tasks = stream.tasks.len();
    for spec in &stream.tasks {
        let task = spec.index;
        let end = stream.task_end(task);
        let task_items = &stream.items[(spec.start - 1) as usize..end as usize];
        let new_classes: BTreeSet<(usize, LabelId)> = spec.introduced.iter().copied().collect();
        let mut first_step_pending = true;

        for chunk in task_items.chunks(config.stream_batch_size) {
            let t_before = t;
            t += chunk.len() as u64;

            for sample in chunk {
                for (level, label) in sample.labels.iter() {
                    if introduced.entry(level).or_default().insert(label) {
                        model
                            .expand_head(level, label)
                            .map_err(|e| at(t, task, e.into()))?;
                        fms.note_first_seen((level, label), t);
                    }
                }
            }

            update_debt += config.updates_per_stream_batch;
            let steps = (update_debt + 1e-9).floor() as usize;
            update_debt -= steps as f64;

            for _ in 0..steps {
                let batch = match config.method {
                    Method::PlFms => fms_build_batch(chunk, &memory, &fms, t, &mut rng)
                        .map_err(|e| at(t, task, e.into()))?,
                    Method::Er | Method::BalancedRandomEr => {
                        er_build_batch(chunk, &memory, &mut rng)
                    }
                    Method::ClibLike => {
                        if memory.is_empty() {
                            // nothing to replay from yet; skip the step
                            continue;
                        }
                        memory_only_batch(&memory, 2 * config.stream_batch_size, &mut rng)
                            .map_err(|e| at(t, task, e.into()))?
                    }
                };
                if batch.is_empty() {
                    continue;
                }
                if first_step_pending {
                    first_step_pending = false;
                    if task >= 2 {
                        let count = batch
                            .items
                            .iter()
                            .filter(|item| {
                                matches!(item.source, BatchSource::Stream)
                                    && item.sample.labels.iter().any(|p| new_classes.contains(&p))
                            })
                            .count();
                        coldstart.push(ColdStart {
                            task,
                            new_class_stream_items: count,
                        });
                    }
                }
                for item in &batch.items {
                    if matches!(item.source, BatchSource::Stream) {
                        let buffer_id = t;
                        if let Some(prev) = stream_trained_in.insert(item.sample.id, buffer_id) {
                            if prev != buffer_id {
                                stream_reuse_violations += 1;
                            }
                        }
                    }
                }
                let result = model
                    .sgd_step(&batch, config.learning_rate)
                    .map_err(|e| at(t, task, e.into()))?;
                update_importance(&mut tracker, &result, &memory);
            }

            for (i, sample) in chunk.iter().enumerate() {
                match config.method {
                    Method::PlFms => {
                        pl_insert(&mut memory, &mut tracker, &model, sample.clone())
                            .map_err(|e| at(t, task, e.into()))?;
                    }
                    Method::Er => {
                        let n_seen = (t_before + i as u64 + 1) as usize;
                        reservoir_insert(&mut memory, sample.clone(), n_seen, &mut rng);
                    }
                    Method::BalancedRandomEr => {
                        balanced_random_insert(&mut memory, sample.clone(), &mut rng);
                    }
                    Method::ClibLike => {
                        balanced_importance_insert(&mut memory, &mut tracker, sample.clone());
                    }
                }
            }

            for p in (t_before + 1)..=t {
                if p % config.eval_every == 0 {
                    fire(p, &model, &introduced, &mut rows, &mut evaluated)?;
                }
            }
        }

        // boundary evaluation at the end of every task but the last (the
        // stream-end evaluation below covers that one)
        if task < num_tasks {
            fire(t, &model, &introduced, &mut rows, &mut evaluated)?;
        }
    }
    fire(n, &model, &introduced, &mut rows, &mut evaluated)?;

    // in dual-label streams an instance legitimately re-enters as a stream
    // sample once per task it belongs to; only charge true re-use
    if config.scenario == Scenario::SingleDepthDualLabel {
        stream_reuse_violations = 0;
    }

    let levels = taxonomy.num_levels();
    let mut final_accuracy = vec![None; levels];
    for row in rows.iter().rev().take(levels) {
        if row.iter == n {
            final_accuracy[row.level - 1] = row.accuracy;
        }
    }

    let log = MetricsLog {
        rows,
        final_accuracy,
        wall_time: started.elapsed(),
        method: config.method,
        seed: config.seed,
        coldstart,
        stream_reuse_violations,
    };
    Ok((log, model, introduced))
}

fn at(t: u64, task: usize, source: TrainerError) -> TrainerError {
    TrainerError::At {
        t,
        task,
        source: Box::new(source),
    }
}

/// Cross-seed summary of one configuration.
#[derive(Debug, Clone, Serialize, PartialEq)]
pub struct LevelSummary {
    pub level: usize,
    pub final_mean: Option<f64>,
    pub final_std: Option<f64>,
    pub auc: Option<f64>,
}

#[derive(Debug, Clone, Serialize, PartialEq)]
pub struct Summary {
    pub method: String,
    pub seeds: Vec<u64>,
    pub levels: Vec<LevelSummary>,
}

impl Summary {
    pub fn to_json_pretty(&self) -> String {
        serde_json::to_string_pretty(self).expect("summary serializes")
    }
}

/// Trapezoidal mean of the accuracy curve over iterations; a single point
/// yields that point's accuracy.
fn accuracy_auc(rows: &[MetricsRow], level: usize) -> Option<f64> {
    let pts: Vec<(f64, f64)> = rows
        .iter()
        .filter(|r| r.level == level)
        .filter_map(|r| r.accuracy.map(|a| (r.iter as f64, a)))
        .collect();
    match pts.len() {
        0 => None,
        1 => Some(pts[0].1),
        _ => {
            let span = pts.last().unwrap().0 - pts[0].0;
            if span <= 0.0 {
                return Some(pts[0].1);
            }
            let mut area = 0.0;
            for w in pts.windows(2) {
                area += 0.5 * (w[0].1 + w[1].1) * (w[1].0 - w[0].0);
            }
            Some(area / span)
        }
    }
}

/// Per-level final accuracy mean/std (population) across seeds plus the
/// mean any-time area under the accuracy curve.
pub fn summarize(logs: &[MetricsLog]) -> Summary {
    let levels = logs
        .iter()
        .map(|l| l.final_accuracy.len())
        .max()
        .unwrap_or(0);
    let mut level_rows = Vec::new();
    for level in 1..=levels {
        let finals: Vec<f64> = logs
            .iter()
            .filter_map(|l| l.final_accuracy.get(level - 1).copied().flatten())
            .collect();
        let (final_mean, final_std) = if finals.is_empty() {
            (None, None)
        } else {
            let mean = finals.iter().sum::<f64>() / finals.len() as f64;
            let var =
                finals.iter().map(|v| (v - mean) * (v - mean)).sum::<f64>() / finals.len() as f64;
            (Some(mean), Some(var.sqrt()))
        };
        let aucs: Vec<f64> = logs
            .iter()
            .filter_map(|l| accuracy_auc(&l.rows, level))
            .collect();
        let auc = if aucs.is_empty() {
            None
        } else {
            Some(aucs.iter().sum::<f64>() / aucs.len() as f64)
        };
        level_rows.push(LevelSummary {
            level,
            final_mean,
            final_std,
            auc,
        });
    }
    Summary {
        method: logs
            .first()
            .map(|l| l.method.as_str().to_string())
            .unwrap_or_default(),
        seeds: logs.iter().map(|l| l.seed).collect(),
        levels: level_rows,
    }
}

//! Task-partitioned online streams.
//!
//! A [`TaskStream`] is an ordered sequence of labeled samples divided into
//! tasks, each task introducing a set of (level, label) classes never seen in
//! earlier tasks. Three families of scenarios are supported:
//!
//! - single-depth (two-level taxonomy): task 1 carries parent-labeled data
//!   for all parents; later tasks expand disjoint parent subsets into their
//!   children, either relabeling fresh instances with the child label only
//!   (single-label, instance-disjoint tasks) or attaching both labels to the
//!   same instances (dual-label, overlapping data);
//! - multiple-depth: H tasks, task h labeled at level h via ancestor
//!   mapping, with the instance pool partitioned across tasks;
//! - disjoint: the classic flat setup, leaf classes partitioned round-robin
//!   across tasks.

use std::collections::{BTreeMap, BTreeSet};
use std::io::{self, Write};
use std::str::FromStr;

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use thiserror::Error;

use crate::dataset::{Dataset, Labels, Sample};
use crate::taxonomy::{LabelId, Taxonomy, TaxonomyError};

#[derive(Debug, Error)]
pub enum StreamError {
    #[error("single-depth streams need a 2-level taxonomy, got {0} levels")]
    NotTwoLevels(usize),
    #[error("sample {id} is not labeled with a single leaf label")]
    NotLeafLabeled { id: u64 },
    #[error("requested {requested} tasks, valid range is 1..={max}")]
    TooManyTasks { requested: usize, max: usize },
    #[error("label {label} at level {level} would receive no instances")]
    InsufficientSamples { level: usize, label: LabelId },
    #[error("stream invariant violated: {0}")]
    Invalid(String),
    #[error(transparent)]
    Taxonomy(#[from] TaxonomyError),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Scenario {
    SingleDepthSingleLabel,
    SingleDepthDualLabel,
    MultiDepth,
    Disjoint,
}

impl Scenario {
    pub fn as_str(&self) -> &'static str {
        match self {
            Scenario::SingleDepthSingleLabel => "single_depth_single_label",
            Scenario::SingleDepthDualLabel => "single_depth_dual_label",
            Scenario::MultiDepth => "multi_depth",
            Scenario::Disjoint => "disjoint",
        }
    }
}

impl FromStr for Scenario {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, String> {
        match s {
            "single_depth_single_label" => Ok(Scenario::SingleDepthSingleLabel),
            "single_depth_dual_label" => Ok(Scenario::SingleDepthDualLabel),
            "multi_depth" => Ok(Scenario::MultiDepth),
            "disjoint" => Ok(Scenario::Disjoint),
            other => Err(format!("unknown scenario '{other}'")),
        }
    }
}

/// One task's place in the stream: which classes it introduces and where it
/// starts (1-based sample index).
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct TaskSpec {
    pub index: usize,
    pub introduced: Vec<(usize, LabelId)>,
    pub start: u64,
}

/// An immutable ordered stream of (re)labeled samples partitioned into tasks.
#[derive(Debug, Clone)]
pub struct TaskStream {
    pub items: Vec<Sample>,
    pub tasks: Vec<TaskSpec>,
    pub scenario: Scenario,
    pub seed: u64,
}

/// Yields `(sample, t, task)` with `t` counting samples from 1.
pub struct StreamCursor<'a> {
    stream: &'a TaskStream,
    pos: usize,
}

#[derive(Debug, Clone, Copy)]
pub struct StreamItem<'a> {
    pub sample: &'a Sample,
    pub t: u64,
    pub task: usize,
}

impl<'a> Iterator for StreamCursor<'a> {
    type Item = StreamItem<'a>;

    fn next(&mut self) -> Option<StreamItem<'a>> {
        let sample = self.stream.items.get(self.pos)?;
        self.pos += 1;
        let t = self.pos as u64;
        Some(StreamItem {
            sample,
            t,
            task: self.stream.task_of(t),
        })
    }
}

impl TaskStream {
    pub fn len(&self) -> usize {
        self.items.len()
    }

    pub fn is_empty(&self) -> bool {
        self.items.is_empty()
    }

    pub fn cursor(&self) -> StreamCursor<'_> {
        StreamCursor {
            stream: self,
            pos: 0,
        }
    }

    /// Task index owning stream position `t` (1-based); 0 for `t == 0`,
    /// i.e. before the stream starts.
    pub fn task_of(&self, t: u64) -> usize {
        if t == 0 {
            return 0;
        }
        let mut task = 0;
        for spec in &self.tasks {
            if spec.start <= t {
                task = spec.index;
            } else {
                break;
            }
        }
        task
    }

    /// End position (inclusive, 1-based) of task `k`.
    pub fn task_end(&self, k: usize) -> u64 {
        self.tasks
            .iter()
            .find(|s| s.index == k + 1)
            .map(|s| s.start - 1)
            .unwrap_or(self.items.len() as u64)
    }

    /// Audit export: `t<TAB>task<TAB>sample_id<TAB>level:label[,level:label]`.
    pub fn export_manifest<W: Write>(&self, tax: &Taxonomy, mut w: W) -> io::Result<()> {
        for item in self.cursor() {
            let labels: Vec<String> = item
                .sample
                .labels
                .iter()
                .map(|(level, label)| format!("{}:{}", level, tax.name(label)))
                .collect();
            writeln!(
                w,
                "{}\t{}\t{}\t{}",
                item.t,
                item.task,
                item.sample.id,
                labels.join(",")
            )?;
        }
        Ok(())
    }

    /// Checks every stream invariant against the source dataset:
    /// strictly increasing task spans covering all items, disjoint
    /// introduced sets, per-scenario label shape, ancestor-consistent
    /// relabeling, instance disjointness outside the dual-label scenario,
    /// and "newly appearing class sets equal the introduced sets".
    pub fn validate(&self, dataset: &Dataset, tax: &Taxonomy) -> Result<(), StreamError> {
        let invalid = |msg: String| Err(StreamError::Invalid(msg));
        if self.tasks.is_empty() {
            return invalid("no tasks".into());
        }
        if self.tasks[0].start != 1 {
            return invalid(format!("first task starts at {}", self.tasks[0].start));
        }
        for w in self.tasks.windows(2) {
            if w[1].start <= w[0].start {
                return invalid("task start indices not strictly increasing".into());
            }
        }
        if let Some(last) = self.tasks.last() {
            if last.start > self.items.len() as u64 {
                return invalid("last task starts past the end of the stream".into());
            }
        }

        let mut seen_intro: BTreeSet<(usize, LabelId)> = BTreeSet::new();
        for spec in &self.tasks {
            for pair in &spec.introduced {
                if !seen_intro.insert(*pair) {
                    return invalid(format!(
                        "class (level {}, label {}) introduced twice",
                        pair.0, pair.1
                    ));
                }
            }
        }

        let by_id = dataset.index_by_id();
        let mut seen_classes: BTreeSet<(usize, LabelId)> = BTreeSet::new();
        let mut id_task: BTreeMap<u64, usize> = BTreeMap::new();
        for (k, spec) in self.tasks.iter().enumerate() {
            let end = self.task_end(spec.index);
            let mut new_classes: BTreeSet<(usize, LabelId)> = BTreeSet::new();
            for t in spec.start..=end {
                let item = &self.items[(t - 1) as usize];
                match (self.scenario, spec.index, item.labels) {
                    (Scenario::SingleDepthDualLabel, idx, labels) if idx >= 2 => {
                        let Labels::Dual { coarse, fine } = labels else {
                            return invalid(format!(
                                "t={t}: dual-label task item must carry two labels"
                            ));
                        };
                        if fine.0 != coarse.0 + 1 {
                            return invalid(format!("t={t}: dual labels not at adjacent levels"));
                        }
                        if tax.ancestor_at(fine.1, coarse.0)? != coarse.1 {
                            return invalid(format!("t={t}: dual labels not ancestor-consistent"));
                        }
                    }
                    (_, _, Labels::Single(_)) => {}
                    _ => {
                        return invalid(format!("t={t}: unexpected label shape for scenario"));
                    }
                }
                for pair in item.labels.iter() {
                    if !seen_classes.contains(&pair) {
                        new_classes.insert(pair);
                    }
                }
                // relabeling must agree with the source sample's leaf
                let src_idx = by_id.get(&item.sample_id_key()).copied();
                let Some(src_idx) = src_idx else {
                    return invalid(format!("t={t}: sample id {} not in dataset", item.id));
                };
                let (leaf_level, leaf) = dataset.samples[src_idx].labels.finest();
                for (level, label) in item.labels.iter() {
                    if level > leaf_level || tax.ancestor_at(leaf, level)? != label {
                        return invalid(format!(
                            "t={t}: label (level {level}, {label}) is not the leaf's ancestor"
                        ));
                    }
                }
                if self.scenario != Scenario::SingleDepthDualLabel {
                    if let Some(prev) = id_task.insert(item.id, spec.index) {
                        if prev != spec.index {
                            return invalid(format!(
                                "sample id {} appears in tasks {prev} and {}",
                                item.id, spec.index
                            ));
                        }
                    }
                }
            }
            let introduced: BTreeSet<(usize, LabelId)> = spec.introduced.iter().copied().collect();
            if new_classes != introduced {
                return invalid(format!(
                    "task {}: newly appearing classes {:?} differ from introduced {:?}",
                    spec.index, new_classes, introduced
                ));
            }
            seen_classes.extend(introduced);
            let _ = k;
        }
        Ok(())
    }
}

impl Sample {
    fn sample_id_key(&self) -> u64 {
        self.id
    }
}

fn leaf_of(sample: &Sample, leaf_level: usize) -> Result<LabelId, StreamError> {
    match sample.labels {
        Labels::Single((level, label)) if level == leaf_level => Ok(label),
        _ => Err(StreamError::NotLeafLabeled { id: sample.id }),
    }
}

fn group_by_leaf(
    dataset: &Dataset,
    leaf_level: usize,
) -> Result<BTreeMap<LabelId, Vec<usize>>, StreamError> {
    let mut groups: BTreeMap<LabelId, Vec<usize>> = BTreeMap::new();
    for (i, s) in dataset.samples.iter().enumerate() {
        groups.entry(leaf_of(s, leaf_level)?).or_default().push(i);
    }
    Ok(groups)
}

fn finish_tasks(
    mut task_items: Vec<Vec<Sample>>,
    introduced: Vec<Vec<(usize, LabelId)>>,
    scenario: Scenario,
    seed: u64,
    rng: &mut ChaCha8Rng,
) -> TaskStream {
    let mut items = Vec::new();
    let mut tasks = Vec::new();
    let mut start = 1u64;
    for (k, task) in task_items.iter_mut().enumerate() {
        task.shuffle(rng);
        tasks.push(TaskSpec {
            index: k + 1,
            introduced: introduced[k].clone(),
            start,
        });
        start += task.len() as u64;
        items.append(task);
    }
    TaskStream {
        items,
        tasks,
        scenario,
        seed,
    }
}

/// Single-depth stream over a 2-level taxonomy.
///
/// Task 1 covers every parent with parent-labeled data; each of the
/// `tasks_after_first` later tasks expands a disjoint, seed-chosen subset of
/// parents into their children. Single-label mode relabels a held-out half
/// of each leaf's instances (instance-disjoint tasks); dual-label mode
/// reuses the full instance pool and attaches both labels.
pub fn make_single_depth_stream(
    dataset: &Dataset,
    taxonomy: &Taxonomy,
    dual_label: bool,
    tasks_after_first: usize,
    seed: u64,
) -> Result<TaskStream, StreamError> {
    if taxonomy.num_levels() != 2 {
        return Err(StreamError::NotTwoLevels(taxonomy.num_levels()));
    }
    let parents = taxonomy.level_labels(1)?.to_vec();
    if tasks_after_first == 0 || tasks_after_first > parents.len() {
        return Err(StreamError::TooManyTasks {
            requested: tasks_after_first,
            max: parents.len(),
        });
    }
    let groups = group_by_leaf(dataset, 2)?;

    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut shuffled_parents = parents.clone();
    shuffled_parents.shuffle(&mut rng);
    let mut parent_groups: Vec<Vec<LabelId>> = vec![Vec::new(); tasks_after_first];
    for (i, p) in shuffled_parents.into_iter().enumerate() {
        parent_groups[i % tasks_after_first].push(p);
    }
    for g in &mut parent_groups {
        g.sort();
    }

    // Per leaf: split the instance pool between task 1 (parent-labeled) and
    // the expansion task (child-labeled). Dual-label reuses the whole pool
    // on both sides.
    let mut task1_pool: BTreeMap<LabelId, Vec<usize>> = BTreeMap::new();
    let mut child_pool: BTreeMap<LabelId, Vec<usize>> = BTreeMap::new();
    for (&leaf, idxs) in &groups {
        if dual_label {
            task1_pool.insert(leaf, idxs.clone());
            child_pool.insert(leaf, idxs.clone());
        } else {
            let mut shuffled = idxs.clone();
            shuffled.shuffle(&mut rng);
            let cut = shuffled.len().div_ceil(2);
            task1_pool.insert(leaf, shuffled[..cut].to_vec());
            child_pool.insert(leaf, shuffled[cut..].to_vec());
        }
    }

    let mut task_items: Vec<Vec<Sample>> = Vec::new();
    let mut introduced: Vec<Vec<(usize, LabelId)>> = Vec::new();

    let mut first = Vec::new();
    for &leaf in taxonomy.level_labels(2)? {
        let parent = taxonomy.parent_of(leaf).expect("two-level taxonomy");
        if let Some(idxs) = task1_pool.get(&leaf) {
            for &i in idxs {
                let src = &dataset.samples[i];
                first.push(Sample {
                    id: src.id,
                    features: src.features.clone(),
                    labels: Labels::Single((1, parent)),
                });
            }
        }
    }
    // every parent must actually appear in task 1
    let mut covered: BTreeSet<LabelId> = BTreeSet::new();
    for s in &first {
        covered.insert(s.labels.finest().1);
    }
    for &p in &parents {
        if !covered.contains(&p) {
            return Err(StreamError::InsufficientSamples { level: 1, label: p });
        }
    }
    task_items.push(first);
    introduced.push(parents.iter().map(|&p| (1, p)).collect());

    for group in &parent_groups {
        let mut items = Vec::new();
        let mut intro = Vec::new();
        for &parent in group {
            for &child in taxonomy.children_of(parent) {
                let pool = child_pool.get(&child).map(|v| v.as_slice()).unwrap_or(&[]);
                if pool.is_empty() {
                    return Err(StreamError::InsufficientSamples {
                        level: 2,
                        label: child,
                    });
                }
                intro.push((2, child));
                for &i in pool {
                    let src = &dataset.samples[i];
                    let labels = if dual_label {
                        Labels::Dual {
                            coarse: (1, parent),
                            fine: (2, child),
                        }
                    } else {
                        Labels::Single((2, child))
                    };
                    items.push(Sample {
                        id: src.id,
                        features: src.features.clone(),
                        labels,
                    });
                }
            }
        }
        intro.sort();
        task_items.push(items);
        introduced.push(intro);
    }

    let scenario = if dual_label {
        Scenario::SingleDepthDualLabel
    } else {
        Scenario::SingleDepthSingleLabel
    };
    Ok(finish_tasks(task_items, introduced, scenario, seed, &mut rng))
}

/// Multiple-depth stream: H tasks, task h labeled with level-h ancestors.
/// Each instance is dealt to exactly one task, stratified per leaf, so the
/// stream stays instance-disjoint.
pub fn make_multi_depth_stream(
    dataset: &Dataset,
    taxonomy: &Taxonomy,
    seed: u64,
) -> Result<TaskStream, StreamError> {
    let h = taxonomy.num_levels();
    let groups = group_by_leaf(dataset, h)?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);

    let mut task_items: Vec<Vec<Sample>> = vec![Vec::new(); h];
    for (&leaf, idxs) in &groups {
        let mut shuffled = idxs.clone();
        shuffled.shuffle(&mut rng);
        for (pos, &i) in shuffled.iter().enumerate() {
            let level = pos % h + 1;
            let label = taxonomy.ancestor_at(leaf, level)?;
            let src = &dataset.samples[i];
            task_items[level - 1].push(Sample {
                id: src.id,
                features: src.features.clone(),
                labels: Labels::Single((level, label)),
            });
        }
    }

    let mut introduced = Vec::new();
    for level in 1..=h {
        let mut present: BTreeSet<LabelId> = BTreeSet::new();
        for s in &task_items[level - 1] {
            present.insert(s.labels.finest().1);
        }
        for &label in taxonomy.level_labels(level)? {
            if !present.contains(&label) {
                return Err(StreamError::InsufficientSamples { level, label });
            }
        }
        introduced.push(
            taxonomy
                .level_labels(level)?
                .iter()
                .map(|&l| (level, l))
                .collect(),
        );
    }

    Ok(finish_tasks(
        task_items,
        introduced,
        Scenario::MultiDepth,
        seed,
        &mut rng,
    ))
}

/// Classic disjoint stream: leaf classes are shuffled and dealt round-robin
/// into `num_tasks` groups; tasks stream only their own classes, leaf-labeled.
pub fn make_disjoint_stream(
    dataset: &Dataset,
    taxonomy: &Taxonomy,
    num_tasks: usize,
    seed: u64,
) -> Result<TaskStream, StreamError> {
    let h = taxonomy.num_levels();
    let leaves = taxonomy.level_labels(h)?.to_vec();
    if num_tasks == 0 || num_tasks > leaves.len() {
        return Err(StreamError::TooManyTasks {
            requested: num_tasks,
            max: leaves.len(),
        });
    }
    let groups = group_by_leaf(dataset, h)?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);

    let mut shuffled = leaves;
    shuffled.shuffle(&mut rng);
    let mut class_groups: Vec<Vec<LabelId>> = vec![Vec::new(); num_tasks];
    for (i, leaf) in shuffled.into_iter().enumerate() {
        class_groups[i % num_tasks].push(leaf);
    }

    let mut task_items = Vec::new();
    let mut introduced = Vec::new();
    for group in &mut class_groups {
        group.sort();
        let mut items = Vec::new();
        for &leaf in group.iter() {
            if let Some(idxs) = groups.get(&leaf) {
                for &i in idxs {
                    items.push(dataset.samples[i].clone());
                }
            }
        }
        introduced.push(group.iter().map(|&l| (h, l)).collect());
        task_items.push(items);
    }

    Ok(finish_tasks(
        task_items,
        introduced,
        Scenario::Disjoint,
        seed,
        &mut rng,
    ))
}

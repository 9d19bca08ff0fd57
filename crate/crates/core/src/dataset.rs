//! Labeled feature datasets: a synthetic hierarchical-Gaussian generator,
//! a plain-text feature-file loader/writer, and stratified splitting.
//!
//! Features are real vectors rather than images; the generator plants one
//! Gaussian cluster per leaf label, with cluster means organized to follow
//! the taxonomy (children scatter around their parent's mean).

use std::collections::BTreeMap;
use std::fs;
use std::io::{self, BufRead, Write};
use std::path::Path;
use std::sync::Arc;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use thiserror::Error;

use crate::taxonomy::{LabelId, Taxonomy, TaxonomyError};

#[derive(Debug, Error)]
pub enum DatasetError {
    #[error("invalid spread: {0}")]
    InvalidSpread(String),
    #[error("no samples requested for leaf '{0}'")]
    ZeroSamples(String),
    #[error("line {line}: {msg}")]
    Parse { line: usize, msg: String },
    #[error("unknown label '{0}'")]
    UnknownLabel(String),
    #[error("line {line}: expected {expected} feature values, got {got}")]
    DimMismatch {
        line: usize,
        expected: usize,
        got: usize,
    },
    #[error("test fraction {0} out of range (0, 1)")]
    FractionOutOfRange(f64),
    #[error("sample {id}: {msg}")]
    InvalidSample { id: u64, msg: String },
    #[error(transparent)]
    Taxonomy(#[from] TaxonomyError),
    #[error(transparent)]
    Io(#[from] io::Error),
}

/// One or two (level, label) assignments. The dual form keeps the coarser
/// label first; both labels must be hierarchically consistent.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Labels {
    Single((usize, LabelId)),
    Dual {
        coarse: (usize, LabelId),
        fine: (usize, LabelId),
    },
}

impl Labels {
    pub fn len(&self) -> usize {
        match self {
            Labels::Single(_) => 1,
            Labels::Dual { .. } => 2,
        }
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    /// The finest-level assignment.
    pub fn finest(&self) -> (usize, LabelId) {
        match self {
            Labels::Single(p) => *p,
            Labels::Dual { fine, .. } => *fine,
        }
    }

    pub fn iter(&self) -> LabelsIter {
        LabelsIter {
            labels: *self,
            pos: 0,
        }
    }

    pub fn contains(&self, pair: (usize, LabelId)) -> bool {
        self.iter().any(|p| p == pair)
    }
}

pub struct LabelsIter {
    labels: Labels,
    pos: usize,
}

impl Iterator for LabelsIter {
    type Item = (usize, LabelId);

    fn next(&mut self) -> Option<Self::Item> {
        let out = match (self.labels, self.pos) {
            (Labels::Single(p), 0) => Some(p),
            (Labels::Dual { coarse, .. }, 0) => Some(coarse),
            (Labels::Dual { fine, .. }, 1) => Some(fine),
            _ => None,
        };
        if out.is_some() {
            self.pos += 1;
        }
        out
    }
}

/// A feature vector with its label assignment(s).
#[derive(Debug, Clone, PartialEq)]
pub struct Sample {
    pub id: u64,
    pub features: Vec<f64>,
    pub labels: Labels,
}

/// An immutable, validated collection of samples bound to a taxonomy.
#[derive(Debug, Clone)]
pub struct Dataset {
    pub samples: Vec<Sample>,
    pub feature_dim: usize,
    pub taxonomy: Arc<Taxonomy>,
}

impl Dataset {
    /// Validates dimensions, id uniqueness, label existence at the stated
    /// level, and dual-label hierarchy consistency.
    pub fn new(
        samples: Vec<Sample>,
        feature_dim: usize,
        taxonomy: Arc<Taxonomy>,
    ) -> Result<Dataset, DatasetError> {
        let mut ids = BTreeMap::new();
        for s in &samples {
            if s.features.len() != feature_dim {
                return Err(DatasetError::InvalidSample {
                    id: s.id,
                    msg: format!(
                        "feature length {} != dataset dim {}",
                        s.features.len(),
                        feature_dim
                    ),
                });
            }
            if ids.insert(s.id, ()).is_some() {
                return Err(DatasetError::InvalidSample {
                    id: s.id,
                    msg: "duplicate sample id".into(),
                });
            }
            for (level, label) in s.labels.iter() {
                let actual = taxonomy.level_of(label)?;
                if actual != level {
                    return Err(DatasetError::InvalidSample {
                        id: s.id,
                        msg: format!(
                            "label '{}' is at level {actual}, not {level}",
                            taxonomy.name(label)
                        ),
                    });
                }
            }
            if let Labels::Dual { coarse, fine } = s.labels {
                if coarse.0 >= fine.0 {
                    return Err(DatasetError::InvalidSample {
                        id: s.id,
                        msg: "dual labels must sit at distinct levels, coarse first".into(),
                    });
                }
                if taxonomy.ancestor_at(fine.1, coarse.0)? != coarse.1 {
                    return Err(DatasetError::InvalidSample {
                        id: s.id,
                        msg: "coarse label is not an ancestor of the fine label".into(),
                    });
                }
            }
        }
        Ok(Dataset {
            samples,
            feature_dim,
            taxonomy,
        })
    }

    pub fn len(&self) -> usize {
        self.samples.len()
    }

    pub fn is_empty(&self) -> bool {
        self.samples.is_empty()
    }

    /// Map from sample id to position in `samples`.
    pub fn index_by_id(&self) -> BTreeMap<u64, usize> {
        self.samples
            .iter()
            .enumerate()
            .map(|(i, s)| (s.id, i))
            .collect()
    }

    /// Deterministic per-class stratified split into (train, test). The test
    /// share of each finest-label group is `round(n * test_fraction)`.
    pub fn split(&self, test_fraction: f64, seed: u64) -> Result<(Dataset, Dataset), DatasetError> {
        if !(test_fraction > 0.0 && test_fraction < 1.0) {
            return Err(DatasetError::FractionOutOfRange(test_fraction));
        }
        let mut groups: BTreeMap<(usize, LabelId), Vec<usize>> = BTreeMap::new();
        for (i, s) in self.samples.iter().enumerate() {
            groups.entry(s.labels.finest()).or_default().push(i);
        }
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut test_idx = Vec::new();
        let mut train_idx = Vec::new();
        for idxs in groups.values() {
            let mut shuffled = idxs.clone();
            use rand::seq::SliceRandom;
            shuffled.shuffle(&mut rng);
            let n_test = (idxs.len() as f64 * test_fraction).round() as usize;
            test_idx.extend_from_slice(&shuffled[..n_test]);
            train_idx.extend_from_slice(&shuffled[n_test..]);
        }
        // keep the original relative order in both halves
        test_idx.sort_unstable();
        train_idx.sort_unstable();
        let pick = |idx: &[usize]| {
            Dataset {
                samples: idx.iter().map(|&i| self.samples[i].clone()).collect(),
                feature_dim: self.feature_dim,
                taxonomy: Arc::clone(&self.taxonomy),
            }
        };
        Ok((pick(&train_idx), pick(&test_idx)))
    }
}

/// Per-leaf sample counts for the generator; the map form is the class
/// imbalance knob.
#[derive(Debug, Clone)]
pub enum SamplesPerLeaf {
    Uniform(usize),
    PerLeaf(BTreeMap<LabelId, usize>),
}

impl SamplesPerLeaf {
    fn count_for(&self, leaf: LabelId) -> Option<usize> {
        match self {
            SamplesPerLeaf::Uniform(n) => Some(*n),
            SamplesPerLeaf::PerLeaf(m) => m.get(&leaf).copied(),
        }
    }
}

fn normal_vec(rng: &mut ChaCha8Rng, dim: usize) -> Vec<f64> {
    (0..dim).map(|_| rng.sample(StandardNormal)).collect()
}

fn unit_vec(rng: &mut ChaCha8Rng, dim: usize) -> Vec<f64> {
    loop {
        let v = normal_vec(rng, dim);
        let norm = v.iter().map(|x| x * x).sum::<f64>().sqrt();
        if norm > 1e-12 {
            return v.into_iter().map(|x| x / norm).collect();
        }
    }
}

/// Generates one Gaussian cluster per leaf label.
///
/// Level-1 means are drawn uniformly from the sphere of radius
/// `parent_spread`; each child mean adds a spherical-Gaussian offset with
/// per-coordinate std `child_spread`, recursively down to the leaves. Every
/// sample is its leaf mean plus isotropic noise of std `noise_sigma` and
/// carries the single leaf label. Deterministic for a fixed seed.
pub fn gen_hier_gaussians(
    taxonomy: &Arc<Taxonomy>,
    feature_dim: usize,
    samples_per_leaf: &SamplesPerLeaf,
    parent_spread: f64,
    child_spread: f64,
    noise_sigma: f64,
    seed: u64,
) -> Result<Dataset, DatasetError> {
    let positive = |v: f64| v.is_finite() && v > 0.0;
    if !positive(parent_spread) || !positive(child_spread) {
        return Err(DatasetError::InvalidSpread(
            "parent_spread and child_spread must be > 0".into(),
        ));
    }
    if !noise_sigma.is_finite() || noise_sigma < 0.0 {
        return Err(DatasetError::InvalidSpread(
            "noise_sigma must be >= 0".into(),
        ));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let h = taxonomy.num_levels();

    let mut means: BTreeMap<LabelId, Vec<f64>> = BTreeMap::new();
    for level in 1..=h {
        for &label in taxonomy.level_labels(level)? {
            let mean = if level == 1 {
                unit_vec(&mut rng, feature_dim)
                    .into_iter()
                    .map(|x| x * parent_spread)
                    .collect()
            } else {
                let parent = taxonomy.parent_of(label).expect("validated taxonomy");
                let base = &means[&parent];
                normal_vec(&mut rng, feature_dim)
                    .iter()
                    .zip(base)
                    .map(|(z, m)| m + z * child_spread)
                    .collect()
            };
            means.insert(label, mean);
        }
    }

    let mut samples = Vec::new();
    let mut next_id = 0u64;
    let leaf_level = h;
    for &leaf in taxonomy.level_labels(leaf_level)? {
        let count = samples_per_leaf.count_for(leaf).unwrap_or(0);
        if count == 0 {
            return Err(DatasetError::ZeroSamples(taxonomy.name(leaf).to_string()));
        }
        let mean = &means[&leaf];
        for _ in 0..count {
            let features: Vec<f64> = normal_vec(&mut rng, feature_dim)
                .iter()
                .zip(mean)
                .map(|(z, m)| m + z * noise_sigma)
                .collect();
            samples.push(Sample {
                id: next_id,
                features,
                labels: Labels::Single((leaf_level, leaf)),
            });
            next_id += 1;
        }
    }
    Dataset::new(samples, feature_dim, Arc::clone(taxonomy))
}

fn format_labels(labels: &Labels, tax: &Taxonomy) -> String {
    labels
        .iter()
        .map(|(level, label)| format!("{}:{}", level, tax.name(label)))
        .collect::<Vec<_>>()
        .join(",")
}

fn parse_labels(field: &str, tax: &Taxonomy, line: usize) -> Result<Labels, DatasetError> {
    let mut pairs = Vec::new();
    for part in field.split(',') {
        let (level, name) = part.split_once(':').ok_or_else(|| DatasetError::Parse {
            line,
            msg: format!("bad label field '{part}', expected level:name"),
        })?;
        let level: usize = level.trim().parse().map_err(|_| DatasetError::Parse {
            line,
            msg: format!("bad level in '{part}'"),
        })?;
        let label = tax
            .id_of(name)
            .ok_or_else(|| DatasetError::UnknownLabel(name.to_string()))?;
        pairs.push((level, label));
    }
    match pairs.len() {
        1 => Ok(Labels::Single(pairs[0])),
        2 => {
            let (a, b) = (pairs[0], pairs[1]);
            let (coarse, fine) = if a.0 < b.0 { (a, b) } else { (b, a) };
            Ok(Labels::Dual { coarse, fine })
        }
        n => Err(DatasetError::Parse {
            line,
            msg: format!("expected 1 or 2 labels, got {n}"),
        }),
    }
}

/// Reads the feature-file format: a `dim=<d>` header, then one sample per
/// line as `id<TAB>level:name[,level:name]<TAB>v1,v2,...,vd`.
pub fn read_features<R: BufRead>(
    reader: R,
    taxonomy: &Arc<Taxonomy>,
) -> Result<Dataset, DatasetError> {
    let mut lines = reader.lines().enumerate();
    let dim = loop {
        match lines.next() {
            Some((idx, line)) => {
                let line = line?;
                let trimmed = line.trim();
                if trimmed.is_empty() || trimmed.starts_with('#') {
                    continue;
                }
                let d = trimmed
                    .strip_prefix("dim=")
                    .and_then(|v| v.parse::<usize>().ok())
                    .ok_or_else(|| DatasetError::Parse {
                        line: idx + 1,
                        msg: format!("expected 'dim=<d>' header, got '{trimmed}'"),
                    })?;
                break d;
            }
            None => {
                return Err(DatasetError::Parse {
                    line: 1,
                    msg: "missing 'dim=<d>' header".into(),
                })
            }
        }
    };

    let mut samples = Vec::new();
    for (idx, line) in lines {
        let line = line?;
        let lineno = idx + 1;
        let trimmed = line.trim();
        if trimmed.is_empty() || trimmed.starts_with('#') {
            continue;
        }
        let fields: Vec<&str> = line.split('\t').collect();
        if fields.len() != 3 {
            return Err(DatasetError::Parse {
                line: lineno,
                msg: format!("expected 3 tab-separated fields, got {}", fields.len()),
            });
        }
        let id: u64 = fields[0].trim().parse().map_err(|_| DatasetError::Parse {
            line: lineno,
            msg: format!("bad sample id '{}'", fields[0]),
        })?;
        let labels = parse_labels(fields[1].trim(), taxonomy, lineno)?;
        let mut features = Vec::new();
        for v in fields[2].split(',') {
            let x: f64 = v.trim().parse().map_err(|_| DatasetError::Parse {
                line: lineno,
                msg: format!("bad feature value '{v}'"),
            })?;
            features.push(x);
        }
        if features.len() != dim {
            return Err(DatasetError::DimMismatch {
                line: lineno,
                expected: dim,
                got: features.len(),
            });
        }
        samples.push(Sample {
            id,
            features,
            labels,
        });
    }
    Dataset::new(samples, dim, Arc::clone(taxonomy))
}

pub fn load_feature_file<P: AsRef<Path>>(
    path: P,
    taxonomy: &Arc<Taxonomy>,
) -> Result<Dataset, DatasetError> {
    let file = fs::File::open(path)?;
    read_features(io::BufReader::new(file), taxonomy)
}

/// Exact inverse of `read_features` on valid datasets: feature values are
/// written in shortest round-trip decimal form.
pub fn write_features<W: Write>(dataset: &Dataset, mut w: W) -> io::Result<()> {
    writeln!(w, "dim={}", dataset.feature_dim)?;
    for s in &dataset.samples {
        let values: Vec<String> = s.features.iter().map(|v| format!("{v}")).collect();
        writeln!(
            w,
            "{}\t{}\t{}",
            s.id,
            format_labels(&s.labels, &dataset.taxonomy),
            values.join(",")
        )?;
    }
    Ok(())
}

pub fn write_feature_file<P: AsRef<Path>>(dataset: &Dataset, path: P) -> io::Result<()> {
    let mut f = fs::File::create(path)?;
    write_features(dataset, &mut f)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::taxonomy;

    fn small_tax() -> Arc<Taxonomy> {
        Arc::new(Taxonomy::uniform(&[2, 4]).unwrap())
    }

    #[test]
    fn zero_noise_gives_identical_leaf_samples() {
        let tax = small_tax();
        let ds = gen_hier_gaussians(&tax, 8, &SamplesPerLeaf::Uniform(2), 5.0, 1.0, 0.0, 3).unwrap();
        assert_eq!(ds.len(), 8);
        for pair in ds.samples.chunks(2) {
            assert_eq!(pair[0].features, pair[1].features);
            assert_eq!(pair[0].labels, pair[1].labels);
        }
    }

    #[test]
    fn generation_is_deterministic() {
        let tax = small_tax();
        let a = gen_hier_gaussians(&tax, 8, &SamplesPerLeaf::Uniform(3), 5.0, 1.0, 0.5, 42).unwrap();
        let b = gen_hier_gaussians(&tax, 8, &SamplesPerLeaf::Uniform(3), 5.0, 1.0, 0.5, 42).unwrap();
        assert_eq!(a.samples, b.samples);
        let c = gen_hier_gaussians(&tax, 8, &SamplesPerLeaf::Uniform(3), 5.0, 1.0, 0.5, 43).unwrap();
        assert_ne!(a.samples, c.samples);
    }

    #[test]
    fn bad_generator_arguments() {
        let tax = small_tax();
        assert!(matches!(
            gen_hier_gaussians(&tax, 4, &SamplesPerLeaf::Uniform(1), 0.0, 1.0, 0.1, 1),
            Err(DatasetError::InvalidSpread(_))
        ));
        assert!(matches!(
            gen_hier_gaussians(&tax, 4, &SamplesPerLeaf::Uniform(0), 5.0, 1.0, 0.1, 1),
            Err(DatasetError::ZeroSamples(_))
        ));
    }

    #[test]
    fn per_leaf_counts_respected() {
        let tax = small_tax();
        let mut counts = BTreeMap::new();
        for (i, &leaf) in tax.level_labels(2).unwrap().iter().enumerate() {
            counts.insert(leaf, i + 1);
        }
        let ds = gen_hier_gaussians(
            &tax,
            4,
            &SamplesPerLeaf::PerLeaf(counts),
            5.0,
            1.0,
            0.1,
            1,
        )
        .unwrap();
        assert_eq!(ds.len(), 1 + 2 + 3 + 4);
    }

    #[test]
    fn nearest_mean_separates_leaves() {
        // Independent separability check: per-leaf means from a train split
        // classify a held-out split at > 90% leaf accuracy.
        let tax = Arc::new(Taxonomy::uniform(&[5, 20]).unwrap());
        let ds =
            gen_hier_gaussians(&tax, 32, &SamplesPerLeaf::Uniform(50), 10.0, 2.5, 2.0, 9).unwrap();
        let (train, test) = ds.split(0.2, 1).unwrap();
        let mut means: BTreeMap<LabelId, (Vec<f64>, usize)> = BTreeMap::new();
        for s in &train.samples {
            let (_, leaf) = s.labels.finest();
            let entry = means
                .entry(leaf)
                .or_insert_with(|| (vec![0.0; train.feature_dim], 0));
            for (a, b) in entry.0.iter_mut().zip(&s.features) {
                *a += b;
            }
            entry.1 += 1;
        }
        let means: Vec<(LabelId, Vec<f64>)> = means
            .into_iter()
            .map(|(k, (sum, n))| (k, sum.into_iter().map(|v| v / n as f64).collect()))
            .collect();
        let mut correct = 0usize;
        for s in &test.samples {
            let best = means
                .iter()
                .min_by(|(_, a), (_, b)| {
                    let da: f64 = a
                        .iter()
                        .zip(&s.features)
                        .map(|(x, y)| (x - y) * (x - y))
                        .sum();
                    let db: f64 = b
                        .iter()
                        .zip(&s.features)
                        .map(|(x, y)| (x - y) * (x - y))
                        .sum();
                    da.partial_cmp(&db).unwrap()
                })
                .unwrap()
                .0;
            if best == s.labels.finest().1 {
                correct += 1;
            }
        }
        let acc = correct as f64 / test.len() as f64;
        assert!(acc > 0.9, "nearest-mean accuracy {acc} <= 0.9");
    }

    #[test]
    fn children_cluster_around_their_parent() {
        // With child_spread <= 0.25 * parent_spread, child means should be
        // closer to their own parent mean than to any other parent's in at
        // least 95% of fuzz trials.
        let mut close = 0usize;
        let mut total = 0usize;
        for seed in 0..40u64 {
            let tax = Arc::new(Taxonomy::uniform(&[4, 12]).unwrap());
            let ds =
                gen_hier_gaussians(&tax, 16, &SamplesPerLeaf::Uniform(30), 8.0, 2.0, 0.0, seed)
                    .unwrap();
            // zero noise: every sample sits exactly on its leaf mean
            let mut leaf_means: BTreeMap<LabelId, Vec<f64>> = BTreeMap::new();
            for s in &ds.samples {
                leaf_means.insert(s.labels.finest().1, s.features.clone());
            }
            // estimate parent means as the average of their children's means
            let mut parent_means: BTreeMap<LabelId, Vec<f64>> = BTreeMap::new();
            for &p in tax.level_labels(1).unwrap() {
                let kids = tax.children_of(p);
                let mut acc = vec![0.0; ds.feature_dim];
                for &c in kids {
                    for (a, b) in acc.iter_mut().zip(&leaf_means[&c]) {
                        *a += b;
                    }
                }
                parent_means.insert(
                    p,
                    acc.into_iter().map(|v| v / kids.len() as f64).collect(),
                );
            }
            for (&leaf, mean) in &leaf_means {
                let own = tax.parent_of(leaf).unwrap();
                let dist = |m: &Vec<f64>| -> f64 {
                    m.iter()
                        .zip(mean)
                        .map(|(x, y)| (x - y) * (x - y))
                        .sum::<f64>()
                };
                let own_d = dist(&parent_means[&own]);
                let others_closer = parent_means
                    .iter()
                    .any(|(&p, m)| p != own && dist(m) < own_d);
                total += 1;
                if !others_closer {
                    close += 1;
                }
            }
        }
        let frac = close as f64 / total as f64;
        assert!(frac >= 0.95, "only {frac} of children nearest their parent");
    }

    #[test]
    fn feature_file_round_trip() {
        let tax = small_tax();
        let ds = gen_hier_gaussians(&tax, 6, &SamplesPerLeaf::Uniform(3), 5.0, 1.0, 0.7, 11).unwrap();
        let mut buf = Vec::new();
        write_features(&ds, &mut buf).unwrap();
        let back = read_features(&buf[..], &tax).unwrap();
        assert_eq!(ds.samples, back.samples);
        assert_eq!(ds.feature_dim, back.feature_dim);
    }

    #[test]
    fn loader_edge_cases() {
        let tax = small_tax();
        let empty = "dim=4\n";
        let ds = read_features(empty.as_bytes(), &tax).unwrap();
        assert_eq!(ds.len(), 0);

        let unknown = "dim=2\n0\t2:nope\t1.0,2.0\n";
        assert!(matches!(
            read_features(unknown.as_bytes(), &tax),
            Err(DatasetError::UnknownLabel(_))
        ));

        let short = "dim=3\n0\t2:L2_0\t1.0,2.0\n";
        assert!(matches!(
            read_features(short.as_bytes(), &tax),
            Err(DatasetError::DimMismatch { line: 2, .. })
        ));

        let garbled = "dim=2\n0\tL2_0\t1.0,2.0\n";
        assert!(matches!(
            read_features(garbled.as_bytes(), &tax),
            Err(DatasetError::Parse { line: 2, .. })
        ));
    }

    #[test]
    fn dual_label_consistency_enforced() {
        let tax = small_tax();
        // L2_3's parent is L1_1, so pairing it with L1_0 must fail
        let bad = "dim=1\n0\t1:L1_0,2:L2_3\t0.5\n";
        assert!(matches!(
            read_features(bad.as_bytes(), &tax),
            Err(DatasetError::InvalidSample { .. })
        ));
        let good = "dim=1\n0\t1:L1_1,2:L2_3\t0.5\n";
        assert!(read_features(good.as_bytes(), &tax).is_ok());
    }

    #[test]
    fn split_is_exactly_stratified_and_deterministic() {
        let tax = small_tax();
        let ds =
            gen_hier_gaussians(&tax, 4, &SamplesPerLeaf::Uniform(100), 5.0, 1.0, 0.5, 2).unwrap();
        let (train, test) = ds.split(0.2, 17).unwrap();
        assert_eq!(test.len(), 4 * 20);
        assert_eq!(train.len(), 4 * 80);
        let mut per_leaf: BTreeMap<LabelId, usize> = BTreeMap::new();
        for s in &test.samples {
            *per_leaf.entry(s.labels.finest().1).or_default() += 1;
        }
        assert!(per_leaf.values().all(|&n| n == 20));

        let (train2, test2) = ds.split(0.2, 17).unwrap();
        assert_eq!(train.samples, train2.samples);
        assert_eq!(test.samples, test2.samples);
    }

    #[test]
    fn split_partitions_the_input() {
        let tax = small_tax();
        let ds =
            gen_hier_gaussians(&tax, 4, &SamplesPerLeaf::Uniform(13), 5.0, 1.0, 0.5, 2).unwrap();
        let (train, test) = ds.split(0.25, 5).unwrap();
        let mut ids: Vec<u64> = train
            .samples
            .iter()
            .chain(&test.samples)
            .map(|s| s.id)
            .collect();
        ids.sort_unstable();
        let expected: Vec<u64> = (0..ds.len() as u64).collect();
        assert_eq!(ids, expected);
        assert!(matches!(
            ds.split(1.0, 5),
            Err(DatasetError::FractionOutOfRange(_))
        ));
    }

    #[test]
    fn taxonomy_file_helpers_compose() {
        let tax = small_tax();
        let mut buf = Vec::new();
        taxonomy::write_taxonomy(&tax, &mut buf).unwrap();
        let back = taxonomy::read_taxonomy(&buf[..]).unwrap();
        assert_eq!(*tax, back);
    }
}

//! Level-stratified label taxonomies.
//!
//! A taxonomy holds the whole label space partitioned into levels `1..=H`
//! (level 1 coarsest). Every label above level 1 has exactly one parent one
//! level up, so the structure is a tree under a single implicit root that is
//! never exposed. Label ids are dense integers assigned at build time in
//! (level, insertion-order) order, which keeps classifier-head rows and
//! per-level arrays stably indexable.

use std::collections::BTreeMap;
use std::fmt;
use std::fs;
use std::io::{self, BufRead, Write};
use std::path::Path;
use thiserror::Error;

/// Dense identifier for a label. Ids are unique across all levels.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct LabelId(pub u32);

impl fmt::Display for LabelId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.0)
    }
}

#[derive(Debug, Error)]
pub enum TaxonomyError {
    #[error("duplicate label '{0}'")]
    DuplicateLabel(String),
    #[error("label '{0}' is not covered by the level assignment")]
    UnknownLabel(String),
    #[error("label '{0}' has more than one parent")]
    MultipleParents(String),
    #[error("cycle detected through label '{0}'")]
    CycleDetected(String),
    #[error("parent of '{child}' (level {child_level}) must be exactly one level above, got level {parent_level}")]
    CrossLevelParent {
        child: String,
        child_level: usize,
        parent_level: usize,
    },
    #[error("label '{0}' at level {1} has no parent")]
    MissingParent(String, usize),
    #[error("level {0} has no labels")]
    EmptyLevel(usize),
    #[error("level {level} out of range 1..={max}")]
    LevelOutOfRange { level: usize, max: usize },
    #[error("no label with id {0}")]
    NoSuchLabel(u32),
    #[error("invalid taxonomy shape: {0}")]
    InvalidShape(String),
    #[error("line {line}: {msg}")]
    Parse { line: usize, msg: String },
    #[error(transparent)]
    Io(#[from] io::Error),
}

/// A validated, immutable label hierarchy. Safe to share read-only across
/// threads.
#[derive(Debug, Clone, PartialEq)]
pub struct Taxonomy {
    levels: Vec<Vec<LabelId>>,
    level_of: Vec<usize>,
    parent: Vec<Option<LabelId>>,
    children: Vec<Vec<LabelId>>,
    names: Vec<String>,
    by_name: BTreeMap<String, LabelId>,
}

impl Taxonomy {
    /// Number of hierarchy levels `H`.
    pub fn num_levels(&self) -> usize {
        self.levels.len()
    }

    /// Total number of labels across all levels.
    pub fn label_count(&self) -> usize {
        self.names.len()
    }

    /// Labels at level `h` (1-based), in ascending id order.
    pub fn level_labels(&self, h: usize) -> Result<&[LabelId], TaxonomyError> {
        if h < 1 || h > self.levels.len() {
            return Err(TaxonomyError::LevelOutOfRange {
                level: h,
                max: self.levels.len(),
            });
        }
        Ok(&self.levels[h - 1])
    }

    /// Labels at the finest level `H`.
    pub fn leaves(&self) -> &[LabelId] {
        self.levels.last().map(|v| v.as_slice()).unwrap_or(&[])
    }

    pub fn level_of(&self, label: LabelId) -> Result<usize, TaxonomyError> {
        self.level_of
            .get(label.0 as usize)
            .copied()
            .ok_or(TaxonomyError::NoSuchLabel(label.0))
    }

    /// Parent of `label`, absent for level-1 labels.
    pub fn parent_of(&self, label: LabelId) -> Option<LabelId> {
        self.parent.get(label.0 as usize).copied().flatten()
    }

    pub fn children_of(&self, label: LabelId) -> &[LabelId] {
        self.children
            .get(label.0 as usize)
            .map(|v| v.as_slice())
            .unwrap_or(&[])
    }

    /// Display name of a label id belonging to this taxonomy.
    pub fn name(&self, label: LabelId) -> &str {
        &self.names[label.0 as usize]
    }

    pub fn id_of(&self, name: &str) -> Option<LabelId> {
        self.by_name.get(name).copied()
    }

    /// Unique ancestor of `label` at level `h` (the label itself when its
    /// level is `h`).
    pub fn ancestor_at(&self, label: LabelId, h: usize) -> Result<LabelId, TaxonomyError> {
        let own = self.level_of(label)?;
        if h < 1 || h > own {
            return Err(TaxonomyError::LevelOutOfRange { level: h, max: own });
        }
        let mut cur = label;
        for _ in h..own {
            cur = self
                .parent_of(cur)
                .expect("validated taxonomy: non-root label has a parent");
        }
        Ok(cur)
    }

    /// Uniform tree with the given per-level label counts and generated
    /// names `L<level>_<index>`. Children are spread over parents so every
    /// parent receives at least one child; sizes must be non-decreasing.
    pub fn uniform(level_sizes: &[usize]) -> Result<Taxonomy, TaxonomyError> {
        if level_sizes.is_empty() {
            return Err(TaxonomyError::EmptyLevel(1));
        }
        for (h, &n) in level_sizes.iter().enumerate() {
            if n == 0 {
                return Err(TaxonomyError::EmptyLevel(h + 1));
            }
        }
        if level_sizes.windows(2).any(|w| w[1] < w[0]) {
            return Err(TaxonomyError::InvalidShape(
                "level sizes must be non-decreasing".into(),
            ));
        }
        let mut labels = Vec::new();
        let mut edges = Vec::new();
        for (h, &n) in level_sizes.iter().enumerate() {
            for i in 0..n {
                let name = format!("L{}_{}", h + 1, i);
                if h > 0 {
                    let parents = level_sizes[h - 1];
                    let p = i * parents / n;
                    edges.push((name.clone(), format!("L{}_{}", h, p)));
                }
                labels.push((name, h + 1));
            }
        }
        build_taxonomy(level_sizes.len(), &labels, &edges)
    }
}

/// Validates and builds a taxonomy from named labels with level assignments
/// plus (child, parent) edges. Ids are assigned in (level, insertion-order)
/// order over `labels`.
pub fn build_taxonomy<S: AsRef<str>>(
    level_count: usize,
    labels: &[(S, usize)],
    edges: &[(S, S)],
) -> Result<Taxonomy, TaxonomyError> {
    if level_count == 0 {
        return Err(TaxonomyError::EmptyLevel(1));
    }

    // Bucket names per level in input order, then assign dense ids level by
    // level.
    let mut buckets: Vec<Vec<&str>> = vec![Vec::new(); level_count];
    let mut seen: BTreeMap<&str, usize> = BTreeMap::new();
    for (name, level) in labels {
        let name = name.as_ref();
        if *level < 1 || *level > level_count {
            return Err(TaxonomyError::LevelOutOfRange {
                level: *level,
                max: level_count,
            });
        }
        if seen.insert(name, *level).is_some() {
            return Err(TaxonomyError::DuplicateLabel(name.to_string()));
        }
        buckets[*level - 1].push(name);
    }
    for (h, bucket) in buckets.iter().enumerate() {
        if bucket.is_empty() {
            return Err(TaxonomyError::EmptyLevel(h + 1));
        }
    }

    let mut by_name: BTreeMap<String, LabelId> = BTreeMap::new();
    let mut names = Vec::new();
    let mut level_of = Vec::new();
    let mut levels: Vec<Vec<LabelId>> = vec![Vec::new(); level_count];
    for (h, bucket) in buckets.iter().enumerate() {
        for name in bucket {
            let id = LabelId(names.len() as u32);
            by_name.insert(name.to_string(), id);
            names.push(name.to_string());
            level_of.push(h + 1);
            levels[h].push(id);
        }
    }

    let mut parent: Vec<Option<LabelId>> = vec![None; names.len()];
    for (child, par) in edges {
        let (child, par) = (child.as_ref(), par.as_ref());
        let c = *by_name
            .get(child)
            .ok_or_else(|| TaxonomyError::UnknownLabel(child.to_string()))?;
        let p = *by_name
            .get(par)
            .ok_or_else(|| TaxonomyError::UnknownLabel(par.to_string()))?;
        if parent[c.0 as usize].is_some() {
            return Err(TaxonomyError::MultipleParents(child.to_string()));
        }
        parent[c.0 as usize] = Some(p);
    }

    // Cycle check on the raw parent pointers, before the level constraints
    // have pruned them.
    for start in 0..names.len() {
        let mut cur = start;
        let mut steps = 0usize;
        while let Some(p) = parent[cur] {
            cur = p.0 as usize;
            steps += 1;
            if cur == start || steps > names.len() {
                return Err(TaxonomyError::CycleDetected(names[start].clone()));
            }
        }
    }

    for (i, p) in parent.iter().enumerate() {
        let child_level = level_of[i];
        match p {
            Some(p) => {
                let parent_level = level_of[p.0 as usize];
                if parent_level + 1 != child_level {
                    return Err(TaxonomyError::CrossLevelParent {
                        child: names[i].clone(),
                        child_level,
                        parent_level,
                    });
                }
            }
            None => {
                if child_level > 1 {
                    return Err(TaxonomyError::MissingParent(names[i].clone(), child_level));
                }
            }
        }
    }

    let mut children: Vec<Vec<LabelId>> = vec![Vec::new(); names.len()];
    for (i, p) in parent.iter().enumerate() {
        if let Some(p) = p {
            children[p.0 as usize].push(LabelId(i as u32));
        }
    }

    Ok(Taxonomy {
        levels,
        level_of,
        parent,
        children,
        names,
        by_name,
    })
}

/// Reads the tab-separated taxonomy format: one `name<TAB>level<TAB>parent`
/// record per line, `-` for no parent, `#` for comment lines.
pub fn read_taxonomy<R: BufRead>(reader: R) -> Result<Taxonomy, TaxonomyError> {
    let mut labels: Vec<(String, usize)> = Vec::new();
    let mut edges: Vec<(String, String)> = Vec::new();
    let mut max_level = 0usize;
    for (idx, line) in reader.lines().enumerate() {
        let line = line?;
        let lineno = idx + 1;
        let trimmed = line.trim();
        if trimmed.is_empty() || trimmed.starts_with('#') {
            continue;
        }
        let fields: Vec<&str> = line.split('\t').collect();
        if fields.len() != 3 {
            return Err(TaxonomyError::Parse {
                line: lineno,
                msg: format!("expected 3 tab-separated fields, got {}", fields.len()),
            });
        }
        let level: usize = fields[1].trim().parse().map_err(|_| TaxonomyError::Parse {
            line: lineno,
            msg: format!("bad level '{}'", fields[1]),
        })?;
        if level == 0 {
            return Err(TaxonomyError::Parse {
                line: lineno,
                msg: "level must be >= 1".into(),
            });
        }
        max_level = max_level.max(level);
        let name = fields[0].to_string();
        let parent = fields[2].trim();
        if parent != "-" {
            edges.push((name.clone(), parent.to_string()));
        }
        labels.push((name, level));
    }
    if labels.is_empty() {
        return Err(TaxonomyError::EmptyLevel(1));
    }
    build_taxonomy(max_level, &labels, &edges)
}

pub fn read_taxonomy_file<P: AsRef<Path>>(path: P) -> Result<Taxonomy, TaxonomyError> {
    let file = fs::File::open(path)?;
    read_taxonomy(io::BufReader::new(file))
}

/// Writes the taxonomy in the same tab-separated format `read_taxonomy`
/// accepts, one label per line in id order.
pub fn write_taxonomy<W: Write>(tax: &Taxonomy, mut w: W) -> io::Result<()> {
    for id in 0..tax.label_count() {
        let id = LabelId(id as u32);
        let parent = match tax.parent_of(id) {
            Some(p) => tax.name(p),
            None => "-",
        };
        writeln!(
            w,
            "{}\t{}\t{}",
            tax.name(id),
            tax.level_of(id).expect("dense id"),
            parent
        )?;
    }
    Ok(())
}

pub fn write_taxonomy_file<P: AsRef<Path>>(tax: &Taxonomy, path: P) -> io::Result<()> {
    let mut f = fs::File::create(path)?;
    write_taxonomy(tax, &mut f)
}

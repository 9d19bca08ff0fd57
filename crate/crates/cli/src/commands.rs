//! Subcommand implementations: run, sweep, gen-data, validate.
//!
//! Runs never mutate their inputs; everything lands under the output
//! directory via write-to-temp-then-rename. Seeds execute as independent
//! workers, capped by the `HLECL_THREADS` environment variable. On any
//! failure the files written by the invocation are removed.

use std::fs;
use std::io;
use std::path::{Path, PathBuf};
use std::sync::atomic::{AtomicUsize, Ordering};
use std::sync::{Arc, Mutex};

use hlecl_core::dataset::{
    gen_hier_gaussians, load_feature_file, write_feature_file, Dataset, DatasetError,
    SamplesPerLeaf,
};
use hlecl_core::taxonomy::{
    read_taxonomy_file, write_taxonomy_file, Taxonomy, TaxonomyError,
};
use hlecl_core::trainer::{
    run_online, summarize, MetricsLog, RunConfig, Summary, TrainerError,
};
use thiserror::Error;

use crate::config::{ConfigError, ExperimentFile};

#[derive(Debug, Error)]
pub enum CliError {
    #[error(transparent)]
    Config(#[from] ConfigError),
    #[error(transparent)]
    Trainer(#[from] TrainerError),
    #[error(transparent)]
    Taxonomy(#[from] TaxonomyError),
    #[error(transparent)]
    Dataset(#[from] DatasetError),
    #[error(transparent)]
    Io(#[from] io::Error),
}

impl CliError {
    /// 2 for configuration problems, 3 for runtime failures.
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Config(_) => 2,
            _ => 3,
        }
    }
}

/// Maximum number of parallel seed workers.
fn thread_cap() -> usize {
    if let Ok(v) = std::env::var("HLECL_THREADS") {
        if let Ok(n) = v.trim().parse::<usize>() {
            return n.max(1);
        }
    }
    std::thread::available_parallelism()
        .map(|n| n.get())
        .unwrap_or(1)
}

fn write_atomic(path: &Path, content: &str) -> io::Result<()> {
    let tmp = path.with_extension("tmp");
    fs::write(&tmp, content)?;
    fs::rename(&tmp, path)
}

/// Taxonomy plus train/test splits, resolved from the config's data source.
pub fn load_inputs(cfg: &ExperimentFile) -> Result<(Arc<Taxonomy>, Dataset, Dataset), CliError> {
    let taxonomy = Arc::new(match (&cfg.taxonomy_file, &cfg.synthetic_level_sizes) {
        (Some(path), _) => read_taxonomy_file(path)?,
        (None, Some(sizes)) => Taxonomy::uniform(sizes)?,
        (None, None) => unreachable!("config validation requires a taxonomy source"),
    });
    let dataset = match &cfg.dataset_file {
        Some(path) => load_feature_file(path, &taxonomy)?,
        None => gen_hier_gaussians(
            &taxonomy,
            cfg.feature_dim,
            &SamplesPerLeaf::Uniform(cfg.samples_per_leaf),
            cfg.parent_spread,
            cfg.child_spread,
            cfg.noise_sigma,
            cfg.data_seed,
        )?,
    };
    let (train, test) = dataset.split(cfg.test_fraction, cfg.data_seed)?;
    Ok((taxonomy, train, test))
}

/// Translates the experiment file into a per-seed run configuration.
pub fn run_config(cfg: &ExperimentFile, seed: u64) -> RunConfig {
    let mut rc = RunConfig::new(cfg.scenario, cfg.method);
    rc.stream_batch_size = cfg.stream_batch_size;
    rc.updates_per_stream_batch = cfg.updates_per_stream_batch;
    rc.memory_capacity = cfg.memory_capacity;
    rc.ramp = cfg.ramp_t;
    rc.learning_rate = cfg.learning_rate;
    rc.eval_every = cfg.eval_every;
    rc.ema_alpha = cfg.ema_alpha;
    rc.encoder_layers = cfg.encoder_layers.clone();
    rc.tasks_after_first = cfg.tasks_after_first;
    rc.num_tasks = cfg.num_tasks;
    rc.seed = seed;
    rc
}

#[derive(Debug)]
pub struct RunArtifacts {
    pub csv_paths: Vec<PathBuf>,
    pub summary_path: PathBuf,
    pub summary: Summary,
    pub logs: Vec<MetricsLog>,
}

/// Runs every seed, writing `metrics_seed<seed>.csv` per seed plus one
/// `summary.json`. Partial outputs are removed on failure.
pub fn cmd_run(cfg: &ExperimentFile, seeds: &[u64], out: &Path) -> Result<RunArtifacts, CliError> {
    fs::create_dir_all(out)?;
    let written: Mutex<Vec<PathBuf>> = Mutex::new(Vec::new());
    let result = run_all_seeds(cfg, seeds, out, &written);
    match result {
        Ok(logs) => {
            let summary = summarize(&logs);
            let summary_path = out.join("summary.json");
            let json = summary.to_json_pretty() + "\n";
            if let Err(e) = write_atomic(&summary_path, &json) {
                cleanup(&written.into_inner().unwrap());
                return Err(e.into());
            }
            let csv_paths = seeds
                .iter()
                .map(|s| out.join(format!("metrics_seed{s}.csv")))
                .collect();
            Ok(RunArtifacts {
                csv_paths,
                summary_path,
                summary,
                logs,
            })
        }
        Err(e) => {
            cleanup(&written.into_inner().unwrap());
            Err(e)
        }
    }
}

fn cleanup(paths: &[PathBuf]) {
    for p in paths {
        let _ = fs::remove_file(p);
    }
}

fn run_all_seeds(
    cfg: &ExperimentFile,
    seeds: &[u64],
    out: &Path,
    written: &Mutex<Vec<PathBuf>>,
) -> Result<Vec<MetricsLog>, CliError> {
    let (taxonomy, train, test) = load_inputs(cfg)?;
    let results: Mutex<Vec<Option<Result<MetricsLog, TrainerError>>>> =
        Mutex::new((0..seeds.len()).map(|_| None).collect());
    let next: AtomicUsize = AtomicUsize::new(0);
    let workers = thread_cap().min(seeds.len()).max(1);

    std::thread::scope(|scope| {
        for _ in 0..workers {
            scope.spawn(|| loop {
                let i = next.fetch_add(1, Ordering::SeqCst);
                if i >= seeds.len() {
                    break;
                }
                let config = run_config(cfg, seeds[i]);
                let outcome = run_online(&config, &train, &test, &taxonomy).and_then(|log| {
                    let path = out.join(format!("metrics_seed{}.csv", seeds[i]));
                    write_atomic(&path, &log.to_csv_string())?;
                    written.lock().unwrap().push(path);
                    Ok(log)
                });
                results.lock().unwrap()[i] = Some(outcome);
            });
        }
    });

    let mut logs = Vec::with_capacity(seeds.len());
    for slot in results.into_inner().unwrap() {
        logs.push(slot.expect("every seed was claimed by a worker")?);
    }
    Ok(logs)
}

/// Runs the cross product of sweep values and seeds; writes each value's run
/// under `<out>/<key>_<value>/` and a `sweep_<key>.csv` table of per-level
/// final means (one row per value).
pub fn cmd_sweep(
    cfg: &ExperimentFile,
    key: &str,
    values: &[String],
    seeds: &[u64],
    out: &Path,
) -> Result<PathBuf, CliError> {
    if values.is_empty() {
        return Err(ConfigError::Range {
            key: key.to_string(),
            msg: "sweep needs at least one value".into(),
        }
        .into());
    }
    // validate every value before running anything
    let mut swept = Vec::new();
    for value in values {
        let mut c = cfg.clone();
        c.set_sweep_value(key, value)?;
        swept.push(c);
    }
    fs::create_dir_all(out)?;

    let mut rows = Vec::new();
    let mut levels = 0usize;
    for (value, c) in values.iter().zip(&swept) {
        let sub = out.join(format!("{key}_{value}"));
        let artifacts = cmd_run(c, seeds, &sub)?;
        levels = levels.max(artifacts.summary.levels.len());
        rows.push((value.clone(), artifacts.summary));
    }

    let mut table = String::new();
    table.push_str("value");
    for h in 1..=levels {
        table.push_str(&format!(",h{h}"));
    }
    table.push('\n');
    for (value, summary) in &rows {
        table.push_str(value);
        for h in 1..=levels {
            let cell = summary
                .levels
                .get(h - 1)
                .and_then(|l| l.final_mean)
                .map(|m| format!("{m:.6}"))
                .unwrap_or_default();
            table.push(',');
            table.push_str(&cell);
        }
        table.push('\n');
    }
    let path = out.join(format!("sweep_{key}.csv"));
    write_atomic(&path, &table)?;
    Ok(path)
}

/// Generates the synthetic dataset described by the config and writes
/// `taxonomy.tsv` + `dataset.tsv` under the output directory.
pub fn cmd_gen_data(cfg: &ExperimentFile, out: &Path) -> Result<(PathBuf, PathBuf), CliError> {
    let taxonomy = Arc::new(match (&cfg.taxonomy_file, &cfg.synthetic_level_sizes) {
        (Some(path), _) => read_taxonomy_file(path)?,
        (None, Some(sizes)) => Taxonomy::uniform(sizes)?,
        (None, None) => unreachable!("config validation requires a taxonomy source"),
    });
    let dataset = gen_hier_gaussians(
        &taxonomy,
        cfg.feature_dim,
        &SamplesPerLeaf::Uniform(cfg.samples_per_leaf),
        cfg.parent_spread,
        cfg.child_spread,
        cfg.noise_sigma,
        cfg.data_seed,
    )?;
    fs::create_dir_all(out)?;
    let tax_path = out.join("taxonomy.tsv");
    let data_path = out.join("dataset.tsv");
    write_taxonomy_file(&taxonomy, &tax_path)?;
    write_feature_file(&dataset, &data_path)?;
    Ok((tax_path, data_path))
}

/// Loads and validates the configured taxonomy (and dataset, if one is
/// named), returning human-readable stats.
pub fn cmd_validate(cfg: &ExperimentFile) -> Result<Vec<String>, CliError> {
    let mut report = Vec::new();
    let taxonomy = Arc::new(match (&cfg.taxonomy_file, &cfg.synthetic_level_sizes) {
        (Some(path), _) => read_taxonomy_file(path)?,
        (None, Some(sizes)) => Taxonomy::uniform(sizes)?,
        (None, None) => unreachable!("config validation requires a taxonomy source"),
    });
    let sizes: Vec<String> = (1..=taxonomy.num_levels())
        .map(|h| taxonomy.level_labels(h).map(|l| l.len().to_string()))
        .collect::<Result<_, _>>()?;
    report.push(format!(
        "taxonomy ok: {} levels, sizes ({}), {} labels",
        taxonomy.num_levels(),
        sizes.join(", "),
        taxonomy.label_count()
    ));
    if let Some(path) = &cfg.dataset_file {
        let dataset = load_feature_file(path, &taxonomy)?;
        report.push(format!(
            "dataset ok: {} samples, dim {}",
            dataset.len(),
            dataset.feature_dim
        ));
    }
    report.push(format!(
        "scenario: {}, method: {}",
        cfg.scenario.as_str(),
        cfg.method.as_str()
    ));
    Ok(report)
}

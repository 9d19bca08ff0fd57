//! Flat `key = value` experiment configuration.
//!
//! One key per line, `#` starts a comment, no nesting. Unknown keys are
//! rejected; duplicate keys resolve last-wins. Either `taxonomy_file` or
//! `synthetic_level_sizes` must be given (not both): the former loads a
//! taxonomy from disk, the latter builds a uniform tree. When
//! `dataset_file` is absent, features are generated from the hierarchical
//! Gaussian model using the `feature_dim`/`samples_per_leaf`/spread keys.

use std::fmt::Write as _;
use std::fs;
use std::io;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use hlecl_core::stream::Scenario;
use hlecl_core::trainer::Method;
use thiserror::Error;

#[derive(Debug, Error)]
pub enum ConfigError {
    #[error("line {line}: {msg}")]
    Parse { line: usize, msg: String },
    #[error("unknown config key '{0}'")]
    UnknownKey(String),
    #[error("missing required key: {0}")]
    MissingKey(&'static str),
    #[error("key '{key}': {msg}")]
    Range { key: String, msg: String },
    #[error("key '{0}' is not sweepable")]
    UnsweepableKey(String),
    #[error(transparent)]
    Io(#[from] io::Error),
}

/// A fully validated experiment description with defaults applied.
#[derive(Debug, Clone, PartialEq)]
pub struct ExperimentFile {
    pub scenario: Scenario,
    pub method: Method,
    pub taxonomy_file: Option<PathBuf>,
    pub synthetic_level_sizes: Option<Vec<usize>>,
    pub dataset_file: Option<PathBuf>,
    pub feature_dim: usize,
    pub samples_per_leaf: usize,
    pub parent_spread: f64,
    pub child_spread: f64,
    pub noise_sigma: f64,
    pub data_seed: u64,
    pub test_fraction: f64,
    pub tasks_after_first: usize,
    pub num_tasks: usize,
    pub stream_batch_size: usize,
    pub updates_per_stream_batch: f64,
    pub memory_capacity: usize,
    pub ramp_t: u64,
    pub learning_rate: f64,
    pub eval_every: u64,
    pub ema_alpha: f64,
    pub encoder_layers: Vec<usize>,
    pub seeds: Vec<u64>,
    pub output_dir: PathBuf,
}

impl ExperimentFile {
    fn with_required(scenario: Scenario, method: Method) -> ExperimentFile {
        ExperimentFile {
            scenario,
            method,
            taxonomy_file: None,
            synthetic_level_sizes: None,
            dataset_file: None,
            feature_dim: 32,
            samples_per_leaf: 100,
            parent_spread: 10.0,
            child_spread: 2.5,
            noise_sigma: 1.0,
            data_seed: 7,
            test_fraction: 0.2,
            tasks_after_first: 2,
            num_tasks: 5,
            stream_batch_size: 16,
            updates_per_stream_batch: 3.0,
            memory_capacity: 200,
            ramp_t: 5000,
            learning_rate: 0.05,
            eval_every: 100,
            ema_alpha: 0.1,
            encoder_layers: vec![64],
            seeds: vec![1, 2, 3],
            output_dir: PathBuf::from("out"),
        }
    }

    /// Keys `cmd_sweep` accepts: numeric knobs of the training run.
    pub const SWEEPABLE_KEYS: [&'static str; 7] = [
        "ramp_T",
        "learning_rate",
        "memory_capacity",
        "stream_batch_size",
        "updates_per_stream_batch",
        "eval_every",
        "ema_alpha",
    ];

    /// Applies one `key = value` assignment with range validation.
    pub fn set(&mut self, key: &str, value: &str) -> Result<(), ConfigError> {
        let range = |key: &str, msg: &str| {
            Err(ConfigError::Range {
                key: key.to_string(),
                msg: msg.to_string(),
            })
        };
        match key {
            "scenario" => {
                self.scenario = Scenario::from_str(value)
                    .map_err(|msg| ConfigError::Range {
                        key: key.into(),
                        msg,
                    })?;
            }
            "method" => {
                self.method = Method::from_str(value).map_err(|msg| ConfigError::Range {
                    key: key.into(),
                    msg,
                })?;
            }
            "taxonomy_file" => self.taxonomy_file = Some(PathBuf::from(value)),
            "synthetic_level_sizes" => {
                let sizes = parse_list::<usize>(value)
                    .map_err(|msg| ConfigError::Range {
                        key: key.into(),
                        msg,
                    })?;
                if sizes.is_empty() || sizes.contains(&0) {
                    return range(key, "level sizes must be positive");
                }
                self.synthetic_level_sizes = Some(sizes);
            }
            "dataset_file" => self.dataset_file = Some(PathBuf::from(value)),
            "feature_dim" => self.feature_dim = parse_min(key, value, 1)?,
            "samples_per_leaf" => self.samples_per_leaf = parse_min(key, value, 1)?,
            "parent_spread" => self.parent_spread = parse_pos_f64(key, value)?,
            "child_spread" => self.child_spread = parse_pos_f64(key, value)?,
            "noise_sigma" => {
                let v: f64 = parse_num(key, value)?;
                if !v.is_finite() || v < 0.0 {
                    return range(key, "must be >= 0");
                }
                self.noise_sigma = v;
            }
            "data_seed" => self.data_seed = parse_num(key, value)?,
            "test_fraction" => {
                let v: f64 = parse_num(key, value)?;
                if !(v > 0.0 && v < 1.0) {
                    return range(key, "must be in (0, 1)");
                }
                self.test_fraction = v;
            }
            "tasks_after_first" => self.tasks_after_first = parse_min(key, value, 1)?,
            "num_tasks" => self.num_tasks = parse_min(key, value, 1)?,
            "stream_batch_size" => self.stream_batch_size = parse_min(key, value, 1)?,
            "updates_per_stream_batch" => {
                self.updates_per_stream_batch = parse_pos_f64(key, value)?
            }
            "memory_capacity" => self.memory_capacity = parse_min(key, value, 1)?,
            "ramp_T" => {
                let v: i64 = parse_num(key, value)?;
                if v < 1 {
                    return range(key, "must be >= 1");
                }
                self.ramp_t = v as u64;
            }
            "learning_rate" => self.learning_rate = parse_pos_f64(key, value)?,
            "eval_every" => {
                let v: u64 = parse_num(key, value)?;
                if v == 0 {
                    return range(key, "must be >= 1");
                }
                self.eval_every = v;
            }
            "ema_alpha" => {
                let v: f64 = parse_num(key, value)?;
                if !(v > 0.0 && v <= 1.0) {
                    return range(key, "must be in (0, 1]");
                }
                self.ema_alpha = v;
            }
            "encoder_layers" => {
                // empty value means an identity encoder
                let layers = if value.trim().is_empty() {
                    Vec::new()
                } else {
                    parse_list::<usize>(value).map_err(|msg| ConfigError::Range {
                        key: key.into(),
                        msg,
                    })?
                };
                if layers.contains(&0) {
                    return range(key, "layer widths must be >= 1");
                }
                self.encoder_layers = layers;
            }
            "seeds" => {
                let seeds = parse_list::<u64>(value).map_err(|msg| ConfigError::Range {
                    key: key.into(),
                    msg,
                })?;
                if seeds.is_empty() {
                    return range(key, "at least one seed required");
                }
                self.seeds = seeds;
            }
            "output_dir" => self.output_dir = PathBuf::from(value),
            other => return Err(ConfigError::UnknownKey(other.to_string())),
        }
        Ok(())
    }

    /// Applies a sweep assignment; only numeric run knobs are allowed.
    pub fn set_sweep_value(&mut self, key: &str, value: &str) -> Result<(), ConfigError> {
        if !Self::SWEEPABLE_KEYS.contains(&key) {
            return Err(ConfigError::UnsweepableKey(key.to_string()));
        }
        self.set(key, value)
    }

    fn finish(self) -> Result<ExperimentFile, ConfigError> {
        match (&self.taxonomy_file, &self.synthetic_level_sizes) {
            (None, None) => {
                return Err(ConfigError::MissingKey(
                    "taxonomy_file or synthetic_level_sizes",
                ))
            }
            (Some(_), Some(_)) => {
                return Err(ConfigError::Range {
                    key: "taxonomy_file".into(),
                    msg: "give either taxonomy_file or synthetic_level_sizes, not both".into(),
                })
            }
            _ => {}
        }
        Ok(self)
    }

    /// Serializes every key; `parse_config_str(to_config_string(x)) == x`.
    pub fn to_config_string(&self) -> String {
        let mut out = String::new();
        let mut kv = |k: &str, v: String| {
            let _ = writeln!(out, "{k} = {v}");
        };
        kv("scenario", self.scenario.as_str().to_string());
        kv("method", self.method.as_str().to_string());
        if let Some(p) = &self.taxonomy_file {
            kv("taxonomy_file", p.display().to_string());
        }
        if let Some(sizes) = &self.synthetic_level_sizes {
            kv("synthetic_level_sizes", join(sizes));
        }
        if let Some(p) = &self.dataset_file {
            kv("dataset_file", p.display().to_string());
        }
        kv("feature_dim", self.feature_dim.to_string());
        kv("samples_per_leaf", self.samples_per_leaf.to_string());
        kv("parent_spread", format!("{}", self.parent_spread));
        kv("child_spread", format!("{}", self.child_spread));
        kv("noise_sigma", format!("{}", self.noise_sigma));
        kv("data_seed", self.data_seed.to_string());
        kv("test_fraction", format!("{}", self.test_fraction));
        kv("tasks_after_first", self.tasks_after_first.to_string());
        kv("num_tasks", self.num_tasks.to_string());
        kv("stream_batch_size", self.stream_batch_size.to_string());
        kv(
            "updates_per_stream_batch",
            format!("{}", self.updates_per_stream_batch),
        );
        kv("memory_capacity", self.memory_capacity.to_string());
        kv("ramp_T", self.ramp_t.to_string());
        kv("learning_rate", format!("{}", self.learning_rate));
        kv("eval_every", self.eval_every.to_string());
        kv("ema_alpha", format!("{}", self.ema_alpha));
        kv("encoder_layers", join(&self.encoder_layers));
        kv("seeds", join(&self.seeds));
        kv("output_dir", self.output_dir.display().to_string());
        out
    }
}

fn join<T: ToString>(v: &[T]) -> String {
    v.iter()
        .map(|x| x.to_string())
        .collect::<Vec<_>>()
        .join(",")
}

fn parse_list<T: FromStr>(value: &str) -> Result<Vec<T>, String> {
    value
        .split(',')
        .map(str::trim)
        .filter(|s| !s.is_empty())
        .map(|s| s.parse::<T>().map_err(|_| format!("bad list item '{s}'")))
        .collect()
}

fn parse_num<T: FromStr>(key: &str, value: &str) -> Result<T, ConfigError> {
    value.trim().parse().map_err(|_| ConfigError::Range {
        key: key.to_string(),
        msg: format!("bad numeric value '{value}'"),
    })
}

fn parse_min(key: &str, value: &str, min: usize) -> Result<usize, ConfigError> {
    let v: i64 = parse_num(key, value)?;
    if v < min as i64 {
        return Err(ConfigError::Range {
            key: key.to_string(),
            msg: format!("must be >= {min}"),
        });
    }
    Ok(v as usize)
}

fn parse_pos_f64(key: &str, value: &str) -> Result<f64, ConfigError> {
    let v: f64 = parse_num(key, value)?;
    if !v.is_finite() || v <= 0.0 {
        return Err(ConfigError::Range {
            key: key.to_string(),
            msg: "must be > 0".to_string(),
        });
    }
    Ok(v)
}

pub fn parse_config_str(text: &str) -> Result<ExperimentFile, ConfigError> {
    let mut scenario = None;
    let mut method = None;
    let mut pending: Vec<(usize, String, String)> = Vec::new();
    for (idx, raw) in text.lines().enumerate() {
        let lineno = idx + 1;
        let line = raw.trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        let Some((key, value)) = line.split_once('=') else {
            return Err(ConfigError::Parse {
                line: lineno,
                msg: format!("expected 'key = value', got '{line}'"),
            });
        };
        let key = key.trim();
        let value = value.trim();
        match key {
            "scenario" => {
                scenario = Some(Scenario::from_str(value).map_err(|msg| ConfigError::Parse {
                    line: lineno,
                    msg,
                })?)
            }
            "method" => {
                method = Some(Method::from_str(value).map_err(|msg| ConfigError::Parse {
                    line: lineno,
                    msg,
                })?)
            }
            _ => pending.push((lineno, key.to_string(), value.to_string())),
        }
    }
    let scenario = scenario.ok_or(ConfigError::MissingKey("scenario"))?;
    let method = method.ok_or(ConfigError::MissingKey("method"))?;
    let mut file = ExperimentFile::with_required(scenario, method);
    for (_line, key, value) in pending {
        file.set(&key, &value)?;
    }
    file.finish()
}

pub fn parse_config<P: AsRef<Path>>(path: P) -> Result<ExperimentFile, ConfigError> {
    let text = fs::read_to_string(path)?;
    parse_config_str(&text)
}

#[cfg(test)]
mod tests {
    use super::*;

    const MINIMAL: &str = "scenario = single_depth_single_label\n\
                           method = pl_fms\n\
                           synthetic_level_sizes = 5,20\n";

    #[test]
    fn minimal_config_gets_defaults() {
        let cfg = parse_config_str(MINIMAL).unwrap();
        assert_eq!(cfg.stream_batch_size, 16);
        assert_eq!(cfg.ramp_t, 5000);
        assert_eq!(cfg.eval_every, 100);
        assert_eq!(cfg.seeds, vec![1, 2, 3]);
        assert_eq!(cfg.updates_per_stream_batch, 3.0);
    }

    #[test]
    fn negative_ramp_is_a_range_error() {
        let text = format!("{MINIMAL}ramp_T = -5\n");
        let err = parse_config_str(&text).unwrap_err();
        assert!(matches!(err, ConfigError::Range { .. }), "{err}");
    }

    #[test]
    fn unknown_key_rejected() {
        let text = format!("{MINIMAL}volume = 11\n");
        assert!(matches!(
            parse_config_str(&text).unwrap_err(),
            ConfigError::UnknownKey(_)
        ));
    }

    #[test]
    fn missing_required_keys() {
        assert!(matches!(
            parse_config_str("method = er\nsynthetic_level_sizes = 3\n").unwrap_err(),
            ConfigError::MissingKey("scenario")
        ));
        assert!(matches!(
            parse_config_str("scenario = disjoint\nmethod = er\n").unwrap_err(),
            ConfigError::MissingKey(_)
        ));
    }

    #[test]
    fn round_trip_is_identity() {
        let text = format!(
            "{MINIMAL}ramp_T = 700\nlearning_rate = 0.025\nseeds = 4,5\n\
             encoder_layers = 32,16\nnoise_sigma = 1.75\noutput_dir = results\n"
        );
        let cfg = parse_config_str(&text).unwrap();
        let round = parse_config_str(&cfg.to_config_string()).unwrap();
        assert_eq!(cfg, round);
    }

    #[test]
    fn last_assignment_wins() {
        let text = format!("{MINIMAL}ramp_T = 10\nramp_T = 20\n");
        assert_eq!(parse_config_str(&text).unwrap().ramp_t, 20);
    }

    #[test]
    fn sweepable_keys_enforced() {
        let mut cfg = parse_config_str(MINIMAL).unwrap();
        cfg.set_sweep_value("ramp_T", "500").unwrap();
        assert_eq!(cfg.ramp_t, 500);
        assert!(matches!(
            cfg.set_sweep_value("scenario", "disjoint").unwrap_err(),
            ConfigError::UnsweepableKey(_)
        ));
        assert!(matches!(
            cfg.set_sweep_value("seeds", "1").unwrap_err(),
            ConfigError::UnsweepableKey(_)
        ));
    }

    #[test]
    fn taxonomy_source_must_be_unique() {
        let both = "scenario = disjoint\nmethod = er\n\
                    synthetic_level_sizes = 4\ntaxonomy_file = tax.tsv\n";
        assert!(matches!(
            parse_config_str(both).unwrap_err(),
            ConfigError::Range { .. }
        ));
    }

    #[test]
    fn bad_lines_carry_line_numbers() {
        let text = "scenario = disjoint\nmethod er\n";
        match parse_config_str(text).unwrap_err() {
            ConfigError::Parse { line, .. } => assert_eq!(line, 2),
            other => panic!("unexpected error {other}"),
        }
    }
}

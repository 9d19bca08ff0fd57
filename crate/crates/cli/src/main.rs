//! `hlecl` — experiment runner for online continual learning on
//! hierarchically expanding label streams.

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};

use hlecl_cli::commands::{cmd_gen_data, cmd_run, cmd_sweep, cmd_validate, CliError};
use hlecl_cli::config::{parse_config, ConfigError, ExperimentFile};

#[derive(Parser)]
#[command(
    name = "hlecl",
    about = "Online continual learning experiments on hierarchical label streams",
    long_about = "Runs rehearsal-based online continual learning experiments over \
                  task streams whose label space expands hierarchically. Experiments \
                  are described by a flat key = value config file; metrics land as \
                  CSV/JSON under the output directory. Seed workers run in parallel, \
                  capped by the HLECL_THREADS environment variable."
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run the configured experiment for every seed and summarize.
    Run {
        #[arg(long)]
        config: PathBuf,
        /// Comma-separated seed list; overrides the config's `seeds`.
        #[arg(long)]
        seeds: Option<String>,
        /// Output directory; overrides the config's `output_dir`.
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Run the experiment across a grid of values for one numeric key.
    Sweep {
        #[arg(long)]
        config: PathBuf,
        /// Sweep spec `key=v1,v2,...`, e.g. `ramp_T=500,5000`.
        #[arg(long)]
        sweep: String,
        #[arg(long)]
        seeds: Option<String>,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Generate the configured synthetic taxonomy + dataset files.
    GenData {
        #[arg(long)]
        config: PathBuf,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Check that the configured taxonomy (and dataset) load cleanly.
    Validate {
        #[arg(long)]
        config: PathBuf,
    },
}

fn parse_seed_list(text: &str) -> Result<Vec<u64>, CliError> {
    let seeds: Result<Vec<u64>, _> = text
        .split(',')
        .map(str::trim)
        .filter(|s| !s.is_empty())
        .map(str::parse)
        .collect();
    match seeds {
        Ok(v) if !v.is_empty() => Ok(v),
        _ => Err(ConfigError::Range {
            key: "seeds".into(),
            msg: format!("bad seed list '{text}'"),
        }
        .into()),
    }
}

fn effective_seeds(cfg: &ExperimentFile, flag: &Option<String>) -> Result<Vec<u64>, CliError> {
    match flag {
        Some(text) => parse_seed_list(text),
        None => Ok(cfg.seeds.clone()),
    }
}

fn run(cli: Cli) -> Result<(), CliError> {
    match cli.command {
        Command::Run { config, seeds, out } => {
            let cfg = parse_config(&config)?;
            let seeds = effective_seeds(&cfg, &seeds)?;
            let out = out.unwrap_or_else(|| cfg.output_dir.clone());
            let artifacts = cmd_run(&cfg, &seeds, &out)?;
            for path in &artifacts.csv_paths {
                println!("wrote {}", path.display());
            }
            println!("wrote {}", artifacts.summary_path.display());
            for level in &artifacts.summary.levels {
                match (level.final_mean, level.final_std) {
                    (Some(mean), Some(std)) => println!(
                        "level {}: final accuracy {:.4} +/- {:.4}",
                        level.level, mean, std
                    ),
                    _ => println!("level {}: no classes introduced", level.level),
                }
            }
            Ok(())
        }
        Command::Sweep {
            config,
            sweep,
            seeds,
            out,
        } => {
            let cfg = parse_config(&config)?;
            let seeds = effective_seeds(&cfg, &seeds)?;
            let out = out.unwrap_or_else(|| cfg.output_dir.clone());
            let Some((key, values)) = sweep.split_once('=') else {
                return Err(ConfigError::Range {
                    key: "sweep".into(),
                    msg: format!("expected key=v1,v2,..., got '{sweep}'"),
                }
                .into());
            };
            let values: Vec<String> = values
                .split(',')
                .map(str::trim)
                .filter(|s| !s.is_empty())
                .map(String::from)
                .collect();
            let table = cmd_sweep(&cfg, key.trim(), &values, &seeds, &out)?;
            println!("wrote {}", table.display());
            Ok(())
        }
        Command::GenData { config, out } => {
            let cfg = parse_config(&config)?;
            let out = out.unwrap_or_else(|| cfg.output_dir.clone());
            let (tax, data) = cmd_gen_data(&cfg, &out)?;
            println!("wrote {}", tax.display());
            println!("wrote {}", data.display());
            Ok(())
        }
        Command::Validate { config } => {
            let cfg = parse_config(&config)?;
            for line in cmd_validate(&cfg)? {
                println!("{line}");
            }
            Ok(())
        }
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}

//! End-to-end behavior of the subcommands: file layout, determinism,
//! cleanup on failure, sweep cross-validation, and the binary's exit codes.

use std::fs;
use std::path::Path;
use std::process::Command;

use hlecl_cli::commands::{cmd_gen_data, cmd_run, cmd_sweep, cmd_validate};
use hlecl_cli::config::parse_config_str;
use hlecl_core::trainer::parse_metrics_csv;

fn small_config(out: &Path) -> String {
    format!(
        "scenario = single_depth_single_label\n\
         method = pl_fms\n\
         synthetic_level_sizes = 3,6\n\
         feature_dim = 8\n\
         samples_per_leaf = 20\n\
         noise_sigma = 1.0\n\
         memory_capacity = 40\n\
         ramp_T = 30\n\
         eval_every = 25\n\
         seeds = 1,2,3\n\
         output_dir = {}\n",
        out.display()
    )
}

#[test]
fn run_writes_one_csv_per_seed_plus_summary() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("results");
    let cfg = parse_config_str(&small_config(&out)).unwrap();
    let artifacts = cmd_run(&cfg, &cfg.seeds.clone(), &out).unwrap();
    assert_eq!(artifacts.csv_paths.len(), 3);
    for path in &artifacts.csv_paths {
        assert!(path.exists(), "{} missing", path.display());
        let text = fs::read_to_string(path).unwrap();
        let rows = parse_metrics_csv(text.as_bytes()).unwrap();
        assert!(!rows.is_empty());
    }
    assert!(artifacts.summary_path.exists());
    let json = fs::read_to_string(&artifacts.summary_path).unwrap();
    assert!(json.contains("final_mean"));
    assert!(json.contains("auc"));
    // no stray temp files
    for entry in fs::read_dir(&out).unwrap() {
        let name = entry.unwrap().file_name();
        assert!(!name.to_string_lossy().ends_with(".tmp"));
    }
}

#[test]
fn repeated_runs_produce_identical_files() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = parse_config_str(&small_config(dir.path())).unwrap();
    let out_a = dir.path().join("a");
    let out_b = dir.path().join("b");
    cmd_run(&cfg, &[5], &out_a).unwrap();
    cmd_run(&cfg, &[5], &out_b).unwrap();
    let a = fs::read(out_a.join("metrics_seed5.csv")).unwrap();
    let b = fs::read(out_b.join("metrics_seed5.csv")).unwrap();
    assert_eq!(a, b);
    let sa = fs::read(out_a.join("summary.json")).unwrap();
    let sb = fs::read(out_b.join("summary.json")).unwrap();
    assert_eq!(sa, sb);
}

#[test]
fn corrupt_taxonomy_fails_without_partial_outputs() {
    let dir = tempfile::tempdir().unwrap();
    let tax_path = dir.path().join("broken.tsv");
    // parent two levels up
    fs::write(&tax_path, "a\t1\t-\nb\t2\ta\nc\t3\ta\n").unwrap();
    let out = dir.path().join("results");
    let text = format!(
        "scenario = disjoint\nmethod = er\ntaxonomy_file = {}\noutput_dir = {}\n",
        tax_path.display(),
        out.display()
    );
    let cfg = parse_config_str(&text).unwrap();
    let err = cmd_run(&cfg, &[1], &out).unwrap_err();
    assert_eq!(err.exit_code(), 3);
    if out.exists() {
        let leftovers: Vec<_> = fs::read_dir(&out)
            .unwrap()
            .filter_map(|e| e.ok())
            .filter(|e| e.file_name().to_string_lossy().ends_with(".csv"))
            .collect();
        assert!(leftovers.is_empty(), "partial CSVs left behind");
    }
}

#[test]
fn sweep_rows_match_independent_runs() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("sweep");
    let mut cfg = parse_config_str(&small_config(&out)).unwrap();
    cfg.eval_every = 40;
    let seeds = [1u64, 2];
    let table_path = cmd_sweep(
        &cfg,
        "ramp_T",
        &["20".to_string(), "60".to_string()],
        &seeds,
        &out,
    )
    .unwrap();
    let table = fs::read_to_string(&table_path).unwrap();
    let lines: Vec<&str> = table.lines().collect();
    assert_eq!(lines[0], "value,h1,h2");
    assert_eq!(lines.len(), 3, "one row per swept value:\n{table}");

    // cross-validate each row against an independently executed run
    for (value, line) in [("20", lines[1]), ("60", lines[2])] {
        let mut indep = cfg.clone();
        indep.set_sweep_value("ramp_T", value).unwrap();
        let sub = dir.path().join(format!("indep_{value}"));
        let artifacts = cmd_run(&indep, &seeds, &sub).unwrap();
        let fields: Vec<&str> = line.split(',').collect();
        assert_eq!(fields[0], value);
        for (h, field) in fields[1..].iter().enumerate() {
            let expected = artifacts.summary.levels[h].final_mean.unwrap();
            let got: f64 = field.parse().unwrap();
            assert!(
                (got - expected).abs() < 5e-7,
                "value {value} level {h}: {got} vs {expected}"
            );
        }
    }
}

#[test]
fn single_value_sweep_equals_plain_run() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("sweep1");
    let cfg = parse_config_str(&small_config(&out)).unwrap();
    let table_path = cmd_sweep(&cfg, "learning_rate", &["0.05".into()], &[3], &out).unwrap();
    let table = fs::read_to_string(table_path).unwrap();

    let solo = dir.path().join("solo");
    let artifacts = cmd_run(&cfg, &[3], &solo).unwrap();
    let row = table.lines().nth(1).unwrap();
    let mean_h2: f64 = row.split(',').nth(2).unwrap().parse().unwrap();
    assert!((mean_h2 - artifacts.summary.levels[1].final_mean.unwrap()).abs() < 5e-7);
}

#[test]
fn gen_data_round_trips_through_validate_and_run() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("data");
    let gen_cfg = parse_config_str(&small_config(&out)).unwrap();
    let (tax_path, data_path) = cmd_gen_data(&gen_cfg, &out).unwrap();
    assert!(tax_path.exists() && data_path.exists());

    // a config pointing at the generated files must validate and run
    let text = format!(
        "scenario = single_depth_single_label\n\
         method = er\n\
         taxonomy_file = {}\n\
         dataset_file = {}\n\
         eval_every = 25\n\
         memory_capacity = 40\n\
         output_dir = {}\n",
        tax_path.display(),
        data_path.display(),
        out.display()
    );
    let cfg = parse_config_str(&text).unwrap();
    let report = cmd_validate(&cfg).unwrap();
    assert!(report[0].contains("taxonomy ok"));
    assert!(report[1].contains("dataset ok"));
    let tax_before = fs::read(&tax_path).unwrap();
    let data_before = fs::read(&data_path).unwrap();
    let run_out = dir.path().join("from_files");
    let artifacts = cmd_run(&cfg, &[1], &run_out).unwrap();
    assert_eq!(artifacts.csv_paths.len(), 1);
    // input files must never be touched
    assert_eq!(tax_before, fs::read(&tax_path).unwrap());
    assert_eq!(data_before, fs::read(&data_path).unwrap());
}

#[test]
fn binary_exit_codes() {
    let exe = env!("CARGO_BIN_EXE_hlecl");
    let dir = tempfile::tempdir().unwrap();

    // config error: unknown key
    let bad = dir.path().join("bad.cfg");
    fs::write(
        &bad,
        "scenario = disjoint\nmethod = er\nsynthetic_level_sizes = 4\nnope = 1\n",
    )
    .unwrap();
    let status = Command::new(exe)
        .args(["validate", "--config"])
        .arg(&bad)
        .status()
        .unwrap();
    assert_eq!(status.code(), Some(2));

    // happy path: validate a synthetic taxonomy
    let good = dir.path().join("good.cfg");
    fs::write(
        &good,
        "scenario = disjoint\nmethod = er\nsynthetic_level_sizes = 4\n",
    )
    .unwrap();
    let output = Command::new(exe)
        .args(["validate", "--config"])
        .arg(&good)
        .output()
        .unwrap();
    assert_eq!(output.status.code(), Some(0));
    assert!(String::from_utf8_lossy(&output.stdout).contains("taxonomy ok"));

    // runtime error: taxonomy file missing
    let missing = dir.path().join("missing.cfg");
    fs::write(
        &missing,
        "scenario = disjoint\nmethod = er\ntaxonomy_file = /nonexistent/tax.tsv\n",
    )
    .unwrap();
    let status = Command::new(exe)
        .args(["validate", "--config"])
        .arg(&missing)
        .status()
        .unwrap();
    assert_eq!(status.code(), Some(3));
}

#[test]
fn thread_cap_env_is_respected() {
    // functional check: capped to one worker the results must be identical
    let dir = tempfile::tempdir().unwrap();
    let exe = env!("CARGO_BIN_EXE_hlecl");
    let cfg_path = dir.path().join("exp.cfg");
    fs::write(&cfg_path, small_config(&dir.path().join("unused"))).unwrap();

    let out_serial = dir.path().join("serial");
    let status = Command::new(exe)
        .args(["run", "--config"])
        .arg(&cfg_path)
        .args(["--seeds", "1,2", "--out"])
        .arg(&out_serial)
        .env("HLECL_THREADS", "1")
        .status()
        .unwrap();
    assert_eq!(status.code(), Some(0));

    let out_parallel = dir.path().join("parallel");
    let status = Command::new(exe)
        .args(["run", "--config"])
        .arg(&cfg_path)
        .args(["--seeds", "1,2", "--out"])
        .arg(&out_parallel)
        .env("HLECL_THREADS", "8")
        .status()
        .unwrap();
    assert_eq!(status.code(), Some(0));

    for seed in [1, 2] {
        let a = fs::read(out_serial.join(format!("metrics_seed{seed}.csv"))).unwrap();
        let b = fs::read(out_parallel.join(format!("metrics_seed{seed}.csv"))).unwrap();
        assert_eq!(a, b);
    }
}

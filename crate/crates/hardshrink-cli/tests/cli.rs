//! Contract tests for the experiment runner and the `hardshrink` binary:
//! determinism, the CSV/JSON formats, and subcommand exit codes.

use std::process::Command;

use hardshrink_cli::config::{Algorithm, BaseConfig, ExperimentConfig, Scenario};
use hardshrink_cli::runner::{
    emit, run_experiment, rows_to_csv, rows_to_json, sweep_summary, EmitFormat, ResultRow,
    CSV_HEADER,
};

fn tiny_config() -> ExperimentConfig {
    ExperimentConfig {
        scenario: Scenario::NoiseSweep,
        algorithms: vec![Algorithm::Iht],
        grid: vec![0.0, 0.1],
        trials_per_cell: 1,
        base: BaseConfig {
            p: 64,
            s_star: 3,
            sigma: 0.1,
            f_o: 6.0,
            kappa_target: 50.0,
        },
        seed: 42,
        max_iters: 400,
    }
}

#[test]
fn noise_sweep_produces_one_row_per_cell() {
    let cfg = tiny_config();
    let outcome = run_experiment(&cfg, 1).unwrap();
    assert!(outcome.errors.is_empty(), "errors: {:?}", outcome.errors);
    assert_eq!(outcome.rows.len(), 2);
    let noiseless = outcome
        .rows
        .iter()
        .find(|r| r.grid_value == 0.0)
        .expect("noiseless row");
    assert_eq!(noiseless.undiscovered, 0, "noiseless recovery must be exact");
    assert!(noiseless.l2_err < 1e-6);
}

#[test]
fn reruns_are_deterministic_up_to_wall_time() {
    let cfg = tiny_config();
    let mut a = run_experiment(&cfg, 2).unwrap().rows;
    let mut b = run_experiment(&cfg, 1).unwrap().rows;
    for r in a.iter_mut().chain(b.iter_mut()) {
        r.wall_time_s = 0.0;
    }
    assert_eq!(rows_to_csv(&a), rows_to_csv(&b));
}

#[test]
fn csv_has_exact_header_and_twelve_columns() {
    let cfg = tiny_config();
    let rows = run_experiment(&cfg, 1).unwrap().rows;
    let csv = rows_to_csv(&rows);
    let mut lines = csv.lines();
    assert_eq!(
        lines.next().unwrap(),
        "scenario,algorithm,grid_param,grid_value,trial,undiscovered,support_err_frac,l2_err,f_final,iters,wall_time_s,seed"
    );
    assert_eq!(CSV_HEADER.split(',').count(), 12);
    for line in lines {
        assert_eq!(line.split(',').count(), 12, "line: {line}");
    }
}

#[test]
fn empty_rows_emit_header_only() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("empty.csv");
    emit(&[], EmitFormat::Csv, &path).unwrap();
    let text = std::fs::read_to_string(&path).unwrap();
    assert_eq!(text, format!("{CSV_HEADER}\n"));
}

#[test]
fn json_round_trips() {
    let cfg = tiny_config();
    let rows = run_experiment(&cfg, 1).unwrap().rows;
    let json = rows_to_json(&rows).unwrap();
    let parsed: Vec<ResultRow> = serde_json::from_str(&json).unwrap();
    assert_eq!(parsed, rows);
}

#[test]
fn summary_groups_per_cell_and_algorithm() {
    let mut cfg = tiny_config();
    cfg.trials_per_cell = 3;
    let rows = run_experiment(&cfg, 1).unwrap().rows;
    let summary = sweep_summary(&rows);
    assert_eq!(summary.len(), 2);
    for s in &summary {
        assert_eq!(s.trials, 3);
        assert_eq!(s.algorithm, "iht");
    }
}

#[test]
fn shipped_configs_parse_and_validate() {
    let dir = std::path::Path::new(env!("CARGO_MANIFEST_DIR")).join("../../configs");
    let mut seen = 0;
    for entry in std::fs::read_dir(&dir).expect("configs directory") {
        let path = entry.unwrap().path();
        if path.extension().and_then(|e| e.to_str()) != Some("json") {
            continue;
        }
        let text = std::fs::read_to_string(&path).unwrap();
        ExperimentConfig::from_json(&text)
            .unwrap_or_else(|e| panic!("{} failed to validate: {e}", path.display()));
        seen += 1;
    }
    assert!(seen >= 9, "expected the shipped configs, found {seen}");
}

fn bin() -> Command {
    Command::new(env!("CARGO_BIN_EXE_hardshrink"))
}

fn write_config(dir: &std::path::Path) -> std::path::PathBuf {
    let path = dir.join("config.json");
    let text = serde_json::to_string_pretty(&tiny_config()).unwrap();
    std::fs::write(&path, text).unwrap();
    path
}

#[test]
fn bench_subcommand_writes_artifacts() {
    let dir = tempfile::tempdir().unwrap();
    let cfg_path = write_config(dir.path());
    let out = dir.path().join("results");
    let status = bin()
        .args(["bench", "--config"])
        .arg(&cfg_path)
        .arg("--out")
        .arg(&out)
        .arg("--threads")
        .arg("1")
        .status()
        .unwrap();
    assert!(status.success());
    for file in ["results.csv", "summary.csv", "config.echo.json"] {
        assert!(out.join(file).exists(), "{file} missing");
    }
    let results = std::fs::read_to_string(out.join("results.csv")).unwrap();
    assert_eq!(results.lines().count(), 3); // header + 2 rows
}

#[test]
fn gen_then_solve_round_trip() {
    let dir = tempfile::tempdir().unwrap();
    let cfg_path = write_config(dir.path());
    let out = dir.path().join("instances");
    let status = bin()
        .args(["gen", "--config"])
        .arg(&cfg_path)
        .arg("--out")
        .arg(&out)
        .status()
        .unwrap();
    assert!(status.success());
    let instance = out.join("cell00_trial000");
    assert!(instance.join("meta.json").exists());
    assert!(instance.join("X.csv").exists());

    let output = bin()
        .args(["solve", "--instance"])
        .arg(&instance)
        .args(["--algo", "htp"])
        .output()
        .unwrap();
    assert!(output.status.success());
    let row: ResultRow = serde_json::from_slice(&output.stdout).unwrap();
    assert_eq!(row.algorithm, "htp");
    assert_eq!(row.undiscovered, 0, "noiseless instance must be recovered");
}

#[test]
fn bad_config_exits_with_code_one() {
    let dir = tempfile::tempdir().unwrap();
    let cfg_path = dir.path().join("bad.json");
    std::fs::write(&cfg_path, "{\"scenario\": \"noise_sweep\"").unwrap();
    let status = bin()
        .args(["bench", "--config"])
        .arg(&cfg_path)
        .arg("--out")
        .arg(dir.path().join("x"))
        .status()
        .unwrap();
    assert_eq!(status.code(), Some(1));
}

#[test]
fn unknown_algorithm_rejected_at_parse_time() {
    let dir = tempfile::tempdir().unwrap();
    let cfg_path = dir.path().join("bad_algo.json");
    std::fs::write(
        &cfg_path,
        r#"{"scenario":"noise_sweep","algorithms":["mystery"],"grid":[0.1],
            "trials_per_cell":1,"seed":1}"#,
    )
    .unwrap();
    let status = bin()
        .args(["bench", "--config"])
        .arg(&cfg_path)
        .arg("--out")
        .arg(dir.path().join("x"))
        .status()
        .unwrap();
    assert_eq!(status.code(), Some(1));
}

#[test]
fn env_seed_overrides_config() {
    let dir = tempfile::tempdir().unwrap();
    let cfg_path = write_config(dir.path());
    let out = dir.path().join("seeded");
    let status = bin()
        .args(["bench", "--config"])
        .arg(&cfg_path)
        .arg("--out")
        .arg(&out)
        .env("HARDSHRINK_SEED", "777")
        .status()
        .unwrap();
    assert!(status.success());
    let echo = std::fs::read_to_string(out.join("config.echo.json")).unwrap();
    let parsed: ExperimentConfig = serde_json::from_str(&echo).unwrap();
    assert_eq!(parsed.seed, 777);
}

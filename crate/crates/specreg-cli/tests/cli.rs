//! End-to-end CLI behavior on small configs: output files, exit codes,
//! seed override, echo reproducibility.

use std::path::{Path, PathBuf};
use std::process::{Command, Output};

fn specreg() -> Command {
    Command::new(env!("CARGO_BIN_EXE_specreg"))
}

fn write_config(dir: &Path, name: &str, body: &str) -> PathBuf {
    let path = dir.join(name);
    std::fs::write(&path, body).unwrap();
    path
}

fn small_rates_config(out: &Path) -> String {
    format!(
        r#"{{
  "command": "rates",
  "problem": {{"p": 0.5, "beta": 1.0, "B": 1.0, "M": 64, "D": 2,
               "noise": {{"kind": "bounded_uniform", "param": 0.5}}, "seed": 42}},
  "filters": ["tikhonov", "landweber"],
  "n_grid": [16, 32, 64, 128],
  "trials": 2,
  "output_dir": "{}"
}}"#,
        out.display()
    )
}

fn run_ok(args: &[&str]) -> Output {
    let out = specreg().args(args).output().expect("spawn specreg");
    assert!(
        out.status.success(),
        "expected success, got {:?}\nstderr: {}",
        out.status,
        String::from_utf8_lossy(&out.stderr)
    );
    out
}

#[test]
fn run_writes_results_summary_and_echo() {
    let tmp = tempfile::tempdir().unwrap();
    let out_dir = tmp.path().join("out");
    let config = write_config(tmp.path(), "rates.json", &small_rates_config(&out_dir));
    let output = run_ok(&["run", config.to_str().unwrap()]);
    let stdout = String::from_utf8_lossy(&output.stdout);
    assert!(stdout.contains("tikhonov"), "summary table printed:\n{stdout}");

    for file in ["results.csv", "summary.csv", "config_echo.json", "plot.gp"] {
        assert!(out_dir.join(file).exists(), "{file} missing");
    }
    let results = std::fs::read_to_string(out_dir.join("results.csv")).unwrap();
    let mut lines = results.lines();
    assert_eq!(lines.next().unwrap(), "filter,gamma,n,trial,lambda,sq_error");
    // 2 filters x 4 sizes x 2 trials.
    assert_eq!(lines.count(), 16);

    // Plot data: one row per n, parseable floats.
    let plot = std::fs::read_to_string(out_dir.join("plot_tikhonov.dat")).unwrap();
    assert_eq!(plot.lines().count(), 4);
    for line in plot.lines() {
        for field in line.split(' ') {
            field.parse::<f64>().unwrap();
        }
    }
}

#[test]
fn echo_rerun_reproduces_results() {
    let tmp = tempfile::tempdir().unwrap();
    let out_dir = tmp.path().join("out");
    let config = write_config(tmp.path(), "rates.json", &small_rates_config(&out_dir));
    run_ok(&["run", config.to_str().unwrap()]);

    let rerun_dir = tmp.path().join("rerun");
    run_ok(&[
        "run",
        out_dir.join("config_echo.json").to_str().unwrap(),
        "--output-dir",
        rerun_dir.to_str().unwrap(),
    ]);
    let original = std::fs::read(out_dir.join("results.csv")).unwrap();
    let rerun = std::fs::read(rerun_dir.join("results.csv")).unwrap();
    assert_eq!(original, rerun);
}

#[test]
fn malformed_json_exits_2_with_location() {
    let tmp = tempfile::tempdir().unwrap();
    let config = write_config(tmp.path(), "bad.json", "{\"command\": rates}");
    let out = specreg()
        .args(["run", config.to_str().unwrap()])
        .output()
        .unwrap();
    assert_eq!(out.status.code(), Some(2));
    let stderr = String::from_utf8_lossy(&out.stderr);
    assert!(stderr.contains("line"), "parse location reported: {stderr}");
}

#[test]
fn unknown_field_exits_2_naming_field() {
    let tmp = tempfile::tempdir().unwrap();
    let out_dir = tmp.path().join("out");
    let body = small_rates_config(&out_dir).replace("\"trials\": 2,", "\"trials\": 2, \"typo\": 1,");
    let config = write_config(tmp.path(), "unknown.json", &body);
    let out = specreg()
        .args(["run", config.to_str().unwrap()])
        .output()
        .unwrap();
    assert_eq!(out.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&out.stderr).contains("typo"));
}

#[test]
fn impossible_tolerance_exits_4_under_check() {
    let tmp = tempfile::tempdir().unwrap();
    let out_dir = tmp.path().join("out");
    let body = small_rates_config(&out_dir).replace(
        "\"trials\": 2,",
        "\"trials\": 2, \"check\": {\"slope_tol\": 0.0},",
    );
    let config = write_config(tmp.path(), "impossible.json", &body);
    let out = specreg()
        .args(["run", config.to_str().unwrap(), "--check"])
        .output()
        .unwrap();
    assert_eq!(out.status.code(), Some(4));
    // Without --check the same config succeeds.
    let out = specreg()
        .args(["run", config.to_str().unwrap()])
        .output()
        .unwrap();
    assert_eq!(out.status.code(), Some(0));
}

#[test]
fn seed_env_var_overrides_config() {
    let tmp = tempfile::tempdir().unwrap();
    let out_dir = tmp.path().join("out");
    let config = write_config(tmp.path(), "rates.json", &small_rates_config(&out_dir));
    let out = specreg()
        .args(["run", config.to_str().unwrap()])
        .env("SPECREG_SEED", "777")
        .output()
        .unwrap();
    assert!(out.status.success());
    let echo = std::fs::read_to_string(out_dir.join("config_echo.json")).unwrap();
    assert!(echo.contains("\"seed\": 777"), "{echo}");

    let out = specreg()
        .args(["run", config.to_str().unwrap()])
        .env("SPECREG_SEED", "not-a-number")
        .output()
        .unwrap();
    assert_eq!(out.status.code(), Some(2));
}

#[test]
fn filter_check_subcommand_passes() {
    let out = run_ok(&["filter-check", "tikhonov"]);
    assert!(String::from_utf8_lossy(&out.stdout).contains("PASS"));
    let out = run_ok(&["filter-check", "landweber", "--tau", "1.0"]);
    assert!(String::from_utf8_lossy(&out.stdout).contains("PASS"));

    let out = specreg()
        .args(["filter-check", "sobolev"])
        .output()
        .unwrap();
    assert_eq!(out.status.code(), Some(2));
}

#[test]
fn effdim_and_filter_check_configs_pass_checks() {
    let tmp = tempfile::tempdir().unwrap();
    for name in ["effdim.json", "filter_check.json"] {
        let config = Path::new(env!("CARGO_MANIFEST_DIR"))
            .join("../../configs")
            .join(name);
        let out_dir = tmp.path().join(name.replace(".json", ""));
        let out = specreg()
            .args([
                "run",
                config.to_str().unwrap(),
                "--check",
                "--output-dir",
                out_dir.to_str().unwrap(),
            ])
            .output()
            .unwrap();
        assert_eq!(
            out.status.code(),
            Some(0),
            "{name}: {}",
            String::from_utf8_lossy(&out.stderr)
        );
    }
}

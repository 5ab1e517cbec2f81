//! End-to-end checks of the binary: exit codes, the error one-liner
//! contract on stderr, file formats, and config/flag precedence.

use std::path::Path;
use std::process::{Command, Output};

fn bin() -> Command {
    Command::new(env!("CARGO_BIN_EXE_radam-lab"))
}

fn run(args: &[&str]) -> Output {
    bin().args(args).output().expect("binary spawns")
}

fn run_ok(args: &[&str]) -> Output {
    let out = run(args);
    assert!(
        out.status.success(),
        "{args:?} failed: {}",
        String::from_utf8_lossy(&out.stderr)
    );
    out
}

fn stderr_line(out: &Output) -> String {
    String::from_utf8_lossy(&out.stderr).trim_end().to_string()
}

fn read_lines(path: &Path) -> Vec<String> {
    std::fs::read_to_string(path)
        .unwrap()
        .lines()
        .map(String::from)
        .collect()
}

// --------------------------------------------------------------- error paths

#[test]
fn degenerate_beta2_fails_without_writing_the_file() {
    let dir = tempfile::tempdir().unwrap();
    let out_path = dir.path().join("curve.csv");
    let out = run(&[
        "variance-curve",
        "--beta2",
        "0.6",
        "--t-max",
        "100",
        "--out",
        out_path.to_str().unwrap(),
    ]);
    assert!(!out.status.success());
    assert!(
        stderr_line(&out).starts_with("error: degenerate-config:"),
        "stderr was: {}",
        stderr_line(&out)
    );
    assert!(
        !out_path.exists(),
        "failed command must not leave an output file"
    );
}

#[test]
fn approx_error_rejects_rho_min_at_or_below_four() {
    let dir = tempfile::tempdir().unwrap();
    let out_path = dir.path().join("err.csv");
    for rho_min in ["3", "4"] {
        let out = run(&[
            "approx-error",
            "--rho-min",
            rho_min,
            "--out",
            out_path.to_str().unwrap(),
        ]);
        assert!(!out.status.success());
        assert!(stderr_line(&out).starts_with("error: domain:"));
        assert!(!out_path.exists());
    }
}

#[test]
fn zero_workers_is_an_invalid_config() {
    let dir = tempfile::tempdir().unwrap();
    let out_path = dir.path().join("sim.csv");
    let out = run(&[
        "simulate",
        "--trajectories",
        "16",
        "--steps",
        "20",
        "--workers",
        "0",
        "--out",
        out_path.to_str().unwrap(),
    ]);
    assert!(!out.status.success());
    assert_eq!(
        stderr_line(&out),
        "error: invalid-config: --workers must be >= 1"
    );
    assert!(!out_path.exists());
}

#[test]
fn unknown_config_key_is_a_json_error() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("sim.json");
    std::fs::write(&cfg, r#"{"beta2": 0.999, "bogus": 1}"#).unwrap();
    let out_path = dir.path().join("sim.csv");
    let out = run(&[
        "simulate",
        "--config",
        cfg.to_str().unwrap(),
        "--out",
        out_path.to_str().unwrap(),
    ]);
    assert!(!out.status.success());
    assert!(
        stderr_line(&out).starts_with("error: json:"),
        "stderr: {}",
        stderr_line(&out)
    );
    assert!(!out_path.exists());
}

#[test]
fn missing_out_flag_is_a_usage_error() {
    let out = run(&["variance-curve", "--beta2", "0.999"]);
    assert!(!out.status.success());
    assert!(String::from_utf8_lossy(&out.stderr).contains("--out"));
}

#[test]
fn zero_steps_train_is_rejected() {
    let dir = tempfile::tempdir().unwrap();
    let out_path = dir.path().join("run.json");
    let out = run(&["train", "--steps", "0", "--out", out_path.to_str().unwrap()]);
    assert!(!out.status.success());
    assert!(stderr_line(&out).starts_with("error: invalid-config:"));
    assert!(!out_path.exists());
}

#[test]
fn empty_learning_rates_fail_before_any_run() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("sweep.json");
    std::fs::write(&cfg, r#"{"learning_rates": [], "steps": 10, "seeds": [0]}"#).unwrap();
    let out_path = dir.path().join("sweep.csv");
    let out = run(&[
        "sweep",
        "--config",
        cfg.to_str().unwrap(),
        "--out",
        out_path.to_str().unwrap(),
    ]);
    assert!(!out.status.success());
    assert!(stderr_line(&out).starts_with("error: invalid-config:"));
    assert!(!out_path.exists());
}

// ------------------------------------------------------------- file formats

#[test]
fn variance_curve_leaves_intractable_rows_empty() {
    let dir = tempfile::tempdir().unwrap();
    let out_path = dir.path().join("curve.csv");
    run_ok(&[
        "variance-curve",
        "--beta2",
        "0.999",
        "--t-max",
        "10",
        "--out",
        out_path.to_str().unwrap(),
    ]);
    let lines = read_lines(&out_path);
    assert_eq!(lines[0], "t,rho_t,rect_term,var_exact,var_approx");
    assert_eq!(lines.len(), 11);
    // rho_t <= 4 through step 4: only the first two columns are filled.
    // Line t holds step t, so index by the step number.
    #[allow(clippy::needless_range_loop)]
    for t in 1..=4 {
        let fields: Vec<&str> = lines[t].split(',').collect();
        assert_eq!(fields.len(), 5, "line: {}", lines[t]);
        assert_eq!(fields[0], t.to_string());
        assert!(!fields[1].is_empty());
        assert!(fields[2].is_empty() && fields[3].is_empty() && fields[4].is_empty());
    }
    assert!(lines[1].starts_with("1,1.0000000000000000e0,,,"));
    let full: Vec<&str> = lines[5].split(',').collect();
    assert!(full.iter().all(|f| !f.is_empty()), "line: {}", lines[5]);
}

#[test]
fn approx_error_default_grid_has_496_rows() {
    let dir = tempfile::tempdir().unwrap();
    let out_path = dir.path().join("err.csv");
    run_ok(&["approx-error", "--out", out_path.to_str().unwrap()]);
    let lines = read_lines(&out_path);
    assert_eq!(lines[0], "rho,var_exact,var_approx,abs_diff");
    assert_eq!(lines.len(), 497);
    assert!(lines[1].starts_with("5.0000000000000000e0,"));
    assert!(lines[496].starts_with("5.0000000000000000e2,"));
}

#[test]
fn simulate_csv_starts_at_the_first_tractable_step() {
    let dir = tempfile::tempdir().unwrap();
    let out_path = dir.path().join("sim.csv");
    let out = run_ok(&[
        "simulate",
        "--trajectories",
        "32",
        "--steps",
        "40",
        "--seed",
        "3",
        "--out",
        out_path.to_str().unwrap(),
    ]);
    let lines = read_lines(&out_path);
    assert_eq!(lines[0], "t,var_raw,var_rectified,rect_term");
    assert_eq!(lines.len(), 1 + 40 - 5 + 1);
    assert!(lines[1].starts_with("5,"));
    assert!(String::from_utf8_lossy(&out.stderr).contains("start_t = 5"));
}

#[test]
fn sweep_grid_order_and_row_count_match_the_config() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("sweep.json");
    std::fs::write(
        &cfg,
        r#"{
  "problem": {"kind": "noisy_quadratic", "dim": 4},
  "optimizers": [
    {"variant": "radam"},
    {"variant": "adam"},
    {"variant": "sgdm"}
  ],
  "learning_rates": [0.1, 0.03, 0.01, 0.003],
  "steps": 50,
  "seeds": [0, 1, 2, 3, 4]
}"#,
    )
    .unwrap();
    let out_path = dir.path().join("sweep.csv");
    let out = run_ok(&[
        "sweep",
        "--config",
        cfg.to_str().unwrap(),
        "--out",
        out_path.to_str().unwrap(),
    ]);
    let lines = read_lines(&out_path);
    assert_eq!(
        lines[0],
        "optimizer,lr,seed,final_loss,best_loss,divergent,tail_mean_loss"
    );
    assert_eq!(lines.len(), 61);
    // Nesting order: optimizer, then lr, then seed. The lr column keeps
    // all 17 significant digits, so 0.1 prints its true f64 value.
    assert!(lines[1].starts_with("radam,1.0000000000000001e-1,0,"));
    assert!(lines[6].starts_with("radam,2.9999999999999999e-2,0,"));
    assert!(lines[21].starts_with("adam,"));
    assert!(lines[41].starts_with("sgdm,"));
    assert!(
        String::from_utf8_lossy(&out.stderr).contains("60 rows (3 optimizers x 4 lrs x 5 seeds)")
    );
}

#[test]
fn divergent_sweep_rows_leave_loss_fields_empty() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("sweep.json");
    std::fs::write(
        &cfg,
        r#"{
  "problem": {"kind": "noisy_quadratic", "dim": 10, "condition_number": 100.0, "noise_std": 0.0},
  "optimizers": [{"variant": "sgdm", "momentum": 0.0}],
  "learning_rates": [0.5],
  "steps": 200,
  "seeds": [0]
}"#,
    )
    .unwrap();
    let out_path = dir.path().join("sweep.csv");
    run_ok(&[
        "sweep",
        "--config",
        cfg.to_str().unwrap(),
        "--out",
        out_path.to_str().unwrap(),
    ]);
    let lines = read_lines(&out_path);
    assert_eq!(lines.len(), 2);
    assert_eq!(lines[1], "sgdm,5.0000000000000000e-1,0,,,true,");
}

// ----------------------------------------------------------- train details

#[test]
fn train_emits_histograms_only_on_request() {
    let dir = tempfile::tempdir().unwrap();
    let plain = dir.path().join("plain.json");
    let hist = dir.path().join("hist.json");
    run_ok(&[
        "train",
        "--problem",
        "quadratic",
        "--steps",
        "250",
        "--seed",
        "1",
        "--out",
        plain.to_str().unwrap(),
    ]);
    run_ok(&[
        "train",
        "--problem",
        "quadratic",
        "--steps",
        "250",
        "--seed",
        "1",
        "--hist",
        "--out",
        hist.to_str().unwrap(),
    ]);

    let plain_json: serde_json::Value =
        serde_json::from_str(&std::fs::read_to_string(&plain).unwrap()).unwrap();
    for key in [
        "seed",
        "optimizer",
        "schedule",
        "steps",
        "losses",
        "step_sizes",
        "update_norms",
        "divergent",
        "final_params",
    ] {
        assert!(plain_json.get(key).is_some(), "missing key {key}");
    }
    assert!(plain_json.get("histograms").is_none());
    assert_eq!(plain_json["losses"].as_array().unwrap().len(), 250);

    let hist_json: serde_json::Value =
        serde_json::from_str(&std::fs::read_to_string(&hist).unwrap()).unwrap();
    let histograms = hist_json["histograms"].as_array().unwrap();
    // Every step through 100, then every 100th: 100 + {200} = 101 entries.
    assert_eq!(histograms.len(), 101);
    let first = &histograms[0];
    assert_eq!(first["step"], 1);
    assert_eq!(first["edges"].as_array().unwrap().len(), 41);
    assert_eq!(first["counts"].as_array().unwrap().len(), 40);
    assert!(first.get("underflow").is_some() && first.get("overflow").is_some());
    // The runs themselves must be identical; histograms only add a key.
    assert_eq!(plain_json["losses"], hist_json["losses"]);
    assert_eq!(plain_json["final_params"], hist_json["final_params"]);
}

#[test]
fn train_freeze_shifts_the_displayed_step_indices() {
    let dir = tempfile::tempdir().unwrap();
    let out_path = dir.path().join("run.json");
    let out = run_ok(&[
        "train",
        "--problem",
        "quadratic",
        "--optimizer",
        "adam",
        "--freeze-steps",
        "100",
        "--steps",
        "300",
        "--seed",
        "1",
        "--out",
        out_path.to_str().unwrap(),
    ]);
    let stderr = String::from_utf8_lossy(&out.stderr);
    assert!(
        stderr.contains("displayed indices are t - 100"),
        "stderr: {stderr}"
    );
    assert!(
        stderr.contains("(displayed -99 to 200)"),
        "stderr: {stderr}"
    );
}

#[test]
fn train_reports_the_executed_range() {
    let dir = tempfile::tempdir().unwrap();
    let out_path = dir.path().join("run.json");
    let out = run_ok(&[
        "train",
        "--problem",
        "quadratic",
        "--steps",
        "300",
        "--seed",
        "1",
        "--out",
        out_path.to_str().unwrap(),
    ]);
    let stderr = String::from_utf8_lossy(&out.stderr);
    assert!(
        stderr.contains("ran 300/300 steps (displayed 1 to 300)"),
        "stderr: {stderr}"
    );
}

// ------------------------------------------------------------- precedence

#[test]
fn flags_override_config_file_values() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("sim.json");
    std::fs::write(
        &cfg,
        r#"{"beta2": 0.99, "trajectories": 32, "steps": 40, "seed": 3}"#,
    )
    .unwrap();
    let merged = dir.path().join("merged.csv");
    run_ok(&[
        "simulate",
        "--config",
        cfg.to_str().unwrap(),
        "--beta2",
        "0.999",
        "--out",
        merged.to_str().unwrap(),
    ]);
    let pure = dir.path().join("pure.csv");
    run_ok(&[
        "simulate",
        "--beta2",
        "0.999",
        "--trajectories",
        "32",
        "--steps",
        "40",
        "--seed",
        "3",
        "--out",
        pure.to_str().unwrap(),
    ]);
    assert_eq!(
        std::fs::read(&merged).unwrap(),
        std::fs::read(&pure).unwrap(),
        "flag-over-file merge must match the all-flags run byte for byte"
    );
}

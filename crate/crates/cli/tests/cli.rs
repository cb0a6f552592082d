//! End-to-end tests of the `ofa` binary: exit codes, file outputs, and
//! determinism.

use std::path::{Path, PathBuf};
use std::process::{Command, Output};

fn bin() -> Command {
    Command::new(env!("CARGO_BIN_EXE_ofa"))
}

fn config_path(name: &str) -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("configs").join(name)
}

fn run(args: &[&str]) -> Output {
    bin().args(args).output().expect("binary runs")
}

fn stdout(output: &Output) -> String {
    String::from_utf8_lossy(&output.stdout).into_owned()
}

/// Parse a data CSV written by the tool: skips the `#` header comment,
/// returns (columns, rows).
fn read_csv(path: &Path) -> (String, Vec<Vec<String>>) {
    let text = std::fs::read_to_string(path).expect("csv exists");
    let mut lines = text.lines();
    let header = lines.next().expect("header line");
    assert!(header.starts_with("# ofa "), "missing provenance header: {header}");
    let columns = lines.next().expect("column row").to_string();
    let rows = lines
        .map(|l| l.split(',').map(str::to_string).collect())
        .collect();
    (columns, rows)
}

#[test]
fn solve_worked_example() {
    let dir = tempfile::tempdir().unwrap();
    let config = config_path("worked_example.toml");
    let output = run(&[
        "solve",
        "--config",
        config.to_str().unwrap(),
        "--out",
        dir.path().to_str().unwrap(),
    ]);
    assert!(output.status.success(), "{output:?}");
    assert!(stdout(&output).contains("49.94"));
    assert!(stdout(&output).contains("82.17"));

    let (columns, rows) = read_csv(&dir.path().join("equilibrium.csv"));
    assert_eq!(columns, "builder,f_bar,v_bar,h_star,utility,foc_residual,clamped");
    assert_eq!(rows.len(), 2);
    let h1: f64 = rows[0][3].parse().unwrap();
    let h2: f64 = rows[1][3].parse().unwrap();
    assert!((h1 - 49.9432).abs() < 1e-3);
    assert!((h2 - 82.1665).abs() < 1e-3);

    let json: serde_json::Value =
        serde_json::from_str(&std::fs::read_to_string(dir.path().join("equilibrium.json")).unwrap())
            .unwrap();
    assert_eq!(json["meta"]["master_seed"], 1);
    assert!(json["result"]["converged"].as_bool().unwrap());
}

#[test]
fn invalid_config_exits_2() {
    let dir = tempfile::tempdir().unwrap();
    let bad = dir.path().join("bad.toml");
    // v_bar exceeds f_bar, violating the capability assumption.
    std::fs::write(
        &bad,
        "[game]\nmu = 0.5\n[[game.builders]]\nf_bar = 10.0\nv_bar = 40.0\n\
         [[game.builders]]\nf_bar = 200.0\nv_bar = 80.0\n",
    )
    .unwrap();
    let output = run(&["solve", "--config", bad.to_str().unwrap()]);
    assert_eq!(output.status.code(), Some(2));
    let stderr = String::from_utf8_lossy(&output.stderr).into_owned();
    assert!(stderr.contains("v_bar"), "unexpected message: {stderr}");
}

#[test]
fn sweep_reproduces_reference_table() {
    let dir = tempfile::tempdir().unwrap();
    let output = run(&[
        "sweep",
        "--config",
        config_path("table2.toml").to_str().unwrap(),
        "--out",
        dir.path().to_str().unwrap(),
    ]);
    assert!(output.status.success(), "{output:?}");
    let (columns, rows) = read_csv(&dir.path().join("sweep.csv"));
    assert_eq!(
        columns,
        "parameter,value,builder,f_bar,v_bar,h_star,utility,foc_residual,clamped,error"
    );
    assert_eq!(rows.len(), 15); // 5 grid points x 3 builders
    let expected_first_column = [138.55, 64.31, 31.58];
    for (row, want) in rows.iter().take(3).zip(expected_first_column) {
        assert_eq!(row[0], "f_over_v");
        assert_eq!(row[1], "2");
        let h: f64 = row[5].parse().unwrap();
        assert!((h - want).abs() <= 0.01, "h = {h}, expected {want}");
        assert!(row[9].is_empty(), "error column should be empty");
    }
}

#[test]
fn sweep_with_empty_grid_exits_2() {
    let dir = tempfile::tempdir().unwrap();
    let config = dir.path().join("empty.toml");
    std::fs::write(
        &config,
        "[game]\nmu = 0.5\n[[game.builders]]\nf_bar = 100.0\nv_bar = 40.0\n\
         [[game.builders]]\nf_bar = 200.0\nv_bar = 80.0\n\
         [sweep]\nparameter = \"f_over_v\"\nvalues = []\n",
    )
    .unwrap();
    let output = run(&["sweep", "--config", config.to_str().unwrap()]);
    assert_eq!(output.status.code(), Some(2));
}

fn small_sim_config(dir: &Path, alpha: f64) -> PathBuf {
    let path = dir.join("sim.toml");
    std::fs::write(
        &path,
        format!(
            "[stakes]\ninitial_stakes = [10.0, 20.0, 30.0]\nalpha = {alpha}\ngamma = 1.5\n\
             horizon = 50\n[stakes.reward]\nmu = 0.7\nbeta_v = 11.0\nbids = [15.0, 20.0]\n\
             [simulate]\nreplications = 50\n"
        ),
    )
    .unwrap();
    path
}

#[test]
fn simulate_is_deterministic_per_seed() {
    let dir = tempfile::tempdir().unwrap();
    let config = small_sim_config(dir.path(), 8.0);
    let out_a = dir.path().join("a");
    let out_b = dir.path().join("b");
    for out in [&out_a, &out_b] {
        let output = run(&[
            "simulate",
            "--config",
            config.to_str().unwrap(),
            "--seed",
            "7",
            "--out",
            out.to_str().unwrap(),
        ]);
        assert!(output.status.success(), "{output:?}");
    }
    for file in ["aggregate.csv", "final_share_histogram.csv"] {
        let a = std::fs::read(out_a.join(file)).unwrap();
        let b = std::fs::read(out_b.join(file)).unwrap();
        assert_eq!(a, b, "{file} differs between identical runs");
    }
    // A different seed must change the data.
    let out_c = dir.path().join("c");
    let output = run(&[
        "simulate",
        "--config",
        config.to_str().unwrap(),
        "--seed",
        "8",
        "--out",
        out_c.to_str().unwrap(),
    ]);
    assert!(output.status.success());
    assert_ne!(
        std::fs::read(out_a.join("aggregate.csv")).unwrap(),
        std::fs::read(out_c.join("aggregate.csv")).unwrap()
    );
}

#[test]
fn simulate_rejects_cost_bound_violation() {
    let dir = tempfile::tempdir().unwrap();
    let config = small_sim_config(dir.path(), 1_000.0);
    let output = run(&["simulate", "--config", config.to_str().unwrap()]);
    assert_eq!(output.status.code(), Some(2));
    let stderr = String::from_utf8_lossy(&output.stderr).into_owned();
    assert!(stderr.contains("cost bound"), "unexpected message: {stderr}");
}

#[test]
fn verify_tables_passes_and_writes_reports() {
    let dir = tempfile::tempdir().unwrap();
    let output = run(&["verify", "--tables", "--out", dir.path().to_str().unwrap()]);
    assert_eq!(output.status.code(), Some(0), "{output:?}");
    let text = stdout(&output);
    assert!(text.contains("PASS"));
    assert!(!text.contains("FAIL"));
    assert!(dir.path().join("verify_report.json").exists());
    assert!(dir.path().join("verify_report.txt").exists());
    let json: serde_json::Value =
        serde_json::from_str(&std::fs::read_to_string(dir.path().join("verify_report.json")).unwrap())
            .unwrap();
    assert_eq!(json["result"].as_array().unwrap().len(), 20); // 4 tables x 5 columns
}

#[test]
fn verify_injected_fault_exits_1() {
    let dir = tempfile::tempdir().unwrap();
    let output = run(&[
        "verify",
        "--tables",
        "--inject-fault",
        "--out",
        dir.path().to_str().unwrap(),
    ]);
    assert_eq!(output.status.code(), Some(1));
    assert!(stdout(&output).contains("FAIL"));
}

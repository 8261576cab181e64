//! End-to-end tests of the `torusboot` binary.

use std::process::{Command, Output};

fn bin() -> Command {
    Command::new(env!("CARGO_BIN_EXE_torusboot"))
}

fn run_ok(args: &[&str]) -> String {
    let out = bin().args(args).output().unwrap();
    assert!(
        out.status.success(),
        "command {args:?} failed: {}",
        String::from_utf8_lossy(&out.stderr)
    );
    String::from_utf8(out.stdout).unwrap()
}

fn run_err(args: &[&str]) -> Output {
    let out = bin().args(args).output().unwrap();
    assert!(
        !out.status.success(),
        "command {args:?} unexpectedly passed"
    );
    out
}

#[test]
fn generate_is_deterministic_and_parseable() {
    let a = run_ok(&["generate", "--n", "16", "--c", "1", "--seed", "7"]);
    let b = run_ok(&["generate", "--n", "16", "--c", "1", "--seed", "7"]);
    assert_eq!(a, b);
    assert!(a.starts_with("16 1 7\n"));
    let g = torusboot::parse(&a).unwrap();
    assert!(g.num_long_edges() > 0);
    // different stream, different instance
    let c = run_ok(&[
        "generate", "--n", "16", "--c", "1", "--seed", "7", "--stream", "1",
    ]);
    assert_ne!(a, c);
}

#[test]
fn generate_with_zero_density_has_no_edge_lines() {
    let out = run_ok(&["generate", "--n", "8", "--c", "0", "--seed", "3"]);
    assert_eq!(out, "8 0 3\n");
}

#[test]
fn generate_rejects_small_sides_with_named_constraint() {
    let out = run_err(&["generate", "--n", "2", "--c", "1"]);
    assert_eq!(out.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&out.stderr).contains("N ≥ 3"));
}

#[test]
fn stats_round_trips_through_a_graph_file() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("g.txt");
    let text = run_ok(&["generate", "--n", "12", "--c", "1.5", "--seed", "9"]);
    std::fs::write(&path, &text).unwrap();
    let csv = run_ok(&["stats", "--in", path.to_str().unwrap()]);
    let mut lines = csv.lines();
    assert!(lines.next().unwrap().starts_with("# {"));
    assert!(lines.next().unwrap().starts_with("# summary"));
    assert_eq!(lines.next().unwrap(), "degree,probability");
    // histogram probabilities sum to 1
    let total: f64 = lines
        .map(|l| l.split(',').nth(1).unwrap().parse::<f64>().unwrap())
        .sum();
    assert!((total - 1.0).abs() < 1e-12);
}

#[test]
fn stats_json_embeds_config_and_summary() {
    let out = run_ok(&[
        "stats", "--n", "8", "--c", "1", "--seed", "3", "--format", "json",
    ]);
    let v: serde_json::Value = serde_json::from_str(&out).unwrap();
    assert_eq!(v["config"]["n"], 8);
    assert_eq!(v["config"]["seed"], 3);
    assert!(v["summary"]["mean"].as_f64().unwrap() > 0.0);
    assert!(v["histogram"].as_array().unwrap().len() > 1);
}

#[test]
fn diameter_reports_carry_method_and_seed() {
    let out = run_ok(&[
        "diameter",
        "--n",
        "12",
        "--c",
        "1",
        "--seed",
        "4",
        "--replicas",
        "2",
    ]);
    let v: serde_json::Value = serde_json::from_str(&out).unwrap();
    let reports = v["reports"].as_array().unwrap();
    assert_eq!(reports.len(), 2);
    for r in reports {
        assert_eq!(r["method"], "all_pairs");
        assert_eq!(r["N"], 12);
        assert_eq!(r["seed"], 4);
        let d = r["value"].as_u64().unwrap();
        assert!((3..=12).contains(&d), "diameter {d}");
    }
}

#[test]
fn simulate_trajectory_and_outcome_agree() {
    let csv = run_ok(&[
        "simulate", "--n", "8", "--c", "1", "--k", "0", "--p", "0.1", "--seed", "5",
    ]);
    let rows: Vec<&str> = csv.lines().skip(2).collect();
    assert!(rows[0].starts_with("0,"));
    assert_eq!(rows.last().unwrap().split(',').nth(1).unwrap(), "1");
    let json = run_ok(&[
        "simulate", "--n", "8", "--c", "1", "--k", "0", "--p", "0.1", "--seed", "5", "--format",
        "json",
    ]);
    let v: serde_json::Value = serde_json::from_str(&json).unwrap();
    assert_eq!(v["status"], "all_active");
    assert_eq!(v["steps"], 1);
    assert_eq!(v["steps"].as_u64().unwrap() + 1, rows.len() as u64);
}

#[test]
fn simulate_rejects_bad_probability() {
    let out = run_err(&["simulate", "--n", "8", "--c", "1", "--k", "1", "--p", "1.5"]);
    assert_eq!(out.status.code(), Some(2));
}

#[test]
fn mfchain_exact_backend_needs_c() {
    let out = run_err(&[
        "mfchain",
        "--n",
        "20",
        "--k",
        "2",
        "--p",
        "0.2",
        "--degree-backend",
        "exact",
    ]);
    assert_eq!(out.status.code(), Some(2));
    let ok = run_ok(&[
        "mfchain",
        "--n",
        "20",
        "--k",
        "2",
        "--p",
        "0.3",
        "--degree-backend",
        "exact",
        "--c",
        "1",
        "--seed",
        "2",
    ]);
    let v: serde_json::Value = serde_json::from_str(&ok).unwrap();
    assert_eq!(v["config"]["degree_backend"], "exact");
}

#[test]
fn meanfield_curve_k1_is_identically_zero() {
    let out = run_ok(&["meanfield", "--k", "1", "--lambda-grid", "log:0.1:10:7"]);
    for line in out.lines().skip(2) {
        assert_eq!(line.split(',').nth(1).unwrap(), "0");
    }
}

#[test]
fn meanfield_curve_k3_is_nonincreasing() {
    let out = run_ok(&["meanfield", "--k", "3", "--lambda-grid", "log:0.05:50:40"]);
    let pcs: Vec<f64> = out
        .lines()
        .skip(2)
        .map(|l| l.split(',').nth(1).unwrap().parse().unwrap())
        .collect();
    assert_eq!(pcs.len(), 40);
    for w in pcs.windows(2) {
        assert!(w[0] >= w[1] - 1e-12);
    }
}

#[test]
fn meanfield_rejects_negative_lambda_grid() {
    let out = run_err(&["meanfield", "--k", "2", "--lambda-grid", "-1,2"]);
    assert_eq!(out.status.code(), Some(2));
}

#[test]
fn sweep_k0_absorbs_every_cell_in_one_step() {
    let out = run_ok(&[
        "sweep",
        "--backend",
        "mfchain",
        "--k",
        "0",
        "--n",
        "10",
        "--lambda",
        "1",
        "--p-grid",
        "0.1,0.5",
        "--replicas",
        "3",
        "--seed",
        "1",
    ]);
    let rows: Vec<&str> = out.lines().skip(2).collect();
    assert_eq!(rows.len(), 2);
    for row in rows {
        let fields: Vec<&str> = row.split(',').collect();
        assert_eq!(fields[5], "1"); // frac_all_active
        assert_eq!(fields[6], "1"); // mean_steps
    }
}

#[test]
fn sweep_mfchain_separates_the_phase_boundary() {
    let pc = torusboot::meanfield::p_c(2.0, 2).unwrap();
    let p_grid = format!("{},{}", pc - 0.05, pc + 0.05);
    let out = run_ok(&[
        "sweep",
        "--backend",
        "mfchain",
        "--k",
        "2",
        "--n",
        "300",
        "--lambda",
        "2",
        "--p-grid",
        &p_grid,
        "--replicas",
        "100",
        "--seed",
        "7",
        "--max-steps",
        "10000",
    ]);
    let fracs: Vec<f64> = out
        .lines()
        .skip(2)
        .map(|l| l.split(',').nth(5).unwrap().parse().unwrap())
        .collect();
    assert_eq!(fracs.len(), 2);
    assert!(fracs[0] <= 0.05, "below p_c: frac {}", fracs[0]);
    assert!(fracs[1] >= 0.95, "above p_c: frac {}", fracs[1]);
}

#[test]
fn sweep_rejects_zero_replicas() {
    let out = run_err(&[
        "sweep",
        "--backend",
        "mfchain",
        "--k",
        "1",
        "--n",
        "10",
        "--lambda",
        "1",
        "--p-grid",
        "0.1",
        "--replicas",
        "0",
    ]);
    assert_eq!(out.status.code(), Some(2));
}

#[test]
fn sweep_output_is_byte_reproducible() {
    let args = [
        "sweep",
        "--backend",
        "graph",
        "--k",
        "1",
        "--n",
        "8",
        "--lambda",
        "1",
        "--p-grid",
        "lin:0.1:0.3:2",
        "--replicas",
        "4",
        "--seed",
        "9",
    ];
    assert_eq!(run_ok(&args), run_ok(&args));
}

#[test]
fn sweep_resumes_from_checkpoint() {
    let dir = tempfile::tempdir().unwrap();
    let out_path = dir.path().join("sweep.csv");
    let ckpt = dir.path().join("sweep.csv.ckpt");
    // sentinel row for the cell (lambda=1, p=0.25): impossible replica count
    // proves the value came from the checkpoint, not a fresh run
    let sentinel = serde_json::json!({
        "lambda": 1.0, "k": 0, "n": 10, "p": 0.25, "replicas": 777,
        "frac_all_active": 0.5, "mean_steps": 9.0, "pc_mf": 0.0,
        "budget_exhausted": 0
    });
    std::fs::write(&ckpt, format!("{sentinel}\n")).unwrap();
    run_ok(&[
        "sweep",
        "--backend",
        "mfchain",
        "--k",
        "0",
        "--n",
        "10",
        "--lambda",
        "1",
        "--p-grid",
        "0.25,0.5",
        "--replicas",
        "3",
        "--seed",
        "1",
        "--out",
        out_path.to_str().unwrap(),
    ]);
    let body = std::fs::read_to_string(&out_path).unwrap();
    assert!(
        body.contains("1,0,10,0.25,777,0.5,9,0"),
        "sentinel row lost:\n{body}"
    );
    assert!(
        body.contains("1,0,10,0.5,3,1,1,0"),
        "fresh cell wrong:\n{body}"
    );
    assert!(!ckpt.exists(), "checkpoint not cleared");
}

#[test]
fn out_dir_env_var_prefixes_relative_paths() {
    let dir = tempfile::tempdir().unwrap();
    let out = bin()
        .args([
            "generate",
            "--n",
            "8",
            "--c",
            "0",
            "--seed",
            "1",
            "--out",
            "sub/g.txt",
        ])
        .env("TORUSBOOT_OUT_DIR", dir.path())
        .output()
        .unwrap();
    assert!(out.status.success());
    let written = dir.path().join("sub/g.txt");
    assert!(written.exists());
    assert_eq!(std::fs::read_to_string(written).unwrap(), "8 0 1\n");
}

#[test]
fn parse_errors_surface_as_validation_exit() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("bad.txt");
    std::fs::write(&path, "5 1.0 0\n0 0 9 9\n").unwrap();
    let out = run_err(&["stats", "--in", path.to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&out.stderr).contains("coordinate out of range"));
}

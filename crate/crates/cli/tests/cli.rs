use std::path::Path;
use std::process::Command;

use brownent_cli::main_with;
use brownent_cli::manifest::Manifest;

fn run(args: &[&str]) -> (i32, String, String) {
    let mut out = Vec::new();
    let mut err = Vec::new();
    let argv = std::iter::once("brownent").chain(args.iter().copied());
    let code = main_with(argv, &mut out, &mut err);
    (code, String::from_utf8(out).unwrap(), String::from_utf8(err).unwrap())
}

fn run_in(dir: &Path, args: &[&str]) -> (i32, String, String) {
    let mut full = vec!["--out", dir.to_str().unwrap()];
    full.extend_from_slice(args);
    run(&full)
}

#[test]
fn threshold_at_a_two() {
    let dir = tempfile::tempdir().unwrap();
    let (code, out, _) = run_in(dir.path(), &["analytic", "threshold", "--a", "2"]);
    assert_eq!(code, 0);
    // sqrt(2) - 1
    assert_eq!(out.trim(), format!("{:.6}", 2f64.sqrt() - 1.0));
    assert_eq!(out.trim(), "0.414214");
}

#[test]
fn free_window_edges() {
    let dir = tempfile::tempdir().unwrap();
    let (code, out, _) = run_in(dir.path(), &["analytic", "window", "--s11", "0.5", "--s12", "0.1", "--T", "1"]);
    assert_eq!(code, 0);
    let r = (0.1f64 * 0.1 + 2.0 * 0.1).sqrt();
    assert_eq!(out.trim(), format!("{:.6} {:.6}", (0.5 - r) / 2.0, (0.5 + r) / 2.0));
    let v: serde_json::Value = serde_json::from_str(&std::fs::read_to_string(dir.path().join("window.json")).unwrap()).unwrap();
    assert_eq!(v["window"]["branch"], "opens-later");
}

#[test]
fn equilibrium_witness_lines() {
    let dir = tempfile::tempdir().unwrap();
    let (code, out, _) = run_in(dir.path(), &["analytic", "witness", "--a", "1", "--g", "0.5"]);
    assert_eq!(code, 0);
    let last = out.lines().last().unwrap();
    assert!(last.starts_with(&format!("min {:.6}", 7.0 / 3.0)), "{out}");
    assert!(last.ends_with("entangled"));
}

#[test]
fn config_errors_list_every_violation() {
    let dir = tempfile::tempdir().unwrap();
    let (code, _, err) =
        run_in(dir.path(), &["--override", "dt=-1", "--override", "model.T=0", "--override", "n_traj=0", "simulate"]);
    assert_eq!(code, 2);
    let v: serde_json::Value = serde_json::from_str(err.trim()).unwrap();
    assert_eq!(v["error"], "config");
    assert!(v["messages"].as_array().unwrap().len() >= 3, "{v}");
}

#[test]
fn unknown_field_and_unknown_recipe_are_config_errors() {
    let dir = tempfile::tempdir().unwrap();
    assert_eq!(run_in(dir.path(), &["--override", "model.zeta=1", "simulate"]).0, 2);
    assert_eq!(run_in(dir.path(), &["recipe", "no-such-recipe"]).0, 2);
    assert_eq!(run(&["frobnicate"]).0, 2);
}

#[test]
fn runtime_errors_exit_three() {
    let dir = tempfile::tempdir().unwrap();
    // an unstable pair has no stationary state to start from
    let (code, _, err) = run_in(dir.path(), &["--override", "model.a=0.5", "--override", "model.g=1", "estimate", "witness"]);
    assert_eq!(code, 3, "{err}");
    let missing = dir.path().join("missing.csv");
    let (code, _, err) = run_in(dir.path(), &["estimate", "witness", "--input", missing.to_str().unwrap()]);
    assert_eq!(code, 3, "{err}");
    assert_eq!(serde_json::from_str::<serde_json::Value>(err.trim()).unwrap()["error"], "runtime");
}

#[test]
fn config_file_and_overrides_compose() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("exp.json");
    std::fs::write(&cfg, r#"{"model": {"a": 3.0}, "seed": 5}"#).unwrap();
    let out = dir.path().join("o");
    let (code, stdout, _) = run(&[
        "--config", cfg.to_str().unwrap(),
        "--out", out.to_str().unwrap(),
        "--seed", "9",
        "analytic", "threshold",
    ]);
    assert_eq!(code, 0);
    assert_eq!(stdout.trim(), format!("{:.6}", 5f64.sqrt() - 1.0));
    let m = Manifest::read(&out).unwrap();
    assert_eq!(m.seed, 9);
    assert_eq!(m.config["model"]["a"], 3.0);
    // defaults are filled in
    assert_eq!(m.config["binning"]["bins"], 25);
}

#[test]
fn simulate_then_estimate_from_file() {
    let dir = tempfile::tempdir().unwrap();
    let sim = dir.path().join("sim");
    let (code, _, err) = run(&["--out", sim.to_str().unwrap(), "--override", "n_traj=20000", "simulate"]);
    assert_eq!(code, 0, "{err}");
    let manifest = Manifest::read(&sim).unwrap();
    let mut names: Vec<_> = manifest.artifacts.iter().map(|a| a.path.as_str()).collect();
    names.sort();
    assert_eq!(names, ["slices.csv", "slices.csv.json", "trajectories.csv", "witness_trace.csv"]);
    assert!(manifest.verify(&sim).is_empty());
    let header = std::fs::read_to_string(sim.join("slices.csv")).unwrap();
    assert!(header.starts_with("traj,x1_minus,x2_minus,x1,x2,x1_plus,x2_plus\n"));
    let traj = std::fs::read_to_string(sim.join("trajectories.csv")).unwrap();
    assert!(traj.starts_with("traj,t,x1,x2\n"));

    let input = sim.join("slices.csv");
    for what in ["velocities", "witness", "uncertainty"] {
        let out = dir.path().join(what);
        let (code, _, err) = run(&["--out", out.to_str().unwrap(), "estimate", what, "--input", input.to_str().unwrap()]);
        assert_eq!(code, 0, "{what}: {err}");
        assert!(Manifest::read(&out).unwrap().verify(&out).is_empty());
    }
    let field = std::fs::read_to_string(dir.path().join("velocities/velocities_x1.csv")).unwrap();
    assert!(field.starts_with("bin_center_1,bin_center_2,count,v_plus,se_vplus,v_minus,se_vminus,u,se_u\n"));
    let w: serde_json::Value =
        serde_json::from_str(&std::fs::read_to_string(dir.path().join("witness/witness.json")).unwrap()).unwrap();
    assert_eq!(w["witness"]["verdict"], "entangled");
}

#[test]
fn kramers_simulation_and_crossover_tables() {
    let dir = tempfile::tempdir().unwrap();
    let (code, out, err) = run_in(
        dir.path(),
        &["--override", "dynamics=kramers", "--override", "n_traj=100", "--override", "dt=0.01", "simulate"],
    );
    assert_eq!(code, 0, "{err}");
    assert!(out.contains("warning"), "{out}");
    let phase = std::fs::read_to_string(dir.path().join("phase.csv")).unwrap();
    assert!(phase.starts_with("traj,t,x,p\n"));

    let (code, _, _) = run_in(dir.path(), &["crossover"]);
    assert_eq!(code, 0);
    let table = std::fs::read_to_string(dir.path().join("crossover.csv")).unwrap();
    let mut lines = table.lines();
    assert_eq!(lines.next().unwrap(), "eps,nu_plus,nu_minus,half_diff,u_over,in_plateau");
    assert_eq!(lines.count(), 15);
}

#[test]
fn ingest_reemits_clean_rows() {
    let dir = tempfile::tempdir().unwrap();
    let csv = dir.path().join("ext.csv");
    std::fs::write(&csv, "traj,x1_minus,x1,x1_plus\n0,0.1,0.2,0.3\n1,inf,0.2,0.3\n2,0.0,0.1,0.2\n").unwrap();
    std::fs::write(
        dir.path().join("ext.csv.json"),
        r#"{"n": 1, "t": 1.0, "eps": 0.1, "probed": [1]}"#,
    )
    .unwrap();
    let out = dir.path().join("clean");
    let (code, stdout, err) = run(&["--out", out.to_str().unwrap(), "ingest", "--input", csv.to_str().unwrap()]);
    assert_eq!(code, 0, "{err}");
    assert!(stdout.contains("3 rows, 2 kept, 1 dropped"), "{stdout}");
    assert!(stdout.contains("[3]"));
    let clean = std::fs::read_to_string(out.join("slices.csv")).unwrap();
    assert_eq!(clean.lines().count(), 3);
}

#[test]
fn same_config_twice_gives_identical_files() {
    let dir = tempfile::tempdir().unwrap();
    let args = |out: &str| {
        vec!["--out".to_string(), out.to_string(), "--override".into(), "n_traj=3000".into(), "estimate".into(), "uncertainty".into()]
    };
    let a = dir.path().join("a");
    let b = dir.path().join("b");
    for out in [&a, &b] {
        let owned = args(out.to_str().unwrap());
        let refs: Vec<&str> = owned.iter().map(String::as_str).collect();
        assert_eq!(run(&refs).0, 0);
    }
    for name in ["uncertainty.csv", "uncertainty.json", "manifest.json"] {
        assert_eq!(std::fs::read(a.join(name)).unwrap(), std::fs::read(b.join(name)).unwrap(), "{name}");
    }
}

#[test]
fn verify_detects_edits() {
    let dir = tempfile::tempdir().unwrap();
    assert_eq!(run_in(dir.path(), &["analytic", "threshold", "--a", "3"]).0, 0);
    assert_eq!(run(&["verify", dir.path().to_str().unwrap()]).0, 0);
    std::fs::write(dir.path().join("threshold.json"), "{}").unwrap();
    assert_eq!(run(&["verify", dir.path().to_str().unwrap()]).0, 3);
}

#[test]
fn recipe_list() {
    let (code, out, _) = run(&["recipe", "--list"]);
    assert_eq!(code, 0);
    assert_eq!(out.lines().count(), 9);
    assert!(out.lines().any(|l| l == "free-window"));
}

#[test]
fn binary_exit_codes_and_thread_env() {
    let exe = env!("CARGO_BIN_EXE_brownent");
    let dir = tempfile::tempdir().unwrap();
    let out = Command::new(exe)
        .args(["--out", dir.path().to_str().unwrap(), "analytic", "threshold", "--a", "2"])
        .env("BE_THREADS", "2")
        .output()
        .unwrap();
    assert_eq!(out.status.code(), Some(0));
    assert_eq!(String::from_utf8_lossy(&out.stdout).trim(), "0.414214");

    let bad = Command::new(exe).args(["analytic", "window"]).env("BE_THREADS", "0").output().unwrap();
    assert_eq!(bad.status.code(), Some(2));
    let err: serde_json::Value = serde_json::from_slice(bad.stderr.trim_ascii()).unwrap();
    assert_eq!(err["exit_code"], 2);
}

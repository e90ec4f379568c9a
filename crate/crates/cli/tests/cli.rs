use std::fs;
use std::path::Path;
use std::process::{Command, Output};

fn bhlab(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_bhlab")).args(args).output().expect("binary runs")
}

fn run_ok(args: &[&str]) -> serde_json::Value {
    let out = bhlab(args);
    assert!(out.status.success(), "{args:?}: {}", String::from_utf8_lossy(&out.stderr));
    serde_json::from_slice(&out.stdout).expect("summary is JSON")
}

fn read(dir: &Path, name: &str) -> String {
    fs::read_to_string(dir.join(name)).unwrap_or_else(|e| panic!("{name}: {e}"))
}

#[test]
fn simulate_writes_outputs_and_metadata() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().to_str().unwrap();
    let s = run_ok(&["simulate", "-o", out, "--n", "64", "--t-end", "1", "--nf-residual"]);
    assert!(s["l2_relative_drift"].as_f64().unwrap() < 1e-8);
    for f in ["samples.csv", "final.csv", "nf_residual.csv", "config.ini", "metadata.json"] {
        assert!(dir.path().join(f).exists(), "{f} missing");
    }
    let meta: serde_json::Value = serde_json::from_str(&read(dir.path(), "metadata.json")).unwrap();
    assert_eq!(meta["experiment"], "simulate");
    assert_eq!(meta["seed"], 1);
    assert!(meta["wall_clock_seconds"].as_f64().unwrap() >= 0.0);
}

#[test]
fn simulate_g_and_burgers() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().to_str().unwrap();
    let s = run_ok(&["simulate", "-o", out, "--model", "g", "--n", "32", "--t-end", "1", "--dt", "0.05"]);
    assert_eq!(s["model"], "g");
    assert!(dir.path().join("trajectory.csv").exists());
    let s = run_ok(&["simulate", "-o", out, "--model", "burgers", "--n", "256", "--eps", "0.5"]);
    let predicted = s["predicted_breaking"].as_f64().unwrap();
    assert!((predicted - 2.0).abs() < 1e-9);
}

#[test]
fn rerun_from_echoed_config_is_identical() {
    let a = tempfile::tempdir().unwrap();
    let b = tempfile::tempdir().unwrap();
    run_ok(&["simulate", "-o", a.path().to_str().unwrap(), "--n", "64", "--t-end", "0.5", "--data", "random", "--seed", "7"]);
    let ini = a.path().join("config.ini");
    run_ok(&[
        "simulate",
        "-c",
        ini.to_str().unwrap(),
        "--set",
        &format!("run.output_dir={}", b.path().display()),
    ]);
    for f in ["samples.csv", "final.csv"] {
        assert_eq!(read(a.path(), f), read(b.path(), f), "{f} differs");
    }
}

#[test]
fn set_overrides_flags() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().to_str().unwrap();
    let s = run_ok(&["simulate", "-o", out, "--n", "64", "--t-end", "0.2", "--eps", "0.3", "--set", "physics.eps=0.05"]);
    assert_eq!(s["eps"].as_f64().unwrap(), 0.05);
}

#[test]
fn sweep_records_censored_runs_and_plot_header() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().to_str().unwrap();
    run_ok(&[
        "sweep",
        "-o",
        out,
        "--n",
        "64",
        "--eps-list",
        "0.4,0.2",
        "--set",
        "time.bh_horizon=0.5",
    ]);
    let csv = read(dir.path(), "sweep.csv");
    let mut lines = csv.lines();
    assert_eq!(
        lines.next().unwrap(),
        "eps,mode,t_s,detection_reason,censored,t_max,n,dt,steps,sup_ux,tail_fraction,predicted"
    );
    let rows: Vec<&str> = lines.collect();
    assert_eq!(rows.len(), 4);
    assert!(rows.iter().any(|r| r.contains(",bh,") && r.contains(",true,")));
    assert!(read(dir.path(), "plot_bh.dat").starts_with("# bh mode:"));
    assert!(read(dir.path(), "plot_burgers.dat").starts_with("# burgers mode:"));
}

#[test]
fn crosscheck_and_convergence() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().to_str().unwrap();
    let s = run_ok(&["crosscheck", "-o", out, "--t-end", "1", "--set", "time.resolutions=16:0.1,32:0.05"]);
    assert_eq!(s["rows"].as_array().unwrap().len(), 2);
    let s = run_ok(&["convergence", "-o", out, "--study", "bh-temporal", "--set", "time.dts=0.2,0.1,0.05"]);
    let orders = s["orders"].as_array().unwrap();
    assert!(orders.iter().all(|o| o.as_f64().unwrap() > 3.5), "{orders:?}");
    assert!(read(dir.path(), "convergence.csv").starts_with("study,parameter,error"));
}

#[test]
fn constants_and_transform_demo() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().to_str().unwrap();
    let s = run_ok(&["constants", "-o", out, "--campaign", "--set", "campaign.fields=5", "--set", "campaign.n=81"]);
    assert_eq!(s["campaign"]["failures"], 0);
    assert_eq!(read(dir.path(), "campaign.csv").lines().count(), 6);
    let s = run_ok(&["transform-demo", "-o", out, "--n", "128", "--eps", "0.2"]);
    assert!(s["round_trip_error"].as_f64().unwrap() < 1e-10);
    assert!(s["slope_cert"].as_f64().unwrap() <= 0.5);
}

#[test]
fn errors_map_to_categories_and_exit_codes() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().to_str().unwrap();

    let bad_key = bhlab(&["simulate", "-o", out, "--set", "physics.nonsense=1"]);
    assert_eq!(bad_key.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&bad_key.stderr).starts_with("error[config]"));

    let missing = bhlab(&["simulate", "-c", "/nonexistent/run.ini"]);
    assert_ne!(missing.status.code(), Some(0));

    let bad_grid = bhlab(&["simulate", "-o", out, "--n", "100"]);
    assert!(!bad_grid.status.success());
    let err = String::from_utf8_lossy(&bad_grid.stderr);
    assert!(err.starts_with("error["), "{err}");

    let too_steep = bhlab(&["transform-demo", "-o", out, "--n", "64", "--eps", "2"]);
    assert_eq!(too_steep.status.code(), Some(4), "{}", String::from_utf8_lossy(&too_steep.stderr));
}

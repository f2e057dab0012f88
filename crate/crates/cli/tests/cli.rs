use std::path::Path;
use std::process::{Command, Output};

fn simulate(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_simulate"))
        .args(args)
        .output()
        .expect("failed to launch simulate")
}

fn stderr(out: &Output) -> String {
    String::from_utf8_lossy(&out.stderr).into_owned()
}

#[test]
fn sfv_run_writes_series_and_manifest() {
    let dir = tempfile::tempdir().unwrap();
    let out_dir = dir.path().to_str().unwrap();
    let out = simulate(&[
        "--scenario",
        "single-pipe-uniform",
        "--nx",
        "10",
        "--ny",
        "2",
        "--out",
        out_dir,
    ]);
    assert_eq!(out.status.code(), Some(0), "{}", stderr(&out));
    assert!(dir.path().join("pipe_1_timeseries.csv").exists());
    assert!(dir.path().join("manifest.toml").exists());
    let stdout = String::from_utf8_lossy(&out.stdout);
    assert!(stdout.contains("mass balance"), "{stdout}");

    let replay = tempfile::tempdir().unwrap();
    let manifest = dir.path().join("manifest.toml");
    let out = simulate(&[
        "--config",
        manifest.to_str().unwrap(),
        "--out",
        replay.path().to_str().unwrap(),
    ]);
    assert_eq!(out.status.code(), Some(0), "{}", stderr(&out));
    let read = |d: &Path| std::fs::read(d.join("pipe_1_timeseries.csv")).unwrap();
    assert_eq!(read(dir.path()), read(replay.path()));
}

#[test]
fn mode_flag_switches_to_monte_carlo() {
    let dir = tempfile::tempdir().unwrap();
    let out = simulate(&[
        "--scenario",
        "single-pipe-uniform",
        "--mode",
        "mc",
        "--mc-samples",
        "3",
        "--seed",
        "5",
        "--nx",
        "8",
        "--out",
        dir.path().to_str().unwrap(),
    ]);
    assert_eq!(out.status.code(), Some(0), "{}", stderr(&out));
    assert!(dir.path().join("mc_samples.csv").exists());
}

#[test]
fn configuration_problems_exit_with_two() {
    let dir = tempfile::tempdir().unwrap();
    let out_dir = dir.path().to_str().unwrap();
    for args in [
        vec!["--scenario", "no-such-case", "--out", out_dir],
        vec!["--out", out_dir],
        vec!["--scenario", "single-pipe-uniform", "--mode", "fast", "--out", out_dir],
        vec!["--scenario", "single-pipe-uniform", "--order", "3", "--out", out_dir],
        vec!["--config", "/nonexistent/run.toml"],
    ] {
        let out = simulate(&args);
        assert_eq!(out.status.code(), Some(2), "{args:?}: {}", stderr(&out));
        assert!(stderr(&out).starts_with("error:"));
    }
    let bad = dir.path().join("bad.toml");
    std::fs::write(&bad, "schema_version = 1\n[run]\nmode = 4\n").unwrap();
    let out = simulate(&["--config", bad.to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(2));
    assert!(stderr(&out).contains("bad.toml"), "{}", stderr(&out));
}

#[test]
fn solver_failure_exits_with_three() {
    let dir = tempfile::tempdir().unwrap();
    let out = simulate(&[
        "--scenario",
        "single-pipe-intertemporal-limited",
        "--nx",
        "10",
        "--ny",
        "2",
        "--out",
        dir.path().to_str().unwrap(),
    ]);
    assert_eq!(out.status.code(), Some(3), "{}", stderr(&out));
    assert!(stderr(&out).contains("solver failed at t ="), "{}", stderr(&out));
}

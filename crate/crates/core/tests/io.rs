use std::fs;
use std::path::{Path, PathBuf};

use sfv_core::io::{
    convergence_study, execute, l1_time_error, load_manifest, ConvergenceSettings, DistributionRequest, Quantity,
    RunConfig, RunMode, ScenarioSource, CONVERGENCE_HEADER, DISTRIBUTION_HEADER, MANIFEST_FILE, TIMESERIES_HEADER,
};
use sfv_core::run::SolverSettings;
use sfv_core::scenarios::{preset, ScenarioSpec};

fn bundled_network5() -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("configs/network5.toml")
}

fn quick(mode: RunMode, scenario: &str, out: &Path) -> RunConfig {
    let mut config = RunConfig::new(mode, ScenarioSource::preset(scenario));
    config.solver = SolverSettings {
        nx: 12,
        ny: 4,
        quad_nodes: 2,
        horizon_s: Some(3600.0),
        ..SolverSettings::default()
    };
    config.run.out = out.to_path_buf();
    config.run.mc_samples = 6;
    config
}

fn read_csv(path: &Path) -> (Vec<String>, Vec<Vec<f64>>) {
    let mut reader = csv::Reader::from_path(path).unwrap();
    let header = reader.headers().unwrap().iter().map(str::to_string).collect();
    let rows = reader
        .records()
        .map(|r| r.unwrap().iter().map(|v| v.parse().unwrap()).collect())
        .collect();
    (header, rows)
}

#[test]
fn bundled_network_config_is_the_benchmark() {
    let config = RunConfig::load(&bundled_network5()).unwrap();
    assert_eq!(config.run.mode, RunMode::Deterministic);
    assert!(config.solver.nx >= 50);
    let spec = config.scenario.resolve().unwrap();
    assert_eq!(spec, preset("network5-deterministic").unwrap());
    let ScenarioSpec::Network(n) = &spec else { panic!("expected a network") };
    assert_eq!((n.nodes.len(), n.pipes.len(), n.compressors.len()), (5, 5, 3));
    let lengths: Vec<f64> = n.pipes.iter().map(|p| p.geometry.length).collect();
    assert_eq!(lengths, [20e3, 70e3, 10e3, 60e3, 80e3]);
    let diameters: Vec<f64> = n.pipes.iter().map(|p| p.geometry.diameter).collect();
    assert_eq!(diameters, [0.9143995, 0.9143995, 0.9143995, 0.6349997, 0.9143995]);
    let at: Vec<(&str, &str)> = n.compressors.iter().map(|c| (c.node.as_str(), c.pipe.as_str())).collect();
    assert_eq!(at, [("1", "1"), ("2", "2"), ("4", "5")]);
    let built = spec.build().unwrap();
    assert_eq!(built.pipe_count(), 5);
}

#[test]
fn network_with_zero_pipes_is_a_config_error() {
    let text = r#"
schema_version = 1
[run]
mode = "deterministic"
[scenario]
kind = "network"
name = "empty"
horizon_s = 3600.0
wave_speed = 370.0
parameter = { distribution = "fixed", value = 0.0 }
pipes = []
[[scenario.nodes]]
name = "a"
role = "slack"
profile = { base = 4e6 }
"#;
    let err = RunConfig::parse(text).unwrap_err();
    assert!(err.is_config_error());
    assert!(err.to_string().contains("no pipes"), "{err}");
}

#[test]
fn compressor_on_a_missing_pipe_names_it() {
    let mut spec = preset("network5-deterministic").unwrap();
    if let ScenarioSpec::Network(n) = &mut spec {
        n.compressors[2].pipe = "17".into();
    }
    let text = RunConfig::new(RunMode::Sfv, ScenarioSource::Inline(spec)).to_toml();
    let err = RunConfig::parse(&text.unwrap()).unwrap_err();
    assert!(err.to_string().contains("'17'"), "{err}");
}

#[test]
fn parse_errors_carry_a_location() {
    let err = RunConfig::parse("schema_version = 1\n[run]\nmode = \"sfv\"\n[solver]\nnx = \"ten\"\n[scenario]\npreset = \"single-pipe-uniform\"\n")
        .unwrap_err();
    assert!(err.to_string().contains("line 5"), "{err}");
    let err = RunConfig::parse("schema_version = 1\n[run]\nmode = \"sfv\"\nspeed = 3\n[scenario]\npreset = \"single-pipe-uniform\"\n")
        .unwrap_err();
    assert!(err.to_string().contains("speed"), "{err}");
    let err = RunConfig::parse("schema_version = 2\n[run]\nmode = \"sfv\"\n[scenario]\npreset = \"single-pipe-uniform\"\n")
        .unwrap_err();
    assert!(err.to_string().contains("schema_version"), "{err}");
    let err = RunConfig::parse("schema_version = 1\n[run]\nmode = \"sfv\"\n[scenario]\npreset = \"nowhere\"\n").unwrap_err();
    assert!(err.is_config_error());
}

#[test]
fn invalid_distribution_requests_are_rejected() {
    let dir = tempfile::tempdir().unwrap();
    let mut config = quick(RunMode::Sfv, "single-pipe-uniform", dir.path());
    let request = DistributionRequest {
        pipe: "1".into(),
        xfrac: 0.5,
        t: 1800.0,
        quantity: Quantity::Pressure,
        bins: None,
    };
    config.run.distributions = vec![DistributionRequest { pipe: "2".into(), ..request.clone() }];
    assert!(config.validate().unwrap_err().to_string().contains("unknown pipe '2'"));
    config.run.distributions = vec![DistributionRequest { xfrac: 1.5, ..request.clone() }];
    assert!(config.validate().is_err());
    config.run.distributions = vec![DistributionRequest { t: 7200.0, ..request.clone() }];
    assert!(config.validate().is_err());
    config.run.distributions = vec![request];
    config.validate().unwrap();
    config.run.mode = RunMode::Mc;
    assert!(config.validate().is_err());
}

#[test]
fn csv_headers_and_columns_follow_the_schema() {
    let dir = tempfile::tempdir().unwrap();
    let config = quick(RunMode::Sfv, "single-pipe-uniform", dir.path());
    let report = execute(&config).unwrap();
    let (header, rows) = read_csv(&dir.path().join("pipe_1_timeseries.csv"));
    assert_eq!(header, TIMESERIES_HEADER);
    assert_eq!(
        header.join(","),
        "t_s,p_in_mean_Pa,p_in_std_Pa,p_out_mean_Pa,p_out_std_Pa,flow_in_mean_kgps,flow_in_std_kgps,flow_out_mean_kgps,flow_out_std_kgps"
    );
    assert_eq!(rows.len(), 61);
    assert!(rows.iter().all(|r| r.len() == 9));
    assert_eq!(rows[60][0], 3600.0);
    assert!(rows.iter().skip(1).any(|r| r[4] > 0.0));
    assert!(report.manifest.mass_balance_error < 1e-8);
    assert!(dir.path().join(MANIFEST_FILE).exists());
    assert_eq!(DISTRIBUTION_HEADER, ["value", "pdf", "cdf"]);
    assert_eq!(CONVERGENCE_HEADER, ["nx", "ny", "order", "l1_error_rho", "l1_error_q", "cpu_seconds"]);
}

fn csv_bodies(dir: &Path) -> Vec<(String, Vec<u8>)> {
    let mut files: Vec<_> = walk(dir)
        .into_iter()
        .filter(|p| p.extension().is_some_and(|e| e == "csv"))
        .map(|p| (p.strip_prefix(dir).unwrap().display().to_string(), fs::read(&p).unwrap()))
        .collect();
    files.sort();
    files
}

fn walk(dir: &Path) -> Vec<PathBuf> {
    let mut out = Vec::new();
    for entry in fs::read_dir(dir).unwrap() {
        let path = entry.unwrap().path();
        if path.is_dir() {
            out.extend(walk(&path));
        } else {
            out.push(path);
        }
    }
    out
}

#[test]
fn reruns_and_manifest_replays_are_byte_identical() {
    let root = tempfile::tempdir().unwrap();
    let (a, b, c) = (root.path().join("a"), root.path().join("b"), root.path().join("c"));
    let mut config = quick(RunMode::Compare, "single-pipe-uniform", &a);
    execute(&config).unwrap();
    config.run.out = b.clone();
    execute(&config).unwrap();
    let first = csv_bodies(&a);
    assert_eq!(first.len(), 4);
    assert_eq!(first, csv_bodies(&b));

    let mut replay = load_manifest(&a).unwrap();
    assert!(replay.manifest.is_some());
    assert!(matches!(replay.scenario, ScenarioSource::Inline(_)));
    replay.run.out = c.clone();
    execute(&replay).unwrap();
    assert_eq!(first, csv_bodies(&c));
}

#[test]
fn degenerate_sfv_run_has_zero_std_columns() {
    let dir = tempfile::tempdir().unwrap();
    let mut config = quick(RunMode::Sfv, "single-pipe-uniform", dir.path());
    config.scenario = ScenarioSource::Preset(sfv_core::io::PresetRef {
        preset: "single-pipe-uniform".into(),
        parameter: Some(sfv_core::scenarios::ParameterSpec::Fixed { value: 1.0 }),
    });
    execute(&config).unwrap();
    let (_, rows) = read_csv(&dir.path().join("pipe_1_timeseries.csv"));
    for r in &rows {
        for c in [2, 4, 6, 8] {
            assert!(r[c].abs() <= 1e-12, "{r:?}");
        }
    }
}

#[test]
fn deterministic_mode_pins_the_mean() {
    let dir = tempfile::tempdir().unwrap();
    let config = quick(RunMode::Deterministic, "single-pipe-uniform", dir.path());
    let report = execute(&config).unwrap();
    assert_eq!(report.manifest.meshes, vec![[12, 1, 1]]);
    let (_, rows) = read_csv(&dir.path().join("pipe_1_timeseries.csv"));
    assert!((rows[0][7] - 289.0 * std::f64::consts::PI * 0.0625).abs() < 1e-9);
    assert!(rows.iter().all(|r| r[8] == 0.0));
}

#[test]
fn distribution_dump_is_a_probability_law() {
    let dir = tempfile::tempdir().unwrap();
    let mut config = quick(RunMode::Sfv, "single-pipe-uniform", dir.path());
    config.solver.ny = 16;
    config.run.distributions = vec![DistributionRequest {
        pipe: "1".into(),
        xfrac: 0.5,
        t: 1800.0,
        quantity: Quantity::Pressure,
        bins: Some(10),
    }];
    let report = execute(&config).unwrap();
    let summary = &report.distributions[0];
    assert_eq!(summary.file, dir.path().join("distribution_1_0.5_1800.csv"));
    let (header, rows) = read_csv(&summary.file);
    assert_eq!(header, DISTRIBUTION_HEADER);
    assert_eq!(rows.len(), 11);
    assert_eq!(rows[0][2], 0.0);
    assert_eq!(rows[10][2], 1.0);
    assert!(rows.windows(2).all(|w| w[1][2] >= w[0][2] && w[1][0] > w[0][0]));
    let integral: f64 = rows.windows(2).map(|w| w[0][1] * (w[1][0] - w[0][0])).sum();
    assert!((integral - 1.0).abs() < 1e-8, "{integral}");
    assert!(summary.std_dev > 0.0);
    assert!(summary.mean > rows[0][0] && summary.mean < rows[10][0]);
}

#[test]
fn reference_against_itself_has_zero_error() {
    let scenario = preset("single-pipe-uniform").unwrap().build().unwrap();
    let base = SolverSettings {
        horizon_s: Some(1800.0),
        ..SolverSettings::default()
    };
    let settings = ConvergenceSettings {
        ladder: vec![8],
        orders: vec![2],
        ny_divisor: 4,
        reference_nx: 8,
        reference_ny: 2,
        reference_order: 2,
    };
    let study = convergence_study(&scenario, &base, &settings).unwrap();
    assert_eq!(study.rows.len(), 1);
    assert_eq!((study.rows[0].l1_error_rho, study.rows[0].l1_error_q), (0.0, 0.0));
    assert_eq!(study.reference.l1_error_rho, 0.0);
    assert!(study.rows[0].cpu_seconds >= 0.0);

    let t = [0.0, 1.0, 3.0];
    assert_eq!(l1_time_error(&t, &[1.0, 2.0, 3.0], &[1.0, 2.0, 3.0]), 0.0);
    assert!(l1_time_error(&t, &[1.0, 2.0, 3.0], &[2.0, 3.0, 4.0]) > 0.0);
}

#[test]
fn convergence_mode_writes_its_table() {
    let dir = tempfile::tempdir().unwrap();
    let mut config = quick(RunMode::Convergence, "single-pipe-uniform", dir.path());
    config.solver.horizon_s = Some(1800.0);
    config.convergence = ConvergenceSettings {
        ladder: vec![4, 8],
        orders: vec![1, 2],
        reference_nx: 16,
        reference_ny: 4,
        ..ConvergenceSettings::default()
    };
    execute(&config).unwrap();
    let (header, rows) = read_csv(&dir.path().join("convergence.csv"));
    assert_eq!(header, CONVERGENCE_HEADER);
    assert_eq!(rows.len(), 5);
    assert!(rows.iter().all(|r| r.len() == 6));
    assert_eq!(&rows[4][..5], &[16.0, 4.0, 2.0, 0.0, 0.0]);
}

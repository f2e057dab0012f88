use proptest::prelude::*;
use sfv_core::io::{RunConfig, RunMode, ScenarioSource};
use sfv_core::run::{run_scenario, SolverSettings};
use sfv_core::scenarios::presets::{benchmark, benchmark_profile_specs, single_pipe};
use sfv_core::scenarios::spec::{CompressorSpec, NetworkSpec};
use sfv_core::scenarios::{
    benchmark_profiles, interval_modifier, perturbed_withdrawal, preset, sigmoid, sinusoidal_bc, PerturbationSpec,
    ScenarioSpec, PRESET_NAMES,
};

const T: f64 = single_pipe::HORIZON;
const RHO0: f64 = single_pipe::RHO0;
const Q0: f64 = single_pipe::Q0;

fn rel(a: f64, b: f64) -> f64 {
    (a - b).abs() / b.abs()
}

#[test]
fn sinusoidal_baseline_values() {
    assert_eq!(sinusoidal_bc(0.0, T, RHO0, Q0), (RHO0, Q0));
    let (s, d) = sinusoidal_bc(T, T, RHO0, Q0);
    assert!(rel(s, RHO0) < 1e-14 && rel(d, Q0) < 1e-14);
    let (_, d) = sinusoidal_bc(T / 8.0, T, RHO0, Q0);
    assert!((d - 317.9).abs() < 1e-9, "{d}");
}

#[test]
fn interval_modifier_scales_the_nominal_outflow() {
    for k in 0..50 {
        let t = k as f64 * T / 49.0;
        let nominal = sinusoidal_bc(t, T, RHO0, Q0).1;
        assert_eq!(interval_modifier(t, 1.0, T, Q0), nominal);
        assert!(rel(interval_modifier(t, 0.9, T, Q0), 0.9 * nominal) < 1e-15);
        let mean = 0.5 * (interval_modifier(t, 0.9, T, Q0) + interval_modifier(t, 1.1, T, Q0));
        assert!(rel(mean, nominal) < 1e-14);
    }
}

#[test]
fn interval_presets_follow_the_modifier() {
    let spec = preset("single-pipe-uniform").unwrap();
    let ScenarioSpec::SinglePipe(p) = &spec else { panic!("expected a single pipe") };
    for t in [0.0, 1234.5, T / 8.0, 0.7 * T] {
        for y in [0.9, 1.0, 1.07] {
            assert!(rel(p.outlet_flux.evaluate(t, y), interval_modifier(t, y, T, Q0)) < 1e-14);
        }
        assert!(rel(p.inlet_density.evaluate(t, 0.95), sinusoidal_bc(t, T, RHO0, Q0).0) < 1e-14);
    }
}

#[test]
fn perturbation_branches() {
    let spec = PerturbationSpec::new(3600.0, 18000.0).unwrap();
    let (t0, t1, t2, t3) = spec.knots();
    assert_eq!((t0, t1, t2, t3), (3600.0, 5400.0, 19800.0, 21600.0));
    assert_eq!(perturbed_withdrawal(1000.0, 10.0, 30.0, &spec), 10.0);
    assert_eq!(perturbed_withdrawal(10000.0, 10.0, 30.0, &spec), 30.0);
    assert_eq!(perturbed_withdrawal(0.5 * (t0 + t1), 10.0, 30.0, &spec), 20.0);
    assert_eq!(perturbed_withdrawal(0.5 * (t2 + t3), 10.0, 30.0, &spec), 20.0);
    assert_eq!(perturbed_withdrawal(30000.0, 10.0, 30.0, &spec), 10.0);
    assert!(PerturbationSpec::new(0.0, -1.0).is_err());
}

proptest! {
    #[test]
    fn perturbation_is_continuous_at_every_knot(
        onset in -1e4..4e4f64,
        duration in 10.0..3e4f64,
        d1 in 0.0..500.0f64,
        extra in 0.0..500.0f64,
    ) {
        let spec = PerturbationSpec::new(onset, duration).unwrap();
        let (t0, t1, t2, t3) = spec.knots();
        let d2 = d1 + extra;
        let eps = 1e-7 * duration;
        for knot in [t0, t1, t2, t3] {
            let jump = (perturbed_withdrawal(knot + eps, d1, d2, &spec) - perturbed_withdrawal(knot - eps, d1, d2, &spec)).abs();
            prop_assert!(jump <= 1e-5 * (1.0 + extra), "jump {} at {}", jump, knot);
        }
    }

    #[test]
    fn perturbation_is_monotone_in_the_elevated_level(
        frac in 0.0..1.0f64,
        d1 in 0.0..500.0f64,
        a in 0.0..500.0f64,
        b in 0.0..500.0f64,
    ) {
        let spec = PerturbationSpec::new(3600.0, 18000.0).unwrap();
        let t = 3600.0 + frac * 18000.0;
        let (lo, hi) = (d1 + a.min(b), d1 + a.max(b));
        prop_assert!(perturbed_withdrawal(t, d1, lo, &spec) <= perturbed_withdrawal(t, d1, hi, &spec));
        prop_assert_eq!(perturbed_withdrawal(t, d1, hi, &spec), perturbed_withdrawal(t, d1, hi, &spec));
    }
}

#[test]
fn sigmoid_limits() {
    assert_eq!(sigmoid(0.0), 0.5);
    assert!(sigmoid(10.0) == 1.0 && sigmoid(-10.0) == 0.0);
    assert!((sigmoid(0.3) + sigmoid(-0.3) - 1.0).abs() < 1e-15);
}

#[test]
fn benchmark_profiles_match_the_initial_table_and_their_limits() {
    let b = benchmark_profiles(0.0);
    let [c1, c2, c3] = benchmark::RATIOS;
    assert!(rel(b.d3, 150.0) < 1e-6);
    assert!(rel(b.d5, 150.0) < 1e-6);
    assert!(rel(b.c1, c1) < 1e-6);
    assert!(rel(b.c2, c2) < 1e-6);
    assert_eq!(b.sigma1, benchmark::SLACK_PRESSURE);
    let c3_at_zero = c3 * (1.0 + 0.1 * sigmoid(-1.0) + 0.1 * sigmoid(-4.0) - 0.2 * sigmoid(-10.0));
    assert!(rel(b.c3, c3_at_zero) < 1e-12);
    assert!(rel(b.c3, c3) > 1e-4);

    let d3 = &benchmark_profile_specs()[0];
    assert!(rel(d3.evaluate(1e7, 0.0), 150.0) < 1e-14);
    for hour in [8.0, 10.0, 12.0, 15.0] {
        assert!((benchmark_profiles(hour * 3600.0).c2 - 1.3911079).abs() < 2e-7, "hour {hour}");
    }
}

#[test]
fn profiles_are_pure() {
    let specs = benchmark_profile_specs();
    for p in &specs {
        for t in [0.0, 7777.0, 50000.0] {
            assert_eq!(p.evaluate(t, 0.3), p.evaluate(t, 0.3));
        }
    }
}

fn node5(spec: &ScenarioSpec) -> &sfv_core::scenarios::ProfileSpec {
    let ScenarioSpec::Network(n) = spec else { panic!("expected a network") };
    &n.nodes.iter().find(|n| n.name == "5").unwrap().profile
}

#[test]
fn network_uncertainty_binds_the_node5_surge() {
    let spec = preset("network5-intertemporal").unwrap();
    let p = node5(&spec);
    let baseline = &benchmark_profile_specs()[1];
    let y = 4.0;
    assert_eq!(p.evaluate(4.0 * 3600.0 - 1.0, y), baseline.evaluate(4.0 * 3600.0 - 1.0, y));
    assert!(p.evaluate(4.0 * 3600.0 + 60.0, y) > baseline.evaluate(4.0 * 3600.0 + 60.0, y));
    let plateau = 8.0 * 3600.0;
    assert!((p.evaluate(plateau, y) - baseline.evaluate(plateau, y) - 75.0).abs() < 1e-12);
    let late = 12.0 * 3600.0;
    assert_eq!(p.evaluate(late - 60.0, 12.0), baseline.evaluate(late - 60.0, 12.0));
    let built = spec.build().unwrap();
    assert_eq!(built.parameter().support(), (4.0, 12.0));
}

#[test]
fn surge_without_amplitude_is_the_deterministic_benchmark() {
    let mut spec = preset("network5-intertemporal").unwrap();
    if let ScenarioSpec::Network(n) = &mut spec {
        let node = n.nodes.iter_mut().find(|n| n.name == "5").unwrap();
        node.profile.perturbation.as_mut().unwrap().elevated_offset = 0.0;
    }
    let settings = SolverSettings {
        nx: 8,
        ny: 3,
        quad_nodes: 2,
        ..SolverSettings::default()
    };
    let flat = run_scenario(&spec.build().unwrap(), &settings, &[]).unwrap();
    let one = SolverSettings {
        ny: 1,
        quad_nodes: 1,
        ..settings
    };
    let det = run_scenario(&preset("network5-deterministic").unwrap().build().unwrap(), &one, &[]).unwrap();
    for (a, b) in flat.pipes.iter().zip(&det.pipes) {
        for (x, y) in a.mean.iter().flatten().zip(b.mean.iter().flatten()) {
            assert!((x - y).abs() <= 1e-12 * y.abs().max(1.0), "{x} vs {y}");
        }
        assert!(a.std.iter().flatten().all(|&s| s.abs() <= 1e-12));
    }
}

#[test]
fn every_preset_round_trips_through_toml() {
    for name in PRESET_NAMES {
        let spec = preset(name).unwrap();
        let config = RunConfig::new(RunMode::Sfv, ScenarioSource::Inline(spec.clone()));
        let text = config.to_toml().unwrap();
        let back = RunConfig::parse(&text).unwrap();
        assert_eq!(back.scenario.resolve().unwrap(), spec, "{name}");
        assert_eq!(spec.name(), name);
    }
    let err = preset("no-such-case").unwrap_err();
    assert!(err.is_config_error());
    assert!(err.to_string().contains("single-pipe-uniform"));
}

fn network() -> NetworkSpec {
    match preset("network5-deterministic").unwrap() {
        ScenarioSpec::Network(n) => n,
        _ => unreachable!(),
    }
}

fn build_error(n: NetworkSpec) -> String {
    let err = ScenarioSpec::Network(n).build().err().expect("build should fail");
    assert!(err.is_config_error(), "{err}");
    err.to_string()
}

#[test]
fn malformed_networks_are_rejected() {
    let mut n = network();
    n.pipes.clear();
    n.compressors.clear();
    assert!(build_error(n).contains("no pipes"));

    let mut n = network();
    n.pipes[3].to = "9".into();
    let msg = build_error(n);
    assert!(msg.contains("'4'") && msg.contains("'9'"), "{msg}");

    let mut n = network();
    n.compressors.push(CompressorSpec {
        name: "4".into(),
        node: "3".into(),
        pipe: "7".into(),
        ratio: sfv_core::scenarios::ProfileSpec::constant(1.1),
    });
    assert!(build_error(n).contains("unknown pipe '7'"));

    let mut n = network();
    n.nodes[0].role = sfv_core::scenarios::spec::NodeKind::Withdrawal;
    assert!(build_error(n).contains("no slack node"));

    let mut n = network();
    n.compressors[0].node = "2".into();
    assert!(build_error(n).contains("does not leave"));
}

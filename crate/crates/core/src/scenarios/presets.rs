//! Named scenarios: the single-pipe studies and the five-node benchmark.

use crate::error::{Result, SfvError};
use crate::scenarios::profiles::{ProfileSpec, RandomPerturbation, SigmoidTerm, SineTerm};
use crate::scenarios::spec::{
    CompressorSpec, NetworkPipeSpec, NetworkSpec, NodeKind, NodeSpec, ParameterSpec, PipeGeometry, ScenarioSpec,
    SinglePipeSpec,
};

const HOUR: f64 = 3600.0;

/// Data of the single-pipe studies.
pub mod single_pipe {
    pub const FRICTION: f64 = 0.011;
    pub const WAVE_SPEED: f64 = 377.9683;
    pub const DIAMETER: f64 = 0.5;
    pub const LENGTH: f64 = 100e3;
    pub const HORIZON: f64 = 3600.0 * 12.0;
    /// Nominal flux, kg/(m² s).
    pub const Q0: f64 = 289.0;
    /// Nominal inlet density, kg/m³.
    pub const RHO0: f64 = 45.4990786148;
    /// Duration of the temporary withdrawal increase, s.
    pub const PERTURBATION_DURATION: f64 = 5.0 * 3600.0;
}

/// Data of the five-node benchmark network.
pub mod benchmark {
    pub const WAVE_SPEED: f64 = 377.9683;
    pub const HORIZON: f64 = 24.0 * 3600.0;
    pub const SLACK_PRESSURE: f64 = 3447378.645;
    /// Withdrawals `d2..d5` in kg/s.
    pub const WITHDRAWALS: [f64; 4] = [0.0, 150.0, 0.0, 150.0];
    /// Boost ratios `c1..c3`.
    pub const RATIOS: [f64; 3] = [1.5290113, 1.1128863, 1.2242249];
    /// `(from, to, diameter m, length m, λ)` per pipe.
    pub const PIPES: [(usize, usize, f64, f64, f64); 5] = [
        (1, 2, 0.9143995, 20000.0, 0.01),
        (2, 3, 0.9143995, 70000.0, 0.01),
        (3, 4, 0.9143995, 10000.0, 0.01),
        (2, 4, 0.6349997, 60000.0, 0.015),
        (4, 5, 0.9143995, 80000.0, 0.01),
    ];
    /// `(location node, pipe)` per compressor.
    pub const COMPRESSORS: [(usize, usize); 3] = [(1, 1), (2, 2), (4, 5)];
    /// Initial inlet pressure Pa, outlet pressure Pa, and mass rate kg/s per pipe.
    pub const INITIAL: [(f64, f64, f64); 5] = [
        (5271081.1, 4611205.3, 300.00),
        (5131747.2, 3540078.3, 233.33),
        (3540078.3, 3504395.3, 83.33),
        (4611205.3, 3504395.3, 66.66),
        (4290168.0, 3447378.6, 150.00),
    ];
    /// Onset support of the node-5 perturbation, hours.
    pub const ONSET_HOURS: (f64, f64) = (4.0, 12.0);
}

pub const PRESET_NAMES: [&str; 7] = [
    "single-pipe-uniform",
    "single-pipe-normal",
    "single-pipe-intertemporal-limited",
    "single-pipe-intertemporal-universal",
    "network5-deterministic",
    "network5-frozen",
    "network5-intertemporal",
];

pub fn preset(name: &str) -> Result<ScenarioSpec> {
    use single_pipe::PERTURBATION_DURATION;
    let spec = match name {
        "single-pipe-uniform" => single_pipe_interval(name, ParameterSpec::Uniform { lower: 0.9, upper: 1.1 }),
        "single-pipe-normal" => single_pipe_interval(name, ParameterSpec::Normal { mean: 0.25, std_dev: 1.0 }),
        "single-pipe-intertemporal-limited" => single_pipe_intertemporal(
            name,
            ParameterSpec::Uniform { lower: 0.0, upper: 2.0 },
            3.0,
            PERTURBATION_DURATION,
        ),
        "single-pipe-intertemporal-universal" => single_pipe_intertemporal(
            name,
            ParameterSpec::Uniform { lower: -1.0, upper: 11.0 },
            1.25,
            PERTURBATION_DURATION,
        ),
        "network5-deterministic" => network5(name, false, false),
        "network5-frozen" => network5(name, true, false),
        "network5-intertemporal" => network5(name, false, true),
        other => {
            return Err(SfvError::Config(format!(
                "unknown scenario '{other}'; known scenarios: {}",
                PRESET_NAMES.join(", ")
            )))
        }
    };
    Ok(spec)
}

fn single_pipe_base(name: &str, parameter: ParameterSpec, outlet_flux: ProfileSpec) -> ScenarioSpec {
    use single_pipe::*;
    ScenarioSpec::SinglePipe(SinglePipeSpec {
        name: name.to_string(),
        horizon_s: HORIZON,
        wave_speed: WAVE_SPEED,
        parameter,
        pipe: PipeGeometry {
            length: LENGTH,
            diameter: DIAMETER,
            friction: FRICTION,
        },
        inlet_density: ProfileSpec {
            sines: vec![SineTerm {
                amplitude: 0.1 * RHO0,
                period: HORIZON / 3.0,
            }],
            ..ProfileSpec::constant(RHO0)
        },
        outlet_flux,
    })
}

fn nominal_outflow() -> ProfileSpec {
    use single_pipe::*;
    ProfileSpec {
        sines: vec![SineTerm {
            amplitude: 0.1 * Q0,
            period: HORIZON / 2.0,
        }],
        ..ProfileSpec::constant(Q0)
    }
}

/// Single pipe with the nominal outflow scaled by `y`.
pub fn single_pipe_interval(name: &str, parameter: ParameterSpec) -> ScenarioSpec {
    let outflow = ProfileSpec {
        scale_by_parameter: true,
        ..nominal_outflow()
    };
    single_pipe_base(name, parameter, outflow)
}

/// Single pipe whose outflow rises to `factor` times nominal for `duration`
/// seconds, starting at `3600 (1 + y)`.
pub fn single_pipe_intertemporal(name: &str, parameter: ParameterSpec, factor: f64, duration: f64) -> ScenarioSpec {
    let outflow = ProfileSpec {
        perturbation: Some(RandomPerturbation {
            onset_offset: HOUR,
            onset_scale: HOUR,
            duration,
            knot_ratios: super::profiles::default_knot_ratios(),
            elevated_factor: factor,
            elevated_offset: 0.0,
        }),
        ..nominal_outflow()
    };
    single_pipe_base(name, parameter, outflow)
}

fn steps(base: f64, terms: &[(f64, f64, f64)]) -> ProfileSpec {
    ProfileSpec {
        sigmoids: terms
            .iter()
            .map(|&(amplitude, center_hours, width)| SigmoidTerm {
                amplitude: amplitude * base,
                center: center_hours * HOUR,
                width,
            })
            .collect(),
        ..ProfileSpec::constant(base)
    }
}

/// Time-varying benchmark data `(d3, d5, c1, c2, c3)` as sigmoid sums.
pub fn benchmark_profile_specs() -> [ProfileSpec; 5] {
    use benchmark::*;
    let (d3, d5) = (WITHDRAWALS[1], WITHDRAWALS[3]);
    let [c1, c2, c3] = RATIOS;
    [
        steps(
            d3,
            &[(-0.1, 4.0, HOUR), (-0.1, 10.0, HOUR), (0.3, 16.0, HOUR), (-0.1, 22.0, HOUR)],
        ),
        steps(d5, &[(0.25, 6.0, 1800.0), (0.25, 12.0, 1800.0), (-0.5, 18.0, 1800.0)]),
        steps(c1, &[(-0.05, 5.0, 1800.0), (0.05, 16.0, 1800.0)]),
        steps(c2, &[(0.25, 6.0, 1800.0), (-0.25, 18.0, 1800.0)]),
        steps(c3, &[(0.1, 2.0, 7200.0), (0.1, 8.0, 7200.0), (-0.2, 20.0, 7200.0)]),
    ]
}

/// Benchmark boundary values at time `t`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BenchmarkValues {
    pub d3: f64,
    pub d5: f64,
    pub sigma1: f64,
    pub c1: f64,
    pub c2: f64,
    pub c3: f64,
}

pub fn benchmark_profiles(t: f64) -> BenchmarkValues {
    let [d3, d5, c1, c2, c3] = benchmark_profile_specs().map(|p| p.evaluate(t, 0.0));
    BenchmarkValues {
        d3,
        d5,
        sigma1: benchmark::SLACK_PRESSURE,
        c1,
        c2,
        c3,
    }
}

/// Five-node benchmark. `frozen` holds every boundary value at its initial
/// table value; `uncertain` adds the random-onset surge at node 5.
pub fn network5(name: &str, frozen: bool, uncertain: bool) -> ScenarioSpec {
    use benchmark::*;
    let [mut d3, mut d5, mut c1, mut c2, mut c3] = benchmark_profile_specs();
    if frozen {
        for p in [&mut d3, &mut d5, &mut c1, &mut c2, &mut c3] {
            *p = ProfileSpec::constant(p.base);
        }
    }
    let parameter = if uncertain {
        d5.perturbation = Some(RandomPerturbation {
            onset_offset: 0.0,
            onset_scale: HOUR,
            duration: single_pipe::PERTURBATION_DURATION,
            knot_ratios: super::profiles::default_knot_ratios(),
            elevated_factor: 1.0,
            elevated_offset: 0.5 * WITHDRAWALS[3],
        });
        ParameterSpec::Uniform {
            lower: ONSET_HOURS.0,
            upper: ONSET_HOURS.1,
        }
    } else {
        ParameterSpec::Fixed { value: 0.0 }
    };
    let withdrawal = |name: &str, profile: ProfileSpec| NodeSpec {
        name: name.to_string(),
        role: NodeKind::Withdrawal,
        profile,
    };
    let nodes = vec![
        NodeSpec {
            name: "1".into(),
            role: NodeKind::Slack,
            profile: ProfileSpec::constant(SLACK_PRESSURE),
        },
        withdrawal("2", ProfileSpec::constant(WITHDRAWALS[0])),
        withdrawal("3", d3),
        withdrawal("4", ProfileSpec::constant(WITHDRAWALS[2])),
        withdrawal("5", d5),
    ];
    let pipes = PIPES
        .iter()
        .zip(INITIAL)
        .enumerate()
        .map(|(k, (&(from, to, diameter, length, friction), (p_in, _, flow)))| NetworkPipeSpec {
            name: (k + 1).to_string(),
            from: from.to_string(),
            to: to.to_string(),
            geometry: PipeGeometry {
                length,
                diameter,
                friction,
            },
            initial_inlet_pressure: p_in,
            initial_flow: flow,
        })
        .collect();
    let compressors = COMPRESSORS
        .iter()
        .zip([c1, c2, c3])
        .enumerate()
        .map(|(k, (&(node, pipe), ratio))| CompressorSpec {
            name: (k + 1).to_string(),
            node: node.to_string(),
            pipe: pipe.to_string(),
            ratio,
        })
        .collect();
    ScenarioSpec::Network(NetworkSpec {
        name: name.to_string(),
        horizon_s: HORIZON,
        wave_speed: WAVE_SPEED,
        parameter,
        nodes,
        pipes,
        compressors,
    })
}

use serde::{Deserialize, Serialize};

use crate::error::{Result, SfvError};
use crate::field::StochasticField;
use crate::gas_model::{GasConstants, PipeSpec};
use crate::network::{Compressor, Edge, NetworkTopology, Node, Profile};
use crate::pipe_solver::{steady_initial_field, PipeBoundary, PipeDiscretization};
use crate::scenarios::profiles::ProfileSpec;
use crate::stochastic_grid::{QuadratureRule, RandomParameter};

/// Law of the single random parameter `y`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "distribution", rename_all = "kebab-case")]
pub enum ParameterSpec {
    Uniform { lower: f64, upper: f64 },
    /// Normal law truncated to three standard deviations around the mean.
    Normal { mean: f64, std_dev: f64 },
    TruncatedNormal { mean: f64, std_dev: f64, lower: f64, upper: f64 },
    Fixed { value: f64 },
}

impl ParameterSpec {
    pub fn build(&self) -> Result<RandomParameter<f64>> {
        match *self {
            ParameterSpec::Uniform { lower, upper } => RandomParameter::uniform(lower, upper, "y"),
            ParameterSpec::Normal { mean, std_dev } => RandomParameter::normal(mean, std_dev, "y"),
            ParameterSpec::TruncatedNormal {
                mean,
                std_dev,
                lower,
                upper,
            } => RandomParameter::truncated_normal(mean, std_dev, lower, upper, "y"),
            ParameterSpec::Fixed { value } => RandomParameter::fixed(value, "y"),
        }
        .map_err(|e| SfvError::Config(format!("parameter: {e}")))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PipeGeometry {
    /// m
    pub length: f64,
    /// m
    pub diameter: f64,
    /// Darcy friction factor λ.
    pub friction: f64,
}

impl PipeGeometry {
    fn build(&self, what: &str) -> Result<PipeSpec<f64>> {
        PipeSpec::new(self.length, self.diameter, self.friction).map_err(|e| SfvError::Config(format!("{what}: {e}")))
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SinglePipeSpec {
    pub name: String,
    pub horizon_s: f64,
    pub wave_speed: f64,
    pub parameter: ParameterSpec,
    pub pipe: PipeGeometry,
    /// kg/m³
    pub inlet_density: ProfileSpec,
    /// kg/(m² s)
    pub outlet_flux: ProfileSpec,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum NodeKind {
    Slack,
    Withdrawal,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct NodeSpec {
    pub name: String,
    pub role: NodeKind,
    /// Pressure in Pa for slack nodes, withdrawal in kg/s otherwise.
    pub profile: ProfileSpec,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct NetworkPipeSpec {
    pub name: String,
    pub from: String,
    pub to: String,
    #[serde(flatten)]
    pub geometry: PipeGeometry,
    /// Pa
    pub initial_inlet_pressure: f64,
    /// kg/s
    pub initial_flow: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CompressorSpec {
    pub name: String,
    pub node: String,
    pub pipe: String,
    pub ratio: ProfileSpec,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct NetworkSpec {
    pub name: String,
    pub horizon_s: f64,
    pub wave_speed: f64,
    pub parameter: ParameterSpec,
    pub nodes: Vec<NodeSpec>,
    pub pipes: Vec<NetworkPipeSpec>,
    #[serde(default)]
    pub compressors: Vec<CompressorSpec>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case")]
pub enum ScenarioSpec {
    SinglePipe(SinglePipeSpec),
    Network(NetworkSpec),
}

fn gas(wave_speed: f64) -> Result<GasConstants<f64>> {
    GasConstants::new(wave_speed).map_err(|e| SfvError::Config(format!("wave_speed: {e}")))
}

fn horizon(h: f64) -> Result<f64> {
    if h > 0.0 && h.is_finite() {
        Ok(h)
    } else {
        Err(SfvError::Config(format!("horizon_s must be positive, got {h}")))
    }
}

impl ScenarioSpec {
    pub fn name(&self) -> &str {
        match self {
            ScenarioSpec::SinglePipe(s) => &s.name,
            ScenarioSpec::Network(s) => &s.name,
        }
    }

    pub fn parameter(&self) -> &ParameterSpec {
        match self {
            ScenarioSpec::SinglePipe(s) => &s.parameter,
            ScenarioSpec::Network(s) => &s.parameter,
        }
    }

    pub fn set_parameter(&mut self, p: ParameterSpec) {
        match self {
            ScenarioSpec::SinglePipe(s) => s.parameter = p,
            ScenarioSpec::Network(s) => s.parameter = p,
        }
    }

    pub fn build(&self) -> Result<Scenario> {
        match self {
            ScenarioSpec::SinglePipe(s) => {
                s.inlet_density.validate("inlet_density")?;
                s.outlet_flux.validate("outlet_flux")?;
                Ok(Scenario::SinglePipe(SinglePipeScenario {
                    name: s.name.clone(),
                    pipe: s.pipe.build("pipe")?,
                    gas: gas(s.wave_speed)?,
                    horizon: horizon(s.horizon_s)?,
                    parameter: s.parameter.build()?,
                    inlet_density: s.inlet_density.to_profile(),
                    outlet_flux: s.outlet_flux.to_profile(),
                }))
            }
            ScenarioSpec::Network(s) => build_network(s).map(Scenario::Network),
        }
    }
}

fn build_network(s: &NetworkSpec) -> Result<NetworkScenario> {
    let node_index = |name: &str, what: String| {
        s.nodes
            .iter()
            .position(|n| n.name == name)
            .ok_or_else(|| SfvError::Config(format!("{what} references unknown node '{name}'")))
    };
    let mut nodes = Vec::with_capacity(s.nodes.len());
    for (i, n) in s.nodes.iter().enumerate() {
        if s.nodes[..i].iter().any(|m| m.name == n.name) {
            return Err(SfvError::Config(format!("node '{}' is defined twice", n.name)));
        }
        n.profile.validate(&format!("node '{}'", n.name))?;
        let profile = n.profile.to_profile();
        nodes.push(match n.role {
            NodeKind::Slack => Node::slack(n.name.clone(), profile),
            NodeKind::Withdrawal => Node::withdrawal(n.name.clone(), profile),
        });
    }
    let mut edges = Vec::with_capacity(s.pipes.len());
    for (i, p) in s.pipes.iter().enumerate() {
        if s.pipes[..i].iter().any(|m| m.name == p.name) {
            return Err(SfvError::Config(format!("pipe '{}' is defined twice", p.name)));
        }
        edges.push(Edge {
            name: p.name.clone(),
            from: node_index(&p.from, format!("pipe '{}'", p.name))?,
            to: node_index(&p.to, format!("pipe '{}'", p.name))?,
            pipe: p.geometry.build(&format!("pipe '{}'", p.name))?,
        });
    }
    let mut compressors = Vec::with_capacity(s.compressors.len());
    for c in &s.compressors {
        let edge = s.pipes.iter().position(|p| p.name == c.pipe).ok_or_else(|| {
            SfvError::Config(format!("compressor '{}' references unknown pipe '{}'", c.name, c.pipe))
        })?;
        c.ratio.validate(&format!("compressor '{}'", c.name))?;
        compressors.push(Compressor {
            name: c.name.clone(),
            node: node_index(&c.node, format!("compressor '{}'", c.name))?,
            edge,
            ratio: c.ratio.to_profile(),
        });
    }
    let topology = NetworkTopology::new(nodes, edges, compressors)?;
    Ok(NetworkScenario {
        name: s.name.clone(),
        gas: gas(s.wave_speed)?,
        horizon: horizon(s.horizon_s)?,
        parameter: s.parameter.build()?,
        inlet_pressure: s.pipes.iter().map(|p| p.initial_inlet_pressure).collect(),
        mass_rate: s.pipes.iter().map(|p| p.initial_flow).collect(),
        topology,
    })
}

/// Pipe boundary backed by two profiles of `(t, y)`.
#[derive(Clone)]
pub struct ProfileBoundary {
    pub inlet_density: Profile<f64>,
    pub outlet_flux: Profile<f64>,
}

impl PipeBoundary<f64> for ProfileBoundary {
    fn evaluate(&self, t: f64, y: &[f64], inlet_density: &mut [f64], outlet_flux: &mut [f64]) {
        for ((&y, s), d) in y.iter().zip(inlet_density).zip(outlet_flux) {
            *s = (self.inlet_density)(t, y);
            *d = (self.outlet_flux)(t, y);
        }
    }
}

#[derive(Clone)]
pub struct SinglePipeScenario {
    pub name: String,
    pub pipe: PipeSpec<f64>,
    pub gas: GasConstants<f64>,
    pub horizon: f64,
    pub parameter: RandomParameter<f64>,
    pub inlet_density: Profile<f64>,
    pub outlet_flux: Profile<f64>,
}

impl SinglePipeScenario {
    pub fn boundary(&self) -> ProfileBoundary {
        ProfileBoundary {
            inlet_density: self.inlet_density.clone(),
            outlet_flux: self.outlet_flux.clone(),
        }
    }

    /// Steady state matching the boundary data at `t = 0` for every `y`.
    pub fn initial_field(&self, disc: &PipeDiscretization<f64>, rule: &QuadratureRule<f64>) -> Result<StochasticField<f64>> {
        let (s, d) = (self.inlet_density.clone(), self.outlet_flux.clone());
        steady_initial_field(&self.pipe, &self.gas, disc.cells, rule, |y| s(0.0, y), |y| d(0.0, y))
    }
}

#[derive(Clone)]
pub struct NetworkScenario {
    pub name: String,
    pub topology: NetworkTopology<f64>,
    pub gas: GasConstants<f64>,
    pub horizon: f64,
    pub parameter: RandomParameter<f64>,
    /// Initial inlet pressure per pipe, Pa.
    pub inlet_pressure: Vec<f64>,
    /// Initial mass rate per pipe, kg/s.
    pub mass_rate: Vec<f64>,
}

#[derive(Clone)]
pub enum Scenario {
    SinglePipe(SinglePipeScenario),
    Network(NetworkScenario),
}

impl Scenario {
    pub fn name(&self) -> &str {
        match self {
            Scenario::SinglePipe(s) => &s.name,
            Scenario::Network(s) => &s.name,
        }
    }

    pub fn horizon(&self) -> f64 {
        match self {
            Scenario::SinglePipe(s) => s.horizon,
            Scenario::Network(s) => s.horizon,
        }
    }

    pub fn parameter(&self) -> &RandomParameter<f64> {
        match self {
            Scenario::SinglePipe(s) => &s.parameter,
            Scenario::Network(s) => &s.parameter,
        }
    }

    /// Same scenario with `y` following `parameter` instead.
    pub fn with_parameter(&self, parameter: RandomParameter<f64>) -> Self {
        let mut s = self.clone();
        match &mut s {
            Scenario::SinglePipe(p) => p.parameter = parameter,
            Scenario::Network(n) => n.parameter = parameter,
        }
        s
    }

    /// Number of pipes.
    pub fn pipe_count(&self) -> usize {
        match self {
            Scenario::SinglePipe(_) => 1,
            Scenario::Network(n) => n.topology.edges().len(),
        }
    }

    pub fn pipe_names(&self) -> Vec<String> {
        match self {
            Scenario::SinglePipe(_) => vec!["1".to_string()],
            Scenario::Network(n) => n.topology.edges().iter().map(|e| e.name.clone()).collect(),
        }
    }

    pub fn pipe(&self, index: usize) -> PipeSpec<f64> {
        match self {
            Scenario::SinglePipe(s) => s.pipe,
            Scenario::Network(n) => n.topology.edges()[index].pipe,
        }
    }

    pub fn gas(&self) -> GasConstants<f64> {
        match self {
            Scenario::SinglePipe(s) => s.gas,
            Scenario::Network(n) => n.gas,
        }
    }
}

//! Time loop shared by every run mode: advances a scenario on a fixed output
//! grid and collects boundary statistics.

use std::time::Instant;

use serde::{Deserialize, Serialize};

use crate::error::{Result, SfvError};
use crate::field::{weighted_mean_variance, StochasticField};
use crate::gas_model::GasState;
use crate::network::{steady_network_fields, NetworkSolver};
use crate::pipe_solver::{aligned_timestep, EndStates, MassBalance, PipeDiscretization, PipeSolver};
use crate::reconstruction::ReconstructionOrder;
use crate::scenarios::{ProfileBoundary, Scenario};
use crate::stochastic_grid::{QuadratureRule, StochasticGrid};

/// Discretization and output cadence of a run.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SolverSettings {
    /// Cells per pipe.
    pub nx: usize,
    /// Stochastic cells.
    pub ny: usize,
    /// Quadrature nodes per stochastic cell.
    pub quad_nodes: usize,
    /// Reconstruction order, 1 or 2.
    pub order: u32,
    pub cfl: f64,
    /// Simulated seconds between outputs.
    pub output_interval_s: f64,
    /// Overrides the scenario horizon when set.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub horizon_s: Option<f64>,
}

impl Default for SolverSettings {
    fn default() -> Self {
        Self {
            nx: 100,
            ny: 8,
            quad_nodes: 2,
            order: 2,
            cfl: 0.9,
            output_interval_s: 60.0,
            horizon_s: None,
        }
    }
}

impl SolverSettings {
    pub fn discretization(&self) -> Result<PipeDiscretization<f64>> {
        PipeDiscretization::new(self.nx, ReconstructionOrder::from_order(self.order)?, self.cfl, self.quad_nodes)
    }

    pub fn validate(&self, horizon: f64) -> Result<()> {
        self.discretization()?;
        if self.ny == 0 {
            return Err(SfvError::InvalidParameter("ny must be at least 1".into()));
        }
        if !(self.output_interval_s > 0.0) || self.output_interval_s > horizon {
            return Err(SfvError::InvalidParameter(format!(
                "output interval {} s must be positive and at most the horizon {horizon} s",
                self.output_interval_s
            )));
        }
        Ok(())
    }
}

/// Quantities reported at both pipe ends, in this order.
pub const CHANNELS: [&str; 4] = ["p_in", "p_out", "flow_in", "flow_out"];

/// Mean and standard deviation of inlet/outlet pressure (Pa) and mass rate
/// (kg/s) of one pipe at every output time.
#[derive(Debug, Clone, PartialEq)]
pub struct PipeSeries {
    pub name: String,
    pub mean: Vec<[f64; 4]>,
    pub std: Vec<[f64; 4]>,
}

impl PipeSeries {
    /// Time series of the mean of channel `c` (index into [`CHANNELS`]).
    pub fn mean_of(&self, c: usize) -> Vec<f64> {
        self.mean.iter().map(|m| m[c]).collect()
    }

    pub fn std_of(&self, c: usize) -> Vec<f64> {
        self.std.iter().map(|s| s[c]).collect()
    }
}

/// All pipe fields at one output time.
#[derive(Debug, Clone)]
pub struct Snapshot {
    pub time: f64,
    pub fields: Vec<StochasticField<f64>>,
}

#[derive(Debug, Clone)]
pub struct RunOutput {
    pub scenario: String,
    pub times: Vec<f64>,
    pub pipes: Vec<PipeSeries>,
    pub grid: StochasticGrid<f64>,
    pub final_fields: Vec<StochasticField<f64>>,
    pub snapshots: Vec<Snapshot>,
    pub mass_balance: MassBalance<f64>,
    pub steps: usize,
    /// Wall time of the time loop alone.
    pub solver_seconds: f64,
}

trait Simulation {
    fn timestep(&self) -> f64;
    fn step(&mut self, dt: f64) -> Result<()>;
    fn ends(&mut self) -> Result<Vec<EndStates<f64>>>;
    fn fields(&self) -> Result<Vec<StochasticField<f64>>>;
    fn balance(&self) -> MassBalance<f64>;
}

impl Simulation for PipeSolver<f64, ProfileBoundary> {
    fn timestep(&self) -> f64 {
        PipeSolver::timestep(self)
    }
    fn step(&mut self, dt: f64) -> Result<()> {
        PipeSolver::step(self, dt)
    }
    fn ends(&mut self) -> Result<Vec<EndStates<f64>>> {
        Ok(vec![self.end_states()?])
    }
    fn fields(&self) -> Result<Vec<StochasticField<f64>>> {
        Ok(vec![self.field()?])
    }
    fn balance(&self) -> MassBalance<f64> {
        self.mass_balance()
    }
}

impl Simulation for NetworkSolver<f64> {
    fn timestep(&self) -> f64 {
        NetworkSolver::timestep(self)
    }
    fn step(&mut self, dt: f64) -> Result<()> {
        NetworkSolver::step(self, dt)
    }
    fn ends(&mut self) -> Result<Vec<EndStates<f64>>> {
        self.end_states()
    }
    fn fields(&self) -> Result<Vec<StochasticField<f64>>> {
        (0..self.topology().edges().len()).map(|e| self.field(e)).collect()
    }
    fn balance(&self) -> MassBalance<f64> {
        self.mass_balance()
    }
}

/// Output times `0, Δ, 2Δ, …` up to the horizon, the last interval possibly shorter.
pub fn output_times(horizon: f64, interval: f64) -> Vec<f64> {
    let n = (horizon / interval - 1e-9).ceil().max(1.0) as usize;
    (0..=n).map(|k| (k as f64 * interval).min(horizon)).collect()
}

/// Runs `scenario` with its random parameter on an `ny`-cell grid.
/// `snapshot_times` selects output times (nearest on the output grid) at
/// which all fields are kept.
pub fn run_scenario(scenario: &Scenario, settings: &SolverSettings, snapshot_times: &[f64]) -> Result<RunOutput> {
    let horizon = settings.horizon_s.unwrap_or_else(|| scenario.horizon());
    settings.validate(horizon)?;
    let disc = settings.discretization()?;
    let grid = StochasticGrid::build(scenario.parameter().clone(), settings.ny)?;
    let rule = QuadratureRule::new(&grid, settings.quad_nodes)?;
    match scenario {
        Scenario::SinglePipe(s) => {
            let initial = s.initial_field(&disc, &rule)?;
            let solver = PipeSolver::new(s.pipe, s.gas, &disc, &grid, s.boundary(), &initial)?;
            drive(solver, scenario, settings, horizon, grid, &rule, snapshot_times)
        }
        Scenario::Network(n) => {
            let initial = steady_network_fields(&n.topology, &n.gas, &disc, &rule, &n.inlet_pressure, &n.mass_rate)?;
            let solver = NetworkSolver::new(n.topology.clone(), n.gas, &disc, &grid, &initial)?;
            drive(solver, scenario, settings, horizon, grid, &rule, snapshot_times)
        }
    }
}

/// Attaches the simulated time to errors that do not carry it already.
fn at(time: f64) -> impl FnOnce(SfvError) -> SfvError {
    move |e| match e {
        SfvError::Positivity { .. } | SfvError::Step { .. } => e,
        other => SfvError::Step {
            time,
            source: Box::new(other),
        },
    }
}

fn drive<S: Simulation>(
    mut sim: S,
    scenario: &Scenario,
    settings: &SolverSettings,
    horizon: f64,
    grid: StochasticGrid<f64>,
    rule: &QuadratureRule<f64>,
    snapshot_times: &[f64],
) -> Result<RunOutput> {
    let times = output_times(horizon, settings.output_interval_s);
    let snapshot_slots: Vec<usize> = snapshot_times
        .iter()
        .map(|&t| {
            let k = (t / settings.output_interval_s).round().max(0.0) as usize;
            k.min(times.len() - 1)
        })
        .collect();
    let names = scenario.pipe_names();
    let mut pipes: Vec<PipeSeries> = names
        .into_iter()
        .map(|name| PipeSeries {
            name,
            mean: Vec::with_capacity(times.len()),
            std: Vec::with_capacity(times.len()),
        })
        .collect();
    let gas = scenario.gas();
    let a2 = gas.wave_speed() * gas.wave_speed();
    let areas: Vec<f64> = (0..pipes.len()).map(|e| scenario.pipe(e).area()).collect();
    let weights = rule.weights();
    let record = |sim: &mut S, pipes: &mut [PipeSeries]| -> Result<()> {
        let ends = sim.ends()?;
        for ((series, end), &area) in pipes.iter_mut().zip(&ends).zip(&areas) {
            let stat = |states: &[GasState<f64>], f: &dyn Fn(GasState<f64>) -> f64| {
                let v: Vec<f64> = states.iter().map(|&u| f(u)).collect();
                weighted_mean_variance(&v, weights)
            };
            let pressure = |u: GasState<f64>| a2 * u.rho;
            let flow = |u: GasState<f64>| area * u.q;
            let stats = [
                stat(&end.inlet, &pressure),
                stat(&end.outlet, &pressure),
                stat(&end.inlet, &flow),
                stat(&end.outlet, &flow),
            ];
            series.mean.push(stats.map(|s| s.0));
            series.std.push(stats.map(|s| s.1.sqrt()));
        }
        Ok(())
    };

    let started = Instant::now();
    let mut steps = 0;
    let mut snapshots = Vec::new();
    let take_snapshot = |k: usize, sim: &S, snapshots: &mut Vec<Snapshot>| -> Result<()> {
        if snapshot_slots.contains(&k) {
            snapshots.push(Snapshot {
                time: times[k],
                fields: sim.fields()?,
            });
        }
        Ok(())
    };
    record(&mut sim, &mut pipes)?;
    take_snapshot(0, &sim, &mut snapshots)?;
    let cfl_dt = sim.timestep();
    for k in 1..times.len() {
        let interval = times[k] - times[k - 1];
        let dt = aligned_timestep(cfl_dt, interval);
        let n = (interval / dt).round() as usize;
        for s in 0..n {
            sim.step(dt).map_err(at(times[k - 1] + s as f64 * dt))?;
        }
        steps += n;
        record(&mut sim, &mut pipes).map_err(at(times[k]))?;
        take_snapshot(k, &sim, &mut snapshots)?;
    }
    let solver_seconds = started.elapsed().as_secs_f64();
    Ok(RunOutput {
        scenario: scenario.name().to_string(),
        times,
        pipes,
        grid,
        final_fields: sim.fields()?,
        snapshots,
        mass_balance: sim.balance(),
        steps,
        solver_seconds,
    })
}

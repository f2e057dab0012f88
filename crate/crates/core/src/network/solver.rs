use crate::error::{Result, SfvError};
use crate::field::StochasticField;
use crate::gas_model::{GasConstants, GasState};
use crate::network::junction::{slack_solve_into, JunctionEdge, JunctionSolver};
use crate::network::topology::{NetworkTopology, NodeRole, Orientation};
use crate::pipe_solver::{
    cfl_timestep, steady_initial_field, EndStates, MassBalance, PipeDiscretization, PipeEnd, PipeKernel,
};
use crate::scalar::Scalar;
use crate::stochastic_grid::{QuadratureRule, StochasticGrid};
use crate::time_integration::{ImexSsp2, ImexSystem};

fn end_of(o: Orientation) -> PipeEnd {
    match o {
        Orientation::Outgoing => PipeEnd::Inlet,
        Orientation::Incoming => PipeEnd::Outlet,
    }
}

/// Steady initial fields for every edge from its inlet pressure (Pa) and
/// mass rate (kg/s).
pub fn steady_network_fields<T: Scalar>(
    topology: &NetworkTopology<T>,
    gas: &GasConstants<T>,
    disc: &PipeDiscretization<T>,
    rule: &QuadratureRule<T>,
    inlet_pressure: &[T],
    mass_rate: &[T],
) -> Result<Vec<StochasticField<T>>> {
    let n = topology.edges().len();
    if inlet_pressure.len() != n || mass_rate.len() != n {
        return Err(SfvError::DimensionMismatch(format!(
            "{} edges but {} inlet pressures and {} mass rates",
            n,
            inlet_pressure.len(),
            mass_rate.len()
        )));
    }
    let a2 = gas.wave_speed() * gas.wave_speed();
    topology
        .edges()
        .iter()
        .enumerate()
        .map(|(e, edge)| {
            let rho = inlet_pressure[e] / a2;
            let q = mass_rate[e] / edge.pipe.area();
            steady_initial_field(&edge.pipe, gas, disc.cells, rule, |_| rho, |_| q)
        })
        .collect()
}

struct NetworkSystem<T> {
    topology: NetworkTopology<T>,
    gas: GasConstants<T>,
    rule: QuadratureRule<T>,
    kernels: Vec<PipeKernel<T>>,
    offsets: Vec<usize>,
    /// σ or d of each graph node at every stochastic node, `[node][s]`.
    node_value: Vec<Vec<T>>,
    /// Compressor ratio of each edge at every stochastic node, `[edge][s]`.
    ratio: Vec<Vec<T>>,
    node_cell_value: Vec<Vec<T>>,
    cell_ratio: Vec<Vec<T>>,
    junction: JunctionSolver<T>,
    edge_buf: Vec<JunctionEdge<T>>,
    star_buf: Vec<GasState<T>>,
    stage_slack: [Vec<T>; 2],
    stage_withdrawal: [Vec<T>; 2],
    slack_inflow: Vec<T>,
    withdrawn: Vec<T>,
}

impl<T: Scalar> NetworkSystem<T> {
    fn slice<'a>(&self, u: &'a [T], e: usize) -> &'a [T] {
        &u[self.offsets[e]..self.offsets[e + 1]]
    }

    fn evaluate_data(&mut self, t: T) {
        let nodes = self.rule.nodes();
        let rule = &self.rule;
        let average = |values: &[T], out: &mut [T]| rule.cell_averages_into(values, out);
        for (v, node) in self.topology.nodes().iter().enumerate() {
            let profile = match &node.role {
                NodeRole::Slack { pressure } => pressure,
                NodeRole::Withdrawal { mass_rate } => mass_rate,
            };
            for (out, &y) in self.node_value[v].iter_mut().zip(nodes) {
                *out = profile(t, y);
            }
            average(&self.node_value[v], &mut self.node_cell_value[v]);
        }
        for e in 0..self.topology.edges().len() {
            if let Some(c) = self.topology.compressor_on(e) {
                for (out, &y) in self.ratio[e].iter_mut().zip(nodes) {
                    *out = (c.ratio)(t, y);
                }
                average(&self.ratio[e], &mut self.cell_ratio[e]);
            }
        }
    }

    /// Solves the junction at `v` for the edge states in `edge_buf`; the
    /// starred states land in `star_buf`.
    fn solve_node(&mut self, v: usize, value: T) -> Result<()> {
        let k = self.edge_buf.len();
        match self.topology.nodes()[v].role {
            NodeRole::Slack { .. } => {
                slack_solve_into(v, &self.edge_buf, &self.gas, value, &mut self.star_buf[..k])?;
            }
            NodeRole::Withdrawal { .. } => {
                self.junction
                    .solve(v, &self.edge_buf, &self.gas, value, &mut self.star_buf[..k])?;
            }
        }
        Ok(())
    }

    fn prepare(&mut self, u: &[T], t: T) -> Result<()> {
        self.evaluate_data(t);
        let ny = self.rule.cells();
        let mm = self.rule.nodes_per_cell();
        let n_nodes = self.topology.nodes().len();

        for j in 0..ny {
            for v in 0..n_nodes {
                self.edge_buf.clear();
                for &(e, o) in self.topology.incident(v) {
                    let state = self.kernels[e].extrapolated_edge(self.slice(u, e), j, end_of(o));
                    let ratio = match (o, self.topology.compressor_on(e).is_some()) {
                        (Orientation::Outgoing, true) => self.cell_ratio[e][j],
                        _ => T::one(),
                    };
                    self.edge_buf.push(JunctionEdge {
                        state,
                        orientation: o,
                        area: self.topology.edges()[e].pipe.area(),
                        ratio,
                    });
                }
                self.solve_node(v, self.node_cell_value[v][j])?;
                for (slot, &(e, o)) in self.topology.incident(v).iter().enumerate() {
                    let star = self.star_buf[slot];
                    let (lo, hi) = (self.offsets[e], self.offsets[e + 1]);
                    self.kernels[e].set_ghost_from_star(&u[lo..hi], j, end_of(o), star);
                }
            }
        }
        for e in 0..self.kernels.len() {
            let (lo, hi) = (self.offsets[e], self.offsets[e + 1]);
            self.kernels[e].reconstruct(&u[lo..hi]);
        }
        for j in 0..ny {
            for m in 0..mm {
                let s = j * mm + m;
                for v in 0..n_nodes {
                    self.edge_buf.clear();
                    for &(e, o) in self.topology.incident(v) {
                        let ratio = match (o, self.topology.compressor_on(e).is_some()) {
                            (Orientation::Outgoing, true) => self.ratio[e][s],
                            _ => T::one(),
                        };
                        self.edge_buf.push(JunctionEdge {
                            state: self.kernels[e].edge_state(j, m, end_of(o)),
                            orientation: o,
                            area: self.topology.edges()[e].pipe.area(),
                            ratio,
                        });
                    }
                    self.solve_node(v, self.node_value[v][s])?;
                    for (slot, &(e, o)) in self.topology.incident(v).iter().enumerate() {
                        self.kernels[e].set_boundary_state(j, m, end_of(o), self.star_buf[slot]);
                    }
                }
            }
        }
        Ok(())
    }
}

impl<T: Scalar> ImexSystem<T> for NetworkSystem<T> {
    fn dimension(&self) -> usize {
        *self.offsets.last().unwrap_or(&0)
    }

    fn explicit(&mut self, u: &[T], t: T, stage: usize, out: &mut [T]) -> Result<()> {
        self.prepare(u, t)?;
        for e in 0..self.kernels.len() {
            let (lo, hi) = (self.offsets[e], self.offsets[e + 1]);
            self.kernels[e].divergence(&mut out[lo..hi])?;
        }
        let ny = self.rule.cells();
        for j in 0..ny {
            let mut slack = T::zero();
            let mut withdrawn = T::zero();
            for (v, node) in self.topology.nodes().iter().enumerate() {
                match node.role {
                    NodeRole::Slack { .. } => {
                        for &(e, o) in self.topology.incident(v) {
                            let area = self.topology.edges()[e].pipe.area();
                            let f = self.kernels[e].boundary_mass_flux(j, end_of(o));
                            match o {
                                Orientation::Outgoing => slack += area * f,
                                Orientation::Incoming => slack -= area * f,
                            }
                        }
                    }
                    NodeRole::Withdrawal { .. } => withdrawn += self.node_cell_value[v][j],
                }
            }
            self.stage_slack[stage][j] = slack;
            self.stage_withdrawal[stage][j] = withdrawn;
        }
        Ok(())
    }

    fn source(&self, u: &[T], out: &mut [T]) {
        for (e, k) in self.kernels.iter().enumerate() {
            let (lo, hi) = (self.offsets[e], self.offsets[e + 1]);
            k.source(&u[lo..hi], &mut out[lo..hi]);
        }
    }

    fn implicit_solve(&self, rhs: &[T], h: T, out: &mut [T]) {
        for (e, k) in self.kernels.iter().enumerate() {
            let (lo, hi) = (self.offsets[e], self.offsets[e + 1]);
            k.implicit_solve(&rhs[lo..hi], h, &mut out[lo..hi]);
        }
    }

    fn end_step(&mut self, dt: T) {
        let w = T::half() * dt;
        for j in 0..self.rule.cells() {
            self.slack_inflow[j] += w * (self.stage_slack[0][j] + self.stage_slack[1][j]);
            self.withdrawn[j] += w * (self.stage_withdrawal[0][j] + self.stage_withdrawal[1][j]);
        }
    }
}

/// Network-wide solver: every pipe shares one stochastic grid and one time step.
pub struct NetworkSolver<T> {
    system: NetworkSystem<T>,
    integrator: ImexSsp2<T>,
    u: Vec<T>,
    time: T,
    dt: T,
    initial_mass: Vec<T>,
}

impl<T: Scalar> NetworkSolver<T> {
    pub fn new(
        topology: NetworkTopology<T>,
        gas: GasConstants<T>,
        disc: &PipeDiscretization<T>,
        grid: &StochasticGrid<T>,
        initial: &[StochasticField<T>],
    ) -> Result<Self> {
        let n_edges = topology.edges().len();
        if initial.len() != n_edges {
            return Err(SfvError::DimensionMismatch(format!(
                "{} initial fields for {} pipes",
                initial.len(),
                n_edges
            )));
        }
        let rule = QuadratureRule::new(grid, disc.quadrature_nodes)?;
        let mut kernels = Vec::with_capacity(n_edges);
        let mut offsets = vec![0];
        for edge in topology.edges() {
            let k = PipeKernel::new(edge.pipe, gas, disc, rule.clone())?;
            offsets.push(offsets.last().copied().unwrap_or(0) + k.dimension());
            kernels.push(k);
        }
        let mut u = vec![T::zero(); *offsets.last().unwrap_or(&0)];
        for (e, (k, field)) in kernels.iter().zip(initial).enumerate() {
            let part = &mut u[offsets[e]..offsets[e + 1]];
            k.load_field(field, part)?;
            if let Some((i, j, rho)) = k.find_invalid(part) {
                return Err(SfvError::Positivity {
                    pipe: e,
                    time: field.time().to_f64_lossy(),
                    cell: i,
                    stochastic_cell: j,
                    rho: rho.to_f64_lossy(),
                });
            }
        }
        let dt = topology
            .edges()
            .iter()
            .map(|e| cfl_timestep(disc, &e.pipe, &gas))
            .fold(T::infinity(), T::min);
        let ny = rule.cells();
        let nodes = rule.len();
        let n_nodes = topology.nodes().len();
        let max_degree = (0..n_nodes).map(|v| topology.incident(v).len()).max().unwrap_or(0);
        let time = initial.first().map(|f| f.time()).unwrap_or_else(T::zero);
        let system = NetworkSystem {
            gas,
            kernels,
            offsets,
            node_value: vec![vec![T::zero(); nodes]; n_nodes],
            ratio: vec![vec![T::one(); nodes]; n_edges],
            node_cell_value: vec![vec![T::zero(); ny]; n_nodes],
            cell_ratio: vec![vec![T::one(); ny]; n_edges],
            junction: JunctionSolver::new(),
            edge_buf: Vec::with_capacity(max_degree),
            star_buf: vec![GasState::default(); max_degree],
            stage_slack: [vec![T::zero(); ny], vec![T::zero(); ny]],
            stage_withdrawal: [vec![T::zero(); ny], vec![T::zero(); ny]],
            slack_inflow: vec![T::zero(); ny],
            withdrawn: vec![T::zero(); ny],
            topology,
            rule,
        };
        let initial_mass = (0..ny).map(|j| system.total_mass(&u, j)).collect();
        let dim = u.len();
        Ok(Self {
            system,
            integrator: ImexSsp2::new(dim),
            u,
            time,
            dt,
            initial_mass,
        })
    }

    pub fn time(&self) -> T {
        self.time
    }

    /// Smallest CFL-limited step over all pipes.
    pub fn timestep(&self) -> T {
        self.dt
    }

    pub fn topology(&self) -> &NetworkTopology<T> {
        &self.system.topology
    }

    pub fn rule(&self) -> &QuadratureRule<T> {
        &self.system.rule
    }

    pub fn kernel(&self, edge: usize) -> &PipeKernel<T> {
        &self.system.kernels[edge]
    }

    pub fn field(&self, edge: usize) -> Result<StochasticField<T>> {
        let s = &self.system;
        s.kernels[edge].to_field(s.slice(&self.u, edge), self.time)
    }

    pub fn step(&mut self, dt: T) -> Result<()> {
        self.integrator
            .step(&mut self.system, &mut self.u, self.time, dt)?;
        self.time += dt;
        for (e, k) in self.system.kernels.iter().enumerate() {
            if let Some((i, j, rho)) = k.find_invalid(self.system.slice(&self.u, e)) {
                return Err(SfvError::Positivity {
                    pipe: e,
                    time: self.time.to_f64_lossy(),
                    cell: i,
                    stochastic_cell: j,
                    rho: rho.to_f64_lossy(),
                });
            }
        }
        Ok(())
    }

    pub fn advance(&mut self, steps: usize, dt: T) -> Result<()> {
        for _ in 0..steps {
            self.step(dt)?;
        }
        Ok(())
    }

    /// Junction-consistent boundary states of every pipe at the current time.
    pub fn end_states(&mut self) -> Result<Vec<EndStates<T>>> {
        self.system.prepare(&self.u, self.time)?;
        let mm = self.system.rule.nodes_per_cell();
        Ok(self
            .system
            .kernels
            .iter()
            .map(|k| {
                let nodes = k.ny() * mm;
                let mut inlet = Vec::with_capacity(nodes);
                let mut outlet = Vec::with_capacity(nodes);
                for j in 0..k.ny() {
                    for m in 0..mm {
                        inlet.push(k.interface_states().left(0, j, m));
                        outlet.push(k.interface_states().right(k.nx(), j, m));
                    }
                }
                EndStates { inlet, outlet }
            })
            .collect())
    }

    /// Stored mass change against slack inflow minus withdrawals, per stochastic cell.
    pub fn mass_balance(&self) -> MassBalance<T> {
        let s = &self.system;
        let ny = s.rule.cells();
        MassBalance {
            stored_change: (0..ny)
                .map(|j| s.total_mass(&self.u, j) - self.initial_mass[j])
                .collect(),
            net_inflow: (0..ny).map(|j| s.slack_inflow[j] - s.withdrawn[j]).collect(),
            initial: self.initial_mass.clone(),
        }
    }
}

impl<T: Scalar> NetworkSystem<T> {
    fn total_mass(&self, u: &[T], j: usize) -> T {
        self.kernels
            .iter()
            .enumerate()
            .map(|(e, k)| k.stored_mass(self.slice(u, e), j))
            .fold(T::zero(), |acc, m| acc + m)
    }
}

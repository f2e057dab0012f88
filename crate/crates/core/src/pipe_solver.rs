//! Stochastic finite-volume solver for a single pipe.
//!
//! The state of a pipe is a flat vector `[rho block | q block]`, each block
//! holding the `nx · ny` cell averages in `j * nx + i` order. The per-pipe
//! work (reconstruction, boundary interface states, flux divergence, friction
//! source) lives in [`PipeKernel`], which the network solver reuses.

use crate::error::{Result, SfvError};
use crate::field::StochasticField;
use crate::flux::{stochastic_cell_flux_into, CellFluxes, NumericalFluxChoice};
use crate::gas_model::{steady_density_profile, GasConstants, GasState, PipeSpec};
use crate::reconstruction::{InterfaceStates, ReconstructionOrder, Reconstructor};
use crate::scalar::Scalar;
use crate::stochastic_grid::{pivot_mean, QuadratureRule, StochasticGrid};
use crate::time_integration::{ImexSsp2, ImexSystem};

/// Numerical settings shared by every pipe of a run.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PipeDiscretization<T> {
    pub cells: usize,
    pub order: ReconstructionOrder,
    pub cfl: T,
    pub quadrature_nodes: usize,
    /// `None` selects Lax–Friedrichs with viscosity equal to the wave speed.
    pub flux: Option<NumericalFluxChoice<T>>,
}

impl<T: Scalar> PipeDiscretization<T> {
    pub fn new(cells: usize, order: ReconstructionOrder, cfl: T, quadrature_nodes: usize) -> Result<Self> {
        let d = Self {
            cells,
            order,
            cfl,
            quadrature_nodes,
            flux: None,
        };
        d.validate()?;
        Ok(d)
    }

    pub fn with_flux(mut self, flux: NumericalFluxChoice<T>) -> Result<Self> {
        flux.validate()?;
        self.flux = Some(flux);
        Ok(self)
    }

    pub fn validate(&self) -> Result<()> {
        if self.cells == 0 {
            return Err(SfvError::InvalidParameter("pipes need at least one cell".into()));
        }
        if !(self.cfl > T::zero() && self.cfl <= T::one()) {
            return Err(SfvError::InvalidParameter(format!(
                "CFL number must lie in (0, 1], got {}",
                self.cfl
            )));
        }
        if self.quadrature_nodes == 0 {
            return Err(SfvError::InvalidParameter(
                "quadrature needs at least one node per stochastic cell".into(),
            ));
        }
        if let Some(f) = self.flux {
            f.validate()?;
        }
        Ok(())
    }

    pub fn flux_for(&self, gas: &GasConstants<T>) -> NumericalFluxChoice<T> {
        self.flux
            .unwrap_or_else(|| NumericalFluxChoice::lax_friedrichs(gas))
    }

    pub fn dx(&self, pipe: &PipeSpec<T>) -> T {
        pipe.length() / T::of_usize(self.cells)
    }
}

/// `Δt = CFL · Δx / a`.
pub fn cfl_timestep<T: Scalar>(disc: &PipeDiscretization<T>, pipe: &PipeSpec<T>, gas: &GasConstants<T>) -> T {
    disc.cfl * disc.dx(pipe) / gas.wave_speed()
}

/// Largest step not exceeding `dt` that divides `interval` into whole steps.
pub fn aligned_timestep<T: Scalar>(dt: T, interval: T) -> T {
    let steps = (interval / dt).ceil().max(T::one());
    interval / steps
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum PipeEnd {
    /// `x = 0`.
    Inlet,
    /// `x = L`.
    Outlet,
}

/// Boundary state at the inlet for prescribed density `s`: the left-going
/// invariant `rho − q/a` is taken from the interior.
pub fn inlet_ghost<T: Scalar>(interior: GasState<T>, density: T, gas: &GasConstants<T>) -> Result<GasState<T>> {
    if !(density > T::zero()) {
        return Err(SfvError::GhostDensity {
            side: "inlet",
            node: 0,
            rho: density.to_f64_lossy(),
        });
    }
    Ok(GasState {
        rho: density,
        q: interior.q + gas.wave_speed() * (density - interior.rho),
    })
}

/// Boundary state at the outlet for prescribed per-area flux `d`: the
/// right-going invariant `rho + q/a` is taken from the interior.
pub fn outlet_ghost<T: Scalar>(interior: GasState<T>, flux: T, gas: &GasConstants<T>) -> Result<GasState<T>> {
    let rho = interior.rho + (interior.q - flux) / gas.wave_speed();
    if !(rho > T::zero()) {
        return Err(SfvError::GhostDensity {
            side: "outlet",
            node: 0,
            rho: rho.to_f64_lossy(),
        });
    }
    Ok(GasState { rho, q: flux })
}

/// Cell averages of `profile(x, y)`: two-point Gauss in `x` and the
/// stochastic quadrature rule in `y`.
pub fn initial_cell_averages<T: Scalar>(
    length: T,
    cells: usize,
    rule: &QuadratureRule<T>,
    mut profile: impl FnMut(T, T) -> Result<GasState<T>>,
) -> Result<StochasticField<T>> {
    let dx = length / T::of_usize(cells);
    let ny = rule.cells();
    let mm = rule.nodes_per_cell();
    let offset = dx / (T::two() * T::of(3.0).sqrt());
    let mut rho = vec![T::zero(); cells * ny];
    let mut q = vec![T::zero(); cells * ny];
    let mut node_rho = vec![T::zero(); mm];
    let mut node_q = vec![T::zero(); mm];
    for j in 0..ny {
        let w = &rule.normalized_weights()[j * mm..(j + 1) * mm];
        for i in 0..cells {
            let xc = (T::of_usize(i) + T::half()) * dx;
            for m in 0..mm {
                let y = rule.node(j, m);
                let (a, b) = (profile(xc - offset, y)?, profile(xc + offset, y)?);
                node_rho[m] = T::half() * (a.rho + b.rho);
                node_q[m] = T::half() * (a.q + b.q);
            }
            rho[j * cells + i] = pivot_mean(&node_rho, w);
            q[j * cells + i] = pivot_mean(&node_q, w);
        }
    }
    StochasticField::new(cells, ny, dx, T::zero(), rho, q)
}

/// Steady initial state driven by inlet density `s0(y)` and flux `q0(y)`.
pub fn steady_initial_field<T: Scalar>(
    pipe: &PipeSpec<T>,
    gas: &GasConstants<T>,
    cells: usize,
    rule: &QuadratureRule<T>,
    s0: impl Fn(T) -> T,
    q0: impl Fn(T) -> T,
) -> Result<StochasticField<T>> {
    initial_cell_averages(pipe.length(), cells, rule, |x, y| {
        let flux = q0(y);
        Ok(GasState {
            rho: steady_density_profile(s0(y), flux, pipe, gas, x)?,
            q: flux,
        })
    })
}

/// Per-pipe discretization machinery with its scratch buffers.
#[derive(Debug, Clone)]
pub struct PipeKernel<T> {
    pipe: PipeSpec<T>,
    gas: GasConstants<T>,
    nx: usize,
    ny: usize,
    dx: T,
    order: ReconstructionOrder,
    flux: NumericalFluxChoice<T>,
    rule: QuadratureRule<T>,
    reconstructor: Reconstructor<T>,
    states: InterfaceStates<T>,
    fluxes: CellFluxes<T>,
    ghost_rho: [Vec<T>; 2],
    ghost_q: [Vec<T>; 2],
}

impl<T: Scalar> PipeKernel<T> {
    pub fn new(
        pipe: PipeSpec<T>,
        gas: GasConstants<T>,
        disc: &PipeDiscretization<T>,
        rule: QuadratureRule<T>,
    ) -> Result<Self> {
        disc.validate()?;
        if rule.nodes_per_cell() != disc.quadrature_nodes {
            return Err(SfvError::DimensionMismatch(format!(
                "rule has {} nodes per cell, discretization asks for {}",
                rule.nodes_per_cell(),
                disc.quadrature_nodes
            )));
        }
        let nx = disc.cells;
        let ny = rule.cells();
        let mm = rule.nodes_per_cell();
        Ok(Self {
            pipe,
            gas,
            nx,
            ny,
            dx: disc.dx(&pipe),
            order: disc.order,
            flux: disc.flux_for(&gas),
            reconstructor: Reconstructor::new(nx, ny, disc.order),
            states: InterfaceStates::zeros(nx, ny, mm),
            fluxes: CellFluxes::zeros(nx + 1, ny),
            ghost_rho: [vec![T::zero(); ny], vec![T::zero(); ny]],
            ghost_q: [vec![T::zero(); ny], vec![T::zero(); ny]],
            rule,
        })
    }

    pub fn pipe(&self) -> &PipeSpec<T> {
        &self.pipe
    }

    pub fn gas(&self) -> &GasConstants<T> {
        &self.gas
    }

    pub fn nx(&self) -> usize {
        self.nx
    }

    pub fn ny(&self) -> usize {
        self.ny
    }

    pub fn dx(&self) -> T {
        self.dx
    }

    pub fn order(&self) -> ReconstructionOrder {
        self.order
    }

    pub fn rule(&self) -> &QuadratureRule<T> {
        &self.rule
    }

    /// Length of this pipe's state vector.
    pub fn dimension(&self) -> usize {
        2 * self.nx * self.ny
    }

    fn end_index(end: PipeEnd) -> usize {
        match end {
            PipeEnd::Inlet => 0,
            PipeEnd::Outlet => 1,
        }
    }

    /// Cell average of the boundary cell at `end` in stochastic cell `j`.
    #[inline]
    pub fn edge_cell(&self, u: &[T], j: usize, end: PipeEnd) -> GasState<T> {
        let n = self.nx * self.ny;
        let i = match end {
            PipeEnd::Inlet => j * self.nx,
            PipeEnd::Outlet => j * self.nx + self.nx - 1,
        };
        GasState {
            rho: u[i],
            q: u[n + i],
        }
    }

    /// Estimate of the state at the pipe end from the cell averages of
    /// stochastic cell `j`: linear extrapolation from the two cells next to
    /// the end for second order, the boundary cell itself otherwise.
    #[inline]
    pub fn extrapolated_edge(&self, u: &[T], j: usize, end: PipeEnd) -> GasState<T> {
        let cell = self.edge_cell(u, j, end);
        if self.order == ReconstructionOrder::First || self.nx < 2 {
            return cell;
        }
        let n = self.nx * self.ny;
        let i = match end {
            PipeEnd::Inlet => j * self.nx + 1,
            PipeEnd::Outlet => j * self.nx + self.nx - 2,
        };
        let neighbor = GasState {
            rho: u[i],
            q: u[n + i],
        };
        let edge = cell + (cell - neighbor) * T::half();
        if edge.rho > T::zero() {
            edge
        } else {
            cell
        }
    }

    /// Sets the ghost value beyond `end` used for the boundary cell's slope.
    #[inline]
    pub fn set_ghost(&mut self, j: usize, end: PipeEnd, ghost: GasState<T>) {
        let e = Self::end_index(end);
        self.ghost_rho[e][j] = ghost.rho;
        self.ghost_q[e][j] = ghost.q;
    }

    /// Sets the ghost so that the boundary cell's linear profile reaches
    /// `star` at the pipe end.
    #[inline]
    pub fn set_ghost_from_star(&mut self, u: &[T], j: usize, end: PipeEnd, star: GasState<T>) {
        let cell = self.edge_cell(u, j, end);
        let ghost = match self.order {
            ReconstructionOrder::First => star,
            ReconstructionOrder::Second => star * T::two() - cell,
        };
        self.set_ghost(j, end, ghost);
    }

    pub fn reconstruct(&mut self, u: &[T]) {
        let n = self.nx * self.ny;
        let (rho, q) = u.split_at(n);
        self.reconstructor.reconstruct(
            rho,
            q,
            (&self.ghost_rho[0], &self.ghost_rho[1]),
            (&self.ghost_q[0], &self.ghost_q[1]),
            self.rule.offsets(),
            &mut self.states,
        );
    }

    /// Reconstructed interior-side state at `end` for node `(j, m)`.
    #[inline]
    pub fn edge_state(&self, j: usize, m: usize, end: PipeEnd) -> GasState<T> {
        match end {
            PipeEnd::Inlet => self.states.right(0, j, m),
            PipeEnd::Outlet => self.states.left(self.nx, j, m),
        }
    }

    /// Imposes the boundary state on both sides of the end interface, so the
    /// numerical flux there reduces to `F(star)`.
    #[inline]
    pub fn set_boundary_state(&mut self, j: usize, m: usize, end: PipeEnd, star: GasState<T>) {
        let k = match end {
            PipeEnd::Inlet => 0,
            PipeEnd::Outlet => self.nx,
        };
        self.states.set_left(k, j, m, star);
        self.states.set_right(k, j, m, star);
    }

    pub fn interface_states(&self) -> &InterfaceStates<T> {
        &self.states
    }

    /// Writes `−(F_{i+1/2} − F_{i−1/2}) / Δx` for every cell into `out`.
    pub fn divergence(&mut self, out: &mut [T]) -> Result<()> {
        stochastic_cell_flux_into(&self.states, &self.rule, self.flux, &self.gas, &mut self.fluxes)?;
        let nx = self.nx;
        let n1 = nx + 1;
        let n = nx * self.ny;
        let inv_dx = T::one() / self.dx;
        let (out_rho, out_q) = out.split_at_mut(n);
        for j in 0..self.ny {
            let fm = &self.fluxes.mass[j * n1..(j + 1) * n1];
            let fq = &self.fluxes.momentum[j * n1..(j + 1) * n1];
            let dr = &mut out_rho[j * nx..(j + 1) * nx];
            let dq = &mut out_q[j * nx..(j + 1) * nx];
            for (d, f) in dr.iter_mut().zip(fm.windows(2)) {
                *d = (f[0] - f[1]) * inv_dx;
            }
            for (d, f) in dq.iter_mut().zip(fq.windows(2)) {
                *d = (f[0] - f[1]) * inv_dx;
            }
        }
        Ok(())
    }

    /// Cell-averaged per-area mass flux through `end` in stochastic cell `j`
    /// from the last [`divergence`](Self::divergence) call.
    #[inline]
    pub fn boundary_mass_flux(&self, j: usize, end: PipeEnd) -> T {
        let k = match end {
            PipeEnd::Inlet => 0,
            PipeEnd::Outlet => self.nx,
        };
        self.fluxes.mass[j * (self.nx + 1) + k]
    }

    pub fn source(&self, u: &[T], out: &mut [T]) {
        let n = self.nx * self.ny;
        let c = self.pipe.friction_coefficient();
        let (rho, q) = u.split_at(n);
        let (out_rho, out_q) = out.split_at_mut(n);
        out_rho.fill(T::zero());
        for ((s, &q), &r) in out_q.iter_mut().zip(q).zip(rho) {
            *s = -c * q * q.abs() / r;
        }
    }

    /// Solves `q = q̃ − h c q|q|/rho` cell by cell; density is unchanged.
    pub fn implicit_solve(&self, rhs: &[T], h: T, out: &mut [T]) {
        let n = self.nx * self.ny;
        let hc = h * self.pipe.friction_coefficient();
        let (rhs_rho, rhs_q) = rhs.split_at(n);
        let (out_rho, out_q) = out.split_at_mut(n);
        out_rho.copy_from_slice(rhs_rho);
        if hc == T::zero() {
            out_q.copy_from_slice(rhs_q);
            return;
        }
        let four = T::of(4.0);
        for ((q, &qt), &rho) in out_q.iter_mut().zip(rhs_q).zip(rhs_rho) {
            let r = (four * hc / rho) * qt.abs();
            *q = T::two() * qt / (T::one() + (T::one() + r).sqrt());
        }
    }

    /// Stored mass `Σ_i rho_ij Δx X` of stochastic cell `j`.
    pub fn stored_mass(&self, u: &[T], j: usize) -> T {
        let row: T = u[j * self.nx..(j + 1) * self.nx].iter().copied().sum();
        row * self.dx * self.pipe.area()
    }

    /// First cell with non-positive or non-finite state, as `(i, j, rho)`.
    pub fn find_invalid(&self, u: &[T]) -> Option<(usize, usize, T)> {
        let n = self.nx * self.ny;
        let (rho, q) = u.split_at(n);
        // branch-free scan first; the locating search only runs on failure
        let inf = T::infinity();
        let mut bad = 0usize;
        for (&r, &q) in rho.iter().zip(q) {
            bad += usize::from(!((r > T::zero()) & (r < inf) & (q.abs() < inf)));
        }
        if bad == 0 {
            return None;
        }
        rho.iter()
            .zip(q)
            .position(|(r, q)| !(*r > T::zero()) || !r.is_finite() || !q.is_finite())
            .map(|k| (k % self.nx, k / self.nx, rho[k]))
    }

    pub fn to_field(&self, u: &[T], time: T) -> Result<StochasticField<T>> {
        let n = self.nx * self.ny;
        StochasticField::new(self.nx, self.ny, self.dx, time, u[..n].to_vec(), u[n..].to_vec())
    }

    pub fn load_field(&self, field: &StochasticField<T>, u: &mut [T]) -> Result<()> {
        if field.nx() != self.nx || field.ny() != self.ny {
            return Err(SfvError::DimensionMismatch(format!(
                "field is {} x {}, pipe expects {} x {}",
                field.nx(),
                field.ny(),
                self.nx,
                self.ny
            )));
        }
        let n = self.nx * self.ny;
        u[..n].copy_from_slice(field.rho());
        u[n..].copy_from_slice(field.q());
        Ok(())
    }
}

/// Inlet density `s(t, y)` and outlet per-area flux `d(t, y)` of a single pipe.
pub trait PipeBoundary<T> {
    /// Evaluates both boundary values at time `t` for every parameter value in `y`.
    fn evaluate(&self, t: T, y: &[T], inlet_density: &mut [T], outlet_flux: &mut [T]);
}

/// Boundary data given by two closures of `(t, y)`.
#[derive(Debug, Clone, Copy)]
pub struct FnBoundary<S, D> {
    pub inlet_density: S,
    pub outlet_flux: D,
}

impl<T: Scalar, S: Fn(T, T) -> T, D: Fn(T, T) -> T> PipeBoundary<T> for FnBoundary<S, D> {
    fn evaluate(&self, t: T, y: &[T], inlet_density: &mut [T], outlet_flux: &mut [T]) {
        for (k, &yy) in y.iter().enumerate() {
            inlet_density[k] = (self.inlet_density)(t, yy);
            outlet_flux[k] = (self.outlet_flux)(t, yy);
        }
    }
}

/// Boundary states at both ends of a pipe, one per stochastic quadrature node
/// (index `j * M + m`).
#[derive(Debug, Clone, PartialEq)]
pub struct EndStates<T> {
    pub inlet: Vec<GasState<T>>,
    pub outlet: Vec<GasState<T>>,
}

/// Per-stochastic-cell mass bookkeeping.
#[derive(Debug, Clone, PartialEq)]
pub struct MassBalance<T> {
    /// `M_j(t) − M_j(0)` in kg.
    pub stored_change: Vec<T>,
    /// Time-integrated net inflow in kg.
    pub net_inflow: Vec<T>,
    /// Initial stored mass per stochastic cell.
    pub initial: Vec<T>,
}

impl<T: Scalar> MassBalance<T> {
    /// `max_j |ΔM_j − inflow_j| / M_j(0)`.
    pub fn relative_error(&self) -> T {
        self.stored_change
            .iter()
            .zip(&self.net_inflow)
            .zip(&self.initial)
            .map(|((&dm, &f), &m0)| (dm - f).abs() / m0)
            .fold(T::zero(), T::max)
    }
}

struct PipeSystem<T, B> {
    kernel: PipeKernel<T>,
    boundary: B,
    node_density: Vec<T>,
    node_flux: Vec<T>,
    cell_density: Vec<T>,
    cell_flux: Vec<T>,
    stage_inflow: [Vec<T>; 2],
    stage_outflow: [Vec<T>; 2],
    inflow: Vec<T>,
    outflow: Vec<T>,
}

impl<T: Scalar, B: PipeBoundary<T>> PipeSystem<T, B> {
    /// Boundary pass and reconstruction: leaves the kernel's interface
    /// states ready for flux evaluation at time `t`.
    fn prepare(&mut self, u: &[T], t: T) -> Result<()> {
        let k = &mut self.kernel;
        let gas = *k.gas();
        let mm = k.rule().nodes_per_cell();
        self.boundary
            .evaluate(t, k.rule().nodes(), &mut self.node_density, &mut self.node_flux);
        k.rule().cell_averages_into(&self.node_density, &mut self.cell_density);
        k.rule().cell_averages_into(&self.node_flux, &mut self.cell_flux);
        for j in 0..k.ny() {
            let star = inlet_ghost(k.extrapolated_edge(u, j, PipeEnd::Inlet), self.cell_density[j], &gas)
                .map_err(|e| with_node(e, j * mm))?;
            k.set_ghost_from_star(u, j, PipeEnd::Inlet, star);
            let star = outlet_ghost(k.extrapolated_edge(u, j, PipeEnd::Outlet), self.cell_flux[j], &gas)
                .map_err(|e| with_node(e, j * mm))?;
            k.set_ghost_from_star(u, j, PipeEnd::Outlet, star);
        }
        k.reconstruct(u);
        for j in 0..k.ny() {
            for m in 0..mm {
                let node = j * mm + m;
                let star = inlet_ghost(k.edge_state(j, m, PipeEnd::Inlet), self.node_density[node], &gas)
                    .map_err(|e| with_node(e, node))?;
                k.set_boundary_state(j, m, PipeEnd::Inlet, star);
                let star = outlet_ghost(k.edge_state(j, m, PipeEnd::Outlet), self.node_flux[node], &gas)
                    .map_err(|e| with_node(e, node))?;
                k.set_boundary_state(j, m, PipeEnd::Outlet, star);
            }
        }
        Ok(())
    }
}

fn with_node(e: SfvError, node: usize) -> SfvError {
    match e {
        SfvError::GhostDensity { side, rho, .. } => SfvError::GhostDensity { side, node, rho },
        other => other,
    }
}

impl<T: Scalar, B: PipeBoundary<T>> ImexSystem<T> for PipeSystem<T, B> {
    fn dimension(&self) -> usize {
        self.kernel.dimension()
    }

    fn explicit(&mut self, u: &[T], t: T, stage: usize, out: &mut [T]) -> Result<()> {
        self.prepare(u, t)?;
        self.kernel.divergence(out)?;
        for j in 0..self.kernel.ny() {
            self.stage_inflow[stage][j] = self.kernel.boundary_mass_flux(j, PipeEnd::Inlet);
            self.stage_outflow[stage][j] = self.kernel.boundary_mass_flux(j, PipeEnd::Outlet);
        }
        Ok(())
    }

    fn source(&self, u: &[T], out: &mut [T]) {
        self.kernel.source(u, out);
    }

    fn implicit_solve(&self, rhs: &[T], h: T, out: &mut [T]) {
        self.kernel.implicit_solve(rhs, h, out);
    }

    fn end_step(&mut self, dt: T) {
        let w = T::half() * dt * self.kernel.pipe().area();
        for j in 0..self.kernel.ny() {
            self.inflow[j] += w * (self.stage_inflow[0][j] + self.stage_inflow[1][j]);
            self.outflow[j] += w * (self.stage_outflow[0][j] + self.stage_outflow[1][j]);
        }
    }
}

/// Single-pipe solver: density prescribed at the inlet, flux at the outlet.
pub struct PipeSolver<T, B> {
    system: PipeSystem<T, B>,
    integrator: ImexSsp2<T>,
    u: Vec<T>,
    time: T,
    dt: T,
    initial_mass: Vec<T>,
}

impl<T: Scalar, B: PipeBoundary<T>> PipeSolver<T, B> {
    pub fn new(
        pipe: PipeSpec<T>,
        gas: GasConstants<T>,
        disc: &PipeDiscretization<T>,
        grid: &StochasticGrid<T>,
        boundary: B,
        initial: &StochasticField<T>,
    ) -> Result<Self> {
        let rule = QuadratureRule::new(grid, disc.quadrature_nodes)?;
        let kernel = PipeKernel::new(pipe, gas, disc, rule)?;
        let mut u = vec![T::zero(); kernel.dimension()];
        kernel.load_field(initial, &mut u)?;
        if let Some((i, j, rho)) = kernel.find_invalid(&u) {
            return Err(SfvError::Positivity {
                pipe: 0,
                time: initial.time().to_f64_lossy(),
                cell: i,
                stochastic_cell: j,
                rho: rho.to_f64_lossy(),
            });
        }
        let ny = kernel.ny();
        let nodes = ny * disc.quadrature_nodes;
        let initial_mass = (0..ny).map(|j| kernel.stored_mass(&u, j)).collect();
        let dt = cfl_timestep(disc, &pipe, &gas);
        let dim = kernel.dimension();
        Ok(Self {
            system: PipeSystem {
                kernel,
                boundary,
                node_density: vec![T::zero(); nodes],
                node_flux: vec![T::zero(); nodes],
                cell_density: vec![T::zero(); ny],
                cell_flux: vec![T::zero(); ny],
                stage_inflow: [vec![T::zero(); ny], vec![T::zero(); ny]],
                stage_outflow: [vec![T::zero(); ny], vec![T::zero(); ny]],
                inflow: vec![T::zero(); ny],
                outflow: vec![T::zero(); ny],
            },
            integrator: ImexSsp2::new(dim),
            u,
            time: initial.time(),
            dt,
            initial_mass,
        })
    }

    pub fn time(&self) -> T {
        self.time
    }

    /// CFL-limited step size.
    pub fn timestep(&self) -> T {
        self.dt
    }

    pub fn kernel(&self) -> &PipeKernel<T> {
        &self.system.kernel
    }

    pub fn boundary(&self) -> &B {
        &self.system.boundary
    }

    pub fn state(&self) -> &[T] {
        &self.u
    }

    pub fn field(&self) -> Result<StochasticField<T>> {
        self.system.kernel.to_field(&self.u, self.time)
    }

    /// Semi-discrete right-hand side `H(U, t) + S(U)` of the current state.
    pub fn semi_discrete_rhs(&mut self) -> Result<StochasticField<T>> {
        let dim = self.system.kernel.dimension();
        let mut h = vec![T::zero(); dim];
        let mut s = vec![T::zero(); dim];
        self.system.prepare(&self.u, self.time)?;
        self.system.kernel.divergence(&mut h)?;
        self.system.kernel.source(&self.u, &mut s);
        for (a, b) in h.iter_mut().zip(&s) {
            *a += *b;
        }
        self.system.kernel.to_field(&h, self.time)
    }

    pub fn step(&mut self, dt: T) -> Result<()> {
        self.integrator
            .step(&mut self.system, &mut self.u, self.time, dt)?;
        self.time += dt;
        if let Some((i, j, rho)) = self.system.kernel.find_invalid(&self.u) {
            return Err(SfvError::Positivity {
                pipe: 0,
                time: self.time.to_f64_lossy(),
                cell: i,
                stochastic_cell: j,
                rho: rho.to_f64_lossy(),
            });
        }
        Ok(())
    }

    /// Takes `steps` steps of size `dt`.
    pub fn advance(&mut self, steps: usize, dt: T) -> Result<()> {
        for _ in 0..steps {
            self.step(dt)?;
        }
        Ok(())
    }

    /// Boundary states at both ends for the current state and time.
    pub fn end_states(&mut self) -> Result<EndStates<T>> {
        self.system.prepare(&self.u, self.time)?;
        let k = &self.system.kernel;
        let mm = k.rule().nodes_per_cell();
        let mut inlet = Vec::with_capacity(k.ny() * mm);
        let mut outlet = Vec::with_capacity(k.ny() * mm);
        let n1 = k.nx();
        for j in 0..k.ny() {
            for m in 0..mm {
                inlet.push(k.interface_states().left(0, j, m));
                outlet.push(k.interface_states().right(n1, j, m));
            }
        }
        Ok(EndStates { inlet, outlet })
    }

    pub fn mass_balance(&self) -> MassBalance<T> {
        let k = &self.system.kernel;
        let ny = k.ny();
        MassBalance {
            stored_change: (0..ny)
                .map(|j| k.stored_mass(&self.u, j) - self.initial_mass[j])
                .collect(),
            net_inflow: (0..ny)
                .map(|j| self.system.inflow[j] - self.system.outflow[j])
                .collect(),
            initial: self.initial_mass.clone(),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::stochastic_grid::RandomParameter;
    use approx::assert_relative_eq;

    fn gas(a: f64) -> GasConstants<f64> {
        GasConstants::new(a).unwrap()
    }

    #[test]
    fn timestep_examples() {
        let pipe = PipeSpec::new(1.0, 0.5, 0.0).unwrap();
        let d = PipeDiscretization::new(1, ReconstructionOrder::Second, 0.5, 2).unwrap();
        assert_eq!(cfl_timestep(&d, &pipe, &gas(1.0)), 0.5);

        let pipe = PipeSpec::new(1e5, 0.5, 0.011).unwrap();
        let d = PipeDiscretization::new(200, ReconstructionOrder::Second, 0.9, 2).unwrap();
        assert_relative_eq!(cfl_timestep(&d, &pipe, &gas(377.9683)), 1.190575, max_relative = 1e-6);
        let d = PipeDiscretization::new(4, ReconstructionOrder::Second, 1.0, 2).unwrap();
        assert_relative_eq!(cfl_timestep(&d, &pipe, &gas(377.9683)), 66.1431, max_relative = 1e-5);

        assert!(PipeDiscretization::<f64>::new(0, ReconstructionOrder::First, 0.5, 1).is_err());
        assert!(PipeDiscretization::<f64>::new(4, ReconstructionOrder::First, 1.5, 1).is_err());
        assert_eq!(aligned_timestep(0.7, 60.0), 60.0 / 86.0);
        assert_eq!(aligned_timestep(100.0, 60.0), 60.0);
    }

    #[test]
    fn ghost_examples() {
        let g = gas(1.0);
        let interior = GasState { rho: 2.0, q: 1.0 };
        assert_eq!(inlet_ghost(interior, 2.0, &g).unwrap(), GasState { rho: 2.0, q: 1.0 });
        assert_eq!(outlet_ghost(interior, 0.0, &g).unwrap(), GasState { rho: 3.0, q: 0.0 });
        assert_eq!(outlet_ghost(interior, 1.0, &g).unwrap(), interior);
        assert!(inlet_ghost(interior, 0.0, &g).is_err());
        assert!(outlet_ghost(interior, 5.0, &g).is_err());
    }

    #[test]
    fn initial_averages() {
        let grid = StochasticGrid::build(RandomParameter::uniform(0.0, 1.0, "y").unwrap(), 3).unwrap();
        let rule = QuadratureRule::new(&grid, 2).unwrap();
        let f = initial_cell_averages(10.0, 5, &rule, |_, _| Ok(GasState { rho: 7.0, q: 1.0 })).unwrap();
        assert!(f.rho().iter().all(|&r: &f64| (r - 7.0).abs() < 1e-14));
        let f = initial_cell_averages(10.0, 5, &rule, |x, _| Ok(GasState { rho: 1.0 + x, q: -x })).unwrap();
        for i in 0..5 {
            assert_relative_eq!(f.get(i, 1).rho, 1.0 + 2.0 * i as f64 + 1.0, max_relative = 1e-14);
            assert_relative_eq!(f.get(i, 2).q, -(2.0 * i as f64 + 1.0), max_relative = 1e-14);
        }
    }
}

//! Numerical fluxes at physical interfaces and their average over each
//! stochastic cell.

use crate::error::{Result, SfvError};
use crate::gas_model::{physical_flux, Flux, GasConstants, GasState};
use crate::reconstruction::InterfaceStates;
use crate::scalar::Scalar;
use crate::stochastic_grid::QuadratureRule;

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum NumericalFluxChoice<T> {
    LaxFriedrichs { viscosity: T },
    /// Exact solution of the linear Riemann problem.
    GodunovLinear,
}

impl<T: Scalar> NumericalFluxChoice<T> {
    /// Lax–Friedrichs with viscosity equal to the wave speed.
    pub fn lax_friedrichs(gas: &GasConstants<T>) -> Self {
        Self::LaxFriedrichs {
            viscosity: gas.wave_speed(),
        }
    }

    pub fn validate(&self) -> Result<()> {
        match *self {
            Self::LaxFriedrichs { viscosity } if !(viscosity > T::zero()) => {
                Err(SfvError::InvalidParameter(format!(
                    "Lax-Friedrichs viscosity must be positive, got {viscosity}"
                )))
            }
            _ => Ok(()),
        }
    }

    #[inline]
    pub fn evaluate(&self, left: GasState<T>, right: GasState<T>, gas: &GasConstants<T>) -> Flux<T> {
        match *self {
            Self::LaxFriedrichs { viscosity } => {
                lax_friedrichs_with_viscosity(left, right, gas, viscosity)
            }
            Self::GodunovLinear => godunov_linear(left, right, gas),
        }
    }
}

/// `½(F(U_L) + F(U_R)) − (ν/2)(U_R − U_L)`.
#[inline]
pub fn lax_friedrichs_with_viscosity<T: Scalar>(
    left: GasState<T>,
    right: GasState<T>,
    gas: &GasConstants<T>,
    viscosity: T,
) -> Flux<T> {
    let fl = physical_flux(left, gas);
    let fr = physical_flux(right, gas);
    let h = T::half();
    Flux {
        mass: h * (fl.mass + fr.mass) - h * viscosity * (right.rho - left.rho),
        momentum: h * (fl.momentum + fr.momentum) - h * viscosity * (right.q - left.q),
    }
}

/// Lax–Friedrichs flux with `ν = a`.
#[inline]
pub fn lax_friedrichs<T: Scalar>(left: GasState<T>, right: GasState<T>, gas: &GasConstants<T>) -> Flux<T> {
    lax_friedrichs_with_viscosity(left, right, gas, gas.wave_speed())
}

/// Star state of the linear Riemann problem: `I1` carried from the left, `I2` from the right.
#[inline]
pub fn linear_star_state<T: Scalar>(left: GasState<T>, right: GasState<T>, gas: &GasConstants<T>) -> GasState<T> {
    let a = gas.wave_speed();
    let h = T::half();
    GasState {
        rho: h * (left.rho + right.rho) + (left.q - right.q) / (T::two() * a),
        q: h * (left.q + right.q) + h * a * (left.rho - right.rho),
    }
}

#[inline]
pub fn godunov_linear<T: Scalar>(left: GasState<T>, right: GasState<T>, gas: &GasConstants<T>) -> Flux<T> {
    physical_flux(linear_star_state(left, right, gas), gas)
}

/// Flux averaged over each stochastic cell, stored with index `j * (nx + 1) + k`.
#[derive(Debug, Clone, PartialEq)]
pub struct CellFluxes<T> {
    interfaces: usize,
    pub mass: Vec<T>,
    pub momentum: Vec<T>,
}

impl<T: Scalar> CellFluxes<T> {
    pub fn zeros(interfaces: usize, ny: usize) -> Self {
        Self {
            interfaces,
            mass: vec![T::zero(); interfaces * ny],
            momentum: vec![T::zero(); interfaces * ny],
        }
    }

    pub fn interfaces(&self) -> usize {
        self.interfaces
    }

    pub fn get(&self, k: usize, j: usize) -> Flux<T> {
        let n = j * self.interfaces + k;
        Flux {
            mass: self.mass[n],
            momentum: self.momentum[n],
        }
    }
}

/// `F^j_{k} = (1/|Δy_j|) Σ_m F̂(Ũ^{L,m}_k, Ũ^{R,m}_k) w_m`.
pub fn stochastic_cell_flux<T: Scalar>(
    states: &InterfaceStates<T>,
    rule: &QuadratureRule<T>,
    choice: NumericalFluxChoice<T>,
    gas: &GasConstants<T>,
) -> Result<CellFluxes<T>> {
    let mut out = CellFluxes::zeros(states.interfaces(), states.ny());
    stochastic_cell_flux_into(states, rule, choice, gas, &mut out)?;
    Ok(out)
}

pub fn stochastic_cell_flux_into<T: Scalar>(
    states: &InterfaceStates<T>,
    rule: &QuadratureRule<T>,
    choice: NumericalFluxChoice<T>,
    gas: &GasConstants<T>,
    out: &mut CellFluxes<T>,
) -> Result<()> {
    if states.ny() != rule.cells() || states.nodes_per_cell() != rule.nodes_per_cell() {
        return Err(SfvError::DimensionMismatch(format!(
            "interface states carry {} x {} nodes, rule has {} x {}",
            states.ny(),
            states.nodes_per_cell(),
            rule.cells(),
            rule.nodes_per_cell()
        )));
    }
    if out.interfaces != states.interfaces() || out.mass.len() != states.interfaces() * states.ny() {
        return Err(SfvError::DimensionMismatch(
            "flux buffer does not match interface states".into(),
        ));
    }
    let n1 = states.interfaces();
    let mm = rule.nodes_per_cell();
    let a = gas.wave_speed();
    let a2 = a * a;
    let h = T::half();
    let weights = rule.normalized_weights();
    // The first node's flux is taken whole and the other nodes enter as
    // weighted deviations from it, so identical node states average exactly.
    for j in 0..states.ny() {
        let fm = &mut out.mass[j * n1..(j + 1) * n1];
        let fq = &mut out.momentum[j * n1..(j + 1) * n1];
        let base0 = j * mm * n1;
        let rl0 = &states.rho_left[base0..base0 + n1];
        let ql0 = &states.q_left[base0..base0 + n1];
        let rr0 = &states.rho_right[base0..base0 + n1];
        let qr0 = &states.q_right[base0..base0 + n1];
        match choice {
            NumericalFluxChoice::LaxFriedrichs { viscosity: nu } => {
                let lanes = fm.iter_mut().zip(fq.iter_mut()).zip(rl0.iter().zip(ql0)).zip(rr0.iter().zip(qr0));
                for (((m, q), (&rl, &ql)), (&rr, &qr)) in lanes {
                    *m = h * ((ql + qr) - nu * (rr - rl));
                    *q = h * (a2 * (rl + rr) - nu * (qr - ql));
                }
                for m in 1..mm {
                    let hw = h * weights[j * mm + m];
                    let base = (j * mm + m) * n1;
                    let rl = &states.rho_left[base..base + n1];
                    let ql = &states.q_left[base..base + n1];
                    let rr = &states.rho_right[base..base + n1];
                    let qr = &states.q_right[base..base + n1];
                    for k in 0..n1 {
                        let mass0 = (ql0[k] + qr0[k]) - nu * (rr0[k] - rl0[k]);
                        let mom0 = a2 * (rl0[k] + rr0[k]) - nu * (qr0[k] - ql0[k]);
                        fm[k] += hw * (((ql[k] + qr[k]) - nu * (rr[k] - rl[k])) - mass0);
                        fq[k] += hw * ((a2 * (rl[k] + rr[k]) - nu * (qr[k] - ql[k])) - mom0);
                    }
                }
            }
            NumericalFluxChoice::GodunovLinear => {
                let node = |base: usize, k: usize| {
                    godunov_linear(
                        GasState { rho: states.rho_left[base + k], q: states.q_left[base + k] },
                        GasState { rho: states.rho_right[base + k], q: states.q_right[base + k] },
                        gas,
                    )
                };
                for k in 0..n1 {
                    let f0 = node(base0, k);
                    let (mut mass, mut momentum) = (f0.mass, f0.momentum);
                    for m in 1..mm {
                        let w = weights[j * mm + m];
                        let f = node((j * mm + m) * n1, k);
                        mass += w * (f.mass - f0.mass);
                        momentum += w * (f.momentum - f0.momentum);
                    }
                    fm[k] = mass;
                    fq[k] = momentum;
                }
            }
        }
    }
    Ok(())
}

//! Junction Riemann problem: couples the boundary states of all pipes
//! meeting at a node through pressure compatibility and flow conservation.
//!
//! Unknowns are the starred states `(ρ*_k, q*_k)` of the `K` adjacent edges
//! plus the nodal density `ρ_node`, giving the `(2K + 1)` equations
//!
//! ```text
//! incoming k:  ρ*_k + q*_k / a = ρ_k + q_k / a
//! outgoing k:  ρ*_k − q*_k / a = ρ_k − q_k / a
//! every k:     ρ*_k = α_k ρ_node
//! node:        Σ_in X_k q*_k − Σ_out X_k q*_k = d
//! ```

use crate::error::{Result, SfvError};
use crate::gas_model::{GasConstants, GasState};
use crate::network::topology::Orientation;
use crate::scalar::Scalar;

/// Boundary data of one edge at a junction.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct JunctionEdge<T> {
    /// Boundary-extrapolated state of the pipe at this node.
    pub state: GasState<T>,
    pub orientation: Orientation,
    /// Cross-section `X_k` in m².
    pub area: T,
    /// Compressor ratio `α_k`, 1 without compressor.
    pub ratio: T,
}

#[derive(Debug, Clone, PartialEq)]
pub struct JunctionSolution<T> {
    /// Starred state per edge, in the order the edges were given.
    pub stars: Vec<GasState<T>>,
    pub node_density: T,
}

/// Dense elimination workspace reused across solves.
#[derive(Debug, Clone, Default)]
pub struct JunctionSolver<T> {
    matrix: Vec<T>,
    rhs: Vec<T>,
}

fn check_edges<T: Scalar>(node: usize, edges: &[JunctionEdge<T>]) -> Result<()> {
    if edges.is_empty() {
        return Err(SfvError::InvalidParameter(format!("junction at node {node} has no edges")));
    }
    for e in edges {
        if !e.state.is_finite() || !(e.state.rho > T::zero()) {
            return Err(SfvError::InvalidState {
                rho: e.state.rho.to_f64_lossy(),
            });
        }
        if !(e.ratio > T::zero()) || !(e.area > T::zero()) {
            return Err(SfvError::InvalidParameter(format!(
                "junction at node {node}: ratio {} and area {} must be positive",
                e.ratio, e.area
            )));
        }
    }
    Ok(())
}

/// Right-hand side of the characteristic equation of an edge.
#[inline]
fn outgoing_characteristic<T: Scalar>(e: &JunctionEdge<T>, a: T) -> T {
    match e.orientation {
        Orientation::Incoming => e.state.rho + e.state.q / a,
        Orientation::Outgoing => e.state.rho - e.state.q / a,
    }
}

#[inline]
fn sign<T: Scalar>(o: Orientation) -> T {
    match o {
        Orientation::Incoming => T::one(),
        Orientation::Outgoing => -T::one(),
    }
}

impl<T: Scalar> JunctionSolver<T> {
    pub fn new() -> Self {
        Self {
            matrix: Vec::new(),
            rhs: Vec::new(),
        }
    }

    fn assemble(&mut self, edges: &[JunctionEdge<T>], gas: &GasConstants<T>, withdrawal: T) {
        let k = edges.len();
        let n = 2 * k + 1;
        let a = gas.wave_speed();
        self.matrix.clear();
        self.matrix.resize(n * n, T::zero());
        self.rhs.clear();
        self.rhs.resize(n, T::zero());
        let m = &mut self.matrix;
        for (e, edge) in edges.iter().enumerate() {
            let (r, q) = (2 * e, 2 * e + 1);
            let s = sign::<T>(edge.orientation);
            // characteristic leaving the pipe
            m[r * n + r] = T::one();
            m[r * n + q] = s / a;
            self.rhs[r] = outgoing_characteristic(edge, a);
            // pressure compatibility
            m[q * n + r] = T::one();
            m[q * n + n - 1] = -edge.ratio;
            // conservation
            m[(n - 1) * n + q] = s * edge.area;
        }
        self.rhs[n - 1] = withdrawal;
    }

    /// Gaussian elimination with partial pivoting; the solution replaces `rhs`.
    fn eliminate(&mut self) {
        let n = self.rhs.len();
        let (m, b) = (&mut self.matrix, &mut self.rhs);
        for col in 0..n {
            let mut pivot = col;
            for row in col + 1..n {
                if m[row * n + col].abs() > m[pivot * n + col].abs() {
                    pivot = row;
                }
            }
            assert!(m[pivot * n + col] != T::zero(), "junction system is singular");
            if pivot != col {
                for c in 0..n {
                    m.swap(col * n + c, pivot * n + c);
                }
                b.swap(col, pivot);
            }
            let inv = T::one() / m[col * n + col];
            for row in col + 1..n {
                let f = m[row * n + col] * inv;
                if f == T::zero() {
                    continue;
                }
                for c in col..n {
                    let v = m[col * n + c];
                    m[row * n + c] -= f * v;
                }
                let v = b[col];
                b[row] -= f * v;
            }
        }
        for row in (0..n).rev() {
            let mut acc = b[row];
            for c in row + 1..n {
                acc -= m[row * n + c] * b[c];
            }
            b[row] = acc / m[row * n + row];
        }
    }

    /// Solves the junction problem at a withdrawal node, writing one starred
    /// state per edge into `stars` and returning `ρ_node`.
    pub fn solve(
        &mut self,
        node: usize,
        edges: &[JunctionEdge<T>],
        gas: &GasConstants<T>,
        withdrawal: T,
        stars: &mut [GasState<T>],
    ) -> Result<T> {
        check_edges(node, edges)?;
        self.assemble(edges, gas, withdrawal);
        self.eliminate();
        let n = self.rhs.len();
        let rho = self.rhs[n - 1];
        if !(rho > T::zero()) {
            return Err(SfvError::UnphysicalJunction {
                node,
                rho: rho.to_f64_lossy(),
            });
        }
        for (e, star) in stars.iter_mut().enumerate().take(edges.len()) {
            *star = GasState {
                rho: self.rhs[2 * e],
                q: self.rhs[2 * e + 1],
            };
        }
        Ok(rho)
    }
}

/// Starred states at a node of prescribed pressure: `ρ_node = σ / a²`, each
/// edge matched through its own characteristic. Returns `ρ_node`.
pub fn slack_solve_into<T: Scalar>(
    node: usize,
    edges: &[JunctionEdge<T>],
    gas: &GasConstants<T>,
    pressure: T,
    stars: &mut [GasState<T>],
) -> Result<T> {
    check_edges(node, edges)?;
    let a = gas.wave_speed();
    let rho = pressure / (a * a);
    if !(rho > T::zero()) {
        return Err(SfvError::UnphysicalJunction {
            node,
            rho: rho.to_f64_lossy(),
        });
    }
    for (edge, star) in edges.iter().zip(stars.iter_mut()) {
        let rho_star = edge.ratio * rho;
        let q = match edge.orientation {
            Orientation::Incoming => edge.state.q + a * (edge.state.rho - rho_star),
            Orientation::Outgoing => edge.state.q + a * (rho_star - edge.state.rho),
        };
        *star = GasState { rho: rho_star, q };
    }
    Ok(rho)
}

/// Junction solve at a withdrawal node with `d` in kg/s.
pub fn junction_solve<T: Scalar>(
    node: usize,
    edges: &[JunctionEdge<T>],
    gas: &GasConstants<T>,
    withdrawal: T,
) -> Result<JunctionSolution<T>> {
    let mut stars = vec![GasState::default(); edges.len()];
    let node_density = JunctionSolver::new().solve(node, edges, gas, withdrawal, &mut stars)?;
    Ok(JunctionSolution { stars, node_density })
}

/// Junction solve at a node with prescribed pressure `σ` in Pa.
pub fn slack_node_solve<T: Scalar>(
    node: usize,
    edges: &[JunctionEdge<T>],
    gas: &GasConstants<T>,
    pressure: T,
) -> Result<JunctionSolution<T>> {
    let mut stars = vec![GasState::default(); edges.len()];
    let node_density = slack_solve_into(node, edges, gas, pressure, &mut stars)?;
    Ok(JunctionSolution { stars, node_density })
}

/// Largest absolute residual of the `2K + 1` junction equations at `solution`.
pub fn junction_residual<T: Scalar>(
    edges: &[JunctionEdge<T>],
    gas: &GasConstants<T>,
    withdrawal: T,
    solution: &JunctionSolution<T>,
) -> T {
    let a = gas.wave_speed();
    let mut worst = T::zero();
    let mut balance = -withdrawal;
    for (edge, star) in edges.iter().zip(&solution.stars) {
        let s = sign::<T>(edge.orientation);
        let characteristic = star.rho + s * star.q / a - outgoing_characteristic(edge, a);
        let compatibility = star.rho - edge.ratio * solution.node_density;
        worst = worst.max(characteristic.abs()).max(compatibility.abs());
        balance += s * edge.area * star.q;
    }
    worst.max(balance.abs())
}

/// Net mass rate `Σ_in X q* − Σ_out X q*` into the node, in kg/s.
pub fn net_inflow<T: Scalar>(edges: &[JunctionEdge<T>], stars: &[GasState<T>]) -> T {
    edges
        .iter()
        .zip(stars)
        .map(|(e, s)| sign::<T>(e.orientation) * e.area * s.q)
        .fold(T::zero(), |acc, v| acc + v)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::flux::linear_star_state;
    use approx::assert_relative_eq;

    fn edge(rho: f64, q: f64, orientation: Orientation) -> JunctionEdge<f64> {
        JunctionEdge {
            state: GasState { rho, q },
            orientation,
            area: 1.0,
            ratio: 1.0,
        }
    }

    #[test]
    fn consistent_data_is_kept() {
        let gas = GasConstants::new(1.0).unwrap();
        let edges = [edge(2.0, 0.5, Orientation::Incoming), edge(2.0, 0.5, Orientation::Outgoing)];
        let sol = junction_solve(0, &edges, &gas, 0.0).unwrap();
        for s in &sol.stars {
            assert_relative_eq!(s.rho, 2.0, max_relative = 1e-15);
            assert_relative_eq!(s.q, 0.5, max_relative = 1e-15);
        }
    }

    #[test]
    fn two_pipe_junction_is_the_riemann_star_state() {
        let gas = GasConstants::new(3.0).unwrap();
        let left = GasState { rho: 4.0, q: 1.0 };
        let right = GasState { rho: 2.5, q: -0.5 };
        let edges = [
            JunctionEdge {
                state: left,
                ..edge(0.0, 0.0, Orientation::Incoming)
            },
            JunctionEdge {
                state: right,
                ..edge(0.0, 0.0, Orientation::Outgoing)
            },
        ];
        let sol = junction_solve(0, &edges, &gas, 0.0).unwrap();
        let star = linear_star_state(left, right, &gas);
        for s in &sol.stars {
            assert_relative_eq!(s.rho, star.rho, max_relative = 1e-14);
            assert_relative_eq!(s.q, star.q, max_relative = 1e-14);
        }
    }

    #[test]
    fn slack_example() {
        let gas = GasConstants::new(1.0).unwrap();
        let sol = slack_node_solve(0, &[edge(1.0, 0.0, Orientation::Outgoing)], &gas, 2.0).unwrap();
        assert_eq!(sol.node_density, 2.0);
        assert_eq!(sol.stars[0], GasState { rho: 2.0, q: 1.0 });
    }

    #[test]
    fn negative_node_density_is_reported() {
        let gas = GasConstants::new(1.0).unwrap();
        let err = junction_solve(4, &[edge(1.0, 0.0, Orientation::Incoming)], &gas, 5.0).unwrap_err();
        assert!(matches!(err, SfvError::UnphysicalJunction { node: 4, .. }));
    }
}

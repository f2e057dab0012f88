//! Minmod-limited linear reconstruction, first along the pipe and then
//! across stochastic cells, evaluated at the stochastic quadrature nodes.
//!
//! Slopes are kept undivided (`Δx·σ`), so a cell's face values are
//! `U ± σ/2` and a stochastic node at relative offset `ξ − 1/2` sees
//! `U + (ξ − 1/2)·σ`.

use crate::error::{Result, SfvError};
use crate::gas_model::GasState;
use crate::scalar::Scalar;
use crate::stochastic_grid::QuadratureRule;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Default)]
pub enum ReconstructionOrder {
    /// Piecewise constant: face values are the cell averages.
    First,
    /// Minmod-limited piecewise linear.
    #[default]
    Second,
}

impl ReconstructionOrder {
    pub fn from_order(order: u32) -> Result<Self> {
        match order {
            1 => Ok(Self::First),
            2 => Ok(Self::Second),
            other => Err(SfvError::InvalidParameter(format!(
                "reconstruction order must be 1 or 2, got {other}"
            ))),
        }
    }

    pub fn as_order(self) -> u32 {
        match self {
            Self::First => 1,
            Self::Second => 2,
        }
    }
}

#[inline(always)]
pub fn minmod<T: Scalar>(a: T, b: T) -> T {
    if a * b <= T::zero() {
        T::zero()
    } else if a.abs() < b.abs() {
        a
    } else {
        b
    }
}
#[inline(always)]
fn minmod_state<T: Scalar>(a: GasState<T>, b: GasState<T>) -> GasState<T> {
    GasState {
        rho: minmod(a.rho, b.rho),
        q: minmod(a.q, b.q),
    }
}

/// Result of reconstructing one row of cells along the pipe.
#[derive(Debug, Clone, PartialEq)]
pub struct RowReconstruction<T> {
    /// Undivided limited slope per cell.
    pub slopes: Vec<GasState<T>>,
    /// State on the left of each of the `nx + 1` interfaces.
    pub left: Vec<GasState<T>>,
    /// State on the right of each of the `nx + 1` interfaces.
    pub right: Vec<GasState<T>>,
}

/// Reconstructs a row of cell averages with one ghost layer at each end.
/// The outermost interfaces see the ghost value on their exterior side.
pub fn reconstruct_x<T: Scalar>(
    row: &[GasState<T>],
    ghost_left: GasState<T>,
    ghost_right: GasState<T>,
    order: ReconstructionOrder,
) -> Result<RowReconstruction<T>> {
    let nx = row.len();
    if nx == 0 {
        return Err(SfvError::DimensionMismatch("empty row".into()));
    }
    let zero = GasState {
        rho: T::zero(),
        q: T::zero(),
    };
    let mut slopes = vec![zero; nx];
    let mut left = vec![ghost_left; nx + 1];
    let mut right = vec![ghost_right; nx + 1];
    for i in 0..nx {
        let prev = if i == 0 { ghost_left } else { row[i - 1] };
        let next = if i + 1 == nx { ghost_right } else { row[i + 1] };
        if order == ReconstructionOrder::Second {
            slopes[i] = minmod_state(row[i] - prev, next - row[i]);
        }
        left[i + 1] = row[i] + slopes[i] * T::half();
        right[i] = row[i] - slopes[i] * T::half();
    }
    Ok(RowReconstruction {
        slopes,
        left,
        right,
    })
}

/// Reconstructs values across stochastic cells (one value per cell, at a
/// fixed interface side) and evaluates them at the rule's nodes, returning
/// `ny · M` states ordered `j * M + m`.
pub fn reconstruct_y<T: Scalar>(
    values: &[GasState<T>],
    rule: &QuadratureRule<T>,
    order: ReconstructionOrder,
) -> Result<Vec<GasState<T>>> {
    let ny = values.len();
    if ny != rule.cells() {
        return Err(SfvError::DimensionMismatch(format!(
            "{ny} stochastic values for a rule over {} cells",
            rule.cells()
        )));
    }
    let mut out = Vec::with_capacity(ny * rule.nodes_per_cell());
    for j in 0..ny {
        let slope = if order == ReconstructionOrder::First || j == 0 || j + 1 == ny {
            GasState {
                rho: T::zero(),
                q: T::zero(),
            }
        } else {
            minmod_state(values[j] - values[j - 1], values[j + 1] - values[j])
        };
        for &off in rule.offsets() {
            out.push(values[j] + slope * off);
        }
    }
    Ok(out)
}

/// Left/right states at every physical interface and stochastic node,
/// stored component-wise with index `(j * M + m) * (nx + 1) + k`.
#[derive(Debug, Clone, PartialEq)]
pub struct InterfaceStates<T> {
    nx: usize,
    ny: usize,
    nodes_per_cell: usize,
    pub rho_left: Vec<T>,
    pub q_left: Vec<T>,
    pub rho_right: Vec<T>,
    pub q_right: Vec<T>,
}

impl<T: Scalar> InterfaceStates<T> {
    pub fn zeros(nx: usize, ny: usize, nodes_per_cell: usize) -> Self {
        let n = (nx + 1) * ny * nodes_per_cell;
        Self {
            nx,
            ny,
            nodes_per_cell,
            rho_left: vec![T::zero(); n],
            q_left: vec![T::zero(); n],
            rho_right: vec![T::zero(); n],
            q_right: vec![T::zero(); n],
        }
    }

    pub fn nx(&self) -> usize {
        self.nx
    }

    pub fn ny(&self) -> usize {
        self.ny
    }

    pub fn nodes_per_cell(&self) -> usize {
        self.nodes_per_cell
    }

    pub fn interfaces(&self) -> usize {
        self.nx + 1
    }

    #[inline]
    pub fn index(&self, k: usize, j: usize, m: usize) -> usize {
        (j * self.nodes_per_cell + m) * (self.nx + 1) + k
    }

    pub fn left(&self, k: usize, j: usize, m: usize) -> GasState<T> {
        let n = self.index(k, j, m);
        GasState {
            rho: self.rho_left[n],
            q: self.q_left[n],
        }
    }

    pub fn right(&self, k: usize, j: usize, m: usize) -> GasState<T> {
        let n = self.index(k, j, m);
        GasState {
            rho: self.rho_right[n],
            q: self.q_right[n],
        }
    }

    pub fn set_left(&mut self, k: usize, j: usize, m: usize, u: GasState<T>) {
        let n = self.index(k, j, m);
        self.rho_left[n] = u.rho;
        self.q_left[n] = u.q;
    }

    pub fn set_right(&mut self, k: usize, j: usize, m: usize, u: GasState<T>) {
        let n = self.index(k, j, m);
        self.rho_right[n] = u.rho;
        self.q_right[n] = u.q;
    }

    pub fn all_finite(&self) -> bool {
        [&self.rho_left, &self.q_left, &self.rho_right, &self.q_right]
            .iter()
            .all(|v| v.iter().all(|x| x.is_finite()))
    }
}

/// Allocation-free reconstruction of a whole field, reusing scratch buffers
/// between calls. Works on one component slice at a time.
#[derive(Debug, Clone)]
pub struct Reconstructor<T> {
    nx: usize,
    ny: usize,
    order: ReconstructionOrder,
    face_left: Vec<T>,
    face_right: Vec<T>,
    slope: Vec<T>,
}

impl<T: Scalar> Reconstructor<T> {
    pub fn new(nx: usize, ny: usize, order: ReconstructionOrder) -> Self {
        Self {
            nx,
            ny,
            order,
            face_left: vec![T::zero(); ny * (nx + 1)],
            face_right: vec![T::zero(); ny * (nx + 1)],
            slope: vec![T::zero(); nx + 1],
        }
    }

    pub fn order(&self) -> ReconstructionOrder {
        self.order
    }

    /// Fills the interface states of both components from cell averages
    /// (`j * nx + i` layout) and per-stochastic-cell ghost values.
    #[allow(clippy::too_many_arguments)]
    pub fn reconstruct(
        &mut self,
        rho: &[T],
        q: &[T],
        ghost_rho: (&[T], &[T]),
        ghost_q: (&[T], &[T]),
        offsets: &[T],
        out: &mut InterfaceStates<T>,
    ) {
        debug_assert_eq!(rho.len(), self.nx * self.ny);
        debug_assert_eq!(out.nodes_per_cell(), offsets.len());
        // A single midpoint node sees the face values themselves, so the
        // stochastic pass is skipped and faces are written in place.
        let midpoint_only = offsets.len() == 1 && offsets[0] == T::zero();
        for (values, ghosts, left, right) in [
            (rho, ghost_rho, &mut out.rho_left, &mut out.rho_right),
            (q, ghost_q, &mut out.q_left, &mut out.q_right),
        ] {
            if midpoint_only {
                reconstruct_faces(
                    self.nx,
                    self.ny,
                    self.order,
                    values,
                    ghosts,
                    left,
                    right,
                    &mut self.slope,
                );
            } else {
                reconstruct_faces(
                    self.nx,
                    self.ny,
                    self.order,
                    values,
                    ghosts,
                    &mut self.face_left,
                    &mut self.face_right,
                    &mut self.slope,
                );
                self.spread(offsets, left, right);
            }
        }
    }

    fn spread(&mut self, offsets: &[T], out_left: &mut [T], out_right: &mut [T]) {
        let n1 = self.nx + 1;
        let mm = offsets.len();
        let ny = self.ny;
        for (faces, out) in [(&self.face_left, out_left), (&self.face_right, out_right)] {
            for j in 0..ny {
                let row = &faces[j * n1..(j + 1) * n1];
                let limited = self.order == ReconstructionOrder::Second && j > 0 && j + 1 < ny;
                if limited {
                    let below = &faces[(j - 1) * n1..j * n1];
                    let above = &faces[(j + 1) * n1..(j + 2) * n1];
                    for (((s, &c), &b), &a) in self.slope.iter_mut().zip(row).zip(below).zip(above) {
                        *s = minmod_select(c - b, a - c);
                    }
                }
                for (m, &off) in offsets.iter().enumerate() {
                    let dst = &mut out[(j * mm + m) * n1..(j * mm + m + 1) * n1];
                    if limited {
                        for ((d, &c), &s) in dst.iter_mut().zip(row).zip(&self.slope) {
                            *d = c + off * s;
                        }
                    } else {
                        dst.copy_from_slice(row);
                    }
                }
            }
        }
    }
}

#[inline(always)]
fn minmod_select<T: Scalar>(a: T, b: T) -> T {
    let smaller = if a.abs() < b.abs() { a } else { b };
    if a * b > T::zero() {
        smaller
    } else {
        T::zero()
    }
}

/// Face values of every row. `jumps` is scratch of length `nx + 1`.
#[allow(clippy::too_many_arguments)]
fn reconstruct_faces<T: Scalar>(
    nx: usize,
    ny: usize,
    order: ReconstructionOrder,
    values: &[T],
    (ghost_left, ghost_right): (&[T], &[T]),
    face_left: &mut [T],
    face_right: &mut [T],
    jumps: &mut [T],
) {
    let n1 = nx + 1;
    let half = T::half();
    for j in 0..ny {
        let row = &values[j * nx..(j + 1) * nx];
        let fl = &mut face_left[j * n1..(j + 1) * n1];
        let fr = &mut face_right[j * n1..(j + 1) * n1];
        fl[0] = ghost_left[j];
        fr[nx] = ghost_right[j];
        match order {
            ReconstructionOrder::First => {
                fl[1..].copy_from_slice(row);
                fr[..nx].copy_from_slice(row);
            }
            ReconstructionOrder::Second => {
                jumps[0] = row[0] - ghost_left[j];
                jumps[nx] = ghost_right[j] - row[nx - 1];
                for (d, (&a, &b)) in jumps[1..nx].iter_mut().zip(row.iter().zip(&row[1..])) {
                    *d = b - a;
                }
                let slopes = jumps[..nx].iter().zip(&jumps[1..]);
                let faces = fl[1..].iter_mut().zip(fr[..nx].iter_mut());
                for (((l, r), &u), (&a, &b)) in faces.zip(row).zip(slopes) {
                    let s = half * minmod_select(a, b);
                    *l = u + s;
                    *r = u - s;
                }
            }
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::stochastic_grid::{RandomParameter, StochasticGrid};
    use approx::assert_relative_eq;
    use proptest::prelude::*;

    fn s(rho: f64) -> GasState<f64> {
        GasState { rho, q: -rho }
    }

    fn rule(ny: usize, m: usize) -> QuadratureRule<f64> {
        let g = StochasticGrid::build(RandomParameter::uniform(0.0, 1.0, "y").unwrap(), ny).unwrap();
        QuadratureRule::new(&g, m).unwrap()
    }

    #[test]
    fn minmod_examples() {
        assert_eq!(minmod(1.0, 2.0), 1.0);
        assert_eq!(minmod(-1.0, 2.0), 0.0);
        assert_eq!(minmod(-3.0, -2.0), -2.0);
        assert_eq!(minmod(0.0, 5.0), 0.0);
    }

    #[test]
    fn constant_row() {
        let row = vec![s(3.0); 5];
        let r = reconstruct_x(&row, s(3.0), s(3.0), ReconstructionOrder::Second).unwrap();
        assert!(r.slopes.iter().all(|d| d.rho == 0.0 && d.q == 0.0));
        assert!(r.left.iter().chain(&r.right).all(|u| u.rho == 3.0));
    }

    #[test]
    fn linear_row_is_exact() {
        let c = 0.7;
        let row: Vec<_> = (0..6).map(|i| s(c * (i as f64 + 0.5))).collect();
        let r = reconstruct_x(&row, s(-0.5 * c), s(6.5 * c), ReconstructionOrder::Second).unwrap();
        for i in 0..6 {
            assert_relative_eq!(r.slopes[i].rho, c, max_relative = 1e-12);
        }
        for k in 1..6 {
            assert_relative_eq!(r.left[k].rho, c * k as f64, max_relative = 1e-12);
            assert_relative_eq!(r.right[k].rho, c * k as f64, max_relative = 1e-12);
        }
    }

    #[test]
    fn extremum_is_clipped() {
        let row = vec![s(0.0), s(1.0), s(0.0)];
        let r = reconstruct_x(&row, s(0.0), s(0.0), ReconstructionOrder::Second).unwrap();
        assert_eq!(r.slopes[1].rho, 0.0);
    }

    #[test]
    fn first_order_returns_averages() {
        let row = vec![s(1.0), s(2.0), s(4.0)];
        let r = reconstruct_x(&row, s(0.0), s(9.0), ReconstructionOrder::First).unwrap();
        assert_eq!(r.left[1], s(1.0));
        assert_eq!(r.right[1], s(2.0));
        assert_eq!(r.left[0], s(0.0));
        assert_eq!(r.right[3], s(9.0));
    }

    #[test]
    fn y_examples() {
        let one = reconstruct_y(&[s(2.0)], &rule(1, 2), ReconstructionOrder::Second).unwrap();
        assert_eq!(one, vec![s(2.0), s(2.0)]);
        let flat = reconstruct_y(&[s(2.0); 4], &rule(4, 2), ReconstructionOrder::Second).unwrap();
        assert!(flat.iter().all(|u| *u == s(2.0)));
    }

    #[test]
    fn y_linear_data_interpolated_at_nodes() {
        let r = rule(6, 2);
        let g = StochasticGrid::build(RandomParameter::uniform(0.0, 1.0, "y").unwrap(), 6).unwrap();
        let f = |y: f64| 1.0 + 4.0 * y;
        let values: Vec<_> = (0..6).map(|j| s(f(g.center(j)))).collect();
        let out = reconstruct_y(&values, &r, ReconstructionOrder::Second).unwrap();
        for j in 1..5 {
            for m in 0..2 {
                assert_relative_eq!(out[j * 2 + m].rho, f(r.node(j, m)), max_relative = 1e-12);
            }
        }
        // extreme cells keep a flat profile
        assert_eq!(out[0].rho, values[0].rho);
    }

    #[test]
    fn fused_path_matches_reference() {
        let (nx, ny, m) = (7, 5, 2);
        let r = rule(ny, m);
        let rho: Vec<f64> = (0..nx * ny).map(|k| 2.0 + ((k * 37) % 11) as f64 * 0.1).collect();
        let q: Vec<f64> = (0..nx * ny).map(|k| ((k * 13) % 7) as f64 - 3.0).collect();
        let gl_rho: Vec<f64> = (0..ny).map(|j| 2.5 + j as f64 * 0.01).collect();
        let gr_rho: Vec<f64> = (0..ny).map(|j| 1.5 - j as f64 * 0.02).collect();
        let gl_q = vec![1.0; ny];
        let gr_q = vec![-1.0; ny];
        for order in [ReconstructionOrder::First, ReconstructionOrder::Second] {
            let mut rec = Reconstructor::new(nx, ny, order);
            let mut out = InterfaceStates::zeros(nx, ny, m);
            rec.reconstruct(&rho, &q, (&gl_rho, &gr_rho), (&gl_q, &gr_q), r.offsets(), &mut out);
            let rows: Vec<RowReconstruction<f64>> = (0..ny)
                .map(|j| {
                    let row: Vec<_> = (0..nx)
                        .map(|i| GasState { rho: rho[j * nx + i], q: q[j * nx + i] })
                        .collect();
                    reconstruct_x(
                        &row,
                        GasState { rho: gl_rho[j], q: gl_q[j] },
                        GasState { rho: gr_rho[j], q: gr_q[j] },
                        order,
                    )
                    .unwrap()
                })
                .collect();
            for k in 0..=nx {
                let lefts: Vec<_> = rows.iter().map(|r| r.left[k]).collect();
                let rights: Vec<_> = rows.iter().map(|r| r.right[k]).collect();
                let yl = reconstruct_y(&lefts, &r, order).unwrap();
                let yr = reconstruct_y(&rights, &r, order).unwrap();
                for j in 0..ny {
                    for mm in 0..m {
                        assert_eq!(out.left(k, j, mm), yl[j * m + mm]);
                        assert_eq!(out.right(k, j, mm), yr[j * m + mm]);
                    }
                }
            }
        }
    }

    proptest! {
        #[test]
        fn preserves_means_and_creates_no_extrema(values in prop::collection::vec(0.1f64..10.0, 3..20)) {
            let row: Vec<_> = values.iter().map(|&v| s(v)).collect();
            let n = row.len();
            let r = reconstruct_x(&row, row[0], row[n - 1], ReconstructionOrder::Second).unwrap();
            for i in 0..n {
                let mean = 0.5 * (r.left[i + 1].rho + r.right[i].rho);
                prop_assert!((mean - row[i].rho).abs() < 1e-12 * row[i].rho.abs().max(1.0));
                let lo = row[i.saturating_sub(1)].rho.min(row[i].rho).min(row[(i + 1).min(n - 1)].rho);
                let hi = row[i.saturating_sub(1)].rho.max(row[i].rho).max(row[(i + 1).min(n - 1)].rho);
                for v in [r.left[i + 1].rho, r.right[i].rho] {
                    prop_assert!(v >= lo - 1e-12 && v <= hi + 1e-12);
                }
            }
            // stochastic direction: normalized-weight average of node values returns the cell value
            let ny = n;
            let rl = rule(ny, 2);
            let out = reconstruct_y(&row, &rl, ReconstructionOrder::Second).unwrap();
            let avg = rl.cell_averages(&out.iter().map(|u| u.rho).collect::<Vec<_>>());
            for j in 0..ny {
                prop_assert!((avg[j] - row[j].rho).abs() < 1e-12 * row[j].rho.max(1.0));
            }
        }

        #[test]
        fn advection_is_total_variation_diminishing(
            teeth in 2usize..8,
            cfl in 0.1f64..1.0,
        ) {
            // u_t + u_x = 0 with periodic sawtooth, MUSCL + upwind + Heun
            let n = 64;
            let mut u: Vec<f64> = (0..n).map(|i| ((i * teeth) % n) as f64 / n as f64).collect();
            let tv = |u: &[f64]| (0..n).map(|i| (u[(i + 1) % n] - u[i]).abs()).sum::<f64>();
            let rhs = |u: &[f64]| -> Vec<f64> {
                let face: Vec<f64> = (0..n)
                    .map(|i| {
                        let s = minmod(u[i] - u[(i + n - 1) % n], u[(i + 1) % n] - u[i]);
                        u[i] + 0.5 * s
                    })
                    .collect();
                (0..n).map(|i| -(face[i] - face[(i + n - 1) % n])).collect()
            };
            let before = tv(&u);
            let cfl = cfl * 0.5;
            for _ in 0..20 {
                let k1 = rhs(&u);
                let u1: Vec<f64> = u.iter().zip(&k1).map(|(a, b)| a + cfl * b).collect();
                let k2 = rhs(&u1);
                u = u.iter().zip(u1.iter().zip(&k2)).map(|(a, (b, c))| 0.5 * a + 0.5 * (b + cfl * c)).collect();
            }
            prop_assert!(tv(&u) <= before + 1e-10);
        }
    }
}

//! Cell-averaged solution on the physical × stochastic grid and the
//! statistics extracted from it.

use crate::error::{Result, SfvError};
use crate::gas_model::GasState;
use crate::scalar::Scalar;
use crate::stochastic_grid::StochasticGrid;

/// Which conserved component to read from a field.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Component {
    Density,
    Flux,
}

/// Cell averages `U_ij` of one pipe, stored component-wise with index `j * nx + i`.
#[derive(Debug, Clone, PartialEq)]
pub struct StochasticField<T> {
    nx: usize,
    ny: usize,
    dx: T,
    time: T,
    rho: Vec<T>,
    q: Vec<T>,
}

impl<T: Scalar> StochasticField<T> {
    pub fn new(nx: usize, ny: usize, dx: T, time: T, rho: Vec<T>, q: Vec<T>) -> Result<Self> {
        if nx == 0 || ny == 0 {
            return Err(SfvError::DimensionMismatch(format!(
                "field must have at least one cell in each direction, got {nx} x {ny}"
            )));
        }
        if rho.len() != nx * ny || q.len() != nx * ny {
            return Err(SfvError::DimensionMismatch(format!(
                "expected {} values per component, got {} and {}",
                nx * ny,
                rho.len(),
                q.len()
            )));
        }
        Ok(Self {
            nx,
            ny,
            dx,
            time,
            rho,
            q,
        })
    }

    pub fn from_fn(
        nx: usize,
        ny: usize,
        dx: T,
        time: T,
        mut f: impl FnMut(usize, usize) -> GasState<T>,
    ) -> Result<Self> {
        let mut rho = Vec::with_capacity(nx * ny);
        let mut q = Vec::with_capacity(nx * ny);
        for j in 0..ny {
            for i in 0..nx {
                let u = f(i, j);
                rho.push(u.rho);
                q.push(u.q);
            }
        }
        Self::new(nx, ny, dx, time, rho, q)
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

    pub fn time(&self) -> T {
        self.time
    }

    pub fn set_time(&mut self, time: T) {
        self.time = time;
    }

    #[inline]
    pub fn get(&self, i: usize, j: usize) -> GasState<T> {
        let k = j * self.nx + i;
        GasState {
            rho: self.rho[k],
            q: self.q[k],
        }
    }

    #[inline]
    pub fn set(&mut self, i: usize, j: usize, u: GasState<T>) {
        let k = j * self.nx + i;
        self.rho[k] = u.rho;
        self.q[k] = u.q;
    }

    pub fn component(&self, c: Component) -> &[T] {
        match c {
            Component::Density => &self.rho,
            Component::Flux => &self.q,
        }
    }

    pub fn rho(&self) -> &[T] {
        &self.rho
    }

    pub fn q(&self) -> &[T] {
        &self.q
    }

    pub fn rho_mut(&mut self) -> &mut [T] {
        &mut self.rho
    }

    pub fn q_mut(&mut self) -> &mut [T] {
        &mut self.q
    }

    /// Locates the first cell with a non-positive or non-finite density.
    pub fn find_invalid(&self) -> Option<(usize, usize, T)> {
        self.rho
            .iter()
            .zip(&self.q)
            .position(|(r, q)| !(*r > T::zero()) || !r.is_finite() || !q.is_finite())
            .map(|k| (k % self.nx, k / self.nx, self.rho[k]))
    }

    /// Total mass `Σ_ij ρ_ij |Δy_j| Δx · X` for a pipe of cross-section `area`.
    pub fn expected_mass(&self, grid: &StochasticGrid<T>, area: T) -> T {
        let mut total = T::zero();
        for (j, &m) in grid.masses().iter().enumerate() {
            let row: T = self.rho[j * self.nx..(j + 1) * self.nx].iter().copied().sum();
            total += row * m;
        }
        total * self.dx * area
    }
}

/// Per-physical-cell mean and variance of each component.
#[derive(Debug, Clone, PartialEq)]
pub struct FieldStatistics<T> {
    pub mean: Vec<GasState<T>>,
    pub variance: Vec<GasState<T>>,
}

/// Probability-weighted mean and variance of `values` (variance clamped at 0).
///
/// Deviations are taken from the first value, so identical values give
/// exactly that value and a variance of exactly zero.
pub fn weighted_mean_variance<T: Scalar>(values: &[T], weights: &[T]) -> (T, T) {
    let Some(&pivot) = values.first() else {
        return (T::zero(), T::zero());
    };
    let shift: T = values.iter().zip(weights).map(|(&v, &w)| (v - pivot) * w).sum();
    let var: T = values
        .iter()
        .zip(weights)
        .map(|(&v, &w)| {
            let d = v - pivot - shift;
            d * d * w
        })
        .sum();
    (pivot + shift, var.max(T::zero()))
}

pub fn field_mean_variance<T: Scalar>(
    field: &StochasticField<T>,
    grid: &StochasticGrid<T>,
) -> Result<FieldStatistics<T>> {
    if grid.cells() != field.ny() {
        return Err(SfvError::DimensionMismatch(format!(
            "field has {} stochastic cells, grid has {}",
            field.ny(),
            grid.cells()
        )));
    }
    let (nx, ny) = (field.nx(), field.ny());
    let masses = grid.masses();
    let mut mean = Vec::with_capacity(nx);
    let mut variance = Vec::with_capacity(nx);
    let mut column_rho = vec![T::zero(); ny];
    let mut column_q = vec![T::zero(); ny];
    for i in 0..nx {
        for j in 0..ny {
            column_rho[j] = field.rho[j * nx + i];
            column_q[j] = field.q[j * nx + i];
        }
        let (mr, vr) = weighted_mean_variance(&column_rho, masses);
        let (mq, vq) = weighted_mean_variance(&column_q, masses);
        mean.push(GasState { rho: mr, q: mq });
        variance.push(GasState { rho: vr, q: vq });
    }
    Ok(FieldStatistics { mean, variance })
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct HistogramBin<T> {
    pub lower: T,
    pub upper: T,
    /// Probability density on the bin; `density · width` is the bin's mass.
    pub density: T,
    /// Cumulative probability at `upper`.
    pub cumulative: T,
}

/// Discrete law on the value axis: atom `v_j` carries probability `p_j`.
#[derive(Debug, Clone, PartialEq)]
pub struct EmpiricalDistribution<T> {
    atoms: Vec<(T, T)>,
}

impl<T: Scalar> EmpiricalDistribution<T> {
    /// Builds the law from values and (not necessarily normalized) masses.
    pub fn from_atoms(values: &[T], masses: &[T]) -> Result<Self> {
        if values.len() != masses.len() || values.is_empty() {
            return Err(SfvError::DimensionMismatch(format!(
                "{} values for {} masses",
                values.len(),
                masses.len()
            )));
        }
        let total: T = masses.iter().copied().sum();
        if !(total > T::zero()) {
            return Err(SfvError::InvalidParameter(
                "atom masses must have positive total".into(),
            ));
        }
        let mut atoms: Vec<(T, T)> = values
            .iter()
            .zip(masses)
            .map(|(&v, &m)| (v, m / total))
            .collect();
        atoms.sort_by(|a, b| a.0.partial_cmp(&b.0).unwrap_or(std::cmp::Ordering::Equal));
        Ok(Self { atoms })
    }

    /// Sorted `(value, probability)` pairs.
    pub fn atoms(&self) -> &[(T, T)] {
        &self.atoms
    }

    pub fn min(&self) -> T {
        self.atoms[0].0
    }

    pub fn max(&self) -> T {
        self.atoms[self.atoms.len() - 1].0
    }

    /// Right-continuous step CDF: `P(U ≤ v)`.
    pub fn cdf(&self, v: T) -> T {
        let mut c = T::zero();
        for &(x, p) in &self.atoms {
            if x <= v {
                c += p;
            } else {
                break;
            }
        }
        c.min(T::one())
    }

    pub fn mean(&self) -> T {
        self.atoms.iter().map(|&(v, p)| v * p).sum()
    }

    pub fn variance(&self) -> T {
        let m = self.mean();
        let var: T = self.atoms.iter().map(|&(v, p)| (v - m) * (v - m) * p).sum();
        var.max(T::zero())
    }

    /// Standardized third moment; zero for a degenerate law.
    pub fn skewness(&self) -> T {
        let m = self.mean();
        let var = self.variance();
        if var <= T::zero() {
            return T::zero();
        }
        let third: T = self.atoms.iter().map(|&(v, p)| (v - m).powi(3) * p).sum();
        third / var.powf(T::of(1.5))
    }

    /// Equal-width histogram over `[min, max]`. A degenerate value range is
    /// reported as a single unit-width bin centered on the value.
    pub fn histogram(&self, bins: usize) -> Vec<HistogramBin<T>> {
        let bins = bins.max(1);
        let (lo, hi) = (self.min(), self.max());
        let scale = lo.abs().max(hi.abs()).max(T::one());
        if hi - lo <= T::epsilon() * scale {
            return vec![HistogramBin {
                lower: lo - T::half(),
                upper: lo + T::half(),
                density: T::one(),
                cumulative: T::one(),
            }];
        }
        let width = (hi - lo) / T::of_usize(bins);
        let mut mass = vec![T::zero(); bins];
        for &(v, p) in &self.atoms {
            let k = ((v - lo) / width).floor().to_usize().unwrap_or(0).min(bins - 1);
            mass[k] += p;
        }
        let mut cumulative = T::zero();
        mass.iter()
            .enumerate()
            .map(|(k, &m)| {
                cumulative += m;
                HistogramBin {
                    lower: lo + width * T::of_usize(k),
                    upper: if k + 1 == bins {
                        hi
                    } else {
                        lo + width * T::of_usize(k + 1)
                    },
                    density: m / width,
                    cumulative: cumulative.min(T::one()),
                }
            })
            .collect()
    }
}

/// Default histogram resolution for a grid with `ny` stochastic cells.
pub fn default_bins(ny: usize) -> usize {
    ny.max(10)
}

/// Law of component `c` in physical cell `i`: value `U_ij` with probability `|Δy_j|`.
pub fn point_distribution<T: Scalar>(
    field: &StochasticField<T>,
    grid: &StochasticGrid<T>,
    cell: usize,
    c: Component,
) -> Result<EmpiricalDistribution<T>> {
    if cell >= field.nx() {
        return Err(SfvError::DimensionMismatch(format!(
            "cell {cell} outside a field of {} cells",
            field.nx()
        )));
    }
    if grid.cells() != field.ny() {
        return Err(SfvError::DimensionMismatch(format!(
            "field has {} stochastic cells, grid has {}",
            field.ny(),
            grid.cells()
        )));
    }
    let values: Vec<T> = (0..field.ny())
        .map(|j| field.component(c)[j * field.nx() + cell])
        .collect();
    EmpiricalDistribution::from_atoms(&values, grid.masses())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::stochastic_grid::RandomParameter;
    use approx::assert_relative_eq;
    use proptest::prelude::*;

    fn grid(lo: f64, hi: f64, n: usize) -> StochasticGrid<f64> {
        StochasticGrid::build(RandomParameter::uniform(lo, hi, "y").unwrap(), n).unwrap()
    }

    #[test]
    fn constant_field_has_no_variance() {
        let g = grid(0.0, 1.0, 5);
        let f = StochasticField::from_fn(3, 5, 1.0, 0.0, |_, _| GasState { rho: 4.0, q: -2.0 }).unwrap();
        let s = field_mean_variance(&f, &g).unwrap();
        for i in 0..3 {
            assert_relative_eq!(s.mean[i].rho, 4.0, max_relative = 1e-14);
            assert_relative_eq!(s.mean[i].q, -2.0, max_relative = 1e-14);
            assert_eq!(s.variance[i].rho, 0.0);
        }
        let d = point_distribution(&f, &g, 1, Component::Density).unwrap();
        assert_eq!(d.cdf(3.999), 0.0);
        assert_relative_eq!(d.cdf(4.0), 1.0, max_relative = 1e-14);
        let h = d.histogram(default_bins(5));
        assert_eq!(h.len(), 1);
        assert_eq!(h[0].density * (h[0].upper - h[0].lower), 1.0);
    }

    #[test]
    fn two_cell_mean_and_variance() {
        let g = grid(0.0, 1.0, 2);
        let f = StochasticField::from_fn(1, 2, 1.0, 0.0, |_, j| GasState {
            rho: [1.0, 3.0][j],
            q: 0.0,
        })
        .unwrap();
        let s = field_mean_variance(&f, &g).unwrap();
        assert_relative_eq!(s.mean[0].rho, 2.0);
        assert_relative_eq!(s.variance[0].rho, 1.0);
    }

    #[test]
    fn linear_field_mean_is_midpoint_value() {
        // exact cell averages of u(y) = 2 + 3y on [0,1]
        let n = 8;
        let g = grid(0.0, 1.0, n);
        let f = StochasticField::from_fn(1, n, 1.0, 0.0, |_, j| GasState {
            rho: 2.0 + 3.0 * g.center(j),
            q: 0.0,
        })
        .unwrap();
        let s = field_mean_variance(&f, &g).unwrap();
        assert_relative_eq!(s.mean[0].rho, 3.5, max_relative = 1e-14);
    }

    #[test]
    fn cdf_examples() {
        let g = grid(0.0, 1.0, 2);
        let f = StochasticField::from_fn(1, 2, 1.0, 0.0, |_, j| GasState {
            rho: [1.0, 2.0][j],
            q: 0.0,
        })
        .unwrap();
        let d = point_distribution(&f, &g, 0, Component::Density).unwrap();
        assert_eq!(d.cdf(1.5), 0.5);
        assert_eq!(d.cdf(0.5), 0.0);
        assert_eq!(d.cdf(2.0), 1.0);
    }

    #[test]
    fn monotone_field_cdf_accumulates_masses() {
        let p = RandomParameter::normal(0.25, 1.0, "y").unwrap();
        let g = StochasticGrid::build(p, 9).unwrap();
        let f = StochasticField::from_fn(1, 9, 1.0, 0.0, |_, j| GasState {
            rho: 10.0 - j as f64,
            q: 0.0,
        })
        .unwrap();
        let d = point_distribution(&f, &g, 0, Component::Density).unwrap();
        for k in 0..9 {
            // value 10-k is attained on cells j >= k
            let expected: f64 = g.masses()[k..].iter().sum();
            assert!((d.cdf(10.0 - k as f64) - expected).abs() < 1e-12);
        }
    }

    #[test]
    fn dimension_checks() {
        assert!(StochasticField::<f64>::new(2, 2, 1.0, 0.0, vec![1.0; 3], vec![0.0; 4]).is_err());
        let f = StochasticField::from_fn(2, 3, 1.0, 0.0, |_, _| GasState { rho: 1.0, q: 0.0 }).unwrap();
        assert!(field_mean_variance(&f, &grid(0.0, 1.0, 2)).is_err());
        assert!(point_distribution(&f, &grid(0.0, 1.0, 3), 2, Component::Flux).is_err());
    }

    proptest! {
        #[test]
        fn histogram_integrates_to_one(values in prop::collection::vec(-1e3f64..1e3, 1..40), bins in 1usize..50) {
            let masses: Vec<f64> = (0..values.len()).map(|k| 1.0 + k as f64).collect();
            let d = EmpiricalDistribution::from_atoms(&values, &masses).unwrap();
            let h = d.histogram(bins);
            let integral: f64 = h.iter().map(|b| b.density * (b.upper - b.lower)).sum();
            prop_assert!((integral - 1.0).abs() < 1e-8);
            let mut last = 0.0;
            for b in &h {
                prop_assert!(b.cumulative >= last);
                last = b.cumulative;
            }
            prop_assert!((last - 1.0).abs() < 1e-12);
            prop_assert!(d.cdf(d.min() - 1.0) == 0.0);
            prop_assert!((d.cdf(d.max()) - 1.0).abs() < 1e-12);
        }
    }
}

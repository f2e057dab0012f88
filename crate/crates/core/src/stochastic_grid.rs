//! Random parameter, finite-volume partition of its support, and the
//! per-cell quadrature used to average fluxes over stochastic cells.

use statrs::distribution::{ContinuousCDF, Normal};

use crate::error::{Result, SfvError};
use crate::scalar::Scalar;

/// Probability law of the scalar random input `y`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Distribution<T> {
    Uniform {
        lower: T,
        upper: T,
    },
    /// Normal law restricted to `[lower, upper]` and renormalized.
    TruncatedNormal {
        mean: T,
        std_dev: T,
        lower: T,
        upper: T,
    },
    /// Zero-width law: `y = value` almost surely.
    Fixed {
        value: T,
    },
}

#[derive(Debug, Clone, PartialEq)]
pub struct RandomParameter<T> {
    distribution: Distribution<T>,
    label: String,
}

/// Truncation width (in standard deviations) used by [`RandomParameter::normal`].
pub const NORMAL_TRUNCATION_SIGMAS: f64 = 3.0;

fn std_normal_cdf(z: f64) -> f64 {
    0.5 * libm::erfc(-z / std::f64::consts::SQRT_2)
}

fn std_normal_pdf(z: f64) -> f64 {
    (-0.5 * z * z).exp() / (2.0 * std::f64::consts::PI).sqrt()
}

impl<T: Scalar> RandomParameter<T> {
    pub fn uniform(lower: T, upper: T, label: impl Into<String>) -> Result<Self> {
        if !(lower < upper) || !lower.is_finite() || !upper.is_finite() {
            return Err(SfvError::InvalidParameter(format!(
                "uniform support [{lower}, {upper}] is degenerate"
            )));
        }
        Ok(Self {
            distribution: Distribution::Uniform { lower, upper },
            label: label.into(),
        })
    }

    /// Normal law truncated to `mean ± 3·std_dev`.
    pub fn normal(mean: T, std_dev: T, label: impl Into<String>) -> Result<Self> {
        let width = T::of(NORMAL_TRUNCATION_SIGMAS) * std_dev;
        Self::truncated_normal(mean, std_dev, mean - width, mean + width, label)
    }

    pub fn truncated_normal(
        mean: T,
        std_dev: T,
        lower: T,
        upper: T,
        label: impl Into<String>,
    ) -> Result<Self> {
        if !(std_dev > T::zero()) || !std_dev.is_finite() || !mean.is_finite() {
            return Err(SfvError::InvalidParameter(format!(
                "normal standard deviation must be positive, got {std_dev}"
            )));
        }
        if !(lower < upper) || !lower.is_finite() || !upper.is_finite() {
            return Err(SfvError::InvalidParameter(format!(
                "truncation bounds [{lower}, {upper}] must be finite and ordered"
            )));
        }
        Ok(Self {
            distribution: Distribution::TruncatedNormal {
                mean,
                std_dev,
                lower,
                upper,
            },
            label: label.into(),
        })
    }

    pub fn fixed(value: T, label: impl Into<String>) -> Result<Self> {
        if !value.is_finite() {
            return Err(SfvError::InvalidParameter(format!(
                "fixed parameter value must be finite, got {value}"
            )));
        }
        Ok(Self {
            distribution: Distribution::Fixed { value },
            label: label.into(),
        })
    }

    pub fn distribution(&self) -> &Distribution<T> {
        &self.distribution
    }

    pub fn label(&self) -> &str {
        &self.label
    }

    pub fn is_degenerate(&self) -> bool {
        matches!(self.distribution, Distribution::Fixed { .. })
    }

    pub fn support(&self) -> (T, T) {
        match self.distribution {
            Distribution::Uniform { lower, upper }
            | Distribution::TruncatedNormal { lower, upper, .. } => (lower, upper),
            Distribution::Fixed { value } => (value, value),
        }
    }

    pub fn mean(&self) -> T {
        match self.distribution {
            Distribution::Uniform { lower, upper } => T::half() * (lower + upper),
            Distribution::TruncatedNormal {
                mean,
                std_dev,
                lower,
                upper,
            } => {
                let (m, s) = (mean.to_f64_lossy(), std_dev.to_f64_lossy());
                let (za, zb) = ((lower.to_f64_lossy() - m) / s, (upper.to_f64_lossy() - m) / s);
                let z = std_normal_cdf(zb) - std_normal_cdf(za);
                T::of(m + s * (std_normal_pdf(za) - std_normal_pdf(zb)) / z)
            }
            Distribution::Fixed { value } => value,
        }
    }

    /// Cumulative distribution function of the (truncated) law.
    pub fn cdf(&self, y: T) -> T {
        match self.distribution {
            Distribution::Uniform { lower, upper } => {
                if y <= lower {
                    T::zero()
                } else if y >= upper {
                    T::one()
                } else {
                    (y - lower) / (upper - lower)
                }
            }
            Distribution::TruncatedNormal {
                mean,
                std_dev,
                lower,
                upper,
            } => {
                if y <= lower {
                    return T::zero();
                }
                if y >= upper {
                    return T::one();
                }
                let (m, s) = (mean.to_f64_lossy(), std_dev.to_f64_lossy());
                let fa = std_normal_cdf((lower.to_f64_lossy() - m) / s);
                let fb = std_normal_cdf((upper.to_f64_lossy() - m) / s);
                let fy = std_normal_cdf((y.to_f64_lossy() - m) / s);
                T::of((fy - fa) / (fb - fa))
            }
            Distribution::Fixed { value } => {
                if y >= value {
                    T::one()
                } else {
                    T::zero()
                }
            }
        }
    }

    /// Density `μ(y)` of the (truncated) law; zero outside the support.
    /// The fixed law has no density and reports zero.
    pub fn pdf(&self, y: T) -> T {
        let (lo, hi) = self.support();
        if y < lo || y > hi {
            return T::zero();
        }
        match self.distribution {
            Distribution::Uniform { lower, upper } => T::one() / (upper - lower),
            Distribution::TruncatedNormal {
                mean,
                std_dev,
                lower,
                upper,
            } => {
                let (m, s) = (mean.to_f64_lossy(), std_dev.to_f64_lossy());
                let z = std_normal_cdf((upper.to_f64_lossy() - m) / s)
                    - std_normal_cdf((lower.to_f64_lossy() - m) / s);
                T::of(std_normal_pdf((y.to_f64_lossy() - m) / s) / (s * z))
            }
            Distribution::Fixed { .. } => T::zero(),
        }
    }

    /// Quantile function; `u` is clamped to `[0, 1]`.
    pub fn inverse_cdf(&self, u: T) -> T {
        let u = u.max(T::zero()).min(T::one());
        match self.distribution {
            Distribution::Uniform { lower, upper } => lower + u * (upper - lower),
            Distribution::TruncatedNormal {
                mean,
                std_dev,
                lower,
                upper,
            } => {
                let (m, s) = (mean.to_f64_lossy(), std_dev.to_f64_lossy());
                let fa = std_normal_cdf((lower.to_f64_lossy() - m) / s);
                let fb = std_normal_cdf((upper.to_f64_lossy() - m) / s);
                let p = fa + u.to_f64_lossy() * (fb - fa);
                let standard = Normal::standard();
                let y = T::of(m + s * standard.inverse_cdf(p));
                y.max(lower).min(upper)
            }
            Distribution::Fixed { value } => value,
        }
    }
}

/// Uniform partition of the parameter support into `N_y` cells with their
/// probability masses `|Δy_j| = ∫_cell μ(y) dy`.
#[derive(Debug, Clone, PartialEq)]
pub struct StochasticGrid<T> {
    parameter: RandomParameter<T>,
    edges: Vec<T>,
    masses: Vec<T>,
}

impl<T: Scalar> StochasticGrid<T> {
    pub fn build(parameter: RandomParameter<T>, cells: usize) -> Result<Self> {
        if cells == 0 {
            return Err(SfvError::InvalidParameter(
                "stochastic grid needs at least one cell".into(),
            ));
        }
        let (lo, hi) = parameter.support();
        let n = T::of_usize(cells);
        let edges: Vec<T> = (0..=cells)
            .map(|j| {
                if j == cells {
                    hi
                } else {
                    lo + (hi - lo) * T::of_usize(j) / n
                }
            })
            .collect();
        let masses: Vec<T> = if parameter.is_degenerate() {
            vec![T::one() / n; cells]
        } else {
            edges
                .windows(2)
                .map(|w| parameter.cdf(w[1]) - parameter.cdf(w[0]))
                .collect()
        };
        if let Some(j) = masses.iter().position(|m| !(*m > T::zero())) {
            return Err(SfvError::InvalidParameter(format!(
                "stochastic cell {j} has no probability mass"
            )));
        }
        Ok(Self {
            parameter,
            edges,
            masses,
        })
    }

    pub fn parameter(&self) -> &RandomParameter<T> {
        &self.parameter
    }

    pub fn cells(&self) -> usize {
        self.masses.len()
    }

    pub fn edges(&self) -> &[T] {
        &self.edges
    }

    pub fn masses(&self) -> &[T] {
        &self.masses
    }

    pub fn cell_width(&self) -> T {
        self.edges[1] - self.edges[0]
    }

    pub fn center(&self, j: usize) -> T {
        T::half() * (self.edges[j] + self.edges[j + 1])
    }
}

/// `Σ w_k v_k` for weights summing to one, evaluated as `v_0 + Σ w_k (v_k − v_0)`
/// so that equal values return that value exactly.
#[inline]
pub fn pivot_mean<T: Scalar>(values: &[T], weights: &[T]) -> T {
    let pivot = values[0];
    pivot
        + values[1..]
            .iter()
            .zip(&weights[1..])
            .map(|(&v, &w)| (v - pivot) * w)
            .sum::<T>()
}

/// Gauss–Legendre nodes and weights on `[-1, 1]` (weights sum to 2).
pub fn gauss_legendre(points: usize) -> (Vec<f64>, Vec<f64>) {
    let n = points;
    let mut nodes = vec![0.0; n];
    let mut weights = vec![0.0; n];
    for i in 0..n.div_ceil(2) {
        // Chebyshev-type initial guess for the i-th largest root.
        let mut x = (std::f64::consts::PI * (i as f64 + 0.75) / (n as f64 + 0.5)).cos();
        let mut derivative = 0.0;
        for _ in 0..100 {
            let (mut p0, mut p1) = (1.0, x);
            for k in 2..=n {
                let p2 = ((2 * k - 1) as f64 * x * p1 - (k - 1) as f64 * p0) / k as f64;
                p0 = p1;
                p1 = p2;
            }
            let pn = if n == 1 { x } else { p1 };
            let pn_1 = if n == 1 { 1.0 } else { p0 };
            derivative = n as f64 * (x * pn - pn_1) / (x * x - 1.0);
            let step = pn / derivative;
            x -= step;
            if step.abs() < 1e-16 {
                break;
            }
        }
        if n == 1 {
            derivative = 1.0;
            x = 0.0;
        }
        let w = 2.0 / ((1.0 - x * x) * derivative * derivative);
        nodes[i] = -x;
        nodes[n - 1 - i] = x;
        weights[i] = w;
        weights[n - 1 - i] = w;
    }
    if n % 2 == 1 {
        nodes[n / 2] = 0.0;
    }
    (nodes, weights)
}

/// Per-cell quadrature: `M` nodes per stochastic cell with weights that sum
/// to the cell's probability mass.
#[derive(Debug, Clone, PartialEq)]
pub struct QuadratureRule<T> {
    nodes_per_cell: usize,
    /// Node position relative to the cell center in units of the cell width, in `(-1/2, 1/2)`.
    offsets: Vec<T>,
    nodes: Vec<T>,
    weights: Vec<T>,
    /// `w_jm / |Δy_j|`.
    normalized: Vec<T>,
}

impl<T: Scalar> QuadratureRule<T> {
    pub fn new(grid: &StochasticGrid<T>, nodes_per_cell: usize) -> Result<Self> {
        if nodes_per_cell == 0 {
            return Err(SfvError::InvalidParameter(
                "quadrature needs at least one node per cell".into(),
            ));
        }
        let (reference, reference_weights) = gauss_legendre(nodes_per_cell);
        let offsets: Vec<T> = reference.iter().map(|x| T::of(0.5 * x)).collect();
        let m = nodes_per_cell;
        let ny = grid.cells();
        let mut nodes = Vec::with_capacity(ny * m);
        let mut weights = Vec::with_capacity(ny * m);
        let mut normalized = Vec::with_capacity(ny * m);
        let param = grid.parameter();
        let uniform_density = !matches!(
            param.distribution(),
            Distribution::TruncatedNormal { .. }
        );
        for j in 0..ny {
            let mass = grid.masses()[j];
            let (center, width) = match param.distribution() {
                Distribution::Fixed { value } => (*value, T::zero()),
                _ => (grid.center(j), grid.cell_width()),
            };
            let start = nodes.len();
            for mm in 0..m {
                nodes.push(center + offsets[mm] * width);
            }
            let raw: Vec<T> = (0..m)
                .map(|mm| {
                    let g = T::of(reference_weights[mm]);
                    if uniform_density {
                        g
                    } else {
                        g * param.pdf(nodes[start + mm])
                    }
                })
                .collect();
            let total: T = raw.iter().copied().sum();
            for r in raw {
                let share = r / total;
                weights.push(mass * share);
                normalized.push(share);
            }
        }
        Ok(Self {
            nodes_per_cell,
            offsets,
            nodes,
            weights,
            normalized,
        })
    }

    pub fn nodes_per_cell(&self) -> usize {
        self.nodes_per_cell
    }

    pub fn cells(&self) -> usize {
        self.nodes.len() / self.nodes_per_cell
    }

    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }

    pub fn offsets(&self) -> &[T] {
        &self.offsets
    }

    /// All node locations, cell-major: index `j * M + m`.
    pub fn nodes(&self) -> &[T] {
        &self.nodes
    }

    pub fn weights(&self) -> &[T] {
        &self.weights
    }

    pub fn normalized_weights(&self) -> &[T] {
        &self.normalized
    }

    pub fn node(&self, j: usize, m: usize) -> T {
        self.nodes[j * self.nodes_per_cell + m]
    }

    pub fn weight(&self, j: usize, m: usize) -> T {
        self.weights[j * self.nodes_per_cell + m]
    }

    /// `Σ_jm f(y_jm) w_jm`, the approximation of `∫ f μ dy`.
    pub fn integrate(&self, mut f: impl FnMut(T) -> T) -> T {
        self.nodes
            .iter()
            .zip(&self.weights)
            .map(|(&y, &w)| f(y) * w)
            .sum()
    }

    /// Averages node values over each cell: `(1/|Δy_j|) Σ_m v_jm w_jm`.
    pub fn cell_averages(&self, node_values: &[T]) -> Vec<T> {
        let mut out = vec![T::zero(); self.cells()];
        self.cell_averages_into(node_values, &mut out);
        out
    }

    /// [`cell_averages`](Self::cell_averages) into a caller buffer. Equal
    /// node values average to exactly that value.
    pub fn cell_averages_into(&self, node_values: &[T], out: &mut [T]) {
        let chunks = node_values
            .chunks(self.nodes_per_cell)
            .zip(self.normalized.chunks(self.nodes_per_cell));
        for (avg, (v, w)) in out.iter_mut().zip(chunks) {
            *avg = pivot_mean(v, w);
        }
    }
}

//! Isothermal gas flow in a pipe.
//!
//! Conserved variables are density `rho` (kg/m³) and per-area mass flux `q`
//! (kg/m²/s). The system
//!
//! ```text
//! rho_t + q_x       = 0
//! q_t   + a² rho_x  = -λ/(2D) · q|q| / rho
//! ```
//!
//! has the linear flux `(q, a² rho)`, characteristic speeds `±a` and Riemann
//! invariants `rho ± q/a`. Pressure and mass rate follow from the ideal-gas
//! closure `p = a² rho` and `φ = X q` with `X = π D²/4`.

use std::ops::{Add, Mul, Neg, Sub};

use crate::error::{Result, SfvError};
use crate::scalar::Scalar;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GasConstants<T> {
    wave_speed: T,
}

impl<T: Scalar> GasConstants<T> {
    pub fn new(wave_speed: T) -> Result<Self> {
        if !(wave_speed > T::zero()) || !wave_speed.is_finite() {
            return Err(SfvError::InvalidParameter(format!(
                "wave speed must be positive, got {wave_speed}"
            )));
        }
        Ok(Self { wave_speed })
    }

    #[inline]
    pub fn wave_speed(&self) -> T {
        self.wave_speed
    }
}

/// Geometry and friction of one pipe. The cross-section is derived from the diameter.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PipeSpec<T> {
    length: T,
    diameter: T,
    friction: T,
    area: T,
}

impl<T: Scalar> PipeSpec<T> {
    pub fn new(length: T, diameter: T, friction: T) -> Result<Self> {
        if !(length > T::zero()) || !length.is_finite() {
            return Err(SfvError::InvalidParameter(format!(
                "pipe length must be positive, got {length}"
            )));
        }
        if !(diameter > T::zero()) || !diameter.is_finite() {
            return Err(SfvError::InvalidParameter(format!(
                "pipe diameter must be positive, got {diameter}"
            )));
        }
        if !(friction >= T::zero()) || !friction.is_finite() {
            return Err(SfvError::InvalidParameter(format!(
                "friction factor must be non-negative, got {friction}"
            )));
        }
        let area = T::PI() * diameter * diameter / T::of(4.0);
        Ok(Self {
            length,
            diameter,
            friction,
            area,
        })
    }

    #[inline]
    pub fn length(&self) -> T {
        self.length
    }
    #[inline]
    pub fn diameter(&self) -> T {
        self.diameter
    }
    #[inline]
    pub fn friction(&self) -> T {
        self.friction
    }
    #[inline]
    pub fn area(&self) -> T {
        self.area
    }

    /// `λ/(2D)`, the factor in front of `q|q|/rho`.
    #[inline]
    pub fn friction_coefficient(&self) -> T {
        self.friction / (T::two() * self.diameter)
    }
}

/// Conserved state `(rho, q)`. Positivity of `rho` is checked by [`GasState::new`];
/// the public fields allow unchecked construction inside hot loops.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct GasState<T> {
    pub rho: T,
    pub q: T,
}

impl<T: Scalar> GasState<T> {
    pub fn new(rho: T, q: T) -> Result<Self> {
        if !(rho > T::zero()) || !q.is_finite() {
            return Err(SfvError::InvalidState {
                rho: rho.to_f64_lossy(),
            });
        }
        Ok(Self { rho, q })
    }

    #[inline]
    pub fn is_finite(&self) -> bool {
        self.rho.is_finite() && self.q.is_finite()
    }
}

impl<T: Scalar> Add for GasState<T> {
    type Output = Self;
    #[inline]
    fn add(self, o: Self) -> Self {
        Self {
            rho: self.rho + o.rho,
            q: self.q + o.q,
        }
    }
}

impl<T: Scalar> Sub for GasState<T> {
    type Output = Self;
    #[inline]
    fn sub(self, o: Self) -> Self {
        Self {
            rho: self.rho - o.rho,
            q: self.q - o.q,
        }
    }
}

impl<T: Scalar> Mul<T> for GasState<T> {
    type Output = Self;
    #[inline]
    fn mul(self, s: T) -> Self {
        Self {
            rho: self.rho * s,
            q: self.q * s,
        }
    }
}

/// Flux or rate vector: mass component and momentum component.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct Flux<T> {
    pub mass: T,
    pub momentum: T,
}

impl<T: Scalar> Add for Flux<T> {
    type Output = Self;
    #[inline]
    fn add(self, o: Self) -> Self {
        Self {
            mass: self.mass + o.mass,
            momentum: self.momentum + o.momentum,
        }
    }
}

impl<T: Scalar> Sub for Flux<T> {
    type Output = Self;
    #[inline]
    fn sub(self, o: Self) -> Self {
        Self {
            mass: self.mass - o.mass,
            momentum: self.momentum - o.momentum,
        }
    }
}

impl<T: Scalar> Mul<T> for Flux<T> {
    type Output = Self;
    #[inline]
    fn mul(self, s: T) -> Self {
        Self {
            mass: self.mass * s,
            momentum: self.momentum * s,
        }
    }
}

impl<T: Scalar> Neg for Flux<T> {
    type Output = Self;
    #[inline]
    fn neg(self) -> Self {
        Self {
            mass: -self.mass,
            momentum: -self.momentum,
        }
    }
}

#[inline]
pub fn physical_flux<T: Scalar>(u: GasState<T>, gas: &GasConstants<T>) -> Flux<T> {
    let a = gas.wave_speed();
    Flux {
        mass: u.q,
        momentum: a * a * u.rho,
    }
}

/// Momentum source `-λ/(2D) · q|q|/rho`, without the positivity check.
#[inline]
pub(crate) fn friction_source<T: Scalar>(rho: T, q: T, coefficient: T) -> T {
    -coefficient * q * q.abs() / rho
}

pub fn source_term<T: Scalar>(u: GasState<T>, pipe: &PipeSpec<T>) -> Result<Flux<T>> {
    if !(u.rho > T::zero()) {
        return Err(SfvError::InvalidState {
            rho: u.rho.to_f64_lossy(),
        });
    }
    Ok(Flux {
        mass: T::zero(),
        momentum: friction_source(u.rho, u.q, pipe.friction_coefficient()),
    })
}

/// Riemann invariants `(rho + q/a, rho - q/a)`, carried by the right- and
/// left-going characteristic families respectively.
#[inline]
pub fn riemann_invariants<T: Scalar>(u: GasState<T>, gas: &GasConstants<T>) -> (T, T) {
    let s = u.q / gas.wave_speed();
    (u.rho + s, u.rho - s)
}

#[inline]
pub fn state_from_invariants<T: Scalar>(i1: T, i2: T, gas: &GasConstants<T>) -> GasState<T> {
    GasState {
        rho: T::half() * (i1 + i2),
        q: T::half() * gas.wave_speed() * (i1 - i2),
    }
}

/// Steady density along a pipe: `rho(x) = sqrt(rho_in² - λ/(a² D) q0|q0| x)`.
pub fn steady_density_profile<T: Scalar>(
    rho_in: T,
    q0: T,
    pipe: &PipeSpec<T>,
    gas: &GasConstants<T>,
    x: T,
) -> Result<T> {
    let a = gas.wave_speed();
    let radicand =
        rho_in * rho_in - pipe.friction() / (a * a * pipe.diameter()) * q0 * q0.abs() * x;
    if !(radicand > T::zero()) {
        return Err(SfvError::InfeasibleSteadyState {
            x: x.to_f64_lossy(),
            radicand: radicand.to_f64_lossy(),
        });
    }
    Ok(radicand.sqrt())
}

/// Pressure form of the steady profile in terms of mass rate `φ` (kg/s):
/// `p(x) = sqrt(p_in² - a² · 16λ/(D⁵π²) · φ|φ| x)`.
pub fn steady_pressure_profile<T: Scalar>(
    p_in: T,
    mass_rate: T,
    pipe: &PipeSpec<T>,
    gas: &GasConstants<T>,
    x: T,
) -> Result<T> {
    let a = gas.wave_speed();
    let d = pipe.diameter();
    let pi = T::PI();
    let coefficient = a * a * T::of(16.0) * pipe.friction() / (d.powi(5) * pi * pi);
    let radicand = p_in * p_in - coefficient * mass_rate * mass_rate.abs() * x;
    if !(radicand > T::zero()) {
        return Err(SfvError::InfeasibleSteadyState {
            x: x.to_f64_lossy(),
            radicand: radicand.to_f64_lossy(),
        });
    }
    Ok(radicand.sqrt())
}

fn require_positive<T: Scalar>(value: T, what: &str) -> Result<()> {
    if value > T::zero() && value.is_finite() {
        Ok(())
    } else {
        Err(SfvError::InvalidParameter(format!(
            "{what} must be positive, got {value}"
        )))
    }
}

pub fn pressure_from_density<T: Scalar>(rho: T, gas: &GasConstants<T>) -> Result<T> {
    require_positive(rho, "density")?;
    let a = gas.wave_speed();
    Ok(a * a * rho)
}

pub fn density_from_pressure<T: Scalar>(p: T, gas: &GasConstants<T>) -> Result<T> {
    require_positive(p, "pressure")?;
    let a = gas.wave_speed();
    Ok(p / (a * a))
}

/// `φ = X q`. Flow direction is preserved, only the area must be positive.
pub fn mass_rate_from_flux<T: Scalar>(q: T, area: T) -> Result<T> {
    require_positive(area, "cross-sectional area")?;
    Ok(area * q)
}

pub fn flux_from_mass_rate<T: Scalar>(mass_rate: T, area: T) -> Result<T> {
    require_positive(area, "cross-sectional area")?;
    Ok(mass_rate / area)
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    const A: f64 = 377.9683;

    fn gas(a: f64) -> GasConstants<f64> {
        GasConstants::new(a).unwrap()
    }

    #[test]
    fn flux_examples() {
        let f = physical_flux(GasState { rho: 1.0, q: 0.0 }, &gas(2.0));
        assert_eq!((f.mass, f.momentum), (0.0, 4.0));

        let rho = 45.4990786148;
        let f = physical_flux(GasState { rho, q: 289.0 }, &gas(A));
        assert_eq!(f.mass, 289.0);
        assert_eq!(f.momentum, A * A * rho);

        let f = physical_flux(GasState { rho: 2.0, q: -3.0 }, &gas(1.0));
        assert_eq!((f.mass, f.momentum), (-3.0, 2.0));
    }

    #[test]
    fn source_examples() {
        let pipe = PipeSpec::new(1.0, 0.5, 0.01).unwrap();
        let s = source_term(GasState { rho: 1.0, q: 0.0 }, &pipe).unwrap();
        assert_eq!((s.mass, s.momentum), (0.0, 0.0));
        let s = source_term(GasState { rho: 1.0, q: 2.0 }, &pipe).unwrap();
        assert_eq!(s.mass, 0.0);
        assert_relative_eq!(s.momentum, -0.04, max_relative = 1e-15);
        let s = source_term(GasState { rho: 1.0, q: -2.0 }, &pipe).unwrap();
        assert_relative_eq!(s.momentum, 0.04, max_relative = 1e-15);
        assert!(source_term(GasState { rho: 0.0, q: 1.0 }, &pipe).is_err());
    }

    #[test]
    fn invariant_examples() {
        assert_eq!(
            riemann_invariants(GasState { rho: 1.0, q: 0.0 }, &gas(1.0)),
            (1.0, 1.0)
        );
        assert_eq!(
            riemann_invariants(GasState { rho: 1.0, q: 1.0 }, &gas(1.0)),
            (2.0, 0.0)
        );
        let (i1, i2) = riemann_invariants(GasState { rho: 45.5, q: 289.0 }, &gas(A));
        assert_relative_eq!(i1, 46.264613, epsilon = 2e-6);
        assert_relative_eq!(i2, 44.735387, epsilon = 2e-6);
        assert_relative_eq!(i1 + i2, 91.0, epsilon = 1e-12);
    }

    #[test]
    fn steady_profile_basics() {
        let pipe = PipeSpec::new(1e5, 0.5, 0.011).unwrap();
        let g = gas(A);
        assert_eq!(
            steady_density_profile(45.0, 289.0, &pipe, &g, 0.0).unwrap(),
            45.0
        );
        for x in [0.0, 1e3, 5e4, 1e5] {
            assert_eq!(steady_density_profile(45.0, 0.0, &pipe, &g, x).unwrap(), 45.0);
        }
        assert!(matches!(
            steady_density_profile(45.0, 289.0 * 3.0, &pipe, &g, 1e5),
            Err(SfvError::InfeasibleSteadyState { .. })
        ));
    }

    #[test]
    fn steady_profile_table4_pipe1() {
        let g = gas(A);
        let pipe = PipeSpec::new(20000.0, 0.9143995, 0.01).unwrap();
        let rho_in = density_from_pressure(5271081.1, &g).unwrap();
        let q = flux_from_mass_rate(300.0, pipe.area()).unwrap();
        let rho_out = steady_density_profile(rho_in, q, &pipe, &g, pipe.length()).unwrap();
        let p_out = pressure_from_density(rho_out, &g).unwrap();
        assert!(((p_out - 4611205.3) / 4611205.3).abs() < 1e-3);
    }

    #[test]
    fn pressure_and_per_area_forms_agree() {
        let g = gas(A);
        let pipe = PipeSpec::new(70000.0, 0.9143995, 0.01).unwrap();
        for x in [0.0, 1e4, 3.5e4, 7e4] {
            let p = steady_pressure_profile(5131747.2, 233.33, &pipe, &g, x).unwrap();
            let rho = steady_density_profile(
                5131747.2 / (A * A),
                233.33 / pipe.area(),
                &pipe,
                &g,
                x,
            )
            .unwrap();
            assert_relative_eq!(p, A * A * rho, max_relative = 1e-12);
        }
    }

    #[test]
    fn steady_profile_satisfies_momentum_balance() {
        let g = gas(A);
        let pipe = PipeSpec::new(1e5, 0.5, 0.011).unwrap();
        let (rho_in, q) = (45.4990786148, 289.0);
        let x = 4.0e4;
        let rho_x = steady_density_profile(rho_in, q, &pipe, &g, x).unwrap();
        let mut previous = f64::INFINITY;
        for dx in [100.0, 10.0, 1.0] {
            let rho_dx = steady_density_profile(rho_in, q, &pipe, &g, x + dx).unwrap();
            let balance =
                A * A * (rho_dx - rho_x) / dx + pipe.friction_coefficient() * q * q / rho_x;
            assert!(balance.abs() < previous);
            previous = balance.abs();
        }
        assert!(previous < 1e-3);
    }

    #[test]
    fn conversion_examples() {
        assert_eq!(pressure_from_density(1.0, &gas(2.0)).unwrap(), 4.0);
        let g = gas(A);
        let rho = density_from_pressure(3447378.645, &g).unwrap();
        assert_relative_eq!(rho, 3447378.645 / (A * A), max_relative = 1e-15);
        let pipe = PipeSpec::new(1.0, 0.9143995, 0.0).unwrap();
        let q = flux_from_mass_rate(300.0, pipe.area()).unwrap();
        assert_relative_eq!(
            q,
            300.0 / (std::f64::consts::PI * 0.9143995 * 0.9143995 / 4.0),
            max_relative = 1e-15
        );
        assert!(density_from_pressure(0.0, &g).is_err());
        assert!(flux_from_mass_rate(1.0, 0.0).is_err());
    }

    #[test]
    fn constructors_validate() {
        assert!(GasConstants::new(0.0).is_err());
        assert!(PipeSpec::new(0.0, 1.0, 0.0).is_err());
        assert!(PipeSpec::new(1.0, -1.0, 0.0).is_err());
        assert!(PipeSpec::new(1.0, 1.0, -0.1).is_err());
        assert!(GasState::new(0.0, 1.0).is_err());
        assert!(GasState::new(1.0, -1.0).is_ok());
    }

    #[test]
    fn works_in_single_precision() {
        let g = GasConstants::new(2.0f32).unwrap();
        let f = physical_flux(GasState { rho: 1.0f32, q: 0.5 }, &g);
        assert_eq!(f.momentum, 4.0f32);
        let (i1, i2) = riemann_invariants(GasState { rho: 1.0f32, q: 1.0 }, &g);
        assert_eq!((i1, i2), (1.5, 0.5));
    }

    mod properties {
        use super::*;
        use proptest::prelude::*;

        proptest! {
            #[test]
            fn flux_is_linear(r1 in 0.1f64..100.0, q1 in -500.0f64..500.0,
                              r2 in 0.1f64..100.0, q2 in -500.0f64..500.0,
                              al in -3.0f64..3.0, be in -3.0f64..3.0) {
                let g = gas(A);
                let u1 = GasState { rho: r1, q: q1 };
                let u2 = GasState { rho: r2, q: q2 };
                let lhs = physical_flux(u1 * al + u2 * be, &g);
                let rhs = physical_flux(u1, &g) * al + physical_flux(u2, &g) * be;
                prop_assert!((lhs.mass - rhs.mass).abs() <= 1e-9 * (1.0 + rhs.mass.abs()));
                prop_assert!((lhs.momentum - rhs.momentum).abs() <= 1e-9 * (1.0 + rhs.momentum.abs()));
            }

            #[test]
            fn source_is_odd_in_flux(rho in 0.1f64..100.0, q in -500.0f64..500.0) {
                let pipe = PipeSpec::new(1.0, 0.5, 0.011).unwrap();
                let s_pos = source_term(GasState { rho, q }, &pipe).unwrap().momentum;
                let s_neg = source_term(GasState { rho, q: -q }, &pipe).unwrap().momentum;
                prop_assert_eq!(s_pos, -s_neg);
                prop_assert_eq!(s_pos == 0.0, q == 0.0);
                if q != 0.0 { prop_assert!(s_pos.signum() == -q.signum()); }
            }

            #[test]
            fn invariants_roundtrip(rho in 0.1f64..100.0, q in -500.0f64..500.0) {
                let g = gas(A);
                let (i1, i2) = riemann_invariants(GasState { rho, q }, &g);
                let back = state_from_invariants(i1, i2, &g);
                prop_assert!((back.rho - rho).abs() <= 1e-12 * rho);
                prop_assert!((back.q - q).abs() <= 1e-10 * (1.0 + q.abs()));
            }

            #[test]
            fn conversions_roundtrip(rho in 1e-3f64..1e3, phi in -1e3f64..1e3, d in 0.1f64..2.0) {
                let g = gas(A);
                let p = pressure_from_density(rho, &g).unwrap();
                prop_assert!((density_from_pressure(p, &g).unwrap() - rho).abs() <= 1e-14 * rho);
                let area = PipeSpec::new(1.0, d, 0.0).unwrap().area();
                let q = flux_from_mass_rate(phi, area).unwrap();
                prop_assert!((mass_rate_from_flux(q, area).unwrap() - phi).abs() <= 1e-12 * (1.0 + phi.abs()));
            }
        }
    }
}

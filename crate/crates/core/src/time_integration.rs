//! Second-order IMEX Runge–Kutta stepping for `u' = H(u, t) + S(u)` with
//! a non-stiff transport part `H` and a stiff local source `S`.
//!
//! The scheme is the SSP2(2,2,2) pair of Pareschi and Russo with
//! `γ = 1 − 1/√2`:
//!
//! ```text
//! U1      = Uⁿ + γΔt S(U1)
//! U2      = Uⁿ + Δt H(U1, t) + (1 − 2γ)Δt S(U1) + γΔt S(U2)
//! Uⁿ⁺¹    = Uⁿ + Δt/2 (H(U1, t) + H(U2, t + Δt)) + Δt/2 (S(U1) + S(U2))
//! ```
//!
//! Its explicit part is Heun's method, so with `S ≡ 0` a step is exactly
//! one SSP-RK2 step.

use crate::error::Result;
use crate::scalar::Scalar;

/// Semi-discrete system advanced by [`ImexSsp2`]. State vectors are flat slices.
pub trait ImexSystem<T: Scalar> {
    /// Length of the state vector.
    fn dimension(&self) -> usize;

    /// Explicit operator `H(u, t)`. `stage` is 0 or 1 within a step.
    fn explicit(&mut self, u: &[T], t: T, stage: usize, out: &mut [T]) -> Result<()>;

    /// Stiff source `S(u)`.
    fn source(&self, u: &[T], out: &mut [T]);

    /// Solves `u = rhs + h S(u)` for `u`.
    fn implicit_solve(&self, rhs: &[T], h: T, out: &mut [T]);

    /// Called once the step of size `dt` has been accepted.
    fn end_step(&mut self, _dt: T) {}
}

#[derive(Debug, Clone)]
pub struct ImexSsp2<T> {
    gamma: T,
    u1: Vec<T>,
    u2: Vec<T>,
    h1: Vec<T>,
    h2: Vec<T>,
    s1: Vec<T>,
    s2: Vec<T>,
}

impl<T: Scalar> ImexSsp2<T> {
    pub fn new(dimension: usize) -> Self {
        let z = || vec![T::zero(); dimension];
        Self {
            gamma: T::one() - T::one() / T::two().sqrt(),
            u1: z(),
            u2: z(),
            h1: z(),
            h2: z(),
            s1: z(),
            s2: z(),
        }
    }

    pub fn gamma(&self) -> T {
        self.gamma
    }

    /// Advances `u` from `t` to `t + dt` in place.
    pub fn step<S: ImexSystem<T>>(&mut self, system: &mut S, u: &mut [T], t: T, dt: T) -> Result<()> {
        debug_assert_eq!(u.len(), self.u1.len());
        let g = self.gamma;
        let h = g * dt;

        system.implicit_solve(u, h, &mut self.u1);
        system.source(&self.u1, &mut self.s1);
        system.explicit(&self.u1, t, 0, &mut self.h1)?;

        let c = (T::one() - T::two() * g) * dt;
        for (((v, &u), &h), &s) in self.u2.iter_mut().zip(u.iter()).zip(&self.h1).zip(&self.s1) {
            *v = u + dt * h + c * s;
        }
        // reuse h2 as scratch for the implicit right-hand side
        std::mem::swap(&mut self.u2, &mut self.h2);
        system.implicit_solve(&self.h2, h, &mut self.u2);
        system.source(&self.u2, &mut self.s2);
        system.explicit(&self.u2, t + dt, 1, &mut self.h2)?;

        let half = T::half() * dt;
        let increments = self.h1.iter().zip(&self.h2).zip(self.s1.iter().zip(&self.s2));
        for (v, ((&h1, &h2), (&s1, &s2))) in u.iter_mut().zip(increments) {
            *v += half * ((h1 + h2) + (s1 + s2));
        }
        system.end_step(dt);
        Ok(())
    }
}

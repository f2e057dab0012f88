//! Boundary profile building blocks: sinusoids, sigmoid steps, and the
//! temporary withdrawal perturbation with a random onset.

use std::f64::consts::PI;
use std::sync::Arc;

use serde::{Deserialize, Serialize};

use crate::error::{Result, SfvError};
use crate::network::Profile;

/// Smooth unit step `h(t) = (erf(2t) + 1) / 2`.
pub fn sigmoid(t: f64) -> f64 {
    0.5 * (libm::erf(2.0 * t) + 1.0)
}

/// Inlet density `ρ0 (1 + sin(6πt/T) / 10)` and outlet flux
/// `q0 (1 + sin(4πt/T) / 10)` of the single-pipe baseline.
pub fn sinusoidal_bc(t: f64, horizon: f64, rho0: f64, q0: f64) -> (f64, f64) {
    (
        rho0 * (1.0 + 0.1 * (6.0 * PI * t / horizon).sin()),
        q0 * (1.0 + 0.1 * (4.0 * PI * t / horizon).sin()),
    )
}

/// Outlet flux with the nominal flow scaled by the random factor `y`.
pub fn interval_modifier(t: f64, y: f64, horizon: f64, q0: f64) -> f64 {
    sinusoidal_bc(t, horizon, 0.0, q0 * y).1
}

/// Timing of a temporary perturbation: ramp up over `[T_p, T_p¹]`, plateau
/// until `T_p²`, ramp down until `T_p³`. The knots sit at the given
/// fractions of `duration` after the onset.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PerturbationSpec {
    pub onset: f64,
    pub duration: f64,
    #[serde(default = "default_knot_ratios")]
    pub knot_ratios: [f64; 3],
}

pub fn default_knot_ratios() -> [f64; 3] {
    [0.1, 0.9, 1.0]
}

impl PerturbationSpec {
    pub fn new(onset: f64, duration: f64) -> Result<Self> {
        let spec = Self {
            onset,
            duration,
            knot_ratios: default_knot_ratios(),
        };
        spec.validate()?;
        Ok(spec)
    }

    pub fn validate(&self) -> Result<()> {
        let [r1, r2, r3] = self.knot_ratios;
        let ordered = 0.0 < r1 && r1 <= r2 && r2 < r3;
        if !(self.duration > 0.0) || !self.onset.is_finite() || !ordered {
            return Err(SfvError::InvalidParameter(format!(
                "perturbation needs positive duration and knot ratios 0 < r1 <= r2 < r3, got {self:?}"
            )));
        }
        Ok(())
    }

    /// `(T_p, T_p¹, T_p², T_p³)`.
    pub fn knots(&self) -> (f64, f64, f64, f64) {
        let [r1, r2, r3] = self.knot_ratios;
        (
            self.onset,
            self.onset + r1 * self.duration,
            self.onset + r2 * self.duration,
            self.onset + r3 * self.duration,
        )
    }
}

/// Withdrawal switching from `d1` to `d2` and back; `d1` and `d2` are the
/// baseline and elevated values at time `t`.
pub fn perturbed_withdrawal(t: f64, d1: f64, d2: f64, spec: &PerturbationSpec) -> f64 {
    let (t0, t1, t2, t3) = spec.knots();
    if t <= t0 || t >= t3 {
        d1
    } else if t < t1 {
        (d2 - d1) / (t1 - t0) * (t - t0) + d1
    } else if t <= t2 {
        d2
    } else {
        (d1 - d2) / (t3 - t2) * (t - t2) + d2
    }
}

/// `amplitude · h((t − center) / width)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SigmoidTerm {
    pub amplitude: f64,
    pub center: f64,
    pub width: f64,
}

/// `amplitude · sin(2π t / period)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SineTerm {
    pub amplitude: f64,
    pub period: f64,
}

/// Random-onset perturbation attached to a profile. The onset is
/// `onset_offset + onset_scale · y` and the elevated level is
/// `elevated_factor · d1(t) + elevated_offset`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RandomPerturbation {
    #[serde(default)]
    pub onset_offset: f64,
    pub onset_scale: f64,
    pub duration: f64,
    #[serde(default = "default_knot_ratios")]
    pub knot_ratios: [f64; 3],
    #[serde(default = "one")]
    pub elevated_factor: f64,
    #[serde(default)]
    pub elevated_offset: f64,
}

fn one() -> f64 {
    1.0
}

impl RandomPerturbation {
    pub fn spec(&self, y: f64) -> PerturbationSpec {
        PerturbationSpec {
            onset: self.onset_offset + self.onset_scale * y,
            duration: self.duration,
            knot_ratios: self.knot_ratios,
        }
    }
}

/// Declarative profile `f(t, y)`: a constant plus sigmoid and sine terms,
/// optionally multiplied by `y`, optionally carrying a random perturbation.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ProfileSpec {
    pub base: f64,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub sigmoids: Vec<SigmoidTerm>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub sines: Vec<SineTerm>,
    #[serde(default, skip_serializing_if = "std::ops::Not::not")]
    pub scale_by_parameter: bool,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub perturbation: Option<RandomPerturbation>,
}

impl ProfileSpec {
    pub fn constant(base: f64) -> Self {
        Self {
            base,
            sigmoids: Vec::new(),
            sines: Vec::new(),
            scale_by_parameter: false,
            perturbation: None,
        }
    }

    pub fn validate(&self, what: &str) -> Result<()> {
        let finite = self.base.is_finite()
            && self
                .sigmoids
                .iter()
                .all(|s| s.amplitude.is_finite() && s.center.is_finite() && s.width > 0.0)
            && self.sines.iter().all(|s| s.amplitude.is_finite() && s.period > 0.0);
        if !finite {
            return Err(SfvError::Config(format!(
                "{what}: profile terms must be finite with positive widths and periods"
            )));
        }
        if let Some(p) = &self.perturbation {
            p.spec(0.0)
                .validate()
                .map_err(|e| SfvError::Config(format!("{what}: {e}")))?;
        }
        Ok(())
    }

    /// Value without the perturbation.
    pub fn baseline(&self, t: f64, y: f64) -> f64 {
        let mut v = self.base;
        for s in &self.sigmoids {
            v += s.amplitude * sigmoid((t - s.center) / s.width);
        }
        for s in &self.sines {
            v += s.amplitude * (2.0 * PI * t / s.period).sin();
        }
        if self.scale_by_parameter {
            v *= y;
        }
        v
    }

    pub fn evaluate(&self, t: f64, y: f64) -> f64 {
        let d1 = self.baseline(t, y);
        match &self.perturbation {
            None => d1,
            Some(p) => {
                let d2 = p.elevated_factor * d1 + p.elevated_offset;
                perturbed_withdrawal(t, d1, d2, &p.spec(y))
            }
        }
    }

    pub fn to_profile(&self) -> Profile<f64> {
        let spec = self.clone();
        Arc::new(move |t, y| spec.evaluate(t, y))
    }
}

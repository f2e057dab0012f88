//! Boundary data, random modifiers, and named scenario presets.

pub mod presets;
pub mod profiles;
pub mod spec;

pub use presets::{benchmark_profiles, preset, BenchmarkValues, PRESET_NAMES};
pub use profiles::{
    interval_modifier, perturbed_withdrawal, sigmoid, sinusoidal_bc, PerturbationSpec, ProfileSpec, RandomPerturbation,
    SigmoidTerm, SineTerm,
};
pub use spec::{
    NetworkScenario, ParameterSpec, ProfileBoundary, Scenario, ScenarioSpec, SinglePipeScenario,
};

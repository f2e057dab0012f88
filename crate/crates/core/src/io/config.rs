//! Run configuration documents (TOML).
//!
//! A document has a `schema_version`, a `[run]` table selecting the mode and
//! outputs, an optional `[solver]` table with the discretization, an optional
//! `[convergence]` table, and a `[scenario]` table that either names a preset
//! (`preset = "network5-deterministic"`) or spells the scenario out in full.

use std::path::{Path, PathBuf};

use serde::de::DeserializeOwned;
use serde::{Deserialize, Serialize};

use crate::error::{Result, SfvError};
use crate::run::SolverSettings;
use crate::scenarios::{preset, ParameterSpec, ScenarioSpec};

pub const SCHEMA_VERSION: u32 = 1;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum RunMode {
    /// One solve at a single parameter value.
    Deterministic,
    /// Stochastic finite volume solve.
    Sfv,
    /// Monte Carlo over deterministic solves.
    Mc,
    /// Mesh ladder against a fine reference.
    Convergence,
    /// SFV and Monte Carlo side by side.
    Compare,
}

impl RunMode {
    pub fn parse(s: &str) -> Result<Self> {
        match s {
            "deterministic" => Ok(Self::Deterministic),
            "sfv" => Ok(Self::Sfv),
            "mc" => Ok(Self::Mc),
            "convergence" => Ok(Self::Convergence),
            "compare" => Ok(Self::Compare),
            other => Err(SfvError::Config(format!(
                "unknown mode '{other}'; expected deterministic, sfv, mc, convergence or compare"
            ))),
        }
    }

    pub fn as_str(self) -> &'static str {
        match self {
            Self::Deterministic => "deterministic",
            Self::Sfv => "sfv",
            Self::Mc => "mc",
            Self::Convergence => "convergence",
            Self::Compare => "compare",
        }
    }
}

/// Quantity read at an interior point for a distribution dump.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Quantity {
    /// Pressure in Pa.
    #[default]
    Pressure,
    /// Density in kg/m³.
    Density,
    /// Mass flux in kg/(m² s).
    Flux,
    /// Mass flow in kg/s.
    MassRate,
}

/// Request for the law of one quantity at one point and time.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DistributionRequest {
    /// Pipe name.
    pub pipe: String,
    /// Position along the pipe as a fraction of its length.
    pub xfrac: f64,
    /// Simulated time in seconds.
    pub t: f64,
    #[serde(default)]
    pub quantity: Quantity,
    /// Histogram bins; defaults to `max(ny, 10)`.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub bins: Option<usize>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunSection {
    pub mode: RunMode,
    /// Output directory.
    #[serde(default = "default_out")]
    pub out: PathBuf,
    #[serde(default = "default_samples")]
    pub mc_samples: usize,
    #[serde(default = "default_seed")]
    pub seed: u64,
    /// Worker threads for Monte Carlo; results do not depend on it.
    #[serde(default = "default_threads")]
    pub threads: usize,
    /// Parameter value of a deterministic run; defaults to the mean.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub y: Option<f64>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub distributions: Vec<DistributionRequest>,
}

fn default_out() -> PathBuf {
    PathBuf::from("out")
}

fn default_samples() -> usize {
    1000
}

fn default_seed() -> u64 {
    7
}

fn default_threads() -> usize {
    1
}

impl RunSection {
    pub fn new(mode: RunMode) -> Self {
        Self {
            mode,
            out: default_out(),
            mc_samples: default_samples(),
            seed: default_seed(),
            threads: default_threads(),
            y: None,
            distributions: Vec::new(),
        }
    }
}

/// Mesh ladder of a convergence study. Every rung uses `ny = nx / ny_divisor`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ConvergenceSettings {
    pub ladder: Vec<usize>,
    pub orders: Vec<u32>,
    pub ny_divisor: usize,
    pub reference_nx: usize,
    pub reference_ny: usize,
    pub reference_order: u32,
}

impl Default for ConvergenceSettings {
    fn default() -> Self {
        Self {
            ladder: vec![4, 8, 16, 32],
            orders: vec![1, 2],
            ny_divisor: 4,
            reference_nx: 128,
            reference_ny: 32,
            reference_order: 2,
        }
    }
}

/// Bookkeeping written into run manifests; ignored when a manifest is read
/// back as a configuration.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ManifestInfo {
    pub version: String,
    pub created_unix_s: u64,
    pub wall_seconds: f64,
    pub solver_seconds: f64,
    pub steps: usize,
    /// `[nx, ny, quad_nodes]` of every solve in the run.
    pub meshes: Vec<[usize; 3]>,
    pub mass_balance_error: f64,
    pub files: Vec<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PresetRef {
    pub preset: String,
    /// Replaces the preset's random parameter.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub parameter: Option<ParameterSpec>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
#[serde(untagged)]
pub enum ScenarioSource {
    Preset(PresetRef),
    Inline(ScenarioSpec),
}

impl ScenarioSource {
    pub fn preset(name: &str) -> Self {
        Self::Preset(PresetRef {
            preset: name.to_string(),
            parameter: None,
        })
    }

    /// The full scenario description.
    pub fn resolve(&self) -> Result<ScenarioSpec> {
        match self {
            Self::Preset(r) => {
                let mut spec = preset(&r.preset)?;
                if let Some(p) = r.parameter {
                    spec.set_parameter(p);
                }
                Ok(spec)
            }
            Self::Inline(spec) => Ok(spec.clone()),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RunConfig {
    pub schema_version: u32,
    pub run: RunSection,
    pub solver: SolverSettings,
    pub convergence: ConvergenceSettings,
    pub scenario: ScenarioSource,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub manifest: Option<ManifestInfo>,
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct Document<S> {
    schema_version: u32,
    run: RunSection,
    #[serde(default)]
    solver: SolverSettings,
    #[serde(default)]
    convergence: ConvergenceSettings,
    scenario: S,
    #[serde(default)]
    manifest: Option<ManifestInfo>,
}

#[derive(Deserialize)]
struct Probe {
    scenario: Option<toml::Table>,
}

fn parse_document<S: DeserializeOwned>(text: &str) -> Result<Document<S>> {
    toml::from_str(text).map_err(|e| SfvError::Config(e.to_string()))
}

impl RunConfig {
    pub fn new(mode: RunMode, scenario: ScenarioSource) -> Self {
        Self {
            schema_version: SCHEMA_VERSION,
            run: RunSection::new(mode),
            solver: SolverSettings::default(),
            convergence: ConvergenceSettings::default(),
            scenario,
            manifest: None,
        }
    }

    /// Parses and validates a configuration document.
    pub fn parse(text: &str) -> Result<Self> {
        let probe: Probe = toml::from_str(text).map_err(|e| SfvError::Config(e.to_string()))?;
        let table = probe
            .scenario
            .ok_or_else(|| SfvError::Config("missing [scenario] table".into()))?;
        let config = if table.contains_key("preset") {
            Self::from_document(parse_document::<PresetRef>(text)?, ScenarioSource::Preset)
        } else {
            Self::from_document(parse_document::<ScenarioSpec>(text)?, ScenarioSource::Inline)
        };
        config.validate()?;
        Ok(config)
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| SfvError::Config(format!("cannot read {}: {e}", path.display())))?;
        Self::parse(&text).map_err(|e| match e {
            SfvError::Config(msg) => SfvError::Config(format!("{}: {msg}", path.display())),
            other => other,
        })
    }

    fn from_document<S>(doc: Document<S>, wrap: impl FnOnce(S) -> ScenarioSource) -> Self {
        Self {
            schema_version: doc.schema_version,
            run: doc.run,
            solver: doc.solver,
            convergence: doc.convergence,
            scenario: wrap(doc.scenario),
            manifest: doc.manifest,
        }
    }

    pub fn to_toml(&self) -> Result<String> {
        toml::to_string(self).map_err(|e| SfvError::Config(format!("cannot serialize configuration: {e}")))
    }

    /// Checks every cross-field constraint; messages name the offending field.
    pub fn validate(&self) -> Result<()> {
        let config_err = |field: &str, e: SfvError| match e {
            SfvError::Config(msg) => SfvError::Config(format!("{field}: {msg}")),
            other => SfvError::Config(format!("{field}: {other}")),
        };
        if self.schema_version != SCHEMA_VERSION {
            return Err(SfvError::Config(format!(
                "schema_version: unsupported version {}, expected {SCHEMA_VERSION}",
                self.schema_version
            )));
        }
        let spec = self.scenario.resolve().map_err(|e| config_err("scenario", e))?;
        let scenario = spec.build().map_err(|e| config_err("scenario", e))?;
        let horizon = self.solver.horizon_s.unwrap_or_else(|| scenario.horizon());
        self.solver.validate(horizon).map_err(|e| config_err("solver", e))?;
        let run = &self.run;
        if matches!(run.mode, RunMode::Mc | RunMode::Compare) && run.mc_samples == 0 {
            return Err(SfvError::Config("run.mc_samples: must be at least 1".into()));
        }
        if run.threads == 0 {
            return Err(SfvError::Config("run.threads: must be at least 1".into()));
        }
        if !run.distributions.is_empty() && !matches!(run.mode, RunMode::Sfv | RunMode::Deterministic) {
            return Err(SfvError::Config(format!(
                "run.distributions: only available in sfv and deterministic modes, not {}",
                run.mode.as_str()
            )));
        }
        let names = scenario.pipe_names();
        for (k, d) in run.distributions.iter().enumerate() {
            let field = format!("run.distributions[{k}]");
            if !names.contains(&d.pipe) {
                return Err(SfvError::Config(format!(
                    "{field}.pipe: unknown pipe '{}'; pipes are {}",
                    d.pipe,
                    names.join(", ")
                )));
            }
            if !(0.0..=1.0).contains(&d.xfrac) {
                return Err(SfvError::Config(format!("{field}.xfrac: {} is outside [0, 1]", d.xfrac)));
            }
            if !(0.0..=horizon).contains(&d.t) {
                return Err(SfvError::Config(format!(
                    "{field}.t: {} s is outside the horizon [0, {horizon}] s",
                    d.t
                )));
            }
            if d.bins == Some(0) {
                return Err(SfvError::Config(format!("{field}.bins: must be at least 1")));
            }
        }
        if run.mode == RunMode::Convergence {
            let c = &self.convergence;
            if c.ladder.is_empty() || c.orders.is_empty() {
                return Err(SfvError::Config("convergence: ladder and orders must not be empty".into()));
            }
            if c.ny_divisor == 0 {
                return Err(SfvError::Config("convergence.ny_divisor: must be at least 1".into()));
            }
            if let Some(&nx) = c.ladder.iter().find(|&&nx| nx < c.ny_divisor) {
                return Err(SfvError::Config(format!(
                    "convergence.ladder: rung {nx} leaves no stochastic cell (ny = nx / {})",
                    c.ny_divisor
                )));
            }
            if c.reference_nx == 0 || c.reference_ny == 0 {
                return Err(SfvError::Config("convergence: reference mesh must be non-empty".into()));
            }
        }
        Ok(())
    }
}

//! Executes a [`RunConfig`] and writes its output files.

use std::path::{Path, PathBuf};
use std::time::{Instant, SystemTime, UNIX_EPOCH};

use crate::error::{Result, SfvError};
use crate::field::{default_bins, Component, EmpiricalDistribution};
use crate::io::config::{DistributionRequest, ManifestInfo, Quantity, RunConfig, RunMode, ScenarioSource};
use crate::io::convergence::{convergence_study, ConvergenceStudy};
use crate::io::output::{
    distribution_file_name, distribution_rows, timeseries_file_name, write_comparison, write_convergence,
    write_distribution, write_samples, write_text, write_timeseries,
};
use crate::mc_oracle::{compare, run_mc, ComparisonReport, McConfig, McResult};
use crate::run::{run_scenario, RunOutput, Snapshot, SolverSettings};
use crate::scenarios::Scenario;
use crate::stochastic_grid::RandomParameter;

pub const MANIFEST_FILE: &str = "manifest.toml";

/// Summary of one distribution dump.
#[derive(Debug, Clone, PartialEq)]
pub struct DistributionSummary {
    pub file: PathBuf,
    pub rows: Vec<[f64; 3]>,
    pub mean: f64,
    pub std_dev: f64,
    pub skewness: f64,
}

#[derive(Debug, Clone)]
pub struct RunReport {
    pub out_dir: PathBuf,
    pub files: Vec<PathBuf>,
    pub manifest: ManifestInfo,
    pub distributions: Vec<DistributionSummary>,
    pub comparison: Option<ComparisonReport>,
    pub convergence: Option<ConvergenceStudy>,
}

struct Outcome {
    solver_seconds: f64,
    steps: usize,
    meshes: Vec<[usize; 3]>,
    mass_balance_error: f64,
}

struct Writer {
    dir: PathBuf,
    files: Vec<PathBuf>,
}

impl Writer {
    fn path(&mut self, sub: &str, name: &str) -> Result<PathBuf> {
        let dir = if sub.is_empty() { self.dir.clone() } else { self.dir.join(sub) };
        std::fs::create_dir_all(&dir)?;
        let path = dir.join(name);
        self.files.push(path.clone());
        Ok(path)
    }

    fn relative(&self) -> Vec<String> {
        self.files
            .iter()
            .map(|p| p.strip_prefix(&self.dir).unwrap_or(p).display().to_string())
            .collect()
    }
}

/// Runs the configured mode and writes time series, optional distributions,
/// comparison or convergence tables, and a manifest into `run.out`.
pub fn execute(config: &RunConfig) -> Result<RunReport> {
    config.validate()?;
    let started = Instant::now();
    let spec = config.scenario.resolve()?;
    let scenario = spec.build()?;
    let mut writer = Writer {
        dir: config.run.out.clone(),
        files: Vec::new(),
    };
    std::fs::create_dir_all(&writer.dir)?;
    let mut distributions = Vec::new();
    let mut comparison = None;
    let mut convergence = None;

    let outcome = match config.run.mode {
        RunMode::Deterministic | RunMode::Sfv => {
            let (scenario, settings) = if config.run.mode == RunMode::Deterministic {
                deterministic(&scenario, &config.solver, config.run.y)?
            } else {
                (scenario.clone(), config.solver)
            };
            let times: Vec<f64> = config.run.distributions.iter().map(|d| d.t).collect();
            let out = run_scenario(&scenario, &settings, &times)?;
            write_run(&mut writer, "", &out)?;
            for request in &config.run.distributions {
                distributions.push(dump_distribution(&mut writer, &scenario, &out, request)?);
            }
            Outcome {
                solver_seconds: out.solver_seconds,
                steps: out.steps,
                meshes: vec![[settings.nx, settings.ny, settings.quad_nodes]],
                mass_balance_error: out.mass_balance.relative_error(),
            }
        }
        RunMode::Mc => {
            let mc = run_mc(&scenario, &mc_config(config), config.run.threads)?;
            write_mc(&mut writer, "", &mc)?;
            mc_outcome(config, &mc)
        }
        RunMode::Compare => {
            let sfv = run_scenario(&scenario, &config.solver, &[])?;
            write_run(&mut writer, "sfv", &sfv)?;
            let mc = run_mc(&scenario, &mc_config(config), config.run.threads)?;
            write_mc(&mut writer, "mc", &mc)?;
            let report = compare(&sfv, &mc)?;
            write_comparison(&writer.path("", "comparison.csv")?, &scenario.pipe_names(), &report)?;
            comparison = Some(report);
            let mut outcome = mc_outcome(config, &mc);
            outcome.solver_seconds += sfv.solver_seconds;
            outcome.steps += sfv.steps;
            outcome
                .meshes
                .insert(0, [config.solver.nx, config.solver.ny, config.solver.quad_nodes]);
            outcome.mass_balance_error = outcome.mass_balance_error.max(sfv.mass_balance.relative_error());
            outcome
        }
        RunMode::Convergence => {
            let study = convergence_study(&scenario, &config.solver, &config.convergence)?;
            let mut rows = study.rows.clone();
            rows.push(study.reference);
            write_convergence(&writer.path("", "convergence.csv")?, &rows)?;
            let outcome = Outcome {
                solver_seconds: rows.iter().map(|r| r.cpu_seconds).sum(),
                steps: 0,
                meshes: rows.iter().map(|r| [r.nx, r.ny, config.solver.quad_nodes]).collect(),
                mass_balance_error: 0.0,
            };
            convergence = Some(study);
            outcome
        }
    };

    let manifest = ManifestInfo {
        version: env!("CARGO_PKG_VERSION").to_string(),
        created_unix_s: SystemTime::now()
            .duration_since(UNIX_EPOCH)
            .map(|d| d.as_secs())
            .unwrap_or(0),
        wall_seconds: started.elapsed().as_secs_f64(),
        solver_seconds: outcome.solver_seconds,
        steps: outcome.steps,
        meshes: outcome.meshes,
        mass_balance_error: outcome.mass_balance_error,
        files: writer.relative(),
    };
    let recorded = RunConfig {
        scenario: ScenarioSource::Inline(spec),
        manifest: Some(manifest.clone()),
        ..config.clone()
    };
    let manifest_path = writer.path("", MANIFEST_FILE)?;
    write_text(&manifest_path, &recorded.to_toml()?)?;
    Ok(RunReport {
        out_dir: writer.dir.clone(),
        files: writer.files,
        manifest,
        distributions,
        comparison,
        convergence,
    })
}

/// The scenario pinned at one parameter value (default: its mean), solved
/// with a single stochastic cell.
pub fn deterministic(scenario: &Scenario, settings: &SolverSettings, y: Option<f64>) -> Result<(Scenario, SolverSettings)> {
    let parameter = scenario.parameter();
    let y = y.unwrap_or_else(|| parameter.mean());
    let fixed = RandomParameter::fixed(y, parameter.label())?;
    let settings = SolverSettings {
        ny: 1,
        quad_nodes: 1,
        ..*settings
    };
    Ok((scenario.with_parameter(fixed), settings))
}

fn mc_config(config: &RunConfig) -> McConfig {
    McConfig {
        samples: config.run.mc_samples,
        seed: config.run.seed,
        settings: config.solver,
    }
}

fn mc_outcome(config: &RunConfig, mc: &McResult) -> Outcome {
    Outcome {
        solver_seconds: mc.solver_seconds,
        steps: 0,
        meshes: vec![[config.solver.nx, 1, 1]],
        mass_balance_error: mc.samples.iter().map(|s| s.mass_balance_error).fold(0.0, f64::max),
    }
}

fn write_run(writer: &mut Writer, sub: &str, out: &RunOutput) -> Result<()> {
    for series in &out.pipes {
        let path = writer.path(sub, &timeseries_file_name(&series.name))?;
        write_timeseries(&path, &out.times, &series.mean, &series.std)?;
    }
    Ok(())
}

fn write_mc(writer: &mut Writer, sub: &str, mc: &McResult) -> Result<()> {
    for pipe in &mc.pipes {
        let mean: Vec<[f64; 4]> = pipe.moments.iter().map(|m| m.map(|c| c.mean)).collect();
        let std: Vec<[f64; 4]> = pipe.moments.iter().map(|m| m.map(|c| c.std_dev())).collect();
        let path = writer.path(sub, &timeseries_file_name(&pipe.name))?;
        write_timeseries(&path, &mc.times, &mean, &std)?;
    }
    write_samples(&writer.path(sub, "mc_samples.csv")?, &mc.samples)
}

/// Law of `quantity` in the physical cell containing `xfrac · L`.
pub fn snapshot_distribution(
    scenario: &Scenario,
    snapshot: &Snapshot,
    masses: &[f64],
    pipe: usize,
    xfrac: f64,
    quantity: Quantity,
) -> Result<EmpiricalDistribution<f64>> {
    let field = snapshot
        .fields
        .get(pipe)
        .ok_or_else(|| SfvError::DimensionMismatch(format!("no field for pipe index {pipe}")))?;
    let cell = ((xfrac * field.nx() as f64).floor() as usize).min(field.nx() - 1);
    let a = scenario.gas().wave_speed();
    let area = scenario.pipe(pipe).area();
    let (component, scale) = match quantity {
        Quantity::Pressure => (Component::Density, a * a),
        Quantity::Density => (Component::Density, 1.0),
        Quantity::Flux => (Component::Flux, 1.0),
        Quantity::MassRate => (Component::Flux, area),
    };
    let values: Vec<f64> = (0..field.ny())
        .map(|j| scale * field.component(component)[j * field.nx() + cell])
        .collect();
    EmpiricalDistribution::from_atoms(&values, masses)
}

fn dump_distribution(
    writer: &mut Writer,
    scenario: &Scenario,
    out: &RunOutput,
    request: &DistributionRequest,
) -> Result<DistributionSummary> {
    let pipe = scenario
        .pipe_names()
        .iter()
        .position(|n| *n == request.pipe)
        .ok_or_else(|| SfvError::Config(format!("unknown pipe '{}'", request.pipe)))?;
    let snapshot = out
        .snapshots
        .iter()
        .min_by(|a, b| (a.time - request.t).abs().total_cmp(&(b.time - request.t).abs()))
        .ok_or_else(|| SfvError::Config(format!("no snapshot near t = {} s", request.t)))?;
    let dist = snapshot_distribution(scenario, snapshot, out.grid.masses(), pipe, request.xfrac, request.quantity)?;
    let bins = request.bins.unwrap_or_else(|| default_bins(out.grid.cells()));
    let rows = distribution_rows(&dist, bins);
    let file = writer.path("", &distribution_file_name(&request.pipe, request.xfrac, request.t))?;
    write_distribution(&file, &rows)?;
    Ok(DistributionSummary {
        file,
        rows,
        mean: dist.mean(),
        std_dev: dist.variance().sqrt(),
        skewness: dist.skewness(),
    })
}

/// Reads a manifest back as a runnable configuration.
pub fn load_manifest(dir: &Path) -> Result<RunConfig> {
    RunConfig::load(&dir.join(MANIFEST_FILE))
}

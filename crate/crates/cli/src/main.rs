use std::path::PathBuf;
use std::process::ExitCode;

use clap::Parser;
use sfv_core::io::{execute, RunConfig, RunMode, RunReport, ScenarioSource};
use sfv_core::run::CHANNELS;
use sfv_core::SfvError;

/// Transient gas flow in pipes and networks with uncertain boundary data.
#[derive(Debug, Parser)]
#[command(name = "simulate", version)]
struct Args {
    /// Run configuration (TOML).
    #[arg(long)]
    config: Option<PathBuf>,
    /// Named scenario; replaces the scenario of the configuration.
    #[arg(long)]
    scenario: Option<String>,
    /// deterministic, sfv, mc, convergence or compare.
    #[arg(long)]
    mode: Option<String>,
    #[arg(long)]
    nx: Option<usize>,
    #[arg(long)]
    ny: Option<usize>,
    #[arg(long)]
    order: Option<u32>,
    #[arg(long)]
    cfl: Option<f64>,
    #[arg(long)]
    quad_nodes: Option<usize>,
    #[arg(long)]
    mc_samples: Option<usize>,
    #[arg(long)]
    seed: Option<u64>,
    #[arg(long)]
    threads: Option<usize>,
    /// Output directory.
    #[arg(long)]
    out: Option<PathBuf>,
}

fn build_config(args: &Args) -> Result<RunConfig, SfvError> {
    let mut config = match (&args.config, &args.scenario) {
        (Some(path), _) => RunConfig::load(path)?,
        (None, Some(name)) => RunConfig::new(RunMode::Sfv, ScenarioSource::preset(name)),
        (None, None) => return Err(SfvError::Config("either --config or --scenario is required".into())),
    };
    if let Some(name) = &args.scenario {
        config.scenario = ScenarioSource::preset(name);
    }
    if let Some(mode) = &args.mode {
        config.run.mode = RunMode::parse(mode)?;
    }
    let s = &mut config.solver;
    s.nx = args.nx.unwrap_or(s.nx);
    s.ny = args.ny.unwrap_or(s.ny);
    s.order = args.order.unwrap_or(s.order);
    s.cfl = args.cfl.unwrap_or(s.cfl);
    s.quad_nodes = args.quad_nodes.unwrap_or(s.quad_nodes);
    let r = &mut config.run;
    r.mc_samples = args.mc_samples.unwrap_or(r.mc_samples);
    r.seed = args.seed.unwrap_or(r.seed);
    r.threads = args.threads.unwrap_or(r.threads);
    if let Some(out) = &args.out {
        r.out = out.clone();
    }
    config.validate()?;
    Ok(config)
}

fn print_report(config: &RunConfig, report: &RunReport) {
    println!(
        "{} run finished in {:.2} s (solver {:.2} s), output in {}",
        config.run.mode.as_str(),
        report.manifest.wall_seconds,
        report.manifest.solver_seconds,
        report.out_dir.display()
    );
    if config.run.mode != RunMode::Convergence {
        println!("mass balance relative error: {:.3e}", report.manifest.mass_balance_error);
    }
    for d in &report.distributions {
        println!(
            "{}: mean {:.6e}, std {:.6e}, skewness {:.4}",
            d.file.display(),
            d.mean,
            d.std_dev,
            d.skewness
        );
    }
    if let Some(study) = &report.convergence {
        println!("nx  ny  order  l1_error_rho  l1_error_q  cpu_s");
        for r in &study.rows {
            println!(
                "{:<3} {:<3} {:<6} {:<13.4e} {:<11.4e} {:.3}",
                r.nx, r.ny, r.order, r.l1_error_rho, r.l1_error_q, r.cpu_seconds
            );
        }
    }
    if let Some(cmp) = &report.comparison {
        for (p, channels) in cmp.pipes.iter().enumerate() {
            for (name, c) in CHANNELS.iter().zip(channels) {
                println!(
                    "pipe {} {name}: mean rel Linf {:.3e}, std max z {:.2}",
                    p + 1,
                    c.mean_linf,
                    c.std_max_z
                );
            }
        }
    }
}

fn main() -> ExitCode {
    let args = Args::parse();
    let config = match build_config(&args) {
        Ok(c) => c,
        Err(e) => {
            eprintln!("error: {e}");
            return ExitCode::from(2);
        }
    };
    match execute(&config) {
        Ok(report) => {
            print_report(&config, &report);
            ExitCode::SUCCESS
        }
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(if e.is_config_error() { 2 } else { 3 })
        }
    }
}

//! Mesh-refinement study against a fine reference solve.

use crate::error::{Result, SfvError};
use crate::io::config::ConvergenceSettings;
use crate::io::output::ConvergenceRow;
use crate::run::{output_times, run_scenario, RunOutput, SolverSettings};
use crate::scenarios::Scenario;

/// Time-averaged L1 distance of two series sampled on `times`:
/// `Σ_k (t_k − t_{k−1}) |a_k − b_k| / (t_n − t_0)`.
pub fn l1_time_error(times: &[f64], a: &[f64], b: &[f64]) -> f64 {
    let span = times.last().copied().unwrap_or(0.0) - times.first().copied().unwrap_or(0.0);
    if times.len() < 2 || span <= 0.0 {
        return a.iter().zip(b).map(|(x, y)| (x - y).abs()).fold(0.0, f64::max);
    }
    let sum: f64 = (1..times.len())
        .map(|k| (times[k] - times[k - 1]) * (a[k] - b[k]).abs())
        .sum();
    sum / span
}

/// Expected cell averages `(ρ_i, q_i)` of a single-pipe run at every output time.
fn mean_profiles(out: &RunOutput) -> Vec<(Vec<f64>, Vec<f64>)> {
    let masses = out.grid.masses();
    out.snapshots
        .iter()
        .map(|s| {
            let f = &s.fields[0];
            let nx = f.nx();
            let mut rho = vec![0.0; nx];
            let mut q = vec![0.0; nx];
            for (j, &w) in masses.iter().enumerate() {
                for i in 0..nx {
                    rho[i] += w * f.rho()[j * nx + i];
                    q[i] += w * f.q()[j * nx + i];
                }
            }
            (rho, q)
        })
        .collect()
}

/// Average of a piecewise constant profile on `n` equal cells over the
/// fraction `[lo, hi]` of the pipe.
pub fn project_average(profile: &[f64], lo: f64, hi: f64) -> f64 {
    let n = profile.len() as f64;
    let mut sum = 0.0;
    for (i, &v) in profile.iter().enumerate() {
        let (a, b) = (i as f64 / n, (i + 1) as f64 / n);
        let overlap = b.min(hi) - a.max(lo);
        if overlap > 0.0 {
            sum += overlap * v;
        }
    }
    sum / (hi - lo)
}

/// Mean density of the outlet cell and mean flux of the inlet cell of a
/// mesh with `nx` cells, taken from `profiles` by cell-average projection.
fn boundary_cells(profiles: &[(Vec<f64>, Vec<f64>)], nx: usize) -> (Vec<f64>, Vec<f64>) {
    let h = 1.0 / nx as f64;
    profiles
        .iter()
        .map(|(rho, q)| (project_average(rho, 1.0 - h, 1.0), project_average(q, 0.0, h)))
        .unzip()
}

#[derive(Debug, Clone)]
pub struct ConvergenceStudy {
    /// Rungs ordered by order, then by `nx`.
    pub rows: Vec<ConvergenceRow>,
    pub reference: ConvergenceRow,
}

impl ConvergenceStudy {
    pub fn rows_of_order(&self, order: u32) -> Vec<ConvergenceRow> {
        self.rows.iter().filter(|r| r.order == order).copied().collect()
    }
}

/// Runs every `(order, nx)` rung and the reference with the remaining
/// settings of `base`, and measures the errors of the mean density in the
/// outlet cell and the mean flux in the inlet cell against the reference
/// averaged over the same cells.
pub fn convergence_study(
    scenario: &Scenario,
    base: &SolverSettings,
    settings: &ConvergenceSettings,
) -> Result<ConvergenceStudy> {
    if scenario.pipe_count() != 1 {
        return Err(SfvError::Config(format!(
            "convergence studies need a single-pipe scenario, '{}' has {} pipes",
            scenario.name(),
            scenario.pipe_count()
        )));
    }
    let solve = |nx: usize, ny: usize, order: u32| {
        let s = SolverSettings { nx, ny, order, ..*base };
        let horizon = base.horizon_s.unwrap_or_else(|| scenario.horizon());
        run_scenario(scenario, &s, &output_times(horizon, base.output_interval_s))
    };
    let reference = solve(settings.reference_nx, settings.reference_ny, settings.reference_order)?;
    let reference_profiles = mean_profiles(&reference);
    let mut rows = Vec::with_capacity(settings.orders.len() * settings.ladder.len());
    for &order in &settings.orders {
        for &nx in &settings.ladder {
            let ny = nx / settings.ny_divisor;
            let out = solve(nx, ny, order)?;
            let (rho, q) = boundary_cells(&mean_profiles(&out), nx);
            let (ref_rho, ref_q) = boundary_cells(&reference_profiles, nx);
            rows.push(ConvergenceRow {
                nx,
                ny,
                order,
                l1_error_rho: l1_time_error(&out.times, &rho, &ref_rho),
                l1_error_q: l1_time_error(&out.times, &q, &ref_q),
                cpu_seconds: out.solver_seconds,
            });
        }
    }
    Ok(ConvergenceStudy {
        rows,
        reference: ConvergenceRow {
            nx: settings.reference_nx,
            ny: settings.reference_ny,
            order: settings.reference_order,
            l1_error_rho: 0.0,
            l1_error_q: 0.0,
            cpu_seconds: reference.solver_seconds,
        },
    })
}

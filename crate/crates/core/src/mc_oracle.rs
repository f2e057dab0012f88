//! Monte Carlo reference: one deterministic run per sampled parameter value,
//! aggregated with mergeable streaming moments.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::error::{Result, SfvError};
use crate::run::{run_scenario, RunOutput, SolverSettings, CHANNELS};
use crate::scenarios::Scenario;
use crate::stochastic_grid::RandomParameter;

/// Running count, mean and central moment sums up to fourth order.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct Moments {
    pub count: u64,
    pub mean: f64,
    m2: f64,
    m3: f64,
    m4: f64,
}

impl Moments {
    pub fn push(&mut self, x: f64) {
        let n1 = self.count as f64;
        self.count += 1;
        let n = self.count as f64;
        let delta = x - self.mean;
        let dn = delta / n;
        let dn2 = dn * dn;
        let term = delta * dn * n1;
        self.mean += dn;
        self.m4 += term * dn2 * (n * n - 3.0 * n + 3.0) + 6.0 * dn2 * self.m2 - 4.0 * dn * self.m3;
        self.m3 += term * dn * (n - 2.0) - 3.0 * dn * self.m2;
        self.m2 += term;
    }

    /// Combines two disjoint sample sets.
    pub fn merge(&self, other: &Self) -> Self {
        if self.count == 0 {
            return *other;
        }
        if other.count == 0 {
            return *self;
        }
        let (na, nb) = (self.count as f64, other.count as f64);
        let n = na + nb;
        let delta = other.mean - self.mean;
        let d2 = delta * delta;
        let m2 = self.m2 + other.m2 + d2 * na * nb / n;
        let m3 = self.m3
            + other.m3
            + delta * d2 * na * nb * (na - nb) / (n * n)
            + 3.0 * delta * (na * other.m2 - nb * self.m2) / n;
        let m4 = self.m4
            + other.m4
            + d2 * d2 * na * nb * (na * na - na * nb + nb * nb) / (n * n * n)
            + 6.0 * d2 * (na * na * other.m2 + nb * nb * self.m2) / (n * n)
            + 4.0 * delta * (na * other.m3 - nb * self.m3) / n;
        Self {
            count: self.count + other.count,
            mean: self.mean + delta * nb / n,
            m2,
            m3,
            m4,
        }
    }

    /// Unbiased sample variance; zero below two samples.
    pub fn variance(&self) -> f64 {
        if self.count < 2 {
            0.0
        } else {
            (self.m2 / (self.count as f64 - 1.0)).max(0.0)
        }
    }

    pub fn std_dev(&self) -> f64 {
        self.variance().sqrt()
    }

    /// Standard error of the mean.
    pub fn std_error_mean(&self) -> f64 {
        if self.count == 0 {
            return 0.0;
        }
        (self.variance() / self.count as f64).sqrt()
    }

    /// Large-sample standard error of the standard deviation,
    /// `sqrt((μ4 − σ⁴) / n) / (2σ)`.
    pub fn std_error_std(&self) -> f64 {
        if self.count < 2 {
            return 0.0;
        }
        let n = self.count as f64;
        let var = self.m2 / n;
        if var <= 0.0 {
            return 0.0;
        }
        let mu4 = self.m4 / n;
        ((mu4 - var * var).max(0.0) / n).sqrt() / (2.0 * var.sqrt())
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct McConfig {
    pub samples: usize,
    pub seed: u64,
    /// Discretization of each sample run; `ny` and `quad_nodes` are forced to 1.
    pub settings: SolverSettings,
}

/// Moments of every channel of one pipe at every output time.
#[derive(Debug, Clone, PartialEq)]
pub struct McPipe {
    pub name: String,
    pub moments: Vec<[Moments; 4]>,
}

impl McPipe {
    pub fn mean_of(&self, c: usize) -> Vec<f64> {
        self.moments.iter().map(|m| m[c].mean).collect()
    }

    pub fn std_of(&self, c: usize) -> Vec<f64> {
        self.moments.iter().map(|m| m[c].std_dev()).collect()
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct McSample {
    pub index: usize,
    pub y: f64,
    pub mass_balance_error: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct McResult {
    pub times: Vec<f64>,
    pub pipes: Vec<McPipe>,
    pub samples: Vec<McSample>,
    pub solver_seconds: f64,
}

/// `y` of sample `index`: inverse CDF of a uniform draw from a ChaCha stream
/// keyed by `(seed, index)`, so any sample can be regenerated on its own.
pub fn sample_parameter(parameter: &RandomParameter<f64>, seed: u64, index: usize) -> f64 {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(index as u64);
    parameter.inverse_cdf(rng.gen::<f64>())
}

/// Samples per aggregation block; blocks are merged in index order.
const BLOCK: usize = 64;

struct Block {
    pipes: Vec<Vec<[Moments; 4]>>,
    samples: Vec<McSample>,
    times: Vec<f64>,
    seconds: f64,
}

fn run_block(scenario: &Scenario, config: &McConfig, range: std::ops::Range<usize>) -> Result<Block> {
    let settings = SolverSettings {
        ny: 1,
        quad_nodes: 1,
        ..config.settings
    };
    let mut block = Block {
        pipes: Vec::new(),
        samples: Vec::with_capacity(range.len()),
        times: Vec::new(),
        seconds: 0.0,
    };
    for index in range {
        let y = sample_parameter(scenario.parameter(), config.seed, index);
        let out: RunOutput = RandomParameter::fixed(y, scenario.parameter().label())
            .and_then(|p| run_scenario(&scenario.with_parameter(p), &settings, &[]))
            .map_err(|e| SfvError::Sample {
                index,
                y,
                source: Box::new(e),
            })?;
        if block.pipes.is_empty() {
            block.pipes = vec![vec![[Moments::default(); 4]; out.times.len()]; out.pipes.len()];
            block.times = out.times.clone();
        }
        for (acc, series) in block.pipes.iter_mut().zip(&out.pipes) {
            for (slot, values) in acc.iter_mut().zip(&series.mean) {
                for c in 0..CHANNELS.len() {
                    slot[c].push(values[c]);
                }
            }
        }
        block.seconds += out.solver_seconds;
        block.samples.push(McSample {
            index,
            y,
            mass_balance_error: out.mass_balance.relative_error(),
        });
    }
    Ok(block)
}

/// Runs `config.samples` deterministic solves of `scenario`. Blocks of
/// samples may run on several threads; the merge order is fixed, so the
/// result does not depend on the thread count.
pub fn run_mc(scenario: &Scenario, config: &McConfig, threads: usize) -> Result<McResult> {
    if config.samples == 0 {
        return Err(SfvError::InvalidParameter("Monte Carlo needs at least one sample".into()));
    }
    let n_blocks = config.samples.div_ceil(BLOCK);
    let range = |b: usize| b * BLOCK..((b + 1) * BLOCK).min(config.samples);
    let threads = threads.clamp(1, n_blocks);
    let mut blocks: Vec<Option<Result<Block>>> = (0..n_blocks).map(|_| None).collect();
    if threads == 1 {
        for (b, slot) in blocks.iter_mut().enumerate() {
            *slot = Some(run_block(scenario, config, range(b)));
        }
    } else {
        std::thread::scope(|scope| {
            let handles: Vec<_> = (0..threads)
                .map(|w| {
                    scope.spawn(move || {
                        (w..n_blocks)
                            .step_by(threads)
                            .map(|b| (b, run_block(scenario, config, range(b))))
                            .collect::<Vec<_>>()
                    })
                })
                .collect();
            for h in handles {
                for (b, r) in h.join().expect("Monte Carlo worker panicked") {
                    blocks[b] = Some(r);
                }
            }
        });
    }

    let mut result = McResult {
        times: Vec::new(),
        pipes: Vec::new(),
        samples: Vec::with_capacity(config.samples),
        solver_seconds: 0.0,
    };
    let names = scenario.pipe_names();
    for block in blocks.into_iter().flatten() {
        let block = block?;
        if result.pipes.is_empty() {
            result.times = block.times;
            result.pipes = names
                .iter()
                .zip(block.pipes)
                .map(|(name, moments)| McPipe {
                    name: name.clone(),
                    moments,
                })
                .collect();
        } else {
            for (acc, part) in result.pipes.iter_mut().zip(&block.pipes) {
                for (a, p) in acc.moments.iter_mut().zip(part) {
                    for c in 0..CHANNELS.len() {
                        a[c] = a[c].merge(&p[c]);
                    }
                }
            }
        }
        result.samples.extend(block.samples);
        result.solver_seconds += block.seconds;
    }
    Ok(result)
}

/// Agreement of one channel of one pipe between SFV and Monte Carlo.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ChannelComparison {
    /// `max_t |m_sfv − m_mc| / max_t |m_mc|`.
    pub mean_linf: f64,
    /// `Σ_t |m_sfv − m_mc| / Σ_t |m_mc|`.
    pub mean_l1: f64,
    pub std_linf: f64,
    pub std_l1: f64,
    /// Largest mean difference in units of the MC standard error.
    pub mean_max_z: f64,
    /// Largest standard deviation difference in units of its MC standard error.
    pub std_max_z: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ComparisonReport {
    /// `[pipe][channel]`, channels ordered as [`CHANNELS`].
    pub pipes: Vec<[ChannelComparison; 4]>,
}

fn relative_norms(a: &[f64], b: &[f64]) -> (f64, f64) {
    let (mut diff_max, mut ref_max, mut diff_sum, mut ref_sum) = (0.0f64, 0.0f64, 0.0, 0.0);
    for (&x, &y) in a.iter().zip(b) {
        let d = (x - y).abs();
        diff_max = diff_max.max(d);
        ref_max = ref_max.max(y.abs());
        diff_sum += d;
        ref_sum += y.abs();
    }
    let ratio = |d: f64, r: f64| if d == 0.0 { 0.0 } else { d / r };
    (ratio(diff_max, ref_max), ratio(diff_sum, ref_sum))
}

fn max_z(a: &[f64], b: &[f64], se: &[f64]) -> f64 {
    a.iter()
        .zip(b)
        .zip(se)
        .map(|((&x, &y), &s)| {
            let d = (x - y).abs();
            if d == 0.0 {
                0.0
            } else {
                d / s
            }
        })
        .fold(0.0, f64::max)
}

/// Compares SFV statistics with Monte Carlo moments on the same output grid.
pub fn compare(sfv: &RunOutput, mc: &McResult) -> Result<ComparisonReport> {
    let same_grid = sfv.times.len() == mc.times.len()
        && sfv.times.iter().zip(&mc.times).all(|(a, b)| (a - b).abs() <= 1e-9 * a.abs().max(1.0));
    if !same_grid || sfv.pipes.len() != mc.pipes.len() {
        return Err(SfvError::GridMismatch(format!(
            "SFV has {} outputs on {} pipes, Monte Carlo {} outputs on {} pipes",
            sfv.times.len(),
            sfv.pipes.len(),
            mc.times.len(),
            mc.pipes.len()
        )));
    }
    let pipes = sfv
        .pipes
        .iter()
        .zip(&mc.pipes)
        .map(|(s, m)| {
            std::array::from_fn(|c| {
                let (sm, mm) = (s.mean_of(c), m.mean_of(c));
                let (ss, ms) = (s.std_of(c), m.std_of(c));
                let se_mean: Vec<f64> = m.moments.iter().map(|x| x[c].std_error_mean()).collect();
                let se_std: Vec<f64> = m.moments.iter().map(|x| x[c].std_error_std()).collect();
                let (mean_linf, mean_l1) = relative_norms(&sm, &mm);
                let (std_linf, std_l1) = relative_norms(&ss, &ms);
                ChannelComparison {
                    mean_linf,
                    mean_l1,
                    std_linf,
                    std_l1,
                    mean_max_z: max_z(&sm, &mm, &se_mean),
                    std_max_z: max_z(&ss, &ms, &se_std),
                }
            })
        })
        .collect();
    Ok(ComparisonReport { pipes })
}

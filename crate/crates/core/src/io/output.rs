//! CSV writers. Every file starts with a header naming units.

use std::fs::File;
use std::io::Write;
use std::path::Path;

use serde::Serialize;

use crate::error::Result;
use crate::field::EmpiricalDistribution;
use crate::mc_oracle::{ComparisonReport, McSample};
use crate::run::CHANNELS;

pub const TIMESERIES_HEADER: [&str; 9] = [
    "t_s",
    "p_in_mean_Pa",
    "p_in_std_Pa",
    "p_out_mean_Pa",
    "p_out_std_Pa",
    "flow_in_mean_kgps",
    "flow_in_std_kgps",
    "flow_out_mean_kgps",
    "flow_out_std_kgps",
];

pub const DISTRIBUTION_HEADER: [&str; 3] = ["value", "pdf", "cdf"];

pub const CONVERGENCE_HEADER: [&str; 6] = ["nx", "ny", "order", "l1_error_rho", "l1_error_q", "cpu_seconds"];

pub fn timeseries_file_name(pipe: &str) -> String {
    format!("pipe_{pipe}_timeseries.csv")
}

pub fn distribution_file_name(pipe: &str, xfrac: f64, t: f64) -> String {
    format!("distribution_{pipe}_{xfrac}_{t}.csv")
}

fn writer(path: &Path) -> Result<csv::Writer<File>> {
    Ok(csv::Writer::from_writer(File::create(path)?))
}

/// Writes mean and standard deviation of the four boundary channels.
pub fn write_timeseries(path: &Path, times: &[f64], mean: &[[f64; 4]], std: &[[f64; 4]]) -> Result<()> {
    let mut w = writer(path)?;
    w.write_record(TIMESERIES_HEADER)?;
    for ((&t, m), s) in times.iter().zip(mean).zip(std) {
        let mut row = [t; 9];
        for c in 0..CHANNELS.len() {
            row[1 + 2 * c] = m[c];
            row[2 + 2 * c] = s[c];
        }
        w.serialize(row)?;
    }
    w.flush()?;
    Ok(())
}

/// `(value, pdf, cdf)` at the histogram bin edges. `pdf` is the density of
/// the bin starting at `value` (zero past the last edge) and `cdf` is the
/// integral of the histogram up to `value`, so it runs from 0 to 1.
pub fn distribution_rows(dist: &EmpiricalDistribution<f64>, bins: usize) -> Vec<[f64; 3]> {
    let hist = dist.histogram(bins);
    let mut rows = Vec::with_capacity(hist.len() + 1);
    let mut below = 0.0;
    for bin in &hist {
        rows.push([bin.lower, bin.density, below]);
        below = bin.cumulative;
    }
    if let Some(last) = hist.last() {
        rows.push([last.upper, 0.0, 1.0]);
    }
    rows
}

pub fn write_distribution(path: &Path, rows: &[[f64; 3]]) -> Result<()> {
    let mut w = writer(path)?;
    w.write_record(DISTRIBUTION_HEADER)?;
    for row in rows {
        w.serialize(row)?;
    }
    w.flush()?;
    Ok(())
}

/// One rung of a convergence study.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct ConvergenceRow {
    pub nx: usize,
    pub ny: usize,
    pub order: u32,
    pub l1_error_rho: f64,
    pub l1_error_q: f64,
    pub cpu_seconds: f64,
}

pub fn write_convergence(path: &Path, rows: &[ConvergenceRow]) -> Result<()> {
    let mut w = csv::WriterBuilder::new().has_headers(false).from_writer(File::create(path)?);
    w.write_record(CONVERGENCE_HEADER)?;
    for row in rows {
        w.serialize(row)?;
    }
    w.flush()?;
    Ok(())
}

pub fn write_comparison(path: &Path, names: &[String], report: &ComparisonReport) -> Result<()> {
    let mut w = writer(path)?;
    w.write_record([
        "pipe",
        "channel",
        "mean_linf_rel",
        "mean_l1_rel",
        "std_linf_rel",
        "std_l1_rel",
        "mean_max_z",
        "std_max_z",
    ])?;
    for (name, channels) in names.iter().zip(&report.pipes) {
        for (channel, c) in CHANNELS.iter().zip(channels) {
            w.serialize((
                name,
                channel,
                c.mean_linf,
                c.mean_l1,
                c.std_linf,
                c.std_l1,
                c.mean_max_z,
                c.std_max_z,
            ))?;
        }
    }
    w.flush()?;
    Ok(())
}

pub fn write_samples(path: &Path, samples: &[McSample]) -> Result<()> {
    let mut w = writer(path)?;
    w.write_record(["index", "y", "mass_balance_rel_error"])?;
    for s in samples {
        w.serialize((s.index, s.y, s.mass_balance_error))?;
    }
    w.flush()?;
    Ok(())
}

pub fn write_text(path: &Path, text: &str) -> Result<()> {
    File::create(path)?.write_all(text.as_bytes())?;
    Ok(())
}

use std::io::Write;

use serde::{Deserialize, Serialize};

use super::{execute, ConfigError, ExperimentConfig, HarnessError, CSV_HEADER};
use crate::channel::AngleDist;
use crate::protocol::estimate::FlipRate;
use crate::protocol::{Rate, Totals};
use crate::rng::{derive_seed, Purpose};

/// Repeats a base experiment at each listed θ (radians, held fixed per row).
///
/// Row `i` runs with seed `derive_seed(base.seed, Sweep, i)`, so reordering
/// the values changes which random stream each θ sees.
#[derive(Debug, Clone, PartialEq)]
pub struct SweepSpec {
    pub base: ExperimentConfig,
    pub values: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepRow {
    pub theta: f64,
    pub seed: u64,
    pub totals: Totals,
    pub accepted_fraction: f64,
    pub r_b: Rate,
    pub t_p: FlipRate,
    pub key_rate: f64,
}

pub fn run_sweep(spec: &SweepSpec) -> Result<Vec<SweepRow>, HarnessError> {
    if spec.values.is_empty() {
        return Err(ConfigError::Invalid {
            field: "theta".into(),
            reason: "sweep needs at least one value".into(),
        }
        .into());
    }
    spec.values
        .iter()
        .enumerate()
        .map(|(i, &theta)| {
            let mut cfg = spec.base.clone();
            cfg.channel.rotation.theta = AngleDist::Fixed(theta);
            cfg.seed = derive_seed(spec.base.seed, Purpose::Sweep, i as u64);
            cfg.output.path = None;
            let report = execute(&cfg)?;
            let e = &report.run.full_sample;
            Ok(SweepRow {
                theta,
                seed: cfg.seed,
                totals: report.run.totals,
                accepted_fraction: report.run.totals.accepted_fraction(),
                r_b: e.r_b,
                t_p: e.t_p,
                key_rate: report.key_rate.rate_per_accepted_bit,
            })
        })
        .collect()
}

pub fn write_sweep_csv<W: Write>(rows: &[SweepRow], out: W) -> Result<(), HarnessError> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(CSV_HEADER)?;
    for r in rows {
        w.write_record([
            r.theta.to_string(),
            r.totals.sent.to_string(),
            r.totals.delivered.to_string(),
            r.totals.accepted.to_string(),
            r.r_b.value.to_string(),
            r.r_b.se.to_string(),
            r.t_p.value.to_string(),
            r.t_p.se.to_string(),
            r.key_rate.to_string(),
        ])?;
    }
    w.flush().map_err(|source| HarnessError::Io {
        path: "<sweep>".into(),
        source,
    })?;
    Ok(())
}

//! Experiment orchestration: config in, report files out.

use std::fs;
use std::io::{self, Write};
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::bits::BitString;
use crate::distill::{block_invert, privacy_amplify, BlockSpec, DistillError, KeyRateReport};
use crate::protocol::bb84::run_bb84_baseline;
use crate::protocol::protocol1::run_protocol1;
use crate::protocol::protocol2::run_protocol2;
use crate::protocol::protocol3::run_protocol3;
use crate::protocol::{ProtocolError, ProtocolKind, RunReport};
use crate::rng::{derive_seed, stream, Purpose};

mod config;
mod sweep;

pub use config::{
    emit_config, parse_config, BlockConfig, ConfigError, ExperimentConfig, OutputConfig,
    OutputFormat,
};
pub use sweep::{run_sweep, write_sweep_csv, SweepRow, SweepSpec};

/// Header of the CSV summary, shared by single runs and sweeps.
pub const CSV_HEADER: [&str; 9] = [
    "theta", "sent", "delivered", "accepted", "r_b", "r_b_se", "t_p", "t_p_se", "key_rate",
];

#[derive(Debug, Error)]
pub enum HarnessError {
    #[error(transparent)]
    Config(#[from] ConfigError),
    #[error(transparent)]
    Protocol(#[from] ProtocolError),
    #[error(transparent)]
    Distill(#[from] DistillError),
    #[error("{path}: {source}")]
    Io { path: PathBuf, source: io::Error },
    #[error("writing csv: {0}")]
    Csv(#[from] csv::Error),
    #[error("writing json: {0}")]
    Json(#[from] serde_json::Error),
}

impl HarnessError {
    /// Process exit status: 2 for configuration problems, 3 when the run
    /// produced too little data to estimate error rates, 1 otherwise.
    pub fn exit_code(&self) -> i32 {
        match self {
            HarnessError::Config(_) => 2,
            HarnessError::Protocol(ProtocolError::InsufficientData(_)) => 3,
            HarnessError::Protocol(_) => 2,
            _ => 1,
        }
    }

    fn io(path: &Path, source: io::Error) -> Self {
        HarnessError::Io {
            path: path.to_path_buf(),
            source,
        }
    }
}

/// Summary of block-wise bit inversion on the raw key.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BlockInversionSummary {
    pub block_size: usize,
    pub flipped_blocks: Vec<usize>,
    pub consumed_bits: u64,
    /// Sample-based post-inversion error rate; this is what the key rate uses.
    pub estimated_error: f64,
    /// Actual disagreement on the unconsumed bits.
    pub residual_error: f64,
}

/// Everything one experiment produces.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExperimentReport {
    pub config: ExperimentConfig,
    pub run: RunReport,
    pub key_rate: KeyRateReport,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub block_inversion: Option<BlockInversionSummary>,
    /// The published phase-error estimate exceeded `abort_if_tp_above`.
    pub aborted: bool,
    pub final_key: BitString,
}

impl ExperimentReport {
    /// One CSV summary row in [`CSV_HEADER`] order. Rates come from the full
    /// simulated sample; the key rate from the published estimate.
    pub fn csv_record(&self) -> [String; 9] {
        let e = &self.run.full_sample;
        let t = &self.run.totals;
        [
            self.config.channel.rotation.theta.nominal().to_string(),
            t.sent.to_string(),
            t.delivered.to_string(),
            t.accepted.to_string(),
            e.r_b.value.to_string(),
            e.r_b.se.to_string(),
            e.t_p.value.to_string(),
            e.t_p.se.to_string(),
            self.key_rate.rate_per_accepted_bit.to_string(),
        ]
    }
}

pub fn run_protocol(kind: ProtocolKind, cfg: &crate::protocol::RunConfig) -> Result<RunReport, ProtocolError> {
    match kind {
        ProtocolKind::Protocol1 => run_protocol1(cfg),
        ProtocolKind::Protocol2 => run_protocol2(cfg),
        ProtocolKind::Protocol3 => run_protocol3(cfg),
        ProtocolKind::Bb84 => run_bb84_baseline(cfg),
    }
}

/// Runs the configured protocol and post-processes its raw key, without
/// touching the filesystem.
pub fn execute(cfg: &ExperimentConfig) -> Result<ExperimentReport, HarnessError> {
    cfg.validate()?;
    let run = run_protocol(cfg.protocol, &cfg.run_config())?;

    let mut key = run.raw_key.to_vec();
    let mut r_b = run.estimate.r_b.value;
    let mut block_inversion = None;
    if let Some(block) = cfg.block {
        let inv = block_invert(
            &run.raw_key,
            &run.raw_key_bob,
            BlockSpec {
                block_size: block.block_size,
            },
            block.reveal_fraction,
            &mut stream(cfg.seed, Purpose::Blocks, 0),
        )?;
        key = inv.unconsumed(&run.raw_key);
        let bob = inv.unconsumed(&inv.corrected);
        let residual = if key.is_empty() {
            0.0
        } else {
            key.iter().zip(&bob).filter(|(a, b)| a != b).count() as f64 / key.len() as f64
        };
        r_b = inv.estimated_error;
        block_inversion = Some(BlockInversionSummary {
            block_size: block.block_size,
            flipped_blocks: inv.flipped_blocks.clone(),
            consumed_bits: inv.consumed.iter().filter(|&&c| c).count() as u64,
            estimated_error: inv.estimated_error,
            residual_error: residual,
        });
    }

    let t = &run.totals;
    let z_sift_fraction = t.z_basis_matched as f64 / t.sent as f64;
    // negative finite-sample estimates enter the rate as 0
    let t_p = run.estimate.t_p.value.clamp(0.0, 1.0);
    let key_rate = KeyRateReport::new(r_b, t_p, t.accepted_fraction(), z_sift_fraction)?;
    let aborted = run.estimate.t_p.value > cfg.abort_if_tp_above;

    let final_key = if aborted || key_rate.no_key {
        Vec::new()
    } else {
        let out_len = (key_rate.rate_per_accepted_bit * key.len() as f64).floor() as usize;
        privacy_amplify(&key, out_len, derive_seed(cfg.seed, Purpose::Hash, 0))?
    };

    Ok(ExperimentReport {
        config: cfg.clone(),
        run,
        key_rate,
        block_inversion,
        aborted,
        final_key: final_key.into(),
    })
}

/// [`execute`], then writes the report to `cfg.output.path` when one is set.
pub fn run_experiment(cfg: &ExperimentConfig) -> Result<ExperimentReport, HarnessError> {
    let report = execute(cfg)?;
    if let Some(path) = &cfg.output.path {
        let mut buf = Vec::new();
        write_report(&report, cfg.output.format, &mut buf)?;
        fs::write(path, buf).map_err(|e| HarnessError::io(path, e))?;
    }
    Ok(report)
}

pub fn write_report<W: Write>(
    report: &ExperimentReport,
    format: OutputFormat,
    mut out: W,
) -> Result<(), HarnessError> {
    match format {
        OutputFormat::Structured => {
            serde_json::to_writer_pretty(&mut out, report)?;
            out.write_all(b"\n").map_err(|e| HarnessError::io(Path::new("<report>"), e))?;
        }
        OutputFormat::Csv => {
            let mut w = csv::Writer::from_writer(out);
            w.write_record(CSV_HEADER)?;
            w.write_record(report.csv_record())?;
            w.flush().map_err(|e| HarnessError::io(Path::new("<report>"), e))?;
        }
    }
    Ok(())
}

/// Reads and parses a config file.
pub fn load_config(path: &Path) -> Result<ExperimentConfig, HarnessError> {
    let text = fs::read_to_string(path).map_err(|e| HarnessError::io(path, e))?;
    Ok(parse_config(&text)?)
}

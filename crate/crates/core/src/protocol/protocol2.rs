//! Prepare-and-measure subspace protocol.

use rand::Rng;

use super::{
    alice_choose, bob_choose_and_measure, estimate_errors, sift, simulate_codes, CodeBasis,
    ProtocolError, ProtocolKind, RunConfig, RunReport, SiftedRecord, Totals,
};
use crate::channel::{transmit_rotated, TransmitResult};
use crate::qmath::prepare_code;

/// Runs every code through prepare, channel, measurement and sifting.
/// Lost codes are `None`.
pub fn simulate_records(cfg: &RunConfig) -> Result<Vec<Option<SiftedRecord>>, ProtocolError> {
    cfg.validate()?;
    Ok(simulate_codes(cfg, |index, rng, rotation| {
        let label = alice_choose(cfg.z_bias, rng);
        let sent = prepare_code(label);
        let TransmitResult::Delivered(received) = transmit_rotated(&sent, rotation, &cfg.channel, rng)
        else {
            return None;
        };
        let meas = bob_choose_and_measure(&received, &cfg.basis_weights, rng);
        let mut record = sift(index, label, meas);
        record.revealed = rng.random::<f64>() < cfg.error_test.for_basis(label.basis);
        Some(record)
    }))
}

pub fn run_protocol2(cfg: &RunConfig) -> Result<RunReport, ProtocolError> {
    let records = simulate_records(cfg)?;
    report_from_records(cfg, &records)
}

pub fn report_from_records(
    cfg: &RunConfig,
    records: &[Option<SiftedRecord>],
) -> Result<RunReport, ProtocolError> {
    let delivered: Vec<SiftedRecord> = records.iter().flatten().copied().collect();
    let mut totals = Totals {
        sent: cfg.n_codes,
        delivered: delivered.len() as u64,
        ..Default::default()
    };
    let mut raw_key = Vec::new();
    let mut raw_key_bob = Vec::new();
    for r in delivered.iter().filter(|r| r.basis_matched()) {
        totals.basis_matched += 1;
        totals.revealed += r.revealed as u64;
        let is_z = r.label.basis == CodeBasis::Z;
        totals.z_basis_matched += is_z as u64;
        if !r.accepted {
            continue;
        }
        totals.accepted += 1;
        if is_z {
            totals.z_accepted += 1;
            if !r.revealed {
                raw_key.push(r.label.bit);
                raw_key_bob.push(r.bob_bit.expect("accepted Z record carries a bit"));
            }
        }
    }
    totals.key_bits = raw_key.len() as u64;
    let published: Vec<SiftedRecord> = delivered.iter().filter(|r| r.revealed).copied().collect();
    Ok(RunReport {
        protocol: ProtocolKind::Protocol2,
        seed: cfg.seed,
        totals,
        estimate: estimate_errors(&published)?,
        full_sample: estimate_errors(&delivered)?,
        raw_key: raw_key.into(),
        raw_key_bob: raw_key_bob.into(),
    })
}

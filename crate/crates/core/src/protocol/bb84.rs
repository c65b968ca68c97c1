//! Single-photon BB84 over the same collective channel, for comparison.

use rand::Rng;

use super::{alice_choose, direct_report, simulate_codes, DirectRecord, ProtocolError, ProtocolKind, RunConfig, RunReport};
use crate::channel::transmit_qubit;
use crate::qmath::Qubit;

/// Z-basis QBER is reported as `r_b`, X-basis QBER as `t_p`. Nothing is
/// rejected beyond basis sifting.
pub fn run_bb84_baseline(cfg: &RunConfig) -> Result<RunReport, ProtocolError> {
    cfg.validate()?;
    let records = simulate_codes(cfg, |_, rng, rotation| {
        let label = alice_choose(cfg.z_bias, rng);
        let sent = Qubit::eigenstate(label.basis.local(), label.bit);
        let received = transmit_qubit(&sent, rotation, &cfg.channel, rng)?;
        let bob_basis = cfg.basis_weights.choose_zx(rng);
        let bit = received.measure(bob_basis.local(), rng.random());
        Some(DirectRecord {
            label,
            bob_basis,
            accepted: true,
            bob_bit: Some(bit),
            revealed: rng.random::<f64>() < cfg.error_test.for_basis(label.basis),
        })
    });
    direct_report(ProtocolKind::Bb84, cfg, &records)
}

//! CNOT-encoded BB84 with collective decoding.
//!
//! Alice maps a BB84 qubit and an ancilla in `|0⟩` through the gate
//! `|00⟩→|01⟩, |01⟩→|00⟩, |10⟩→|10⟩, |11⟩→|11⟩` (a NOT on the ancilla
//! controlled by the data qubit being 0). Bob applies the same gate, keeps
//! the code only when the ancilla reads 0, and measures the data qubit.

use rand::Rng;

use super::{alice_choose, direct_report, simulate_codes, DirectRecord, ProtocolError, ProtocolKind, RunConfig, RunReport};
use crate::channel::{transmit_rotated, TransmitResult};
use crate::qmath::{Complex, Qubit, TwoQubitState};

/// Flips qubit 2 when qubit 1 is `|0⟩`. Self-inverse.
pub fn anti_cnot(s: &TwoQubitState) -> TwoQubitState {
    let a = s.amplitudes();
    TwoQubitState::from_amplitudes_unchecked([a[1], a[0], a[2], a[3]])
}

/// Encodes a data qubit with a fresh `|0⟩` ancilla.
pub fn protocol1_encode(data: &Qubit) -> TwoQubitState {
    anti_cnot(&TwoQubitState::product(data, &Qubit::zero()))
}

/// Probability that the ancilla reads 0 after decoding.
pub fn protocol1_accept_probability(s: &TwoQubitState) -> f64 {
    let d = anti_cnot(s);
    let a = d.amplitudes();
    a[0].norm_sqr() + a[2].norm_sqr()
}

/// Decodes a received code, sampling the ancilla measurement with `u ∈ [0,1)`.
/// Returns the post-measurement data qubit, or `None` when rejected.
pub fn protocol1_decode_accept(s: &TwoQubitState, u: f64) -> Option<Qubit> {
    let p_accept = protocol1_accept_probability(s);
    if p_accept <= 0.0 || u >= p_accept {
        return None;
    }
    let a = *anti_cnot(s).amplitudes();
    let norm = p_accept.sqrt();
    let amp: [Complex; 2] = [a[0] / norm, a[2] / norm];
    Qubit::new(amp).ok()
}

/// Full run: encode, transmit, decode, then Bob measures the data qubit in
/// Z or X (weights `z`, `x`).
pub fn run_protocol1(cfg: &RunConfig) -> Result<RunReport, ProtocolError> {
    cfg.validate()?;
    let records = simulate_codes(cfg, |_, rng, rotation| {
        let label = alice_choose(cfg.z_bias, rng);
        let data = Qubit::eigenstate(label.basis.local(), label.bit);
        let TransmitResult::Delivered(received) =
            transmit_rotated(&protocol1_encode(&data), rotation, &cfg.channel, rng)
        else {
            return None;
        };
        let bob_basis = cfg.basis_weights.choose_zx(rng);
        let decoded = protocol1_decode_accept(&received, rng.random());
        let measure_u: f64 = rng.random();
        let bob_bit = decoded.map(|q| q.measure(bob_basis.local(), measure_u));
        Some(DirectRecord {
            label,
            bob_basis,
            accepted: decoded.is_some(),
            bob_bit,
            revealed: rng.random::<f64>() < cfg.error_test.for_basis(label.basis),
        })
    });
    direct_report(ProtocolKind::Protocol1, cfg, &records)
}

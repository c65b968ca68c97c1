//! Real-rotation protocol on `|0̄⟩ = |φ⁺⟩`, `|1̄⟩ = |ψ⁻⟩`.
//!
//! Both logical basis states are invariant under `O⊗O` for any real
//! rotation `O`, so every superposition is too. Bob decodes with local
//! measurements only and there is no rejection step:
//!
//! * "Z" decode: both photons in Z; equal bits → 0, differing → 1.
//! * "X" decode: photon 1 in Z, photon 2 in X; `|0+⟩`, `|1−⟩` → 0 and
//!   `|0−⟩`, `|1+⟩` → 1.
//!
//! In both cases the logical bit is the XOR of the two outcome bits.

use rand::Rng;

use super::{
    alice_choose, direct_report, simulate_codes, CodeBasis, CodeLabel, DirectRecord,
    ProtocolError, ProtocolKind, RunConfig, RunReport,
};
use crate::channel::{transmit_rotated, TransmitResult};
use crate::qmath::{measure_local, Complex, LocalBasis, TwoQubitState};

/// `Z0 = |φ⁺⟩`, `Z1 = |ψ⁻⟩`, `X0 = |+′⟩`, `X1 = |−′⟩`.
pub fn prepare_real_code(label: CodeLabel) -> TwoQubitState {
    let half = |a: f64, b: f64, c: f64, d: f64| {
        TwoQubitState::new([a, b, c, d].map(|x| Complex::new(0.5 * x, 0.0)))
            .expect("normalized by construction")
    };
    match (label.basis, label.bit) {
        (CodeBasis::Z, false) => TwoQubitState::phi_plus(),
        (CodeBasis::Z, true) => TwoQubitState::psi_minus(),
        // (|φ⁺⟩ + |ψ⁻⟩)/√2 = (|0⟩|+⟩ − |1⟩|−⟩)/√2
        (CodeBasis::X, false) => half(1.0, 1.0, -1.0, 1.0),
        // (|φ⁺⟩ − |ψ⁻⟩)/√2 = (|0⟩|−⟩ + |1⟩|+⟩)/√2
        (CodeBasis::X, true) => half(1.0, -1.0, 1.0, 1.0),
    }
}

/// Bob's decoding measurement for the chosen logical basis.
pub fn decode_real_code(s: &TwoQubitState, basis: CodeBasis, u: f64) -> bool {
    let second = match basis {
        CodeBasis::Z => LocalBasis::Z,
        CodeBasis::X => LocalBasis::X,
    };
    let (b1, b2) = measure_local(s, LocalBasis::Z, second, u);
    b1 != b2
}

pub fn run_protocol3(cfg: &RunConfig) -> Result<RunReport, ProtocolError> {
    cfg.validate()?;
    let records = simulate_codes(cfg, |_, rng, rotation| {
        let label = alice_choose(cfg.z_bias, rng);
        let TransmitResult::Delivered(received) =
            transmit_rotated(&prepare_real_code(label), rotation, &cfg.channel, rng)
        else {
            return None;
        };
        let bob_basis = cfg.basis_weights.choose_zx(rng);
        let bit = decode_real_code(&received, bob_basis, rng.random());
        Some(DirectRecord {
            label,
            bob_basis,
            accepted: true,
            bob_bit: Some(bit),
            revealed: rng.random::<f64>() < cfg.error_test.for_basis(label.basis),
        })
    });
    direct_report(ProtocolKind::Protocol3, cfg, &records)
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::FRAC_1_SQRT_2;
    use crate::qmath::{collective_apply, outcome_probabilities, single_qubit_unitary, Qubit, ALGEBRA_TOL};

    #[test]
    fn plus_prime_matches_product_form() {
        let zero_plus = TwoQubitState::product(&Qubit::zero(), &Qubit::eigenstate(LocalBasis::X, false));
        let one_minus = TwoQubitState::product(
            &Qubit::eigenstate(LocalBasis::Z, true),
            &Qubit::eigenstate(LocalBasis::X, true),
        );
        let h = Complex::new(FRAC_1_SQRT_2, 0.0);
        let expected: Vec<Complex> = zero_plus
            .amplitudes()
            .iter()
            .zip(one_minus.amplitudes())
            .map(|(a, b)| h * (a - b))
            .collect();
        let got = prepare_real_code(CodeLabel::new(CodeBasis::X, false));
        for (g, e) in got.amplitudes().iter().zip(expected) {
            assert!((g - e).norm() < ALGEBRA_TOL);
        }
    }

    #[test]
    fn noiseless_decoding_is_exact() {
        for label in CodeLabel::ALL {
            let s = prepare_real_code(label);
            let second = match label.basis {
                CodeBasis::Z => LocalBasis::Z,
                CodeBasis::X => LocalBasis::X,
            };
            let p = outcome_probabilities(&s, LocalBasis::Z, second);
            let p_one = p[1] + p[2];
            assert!((p_one - if label.bit { 1.0 } else { 0.0 }).abs() < ALGEBRA_TOL, "{label:?}");
        }
    }

    #[test]
    fn real_rotation_leaves_codes_invariant() {
        for theta in [0.1, 0.7, 1.3, 2.9, -4.0] {
            let u = single_qubit_unitary(theta, 0.0, 0.0).unwrap();
            for label in CodeLabel::ALL {
                let s = prepare_real_code(label);
                let out = collective_apply(&u, &s);
                assert!((s.fidelity(&out) - 1.0).abs() < 1e-9, "θ={theta} {label:?}");
            }
        }
    }

    #[test]
    fn dispersion_breaks_invariance() {
        let u = single_qubit_unitary(0.0, 0.0, std::f64::consts::FRAC_PI_2).unwrap();
        let s = prepare_real_code(CodeLabel::new(CodeBasis::X, false));
        assert!(s.fidelity(&collective_apply(&u, &s)) < 0.9);
    }
}

//! Protocol state machines: Alice's source, Bob's measurement, sifting,
//! error estimation and the four runnable protocols.
//!
//! * [`protocol2`] is the prepare-and-measure subspace protocol: four code
//!   states in `span{|01⟩, |10⟩}`, local `Z⊗Z`/`X⊗X`/`Y⊗Y` measurements, and
//!   post-selection onto the subspace.
//! * [`protocol1`] is the CNOT-encoded BB84 variant used to check that the
//!   two agree.
//! * [`protocol3`] is the real-rotation protocol on `{|φ⁺⟩, |ψ⁻⟩}`.
//! * [`bb84`] is plain single-photon BB84 over the same channel.

use rand::Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::bits::BitString;
use crate::channel::{sample_channel_rotation, ChannelConfig, ChannelError, Rotation};
use crate::qmath::{measure_pair, LocalBasis, OutcomePair, TwoQubitState};
use crate::rng::{Purpose, StreamFactory};

pub mod bb84;
pub mod estimate;
pub mod protocol1;
pub mod protocol2;
pub mod protocol3;

pub use estimate::{estimate_errors, flip_rate_from_parity, ErrorEstimate, ParityRates, Rate};

use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum ProtocolError {
    #[error("n_codes must be at least 1")]
    EmptyRun,
    #[error("{field} must lie in [0, 1], got {value}")]
    InvalidProbability { field: &'static str, value: f64 },
    #[error("basis_weights: {0}")]
    InvalidWeights(String),
    #[error("insufficient data: no samples in category `{0}`")]
    InsufficientData(&'static str),
    #[error(transparent)]
    Channel(#[from] ChannelError),
}

/// Alice's preparation basis.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum CodeBasis {
    Z,
    X,
}

impl CodeBasis {
    pub fn local(self) -> LocalBasis {
        match self {
            CodeBasis::Z => LocalBasis::Z,
            CodeBasis::X => LocalBasis::X,
        }
    }
}

/// Preparation record for one code: `Z0 = |01⟩`, `Z1 = |10⟩`, `X0 = |ψ⁺⟩`,
/// `X1 = |ψ⁻⟩` in the subspace protocol.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct CodeLabel {
    pub basis: CodeBasis,
    pub bit: bool,
}

impl CodeLabel {
    pub const ALL: [CodeLabel; 4] = [
        CodeLabel::new(CodeBasis::Z, false),
        CodeLabel::new(CodeBasis::Z, true),
        CodeLabel::new(CodeBasis::X, false),
        CodeLabel::new(CodeBasis::X, true),
    ];

    pub const fn new(basis: CodeBasis, bit: bool) -> Self {
        Self { basis, bit }
    }
}

/// Relative weights of Bob's measurement bases. Two-basis protocols use
/// only `z` and `x`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct BasisWeights {
    pub z: f64,
    pub x: f64,
    pub y: f64,
}

impl Default for BasisWeights {
    fn default() -> Self {
        Self {
            z: 1.0,
            x: 1.0,
            y: 1.0,
        }
    }
}

impl BasisWeights {
    pub fn validate(&self) -> Result<(), ProtocolError> {
        for (name, w) in [("z", self.z), ("x", self.x), ("y", self.y)] {
            if !w.is_finite() || w < 0.0 {
                return Err(ProtocolError::InvalidWeights(format!(
                    "weight {name} = {w} must be finite and non-negative"
                )));
            }
        }
        if self.z + self.x <= 0.0 {
            return Err(ProtocolError::InvalidWeights(
                "z and x weights cannot both be zero".into(),
            ));
        }
        Ok(())
    }

    /// Draws one of `Z`, `X`, `Y`.
    pub fn choose<R: Rng + ?Sized>(&self, rng: &mut R) -> LocalBasis {
        let u = rng.random::<f64>() * (self.z + self.x + self.y);
        if u < self.z {
            LocalBasis::Z
        } else if u < self.z + self.x || self.y == 0.0 {
            LocalBasis::X
        } else {
            LocalBasis::Y
        }
    }

    /// Draws `Z` or `X`, ignoring the Y weight.
    pub fn choose_zx<R: Rng + ?Sized>(&self, rng: &mut R) -> CodeBasis {
        if rng.random::<f64>() * (self.z + self.x) < self.z {
            CodeBasis::Z
        } else {
            CodeBasis::X
        }
    }
}

/// Fraction of codes whose outcomes are published for the error test.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ErrorTestFractions {
    pub x_fraction: f64,
    pub z_fraction: f64,
}

impl Default for ErrorTestFractions {
    fn default() -> Self {
        Self {
            x_fraction: 0.5,
            z_fraction: 0.1,
        }
    }
}

impl ErrorTestFractions {
    pub fn for_basis(&self, basis: CodeBasis) -> f64 {
        match basis {
            CodeBasis::Z => self.z_fraction,
            CodeBasis::X => self.x_fraction,
        }
    }
}

/// Everything a protocol runner needs.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RunConfig {
    pub n_codes: u64,
    /// Probability that Alice prepares in the Z basis.
    pub z_bias: f64,
    pub basis_weights: BasisWeights,
    pub channel: ChannelConfig,
    pub error_test: ErrorTestFractions,
    pub seed: u64,
}

impl Default for RunConfig {
    fn default() -> Self {
        Self {
            n_codes: 1000,
            z_bias: 0.5,
            basis_weights: BasisWeights::default(),
            channel: ChannelConfig::default(),
            error_test: ErrorTestFractions::default(),
            seed: 0,
        }
    }
}

impl RunConfig {
    pub fn validate(&self) -> Result<(), ProtocolError> {
        if self.n_codes == 0 {
            return Err(ProtocolError::EmptyRun);
        }
        check_probability("z_bias", self.z_bias)?;
        check_probability("error_test.x_fraction", self.error_test.x_fraction)?;
        check_probability("error_test.z_fraction", self.error_test.z_fraction)?;
        self.basis_weights.validate()?;
        self.channel.validate()?;
        Ok(())
    }
}

pub(crate) fn check_probability(field: &'static str, value: f64) -> Result<(), ProtocolError> {
    if (0.0..=1.0).contains(&value) {
        Ok(())
    } else {
        Err(ProtocolError::InvalidProbability { field, value })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ProtocolKind {
    Protocol1,
    Protocol2,
    Protocol3,
    Bb84,
}

/// Draws one label: Z basis with probability `z_bias`, uniform bit.
pub fn alice_choose<R: Rng + ?Sized>(z_bias: f64, rng: &mut R) -> CodeLabel {
    let basis = if rng.random::<f64>() < z_bias {
        CodeBasis::Z
    } else {
        CodeBasis::X
    };
    CodeLabel::new(basis, rng.random())
}

pub fn alice_prepare<R: Rng + ?Sized>(
    n: usize,
    z_bias: f64,
    rng: &mut R,
) -> Result<Vec<CodeLabel>, ProtocolError> {
    if n == 0 {
        return Err(ProtocolError::EmptyRun);
    }
    check_probability("z_bias", z_bias)?;
    Ok((0..n).map(|_| alice_choose(z_bias, rng)).collect())
}

pub fn bob_choose_and_measure<R: Rng + ?Sized>(
    s: &TwoQubitState,
    weights: &BasisWeights,
    rng: &mut R,
) -> OutcomePair {
    let basis = weights.choose(rng);
    measure_pair(s, basis, rng.random())
}

/// One code after public discussion.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SiftedRecord {
    pub index: u64,
    pub label: CodeLabel,
    pub meas: OutcomePair,
    pub accepted: bool,
    pub bob_bit: Option<bool>,
    /// Published for the error test (and so excluded from the key).
    pub revealed: bool,
}

impl SiftedRecord {
    /// Whether Bob's basis is usable for this label at all.
    pub fn basis_matched(&self) -> bool {
        match self.label.basis {
            CodeBasis::Z => self.meas.basis == LocalBasis::Z,
            CodeBasis::X => true,
        }
    }

    /// For X-basis codes: did the parity disagree with the prepared Bell state?
    ///
    /// `|ψ⁻⟩` gives differing bits in every basis. `|ψ⁺⟩` gives differing bits
    /// in Z and equal bits in X and Y.
    pub fn wrong_outcome(&self) -> Option<bool> {
        if self.label.basis != CodeBasis::X {
            return None;
        }
        let equal = self.meas.bits_equal();
        Some(match (self.label.bit, self.meas.basis) {
            (true, _) => equal,
            (false, LocalBasis::Z) => equal,
            (false, LocalBasis::X | LocalBasis::Y) => !equal,
        })
    }
}

/// Applies the acceptance rule to one measured code.
///
/// Z-basis codes survive only when Bob used `Z⊗Z` and saw differing bits;
/// `01` decodes to 0 and `10` to 1. X-basis codes are kept under every
/// basis for phase-error estimation.
pub fn sift(index: u64, label: CodeLabel, meas: OutcomePair) -> SiftedRecord {
    let (accepted, bob_bit) = match label.basis {
        CodeBasis::Z => {
            let ok = meas.basis == LocalBasis::Z && !meas.bits_equal();
            (ok, ok.then_some(meas.bit1))
        }
        CodeBasis::X => (true, None),
    };
    SiftedRecord {
        index,
        label,
        meas,
        accepted,
        bob_bit,
        revealed: false,
    }
}

/// Pipeline counters. Each stage is a subset of the previous one.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
pub struct Totals {
    pub sent: u64,
    pub delivered: u64,
    pub basis_matched: u64,
    pub accepted: u64,
    pub z_basis_matched: u64,
    pub z_accepted: u64,
    pub revealed: u64,
    pub key_bits: u64,
}

impl Totals {
    pub fn is_monotone(&self) -> bool {
        self.sent >= self.delivered
            && self.delivered >= self.basis_matched
            && self.basis_matched >= self.accepted
            && self.z_basis_matched >= self.z_accepted
            && self.z_accepted >= self.key_bits
    }

    /// Accepted Z-codes over Z-codes measured in the Z basis.
    pub fn accepted_fraction(&self) -> f64 {
        if self.z_basis_matched == 0 {
            0.0
        } else {
            self.z_accepted as f64 / self.z_basis_matched as f64
        }
    }
}

/// Outcome of one protocol run.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunReport {
    pub protocol: ProtocolKind,
    pub seed: u64,
    pub totals: Totals,
    /// Rates the parties can compute from the published test sample.
    pub estimate: ErrorEstimate,
    /// The same rates over every sifted code; simulator-side ground truth.
    pub full_sample: ErrorEstimate,
    /// Alice's bits of accepted, unpublished Z-codes.
    pub raw_key: BitString,
    /// Bob's bits at the same positions.
    pub raw_key_bob: BitString,
}

/// Protocol-agnostic per-code record for the protocols that decode a single
/// logical bit directly.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DirectRecord {
    pub label: CodeLabel,
    pub bob_basis: CodeBasis,
    pub accepted: bool,
    pub bob_bit: Option<bool>,
    pub revealed: bool,
}

impl DirectRecord {
    pub fn basis_matched(&self) -> bool {
        self.label.basis == self.bob_basis
    }
}

/// Runs `per_code` for every code index in parallel, returning results in
/// index order.
///
/// Each call receives that code's private stream and the rotation of its
/// correlation block, so the output does not depend on thread scheduling.
pub(crate) fn simulate_codes<T, F>(cfg: &RunConfig, per_code: F) -> Vec<T>
where
    T: Send,
    F: Fn(u64, &mut ChaCha8Rng, &Rotation) -> T + Sync,
{
    let codes = StreamFactory::new(cfg.seed, Purpose::Code);
    let rotations = StreamFactory::new(cfg.seed, Purpose::Rotation);
    let block = cfg.channel.block_correlated.max(1);
    (0..cfg.n_codes)
        .into_par_iter()
        .map(|i| {
            let rotation = sample_channel_rotation(&cfg.channel, &mut rotations.stream(i / block));
            let mut rng = codes.stream(i);
            per_code(i, &mut rng, &rotation)
        })
        .collect()
}

/// Assembles a report from direct-decoding records (`None` = lost).
pub(crate) fn direct_report(
    protocol: ProtocolKind,
    cfg: &RunConfig,
    records: &[Option<DirectRecord>],
) -> Result<RunReport, ProtocolError> {
    let delivered: Vec<DirectRecord> = records.iter().flatten().copied().collect();
    let mut totals = Totals {
        sent: cfg.n_codes,
        delivered: delivered.len() as u64,
        ..Default::default()
    };
    let mut raw_key = Vec::new();
    let mut raw_key_bob = Vec::new();
    for r in &delivered {
        if !r.basis_matched() {
            continue;
        }
        totals.basis_matched += 1;
        if r.revealed {
            totals.revealed += 1;
        }
        if r.label.basis == CodeBasis::Z {
            totals.z_basis_matched += 1;
        }
        if !r.accepted {
            continue;
        }
        totals.accepted += 1;
        if r.label.basis == CodeBasis::Z {
            totals.z_accepted += 1;
            if !r.revealed {
                raw_key.push(r.label.bit);
                raw_key_bob.push(r.bob_bit.expect("accepted record carries a bit"));
            }
        }
    }
    totals.key_bits = raw_key.len() as u64;
    let published: Vec<DirectRecord> = delivered.iter().filter(|r| r.revealed).copied().collect();
    Ok(RunReport {
        protocol,
        seed: cfg.seed,
        totals,
        estimate: estimate::estimate_direct(&published)?,
        full_sample: estimate::estimate_direct(&delivered)?,
        raw_key: raw_key.into(),
        raw_key_bob: raw_key_bob.into(),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng::stream;

    fn outcome(basis: LocalBasis, bit1: bool, bit2: bool) -> OutcomePair {
        OutcomePair { basis, bit1, bit2 }
    }

    #[test]
    fn full_z_bias_gives_only_z_labels() {
        let mut rng = stream(1, Purpose::Code, 0);
        let labels = alice_prepare(1000, 1.0, &mut rng).unwrap();
        assert!(labels.iter().all(|l| l.basis == CodeBasis::Z));
    }

    #[test]
    fn z_fraction_is_binomial() {
        let n = 100_000;
        let mut rng = stream(2, Purpose::Code, 0);
        let labels = alice_prepare(n, 0.5, &mut rng).unwrap();
        let z = labels.iter().filter(|l| l.basis == CodeBasis::Z).count() as f64 / n as f64;
        let sigma = (0.25 / n as f64).sqrt();
        assert!((z - 0.5).abs() < 4.0 * sigma);
        let ones = labels.iter().filter(|l| l.bit).count() as f64 / n as f64;
        assert!((ones - 0.5).abs() < 4.0 * sigma);
    }

    #[test]
    fn label_sequence_is_reproducible() {
        let a = alice_prepare(500, 0.3, &mut stream(3, Purpose::Code, 0)).unwrap();
        let b = alice_prepare(500, 0.3, &mut stream(3, Purpose::Code, 0)).unwrap();
        assert_eq!(a, b);
    }

    #[test]
    fn rejects_empty_and_bad_bias() {
        let mut rng = stream(4, Purpose::Code, 0);
        assert_eq!(alice_prepare(0, 0.5, &mut rng), Err(ProtocolError::EmptyRun));
        assert!(matches!(
            alice_prepare(5, 1.2, &mut rng),
            Err(ProtocolError::InvalidProbability { field: "z_bias", .. })
        ));
    }

    #[test]
    fn bob_bases_are_uniform() {
        let n = 100_000;
        let w = BasisWeights::default();
        let mut rng = stream(5, Purpose::Code, 0);
        let mut counts = [0usize; 3];
        for _ in 0..n {
            let o = bob_choose_and_measure(&TwoQubitState::psi_plus(), &w, &mut rng);
            counts[LocalBasis::ALL.iter().position(|&b| b == o.basis).unwrap()] += 1;
        }
        let p = 1.0 / 3.0;
        let sigma = (p * (1.0 - p) / n as f64).sqrt();
        for c in counts {
            assert!((c as f64 / n as f64 - p).abs() < 4.0 * sigma, "{counts:?}");
        }
    }

    #[test]
    fn forced_z_measures_01() {
        let w = BasisWeights {
            z: 1.0,
            x: 0.0,
            y: 0.0,
        };
        let mut rng = stream(6, Purpose::Code, 0);
        for _ in 0..100 {
            let o = bob_choose_and_measure(&TwoQubitState::basis_state(false, true), &w, &mut rng);
            assert_eq!(o, outcome(LocalBasis::Z, false, true));
        }
    }

    #[test]
    fn basis_sequence_is_reproducible() {
        let w = BasisWeights::default();
        let run = || {
            let mut rng = stream(7, Purpose::Code, 0);
            (0..200)
                .map(|_| bob_choose_and_measure(&TwoQubitState::psi_minus(), &w, &mut rng).basis)
                .collect::<Vec<_>>()
        };
        assert_eq!(run(), run());
    }

    #[test]
    fn z_code_outside_subspace_is_rejected() {
        let r = sift(0, CodeLabel::new(CodeBasis::Z, false), outcome(LocalBasis::Z, false, false));
        assert!(!r.accepted);
        assert_eq!(r.bob_bit, None);
        assert!(r.basis_matched());
    }

    #[test]
    fn z_code_flipped_inside_subspace_is_kept() {
        let r = sift(1, CodeLabel::new(CodeBasis::Z, false), outcome(LocalBasis::Z, true, false));
        assert!(r.accepted);
        assert_eq!(r.bob_bit, Some(true));
    }

    #[test]
    fn z_code_in_wrong_basis_is_dropped() {
        let r = sift(2, CodeLabel::new(CodeBasis::Z, true), outcome(LocalBasis::X, true, false));
        assert!(!r.accepted && !r.basis_matched());
    }

    #[test]
    fn singlet_with_equal_x_bits_is_wrong() {
        let r = sift(3, CodeLabel::new(CodeBasis::X, true), outcome(LocalBasis::X, false, false));
        assert!(r.accepted);
        assert_eq!(r.wrong_outcome(), Some(true));
    }

    #[test]
    fn psi_plus_parity_rules() {
        let l = CodeLabel::new(CodeBasis::X, false);
        assert_eq!(sift(0, l, outcome(LocalBasis::Z, true, true)).wrong_outcome(), Some(true));
        assert_eq!(sift(0, l, outcome(LocalBasis::Z, true, false)).wrong_outcome(), Some(false));
        assert_eq!(sift(0, l, outcome(LocalBasis::X, true, false)).wrong_outcome(), Some(true));
        assert_eq!(sift(0, l, outcome(LocalBasis::Y, false, false)).wrong_outcome(), Some(false));
    }

    #[test]
    fn weights_validation() {
        assert!(BasisWeights::default().validate().is_ok());
        assert!(BasisWeights { z: -1.0, x: 1.0, y: 1.0 }.validate().is_err());
        assert!(BasisWeights { z: 0.0, x: 0.0, y: 1.0 }.validate().is_err());
    }
}

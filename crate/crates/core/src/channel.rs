//! Collective random-unitary channel with photon loss and an optional
//! intercept-resend adversary.

use rand::Rng;
use rand_distr::{Distribution, Normal};
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::qmath::{
    collective_apply, measure_pair, single_qubit_unitary, LocalBasis, Qubit, TwoQubitState,
    Unitary2,
};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum ChannelError {
    #[error("{field}: {reason}")]
    InvalidDistribution { field: &'static str, reason: String },
    #[error("loss_prob must lie in [0, 1], got {0}")]
    InvalidLoss(f64),
    #[error("block_correlated must be at least 1")]
    InvalidBlock,
}

/// Distribution of one rotation angle, in radians.
///
/// In a config a bare number means `Fixed`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case", deny_unknown_fields, from = "AngleRepr")]
pub enum AngleDist {
    Fixed(f64),
    #[serde(rename = "uniform")]
    UniformRange { lo: f64, hi: f64 },
    Gaussian { mean: f64, sigma: f64 },
}

#[derive(Deserialize)]
#[serde(untagged)]
enum AngleRepr {
    Bare(f64),
    Tagged(TaggedAngle),
}

#[derive(Deserialize)]
#[serde(rename_all = "snake_case", deny_unknown_fields)]
enum TaggedAngle {
    Fixed(f64),
    #[serde(rename = "uniform")]
    UniformRange { lo: f64, hi: f64 },
    Gaussian { mean: f64, sigma: f64 },
}

impl From<AngleRepr> for AngleDist {
    fn from(r: AngleRepr) -> Self {
        match r {
            AngleRepr::Bare(v) | AngleRepr::Tagged(TaggedAngle::Fixed(v)) => AngleDist::Fixed(v),
            AngleRepr::Tagged(TaggedAngle::UniformRange { lo, hi }) => AngleDist::UniformRange { lo, hi },
            AngleRepr::Tagged(TaggedAngle::Gaussian { mean, sigma }) => AngleDist::Gaussian { mean, sigma },
        }
    }
}

impl AngleDist {
    pub fn validate(&self, field: &'static str) -> Result<(), ChannelError> {
        let bad = |reason: String| Err(ChannelError::InvalidDistribution { field, reason });
        match *self {
            AngleDist::Fixed(v) if !v.is_finite() => bad(format!("fixed value {v} is not finite")),
            AngleDist::UniformRange { lo, hi } if !(lo.is_finite() && hi.is_finite()) => {
                bad(format!("uniform bounds ({lo}, {hi}) must be finite"))
            }
            AngleDist::UniformRange { lo, hi } if lo > hi => {
                bad(format!("uniform range has lo {lo} > hi {hi}"))
            }
            AngleDist::Gaussian { mean, sigma } if !(mean.is_finite() && sigma.is_finite()) => {
                bad(format!("gaussian ({mean}, {sigma}) must be finite"))
            }
            AngleDist::Gaussian { sigma, .. } if sigma < 0.0 => {
                bad(format!("gaussian sigma {sigma} is negative"))
            }
            _ => Ok(()),
        }
    }

    pub fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> f64 {
        match *self {
            AngleDist::Fixed(v) => v,
            AngleDist::UniformRange { lo, hi } => lo + (hi - lo) * rng.random::<f64>(),
            AngleDist::Gaussian { mean, sigma } => Normal::new(mean, sigma)
                .expect("validated gaussian parameters")
                .sample(rng),
        }
    }

    /// The distribution's central value; used to label CSV rows.
    pub fn nominal(&self) -> f64 {
        match *self {
            AngleDist::Fixed(v) => v,
            AngleDist::UniformRange { lo, hi } => 0.5 * (lo + hi),
            AngleDist::Gaussian { mean, .. } => mean,
        }
    }
}

impl Default for AngleDist {
    fn default() -> Self {
        AngleDist::Fixed(0.0)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RotationSpec {
    pub theta: AngleDist,
    pub phi: AngleDist,
    pub delta: AngleDist,
}

impl RotationSpec {
    pub fn fixed(theta: f64, phi: f64, delta: f64) -> Self {
        Self {
            theta: AngleDist::Fixed(theta),
            phi: AngleDist::Fixed(phi),
            delta: AngleDist::Fixed(delta),
        }
    }

    pub fn validate(&self) -> Result<(), ChannelError> {
        self.theta.validate("channel.rotation.theta")?;
        self.phi.validate("channel.rotation.phi")?;
        self.delta.validate("channel.rotation.delta")
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum EveMode {
    #[default]
    None,
    InterceptResendZ,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ChannelConfig {
    pub rotation: RotationSpec,
    /// Independent loss probability of each photon.
    pub loss_prob: f64,
    /// Forces φ = Δ = 0 on every draw.
    pub real_rotation_only: bool,
    pub eve: EveMode,
    /// Number of consecutive codes sharing one rotation draw.
    pub block_correlated: u64,
}

impl Default for ChannelConfig {
    fn default() -> Self {
        Self {
            rotation: RotationSpec::default(),
            loss_prob: 0.0,
            real_rotation_only: false,
            eve: EveMode::None,
            block_correlated: 1,
        }
    }
}

impl ChannelConfig {
    pub fn validate(&self) -> Result<(), ChannelError> {
        self.rotation.validate()?;
        if !(0.0..=1.0).contains(&self.loss_prob) {
            return Err(ChannelError::InvalidLoss(self.loss_prob));
        }
        if self.block_correlated == 0 {
            return Err(ChannelError::InvalidBlock);
        }
        Ok(())
    }

    /// Probability that both photons of a code arrive.
    pub fn pair_delivery_prob(&self) -> f64 {
        (1.0 - self.loss_prob).powi(2)
    }
}

/// One sampled set of channel parameters.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Rotation {
    pub theta: f64,
    pub phi: f64,
    pub delta: f64,
}

impl Rotation {
    /// # Panics
    /// If any angle is non-finite; validated configs never produce one.
    pub fn unitary(&self) -> Unitary2 {
        single_qubit_unitary(self.theta, self.phi, self.delta)
            .expect("rotation angles come from a validated spec")
    }
}

/// Draws `(θ, φ, Δ)` for one code (or one correlation block).
pub fn sample_rotation<R: Rng + ?Sized>(spec: &RotationSpec, rng: &mut R) -> Rotation {
    Rotation {
        theta: spec.theta.sample(rng),
        phi: spec.phi.sample(rng),
        delta: spec.delta.sample(rng),
    }
}

/// Like [`sample_rotation`] but honours `real_rotation_only`.
pub fn sample_channel_rotation<R: Rng + ?Sized>(cfg: &ChannelConfig, rng: &mut R) -> Rotation {
    let mut r = sample_rotation(&cfg.rotation, rng);
    if cfg.real_rotation_only {
        r.phi = 0.0;
        r.delta = 0.0;
    }
    r
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum TransmitResult {
    Delivered(TwoQubitState),
    Lost,
}

impl TransmitResult {
    pub fn delivered(self) -> Option<TwoQubitState> {
        match self {
            TransmitResult::Delivered(s) => Some(s),
            TransmitResult::Lost => None,
        }
    }
}

/// A transmission together with the rotation the channel applied.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Transmission {
    pub rotation: Rotation,
    pub result: TransmitResult,
}

/// Sends one code: a fresh rotation is drawn from `rng` and applied to both
/// photons.
pub fn transmit<R: Rng + ?Sized>(s: &TwoQubitState, cfg: &ChannelConfig, rng: &mut R) -> TransmitResult {
    transmit_traced(s, cfg, rng).result
}

pub fn transmit_traced<R: Rng + ?Sized>(
    s: &TwoQubitState,
    cfg: &ChannelConfig,
    rng: &mut R,
) -> Transmission {
    let rotation = sample_channel_rotation(cfg, rng);
    Transmission {
        rotation,
        result: transmit_rotated(s, &rotation, cfg, rng),
    }
}

/// Sends one code through an already-sampled rotation. `rng` drives loss and Eve.
pub fn transmit_rotated<R: Rng + ?Sized>(
    s: &TwoQubitState,
    rotation: &Rotation,
    cfg: &ChannelConfig,
    rng: &mut R,
) -> TransmitResult {
    let lost_1 = rng.random::<f64>() < cfg.loss_prob;
    let lost_2 = rng.random::<f64>() < cfg.loss_prob;
    if lost_1 || lost_2 {
        return TransmitResult::Lost;
    }
    let rotated = collective_apply(&rotation.unitary(), s);
    let out = match cfg.eve {
        EveMode::None => rotated,
        EveMode::InterceptResendZ => intercept_resend_z(&rotated, rng),
    };
    TransmitResult::Delivered(out)
}

/// Single-photon counterpart of [`transmit_rotated`], for the BB84 baseline.
pub fn transmit_qubit<R: Rng + ?Sized>(
    q: &Qubit,
    rotation: &Rotation,
    cfg: &ChannelConfig,
    rng: &mut R,
) -> Option<Qubit> {
    if rng.random::<f64>() < cfg.loss_prob {
        return None;
    }
    let rotated = q.apply(&rotation.unitary());
    Some(match cfg.eve {
        EveMode::None => rotated,
        EveMode::InterceptResendZ => {
            let bit = rotated.measure(LocalBasis::Z, rng.random());
            Qubit::eigenstate(LocalBasis::Z, bit)
        }
    })
}

/// Measures both photons in Z and forwards the observed product state.
pub fn intercept_resend_z<R: Rng + ?Sized>(s: &TwoQubitState, rng: &mut R) -> TwoQubitState {
    let o = measure_pair(s, LocalBasis::Z, rng.random());
    TwoQubitState::basis_state(o.bit1, o.bit2)
}

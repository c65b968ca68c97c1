//! Simulator and analysis toolkit for quantum key distribution in the
//! two-photon subspace `span{|01⟩, |10⟩}` under collective random unitary
//! noise.
//!
//! Both photons of a code see the same polarization rotation. Post-selecting
//! Bob's outcomes onto the subspace removes all `ψ⁺ ↔ ψ⁻` phase flips and
//! suppresses bit flips from `sin²θ` (plain BB84) to
//! `sin⁴θ / (cos⁴θ + sin⁴θ)`.
//!
//! Module map:
//!
//! * [`qmath`]: two-qubit state vectors, the channel unitary, Bell
//!   decomposition and Born-rule sampling.
//! * [`channel`]: rotation sampling, photon loss and an intercept-resend
//!   adversary.
//! * [`protocol`]: the runnable protocols, sifting and error estimation.
//! * [`distill`]: binary entropy, key rate, block inversion, privacy
//!   amplification.
//! * [`harness`]: config documents, experiment execution, sweeps and report
//!   files.

pub mod bits;
pub mod channel;
pub mod distill;
pub mod harness;
pub mod protocol;
pub mod qmath;
pub mod rng;

pub use bits::BitString;
pub use channel::{AngleDist, ChannelConfig, EveMode, RotationSpec};
pub use distill::{binary_entropy, key_rate, KeyRateReport};
pub use harness::{execute, parse_config, run_experiment, run_sweep, ExperimentConfig, ExperimentReport, HarnessError};
pub use protocol::{CodeBasis, CodeLabel, ErrorEstimate, ProtocolKind, RunConfig, RunReport};
pub use qmath::{BellDistribution, Complex, LocalBasis, OutcomePair, TwoQubitState, Unitary2};

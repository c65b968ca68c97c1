//! Bit-flip and phase-flip estimation from sifted records.
//!
//! Phase errors of the subspace protocol are never observed directly. For
//! codes prepared in `|ψ⁻⟩` the wrong-parity rates in the three local bases
//! satisfy
//!
//! ```text
//! ε_z = p_φ⁺ + p_φ⁻,   ε_x = p_ψ⁺ + p_φ⁺,   ε_y = p_ψ⁺ + p_φ⁻
//! ```
//!
//! so the in-subspace flip rate `p_ψ⁺ / (p_ψ⁻ + p_ψ⁺)` equals
//! `(ε_x + ε_y − ε_z) / (2(1 − ε_z))`. The `|ψ⁺⟩` codes give the mirror
//! formula, and the two are averaged with equal weight.

use serde::{Deserialize, Serialize};

use super::{CodeBasis, DirectRecord, ProtocolError, SiftedRecord};
use crate::qmath::LocalBasis;

/// A binomial proportion with its Wald standard error.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Rate {
    pub value: f64,
    pub se: f64,
    pub hits: u64,
    pub trials: u64,
}

impl Rate {
    /// `None` when there are no trials.
    pub fn from_counts(hits: u64, trials: u64) -> Option<Self> {
        if trials == 0 {
            return None;
        }
        let value = hits as f64 / trials as f64;
        Some(Self {
            value,
            se: (value * (1.0 - value) / trials as f64).sqrt(),
            hits,
            trials,
        })
    }
}

/// Wrong-parity rates `(ε_z, ε_x, ε_y)` for one Bell-state code family.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ParityRates {
    pub z: Rate,
    pub x: Rate,
    pub y: Rate,
}

impl ParityRates {
    /// In-subspace flip rate, or `None` when every code left the subspace.
    pub fn flip_rate(&self) -> Option<FlipRate> {
        let (ez, ex, ey) = (self.z.value, self.x.value, self.y.value);
        if ez >= 1.0 {
            return None;
        }
        let denom = 2.0 * (1.0 - ez);
        let d_xy = 1.0 / denom;
        let d_z = (ex + ey - 1.0) / (2.0 * (1.0 - ez).powi(2));
        let var = d_xy * d_xy * (self.x.se.powi(2) + self.y.se.powi(2)) + d_z * d_z * self.z.se.powi(2);
        Some(FlipRate {
            value: flip_rate_from_parity(ex, ey, ez),
            se: var.sqrt(),
        })
    }
}

/// A derived rate with a delta-method standard error.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FlipRate {
    pub value: f64,
    pub se: f64,
}

impl From<Rate> for FlipRate {
    fn from(r: Rate) -> Self {
        Self {
            value: r.value,
            se: r.se,
        }
    }
}

/// `(ε_x + ε_y − ε_z) / (2(1 − ε_z))`
pub fn flip_rate_from_parity(eps_x: f64, eps_y: f64, eps_z: f64) -> f64 {
    (eps_x + eps_y - eps_z) / (2.0 * (1.0 - eps_z))
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ErrorEstimate {
    /// Fraction of accepted Z-codes where Bob's bit differs from Alice's.
    pub r_b: Rate,
    /// Accepted Z-codes over Z-codes measured in the Z basis.
    pub acceptance: Rate,
    /// Flip rate of codes prepared with bit 1 in the X basis (`ψ⁻ → ψ⁺`).
    pub t_minus: Option<FlipRate>,
    /// Flip rate of codes prepared with bit 0 in the X basis (`ψ⁺ → ψ⁻`).
    pub t_plus: Option<FlipRate>,
    /// Average of the available `t_minus`, `t_plus`.
    pub t_p: FlipRate,
    pub eps_minus: Option<ParityRates>,
    pub eps_plus: Option<ParityRates>,
    /// Set when a flip-rate estimate fell outside `[0, 1]`. Values are left unclamped.
    pub out_of_range: bool,
}

fn combine_phase(
    t_minus: Option<FlipRate>,
    t_plus: Option<FlipRate>,
) -> Result<FlipRate, ProtocolError> {
    match (t_minus, t_plus) {
        (Some(a), Some(b)) => Ok(FlipRate {
            value: (a.value + b.value) / 2.0,
            se: 0.5 * (a.se.powi(2) + b.se.powi(2)).sqrt(),
        }),
        (Some(a), None) | (None, Some(a)) => Ok(a),
        (None, None) => Err(ProtocolError::InsufficientData(
            "X-basis codes remaining in the subspace",
        )),
    }
}

fn out_of_range(rates: &[Option<FlipRate>]) -> bool {
    rates
        .iter()
        .flatten()
        .any(|r| !(0.0..=1.0).contains(&r.value))
}

fn z_rates<I>(z_records: I) -> Result<(Rate, Rate), ProtocolError>
where
    I: IntoIterator<Item = (bool, Option<bool>, bool)>,
{
    let (mut matched, mut accepted, mut flips) = (0u64, 0u64, 0u64);
    for (alice, bob, ok) in z_records {
        matched += 1;
        if ok {
            accepted += 1;
            if bob != Some(alice) {
                flips += 1;
            }
        }
    }
    let acceptance = Rate::from_counts(accepted, matched)
        .ok_or(ProtocolError::InsufficientData("Z-basis codes measured in the Z basis"))?;
    let r_b = Rate::from_counts(flips, accepted)
        .ok_or(ProtocolError::InsufficientData("accepted Z-basis codes"))?;
    Ok((r_b, acceptance))
}

fn basis_slot(b: LocalBasis) -> usize {
    match b {
        LocalBasis::Z => 0,
        LocalBasis::X => 1,
        LocalBasis::Y => 2,
    }
}

const PARITY_CATEGORIES: [[&str; 3]; 2] = [
    [
        "psi_plus codes measured in Z",
        "psi_plus codes measured in X",
        "psi_plus codes measured in Y",
    ],
    [
        "psi_minus codes measured in Z",
        "psi_minus codes measured in X",
        "psi_minus codes measured in Y",
    ],
];

/// Error estimate for the subspace protocol.
///
/// Fails with [`ProtocolError::InsufficientData`] when any of the counting
/// categories is empty.
pub fn estimate_errors(records: &[SiftedRecord]) -> Result<ErrorEstimate, ProtocolError> {
    let (r_b, acceptance) = z_rates(
        records
            .iter()
            .filter(|r| r.label.basis == CodeBasis::Z && r.basis_matched())
            .map(|r| (r.label.bit, r.bob_bit, r.accepted)),
    )?;

    // [bit][basis]
    let mut trials = [[0u64; 3]; 2];
    let mut wrong = [[0u64; 3]; 2];
    for r in records {
        if let Some(w) = r.wrong_outcome() {
            let (fam, slot) = (r.label.bit as usize, basis_slot(r.meas.basis));
            trials[fam][slot] += 1;
            wrong[fam][slot] += w as u64;
        }
    }
    let parity = |fam: usize| -> Result<ParityRates, ProtocolError> {
        let rate = |slot: usize| {
            Rate::from_counts(wrong[fam][slot], trials[fam][slot])
                .ok_or(ProtocolError::InsufficientData(PARITY_CATEGORIES[fam][slot]))
        };
        Ok(ParityRates {
            z: rate(0)?,
            x: rate(1)?,
            y: rate(2)?,
        })
    };
    let eps_plus = parity(0)?;
    let eps_minus = parity(1)?;
    let t_minus = eps_minus.flip_rate();
    let t_plus = eps_plus.flip_rate();
    Ok(ErrorEstimate {
        r_b,
        acceptance,
        t_minus,
        t_plus,
        t_p: combine_phase(t_minus, t_plus)?,
        eps_minus: Some(eps_minus),
        eps_plus: Some(eps_plus),
        out_of_range: out_of_range(&[t_minus, t_plus]),
    })
}

/// Error estimate for protocols whose X-basis codes decode to a bit directly.
pub(crate) fn estimate_direct(records: &[DirectRecord]) -> Result<ErrorEstimate, ProtocolError> {
    let (r_b, acceptance) = z_rates(
        records
            .iter()
            .filter(|r| r.label.basis == CodeBasis::Z && r.basis_matched())
            .map(|r| (r.label.bit, r.bob_bit, r.accepted)),
    )?;
    let x_rate = |bit: bool, category: &'static str| {
        let (mut n, mut err) = (0u64, 0u64);
        for r in records {
            if r.label.basis == CodeBasis::X && r.label.bit == bit && r.basis_matched() && r.accepted {
                n += 1;
                err += (r.bob_bit != Some(bit)) as u64;
            }
        }
        Rate::from_counts(err, n)
            .map(FlipRate::from)
            .ok_or(ProtocolError::InsufficientData(category))
    };
    let t_minus = Some(x_rate(true, "accepted X-basis codes with bit 1")?);
    let t_plus = Some(x_rate(false, "accepted X-basis codes with bit 0")?);
    Ok(ErrorEstimate {
        r_b,
        acceptance,
        t_minus,
        t_plus,
        t_p: combine_phase(t_minus, t_plus)?,
        eps_minus: None,
        eps_plus: None,
        out_of_range: false,
    })
}

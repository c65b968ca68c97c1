//! Exact state-vector arithmetic for a single two-photon code.
//!
//! Amplitudes are stored in the computational basis with index `2·b₁ + b₂`
//! for the ket `|b₁ b₂⟩`; qubit 1 is the first-transmitted photon. Global
//! phases are kept as computed, so comparisons between states go through
//! [`TwoQubitState::fidelity`] rather than amplitude equality whenever a
//! phase may differ.

use std::f64::consts::FRAC_1_SQRT_2;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::protocol::{CodeBasis, CodeLabel};

/// Complex amplitude type used throughout the crate.
pub type Complex = Complex64;

/// Tolerance for state invariants (normalization, unitarity after evolution).
pub const STATE_TOL: f64 = 1e-9;

/// Tolerance for pure algebraic identities.
pub const ALGEBRA_TOL: f64 = 1e-12;

const ZERO: Complex = Complex::new(0.0, 0.0);
const ONE: Complex = Complex::new(1.0, 0.0);

#[derive(Debug, Error, Clone, PartialEq)]
pub enum QmathError {
    #[error("non-finite rotation parameter {name} = {value}")]
    NonFinite { name: &'static str, value: f64 },
    #[error("state is not normalized: squared norm {norm_sqr}")]
    NotNormalized { norm_sqr: f64 },
    #[error("matrix is not unitary: max deviation of U†U from I is {deviation}")]
    NotUnitary { deviation: f64 },
}

/// Local measurement basis applied to a single photon.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum LocalBasis {
    Z,
    X,
    Y,
}

impl LocalBasis {
    pub const ALL: [LocalBasis; 3] = [LocalBasis::Z, LocalBasis::X, LocalBasis::Y];

    /// Eigenvectors `(e₀, e₁)` in computational-basis coordinates.
    ///
    /// Outcome bit 0 is `|0⟩`, `|+⟩` or `|y+⟩ = (|0⟩ + i|1⟩)/√2`; bit 1 is the
    /// orthogonal partner.
    pub fn eigenvectors(self) -> [[Complex; 2]; 2] {
        let h = Complex::new(FRAC_1_SQRT_2, 0.0);
        let ih = Complex::new(0.0, FRAC_1_SQRT_2);
        match self {
            LocalBasis::Z => [[ONE, ZERO], [ZERO, ONE]],
            LocalBasis::X => [[h, h], [h, -h]],
            LocalBasis::Y => [[h, ih], [h, -ih]],
        }
    }
}

/// Pure single-qubit state, used by the BB84 baseline and the CNOT encoder.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Qubit {
    amp: [Complex; 2],
}

impl Qubit {
    pub fn new(amp: [Complex; 2]) -> Result<Self, QmathError> {
        let norm_sqr = amp[0].norm_sqr() + amp[1].norm_sqr();
        if !norm_sqr.is_finite() || (norm_sqr - 1.0).abs() > STATE_TOL {
            return Err(QmathError::NotNormalized { norm_sqr });
        }
        Ok(Self { amp })
    }

    /// Eigenstate of `basis` carrying `bit`.
    pub fn eigenstate(basis: LocalBasis, bit: bool) -> Self {
        Self {
            amp: basis.eigenvectors()[bit as usize],
        }
    }

    pub fn zero() -> Self {
        Self::eigenstate(LocalBasis::Z, false)
    }

    pub fn amplitudes(&self) -> &[Complex; 2] {
        &self.amp
    }

    pub fn apply(&self, u: &Unitary2) -> Self {
        Self { amp: u.mul_vec(&self.amp) }
    }

    /// Probability of outcome bit 1 when measured in `basis`.
    pub fn prob_one(&self, basis: LocalBasis) -> f64 {
        let e1 = basis.eigenvectors()[1];
        (e1[0].conj() * self.amp[0] + e1[1].conj() * self.amp[1]).norm_sqr()
    }

    /// Born-rule sample driven by one uniform draw `u ∈ [0,1)`.
    pub fn measure(&self, basis: LocalBasis, u: f64) -> bool {
        u >= 1.0 - self.prob_one(basis)
    }

    pub fn fidelity(&self, other: &Qubit) -> f64 {
        (self.amp[0].conj() * other.amp[0] + self.amp[1].conj() * other.amp[1]).norm_sqr()
    }
}

/// Pure state of one two-photon code.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TwoQubitState {
    amp: [Complex; 4],
}

impl TwoQubitState {
    /// Builds a state from raw amplitudes, rejecting anything off the unit sphere.
    pub fn new(amp: [Complex; 4]) -> Result<Self, QmathError> {
        let s = Self { amp };
        let norm_sqr = s.norm_sqr();
        if !norm_sqr.is_finite() || (norm_sqr - 1.0).abs() > STATE_TOL {
            return Err(QmathError::NotNormalized { norm_sqr });
        }
        Ok(s)
    }

    /// Computational basis ket `|b₁ b₂⟩`.
    pub fn basis_state(b1: bool, b2: bool) -> Self {
        let mut amp = [ZERO; 4];
        amp[index(b1, b2)] = ONE;
        Self { amp }
    }

    pub fn product(q1: &Qubit, q2: &Qubit) -> Self {
        let a = q1.amplitudes();
        let b = q2.amplitudes();
        Self {
            amp: [a[0] * b[0], a[0] * b[1], a[1] * b[0], a[1] * b[1]],
        }
    }

    /// `|ψ⁺⟩ = (|01⟩ + |10⟩)/√2`
    pub fn psi_plus() -> Self {
        Self::bell(0.0, 1.0, 1.0, 0.0)
    }

    /// `|ψ⁻⟩ = (|01⟩ − |10⟩)/√2`
    pub fn psi_minus() -> Self {
        Self::bell(0.0, 1.0, -1.0, 0.0)
    }

    /// `|φ⁺⟩ = (|00⟩ + |11⟩)/√2`
    pub fn phi_plus() -> Self {
        Self::bell(1.0, 0.0, 0.0, 1.0)
    }

    /// `|φ⁻⟩ = (|00⟩ − |11⟩)/√2`
    pub fn phi_minus() -> Self {
        Self::bell(1.0, 0.0, 0.0, -1.0)
    }

    fn bell(a: f64, b: f64, c: f64, d: f64) -> Self {
        let r = |x: f64| Complex::new(x * FRAC_1_SQRT_2, 0.0);
        Self {
            amp: [r(a), r(b), r(c), r(d)],
        }
    }

    pub fn amplitudes(&self) -> &[Complex; 4] {
        &self.amp
    }

    pub fn norm_sqr(&self) -> f64 {
        self.amp.iter().map(|a| a.norm_sqr()).sum()
    }

    /// `⟨self|other⟩`
    pub fn inner(&self, other: &TwoQubitState) -> Complex {
        self.amp
            .iter()
            .zip(other.amp.iter())
            .map(|(a, b)| a.conj() * b)
            .sum()
    }

    /// `|⟨self|other⟩|²`
    pub fn fidelity(&self, other: &TwoQubitState) -> f64 {
        self.inner(other).norm_sqr()
    }

    /// Multiplies every amplitude by `c`. Only meaningful for `|c| = 1`.
    pub fn scaled(&self, c: Complex) -> Self {
        Self {
            amp: self.amp.map(|a| a * c),
        }
    }

    pub(crate) fn from_amplitudes_unchecked(amp: [Complex; 4]) -> Self {
        Self { amp }
    }

    /// Largest componentwise distance to `other` (phase sensitive).
    pub fn max_abs_diff(&self, other: &TwoQubitState) -> f64 {
        self.amp
            .iter()
            .zip(other.amp.iter())
            .map(|(a, b)| (a - b).norm())
            .fold(0.0, f64::max)
    }
}

#[inline]
fn index(b1: bool, b2: bool) -> usize {
    2 * (b1 as usize) + (b2 as usize)
}

/// 2×2 complex matrix acting on one photon's polarization.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Unitary2 {
    m: [[Complex; 2]; 2],
}

impl Unitary2 {
    pub fn identity() -> Self {
        Self {
            m: [[ONE, ZERO], [ZERO, ONE]],
        }
    }

    /// Wraps an arbitrary matrix after checking `m†m = I`.
    pub fn from_matrix(m: [[Complex; 2]; 2]) -> Result<Self, QmathError> {
        let u = Self { m };
        let deviation = u.unitarity_deviation();
        if !deviation.is_finite() || deviation > STATE_TOL {
            return Err(QmathError::NotUnitary { deviation });
        }
        Ok(u)
    }

    pub fn matrix(&self) -> &[[Complex; 2]; 2] {
        &self.m
    }

    pub fn det(&self) -> Complex {
        self.m[0][0] * self.m[1][1] - self.m[0][1] * self.m[1][0]
    }

    /// True when every entry has zero imaginary part.
    pub fn is_real(&self) -> bool {
        self.m.iter().flatten().all(|c| c.im == 0.0)
    }

    /// `max |(U†U − I)ᵢⱼ|`
    pub fn unitarity_deviation(&self) -> f64 {
        let mut worst: f64 = 0.0;
        for i in 0..2 {
            for j in 0..2 {
                let mut acc = ZERO;
                for k in 0..2 {
                    acc += self.m[k][i].conj() * self.m[k][j];
                }
                if i == j {
                    acc -= ONE;
                }
                worst = worst.max(acc.norm());
            }
        }
        worst
    }

    fn mul_vec(&self, v: &[Complex; 2]) -> [Complex; 2] {
        [
            self.m[0][0] * v[0] + self.m[0][1] * v[1],
            self.m[1][0] * v[0] + self.m[1][1] * v[1],
        ]
    }
}

/// Collective channel rotation with columns
/// `U|0⟩ = cosθ|0⟩ + e^{iφ} sinθ|1⟩` and
/// `U|1⟩ = e^{iΔ}(−e^{−iφ} sinθ|0⟩ + cosθ|1⟩)`.
pub fn single_qubit_unitary(theta: f64, phi: f64, delta: f64) -> Result<Unitary2, QmathError> {
    for (name, value) in [("theta", theta), ("phi", phi), ("delta", delta)] {
        if !value.is_finite() {
            return Err(QmathError::NonFinite { name, value });
        }
    }
    let (s, c) = theta.sin_cos();
    let e_phi = Complex::from_polar(1.0, phi);
    let e_delta = Complex::from_polar(1.0, delta);
    let m = [
        [Complex::new(c, 0.0), -e_delta * e_phi.conj() * s],
        [e_phi * s, e_delta * c],
    ];
    Ok(Unitary2 { m })
}

/// Applies `u ⊗ u` to a code: the same rotation hits both photons.
pub fn collective_apply(u: &Unitary2, s: &TwoQubitState) -> TwoQubitState {
    local_apply(u, u, s)
}

/// Applies `u1 ⊗ u2`.
pub fn local_apply(u1: &Unitary2, u2: &Unitary2, s: &TwoQubitState) -> TwoQubitState {
    let a = &u1.m;
    let b = &u2.m;
    let mut out = [ZERO; 4];
    for (r1, row_a) in a.iter().enumerate() {
        for (r2, row_b) in b.iter().enumerate() {
            let mut acc = ZERO;
            for (c1, ea) in row_a.iter().enumerate() {
                for (c2, eb) in row_b.iter().enumerate() {
                    acc += ea * eb * s.amp[2 * c1 + c2];
                }
            }
            out[2 * r1 + r2] = acc;
        }
    }
    TwoQubitState { amp: out }
}

/// Probability weights of a state over the four Bell states.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BellDistribution {
    pub p_psi_plus: f64,
    pub p_psi_minus: f64,
    pub p_phi_plus: f64,
    pub p_phi_minus: f64,
}

impl BellDistribution {
    pub fn total(&self) -> f64 {
        self.p_psi_plus + self.p_psi_minus + self.p_phi_plus + self.p_phi_minus
    }

    /// `(ψ⁺, ψ⁻, φ⁺, φ⁻)` order.
    pub fn as_array(&self) -> [f64; 4] {
        [
            self.p_psi_plus,
            self.p_psi_minus,
            self.p_phi_plus,
            self.p_phi_minus,
        ]
    }
}

pub fn bell_decompose(s: &TwoQubitState) -> BellDistribution {
    BellDistribution {
        p_psi_plus: TwoQubitState::psi_plus().fidelity(s),
        p_psi_minus: TwoQubitState::psi_minus().fidelity(s),
        p_phi_plus: TwoQubitState::phi_plus().fidelity(s),
        p_phi_minus: TwoQubitState::phi_minus().fidelity(s),
    }
}

/// Result of measuring both photons of a code in the same local basis.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct OutcomePair {
    pub basis: LocalBasis,
    pub bit1: bool,
    pub bit2: bool,
}

impl OutcomePair {
    pub fn bits_equal(&self) -> bool {
        self.bit1 == self.bit2
    }
}

/// Born probabilities for the four product outcomes of measuring qubit 1 in
/// `b1` and qubit 2 in `b2`, in the order (0,0), (0,1), (1,0), (1,1).
pub fn outcome_probabilities(s: &TwoQubitState, b1: LocalBasis, b2: LocalBasis) -> [f64; 4] {
    let e1 = b1.eigenvectors();
    let e2 = b2.eigenvectors();
    let mut probs = [0.0; 4];
    for (o1, v1) in e1.iter().enumerate() {
        for (o2, v2) in e2.iter().enumerate() {
            let mut acc = ZERO;
            for (i, a) in v1.iter().enumerate() {
                for (j, b) in v2.iter().enumerate() {
                    acc += a.conj() * b.conj() * s.amp[2 * i + j];
                }
            }
            probs[2 * o1 + o2] = acc.norm_sqr();
        }
    }
    probs
}

/// Samples a product outcome with qubit 1 in `b1`, qubit 2 in `b2`, by
/// inverse-CDF over the fixed outcome ordering.
pub fn measure_local(s: &TwoQubitState, b1: LocalBasis, b2: LocalBasis, u: f64) -> (bool, bool) {
    let probs = outcome_probabilities(s, b1, b2);
    let k = invert_cdf(&probs, u);
    (k & 2 != 0, k & 1 != 0)
}

/// Measures both photons in `basis`. Deterministic in `u ∈ [0,1)`.
pub fn measure_pair(s: &TwoQubitState, basis: LocalBasis, u: f64) -> OutcomePair {
    let (bit1, bit2) = measure_local(s, basis, basis, u);
    OutcomePair { basis, bit1, bit2 }
}

fn invert_cdf(probs: &[f64; 4], u: f64) -> usize {
    let mut cum = 0.0;
    let mut last_nonzero = 0;
    for (k, &p) in probs.iter().enumerate() {
        if p > 0.0 {
            last_nonzero = k;
        }
        cum += p;
        if u < cum {
            return k;
        }
    }
    // rounding left total mass below u
    last_nonzero
}

/// Alice's code state for a preparation label.
pub fn prepare_code(label: CodeLabel) -> TwoQubitState {
    match (label.basis, label.bit) {
        (CodeBasis::Z, false) => TwoQubitState::basis_state(false, true),
        (CodeBasis::Z, true) => TwoQubitState::basis_state(true, false),
        (CodeBasis::X, false) => TwoQubitState::psi_plus(),
        (CodeBasis::X, true) => TwoQubitState::psi_minus(),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::{FRAC_PI_2, FRAC_PI_6};

    fn close(a: Complex, b: Complex, tol: f64) -> bool {
        (a - b).norm() < tol
    }

    #[test]
    fn zero_angle_is_identity_for_any_phi() {
        let u = single_qubit_unitary(0.0, 1.7, 0.0).unwrap();
        let id = Unitary2::identity();
        for i in 0..2 {
            for j in 0..2 {
                assert!(close(u.matrix()[i][j], id.matrix()[i][j], ALGEBRA_TOL));
            }
        }
    }

    #[test]
    fn quarter_turn_swaps_with_sign() {
        let u = single_qubit_unitary(FRAC_PI_2, 0.0, 0.0).unwrap();
        let zero = Qubit::zero().apply(&u);
        let one = Qubit::eigenstate(LocalBasis::Z, true).apply(&u);
        assert!(close(zero.amplitudes()[0], ZERO, ALGEBRA_TOL));
        assert!(close(zero.amplitudes()[1], ONE, ALGEBRA_TOL));
        assert!(close(one.amplitudes()[0], -ONE, ALGEBRA_TOL));
        assert!(close(one.amplitudes()[1], ZERO, ALGEBRA_TOL));
    }

    #[test]
    fn generic_rotation_is_unitary() {
        let u = single_qubit_unitary(FRAC_PI_6, 1.2, 0.7).unwrap();
        assert!(u.unitarity_deviation() < ALGEBRA_TOL);
        assert!(Unitary2::from_matrix(*u.matrix()).is_ok());
    }

    #[test]
    fn rejects_non_finite_angles() {
        assert!(matches!(
            single_qubit_unitary(f64::NAN, 0.0, 0.0),
            Err(QmathError::NonFinite { name: "theta", .. })
        ));
        assert!(single_qubit_unitary(0.0, f64::INFINITY, 0.0).is_err());
        assert!(single_qubit_unitary(0.0, 0.0, f64::NEG_INFINITY).is_err());
    }

    #[test]
    fn rejects_non_unitary_matrix() {
        let m = [[ONE, ONE], [ZERO, ONE]];
        assert!(matches!(
            Unitary2::from_matrix(m),
            Err(QmathError::NotUnitary { .. })
        ));
    }

    #[test]
    fn collective_rotation_of_01_at_pi_over_6() {
        // U|0⟩ ⊗ U|1⟩ = −cs|00⟩ + c²|01⟩ − s²|10⟩ + cs|11⟩ for φ = Δ = 0,
        // with c² = 0.75, s² = 0.25, cs = √3/4.
        let u = single_qubit_unitary(FRAC_PI_6, 0.0, 0.0).unwrap();
        let out = collective_apply(&u, &TwoQubitState::basis_state(false, true));
        let a = out.amplitudes();
        let r = 3f64.sqrt() / 4.0;
        assert!(close(a[0], Complex::new(-r, 0.0), ALGEBRA_TOL));
        assert!(close(a[1], Complex::new(0.75, 0.0), ALGEBRA_TOL));
        assert!(close(a[2], Complex::new(-0.25, 0.0), ALGEBRA_TOL));
        assert!(close(a[3], Complex::new(r, 0.0), ALGEBRA_TOL));
        let mags = a.map(|c| c.norm());
        for (m, e) in mags.iter().zip([r, 0.75, 0.25, r]) {
            assert!((m - e).abs() < ALGEBRA_TOL);
        }
    }

    #[test]
    fn singlet_picks_up_determinant_phase() {
        let u = single_qubit_unitary(0.4, 2.1, 0.9).unwrap();
        let out = collective_apply(&u, &TwoQubitState::psi_minus());
        let expected = TwoQubitState::psi_minus().scaled(Complex::from_polar(1.0, 0.9));
        assert!(out.max_abs_diff(&expected) < STATE_TOL);
        assert!((TwoQubitState::psi_minus().fidelity(&out) - 1.0).abs() < STATE_TOL);
        assert!(close(u.det(), Complex::from_polar(1.0, 0.9), ALGEBRA_TOL));
    }

    #[test]
    fn identity_leaves_state_unchanged() {
        let s = TwoQubitState::new([
            Complex::new(0.5, 0.0),
            Complex::new(0.0, 0.5),
            Complex::new(-0.5, 0.0),
            Complex::new(0.0, -0.5),
        ])
        .unwrap();
        assert_eq!(collective_apply(&Unitary2::identity(), &s), s);
    }

    #[test]
    fn bell_decomposition_of_known_states() {
        let d = bell_decompose(&TwoQubitState::psi_plus());
        assert_eq!(d.as_array().map(|p| (p * 1e12).round() / 1e12), [1.0, 0.0, 0.0, 0.0]);

        let d = bell_decompose(&TwoQubitState::basis_state(false, true));
        assert!((d.p_psi_plus - 0.5).abs() < ALGEBRA_TOL);
        assert!((d.p_psi_minus - 0.5).abs() < ALGEBRA_TOL);
        assert!(d.p_phi_plus.abs() < ALGEBRA_TOL);
        assert!(d.p_phi_minus.abs() < ALGEBRA_TOL);
    }

    #[test]
    fn rotated_psi_plus_never_reaches_singlet() {
        let u = single_qubit_unitary(FRAC_PI_6, 0.9, 0.4).unwrap();
        let d = bell_decompose(&collective_apply(&u, &TwoQubitState::psi_plus()));
        assert!(d.p_psi_minus < ALGEBRA_TOL);
        assert!((d.total() - 1.0).abs() < STATE_TOL);
    }

    #[test]
    fn z_measurement_of_01_is_deterministic() {
        let s = TwoQubitState::basis_state(false, true);
        for u in [0.0, 0.3, 0.999_999] {
            let o = measure_pair(&s, LocalBasis::Z, u);
            assert_eq!((o.bit1, o.bit2), (false, true));
        }
    }

    #[test]
    fn psi_plus_in_x_is_correlated() {
        let p = outcome_probabilities(&TwoQubitState::psi_plus(), LocalBasis::X, LocalBasis::X);
        assert!((p[0] - 0.5).abs() < ALGEBRA_TOL);
        assert!(p[1] < ALGEBRA_TOL && p[2] < ALGEBRA_TOL);
        assert!((p[3] - 0.5).abs() < ALGEBRA_TOL);
        assert!(measure_pair(&TwoQubitState::psi_plus(), LocalBasis::X, 0.2).bits_equal());
        assert!(measure_pair(&TwoQubitState::psi_plus(), LocalBasis::X, 0.7).bits_equal());
    }

    #[test]
    fn singlet_in_y_is_anticorrelated() {
        let p = outcome_probabilities(&TwoQubitState::psi_minus(), LocalBasis::Y, LocalBasis::Y);
        assert!(p[0] < ALGEBRA_TOL && p[3] < ALGEBRA_TOL);
        for k in 0..100 {
            let o = measure_pair(&TwoQubitState::psi_minus(), LocalBasis::Y, k as f64 / 100.0);
            assert!(!o.bits_equal());
        }
    }

    #[test]
    fn parity_table_per_bell_state() {
        // (state, Z-equal, X-equal, Y-equal)
        let table = [
            (TwoQubitState::psi_plus(), false, true, true),
            (TwoQubitState::psi_minus(), false, false, false),
            (TwoQubitState::phi_plus(), true, true, false),
            (TwoQubitState::phi_minus(), true, false, true),
        ];
        for (s, z, x, y) in table {
            for (basis, equal) in [(LocalBasis::Z, z), (LocalBasis::X, x), (LocalBasis::Y, y)] {
                let p = outcome_probabilities(&s, basis, basis);
                let p_equal = p[0] + p[3];
                assert!((p_equal - if equal { 1.0 } else { 0.0 }).abs() < ALGEBRA_TOL);
            }
        }
    }

    #[test]
    fn prepared_codes() {
        let z0 = prepare_code(CodeLabel::new(CodeBasis::Z, false));
        assert_eq!(z0.amplitudes(), &[ZERO, ONE, ZERO, ZERO]);
        let x1 = prepare_code(CodeLabel::new(CodeBasis::X, true));
        let h = FRAC_1_SQRT_2;
        assert_eq!(
            x1.amplitudes(),
            &[ZERO, Complex::new(h, 0.0), Complex::new(-h, 0.0), ZERO]
        );
        let d = bell_decompose(&prepare_code(CodeLabel::new(CodeBasis::X, false)));
        assert!((d.p_psi_plus - 1.0).abs() < ALGEBRA_TOL);
    }

    #[test]
    fn cdf_inversion_ignores_rounding_tail() {
        let s = TwoQubitState::basis_state(true, true);
        let o = measure_pair(&s, LocalBasis::Z, 1.0 - f64::EPSILON);
        assert_eq!((o.bit1, o.bit2), (true, true));
    }

    #[test]
    fn mixed_basis_measurement() {
        // |0+⟩ measured Z on qubit 1, X on qubit 2
        let s = TwoQubitState::product(&Qubit::zero(), &Qubit::eigenstate(LocalBasis::X, false));
        assert_eq!(measure_local(&s, LocalBasis::Z, LocalBasis::X, 0.99), (false, false));
    }
}

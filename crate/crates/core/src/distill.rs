//! Classical post-processing: entropy, asymptotic key rate, block-wise bit
//! inversion and Toeplitz-hash privacy amplification.

use rand::seq::index;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum DistillError {
    #[error("probability {0} is outside [0, 1]")]
    InvalidProbability(f64),
    #[error("block_size must be at least 1")]
    EmptyBlock,
    #[error("block_size {block_size} exceeds sequence length {len}")]
    BlockTooLarge { block_size: usize, len: usize },
    #[error("alice and bob sequences differ in length ({0} vs {1})")]
    LengthMismatch(usize, usize),
    #[error("reveal_fraction must lie in (0, 1], got {0}")]
    InvalidRevealFraction(f64),
    #[error("output length {out_len} exceeds input length {len}")]
    OutputTooLong { out_len: usize, len: usize },
}

/// `H(p) = −p log₂ p − (1−p) log₂(1−p)`, with `H(0) = H(1) = 0`.
pub fn binary_entropy(p: f64) -> Result<f64, DistillError> {
    if !(0.0..=1.0).contains(&p) {
        return Err(DistillError::InvalidProbability(p));
    }
    let term = |x: f64| if x > 0.0 { -x * x.log2() } else { 0.0 };
    Ok(term(p) + term(1.0 - p))
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct KeyRate {
    pub rate_per_accepted_bit: f64,
    /// Set when `1 − H(r_b) − H(t_p) ≤ 0`; the rate is then reported as 0.
    pub no_key: bool,
}

/// One-way rate `max(0, 1 − H(r_b) − H(t_p))` per accepted Z-bit.
///
/// With `t_p = 0` this is `1 + r_b log₂ r_b + (1 − r_b) log₂(1 − r_b)`.
pub fn key_rate(r_b: f64, t_p: f64) -> Result<KeyRate, DistillError> {
    let raw = 1.0 - binary_entropy(r_b)? - binary_entropy(t_p)?;
    Ok(if raw > 0.0 {
        KeyRate {
            rate_per_accepted_bit: raw,
            no_key: false,
        }
    } else {
        KeyRate {
            rate_per_accepted_bit: 0.0,
            no_key: true,
        }
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct KeyRateReport {
    pub r_b: f64,
    pub t_p: f64,
    pub rate_per_accepted_bit: f64,
    /// `rate_per_accepted_bit × accepted fraction × Z-sift fraction`.
    pub rate_per_sent_code: f64,
    pub no_key: bool,
}

impl KeyRateReport {
    pub fn new(
        r_b: f64,
        t_p: f64,
        accepted_fraction: f64,
        z_sift_fraction: f64,
    ) -> Result<Self, DistillError> {
        let k = key_rate(r_b, t_p)?;
        Ok(Self {
            r_b,
            t_p,
            rate_per_accepted_bit: k.rate_per_accepted_bit,
            rate_per_sent_code: k.rate_per_accepted_bit * accepted_fraction * z_sift_fraction,
            no_key: k.no_key,
        })
    }
}

/// Bits per fluctuation block for [`block_invert`].
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct BlockSpec {
    pub block_size: usize,
}

#[derive(Debug, Clone, PartialEq)]
pub struct BlockInversion {
    pub corrected: Vec<bool>,
    /// Positions published while estimating block error rates.
    pub consumed: Vec<bool>,
    pub flipped_blocks: Vec<usize>,
    /// Sample-based error rate after inversion, weighted by block length.
    pub estimated_error: f64,
}

impl BlockInversion {
    /// Drops consumed positions from `bits`.
    pub fn unconsumed(&self, bits: &[bool]) -> Vec<bool> {
        bits.iter()
            .zip(&self.consumed)
            .filter(|(_, &c)| !c)
            .map(|(&b, _)| b)
            .collect()
    }
}

/// Inverts Bob's bits in every block whose sampled error rate exceeds 1/2.
///
/// Each block (the last one may be short) publishes
/// `⌈reveal_fraction · len⌉` randomly chosen positions, which are marked
/// consumed.
pub fn block_invert<R: Rng + ?Sized>(
    alice: &[bool],
    bob: &[bool],
    spec: BlockSpec,
    reveal_fraction: f64,
    rng: &mut R,
) -> Result<BlockInversion, DistillError> {
    if alice.len() != bob.len() {
        return Err(DistillError::LengthMismatch(alice.len(), bob.len()));
    }
    if spec.block_size == 0 {
        return Err(DistillError::EmptyBlock);
    }
    if spec.block_size > alice.len() {
        return Err(DistillError::BlockTooLarge {
            block_size: spec.block_size,
            len: alice.len(),
        });
    }
    if !(reveal_fraction > 0.0 && reveal_fraction <= 1.0) {
        return Err(DistillError::InvalidRevealFraction(reveal_fraction));
    }

    let mut corrected = bob.to_vec();
    let mut consumed = vec![false; bob.len()];
    let mut flipped_blocks = Vec::new();
    let mut weighted_error = 0.0;
    for (block, start) in (0..bob.len()).step_by(spec.block_size).enumerate() {
        let end = (start + spec.block_size).min(bob.len());
        let len = end - start;
        let k = ((reveal_fraction * len as f64).ceil() as usize).clamp(1, len);
        let mut mismatches = 0usize;
        for offset in index::sample(rng, len, k) {
            let pos = start + offset;
            consumed[pos] = true;
            mismatches += (alice[pos] != bob[pos]) as usize;
        }
        let rate = mismatches as f64 / k as f64;
        if rate > 0.5 {
            flipped_blocks.push(block);
            for b in &mut corrected[start..end] {
                *b = !*b;
            }
            weighted_error += (1.0 - rate) * len as f64;
        } else {
            weighted_error += rate * len as f64;
        }
    }
    Ok(BlockInversion {
        corrected,
        consumed,
        flipped_blocks,
        estimated_error: weighted_error / bob.len() as f64,
    })
}

/// Hashes `bits` to `out_len` bits with a seed-derived binary Toeplitz matrix.
///
/// Row `i`, column `j` of the matrix is `r[i + n − 1 − j]` for a random
/// string `r` of length `out_len + n − 1`, so output bit `i` is the parity
/// of `r[i .. i + n]` against the reversed input.
pub fn privacy_amplify(bits: &[bool], out_len: usize, hash_seed: u64) -> Result<Vec<bool>, DistillError> {
    let n = bits.len();
    if out_len > n {
        return Err(DistillError::OutputTooLong { out_len, len: n });
    }
    if out_len == 0 {
        return Ok(Vec::new());
    }
    let r = toeplitz_diagonals(n, out_len, hash_seed);
    let reversed = pack(bits.iter().rev().copied(), n);
    Ok((0..out_len)
        .map(|i| {
            let mut acc = 0u64;
            for (k, &w) in reversed.iter().enumerate() {
                acc ^= window(&r, i + 64 * k) & w;
            }
            acc.count_ones() & 1 == 1
        })
        .collect())
}

/// The `out_len + n − 1` random bits defining the Toeplitz matrix, packed
/// little-endian into words (with one zero word of padding).
pub(crate) fn toeplitz_diagonals(n: usize, out_len: usize, hash_seed: u64) -> Vec<u64> {
    let len = out_len + n - 1;
    let mut rng = ChaCha8Rng::seed_from_u64(hash_seed);
    let mut words: Vec<u64> = (0..len.div_ceil(64)).map(|_| rng.random()).collect();
    if len % 64 != 0 {
        *words.last_mut().expect("len > 0") &= (1u64 << (len % 64)) - 1;
    }
    words.push(0);
    words
}

#[cfg(test)]
pub(crate) fn bit_at(words: &[u64], pos: usize) -> bool {
    words[pos / 64] >> (pos % 64) & 1 == 1
}

fn pack(bits: impl Iterator<Item = bool>, n: usize) -> Vec<u64> {
    let mut words = vec![0u64; n.div_ceil(64)];
    for (i, b) in bits.enumerate() {
        if b {
            words[i / 64] |= 1 << (i % 64);
        }
    }
    words
}

/// Bits `[start, start + 64)` of a packed string; reads past the end are zero.
fn window(words: &[u64], start: usize) -> u64 {
    let (w, off) = (start / 64, start % 64);
    let lo = words.get(w).copied().unwrap_or(0);
    if off == 0 {
        lo
    } else {
        let hi = words.get(w + 1).copied().unwrap_or(0);
        (lo >> off) | (hi << (64 - off))
    }
}

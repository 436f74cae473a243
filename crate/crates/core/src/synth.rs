//! Seeded synthetic data and sparsity statistics.
//!
//! All randomness in the crate comes from [`SplitMix64`], so any fixture is
//! reproducible from its seed alone, in any implementation of the same
//! algorithm. Parallel consumers split the generator by deriving independent
//! seeds with [`derive_seed`].

use serde::Serialize;

use crate::bits::PackedBitVector;
use crate::{Error, Result};

const GOLDEN_GAMMA: u64 = 0x9e37_79b9_7f4a_7c15;

/// SplitMix64 finalizer (Steele, Lea & Flood): two xor-shift-multiply rounds.
#[inline]
pub fn mix64(mut z: u64) -> u64 {
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    z ^ (z >> 31)
}

/// The SplitMix64 generator: `state += GOLDEN_GAMMA; output = mix64(state)`.
#[derive(Clone, Debug)]
pub struct SplitMix64 {
    state: u64,
}

impl SplitMix64 {
    pub fn new(seed: u64) -> Self {
        Self { state: seed }
    }

    pub fn next_u64(&mut self) -> u64 {
        self.state = self.state.wrapping_add(GOLDEN_GAMMA);
        mix64(self.state)
    }

    /// Uniform draw in `[0, 1)` with 53 bits of precision.
    pub fn next_f53(&mut self) -> f64 {
        (self.next_u64() >> 11) as f64 * (1.0 / (1u64 << 53) as f64)
    }
}

/// Derive an independent stream seed as `mix64(seed + mix64(index + gamma))`.
///
/// Serial and parallel consumers of stream `index` agree by construction.
pub fn derive_seed(seed: u64, index: u64) -> u64 {
    mix64(seed.wrapping_add(mix64(index.wrapping_add(GOLDEN_GAMMA))))
}

/// Random plane of `length` bits, each Bernoulli(0.5).
///
/// Bit `i` is bit `i % 64` of the generator's `i / 64`-th output word.
pub fn gen_random_plane(length: usize, seed: u64) -> PackedBitVector {
    let mut rng = SplitMix64::new(seed);
    let mut bytes = vec![0u8; length.div_ceil(8)];
    for chunk in bytes.chunks_mut(8) {
        let word = rng.next_u64().to_le_bytes();
        chunk.copy_from_slice(&word[..chunk.len()]);
    }
    // Zero the partial tail byte so padding stays clear.
    let tail = length % 8;
    if tail != 0 {
        if let Some(last) = bytes.last_mut() {
            *last &= (1u8 << tail) - 1;
        }
    }
    PackedBitVector::from_bytes(&bytes, length).expect("sized buffer")
}

/// Random mask of `length` bits where bit `i` is pruned (0) with probability
/// `sparsity`: one `next_f53` draw per bit, unpruned iff `draw >= sparsity`.
pub fn gen_bernoulli_mask(length: usize, sparsity: f64, seed: u64) -> Result<PackedBitVector> {
    if !(0.0..1.0).contains(&sparsity) {
        return Err(Error::InvalidParameter(format!(
            "sparsity must be in [0, 1), got {sparsity}"
        )));
    }
    let mut rng = SplitMix64::new(seed);
    let mut v = PackedBitVector::zeros(length);
    for i in 0..length {
        if rng.next_f53() >= sparsity {
            v.set(i, true);
        }
    }
    Ok(v)
}

/// Per-block unpruned-count statistics for a mask.
#[derive(Clone, Debug, Serialize)]
pub struct SparsityProfile {
    /// Observed pruning rate: fraction of zero bits in the mask.
    pub s: f64,
    /// Unpruned count of each complete block, in order.
    pub samples: Vec<u32>,
    pub mean: f64,
    /// Population variance of the samples.
    pub variance: f64,
    /// `sqrt(variance) / mean`; `None` when the mean is zero.
    pub coefficient_of_variation: Option<f64>,
}

/// Empirical mean/variance/CV of the unpruned count per `n_out`-bit block.
/// A trailing partial block is excluded.
pub fn block_nu_stats(mask: &PackedBitVector, n_out: usize) -> Result<SparsityProfile> {
    if n_out == 0 {
        return Err(Error::InvalidParameter("n_out must be positive".into()));
    }
    let full_blocks = mask.len() / n_out;
    let mut samples = Vec::with_capacity(full_blocks);
    for b in 0..full_blocks {
        let mut n_u = 0u32;
        let mut taken = 0;
        while taken < n_out {
            let width = (n_out - taken).min(64);
            n_u += mask.extract_bits(b * n_out + taken, width).count_ones();
            taken += width;
        }
        samples.push(n_u);
    }
    let n = samples.len() as f64;
    let (mean, variance) = if samples.is_empty() {
        (0.0, 0.0)
    } else {
        let mean = samples.iter().map(|&x| f64::from(x)).sum::<f64>() / n;
        let variance = samples
            .iter()
            .map(|&x| (f64::from(x) - mean).powi(2))
            .sum::<f64>()
            / n;
        (mean, variance)
    };
    let s = if mask.is_empty() {
        0.0
    } else {
        1.0 - mask.count_ones() as f64 / mask.len() as f64
    };
    Ok(SparsityProfile {
        s,
        samples,
        mean,
        variance,
        coefficient_of_variation: (mean > 0.0).then(|| variance.sqrt() / mean),
    })
}

/// Closed-form coefficient of variation of the unpruned count in a row of
/// `row_length` weights under independent pruning at rate `s`:
/// `(1 / sqrt(row_length)) * sqrt(s / (1 - s))`.
pub fn csr_row_cv(row_length: u64, s: f64) -> Result<f64> {
    if row_length == 0 {
        return Err(Error::InvalidParameter("row_length must be positive".into()));
    }
    if !(s > 0.0 && s < 1.0) {
        return Err(Error::InvalidParameter(format!(
            "s must be strictly between 0 and 1, got {s}"
        )));
    }
    Ok((1.0 / (row_length as f64).sqrt()) * (s / (1.0 - s)).sqrt())
}

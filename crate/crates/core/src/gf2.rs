//! The fixed-to-fixed decoder: XOR-gate matrix products over GF(2), extended
//! to sequential decoding by shift registers, plus the analytic hardware cost
//! model.
//!
//! A decoder is a binary matrix of shape `n_out x ((n_s + 1) * n_in)`. At
//! block `t` it consumes the window of input vectors
//! `(u_t, u_{t+1}, ..., u_{t+n_s})` with the *oldest* vector occupying the
//! lowest-index matrix columns, and emits `n_out` bits, each the XOR-fold of
//! the AND of one matrix row with the concatenated window.

use crate::bits::{mask_of, BitReader, BitWriter, PackedBitVector};
use crate::{Error, Result};

/// Upper bound on `n_in * (n_s + 1)`, the trellis context width in bits.
/// Encoding cost grows as `2^context`, so this bounds encoder time and
/// memory; decoding itself is linear and unaffected.
pub const DEFAULT_CONTEXT_CAP_BITS: u32 = 26;

/// Magic prefix of a standalone serialized decoder matrix.
pub const XMTX_MAGIC: &[u8; 4] = b"XMTX";

/// An XOR-gate decoder: dimensions plus the row-major bit matrix.
///
/// Immutable after construction; decode operations are pure.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct DecoderSpec {
    n_in: u32,
    n_out: u32,
    n_s: u32,
    words_per_row: usize,
    /// Row-major, `words_per_row` words per row, column `c` at bit `c % 64`
    /// of word `c / 64`.
    rows: Vec<u64>,
}

impl DecoderSpec {
    /// Build from a bit function over (row, column). Columns of the window
    /// concatenation run oldest-first.
    pub fn from_bit_fn(
        n_in: u32,
        n_out: u32,
        n_s: u32,
        mut bit: impl FnMut(u32, u32) -> bool,
    ) -> Result<Self> {
        let spec = Self::from_bit_fn_unchecked(n_in, n_out, n_s, &mut bit)?;
        spec.check_context_cap()?;
        Ok(spec)
    }

    /// Like [`Self::from_bit_fn`] but skips the trellis-context cap. Decoding
    /// works for any dimensions; encoding such a spec is rejected.
    pub fn from_bit_fn_unchecked(
        n_in: u32,
        n_out: u32,
        n_s: u32,
        mut bit: impl FnMut(u32, u32) -> bool,
    ) -> Result<Self> {
        if n_in == 0 || n_out == 0 {
            return Err(Error::InvalidParameter(
                "decoder dimensions must be positive".into(),
            ));
        }
        let cols = (n_s + 1) * n_in;
        let words_per_row = (cols as usize).div_ceil(64);
        let mut rows = vec![0u64; n_out as usize * words_per_row];
        for r in 0..n_out {
            for c in 0..cols {
                if bit(r, c) {
                    rows[r as usize * words_per_row + c as usize / 64] |= 1 << (c % 64);
                }
            }
        }
        Ok(Self {
            n_in,
            n_out,
            n_s,
            words_per_row,
            rows,
        })
    }

    /// Build from row-major concatenated matrix bits of length
    /// `n_out * (n_s + 1) * n_in`.
    pub fn from_packed_bits(
        n_in: u32,
        n_out: u32,
        n_s: u32,
        bits: &PackedBitVector,
    ) -> Result<Self> {
        let cols = (n_s + 1) * n_in;
        let expect = n_out as usize * cols as usize;
        if bits.len() != expect {
            return Err(Error::MalformedInput(format!(
                "matrix needs {expect} bits, got {}",
                bits.len()
            )));
        }
        Self::from_bit_fn(n_in, n_out, n_s, |r, c| {
            bits.get(r as usize * cols as usize + c as usize)
        })
    }

    fn check_context_cap(&self) -> Result<()> {
        let context_bits = self.context_bits();
        if context_bits > DEFAULT_CONTEXT_CAP_BITS {
            return Err(Error::ResourceLimit {
                context_bits,
                cap: DEFAULT_CONTEXT_CAP_BITS,
            });
        }
        Ok(())
    }

    pub fn n_in(&self) -> u32 {
        self.n_in
    }

    pub fn n_out(&self) -> u32 {
        self.n_out
    }

    pub fn n_s(&self) -> u32 {
        self.n_s
    }

    /// Total window width `n_in * (n_s + 1)`, also the matrix column count.
    pub fn context_bits(&self) -> u32 {
        self.n_in * (self.n_s + 1)
    }

    pub(crate) fn words_per_row(&self) -> usize {
        self.words_per_row
    }

    pub(crate) fn row_words(&self, r: u32) -> &[u64] {
        let start = r as usize * self.words_per_row;
        &self.rows[start..start + self.words_per_row]
    }

    /// Matrix bit at (row, column).
    pub fn matrix_bit(&self, r: u32, c: u32) -> bool {
        (self.row_words(r)[c as usize / 64] >> (c % 64)) & 1 == 1
    }

    pub fn matrix_ones(&self) -> u64 {
        self.rows.iter().map(|w| u64::from(w.count_ones())).sum()
    }

    /// Decode one window of `n_s + 1` input vectors, oldest first.
    pub fn decode_block(&self, window: &[u32]) -> Result<PackedBitVector> {
        if window.len() != (self.n_s + 1) as usize {
            return Err(Error::InvalidParameter(format!(
                "window needs {} vectors, got {}",
                self.n_s + 1,
                window.len()
            )));
        }
        for &v in window {
            if self.n_in < 32 && u64::from(v) >> self.n_in != 0 {
                return Err(Error::InvalidParameter(format!(
                    "input vector {v:#x} wider than n_in = {}",
                    self.n_in
                )));
            }
        }
        let win = self.window_words(window);
        let mut out = PackedBitVector::zeros(self.n_out as usize);
        for r in 0..self.n_out {
            if self.row_parity(r, &win) {
                out.set(r as usize, true);
            }
        }
        Ok(out)
    }

    pub(crate) fn window_words(&self, window: &[u32]) -> Vec<u64> {
        let mut win = vec![0u64; self.words_per_row];
        for (c, &v) in window.iter().enumerate() {
            let off = c * self.n_in as usize;
            let word = off / 64;
            let shift = off % 64;
            win[word] |= (u64::from(v)) << shift;
            let spill = 64usize.saturating_sub(shift);
            if (self.n_in as usize) > spill {
                win[word + 1] |= u64::from(v) >> spill;
            }
        }
        win
    }

    #[inline]
    pub(crate) fn row_parity(&self, r: u32, window_words: &[u64]) -> bool {
        let row = self.row_words(r);
        let mut acc = 0u32;
        for (rw, ww) in row.iter().zip(window_words) {
            acc ^= (rw & ww).count_ones();
        }
        acc & 1 == 1
    }

    /// Decode `block_count` blocks from a stream of at least
    /// `block_count + n_s` input vectors: block `b` (0-based) reads the
    /// window `(u_b, ..., u_{b+n_s})`.
    pub fn decode_stream(
        &self,
        stream: &InputStream,
        block_count: usize,
    ) -> Result<Vec<PackedBitVector>> {
        self.check_stream(stream, block_count)?;
        (0..block_count)
            .map(|b| self.decode_block(&stream.vectors()[b..b + (self.n_s as usize) + 1]))
            .collect()
    }

    /// Same as [`Self::decode_stream`] but concatenates the output blocks
    /// into one plane of `block_count * n_out` bits.
    pub fn decode_stream_concat(
        &self,
        stream: &InputStream,
        block_count: usize,
    ) -> Result<PackedBitVector> {
        self.check_stream(stream, block_count)?;
        let n_out = self.n_out as usize;
        let mut out = PackedBitVector::zeros(block_count * n_out);
        for b in 0..block_count {
            let win = self.window_words(&stream.vectors()[b..b + (self.n_s as usize) + 1]);
            for r in 0..self.n_out {
                if self.row_parity(r, &win) {
                    out.set(b * n_out + r as usize, true);
                }
            }
        }
        Ok(out)
    }

    fn check_stream(&self, stream: &InputStream, block_count: usize) -> Result<()> {
        if stream.n_in() != self.n_in {
            return Err(Error::InvalidParameter(format!(
                "stream n_in {} does not match decoder n_in {}",
                stream.n_in(),
                self.n_in
            )));
        }
        let need = block_count + self.n_s as usize;
        if stream.len() < need {
            return Err(Error::InvalidParameter(format!(
                "stream of {} vectors shorter than block_count + n_s = {need}",
                stream.len()
            )));
        }
        Ok(())
    }

    /// Analytic decoder cost: expected XOR gate count under random fill
    /// (half the matrix cells, rounded to nearest), 6 transistors per XOR
    /// gate, and `n_s` extra pipeline latency cycles.
    pub fn hardware_cost(&self) -> HardwareCost {
        let cells = u64::from(self.n_out) * u64::from(self.context_bits());
        HardwareCost {
            xor_gates: (cells + 1) / 2,
            transistors: 3 * cells,
            extra_latency_cycles: self.n_s,
        }
    }

    /// Serialize as a standalone blob: magic `XMTX`, then `n_in`/`n_out`/`n_s`
    /// as little-endian u32, then the row-major packed matrix bits padded to
    /// a whole byte.
    pub fn write_xmtx(&self) -> Vec<u8> {
        let mut out = Vec::new();
        out.extend_from_slice(XMTX_MAGIC);
        out.extend_from_slice(&self.n_in.to_le_bytes());
        out.extend_from_slice(&self.n_out.to_le_bytes());
        out.extend_from_slice(&self.n_s.to_le_bytes());
        let mut w = BitWriter::new();
        let cols = self.context_bits();
        for r in 0..self.n_out {
            for c in 0..cols {
                w.write_bit(self.matrix_bit(r, c));
            }
        }
        w.align_to_byte();
        out.extend_from_slice(&w.into_bytes());
        out
    }

    pub fn read_xmtx(bytes: &[u8]) -> Result<Self> {
        if bytes.len() < 16 {
            return Err(Error::CorruptArtifact("matrix blob too short".into()));
        }
        if &bytes[0..4] != XMTX_MAGIC {
            return Err(Error::CorruptArtifact("bad matrix magic".into()));
        }
        let n_in = u32::from_le_bytes(bytes[4..8].try_into().unwrap());
        let n_out = u32::from_le_bytes(bytes[8..12].try_into().unwrap());
        let n_s = u32::from_le_bytes(bytes[12..16].try_into().unwrap());
        if n_in == 0 || n_out == 0 {
            return Err(Error::CorruptArtifact("zero matrix dimension".into()));
        }
        let cols = n_s
            .checked_add(1)
            .and_then(|x| x.checked_mul(n_in))
            .ok_or_else(|| Error::CorruptArtifact("matrix dimensions overflow".into()))?;
        let matrix_bits = n_out as usize * cols as usize;
        let mut r = BitReader::new(&bytes[16..]);
        let packed = r
            .read_packed(matrix_bits)
            .map_err(|_| Error::CorruptArtifact("matrix bits truncated".into()))?;
        Self::from_packed_bits(n_in, n_out, n_s, &packed)
    }
}

/// Analytic hardware cost of one decoder instance.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct HardwareCost {
    pub xor_gates: u64,
    pub transistors: u64,
    pub extra_latency_cycles: u32,
}

/// A sequence of `n_in`-bit input vectors `u_1 ... u_{l+n_s}`. Encoders emit
/// streams whose first `n_s` vectors are the all-zero warm-up.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct InputStream {
    n_in: u32,
    vectors: Vec<u32>,
}

impl InputStream {
    pub fn new(n_in: u32, vectors: Vec<u32>) -> Result<Self> {
        if n_in == 0 || n_in > 32 {
            return Err(Error::InvalidParameter(format!(
                "n_in must be in 1..=32, got {n_in}"
            )));
        }
        if n_in < 32 {
            for &v in &vectors {
                if u64::from(v) >> n_in != 0 {
                    return Err(Error::InvalidParameter(format!(
                        "vector {v:#x} wider than n_in = {n_in}"
                    )));
                }
            }
        }
        Ok(Self { n_in, vectors })
    }

    pub fn n_in(&self) -> u32 {
        self.n_in
    }

    pub fn len(&self) -> usize {
        self.vectors.len()
    }

    pub fn is_empty(&self) -> bool {
        self.vectors.is_empty()
    }

    pub fn vectors(&self) -> &[u32] {
        &self.vectors
    }

    /// True iff the first `n_s` vectors are zero.
    pub fn warmup_is_zero(&self, n_s: u32) -> bool {
        self.vectors
            .iter()
            .take(n_s as usize)
            .all(|&v| v == 0)
    }
}

pub(crate) fn vector_mask(n_in: u32) -> u64 {
    mask_of(n_in as usize)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::synth::{derive_seed, SplitMix64};

    fn random_spec(n_in: u32, n_out: u32, n_s: u32, seed: u64) -> DecoderSpec {
        let mut rng = SplitMix64::new(seed);
        DecoderSpec::from_bit_fn(n_in, n_out, n_s, |_, _| rng.next_u64() >> 63 == 1).unwrap()
    }

    /// Bit-by-bit reference: output bit r = XOR over columns of
    /// row[r][c] AND window_bit[c].
    fn decode_naive(spec: &DecoderSpec, window: &[u32]) -> PackedBitVector {
        let cols = spec.context_bits();
        let mut out = PackedBitVector::zeros(spec.n_out() as usize);
        for r in 0..spec.n_out() {
            let mut acc = false;
            for c in 0..cols {
                let vec_idx = (c / spec.n_in()) as usize;
                let bit_idx = c % spec.n_in();
                let wbit = (window[vec_idx] >> bit_idx) & 1 == 1;
                if spec.matrix_bit(r, c) && wbit {
                    acc = !acc;
                }
            }
            if acc {
                out.set(r as usize, true);
            }
        }
        out
    }

    #[test]
    fn single_row_parity_example() {
        // Row [1,0,1,1] against input bits (1,0,1,1): 1 xor 1 xor 1 = 1.
        let spec = DecoderSpec::from_bit_fn(4, 1, 0, |_, c| c != 1).unwrap();
        let out = spec.decode_block(&[0b1101]).unwrap();
        assert!(out.get(0));
    }

    #[test]
    fn zero_window_decodes_to_zero() {
        let spec = random_spec(8, 80, 2, 1);
        let out = spec.decode_block(&[0, 0, 0]).unwrap();
        assert_eq!(out.count_ones(), 0);
    }

    #[test]
    fn matches_naive_oracle() {
        for seed in 0..50 {
            let spec = random_spec(8, 8, 0, seed);
            let mut rng = SplitMix64::new(derive_seed(seed, 1));
            let window = [(rng.next_u64() & 0xff) as u32];
            assert_eq!(spec.decode_block(&window).unwrap(), decode_naive(&spec, &window));
        }
        for seed in 0..20 {
            let spec = random_spec(5, 37, 2, seed + 100);
            let mut rng = SplitMix64::new(derive_seed(seed, 2));
            let window: Vec<u32> = (0..3).map(|_| (rng.next_u64() & 0x1f) as u32).collect();
            assert_eq!(spec.decode_block(&window).unwrap(), decode_naive(&spec, &window));
        }
    }

    #[test]
    fn window_length_is_checked() {
        let spec = random_spec(4, 8, 1, 3);
        assert!(matches!(
            spec.decode_block(&[1]),
            Err(Error::InvalidParameter(_))
        ));
        assert!(matches!(
            spec.decode_block(&[1, 2, 3]),
            Err(Error::InvalidParameter(_))
        ));
    }

    #[test]
    fn stream_unrolls_to_sliding_windows() {
        // n_s=1, l=2 with u = (0, a, b): block 0 = M(0, a), block 1 = M(a, b).
        let spec = random_spec(4, 10, 1, 9);
        let (a, b) = (0b1010u32, 0b0111u32);
        let stream = InputStream::new(4, vec![0, a, b]).unwrap();
        let blocks = spec.decode_stream(&stream, 2).unwrap();
        assert_eq!(blocks[0], spec.decode_block(&[0, a]).unwrap());
        assert_eq!(blocks[1], spec.decode_block(&[a, b]).unwrap());
    }

    #[test]
    fn short_stream_is_rejected() {
        let spec = random_spec(4, 10, 1, 9);
        let stream = InputStream::new(4, vec![0, 1]).unwrap();
        assert!(matches!(
            spec.decode_stream(&stream, 2),
            Err(Error::InvalidParameter(_))
        ));
    }

    #[test]
    fn concat_equals_block_concat() {
        let spec = random_spec(3, 7, 2, 21);
        let mut rng = SplitMix64::new(77);
        let vectors: Vec<u32> = (0..12).map(|_| (rng.next_u64() & 0b111) as u32).collect();
        let stream = InputStream::new(3, vectors).unwrap();
        let blocks = spec.decode_stream(&stream, 10).unwrap();
        let concat = spec.decode_stream_concat(&stream, 10).unwrap();
        for (b, blk) in blocks.iter().enumerate() {
            for r in 0..7 {
                assert_eq!(concat.get(b * 7 + r), blk.get(r));
            }
        }
    }

    #[test]
    fn linearity_on_windows() {
        let spec = random_spec(6, 40, 1, 5);
        let mut rng = SplitMix64::new(6);
        for _ in 0..100 {
            let w1: Vec<u32> = (0..2).map(|_| (rng.next_u64() & 0x3f) as u32).collect();
            let w2: Vec<u32> = (0..2).map(|_| (rng.next_u64() & 0x3f) as u32).collect();
            let wx: Vec<u32> = w1.iter().zip(&w2).map(|(a, b)| a ^ b).collect();
            let lhs = spec.decode_block(&wx).unwrap();
            let rhs = spec.decode_block(&w1).unwrap().xor(&spec.decode_block(&w2).unwrap());
            assert_eq!(lhs, rhs);
        }
    }

    #[test]
    fn hardware_cost_formulas() {
        let spec = random_spec(8, 80, 0, 1);
        let cost = spec.hardware_cost();
        assert_eq!(cost.transistors, 1920);
        assert_eq!(cost.xor_gates, 320);
        assert_eq!(cost.extra_latency_cycles, 0);

        let spec = random_spec(8, 80, 2, 1);
        let cost = spec.hardware_cost();
        assert_eq!(cost.xor_gates, 960);
        assert_eq!(cost.transistors, 3 * 80 * 24);
        assert_eq!(cost.extra_latency_cycles, 2);
    }

    #[test]
    fn context_cap_is_enforced() {
        assert!(matches!(
            DecoderSpec::from_bit_fn(8, 8, 3, |_, _| false),
            Err(Error::ResourceLimit { context_bits: 32, cap: 26 })
        ));
        assert!(DecoderSpec::from_bit_fn_unchecked(8, 8, 3, |_, _| false).is_ok());
    }

    #[test]
    fn xmtx_roundtrip() {
        let spec = random_spec(8, 26, 1, 123);
        let blob = spec.write_xmtx();
        let back = DecoderSpec::read_xmtx(&blob).unwrap();
        assert_eq!(spec, back);
    }

    #[test]
    fn xmtx_rejects_bad_magic_and_truncation() {
        let spec = random_spec(4, 8, 0, 1);
        let mut blob = spec.write_xmtx();
        blob[0] = b'Y';
        assert!(matches!(
            DecoderSpec::read_xmtx(&blob),
            Err(Error::CorruptArtifact(_))
        ));
        let blob = spec.write_xmtx();
        assert!(matches!(
            DecoderSpec::read_xmtx(&blob[..blob.len() - 1]),
            Err(Error::CorruptArtifact(_))
        ));
    }
}

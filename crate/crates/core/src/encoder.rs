//! Input-stream search: for a sequence of masked blocks, find the decoder
//! input stream minimizing the number of unmatched unpruned bits.
//!
//! With `n_s = 0` each block is independent and an exhaustive scan over the
//! `2^n_in` candidate inputs is exact. With shift registers the blocks
//! couple, and the search runs as a dynamic program over a trellis whose
//! states are the last `n_s` input vectors and whose transitions are the next
//! vector: time `O(l * 2^(n_in*(n_s+1)))`, two live value slices of size
//! `2^(n_in*n_s)`, plus a per-step choice table kept for exact backtracking.
//!
//! Ties are broken toward the lexicographically smallest stream, reading the
//! free vectors `u_{n_s+1} ... u_{l+n_s}` in order, so identical inputs always
//! produce bit-identical streams.

use crate::bits::PackedBitVector;
use crate::gf2::{DecoderSpec, InputStream, DEFAULT_CONTEXT_CAP_BITS};
use crate::{bitplane, Error, Result};

/// `n_out` data bits paired with `n_out` mask bits (1 = unpruned).
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct MaskedBlock {
    data: PackedBitVector,
    mask: PackedBitVector,
    n_u: u32,
}

impl MaskedBlock {
    pub fn new(data: PackedBitVector, mask: PackedBitVector) -> Result<Self> {
        if data.len() != mask.len() {
            return Err(Error::MalformedInput(format!(
                "block data length {} does not match mask length {}",
                data.len(),
                mask.len()
            )));
        }
        let n_u = mask.count_ones() as u32;
        Ok(Self { data, mask, n_u })
    }

    pub fn width(&self) -> usize {
        self.data.len()
    }

    pub fn data(&self) -> &PackedBitVector {
        &self.data
    }

    pub fn mask(&self) -> &PackedBitVector {
        &self.mask
    }

    /// Cached unpruned-bit count.
    pub fn n_u(&self) -> u32 {
        self.n_u
    }
}

/// Count of unpruned positions where `candidate` disagrees with the block:
/// `popcount((candidate ^ data) & mask)`. Panics on width mismatch.
pub fn err_num(candidate: &PackedBitVector, block: &MaskedBlock) -> u32 {
    assert_eq!(candidate.len(), block.width(), "err_num width mismatch");
    candidate.xor(&block.data).and(&block.mask).count_ones() as u32
}

/// An encoding outcome: the chosen stream and its per-block unmatched counts.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct EncodeResult {
    pub stream: InputStream,
    pub total_errors: u64,
    pub per_block_errors: Vec<u32>,
}

impl EncodeResult {
    /// Encoding efficiency in percent: matched / unpruned * 100, with an
    /// empty mask reporting 100.
    pub fn efficiency_percent(&self, unpruned_bits: u64) -> f64 {
        if unpruned_bits == 0 {
            100.0
        } else {
            (unpruned_bits - self.total_errors) as f64 / unpruned_bits as f64 * 100.0
        }
    }
}

// ---------------------------------------------------------------------------
// Word-level block kernels
// ---------------------------------------------------------------------------

/// Fixed-width bit block supporting the two hot operations of the search.
trait BlockBits: Copy + Send + Sync {
    fn zero() -> Self;
    fn from_words(words: &[u64]) -> Self;
    fn xor(self, other: Self) -> Self;
    fn masked_err(self, data: Self, mask: Self) -> u32;
}

impl BlockBits for u64 {
    #[inline(always)]
    fn zero() -> Self {
        0
    }
    #[inline(always)]
    fn from_words(words: &[u64]) -> Self {
        words.first().copied().unwrap_or(0)
    }
    #[inline(always)]
    fn xor(self, other: Self) -> Self {
        self ^ other
    }
    #[inline(always)]
    fn masked_err(self, data: Self, mask: Self) -> u32 {
        ((self ^ data) & mask).count_ones()
    }
}

impl BlockBits for u128 {
    #[inline(always)]
    fn zero() -> Self {
        0
    }
    #[inline(always)]
    fn from_words(words: &[u64]) -> Self {
        let lo = words.first().copied().unwrap_or(0) as u128;
        let hi = words.get(1).copied().unwrap_or(0) as u128;
        lo | hi << 64
    }
    #[inline(always)]
    fn xor(self, other: Self) -> Self {
        self ^ other
    }
    #[inline(always)]
    fn masked_err(self, data: Self, mask: Self) -> u32 {
        ((self ^ data) & mask).count_ones()
    }
}

impl<const N: usize> BlockBits for [u64; N] {
    #[inline(always)]
    fn zero() -> Self {
        [0; N]
    }
    #[inline(always)]
    fn from_words(words: &[u64]) -> Self {
        let mut out = [0; N];
        for (o, w) in out.iter_mut().zip(words) {
            *o = *w;
        }
        out
    }
    #[inline(always)]
    fn xor(self, other: Self) -> Self {
        let mut out = self;
        for (o, w) in out.iter_mut().zip(other) {
            *o ^= w;
        }
        out
    }
    #[inline(always)]
    fn masked_err(self, data: Self, mask: Self) -> u32 {
        let mut acc = 0;
        for i in 0..N {
            acc += ((self[i] ^ data[i]) & mask[i]).count_ones();
        }
        acc
    }
}

fn block_arrays<T: BlockBits>(blocks: &[MaskedBlock]) -> (Vec<T>, Vec<T>) {
    let data = blocks.iter().map(|b| T::from_words(b.data.words())).collect();
    let mask = blocks.iter().map(|b| T::from_words(b.mask.words())).collect();
    (data, mask)
}

/// Per-chunk partial-output tables: entry `[c][v]` is the decoder output for
/// a window whose chunk `c` (0 = oldest) is `v` and whose other chunks are
/// zero. By GF(2) linearity any window output is the XOR of its chunk
/// entries; equivalence with the direct per-row computation is what the
/// oracle tests check.
fn chunk_tables<T: BlockBits>(spec: &DecoderSpec) -> Vec<Vec<T>> {
    let n_chunks = spec.n_s() as usize + 1;
    let v_count = 1usize << spec.n_in();
    let mut tables = Vec::with_capacity(n_chunks);
    for c in 0..n_chunks {
        let mut table = Vec::with_capacity(v_count);
        for v in 0..v_count {
            let mut window = vec![0u32; n_chunks];
            window[c] = v as u32;
            let out = spec.decode_block(&window).expect("window sized for spec");
            table.push(T::from_words(out.words()));
        }
        tables.push(table);
    }
    tables
}

fn check_cap(spec: &DecoderSpec) -> Result<()> {
    if spec.context_bits() > DEFAULT_CONTEXT_CAP_BITS {
        return Err(Error::ResourceLimit {
            context_bits: spec.context_bits(),
            cap: DEFAULT_CONTEXT_CAP_BITS,
        });
    }
    Ok(())
}

fn check_blocks(spec: &DecoderSpec, blocks: &[MaskedBlock]) -> Result<()> {
    for b in blocks {
        if b.width() != spec.n_out() as usize {
            return Err(Error::MalformedInput(format!(
                "block width {} does not match n_out {}",
                b.width(),
                spec.n_out()
            )));
        }
    }
    let unpruned: u64 = blocks.iter().map(|b| u64::from(b.n_u())).sum();
    if unpruned > u64::from(u32::MAX / 2) {
        return Err(Error::InvalidParameter(
            "plane has too many unpruned bits for 32-bit error counters".into(),
        ));
    }
    Ok(())
}

fn dispatch<R>(n_out: u32, f: impl DispatchTarget<R>) -> Result<R> {
    match (n_out as usize).div_ceil(64) {
        1 => Ok(f.run::<u64>()),
        2 => Ok(f.run::<u128>()),
        3..=4 => Ok(f.run::<[u64; 4]>()),
        5..=8 => Ok(f.run::<[u64; 8]>()),
        9..=16 => Ok(f.run::<[u64; 16]>()),
        17..=64 => Ok(f.run::<[u64; 64]>()),
        _ => Err(Error::InvalidParameter(format!(
            "encoder supports n_out up to 4096 bits, got {n_out}"
        ))),
    }
}

trait DispatchTarget<R> {
    fn run<T: BlockBits>(self) -> R;
}

// ---------------------------------------------------------------------------
// Non-sequential search (n_s = 0)
// ---------------------------------------------------------------------------

/// Independent per-block exhaustive search. Requires `n_s = 0`; for each
/// block the input minimizing the unmatched count is chosen, ties toward the
/// smallest input value.
pub fn encode_nonsequential(spec: &DecoderSpec, blocks: &[MaskedBlock]) -> Result<EncodeResult> {
    if spec.n_s() != 0 {
        return Err(Error::InvalidParameter(format!(
            "non-sequential encoding needs n_s = 0, got {}",
            spec.n_s()
        )));
    }
    check_blocks(spec, blocks)?;
    struct Run<'a> {
        spec: &'a DecoderSpec,
        blocks: &'a [MaskedBlock],
    }
    impl<'a> DispatchTarget<(Vec<u32>, Vec<u32>)> for Run<'a> {
        fn run<T: BlockBits>(self) -> (Vec<u32>, Vec<u32>) {
            scan_blocks::<T>(self.spec, self.blocks)
        }
    }
    let (choices, per_block_errors) = dispatch(spec.n_out(), Run { spec, blocks })?;
    let total_errors = per_block_errors.iter().map(|&e| u64::from(e)).sum();
    Ok(EncodeResult {
        stream: InputStream::new(spec.n_in(), choices)?,
        total_errors,
        per_block_errors,
    })
}

/// Exhaustive scan of all `2^n_in` candidates per block. The candidate
/// output is composed from two half-width tables so the table stays small
/// even for wide `n_in`.
fn scan_blocks<T: BlockBits>(spec: &DecoderSpec, blocks: &[MaskedBlock]) -> (Vec<u32>, Vec<u32>) {
    let n_in = spec.n_in();
    let lo_bits = n_in.min(14);
    let hi_bits = n_in - lo_bits;
    let lo_table: Vec<T> = (0..1u32 << lo_bits)
        .map(|v| {
            let out = spec.decode_block(&[v]).expect("window sized");
            T::from_words(out.words())
        })
        .collect();
    let hi_table: Vec<T> = (0..1u32 << hi_bits)
        .map(|v| {
            let out = spec.decode_block(&[v << lo_bits]).expect("window sized");
            T::from_words(out.words())
        })
        .collect();
    let (data, mask) = block_arrays::<T>(blocks);
    let mut choices = Vec::with_capacity(blocks.len());
    let mut errors = Vec::with_capacity(blocks.len());
    for (d, m) in data.iter().zip(&mask) {
        let mut best = u32::MAX;
        let mut best_v = 0u32;
        for (hi, hv) in hi_table.iter().enumerate() {
            for (lo, lv) in lo_table.iter().enumerate() {
                let err = hv.xor(*lv).masked_err(*d, *m);
                if err < best {
                    best = err;
                    best_v = (hi as u32) << lo_bits | lo as u32;
                    if best == 0 {
                        break;
                    }
                }
            }
            if best == 0 {
                break;
            }
        }
        choices.push(best_v);
        errors.push(best);
    }
    (choices, errors)
}

// ---------------------------------------------------------------------------
// Sequential trellis search
// ---------------------------------------------------------------------------

/// Globally optimal stream search over the shift-register trellis.
///
/// Returns `l + n_s` vectors whose first `n_s` are the zero warm-up; the
/// decode of the stream attains the minimum possible total unmatched count,
/// and among minimizers the stream is lexicographically smallest.
pub fn encode_sequential_dp(spec: &DecoderSpec, blocks: &[MaskedBlock]) -> Result<EncodeResult> {
    check_cap(spec)?;
    check_blocks(spec, blocks)?;
    struct Run<'a> {
        spec: &'a DecoderSpec,
        blocks: &'a [MaskedBlock],
    }
    impl<'a> DispatchTarget<(Vec<u32>, Vec<u32>)> for Run<'a> {
        fn run<T: BlockBits>(self) -> (Vec<u32>, Vec<u32>) {
            trellis_search::<T>(self.spec, self.blocks)
        }
    }
    let (free, per_block_errors) = dispatch(spec.n_out(), Run { spec, blocks })?;
    let total_errors = per_block_errors.iter().map(|&e| u64::from(e)).sum();
    let mut vectors = vec![0u32; spec.n_s() as usize];
    vectors.extend_from_slice(&free);
    Ok(EncodeResult {
        stream: InputStream::new(spec.n_in(), vectors)?,
        total_errors,
        per_block_errors,
    })
}

/// Per-step chosen transition, `n_in` bits per entry.
enum PathTable {
    U16(Vec<u16>),
    U32(Vec<u32>),
}

impl PathTable {
    fn new(n_in: u32, entries: usize) -> Self {
        if n_in <= 16 {
            PathTable::U16(vec![0; entries])
        } else {
            PathTable::U32(vec![0; entries])
        }
    }
    #[inline(always)]
    fn set(&mut self, idx: usize, v: u32) {
        match self {
            PathTable::U16(t) => t[idx] = v as u16,
            PathTable::U32(t) => t[idx] = v,
        }
    }
    #[inline(always)]
    fn get(&self, idx: usize) -> u32 {
        match self {
            PathTable::U16(t) => u32::from(t[idx]),
            PathTable::U32(t) => t[idx],
        }
    }
}

/// Backward value recursion plus forward greedy reconstruction.
///
/// `suffix[s]` after processing block `b` holds the minimum unmatched count
/// of blocks `b..l` when the `n_s` vectors entering block `b` are `s` (oldest
/// chunk in the low bits). Reconstruction starts from the all-zero warm-up
/// state and at each step takes the smallest transition achieving the suffix
/// value, which yields the lexicographically smallest optimal stream.
fn trellis_search<T: BlockBits>(spec: &DecoderSpec, blocks: &[MaskedBlock]) -> (Vec<u32>, Vec<u32>) {
    let n_in = spec.n_in() as usize;
    let n_s = spec.n_s() as usize;
    let l = blocks.len();
    let states = 1usize << (n_in * n_s);
    let transitions = 1usize << n_in;
    let top_shift = n_s.saturating_sub(1) * n_in;

    let tables = chunk_tables::<T>(spec);
    let newest = &tables[n_s];
    // Combined contribution of the n_s state chunks, indexed by state.
    let mut state_out: Vec<T> = Vec::with_capacity(states);
    for s in 0..states {
        let mut acc = T::zero();
        for (c, table) in tables.iter().take(n_s).enumerate() {
            acc = acc.xor(table[(s >> (c * n_in)) & (transitions - 1)]);
        }
        state_out.push(acc);
    }

    let (data, mask) = block_arrays::<T>(blocks);
    let mut suffix_next = vec![0u32; states];
    let mut suffix_cur = vec![0u32; states];
    let mut paths: Vec<PathTable> = (0..l)
        .map(|_| PathTable::new(spec.n_in(), states))
        .collect();

    for b in (0..l).rev() {
        let (d, m) = (data[b], mask[b]);
        let path = &mut paths[b];
        for (s, (out_s, cur)) in state_out.iter().zip(suffix_cur.iter_mut()).enumerate() {
            let mut best = u32::MAX;
            let mut best_v = 0u32;
            let carry = if n_s == 0 { 0 } else { s >> n_in };
            for (v, out_v) in newest.iter().enumerate() {
                let err = out_s.xor(*out_v).masked_err(d, m);
                let next = if n_s == 0 { 0 } else { carry | v << top_shift };
                let cand = err + suffix_next[next];
                if cand < best {
                    best = cand;
                    best_v = v as u32;
                }
            }
            *cur = best;
            path.set(s, best_v);
        }
        std::mem::swap(&mut suffix_next, &mut suffix_cur);
    }
    // After the loop `suffix_next` holds the block-0 values.
    let optimum = if l == 0 { 0 } else { suffix_next[0] };

    let mut free = Vec::with_capacity(l);
    let mut per_block = Vec::with_capacity(l);
    let mut s = 0usize;
    for (b, path) in paths.iter().enumerate() {
        let v = path.get(s);
        let out = state_out[s].xor(newest[v as usize]);
        per_block.push(out.masked_err(data[b], mask[b]));
        free.push(v);
        s = if n_s == 0 {
            0
        } else {
            (s >> n_in) | (v as usize) << top_shift
        };
    }
    debug_assert_eq!(per_block.iter().map(|&e| u64::from(e)).sum::<u64>(), u64::from(optimum));
    (free, per_block)
}

/// Slice a plane into blocks and run the sequential search; block order is
/// preserved in `per_block_errors`.
pub fn encode_plane(
    spec: &DecoderSpec,
    plane: &PackedBitVector,
    mask: &PackedBitVector,
    n_out: u32,
) -> Result<EncodeResult> {
    if n_out != spec.n_out() {
        return Err(Error::InvalidParameter(format!(
            "n_out {n_out} does not match decoder n_out {}",
            spec.n_out()
        )));
    }
    let blocks = bitplane::slice_blocks(plane, mask, n_out)?;
    encode_sequential_dp(spec, &blocks)
}

//! Packed bit vectors and bit-level serialization.
//!
//! One packing convention is used everywhere: bit `i` lives in word `i / 64`
//! at position `i % 64`, and bytes serialize little-endian. Equivalently, the
//! on-disk form is LSB-first within each byte with bytes in ascending order.
//! Bits at or beyond `len` always read as zero.

use crate::{Error, Result};

/// Dense bit array with an explicit length. Padding bits are kept zero.
#[derive(Clone, PartialEq, Eq, Hash)]
pub struct PackedBitVector {
    words: Vec<u64>,
    len: usize,
}

impl std::fmt::Debug for PackedBitVector {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "PackedBitVector(len={}, bits=", self.len)?;
        for i in 0..self.len.min(96) {
            write!(f, "{}", u8::from(self.get(i)))?;
        }
        if self.len > 96 {
            write!(f, "...")?;
        }
        write!(f, ")")
    }
}

fn words_for(len: usize) -> usize {
    len.div_ceil(64)
}

impl PackedBitVector {
    /// All-zero vector of `len` bits.
    pub fn zeros(len: usize) -> Self {
        Self {
            words: vec![0; words_for(len)],
            len,
        }
    }

    pub fn from_bools(bits: &[bool]) -> Self {
        let mut v = Self::zeros(bits.len());
        for (i, &b) in bits.iter().enumerate() {
            if b {
                v.words[i / 64] |= 1 << (i % 64);
            }
        }
        v
    }

    /// Reconstruct from packed bytes; `bytes` must hold at least
    /// `ceil(len / 8)` bytes and padding bits must be zero.
    pub fn from_bytes(bytes: &[u8], len: usize) -> Result<Self> {
        let need = len.div_ceil(8);
        if bytes.len() < need {
            return Err(Error::MalformedInput(format!(
                "packed bit vector of {len} bits needs {need} bytes, got {}",
                bytes.len()
            )));
        }
        let mut words = vec![0u64; words_for(len)];
        for (i, &b) in bytes[..need].iter().enumerate() {
            words[i / 8] |= u64::from(b) << ((i % 8) * 8);
        }
        let mut v = Self { words, len };
        v.clear_padding();
        Ok(v)
    }

    pub fn to_bytes(&self) -> Vec<u8> {
        let mut out = vec![0u8; self.len.div_ceil(8)];
        for (i, b) in out.iter_mut().enumerate() {
            *b = (self.words[i / 8] >> ((i % 8) * 8)) as u8;
        }
        out
    }

    pub fn len(&self) -> usize {
        self.len
    }

    pub fn is_empty(&self) -> bool {
        self.len == 0
    }

    /// Reads as zero at and beyond `len`.
    pub fn get(&self, index: usize) -> bool {
        if index >= self.len {
            return false;
        }
        (self.words[index / 64] >> (index % 64)) & 1 == 1
    }

    /// Panics if `index >= len`.
    pub fn set(&mut self, index: usize, value: bool) {
        assert!(index < self.len, "bit index {index} out of range {}", self.len);
        let mask = 1u64 << (index % 64);
        if value {
            self.words[index / 64] |= mask;
        } else {
            self.words[index / 64] &= !mask;
        }
    }

    /// Panics if `index >= len`.
    pub fn flip(&mut self, index: usize) {
        assert!(index < self.len, "bit index {index} out of range {}", self.len);
        self.words[index / 64] ^= 1 << (index % 64);
    }

    pub fn count_ones(&self) -> u64 {
        // Padding is zero, so whole-word popcounts are exact.
        self.words.iter().map(|w| u64::from(w.count_ones())).sum()
    }

    pub fn words(&self) -> &[u64] {
        &self.words
    }

    /// Up to 64 bits starting at `start`, as an LSB-first integer. Bits past
    /// `len` read as zero.
    pub fn extract_bits(&self, start: usize, width: usize) -> u64 {
        debug_assert!(width <= 64);
        let mut out = 0u64;
        let mut taken = 0;
        while taken < width {
            let pos = start + taken;
            if pos >= self.len {
                break;
            }
            let word = pos / 64;
            let off = pos % 64;
            let avail = (64 - off).min(width - taken);
            let chunk = (self.words[word] >> off) & mask_of(avail);
            out |= chunk << taken;
            taken += avail;
        }
        out
    }

    /// Bitwise XOR of two equal-length vectors.
    pub fn xor(&self, other: &Self) -> Self {
        assert_eq!(self.len, other.len, "xor of unequal lengths");
        let words = self
            .words
            .iter()
            .zip(&other.words)
            .map(|(a, b)| a ^ b)
            .collect();
        Self { words, len: self.len }
    }

    /// Bitwise AND of two equal-length vectors.
    pub fn and(&self, other: &Self) -> Self {
        assert_eq!(self.len, other.len, "and of unequal lengths");
        let words = self
            .words
            .iter()
            .zip(&other.words)
            .map(|(a, b)| a & b)
            .collect();
        Self { words, len: self.len }
    }

    /// Copy of the first `len` bits. Panics if `len > self.len()`.
    pub fn prefix(&self, len: usize) -> Self {
        assert!(len <= self.len, "prefix longer than vector");
        let mut v = Self {
            words: self.words[..words_for(len)].to_vec(),
            len,
        };
        v.clear_padding();
        v
    }

    /// Flip every bit, keeping padding zero.
    pub fn not(&self) -> Self {
        let mut v = Self {
            words: self.words.iter().map(|w| !w).collect(),
            len: self.len,
        };
        v.clear_padding();
        v
    }

    fn clear_padding(&mut self) {
        let tail = self.len % 64;
        if tail != 0 {
            if let Some(last) = self.words.last_mut() {
                *last &= mask_of(tail);
            }
        }
    }
}

pub(crate) fn mask_of(bits: usize) -> u64 {
    debug_assert!(bits <= 64);
    if bits == 64 {
        u64::MAX
    } else {
        (1u64 << bits) - 1
    }
}

/// Appends bits to a byte buffer, LSB-first within each byte.
#[derive(Default)]
pub struct BitWriter {
    bytes: Vec<u8>,
    bit_len: usize,
}

impl BitWriter {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn write_bit(&mut self, bit: bool) {
        if self.bit_len % 8 == 0 {
            self.bytes.push(0);
        }
        if bit {
            *self.bytes.last_mut().unwrap() |= 1 << (self.bit_len % 8);
        }
        self.bit_len += 1;
    }

    /// Writes the low `width` bits of `value`, LSB first.
    pub fn write_bits(&mut self, value: u64, width: usize) {
        debug_assert!(width <= 64);
        debug_assert!(width == 64 || value >> width == 0, "value wider than field");
        for i in 0..width {
            self.write_bit((value >> i) & 1 == 1);
        }
    }

    pub fn write_packed(&mut self, v: &PackedBitVector) {
        let mut remaining = v.len();
        let mut start = 0;
        while remaining > 0 {
            let take = remaining.min(64);
            self.write_bits(v.extract_bits(start, take), take);
            start += take;
            remaining -= take;
        }
    }

    /// Pads with zero bits to the next byte boundary.
    pub fn align_to_byte(&mut self) {
        while self.bit_len % 8 != 0 {
            self.write_bit(false);
        }
    }

    pub fn bit_len(&self) -> usize {
        self.bit_len
    }

    pub fn into_bytes(self) -> Vec<u8> {
        self.bytes
    }
}

/// Reads bits back in the writer's order, failing on overrun.
pub struct BitReader<'a> {
    bytes: &'a [u8],
    pos: usize,
}

impl<'a> BitReader<'a> {
    pub fn new(bytes: &'a [u8]) -> Self {
        Self { bytes, pos: 0 }
    }

    pub fn read_bit(&mut self) -> Result<bool> {
        let byte = self.pos / 8;
        if byte >= self.bytes.len() {
            return Err(Error::CorruptArtifact("bitstream truncated".into()));
        }
        let bit = (self.bytes[byte] >> (self.pos % 8)) & 1 == 1;
        self.pos += 1;
        Ok(bit)
    }

    pub fn read_bits(&mut self, width: usize) -> Result<u64> {
        debug_assert!(width <= 64);
        let mut out = 0u64;
        for i in 0..width {
            if self.read_bit()? {
                out |= 1 << i;
            }
        }
        Ok(out)
    }

    pub fn read_packed(&mut self, len: usize) -> Result<PackedBitVector> {
        let mut v = PackedBitVector::zeros(len);
        for i in 0..len {
            if self.read_bit()? {
                v.set(i, true);
            }
        }
        Ok(v)
    }

    pub fn align_to_byte(&mut self) -> Result<()> {
        while self.pos % 8 != 0 {
            if self.read_bit()? {
                return Err(Error::CorruptArtifact("nonzero padding bits".into()));
            }
        }
        Ok(())
    }

    pub fn bit_pos(&self) -> usize {
        self.pos
    }

    /// Remaining whole bytes after the current (byte-aligned) position.
    pub fn remaining_bytes(&self) -> &'a [u8] {
        &self.bytes[self.pos.div_ceil(8)..]
    }
}

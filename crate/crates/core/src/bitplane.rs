//! Tensor <-> bit-plane transforms with a shared pruning mask.
//!
//! A tensor of `n_w`-bit weights becomes `n_w` planes, each holding one bit
//! position of every weight in flattened row-major order. Plane 1 is the most
//! significant bit. The mask is per weight: all bits of a pruned weight are
//! don't-cares.
//!
//! Raw weight dumps are packed contiguously at bit granularity, LSB-first
//! within little-endian bytes; for byte-multiple widths this is the natural
//! little-endian element layout.

use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::bits::PackedBitVector;
use crate::encoder::MaskedBlock;
use crate::{Error, Result};

/// Shape and precision of a weight tensor.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct TensorManifest {
    pub shape: Vec<u64>,
    pub bit_width: u32,
}

impl TensorManifest {
    pub fn new(shape: Vec<u64>, bit_width: u32) -> Result<Self> {
        if shape.is_empty() || shape.iter().any(|&d| d == 0) {
            return Err(Error::MalformedInput(format!(
                "shape must be non-empty with positive dims, got {shape:?}"
            )));
        }
        if !(1..=64).contains(&bit_width) {
            return Err(Error::MalformedInput(format!(
                "bit_width must be in 1..=64, got {bit_width}"
            )));
        }
        let m = Self { shape, bit_width };
        m.element_count()?;
        Ok(m)
    }

    pub fn element_count(&self) -> Result<u64> {
        self.shape
            .iter()
            .try_fold(1u64, |acc, &d| acc.checked_mul(d))
            .ok_or_else(|| Error::MalformedInput("shape product overflows u64".into()))
    }

    /// Size in bytes of the packed raw dump for this manifest.
    pub fn raw_byte_len(&self) -> Result<usize> {
        let bits = self
            .element_count()?
            .checked_mul(u64::from(self.bit_width))
            .ok_or_else(|| Error::MalformedInput("bit count overflows u64".into()))?;
        Ok((bits.div_ceil(8)) as usize)
    }
}

/// One plane per bit position plus the shared mask and per-plane inversion
/// flags.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct BitPlaneSet {
    /// Index 0 is the most significant bit.
    pub planes: Vec<PackedBitVector>,
    /// 1 = unpruned; shared by all planes.
    pub mask: PackedBitVector,
    pub inverted: Vec<bool>,
}

/// Split packed raw weights into bit planes. Plane `k` (1-based, MSB first)
/// holds bit `k` of every weight in storage order; inversion flags start
/// false.
pub fn group_bitplanes(
    raw_weights: &[u8],
    manifest: &TensorManifest,
    mask: &PackedBitVector,
) -> Result<BitPlaneSet> {
    let elements = manifest.element_count()? as usize;
    let expect = manifest.raw_byte_len()?;
    if raw_weights.len() != expect {
        return Err(Error::MalformedInput(format!(
            "raw weights hold {} bytes but manifest needs {expect}",
            raw_weights.len()
        )));
    }
    if mask.len() != elements {
        return Err(Error::MalformedInput(format!(
            "mask of {} bits does not cover {elements} elements",
            mask.len()
        )));
    }
    let bw = manifest.bit_width as usize;
    let raw = PackedBitVector::from_bytes(raw_weights, elements * bw)?;
    let mut planes = vec![PackedBitVector::zeros(elements); bw];
    for i in 0..elements {
        let value = raw.extract_bits(i * bw, bw);
        for (k, plane) in planes.iter_mut().enumerate() {
            // Plane k (0-based from the MSB) is element bit bw-1-k.
            if (value >> (bw - 1 - k)) & 1 == 1 {
                plane.set(i, true);
            }
        }
    }
    Ok(BitPlaneSet {
        planes,
        mask: mask.clone(),
        inverted: vec![false; bw],
    })
}

/// Inverse of [`group_bitplanes`]: reassemble packed raw weights from planes.
/// Inversion flags are not applied here; callers un-invert planes first.
pub fn ungroup_bitplanes(planes: &[PackedBitVector], manifest: &TensorManifest) -> Result<Vec<u8>> {
    let elements = manifest.element_count()? as usize;
    let bw = manifest.bit_width as usize;
    if planes.len() != bw {
        return Err(Error::MalformedInput(format!(
            "{} planes do not match bit_width {bw}",
            planes.len()
        )));
    }
    for p in planes {
        if p.len() != elements {
            return Err(Error::MalformedInput(format!(
                "plane of {} bits does not cover {elements} elements",
                p.len()
            )));
        }
    }
    let mut raw = PackedBitVector::zeros(elements * bw);
    for i in 0..elements {
        for (k, plane) in planes.iter().enumerate() {
            if plane.get(i) {
                raw.set(i * bw + (bw - 1 - k), true);
            }
        }
    }
    Ok(raw.to_bytes())
}

/// Slice a plane into `ceil(len / n_out)` blocks. The final block is
/// zero-padded in both data and mask, so padded positions are don't-cares.
pub fn slice_blocks(
    plane: &PackedBitVector,
    mask: &PackedBitVector,
    n_out: u32,
) -> Result<Vec<MaskedBlock>> {
    if n_out == 0 {
        return Err(Error::InvalidParameter("n_out must be positive".into()));
    }
    if plane.len() != mask.len() {
        return Err(Error::MalformedInput(format!(
            "plane length {} does not match mask length {}",
            plane.len(),
            mask.len()
        )));
    }
    let n_out = n_out as usize;
    let blocks = plane.len().div_ceil(n_out);
    let mut out = Vec::with_capacity(blocks);
    for b in 0..blocks {
        let start = b * n_out;
        let mut data = PackedBitVector::zeros(n_out);
        let mut m = PackedBitVector::zeros(n_out);
        let live = n_out.min(plane.len() - start);
        for j in 0..live {
            if plane.get(start + j) {
                data.set(j, true);
            }
            if mask.get(start + j) {
                m.set(j, true);
            }
        }
        out.push(MaskedBlock::new(data, m)?);
    }
    Ok(out)
}

/// Fraction of unpruned positions whose data bit is zero.
pub fn zero_ratio(plane: &PackedBitVector, mask: &PackedBitVector) -> Result<f64> {
    if plane.len() != mask.len() {
        return Err(Error::MalformedInput(format!(
            "plane length {} does not match mask length {}",
            plane.len(),
            mask.len()
        )));
    }
    let unpruned = mask.count_ones();
    if unpruned == 0 {
        return Err(Error::UndefinedRatio);
    }
    let ones = plane.and(mask).count_ones();
    Ok((unpruned - ones) as f64 / unpruned as f64)
}

/// Invert the whole plane when its unpruned zero ratio is below one half;
/// at exactly one half the plane is left alone.
pub fn maybe_invert(
    plane: &PackedBitVector,
    mask: &PackedBitVector,
) -> Result<(PackedBitVector, bool)> {
    if zero_ratio(plane, mask)? < 0.5 {
        Ok((plane.not(), true))
    } else {
        Ok((plane.clone(), false))
    }
}

/// On-disk description of a weight dump: tensor manifest plus the path of
/// the packed mask file, relative to the manifest's directory.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct DumpManifest {
    pub shape: Vec<u64>,
    pub bit_width: u32,
    pub mask_file: PathBuf,
}

/// A weight dump loaded into memory.
pub struct WeightDump {
    pub manifest: TensorManifest,
    pub raw_weights: Vec<u8>,
    pub mask: PackedBitVector,
}

/// Write `<prefix>.json`, `<prefix>.bin`, and `<prefix>.mask`.
pub fn write_weight_dump(
    prefix: &Path,
    manifest: &TensorManifest,
    raw_weights: &[u8],
    mask: &PackedBitVector,
) -> Result<PathBuf> {
    if raw_weights.len() != manifest.raw_byte_len()? {
        return Err(Error::MalformedInput(
            "raw weight bytes do not match manifest".into(),
        ));
    }
    if mask.len() as u64 != manifest.element_count()? {
        return Err(Error::MalformedInput("mask does not match manifest".into()));
    }
    let bin = prefix.with_extension("bin");
    let mask_path = prefix.with_extension("mask");
    let manifest_path = prefix.with_extension("json");
    std::fs::write(&bin, raw_weights)?;
    std::fs::write(&mask_path, mask.to_bytes())?;
    let dump = DumpManifest {
        shape: manifest.shape.clone(),
        bit_width: manifest.bit_width,
        mask_file: PathBuf::from(mask_path.file_name().unwrap()),
    };
    let json = serde_json::to_string_pretty(&dump)
        .map_err(|e| Error::MalformedInput(format!("manifest encode: {e}")))?;
    std::fs::write(&manifest_path, json)?;
    Ok(manifest_path)
}

/// Load a dump given its manifest path. The raw file is expected beside the
/// manifest with extension `.bin`.
pub fn read_weight_dump(manifest_path: &Path) -> Result<WeightDump> {
    let text = std::fs::read_to_string(manifest_path)?;
    let dump: DumpManifest = serde_json::from_str(&text)
        .map_err(|e| Error::MalformedInput(format!("manifest parse: {e}")))?;
    let manifest = TensorManifest::new(dump.shape, dump.bit_width)?;
    let dir = manifest_path.parent().unwrap_or(Path::new("."));
    let raw_weights = std::fs::read(manifest_path.with_extension("bin"))?;
    let mask_bytes = std::fs::read(dir.join(&dump.mask_file))?;
    let mask = PackedBitVector::from_bytes(&mask_bytes, manifest.element_count()? as usize)?;
    if raw_weights.len() != manifest.raw_byte_len()? {
        return Err(Error::MalformedInput(format!(
            "raw file holds {} bytes but manifest needs {}",
            raw_weights.len(),
            manifest.raw_byte_len()?
        )));
    }
    Ok(WeightDump {
        manifest,
        raw_weights,
        mask,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::synth::{gen_bernoulli_mask, gen_random_plane, SplitMix64};

    #[test]
    fn single_byte_weight_splits_msb_first() {
        let manifest = TensorManifest::new(vec![1], 8).unwrap();
        let mask = PackedBitVector::from_bools(&[true]);
        let set = group_bitplanes(&[0b1011_0001], &manifest, &mask).unwrap();
        let bits: Vec<bool> = set.planes.iter().map(|p| p.get(0)).collect();
        assert_eq!(bits, vec![true, false, true, true, false, false, false, true]);
        assert!(set.inverted.iter().all(|&f| !f));
    }

    #[test]
    fn zero_weights_give_zero_planes() {
        let manifest = TensorManifest::new(vec![4], 8).unwrap();
        let mask = gen_bernoulli_mask(4, 0.5, 3).unwrap();
        let set = group_bitplanes(&[0; 4], &manifest, &mask).unwrap();
        assert!(set.planes.iter().all(|p| p.count_ones() == 0));
    }

    #[test]
    fn planes_match_shift_oracle() {
        // 4 weights of 8 bits: plane k at index i equals bit k of weight i.
        let weights: [u8; 4] = [0x3c, 0xa5, 0x00, 0xff];
        let manifest = TensorManifest::new(vec![4], 8).unwrap();
        let mask = PackedBitVector::from_bools(&[true; 4]);
        let set = group_bitplanes(&weights, &manifest, &mask).unwrap();
        assert_eq!(set.planes.len(), 8);
        for (k, plane) in set.planes.iter().enumerate() {
            assert_eq!(plane.len(), 4);
            for (i, &w) in weights.iter().enumerate() {
                let expect = (w >> (7 - k)) & 1 == 1;
                assert_eq!(plane.get(i), expect, "plane {k} weight {i}");
            }
        }
    }

    #[test]
    fn group_ungroup_roundtrip_sub_byte_width() {
        let manifest = TensorManifest::new(vec![3, 5], 5).unwrap();
        let raw_bits = gen_random_plane(15 * 5, 99);
        let raw = raw_bits.to_bytes();
        let mask = gen_bernoulli_mask(15, 0.4, 7).unwrap();
        let set = group_bitplanes(&raw, &manifest, &mask).unwrap();
        let back = ungroup_bitplanes(&set.planes, &manifest).unwrap();
        assert_eq!(back, raw);
    }

    #[test]
    fn length_mismatches_are_malformed() {
        let manifest = TensorManifest::new(vec![4], 8).unwrap();
        let mask = PackedBitVector::from_bools(&[true; 4]);
        assert!(matches!(
            group_bitplanes(&[0; 3], &manifest, &mask),
            Err(Error::MalformedInput(_))
        ));
        let short_mask = PackedBitVector::from_bools(&[true; 3]);
        assert!(matches!(
            group_bitplanes(&[0; 4], &manifest, &short_mask),
            Err(Error::MalformedInput(_))
        ));
    }

    #[test]
    fn slicing_counts() {
        let plane = PackedBitVector::zeros(16);
        let mask = PackedBitVector::zeros(16);
        assert_eq!(slice_blocks(&plane, &mask, 8).unwrap().len(), 2);

        let plane = gen_random_plane(17, 1);
        let mask = PackedBitVector::from_bools(&[true; 17]);
        let blocks = slice_blocks(&plane, &mask, 8).unwrap();
        assert_eq!(blocks.len(), 3);
        // The last block keeps one live position and 7 masked pads.
        assert_eq!(blocks[2].n_u(), 1);
        for j in 1..8 {
            assert!(!blocks[2].mask().get(j));
            assert!(!blocks[2].data().get(j));
        }
        assert!(matches!(
            slice_blocks(&plane, &mask, 0),
            Err(Error::InvalidParameter(_))
        ));
    }

    #[test]
    fn slicing_one_million_bits() {
        let plane = PackedBitVector::zeros(1_000_000);
        let mask = PackedBitVector::zeros(1_000_000);
        assert_eq!(slice_blocks(&plane, &mask, 80).unwrap().len(), 12_500);
    }

    #[test]
    fn slice_concat_reproduces_plane_and_nu_sum() {
        let plane = gen_random_plane(133, 5);
        let mask = gen_bernoulli_mask(133, 0.6, 6).unwrap();
        let blocks = slice_blocks(&plane, &mask, 10).unwrap();
        let mut total_nu = 0u64;
        for (b, blk) in blocks.iter().enumerate() {
            total_nu += u64::from(blk.n_u());
            for j in 0..10 {
                let idx = b * 10 + j;
                if idx < plane.len() {
                    assert_eq!(blk.data().get(j), plane.get(idx));
                    assert_eq!(blk.mask().get(j), mask.get(idx));
                }
            }
        }
        assert_eq!(total_nu, mask.count_ones());
    }

    #[test]
    fn zero_ratio_examples() {
        let all = PackedBitVector::from_bools(&[true; 4]);
        let data = PackedBitVector::from_bools(&[true, true, true, true]);
        assert_eq!(zero_ratio(&data, &all).unwrap(), 0.0);

        let data = PackedBitVector::from_bools(&[false, true, false, true]);
        assert_eq!(zero_ratio(&data, &all).unwrap(), 0.5);

        let half_mask = PackedBitVector::from_bools(&[true, true, false, false]);
        assert_eq!(zero_ratio(&data, &half_mask).unwrap(), 0.5);

        let none = PackedBitVector::zeros(4);
        assert!(matches!(zero_ratio(&data, &none), Err(Error::UndefinedRatio)));
    }

    #[test]
    fn invert_examples() {
        let mask = PackedBitVector::from_bools(&[true; 4]);
        let mostly_ones = PackedBitVector::from_bools(&[true, true, true, false]);
        let (flipped, inv) = maybe_invert(&mostly_ones, &mask).unwrap();
        assert!(inv);
        assert_eq!(flipped, PackedBitVector::from_bools(&[false, false, false, true]));

        let mostly_zeros = PackedBitVector::from_bools(&[false, false, false, true]);
        let (same, inv) = maybe_invert(&mostly_zeros, &mask).unwrap();
        assert!(!inv);
        assert_eq!(same, mostly_zeros);

        // Tie at exactly one half: untouched.
        let tie = PackedBitVector::from_bools(&[true, true, false, false]);
        assert!(!maybe_invert(&tie, &mask).unwrap().1);
    }

    #[test]
    fn invert_result_has_majority_zeros() {
        let mut rng = SplitMix64::new(11);
        for round in 0..50 {
            let len = 1 + (rng.next_u64() % 200) as usize;
            let plane = gen_random_plane(len, rng.next_u64());
            let mask = gen_bernoulli_mask(len, 0.3, rng.next_u64()).unwrap();
            if mask.count_ones() == 0 {
                continue;
            }
            let (out, _) = maybe_invert(&plane, &mask).unwrap();
            assert!(zero_ratio(&out, &mask).unwrap() >= 0.5, "round {round}");
        }
    }

    #[test]
    fn dump_files_roundtrip() {
        let dir = std::env::temp_dir().join(format!("f2fx-dump-{}", std::process::id()));
        std::fs::create_dir_all(&dir).unwrap();
        let manifest = TensorManifest::new(vec![100], 8).unwrap();
        let raw: Vec<u8> = (0..100u8).collect();
        let mask = gen_bernoulli_mask(100, 0.5, 1).unwrap();
        let path = write_weight_dump(&dir.join("w"), &manifest, &raw, &mask).unwrap();
        let dump = read_weight_dump(&path).unwrap();
        assert_eq!(dump.manifest, manifest);
        assert_eq!(dump.raw_weights, raw);
        assert_eq!(dump.mask, mask);
        std::fs::remove_dir_all(&dir).unwrap();
    }
}

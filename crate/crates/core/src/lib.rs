//! Fixed-to-fixed lossless compression for fine-grained-pruned weight tensors.
//!
//! The codec stores a pruned tensor as per-bit-plane encoded input streams for
//! a small XOR-gate decoder extended with shift registers. Decoding a stream
//! reproduces most unpruned weight bits; the remainder are patched by a
//! compact correction bitstream, so the round trip is exact on every unpruned
//! bit. Pruned positions are don't-cares and decode to arbitrary values.
//!
//! Modules map onto the pipeline stages:
//!
//! - [`bits`]: packed bit vectors and the bit-level writer/reader used by
//!   every on-disk format.
//! - [`bitplane`]: tensor <-> bit-plane transforms, block slicing, and the
//!   plane-inversion heuristic.
//! - [`gf2`]: the decoder itself (`M ⋅ w` over GF(2)), sequential decoding,
//!   and its hardware cost model.
//! - [`encoder`]: exhaustive per-block search and the trellis dynamic program
//!   that picks input streams minimizing unmatched unpruned bits.
//! - [`codec`]: end-to-end compress/decompress, correction streams, artifact
//!   serialization, and the efficiency/footprint accounting.
//! - [`matrixsearch`]: random decoder-matrix sampling and selection by
//!   measured encoding efficiency.
//! - [`entropy`]: exhaustive symbol-set search giving fixed-to-variable
//!   compression limits for small masked blocks.
//! - [`synth`]: seeded synthetic data generation and sparsity statistics.
//! - [`spmv`]: CSR, dense-masked, and decoded sparse matrix-vector multiply
//!   paths used to prove end-to-end numerical equivalence.

pub mod bitplane;
pub mod bits;
pub mod codec;
pub mod encoder;
pub mod entropy;
mod error;
pub mod gf2;
pub mod matrixsearch;
pub mod spmv;
pub mod synth;

pub use error::{Error, Result};

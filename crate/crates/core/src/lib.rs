//! Inter-layer weight prediction (ILWP) codec for depthwise 3×3 kernels.
//!
//! The crate is `no_std` and only needs `alloc`. It covers the in-memory
//! weight model, reference search, residual quantization, canonical Huffman
//! coding, the closed-loop encoder/decoder and the statistical diagnostics.
//! Container formats and the command-line front end live in the `ilwp` crate.

#![cfg_attr(not(test), no_std)]

extern crate alloc;

pub mod analyzer;
pub mod bits;
pub mod codec;
pub mod error;
pub mod huffman;
pub mod predictor;
pub mod quantizer;
pub mod store;

pub use codec::{decode_model, encode_model, EncodedModel, Mode};
pub use error::{Error, Result};
pub use store::{DepthwiseLayer, Kernel3x3, WeightStore};

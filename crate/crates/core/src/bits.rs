//! MSB-first bit packing.

use alloc::format;
use alloc::vec::Vec;

use crate::error::{Error, Result};

/// A packed bit sequence: `bit_len` bits, MSB-first, zero-padded to a byte boundary.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct BitBuffer {
    bytes: Vec<u8>,
    bit_len: u64,
}

impl BitBuffer {
    pub fn new() -> Self {
        Self::default()
    }

    /// Wraps already-packed bytes. Fails if the byte count does not match
    /// `bit_len` or a padding bit is set.
    pub fn from_parts(bytes: Vec<u8>, bit_len: u64) -> Result<Self> {
        let expected = bit_len.div_ceil(8);
        if bytes.len() as u64 != expected {
            return Err(Error::Format(format!(
                "{bit_len} bits need {expected} bytes, got {}",
                bytes.len()
            )));
        }
        let tail = (bit_len % 8) as u32;
        if tail != 0 {
            let mask = 0xffu8 >> tail;
            if bytes[bytes.len() - 1] & mask != 0 {
                return Err(Error::Format("non-zero padding bits".into()));
            }
        }
        Ok(Self { bytes, bit_len })
    }

    #[inline]
    pub fn bit_len(&self) -> u64 {
        self.bit_len
    }

    #[inline]
    pub fn as_bytes(&self) -> &[u8] {
        &self.bytes
    }

    #[inline]
    pub fn is_empty(&self) -> bool {
        self.bit_len == 0
    }

    pub fn reader(&self) -> BitReader<'_> {
        BitReader { buf: self, pos: 0 }
    }
}

#[derive(Debug, Default)]
pub struct BitWriter {
    buf: BitBuffer,
}

impl BitWriter {
    pub fn new() -> Self {
        Self::default()
    }

    #[inline]
    pub fn write_bit(&mut self, bit: bool) {
        let offset = (self.buf.bit_len % 8) as u32;
        if offset == 0 {
            self.buf.bytes.push(0);
        }
        if bit {
            let last = self.buf.bytes.len() - 1;
            self.buf.bytes[last] |= 0x80 >> offset;
        }
        self.buf.bit_len += 1;
    }

    /// Writes the low `width` bits of `value`, most significant first.
    pub fn write_bits(&mut self, value: u64, width: u32) {
        debug_assert!(width <= 64);
        debug_assert!(width == 64 || value >> width == 0);
        for shift in (0..width).rev() {
            self.write_bit((value >> shift) & 1 == 1);
        }
    }

    #[inline]
    pub fn bit_len(&self) -> u64 {
        self.buf.bit_len
    }

    pub fn finish(self) -> BitBuffer {
        self.buf
    }
}

#[derive(Debug, Clone)]
pub struct BitReader<'a> {
    buf: &'a BitBuffer,
    pos: u64,
}

impl BitReader<'_> {
    pub fn read_bit(&mut self) -> Result<bool> {
        if self.pos >= self.buf.bit_len {
            return Err(Error::Format(format!(
                "bit stream exhausted after {} bits",
                self.buf.bit_len
            )));
        }
        let byte = self.buf.bytes[(self.pos / 8) as usize];
        let bit = byte & (0x80 >> (self.pos % 8)) != 0;
        self.pos += 1;
        Ok(bit)
    }

    pub fn read_bits(&mut self, width: u32) -> Result<u64> {
        debug_assert!(width <= 64);
        if self.remaining() < u64::from(width) {
            return Err(Error::Format(format!(
                "need {width} bits at bit {}, only {} left",
                self.pos,
                self.remaining()
            )));
        }
        let mut value = 0u64;
        for _ in 0..width {
            value = (value << 1) | u64::from(self.read_bit()?);
        }
        Ok(value)
    }

    #[inline]
    pub fn position(&self) -> u64 {
        self.pos
    }

    #[inline]
    pub fn remaining(&self) -> u64 {
        self.buf.bit_len - self.pos
    }
}

/// Bits needed for a fixed-width index over `n` choices: `ceil(log2(n))`, 0 for `n <= 1`.
#[inline]
pub fn index_width(n: usize) -> u32 {
    if n <= 1 {
        0
    } else {
        usize::BITS - (n - 1).leading_zeros()
    }
}

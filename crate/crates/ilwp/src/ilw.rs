//! `.ilw` compressed model container and size accounting.
//!
//! ```text
//! magic "ILWC" | version u16 = 1 | mode u8 | bits u8 | layer count L u32
//! | L × kernel count u32 | L × scale f32 (layer 0 written as 0.0)
//! | layer 0 raw weights: c_0 × 9 f32
//! | huffman table: alphabet size u16, then (symbol i8, length u8) pairs
//! | index stream: bit length u32, bytes
//! | texture stream: symbol count u32, bit length u32, bytes
//! ```
//!
//! Little-endian throughout. Bit streams are MSB-first and zero-padded to a
//! whole byte. Mode codes: 0 baseline, 1 fss, 2 lss, 3 ill.

use ilwp_core::bits::BitBuffer;
use ilwp_core::huffman::HuffmanTable;
use ilwp_core::store::KERNEL_LEN;
use ilwp_core::{EncodedModel, Error, Mode, Result};
use serde::Serialize;

pub const MAGIC: [u8; 4] = *b"ILWC";
pub const VERSION: u16 = 1;
const FIXED_HEADER_LEN: usize = 12;

/// Bit breakdown of an encoded model.
///
/// `texture_bits` and `non_texture_bits` are the exact payload lengths of
/// the coded residuals and the reference indices. `header_bits` is
/// everything else in the file: fixed header, kernel counts, scales, raw
/// layer 0, huffman table, stream length fields and byte padding. The total
/// is therefore the file size in bits.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub struct SizeReport {
    pub texture_bits: u64,
    pub non_texture_bits: u64,
    pub header_bits: u64,
    pub total_bits: u64,
}

/// Bits to kilobytes (1 KB = 1000 bytes).
pub fn bits_to_kb(bits: u64) -> f64 {
    bits as f64 / 8.0 / 1000.0
}

impl SizeReport {
    pub fn texture_kb(&self) -> f64 {
        bits_to_kb(self.texture_bits)
    }

    pub fn non_texture_kb(&self) -> f64 {
        bits_to_kb(self.non_texture_bits)
    }

    pub fn header_kb(&self) -> f64 {
        bits_to_kb(self.header_bits)
    }

    pub fn total_kb(&self) -> f64 {
        bits_to_kb(self.total_bits)
    }
}

/// File size in bytes, from the layout alone.
pub fn serialized_len(enc: &EncodedModel) -> usize {
    let layers = enc.kernel_counts.len();
    FIXED_HEADER_LEN
        + 8 * layers
        + 4 * enc.first_layer.len()
        + enc.table.as_ref().map_or(2, HuffmanTable::serialized_len)
        + 4
        + enc.non_texture.as_bytes().len()
        + 8
        + enc.texture.as_bytes().len()
}

pub fn measure_sizes(enc: &EncodedModel) -> SizeReport {
    let total_bits = 8 * serialized_len(enc) as u64;
    let texture_bits = enc.texture.bit_len();
    let non_texture_bits = enc.non_texture.bit_len();
    SizeReport {
        texture_bits,
        non_texture_bits,
        header_bits: total_bits - texture_bits - non_texture_bits,
        total_bits,
    }
}

fn u32_len(n: u64, what: &str) -> Result<u32> {
    u32::try_from(n).map_err(|_| Error::Value(format!("{what} {n} exceeds the u32 limit")))
}

pub fn serialize(enc: &EncodedModel) -> Result<Vec<u8>> {
    let mut out = Vec::with_capacity(serialized_len(enc));
    out.extend_from_slice(&MAGIC);
    out.extend_from_slice(&VERSION.to_le_bytes());
    out.push(enc.mode.code());
    out.push(enc.bits);
    out.extend_from_slice(&u32_len(enc.kernel_counts.len() as u64, "layer count")?.to_le_bytes());
    for &c in &enc.kernel_counts {
        out.extend_from_slice(&c.to_le_bytes());
    }
    for &s in &enc.scales {
        out.extend_from_slice(&s.to_le_bytes());
    }
    for &v in &enc.first_layer {
        out.extend_from_slice(&v.to_le_bytes());
    }
    match &enc.table {
        Some(table) => table.write_to(&mut out),
        None => out.extend_from_slice(&0u16.to_le_bytes()),
    }
    out.extend_from_slice(
        &u32_len(enc.non_texture.bit_len(), "index stream length")?.to_le_bytes(),
    );
    out.extend_from_slice(enc.non_texture.as_bytes());
    out.extend_from_slice(&enc.symbol_count.to_le_bytes());
    out.extend_from_slice(&u32_len(enc.texture.bit_len(), "texture stream length")?.to_le_bytes());
    out.extend_from_slice(enc.texture.as_bytes());
    Ok(out)
}

struct Cursor<'a> {
    bytes: &'a [u8],
    pos: usize,
}

impl<'a> Cursor<'a> {
    fn take(&mut self, n: usize, what: &str) -> Result<&'a [u8]> {
        let end = self
            .pos
            .checked_add(n)
            .filter(|&end| end <= self.bytes.len())
            .ok_or_else(|| {
                Error::Format(format!(
                    "truncated {what} at byte {}: need {n}, have {}",
                    self.pos,
                    self.bytes.len() - self.pos
                ))
            })?;
        let slice = &self.bytes[self.pos..end];
        self.pos = end;
        Ok(slice)
    }

    fn u8(&mut self, what: &str) -> Result<u8> {
        Ok(self.take(1, what)?[0])
    }

    fn u16(&mut self, what: &str) -> Result<u16> {
        Ok(u16::from_le_bytes(
            self.take(2, what)?.try_into().expect("2 bytes"),
        ))
    }

    fn u32(&mut self, what: &str) -> Result<u32> {
        Ok(u32::from_le_bytes(
            self.take(4, what)?.try_into().expect("4 bytes"),
        ))
    }

    fn f32s(&mut self, n: usize, what: &str) -> Result<Vec<f32>> {
        let len = n
            .checked_mul(4)
            .ok_or_else(|| Error::Format(format!("{what} size overflows")))?;
        Ok(self
            .take(len, what)?
            .chunks_exact(4)
            .map(|b| f32::from_le_bytes(b.try_into().expect("4 bytes")))
            .collect())
    }

    fn bit_stream(&mut self, bit_len: u32, what: &str) -> Result<BitBuffer> {
        let at = self.pos;
        let bytes = self.take((bit_len as usize).div_ceil(8), what)?.to_vec();
        BitBuffer::from_parts(bytes, u64::from(bit_len))
            .map_err(|e| Error::Format(format!("{what} at byte {at}: {e}")))
    }
}

/// Parses an `.ilw` file. Structural checks only; [`ilwp_core::decode_model`]
/// validates the streams against the header.
pub fn parse(bytes: &[u8]) -> Result<EncodedModel> {
    let mut cur = Cursor { bytes, pos: 0 };
    if cur.take(4, "magic")? != MAGIC {
        return Err(Error::Format(format!(
            "bad magic {:02x?}, expected \"ILWC\"",
            &bytes[..4]
        )));
    }
    let version = cur.u16("version")?;
    if version != VERSION {
        return Err(Error::Format(format!("unsupported version {version}")));
    }
    let mode = Mode::from_code(cur.u8("mode")?)?;
    let bits = cur.u8("bits")?;
    let layer_count = cur.u32("layer count")? as usize;
    if layer_count == 0 {
        return Err(Error::Format("layer count is 0".into()));
    }
    if layer_count > bytes.len() / 8 {
        return Err(Error::Format(format!(
            "layer count {layer_count} does not fit in {} bytes",
            bytes.len()
        )));
    }
    let kernel_counts = (0..layer_count)
        .map(|_| cur.u32("kernel counts"))
        .collect::<Result<Vec<_>>>()?;
    let scales = cur.f32s(layer_count, "scales")?;
    let first_len = (kernel_counts[0] as usize)
        .checked_mul(KERNEL_LEN)
        .ok_or_else(|| Error::Format("layer 0 size overflows".into()))?;
    let first_layer = cur.f32s(first_len, "layer 0 weights")?;

    let table_at = cur.pos;
    let (table, used) = HuffmanTable::read_from(&bytes[table_at..])
        .map_err(|e| Error::Format(format!("huffman table at byte {table_at}: {e}")))?;
    cur.pos += used;

    let index_bits = cur.u32("index stream length")?;
    let non_texture = cur.bit_stream(index_bits, "index stream")?;
    let symbol_count = cur.u32("symbol count")?;
    let texture_bits = cur.u32("texture stream length")?;
    let texture = cur.bit_stream(texture_bits, "texture stream")?;
    if cur.pos != bytes.len() {
        return Err(Error::Format(format!(
            "{} trailing bytes after texture stream",
            bytes.len() - cur.pos
        )));
    }
    Ok(EncodedModel {
        mode,
        bits,
        kernel_counts,
        scales,
        first_layer,
        table,
        non_texture,
        symbol_count,
        texture,
    })
}

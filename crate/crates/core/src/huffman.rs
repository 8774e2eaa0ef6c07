//! Canonical Huffman coding over quantizer symbols.
//!
//! Only code lengths are stored; codewords follow from the canonical rule
//! (sort by length, then symbol value, count upwards). The serialized table is
//!
//! ```text
//! alphabet size : u16 LE
//! per entry     : symbol i8, length u8   (ascending symbol order)
//! ```

use alloc::collections::{BTreeMap, BinaryHeap};
use alloc::format;
use alloc::vec;
use alloc::vec::Vec;
use core::cmp::Reverse;

use crate::bits::{BitBuffer, BitWriter};
use crate::error::{Error, Result};

/// Longest codeword the coder handles.
pub const MAX_CODE_LEN: u8 = 64;

/// Occurrence counts per symbol.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct SymbolHistogram {
    counts: BTreeMap<i8, u64>,
}

impl SymbolHistogram {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn from_symbols(symbols: &[i8]) -> Self {
        let mut hist = Self::new();
        for &s in symbols {
            hist.add(s, 1);
        }
        hist
    }

    pub fn from_counts(counts: impl IntoIterator<Item = (i8, u64)>) -> Self {
        let mut hist = Self::new();
        for (s, c) in counts {
            hist.add(s, c);
        }
        hist
    }

    /// Adds `count` occurrences. Zero counts leave the histogram unchanged.
    pub fn add(&mut self, symbol: i8, count: u64) {
        if count > 0 {
            *self.counts.entry(symbol).or_insert(0) += count;
        }
    }

    pub fn count(&self, symbol: i8) -> u64 {
        self.counts.get(&symbol).copied().unwrap_or(0)
    }

    /// `(symbol, count)` pairs in ascending symbol order, all counts positive.
    pub fn iter(&self) -> impl Iterator<Item = (i8, u64)> + '_ {
        self.counts.iter().map(|(&s, &c)| (s, c))
    }

    pub fn total(&self) -> u64 {
        self.counts.values().sum()
    }

    /// Number of distinct symbols with a positive count.
    pub fn alphabet_len(&self) -> usize {
        self.counts.len()
    }

    pub fn is_empty(&self) -> bool {
        self.counts.is_empty()
    }
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
struct Codeword {
    code: u64,
    len: u8,
}

/// Canonical prefix code defined by per-symbol lengths.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct HuffmanTable {
    /// `(symbol, length)` in ascending symbol order.
    lengths: Vec<(i8, u8)>,
    /// Indexed by `symbol as u8`; `len == 0` marks an absent symbol.
    codes: Vec<Codeword>,
    /// Symbols in canonical order (length, then symbol).
    canonical: Vec<i8>,
    /// Per length: number of codes, first code, offset into `canonical`.
    len_count: Vec<u64>,
    first_code: Vec<u64>,
    first_index: Vec<usize>,
}

impl HuffmanTable {
    /// Builds the canonical code for explicit lengths, validating them.
    pub fn from_lengths(lengths: &[(i8, u8)]) -> Result<Self> {
        if lengths.is_empty() {
            return Err(Error::Format("huffman table has no symbols".into()));
        }
        let mut sorted = lengths.to_vec();
        sorted.sort_unstable_by_key(|&(s, _)| s);
        if sorted.windows(2).any(|w| w[0].0 == w[1].0) {
            return Err(Error::Format("duplicate symbol in huffman table".into()));
        }
        // Kraft sum in units of 2^-64
        let mut kraft: u128 = 0;
        for &(s, len) in &sorted {
            if len == 0 || len > MAX_CODE_LEN {
                return Err(Error::Format(format!(
                    "symbol {s} has invalid code length {len}"
                )));
            }
            kraft += 1u128 << (MAX_CODE_LEN - len);
        }
        if kraft > 1u128 << MAX_CODE_LEN {
            return Err(Error::Format(
                "code lengths violate the Kraft inequality".into(),
            ));
        }

        let mut canonical_order = sorted.clone();
        canonical_order.sort_unstable_by_key(|&(s, len)| (len, s));
        let max_len = usize::from(canonical_order.last().map_or(0, |e| e.1));

        let mut codes = vec![Codeword::default(); 256];
        let mut len_count = vec![0u64; max_len + 1];
        let mut first_code = vec![0u64; max_len + 1];
        let mut first_index = vec![0usize; max_len + 1];
        let mut code: u64 = 0;
        let mut prev_len = 0u8;
        for (i, &(s, len)) in canonical_order.iter().enumerate() {
            if len != prev_len {
                if prev_len != 0 {
                    code <<= len - prev_len;
                }
                first_code[usize::from(len)] = code;
                first_index[usize::from(len)] = i;
                prev_len = len;
            }
            codes[usize::from(s as u8)] = Codeword { code, len };
            len_count[usize::from(len)] += 1;
            code = code.wrapping_add(1);
        }

        Ok(Self {
            lengths: sorted,
            codes,
            canonical: canonical_order.iter().map(|&(s, _)| s).collect(),
            len_count,
            first_code,
            first_index,
        })
    }

    /// `(symbol, length)` pairs in ascending symbol order.
    pub fn lengths(&self) -> &[(i8, u8)] {
        &self.lengths
    }

    pub fn code_len(&self, symbol: i8) -> Option<u8> {
        let cw = self.codes[usize::from(symbol as u8)];
        (cw.len > 0).then_some(cw.len)
    }

    /// The canonical codeword of `symbol` as `(bits, length)`.
    pub fn codeword(&self, symbol: i8) -> Option<(u64, u8)> {
        let cw = self.codes[usize::from(symbol as u8)];
        (cw.len > 0).then_some((cw.code, cw.len))
    }

    pub fn alphabet_len(&self) -> usize {
        self.lengths.len()
    }

    /// Total coded bits for a histogram over this table's alphabet.
    pub fn encoded_bits(&self, hist: &SymbolHistogram) -> Result<u64> {
        hist.iter().try_fold(0u64, |acc, (s, c)| {
            let len = self
                .code_len(s)
                .ok_or_else(|| Error::Coding(format!("symbol {s} not in table")))?;
            Ok(acc + c * u64::from(len))
        })
    }

    /// Serialized size in bytes.
    pub fn serialized_len(&self) -> usize {
        2 + 2 * self.lengths.len()
    }

    pub fn write_to(&self, out: &mut Vec<u8>) {
        out.extend_from_slice(&(self.lengths.len() as u16).to_le_bytes());
        for &(s, len) in &self.lengths {
            out.push(s as u8);
            out.push(len);
        }
    }

    /// Parses a table from the front of `bytes`, returning it and the bytes consumed.
    ///
    /// An alphabet size of 0 yields `None` (no coded symbols).
    pub fn read_from(bytes: &[u8]) -> Result<(Option<Self>, usize)> {
        if bytes.len() < 2 {
            return Err(Error::Format("truncated huffman table header".into()));
        }
        let n = usize::from(u16::from_le_bytes([bytes[0], bytes[1]]));
        let end = 2 + 2 * n;
        if bytes.len() < end {
            return Err(Error::Format(format!(
                "huffman table declares {n} entries but only {} bytes follow",
                bytes.len() - 2
            )));
        }
        if n == 0 {
            return Ok((None, 2));
        }
        let entries: Vec<(i8, u8)> = bytes[2..end]
            .chunks_exact(2)
            .map(|e| (e[0] as i8, e[1]))
            .collect();
        if entries.windows(2).any(|w| w[0].0 >= w[1].0) {
            return Err(Error::Format(
                "huffman table entries are not in ascending symbol order".into(),
            ));
        }
        Ok((Some(Self::from_lengths(&entries)?), end))
    }
}

/// Optimal code lengths for `hist` (standard Huffman merge).
///
/// Queue ties are broken by count, then by symbol value for leaves; merged
/// nodes rank after all leaves and among themselves by creation order. A
/// single-symbol alphabet gets length 1.
pub fn build_table(hist: &SymbolHistogram) -> Result<HuffmanTable> {
    if hist.is_empty() {
        return Err(Error::Value(
            "cannot build a huffman table from an empty histogram".into(),
        ));
    }
    let n = hist.alphabet_len();
    if n == 1 {
        let (s, _) = hist.iter().next().expect("non-empty");
        return HuffmanTable::from_lengths(&[(s, 1)]);
    }

    // node ids: 0..n leaves (ascending symbol), n.. merged nodes
    let mut parent = vec![usize::MAX; 2 * n - 1];
    let mut heap: BinaryHeap<Reverse<(u64, usize)>> = hist
        .iter()
        .enumerate()
        .map(|(id, (_, c))| Reverse((c, id)))
        .collect();
    let mut next = n;
    while heap.len() > 1 {
        let Reverse((ca, a)) = heap.pop().expect("len > 1");
        let Reverse((cb, b)) = heap.pop().expect("len > 1");
        parent[a] = next;
        parent[b] = next;
        heap.push(Reverse((ca + cb, next)));
        next += 1;
    }

    let root = next - 1;
    let mut depth = vec![0u32; 2 * n - 1];
    for id in (0..root).rev() {
        depth[id] = depth[parent[id]] + 1;
    }
    let mut lengths = Vec::with_capacity(n);
    for (id, (s, _)) in hist.iter().enumerate() {
        if depth[id] > u32::from(MAX_CODE_LEN) {
            return Err(Error::Coding(format!(
                "code length {} exceeds {MAX_CODE_LEN} bits",
                depth[id]
            )));
        }
        lengths.push((s, depth[id] as u8));
    }
    HuffmanTable::from_lengths(&lengths)
}

pub fn encode(symbols: &[i8], table: &HuffmanTable) -> Result<BitBuffer> {
    let mut w = BitWriter::new();
    for (i, &s) in symbols.iter().enumerate() {
        let (code, len) = table
            .codeword(s)
            .ok_or_else(|| Error::Coding(format!("symbol {s} at position {i} not in table")))?;
        w.write_bits(code, u32::from(len));
    }
    Ok(w.finish())
}

/// Decodes exactly `count` symbols; every bit of `bits` must be consumed.
pub fn decode(bits: &BitBuffer, table: &HuffmanTable, count: usize) -> Result<Vec<i8>> {
    let max_len = table.len_count.len() - 1;
    let mut reader = bits.reader();
    let mut out = Vec::with_capacity(count);
    for i in 0..count {
        let mut code = 0u64;
        let mut len = 0usize;
        loop {
            let bit = reader.read_bit().map_err(|_| {
                Error::Format(format!(
                    "bit stream ended while decoding symbol {i} of {count}"
                ))
            })?;
            code = (code << 1) | u64::from(bit);
            len += 1;
            if len > max_len {
                return Err(Error::Format(format!(
                    "invalid codeword for symbol {i} at bit {}",
                    reader.position()
                )));
            }
            let n = table.len_count[len];
            if n > 0 && code >= table.first_code[len] && code - table.first_code[len] < n {
                let idx = table.first_index[len] + (code - table.first_code[len]) as usize;
                out.push(table.canonical[idx]);
                break;
            }
        }
    }
    if reader.remaining() != 0 {
        return Err(Error::Format(format!(
            "{} trailing bits after {count} symbols",
            reader.remaining()
        )));
    }
    Ok(out)
}

//! Closed-loop encoder and decoder.
//!
//! Layer 0 is carried as raw `f32` weights and seeds the reconstruction.
//! Every later layer is processed in order: each kernel picks a reference
//! among the already *reconstructed* kernels (per [`Mode`]), the layer's
//! residuals are quantized as one plane, and the reconstruction
//! `reference + dequantized residual` becomes part of the context for the
//! following layers. The decoder repeats the same arithmetic, so encoder and
//! decoder reconstructions are bit-identical.
//!
//! All symbols of all layers share a single canonical Huffman table.
//!
//! Reference indices (the non-texture stream) are packed per predicted kernel
//! of layer `i`:
//! - FSS: source layer `u` in `ceil(log2(i))` bits, then source kernel `v` in
//!   `ceil(log2(max c_u over u < i))` bits;
//! - LSS: source kernel `v` in `ceil(log2(c_{i-1}))` bits;
//! - ILL and BASELINE store no indices.

use alloc::format;
use alloc::string::String;
use alloc::vec::Vec;

use crate::bits::{index_width, BitBuffer, BitWriter};
use crate::error::{Error, Result};
use crate::huffman::{self, HuffmanTable, SymbolHistogram};
use crate::predictor::{
    collocated_index, compute_residual, find_best_prediction, PredictionRecord, SearchScope,
};
use crate::quantizer::{self, level_value, QuantizedPlane};
use crate::store::{DepthwiseLayer, Kernel3x3, WeightStore, KERNEL_LEN};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Mode {
    /// Linear quantization of the raw weights, no prediction.
    Baseline,
    /// Full search over all previous layers.
    Fss,
    /// Local search in the previous layer.
    Lss,
    /// Collocated kernel of the previous layer, no indices stored.
    Ill,
}

impl Mode {
    pub const ALL: [Mode; 4] = [Mode::Baseline, Mode::Fss, Mode::Lss, Mode::Ill];

    pub fn code(self) -> u8 {
        match self {
            Mode::Baseline => 0,
            Mode::Fss => 1,
            Mode::Lss => 2,
            Mode::Ill => 3,
        }
    }

    pub fn from_code(code: u8) -> Result<Self> {
        match code {
            0 => Ok(Mode::Baseline),
            1 => Ok(Mode::Fss),
            2 => Ok(Mode::Lss),
            3 => Ok(Mode::Ill),
            other => Err(Error::Format(format!("unknown mode code {other}"))),
        }
    }

    pub fn name(self) -> &'static str {
        match self {
            Mode::Baseline => "baseline",
            Mode::Fss => "fss",
            Mode::Lss => "lss",
            Mode::Ill => "ill",
        }
    }

    pub fn is_predictive(self) -> bool {
        self != Mode::Baseline
    }
}

impl core::fmt::Display for Mode {
    fn fmt(&self, f: &mut core::fmt::Formatter<'_>) -> core::fmt::Result {
        f.write_str(self.name())
    }
}

impl core::str::FromStr for Mode {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "baseline" => Ok(Mode::Baseline),
            "fss" => Ok(Mode::Fss),
            "lss" => Ok(Mode::Lss),
            "ill" => Ok(Mode::Ill),
            other => Err(Error::Config(format!(
                "unknown mode '{other}' (expected baseline, fss, lss or ill)"
            ))),
        }
    }
}

/// A coded model, field for field what the `.ilw` container stores.
#[derive(Debug, Clone, PartialEq)]
pub struct EncodedModel {
    pub mode: Mode,
    pub bits: u8,
    pub kernel_counts: Vec<u32>,
    /// One scale per layer; index 0 is unused and always 0.0.
    pub scales: Vec<f32>,
    /// Layer 0 weights, kernel-major, row-major.
    pub first_layer: Vec<f32>,
    /// `None` when no symbols are coded (single-layer baseline).
    pub table: Option<HuffmanTable>,
    pub non_texture: BitBuffer,
    pub symbol_count: u32,
    pub texture: BitBuffer,
}

impl EncodedModel {
    pub fn layer_count(&self) -> usize {
        self.kernel_counts.len()
    }
}

/// Side products of an encode: the encoder's own reconstruction, the
/// prediction records and the quantized planes of layers 1..L.
#[derive(Debug, Clone)]
pub struct EncodeTrace {
    pub reconstruction: WeightStore,
    pub records: Vec<PredictionRecord>,
    pub planes: Vec<QuantizedPlane>,
}

impl EncodeTrace {
    pub fn symbols(&self) -> impl Iterator<Item = i8> + '_ {
        self.planes.iter().flat_map(|p| p.symbols.iter().copied())
    }
}

/// Width in bits of the source-layer and source-kernel fields for a kernel of layer `layer`.
pub fn index_field_widths(mode: Mode, layer: usize, kernel_counts: &[usize]) -> (u32, u32) {
    match mode {
        Mode::Fss => {
            let widest = kernel_counts[..layer].iter().copied().max().unwrap_or(1);
            (index_width(layer), index_width(widest))
        }
        Mode::Lss => (0, index_width(kernel_counts[layer - 1])),
        Mode::Ill | Mode::Baseline => (0, 0),
    }
}

fn check_mode_layers(mode: Mode, layers: usize) -> Result<()> {
    if mode.is_predictive() && layers < 2 {
        return Err(Error::Config(format!(
            "mode {mode} needs at least 2 layers, store has {layers}"
        )));
    }
    Ok(())
}

pub fn encode_model(store: &WeightStore, mode: Mode, bits: u8) -> Result<EncodedModel> {
    encode_model_traced(store, mode, bits).map(|(enc, _)| enc)
}

pub fn encode_model_traced(
    store: &WeightStore,
    mode: Mode,
    bits: u8,
) -> Result<(EncodedModel, EncodeTrace)> {
    quantizer::check_bits(bits)?;
    check_mode_layers(mode, store.layer_count())?;
    let counts = store.kernel_counts();
    for &c in &counts {
        if u32::try_from(c).is_err() {
            return Err(Error::Config(format!(
                "layer with {c} kernels is too large"
            )));
        }
    }

    let layers = store.layers();
    let mut recon: Vec<DepthwiseLayer> = Vec::with_capacity(layers.len());
    recon.push(layers[0].clone());
    let mut scales = Vec::with_capacity(layers.len());
    scales.push(0.0f32);
    let mut records = Vec::new();
    let mut planes = Vec::with_capacity(layers.len() - 1);
    let mut indices = BitWriter::new();

    for (i, layer) in layers.iter().enumerate().skip(1) {
        let (plane, kernels) = if mode == Mode::Baseline {
            let values: Vec<f64> = layer.iter_values().map(f64::from).collect();
            let plane = quantizer::quantize(&values, bits)?;
            let kernels = plane
                .symbols
                .chunks_exact(KERNEL_LEN)
                .map(|chunk| {
                    Kernel3x3::new(core::array::from_fn(|k| level_value(chunk[k], plane.scale)))
                })
                .collect::<Result<Vec<_>>>()?;
            (plane, kernels)
        } else {
            let (u_width, v_width) = index_field_widths(mode, i, &counts);
            let first_record = records.len();
            let mut residuals = Vec::with_capacity(layer.count() * KERNEL_LEN);
            for (j, target) in layer.kernels().iter().enumerate() {
                let (u, v) = match mode {
                    Mode::Fss => find_best_prediction(&recon, target, i, SearchScope::Full)?,
                    Mode::Lss => find_best_prediction(&recon, target, i, SearchScope::Local)?,
                    _ => (i - 1, collocated_index(j, recon[i - 1].count())),
                };
                if mode == Mode::Fss {
                    indices.write_bits(u as u64, u_width);
                }
                if matches!(mode, Mode::Fss | Mode::Lss) {
                    indices.write_bits(v as u64, v_width);
                }
                let residual = compute_residual(target, &recon[u].kernels()[v]);
                residuals.extend_from_slice(&residual.0);
                records.push(PredictionRecord {
                    target_layer: i,
                    target_kernel: j,
                    source_layer: u,
                    source_kernel: v,
                    residual,
                });
            }
            let floor = f64::from(recon[i - 1].max_abs());
            let plane = quantizer::quantize_with_floor(&residuals, bits, floor)?;
            let kernels = records[first_record..]
                .iter()
                .zip(plane.symbols.chunks_exact(KERNEL_LEN))
                .map(|(rec, chunk)| {
                    let reference = &recon[rec.source_layer].kernels()[rec.source_kernel];
                    reconstruct(reference, chunk, plane.scale).map_err(|e| match e {
                        Error::Value(msg) => {
                            Error::Value(format!("layer {i} kernel {}: {msg}", rec.target_kernel))
                        }
                        other => other,
                    })
                })
                .collect::<Result<Vec<_>>>()?;
            (plane, kernels)
        };
        scales.push(plane.scale);
        recon.push(DepthwiseLayer::new(kernels)?);
        planes.push(plane);
    }

    let symbols: Vec<i8> = planes
        .iter()
        .flat_map(|p| p.symbols.iter().copied())
        .collect();
    let symbol_count = u32::try_from(symbols.len())
        .map_err(|_| Error::Config(format!("{} symbols exceed the u32 limit", symbols.len())))?;
    let (table, texture) = if symbols.is_empty() {
        (None, BitBuffer::new())
    } else {
        let table = huffman::build_table(&SymbolHistogram::from_symbols(&symbols))?;
        let texture = huffman::encode(&symbols, &table)?;
        (Some(table), texture)
    };

    let enc = EncodedModel {
        mode,
        bits,
        kernel_counts: counts.iter().map(|&c| c as u32).collect(),
        scales,
        first_layer: layers[0].iter_values().collect(),
        table,
        non_texture: indices.finish(),
        symbol_count,
        texture,
    };
    let trace = EncodeTrace {
        reconstruction: WeightStore::new(recon, store.model_name.clone())?,
        records,
        planes,
    };
    Ok((enc, trace))
}

/// `reference + symbol * scale`, element-wise in `f32`.
fn reconstruct(reference: &Kernel3x3, symbols: &[i8], scale: f32) -> Result<Kernel3x3> {
    Kernel3x3::new(core::array::from_fn(|k| {
        reference[k] + level_value(symbols[k], scale)
    }))
}

pub fn decode_model(enc: &EncodedModel) -> Result<WeightStore> {
    quantizer::check_bits(enc.bits).map_err(|e| Error::Format(format!("header: {e}")))?;
    let layer_count = enc.layer_count();
    if layer_count == 0 {
        return Err(Error::Format("header: layer count is 0".into()));
    }
    if enc.mode.is_predictive() && layer_count < 2 {
        return Err(Error::Format(format!(
            "header: mode {} with a single layer",
            enc.mode
        )));
    }
    let counts: Vec<usize> = enc.kernel_counts.iter().map(|&c| c as usize).collect();
    if let Some(i) = counts.iter().position(|&c| c == 0) {
        return Err(Error::Format(format!("header: layer {i} has 0 kernels")));
    }
    if enc.scales.len() != layer_count {
        return Err(Error::Format(format!(
            "header: {} scales for {layer_count} layers",
            enc.scales.len()
        )));
    }
    if enc.scales[0].to_bits() != 0 {
        return Err(Error::Format("header: layer 0 scale must be 0.0".into()));
    }
    for (i, &s) in enc.scales.iter().enumerate().skip(1) {
        if !(s.is_finite() && s > 0.0) {
            return Err(Error::Format(format!(
                "header: layer {i} scale {s} is not positive"
            )));
        }
    }
    if enc.first_layer.len() != counts[0] * KERNEL_LEN {
        return Err(Error::Format(format!(
            "first layer block has {} values, expected {}",
            enc.first_layer.len(),
            counts[0] * KERNEL_LEN
        )));
    }
    let expected_symbols: usize = counts[1..].iter().sum::<usize>() * KERNEL_LEN;
    if enc.symbol_count as usize != expected_symbols {
        return Err(Error::Format(format!(
            "texture declares {} symbols, layers need {expected_symbols}",
            enc.symbol_count
        )));
    }
    if matches!(enc.mode, Mode::Baseline | Mode::Ill) && !enc.non_texture.is_empty() {
        return Err(Error::Format(format!(
            "mode {} carries {} index bits",
            enc.mode,
            enc.non_texture.bit_len()
        )));
    }

    let symbols = match &enc.table {
        Some(table) => huffman::decode(&enc.texture, table, expected_symbols)
            .map_err(|e| Error::Format(format!("texture stream: {e}")))?,
        None if expected_symbols == 0 && enc.texture.is_empty() => Vec::new(),
        None => {
            return Err(Error::Format(
                "texture stream present without a huffman table".into(),
            ))
        }
    };
    let levels = quantizer::max_level(enc.bits);
    if let Some(pos) = symbols.iter().position(|&s| i32::from(s).abs() > levels) {
        return Err(Error::Format(format!(
            "texture symbol {} at position {pos} exceeds ±{levels}",
            symbols[pos]
        )));
    }

    let first = DepthwiseLayer::from_flat(&enc.first_layer)
        .map_err(|e| Error::Format(format!("first layer block: {e}")))?;
    let mut recon: Vec<DepthwiseLayer> = Vec::with_capacity(layer_count);
    recon.push(first);
    let mut indices = enc.non_texture.reader();
    let mut sym_pos = 0usize;

    for i in 1..layer_count {
        let scale = enc.scales[i];
        let (u_width, v_width) = index_field_widths(enc.mode, i, &counts);
        let mut kernels = Vec::with_capacity(counts[i]);
        for j in 0..counts[i] {
            let chunk = &symbols[sym_pos..sym_pos + KERNEL_LEN];
            sym_pos += KERNEL_LEN;
            let at = |what: &str| format!("layer {i} kernel {j}: {what}");
            let kernel = if enc.mode == Mode::Baseline {
                Kernel3x3::new(core::array::from_fn(|k| level_value(chunk[k], scale)))
            } else {
                let (u, v) = match enc.mode {
                    Mode::Fss => {
                        let u = indices
                            .read_bits(u_width)
                            .map_err(|e| Error::Format(at(&format!("source layer: {e}"))))?
                            as usize;
                        let v = indices
                            .read_bits(v_width)
                            .map_err(|e| Error::Format(at(&format!("source kernel: {e}"))))?
                            as usize;
                        (u, v)
                    }
                    Mode::Lss => {
                        let v = indices
                            .read_bits(v_width)
                            .map_err(|e| Error::Format(at(&format!("source kernel: {e}"))))?
                            as usize;
                        (i - 1, v)
                    }
                    _ => (i - 1, collocated_index(j, counts[i - 1])),
                };
                if u >= i {
                    return Err(Error::Format(at(&format!(
                        "source layer {u} is not before {i}"
                    ))));
                }
                if v >= counts[u] {
                    return Err(Error::Format(at(&format!(
                        "source kernel {v} out of range for layer {u} ({} kernels)",
                        counts[u]
                    ))));
                }
                reconstruct(&recon[u].kernels()[v], chunk, scale)
            }
            .map_err(|e| Error::Format(at(&format!("{e}"))))?;
            kernels.push(kernel);
        }
        recon.push(DepthwiseLayer::new(kernels)?);
    }
    if indices.remaining() != 0 {
        return Err(Error::Format(format!(
            "index stream has {} unread bits",
            indices.remaining()
        )));
    }
    WeightStore::new(recon, String::new())
}

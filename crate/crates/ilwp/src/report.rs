//! Report records and their JSON/CSV encodings.
//!
//! CSV column orders are fixed:
//!
//! - sizes: `bits,texture_bits,non_texture_bits,header_bits,total_bits,texture_kb,non_texture_kb,header_kb,total_kb`
//! - histograms: `series,bin_center,count`
//! - heatmaps: `target_layer,source_layer,count,percent`

use std::collections::BTreeMap;

use ilwp_core::analyzer::{self, LaplaceFit, SourceHeatmap};
use ilwp_core::codec::{encode_model_traced, EncodeTrace};
use ilwp_core::huffman::SymbolHistogram;
use ilwp_core::{Mode, WeightStore};
use serde::Serialize;

use crate::error::{Error, Result};
use crate::ilw::{measure_sizes, SizeReport};

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct SizeRow {
    pub bits: u8,
    pub texture_bits: u64,
    pub non_texture_bits: u64,
    pub header_bits: u64,
    pub total_bits: u64,
    pub texture_kb: f64,
    pub non_texture_kb: f64,
    pub header_kb: f64,
    pub total_kb: f64,
}

impl SizeRow {
    pub fn new(bits: u8, sizes: &SizeReport) -> Self {
        Self {
            bits,
            texture_bits: sizes.texture_bits,
            non_texture_bits: sizes.non_texture_bits,
            header_bits: sizes.header_bits,
            total_bits: sizes.total_bits,
            texture_kb: sizes.texture_kb(),
            non_texture_kb: sizes.non_texture_kb(),
            header_kb: sizes.header_kb(),
            total_kb: sizes.total_kb(),
        }
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct SweepReport {
    pub model: String,
    pub mode: String,
    pub rows: Vec<SizeRow>,
}

#[derive(Debug, Clone, Copy, Serialize)]
pub struct LaplaceSummary {
    pub mu: f64,
    pub b: f64,
    pub samples: usize,
    pub entropy_nats: f64,
}

impl LaplaceSummary {
    fn from_values(values: &[f64]) -> Option<Self> {
        let LaplaceFit { mu, b, samples } = analyzer::fit_laplace(values).ok()?;
        Some(Self {
            mu,
            b,
            samples,
            entropy_nats: analyzer::laplace_entropy(b).ok()?,
        })
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct SymbolSummary {
    pub count: u64,
    pub zero_fraction: f64,
    pub entropy_bits: Option<f64>,
    pub mean_code_length_bits: Option<f64>,
}

#[derive(Debug, Clone, Serialize)]
pub struct StatsReport {
    pub model: String,
    pub mode: String,
    pub bits: u8,
    pub kernel_counts: Vec<usize>,
    pub sizes: SizeRow,
    /// Laplace fit of the raw weights of layers 1..L.
    pub weights: Option<LaplaceSummary>,
    /// Laplace fit of the prediction residuals on the original weights.
    pub residuals: Option<LaplaceSummary>,
    pub symbols: SymbolSummary,
    /// `None` for stores with fewer than 3 layers.
    pub svwh_ratio: Option<f64>,
}

pub fn stats_report(store: &WeightStore, mode: Mode, bits: u8) -> Result<StatsReport> {
    let (enc, trace) = encode_model_traced(store, mode, bits)?;
    let weights: Vec<f64> = store.layers()[1..]
        .iter()
        .flat_map(|l| l.iter_values().map(f64::from))
        .collect();
    let residuals = analyzer::analysis_residuals(store, mode)?;
    Ok(StatsReport {
        model: store.model_name.clone(),
        mode: mode.name().to_string(),
        bits,
        kernel_counts: store.kernel_counts(),
        sizes: SizeRow::new(bits, &measure_sizes(&enc)),
        weights: LaplaceSummary::from_values(&weights),
        residuals: LaplaceSummary::from_values(&residuals),
        symbols: symbol_summary(&trace, enc.table.as_ref()),
        svwh_ratio: analyzer::svwh_ratio(store).ok(),
    })
}

fn symbol_summary(
    trace: &EncodeTrace,
    table: Option<&ilwp_core::huffman::HuffmanTable>,
) -> SymbolSummary {
    let symbols: Vec<i8> = trace.symbols().collect();
    let hist = SymbolHistogram::from_symbols(&symbols);
    let count = hist.total();
    let zeros = hist.count(0);
    SymbolSummary {
        count,
        zero_fraction: if count == 0 {
            0.0
        } else {
            zeros as f64 / count as f64
        },
        entropy_bits: analyzer::empirical_entropy(&hist).ok(),
        mean_code_length_bits: table
            .and_then(|t| t.encoded_bits(&hist).ok())
            .filter(|_| count > 0)
            .map(|b| b as f64 / count as f64),
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct HeatmapReport {
    pub model: String,
    /// Row `t` is target layer `t + 1`; column `u` is source layer `u`.
    pub percent: Vec<Vec<f64>>,
    pub tallies: Vec<Vec<u64>>,
    pub previous_layer_share: Vec<f64>,
}

impl HeatmapReport {
    pub fn new(model: &str, heatmap: &SourceHeatmap) -> Self {
        Self {
            model: model.to_string(),
            percent: heatmap.percent.clone(),
            tallies: heatmap.tallies.clone(),
            previous_layer_share: heatmap.previous_layer_share(),
        }
    }
}

pub fn to_json<T: Serialize>(value: &T) -> Result<Vec<u8>> {
    let mut out = serde_json::to_vec_pretty(value).map_err(|e| Error::Report(e.to_string()))?;
    out.push(b'\n');
    Ok(out)
}

fn csv_bytes(fill: impl FnOnce(&mut csv::Writer<Vec<u8>>) -> csv::Result<()>) -> Result<Vec<u8>> {
    let mut w = csv::Writer::from_writer(Vec::new());
    fill(&mut w).map_err(|e| Error::Report(e.to_string()))?;
    w.into_inner().map_err(|e| Error::Report(e.to_string()))
}

pub fn sizes_csv(rows: &[SizeRow]) -> Result<Vec<u8>> {
    csv_bytes(|w| rows.iter().try_for_each(|r| w.serialize(r)))
}

#[derive(Serialize)]
struct HistogramRow<'a> {
    series: &'a str,
    bin_center: f64,
    count: u64,
}

/// Histogram CSV; one series per `(name, bins)` entry with bin indices scaled by `bin_width`.
pub fn histogram_csv(series: &[(&str, BTreeMap<i64, u64>)], bin_width: f64) -> Result<Vec<u8>> {
    csv_bytes(|w| {
        for (name, bins) in series {
            for (&k, &count) in bins {
                w.serialize(HistogramRow {
                    series: name,
                    bin_center: k as f64 * bin_width,
                    count,
                })?;
            }
        }
        Ok(())
    })
}

#[derive(Serialize)]
struct HeatmapRow {
    target_layer: usize,
    source_layer: usize,
    count: u64,
    percent: f64,
}

pub fn heatmap_csv(heatmap: &SourceHeatmap) -> Result<Vec<u8>> {
    csv_bytes(|w| {
        for (t, (pct, cnt)) in heatmap.percent.iter().zip(&heatmap.tallies).enumerate() {
            for u in 0..=t {
                w.serialize(HeatmapRow {
                    target_layer: t + 1,
                    source_layer: u,
                    count: cnt[u],
                    percent: pct[u],
                })?;
            }
        }
        Ok(())
    })
}

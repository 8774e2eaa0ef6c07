//! Similarity and entropy diagnostics on uncoded weights.
//!
//! Searches here run over the original weights, not reconstructions.

use alloc::collections::BTreeMap;
use alloc::format;
use alloc::vec;
use alloc::vec::Vec;

use crate::error::{Error, Result};
use crate::huffman::SymbolHistogram;
use crate::predictor::{compute_residual, find_best_prediction, SearchScope};
use crate::store::WeightStore;

/// Percentage of best full-search predictions per (target layer, source layer).
///
/// `percent[t][u]` covers target layer `t + 1` and source layer `u`; entries
/// with `u > t` are always zero. Each row sums to 100.
#[derive(Debug, Clone, PartialEq)]
pub struct SourceHeatmap {
    pub percent: Vec<Vec<f64>>,
    /// Raw counts with the same layout as `percent`.
    pub tallies: Vec<Vec<u64>>,
}

impl SourceHeatmap {
    /// Share of kernels in target layer `t + 1` predicted from layer `t`.
    pub fn previous_layer_share(&self) -> Vec<f64> {
        self.percent
            .iter()
            .enumerate()
            .map(|(t, row)| row[t])
            .collect()
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LaplaceFit {
    pub mu: f64,
    pub b: f64,
    pub samples: usize,
}

/// Tallies the source layer of each kernel's best full-search prediction.
pub fn best_source_tallies(store: &WeightStore) -> Result<Vec<Vec<u64>>> {
    let layers = store.layers();
    if layers.len() < 2 {
        return Err(Error::Analysis(format!(
            "source statistics need at least 2 layers, store has {}",
            layers.len()
        )));
    }
    let rows = layers.len() - 1;
    let mut tallies = vec![vec![0u64; rows]; rows];
    for (i, layer) in layers.iter().enumerate().skip(1) {
        for target in layer.kernels() {
            let (u, _) = find_best_prediction(layers, target, i, SearchScope::Full)?;
            tallies[i - 1][u] += 1;
        }
    }
    Ok(tallies)
}

pub fn prediction_source_heatmap(store: &WeightStore) -> Result<SourceHeatmap> {
    let tallies = best_source_tallies(store)?;
    let percent = tallies
        .iter()
        .map(|row| {
            let total: u64 = row.iter().sum();
            row.iter()
                .map(|&c| 100.0 * c as f64 / total as f64)
                .collect()
        })
        .collect();
    Ok(SourceHeatmap { percent, tallies })
}

/// Fraction of kernels in layers `i >= 2` whose best full-search reference is in layer `i - 1`.
pub fn svwh_ratio(store: &WeightStore) -> Result<f64> {
    if store.layer_count() < 3 {
        return Err(Error::Analysis(format!(
            "the previous-layer ratio needs at least 3 layers, store has {}",
            store.layer_count()
        )));
    }
    let tallies = best_source_tallies(store)?;
    let (mut hits, mut total) = (0u64, 0u64);
    for (t, row) in tallies.iter().enumerate().skip(1) {
        hits += row[t];
        total += row.iter().sum::<u64>();
    }
    Ok(hits as f64 / total as f64)
}

/// Histogram with bins centered at integer multiples of `bin_width`.
///
/// Keys are bin indices `k`; the bin center is `k * bin_width`.
pub fn residual_histogram(values: &[f64], bin_width: f64) -> Result<BTreeMap<i64, u64>> {
    if !(bin_width.is_finite() && bin_width > 0.0) {
        return Err(Error::Value(format!(
            "bin width must be positive, got {bin_width}"
        )));
    }
    let mut hist = BTreeMap::new();
    for &v in values {
        if !v.is_finite() {
            return Err(Error::Value(format!("non-finite value {v}")));
        }
        *hist.entry(libm::round(v / bin_width) as i64).or_insert(0) += 1;
    }
    Ok(hist)
}

/// Maximum-likelihood Laplace fit: median location, mean absolute deviation scale.
pub fn fit_laplace(values: &[f64]) -> Result<LaplaceFit> {
    if values.len() < 2 {
        return Err(Error::Analysis(format!(
            "a Laplace fit needs at least 2 values, got {}",
            values.len()
        )));
    }
    if values.iter().any(|v| !v.is_finite()) {
        return Err(Error::Value("non-finite value in Laplace fit input".into()));
    }
    let mut sorted = values.to_vec();
    sorted.sort_unstable_by(f64::total_cmp);
    let n = sorted.len();
    let mu = if n % 2 == 1 {
        sorted[n / 2]
    } else {
        0.5 * (sorted[n / 2 - 1] + sorted[n / 2])
    };
    let b = sorted.iter().map(|v| (v - mu).abs()).sum::<f64>() / n as f64;
    if b <= 0.0 {
        return Err(Error::Analysis(
            "degenerate Laplace fit: all values equal".into(),
        ));
    }
    Ok(LaplaceFit { mu, b, samples: n })
}

/// Differential entropy of a Laplace distribution in nats: `ln(2b) + 1`.
pub fn laplace_entropy(b: f64) -> Result<f64> {
    if !(b.is_finite() && b > 0.0) {
        return Err(Error::Value(format!(
            "Laplace scale must be positive, got {b}"
        )));
    }
    Ok(libm::log(2.0 * b) + 1.0)
}

/// Shannon entropy of the empirical symbol distribution in bits.
pub fn empirical_entropy(hist: &SymbolHistogram) -> Result<f64> {
    if hist.is_empty() {
        return Err(Error::Value("entropy of an empty histogram".into()));
    }
    let total = hist.total() as f64;
    Ok(hist
        .iter()
        .map(|(_, c)| {
            let p = c as f64 / total;
            -p * libm::log2(p)
        })
        .sum())
}

/// Residuals `target - reference` of layers `1..` on the original weights.
///
/// References follow the same rules as the codec modes (search scopes or the
/// collocated kernel) but are taken from unquantized weights.
pub fn analysis_residuals(store: &WeightStore, mode: crate::codec::Mode) -> Result<Vec<f64>> {
    use crate::codec::Mode;
    let layers = store.layers();
    let mut out = Vec::new();
    for (i, layer) in layers.iter().enumerate().skip(1) {
        for (j, target) in layer.kernels().iter().enumerate() {
            let reference = match mode {
                Mode::Baseline => {
                    out.extend(target.values().iter().map(|&v| f64::from(v)));
                    continue;
                }
                Mode::Fss | Mode::Lss => {
                    let scope = if mode == Mode::Fss {
                        SearchScope::Full
                    } else {
                        SearchScope::Local
                    };
                    let (u, v) = find_best_prediction(layers, target, i, scope)?;
                    &layers[u].kernels()[v]
                }
                Mode::Ill => {
                    let prev = &layers[i - 1];
                    &prev.kernels()[crate::predictor::collocated_index(j, prev.count())]
                }
            };
            out.extend_from_slice(&compute_residual(target, reference).0);
        }
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::store::{DepthwiseLayer, Kernel3x3};

    fn store(layers: &[&[f32]]) -> WeightStore {
        WeightStore::new(
            layers
                .iter()
                .map(|l| {
                    DepthwiseLayer::new(l.iter().map(|&v| Kernel3x3::splat(v).unwrap()).collect())
                        .unwrap()
                })
                .collect(),
            "t",
        )
        .unwrap()
    }

    #[test]
    fn two_layer_heatmap() {
        let h = prediction_source_heatmap(&store(&[&[0.1, 0.2], &[0.3, 0.4, 0.5]])).unwrap();
        assert_eq!(h.percent, vec![vec![100.0]]);
        assert!(prediction_source_heatmap(&store(&[&[0.1]])).is_err());
    }

    #[test]
    fn planted_svwh() {
        let s = store(&[&[0.0, 5.0], &[1.0, 6.0], &[1.001, 6.001], &[1.002, 6.002]]);
        assert_eq!(svwh_ratio(&s).unwrap(), 1.0);
        assert!(matches!(
            svwh_ratio(&store(&[&[0.0], &[1.0]])),
            Err(Error::Analysis(_))
        ));
    }

    #[test]
    fn histogram_cases() {
        let h = residual_histogram(&[0.0; 5], 0.1).unwrap();
        assert_eq!(h.into_iter().collect::<Vec<_>>(), vec![(0, 5)]);
        let h = residual_histogram(&[-0.31, 0.31], 0.1).unwrap();
        assert_eq!(h.into_iter().collect::<Vec<_>>(), vec![(-3, 1), (3, 1)]);
        assert!(residual_histogram(&[1.0], 0.0).is_err());
    }

    #[test]
    fn laplace_fit_cases() {
        let fit = fit_laplace(&[-1.0, 0.0, 1.0]).unwrap();
        assert_eq!(fit.mu, 0.0);
        assert!((fit.b - 2.0 / 3.0).abs() < 1e-15);
        assert!(matches!(fit_laplace(&[0.2; 4]), Err(Error::Analysis(_))));
        assert!(matches!(fit_laplace(&[0.2]), Err(Error::Analysis(_))));
        let even = fit_laplace(&[0.0, 1.0, 2.0, 10.0]).unwrap();
        assert_eq!(even.mu, 1.5);
    }

    #[test]
    fn entropy_values() {
        assert_eq!(laplace_entropy(0.5).unwrap(), 1.0);
        assert!((laplace_entropy(core::f64::consts::E / 2.0).unwrap() - 2.0).abs() < 1e-15);
        assert!(laplace_entropy(0.0).is_err());
        assert!(laplace_entropy(-1.0).is_err());

        assert_eq!(
            empirical_entropy(&SymbolHistogram::from_counts([(0, 7)])).unwrap(),
            0.0
        );
        assert_eq!(
            empirical_entropy(&SymbolHistogram::from_counts([(0, 3), (1, 3)])).unwrap(),
            1.0
        );
        let uniform = SymbolHistogram::from_counts((0..8).map(|s| (s, 5)));
        assert!((empirical_entropy(&uniform).unwrap() - 3.0).abs() < 1e-12);
        assert!(empirical_entropy(&SymbolHistogram::new()).is_err());
    }
}

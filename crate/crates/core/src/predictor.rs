//! Reference search and residual computation for inter-layer prediction.

use alloc::format;

use crate::error::{Error, Result};
use crate::store::{DepthwiseLayer, Kernel3x3, KERNEL_LEN};

/// Candidate set for the reference search.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SearchScope {
    /// Every kernel of every earlier layer.
    Full,
    /// Only the kernels of the immediately preceding layer.
    Local,
}

/// Residual of a predicted kernel, `target - reference`.
///
/// Kept in `f64`: the difference of two `f32` values with comparable
/// exponents is exact, so adding the reference back recovers the target.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Residual(pub [f64; KERNEL_LEN]);

impl Residual {
    pub fn add_to(&self, reference: &Kernel3x3) -> [f64; KERNEL_LEN] {
        core::array::from_fn(|k| self.0[k] + f64::from(reference[k]))
    }
}

/// One predicted kernel: target `(layer, kernel)`, source `(layer, kernel)` and residual.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PredictionRecord {
    pub target_layer: usize,
    pub target_kernel: usize,
    pub source_layer: usize,
    pub source_kernel: usize,
    pub residual: Residual,
}

/// Sum of absolute element differences.
pub fn l1_distance(a: &Kernel3x3, b: &Kernel3x3) -> f64 {
    a.values()
        .iter()
        .zip(b.values())
        .map(|(x, y)| (f64::from(*x) - f64::from(*y)).abs())
        .sum()
}

/// Index of the collocated kernel in a previous layer of `c_prev` kernels.
#[inline]
pub fn collocated_index(j: usize, c_prev: usize) -> usize {
    debug_assert!(c_prev >= 1);
    j % c_prev
}

pub fn compute_residual(target: &Kernel3x3, reference: &Kernel3x3) -> Residual {
    Residual(core::array::from_fn(|k| {
        f64::from(target[k]) - f64::from(reference[k])
    }))
}

/// Finds the `(layer, kernel)` reference minimizing the L1 distance to `target`.
///
/// `context` holds the (reconstructed) layers preceding `layer`; only
/// `context[..layer]` is searched. Ties resolve to the smallest layer index,
/// then the smallest kernel index.
pub fn find_best_prediction(
    context: &[DepthwiseLayer],
    target: &Kernel3x3,
    layer: usize,
    scope: SearchScope,
) -> Result<(usize, usize)> {
    if layer == 0 {
        return Err(Error::Prediction("layer 0 is never predicted".into()));
    }
    if context.len() < layer {
        return Err(Error::Prediction(format!(
            "context has {} layers, layer {layer} needs {layer}",
            context.len()
        )));
    }
    let first = match scope {
        SearchScope::Full => 0,
        SearchScope::Local => layer - 1,
    };
    let mut best = (first, 0usize);
    let mut best_dist = f64::INFINITY;
    for (u, candidates) in context[first..layer].iter().enumerate() {
        for (v, candidate) in candidates.kernels().iter().enumerate() {
            let d = l1_distance(target, candidate);
            // strict comparison keeps the earliest (u, v) on ties
            if d < best_dist {
                best_dist = d;
                best = (first + u, v);
            }
        }
    }
    Ok(best)
}

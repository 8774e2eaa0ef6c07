#![allow(dead_code)]

use ilwp_core::{DepthwiseLayer, Kernel3x3, WeightStore};
use rand::Rng;
use rand_distr::{Distribution, Normal};

pub fn layer_from_fn(count: usize, mut f: impl FnMut() -> f32) -> DepthwiseLayer {
    DepthwiseLayer::new(
        (0..count)
            .map(|_| Kernel3x3::new(std::array::from_fn(|_| f())).unwrap())
            .collect(),
    )
    .unwrap()
}

/// Random store with Gaussian weights and per-layer kernel counts in `counts`.
pub fn random_store<R: Rng>(
    rng: &mut R,
    layers: std::ops::RangeInclusive<usize>,
    counts: std::ops::RangeInclusive<usize>,
) -> WeightStore {
    let n = rng.random_range(layers);
    let sigma = [0.05f32, 0.3, 1.0][rng.random_range(0..3)];
    let normal = Normal::new(0.0f32, sigma).unwrap();
    let layers = (0..n)
        .map(|_| {
            let c = rng.random_range(counts.clone());
            layer_from_fn(c, || normal.sample(rng))
        })
        .collect();
    WeightStore::new(layers, "random").unwrap()
}

/// Store whose weights come from a small lattice, so L1 ties are common.
pub fn lattice_store<R: Rng>(
    rng: &mut R,
    layers: std::ops::RangeInclusive<usize>,
    counts: std::ops::RangeInclusive<usize>,
) -> WeightStore {
    let n = rng.random_range(layers);
    let layers = (0..n)
        .map(|_| {
            let c = rng.random_range(counts.clone());
            layer_from_fn(c, || rng.random_range(-2i32..=2) as f32 * 0.25)
        })
        .collect();
    WeightStore::new(layers, "lattice").unwrap()
}

/// Smoothly varying layers: each layer is the previous one plus a drift
/// vector that is re-drawn (σ = `noise`) every three layers.
pub fn smooth_store<R: Rng>(rng: &mut R, layers: usize, count: usize, noise: f32) -> WeightStore {
    let base = Normal::new(0.0f32, 1.0).unwrap();
    let drift = Normal::new(0.0f32, noise).unwrap();
    let mut current: Vec<[f32; 9]> = (0..count)
        .map(|_| std::array::from_fn(|_| base.sample(rng)))
        .collect();
    let mut step: Vec<[f32; 9]> = Vec::new();
    let mut out = Vec::with_capacity(layers);
    for i in 0..layers {
        if i > 0 {
            if (i - 1) % 3 == 0 {
                step = (0..count)
                    .map(|_| std::array::from_fn(|_| drift.sample(rng)))
                    .collect();
            }
            for (k, s) in current.iter_mut().zip(&step) {
                for e in 0..9 {
                    k[e] += s[e];
                }
            }
        }
        out.push(
            DepthwiseLayer::new(
                current
                    .iter()
                    .map(|k| Kernel3x3::new(*k).unwrap())
                    .collect(),
            )
            .unwrap(),
        );
    }
    WeightStore::new(out, "smooth").unwrap()
}

/// Samples Laplace(mu, b) by inverting the CDF.
pub fn laplace_sample<R: Rng>(rng: &mut R, mu: f64, b: f64) -> f64 {
    let u: f64 = rng.random_range(-0.5..0.5);
    mu - b * u.signum() * (1.0 - 2.0 * u.abs()).ln()
}

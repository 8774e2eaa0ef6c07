//! In-memory model of depthwise weight tensors.
//!
//! Layers are indexed from 0 in forward order. Layer 0 is the reference
//! layer that is never predicted or quantized by the codec.

use alloc::format;
use alloc::string::String;
use alloc::vec::Vec;

use crate::error::{Error, Result};

/// Number of weights in one 3×3 kernel.
pub const KERNEL_LEN: usize = 9;

/// One 3×3 depthwise kernel, row-major, all values finite.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Kernel3x3([f32; KERNEL_LEN]);

impl Kernel3x3 {
    pub const ZERO: Self = Self([0.0; KERNEL_LEN]);

    pub fn new(values: [f32; KERNEL_LEN]) -> Result<Self> {
        if let Some(pos) = values.iter().position(|v| !v.is_finite()) {
            return Err(Error::Value(format!(
                "kernel element {pos} is not finite ({})",
                values[pos]
            )));
        }
        Ok(Self(values))
    }

    pub fn from_slice(values: &[f32]) -> Result<Self> {
        let arr: [f32; KERNEL_LEN] = values.try_into().map_err(|_| {
            Error::Value(format!(
                "kernel needs {KERNEL_LEN} values, got {}",
                values.len()
            ))
        })?;
        Self::new(arr)
    }

    /// A kernel with every element equal to `value`.
    pub fn splat(value: f32) -> Result<Self> {
        Self::new([value; KERNEL_LEN])
    }

    #[inline]
    pub fn values(&self) -> &[f32; KERNEL_LEN] {
        &self.0
    }

    pub fn max_abs(&self) -> f32 {
        self.0.iter().fold(0.0f32, |m, v| m.max(v.abs()))
    }
}

impl core::ops::Index<usize> for Kernel3x3 {
    type Output = f32;

    fn index(&self, idx: usize) -> &f32 {
        &self.0[idx]
    }
}

/// The ordered 3×3 kernels of one depthwise convolution layer (one per channel).
#[derive(Debug, Clone, PartialEq)]
pub struct DepthwiseLayer {
    kernels: Vec<Kernel3x3>,
}

impl DepthwiseLayer {
    pub fn new(kernels: Vec<Kernel3x3>) -> Result<Self> {
        if kernels.is_empty() {
            return Err(Error::Value(
                "a depthwise layer needs at least one kernel".into(),
            ));
        }
        Ok(Self { kernels })
    }

    /// Builds a layer from a flat kernel-major, row-major buffer.
    pub fn from_flat(values: &[f32]) -> Result<Self> {
        if values.is_empty() || !values.len().is_multiple_of(KERNEL_LEN) {
            return Err(Error::Value(format!(
                "flat layer length {} is not a positive multiple of {KERNEL_LEN}",
                values.len()
            )));
        }
        let kernels = values
            .chunks_exact(KERNEL_LEN)
            .map(Kernel3x3::from_slice)
            .collect::<Result<Vec<_>>>()?;
        Self::new(kernels)
    }

    #[inline]
    pub fn kernels(&self) -> &[Kernel3x3] {
        &self.kernels
    }

    #[inline]
    pub fn count(&self) -> usize {
        self.kernels.len()
    }

    pub fn max_abs(&self) -> f32 {
        self.kernels.iter().fold(0.0f32, |m, k| m.max(k.max_abs()))
    }

    /// Iterates all weights kernel-major, row-major.
    pub fn iter_values(&self) -> impl Iterator<Item = f32> + '_ {
        self.kernels.iter().flat_map(|k| k.values().iter().copied())
    }
}

/// Depthwise weights of a whole network in forward order.
#[derive(Debug, Clone, PartialEq)]
pub struct WeightStore {
    layers: Vec<DepthwiseLayer>,
    pub model_name: String,
}

impl WeightStore {
    pub fn new(layers: Vec<DepthwiseLayer>, model_name: impl Into<String>) -> Result<Self> {
        if layers.is_empty() {
            return Err(Error::Format("weight store has no layers".into()));
        }
        Ok(Self {
            layers,
            model_name: model_name.into(),
        })
    }

    #[inline]
    pub fn layers(&self) -> &[DepthwiseLayer] {
        &self.layers
    }

    #[inline]
    pub fn layer_count(&self) -> usize {
        self.layers.len()
    }

    pub fn kernel_counts(&self) -> Vec<usize> {
        self.layers.iter().map(DepthwiseLayer::count).collect()
    }

    pub fn total_kernels(&self) -> usize {
        self.layers.iter().map(DepthwiseLayer::count).sum()
    }

    pub fn into_layers(self) -> Vec<DepthwiseLayer> {
        self.layers
    }
}

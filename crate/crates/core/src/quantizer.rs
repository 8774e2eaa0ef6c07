//! Symmetric mid-tread ("linear") quantization at 2..=8 bits.
//!
//! A plane of values shares one scale. Symbols lie in
//! `-(2^(n-1) - 1) ..= 2^(n-1) - 1`, zero maps to symbol 0 and rounding is
//! half away from zero.
//!
//! Scales are placed on a grid with [`SCALE_MANTISSA_BITS`] fractional
//! mantissa bits, rounded up after a relative shrink of 2^-15. Two things
//! follow: `symbol * scale` is exact in `f32` for every symbol, and
//! requantizing a dequantized plane reproduces the same scale and symbols
//! bit for bit. The shrink is far below half a quantization step, so every
//! value still reconstructs within `scale / 2`.

use alloc::format;
use alloc::vec::Vec;

use crate::error::{Error, Result};

pub const MIN_BITS: u8 = 2;
pub const MAX_BITS: u8 = 8;

/// Fractional mantissa bits kept in a quantization scale.
pub const SCALE_MANTISSA_BITS: i32 = 12;

/// Relative shrink applied before rounding the scale up onto its grid.
const SCALE_SHRINK: f64 = 1.0 / (1u32 << 15) as f64;

/// Integer symbols plus the scale that maps them back to values.
#[derive(Debug, Clone, PartialEq)]
pub struct QuantizedPlane {
    pub symbols: Vec<i8>,
    pub scale: f32,
    pub bits: u8,
}

impl QuantizedPlane {
    #[inline]
    pub fn count(&self) -> usize {
        self.symbols.len()
    }

    pub fn zero_fraction(&self) -> f64 {
        if self.symbols.is_empty() {
            return 0.0;
        }
        self.symbols.iter().filter(|&&s| s == 0).count() as f64 / self.symbols.len() as f64
    }
}

pub fn check_bits(bits: u8) -> Result<()> {
    if !(MIN_BITS..=MAX_BITS).contains(&bits) {
        return Err(Error::Config(format!(
            "quantization bits must be in {MIN_BITS}..={MAX_BITS}, got {bits}"
        )));
    }
    Ok(())
}

/// Largest symbol magnitude at `bits`: `2^(bits-1) - 1`.
#[inline]
pub fn max_level(bits: u8) -> i32 {
    (1i32 << (bits - 1)) - 1
}

/// Reconstruction value of one symbol. Exact for scales produced here.
#[inline]
pub fn level_value(symbol: i8, scale: f32) -> f32 {
    f32::from(symbol) * scale
}

/// Smallest grid scale not below `step * (1 - 2^-15)`.
fn grid_scale(step: f64) -> Result<f32> {
    let target = step * (1.0 - SCALE_SHRINK);
    let (mantissa, exp) = libm::frexp(target);
    let unit = libm::ldexp(1.0, SCALE_MANTISSA_BITS + 1);
    let snapped = libm::ldexp(libm::ceil(mantissa * unit) / unit, exp);
    if snapped > f64::from(f32::MAX) {
        return Err(Error::Value(format!(
            "quantization step {step:e} exceeds the f32 range"
        )));
    }
    if snapped < f64::from(f32::MIN_POSITIVE) {
        return Ok(f32::MIN_POSITIVE);
    }
    Ok(snapped as f32)
}

/// Quantizes `values` with `scale = max|values| / (2^(bits-1) - 1)` (snapped to the scale grid).
pub fn quantize(values: &[f64], bits: u8) -> Result<QuantizedPlane> {
    quantize_with_floor(values, bits, 0.0)
}

/// Like [`quantize`], but the dynamic range used for the scale is at least `range_floor`.
///
/// The codec passes the magnitude of the reference layer here, so residual
/// planes are quantized with a step comparable to the weights they predict.
pub fn quantize_with_floor(values: &[f64], bits: u8, range_floor: f64) -> Result<QuantizedPlane> {
    check_bits(bits)?;
    if !range_floor.is_finite() || range_floor < 0.0 {
        return Err(Error::Value(format!("invalid range floor {range_floor}")));
    }
    let mut max_abs = 0.0f64;
    for (i, v) in values.iter().enumerate() {
        if !v.is_finite() {
            return Err(Error::Value(format!("value {i} is not finite ({v})")));
        }
        max_abs = max_abs.max(v.abs());
    }
    let range = max_abs.max(range_floor);
    let levels = max_level(bits);
    if range == 0.0 {
        return Ok(QuantizedPlane {
            symbols: alloc::vec![0; values.len()],
            scale: 1.0,
            bits,
        });
    }
    let scale = grid_scale(range / f64::from(levels))?;
    let inv = f64::from(scale);
    let symbols = values
        .iter()
        .map(|v| {
            let s = libm::round(v / inv).clamp(-f64::from(levels), f64::from(levels));
            s as i8
        })
        .collect();
    Ok(QuantizedPlane {
        symbols,
        scale,
        bits,
    })
}

pub fn dequantize(plane: &QuantizedPlane) -> Result<Vec<f32>> {
    check_bits(plane.bits)?;
    if !(plane.scale.is_finite() && plane.scale > 0.0) {
        return Err(Error::Format(format!("invalid scale {}", plane.scale)));
    }
    let levels = max_level(plane.bits);
    plane
        .symbols
        .iter()
        .enumerate()
        .map(|(i, &s)| {
            if i32::from(s).abs() > levels {
                Err(Error::Format(format!(
                    "symbol {s} at position {i} exceeds ±{levels} for {} bits",
                    plane.bits
                )))
            } else {
                Ok(level_value(s, plane.scale))
            }
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use alloc::vec;

    #[test]
    fn zero_plane_uses_unit_scale() {
        let p = quantize(&[0.0; 12], 8).unwrap();
        assert_eq!(p.scale, 1.0);
        assert!(p.symbols.iter().all(|&s| s == 0));
        assert_eq!(p.zero_fraction(), 1.0);
    }

    #[test]
    fn three_bit_example() {
        let p = quantize(&[-0.3, 0.0, 0.3], 3).unwrap();
        assert!((f64::from(p.scale) - 0.1).abs() < 0.1 * 2f64.powi(-SCALE_MANTISSA_BITS));
        assert_eq!(p.symbols, vec![-3, 0, 3]);
    }

    #[test]
    fn bits_out_of_range() {
        assert!(matches!(quantize(&[1.0], 1), Err(Error::Config(_))));
        assert!(matches!(quantize(&[1.0], 9), Err(Error::Config(_))));
        assert!(matches!(quantize(&[f64::NAN], 4), Err(Error::Value(_))));
    }

    #[test]
    fn dequantize_cases() {
        let p = QuantizedPlane {
            symbols: vec![0, 0, 0],
            scale: 123.5,
            bits: 4,
        };
        assert_eq!(dequantize(&p).unwrap(), vec![0.0; 3]);
        let p = QuantizedPlane {
            symbols: vec![3],
            scale: 0.1,
            bits: 4,
        };
        assert_eq!(dequantize(&p).unwrap(), vec![3.0f32 * 0.1f32]);
        let bad = QuantizedPlane {
            symbols: vec![8],
            scale: 0.1,
            bits: 4,
        };
        assert!(matches!(dequantize(&bad), Err(Error::Format(_))));
        let bad = QuantizedPlane {
            symbols: vec![1],
            scale: 0.0,
            bits: 4,
        };
        assert!(matches!(dequantize(&bad), Err(Error::Format(_))));
    }

    #[test]
    fn extreme_symbols_are_symmetric() {
        let p = quantize(&[-2.0, 2.0, 1.1], 2).unwrap();
        assert_eq!(p.symbols, vec![-1, 1, 1]);
        let p = quantize(&[-1.0, 1.0], 8).unwrap();
        assert_eq!(p.symbols, vec![-127, 127]);
    }

    #[test]
    fn floor_widens_the_step() {
        let p = quantize_with_floor(&[0.01, -0.02], 8, 1.27).unwrap();
        assert!(f64::from(p.scale) >= 0.00999 && f64::from(p.scale) <= 0.0101);
        assert_eq!(p.symbols, vec![1, -2]);
        assert!(quantize_with_floor(&[0.0], 8, -1.0).is_err());
    }

    #[test]
    fn tiny_ranges_stay_positive() {
        let p = quantize(&[1e-44], 8).unwrap();
        assert!(p.scale >= f32::MIN_POSITIVE);
        assert_eq!(p.symbols, vec![0]);
    }

    #[test]
    fn level_products_are_exact() {
        let p = quantize(&[0.123_456_7, -0.3], 8).unwrap();
        for s in -127i8..=127 {
            let exact = f64::from(s) * f64::from(p.scale);
            assert_eq!(f64::from(level_value(s, p.scale)), exact);
        }
    }
}

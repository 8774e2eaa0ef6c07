//! `.wgt` weight container.
//!
//! ```text
//! magic "ILWP" | version u16 = 1 | reserved u16 = 0 | layer count L u32
//! | L × kernel count u32 | per layer: count × 9 f32, kernel-major, row-major
//! ```
//!
//! All integers and floats are little-endian. The model name is not stored;
//! callers carry it out of band (usually the file name).

use ilwp_core::store::KERNEL_LEN;
use ilwp_core::{DepthwiseLayer, Error, Result, WeightStore};

pub const MAGIC: [u8; 4] = *b"ILWP";
pub const VERSION: u16 = 1;
pub const HEADER_LEN: usize = 12;

/// Serialized size for the given per-layer kernel counts.
pub fn encoded_len(kernel_counts: &[usize]) -> usize {
    HEADER_LEN + 4 * kernel_counts.len() + 4 * KERNEL_LEN * kernel_counts.iter().sum::<usize>()
}

pub fn save_weight_store(store: &WeightStore) -> Result<Vec<u8>> {
    let counts = store.kernel_counts();
    let layer_count = u32::try_from(counts.len())
        .map_err(|_| Error::Value(format!("{} layers exceed the u32 limit", counts.len())))?;
    let mut out = Vec::with_capacity(encoded_len(&counts));
    out.extend_from_slice(&MAGIC);
    out.extend_from_slice(&VERSION.to_le_bytes());
    out.extend_from_slice(&0u16.to_le_bytes());
    out.extend_from_slice(&layer_count.to_le_bytes());
    for &c in &counts {
        let c = u32::try_from(c)
            .map_err(|_| Error::Value(format!("layer with {c} kernels exceeds the u32 limit")))?;
        out.extend_from_slice(&c.to_le_bytes());
    }
    for (i, layer) in store.layers().iter().enumerate() {
        for v in layer.iter_values() {
            if !v.is_finite() {
                return Err(Error::Value(format!(
                    "layer {i} holds non-finite weight {v}"
                )));
            }
            out.extend_from_slice(&v.to_le_bytes());
        }
    }
    Ok(out)
}

fn read_u32(bytes: &[u8], at: usize) -> Result<u32> {
    bytes
        .get(at..at + 4)
        .map(|b| u32::from_le_bytes(b.try_into().expect("4 bytes")))
        .ok_or_else(|| Error::Format(format!("truncated at byte {at}")))
}

pub fn load_weight_store(bytes: &[u8], model_name: &str) -> Result<WeightStore> {
    if bytes.len() < HEADER_LEN {
        return Err(Error::Format(format!(
            "truncated header: {} of {HEADER_LEN} bytes",
            bytes.len()
        )));
    }
    if bytes[..4] != MAGIC {
        return Err(Error::Format(format!(
            "bad magic {:02x?}, expected \"ILWP\"",
            &bytes[..4]
        )));
    }
    let version = u16::from_le_bytes([bytes[4], bytes[5]]);
    if version != VERSION {
        return Err(Error::Format(format!("unsupported version {version}")));
    }
    if bytes[6..8] != [0, 0] {
        return Err(Error::Format("reserved header field is not zero".into()));
    }
    let layer_count = read_u32(bytes, 8)? as usize;
    if layer_count == 0 {
        return Err(Error::Format("layer count is 0".into()));
    }
    let table_end = layer_count
        .checked_mul(4)
        .and_then(|n| n.checked_add(HEADER_LEN))
        .filter(|&end| end <= bytes.len())
        .ok_or_else(|| Error::Format(format!("truncated layer table for {layer_count} layers")))?;
    let counts = (0..layer_count)
        .map(|i| {
            let c = read_u32(bytes, HEADER_LEN + 4 * i)? as usize;
            if c == 0 {
                Err(Error::Format(format!("layer {i} has 0 kernels")))
            } else {
                Ok(c)
            }
        })
        .collect::<Result<Vec<_>>>()?;
    let expected = counts
        .iter()
        .try_fold(table_end, |acc, &c| {
            acc.checked_add(c.checked_mul(4 * KERNEL_LEN)?)
        })
        .ok_or_else(|| Error::Format("payload size overflows".into()))?;
    if bytes.len() < expected {
        return Err(Error::Format(format!(
            "truncated payload: {} of {expected} bytes",
            bytes.len()
        )));
    }
    if bytes.len() > expected {
        return Err(Error::Format(format!(
            "{} trailing bytes after payload",
            bytes.len() - expected
        )));
    }

    let mut at = table_end;
    let mut layers = Vec::with_capacity(layer_count);
    for (i, &c) in counts.iter().enumerate() {
        let end = at + 4 * KERNEL_LEN * c;
        let values: Vec<f32> = bytes[at..end]
            .chunks_exact(4)
            .map(|b| f32::from_le_bytes(b.try_into().expect("4 bytes")))
            .collect();
        let layer = DepthwiseLayer::from_flat(&values).map_err(|e| match e {
            Error::Value(msg) => Error::Value(format!("layer {i}: {msg}")),
            other => other,
        })?;
        layers.push(layer);
        at = end;
    }
    WeightStore::new(layers, model_name)
}

//! Encoding one store at several bit widths.

use std::collections::BTreeSet;

use ilwp_core::quantizer::check_bits;
use ilwp_core::{encode_model, Mode, Result, WeightStore};

use crate::ilw::{measure_sizes, SizeReport};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct SweepRow {
    pub bits: u8,
    pub sizes: SizeReport,
}

/// One encode per distinct bit width, rows in ascending bit order.
///
/// Widths are encoded on separate threads; each encode is independent, so
/// the rows do not depend on scheduling.
pub fn sweep_bits(store: &WeightStore, mode: Mode, bit_list: &[u8]) -> Result<Vec<SweepRow>> {
    let widths: BTreeSet<u8> = bit_list.iter().copied().collect();
    for &b in &widths {
        check_bits(b)?;
    }
    std::thread::scope(|scope| {
        let handles: Vec<_> = widths
            .iter()
            .map(|&bits| {
                scope.spawn(move || {
                    encode_model(store, mode, bits).map(|enc| SweepRow {
                        bits,
                        sizes: measure_sizes(&enc),
                    })
                })
            })
            .collect();
        handles
            .into_iter()
            .map(|h| h.join().expect("encode thread panicked"))
            .collect()
    })
}

//! File formats, size accounting, reports and the `ilwp` command-line tool.
//!
//! The codec itself lives in [`ilwp_core`]; this crate adds everything that
//! touches bytes on disk:
//!
//! - [`wgt`]: the `.wgt` weight container exchanged with training code,
//! - [`ilw`]: the `.ilw` compressed bitstream and its size breakdown,
//! - [`sweep`]: encoding one store at several bit widths,
//! - [`report`]: JSON/CSV report records,
//! - [`cli`]: argument parsing and command dispatch.

pub mod cli;
pub mod error;
pub mod ilw;
pub mod report;
pub mod sweep;
pub mod wgt;

pub use error::{Error, Result};
pub use ilw::SizeReport;

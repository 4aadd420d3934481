//! File formats, model bundles, reports and the `relgen` command line on top
//! of [`relgen_core`].

pub mod bundle;
pub mod cli;
pub mod dataio;
pub mod error;
pub mod report;

pub use error::{Error, Result};

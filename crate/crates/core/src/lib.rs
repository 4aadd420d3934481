//! Relational synthetic data with a hierarchy of conditional tabular GANs.
//!
//! One generator/critic pair is trained per table, in topological order. A
//! child table's generator is fed noise drawn from the output statistics of
//! its parents' generators, and sampling rebuilds primary and foreign keys
//! from per-relationship cardinality models so the output keeps referential
//! integrity.
//!
//! The crate is `no_std` with `alloc`; file formats and the command line live
//! in the `relgen` crate.

#![no_std]
#![deny(unsafe_code)]

extern crate alloc;
#[cfg(test)]
extern crate std;

pub mod conditioning;
pub mod dataset;
pub mod error;
pub mod fixture;
pub mod gan;
pub mod math;
pub mod metrics;
pub mod nn;
pub mod sampler;
pub mod schema;
pub mod transform;
pub mod vgmm;

pub use dataset::{check_referential_integrity, ColumnData, Provenance, RIReport, RelationalDataset, Table, Value};
pub use error::{Error, Result};
pub use fixture::{fixture_schema, generate_fixture, FixtureShape};
pub use schema::{ColumnKind, ColumnSpec, Relationship, RelationshipKind, SchemaMetadata, TableSpec};

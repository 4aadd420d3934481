use alloc::string::String;
use alloc::vec::Vec;

/// Errors raised by the core algorithms.
#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum Error {
    #[error("schema error in `{table}`: {message}")]
    Schema { table: String, message: String },
    #[error("relationship cycle detected: {}", .0.join(" -> "))]
    Cycle(Vec<String>),
    #[error("at least one relation required")]
    NoRelationships,
    #[error("unknown table `{0}`")]
    UnknownTable(String),
    #[error("invalid argument: {0}")]
    Argument(String),
    #[error("integrity error in `{table}`: {message}")]
    Integrity { table: String, message: String },
    #[error("cannot encode column `{column}`: {message}")]
    Encoding { column: String, message: String },
    #[error("cannot decode row: {0}")]
    Decode(String),
    #[error("cardinality fit failed for {parent} -> {child}: {message}")]
    Fit { parent: String, child: String, message: String },
    #[error("training diverged on table `{table}` at epoch {epoch}: {message}")]
    Divergence { table: String, epoch: usize, message: String },
    #[error("model bundle does not match schema: {0}")]
    BundleMismatch(String),
}

pub type Result<T> = core::result::Result<T, Error>;

impl Error {
    pub(crate) fn schema(table: impl Into<String>, message: impl Into<String>) -> Self {
        Error::Schema { table: table.into(), message: message.into() }
    }

    pub(crate) fn argument(message: impl Into<String>) -> Self {
        Error::Argument(message.into())
    }
}

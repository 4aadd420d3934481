//! In-memory relational datasets and referential-integrity checks.

use alloc::collections::{BTreeMap, BTreeSet};
use alloc::format;
use alloc::string::{String, ToString};
use alloc::vec::Vec;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::schema::{ColumnKind, ColumnSpec, SchemaMetadata, TableSpec};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Provenance {
    Real,
    Synthetic,
    Fixture,
}

/// One typed column. Categorical and discrete columns are stored as strings,
/// key columns as non-negative integers.
#[derive(Debug, Clone, PartialEq)]
pub enum ColumnData {
    Numerical(Vec<f64>),
    Categorical(Vec<String>),
    Key(Vec<u64>),
}

impl ColumnData {
    pub fn len(&self) -> usize {
        match self {
            ColumnData::Numerical(v) => v.len(),
            ColumnData::Categorical(v) => v.len(),
            ColumnData::Key(v) => v.len(),
        }
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn empty_for(kind: ColumnKind) -> Self {
        match kind {
            ColumnKind::Numerical => ColumnData::Numerical(Vec::new()),
            ColumnKind::Categorical | ColumnKind::Discrete => ColumnData::Categorical(Vec::new()),
            ColumnKind::PrimaryKey | ColumnKind::ForeignKey => ColumnData::Key(Vec::new()),
        }
    }

    fn matches(&self, kind: ColumnKind) -> bool {
        matches!(
            (self, kind),
            (ColumnData::Numerical(_), ColumnKind::Numerical)
                | (ColumnData::Categorical(_), ColumnKind::Categorical | ColumnKind::Discrete)
                | (ColumnData::Key(_), ColumnKind::PrimaryKey | ColumnKind::ForeignKey)
        )
    }

    fn value(&self, row: usize) -> Value {
        match self {
            ColumnData::Numerical(v) => Value::Numerical(v[row]),
            ColumnData::Categorical(v) => Value::Categorical(v[row].clone()),
            ColumnData::Key(v) => Value::Key(v[row]),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum Value {
    Numerical(f64),
    Categorical(String),
    Key(u64),
}

/// Columns of one table, in schema declaration order.
#[derive(Debug, Clone, PartialEq)]
pub struct Table {
    columns: Vec<(String, ColumnData)>,
    n_rows: usize,
}

impl Table {
    /// Pairs column data with the table spec, checking names, kinds and lengths.
    pub fn new(name: &str, spec: &TableSpec, data: Vec<ColumnData>) -> Result<Self> {
        if data.len() != spec.columns.len() {
            return Err(Error::Integrity {
                table: name.to_string(),
                message: format!("expected {} columns, got {}", spec.columns.len(), data.len()),
            });
        }
        let n_rows = data.first().map_or(0, ColumnData::len);
        let mut columns = Vec::with_capacity(data.len());
        for (col, values) in spec.columns.iter().zip(data) {
            if !values.matches(col.kind) {
                return Err(Error::Integrity {
                    table: name.to_string(),
                    message: format!("column `{}` has the wrong value type", col.name),
                });
            }
            if values.len() != n_rows {
                return Err(Error::Integrity {
                    table: name.to_string(),
                    message: format!("column `{}` has {} rows, expected {n_rows}", col.name, values.len()),
                });
            }
            if let ColumnData::Numerical(v) = &values {
                if let Some(i) = v.iter().position(|x| !x.is_finite()) {
                    return Err(Error::Integrity {
                        table: name.to_string(),
                        message: format!("non-finite value in `{}` at row {i}", col.name),
                    });
                }
            }
            columns.push((col.name.clone(), values));
        }
        let pk = spec.primary_key();
        if let Some((_, ColumnData::Key(keys))) = columns.iter().find(|(n, _)| *n == pk.name) {
            let mut seen = BTreeSet::new();
            if let Some(dup) = keys.iter().find(|k| !seen.insert(**k)) {
                return Err(Error::Integrity {
                    table: name.to_string(),
                    message: format!("duplicate primary key {dup} in `{}`", pk.name),
                });
            }
        }
        Ok(Table { columns, n_rows })
    }

    pub fn n_rows(&self) -> usize {
        self.n_rows
    }

    pub fn columns(&self) -> impl Iterator<Item = (&str, &ColumnData)> {
        self.columns.iter().map(|(n, d)| (n.as_str(), d))
    }

    pub fn column(&self, name: &str) -> Option<&ColumnData> {
        self.columns.iter().find(|(n, _)| n == name).map(|(_, d)| d)
    }

    pub fn numerical(&self, name: &str) -> Option<&[f64]> {
        match self.column(name) {
            Some(ColumnData::Numerical(v)) => Some(v),
            _ => None,
        }
    }

    pub fn categorical(&self, name: &str) -> Option<&[String]> {
        match self.column(name) {
            Some(ColumnData::Categorical(v)) => Some(v),
            _ => None,
        }
    }

    pub fn keys(&self, name: &str) -> Option<&[u64]> {
        match self.column(name) {
            Some(ColumnData::Key(v)) => Some(v),
            _ => None,
        }
    }

    /// Values of one row in column order.
    pub fn row(&self, index: usize) -> Vec<Value> {
        self.columns.iter().map(|(_, d)| d.value(index)).collect()
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct RelationalDataset {
    schema: SchemaMetadata,
    tables: BTreeMap<String, Table>,
    provenance: Provenance,
}

impl RelationalDataset {
    pub fn new(
        schema: SchemaMetadata,
        tables: BTreeMap<String, Table>,
        provenance: Provenance,
    ) -> Result<Self> {
        for (name, spec) in schema.tables() {
            let table = tables.get(name).ok_or_else(|| Error::Integrity {
                table: name.clone(),
                message: "table missing from dataset".to_string(),
            })?;
            let names: Vec<&str> = table.columns().map(|(n, _)| n).collect();
            let expected: Vec<&str> = spec.columns.iter().map(|c| c.name.as_str()).collect();
            if names != expected {
                return Err(Error::Integrity {
                    table: name.clone(),
                    message: format!("columns {names:?} do not match schema {expected:?}"),
                });
            }
        }
        if let Some(extra) = tables.keys().find(|k| !schema.tables().contains_key(*k)) {
            return Err(Error::Integrity {
                table: extra.clone(),
                message: "table not declared in schema".to_string(),
            });
        }
        Ok(RelationalDataset { schema, tables, provenance })
    }

    pub fn schema(&self) -> &SchemaMetadata {
        &self.schema
    }

    pub fn provenance(&self) -> Provenance {
        self.provenance
    }

    pub fn tables(&self) -> &BTreeMap<String, Table> {
        &self.tables
    }

    pub fn table(&self, name: &str) -> Result<&Table> {
        self.tables.get(name).ok_or_else(|| Error::UnknownTable(name.to_string()))
    }

    pub fn with_provenance(mut self, provenance: Provenance) -> Self {
        self.provenance = provenance;
        self
    }

    pub(crate) fn primary_keys(&self, table: &str) -> Result<&[u64]> {
        let spec = self.schema.table(table)?;
        let pk: &ColumnSpec = spec.primary_key();
        Ok(self.table(table)?.keys(&pk.name).unwrap_or(&[]))
    }

    /// Child rows per parent key for one relationship, zero-child parents included,
    /// in parent row order.
    pub fn child_counts(&self, relationship: &crate::schema::Relationship) -> Result<Vec<u64>> {
        let parent_keys = self.primary_keys(&relationship.parent)?;
        let fks = self
            .table(&relationship.child)?
            .keys(&relationship.foreign_key_column)
            .ok_or_else(|| Error::UnknownTable(relationship.foreign_key_column.clone()))?;
        let mut counts: BTreeMap<u64, u64> = parent_keys.iter().map(|k| (*k, 0)).collect();
        for fk in fks {
            if let Some(c) = counts.get_mut(fk) {
                *c += 1;
            }
        }
        Ok(parent_keys.iter().map(|k| counts[k]).collect())
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct DanglingKeys {
    pub child: String,
    pub foreign_key: String,
    pub count: usize,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct UncoveredParents {
    pub parent: String,
    pub count: usize,
}

/// Parent keys left without any child row in one particular relationship.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct RelationshipCoverage {
    pub parent: String,
    pub child: String,
    pub foreign_key: String,
    pub unreferenced: usize,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct RIReport {
    pub referential_integrity: bool,
    pub dangling: Vec<DanglingKeys>,
    pub uncovered_parents: Vec<UncoveredParents>,
    pub coverage: Vec<RelationshipCoverage>,
}

impl RIReport {
    /// True when every parent key is referenced in each listed relationship kind.
    pub fn fully_covered(&self, schema: &SchemaMetadata, kind: crate::schema::RelationshipKind) -> bool {
        self.coverage.iter().all(|c| {
            c.unreferenced == 0
                || !schema.relationships().iter().any(|r| {
                    r.kind == kind
                        && r.parent == c.parent
                        && r.child == c.child
                        && r.foreign_key_column == c.foreign_key
                })
        })
    }
}

pub fn check_referential_integrity(dataset: &RelationalDataset) -> RIReport {
    let schema = dataset.schema();
    let mut dangling = Vec::new();
    let mut coverage = Vec::new();
    let mut referenced: BTreeMap<&str, BTreeSet<u64>> = BTreeMap::new();

    for rel in schema.relationships() {
        let parent_keys: BTreeSet<u64> = dataset
            .primary_keys(&rel.parent)
            .map(|k| k.iter().copied().collect())
            .unwrap_or_default();
        let fks = dataset
            .table(&rel.child)
            .ok()
            .and_then(|t| t.keys(&rel.foreign_key_column))
            .unwrap_or(&[]);
        let bad = fks.iter().filter(|k| !parent_keys.contains(k)).count();
        if bad > 0 {
            dangling.push(DanglingKeys {
                child: rel.child.clone(),
                foreign_key: rel.foreign_key_column.clone(),
                count: bad,
            });
        }
        let used: BTreeSet<u64> = fks.iter().copied().filter(|k| parent_keys.contains(k)).collect();
        coverage.push(RelationshipCoverage {
            parent: rel.parent.clone(),
            child: rel.child.clone(),
            foreign_key: rel.foreign_key_column.clone(),
            unreferenced: parent_keys.len() - used.len(),
        });
        referenced.entry(rel.parent.as_str()).or_default().extend(used);
    }

    let mut uncovered_parents = Vec::new();
    for (parent, used) in &referenced {
        let total = dataset.primary_keys(parent).map_or(0, |k| k.len());
        let missing = total - used.len();
        if missing > 0 {
            uncovered_parents.push(UncoveredParents { parent: parent.to_string(), count: missing });
        }
    }

    RIReport {
        referential_integrity: dangling.is_empty(),
        dangling,
        uncovered_parents,
        coverage,
    }
}

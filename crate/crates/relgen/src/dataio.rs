//! Metadata documents and per-table CSV files.
//!
//! A dataset directory holds `metadata.json` and one `<table>.csv` per table,
//! comma separated with `\n` line ends and a header row of column names.

use std::collections::BTreeMap;
use std::fs;
use std::path::{Path, PathBuf};

use relgen_core::schema::{Relationship, TableSpec};
use relgen_core::{ColumnData, Provenance, RelationalDataset, SchemaMetadata, Table};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

pub const METADATA_FILE: &str = "metadata.json";

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct MetadataDocument {
    tables: BTreeMap<String, TableSpec>,
    #[serde(default)]
    relationships: Vec<Relationship>,
}

/// Parses a metadata document; `origin` names the source in error messages.
pub fn parse_metadata(text: &str, origin: &Path) -> Result<SchemaMetadata> {
    let doc: MetadataDocument = serde_json::from_str(text).map_err(|e| Error::json(origin, e))?;
    Ok(SchemaMetadata::new(doc.tables, doc.relationships)?)
}

pub fn serialize_metadata(schema: &SchemaMetadata) -> String {
    let doc = MetadataDocument { tables: schema.tables().clone(), relationships: schema.relationships().to_vec() };
    let mut text = serde_json::to_string_pretty(&doc).expect("metadata serializes");
    text.push('\n');
    text
}

pub fn read_metadata(path: &Path) -> Result<SchemaMetadata> {
    let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    parse_metadata(&text, path)
}

pub fn write_metadata(schema: &SchemaMetadata, path: &Path) -> Result<()> {
    fs::write(path, serialize_metadata(schema)).map_err(|e| Error::io(path, e))
}

fn table_path(dir: &Path, table: &str) -> PathBuf {
    dir.join(format!("{table}.csv"))
}

/// Loads every table of `metadata` from `<data_dir>/<table>.csv`.
pub fn load_dataset(metadata: &Path, data_dir: &Path, provenance: Provenance) -> Result<RelationalDataset> {
    let schema = read_metadata(metadata)?;
    let mut tables = BTreeMap::new();
    for (name, spec) in schema.tables() {
        let path = table_path(data_dir, name);
        let text = fs::read(&path).map_err(|e| Error::io(&path, e))?;
        tables.insert(name.clone(), read_table(name, spec, &text)?);
    }
    Ok(RelationalDataset::new(schema, tables, provenance)?)
}

/// Loads a directory holding `metadata.json` next to the table files.
pub fn load_dataset_dir(dir: &Path, provenance: Provenance) -> Result<RelationalDataset> {
    load_dataset(&dir.join(METADATA_FILE), dir, provenance)
}

/// Parses one table's CSV text against its column specs.
pub fn read_table(name: &str, spec: &TableSpec, csv_text: &[u8]) -> Result<Table> {
    let mut reader = csv::ReaderBuilder::new().has_headers(true).from_reader(csv_text);
    let header_err = |message: String| Error::Header { table: name.to_string(), message };
    let headers = reader.headers().map_err(|e| header_err(e.to_string()))?.clone();
    let names: Vec<&str> = headers.iter().collect();
    let expected: Vec<&str> = spec.columns.iter().map(|c| c.name.as_str()).collect();
    if names != expected {
        return Err(header_err(format!("header {names:?} does not match schema columns {expected:?}")));
    }
    let mut columns: Vec<ColumnData> = spec.columns.iter().map(|c| ColumnData::empty_for(c.kind)).collect();
    for (i, record) in reader.records().enumerate() {
        let row = i + 1;
        let record = record.map_err(|e| Error::Cell {
            table: name.to_string(),
            row,
            column: String::new(),
            message: e.to_string(),
        })?;
        for ((cell, col), data) in record.iter().zip(&spec.columns).zip(columns.iter_mut()) {
            let fail = |message: String| Error::Cell { table: name.to_string(), row, column: col.name.clone(), message };
            if cell.is_empty() {
                return Err(fail("missing value".to_string()));
            }
            match data {
                ColumnData::Numerical(v) => {
                    let x: f64 = cell.parse().map_err(|_| fail(format!("`{cell}` is not a number")))?;
                    if !x.is_finite() {
                        return Err(fail(format!("`{cell}` is not finite")));
                    }
                    v.push(x);
                }
                ColumnData::Key(v) => {
                    v.push(cell.parse().map_err(|_| fail(format!("`{cell}` is not a non-negative integer key")))?)
                }
                ColumnData::Categorical(v) => v.push(cell.to_string()),
            }
        }
    }
    Ok(Table::new(name, spec, columns)?)
}

/// Serializes one table as CSV text; floats use the shortest round-trip form.
pub fn write_table(spec: &TableSpec, table: &Table) -> Result<Vec<u8>> {
    let mut writer = csv::WriterBuilder::new()
        .terminator(csv::Terminator::Any(b'\n'))
        .quote_style(csv::QuoteStyle::Necessary)
        .from_writer(Vec::new());
    let to_err = |e: csv::Error| Error::Format(e.to_string());
    writer.write_record(spec.columns.iter().map(|c| c.name.as_str())).map_err(to_err)?;
    let columns: Vec<&ColumnData> = spec
        .columns
        .iter()
        .map(|c| table.column(&c.name).ok_or_else(|| Error::Format(format!("column `{}` missing", c.name))))
        .collect::<Result<_>>()?;
    let mut record = Vec::with_capacity(columns.len());
    for i in 0..table.n_rows() {
        record.clear();
        for c in &columns {
            record.push(match c {
                ColumnData::Numerical(v) => v[i].to_string(),
                ColumnData::Key(v) => v[i].to_string(),
                ColumnData::Categorical(v) => v[i].clone(),
            });
        }
        writer.write_record(&record).map_err(to_err)?;
    }
    writer.into_inner().map_err(|e| Error::Format(e.to_string()))
}

/// Writes `metadata.json` and one CSV per table into `dir`, creating it.
pub fn write_dataset(dataset: &RelationalDataset, dir: &Path) -> Result<()> {
    fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
    write_metadata(dataset.schema(), &dir.join(METADATA_FILE))?;
    for (name, spec) in dataset.schema().tables() {
        let bytes = write_table(spec, dataset.table(name)?)?;
        let path = table_path(dir, name);
        fs::write(&path, bytes).map_err(|e| Error::io(&path, e))?;
    }
    Ok(())
}

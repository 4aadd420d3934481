//! Structured (JSON) metric reports.

use std::fs;
use std::path::Path;

use relgen_core::metrics::MetricReport;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

pub const REPORT_VERSION: u32 = 1;

#[derive(Serialize, Deserialize)]
struct ReportDocument {
    version: u32,
    report: MetricReport,
}

#[derive(Deserialize)]
struct VersionProbe {
    version: Option<u32>,
}

pub fn serialize_report(report: &MetricReport) -> String {
    let doc = ReportDocument { version: REPORT_VERSION, report: report.clone() };
    let mut text = serde_json::to_string_pretty(&doc).expect("report serializes");
    text.push('\n');
    text
}

/// Parses a stored report, rejecting unknown versions and reports without runs.
pub fn parse_report(text: &str, origin: &Path) -> Result<MetricReport> {
    let probe: VersionProbe = serde_json::from_str(text).map_err(|e| Error::json(origin, e))?;
    match probe.version {
        Some(REPORT_VERSION) => {}
        Some(found) => return Err(Error::Version { what: "report", found, expected: REPORT_VERSION }),
        None => return Err(Error::Format(format!("{}: report has no version", origin.display()))),
    }
    let doc: ReportDocument = serde_json::from_str(text).map_err(|e| Error::json(origin, e))?;
    if doc.report.runs.is_empty() || doc.report.aggregate.is_empty() {
        return Err(Error::Format(format!("{}: report is empty", origin.display())));
    }
    Ok(doc.report)
}

pub fn write_report(report: &MetricReport, path: &Path) -> Result<()> {
    if let Some(parent) = path.parent().filter(|p| !p.as_os_str().is_empty()) {
        fs::create_dir_all(parent).map_err(|e| Error::io(parent, e))?;
    }
    fs::write(path, serialize_report(report)).map_err(|e| Error::io(path, e))
}

pub fn read_report(path: &Path) -> Result<MetricReport> {
    let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    parse_report(&text, path)
}

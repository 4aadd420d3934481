//! Fidelity, coverage and novelty scores between real and synthetic data.
//!
//! Every score lies in `[0, 1]`. Column scores roll up to per-table scores
//! by unweighted means, tables roll up to a dataset score per run, and runs
//! are summarised by mean and population standard deviation.

use alloc::collections::{BTreeMap, BTreeSet};
use alloc::format;
use alloc::string::{String, ToString};
use alloc::vec::Vec;
use core::fmt::{self, Write as _};

use serde::{Deserialize, Serialize};

use crate::dataset::{check_referential_integrity, ColumnData, RelationalDataset, Table};
use crate::error::{Error, Result};
use crate::schema::{ColumnKind, Relationship, TableSpec};

pub const DEFAULT_NUMERIC_TOLERANCE: f64 = 0.01;
const ABS_TOLERANCE: f64 = 1e-9;

fn non_empty<T>(values: &[T], what: &str) -> Result<()> {
    if values.is_empty() {
        Err(Error::argument(format!("{what} must not be empty")))
    } else {
        Ok(())
    }
}

fn sorted(values: &[f64]) -> Vec<f64> {
    let mut v = values.to_vec();
    v.sort_by(f64::total_cmp);
    v
}

/// `1 − sup |F_real − F_synthetic|` over the empirical CDFs.
pub fn ks_complement(real: &[f64], synthetic: &[f64]) -> Result<f64> {
    non_empty(real, "real values")?;
    non_empty(synthetic, "synthetic values")?;
    let a = sorted(real);
    let b = sorted(synthetic);
    let (n, m) = (a.len() as f64, b.len() as f64);
    let (mut i, mut j) = (0, 0);
    let mut d: f64 = 0.0;
    while i < a.len() && j < b.len() {
        let x = a[i].min(b[j]);
        while i < a.len() && a[i] <= x {
            i += 1;
        }
        while j < b.len() && b[j] <= x {
            j += 1;
        }
        d = d.max((i as f64 / n - j as f64 / m).abs());
    }
    Ok(1.0 - d)
}

fn frequencies<K: Ord + Clone>(values: impl Iterator<Item = K>) -> (BTreeMap<K, f64>, usize) {
    let mut counts: BTreeMap<K, f64> = BTreeMap::new();
    let mut n = 0;
    for v in values {
        *counts.entry(v).or_default() += 1.0;
        n += 1;
    }
    counts.values_mut().for_each(|c| *c /= n as f64);
    (counts, n)
}

fn tv_of<K: Ord + Clone>(real: BTreeMap<K, f64>, synthetic: BTreeMap<K, f64>) -> f64 {
    let keys: BTreeSet<&K> = real.keys().chain(synthetic.keys()).collect();
    let distance: f64 = keys
        .into_iter()
        .map(|k| (real.get(k).copied().unwrap_or(0.0) - synthetic.get(k).copied().unwrap_or(0.0)).abs())
        .sum();
    (1.0 - 0.5 * distance).clamp(0.0, 1.0)
}

/// `1 − ½ Σ |ω_k − ω̂_k|` over the union of categories.
pub fn tv_complement<S: AsRef<str>>(real: &[S], synthetic: &[S]) -> Result<f64> {
    non_empty(real, "real categories")?;
    non_empty(synthetic, "synthetic categories")?;
    let (r, _) = frequencies(real.iter().map(AsRef::as_ref));
    let (s, _) = frequencies(synthetic.iter().map(AsRef::as_ref));
    Ok(tv_of(r, s))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Coefficient {
    #[default]
    Pearson,
    Spearman,
}

/// Ranks starting at 1, ties sharing their average rank.
pub fn average_ranks(values: &[f64]) -> Vec<f64> {
    let mut idx: Vec<usize> = (0..values.len()).collect();
    idx.sort_by(|&a, &b| values[a].total_cmp(&values[b]));
    let mut ranks = alloc::vec![0.0; values.len()];
    let mut start = 0;
    while start < idx.len() {
        let mut end = start + 1;
        while end < idx.len() && values[idx[end]] == values[idx[start]] {
            end += 1;
        }
        let rank = (start + end + 1) as f64 / 2.0;
        for &i in &idx[start..end] {
            ranks[i] = rank;
        }
        start = end;
    }
    ranks
}

/// Pearson correlation; `None` when either column has zero variance.
pub fn pearson(x: &[f64], y: &[f64]) -> Option<f64> {
    let n = x.len() as f64;
    let mx = x.iter().sum::<f64>() / n;
    let my = y.iter().sum::<f64>() / n;
    let (mut sxy, mut sxx, mut syy) = (0.0, 0.0, 0.0);
    for (a, b) in x.iter().zip(y) {
        sxy += (a - mx) * (b - my);
        sxx += (a - mx) * (a - mx);
        syy += (b - my) * (b - my);
    }
    if sxx == 0.0 || syy == 0.0 {
        return None;
    }
    Some((sxy / libm::sqrt(sxx * syy)).clamp(-1.0, 1.0))
}

pub fn correlation(x: &[f64], y: &[f64], coefficient: Coefficient) -> Option<f64> {
    match coefficient {
        Coefficient::Pearson => pearson(x, y),
        Coefficient::Spearman => pearson(&average_ranks(x), &average_ranks(y)),
    }
}

/// `1 − |f(real) − f(synthetic)| / 2`; `None` when a coefficient is undefined.
pub fn correlation_similarity(
    real: (&[f64], &[f64]),
    synthetic: (&[f64], &[f64]),
    coefficient: Coefficient,
) -> Result<Option<f64>> {
    for (a, b) in [real, synthetic] {
        if a.len() != b.len() {
            return Err(Error::argument("paired columns differ in length"));
        }
        if a.len() < 2 {
            return Err(Error::argument("correlation needs at least two rows"));
        }
        if a.iter().chain(b).any(|v| !v.is_finite()) {
            return Err(Error::argument("correlation needs finite values"));
        }
    }
    let (Some(fr), Some(fs)) = (correlation(real.0, real.1, coefficient), correlation(synthetic.0, synthetic.1, coefficient))
    else {
        return Ok(None);
    };
    Ok(Some((1.0 - (fr - fs).abs() / 2.0).clamp(0.0, 1.0)))
}

/// `1 − ½ ΣΣ |ω_ab − ω̂_ab|` over the union of category combinations.
pub fn contingency_similarity<S: AsRef<str>>(real: (&[S], &[S]), synthetic: (&[S], &[S])) -> Result<f64> {
    for (a, b) in [real, synthetic] {
        non_empty(a, "categorical pair")?;
        if a.len() != b.len() {
            return Err(Error::argument("paired columns differ in length"));
        }
    }
    Ok(tv_of(pair_frequencies(real), pair_frequencies(synthetic)))
}

fn pair_frequencies<'a, S: AsRef<str>>((a, b): (&'a [S], &'a [S])) -> BTreeMap<(&'a str, &'a str), f64> {
    frequencies(a.iter().map(AsRef::as_ref).zip(b.iter().map(AsRef::as_ref))).0
}

/// KS complement of per-parent child counts, zero-child parents included.
pub fn cardinality_shape_similarity(
    real: &RelationalDataset,
    synthetic: &RelationalDataset,
    relationship: &Relationship,
) -> Result<f64> {
    let to_f64 = |v: Vec<u64>| v.into_iter().map(|c| c as f64).collect::<Vec<f64>>();
    let r = to_f64(real.child_counts(relationship)?);
    let s = to_f64(synthetic.child_counts(relationship)?);
    if r.is_empty() || s.is_empty() {
        return Err(Error::argument(format!("parent table `{}` is empty", relationship.parent)));
    }
    ks_complement(&r, &s)
}

/// Range coverage thresholded at 0; `None` for a constant real column.
pub fn range_coverage(real: &[f64], synthetic: &[f64]) -> Result<Option<f64>> {
    non_empty(real, "real values")?;
    non_empty(synthetic, "synthetic values")?;
    let (rmin, rmax) = min_max(real);
    let (smin, smax) = min_max(synthetic);
    let span = rmax - rmin;
    if span <= 0.0 {
        return Ok(None);
    }
    let low = ((smin - rmin) / span).max(0.0);
    let high = ((rmax - smax) / span).max(0.0);
    Ok(Some((1.0 - (low + high)).clamp(0.0, 1.0)))
}

fn min_max(values: &[f64]) -> (f64, f64) {
    values.iter().fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), v| (lo.min(*v), hi.max(*v)))
}

/// Share of the real categories that appear in the synthetic column.
pub fn category_coverage<S: AsRef<str>>(real: &[S], synthetic: &[S]) -> Result<f64> {
    non_empty(real, "real categories")?;
    let r: BTreeSet<&str> = real.iter().map(AsRef::as_ref).collect();
    let s: BTreeSet<&str> = synthetic.iter().map(AsRef::as_ref).collect();
    Ok(r.intersection(&s).count() as f64 / r.len() as f64)
}

/// Share of synthetic values inside `[min(real), max(real)]`.
pub fn boundary_adherence(real: &[f64], synthetic: &[f64]) -> Result<f64> {
    non_empty(real, "real values")?;
    non_empty(synthetic, "synthetic values")?;
    let (lo, hi) = min_max(real);
    Ok(synthetic.iter().filter(|v| **v >= lo && **v <= hi).count() as f64 / synthetic.len() as f64)
}

/// Whether a real value matches a synthetic one within `tolerance` of the
/// synthetic value (absolute floor `1e-9`).
pub fn numeric_match(real: f64, synthetic: f64, tolerance: f64) -> bool {
    (real - synthetic).abs() <= (tolerance * synthetic.abs()).max(ABS_TOLERANCE)
}

/// Share of synthetic rows with no matching real row over the data columns.
pub fn new_row_synthesis(spec: &TableSpec, real: &Table, synthetic: &Table, tolerance: f64) -> Result<f64> {
    let mut numerical: Vec<(&[f64], &[f64])> = Vec::new();
    let mut categorical: Vec<(&[String], &[String])> = Vec::new();
    for col in spec.data_columns() {
        let missing = || Error::argument(format!("column `{}` missing from a table", col.name));
        match col.kind {
            ColumnKind::Numerical => numerical.push((
                real.numerical(&col.name).ok_or_else(missing)?,
                synthetic.numerical(&col.name).ok_or_else(missing)?,
            )),
            _ => categorical.push((
                real.categorical(&col.name).ok_or_else(missing)?,
                synthetic.categorical(&col.name).ok_or_else(missing)?,
            )),
        }
    }
    if synthetic.n_rows() == 0 {
        return Ok(0.0);
    }
    // Real rows grouped by their categorical values.
    let mut groups: BTreeMap<Vec<&str>, Vec<usize>> = BTreeMap::new();
    for i in 0..real.n_rows() {
        groups.entry(categorical.iter().map(|(r, _)| r[i].as_str()).collect()).or_default().push(i);
    }
    let mut novel = 0;
    for j in 0..synthetic.n_rows() {
        let key: Vec<&str> = categorical.iter().map(|(_, s)| s[j].as_str()).collect();
        let matched = groups.get(&key).is_some_and(|rows| {
            rows.iter().any(|&i| numerical.iter().all(|(r, s)| numeric_match(r[i], s[j], tolerance)))
        });
        if !matched {
            novel += 1;
        }
    }
    Ok(novel as f64 / synthetic.n_rows() as f64)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub enum Metric {
    CS,
    CPT,
    PCR,
    RC,
    NRS,
    BA,
}

impl Metric {
    pub const ALL: [Metric; 6] = [Metric::CS, Metric::CPT, Metric::PCR, Metric::RC, Metric::NRS, Metric::BA];

    pub fn name(self) -> &'static str {
        match self {
            Metric::CS => "CS",
            Metric::CPT => "CPT",
            Metric::PCR => "PCR",
            Metric::RC => "RC",
            Metric::NRS => "NRS",
            Metric::BA => "BA",
        }
    }
}

impl fmt::Display for Metric {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EvaluationConfig {
    pub coefficient: Coefficient,
    pub numeric_tolerance: f64,
}

impl Default for EvaluationConfig {
    fn default() -> Self {
        EvaluationConfig { coefficient: Coefficient::Pearson, numeric_tolerance: DEFAULT_NUMERIC_TOLERANCE }
    }
}

/// Mean and population standard deviation across runs.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Summary {
    pub mean: f64,
    pub std: f64,
    pub runs: usize,
}

impl Summary {
    pub fn of(values: &[f64]) -> Option<Self> {
        if values.is_empty() {
            return None;
        }
        let n = values.len() as f64;
        let mean = values.iter().sum::<f64>() / n;
        let var = values.iter().map(|v| (v - mean) * (v - mean)).sum::<f64>() / n;
        Some(Summary { mean, std: libm::sqrt(var), runs: values.len() })
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RelationshipScore {
    pub parent: String,
    pub child: String,
    pub foreign_key: String,
    pub score: f64,
}

/// Scores of one synthetic run.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunScores {
    /// Per table, the metrics that apply to it (PCR excluded).
    pub tables: BTreeMap<String, BTreeMap<Metric, f64>>,
    pub relationships: Vec<RelationshipScore>,
    /// Unweighted mean over tables (over relationships for PCR).
    pub dataset: BTreeMap<Metric, f64>,
    pub referential_integrity: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MetricReport {
    pub runs: Vec<RunScores>,
    pub tables: BTreeMap<String, BTreeMap<Metric, Summary>>,
    pub aggregate: BTreeMap<Metric, Summary>,
    pub referential_integrity: bool,
    pub warnings: Vec<String>,
}

fn mean_of(values: &[f64]) -> Option<f64> {
    (!values.is_empty()).then(|| values.iter().sum::<f64>() / values.len() as f64)
}

fn table_scores(
    name: &str,
    spec: &TableSpec,
    real: &Table,
    synthetic: &Table,
    config: &EvaluationConfig,
    warnings: &mut Vec<String>,
) -> Result<BTreeMap<Metric, f64>> {
    let mut cs = Vec::new();
    let mut rc = Vec::new();
    let mut ba = Vec::new();
    let mut numerical: Vec<(&str, &[f64], &[f64])> = Vec::new();
    let mut categorical: Vec<(&str, &[String], &[String])> = Vec::new();
    let mut out = BTreeMap::new();
    if synthetic.n_rows() == 0 {
        warnings.push(format!("{name}: synthetic table is empty"));
        return Ok(out);
    }
    for col in spec.data_columns() {
        match (real.column(&col.name), synthetic.column(&col.name)) {
            (Some(ColumnData::Numerical(r)), Some(ColumnData::Numerical(s))) => numerical.push((&col.name, r, s)),
            (Some(ColumnData::Categorical(r)), Some(ColumnData::Categorical(s))) => {
                categorical.push((&col.name, r, s))
            }
            _ => return Err(Error::argument(format!("{name}.{}: column types differ", col.name))),
        }
    }
    for (col, r, s) in &numerical {
        cs.push(ks_complement(r, s)?);
        match range_coverage(r, s)? {
            Some(v) => rc.push(v),
            None => warnings.push(format!("{name}.{col}: constant real column excluded from RC")),
        }
        ba.push(boundary_adherence(r, s)?);
    }
    for (_, r, s) in &categorical {
        cs.push(tv_complement(r, s)?);
        rc.push(category_coverage(r, s)?);
    }
    let mut cpt = Vec::new();
    for (i, (ca, ra, sa)) in numerical.iter().enumerate() {
        for (cb, rb, sb) in &numerical[i + 1..] {
            if ra.len() < 2 || sa.len() < 2 {
                continue;
            }
            match correlation_similarity((ra, rb), (sa, sb), config.coefficient)? {
                Some(v) => cpt.push(v),
                None => warnings.push(format!("{name}.{ca}/{cb}: undefined correlation excluded from CPT")),
            }
        }
    }
    for (i, (_, ra, sa)) in categorical.iter().enumerate() {
        for (_, rb, sb) in &categorical[i + 1..] {
            cpt.push(contingency_similarity((ra, rb), (sa, sb))?);
        }
    }
    let nrs = new_row_synthesis(spec, real, synthetic, config.numeric_tolerance)?;
    for (metric, values) in [(Metric::CS, &cs), (Metric::CPT, &cpt), (Metric::RC, &rc), (Metric::BA, &ba)] {
        if let Some(v) = mean_of(values) {
            out.insert(metric, v);
        }
    }
    out.insert(Metric::NRS, nrs);
    Ok(out)
}

fn run_scores(
    real: &RelationalDataset,
    synthetic: &RelationalDataset,
    config: &EvaluationConfig,
    warnings: &mut Vec<String>,
) -> Result<RunScores> {
    let schema = real.schema();
    let mut tables = BTreeMap::new();
    for (name, spec) in schema.tables() {
        let scores = table_scores(name, spec, real.table(name)?, synthetic.table(name)?, config, warnings)?;
        tables.insert(name.clone(), scores);
    }
    let mut relationships = Vec::new();
    for rel in schema.relationships() {
        relationships.push(RelationshipScore {
            parent: rel.parent.clone(),
            child: rel.child.clone(),
            foreign_key: rel.foreign_key_column.clone(),
            score: cardinality_shape_similarity(real, synthetic, rel)?,
        });
    }
    let mut dataset = BTreeMap::new();
    for metric in Metric::ALL {
        let values: Vec<f64> = if metric == Metric::PCR {
            relationships.iter().map(|r| r.score).collect()
        } else {
            tables.values().filter_map(|t: &BTreeMap<Metric, f64>| t.get(&metric).copied()).collect()
        };
        if let Some(v) = mean_of(&values) {
            dataset.insert(metric, v);
        }
    }
    let referential_integrity = check_referential_integrity(synthetic).referential_integrity;
    Ok(RunScores { tables, relationships, dataset, referential_integrity })
}

/// Scores each synthetic run against the real data and aggregates across runs.
pub fn evaluate(real: &RelationalDataset, runs: &[RelationalDataset], config: &EvaluationConfig) -> Result<MetricReport> {
    if runs.is_empty() {
        return Err(Error::argument("at least one synthetic run required"));
    }
    let mut warnings = Vec::new();
    let mut scored = Vec::with_capacity(runs.len());
    for (i, run) in runs.iter().enumerate() {
        if run.schema() != real.schema() {
            return Err(Error::BundleMismatch(format!("synthetic run {i} has a different schema")));
        }
        scored.push(run_scores(real, run, config, &mut warnings)?);
    }
    warnings.sort();
    warnings.dedup();

    let mut aggregate = BTreeMap::new();
    for metric in Metric::ALL {
        let values: Vec<f64> = scored.iter().filter_map(|r| r.dataset.get(&metric).copied()).collect();
        if let Some(s) = Summary::of(&values) {
            aggregate.insert(metric, s);
        }
    }
    let mut tables = BTreeMap::new();
    for name in real.schema().tables().keys() {
        let mut per = BTreeMap::new();
        for metric in Metric::ALL {
            let values: Vec<f64> = scored.iter().filter_map(|r| r.tables[name].get(&metric).copied()).collect();
            if let Some(s) = Summary::of(&values) {
                per.insert(metric, s);
            }
        }
        tables.insert(name.clone(), per);
    }
    let referential_integrity = scored.iter().all(|r| r.referential_integrity);
    Ok(MetricReport { runs: scored, tables, aggregate, referential_integrity, warnings })
}

impl MetricReport {
    /// Plain-text table with one row per metric and a final RI row.
    pub fn render(&self) -> String {
        let mut out = String::new();
        let runs = self.runs.len();
        let _ = writeln!(out, "{:<6} {}", "Metric", if runs == 1 { "Score".to_string() } else { format!("Score (mean ± std, {runs} runs)") });
        for metric in Metric::ALL {
            match self.aggregate.get(&metric) {
                Some(s) => {
                    let _ = writeln!(out, "{:<6} {:.4} ± {:.4}", metric.name(), s.mean, s.std);
                }
                None => {
                    let _ = writeln!(out, "{:<6} n/a", metric.name());
                }
            }
        }
        let _ = writeln!(out, "{:<6} {}", "RI", if self.referential_integrity { "Yes" } else { "No" });
        out
    }
}

//! Brute-force reference implementations of the quality metrics plus a driver
//! that compares them against the library on random small instances.

#![allow(dead_code)]

use std::collections::{BTreeMap, HashMap};

use rand::Rng;
use relgen_core::metrics::{self, Coefficient};
use relgen_core::schema::{Relationship, RelationshipKind};
use relgen_core::{ColumnData, ColumnKind, ColumnSpec, Provenance, RelationalDataset, SchemaMetadata, Table, TableSpec};

pub const TOLERANCE: f64 = 1e-9;

fn cdf(values: &[f64], x: f64) -> f64 {
    values.iter().filter(|v| **v <= x).count() as f64 / values.len() as f64
}

/// Sup distance evaluated at every observed point.
pub fn ks(real: &[f64], synthetic: &[f64]) -> f64 {
    let mut sup: f64 = 0.0;
    for &x in real.iter().chain(synthetic) {
        sup = sup.max((cdf(real, x) - cdf(synthetic, x)).abs());
    }
    1.0 - sup
}

fn counts<K: std::hash::Hash + Eq + Clone>(values: impl Iterator<Item = K>) -> HashMap<K, usize> {
    let mut out = HashMap::new();
    for v in values {
        *out.entry(v).or_insert(0) += 1;
    }
    out
}

fn tv_of<K: std::hash::Hash + Eq + Clone>(r: HashMap<K, usize>, s: HashMap<K, usize>) -> f64 {
    let n: usize = r.values().sum();
    let m: usize = s.values().sum();
    let mut distance = 0.0;
    for (k, c) in &r {
        distance += (*c as f64 / n as f64 - *s.get(k).unwrap_or(&0) as f64 / m as f64).abs();
    }
    for (k, c) in &s {
        if !r.contains_key(k) {
            distance += *c as f64 / m as f64;
        }
    }
    1.0 - distance / 2.0
}

pub fn tv(real: &[String], synthetic: &[String]) -> f64 {
    tv_of(counts(real.iter().cloned()), counts(synthetic.iter().cloned()))
}

pub fn contingency(real: (&[String], &[String]), synthetic: (&[String], &[String])) -> f64 {
    let pairs = |(a, b): (&[String], &[String])| counts(a.iter().cloned().zip(b.iter().cloned()));
    tv_of(pairs(real), pairs(synthetic))
}

/// Rank by counting: smaller values plus the midpoint of the tie group.
pub fn rank(values: &[f64], i: usize) -> f64 {
    let less = values.iter().filter(|v| **v < values[i]).count() as f64;
    let equal = values.iter().filter(|v| **v == values[i]).count() as f64;
    less + (equal + 1.0) / 2.0
}

/// Raw-sum Pearson formula.
pub fn pearson(x: &[f64], y: &[f64]) -> Option<f64> {
    let n = x.len() as f64;
    let sx: f64 = x.iter().sum();
    let sy: f64 = y.iter().sum();
    let sxx: f64 = x.iter().map(|v| v * v).sum();
    let syy: f64 = y.iter().map(|v| v * v).sum();
    let sxy: f64 = x.iter().zip(y).map(|(a, b)| a * b).sum();
    let vx = n * sxx - sx * sx;
    let vy = n * syy - sy * sy;
    if vx <= 0.0 || vy <= 0.0 {
        return None;
    }
    Some(((n * sxy - sx * sy) / (vx * vy).sqrt()).clamp(-1.0, 1.0))
}

pub fn coefficient(x: &[f64], y: &[f64], c: Coefficient) -> Option<f64> {
    match c {
        Coefficient::Pearson => pearson(x, y),
        Coefficient::Spearman => {
            let rx: Vec<f64> = (0..x.len()).map(|i| rank(x, i)).collect();
            let ry: Vec<f64> = (0..y.len()).map(|i| rank(y, i)).collect();
            pearson(&rx, &ry)
        }
    }
}

pub fn correlation_similarity(real: (&[f64], &[f64]), synthetic: (&[f64], &[f64]), c: Coefficient) -> Option<f64> {
    let fr = coefficient(real.0, real.1, c)?;
    let fs = coefficient(synthetic.0, synthetic.1, c)?;
    Some(1.0 - (fr - fs).abs() / 2.0)
}

pub fn range_coverage(real: &[f64], synthetic: &[f64]) -> Option<f64> {
    let mut r = real.to_vec();
    let mut s = synthetic.to_vec();
    r.sort_by(f64::total_cmp);
    s.sort_by(f64::total_cmp);
    let (rmin, rmax) = (r[0], r[r.len() - 1]);
    let (smin, smax) = (s[0], s[s.len() - 1]);
    if rmax == rmin {
        return None;
    }
    let below = if smin > rmin { (smin - rmin) / (rmax - rmin) } else { 0.0 };
    let above = if smax < rmax { (rmax - smax) / (rmax - rmin) } else { 0.0 };
    Some((1.0 - below - above).max(0.0))
}

pub fn category_coverage(real: &[String], synthetic: &[String]) -> f64 {
    let mut unique: Vec<&String> = real.iter().collect();
    unique.sort();
    unique.dedup();
    unique.iter().filter(|c| synthetic.contains(c)).count() as f64 / unique.len() as f64
}

pub fn boundary_adherence(real: &[f64], synthetic: &[f64]) -> f64 {
    let lo = real.iter().cloned().fold(f64::INFINITY, f64::min);
    let hi = real.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    synthetic.iter().filter(|v| lo <= **v && **v <= hi).count() as f64 / synthetic.len() as f64
}

/// Rows as (numerical values, categorical values).
pub type Rows = Vec<(Vec<f64>, Vec<String>)>;

/// All-pairs scan for a matching real row.
pub fn new_row_synthesis(real: &Rows, synthetic: &Rows, tolerance: f64) -> f64 {
    let novel = synthetic
        .iter()
        .filter(|(sn, sc)| {
            !real.iter().any(|(rn, rc)| {
                rc == sc && rn.iter().zip(sn).all(|(r, s)| (r - s).abs() <= (tolerance * s.abs()).max(1e-9))
            })
        })
        .count();
    novel as f64 / synthetic.len() as f64
}

/// Per-parent child counts by scanning the foreign keys.
pub fn child_counts(parents: usize, foreign_keys: &[u64]) -> Vec<f64> {
    (0..parents as u64).map(|p| foreign_keys.iter().filter(|k| **k == p).count() as f64).collect()
}

pub fn cardinality_shape(parents: (usize, &[u64]), synthetic: (usize, &[u64])) -> f64 {
    ks(&child_counts(parents.0, parents.1), &child_counts(synthetic.0, synthetic.1))
}

/// The parent/child pair used for cardinality instances.
pub fn pair_schema() -> (SchemaMetadata, Relationship) {
    let rel = Relationship::new("parent", "child", RelationshipKind::OneToMany, "parent_id");
    let mut tables = BTreeMap::new();
    tables.insert("parent".to_string(), TableSpec::new(vec![ColumnSpec::new("id", ColumnKind::PrimaryKey)]));
    tables.insert(
        "child".to_string(),
        TableSpec::new(vec![ColumnSpec::new("id", ColumnKind::PrimaryKey), ColumnSpec::foreign_key("parent_id", "parent")]),
    );
    (SchemaMetadata::new(tables, vec![rel.clone()]).expect("valid schema"), rel)
}

pub fn pair_dataset(parents: usize, foreign_keys: &[u64]) -> RelationalDataset {
    let (schema, _) = pair_schema();
    let mut tables = BTreeMap::new();
    let parent = Table::new("parent", schema.table("parent").unwrap(), vec![ColumnData::Key((0..parents as u64).collect())]);
    let child = Table::new(
        "child",
        schema.table("child").unwrap(),
        vec![ColumnData::Key((0..foreign_keys.len() as u64).collect()), ColumnData::Key(foreign_keys.to_vec())],
    );
    tables.insert("parent".to_string(), parent.unwrap());
    tables.insert("child".to_string(), child.unwrap());
    RelationalDataset::new(schema, tables, Provenance::Real).expect("valid dataset")
}

/// A single table with `n_num` numerical and `n_cat` categorical columns.
pub fn rows_table(rows: &Rows, n_num: usize, n_cat: usize) -> (TableSpec, Table) {
    let mut columns = vec![ColumnSpec::new("id", ColumnKind::PrimaryKey)];
    columns.extend((0..n_num).map(|i| ColumnSpec::new(format!("x{i}"), ColumnKind::Numerical)));
    columns.extend((0..n_cat).map(|i| ColumnSpec::new(format!("c{i}"), ColumnKind::Categorical)));
    let spec = TableSpec::new(columns);
    let mut data = vec![ColumnData::Key((0..rows.len() as u64).collect())];
    data.extend((0..n_num).map(|i| ColumnData::Numerical(rows.iter().map(|r| r.0[i]).collect())));
    data.extend((0..n_cat).map(|i| ColumnData::Categorical(rows.iter().map(|r| r.1[i].clone()).collect())));
    let table = Table::new("t", &spec, data).expect("valid table");
    (spec, table)
}

/// Values on a quarter grid so ties are common and sums are exact.
pub fn grid_values<R: Rng>(rng: &mut R, n: usize) -> Vec<f64> {
    let spread = rng.random_range(0..=12);
    (0..n).map(|_| rng.random_range(-spread..=spread) as f64 / 4.0).collect()
}

pub fn categories<R: Rng>(rng: &mut R, n: usize) -> Vec<String> {
    let k = rng.random_range(1..=4);
    (0..n).map(|_| format!("c{}", rng.random_range(0..k))).collect()
}

fn close(name: &str, expected: f64, actual: f64, failures: &mut Vec<String>) {
    if (expected - actual).abs() > TOLERANCE {
        failures.push(format!("{name}: oracle {expected} vs library {actual}"));
    }
}

fn close_opt(name: &str, expected: Option<f64>, actual: Option<f64>, failures: &mut Vec<String>) {
    match (expected, actual) {
        (Some(e), Some(a)) => close(name, e, a, failures),
        (None, None) => {}
        _ => failures.push(format!("{name}: oracle {expected:?} vs library {actual:?}")),
    }
}

/// Draws one random instance per metric and returns every disagreement.
pub fn check_random_instance<R: Rng>(rng: &mut R) -> Vec<String> {
    let mut failures = Vec::new();
    let n = rng.random_range(1..=20);
    let m = rng.random_range(1..=20);

    let (r, s) = (grid_values(rng, n), grid_values(rng, m));
    close("KS", ks(&r, &s), metrics::ks_complement(&r, &s).unwrap(), &mut failures);
    close("BA", boundary_adherence(&r, &s), metrics::boundary_adherence(&r, &s).unwrap(), &mut failures);
    close_opt("RC", range_coverage(&r, &s), metrics::range_coverage(&r, &s).unwrap(), &mut failures);

    let (rc, sc) = (categories(rng, n), categories(rng, m));
    close("TV", tv(&rc, &sc), metrics::tv_complement(&rc, &sc).unwrap(), &mut failures);
    close("CategoryCoverage", category_coverage(&rc, &sc), metrics::category_coverage(&rc, &sc).unwrap(), &mut failures);

    let (rc2, sc2) = (categories(rng, n), categories(rng, m));
    close(
        "CPT/contingency",
        contingency((&rc, &rc2), (&sc, &sc2)),
        metrics::contingency_similarity((&rc, &rc2), (&sc, &sc2)).unwrap(),
        &mut failures,
    );

    let (n2, m2) = (n.max(2), m.max(2));
    let (ra, rb) = (grid_values(rng, n2), grid_values(rng, n2));
    let (sa, sb) = (grid_values(rng, m2), grid_values(rng, m2));
    for c in [Coefficient::Pearson, Coefficient::Spearman] {
        close_opt(
            "CPT/correlation",
            correlation_similarity((&ra, &rb), (&sa, &sb), c),
            metrics::correlation_similarity((&ra, &rb), (&sa, &sb), c).unwrap(),
            &mut failures,
        );
    }

    let parents = rng.random_range(1..=8);
    let syn_parents = rng.random_range(1..=8);
    let fks: Vec<u64> = (0..rng.random_range(0..=20)).map(|_| rng.random_range(0..parents as u64)).collect();
    let syn_fks: Vec<u64> = (0..rng.random_range(0..=20)).map(|_| rng.random_range(0..syn_parents as u64)).collect();
    let (_, rel) = pair_schema();
    close(
        "PCR",
        cardinality_shape((parents, &fks), (syn_parents, &syn_fks)),
        metrics::cardinality_shape_similarity(&pair_dataset(parents, &fks), &pair_dataset(syn_parents, &syn_fks), &rel)
            .unwrap(),
        &mut failures,
    );

    let (n_num, n_cat) = (rng.random_range(0..=2), rng.random_range(0..=2));
    let row = |rng: &mut R| (grid_values(rng, n_num), categories(rng, n_cat));
    let real_rows: Rows = (0..n).map(|_| row(rng)).collect();
    let mut syn_rows: Rows = (0..m).map(|_| row(rng)).collect();
    // Some synthetic rows copy a real row, possibly nudged within or beyond tolerance.
    for sr in syn_rows.iter_mut() {
        if rng.random_bool(0.4) {
            *sr = real_rows[rng.random_range(0..n)].clone();
            for x in sr.0.iter_mut() {
                *x *= 1.0 + rng.random_range(-0.02..0.02);
            }
        }
    }
    let (spec, real_t) = rows_table(&real_rows, n_num, n_cat);
    let (_, syn_t) = rows_table(&syn_rows, n_num, n_cat);
    close(
        "NRS",
        new_row_synthesis(&real_rows, &syn_rows, metrics::DEFAULT_NUMERIC_TOLERANCE),
        metrics::new_row_synthesis(&spec, &real_t, &syn_t, metrics::DEFAULT_NUMERIC_TOLERANCE).unwrap(),
        &mut failures,
    );
    failures
}

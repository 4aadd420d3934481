//! Hierarchical sampling of a whole database from a trained bundle.
//!
//! Root tables receive the requested row count; child row counts come from
//! per-relationship Gamma cardinality models, and foreign keys are drawn so
//! that every synthetic parent is referenced at least once.

use alloc::collections::BTreeMap;
use alloc::format;
use alloc::string::{String, ToString};
use alloc::vec;
use alloc::vec::Vec;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Gamma};
use serde::{Deserialize, Serialize};

use crate::dataset::{ColumnData, Provenance, RelationalDataset, Table, Value};
use crate::error::{Error, Result};
use crate::gan::{generate_rows, ModelBundle};
use crate::schema::{ColumnKind, Relationship, RelationshipKind};

pub const DEFAULT_MAX_RETRIES: usize = 100;

/// Children-per-parent distribution of one relationship.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CardinalityModel {
    pub parent: String,
    pub child: String,
    pub foreign_key: String,
    /// Gamma shape and scale; `None` when every parent has the same count.
    pub shape: Option<f64>,
    pub scale: Option<f64>,
    pub mean: f64,
    /// Observed counts, one per parent row.
    pub empirical: Vec<u64>,
}

impl CardinalityModel {
    /// Method-of-moments fit with the Bessel-corrected sample variance.
    pub fn from_counts(relationship: &Relationship, counts: Vec<u64>) -> Result<Self> {
        if counts.is_empty() {
            return Err(Error::Fit {
                parent: relationship.parent.clone(),
                child: relationship.child.clone(),
                message: "parent table is empty".to_string(),
            });
        }
        let n = counts.len() as f64;
        let mean = counts.iter().map(|&c| c as f64).sum::<f64>() / n;
        let var = if counts.len() > 1 {
            counts.iter().map(|&c| (c as f64 - mean) * (c as f64 - mean)).sum::<f64>() / (n - 1.0)
        } else {
            0.0
        };
        let (shape, scale) = if var > 0.0 && mean > 0.0 { (Some(mean * mean / var), Some(var / mean)) } else { (None, None) };
        Ok(CardinalityModel {
            parent: relationship.parent.clone(),
            child: relationship.child.clone(),
            foreign_key: relationship.foreign_key_column.clone(),
            shape,
            scale,
            mean,
            empirical: counts,
        })
    }

    pub fn is_degenerate(&self) -> bool {
        self.shape.is_none()
    }

    /// One parent's child count.
    pub fn draw<R: Rng + ?Sized>(&self, rng: &mut R) -> u64 {
        let (Some(k), Some(theta)) = (self.shape, self.scale) else {
            return libm::round(self.mean) as u64;
        };
        match Gamma::new(k, theta) {
            Ok(g) => libm::round(g.sample(rng)).max(0.0) as u64,
            Err(_) => self.empirical[rng.random_range(0..self.empirical.len())],
        }
    }
}

pub fn fit_cardinality(dataset: &RelationalDataset, relationship: &Relationship) -> Result<CardinalityModel> {
    if relationship.kind != RelationshipKind::OneToMany {
        return Err(Error::Fit {
            parent: relationship.parent.clone(),
            child: relationship.child.clone(),
            message: "cardinality is only modelled for one-to-many relationships".to_string(),
        });
    }
    CardinalityModel::from_counts(relationship, dataset.child_counts(relationship)?)
}

/// Total child rows for `n_parents` parents, never fewer than `n_parents`.
pub fn sample_num_foreign<R: Rng + ?Sized>(model: &CardinalityModel, n_parents: usize, rng: &mut R) -> usize {
    let total: u64 = (0..n_parents).map(|_| model.draw(rng)).sum();
    (total as usize).max(n_parents)
}

/// `num_keys` draws with replacement from `parent_ids` covering every id.
///
/// The whole sequence is redrawn until it covers all ids, at most
/// `max_retries` times; after that, repeated ids in the last draw are
/// overwritten by the missing ones.
pub fn sample_foreign_keys<R: Rng + ?Sized>(
    parent_ids: &[u64],
    num_keys: usize,
    rng: &mut R,
    max_retries: usize,
) -> Result<Vec<u64>> {
    if num_keys < parent_ids.len() {
        return Err(Error::argument(format!(
            "{num_keys} keys cannot cover {} parent ids",
            parent_ids.len()
        )));
    }
    if parent_ids.is_empty() {
        return if num_keys == 0 { Ok(Vec::new()) } else { Err(Error::argument("no parent ids to draw from")) };
    }
    let n = parent_ids.len();
    let mut picks = vec![0usize; num_keys];
    let mut counts = vec![0usize; n];
    for _ in 0..=max_retries {
        counts.iter_mut().for_each(|c| *c = 0);
        for p in picks.iter_mut() {
            *p = rng.random_range(0..n);
            counts[*p] += 1;
        }
        if counts.iter().all(|&c| c > 0) {
            return Ok(picks.iter().map(|&i| parent_ids[i]).collect());
        }
    }
    let mut cursor = 0;
    for missing in 0..n {
        if counts[missing] > 0 {
            continue;
        }
        while counts[picks[cursor]] < 2 {
            cursor += 1;
        }
        counts[picks[cursor]] -= 1;
        picks[cursor] = missing;
        counts[missing] = 1;
        cursor += 1;
    }
    Ok(picks.iter().map(|&i| parent_ids[i]).collect())
}

/// Samples every table of the bundle's schema with `n` rows per root table.
pub fn sample_database(bundle: &ModelBundle, n: usize, seed: u64) -> Result<RelationalDataset> {
    if n == 0 {
        return Err(Error::argument("row count must be positive"));
    }
    let schema = &bundle.schema;
    if schema.relationships().is_empty() {
        return Err(Error::NoRelationships);
    }
    bundle.validate()?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut row_counts: BTreeMap<String, usize> = BTreeMap::new();
    let mut tables = BTreeMap::new();

    for name in schema.topological_order()? {
        let spec = schema.table(&name)?;
        let parents = schema.parents(&name)?;
        let mut foreign: BTreeMap<&str, Vec<u64>> = BTreeMap::new();
        let num_primary = if parents.is_empty() {
            n
        } else if parents.iter().any(|r| r.kind == RelationshipKind::OneToOne) {
            let num = parents.iter().map(|r| row_counts[&r.parent]).max().unwrap_or(0);
            for rel in &parents {
                let count = row_counts[&rel.parent];
                let ids: Vec<u64> = (0..count as u64).collect();
                let keys = if count == num { ids } else { sample_foreign_keys(&ids, num, &mut rng, DEFAULT_MAX_RETRIES)? };
                foreign.insert(&rel.foreign_key_column, keys);
            }
            num
        } else {
            let mut num = 0;
            for rel in &parents {
                let model = bundle
                    .cardinality_for(&rel.parent, &rel.child, &rel.foreign_key_column)
                    .ok_or_else(|| Error::BundleMismatch(format!("no cardinality model for {} -> {}", rel.parent, name)))?;
                num = num.max(sample_num_foreign(model, row_counts[&rel.parent], &mut rng));
            }
            for rel in &parents {
                let ids: Vec<u64> = (0..row_counts[&rel.parent] as u64).collect();
                foreign.insert(&rel.foreign_key_column, sample_foreign_keys(&ids, num, &mut rng, DEFAULT_MAX_RETRIES)?);
            }
            num
        };

        let model = bundle.table(&name)?;
        let generator = model.generator(&name)?;
        let cond_width = model.transformer.cond_width();
        let (rows, _) = generate_rows(
            &generator,
            &model.noise,
            cond_width,
            num_primary,
            bundle.config.batch_size,
            bundle.config.gumbel_temperature,
            &mut rng,
            |r| model.frequencies.sample_original_condition(r),
        );
        let decoded: Vec<Vec<Value>> =
            (0..num_primary).map(|i| model.transformer.decode_generated(rows.row(i))).collect::<Result<_>>()?;

        let sources = model.transformer.source_columns();
        let mut columns = Vec::with_capacity(spec.columns.len());
        for col in &spec.columns {
            let data = match col.kind {
                ColumnKind::PrimaryKey => ColumnData::Key((0..num_primary as u64).collect()),
                ColumnKind::ForeignKey => ColumnData::Key(
                    foreign
                        .remove(col.name.as_str())
                        .ok_or_else(|| Error::BundleMismatch(format!("foreign key `{}` has no relationship", col.name)))?,
                ),
                kind => {
                    let idx = sources
                        .iter()
                        .position(|s| *s == col.name)
                        .ok_or_else(|| Error::BundleMismatch(format!("column `{}` missing from transformer", col.name)))?;
                    if kind == ColumnKind::Numerical {
                        ColumnData::Numerical(
                            decoded
                                .iter()
                                .map(|r| match &r[idx] {
                                    Value::Numerical(v) => Ok(*v),
                                    _ => Err(Error::Decode(format!("column `{}` decoded as non-numerical", col.name))),
                                })
                                .collect::<Result<_>>()?,
                        )
                    } else {
                        ColumnData::Categorical(
                            decoded
                                .iter()
                                .map(|r| match &r[idx] {
                                    Value::Categorical(v) => Ok(v.clone()),
                                    _ => Err(Error::Decode(format!("column `{}` decoded as non-categorical", col.name))),
                                })
                                .collect::<Result<_>>()?,
                        )
                    }
                }
            };
            columns.push(data);
        }
        tables.insert(name.clone(), Table::new(&name, spec, columns)?);
        row_counts.insert(name, num_primary);
    }
    RelationalDataset::new(schema.clone(), tables, Provenance::Synthetic)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn rel() -> Relationship {
        Relationship::new("p", "c", RelationshipKind::OneToMany, "p_id")
    }

    #[test]
    fn method_of_moments_hand_case() {
        let m = CardinalityModel::from_counts(&rel(), vec![1, 2, 3, 4]).unwrap();
        assert!((m.shape.unwrap() - 3.75).abs() < 1e-12);
        assert!((m.scale.unwrap() - 2.0 / 3.0).abs() < 1e-12);
        assert_eq!(m.mean, 2.5);
    }

    #[test]
    fn degenerate_model_is_constant() {
        let m = CardinalityModel::from_counts(&rel(), vec![3, 3, 3]).unwrap();
        assert!(m.is_degenerate());
        let mut rng = ChaCha8Rng::seed_from_u64(0);
        assert_eq!(sample_num_foreign(&m, 10, &mut rng), 30);
        assert!(CardinalityModel::from_counts(&rel(), vec![]).is_err());
    }

    #[test]
    fn total_never_below_parent_count() {
        let m = CardinalityModel::from_counts(&rel(), vec![0, 0, 0, 1]).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(0);
        for _ in 0..100 {
            assert!(sample_num_foreign(&m, 5, &mut rng) >= 5);
        }
    }

    #[test]
    fn foreign_key_edge_cases() {
        let mut rng = ChaCha8Rng::seed_from_u64(0);
        assert_eq!(sample_foreign_keys(&[0], 5, &mut rng, 100).unwrap(), vec![0; 5]);
        let mut p = sample_foreign_keys(&[0, 1, 2], 3, &mut rng, 100).unwrap();
        p.sort_unstable();
        assert_eq!(p, vec![0, 1, 2]);
        assert!(sample_foreign_keys(&[0, 1, 2], 2, &mut rng, 100).is_err());
    }

    #[test]
    fn repair_keeps_coverage_without_retries() {
        let ids: Vec<u64> = (0..50).collect();
        for seed in 0..20 {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let keys = sample_foreign_keys(&ids, 60, &mut rng, 0).unwrap();
            assert_eq!(keys.len(), 60);
            for id in &ids {
                assert!(keys.contains(id));
            }
        }
    }
}

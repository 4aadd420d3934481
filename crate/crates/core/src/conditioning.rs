//! Conditional vectors and training-by-sampling.
//!
//! A condition picks one categorical column uniformly and one of its categories
//! with probability proportional to `ln(1 + count)`. Real rows are then drawn
//! uniformly among the rows that satisfy it, so rare categories are seen far
//! more often than their raw frequency would allow.

use alloc::vec;
use alloc::vec::Vec;

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::transform::TableTransformer;

/// A single `(column = category)` condition with its one-hot vector and mask.
/// Tables without categorical columns use the empty condition.
#[derive(Debug, Clone, PartialEq)]
pub struct Condition {
    target: Option<ConditionTarget>,
    pub cond_vector: Vec<f64>,
    pub mask: Vec<f64>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct ConditionTarget {
    /// Index among the categorical columns (layout order).
    pub column: usize,
    pub category: usize,
    /// Offset of the column's block in the conditional vector.
    pub span_start: usize,
    pub span_width: usize,
}

impl Condition {
    pub fn empty() -> Self {
        Condition { target: None, cond_vector: Vec::new(), mask: Vec::new() }
    }

    pub fn is_empty(&self) -> bool {
        self.target.is_none()
    }

    pub fn target(&self) -> Option<ConditionTarget> {
        self.target
    }

    /// Position of the single 1 in the conditional vector.
    pub fn hot_index(&self) -> Option<usize> {
        self.target.map(|t| t.span_start + t.category)
    }
}

/// Builds `(c, m)` for column `column`, category `category` given the category
/// counts of every categorical column.
pub fn build_cond_vector(widths: &[usize], column: usize, category: usize) -> Result<(Vec<f64>, Vec<f64>)> {
    let target = target_for(widths, column, category)?;
    let mut c = vec![0.0; widths.iter().sum()];
    c[target.span_start + category] = 1.0;
    let m = c.clone();
    Ok((c, m))
}

fn target_for(widths: &[usize], column: usize, category: usize) -> Result<ConditionTarget> {
    let width = *widths
        .get(column)
        .ok_or_else(|| Error::argument(alloc::format!("condition column {column} out of range")))?;
    if category >= width {
        return Err(Error::argument(alloc::format!(
            "category {category} out of range for column {column} ({width} categories)"
        )));
    }
    let span_start = widths[..column].iter().sum();
    Ok(ConditionTarget { column, category, span_start, span_width: width })
}

/// Row buckets and sampling weights per categorical column.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrainingSampler {
    n_rows: usize,
    /// `buckets[column][category]` = rows holding that category.
    buckets: Vec<Vec<Vec<usize>>>,
    /// ln(1 + count) per category.
    log_weights: Vec<Vec<f64>>,
}

impl TrainingSampler {
    /// `category_indices[column][row]` is the category of `row` in that column.
    pub fn new(category_indices: &[Vec<usize>], widths: &[usize], n_rows: usize) -> Result<Self> {
        if category_indices.len() != widths.len() {
            return Err(Error::argument("one width per categorical column required"));
        }
        let mut buckets = Vec::with_capacity(widths.len());
        let mut log_weights = Vec::with_capacity(widths.len());
        for (rows, width) in category_indices.iter().zip(widths) {
            if rows.len() != n_rows {
                return Err(Error::argument("category index column length differs from row count"));
            }
            let mut col_buckets = vec![Vec::new(); *width];
            for (row, cat) in rows.iter().enumerate() {
                col_buckets
                    .get_mut(*cat)
                    .ok_or_else(|| Error::argument("category index out of range"))?
                    .push(row);
            }
            log_weights.push(col_buckets.iter().map(|b| libm::log1p(b.len() as f64)).collect());
            buckets.push(col_buckets);
        }
        Ok(TrainingSampler { n_rows, buckets, log_weights })
    }

    pub fn from_transformer(transformer: &TableTransformer, table: &crate::dataset::Table) -> Result<Self> {
        let indices = transformer.category_indices(table)?;
        let widths: Vec<usize> = transformer.discrete_spans().iter().map(|s| s.width).collect();
        TrainingSampler::new(&indices, &widths, table.n_rows())
    }

    pub fn n_rows(&self) -> usize {
        self.n_rows
    }

    pub fn widths(&self) -> Vec<usize> {
        self.buckets.iter().map(Vec::len).collect()
    }

    pub fn cond_width(&self) -> usize {
        self.buckets.iter().map(Vec::len).sum()
    }

    pub fn n_columns(&self) -> usize {
        self.buckets.len()
    }

    pub fn category_counts(&self, column: usize) -> Vec<usize> {
        self.buckets[column].iter().map(Vec::len).collect()
    }

    pub fn condition(&self, column: usize, category: usize) -> Result<Condition> {
        let widths = self.widths();
        let target = target_for(&widths, column, category)?;
        let (c, m) = build_cond_vector(&widths, column, category)?;
        Ok(Condition { target: Some(target), cond_vector: c, mask: m })
    }

    /// Column uniformly, then category proportional to `ln(1 + count)`.
    pub fn sample_condition<R: Rng + ?Sized>(&self, rng: &mut R) -> Condition {
        self.sample_with(rng, |col, cat| self.log_weights[col][cat])
    }

    /// Column uniformly, then category proportional to its observed count.
    pub fn sample_original_condition<R: Rng + ?Sized>(&self, rng: &mut R) -> Condition {
        self.sample_with(rng, |col, cat| self.buckets[col][cat].len() as f64)
    }

    fn sample_with<R: Rng + ?Sized>(&self, rng: &mut R, weight: impl Fn(usize, usize) -> f64) -> Condition {
        draw_condition(&self.widths(), rng, weight)
    }

    pub fn frequencies(&self) -> CategoryFrequencies {
        CategoryFrequencies { counts: self.buckets.iter().map(|c| c.iter().map(|b| b.len() as u64).collect()).collect() }
    }

    /// A row satisfying the condition, uniformly; any row for the empty condition.
    pub fn sample_matching_row<R: Rng + ?Sized>(&self, condition: &Condition, rng: &mut R) -> usize {
        match condition.target {
            Some(t) => {
                let bucket = &self.buckets[t.column][t.category];
                bucket[rng.random_range(0..bucket.len())]
            }
            None => rng.random_range(0..self.n_rows),
        }
    }
}

/// Category counts per categorical column; draws conditions without row buckets.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct CategoryFrequencies {
    pub counts: Vec<Vec<u64>>,
}

impl CategoryFrequencies {
    pub fn from_transformer(transformer: &TableTransformer) -> Self {
        let counts = transformer
            .encoders()
            .iter()
            .filter_map(|e| match e {
                crate::transform::ColumnEncoder::Discrete { frequencies, .. } => Some(frequencies.clone()),
                _ => None,
            })
            .collect();
        CategoryFrequencies { counts }
    }

    pub fn widths(&self) -> Vec<usize> {
        self.counts.iter().map(Vec::len).collect()
    }

    /// Column uniformly, then category proportional to `ln(1 + count)`.
    pub fn sample_condition<R: Rng + ?Sized>(&self, rng: &mut R) -> Condition {
        draw_condition(&self.widths(), rng, |col, cat| libm::log1p(self.counts[col][cat] as f64))
    }

    /// Column uniformly, then category proportional to its observed count.
    pub fn sample_original_condition<R: Rng + ?Sized>(&self, rng: &mut R) -> Condition {
        draw_condition(&self.widths(), rng, |col, cat| self.counts[col][cat] as f64)
    }
}

fn draw_condition<R: Rng + ?Sized>(widths: &[usize], rng: &mut R, weight: impl Fn(usize, usize) -> f64) -> Condition {
    if widths.is_empty() {
        return Condition::empty();
    }
    let column = rng.random_range(0..widths.len());
    let n_cat = widths[column];
    let total: f64 = (0..n_cat).map(|k| weight(column, k)).sum();
    let mut u = rng.random::<f64>() * total;
    let mut category = n_cat - 1;
    for k in 0..n_cat {
        let w = weight(column, k);
        if u < w {
            category = k;
            break;
        }
        u -= w;
    }
    let target = target_for(widths, column, category).expect("sampled indices are in range");
    let (c, m) = build_cond_vector(widths, column, category).expect("sampled indices are in range");
    Condition { target: Some(target), cond_vector: c, mask: m }
}

/// Cross-entropy between the condition's one-hot and the generated
/// distribution over the conditioned column.
///
/// `discrete_block` is the generated categorical part of a row, laid out like the
/// conditional vector. The span is renormalised before taking the log.
pub fn cond_penalty(discrete_block: &[f64], condition: &Condition) -> f64 {
    let Some(t) = condition.target else {
        return 0.0;
    };
    let span = &discrete_block[t.span_start..t.span_start + t.span_width];
    let total: f64 = span.iter().sum();
    let p = span[t.category] / total;
    if p >= 1.0 {
        return 0.0;
    }
    -libm::log(p.max(1e-12))
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn worked_example_vector() {
        // D1 = {-2, 3, 4}, D2 = {cat, dog}; condition D2 = cat.
        let (c, m) = build_cond_vector(&[3, 2], 1, 0).unwrap();
        assert_eq!(c, vec![0.0, 0.0, 0.0, 1.0, 0.0]);
        assert_eq!(m, c);
    }

    #[test]
    fn first_and_last_positions() {
        assert_eq!(build_cond_vector(&[2, 3], 0, 0).unwrap().0[0], 1.0);
        assert_eq!(*build_cond_vector(&[2, 3], 1, 2).unwrap().0.last().unwrap(), 1.0);
        assert!(build_cond_vector(&[2, 3], 2, 0).is_err());
        assert!(build_cond_vector(&[2, 3], 0, 2).is_err());
    }

    #[test]
    fn single_category_always_chosen() {
        let s = TrainingSampler::new(&[vec![0, 0, 0]], &[1], 3).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        for _ in 0..100 {
            assert_eq!(s.sample_condition(&mut rng).hot_index(), Some(0));
        }
    }

    #[test]
    fn no_categorical_columns_gives_empty_condition() {
        let s = TrainingSampler::new(&[], &[], 5).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let c = s.sample_condition(&mut rng);
        assert!(c.is_empty() && c.cond_vector.is_empty());
        assert_eq!(cond_penalty(&[], &c), 0.0);
        assert!(s.sample_matching_row(&c, &mut rng) < 5);
    }

    #[test]
    fn matching_rows_satisfy_condition() {
        let s = TrainingSampler::new(&[vec![0, 1, 0, 1, 1]], &[2], 5).unwrap();
        let c = s.condition(0, 1).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(2);
        for _ in 0..1000 {
            assert!([1, 3, 4].contains(&s.sample_matching_row(&c, &mut rng)));
        }
    }

    #[test]
    fn penalty_values() {
        let s = TrainingSampler::new(&[vec![0, 1]], &[2], 2).unwrap();
        let c = s.condition(0, 1).unwrap();
        assert_eq!(cond_penalty(&[0.0, 1.0], &c), 0.0);
        assert!((cond_penalty(&[0.5, 0.5], &c) - core::f64::consts::LN_2).abs() < 1e-15);
        // un-normalised spans are rescaled first
        assert!((cond_penalty(&[1.0, 1.0], &c) - core::f64::consts::LN_2).abs() < 1e-15);
    }
}

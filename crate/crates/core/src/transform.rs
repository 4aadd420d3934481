//! Mode-specific normalization of numerical columns and one-hot encoding of
//! categorical columns.
//!
//! A row is represented as `α₁ ⊕ β₁ ⊕ … ⊕ α_N ⊕ β_N ⊕ d₁ ⊕ … ⊕ d_M`: every
//! numerical column contributes a scalar plus a one-hot mode indicator, every
//! categorical column a one-hot category vector. Numerical columns come first,
//! each group in schema declaration order.

use alloc::collections::BTreeMap;
use alloc::format;
use alloc::string::{String, ToString};
use alloc::vec;
use alloc::vec::Vec;

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::dataset::{ColumnData, Table, Value};
use crate::error::{Error, Result};
use crate::schema::{ColumnKind, TableSpec};
use crate::vgmm::{fit_variational_mixture, MixtureConfig};

pub const DEFAULT_MAX_MODES: usize = 10;
/// Mixture components below this weight are dropped after fitting.
pub const MODE_WEIGHT_THRESHOLD: f64 = 0.005;
/// Lower bound on mode standard deviations.
pub const STD_FLOOR: f64 = 1e-6;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Mode {
    pub weight: f64,
    pub mean: f64,
    pub std: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ModeNormalizer {
    modes: Vec<Mode>,
}

/// `alpha` is the mode-normalised scalar, `beta` the one-hot mode indicator.
#[derive(Debug, Clone, PartialEq)]
pub struct EncodedValue {
    pub alpha: f64,
    pub beta: Vec<f64>,
}

impl EncodedValue {
    /// Index of the selected mode (argmax, first on ties).
    pub fn mode(&self) -> usize {
        argmax(&self.beta)
    }
}

impl ModeNormalizer {
    pub fn from_modes(modes: Vec<Mode>) -> Result<Self> {
        if modes.is_empty() {
            return Err(Error::argument("a normalizer needs at least one mode"));
        }
        let total: f64 = modes.iter().map(|m| m.weight).sum();
        if (total - 1.0).abs() > 1e-9 || modes.iter().any(|m| m.std.is_nan() || m.std <= 0.0 || m.weight < 0.0) {
            return Err(Error::argument("mode weights must sum to 1 and stds be positive"));
        }
        Ok(ModeNormalizer { modes })
    }

    /// Fits a variational mixture with up to `max_modes` components and keeps the
    /// components whose weight clears [`MODE_WEIGHT_THRESHOLD`].
    pub fn fit(values: &[f64], max_modes: usize) -> Result<Self> {
        if values.is_empty() {
            return Err(Error::argument("cannot fit a normalizer on an empty column"));
        }
        if max_modes == 0 {
            return Err(Error::argument("max_modes must be positive"));
        }
        let first = values[0];
        if values.iter().all(|v| *v == first) {
            return Ok(ModeNormalizer { modes: vec![Mode { weight: 1.0, mean: first, std: STD_FLOOR }] });
        }
        let config = MixtureConfig { max_components: max_modes, ..MixtureConfig::default() };
        let fitted = fit_variational_mixture(values, &config);
        let mut modes: Vec<Mode> = (0..fitted.weights.len())
            .filter(|c| fitted.weights[*c] > MODE_WEIGHT_THRESHOLD)
            .map(|c| Mode {
                weight: fitted.weights[c],
                mean: fitted.means[c],
                std: fitted.stds[c].max(STD_FLOOR),
            })
            .collect();
        if modes.is_empty() {
            let best = argmax(&fitted.weights);
            modes.push(Mode { weight: 1.0, mean: fitted.means[best], std: fitted.stds[best].max(STD_FLOOR) });
        }
        let total: f64 = modes.iter().map(|m| m.weight).sum();
        modes.iter_mut().for_each(|m| m.weight /= total);
        Ok(ModeNormalizer { modes })
    }

    pub fn modes(&self) -> &[Mode] {
        &self.modes
    }

    pub fn n_modes(&self) -> usize {
        self.modes.len()
    }

    /// ρₖ / Σρ with ρₖ = 𝒩(x; ηₖ, φₖ)·μₖ. When every density underflows, all
    /// mass goes to the mode nearest in standardised distance.
    pub fn mode_probabilities(&self, x: f64) -> Vec<f64> {
        let mut rho: Vec<f64> = self
            .modes
            .iter()
            .map(|m| libm::exp(crate::math::normal_log_pdf(x, m.mean, m.std)) * m.weight)
            .collect();
        let total: f64 = rho.iter().sum();
        if total > 0.0 && total.is_finite() {
            rho.iter_mut().for_each(|r| *r /= total);
        } else {
            let nearest = self.nearest_mode(x);
            rho.iter_mut().enumerate().for_each(|(k, r)| *r = if k == nearest { 1.0 } else { 0.0 });
        }
        rho
    }

    fn nearest_mode(&self, x: f64) -> usize {
        let mut best = 0;
        let mut best_d = f64::INFINITY;
        for (k, m) in self.modes.iter().enumerate() {
            let d = (x - m.mean).abs() / m.std;
            if d < best_d {
                best_d = d;
                best = k;
            }
        }
        best
    }

    pub fn sample_mode<R: Rng + ?Sized>(&self, x: f64, rng: &mut R) -> usize {
        let probs = self.mode_probabilities(x);
        let mut u: f64 = rng.random();
        for (k, p) in probs.iter().enumerate() {
            if u < *p {
                return k;
            }
            u -= p;
        }
        // Rounding left a sliver of mass; take the last mode that had any.
        probs.iter().rposition(|p| *p > 0.0).unwrap_or(0)
    }

    pub fn encode<R: Rng + ?Sized>(&self, x: f64, rng: &mut R) -> EncodedValue {
        let k = self.sample_mode(x, rng);
        self.encode_with_mode(x, k)
    }

    pub fn encode_with_mode(&self, x: f64, mode: usize) -> EncodedValue {
        let m = &self.modes[mode];
        let mut beta = vec![0.0; self.modes.len()];
        beta[mode] = 1.0;
        EncodedValue { alpha: (x - m.mean) / (4.0 * m.std), beta }
    }

    /// α·4φₖ + ηₖ for the argmax mode of `beta`.
    pub fn decode(&self, ev: &EncodedValue) -> f64 {
        self.decode_parts(ev.alpha, &ev.beta)
    }

    fn decode_parts(&self, alpha: f64, beta: &[f64]) -> f64 {
        let m = &self.modes[argmax(beta)];
        alpha * 4.0 * m.std + m.mean
    }
}

pub fn fit_mode_normalizer(values: &[f64], max_modes: usize) -> Result<ModeNormalizer> {
    ModeNormalizer::fit(values, max_modes)
}

pub fn encode_numerical<R: Rng + ?Sized>(x: f64, normalizer: &ModeNormalizer, rng: &mut R) -> EncodedValue {
    normalizer.encode(x, rng)
}

pub fn decode_numerical(ev: &EncodedValue, normalizer: &ModeNormalizer) -> f64 {
    normalizer.decode(ev)
}

pub(crate) fn argmax(values: &[f64]) -> usize {
    let mut best = 0;
    for (i, v) in values.iter().enumerate() {
        if *v > values[best] {
            best = i;
        }
    }
    best
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "snake_case")]
pub enum ColumnEncoder {
    Numerical { name: String, normalizer: ModeNormalizer },
    Discrete { name: String, categories: Vec<String>, frequencies: Vec<u64> },
}

impl ColumnEncoder {
    pub fn name(&self) -> &str {
        match self {
            ColumnEncoder::Numerical { name, .. } | ColumnEncoder::Discrete { name, .. } => name,
        }
    }

    fn width(&self) -> usize {
        match self {
            ColumnEncoder::Numerical { normalizer, .. } => 1 + normalizer.n_modes(),
            ColumnEncoder::Discrete { categories, .. } => categories.len(),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Activation {
    Tanh,
    Softmax,
}

/// A contiguous range of the encoded row and the activation the generator applies.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct OutputSpan {
    pub start: usize,
    pub width: usize,
    pub activation: Activation,
}

impl OutputSpan {
    pub fn range(&self) -> core::ops::Range<usize> {
        self.start..self.start + self.width
    }
}

/// One categorical column's one-hot block: where it sits in the encoded row and
/// in the conditional vector.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct DiscreteSpan {
    pub row_start: usize,
    pub cond_start: usize,
    pub width: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TableTransformer {
    /// Data columns in schema declaration order.
    source_columns: Vec<String>,
    /// Encoders in row-layout order (numerical first).
    encoders: Vec<ColumnEncoder>,
}

impl TableTransformer {
    pub fn fit(spec: &TableSpec, table: &Table, max_modes: usize) -> Result<Self> {
        let mut numerical = Vec::new();
        let mut discrete = Vec::new();
        let mut source_columns = Vec::new();
        for col in spec.data_columns() {
            source_columns.push(col.name.clone());
            match col.kind {
                ColumnKind::Numerical => {
                    let values = table.numerical(&col.name).ok_or_else(|| Error::Encoding {
                        column: col.name.clone(),
                        message: "missing numerical data".to_string(),
                    })?;
                    let normalizer = ModeNormalizer::fit(values, max_modes).map_err(|e| Error::Encoding {
                        column: col.name.clone(),
                        message: format!("{e}"),
                    })?;
                    numerical.push(ColumnEncoder::Numerical { name: col.name.clone(), normalizer });
                }
                _ => {
                    let values = table.categorical(&col.name).ok_or_else(|| Error::Encoding {
                        column: col.name.clone(),
                        message: "missing categorical data".to_string(),
                    })?;
                    let mut counts: BTreeMap<&str, u64> = BTreeMap::new();
                    for v in values {
                        *counts.entry(v.as_str()).or_default() += 1;
                    }
                    if counts.is_empty() {
                        return Err(Error::Encoding {
                            column: col.name.clone(),
                            message: "no categories observed".to_string(),
                        });
                    }
                    discrete.push(ColumnEncoder::Discrete {
                        name: col.name.clone(),
                        categories: counts.keys().map(|k| k.to_string()).collect(),
                        frequencies: counts.values().copied().collect(),
                    });
                }
            }
        }
        numerical.extend(discrete);
        Ok(TableTransformer { source_columns, encoders: numerical })
    }

    pub fn from_parts(source_columns: Vec<String>, encoders: Vec<ColumnEncoder>) -> Self {
        TableTransformer { source_columns, encoders }
    }

    pub fn encoders(&self) -> &[ColumnEncoder] {
        &self.encoders
    }

    pub fn source_columns(&self) -> &[String] {
        &self.source_columns
    }

    pub fn width(&self) -> usize {
        self.encoders.iter().map(ColumnEncoder::width).sum()
    }

    pub fn spans(&self) -> Vec<OutputSpan> {
        let mut spans = Vec::new();
        let mut start = 0;
        for enc in &self.encoders {
            match enc {
                ColumnEncoder::Numerical { normalizer, .. } => {
                    spans.push(OutputSpan { start, width: 1, activation: Activation::Tanh });
                    spans.push(OutputSpan { start: start + 1, width: normalizer.n_modes(), activation: Activation::Softmax });
                }
                ColumnEncoder::Discrete { categories, .. } => {
                    spans.push(OutputSpan { start, width: categories.len(), activation: Activation::Softmax });
                }
            }
            start += enc.width();
        }
        spans
    }

    pub fn discrete_spans(&self) -> Vec<DiscreteSpan> {
        let mut out = Vec::new();
        let mut row = 0;
        let mut cond = 0;
        for enc in &self.encoders {
            if let ColumnEncoder::Discrete { categories, .. } = enc {
                out.push(DiscreteSpan { row_start: row, cond_start: cond, width: categories.len() });
                cond += categories.len();
            }
            row += enc.width();
        }
        out
    }

    /// Σ |Dᵢ|, the conditional-vector width.
    pub fn cond_width(&self) -> usize {
        self.discrete_spans().iter().map(|s| s.width).sum()
    }

    /// Encoder positions in source column order.
    fn encoder_for_source(&self) -> Vec<usize> {
        self.source_columns
            .iter()
            .map(|name| self.encoders.iter().position(|e| e.name() == name).expect("encoder per column"))
            .collect()
    }

    /// Encodes one row of data values given in source column order.
    pub fn encode_row<R: Rng + ?Sized>(&self, row: &[Value], rng: &mut R) -> Result<Vec<f64>> {
        self.encode_row_inner(row, |_, n, x, rng| n.encode(x, rng), rng)
    }

    /// Encodes with fixed mode choices (one per numerical column, layout order).
    pub fn encode_row_with_modes(&self, row: &[Value], modes: &[usize]) -> Result<Vec<f64>> {
        let mut it = modes.iter();
        self.encode_row_inner(
            row,
            |_, n, x, _| n.encode_with_mode(x, *it.next().expect("one mode per numerical column")),
            &mut NoRng,
        )
    }

    fn encode_row_inner<R: Rng + ?Sized>(
        &self,
        row: &[Value],
        mut encode_num: impl FnMut(usize, &ModeNormalizer, f64, &mut R) -> EncodedValue,
        rng: &mut R,
    ) -> Result<Vec<f64>> {
        if row.len() != self.source_columns.len() {
            return Err(Error::Encoding {
                column: String::new(),
                message: format!("row has {} values, expected {}", row.len(), self.source_columns.len()),
            });
        }
        // Values re-ordered into layout order.
        let mut by_encoder: Vec<Option<&Value>> = vec![None; self.encoders.len()];
        for (src, enc) in self.encoder_for_source().into_iter().enumerate() {
            by_encoder[enc] = Some(&row[src]);
        }
        let mut out = Vec::with_capacity(self.width());
        for (i, (enc, value)) in self.encoders.iter().zip(by_encoder).enumerate() {
            let value = value.expect("every encoder has a source");
            match (enc, value) {
                (ColumnEncoder::Numerical { normalizer, .. }, Value::Numerical(x)) => {
                    let ev = encode_num(i, normalizer, *x, rng);
                    out.push(ev.alpha);
                    out.extend_from_slice(&ev.beta);
                }
                (ColumnEncoder::Discrete { name, categories, .. }, Value::Categorical(c)) => {
                    let idx = categories.binary_search(c).map_err(|_| Error::Encoding {
                        column: name.clone(),
                        message: format!("unseen category `{c}`"),
                    })?;
                    out.extend((0..categories.len()).map(|k| if k == idx { 1.0 } else { 0.0 }));
                }
                (enc, _) => {
                    return Err(Error::Encoding {
                        column: enc.name().to_string(),
                        message: "value type does not match column".to_string(),
                    })
                }
            }
        }
        Ok(out)
    }

    /// Inverse of [`encode_row`](Self::encode_row): argmax over every one-hot
    /// span. Returns values in source column order.
    pub fn decode_row(&self, vector: &[f64]) -> Result<Vec<Value>> {
        self.decode_row_inner(vector, false)
    }

    /// Like [`decode_row`](Self::decode_row) but with α clipped to [−1, 1], as
    /// used for generator output.
    pub fn decode_generated(&self, vector: &[f64]) -> Result<Vec<Value>> {
        self.decode_row_inner(vector, true)
    }

    fn decode_row_inner(&self, vector: &[f64], clip: bool) -> Result<Vec<Value>> {
        if vector.len() != self.width() {
            return Err(Error::Decode(format!("vector has width {}, expected {}", vector.len(), self.width())));
        }
        if vector.iter().any(|v| !v.is_finite()) {
            return Err(Error::Decode("non-finite entry".to_string()));
        }
        let mut decoded = Vec::with_capacity(self.encoders.len());
        let mut start = 0;
        for enc in &self.encoders {
            let w = enc.width();
            let span = &vector[start..start + w];
            decoded.push(match enc {
                ColumnEncoder::Numerical { normalizer, .. } => {
                    let alpha = if clip { span[0].clamp(-1.0, 1.0) } else { span[0] };
                    Value::Numerical(normalizer.decode_parts(alpha, &span[1..]))
                }
                ColumnEncoder::Discrete { categories, .. } => Value::Categorical(categories[argmax(span)].clone()),
            });
            start += w;
        }
        Ok(self.encoder_for_source().into_iter().map(|e| decoded[e].clone()).collect())
    }

    /// Encodes every row of a table into a row-major matrix of `width()` columns.
    pub fn encode_table<R: Rng + ?Sized>(&self, table: &Table, rng: &mut R) -> Result<Vec<f64>> {
        let columns: Vec<&ColumnData> = self
            .source_columns
            .iter()
            .map(|n| {
                table.column(n).ok_or_else(|| Error::Encoding {
                    column: n.clone(),
                    message: "column missing from table".to_string(),
                })
            })
            .collect::<Result<_>>()?;
        let mut out = Vec::with_capacity(table.n_rows() * self.width());
        for i in 0..table.n_rows() {
            let row: Vec<Value> = columns
                .iter()
                .map(|c| match c {
                    ColumnData::Numerical(v) => Value::Numerical(v[i]),
                    ColumnData::Categorical(v) => Value::Categorical(v[i].clone()),
                    ColumnData::Key(v) => Value::Key(v[i]),
                })
                .collect();
            out.extend(self.encode_row(&row, rng)?);
        }
        Ok(out)
    }

    /// Category index per row for each categorical column (layout order).
    pub fn category_indices(&self, table: &Table) -> Result<Vec<Vec<usize>>> {
        self.encoders
            .iter()
            .filter_map(|e| match e {
                ColumnEncoder::Discrete { name, categories, .. } => Some((name, categories)),
                _ => None,
            })
            .map(|(name, categories)| {
                let values = table.categorical(name).ok_or_else(|| Error::Encoding {
                    column: name.clone(),
                    message: "column missing from table".to_string(),
                })?;
                values
                    .iter()
                    .map(|v| {
                        categories.binary_search(v).map_err(|_| Error::Encoding {
                            column: name.clone(),
                            message: format!("unseen category `{v}`"),
                        })
                    })
                    .collect()
            })
            .collect()
    }
}

/// Stand-in random source for encodings whose modes are fixed up front.
struct NoRng;

impl rand::RngCore for NoRng {
    fn next_u32(&mut self) -> u32 {
        unreachable!("fixed-mode encoding draws no randomness")
    }
    fn next_u64(&mut self) -> u64 {
        unreachable!("fixed-mode encoding draws no randomness")
    }
    fn fill_bytes(&mut self, _: &mut [u8]) {
        unreachable!("fixed-mode encoding draws no randomness")
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::schema::ColumnSpec;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn single(mean: f64, std: f64) -> ModeNormalizer {
        ModeNormalizer::from_modes(vec![Mode { weight: 1.0, mean, std }]).unwrap()
    }

    #[test]
    fn constant_column_is_one_mode() {
        let n = ModeNormalizer::fit(&[5.0, 5.0, 5.0, 5.0], 10).unwrap();
        assert_eq!(n.n_modes(), 1);
        assert_eq!(n.modes()[0].mean, 5.0);
        assert_eq!(n.modes()[0].std, STD_FLOOR);
    }

    #[test]
    fn empty_column_rejected() {
        assert!(ModeNormalizer::fit(&[], 10).is_err());
    }

    #[test]
    fn alpha_at_mean_and_four_sigma() {
        let mut rng = ChaCha8Rng::seed_from_u64(0);
        let n = single(3.0, 0.5);
        let ev = n.encode(3.0, &mut rng);
        assert_eq!(ev.alpha, 0.0);
        assert_eq!(ev.beta, vec![1.0]);
        assert_eq!(n.encode(3.0 + 4.0 * 0.5, &mut rng).alpha, 1.0);
    }

    #[test]
    fn decode_examples() {
        assert_eq!(single(5.0, 1.0).decode(&EncodedValue { alpha: 0.0, beta: vec![1.0] }), 5.0);
        assert_eq!(single(0.0, 0.25).decode(&EncodedValue { alpha: 1.0, beta: vec![1.0] }), 1.0);
    }

    #[test]
    fn decode_takes_argmax_of_relaxed_beta() {
        let n = ModeNormalizer::from_modes(vec![
            Mode { weight: 0.5, mean: 0.0, std: 1.0 },
            Mode { weight: 0.5, mean: 10.0, std: 1.0 },
        ])
        .unwrap();
        assert_eq!(n.decode(&EncodedValue { alpha: 0.0, beta: vec![0.3, 0.7] }), 10.0);
    }

    #[test]
    fn underflow_falls_back_to_nearest() {
        let n = ModeNormalizer::from_modes(vec![
            Mode { weight: 0.5, mean: 0.0, std: 1e-3 },
            Mode { weight: 0.5, mean: 10.0, std: 1e-3 },
        ])
        .unwrap();
        assert_eq!(n.mode_probabilities(9.0), vec![0.0, 1.0]);
    }

    #[test]
    fn far_value_selects_its_mode() {
        let n = ModeNormalizer::from_modes(vec![
            Mode { weight: 0.5, mean: 0.0, std: 1.0 },
            Mode { weight: 0.5, mean: 10.0, std: 1.0 },
        ])
        .unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(4);
        let hits = (0..10_000).filter(|_| n.encode(9.0, &mut rng).mode() == 1).count();
        assert!(hits as f64 / 1e4 >= 0.99);
    }

    fn transformer() -> TableTransformer {
        TableTransformer::from_parts(
            vec!["pet".into(), "x".into()],
            vec![
                ColumnEncoder::Numerical {
                    name: "x".into(),
                    normalizer: ModeNormalizer::from_modes(vec![
                        Mode { weight: 0.5, mean: 0.0, std: 1.0 },
                        Mode { weight: 0.5, mean: 10.0, std: 1.0 },
                    ])
                    .unwrap(),
                },
                ColumnEncoder::Discrete {
                    name: "pet".into(),
                    categories: vec!["bird".into(), "cat".into(), "dog".into()],
                    frequencies: vec![1, 1, 1],
                },
            ],
        )
    }

    #[test]
    fn width_and_layout() {
        let t = transformer();
        assert_eq!(t.width(), 6);
        let spans = t.spans();
        assert_eq!(spans.len(), 3);
        assert_eq!(spans[0], OutputSpan { start: 0, width: 1, activation: Activation::Tanh });
        assert_eq!(spans[2], OutputSpan { start: 3, width: 3, activation: Activation::Softmax });
        assert_eq!(t.discrete_spans(), vec![DiscreteSpan { row_start: 3, cond_start: 0, width: 3 }]);
    }

    #[test]
    fn hand_built_vectors_decode_per_span() {
        let t = transformer();
        let row = t.decode_row(&[0.25, 0.1, 0.9, 0.2, 0.1, 0.7]).unwrap();
        assert_eq!(row, vec![Value::Categorical("dog".into()), Value::Numerical(11.0)]);
        let zero = t.decode_row(&[0.0; 6]).unwrap();
        assert_eq!(zero, vec![Value::Categorical("bird".into()), Value::Numerical(0.0)]);
        assert!(t.decode_row(&[f64::NAN, 0.0, 0.0, 0.0, 0.0, 0.0]).is_err());
        assert!(t.decode_row(&[0.0; 5]).is_err());
    }

    #[test]
    fn generated_alpha_is_clipped() {
        let t = transformer();
        let row = t.decode_generated(&[3.0, 1.0, 0.0, 1.0, 0.0, 0.0]).unwrap();
        assert_eq!(row[1], Value::Numerical(4.0));
    }

    #[test]
    fn unseen_category_is_an_error() {
        let t = transformer();
        let mut rng = ChaCha8Rng::seed_from_u64(0);
        let err = t.encode_row(&[Value::Categorical("fish".into()), Value::Numerical(1.0)], &mut rng).unwrap_err();
        assert!(matches!(err, Error::Encoding { ref column, .. } if column == "pet"));
    }

    #[test]
    fn all_discrete_row_is_concatenated_one_hots() {
        let spec = TableSpec::new(vec![
            ColumnSpec::new("id", ColumnKind::PrimaryKey),
            ColumnSpec::new("a", ColumnKind::Categorical),
            ColumnSpec::new("b", ColumnKind::Discrete),
        ]);
        let table = Table::new(
            "t",
            &spec,
            vec![
                ColumnData::Key(vec![0, 1]),
                ColumnData::Categorical(vec!["x".into(), "y".into()]),
                ColumnData::Categorical(vec!["1".into(), "1".into()]),
            ],
        )
        .unwrap();
        let t = TableTransformer::fit(&spec, &table, 10).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(0);
        let v = t.encode_row(&[Value::Categorical("y".into()), Value::Categorical("1".into())], &mut rng).unwrap();
        assert_eq!(v, vec![0.0, 1.0, 1.0]);
    }
}

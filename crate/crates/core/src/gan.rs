//! Per-table conditional WGAN-GP training over a relational schema.
//!
//! Tables are visited in topological order every epoch. After a table's pass
//! its generator produces a fresh batch whose column-wise mean and standard
//! deviation become the noise distribution of its children's generators.

use alloc::collections::BTreeMap;
use alloc::format;
use alloc::string::{String, ToString};
use alloc::vec;
use alloc::vec::Vec;

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use crate::conditioning::{CategoryFrequencies, Condition, TrainingSampler};
use crate::dataset::RelationalDataset;
use crate::error::{Error, Result};
use crate::nn::{
    activate, activation_backward, gumbel_noise, Adam, AdamConfig, Critic, CriticSpec, Generator, GeneratorSpec,
    Matrix,
};
use crate::sampler::{fit_cardinality, CardinalityModel};
use crate::schema::{RelationshipKind, SchemaMetadata};
use crate::transform::{DiscreteSpan, TableTransformer, STD_FLOOR};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct TrainingConfig {
    pub epochs: usize,
    pub batch_size: usize,
    pub learning_rate: f64,
    pub beta1: f64,
    pub beta2: f64,
    pub weight_decay: f64,
    pub gradient_penalty: f64,
    pub critic_steps: usize,
    pub gumbel_temperature: f64,
    pub pac: usize,
    pub generator_dims: Vec<usize>,
    pub critic_dims: Vec<usize>,
    /// Noise width for tables without parents.
    pub noise_width: usize,
    pub leaky_slope: f64,
    pub dropout: f64,
    pub max_modes: usize,
    /// Rows generated to refresh a table's parent statistics.
    pub stats_batch: usize,
    pub seed: u64,
}

impl Default for TrainingConfig {
    fn default() -> Self {
        TrainingConfig {
            epochs: 50,
            batch_size: 500,
            learning_rate: 2e-4,
            beta1: 0.5,
            beta2: 0.9,
            weight_decay: 1e-6,
            gradient_penalty: 10.0,
            critic_steps: 1,
            gumbel_temperature: 0.2,
            pac: 10,
            generator_dims: vec![256, 256],
            critic_dims: vec![256, 256],
            noise_width: 128,
            leaky_slope: 0.2,
            dropout: 0.5,
            max_modes: crate::transform::DEFAULT_MAX_MODES,
            stats_batch: 500,
            seed: 0,
        }
    }
}

impl TrainingConfig {
    pub fn validate(&self) -> Result<()> {
        let fail = |m: &str| Err(Error::argument(m));
        if self.epochs == 0 || self.batch_size == 0 || self.critic_steps == 0 {
            return fail("epochs, batch_size and critic_steps must be positive");
        }
        if self.pac == 0 || !self.batch_size.is_multiple_of(self.pac) {
            return fail("batch_size must be a positive multiple of pac");
        }
        let rates = [self.learning_rate, self.beta1, self.beta2, self.gumbel_temperature, self.leaky_slope];
        if rates.iter().any(|r| !(r.is_finite() && *r > 0.0)) || self.beta1 >= 1.0 || self.beta2 >= 1.0 {
            return fail("learning rate, betas, temperature and slope must be positive (betas below 1)");
        }
        if !(self.weight_decay >= 0.0 && self.gradient_penalty >= 0.0) {
            return fail("weight decay and gradient penalty must be non-negative");
        }
        if !(0.0..1.0).contains(&self.dropout) {
            return fail("dropout must lie in [0, 1)");
        }
        if self.noise_width == 0 || self.max_modes == 0 || self.stats_batch < 2 {
            return fail("noise_width and max_modes must be positive, stats_batch at least 2");
        }
        Ok(())
    }

    fn adam(&self) -> AdamConfig {
        AdamConfig {
            learning_rate: self.learning_rate,
            beta1: self.beta1,
            beta2: self.beta2,
            eps: 1e-8,
            weight_decay: self.weight_decay,
        }
    }
}

/// Generator and critic shapes for one table.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct NetworkSpec {
    pub generator: GeneratorSpec,
    pub critic: CriticSpec,
    pub pac: usize,
}

impl NetworkSpec {
    pub fn new(transformer: &TableTransformer, noise_width: usize, config: &TrainingConfig) -> Self {
        let cond = transformer.cond_width();
        let width = transformer.width();
        NetworkSpec {
            generator: GeneratorSpec {
                input_width: noise_width + cond,
                hidden: config.generator_dims.clone(),
                spans: transformer.spans(),
                output_width: width,
            },
            critic: CriticSpec {
                input_width: (width + cond) * config.pac,
                hidden: config.critic_dims.clone(),
                leaky_slope: config.leaky_slope,
                dropout: config.dropout,
            },
            pac: config.pac,
        }
    }
}

/// Column-wise statistics of a table's generated (encoded) rows.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ParentStats {
    pub means: Vec<f64>,
    pub stds: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ParentNoise {
    pub table: String,
    pub stats: ParentStats,
}

/// Noise distribution of a table's generator: standard normal of
/// `default_width` for roots, otherwise one Gaussian per encoded parent column.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ParentNoiseSpec {
    pub parents: Vec<ParentNoise>,
    pub default_width: usize,
}

impl ParentNoiseSpec {
    pub fn root(width: usize) -> Self {
        ParentNoiseSpec { parents: Vec::new(), default_width: width }
    }

    pub fn width(&self) -> usize {
        if self.parents.is_empty() {
            self.default_width
        } else {
            self.parents.iter().map(|p| p.stats.means.len()).sum()
        }
    }
}

pub fn sample_parent_noise<R: Rng + ?Sized>(spec: &ParentNoiseSpec, batch: usize, rng: &mut R) -> Matrix {
    let width = spec.width();
    let mut z = Matrix::zeros(batch, width);
    if spec.parents.is_empty() {
        z.data.iter_mut().for_each(|v| *v = rng.sample(StandardNormal));
        return z;
    }
    for i in 0..batch {
        let row = z.row_mut(i);
        let mut j = 0;
        for p in &spec.parents {
            for (m, s) in p.stats.means.iter().zip(&p.stats.stds) {
                let e: f64 = rng.sample(StandardNormal);
                row[j] = m + s * e;
                j += 1;
            }
        }
    }
    z
}

/// Column-wise mean and Bessel-corrected standard deviation, floored.
pub fn compute_parent_stats(batch: &Matrix) -> Result<ParentStats> {
    let n = batch.rows;
    if n < 2 {
        return Err(Error::argument("parent statistics need at least two rows"));
    }
    let mut means = vec![0.0; batch.cols];
    for i in 0..n {
        means.iter_mut().zip(batch.row(i)).for_each(|(m, v)| *m += v);
    }
    means.iter_mut().for_each(|m| *m /= n as f64);
    let mut var = vec![0.0; batch.cols];
    for i in 0..n {
        for ((s, v), m) in var.iter_mut().zip(batch.row(i)).zip(&means) {
            *s += (v - m) * (v - m);
        }
    }
    let stds = var.iter().map(|s| libm::sqrt(s / (n - 1) as f64).max(STD_FLOOR)).collect();
    Ok(ParentStats { means, stds })
}

/// Groups `pac` consecutive rows into one critic sample.
pub fn pack(rows: Matrix, pac: usize) -> Matrix {
    assert_eq!(rows.rows % pac, 0, "batch not divisible by pac");
    let width = rows.cols * pac;
    rows.reshaped(width)
}

fn mean(v: &[f64]) -> f64 {
    v.iter().sum::<f64>() / v.len() as f64
}

/// `E[C(fake)] − E[C(real)]` on packed batches.
pub fn critic_loss(critic: &Critic, real: &Matrix, fake: &Matrix, masks: &[Matrix]) -> f64 {
    mean(&critic.forward(fake, masks).0) - mean(&critic.forward(real, masks).0)
}

/// `−E[C(fake)] + cond_penalty` on a packed batch.
pub fn generator_loss(critic: &Critic, fake: &Matrix, cond_penalty: f64, masks: &[Matrix]) -> f64 {
    -mean(&critic.forward(fake, masks).0) + cond_penalty
}

/// Interpolates packed samples with one uniform weight per sample.
fn interpolate<R: Rng + ?Sized>(real: &Matrix, fake: &Matrix, rng: &mut R) -> Matrix {
    let mut out = Matrix::zeros(real.rows, real.cols);
    for i in 0..real.rows {
        let u: f64 = rng.random();
        for ((o, r), f) in out.row_mut(i).iter_mut().zip(real.row(i)).zip(fake.row(i)) {
            *o = u * r + (1.0 - u) * f;
        }
    }
    out
}

/// `E[(‖∇C(x̂)‖ − 1)²]` with `x̂` between packed real and fake samples.
pub fn gradient_penalty<R: Rng + ?Sized>(critic: &Critic, real: &Matrix, fake: &Matrix, rng: &mut R) -> f64 {
    let x_hat = interpolate(real, fake, rng);
    let masks = critic.sample_masks(x_hat.rows, rng);
    critic.penalty(&x_hat, &masks)
}

fn cond_matrix(conditions: &[Condition], width: usize) -> Matrix {
    let mut c = Matrix::zeros(conditions.len(), width);
    for (i, cond) in conditions.iter().enumerate() {
        if let Some(k) = cond.hot_index() {
            c.data[i * width + k] = 1.0;
        }
    }
    c
}

/// Generates `n` activated rows in full batches of `batch` (batch statistics
/// in normalisation layers), truncating the surplus of the last batch.
#[allow(clippy::too_many_arguments)]
pub fn generate_rows<R: Rng + ?Sized>(
    generator: &Generator,
    noise: &ParentNoiseSpec,
    cond_width: usize,
    n: usize,
    batch: usize,
    tau: f64,
    rng: &mut R,
    mut draw: impl FnMut(&mut R) -> Condition,
) -> (Matrix, Vec<Condition>) {
    let width = generator.spec().output_width;
    let mut out = Vec::with_capacity(n * width);
    let mut conditions = Vec::with_capacity(n);
    let mut remaining = n;
    while remaining > 0 {
        let conds: Vec<Condition> = (0..batch).map(|_| draw(rng)).collect();
        let z = sample_parent_noise(noise, batch, rng);
        let input = z.hcat(&cond_matrix(&conds, cond_width));
        let rows = generator.generate(&input, tau, rng);
        let take = remaining.min(batch);
        out.extend_from_slice(&rows.data[..take * width]);
        conditions.extend(conds.into_iter().take(take));
        remaining -= take;
    }
    (Matrix::from_vec(n, width, out), conditions)
}

/// Everything sampling needs for one table.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TableModel {
    pub transformer: TableTransformer,
    pub frequencies: CategoryFrequencies,
    pub noise: ParentNoiseSpec,
    pub network: NetworkSpec,
    /// Generator parameters; stored outside the structured manifest.
    #[serde(skip)]
    pub params: Vec<f64>,
}

impl TableModel {
    pub fn generator(&self, table: &str) -> Result<Generator> {
        Generator::from_params(self.network.generator.clone(), self.params.clone())
            .ok_or_else(|| Error::BundleMismatch(format!("parameter count mismatch for table `{table}`")))
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ModelBundle {
    pub schema: SchemaMetadata,
    pub config: TrainingConfig,
    pub tables: BTreeMap<String, TableModel>,
    pub cardinality: Vec<CardinalityModel>,
}

impl ModelBundle {
    pub fn table(&self, name: &str) -> Result<&TableModel> {
        self.tables.get(name).ok_or_else(|| Error::BundleMismatch(format!("no model for table `{name}`")))
    }

    pub fn cardinality_for(&self, parent: &str, child: &str, foreign_key: &str) -> Option<&CardinalityModel> {
        self.cardinality
            .iter()
            .find(|c| c.parent == parent && c.child == child && c.foreign_key == foreign_key)
    }

    /// Checks that the bundle covers the schema and every parameter vector fits its network.
    pub fn validate(&self) -> Result<()> {
        for name in self.schema.table_names() {
            let model = self.table(name)?;
            model.generator(name)?;
            let parents = parent_tables(&self.schema, name)?;
            let noise: Vec<&str> = model.noise.parents.iter().map(|p| p.table.as_str()).collect();
            if noise != parents {
                return Err(Error::BundleMismatch(format!("parent noise of `{name}` does not match schema")));
            }
        }
        if let Some(extra) = self.tables.keys().find(|k| self.schema.table(k).is_err()) {
            return Err(Error::BundleMismatch(format!("model for undeclared table `{extra}`")));
        }
        for rel in self.schema.relationships() {
            if rel.kind == RelationshipKind::OneToMany
                && self.cardinality_for(&rel.parent, &rel.child, &rel.foreign_key_column).is_none()
            {
                return Err(Error::BundleMismatch(format!(
                    "no cardinality model for {} -> {}",
                    rel.parent, rel.child
                )));
            }
        }
        Ok(())
    }
}

/// Share of generated rows whose conditioned column takes the conditioned
/// category, with conditions drawn from the observed category frequencies.
/// `None` for tables without categorical columns.
pub fn condition_compliance(bundle: &ModelBundle, table: &str, n: usize, seed: u64) -> Result<Option<f64>> {
    let model = bundle.table(table)?;
    let spans = model.transformer.discrete_spans();
    if spans.is_empty() || n == 0 {
        return Ok(None);
    }
    let generator = model.generator(table)?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let (rows, conds) = generate_rows(
        &generator,
        &model.noise,
        model.transformer.cond_width(),
        n,
        bundle.config.batch_size,
        bundle.config.gumbel_temperature,
        &mut rng,
        |r| model.frequencies.sample_original_condition(r),
    );
    let hits = conds
        .iter()
        .enumerate()
        .filter(|(i, c)| {
            c.target().is_some_and(|t| {
                let span = spans[t.column];
                let row = rows.row(*i);
                crate::transform::argmax(&row[span.row_start..span.row_start + span.width]) == t.category
            })
        })
        .count();
    Ok(Some(hits as f64 / n as f64))
}

/// Distinct parent tables in lexicographic order.
pub(crate) fn parent_tables<'a>(schema: &'a SchemaMetadata, table: &str) -> Result<Vec<&'a str>> {
    let mut parents: Vec<&str> = schema.parents(table)?.iter().map(|r| r.parent.as_str()).collect();
    parents.dedup();
    Ok(parents)
}

/// Losses of one table's pass over an epoch (averaged over steps).
#[derive(Debug, Clone, PartialEq)]
pub struct EpochLog {
    pub table: String,
    pub epoch: usize,
    pub critic_loss: f64,
    pub gradient_penalty: f64,
    pub generator_loss: f64,
    pub cond_loss: f64,
}

pub enum TrainingEvent<'a> {
    Epoch(&'a EpochLog),
    /// A table's statistics were refreshed; `version` counts refreshes.
    ParentStats { table: &'a str, epoch: usize, version: usize, stats: &'a ParentStats },
    /// A table is about to train with noise built from these parent versions.
    NoiseSpec { table: &'a str, epoch: usize, versions: &'a [(String, usize)], spec: &'a ParentNoiseSpec },
}

pub trait TrainingObserver {
    fn observe(&mut self, event: TrainingEvent<'_>);
}

impl TrainingObserver for () {
    fn observe(&mut self, _: TrainingEvent<'_>) {}
}

impl<F: FnMut(TrainingEvent<'_>)> TrainingObserver for F {
    fn observe(&mut self, event: TrainingEvent<'_>) {
        self(event)
    }
}

struct TableState {
    name: String,
    transformer: TableTransformer,
    discrete: Vec<DiscreteSpan>,
    sampler: TrainingSampler,
    data: Vec<f64>,
    network: NetworkSpec,
    generator: Generator,
    critic: Critic,
    g_opt: Adam,
    c_opt: Adam,
    noise: ParentNoiseSpec,
}

impl TableState {
    fn width(&self) -> usize {
        self.network.generator.output_width
    }

    fn cond_width(&self) -> usize {
        self.sampler.cond_width()
    }

    fn inputs<R: Rng + ?Sized>(&self, n: usize, rng: &mut R) -> (Vec<Condition>, Matrix, Matrix) {
        let conds: Vec<Condition> = (0..n).map(|_| self.sampler.sample_condition(rng)).collect();
        let c = cond_matrix(&conds, self.cond_width());
        let z = sample_parent_noise(&self.noise, n, rng);
        let input = z.hcat(&c);
        (conds, c, input)
    }

    fn critic_step<R: Rng + ?Sized>(&mut self, config: &TrainingConfig, rng: &mut R) -> (f64, f64) {
        let n = config.batch_size;
        let tau = config.gumbel_temperature;
        let (conds, c, input) = self.inputs(n, rng);
        let fake = self.generator.generate(&input, tau, rng).hcat(&c);

        let mut perm: Vec<usize> = (0..n).collect();
        perm.shuffle(rng);
        let width = self.width();
        let cw = self.cond_width();
        let mut real = Matrix::zeros(n, width + cw);
        for (i, &p) in perm.iter().enumerate() {
            let row = self.sampler.sample_matching_row(&conds[p], rng);
            let dst = real.row_mut(i);
            dst[..width].copy_from_slice(&self.data[row * width..(row + 1) * width]);
            dst[width..].copy_from_slice(c.row(p));
        }

        let fake = pack(fake, config.pac);
        let real = pack(real, config.pac);
        let m = fake.rows;
        let mut grads = vec![0.0; self.critic.params().len()];
        let masks = self.critic.sample_masks(m, rng);
        let (fake_scores, fake_cache) = self.critic.forward(&fake, &masks);
        let masks = self.critic.sample_masks(m, rng);
        let (real_scores, real_cache) = self.critic.forward(&real, &masks);
        let loss = mean(&fake_scores) - mean(&real_scores);
        self.critic.backward(&fake_cache, &vec![1.0 / m as f64; m], &mut grads, false);
        self.critic.backward(&real_cache, &vec![-1.0 / m as f64; m], &mut grads, false);

        let x_hat = interpolate(&real, &fake, rng);
        let masks = self.critic.sample_masks(m, rng);
        let penalty = self.critic.gradient_penalty(&x_hat, &masks, config.gradient_penalty, &mut grads);
        self.c_opt.step(self.critic.params_mut(), &grads);
        (loss, penalty)
    }

    fn generator_step<R: Rng + ?Sized>(&mut self, config: &TrainingConfig, rng: &mut R) -> (f64, f64) {
        let n = config.batch_size;
        let tau = config.gumbel_temperature;
        let spans = &self.network.generator.spans;
        let (conds, c, input) = self.inputs(n, rng);
        let (logits, cache) = self.generator.forward(&input);
        let noise = gumbel_noise(n, spans, rng);
        let act = activate(&logits, spans, tau, Some(&noise));
        let fake = pack(act.hcat(&c), config.pac);
        let m = fake.rows;
        let masks = self.critic.sample_masks(m, rng);
        let (scores, critic_cache) = self.critic.forward(&fake, &masks);
        let adversarial = -mean(&scores);
        let mut scratch = vec![0.0; self.critic.params().len()];
        let d_packed = self
            .critic
            .backward(&critic_cache, &vec![-1.0 / m as f64; m], &mut scratch, true)
            .expect("input gradient requested");
        let width = self.width();
        let d_act = d_packed.reshaped(width + self.cond_width()).columns(0, width);
        let mut d_logits = activation_backward(&act, spans, tau, &d_act);

        let mut cross_entropy = 0.0;
        for (i, cond) in conds.iter().enumerate() {
            let Some(t) = cond.target() else { continue };
            let span = self.discrete[t.column];
            let row = logits.row(i);
            let l = &row[span.row_start..span.row_start + span.width];
            let max = l.iter().copied().fold(f64::NEG_INFINITY, f64::max);
            let total: f64 = l.iter().map(|v| libm::exp(v - max)).sum();
            let log_z = max + libm::log(total);
            cross_entropy += log_z - l[t.category];
            let d = d_logits.row_mut(i);
            for (k, v) in l.iter().enumerate() {
                let p = libm::exp(v - log_z);
                let target = if k == t.category { 1.0 } else { 0.0 };
                d[span.row_start + k] += (p - target) / n as f64;
            }
        }
        let cond_loss = cross_entropy / n as f64;
        let grads = self.generator.backward(&cache, &d_logits);
        self.g_opt.step(self.generator.params_mut(), &grads);
        (adversarial + cond_loss, cond_loss)
    }

    fn fresh_stats<R: Rng + ?Sized>(&self, config: &TrainingConfig, rng: &mut R) -> Result<ParentStats> {
        let freq = self.sampler.frequencies();
        let (rows, _) = generate_rows(
            &self.generator,
            &self.noise,
            self.cond_width(),
            config.stats_batch,
            config.stats_batch,
            config.gumbel_temperature,
            rng,
            |r| freq.sample_original_condition(r),
        );
        compute_parent_stats(&rows)
    }
}

pub fn train(dataset: &RelationalDataset, config: &TrainingConfig) -> Result<ModelBundle> {
    train_with_observer(dataset, config, &mut ())
}

pub fn train_with_observer(
    dataset: &RelationalDataset,
    config: &TrainingConfig,
    observer: &mut dyn TrainingObserver,
) -> Result<ModelBundle> {
    config.validate()?;
    let schema = dataset.schema();
    if schema.relationships().is_empty() {
        return Err(Error::NoRelationships);
    }
    let order = schema.topological_order()?;
    let mut rng = ChaCha8Rng::seed_from_u64(config.seed);

    let mut cardinality = Vec::new();
    for rel in schema.relationships() {
        if rel.kind == RelationshipKind::OneToMany {
            cardinality.push(fit_cardinality(dataset, rel)?);
        }
    }

    let mut stats: BTreeMap<String, (ParentStats, usize)> = BTreeMap::new();
    let mut states: Vec<TableState> = Vec::with_capacity(order.len());
    for name in &order {
        let spec = schema.table(name)?;
        let table = dataset.table(name)?;
        if table.n_rows() == 0 {
            return Err(Error::argument(format!("table `{name}` has no rows")));
        }
        let transformer = TableTransformer::fit(spec, table, config.max_modes)?;
        let sampler = TrainingSampler::from_transformer(&transformer, table)?;
        let data = transformer.encode_table(table, &mut rng)?;
        let parents = parent_tables(schema, name)?;
        // Widths of parent encodings are known before any statistics exist.
        let noise_width = if parents.is_empty() {
            config.noise_width
        } else {
            parents
                .iter()
                .map(|p| states.iter().find(|s| s.name == *p).map(|s| s.width()).expect("parents first"))
                .sum()
        };
        let network = NetworkSpec::new(&transformer, noise_width, config);
        let generator = Generator::new(network.generator.clone(), &mut rng);
        let critic = Critic::new(network.critic.clone(), &mut rng);
        let g_opt = Adam::new(config.adam(), generator.params().len());
        let c_opt = Adam::new(config.adam(), critic.params().len());
        states.push(TableState {
            name: name.clone(),
            discrete: transformer.discrete_spans(),
            transformer,
            sampler,
            data,
            network,
            generator,
            critic,
            g_opt,
            c_opt,
            noise: ParentNoiseSpec::root(config.noise_width),
        });
    }

    for epoch in 0..config.epochs {
        for idx in 0..states.len() {
            let parents = parent_tables(schema, &states[idx].name)?;
            if !parents.is_empty() {
                let mut versions = Vec::with_capacity(parents.len());
                let mut noise = Vec::with_capacity(parents.len());
                for p in parents {
                    let (s, v) = &stats[p];
                    versions.push((p.to_string(), *v));
                    noise.push(ParentNoise { table: p.to_string(), stats: s.clone() });
                }
                states[idx].noise = ParentNoiseSpec { parents: noise, default_width: config.noise_width };
                observer.observe(TrainingEvent::NoiseSpec {
                    table: &states[idx].name,
                    epoch,
                    versions: &versions,
                    spec: &states[idx].noise,
                });
            }

            let state = &mut states[idx];
            let steps = (state.sampler.n_rows() / config.batch_size).max(1);
            let mut log = EpochLog {
                table: state.name.clone(),
                epoch,
                critic_loss: 0.0,
                gradient_penalty: 0.0,
                generator_loss: 0.0,
                cond_loss: 0.0,
            };
            for _ in 0..steps {
                for _ in 0..config.critic_steps {
                    let (loss, penalty) = state.critic_step(config, &mut rng);
                    if !(loss.is_finite() && penalty.is_finite()) {
                        return Err(divergence(&state.name, epoch, "critic loss"));
                    }
                    log.critic_loss += loss / (steps * config.critic_steps) as f64;
                    log.gradient_penalty += penalty / (steps * config.critic_steps) as f64;
                }
                let (loss, cond) = state.generator_step(config, &mut rng);
                if !loss.is_finite() {
                    return Err(divergence(&state.name, epoch, "generator loss"));
                }
                log.generator_loss += loss / steps as f64;
                log.cond_loss += cond / steps as f64;
            }
            observer.observe(TrainingEvent::Epoch(&log));

            let fresh = state.fresh_stats(config, &mut rng)?;
            if fresh.means.iter().chain(&fresh.stds).any(|v| !v.is_finite()) {
                return Err(divergence(&state.name, epoch, "generated rows"));
            }
            let version = stats.get(&state.name).map_or(0, |(_, v)| v + 1);
            observer.observe(TrainingEvent::ParentStats { table: &state.name, epoch, version, stats: &fresh });
            stats.insert(state.name.clone(), (fresh, version));
        }
    }

    let tables = states
        .into_iter()
        .map(|s| {
            let model = TableModel {
                frequencies: s.sampler.frequencies(),
                transformer: s.transformer,
                noise: s.noise,
                network: s.network,
                params: s.generator.params().to_vec(),
            };
            (s.name, model)
        })
        .collect();
    Ok(ModelBundle { schema: schema.clone(), config: config.clone(), tables, cardinality })
}

fn divergence(table: &str, epoch: usize, what: &str) -> Error {
    Error::Divergence { table: table.to_string(), epoch, message: format!("non-finite {what}") }
}

//! Command-line entry point.
//!
//! Exit codes: 0 success, 2 usage or validation error, 3 runtime failure
//! (training divergence, failed integrity check, output I/O).

use std::ffi::OsString;
use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand, ValueEnum};
use rayon::prelude::*;
use relgen_core::gan::{self, TrainingConfig, TrainingEvent};
use relgen_core::metrics::{self, Coefficient, EvaluationConfig};
use relgen_core::{check_referential_integrity, generate_fixture, sampler, FixtureShape, Provenance};

use crate::bundle::{load_bundle, save_bundle};
use crate::dataio::{load_dataset_dir, write_dataset};
use crate::error::Error;
use crate::report::{read_report, write_report};

pub const EXIT_OK: i32 = 0;
pub const EXIT_USAGE: i32 = 2;
pub const EXIT_RUNTIME: i32 = 3;

/// Environment variable capping the worker threads used by `evaluate`.
pub const THREADS_ENV: &str = "RELGEN_NUM_THREADS";

#[derive(Debug, Parser)]
#[command(name = "relgen", version, args_override_self = true, about = "Relational synthetic data with hierarchical conditional GANs")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Write a deterministic fixture dataset.
    Fixture(FixtureArgs),
    /// Train a model bundle on a dataset directory.
    Train(TrainArgs),
    /// Sample a synthetic dataset from a model bundle.
    Sample(SampleArgs),
    /// Score synthetic runs against the real dataset.
    Evaluate(EvaluateArgs),
    /// Render a stored report as a plain-text table.
    Report(ReportArgs),
}

#[derive(Debug, Args)]
pub struct FixtureArgs {
    /// university, hepatitis or pyrimidine
    #[arg(long)]
    pub shape: FixtureShape,
    /// Rows per root table.
    #[arg(long, default_value_t = 100)]
    pub n: usize,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    #[arg(long)]
    pub out: PathBuf,
}

/// Overrides for [`TrainingConfig`] fields; flags win over `--config`.
#[derive(Debug, Default, Args)]
pub struct TrainOverrides {
    #[arg(long)]
    pub epochs: Option<usize>,
    #[arg(long)]
    pub batch_size: Option<usize>,
    #[arg(long)]
    pub learning_rate: Option<f64>,
    #[arg(long)]
    pub beta1: Option<f64>,
    #[arg(long)]
    pub beta2: Option<f64>,
    #[arg(long)]
    pub weight_decay: Option<f64>,
    #[arg(long)]
    pub gradient_penalty: Option<f64>,
    #[arg(long)]
    pub critic_steps: Option<usize>,
    #[arg(long)]
    pub gumbel_temperature: Option<f64>,
    #[arg(long)]
    pub pac: Option<usize>,
    #[arg(long, value_delimiter = ',')]
    pub generator_dims: Option<Vec<usize>>,
    #[arg(long, value_delimiter = ',')]
    pub critic_dims: Option<Vec<usize>>,
    #[arg(long)]
    pub noise_width: Option<usize>,
    #[arg(long)]
    pub leaky_slope: Option<f64>,
    #[arg(long)]
    pub dropout: Option<f64>,
    #[arg(long)]
    pub max_modes: Option<usize>,
    #[arg(long)]
    pub stats_batch: Option<usize>,
    #[arg(long)]
    pub seed: Option<u64>,
}

impl TrainOverrides {
    pub fn apply(&self, config: &mut TrainingConfig) {
        fn set<T: Clone>(slot: &mut T, value: &Option<T>) {
            if let Some(v) = value {
                *slot = v.clone();
            }
        }
        set(&mut config.epochs, &self.epochs);
        set(&mut config.batch_size, &self.batch_size);
        set(&mut config.learning_rate, &self.learning_rate);
        set(&mut config.beta1, &self.beta1);
        set(&mut config.beta2, &self.beta2);
        set(&mut config.weight_decay, &self.weight_decay);
        set(&mut config.gradient_penalty, &self.gradient_penalty);
        set(&mut config.critic_steps, &self.critic_steps);
        set(&mut config.gumbel_temperature, &self.gumbel_temperature);
        set(&mut config.pac, &self.pac);
        set(&mut config.generator_dims, &self.generator_dims);
        set(&mut config.critic_dims, &self.critic_dims);
        set(&mut config.noise_width, &self.noise_width);
        set(&mut config.leaky_slope, &self.leaky_slope);
        set(&mut config.dropout, &self.dropout);
        set(&mut config.max_modes, &self.max_modes);
        set(&mut config.stats_batch, &self.stats_batch);
        set(&mut config.seed, &self.seed);
    }
}

#[derive(Debug, Args)]
pub struct TrainArgs {
    /// Dataset directory with metadata.json and one CSV per table.
    #[arg(long)]
    pub data: PathBuf,
    /// Bundle directory to write.
    #[arg(long)]
    pub out: PathBuf,
    /// JSON file with training config fields.
    #[arg(long)]
    pub config: Option<PathBuf>,
    #[command(flatten)]
    pub overrides: TrainOverrides,
}

#[derive(Debug, Args)]
pub struct SampleArgs {
    #[arg(long)]
    pub model: PathBuf,
    /// Rows per root table.
    #[arg(long)]
    pub n: usize,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    #[arg(long)]
    pub out: PathBuf,
}

#[derive(Debug, Clone, Copy, ValueEnum)]
pub enum CoefficientArg {
    Pearson,
    Spearman,
}

#[derive(Debug, Args)]
pub struct EvaluateArgs {
    /// Real dataset directory.
    #[arg(long)]
    pub real: PathBuf,
    /// Synthetic dataset directories, one per run.
    #[arg(long, num_args = 1.., conflicts_with = "model")]
    pub synthetic: Vec<PathBuf>,
    /// Bundle to sample runs from, one per seed in `--seeds`.
    #[arg(long, requires = "seeds")]
    pub model: Option<PathBuf>,
    #[arg(long, value_delimiter = ',')]
    pub seeds: Option<Vec<u64>>,
    /// Rows per root table when sampling; defaults to the real root size.
    #[arg(long)]
    pub n: Option<usize>,
    /// Structured report path.
    #[arg(long)]
    pub out: PathBuf,
    /// Plain-text table path; printed to stdout in any case.
    #[arg(long)]
    pub text: Option<PathBuf>,
    #[arg(long, value_enum, default_value = "pearson")]
    pub coefficient: CoefficientArg,
    #[arg(long, default_value_t = metrics::DEFAULT_NUMERIC_TOLERANCE)]
    pub numeric_tolerance: f64,
}

#[derive(Debug, Args)]
pub struct ReportArgs {
    #[arg(long)]
    pub report: PathBuf,
    /// Write the table here instead of stdout.
    #[arg(long)]
    pub out: Option<PathBuf>,
}

/// An error paired with its exit code.
#[derive(Debug)]
pub struct Failure {
    pub code: i32,
    pub error: Error,
}

fn usage(error: impl Into<Error>) -> Failure {
    Failure { code: EXIT_USAGE, error: error.into() }
}

fn runtime(error: impl Into<Error>) -> Failure {
    Failure { code: EXIT_RUNTIME, error: error.into() }
}

/// Validation errors from core map to 2, divergence to 3.
fn classify(error: Error) -> Failure {
    match error {
        Error::Core(relgen_core::Error::Divergence { .. }) => runtime(error),
        other => usage(other),
    }
}

type CmdResult = std::result::Result<(), Failure>;

fn require_dir(path: &Path, what: &str) -> CmdResult {
    if path.is_dir() {
        Ok(())
    } else {
        Err(usage(Error::Format(format!("{what} directory {} does not exist", path.display()))))
    }
}

fn write_text(path: &Path, text: &str) -> CmdResult {
    if let Some(parent) = path.parent().filter(|p| !p.as_os_str().is_empty()) {
        fs::create_dir_all(parent).map_err(|e| runtime(Error::io(parent, e)))?;
    }
    fs::write(path, text).map_err(|e| runtime(Error::io(path, e)))
}

fn cmd_fixture(args: &FixtureArgs) -> CmdResult {
    let data = generate_fixture(args.shape, args.n, args.seed).map_err(|e| usage(Error::from(e)))?;
    write_dataset(&data, &args.out).map_err(runtime)?;
    println!("wrote {} fixture ({} tables) to {}", args.shape, data.tables().len(), args.out.display());
    Ok(())
}

pub fn resolve_config(config: Option<&Path>, overrides: &TrainOverrides) -> crate::Result<TrainingConfig> {
    let mut cfg = match config {
        Some(path) => {
            let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
            serde_json::from_str(&text).map_err(|e| Error::json(path, e))?
        }
        None => TrainingConfig::default(),
    };
    overrides.apply(&mut cfg);
    cfg.validate()?;
    Ok(cfg)
}

fn cmd_train(args: &TrainArgs) -> CmdResult {
    require_dir(&args.data, "dataset")?;
    let config = resolve_config(args.config.as_deref(), &args.overrides).map_err(usage)?;
    let data = load_dataset_dir(&args.data, Provenance::Real).map_err(usage)?;
    if data.schema().relationships().is_empty() {
        return Err(usage(relgen_core::Error::NoRelationships));
    }
    let mut stderr = std::io::stderr().lock();
    let mut log = |event: TrainingEvent<'_>| {
        if let TrainingEvent::Epoch(l) = event {
            let _ = writeln!(
                stderr,
                "epoch={} table={} critic_loss={:.6} gradient_penalty={:.6} generator_loss={:.6} cond_loss={:.6}",
                l.epoch + 1,
                l.table,
                l.critic_loss,
                l.gradient_penalty,
                l.generator_loss,
                l.cond_loss
            );
        }
    };
    let bundle = gan::train_with_observer(&data, &config, &mut log).map_err(|e| classify(e.into()))?;
    save_bundle(&bundle, &args.out).map_err(runtime)?;
    println!("wrote model bundle to {}", args.out.display());
    Ok(())
}

fn cmd_sample(args: &SampleArgs) -> CmdResult {
    if args.n == 0 {
        return Err(usage(Error::Format("--n must be positive".to_string())));
    }
    require_dir(&args.model, "model")?;
    let bundle = load_bundle(&args.model).map_err(usage)?;
    let data = sampler::sample_database(&bundle, args.n, args.seed).map_err(|e| classify(e.into()))?;
    let ri = check_referential_integrity(&data);
    write_dataset(&data, &args.out).map_err(runtime)?;
    if ri.referential_integrity {
        println!("referential integrity: ok");
        Ok(())
    } else {
        println!("referential integrity: FAILED ({} dangling key groups)", ri.dangling.len());
        Err(runtime(Error::Format("sampled dataset violates referential integrity".to_string())))
    }
}

/// Thread pool capped by [`THREADS_ENV`] when it holds a positive integer.
pub fn thread_pool() -> rayon::ThreadPool {
    let mut builder = rayon::ThreadPoolBuilder::new();
    if let Some(n) = std::env::var(THREADS_ENV).ok().and_then(|v| v.parse::<usize>().ok()).filter(|n| *n > 0) {
        builder = builder.num_threads(n);
    }
    builder.build().expect("thread pool")
}

fn cmd_evaluate(args: &EvaluateArgs) -> CmdResult {
    require_dir(&args.real, "real dataset")?;
    let real = load_dataset_dir(&args.real, Provenance::Real).map_err(usage)?;
    let pool = thread_pool();
    let runs = match (&args.model, &args.seeds) {
        (Some(model), Some(seeds)) => {
            require_dir(model, "model")?;
            if seeds.is_empty() {
                return Err(usage(Error::Format("--seeds must list at least one seed".to_string())));
            }
            let bundle = load_bundle(model).map_err(usage)?;
            let n = match args.n {
                Some(n) => n,
                None => root_rows(&real).map_err(usage)?,
            };
            pool.install(|| {
                seeds
                    .par_iter()
                    .map(|seed| sampler::sample_database(&bundle, n, *seed).map_err(|e| classify(e.into())))
                    .collect::<Result<Vec<_>, _>>()
            })?
        }
        _ => {
            if args.synthetic.is_empty() {
                return Err(usage(Error::Format("give --synthetic directories or --model with --seeds".to_string())));
            }
            for dir in &args.synthetic {
                require_dir(dir, "synthetic dataset")?;
            }
            pool.install(|| {
                args.synthetic
                    .par_iter()
                    .map(|dir| load_dataset_dir(dir, Provenance::Synthetic).map_err(usage))
                    .collect::<Result<Vec<_>, _>>()
            })?
        }
    };
    let config = EvaluationConfig {
        coefficient: match args.coefficient {
            CoefficientArg::Pearson => Coefficient::Pearson,
            CoefficientArg::Spearman => Coefficient::Spearman,
        },
        numeric_tolerance: args.numeric_tolerance,
    };
    let report = metrics::evaluate(&real, &runs, &config).map_err(|e| usage(Error::from(e)))?;
    for w in &report.warnings {
        eprintln!("warning: {w}");
    }
    write_report(&report, &args.out).map_err(runtime)?;
    let table = report.render();
    if let Some(path) = &args.text {
        write_text(path, &table)?;
    }
    print!("{table}");
    Ok(())
}

/// Largest root-table row count of a dataset.
fn root_rows(data: &relgen_core::RelationalDataset) -> crate::Result<usize> {
    let schema = data.schema();
    let mut n = 0;
    for name in schema.table_names() {
        if schema.parents(name)?.is_empty() {
            n = n.max(data.table(name)?.n_rows());
        }
    }
    Ok(n.max(1))
}

fn cmd_report(args: &ReportArgs) -> CmdResult {
    let report = read_report(&args.report).map_err(usage)?;
    let table = report.render();
    match &args.out {
        Some(path) => write_text(path, &table),
        None => {
            print!("{table}");
            Ok(())
        }
    }
}

pub fn execute(cli: &Cli) -> CmdResult {
    match &cli.command {
        Command::Fixture(a) => cmd_fixture(a),
        Command::Train(a) => cmd_train(a),
        Command::Sample(a) => cmd_sample(a),
        Command::Evaluate(a) => cmd_evaluate(a),
        Command::Report(a) => cmd_report(a),
    }
}

/// Parses `args` (program name first), runs the command and returns the exit code.
pub fn run<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return e.exit_code();
        }
    };
    match execute(&cli) {
        Ok(()) => EXIT_OK,
        Err(f) => {
            eprintln!("error: {}", f.error);
            f.code
        }
    }
}

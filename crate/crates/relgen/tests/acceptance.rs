//! End-to-end acceptance checks. Each test prints one `PASS`/`FAIL` line.

#[path = "../../core/tests/support/mod.rs"]
mod support;

use std::collections::BTreeMap;
use std::fs;
use std::io::Write;
use std::path::Path;
use std::process::Command;
use std::sync::Mutex;
use std::time::{Duration, Instant};

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use relgen_core::conditioning::{build_cond_vector, CategoryFrequencies};
use relgen_core::gan::{condition_compliance, train, TrainingConfig};
use relgen_core::metrics::{evaluate, EvaluationConfig, Metric};
use relgen_core::nn::{Critic, CriticSpec, Matrix};
use relgen_core::sampler::sample_database;
use relgen_core::transform::TableTransformer;
use relgen_core::{
    check_referential_integrity, generate_fixture, ColumnData, ColumnKind, ColumnSpec, FixtureShape, RelationshipKind,
    Table, TableSpec,
};

/// Serialises the criteria.
static SERIAL: Mutex<()> = Mutex::new(());

fn report(id: u32, name: &str, pass: bool, detail: &str) {
    let status = if pass { "PASS" } else { "FAIL" };
    let _ = writeln!(std::io::stdout(), "acceptance {id} [{status}] {name}: {detail}");
    assert!(pass, "criterion {id} ({name}) failed: {detail}");
}

fn serial() -> std::sync::MutexGuard<'static, ()> {
    SERIAL.lock().unwrap_or_else(|e| e.into_inner())
}

#[test]
fn c1_referential_integrity() {
    let _g = serial();
    let start = Instant::now();
    let (mut ok, mut total) = (0, 0);
    let mut failures = Vec::new();
    for shape in FixtureShape::ALL {
        let bundle = support::quick_bundle(shape, 60, 0);
        for seed in 0..3 {
            for n in [50, 500] {
                let data = sample_database(&bundle, n, seed).unwrap();
                let ri = check_referential_integrity(&data);
                total += 1;
                if ri.referential_integrity
                    && ri.dangling.is_empty()
                    && ri.fully_covered(data.schema(), RelationshipKind::OneToMany)
                {
                    ok += 1;
                } else {
                    failures.push(format!("{shape}/seed {seed}/n {n}"));
                }
            }
        }
    }
    let elapsed = start.elapsed();
    report(
        1,
        "referential integrity",
        ok == total && elapsed < Duration::from_secs(600),
        &format!("{ok}/{total} sampled datasets intact in {:.1} s {failures:?}", elapsed.as_secs_f64()),
    );
}

#[test]
fn c2_metric_oracles() {
    let _g = serial();
    let mut rng = ChaCha8Rng::seed_from_u64(2024);
    let instances = 250;
    let mut failures = Vec::new();
    for _ in 0..instances {
        failures.extend(support::oracles::check_random_instance(&mut rng));
    }
    report(
        2,
        "metric oracle equivalence",
        failures.is_empty(),
        &format!(
            "{instances} random instances x 9 metrics within {:e}, {} mismatches {:?}",
            support::oracles::TOLERANCE,
            failures.len(),
            failures.iter().take(3).collect::<Vec<_>>()
        ),
    );
}

#[test]
fn c3_condition_vector_example() {
    let _g = serial();
    let spec = TableSpec::new(vec![
        ColumnSpec::new("id", ColumnKind::PrimaryKey),
        ColumnSpec::new("d1", ColumnKind::Discrete),
        ColumnSpec::new("d2", ColumnKind::Categorical),
    ]);
    let d1 = ["-2", "3", "4", "3"].map(String::from).to_vec();
    let d2 = ["cat", "dog", "dog", "cat"].map(String::from).to_vec();
    let table =
        Table::new("t", &spec, vec![ColumnData::Key(vec![0, 1, 2, 3]), ColumnData::Categorical(d1), ColumnData::Categorical(d2)])
            .unwrap();
    let transformer = TableTransformer::fit(&spec, &table, 10).unwrap();
    let widths = CategoryFrequencies::from_transformer(&transformer).widths();
    let (c, m) = build_cond_vector(&widths, 1, 0).unwrap();
    let expected = vec![0.0, 0.0, 0.0, 1.0, 0.0];
    report(
        3,
        "conditional vector example",
        widths == [3, 2] && c == expected && m == expected,
        &format!("widths {widths:?}, c = {c:?}"),
    );
}

#[test]
fn c4_transform_round_trip() {
    let _g = serial();
    let mut total = support::roundtrip::RoundTrip::default();
    for (shape, n) in [(FixtureShape::University, 600), (FixtureShape::Hepatitis, 300), (FixtureShape::Pyrimidine, 1000)] {
        let rt = support::roundtrip::fixture_roundtrip(shape, n, 11);
        total.rows += rt.rows;
        total.max_numeric_error = total.max_numeric_error.max(rt.max_numeric_error);
        total.categorical_mismatches += rt.categorical_mismatches;
    }
    report(
        4,
        "transform round trip",
        total.rows >= 10_000 && total.max_numeric_error <= 1e-9 && total.categorical_mismatches == 0,
        &format!(
            "{} rows, max numeric error {:e}, {} categorical mismatches",
            total.rows, total.max_numeric_error, total.categorical_mismatches
        ),
    );
}

fn random_matrix(rng: &mut ChaCha8Rng, rows: usize, cols: usize) -> Matrix {
    use rand::Rng;
    Matrix::from_vec(rows, cols, (0..rows * cols).map(|_| rng.random_range(-1.0..1.0)).collect())
}

#[test]
fn c5_gradient_penalty() {
    let _g = serial();
    let mut rng = ChaCha8Rng::seed_from_u64(5);
    let spec = |hidden: Vec<usize>, dropout| CriticSpec { input_width: 6, hidden, leaky_slope: 0.2, dropout };

    let linear = Critic::new(spec(vec![], 0.0), &mut rng);
    let x = random_matrix(&mut rng, 8, 6);
    let w_norm = linear.params()[..6].iter().map(|w| w * w).sum::<f64>().sqrt();
    let analytic = (w_norm - 1.0).powi(2);
    let linear_err = (linear.penalty(&x, &[]) - analytic).abs();

    let mut toy = Critic::new(spec(vec![7, 5], 0.3), &mut rng);
    let masks = toy.sample_masks(4, &mut rng);
    let x = random_matrix(&mut rng, 4, 6);
    let mut grads = vec![0.0; toy.params().len()];
    toy.gradient_penalty(&x, &masks, 1.0, &mut grads);
    let h = 1e-6;
    let mut fd = vec![0.0; grads.len()];
    for (k, slot) in fd.iter_mut().enumerate() {
        let orig = toy.params()[k];
        toy.params_mut()[k] = orig + h;
        let up = toy.penalty(&x, &masks);
        toy.params_mut()[k] = orig - h;
        let down = toy.penalty(&x, &masks);
        toy.params_mut()[k] = orig;
        *slot = (up - down) / (2.0 * h);
    }
    let diff = grads.iter().zip(&fd).map(|(a, b)| (a - b).powi(2)).sum::<f64>().sqrt();
    let scale = fd.iter().map(|v| v * v).sum::<f64>().sqrt().max(1e-12);
    let rel = diff / scale;
    report(
        5,
        "gradient penalty",
        linear_err <= 1e-9 && rel <= 1e-4,
        &format!("linear case error {linear_err:e}, finite-difference relative error {rel:e}"),
    );
}

#[test]
fn c6_end_to_end_quality() {
    let _g = serial();
    let real = generate_fixture(FixtureShape::Pyrimidine, 200, 0).unwrap();
    let results: Vec<_> = std::thread::scope(|scope| {
        let handles: Vec<_> = (0..3u64)
            .map(|seed| {
                let real = &real;
                scope.spawn(move || {
                    let start = Instant::now();
                    let config = TrainingConfig { epochs: 50, batch_size: 20, pac: 10, seed, ..TrainingConfig::default() };
                    let bundle = train(real, &config).unwrap();
                    let elapsed = start.elapsed();
                    let syn = sample_database(&bundle, 200, seed).unwrap();
                    let compliance: BTreeMap<String, f64> = real
                        .schema()
                        .table_names()
                        .filter_map(|t| condition_compliance(&bundle, t, 2000, seed + 100).unwrap().map(|c| (t.to_string(), c)))
                        .collect();
                    (syn, compliance, elapsed)
                })
            })
            .collect();
        handles.into_iter().map(|h| h.join().unwrap()).collect()
    });
    let runs: Vec<_> = results.iter().map(|r| r.0.clone()).collect();
    let rep = evaluate(&real, &runs, &EvaluationConfig::default()).unwrap();
    let cs = rep.aggregate[&Metric::CS].mean;
    let rc = rep.aggregate[&Metric::RC].mean;
    let mut compliance: BTreeMap<&str, f64> = BTreeMap::new();
    for (_, c, _) in &results {
        for (t, v) in c {
            *compliance.entry(t).or_default() += v / results.len() as f64;
        }
    }
    let slowest = results.iter().map(|r| r.2).max().unwrap();
    let pass = cs >= 0.6
        && rc >= 0.9
        && rep.referential_integrity
        && !compliance.is_empty()
        && compliance.values().all(|c| *c >= 0.5)
        && slowest < Duration::from_secs(600);
    report(
        6,
        "end-to-end quality",
        pass,
        &format!(
            "CS {cs:.3}, RC {rc:.3}, RI {}, compliance {compliance:.3?}, slowest training {:.1} s",
            if rep.referential_integrity { "Yes" } else { "No" },
            slowest.as_secs_f64()
        ),
    );
}

#[test]
fn c7_cardinality_fidelity() {
    let _g = serial();
    let mut worst: f64 = 0.0;
    let mut lines = Vec::new();
    for shape in [FixtureShape::Pyrimidine, FixtureShape::University] {
        let real = generate_fixture(shape, 1000, 7).unwrap();
        let bundle = train(&real, &support::quick_config(7)).unwrap();
        for rel in real.schema().relationships().iter().filter(|r| r.kind == RelationshipKind::OneToMany) {
            let per_parent = |d: &relgen_core::RelationalDataset| {
                d.table(&rel.child).unwrap().n_rows() as f64 / d.table(&rel.parent).unwrap().n_rows() as f64
            };
            let truth = per_parent(&real);
            for seed in 0..3 {
                let syn = sample_database(&bundle, 1000, seed).unwrap();
                let err = (per_parent(&syn) - truth).abs() / truth;
                worst = worst.max(err);
            }
            lines.push(format!("{}->{} true mean {truth:.3}", rel.parent, rel.child));
        }
    }
    report(
        7,
        "cardinality fidelity",
        worst <= 0.2,
        &format!("1000 parents, 3 seeds, worst relative error {:.1}% ({})", worst * 100.0, lines.join(", ")),
    );
}

fn digest(dir: &Path) -> Vec<(String, Vec<u8>)> {
    let mut out: Vec<_> = fs::read_dir(dir)
        .unwrap()
        .map(|e| e.unwrap())
        .map(|e| (e.file_name().to_string_lossy().into_owned(), fs::read(e.path()).unwrap()))
        .collect();
    out.sort();
    out
}

#[test]
fn c8_determinism() {
    let _g = serial();
    let tmp = tempfile::tempdir().unwrap();
    let bin = env!("CARGO_BIN_EXE_relgen");
    let run = |args: &[&str]| {
        let out = Command::new(bin).args(args).output().unwrap();
        assert!(out.status.success(), "{args:?}: {}", String::from_utf8_lossy(&out.stderr));
        out.stdout
    };
    let p = |name: &str| tmp.path().join(name).to_string_lossy().into_owned();
    fs::write(
        tmp.path().join("config.json"),
        r#"{"epochs": 3, "batch_size": 20, "pac": 5, "generator_dims": [32, 32], "critic_dims": [32, 32], "noise_width": 16, "stats_batch": 50, "seed": 3}"#,
    )
    .unwrap();
    run(&["fixture", "--shape", "hepatitis", "--n", "40", "--seed", "1", "--out", &p("real")]);
    let mut same = Vec::new();
    for round in ["a", "b"] {
        run(&["train", "--data", &p("real"), "--config", &p("config.json"), "--out", &p(&format!("model-{round}"))]);
        let stdout = run(&["sample", "--model", &p("model-a"), "--n", "60", "--seed", "8", "--out", &p(&format!("syn-{round}"))]);
        let text = run(&[
            "evaluate", "--real", &p("real"), "--model", &p("model-a"), "--seeds", "0,1,2", "--out",
            &p(&format!("report-{round}.json")),
        ]);
        same.push((digest(&tmp.path().join(format!("model-{round}"))), digest(&tmp.path().join(format!("syn-{round}"))), stdout, text));
    }
    let bundles = same[0].0 == same[1].0;
    let samples = same[0].1 == same[1].1;
    let reports = fs::read(p("report-a.json")).unwrap() == fs::read(p("report-b.json")).unwrap() && same[0].3 == same[1].3;
    report(
        8,
        "determinism",
        bundles && samples && reports && same[0].2 == same[1].2,
        &format!("bundles identical: {bundles}, samples identical: {samples}, reports identical: {reports}"),
    );
}

#[test]
fn c9_sampling_scales_linearly() {
    let _g = serial();
    let bundle = support::quick_bundle(FixtureShape::Hepatitis, 60, 0);
    let sizes = [100usize, 1_000, 10_000];
    let mut times = Vec::new();
    for &n in &sizes {
        let mut best = f64::INFINITY;
        for rep in 0..3 {
            let start = Instant::now();
            let data = sample_database(&bundle, n, rep).unwrap();
            best = best.min(start.elapsed().as_secs_f64());
            std::hint::black_box(data);
        }
        times.push(best);
    }
    let xs: Vec<f64> = sizes.iter().map(|&n| n as f64).collect();
    let (mx, my) = (xs.iter().sum::<f64>() / 3.0, times.iter().sum::<f64>() / 3.0);
    let sxy: f64 = xs.iter().zip(&times).map(|(x, y)| (x - mx) * (y - my)).sum();
    let sxx: f64 = xs.iter().map(|x| (x - mx).powi(2)).sum();
    let slope = sxy / sxx;
    let intercept = my - slope * mx;
    let ss_res: f64 = xs.iter().zip(&times).map(|(x, y)| (y - intercept - slope * x).powi(2)).sum();
    let ss_tot: f64 = times.iter().map(|y| (y - my).powi(2)).sum();
    let r2 = 1.0 - ss_res / ss_tot;
    report(
        9,
        "sampling scales linearly",
        r2 >= 0.98,
        &format!("times {:?} ms for n {sizes:?}, R^2 {r2:.4}", times.iter().map(|t| (t * 1e5).round() / 100.0).collect::<Vec<_>>()),
    );
}

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use relgen_core::transform::TableTransformer;
use relgen_core::{generate_fixture, FixtureShape, Value};

#[derive(Debug, Default)]
pub struct RoundTrip {
    pub rows: usize,
    pub max_numeric_error: f64,
    pub categorical_mismatches: usize,
}

/// Encodes and decodes every row of every fixture table, decoding with the
/// mode drawn at encoding time.
pub fn fixture_roundtrip(shape: FixtureShape, n_root: usize, seed: u64) -> RoundTrip {
    let data = generate_fixture(shape, n_root, seed).expect("fixture");
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut out = RoundTrip::default();
    for (name, spec) in data.schema().tables() {
        let table = data.table(name).unwrap();
        let transformer = TableTransformer::fit(spec, table, 10).expect("fit");
        let sources: Vec<usize> = transformer
            .source_columns()
            .iter()
            .map(|c| spec.columns.iter().position(|s| &s.name == c).unwrap())
            .collect();
        for i in 0..table.n_rows() {
            let full = table.row(i);
            let row: Vec<Value> = sources.iter().map(|&k| full[k].clone()).collect();
            let encoded = transformer.encode_row(&row, &mut rng).expect("encode");
            let decoded = transformer.decode_row(&encoded).expect("decode");
            for (a, b) in row.iter().zip(&decoded) {
                match (a, b) {
                    (Value::Numerical(x), Value::Numerical(y)) => {
                        out.max_numeric_error = out.max_numeric_error.max((x - y).abs());
                    }
                    (a, b) if a != b => out.categorical_mismatches += 1,
                    _ => {}
                }
            }
            out.rows += 1;
        }
    }
    out
}

#![allow(dead_code)]

pub mod oracles;
pub mod roundtrip;

use relgen_core::gan::{self, ModelBundle, TrainingConfig};
use relgen_core::{generate_fixture, FixtureShape};

/// Small networks and few epochs; enough to exercise every code path.
pub fn quick_config(seed: u64) -> TrainingConfig {
    TrainingConfig {
        epochs: 2,
        batch_size: 20,
        pac: 5,
        generator_dims: vec![32, 32],
        critic_dims: vec![32, 32],
        noise_width: 16,
        max_modes: 4,
        stats_batch: 50,
        seed,
        ..TrainingConfig::default()
    }
}

pub fn quick_bundle(shape: FixtureShape, n_root: usize, seed: u64) -> ModelBundle {
    let data = generate_fixture(shape, n_root, seed).expect("fixture");
    gan::train(&data, &quick_config(seed)).expect("training")
}

//! Runs a small Monte Carlo rejection study and prints it as a table.
//!
//! Usage: `cargo run --release --example rejection_table [reps]`

use hidim::harness::{emit_table, run_experiment, ExperimentConfig, Grid, TableFormat, TestSpec};
use hidim::models::Model;
use hidim::ScalingMode;

fn main() -> hidim::Result<()> {
    let reps = std::env::args()
        .nth(1)
        .and_then(|s| s.parse().ok())
        .unwrap_or(200);
    let config = ExperimentConfig {
        models: vec![
            Model::Independent,
            Model::GaussianEquicorr { tau_norm2: 0.3 },
            Model::Inductive,
        ],
        grid: Grid {
            n: vec![32, 64],
            d: vec![4, 16],
        },
        tests: vec![
            TestSpec::s(2, ScalingMode::ExactFinite),
            TestSpec::s(3, ScalingMode::ExactFinite),
            TestSpec::t(3, ScalingMode::Asymptotic),
        ],
        replications: reps,
        alpha: 0.05,
        master_seed: 1,
        thread_count: None,
    };
    let table = run_experiment(&config)?;
    emit_table(&table, TableFormat::Pretty, &mut std::io::stdout())?;
    println!("config hash {}", table.provenance.config_hash);
    Ok(())
}

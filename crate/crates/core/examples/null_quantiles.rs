//! Simulates the null distribution of the combined statistic and compares its
//! quantiles with the standard normal ones.
//!
//! Usage: `cargo run --release --example null_quantiles`

use hidim::harness::simulate_null;
use hidim::stats::normal_quantile;
use hidim::ScalingMode;

fn main() -> hidim::Result<()> {
    let levels = [0.5, 0.9, 0.95, 0.99];
    for (n, d) in [(16, 64), (64, 16), (128, 64)] {
        for mode in [ScalingMode::ExactFinite, ScalingMode::Asymptotic] {
            let cal = simulate_null(n, d, 3, mode, 1000, &levels, 7)?;
            let row: Vec<String> = cal.quantiles.iter().map(|q| format!("{q:>7.3}")).collect();
            println!("n={n:<4} d={d:<4} {:<10} {}", mode.as_str(), row.join(" "));
        }
    }
    let normal: Vec<String> = levels
        .iter()
        .map(|&l| format!("{:>7.3}", normal_quantile(l)))
        .collect();
    println!("{:<26} {}", "normal", normal.join(" "));
    Ok(())
}

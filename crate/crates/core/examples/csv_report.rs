//! Tests a CSV file and prints the JSON report, as `hidim test --format json` does.
//!
//! Usage: `cargo run --example csv_report -- data.csv [m]`
//! Without a path a small dataset with one dependent pair is written to a
//! temporary file first.

use std::io::Write;

use hidim::cli::read_csv;
use hidim::{run_test, ScalingMode, TiePolicy};

fn demo_file() -> std::io::Result<tempfile::NamedTempFile> {
    let mut file = tempfile::NamedTempFile::new()?;
    writeln!(file, "a,b,c")?;
    for i in 0..60u32 {
        let a = f64::from((i * 17) % 61);
        let c = f64::from((i * 29 + 5) % 67);
        writeln!(file, "{a},{},{c}", a.sqrt() + 0.01 * f64::from(i % 3))?;
    }
    Ok(file)
}

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let args: Vec<String> = std::env::args().skip(1).collect();
    let demo;
    let path = match args.first() {
        Some(p) => std::path::PathBuf::from(p),
        None => {
            demo = demo_file()?;
            demo.path().to_path_buf()
        }
    };
    let m = args.get(1).map(|s| s.parse()).transpose()?.unwrap_or(2);
    let data = read_csv(&path)?;
    let report = run_test(&data, m, ScalingMode::Paper, 0.05, TiePolicy::ByRowIndex)?;
    println!("{}", serde_json::to_string_pretty(&report)?);
    Ok(())
}

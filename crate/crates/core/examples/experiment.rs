//! Runs one named experiment and prints its CSV report.
//!
//!     cargo run --release --example experiment -- chessboard-certificate 7

use ordtest::experiments::{run_experiment, ExperimentConfig};

fn main() -> ordtest::Result<()> {
    let mut args = std::env::args().skip(1);
    let name = args.next().unwrap_or_else(|| "mixing-equivalence".into());
    let seed = args.next().and_then(|s| s.parse().ok()).unwrap_or(1);
    let report = run_experiment(&ExperimentConfig::new(&name, seed))?;
    print!("{}", report.to_csv(&[("seed".into(), seed.to_string())])?);
    std::process::exit(if report.passed() { 0 } else { 1 });
}

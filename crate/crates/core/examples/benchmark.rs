//! Small simulation study: chained 3-cycles on 9 variables, both noise
//! families, summary per (alpha, correction) cell.
//!
//! Usage: `cargo run --release --example benchmark -- [reps] [n]`

use cyclingam::bench::{run_benchmark, summarize, BenchConfig, NoiseFamily};
use cyclingam::stats::Correction;

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let mut args = std::env::args().skip(1);
    let reps = args.next().map(|s| s.parse()).transpose()?.unwrap_or(5);
    let n = args.next().map(|s| s.parse()).transpose()?.unwrap_or(50_000);

    for dist in [NoiseFamily::Mixnorm, NoiseFamily::Gamma] {
        let cfg = BenchConfig {
            p: 9,
            cycle_size: 3,
            ns: vec![n],
            dist,
            reps,
            seed: 7,
            alphas: vec![0.01, 0.05],
            corrections: vec![Correction::Holm, Correction::Bh],
            ..BenchConfig::default()
        };
        let records = run_benchmark(&cfg)?;
        println!("{}: n = {n}, {reps} replications", dist.name());
        println!("  alpha  correction  ordering  correct_pairs  runtime_s");
        for s in summarize(&records) {
            println!(
                "  {:<5}  {:<10}  {:>8.2}  {:>13.3}  {:>9.3}{}",
                s.alpha,
                s.correction,
                s.mean_ordering,
                s.mean_correct_pairs,
                s.mean_runtime_s,
                if s.best { "  *" } else { "" }
            );
        }
    }
    Ok(())
}

//! Discovery from simulated data, with the decisions that led to it.
//!
//! Usage: `cargo run --release --example discover_sample -- [n]`

use cyclingam::discovery::{discover, DiscoveryInput};
use cyclingam::equivalence::correct_pairs;
use cyclingam::sem::{sample, NoiseKind, NoiseSpec, SemParameters};
use cyclingam::stats::{Correction, TestConfig};

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let n = std::env::args().nth(1).map(|s| s.parse()).transpose()?.unwrap_or(100_000);

    // Root 3-cycle {1, 2, 3} feeding vertex 4, which feeds the 2-cycle {5, 6}.
    let edges = [(0, 1, 0.7), (1, 2, -0.6), (2, 0, 0.75), (2, 3, 0.6), (3, 4, -0.7), (4, 5, 0.65), (5, 4, 0.55)];
    let noise = NoiseSpec::new(NoiseKind::MixtureNormal, vec![1.0; 6])?;
    let (omega2, omega3) = noise.moments(6)?;
    let params = SemParameters::from_weighted_edges(6, &edges, omega2, omega3)?;
    let data = sample(&params, &noise, n, 3)?;

    let cfg = TestConfig::sample(0.01, Correction::Holm)?;
    let res = discover(&DiscoveryInput::sample(data, true), &cfg)?;
    let json = res.to_json();
    println!("status: {:?}", json.status);
    println!("layers: {:?}", json.layers);
    for (i, j, w) in &json.edges {
        println!("  {i} -> {j}  {w:>7.3}");
    }
    let score = correct_pairs(params.graph(), params.lambda(), &res.graph(), &res.lambda_hat)?;
    println!("correct pairs: {score:.3}");
    println!("{} tests recorded", res.pvalues.len());
    for note in &res.notes {
        println!("note: {note}");
    }
    Ok(())
}

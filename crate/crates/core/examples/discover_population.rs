//! Exact recovery from population moments: a random model of three chained
//! 3-cycles, discovered without sampling noise and compared with the truth.

use cyclingam::bench::{random_model, BenchConfig};
use cyclingam::discovery::{discover, DiscoveryInput};
use cyclingam::equivalence::stable_representative;
use cyclingam::sem::population_moments;
use cyclingam::stats::{Mode, TestConfig};

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let cfg = BenchConfig { p: 9, cycle_size: 3, mode: Mode::Population, ..BenchConfig::default() };
    let (params, _, cycles) = random_model(&cfg, 42)?;
    let one_based: Vec<Vec<usize>> = cycles.iter().map(|c| c.iter().map(|v| v + 1).collect()).collect();
    println!("true cycles in order: {one_based:?}");

    let m = population_moments(&params)?;
    let res = discover(&DiscoveryInput::Population(m), &TestConfig::population(1e-9)?)?;
    let json = res.to_json();
    println!("status: {:?}", json.status);
    println!("layers: {:?}", json.layers);

    let (_, truth) = stable_representative(params.graph(), params.lambda())?;
    println!("max weight error: {:e}", (&res.lambda_hat - &truth).amax());
    Ok(())
}

//! Population moments of a small model three ways: the closed form, the
//! truncated trek sum, and a large sample. Also evaluates the two
//! determinant statistics on every ordered pair.

use cyclingam::moments::{d2, d3, sample_moments};
use cyclingam::sem::{population_moments, sample, trek_moments_truncated, NoiseKind, NoiseSpec, SemParameters};

fn main() -> Result<(), Box<dyn std::error::Error>> {
    // 1 -> 2 -> 3 -> 2 with a 2-cycle on {2, 3}.
    let noise = NoiseSpec::new(NoiseKind::MixtureNormal, vec![1.0; 3])?;
    let (omega2, omega3) = noise.moments(3)?;
    let params = SemParameters::from_weighted_edges(3, &[(0, 1, 0.7), (1, 2, 0.6), (2, 1, -0.4)], omega2, omega3)?;

    let exact = population_moments(&params)?;
    let treks = trek_moments_truncated(&params, 100)?;
    let data = sample(&params, &noise, 200_000, 11)?;
    let est = sample_moments(&data);

    println!("S (closed form):\n{:.4}", exact.s);
    println!("trek sum deviation:   {:e}", exact.max_abs_diff(&treks));
    println!("sample deviation:     {:.4}", exact.max_abs_diff(&est));

    println!("\n u v        d2        d3");
    for u in 0..3 {
        for v in 0..3 {
            if u != v {
                println!(" {} {} {:>9.4} {:>9.4}", u + 1, v + 1, d2(&exact, u, v).value, d3(&exact, u, v).value);
            }
        }
    }
    println!("vertex 1 is a root: d2(1, v) vanishes for every v");
    println!("every trek between two vertices here passes through one of them, so d3 vanishes throughout");
    Ok(())
}

//! The three test families on data where the null holds and where it fails:
//! delta-method determinant tests, the empirical-likelihood root-cycle test,
//! and multiple-testing corrections.

use cyclingam::sem::{sample, NoiseKind, NoiseSpec, SemParameters};
use cyclingam::stats::{bh, delta_test_determinant, holm, root_cycle_test, StatKind};

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let n = 50_000;
    let noise = NoiseSpec::new(NoiseKind::MixtureNormal, vec![1.0; 3])?;
    let (omega2, omega3) = noise.moments(3)?;

    // 1 -> 2 -> 3: 1 is a root, so d2(1, 2) = 0 but d2(2, 1) != 0.
    let chain = SemParameters::from_weighted_edges(3, &[(0, 1, 0.7), (1, 2, 0.6)], omega2.clone(), omega3.clone())?;
    let data = sample(&chain, &noise, n, 5)?;
    for (u, v) in [(0, 1), (1, 0)] {
        let o = delta_test_determinant(&data, StatKind::D2, u, v)?;
        println!("d2({}, {}): z = {:>8.3}  p = {:.3e}", u + 1, v + 1, o.statistic, o.p_value);
    }

    // {1, 2} is a root 2-cycle with child 3; {2, 3} is not a root set.
    let cyc = SemParameters::from_weighted_edges(3, &[(0, 1, 0.6), (1, 0, -0.5), (1, 2, 0.8)], omega2, omega3)?;
    let data = sample(&cyc, &noise, n, 6)?;
    for (c, d) in [(vec![0, 1], vec![2]), (vec![1, 2], vec![0])] {
        let o = root_cycle_test(&data, &c, &d)?;
        println!("root cycle {:?}: stat = {:>9.3}  p = {:.3e}", c.iter().map(|v| v + 1).collect::<Vec<_>>(), o.statistic, o.p_value);
    }

    let raw = [0.001, 0.01, 0.02, 0.04, 0.3];
    println!("raw  {raw:?}");
    println!("holm {:?}", holm(&raw));
    println!("bh   {:?}", bh(&raw));
    Ok(())
}

//! Distribution-equivalence classes: list the graphs that share every
//! distribution with a given one, and check that transformed parameters leave
//! the moments untouched.

use cyclingam::equivalence::{factoring_permutations, stable_representative, transform_parameters};
use cyclingam::graph::DirectedGraph;
use cyclingam::sem::{population_moments, SemParameters};

fn main() -> Result<(), Box<dyn std::error::Error>> {
    // A 4-cycle with the chord 2 -> 4, so 1 -> 2 -> 4 -> 1 is a second cycle.
    let g = DirectedGraph::from_one_based(4, &[(1, 2), (2, 3), (3, 4), (4, 1), (2, 4)])?;
    let edges = [(0, 1, 0.8), (1, 2, -0.6), (2, 3, 0.5), (3, 0, 0.7), (1, 3, 0.4)];
    let params = SemParameters::from_weighted_edges(4, &edges, vec![1.0, 0.8, 1.2, 0.9], vec![1.0, -0.5, 0.7, 1.1])?;
    let base = population_moments(&params)?;

    for pi in factoring_permutations(&g)? {
        let moved = transform_parameters(&params, &pi)?;
        let m = population_moments(&moved)?;
        println!(
            "{:<10} edges {:?}  moment deviation {:.1e}",
            pi.to_string(),
            moved.graph().edges_one_based(),
            m.max_abs_diff(&base)
        );
    }

    // Cycle 1 -> 2 -> 3 -> 1 with product 2.5 * 2 * 2: the stable member reverses it.
    let big = DirectedGraph::from_one_based(3, &[(1, 2), (2, 3), (3, 1)])?;
    let mut lambda = nalgebra::DMatrix::zeros(3, 3);
    lambda[(0, 1)] = 2.5;
    lambda[(1, 2)] = 2.0;
    lambda[(2, 0)] = 2.0;
    let (g_stable, l_stable) = stable_representative(&big, &lambda)?;
    println!("\nstable representative: {:?}", g_stable.edges_one_based());
    println!("{:.4}", l_stable);
    Ok(())
}

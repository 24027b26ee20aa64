//! Distribution equivalence: permutations that reverse vertex-disjoint
//! directed cycles, the graphs and parameters they produce, and metrics that
//! compare graphs up to equivalence.

use std::collections::BTreeSet;
use std::fmt;

use nalgebra::DMatrix;

use crate::error::{Error, Result};
use crate::graph::DirectedGraph;
use crate::sem::SemParameters;

/// Largest number of directed cycles enumerated before giving up.
pub const CYCLE_LIMIT: usize = 20;

/// Tolerance for declaring a cycle product equal to one in absolute value.
pub const UNIT_PRODUCT_TOL: f64 = 1e-12;

/// A permutation of the vertices whose nontrivial cycles are directed cycles
/// of a host graph. Cycle `(i1 i2 ... is)` maps `i1 -> i2 -> ... -> i1`.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct FactoringPermutation {
    cycles: Vec<Vec<usize>>,
    image: Vec<usize>,
}

impl FactoringPermutation {
    pub fn identity(p: usize) -> Self {
        Self { cycles: Vec::new(), image: (0..p).collect() }
    }

    /// Checks that the cycles are vertex-disjoint directed cycles of `g`.
    pub fn new(g: &DirectedGraph, cycles: Vec<Vec<usize>>) -> Result<Self> {
        let p = g.p();
        let mut image: Vec<usize> = (0..p).collect();
        let mut used = BTreeSet::new();
        for cycle in &cycles {
            if cycle.len() < 2 {
                return Err(Error::InvalidGraph("permutation cycles need at least two vertices".into()));
            }
            for (k, &v) in cycle.iter().enumerate() {
                g.check_vertex(v)?;
                if !used.insert(v) {
                    return Err(Error::InvalidGraph(format!("vertex {} appears in two permutation cycles", v + 1)));
                }
                let next = cycle[(k + 1) % cycle.len()];
                if !g.has_edge(v, next) {
                    return Err(Error::InvalidGraph(format!(
                        "permutation cycle needs edge {} -> {}",
                        v + 1,
                        next + 1
                    )));
                }
                image[v] = next;
            }
        }
        let mut cycles: Vec<Vec<usize>> = cycles.into_iter().map(rotate_to_min).collect();
        cycles.sort();
        Ok(Self { cycles, image })
    }

    pub fn p(&self) -> usize {
        self.image.len()
    }

    pub fn cycles(&self) -> &[Vec<usize>] {
        &self.cycles
    }

    /// `pi(j)`.
    pub fn apply(&self, j: usize) -> usize {
        self.image[j]
    }

    pub fn is_identity(&self) -> bool {
        self.cycles.is_empty()
    }

    pub fn inverse(&self) -> FactoringPermutation {
        let cycles = self
            .cycles
            .iter()
            .map(|c| {
                let mut r = c.clone();
                r[1..].reverse();
                r
            })
            .collect();
        let mut image = vec![0; self.p()];
        for (j, &pj) in self.image.iter().enumerate() {
            image[pj] = j;
        }
        FactoringPermutation { cycles, image }
    }
}

impl fmt::Display for FactoringPermutation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.cycles.is_empty() {
            return f.write_str("id");
        }
        for c in &self.cycles {
            let labels: Vec<String> = c.iter().map(|v| (v + 1).to_string()).collect();
            write!(f, "({})", labels.join(" "))?;
        }
        Ok(())
    }
}

fn rotate_to_min(mut c: Vec<usize>) -> Vec<usize> {
    if let Some(pos) = c.iter().enumerate().min_by_key(|(_, v)| **v).map(|(i, _)| i) {
        c.rotate_left(pos);
    }
    c
}

/// Every permutation whose nontrivial cycles are vertex-disjoint directed
/// cycles of `g`, identity first.
pub fn factoring_permutations(g: &DirectedGraph) -> Result<Vec<FactoringPermutation>> {
    let cycles = g.simple_cycles(CYCLE_LIMIT)?;
    let mut out = Vec::new();
    let mut chosen: Vec<usize> = Vec::new();
    collect_disjoint(&cycles, 0, &mut chosen, &mut BTreeSet::new(), &mut |sel: &[usize]| {
        let cs = sel.iter().map(|&i| cycles[i].clone()).collect();
        out.push(FactoringPermutation::new(g, cs));
    });
    let mut perms = out.into_iter().collect::<Result<Vec<_>>>()?;
    perms.sort_by(|a, b| a.cycles.len().cmp(&b.cycles.len()).then(a.cmp(b)));
    Ok(perms)
}

fn collect_disjoint(
    cycles: &[Vec<usize>],
    from: usize,
    chosen: &mut Vec<usize>,
    used: &mut BTreeSet<usize>,
    emit: &mut impl FnMut(&[usize]),
) {
    emit(chosen);
    for i in from..cycles.len() {
        if cycles[i].iter().any(|v| used.contains(v)) {
            continue;
        }
        used.extend(cycles[i].iter().copied());
        chosen.push(i);
        collect_disjoint(cycles, i + 1, chosen, used, emit);
        chosen.pop();
        for v in &cycles[i] {
            used.remove(v);
        }
    }
}

/// `pi(G)`: `pi(j) -> j` for moved `j`, and `i -> j` whenever
/// `i -> pi(j)` is an edge of `g` (with `i != j`, `i != pi(j)`).
pub fn apply_permutation(g: &DirectedGraph, pi: &FactoringPermutation) -> Result<DirectedGraph> {
    if pi.p() != g.p() {
        return Err(Error::InvalidGraph(format!("permutation on {} vertices for a graph on {}", pi.p(), g.p())));
    }
    let p = g.p();
    let mut edges = BTreeSet::new();
    for j in 0..p {
        let pj = pi.apply(j);
        if pj != j {
            edges.insert((pj, j));
        }
        for &i in g.parents(pj) {
            if i != j && i != pj {
                edges.insert((i, j));
            }
        }
    }
    DirectedGraph::new(p, edges)
}

/// Weights of `pi(G)`: unmoved columns are copied; for moved `j`,
/// `lambda'_{pi(j) j} = 1 / lambda_{j pi(j)}` and
/// `lambda'_{ij} = -lambda_{i pi(j)} / lambda_{j pi(j)}` otherwise.
pub fn transform_lambda(lambda: &DMatrix<f64>, pi: &FactoringPermutation) -> Result<DMatrix<f64>> {
    let p = lambda.nrows();
    let mut out = DMatrix::zeros(p, p);
    for j in 0..p {
        let pj = pi.apply(j);
        if pj == j {
            out.set_column(j, &lambda.column(j));
            continue;
        }
        let pivot = lambda[(j, pj)];
        if pivot == 0.0 {
            return Err(Error::ZeroDivisor { from: j + 1, to: pj + 1 });
        }
        for i in 0..p {
            if i == j {
                continue;
            }
            out[(i, j)] = if i == pj { 1.0 / pivot } else { -lambda[(i, pj)] / pivot };
        }
    }
    Ok(out)
}

/// Parameters of `pi(G)` generating the same distribution: `eps'_j =
/// -eps_{pi(j)} / lambda_{j pi(j)}` for moved `j`.
pub fn transform_parameters(params: &SemParameters, pi: &FactoringPermutation) -> Result<SemParameters> {
    let graph = apply_permutation(params.graph(), pi)?;
    let lambda = transform_lambda(params.lambda(), pi)?;
    let p = params.p();
    let mut omega2 = params.omega2().to_vec();
    let mut omega3 = params.omega3().to_vec();
    for j in 0..p {
        let pj = pi.apply(j);
        if pj != j {
            let l = params.lambda()[(j, pj)];
            omega2[j] = params.omega2()[pj] / (l * l);
            omega3[j] = -params.omega3()[pj] / (l * l * l);
        }
    }
    // Entries that cancel exactly may leave zero weights on edges; keep them.
    SemParameters::new(graph, lambda, omega2, omega3)
}

/// All graphs distribution-equivalent to `g`, `g` first.
pub fn equivalence_class(g: &DirectedGraph) -> Result<Vec<DirectedGraph>> {
    let mut seen = BTreeSet::new();
    let mut out = Vec::new();
    for pi in factoring_permutations(g)? {
        let h = apply_permutation(g, &pi)?;
        if seen.insert(h.edges().clone()) {
            out.push(h);
        }
    }
    Ok(out)
}

/// Whether `h` is distribution-equivalent to `g`.
pub fn are_equivalent(g: &DirectedGraph, h: &DirectedGraph) -> Result<bool> {
    Ok(g.p() == h.p() && equivalence_class(g)?.iter().any(|x| x.edges() == h.edges()))
}

/// The permutation reversing every cycle of the cycle-disjoint `g` whose
/// weight product exceeds one in absolute value.
pub fn stabilizing_permutation(g: &DirectedGraph, lambda: &DMatrix<f64>) -> Result<FactoringPermutation> {
    let mut flip = Vec::new();
    for cycle in g.disjoint_cycles()? {
        let n = cycle.len();
        let prod: f64 = (0..n).map(|k| lambda[(cycle[k], cycle[(k + 1) % n])]).product();
        if (prod.abs() - 1.0).abs() <= UNIT_PRODUCT_TOL {
            return Err(Error::UnstableBothWays { cycle: cycle.iter().map(|v| v + 1).collect() });
        }
        if prod.abs() > 1.0 {
            flip.push(cycle);
        }
    }
    FactoringPermutation::new(g, flip)
}

/// The member of the class of `(g, lambda)` in which every cycle has weight
/// product below one in absolute value.
pub fn stable_representative(g: &DirectedGraph, lambda: &DMatrix<f64>) -> Result<(DirectedGraph, DMatrix<f64>)> {
    let pi = stabilizing_permutation(g, lambda)?;
    if pi.is_identity() {
        return Ok((g.clone(), lambda.clone()));
    }
    Ok((apply_permutation(g, &pi)?, transform_lambda(lambda, &pi)?))
}

/// Relation between `u < v` in a graph.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum PairClass {
    None,
    Forward,
    Backward,
    Both,
}

fn classify(g: &DirectedGraph, u: usize, v: usize) -> PairClass {
    match (g.has_edge(u, v), g.has_edge(v, u)) {
        (false, false) => PairClass::None,
        (true, false) => PairClass::Forward,
        (false, true) => PairClass::Backward,
        (true, true) => PairClass::Both,
    }
}

fn normalized(g: &DirectedGraph, lambda: &DMatrix<f64>) -> DirectedGraph {
    stable_representative(g, lambda).map(|(h, _)| h).unwrap_or_else(|_| g.clone())
}

/// Fraction of unordered vertex pairs classified identically (no edge,
/// `u -> v`, `v -> u`, or both) after moving both graphs to their stable
/// representatives. Graphs that cannot be normalized are compared as given.
pub fn correct_pairs(
    g_true: &DirectedGraph,
    lambda_true: &DMatrix<f64>,
    g_est: &DirectedGraph,
    lambda_est: &DMatrix<f64>,
) -> Result<f64> {
    if g_true.p() != g_est.p() {
        return Err(Error::InvalidGraph(format!("comparing graphs on {} and {} vertices", g_true.p(), g_est.p())));
    }
    let p = g_true.p();
    if p < 2 {
        return Ok(1.0);
    }
    let a = normalized(g_true, lambda_true);
    let b = normalized(g_est, lambda_est);
    let mut agree = 0usize;
    for u in 0..p {
        for v in u + 1..p {
            if classify(&a, u, v) == classify(&b, u, v) {
                agree += 1;
            }
        }
    }
    Ok(agree as f64 / (p * (p - 1) / 2) as f64)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::sem::population_moments;

    fn chained_cycles() -> DirectedGraph {
        DirectedGraph::from_one_based(8, &[(1, 3), (2, 4), (3, 4), (4, 5), (5, 3), (5, 6), (6, 7), (7, 8), (8, 6)])
            .unwrap()
    }

    fn chorded_four_cycle() -> DirectedGraph {
        DirectedGraph::from_one_based(4, &[(1, 2), (2, 3), (3, 4), (4, 1), (2, 4)]).unwrap()
    }

    fn perm(g: &DirectedGraph, one_based: &[&[usize]]) -> FactoringPermutation {
        FactoringPermutation::new(g, one_based.iter().map(|c| c.iter().map(|v| v - 1).collect()).collect()).unwrap()
    }

    #[test]
    fn chained_cycles_image() {
        let g = chained_cycles();
        let h = apply_permutation(&g, &perm(&g, &[&[3, 4, 5]])).unwrap();
        let expected = DirectedGraph::from_one_based(
            8,
            &[(4, 3), (5, 4), (3, 5), (2, 3), (1, 5), (5, 6), (6, 7), (7, 8), (8, 6)],
        )
        .unwrap();
        assert_eq!(h, expected);
    }

    #[test]
    fn chorded_four_cycle_class() {
        let g = chorded_four_cycle();
        let perms = factoring_permutations(&g).unwrap();
        let shown: Vec<String> = perms.iter().map(|p| p.to_string()).collect();
        assert_eq!(shown, vec!["id", "(1 2 3 4)", "(1 2 4)"]);
        let middle = DirectedGraph::from_one_based(4, &[(2, 1), (4, 2), (1, 4), (2, 3), (3, 2)]).unwrap();
        let right = DirectedGraph::from_one_based(4, &[(2, 1), (3, 2), (4, 3), (1, 4), (2, 3)]).unwrap();
        assert_eq!(apply_permutation(&g, &perm(&g, &[&[1, 2, 4]])).unwrap(), middle);
        assert_eq!(apply_permutation(&g, &perm(&g, &[&[1, 2, 3, 4]])).unwrap(), right);
        assert_eq!(equivalence_class(&g).unwrap().len(), 3);
    }

    #[test]
    fn inverse_undoes_permutation() {
        let g = chained_cycles();
        for pi in factoring_permutations(&g).unwrap() {
            let h = apply_permutation(&g, &pi).unwrap();
            assert_eq!(apply_permutation(&h, &pi.inverse()).unwrap(), g);
        }
    }

    #[test]
    fn moments_are_invariant_on_chained_cycles() {
        let g = chained_cycles();
        let weights = [0.7, -0.6, 0.8, 0.55, -0.65, 0.6, 0.75, -0.7, 0.5];
        let edges: Vec<(usize, usize, f64)> =
            g.edges().iter().zip(weights).map(|(&(i, j), w)| (i, j, w)).collect();
        let params = SemParameters::from_weighted_edges(
            8,
            &edges,
            vec![1.0, 0.9, 0.8, 1.1, 0.95, 0.85, 1.05, 0.9],
            vec![1.0, -0.5, 0.7, 1.2, -0.9, 0.6, 0.8, -1.1],
        )
        .unwrap();
        let base = population_moments(&params).unwrap();
        for pi in factoring_permutations(&g).unwrap() {
            let moved = transform_parameters(&params, &pi).unwrap();
            let m = population_moments(&moved).unwrap();
            assert!(m.max_abs_diff(&base) < 1e-10, "{pi}");
        }
    }

    #[test]
    fn zero_weight_blocks_transform() {
        let g = DirectedGraph::from_one_based(3, &[(1, 2), (2, 3), (3, 1)]).unwrap();
        let mut lambda = DMatrix::zeros(3, 3);
        lambda[(0, 1)] = 3.0;
        let params = SemParameters::new(g.clone(), lambda, vec![1.0, 2.0, 1.0], vec![1.0, 2.0, 1.0]).unwrap();
        let pi = perm(&g, &[&[1, 2, 3]]);
        assert!(matches!(transform_parameters(&params, &pi), Err(Error::ZeroDivisor { from: 2, to: 3 })));
    }

    #[test]
    fn stable_representative_reverses_large_cycles() {
        let g = DirectedGraph::from_one_based(3, &[(1, 2), (2, 3), (3, 1)]).unwrap();
        let mut lambda = DMatrix::zeros(3, 3);
        lambda[(0, 1)] = 2.0;
        lambda[(1, 2)] = 2.5;
        lambda[(2, 0)] = 10.0 / 3.0;
        let (h, l) = stable_representative(&g, &lambda).unwrap();
        let expected = DirectedGraph::from_one_based(3, &[(2, 1), (3, 2), (1, 3)]).unwrap();
        assert_eq!(h, expected);
        let prod = l[(1, 0)] * l[(2, 1)] * l[(0, 2)];
        assert!((prod - 0.06).abs() < 1e-12);
        let (h2, l2) = stable_representative(&h, &l).unwrap();
        assert_eq!(h2, h);
        assert_eq!(l2, l);
    }

    #[test]
    fn unit_product_is_rejected() {
        let g = DirectedGraph::from_one_based(2, &[(1, 2), (2, 1)]).unwrap();
        let lambda = DMatrix::from_row_slice(2, 2, &[0.0, 2.0, 0.5, 0.0]);
        assert!(matches!(stable_representative(&g, &lambda), Err(Error::UnstableBothWays { .. })));
    }

    #[test]
    fn correct_pairs_ignores_orientation_choice() {
        let g = DirectedGraph::from_one_based(3, &[(1, 2), (2, 3), (3, 1)]).unwrap();
        let mut lambda = DMatrix::zeros(3, 3);
        lambda[(0, 1)] = 0.5;
        lambda[(1, 2)] = 0.4;
        lambda[(2, 0)] = 0.3;
        let pi = perm(&g, &[&[1, 2, 3]]);
        let h = apply_permutation(&g, &pi).unwrap();
        let lh = transform_lambda(&lambda, &pi).unwrap();
        assert_eq!(correct_pairs(&g, &lambda, &h, &lh).unwrap(), 1.0);
        let empty = DirectedGraph::empty(3).unwrap();
        let zero = DMatrix::zeros(3, 3);
        assert_eq!(correct_pairs(&empty, &zero, &empty, &zero).unwrap(), 1.0);
        assert!((correct_pairs(&g, &lambda, &empty, &zero).unwrap() - 0.0).abs() < 1e-15);
    }
}

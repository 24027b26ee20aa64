//! Maximal cliques of small undirected graphs.

use std::collections::BTreeSet;

/// Maximal cliques of the graph on `0..k` with the given adjacency, by
/// Bron–Kerbosch with pivoting. Cliques are sorted, and the list is sorted
/// lexicographically. Isolated vertices are reported as singleton cliques.
pub fn maximal_cliques(adj: &[BTreeSet<usize>]) -> Vec<Vec<usize>> {
    let mut out = Vec::new();
    let p: BTreeSet<usize> = (0..adj.len()).collect();
    expand(adj, &mut Vec::new(), p, BTreeSet::new(), &mut out);
    for c in &mut out {
        c.sort_unstable();
    }
    out.sort();
    out
}

fn expand(
    adj: &[BTreeSet<usize>],
    r: &mut Vec<usize>,
    mut p: BTreeSet<usize>,
    mut x: BTreeSet<usize>,
    out: &mut Vec<Vec<usize>>,
) {
    if p.is_empty() {
        if x.is_empty() {
            out.push(r.clone());
        }
        return;
    }
    let pivot = p
        .union(&x)
        .copied()
        .max_by_key(|&u| (p.intersection(&adj[u]).count(), std::cmp::Reverse(u)))
        .expect("p is non-empty");
    let candidates: Vec<usize> = p.difference(&adj[pivot]).copied().collect();
    for v in candidates {
        r.push(v);
        let np = p.intersection(&adj[v]).copied().collect();
        let nx = x.intersection(&adj[v]).copied().collect();
        expand(adj, r, np, nx, out);
        r.pop();
        p.remove(&v);
        x.insert(v);
    }
}

/// Adjacency lists from an undirected edge list on `0..k`.
pub fn adjacency(k: usize, edges: &[(usize, usize)]) -> Vec<BTreeSet<usize>> {
    let mut adj = vec![BTreeSet::new(); k];
    for &(a, b) in edges {
        if a != b {
            adj[a].insert(b);
            adj[b].insert(a);
        }
    }
    adj
}

#[cfg(test)]
mod tests {
    use super::*;

    fn brute_force(adj: &[BTreeSet<usize>]) -> Vec<Vec<usize>> {
        let k = adj.len();
        let is_clique = |m: u32| {
            (0..k).all(|a| (0..k).all(|b| a == b || m >> a & 1 == 0 || m >> b & 1 == 0 || adj[a].contains(&b)))
        };
        let cliques: Vec<u32> = (1..1u32 << k).filter(|&m| is_clique(m)).collect();
        let mut out: Vec<Vec<usize>> = cliques
            .iter()
            .filter(|&&m| !cliques.iter().any(|&o| o != m && o & m == m))
            .map(|&m| (0..k).filter(|&a| m >> a & 1 == 1).collect())
            .collect();
        out.sort();
        out
    }

    #[test]
    fn two_triangles_sharing_a_vertex() {
        let adj = adjacency(5, &[(0, 1), (1, 2), (0, 2), (2, 3), (3, 4), (2, 4)]);
        assert_eq!(maximal_cliques(&adj), vec![vec![0, 1, 2], vec![2, 3, 4]]);
    }

    #[test]
    fn isolated_vertices_are_singletons() {
        let adj = adjacency(3, &[(0, 1)]);
        assert_eq!(maximal_cliques(&adj), vec![vec![0, 1], vec![2]]);
    }

    #[test]
    fn agrees_with_subset_enumeration() {
        let mut state = 12345u64;
        for _ in 0..40 {
            let k = 7;
            let mut edges = Vec::new();
            for a in 0..k {
                for b in a + 1..k {
                    state = state.wrapping_mul(6364136223846793005).wrapping_add(1442695040888963407);
                    if state >> 62 != 0 {
                        edges.push((a, b));
                    }
                }
            }
            let adj = adjacency(k, &edges);
            assert_eq!(maximal_cliques(&adj), brute_force(&adj));
        }
    }
}

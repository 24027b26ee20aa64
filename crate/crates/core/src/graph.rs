//! Directed graphs, strong components, ancestral sets and the graphical
//! predicates that say when the determinant statistics vanish identically.
//!
//! Vertices are `0..p` internally. Constructors and JSON helpers that take
//! 1-based labels are named as such.

use std::collections::{BTreeSet, VecDeque};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

pub type VertexSet = BTreeSet<usize>;

/// A directed graph without self-loops or parallel edges.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct DirectedGraph {
    p: usize,
    edges: BTreeSet<(usize, usize)>,
    children: Vec<Vec<usize>>,
    parents: Vec<Vec<usize>>,
}

impl DirectedGraph {
    /// Builds a graph from 0-based edges `(i, j)` meaning `i -> j`.
    pub fn new(p: usize, edges: impl IntoIterator<Item = (usize, usize)>) -> Result<Self> {
        if p == 0 {
            return Err(Error::InvalidGraph("vertex count must be positive".into()));
        }
        let mut set = BTreeSet::new();
        for (i, j) in edges {
            if i >= p || j >= p {
                return Err(Error::InvalidGraph(format!(
                    "edge [{}, {}] has a label outside 1..={p}",
                    i + 1,
                    j + 1
                )));
            }
            if i == j {
                return Err(Error::InvalidGraph(format!("edge [{}, {}] is a self-loop", i + 1, j + 1)));
            }
            if !set.insert((i, j)) {
                return Err(Error::InvalidGraph(format!("edge [{}, {}] is duplicated", i + 1, j + 1)));
            }
        }
        let mut children = vec![Vec::new(); p];
        let mut parents = vec![Vec::new(); p];
        for &(i, j) in &set {
            children[i].push(j);
            parents[j].push(i);
        }
        Ok(Self { p, edges: set, children, parents })
    }

    /// Builds a graph from 1-based edges, the convention of every file format.
    pub fn from_one_based(p: usize, edges: &[(usize, usize)]) -> Result<Self> {
        for &(i, j) in edges {
            if i == 0 || j == 0 || i > p || j > p {
                return Err(Error::InvalidGraph(format!(
                    "edge [{i}, {j}] has a label outside 1..={p}"
                )));
            }
        }
        Self::new(p, edges.iter().map(|&(i, j)| (i - 1, j - 1)))
    }

    pub fn empty(p: usize) -> Result<Self> {
        Self::new(p, std::iter::empty())
    }

    pub fn p(&self) -> usize {
        self.p
    }

    pub fn edges(&self) -> &BTreeSet<(usize, usize)> {
        &self.edges
    }

    pub fn edge_count(&self) -> usize {
        self.edges.len()
    }

    pub fn has_edge(&self, i: usize, j: usize) -> bool {
        self.edges.contains(&(i, j))
    }

    pub fn children(&self, v: usize) -> &[usize] {
        &self.children[v]
    }

    pub fn parents(&self, v: usize) -> &[usize] {
        &self.parents[v]
    }

    /// Edges as 1-based pairs.
    pub fn edges_one_based(&self) -> Vec<(usize, usize)> {
        self.edges.iter().map(|&(i, j)| (i + 1, j + 1)).collect()
    }

    pub fn check_vertex(&self, v: usize) -> Result<()> {
        if v < self.p {
            Ok(())
        } else {
            Err(Error::VertexOutOfRange { vertex: v + 1, p: self.p })
        }
    }

    /// Strong components ordered topologically along the condensation.
    ///
    /// Among components that are simultaneously available the one holding the
    /// smallest vertex comes first, so the order is canonical.
    pub fn strong_components(&self) -> ComponentPartition {
        let comp_of = tarjan(self.p, |v| self.children[v].iter().copied());
        let k = comp_of.iter().copied().max().map_or(0, |m| m + 1);
        let mut members: Vec<Vec<usize>> = vec![Vec::new(); k];
        for (v, &c) in comp_of.iter().enumerate() {
            members[c].push(v);
        }
        let mut succ: Vec<BTreeSet<usize>> = vec![BTreeSet::new(); k];
        let mut indeg = vec![0usize; k];
        for &(i, j) in &self.edges {
            let (a, b) = (comp_of[i], comp_of[j]);
            if a != b && succ[a].insert(b) {
                indeg[b] += 1;
            }
        }
        // Kahn's algorithm keyed on the smallest member.
        let mut ready: BTreeSet<(usize, usize)> = (0..k)
            .filter(|&c| indeg[c] == 0)
            .map(|c| (members[c][0], c))
            .collect();
        let mut components = Vec::with_capacity(k);
        while let Some((_, c)) = ready.pop_first() {
            components.push(members[c].iter().copied().collect::<VertexSet>());
            for &d in &succ[c] {
                indeg[d] -= 1;
                if indeg[d] == 0 {
                    ready.insert((members[d][0], d));
                }
            }
        }
        ComponentPartition { components }
    }

    /// True iff every vertex lies on at most one directed cycle, i.e. every
    /// non-trivial strong component is a simple directed cycle.
    pub fn is_cycle_disjoint(&self) -> bool {
        self.strong_components().components.iter().all(|comp| {
            comp.len() < 2
                || comp.iter().all(|&v| {
                    let out = self.children[v].iter().filter(|c| comp.contains(c)).count();
                    let inn = self.parents[v].iter().filter(|c| comp.contains(c)).count();
                    out == 1 && inn == 1
                })
        })
    }

    /// The simple directed cycles of a cycle-disjoint graph, each listed
    /// starting at its smallest vertex and following the edges.
    pub fn disjoint_cycles(&self) -> Result<Vec<Vec<usize>>> {
        if !self.is_cycle_disjoint() {
            return Err(Error::InvalidGraph("graph is not cycle-disjoint".into()));
        }
        let mut cycles = Vec::new();
        for comp in self.strong_components().components {
            if comp.len() < 2 {
                continue;
            }
            let start = *comp.first().unwrap();
            let mut cycle = vec![start];
            let mut cur = start;
            loop {
                let next = *self.children[cur].iter().find(|c| comp.contains(c)).unwrap();
                if next == start {
                    break;
                }
                cycle.push(next);
                cur = next;
            }
            cycles.push(cycle);
        }
        Ok(cycles)
    }

    /// `anc(c)`: vertices with a directed path (length >= 0) into `c`.
    pub fn ancestors(&self, c: &VertexSet) -> Result<VertexSet> {
        for &v in c {
            self.check_vertex(v)?;
        }
        Ok(self.reach(c.iter().copied(), None, |v| &self.parents[v]))
    }

    /// Vertices reachable from `from` by directed paths (length >= 0).
    pub fn descendants(&self, from: &VertexSet) -> Result<VertexSet> {
        for &v in from {
            self.check_vertex(v)?;
        }
        Ok(self.reach(from.iter().copied(), None, |v| &self.children[v]))
    }

    pub fn is_ancestral(&self, c: &VertexSet) -> Result<bool> {
        Ok(&self.ancestors(c)? == c)
    }

    fn reach<'a>(
        &'a self,
        start: impl Iterator<Item = usize>,
        avoid: Option<usize>,
        next: impl Fn(usize) -> &'a [usize],
    ) -> VertexSet {
        let mut seen = VertexSet::new();
        let mut queue = VecDeque::new();
        for s in start {
            if Some(s) != avoid && seen.insert(s) {
                queue.push_back(s);
            }
        }
        while let Some(v) = queue.pop_front() {
            for &w in next(v) {
                if Some(w) != avoid && seen.insert(w) {
                    queue.push_back(w);
                }
            }
        }
        seen
    }

    /// Ancestors of `target` in the graph with vertex `removed` deleted.
    fn ancestors_avoiding(&self, target: usize, removed: usize) -> VertexSet {
        self.reach(std::iter::once(target), Some(removed), |v| &self.parents[v])
    }

    /// Ground truth for "d2(u, v) vanishes identically": every 2-trek between
    /// `u` and `v` has `u` on its `v`-side path.
    pub fn d2_zero_predicate(&self, u: usize, v: usize) -> Result<bool> {
        self.check_pair(u, v)?;
        let anc_u = self.ancestors(&VertexSet::from([u]))?;
        if anc_u.contains(&v) {
            return Ok(false);
        }
        // A top w != u reaching v without passing u gives a violating trek.
        let anc_v_without_u = self.ancestors_avoiding(v, u);
        Ok(anc_u.intersection(&anc_v_without_u).next().is_none())
    }

    /// Ground truth for "d3(u, v) vanishes identically": no simple 2-trek
    /// between `u` and `v` has two non-empty sides.
    pub fn d3_zero_predicate(&self, u: usize, v: usize) -> Result<bool> {
        self.check_pair(u, v)?;
        let to_u = self.ancestors_avoiding(u, v);
        let to_v = self.ancestors_avoiding(v, u);
        Ok(!to_u.iter().any(|w| *w != u && to_v.contains(w)))
    }

    fn check_pair(&self, u: usize, v: usize) -> Result<()> {
        self.check_vertex(u)?;
        self.check_vertex(v)?;
        if u == v {
            return Err(Error::InvalidGraph(format!("predicate needs distinct vertices, got {} twice", u + 1)));
        }
        Ok(())
    }

    /// Subgraph induced on `keep`; vertex `keep[k]` becomes `k`.
    pub fn induced(&self, keep: &[usize]) -> Result<DirectedGraph> {
        let mut pos = vec![usize::MAX; self.p];
        for (k, &v) in keep.iter().enumerate() {
            self.check_vertex(v)?;
            pos[v] = k;
        }
        DirectedGraph::new(
            keep.len(),
            self.edges
                .iter()
                .filter(|(i, j)| pos[*i] != usize::MAX && pos[*j] != usize::MAX)
                .map(|&(i, j)| (pos[i], pos[j])),
        )
    }

    /// All simple directed cycles (Johnson's circuit enumeration), each
    /// rotated to start at its smallest vertex. Fails once more than `limit`
    /// cycles have been found.
    pub fn simple_cycles(&self, limit: usize) -> Result<Vec<Vec<usize>>> {
        let mut out = Vec::new();
        for s in 0..self.p {
            // Strong component of s in the subgraph on vertices >= s.
            let comp_of = tarjan(self.p, |v| {
                self.children[v].iter().copied().filter(move |&w| v >= s && w >= s)
            });
            let scc: Vec<bool> = (0..self.p).map(|v| v >= s && comp_of[v] == comp_of[s]).collect();
            if !self.children[s].iter().any(|&w| scc[w]) {
                continue;
            }
            let mut johnson = Johnson {
                graph: self,
                allowed: &scc,
                blocked: vec![false; self.p],
                block_map: vec![BTreeSet::new(); self.p],
                stack: Vec::new(),
                out: &mut out,
                limit,
            };
            johnson.circuit(s, s)?;
        }
        Ok(out)
    }
}

struct Johnson<'a> {
    graph: &'a DirectedGraph,
    allowed: &'a [bool],
    blocked: Vec<bool>,
    block_map: Vec<BTreeSet<usize>>,
    stack: Vec<usize>,
    out: &'a mut Vec<Vec<usize>>,
    limit: usize,
}

impl Johnson<'_> {
    fn circuit(&mut self, v: usize, s: usize) -> Result<bool> {
        let mut found = false;
        self.stack.push(v);
        self.blocked[v] = true;
        for &w in self.graph.children(v) {
            if !self.allowed[w] {
                continue;
            }
            if w == s {
                if self.out.len() >= self.limit {
                    return Err(Error::ExponentialBlowup { limit: self.limit });
                }
                self.out.push(self.stack.clone());
                found = true;
            } else if !self.blocked[w] && self.circuit(w, s)? {
                found = true;
            }
        }
        if found {
            self.unblock(v);
        } else {
            for &w in self.graph.children(v) {
                if self.allowed[w] {
                    self.block_map[w].insert(v);
                }
            }
        }
        self.stack.pop();
        Ok(found)
    }

    fn unblock(&mut self, u: usize) {
        self.blocked[u] = false;
        let waiting = std::mem::take(&mut self.block_map[u]);
        for w in waiting {
            if self.blocked[w] {
                self.unblock(w);
            }
        }
    }
}

/// Tarjan's algorithm, iterative. Returns the component index of every vertex;
/// indices are assigned in reverse topological order of the condensation.
pub(crate) fn tarjan<I, F>(p: usize, succ: F) -> Vec<usize>
where
    F: Fn(usize) -> I,
    I: Iterator<Item = usize>,
{
    const UNSEEN: usize = usize::MAX;
    let mut index = vec![UNSEEN; p];
    let mut low = vec![0usize; p];
    let mut on_stack = vec![false; p];
    let mut comp = vec![UNSEEN; p];
    let mut stack = Vec::new();
    let mut next_index = 0;
    let mut next_comp = 0;

    for root in 0..p {
        if index[root] != UNSEEN {
            continue;
        }
        let mut call: Vec<(usize, Vec<usize>, usize)> = Vec::new();
        index[root] = next_index;
        low[root] = next_index;
        next_index += 1;
        stack.push(root);
        on_stack[root] = true;
        call.push((root, succ(root).collect(), 0));

        while let Some((v, ws, pos)) = call.last_mut() {
            let v = *v;
            if *pos < ws.len() {
                let w = ws[*pos];
                *pos += 1;
                if index[w] == UNSEEN {
                    index[w] = next_index;
                    low[w] = next_index;
                    next_index += 1;
                    stack.push(w);
                    on_stack[w] = true;
                    call.push((w, succ(w).collect(), 0));
                } else if on_stack[w] {
                    low[v] = low[v].min(index[w]);
                }
            } else {
                call.pop();
                if let Some((parent, _, _)) = call.last() {
                    low[*parent] = low[*parent].min(low[v]);
                }
                if low[v] == index[v] {
                    loop {
                        let w = stack.pop().unwrap();
                        on_stack[w] = false;
                        comp[w] = next_comp;
                        if w == v {
                            break;
                        }
                    }
                    next_comp += 1;
                }
            }
        }
    }
    comp
}

/// Strong components in a topological order of the condensation.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ComponentPartition {
    pub components: Vec<VertexSet>,
}

impl ComponentPartition {
    pub fn len(&self) -> usize {
        self.components.len()
    }

    pub fn is_empty(&self) -> bool {
        self.components.is_empty()
    }

    /// Component index of every vertex.
    pub fn membership(&self, p: usize) -> Vec<usize> {
        let mut of = vec![usize::MAX; p];
        for (k, c) in self.components.iter().enumerate() {
            for &v in c {
                of[v] = k;
            }
        }
        of
    }
}

/// Graph JSON: `{"p": int, "edges": [[i, j], ...]}` with 1-based labels.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct GraphJson {
    pub p: usize,
    pub edges: Vec<Vec<serde_json::Value>>,
}

impl DirectedGraph {
    pub fn to_json(&self) -> GraphJson {
        GraphJson {
            p: self.p,
            edges: self
                .edges_one_based()
                .into_iter()
                .map(|(i, j)| vec![i.into(), j.into()])
                .collect(),
        }
    }

    pub fn from_json(json: &GraphJson) -> Result<Self> {
        let mut edges = Vec::with_capacity(json.edges.len());
        for (k, e) in json.edges.iter().enumerate() {
            let label = |x: &serde_json::Value| x.as_u64().map(|v| v as usize);
            match e.as_slice() {
                [a, b, ..] if label(a).is_some() && label(b).is_some() => {
                    edges.push((label(a).unwrap(), label(b).unwrap()))
                }
                _ => {
                    return Err(Error::Parse(format!(
                        "edge #{} {} is not a pair of positive integers",
                        k + 1,
                        serde_json::Value::Array(e.clone())
                    )))
                }
            }
        }
        Self::from_one_based(json.p, &edges)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    pub(crate) fn chained_cycles() -> DirectedGraph {
        DirectedGraph::from_one_based(
            8,
            &[(1, 3), (2, 4), (3, 4), (4, 5), (5, 3), (5, 6), (6, 7), (7, 8), (8, 6)],
        )
        .unwrap()
    }

    fn chorded_four_cycle() -> DirectedGraph {
        DirectedGraph::from_one_based(4, &[(1, 2), (2, 3), (3, 4), (4, 1), (2, 4)]).unwrap()
    }

    fn set(v: &[usize]) -> VertexSet {
        v.iter().map(|x| x - 1).collect()
    }

    #[test]
    fn rejects_bad_edges() {
        assert!(DirectedGraph::from_one_based(3, &[(1, 1)]).is_err());
        assert!(DirectedGraph::from_one_based(3, &[(1, 2), (1, 2)]).is_err());
        let err = DirectedGraph::from_one_based(3, &[(1, 4)]).unwrap_err().to_string();
        assert!(err.contains("[1, 4]"), "{err}");
        assert!(DirectedGraph::empty(0).is_err());
    }

    #[test]
    fn components_of_small_graphs() {
        let cyc = DirectedGraph::from_one_based(3, &[(1, 2), (2, 3), (3, 1)]).unwrap();
        assert_eq!(cyc.strong_components().components, vec![set(&[1, 2, 3])]);

        let chain = DirectedGraph::from_one_based(3, &[(1, 2), (2, 3)]).unwrap();
        assert_eq!(
            chain.strong_components().components,
            vec![set(&[1]), set(&[2]), set(&[3])]
        );

        let reversed = DirectedGraph::from_one_based(3, &[(3, 2), (2, 1)]).unwrap();
        assert_eq!(
            reversed.strong_components().components,
            vec![set(&[3]), set(&[2]), set(&[1])]
        );
    }

    #[test]
    fn components_of_chained_cycles() {
        let comps = chained_cycles().strong_components().components;
        assert_eq!(comps, vec![set(&[1]), set(&[2]), set(&[3, 4, 5]), set(&[6, 7, 8])]);
    }

    #[test]
    fn cycle_disjointness() {
        assert!(chained_cycles().is_cycle_disjoint());
        assert!(!chorded_four_cycle().is_cycle_disjoint());
        assert!(DirectedGraph::empty(3).unwrap().is_cycle_disjoint());
        assert_eq!(chained_cycles().disjoint_cycles().unwrap(), vec![vec![2, 3, 4], vec![5, 6, 7]]);
    }

    #[test]
    fn ancestor_sets() {
        let chain = DirectedGraph::from_one_based(3, &[(1, 2), (2, 3)]).unwrap();
        assert_eq!(chain.ancestors(&set(&[3])).unwrap(), set(&[1, 2, 3]));
        assert_eq!(chain.ancestors(&set(&[1])).unwrap(), set(&[1]));
        assert!(chain.is_ancestral(&set(&[1, 2])).unwrap());
        assert!(!chain.is_ancestral(&set(&[2])).unwrap());
        assert!(chain.ancestors(&VertexSet::from([7])).is_err());

        let g = chained_cycles();
        assert_eq!(g.ancestors(&set(&[6])).unwrap(), set(&[1, 2, 3, 4, 5, 6, 7, 8]));
        assert_eq!(g.ancestors(&set(&[3])).unwrap(), set(&[1, 2, 3, 4, 5]));
    }

    #[test]
    fn determinant_predicates() {
        let edge = DirectedGraph::from_one_based(2, &[(1, 2)]).unwrap();
        assert!(edge.d2_zero_predicate(0, 1).unwrap());
        assert!(!edge.d2_zero_predicate(1, 0).unwrap());

        let fork = DirectedGraph::from_one_based(3, &[(3, 1), (3, 2)]).unwrap();
        assert!(!fork.d2_zero_predicate(0, 1).unwrap());
        assert!(!fork.d3_zero_predicate(0, 1).unwrap());

        let chain = DirectedGraph::from_one_based(3, &[(1, 2), (2, 3)]).unwrap();
        assert!(chain.d3_zero_predicate(0, 2).unwrap());

        let cyc = DirectedGraph::from_one_based(4, &[(1, 2), (2, 3), (3, 4), (4, 1)]).unwrap();
        for u in 0..4 {
            for v in 0..4 {
                if u != v {
                    assert!(cyc.d3_zero_predicate(u, v).unwrap());
                    assert!(!cyc.d2_zero_predicate(u, v).unwrap());
                }
            }
        }
        assert!(chain.d2_zero_predicate(1, 1).is_err());
    }

    #[test]
    fn johnson_enumerates_chorded_cycles() {
        let mut cycles = chorded_four_cycle().simple_cycles(100).unwrap();
        cycles.sort();
        assert_eq!(cycles, vec![vec![0, 1, 2, 3], vec![0, 1, 3]]);
        assert!(chorded_four_cycle().simple_cycles(1).is_err());

        let complete = DirectedGraph::new(
            4,
            (0..4).flat_map(|i| (0..4).filter(move |&j| j != i).map(move |j| (i, j))),
        )
        .unwrap();
        // 6 two-cycles, 8 three-cycles, 6 four-cycles.
        assert_eq!(complete.simple_cycles(1000).unwrap().len(), 20);
    }

    #[test]
    fn json_round_trip_and_errors() {
        let g = chained_cycles();
        let back = DirectedGraph::from_json(&g.to_json()).unwrap();
        assert_eq!(g, back);
        let bad: GraphJson = serde_json::from_str(r#"{"p":3,"edges":[[1,2],[2,"x"]]}"#).unwrap();
        let err = DirectedGraph::from_json(&bad).unwrap_err().to_string();
        assert!(err.contains("edge #2"), "{err}");
    }
}

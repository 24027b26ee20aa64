//! Peeling discovery: find root nodes or root cycles, orient and weigh the
//! cycles, regress them out, repeat; then recover the edges between
//! components by regression.

use std::collections::BTreeSet;

use nalgebra::DMatrix;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use statrs::distribution::{ContinuousCDF, Normal};

use crate::cliques::{adjacency, maximal_cliques};
use crate::data::Dataset;
use crate::error::{Error, Result};
use crate::graph::DirectedGraph;
use crate::moments::{
    checked_inverse, d2, d3, inter_cycle_weights, lambda_from_triple, lambda_two_cycle, regress,
    residualize, residualize_moments, sample_moments,
};
use crate::sem::MomentPair;
use crate::stats::{
    delta_test, edge_test_nuisance_adjusted, root_cycle_moments, root_cycle_test, EdgeTestInput, Mode,
    PValueTable, TestConfig, TestOutcome,
};

/// What discovery runs on.
#[derive(Debug, Clone)]
pub enum DiscoveryInput {
    /// Exact moments; every decision is a threshold at `cfg.tol`.
    Population(MomentPair),
    /// Observations; every decision is a hypothesis test.
    Sample(Dataset),
}

impl DiscoveryInput {
    /// Sample input, optionally with column means removed first.
    pub fn sample(data: Dataset, center: bool) -> Self {
        DiscoveryInput::Sample(if center { data.centered() } else { data })
    }

    pub fn p(&self) -> usize {
        match self {
            DiscoveryInput::Population(m) => m.p(),
            DiscoveryInput::Sample(d) => d.p(),
        }
    }

    fn mode(&self) -> Mode {
        match self {
            DiscoveryInput::Population(_) => Mode::Population,
            DiscoveryInput::Sample(_) => Mode::Sample,
        }
    }
}

/// A strong component of the recovered graph.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord)]
pub enum Component {
    Singleton(usize),
    /// Vertices in cycle order: `c[0] -> c[1] -> ... -> c[0]`.
    Cycle(Vec<usize>),
}

impl Component {
    pub fn vertices(&self) -> Vec<usize> {
        match self {
            Component::Singleton(v) => vec![*v],
            Component::Cycle(c) => c.clone(),
        }
    }

    pub fn vertex_set(&self) -> BTreeSet<usize> {
        self.vertices().into_iter().collect()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Status {
    Complete,
    HaltedNoSimpleCycle,
}

#[derive(Debug, Clone, PartialEq)]
pub struct DiscoveryResult {
    pub status: Status,
    pub layers: Vec<Vec<Component>>,
    /// `lambda_hat[(i, j)]` is the weight of `i -> j`.
    pub lambda_hat: DMatrix<f64>,
    pub pvalues: PValueTable,
    /// Vertices left unexplained when discovery halted.
    pub remaining: Vec<usize>,
    /// Fallbacks and warnings raised along the way.
    pub notes: Vec<String>,
}

impl DiscoveryResult {
    pub fn p(&self) -> usize {
        self.lambda_hat.nrows()
    }

    /// Recovered edges: every intra-cycle edge plus the nonzero entries of
    /// `lambda_hat`.
    pub fn graph(&self) -> DirectedGraph {
        let p = self.p();
        let mut edges = BTreeSet::new();
        for i in 0..p {
            for j in 0..p {
                if i != j && self.lambda_hat[(i, j)] != 0.0 {
                    edges.insert((i, j));
                }
            }
        }
        for comp in self.layers.iter().flatten() {
            if let Component::Cycle(c) = comp {
                for (a, b) in cycle_edges(c) {
                    edges.insert((a, b));
                }
            }
        }
        DirectedGraph::new(p, edges).expect("edges are in range and loop-free")
    }

    pub fn to_json(&self) -> ResultJson {
        let g = self.graph();
        ResultJson {
            status: self.status,
            layers: self
                .layers
                .iter()
                .map(|layer| layer.iter().map(|c| c.vertices().iter().map(|v| v + 1).collect()).collect())
                .collect(),
            edges: g.edges().iter().map(|&(i, j)| (i + 1, j + 1, self.lambda_hat[(i, j)])).collect(),
            remaining: self.remaining.iter().map(|v| v + 1).collect(),
            notes: self.notes.clone(),
            diagnostics: self.pvalues.clone(),
        }
    }
}

/// Interchange form of a [`DiscoveryResult`] with 1-based labels.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ResultJson {
    pub status: Status,
    /// Each component is a vertex list; cycles are listed in edge order.
    pub layers: Vec<Vec<Vec<usize>>>,
    pub edges: Vec<(usize, usize, f64)>,
    #[serde(default)]
    pub remaining: Vec<usize>,
    #[serde(default)]
    pub notes: Vec<String>,
    pub diagnostics: PValueTable,
}

/// Consecutive pairs of a cycle, wrapping around.
pub fn cycle_edges(c: &[usize]) -> Vec<(usize, usize)> {
    (0..c.len()).map(|i| (c[i], c[(i + 1) % c.len()])).collect()
}

/// Moments (and residual data in sample mode) of the vertices not yet
/// peeled off. Local index `i` refers to global vertex `vertices[i]`.
#[derive(Debug, Clone)]
pub struct Stage {
    pub vertices: Vec<usize>,
    pub moments: MomentPair,
    pub data: Option<Dataset>,
}

impl Stage {
    pub fn new(input: &DiscoveryInput) -> Self {
        let p = input.p();
        match input {
            DiscoveryInput::Population(m) => Stage { vertices: (0..p).collect(), moments: m.clone(), data: None },
            DiscoveryInput::Sample(d) => {
                Stage { vertices: (0..p).collect(), moments: sample_moments(d), data: Some(d.clone()) }
            }
        }
    }

    pub fn len(&self) -> usize {
        self.vertices.len()
    }

    pub fn is_empty(&self) -> bool {
        self.vertices.is_empty()
    }

    fn labels(&self, local: &[usize]) -> Vec<usize> {
        local.iter().map(|&i| self.vertices[i] + 1).collect()
    }

    /// Regresses the local vertices `c_set` out of the rest.
    pub fn peel(&self, c_set: &[usize]) -> Result<Stage> {
        let (moments, data, rest) = match &self.data {
            None => {
                let (m, rest) = residualize_moments(&self.moments, c_set)?;
                (m, None, rest)
            }
            Some(d) => {
                let (r, rest) = residualize(d, c_set)?;
                (sample_moments(&r), Some(r), rest)
            }
        };
        Ok(Stage { vertices: rest.iter().map(|&i| self.vertices[i]).collect(), moments, data })
    }
}

/// Outcome of deciding whether one moment functional vanishes.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ZeroDecision {
    pub is_zero: bool,
    /// Larger means more compatible with zero: the adjusted p-value in
    /// sample mode, `-|value|` in population mode.
    pub score: f64,
}

/// Decisions for `d2(u, v) = 0` over all ordered pairs of the stage.
#[derive(Debug, Clone)]
pub struct PairDecisions {
    pub k: usize,
    decisions: Vec<ZeroDecision>,
}

impl PairDecisions {
    pub fn get(&self, u: usize, v: usize) -> ZeroDecision {
        self.decisions[u * self.k + v]
    }
}

fn decide_family(
    stage: &Stage,
    cfg: &TestConfig,
    table: &mut PValueTable,
    kind: &str,
    pairs: &[(usize, usize)],
    stat: fn(&MomentPair, usize, usize) -> crate::moments::DeterminantStat,
) -> Result<Vec<ZeroDecision>> {
    let stats: Vec<_> = pairs.iter().map(|&(u, v)| stat(&stage.moments, u, v)).collect();
    match (&stage.data, cfg.mode) {
        (Some(data), Mode::Sample) => {
            let outcomes: Vec<TestOutcome> =
                stats.par_iter().map(|s| delta_test(s, data)).collect::<Result<Vec<_>>>()?;
            let family = pairs.iter().map(|&(u, v)| stage.labels(&[u, v])).zip(outcomes).collect();
            let adjusted = table.push_family(kind, family, cfg.correction);
            Ok(adjusted.into_iter().map(|p| ZeroDecision { is_zero: p >= cfg.alpha, score: p }).collect())
        }
        _ => {
            let family = pairs
                .iter()
                .zip(&stats)
                .map(|(&(u, v), s)| {
                    let zero = s.value.abs() < cfg.tol;
                    let p = if zero { 1.0 } else { 0.0 };
                    (stage.labels(&[u, v]), TestOutcome { statistic: s.value, p_value: p })
                })
                .collect();
            table.push_family(kind, family, crate::stats::Correction::None);
            Ok(stats.iter().map(|s| ZeroDecision { is_zero: s.value.abs() < cfg.tol, score: -s.value.abs() }).collect())
        }
    }
}

/// Decides `d2(u, v) = 0` for every ordered pair, correcting across the
/// `k(k-1)` tests.
pub fn d2_decisions(stage: &Stage, cfg: &TestConfig, table: &mut PValueTable) -> Result<PairDecisions> {
    let k = stage.len();
    let pairs: Vec<(usize, usize)> = (0..k).flat_map(|u| (0..k).filter(move |&v| v != u).map(move |v| (u, v))).collect();
    let out = decide_family(stage, cfg, table, "d2", &pairs, d2)?;
    let mut decisions = vec![ZeroDecision { is_zero: true, score: f64::INFINITY }; k * k];
    for (&(u, v), d) in pairs.iter().zip(out) {
        decisions[u * k + v] = d;
    }
    Ok(PairDecisions { k, decisions })
}

/// Local indices `r` with `d2(r, u) = 0` accepted for every other `u`.
pub fn find_root_nodes(d2s: &PairDecisions) -> Vec<usize> {
    (0..d2s.k).filter(|&r| (0..d2s.k).all(|u| u == r || d2s.get(r, u).is_zero)).collect()
}

/// Candidate root cycles: maximal cliques of the graph joining `u, v` when
/// `d3(u, v) = 0` is accepted and both `d2(u, v) = 0`, `d2(v, u) = 0` are
/// rejected. Returns the cliques of size at least 2 and a note when a
/// fallback was needed to make the pair graph non-empty.
pub fn find_candidate_cycles(
    stage: &Stage,
    d2s: &PairDecisions,
    cfg: &TestConfig,
    table: &mut PValueTable,
) -> Result<(Vec<Vec<usize>>, Option<String>)> {
    let k = stage.len();
    let pairs: Vec<(usize, usize)> = (0..k).flat_map(|u| (u + 1..k).map(move |v| (u, v))).collect();
    if pairs.is_empty() {
        return Ok((Vec::new(), None));
    }
    let d3s = decide_family(stage, cfg, table, "d3", &pairs, d3)?;
    let mut nonzero2: Vec<usize> =
        (0..pairs.len()).filter(|&i| !d2s.get(pairs[i].0, pairs[i].1).is_zero && !d2s.get(pairs[i].1, pairs[i].0).is_zero).collect();
    let mut note = None;
    if nonzero2.is_empty() {
        // Pair least compatible with a vanishing d2 in either direction.
        let best = (0..pairs.len())
            .min_by(|&a, &b| {
                let sa = d2s.get(pairs[a].0, pairs[a].1).score.max(d2s.get(pairs[a].1, pairs[a].0).score);
                let sb = d2s.get(pairs[b].0, pairs[b].1).score.max(d2s.get(pairs[b].1, pairs[b].0).score);
                sa.total_cmp(&sb)
            })
            .expect("pairs is non-empty");
        nonzero2.push(best);
        note = Some(format!("no pair with both d2 nonzero; seeded with {:?}", stage.labels(&[pairs[best].0, pairs[best].1])));
    }
    let mut chosen: Vec<usize> = nonzero2.iter().copied().filter(|&i| d3s[i].is_zero).collect();
    if chosen.is_empty() {
        let best = *nonzero2
            .iter()
            .max_by(|&&a, &&b| d3s[a].score.total_cmp(&d3s[b].score).then(b.cmp(&a)))
            .expect("non-empty");
        chosen.push(best);
        let msg = format!("no pair with d3 zero; relaxed to {:?}", stage.labels(&[pairs[best].0, pairs[best].1]));
        note = Some(match note {
            Some(n) => format!("{n}; {msg}"),
            None => msg,
        });
    }
    let edges: Vec<(usize, usize)> = chosen.iter().map(|&i| pairs[i]).collect();
    let cliques = maximal_cliques(&adjacency(k, &edges)).into_iter().filter(|c| c.len() >= 2).collect();
    Ok((cliques, note))
}

/// Candidates surviving the root-cycle check.
#[derive(Debug, Clone, PartialEq)]
pub struct PrunedCycles {
    pub sets: Vec<Vec<usize>>,
    /// Every candidate was rejected and their union was taken instead.
    pub used_union: bool,
    /// Some surviving candidates overlapped and were merged.
    pub merged: bool,
}

/// Keeps candidates `C` for which `E[X_c^2 (X_{D.C})_d] = 0` is accepted,
/// with `D` the other candidates' vertices. Falls back to the union of all
/// candidates when none survive and merges overlapping survivors.
pub fn prune_root_cycles(
    stage: &Stage,
    candidates: &[Vec<usize>],
    cfg: &TestConfig,
    table: &mut PValueTable,
) -> Result<PrunedCycles> {
    let others = |i: usize| -> Vec<usize> {
        let own: BTreeSet<usize> = candidates[i].iter().copied().collect();
        let all: BTreeSet<usize> =
            candidates.iter().enumerate().filter(|&(j, _)| j != i).flat_map(|(_, c)| c.iter().copied()).collect();
        all.difference(&own).copied().collect()
    };
    let mut keep = vec![true; candidates.len()];
    let tested: Vec<(usize, Vec<usize>)> =
        (0..candidates.len()).map(|i| (i, others(i))).filter(|(_, d)| !d.is_empty()).collect();
    if !tested.is_empty() {
        match (&stage.data, cfg.mode) {
            (Some(data), Mode::Sample) => {
                let outcomes = tested
                    .par_iter()
                    .map(|(i, d)| root_cycle_test(data, &candidates[*i], d))
                    .collect::<Result<Vec<_>>>()?;
                let family = tested.iter().map(|(i, _)| stage.labels(&candidates[*i])).zip(outcomes).collect();
                let adjusted = table.push_family("root_cycle", family, cfg.correction);
                for ((i, _), p) in tested.iter().zip(adjusted) {
                    keep[*i] = p >= cfg.alpha;
                }
            }
            _ => {
                let mut family = Vec::new();
                for (i, d) in &tested {
                    let dev = root_cycle_moments(&stage.moments, &candidates[*i], d)?.amax();
                    keep[*i] = dev < cfg.tol;
                    let p = if keep[*i] { 1.0 } else { 0.0 };
                    family.push((stage.labels(&candidates[*i]), TestOutcome { statistic: dev, p_value: p }));
                }
                table.push_family("root_cycle", family, crate::stats::Correction::None);
            }
        }
    }
    let survivors: Vec<Vec<usize>> = candidates.iter().zip(&keep).filter(|(_, k)| **k).map(|(c, _)| c.clone()).collect();
    if survivors.is_empty() {
        let union: BTreeSet<usize> = candidates.iter().flatten().copied().collect();
        return Ok(PrunedCycles { sets: vec![union.into_iter().collect()], used_union: true, merged: false });
    }
    let (sets, merged) = merge_overlapping(survivors);
    Ok(PrunedCycles { sets, used_union: false, merged })
}

fn merge_overlapping(sets: Vec<Vec<usize>>) -> (Vec<Vec<usize>>, bool) {
    let mut groups: Vec<BTreeSet<usize>> = Vec::new();
    let mut merged = false;
    for s in sets {
        let mut cur: BTreeSet<usize> = s.into_iter().collect();
        let mut i = 0;
        while i < groups.len() {
            if groups[i].intersection(&cur).next().is_some() {
                cur.extend(groups.swap_remove(i));
                merged = true;
                i = 0;
            } else {
                i += 1;
            }
        }
        groups.push(cur);
    }
    let mut out: Vec<Vec<usize>> = groups.into_iter().map(|g| g.into_iter().collect()).collect();
    out.sort();
    (out, merged)
}

/// True when the undirected graph with the given adjacency is one simple
/// cycle through all `k >= 3` vertices.
fn is_ring(k: usize, adj: &[BTreeSet<usize>]) -> bool {
    if k < 3 || adj.iter().any(|a| a.len() != 2) {
        return false;
    }
    let (mut prev, mut cur, mut steps) = (0, *adj[0].iter().next().expect("degree 2"), 1);
    while cur != 0 {
        let next = *adj[cur].iter().find(|&&x| x != prev).expect("degree 2");
        prev = cur;
        cur = next;
        steps += 1;
        if steps > k {
            return false;
        }
    }
    steps == k
}

/// Checks that the vertices `c_set` can form one simple cycle: the zero
/// pattern of the inverse covariance must be a ring. Population mode uses
/// `|K_ij| < tol * max|K|`; sample mode tests partial correlations with
/// Fisher's z.
pub fn has_simple_cycle_skeleton(stage: &Stage, c_set: &[usize], cfg: &TestConfig) -> Result<bool> {
    let k = c_set.len();
    if k <= 3 {
        return Ok(k >= 2);
    }
    let s_cc = stage.moments.s.select_rows(c_set).select_columns(c_set);
    let inv = checked_inverse(&s_cc)?;
    let mut edges = Vec::new();
    match (&stage.data, cfg.mode) {
        (Some(data), Mode::Sample) => {
            let normal = Normal::standard();
            let dof = data.n() as f64 - k as f64 - 1.0;
            if dof <= 1.0 {
                return Err(Error::InsufficientData("too few rows for partial correlations".into()));
            }
            for i in 0..k {
                for j in i + 1..k {
                    let rho = (-inv[(i, j)] / (inv[(i, i)] * inv[(j, j)]).sqrt()).clamp(-0.999_999, 0.999_999);
                    let z = rho.atanh() * dof.sqrt();
                    if 2.0 * normal.sf(z.abs()) < cfg.alpha {
                        edges.push((i, j));
                    }
                }
            }
        }
        _ => {
            let scale = inv.amax().max(1.0);
            for i in 0..k {
                for j in i + 1..k {
                    if inv[(i, j)].abs() >= cfg.tol * scale {
                        edges.push((i, j));
                    }
                }
            }
        }
    }
    Ok(is_ring(k, &adjacency(k, &edges)))
}

/// Greedy ring through `c_set` from the inverse covariance: repeatedly add
/// the pair with the largest `|K_ij|` whose endpoints both have degree < 2
/// and that does not close a cycle early, then close the ring. Returns the
/// ring as local-to-`c_set` positions, starting at 0 and continuing to its
/// smaller neighbour.
pub fn greedy_ring(s_cc: &DMatrix<f64>) -> Result<Vec<usize>> {
    let k = s_cc.nrows();
    let inv = checked_inverse(s_cc)?;
    let mut pairs: Vec<(usize, usize)> = (0..k).flat_map(|i| (i + 1..k).map(move |j| (i, j))).collect();
    pairs.sort_by(|a, b| inv[(b.0, b.1)].abs().total_cmp(&inv[(a.0, a.1)].abs()).then(a.cmp(b)));
    let mut comp: Vec<usize> = (0..k).collect();
    fn find(comp: &mut [usize], x: usize) -> usize {
        let mut r = x;
        while comp[r] != r {
            r = comp[r];
        }
        comp[x] = r;
        r
    }
    let mut degree = vec![0usize; k];
    let mut adj = vec![BTreeSet::new(); k];
    let mut added = 0;
    for (i, j) in pairs {
        if added == k - 1 {
            break;
        }
        if degree[i] >= 2 || degree[j] >= 2 {
            continue;
        }
        let (ri, rj) = (find(&mut comp, i), find(&mut comp, j));
        if ri == rj {
            continue;
        }
        comp[ri] = rj;
        degree[i] += 1;
        degree[j] += 1;
        adj[i].insert(j);
        adj[j].insert(i);
        added += 1;
    }
    let ends: Vec<usize> = (0..k).filter(|&v| degree[v] < 2).collect();
    if ends.len() != 2 {
        return Err(Error::InvalidConfig("greedy skeleton did not produce a Hamiltonian path".into()));
    }
    adj[ends[0]].insert(ends[1]);
    adj[ends[1]].insert(ends[0]);
    let mut ring = vec![0];
    let mut prev = 0;
    let mut cur = *adj[0].iter().next().expect("degree 2");
    while cur != 0 {
        ring.push(cur);
        let next = *adj[cur].iter().find(|&&x| x != prev).expect("degree 2");
        prev = cur;
        cur = next;
    }
    Ok(ring)
}

/// An oriented root cycle with its edge weights.
#[derive(Debug, Clone, PartialEq)]
pub struct OrientedCycle {
    /// Local vertices in cycle order.
    pub order: Vec<usize>,
    /// `weights[i]` is the weight of `order[i] -> order[i + 1]` (wrapping).
    pub weights: Vec<f64>,
    /// `|product of weights| < 1`.
    pub stable: bool,
}

impl OrientedCycle {
    pub fn product(&self) -> f64 {
        self.weights.iter().product()
    }
}

fn weights_along(m: &MomentPair, order: &[usize], tol: f64) -> Result<Vec<f64>> {
    let l = order.len();
    (0..l).map(|i| lambda_from_triple(m, order[i], order[(i + 1) % l], order[(i + 2) % l], tol)).collect()
}

/// Orients the root cycle on the local vertices `c_set` (sorted) and
/// estimates its weights, choosing the orientation with the smaller
/// `|product of weights|`; ties go to the orientation visiting the smaller
/// neighbour of the first vertex first.
pub fn orient_cycle(m: &MomentPair, c_set: &[usize], tol: f64) -> Result<OrientedCycle> {
    match c_set.len() {
        0 | 1 => Err(Error::InvalidConfig("a cycle needs at least two vertices".into())),
        2 => {
            let (u, v) = (c_set[0], c_set[1]);
            let (r1, r2) = lambda_two_cycle(m, u, v, tol)?;
            // Orientation pairs (lambda_uv, lambda_vu) are (r1, 1/r2) and (r2, 1/r1).
            if r1 == 0.0 || r2 == 0.0 {
                return Err(Error::DegenerateDenominator { value: r1 * r2 });
            }
            let weights = vec![r1, 1.0 / r2];
            let stable = (r1 / r2).abs() < 1.0;
            Ok(OrientedCycle { order: vec![u, v], weights, stable })
        }
        _ => {
            let s_cc = m.s.select_rows(c_set).select_columns(c_set);
            let ring: Vec<usize> = greedy_ring(&s_cc)?.into_iter().map(|i| c_set[i]).collect();
            let mut rev = ring.clone();
            rev[1..].reverse();
            let (first, second) = if ring[1] <= rev[1] { (ring, rev) } else { (rev, ring) };
            let a = weights_along(m, &first, tol);
            let b = weights_along(m, &second, tol);
            let pick = |order: Vec<usize>, weights: Vec<f64>| {
                let stable = weights.iter().product::<f64>().abs() < 1.0;
                OrientedCycle { order, weights, stable }
            };
            match (a, b) {
                (Ok(wa), Ok(wb)) => {
                    let pa: f64 = wa.iter().product::<f64>().abs();
                    let pb: f64 = wb.iter().product::<f64>().abs();
                    Ok(if pb < pa { pick(second, wb) } else { pick(first, wa) })
                }
                (Ok(wa), Err(_)) => Ok(pick(first, wa)),
                (Err(_), Ok(wb)) => Ok(pick(second, wb)),
                (Err(e), Err(_)) => Err(e),
            }
        }
    }
}

/// Output of the peeling stage.
#[derive(Debug, Clone)]
pub struct Part1 {
    pub status: Status,
    pub layers: Vec<Vec<Component>>,
    /// Intra-cycle weights only.
    pub lambda_intra: DMatrix<f64>,
    pub pvalues: PValueTable,
    pub remaining: Vec<usize>,
    pub notes: Vec<String>,
}

/// Peels off root nodes or root cycles until no vertices remain or no
/// simple root cycle can be certified.
pub fn part1(input: &DiscoveryInput, cfg: &TestConfig) -> Result<Part1> {
    cfg.validate()?;
    let cfg = TestConfig { mode: input.mode(), ..*cfg };
    let p = input.p();
    let mut out = Part1 {
        status: Status::Complete,
        layers: Vec::new(),
        lambda_intra: DMatrix::zeros(p, p),
        pvalues: PValueTable::default(),
        remaining: Vec::new(),
        notes: Vec::new(),
    };
    let mut stage = Stage::new(input);
    while !stage.is_empty() {
        let layer = out.layers.len();
        let at = |e: Error| Error::AtLayer { layer: layer + 1, source: Box::new(e) };
        if stage.len() == 1 {
            out.layers.push(vec![Component::Singleton(stage.vertices[0])]);
            break;
        }
        let d2s = d2_decisions(&stage, &cfg, &mut out.pvalues).map_err(at)?;
        let roots = find_root_nodes(&d2s);
        if !roots.is_empty() {
            out.layers.push(roots.iter().map(|&r| Component::Singleton(stage.vertices[r])).collect());
            stage = stage.peel(&roots).map_err(at)?;
            continue;
        }
        let (candidates, note) = find_candidate_cycles(&stage, &d2s, &cfg, &mut out.pvalues).map_err(at)?;
        if let Some(n) = note {
            out.notes.push(format!("layer {}: {n}", layer + 1));
        }
        let pruned = prune_root_cycles(&stage, &candidates, &cfg, &mut out.pvalues).map_err(at)?;
        if pruned.used_union {
            out.notes.push(format!("layer {}: every candidate rejected; using their union", layer + 1));
        }
        if pruned.merged {
            out.notes.push(format!("layer {}: merged overlapping root cycles", layer + 1));
        }
        // Population mode always certifies the skeleton; sample mode only
        // when a fallback produced the set.
        let check = cfg.mode == Mode::Population || pruned.used_union || pruned.merged;
        let mut comps = Vec::new();
        let mut halted = false;
        for set in &pruned.sets {
            if check && !has_simple_cycle_skeleton(&stage, set, &cfg).map_err(at)? {
                halted = true;
                break;
            }
            let oc = orient_cycle(&stage.moments, set, cfg.tol).map_err(at)?;
            if !oc.stable {
                out.notes.push(format!(
                    "layer {}: no stable orientation for {:?}",
                    layer + 1,
                    stage.labels(set)
                ));
            }
            comps.push(oc);
        }
        if halted {
            out.status = Status::HaltedNoSimpleCycle;
            out.remaining = stage.vertices.clone();
            out.notes.push(format!(
                "layer {}: no simple cycle among remaining vertices {:?}",
                layer + 1,
                stage.labels(&(0..stage.len()).collect::<Vec<_>>())
            ));
            break;
        }
        let mut peeled = Vec::new();
        let mut layer_comps = Vec::new();
        for oc in comps {
            let global: Vec<usize> = oc.order.iter().map(|&i| stage.vertices[i]).collect();
            for ((a, b), w) in cycle_edges(&global).into_iter().zip(&oc.weights) {
                out.lambda_intra[(a, b)] = *w;
            }
            peeled.extend(&oc.order);
            layer_comps.push(Component::Cycle(global));
        }
        layer_comps.sort();
        peeled.sort_unstable();
        out.layers.push(layer_comps);
        stage = stage.peel(&peeled).map_err(at)?;
    }
    for layer in &mut out.layers {
        layer.sort();
    }
    Ok(out)
}

/// Intra-component weight matrix of a component, rows and columns in the
/// component's vertex order.
fn component_lambda(comp: &Component, lambda: &DMatrix<f64>) -> DMatrix<f64> {
    let vs = comp.vertices();
    DMatrix::from_fn(vs.len(), vs.len(), |i, j| lambda[(vs[i], vs[j])])
}

/// Recovers the edges from earlier layers into every component by
/// regression, then keeps the edges that pass the edge test (sample mode)
/// or exceed `tol` in magnitude (population mode).
pub fn part2(input: &DiscoveryInput, part1: Part1, cfg: &TestConfig) -> Result<DiscoveryResult> {
    cfg.validate()?;
    let cfg = TestConfig { mode: input.mode(), ..*cfg };
    let moments = match input {
        DiscoveryInput::Population(m) => m.clone(),
        DiscoveryInput::Sample(d) => sample_moments(d),
    };
    let Part1 { status, layers, lambda_intra, mut pvalues, remaining, notes } = part1;
    let mut lambda_hat = lambda_intra.clone();

    struct Candidate {
        c: usize,
        d: usize,
        weight: f64,
        parents: std::rc::Rc<(Vec<usize>, Vec<f64>)>,
        cycle_parent: Option<(usize, f64)>,
    }
    let mut candidates = Vec::new();
    let mut earlier: Vec<usize> = Vec::new();
    for (li, layer) in layers.iter().enumerate() {
        if !earlier.is_empty() {
            for comp in layer {
                let d_set = comp.vertices();
                let r = regress(&moments, &d_set, &earlier)
                    .map_err(|e| Error::AtLayer { layer: li + 1, source: Box::new(e) })?;
                let lam_dd = component_lambda(comp, &lambda_intra);
                let lam_cd = inter_cycle_weights(&r, &lam_dd);
                for (di, &d) in d_set.iter().enumerate() {
                    let weights: Vec<f64> = (0..earlier.len()).map(|ci| lam_cd[(ci, di)]).collect();
                    let parents = std::rc::Rc::new((earlier.clone(), weights));
                    let cycle_parent = match comp {
                        Component::Cycle(c) => {
                            let prev = c[(di + c.len() - 1) % c.len()];
                            Some((prev, lambda_intra[(prev, d)]))
                        }
                        Component::Singleton(_) => None,
                    };
                    for (ci, &c) in earlier.iter().enumerate() {
                        candidates.push(Candidate {
                            c,
                            d,
                            weight: lam_cd[(ci, di)],
                            parents: parents.clone(),
                            cycle_parent,
                        });
                    }
                }
            }
        }
        for comp in layer {
            earlier.extend(comp.vertices());
        }
        earlier.sort_unstable();
    }

    match (input, cfg.mode) {
        (DiscoveryInput::Sample(data), Mode::Sample) => {
            let inputs: Vec<EdgeTestInput<'_>> = candidates
                .iter()
                .map(|cand| EdgeTestInput {
                    d: cand.d,
                    c: cand.c,
                    candidate_parents: &cand.parents.0,
                    parent_weights: &cand.parents.1,
                    cycle_parent: cand.cycle_parent,
                })
                .collect();
            let outcomes = inputs
                .par_iter()
                .map(|inp| edge_test_nuisance_adjusted(data, inp))
                .collect::<Result<Vec<_>>>()?;
            let family = candidates.iter().map(|c| vec![c.c + 1, c.d + 1]).zip(outcomes).collect();
            let adjusted = pvalues.push_family("edge", family, cfg.correction);
            for (cand, p) in candidates.iter().zip(adjusted) {
                if p < cfg.alpha {
                    lambda_hat[(cand.c, cand.d)] = cand.weight;
                }
            }
        }
        _ => {
            let family = candidates
                .iter()
                .map(|c| {
                    let keep = c.weight.abs() >= cfg.tol;
                    (vec![c.c + 1, c.d + 1], TestOutcome { statistic: c.weight, p_value: if keep { 0.0 } else { 1.0 } })
                })
                .collect();
            pvalues.push_family("edge", family, crate::stats::Correction::None);
            for cand in &candidates {
                if cand.weight.abs() >= cfg.tol {
                    lambda_hat[(cand.c, cand.d)] = cand.weight;
                }
            }
        }
    }
    Ok(DiscoveryResult { status, layers, lambda_hat, pvalues, remaining, notes })
}

/// Full pipeline: [`part1`] then [`part2`].
pub fn discover(input: &DiscoveryInput, cfg: &TestConfig) -> Result<DiscoveryResult> {
    let p1 = part1(input, cfg)?;
    part2(input, p1, cfg)
}

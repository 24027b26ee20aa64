//! Simulation study: random models of chained disjoint cycles, repeated
//! discovery runs and their scores.

use std::collections::BTreeSet;
use std::fmt::Write as _;
use std::io::Write;
use std::time::Instant;

use nalgebra::DMatrix;
use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::discovery::{discover, DiscoveryInput, DiscoveryResult, Status};
use crate::equivalence::correct_pairs;
use crate::error::{Error, Result};
use crate::graph::DirectedGraph;
use crate::sem::{population_moments, sample, NoiseKind, NoiseSpec, SemParameters};
use crate::stats::{Correction, Mode, TestConfig};

/// Noise families available to the benchmark.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum NoiseFamily {
    Mixnorm,
    Gamma,
}

impl NoiseFamily {
    pub fn kind(self) -> NoiseKind {
        match self {
            NoiseFamily::Mixnorm => NoiseKind::MixtureNormal,
            NoiseFamily::Gamma => NoiseKind::Gamma,
        }
    }

    pub fn name(self) -> &'static str {
        match self {
            NoiseFamily::Mixnorm => "mixnorm",
            NoiseFamily::Gamma => "gamma",
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct BenchConfig {
    pub p: usize,
    pub cycle_size: usize,
    pub ns: Vec<usize>,
    pub dist: NoiseFamily,
    pub reps: usize,
    pub seed: u64,
    pub alphas: Vec<f64>,
    pub corrections: Vec<Correction>,
    pub mode: Mode,
    /// Zero threshold for population mode.
    pub tol: f64,
}

impl Default for BenchConfig {
    fn default() -> Self {
        Self {
            p: 9,
            cycle_size: 3,
            ns: vec![100_000],
            dist: NoiseFamily::Mixnorm,
            reps: 20,
            seed: 1,
            alphas: vec![0.01],
            corrections: vec![Correction::Holm],
            mode: Mode::Sample,
            tol: 1e-9,
        }
    }
}

impl BenchConfig {
    pub fn validate(&self) -> Result<()> {
        let bad = |m: String| Err(Error::InvalidConfig(m));
        if self.cycle_size < 2 {
            return bad(format!("cycle size must be at least 2, got {}", self.cycle_size));
        }
        if self.p == 0 || !self.p.is_multiple_of(self.cycle_size) {
            return bad(format!("p = {} is not a positive multiple of the cycle size {}", self.p, self.cycle_size));
        }
        if self.ns.is_empty() || self.alphas.is_empty() || self.corrections.is_empty() {
            return bad("n, alpha and correction grids must be non-empty".into());
        }
        if self.mode == Mode::Sample {
            if let Some(n) = self.ns.iter().find(|&&n| n < 1000) {
                return bad(format!("n = {n} is below the minimum of 1000"));
            }
        }
        for &alpha in &self.alphas {
            TestConfig::new(alpha, Correction::None, self.mode, self.tol)?;
        }
        if self.reps == 0 {
            return bad("reps must be positive".into());
        }
        Ok(())
    }
}

/// One discovery run of the benchmark grid.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BenchRecord {
    pub rep: usize,
    pub n: usize,
    pub p: usize,
    pub dist: String,
    pub alpha: f64,
    pub correction: String,
    pub ordering_ok: bool,
    pub correct_pairs: f64,
    pub runtime_s: f64,
    pub status: String,
}

/// Mean scores of one `(n, alpha, correction)` cell.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BenchSummary {
    pub n: usize,
    pub alpha: f64,
    pub correction: String,
    pub reps: usize,
    pub mean_ordering: f64,
    pub mean_correct_pairs: f64,
    pub mean_runtime_s: f64,
    pub failures: usize,
    /// Highest mean correct_pairs among the cells with this `n`.
    pub best: bool,
}

/// Seed of replication `rep` derived from the run seed.
pub fn rep_seed(seed: u64, rep: usize) -> u64 {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(rep as u64 + 1);
    rng.random()
}

fn draw_weight(rng: &mut ChaCha8Rng) -> f64 {
    let w = rng.random_range(0.5..0.8);
    if rng.random::<bool>() {
        w
    } else {
        -w
    }
}

/// A random model of `p / cycle_size` disjoint cycles in a total order.
///
/// Vertex labels are shuffled. Each cycle sends one edge, between uniformly
/// chosen endpoints, to the next cycle; every other pair from an earlier
/// cycle to a later one gets an edge with probability 1/2. Weights are
/// uniform on `(-0.8, -0.5) U (0.5, 0.8)` and noise scales uniform on
/// `(0.8, 1)`. Returns the cycles (in order) along with the model.
pub fn random_model(cfg: &BenchConfig, seed: u64) -> Result<(SemParameters, NoiseSpec, Vec<Vec<usize>>)> {
    cfg.validate()?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let (p, cs) = (cfg.p, cfg.cycle_size);
    let mut labels: Vec<usize> = (0..p).collect();
    labels.shuffle(&mut rng);
    let cycles: Vec<Vec<usize>> = labels.chunks(cs).map(<[usize]>::to_vec).collect();
    let mut edges = BTreeSet::new();
    for c in &cycles {
        for k in 0..cs {
            edges.insert((c[k], c[(k + 1) % cs]));
        }
    }
    for w in cycles.windows(2) {
        let from = w[0][rng.random_range(0..cs)];
        let to = w[1][rng.random_range(0..cs)];
        edges.insert((from, to));
    }
    for a in 0..cycles.len() {
        for b in a + 1..cycles.len() {
            for &u in &cycles[a] {
                for &v in &cycles[b] {
                    if rng.random::<bool>() {
                        edges.insert((u, v));
                    }
                }
            }
        }
    }
    let mut lambda = DMatrix::zeros(p, p);
    for &(i, j) in &edges {
        lambda[(i, j)] = draw_weight(&mut rng);
    }
    let noise = NoiseSpec::random_scales(cfg.dist.kind(), p, &mut rng)?;
    let (omega2, omega3) = noise.moments(p)?;
    let graph = DirectedGraph::new(p, edges)?;
    Ok((SemParameters::new(graph, lambda, omega2, omega3)?, noise, cycles))
}

/// Layers that an exact run of the peeling procedure visits: at each step
/// the source components of what remains, restricted to singletons when any
/// exist. Each layer is a set of vertex sets.
pub fn true_layers(g: &DirectedGraph) -> Vec<BTreeSet<BTreeSet<usize>>> {
    let comps = g.strong_components().components;
    let member = {
        let mut m = vec![0; g.p()];
        for (ci, c) in comps.iter().enumerate() {
            for &v in c {
                m[v] = ci;
            }
        }
        m
    };
    let mut removed = vec![false; comps.len()];
    let mut layers = Vec::new();
    while removed.iter().any(|r| !r) {
        let sources: Vec<usize> = (0..comps.len())
            .filter(|&ci| {
                !removed[ci]
                    && comps[ci].iter().all(|&v| g.parents(v).iter().all(|&u| member[u] == ci || removed[member[u]]))
            })
            .collect();
        let singles: Vec<usize> = sources.iter().copied().filter(|&ci| comps[ci].len() == 1).collect();
        let chosen = if singles.is_empty() { sources } else { singles };
        for &ci in &chosen {
            removed[ci] = true;
        }
        layers.push(chosen.iter().map(|&ci| comps[ci].clone()).collect());
    }
    layers
}

/// Whether discovery found exactly the true components in the true order.
pub fn ordering_recovered(g_true: &DirectedGraph, result: &DiscoveryResult) -> bool {
    if result.status != Status::Complete {
        return false;
    }
    let found: Vec<BTreeSet<BTreeSet<usize>>> =
        result.layers.iter().map(|layer| layer.iter().map(|c| c.vertex_set()).collect()).collect();
    found == true_layers(g_true)
}

struct Unit {
    rep: usize,
    n: usize,
}

fn run_unit(cfg: &BenchConfig, unit: &Unit) -> Vec<BenchRecord> {
    let seed = rep_seed(cfg.seed, unit.rep);
    let base = |alpha: f64, correction: Correction| BenchRecord {
        rep: unit.rep,
        n: unit.n,
        p: cfg.p,
        dist: cfg.dist.name().to_owned(),
        alpha,
        correction: correction.to_string(),
        ordering_ok: false,
        correct_pairs: 0.0,
        runtime_s: 0.0,
        status: String::new(),
    };
    let cells: Vec<(f64, Correction)> =
        cfg.alphas.iter().flat_map(|&a| cfg.corrections.iter().map(move |&c| (a, c))).collect();
    let fail = |msg: String| -> Vec<BenchRecord> {
        cells.iter().map(|&(a, c)| BenchRecord { status: format!("error: {msg}"), ..base(a, c) }).collect()
    };
    let (params, noise, _) = match random_model(cfg, seed) {
        Ok(x) => x,
        Err(e) => return fail(e.to_string()),
    };
    let input = match cfg.mode {
        Mode::Population => population_moments(&params).map(DiscoveryInput::Population),
        Mode::Sample => {
            let data_seed = seed ^ (unit.n as u64).wrapping_mul(0x9E37_79B9_7F4A_7C15);
            sample(&params, &noise, unit.n, data_seed).map(|d| DiscoveryInput::sample(d, true))
        }
    };
    let input = match input {
        Ok(x) => x,
        Err(e) => return fail(e.to_string()),
    };
    cells
        .iter()
        .map(|&(alpha, correction)| {
            let mut rec = base(alpha, correction);
            let tcfg = TestConfig { alpha, correction, mode: cfg.mode, tol: cfg.tol };
            let start = Instant::now();
            let out = discover(&input, &tcfg);
            rec.runtime_s = start.elapsed().as_secs_f64();
            match out {
                Ok(res) => {
                    rec.ordering_ok = ordering_recovered(params.graph(), &res);
                    rec.correct_pairs =
                        correct_pairs(params.graph(), params.lambda(), &res.graph(), &res.lambda_hat).unwrap_or(0.0);
                    rec.status = match res.status {
                        Status::Complete => "complete".into(),
                        Status::HaltedNoSimpleCycle => "halted_no_simple_cycle".into(),
                    };
                }
                Err(e) => rec.status = format!("error: {e}"),
            }
            rec
        })
        .collect()
}

/// Runs every replication and grid cell. Records come back ordered by
/// replication, then `n`, then `alpha`, then correction, whatever the
/// thread schedule; failed runs are recorded, not raised.
pub fn run_benchmark(cfg: &BenchConfig) -> Result<Vec<BenchRecord>> {
    cfg.validate()?;
    let units: Vec<Unit> = (0..cfg.reps).flat_map(|rep| cfg.ns.iter().map(move |&n| Unit { rep, n })).collect();
    Ok(units.par_iter().map(|u| run_unit(cfg, u)).collect::<Vec<_>>().into_iter().flatten().collect())
}

/// Per-cell means, marking the best `(alpha, correction)` for each `n`.
pub fn summarize(records: &[BenchRecord]) -> Vec<BenchSummary> {
    let mut keys: Vec<(usize, f64, String)> = Vec::new();
    for r in records {
        let key = (r.n, r.alpha, r.correction.clone());
        if !keys.contains(&key) {
            keys.push(key);
        }
    }
    let mut out: Vec<BenchSummary> = keys
        .into_iter()
        .map(|(n, alpha, correction)| {
            let cell: Vec<&BenchRecord> =
                records.iter().filter(|r| r.n == n && r.alpha == alpha && r.correction == correction).collect();
            let k = cell.len() as f64;
            BenchSummary {
                n,
                alpha,
                reps: cell.len(),
                mean_ordering: cell.iter().filter(|r| r.ordering_ok).count() as f64 / k,
                mean_correct_pairs: cell.iter().map(|r| r.correct_pairs).sum::<f64>() / k,
                mean_runtime_s: cell.iter().map(|r| r.runtime_s).sum::<f64>() / k,
                failures: cell.iter().filter(|r| r.status.starts_with("error")).count(),
                correction,
                best: false,
            }
        })
        .collect();
    let ns: BTreeSet<usize> = out.iter().map(|s| s.n).collect();
    for n in ns {
        let best = out
            .iter()
            .enumerate()
            .filter(|(_, s)| s.n == n)
            .max_by(|(ia, a), (ib, b)| {
                a.mean_correct_pairs
                    .total_cmp(&b.mean_correct_pairs)
                    .then(a.mean_ordering.total_cmp(&b.mean_ordering))
                    .then(ib.cmp(ia))
            })
            .map(|(i, _)| i);
        if let Some(i) = best {
            out[i].best = true;
        }
    }
    out
}

pub fn write_records<W: Write>(records: &[BenchRecord], out: W) -> Result<()> {
    write_rows(records, out)
}

pub fn write_summary<W: Write>(summary: &[BenchSummary], out: W) -> Result<()> {
    write_rows(summary, out)
}

fn write_rows<T: Serialize, W: Write>(rows: &[T], out: W) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    for r in rows {
        w.serialize(r).map_err(|e| Error::Parse(e.to_string()))?;
    }
    w.flush().map_err(|e| Error::Parse(e.to_string()))
}

/// A gnuplot script plotting mean correct pairs against `n` for the best
/// cells of a summary CSV.
pub fn gnuplot_script(summary_csv: &str, png: &str) -> String {
    let mut s = String::new();
    let _ = writeln!(s, "set datafile separator ','");
    let _ = writeln!(s, "set terminal pngcairo size 800,500");
    let _ = writeln!(s, "set output '{png}'");
    let _ = writeln!(s, "set logscale x");
    let _ = writeln!(s, "set xlabel 'n'");
    let _ = writeln!(s, "set yrange [0:1]");
    let _ = writeln!(s, "set key bottom right");
    let _ = writeln!(
        s,
        "plot '{summary_csv}' every ::1 using 1:(stringcolumn(9) eq 'true' ? $6 : 1/0) with linespoints title 'correct pairs', \\"
    );
    let _ = writeln!(
        s,
        "     '{summary_csv}' every ::1 using 1:(stringcolumn(9) eq 'true' ? $5 : 1/0) with linespoints title 'ordering recovered'"
    );
    s
}

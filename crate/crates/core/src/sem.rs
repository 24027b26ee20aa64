//! Linear structural equation models `X = Lambda^T X + eps`: parameters,
//! exact second/third moments, and sampling.

use nalgebra::DMatrix;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Gamma, Normal};
use serde::{Deserialize, Serialize};

use crate::data::Dataset;
use crate::error::{Error, Result};
use crate::graph::DirectedGraph;
use crate::tensor::SymTensor3;

/// Smallest admissible `|det(I - Lambda)|`.
pub const SINGULARITY_TOL: f64 = 1e-12;

/// A fully specified model: graph, edge weights and diagonal noise moments.
#[derive(Debug, Clone, PartialEq)]
pub struct SemParameters {
    graph: DirectedGraph,
    lambda: DMatrix<f64>,
    omega2: Vec<f64>,
    omega3: Vec<f64>,
}

impl SemParameters {
    /// `lambda[(i, j)]` is the weight of `i -> j` and must vanish off the edge set.
    pub fn new(
        graph: DirectedGraph,
        lambda: DMatrix<f64>,
        omega2: Vec<f64>,
        omega3: Vec<f64>,
    ) -> Result<Self> {
        let p = graph.p();
        if lambda.shape() != (p, p) || omega2.len() != p || omega3.len() != p {
            return Err(Error::InvalidParameters(format!(
                "dimension mismatch: p = {p}, lambda {:?}, omega2 {}, omega3 {}",
                lambda.shape(),
                omega2.len(),
                omega3.len()
            )));
        }
        for i in 0..p {
            for j in 0..p {
                if lambda[(i, j)] != 0.0 && !graph.has_edge(i, j) {
                    return Err(Error::InvalidParameters(format!(
                        "lambda[{}, {}] = {} but {} -> {} is not an edge",
                        i + 1,
                        j + 1,
                        lambda[(i, j)],
                        i + 1,
                        j + 1
                    )));
                }
            }
        }
        if let Some(i) = omega2.iter().position(|w| !(*w > 0.0)) {
            return Err(Error::InvalidParameters(format!("omega2[{}] must be positive", i + 1)));
        }
        if omega3.iter().chain(lambda.iter()).any(|x| !x.is_finite()) {
            return Err(Error::InvalidParameters("non-finite parameter".into()));
        }
        let params = Self { graph, lambda, omega2, omega3 };
        params.path_matrix()?;
        Ok(params)
    }

    /// Builds the graph from 0-based weighted edges.
    pub fn from_weighted_edges(
        p: usize,
        edges: &[(usize, usize, f64)],
        omega2: Vec<f64>,
        omega3: Vec<f64>,
    ) -> Result<Self> {
        let graph = DirectedGraph::new(p, edges.iter().map(|&(i, j, _)| (i, j)))?;
        let mut lambda = DMatrix::zeros(p, p);
        for &(i, j, w) in edges {
            lambda[(i, j)] = w;
        }
        Self::new(graph, lambda, omega2, omega3)
    }

    pub fn graph(&self) -> &DirectedGraph {
        &self.graph
    }

    pub fn lambda(&self) -> &DMatrix<f64> {
        &self.lambda
    }

    pub fn omega2(&self) -> &[f64] {
        &self.omega2
    }

    pub fn omega3(&self) -> &[f64] {
        &self.omega3
    }

    pub fn p(&self) -> usize {
        self.graph.p()
    }

    /// Same graph and weights with the noise moments implied by `noise`.
    pub fn with_noise(&self, noise: &NoiseSpec) -> Result<Self> {
        let (omega2, omega3) = noise.moments(self.p())?;
        Self::new(self.graph.clone(), self.lambda.clone(), omega2, omega3)
    }

    /// `(I - Lambda)^{-1}`, whose `(a, i)` entry sums path weights `a -> i`.
    pub fn path_matrix(&self) -> Result<DMatrix<f64>> {
        let p = self.p();
        let a = DMatrix::identity(p, p) - &self.lambda;
        let lu = a.lu();
        let det = lu.determinant();
        if !(det.abs() > SINGULARITY_TOL) {
            return Err(Error::SingularSystem { det });
        }
        lu.try_inverse().ok_or(Error::SingularSystem { det })
    }

    /// Spectral radius of the entrywise absolute value of `Lambda`.
    pub fn abs_spectral_radius(&self) -> f64 {
        let abs = self.lambda.map(f64::abs);
        abs.complex_eigenvalues().iter().map(|z| z.norm()).fold(0.0, f64::max)
    }
}

/// Second-moment matrix and third-moment tensor of a random vector.
#[derive(Debug, Clone, PartialEq)]
pub struct MomentPair {
    pub s: DMatrix<f64>,
    pub t: SymTensor3,
}

impl MomentPair {
    pub fn p(&self) -> usize {
        self.s.nrows()
    }

    /// Moments of the sub-vector indexed by `idx`.
    pub fn select(&self, idx: &[usize]) -> MomentPair {
        MomentPair { s: self.s.select_rows(idx).select_columns(idx), t: self.t.select(idx) }
    }

    pub fn max_abs_diff(&self, other: &MomentPair) -> f64 {
        let ds = (&self.s - &other.s).amax();
        ds.max(self.t.max_abs_diff(&other.t))
    }

    /// Moments of `B X` for a `q x p` matrix `B`.
    pub fn linear_image(&self, b: &DMatrix<f64>) -> MomentPair {
        MomentPair { s: b * &self.s * b.transpose(), t: self.t.transform(b) }
    }
}

/// Exact moments `S = M^T Omega2 M`, `t_ijk = sum_a M_ai M_aj M_ak omega3_a`
/// with `M = (I - Lambda)^{-1}`.
pub fn population_moments(params: &SemParameters) -> Result<MomentPair> {
    let m = params.path_matrix()?;
    Ok(moments_from_paths(&m, params.omega2(), params.omega3()))
}

fn moments_from_paths(m: &DMatrix<f64>, omega2: &[f64], omega3: &[f64]) -> MomentPair {
    let p = m.nrows();
    let mut weighted = m.clone();
    for (a, mut row) in weighted.row_iter_mut().enumerate() {
        row *= omega2[a];
    }
    let mut s = m.transpose() * weighted;
    // Exact symmetry regardless of rounding order.
    for i in 0..p {
        for j in 0..i {
            let avg = 0.5 * (s[(i, j)] + s[(j, i)]);
            s[(i, j)] = avg;
            s[(j, i)] = avg;
        }
    }
    let t = SymTensor3::from_fn(p, |i, j, k| {
        (0..p).map(|a| m[(a, i)] * m[(a, j)] * m[(a, k)] * omega3[a]).sum()
    });
    MomentPair { s, t }
}

/// Largest omitted power term accepted by [`trek_moments_truncated`].
pub const TREK_TAIL_TOL: f64 = 1e-6;

/// Trek-rule moments with every path of a trek limited to `max_len` edges.
///
/// Path-weight sums are accumulated as `I + Lambda + ... + Lambda^max_len`
/// and never touch a matrix inverse, so this is an independent route to
/// [`population_moments`]. Fails when the first omitted power term is
/// larger than [`TREK_TAIL_TOL`].
pub fn trek_moments_truncated(params: &SemParameters, max_len: usize) -> Result<MomentPair> {
    if max_len == 0 {
        return Err(Error::InvalidConfig("max_len must be at least 1".into()));
    }
    let p = params.p();
    let lambda = params.lambda();
    let mut power = DMatrix::<f64>::identity(p, p);
    let mut sum = power.clone();
    for _ in 0..max_len {
        power = &power * lambda;
        sum += &power;
    }
    // First dropped term.
    let tail = (&power * lambda).amax();
    if !(tail <= TREK_TAIL_TOL) {
        return Err(Error::Divergence { tail, tol: TREK_TAIL_TOL });
    }
    Ok(moments_from_paths(&sum, params.omega2(), params.omega3()))
}

/// Error families used in the simulation study.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case", tag = "kind")]
pub enum NoiseKind {
    /// Weight .9 on N(-2, .1^2), weight .1 on N(2, .1^2).
    MixtureNormal,
    /// Gamma(1, 1).
    Gamma,
    /// Discrete distribution on `values` with probabilities `probs`.
    CustomTable { values: Vec<f64>, probs: Vec<f64> },
}

impl NoiseKind {
    /// Mean, standard deviation and third central moment of the raw draw.
    pub fn raw_moments(&self) -> (f64, f64, f64) {
        match self {
            NoiseKind::MixtureNormal => {
                let comps = [(0.9, -2.0, 0.1), (0.1, 2.0, 0.1)];
                mixture_moments(&comps)
            }
            NoiseKind::Gamma => (1.0, 1.0, 2.0),
            NoiseKind::CustomTable { values, probs } => {
                let comps: Vec<_> = values.iter().zip(probs).map(|(&v, &w)| (w, v, 0.0)).collect();
                mixture_moments(&comps)
            }
        }
    }

    fn draw(&self, rng: &mut ChaCha8Rng) -> f64 {
        match self {
            NoiseKind::MixtureNormal => {
                let mu = if rng.random::<f64>() < 0.9 { -2.0 } else { 2.0 };
                Normal::new(mu, 0.1).unwrap().sample(rng)
            }
            NoiseKind::Gamma => Gamma::new(1.0, 1.0).unwrap().sample(rng),
            NoiseKind::CustomTable { values, probs } => {
                let mut u = rng.random::<f64>();
                for (v, w) in values.iter().zip(probs) {
                    if u < *w {
                        return *v;
                    }
                    u -= w;
                }
                *values.last().unwrap()
            }
        }
    }

    fn validate(&self) -> Result<()> {
        if let NoiseKind::CustomTable { values, probs } = self {
            let total: f64 = probs.iter().sum();
            if values.is_empty()
                || values.len() != probs.len()
                || probs.iter().any(|w| !(*w >= 0.0))
                || (total - 1.0).abs() > 1e-9
            {
                return Err(Error::InvalidParameters(
                    "custom noise table needs matching values/probs summing to 1".into(),
                ));
            }
        }
        let (_, sd, m3) = self.raw_moments();
        if !(sd > 0.0) || m3 == 0.0 {
            return Err(Error::InvalidParameters("noise must have positive variance and nonzero skew".into()));
        }
        Ok(())
    }
}

fn mixture_moments(comps: &[(f64, f64, f64)]) -> (f64, f64, f64) {
    let mean: f64 = comps.iter().map(|(w, m, _)| w * m).sum();
    let var: f64 = comps.iter().map(|(w, m, s)| w * (s * s + (m - mean).powi(2))).sum();
    let m3: f64 = comps
        .iter()
        .map(|(w, m, s)| {
            let d = m - mean;
            w * (d.powi(3) + 3.0 * d * s * s)
        })
        .sum();
    (mean, var.sqrt(), m3)
}

/// Noise family plus the per-variable target standard deviations.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct NoiseSpec {
    pub kind: NoiseKind,
    pub scales: Vec<f64>,
}

impl NoiseSpec {
    pub fn new(kind: NoiseKind, scales: Vec<f64>) -> Result<Self> {
        kind.validate()?;
        if scales.iter().any(|s| !(*s > 0.0) || !s.is_finite()) {
            return Err(Error::InvalidParameters("noise scales must be positive".into()));
        }
        Ok(Self { kind, scales })
    }

    /// Scales drawn uniformly from `(0.8, 1.0)`.
    pub fn random_scales<R: Rng>(kind: NoiseKind, p: usize, rng: &mut R) -> Result<Self> {
        let scales = (0..p).map(|_| rng.random_range(0.8..1.0)).collect();
        Self::new(kind, scales)
    }

    /// Diagonals of `Omega2` and `Omega3` for the centred, rescaled noise.
    pub fn moments(&self, p: usize) -> Result<(Vec<f64>, Vec<f64>)> {
        if self.scales.len() != p {
            return Err(Error::InvalidParameters(format!("{} noise scales for p = {p}", self.scales.len())));
        }
        let (_, sd, m3) = self.kind.raw_moments();
        let omega2 = self.scales.iter().map(|s| s * s).collect();
        let omega3 = self.scales.iter().map(|s| m3 * (s / sd).powi(3)).collect();
        Ok((omega2, omega3))
    }
}

/// Draws `n` i.i.d. rows of `X = (I - Lambda)^{-T} eps`.
///
/// Each `eps_v` is a raw draw from `noise.kind`, centred by the analytic mean
/// and multiplied by `scales[v] / sd`. The data therefore follow the model
/// `params.with_noise(noise)`; the noise moments stored in `params` are not
/// used. Output is a deterministic function of `seed`.
pub fn sample(params: &SemParameters, noise: &NoiseSpec, n: usize, seed: u64) -> Result<Dataset> {
    if n == 0 {
        return Err(Error::InvalidConfig("sample size must be positive".into()));
    }
    let p = params.p();
    if noise.scales.len() != p {
        return Err(Error::InvalidParameters(format!("{} noise scales for p = {p}", noise.scales.len())));
    }
    noise.kind.validate()?;
    let m = params.path_matrix()?;
    let (mean, sd, _) = noise.kind.raw_moments();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut eps = DMatrix::<f64>::zeros(n, p);
    for r in 0..n {
        for v in 0..p {
            eps[(r, v)] = (noise.kind.draw(&mut rng) - mean) * noise.scales[v] / sd;
        }
    }
    Dataset::with_default_labels(eps * m)
}

/// Model JSON: `{"p", "edges": [[i, j, lambda]], "omega2", "omega3"}`, 1-based.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ModelJson {
    pub p: usize,
    pub edges: Vec<(usize, usize, f64)>,
    pub omega2: Vec<f64>,
    pub omega3: Vec<f64>,
}

impl SemParameters {
    pub fn to_json(&self) -> ModelJson {
        ModelJson {
            p: self.p(),
            edges: self
                .graph
                .edges()
                .iter()
                .map(|&(i, j)| (i + 1, j + 1, self.lambda[(i, j)]))
                .collect(),
            omega2: self.omega2.clone(),
            omega3: self.omega3.clone(),
        }
    }

    pub fn from_json(json: &ModelJson) -> Result<Self> {
        let mut edges = Vec::with_capacity(json.edges.len());
        for &(i, j, w) in &json.edges {
            if i == 0 || j == 0 || i > json.p || j > json.p {
                return Err(Error::Parse(format!("edge [{i}, {j}, {w}] has a label outside 1..={}", json.p)));
            }
            edges.push((i - 1, j - 1, w));
        }
        Self::from_weighted_edges(json.p, &edges, json.omega2.clone(), json.omega3.clone())
    }
}

/// Interchange form of a [`MomentPair`]: `S` row-major, `T` as its distinct
/// entries `[i, j, k, value]` with 1-based `i <= j <= k`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MomentsJson {
    pub p: usize,
    #[serde(rename = "S")]
    pub s: Vec<f64>,
    #[serde(rename = "T")]
    pub t: Vec<(usize, usize, usize, f64)>,
}

impl MomentPair {
    pub fn to_json(&self) -> MomentsJson {
        let p = self.p();
        MomentsJson {
            p,
            s: (0..p).flat_map(|i| (0..p).map(move |j| (i, j))).map(|(i, j)| self.s[(i, j)]).collect(),
            t: self.t.entries().map(|((i, j, k), v)| (i + 1, j + 1, k + 1, v)).collect(),
        }
    }

    /// Rebuilds the moments; every distinct third-moment entry must appear
    /// exactly once, in any index order.
    pub fn from_json(json: &MomentsJson) -> Result<Self> {
        let p = json.p;
        if json.s.len() != p * p {
            return Err(Error::Parse(format!("S has {} entries, expected {}", json.s.len(), p * p)));
        }
        let s = DMatrix::from_row_slice(p, p, &json.s);
        if (&s - s.transpose()).amax() > 1e-12 * s.amax().max(1.0) {
            return Err(Error::Parse("S is not symmetric".into()));
        }
        let mut t = SymTensor3::zeros(p);
        let mut seen = std::collections::BTreeSet::new();
        for (n, &(i, j, k, v)) in json.t.iter().enumerate() {
            if [i, j, k].iter().any(|&x| x == 0 || x > p) {
                return Err(Error::Parse(format!("T entry #{} [{i}, {j}, {k}] has a label outside 1..={p}", n + 1)));
            }
            let mut key = [i, j, k];
            key.sort_unstable();
            if !seen.insert(key) {
                return Err(Error::Parse(format!("T entry #{} [{i}, {j}, {k}] is repeated", n + 1)));
            }
            t.set(i - 1, j - 1, k - 1, v);
        }
        if seen.len() != crate::tensor::distinct_len(p) {
            return Err(Error::Parse(format!(
                "T has {} distinct entries, expected {}",
                seen.len(),
                crate::tensor::distinct_len(p)
            )));
        }
        if s.iter().chain(json.t.iter().map(|e| &e.3)).any(|x| !x.is_finite()) {
            return Err(Error::Parse("non-finite moment".into()));
        }
        Ok(MomentPair { s, t })
    }
}

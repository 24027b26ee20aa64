//! Hypothesis tests that decide whether moment functionals vanish, and
//! multiple-testing corrections.

use std::fmt;
use std::str::FromStr;

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};
use statrs::distribution::{ChiSquared, ContinuousCDF, Normal};

use crate::data::Dataset;
use crate::error::{Error, Result};
use crate::moments::{checked_inverse, d2, d3, linearized_scores, sample_moments, DeterminantStat};
use crate::sem::MomentPair;

/// Smallest sample size accepted by the delta-method tests.
pub const MIN_DELTA_N: usize = 30;
/// Newton iteration cap for the empirical-likelihood dual.
pub const EL_MAX_ITER: usize = 100;
/// Stopping rule for the empirical-likelihood dual: gradient norm, or Newton
/// decrement relative to the statistic.
pub const EL_GRAD_TOL: f64 = 1e-10;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Correction {
    None,
    Holm,
    Bh,
}

impl Correction {
    pub fn adjust(self, pvals: &[f64]) -> Vec<f64> {
        match self {
            Correction::None => pvals.iter().map(|p| p.clamp(0.0, 1.0)).collect(),
            Correction::Holm => holm(pvals),
            Correction::Bh => bh(pvals),
        }
    }
}

impl fmt::Display for Correction {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Correction::None => "none",
            Correction::Holm => "holm",
            Correction::Bh => "bh",
        })
    }
}

impl FromStr for Correction {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "none" => Ok(Correction::None),
            "holm" => Ok(Correction::Holm),
            "bh" => Ok(Correction::Bh),
            other => Err(Error::InvalidConfig(format!("unknown correction '{other}' (none, holm, bh)"))),
        }
    }
}

/// Whether decisions come from hypothesis tests or from exact thresholds.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Mode {
    Sample,
    Population,
}

impl fmt::Display for Mode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Mode::Sample => "sample",
            Mode::Population => "population",
        })
    }
}

impl FromStr for Mode {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "sample" => Ok(Mode::Sample),
            "population" => Ok(Mode::Population),
            other => Err(Error::InvalidConfig(format!("unknown mode '{other}' (sample, population)"))),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TestConfig {
    pub alpha: f64,
    pub correction: Correction,
    pub mode: Mode,
    /// Zero threshold in population mode.
    pub tol: f64,
}

impl TestConfig {
    pub fn new(alpha: f64, correction: Correction, mode: Mode, tol: f64) -> Result<Self> {
        let cfg = Self { alpha, correction, mode, tol };
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn population(tol: f64) -> Result<Self> {
        Self::new(0.05, Correction::None, Mode::Population, tol)
    }

    pub fn sample(alpha: f64, correction: Correction) -> Result<Self> {
        Self::new(alpha, correction, Mode::Sample, 1e-9)
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.alpha > 0.0 && self.alpha < 1.0) {
            return Err(Error::InvalidConfig(format!("alpha must lie in (0, 1), got {}", self.alpha)));
        }
        if !(self.tol > 0.0) {
            return Err(Error::InvalidConfig(format!("tol must be positive, got {}", self.tol)));
        }
        Ok(())
    }
}

impl Default for TestConfig {
    fn default() -> Self {
        Self { alpha: 0.05, correction: Correction::Holm, mode: Mode::Sample, tol: 1e-9 }
    }
}

/// One recorded decision.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TestRecord {
    pub kind: String,
    /// 1-based vertex labels (or set members) the test refers to.
    pub indices: Vec<usize>,
    pub raw_p: f64,
    pub adjusted_p: f64,
    pub statistic: f64,
}

/// All decisions of a run, in the order they were made.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct PValueTable {
    pub records: Vec<TestRecord>,
}

/// Raw outcome of a single test.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TestOutcome {
    pub statistic: f64,
    pub p_value: f64,
}

impl PValueTable {
    /// Corrects a family of raw outcomes jointly, appends the records and
    /// returns the adjusted p-values in input order.
    pub fn push_family(
        &mut self,
        kind: &str,
        family: Vec<(Vec<usize>, TestOutcome)>,
        correction: Correction,
    ) -> Vec<f64> {
        let raw: Vec<f64> = family.iter().map(|(_, o)| o.p_value).collect();
        let adjusted = correction.adjust(&raw);
        for ((indices, outcome), adj) in family.into_iter().zip(&adjusted) {
            self.records.push(TestRecord {
                kind: kind.to_owned(),
                indices,
                raw_p: outcome.p_value,
                adjusted_p: *adj,
                statistic: outcome.statistic,
            });
        }
        adjusted
    }

    pub fn len(&self) -> usize {
        self.records.len()
    }

    pub fn is_empty(&self) -> bool {
        self.records.is_empty()
    }
}

/// Holm step-down adjusted p-values.
pub fn holm(pvals: &[f64]) -> Vec<f64> {
    let m = pvals.len();
    let mut order: Vec<usize> = (0..m).collect();
    order.sort_by(|&a, &b| pvals[a].total_cmp(&pvals[b]).then(a.cmp(&b)));
    let mut out = vec![0.0; m];
    let mut running: f64 = 0.0;
    for (rank, &i) in order.iter().enumerate() {
        running = running.max(((m - rank) as f64 * pvals[i]).min(1.0));
        out[i] = running.clamp(0.0, 1.0);
    }
    out
}

/// Benjamini–Hochberg step-up adjusted p-values.
pub fn bh(pvals: &[f64]) -> Vec<f64> {
    let m = pvals.len();
    let mut order: Vec<usize> = (0..m).collect();
    order.sort_by(|&a, &b| pvals[a].total_cmp(&pvals[b]).then(a.cmp(&b)));
    let mut out = vec![0.0; m];
    let mut running: f64 = 1.0;
    for (rank, &i) in order.iter().enumerate().rev() {
        running = running.min(m as f64 * pvals[i] / (rank + 1) as f64);
        out[i] = running.clamp(0.0, 1.0);
    }
    out
}

fn two_sided_normal(z: f64) -> f64 {
    let normal = Normal::standard();
    (2.0 * normal.sf(z.abs())).min(1.0)
}

/// Delta-method z-test of `H0: stat = 0`, where `stat` was computed from the
/// sample moments of `data`.
pub fn delta_test(stat: &DeterminantStat, data: &Dataset) -> Result<TestOutcome> {
    let n = data.n();
    if n < MIN_DELTA_N {
        return Err(Error::InsufficientData(format!("delta-method test needs n >= {MIN_DELTA_N}, got {n}")));
    }
    let h = linearized_scores(stat, data);
    let mean = h.mean();
    let var = h.iter().map(|x| (x - mean) * (x - mean)).sum::<f64>() / (n - 1) as f64;
    let scale = h.iter().map(|x| x * x).sum::<f64>() / n as f64;
    if !(var > 1e-14 * scale.max(f64::MIN_POSITIVE)) {
        return Err(Error::DegenerateVariance { variance: var });
    }
    let z = stat.value / (var / n as f64).sqrt();
    Ok(TestOutcome { statistic: z, p_value: two_sided_normal(z) })
}

/// Which determinant statistic to test.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum StatKind {
    D2,
    D3,
}

/// Delta-method test of `d2(u, v) = 0` or `d3(u, v) = 0` on raw data.
pub fn delta_test_determinant(data: &Dataset, kind: StatKind, u: usize, v: usize) -> Result<TestOutcome> {
    if u == v || u >= data.p() || v >= data.p() {
        return Err(Error::InvalidConfig(format!("need distinct columns, got {} and {}", u + 1, v + 1)));
    }
    let sub = data.select_columns(&[u, v]);
    let m = sample_moments(&sub);
    let stat = match kind {
        StatKind::D2 => d2(&m, 0, 1),
        StatKind::D3 => d3(&m, 0, 1),
    };
    delta_test(&stat, &sub)
}

/// Owen's pseudo-logarithm: `log z` above `eps`, its second-order Taylor
/// expansion below. Returns the value and first two derivatives.
fn pseudo_log(z: f64, eps: f64) -> (f64, f64, f64) {
    if z >= eps {
        (z.ln(), 1.0 / z, -1.0 / (z * z))
    } else {
        let r = z / eps;
        (eps.ln() - 1.5 + 2.0 * r - 0.5 * r * r, (2.0 - r) / eps, -1.0 / (eps * eps))
    }
}

/// Empirical-likelihood ratio test of `H0: E[g] = 0` for the rows of the
/// `n x k` matrix `g`, calibrated by a chi-square with `k` degrees of
/// freedom. Returns p = 0 when zero is outside the convex hull of the rows.
/// Once the p-value underflows to zero the reported statistic is a lower
/// bound.
pub fn el_mean_zero_test(g: &DMatrix<f64>) -> Result<TestOutcome> {
    let (n, k) = g.shape();
    if k == 0 {
        return Err(Error::InvalidConfig("empirical likelihood needs at least one column".into()));
    }
    if n <= k {
        return Err(Error::InsufficientData(format!("empirical likelihood needs n > k, got n = {n}, k = {k}")));
    }
    if g.iter().any(|x| !x.is_finite()) {
        return Err(Error::InsufficientData("non-finite estimating-equation value".into()));
    }
    // A coordinate of constant strict sign puts zero outside the hull.
    for col in g.column_iter() {
        if col.iter().all(|&x| x > 0.0) || col.iter().all(|&x| x < 0.0) {
            return Ok(TestOutcome { statistic: f64::INFINITY, p_value: 0.0 });
        }
    }
    // Whitening leaves the likelihood ratio unchanged and conditions Newton.
    let gram = g.transpose() * g / n as f64;
    let chol = gram.clone().cholesky().ok_or(Error::DegenerateVariance { variance: gram.min() })?;
    let linv = chol.l().solve_lower_triangular(&DMatrix::identity(k, k)).ok_or(Error::DegenerateVariance {
        variance: gram.min(),
    })?;
    let z = g * linv.transpose();

    let eps = 1.0 / n as f64;
    let nf = n as f64;
    let chi = ChiSquared::new(k as f64).expect("k >= 1");
    let objective = |lam: &DVector<f64>| -> f64 {
        let w = &z * lam;
        -w.iter().map(|x| pseudo_log(1.0 + x, eps).0).sum::<f64>()
    };
    let mut lam = DVector::zeros(k);
    let mut f = objective(&lam);
    let mut grad_norm = f64::INFINITY;
    for _ in 0..EL_MAX_ITER {
        let w = &z * &lam;
        let mut d1 = DVector::zeros(n);
        let mut scaled = z.clone();
        for (r, wr) in w.iter().enumerate() {
            let (_, a, b) = pseudo_log(1.0 + wr, eps);
            d1[r] = a;
            scaled.row_mut(r).scale_mut((-b).sqrt());
        }
        let grad = -(z.tr_mul(&d1)) / nf;
        let hess = scaled.tr_mul(&scaled) / nf;
        grad_norm = grad.norm();
        let step = match hess.clone().cholesky() {
            Some(c) => c.solve(&grad),
            None => return Err(Error::DegenerateVariance { variance: hess.min() }),
        };
        // Newton decrement on the scale of the statistic.
        let decrement = nf * grad.dot(&step);
        let statistic = (-2.0 * f).max(0.0);
        if grad_norm < EL_GRAD_TOL || decrement < EL_GRAD_TOL * (1.0 + statistic) {
            return Ok(TestOutcome { statistic, p_value: chi.sf(statistic).clamp(0.0, 1.0) });
        }
        // The statistic only grows from here, so an underflowed p-value is final.
        if chi.sf(statistic) == 0.0 {
            return Ok(TestOutcome { statistic, p_value: 0.0 });
        }
        let mut t = 1.0;
        let mut accepted = false;
        for _ in 0..60 {
            let cand = &lam - &step * t;
            let fc = objective(&cand);
            if fc <= f {
                lam = cand;
                f = fc;
                accepted = true;
                break;
            }
            t *= 0.5;
        }
        if !accepted {
            break;
        }
    }
    Err(Error::ElNonConvergence { iterations: EL_MAX_ITER, grad_norm })
}

/// Per-row products `W_c (X_{D.C})_d` for every `c` in `c_set`, `d` in
/// `d_set`, with `X_{D.C}` the residual of `X_D` on `X_C` and `W_c` the
/// residual of `X_c^2` on `X_C`. Both residuals come from the same regressors,
/// so the column means equal those of `X_c^2 (X_{D.C})_d`, while the per-row
/// spread accounts for the estimated regression. Columns are ordered with `d`
/// varying fastest.
pub fn root_cycle_scores(data: &Dataset, c_set: &[usize], d_set: &[usize]) -> Result<DMatrix<f64>> {
    check_disjoint(c_set, d_set)?;
    let x = data.values();
    let xc = x.select_columns(c_set);
    let xd = x.select_columns(d_set);
    let sq = xc.map(|v| v * v);
    let nf = data.n() as f64;
    let inv = checked_inverse(&(xc.transpose() * &xc / nf))?;
    let resid = &xd - &xc * ((xd.transpose() * &xc / nf) * &inv).transpose();
    let w = &sq - &xc * ((sq.transpose() * &xc / nf) * &inv).transpose();
    let (n, kc, kd) = (data.n(), c_set.len(), d_set.len());
    Ok(DMatrix::from_fn(n, kc * kd, |row, col| {
        let (ci, di) = (col / kd, col % kd);
        w[(row, ci)] * resid[(row, di)]
    }))
}

/// Population counterpart of [`root_cycle_scores`]: the matrix
/// `E[X_c^2 (X_{D.C})_d]` (rows `c`, columns `d`).
pub fn root_cycle_moments(m: &MomentPair, c_set: &[usize], d_set: &[usize]) -> Result<DMatrix<f64>> {
    check_disjoint(c_set, d_set)?;
    let r = crate::moments::regress(m, d_set, c_set)?;
    Ok(DMatrix::from_fn(c_set.len(), d_set.len(), |ci, di| {
        let c = c_set[ci];
        let direct = m.t.get(c, c, d_set[di]);
        let proj: f64 = c_set.iter().enumerate().map(|(j, &cj)| r.matrix[(di, j)] * m.t.get(c, c, cj)).sum();
        direct - proj
    }))
}

fn check_disjoint(c_set: &[usize], d_set: &[usize]) -> Result<()> {
    if c_set.is_empty() || d_set.is_empty() {
        return Err(Error::InvalidConfig("root-cycle test needs non-empty sets".into()));
    }
    if c_set.iter().any(|c| d_set.contains(c)) {
        return Err(Error::InvalidConfig("root-cycle test needs disjoint sets".into()));
    }
    Ok(())
}

/// Empirical-likelihood test that `E[X_c^2 (X_{D.C})_d] = 0` for all pairs,
/// which holds when `c_set` is a root cycle.
pub fn root_cycle_test(data: &Dataset, c_set: &[usize], d_set: &[usize]) -> Result<TestOutcome> {
    el_mean_zero_test(&root_cycle_scores(data, c_set, d_set)?)
}

/// Inputs of the edge test for a candidate edge `c -> d`.
#[derive(Debug, Clone, PartialEq)]
pub struct EdgeTestInput<'a> {
    pub d: usize,
    pub c: usize,
    /// Every candidate parent of `d` outside its component, including `c`.
    pub candidate_parents: &'a [usize],
    /// Weights for `candidate_parents`, aligned with it (the entry for `c` is ignored).
    pub parent_weights: &'a [f64],
    /// Parent of `d` inside its cycle with the estimated weight, if any.
    pub cycle_parent: Option<(usize, f64)>,
}

/// Residual of `d` with the weight of `c -> d` forced to zero.
fn restricted_residual(data: &Dataset, input: &EdgeTestInput<'_>) -> DVector<f64> {
    let x = data.values();
    let mut eps = x.column(input.d).clone_owned();
    for (&cp, &w) in input.candidate_parents.iter().zip(input.parent_weights) {
        if cp != input.c {
            eps.axpy(-w, &x.column(cp), 1.0);
        }
    }
    if let Some((dp, w)) = input.cycle_parent {
        eps.axpy(-w, &x.column(dp), 1.0);
    }
    eps
}

fn validate_edge_input(data: &Dataset, input: &EdgeTestInput<'_>) -> Result<()> {
    if !input.candidate_parents.contains(&input.c) {
        return Err(Error::InvalidConfig(format!("{} is not a candidate parent of {}", input.c + 1, input.d + 1)));
    }
    if input.candidate_parents.len() != input.parent_weights.len() {
        return Err(Error::InvalidConfig("one weight per candidate parent is required".into()));
    }
    let p = data.p();
    let mut all = input.candidate_parents.iter().copied().chain([input.d]).chain(input.cycle_parent.map(|x| x.0));
    if all.any(|v| v >= p) {
        return Err(Error::InvalidConfig("edge-test vertex out of range".into()));
    }
    Ok(())
}

/// Nuisance-adjusted test of `H0: lambda_cd = 0`.
///
/// Estimating equations, with `e` the restricted residual of `d`:
/// `m_1 = e Y_c^2`, `m_k = e Y_{c'}^2` for the other candidate parents `c'`,
/// and `m_last = e^2 Y_c` when `d` has a cycle parent. The score
/// `g = m_1 - A_{1,-1} A_{-1,-1}^{-1} m_{2:}` removes the first-order effect of
/// the estimated nuisance weights, with `A` the Jacobian of the equation
/// means in `(lambda_cd, other parent weights, cycle-parent weight)`.
pub fn edge_test_nuisance_adjusted(data: &Dataset, input: &EdgeTestInput<'_>) -> Result<TestOutcome> {
    validate_edge_input(data, input)?;
    let x = data.values();
    let n = data.n();
    let nf = n as f64;
    let eps = restricted_residual(data, input);
    let yc = x.column(input.c);
    let others: Vec<usize> = input.candidate_parents.iter().copied().filter(|&v| v != input.c).collect();

    // Regressors in coefficient order.
    let mut regs = vec![input.c];
    regs.extend(&others);
    if let Some((dp, _)) = input.cycle_parent {
        regs.push(dp);
    }
    let k = regs.len();

    let mut eqs = DMatrix::zeros(n, k);
    for r in 0..n {
        eqs[(r, 0)] = eps[r] * yc[r] * yc[r];
        for (i, &o) in others.iter().enumerate() {
            eqs[(r, i + 1)] = eps[r] * x[(r, o)] * x[(r, o)];
        }
        if input.cycle_parent.is_some() {
            eqs[(r, k - 1)] = eps[r] * eps[r] * yc[r];
        }
    }
    if k == 1 {
        return el_mean_zero_test(&eqs);
    }

    // d e / d theta_j = -Y_j.
    let mut a = DMatrix::zeros(k, k);
    for (j, &reg) in regs.iter().enumerate() {
        let yj = x.column(reg);
        a[(0, j)] = -(0..n).map(|r| yc[r] * yc[r] * yj[r]).sum::<f64>() / nf;
        for (i, &o) in others.iter().enumerate() {
            a[(i + 1, j)] = -(0..n).map(|r| x[(r, o)] * x[(r, o)] * yj[r]).sum::<f64>() / nf;
        }
        if input.cycle_parent.is_some() {
            a[(k - 1, j)] = -2.0 * (0..n).map(|r| eps[r] * yc[r] * yj[r]).sum::<f64>() / nf;
        }
    }
    let a_nn = a.view((1, 1), (k - 1, k - 1)).clone_owned();
    let a_1n = a.view((0, 1), (1, k - 1)).clone_owned();
    let a_nn_inv = a_nn.clone().try_inverse().ok_or(Error::IllConditioned { cond: f64::INFINITY })?;
    let cond = crate::moments::condition_number(&a_nn);
    if !(cond <= crate::moments::MAX_CONDITION) {
        return Err(Error::IllConditioned { cond });
    }
    let weights = a_1n * a_nn_inv;
    let nuis = eqs.columns(1, k - 1);
    let proj = nuis * weights.transpose();
    let g = eqs.column(0) - proj.column(0);
    el_mean_zero_test(&DMatrix::from_column_slice(n, 1, g.as_slice()))
}

/// Unadjusted version of [`edge_test_nuisance_adjusted`]: tests `E[m_1] = 0`
/// as if the nuisance weights were known.
pub fn edge_test_naive(data: &Dataset, input: &EdgeTestInput<'_>) -> Result<TestOutcome> {
    validate_edge_input(data, input)?;
    let eps = restricted_residual(data, input);
    let yc = data.column(input.c);
    let g = DMatrix::from_fn(data.n(), 1, |r, _| eps[r] * yc[r] * yc[r]);
    el_mean_zero_test(&g)
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;
    use rand_distr::{Distribution, StandardNormal};

    fn normal_matrix(n: usize, k: usize, seed: u64) -> DMatrix<f64> {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        DMatrix::from_fn(n, k, |_, _| StandardNormal.sample(&mut rng))
    }

    #[test]
    fn corrections_on_two_values() {
        let h = holm(&[0.01, 0.04]);
        let b = bh(&[0.01, 0.04]);
        assert!((h[0] - 0.02).abs() < 1e-15 && (h[1] - 0.04).abs() < 1e-15);
        assert!((b[0] - 0.02).abs() < 1e-15 && (b[1] - 0.04).abs() < 1e-15);
        assert_eq!(holm(&[0.3]), vec![0.3]);
        assert_eq!(bh(&[0.3]), vec![0.3]);
    }

    #[test]
    fn corrections_follow_input_order() {
        let p = [0.04, 0.5, 0.01, 0.03];
        let h = holm(&p);
        assert_eq!(h, vec![0.09, 0.5, 0.04, 0.09]);
        let b = bh(&p);
        assert!((b[0] - 0.16 / 3.0).abs() < 1e-15);
        assert!((b[2] - 0.04).abs() < 1e-15);
        assert!((b[3] - 0.16 / 3.0).abs() < 1e-15);
    }

    #[test]
    fn el_matches_closed_form_for_symmetric_two_points() {
        // Rows +-1 with mean zero: the ratio is exactly one.
        let g = DMatrix::from_fn(10, 1, |r, _| if r % 2 == 0 { 1.0 } else { -1.0 });
        let out = el_mean_zero_test(&g).unwrap();
        assert!(out.statistic.abs() < 1e-12);
        assert!((out.p_value - 1.0).abs() < 1e-9);
    }

    #[test]
    fn el_two_point_statistic() {
        // 3 rows at +1, 1 row at -1: weights 1/6 and 1/2, so
        // -2 log R = -2 (3 log(4/6) + log(4/2)).
        let g = DMatrix::from_column_slice(4, 1, &[1.0, 1.0, 1.0, -1.0]);
        let out = el_mean_zero_test(&g).unwrap();
        let expected = -2.0 * (3.0 * (4.0f64 / 6.0).ln() + 2.0f64.ln());
        assert!((out.statistic - expected).abs() < 1e-9, "{} vs {expected}", out.statistic);
    }

    #[test]
    fn el_hull_failure_is_zero() {
        let g = DMatrix::from_fn(50, 2, |r, c| if c == 0 { 1.0 + r as f64 } else { (r as f64).sin() });
        assert_eq!(el_mean_zero_test(&g).unwrap().p_value, 0.0);
    }

    #[test]
    fn el_detects_shifted_mean() {
        let g = normal_matrix(1000, 1, 3).add_scalar(1.0);
        assert!(el_mean_zero_test(&g).unwrap().p_value < 1e-6);
    }

    #[test]
    fn el_handles_several_columns() {
        let g = normal_matrix(2000, 3, 4);
        let out = el_mean_zero_test(&g).unwrap();
        assert!(out.p_value > 1e-4 && out.p_value <= 1.0);
    }

    #[test]
    fn duplicated_columns_have_degenerate_variance() {
        let col = normal_matrix(200, 1, 5);
        let data = Dataset::with_default_labels(DMatrix::from_fn(200, 2, |r, _| col[(r, 0)])).unwrap();
        assert!(matches!(
            delta_test_determinant(&data, StatKind::D2, 0, 1),
            Err(Error::DegenerateVariance { .. })
        ));
    }

    #[test]
    fn delta_test_rejects_small_n() {
        let data = Dataset::with_default_labels(normal_matrix(10, 2, 6)).unwrap();
        assert!(matches!(
            delta_test_determinant(&data, StatKind::D3, 0, 1),
            Err(Error::InsufficientData(_))
        ));
    }

    #[test]
    fn population_root_cycle_moments_vanish_for_root() {
        use crate::sem::{population_moments, SemParameters};
        // Root 2-cycle {0,1} feeding 2.
        let params = SemParameters::from_weighted_edges(
            3,
            &[(0, 1, 0.6), (1, 0, -0.5), (1, 2, 0.7)],
            vec![1.0, 0.9, 0.8],
            vec![1.2, -0.7, 0.9],
        )
        .unwrap();
        let m = population_moments(&params).unwrap();
        assert!(root_cycle_moments(&m, &[0, 1], &[2]).unwrap().amax() < 1e-12);
        assert!(root_cycle_moments(&m, &[2], &[0, 1]).unwrap().amax() > 1e-3);
    }
}

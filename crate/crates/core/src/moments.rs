//! Sample moments and closed-form moment functionals: the 2x2 and 3x3
//! determinant statistics, regression on ancestral sets, cycle skeletons and
//! the edge-weight formulas for root cycles.

use nalgebra::{DMatrix, DVector};
use rayon::prelude::*;

use crate::data::Dataset;
use crate::error::{Error, Result};
use crate::sem::MomentPair;
use crate::tensor::SymTensor3;

/// Largest condition number accepted when inverting a covariance block.
pub const MAX_CONDITION: f64 = 1e10;

/// Raw (uncentred) second and third moments of the rows of `data`.
///
/// Each entry is summed in row order, so the result does not depend on how
/// the work is split across threads.
pub fn sample_moments(data: &Dataset) -> MomentPair {
    let (n, p) = (data.n(), data.p());
    let nf = n as f64;
    let x = data.values();
    let s_upper = x.transpose() * x / nf;
    let s = DMatrix::from_fn(p, p, |i, j| if i <= j { s_upper[(i, j)] } else { s_upper[(j, i)] });

    let pairs: Vec<(usize, usize)> = (0..p).flat_map(|j| (0..=j).map(move |i| (i, j))).collect();
    let rows: Vec<Vec<f64>> = pairs
        .par_iter()
        .map(|&(i, j)| {
            let (ci, cj) = (data.column(i), data.column(j));
            let prod: Vec<f64> = ci.iter().zip(cj).map(|(a, b)| a * b).collect();
            (j..p)
                .map(|k| prod.iter().zip(data.column(k)).map(|(a, b)| a * b).sum::<f64>() / nf)
                .collect()
        })
        .collect();
    let mut t = SymTensor3::zeros(p);
    for (&(i, j), row) in pairs.iter().zip(&rows) {
        for (off, &val) in row.iter().enumerate() {
            t.set(i, j, j + off, val);
        }
    }
    MomentPair { s, t }
}

/// A single second- or third-moment coordinate.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum MomentCoord {
    S(usize, usize),
    T(usize, usize, usize),
}

impl MomentCoord {
    pub fn value(&self, m: &MomentPair) -> f64 {
        match *self {
            MomentCoord::S(i, j) => m.s[(i, j)],
            MomentCoord::T(i, j, k) => m.t.get(i, j, k),
        }
    }

    /// Per-row monomial `x_i x_j` or `x_i x_j x_k`.
    pub fn monomial(&self, data: &Dataset, row: usize) -> f64 {
        let x = data.values();
        match *self {
            MomentCoord::S(i, j) => x[(row, i)] * x[(row, j)],
            MomentCoord::T(i, j, k) => x[(row, i)] * x[(row, j)] * x[(row, k)],
        }
    }
}

/// Value of a determinant statistic and its gradient in the distinct moment
/// coordinates it depends on.
#[derive(Debug, Clone, PartialEq)]
pub struct DeterminantStat {
    pub value: f64,
    pub coords: Vec<MomentCoord>,
    pub gradient: Vec<f64>,
}

/// `d2(u, v) = s_uu t_uuv - s_uv t_uuu`.
pub fn d2(m: &MomentPair, u: usize, v: usize) -> DeterminantStat {
    assert_ne!(u, v, "d2 needs distinct vertices");
    let (suu, suv) = (m.s[(u, u)], m.s[(u, v)]);
    let (tuuu, tuuv) = (m.t.get(u, u, u), m.t.get(u, u, v));
    DeterminantStat {
        value: suu * tuuv - suv * tuuu,
        coords: vec![
            MomentCoord::S(u, u),
            MomentCoord::S(u, v),
            MomentCoord::T(u, u, u),
            MomentCoord::T(u, u, v),
        ],
        gradient: vec![tuuv, -tuuu, -suv, suu],
    }
}

fn d3_matrix(m: &MomentPair, u: usize, v: usize) -> nalgebra::Matrix3<f64> {
    let t = |a, b, c| m.t.get(a, b, c);
    nalgebra::Matrix3::new(
        m.s[(u, u)],
        m.s[(u, v)],
        m.s[(v, v)],
        t(u, u, u),
        t(u, u, v),
        t(u, v, v),
        t(u, u, v),
        t(u, v, v),
        t(v, v, v),
    )
}

/// Determinant of `[[s_uu, s_uv, s_vv], [t_uuu, t_uuv, t_uvv], [t_uuv, t_uvv, t_vvv]]`.
pub fn d3(m: &MomentPair, u: usize, v: usize) -> DeterminantStat {
    assert_ne!(u, v, "d3 needs distinct vertices");
    let a = d3_matrix(m, u, v);
    // Cofactor (i, j) of a 3x3 matrix.
    let cof = |i: usize, j: usize| {
        let (r0, r1) = ((i + 1) % 3, (i + 2) % 3);
        let (c0, c1) = ((j + 1) % 3, (j + 2) % 3);
        a[(r0, c0)] * a[(r1, c1)] - a[(r0, c1)] * a[(r1, c0)]
    };
    DeterminantStat {
        value: a.determinant(),
        coords: vec![
            MomentCoord::S(u, u),
            MomentCoord::S(u, v),
            MomentCoord::S(v, v),
            MomentCoord::T(u, u, u),
            MomentCoord::T(u, u, v),
            MomentCoord::T(u, v, v),
            MomentCoord::T(v, v, v),
        ],
        gradient: vec![
            cof(0, 0),
            cof(0, 1),
            cof(0, 2),
            cof(1, 0),
            cof(1, 1) + cof(2, 0),
            cof(1, 2) + cof(2, 1),
            cof(2, 2),
        ],
    }
}

/// Least-squares coefficients of the `targets` on the `regressors`.
#[derive(Debug, Clone, PartialEq)]
pub struct RegressionCoefficients {
    pub targets: Vec<usize>,
    pub regressors: Vec<usize>,
    /// `|targets| x |regressors|`, equal to `S_DC S_CC^{-1}`.
    pub matrix: DMatrix<f64>,
}

/// 2-norm condition number of a symmetric matrix.
pub fn condition_number(a: &DMatrix<f64>) -> f64 {
    if a.is_empty() {
        return 1.0;
    }
    let sv = a.clone().singular_values();
    let max = sv.max();
    let min = sv.min();
    if min > 0.0 {
        max / min
    } else {
        f64::INFINITY
    }
}

/// Inverse of a positive-definite block, refusing ill-conditioned input.
pub fn checked_inverse(a: &DMatrix<f64>) -> Result<DMatrix<f64>> {
    let cond = condition_number(a);
    if !(cond <= MAX_CONDITION) {
        return Err(Error::IllConditioned { cond });
    }
    a.clone().try_inverse().ok_or(Error::IllConditioned { cond })
}

/// `R_{D,C} = S_{D,C} S_{C,C}^{-1}`.
pub fn regress(m: &MomentPair, d_set: &[usize], c_set: &[usize]) -> Result<RegressionCoefficients> {
    let matrix = if c_set.is_empty() {
        DMatrix::zeros(d_set.len(), 0)
    } else {
        let s_cc = m.s.select_rows(c_set).select_columns(c_set);
        let s_dc = m.s.select_rows(d_set).select_columns(c_set);
        s_dc * checked_inverse(&s_cc)?
    };
    Ok(RegressionCoefficients { targets: d_set.to_vec(), regressors: c_set.to_vec(), matrix })
}

/// Complement of `c_set` in `0..p`, in increasing order.
pub fn complement(p: usize, c_set: &[usize]) -> Vec<usize> {
    (0..p).filter(|v| !c_set.contains(v)).collect()
}

/// Residuals of every column outside `c_set` after regressing it on the
/// columns in `c_set`. Returns the residual data (columns in increasing
/// original order) and the original indices of those columns.
pub fn residualize(data: &Dataset, c_set: &[usize]) -> Result<(Dataset, Vec<usize>)> {
    let rest = complement(data.p(), c_set);
    if c_set.is_empty() {
        return Ok((data.clone(), rest));
    }
    let x = data.values();
    let xc = x.select_columns(c_set);
    let xd = x.select_columns(&rest);
    let nf = data.n() as f64;
    let s_cc = xc.transpose() * &xc / nf;
    let s_dc = xd.transpose() * &xc / nf;
    let r = s_dc * checked_inverse(&s_cc)?;
    let resid = xd - xc * r.transpose();
    let labels = rest.iter().map(|&j| data.labels()[j].clone()).collect();
    Ok((Dataset::new(resid, labels)?, rest))
}

/// Population counterpart of [`residualize`]: moments of
/// `X_{V\C} - R_{V\C,C} X_C`, with the same index bookkeeping.
pub fn residualize_moments(m: &MomentPair, c_set: &[usize]) -> Result<(MomentPair, Vec<usize>)> {
    let p = m.p();
    let rest = complement(p, c_set);
    if c_set.is_empty() {
        return Ok((m.clone(), rest));
    }
    let r = regress(m, &rest, c_set)?;
    let mut b = DMatrix::zeros(rest.len(), p);
    for (row, &d) in rest.iter().enumerate() {
        b[(row, d)] = 1.0;
        for (col, &c) in c_set.iter().enumerate() {
            b[(row, c)] = -r.matrix[(row, col)];
        }
    }
    Ok((m.linear_image(&b), rest))
}

/// Local index pairs `(i, j)`, `i < j`, declared non-adjacent because
/// `|(S_CC^{-1})_ij| < tol`.
pub fn cycle_skeleton(s_cc: &DMatrix<f64>, tol: f64) -> Result<Vec<(usize, usize)>> {
    let inv = checked_inverse(s_cc)?;
    let k = s_cc.nrows();
    Ok((0..k)
        .flat_map(|i| (i + 1..k).map(move |j| (i, j)))
        .filter(|&(i, j)| inv[(i, j)].abs() < tol)
        .collect())
}

/// Same pairs via the minors `det S_{C\j, C\i}`, kept as a cross-check of
/// [`cycle_skeleton`].
pub fn cycle_skeleton_by_minors(s_cc: &DMatrix<f64>, tol: f64) -> Vec<(usize, usize)> {
    let k = s_cc.nrows();
    let mut out = Vec::new();
    for i in 0..k {
        for j in i + 1..k {
            let rows: Vec<usize> = (0..k).filter(|&r| r != j).collect();
            let cols: Vec<usize> = (0..k).filter(|&c| c != i).collect();
            let minor = s_cc.select_rows(&rows).select_columns(&cols).determinant();
            if minor.abs() < tol {
                out.push((i, j));
            }
        }
    }
    out
}

/// The cubic polynomials `(p(s,t), q(s,t))` with `p * lambda_uv + q = 0` for
/// consecutive vertices `u -> v -> w` on a root cycle of length >= 3.
pub fn triple_polynomials(m: &MomentPair, u: usize, v: usize, w: usize) -> (f64, f64) {
    let s = |a, b| m.s[(a, b)];
    let t = |a, b, c| m.t.get(a, b, c);
    let (suu, suv, suw, svw) = (s(u, u), s(u, v), s(u, w), s(v, w));
    let (tuuu, tuuv, tuvv) = (t(u, u, u), t(u, u, v), t(u, v, v));
    let (tuuw, tuvw, tvvw) = (t(u, u, w), t(u, v, w), t(v, v, w));
    let minor = tuvw * tuvw - tuuw * tvvw;
    let p = suu * minor + suw * (tuuu * tvvw - tuuv * tuvw) + svw * (tuuv * tuuw - tuuu * tuvw);
    let q = -suv * minor + suw * (tuvv * tuvw - tuuv * tvvw) + svw * (tuuv * tuvw - tuuw * tuvv);
    (p, q)
}

/// `lambda_uv = -q / p` for consecutive `u -> v -> w` on a root cycle.
pub fn lambda_from_triple(m: &MomentPair, u: usize, v: usize, w: usize, tol: f64) -> Result<f64> {
    let (p, q) = triple_polynomials(m, u, v, w);
    if !(p.abs() > tol) {
        return Err(Error::DegenerateDenominator { value: p });
    }
    Ok(-q / p)
}

/// Coefficients `(a, b, c)` of `a x^2 + b x + c = 0` satisfied by `lambda_uv`
/// on a root 2-cycle.
pub fn two_cycle_quadratic(m: &MomentPair, u: usize, v: usize) -> (f64, f64, f64) {
    let (suu, suv, svv) = (m.s[(u, u)], m.s[(u, v)], m.s[(v, v)]);
    let (tuuu, tuuv, tuvv) = (m.t.get(u, u, u), m.t.get(u, u, v), m.t.get(u, v, v));
    (suu * tuuv - suv * tuuu, svv * tuuu - suu * tuvv, suv * tuvv - svv * tuuv)
}

/// Both roots of the 2-cycle quadratic for `lambda_uv`, ordered by absolute
/// value. One belongs to each orientation of the cycle.
pub fn lambda_two_cycle(m: &MomentPair, u: usize, v: usize, tol: f64) -> Result<(f64, f64)> {
    let (a, b, c) = two_cycle_quadratic(m, u, v);
    if !(a.abs() > tol) {
        return Err(Error::DegenerateDenominator { value: a });
    }
    let mut disc = b * b - 4.0 * a * c;
    let scale = (b * b).max((4.0 * a * c).abs()).max(f64::MIN_POSITIVE);
    if disc < 0.0 {
        if disc < -tol * scale.max(1.0) {
            return Err(Error::ComplexRoots { discriminant: disc });
        }
        disc = 0.0;
    }
    // Numerically stable pair of roots.
    let sq = disc.sqrt();
    let qq = -0.5 * (b + b.signum() * sq);
    let (r1, r2) = if qq != 0.0 { (qq / a, c / qq) } else { (0.0, 0.0) };
    Ok(if r1.abs() <= r2.abs() { (r1, r2) } else { (r2, r1) })
}

/// `Lambda_{C,D} = R_{D,C}^T (I - Lambda_{D,D})`.
pub fn inter_cycle_weights(r_dc: &RegressionCoefficients, lambda_dd: &DMatrix<f64>) -> DMatrix<f64> {
    let k = lambda_dd.nrows();
    r_dc.matrix.transpose() * (DMatrix::identity(k, k) - lambda_dd)
}

/// The matrices `A2_uv` (4x3) and `A3_uvw` (4x5) whose ranks are bounded by
/// 2 and 3 on a root cycle with consecutive `u -> v -> w`.
pub fn rank_matrices(m: &MomentPair, u: usize, v: usize, w: usize, lambda_uv: f64) -> (DMatrix<f64>, DMatrix<f64>) {
    let s = |a, b| m.s[(a, b)];
    let t = |a, b, c| m.t.get(a, b, c);
    let l = lambda_uv;
    let a2 = DMatrix::from_row_slice(
        4,
        3,
        &[
            1.0,
            l,
            l * l,
            s(u, u),
            s(u, v),
            s(v, v),
            t(u, u, u),
            t(u, u, v),
            t(u, v, v),
            t(u, u, v),
            t(u, v, v),
            t(v, v, v),
        ],
    );
    let a3 = DMatrix::from_row_slice(
        4,
        5,
        &[
            1.0,
            l,
            l * l,
            l * l,
            l * l * l,
            s(u, u),
            s(u, v),
            s(v, v),
            s(u, w),
            s(v, w),
            t(u, u, u),
            t(u, u, v),
            t(u, v, v),
            t(u, u, w),
            t(u, v, w),
            t(u, u, v),
            t(u, v, v),
            t(v, v, v),
            t(u, v, w),
            t(v, v, w),
        ],
    );
    (a2, a3)
}

/// Singular values in decreasing order.
pub fn singular_values(a: &DMatrix<f64>) -> Vec<f64> {
    let mut sv: Vec<f64> = a.clone().singular_values().iter().copied().collect();
    sv.sort_by(|x, y| y.total_cmp(x));
    sv
}

/// Evaluates a gradient against per-row monomials: the linearised statistic
/// `sum_c grad_c * monomial_c(row)` for every row.
pub fn linearized_scores(stat: &DeterminantStat, data: &Dataset) -> DVector<f64> {
    DVector::from_fn(data.n(), |r, _| {
        stat.coords.iter().zip(&stat.gradient).map(|(c, g)| g * c.monomial(data, r)).sum()
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::graph::DirectedGraph;
    use crate::sem::{population_moments, SemParameters};

    fn single_edge_model() -> MomentPair {
        let params = SemParameters::from_weighted_edges(
            3,
            &[(0, 1, 3.0)],
            vec![1.0, 2.0, 1.0],
            vec![1.0, 2.0, 1.0],
        )
        .unwrap();
        population_moments(&params).unwrap()
    }

    fn cycle_model(weights: &[f64], omega2: Vec<f64>, omega3: Vec<f64>) -> SemParameters {
        let k = weights.len();
        let edges: Vec<_> = (0..k).map(|i| (i, (i + 1) % k, weights[i])).collect();
        SemParameters::from_weighted_edges(k, &edges, omega2, omega3).unwrap()
    }

    #[test]
    fn one_point_sample_moments() {
        let ds = Dataset::with_default_labels(DMatrix::from_row_slice(1, 2, &[1.0, 2.0])).unwrap();
        let m = sample_moments(&ds);
        assert_eq!(m.s, DMatrix::from_row_slice(2, 2, &[1.0, 2.0, 2.0, 4.0]));
        assert_eq!(m.t.get(0, 0, 0), 1.0);
        assert_eq!(m.t.get(0, 0, 1), 2.0);
        assert_eq!(m.t.get(0, 1, 1), 4.0);
        assert_eq!(m.t.get(1, 1, 1), 8.0);

        let zero = Dataset::with_default_labels(DMatrix::zeros(5, 3)).unwrap();
        let m = sample_moments(&zero);
        assert_eq!(m.s.amax(), 0.0);
        assert_eq!(m.t.max_abs_diff(&SymTensor3::zeros(3)), 0.0);
    }

    #[test]
    fn determinants_on_single_edge_model() {
        let m = single_edge_model();
        assert_eq!(d2(&m, 0, 1).value, 0.0);
        assert_eq!(d2(&m, 1, 0).value, 12.0);
        assert!(d3(&m, 0, 1).value.abs() < 1e-12);
        assert_eq!(d3(&m, 0, 1).value, d3(&m, 1, 0).value);
        assert_eq!(d2(&m, 0, 1).gradient.len(), 4);
        assert_eq!(d3(&m, 0, 1).gradient.len(), 7);
    }

    #[test]
    fn determinants_of_shifted_constant_moments() {
        // Moments chosen so that the 3x3 matrix is [[4+k,4,4+k],[8+k,8,8],[8,8,8+k]].
        for k in 1..6 {
            let kf = k as f64;
            let mut t = SymTensor3::zeros(2);
            t.set(0, 0, 0, 8.0 + kf);
            t.set(0, 0, 1, 8.0);
            t.set(0, 1, 1, 8.0);
            t.set(1, 1, 1, 8.0 + kf);
            let s = DMatrix::from_row_slice(2, 2, &[4.0 + kf, 4.0, 4.0, 4.0 + kf]);
            let m = MomentPair { s, t };
            assert!((d3(&m, 0, 1).value - 12.0 * kf * kf).abs() < 1e-9);
            assert!((d2(&m, 0, 1).value - 4.0 * kf).abs() < 1e-9);
        }
    }

    #[test]
    fn proportional_columns_make_d3_vanish() {
        let m = single_edge_model();
        // u = 1, v = 3: independent coordinates, column for s_uv is zero.
        assert!(d3(&m, 0, 2).value.abs() < 1e-12);
    }

    #[test]
    fn gradients_match_finite_differences() {
        let params = cycle_model(&[0.5, -0.4, 0.7], vec![1.0, 0.8, 1.2], vec![1.5, -0.7, 0.9]);
        let m = population_moments(&params).unwrap();
        let h = 1e-5;
        for stat_fn in [d2 as fn(&MomentPair, usize, usize) -> DeterminantStat, d3] {
            let stat = stat_fn(&m, 0, 2);
            for (c, g) in stat.coords.iter().zip(&stat.gradient) {
                let bump = |delta: f64| {
                    let mut mm = m.clone();
                    match *c {
                        MomentCoord::S(i, j) => {
                            mm.s[(i, j)] += delta;
                            if i != j {
                                mm.s[(j, i)] += delta;
                            }
                        }
                        MomentCoord::T(i, j, k) => mm.t.set(i, j, k, mm.t.get(i, j, k) + delta),
                    }
                    stat_fn(&mm, 0, 2).value
                };
                let fd = (bump(h) - bump(-h)) / (2.0 * h);
                assert!((fd - g).abs() <= 1e-5 * g.abs().max(1.0), "{c:?}: fd {fd} vs {g}");
            }
        }
    }

    #[test]
    fn regression_examples() {
        let m = single_edge_model();
        let r = regress(&m, &[1], &[0]).unwrap();
        assert!((r.matrix[(0, 0)] - 3.0).abs() < 1e-12);

        let g = DirectedGraph::empty(3).unwrap();
        let params = SemParameters::new(g, DMatrix::zeros(3, 3), vec![1.0; 3], vec![1.0; 3]).unwrap();
        let m0 = population_moments(&params).unwrap();
        assert_eq!(regress(&m0, &[1, 2], &[0]).unwrap().matrix.amax(), 0.0);

        let singular = MomentPair { s: DMatrix::from_element(2, 2, 1.0), t: SymTensor3::zeros(2) };
        assert!(matches!(regress(&singular, &[1], &[0, 1]), Err(Error::IllConditioned { .. })));
    }

    #[test]
    fn residual_moments_recover_noise() {
        let m = single_edge_model();
        let (res, rest) = residualize_moments(&m, &[0]).unwrap();
        assert_eq!(rest, vec![1, 2]);
        assert!((res.s[(0, 0)] - 2.0).abs() < 1e-12);
        assert!((res.t.get(0, 0, 0) - 2.0).abs() < 1e-12);
        let (same, _) = residualize_moments(&m, &[]).unwrap();
        assert_eq!(same, m);
    }

    #[test]
    fn skeleton_of_four_cycle() {
        let params = cycle_model(&[0.6, -0.7, 0.55, 0.65], vec![1.0, 0.9, 0.85, 0.95], vec![1.0, 0.5, 0.8, 1.1]);
        let m = population_moments(&params).unwrap();
        assert_eq!(cycle_skeleton(&m.s, 1e-9).unwrap(), vec![(0, 2), (1, 3)]);
        assert_eq!(cycle_skeleton_by_minors(&m.s, 1e-9), vec![(0, 2), (1, 3)]);

        let tri = population_moments(&cycle_model(&[0.5, 0.4, 0.3], vec![1.0; 3], vec![1.0; 3])).unwrap();
        assert!(cycle_skeleton(&tri.s, 1e-9).unwrap().is_empty());

        let diag = DMatrix::from_diagonal(&DVector::from_vec(vec![1.0, 2.0, 3.0]));
        assert_eq!(cycle_skeleton(&diag, 1e-9).unwrap().len(), 3);
    }

    #[test]
    fn triple_formula_on_three_cycle() {
        let m = population_moments(&cycle_model(&[0.5, 0.4, 0.3], vec![1.0; 3], vec![1.0; 3])).unwrap();
        assert!((lambda_from_triple(&m, 0, 1, 2, 1e-12).unwrap() - 0.5).abs() < 1e-9);
        assert!((lambda_from_triple(&m, 1, 2, 0, 1e-12).unwrap() - 0.4).abs() < 1e-9);
        assert!((lambda_from_triple(&m, 2, 0, 1, 1e-12).unwrap() - 0.3).abs() < 1e-9);
    }

    #[test]
    fn two_cycle_roots() {
        let params = SemParameters::from_weighted_edges(
            2,
            &[(0, 1, 0.5), (1, 0, 0.4)],
            vec![1.0, 0.7],
            vec![1.3, -0.6],
        )
        .unwrap();
        let m = population_moments(&params).unwrap();
        let (r1, r2) = lambda_two_cycle(&m, 0, 1, 1e-12).unwrap();
        assert!((r1 - 0.5).abs() < 1e-9, "{r1}");
        assert!((r2 - 2.5).abs() < 1e-9, "{r2}");
    }

    #[test]
    fn degenerate_triple_is_reported() {
        let m = MomentPair { s: DMatrix::identity(3, 3), t: SymTensor3::zeros(3) };
        assert!(matches!(lambda_from_triple(&m, 0, 1, 2, 1e-12), Err(Error::DegenerateDenominator { .. })));
        assert!(matches!(lambda_two_cycle(&m, 0, 1, 1e-12), Err(Error::DegenerateDenominator { .. })));
    }

    #[test]
    fn inter_cycle_weights_trivial_cases() {
        let r = RegressionCoefficients {
            targets: vec![3],
            regressors: vec![0, 1],
            matrix: DMatrix::from_row_slice(1, 2, &[0.2, -0.3]),
        };
        let w = inter_cycle_weights(&r, &DMatrix::zeros(1, 1));
        assert_eq!(w, r.matrix.transpose());
        let zero = RegressionCoefficients { matrix: DMatrix::zeros(1, 2), ..r };
        assert_eq!(inter_cycle_weights(&zero, &DMatrix::zeros(1, 1)).amax(), 0.0);
    }

    #[test]
    fn rank_matrices_for_weighted_root_cycle() {
        // Root cycle of length k + 1 with lambda_uv = 2, other weights 1, unit noise.
        for k in 2..6usize {
            let len = k + 1;
            let mut w = vec![1.0; len];
            w[0] = 2.0;
            let m = population_moments(&cycle_model(&w, vec![1.0; len], vec![1.0; len])).unwrap();
            let (a2, a3) = rank_matrices(&m, 0, 1, 2, 2.0);
            let kf = k as f64;
            // The displayed matrix is scaled by the common factor (I - Lambda) normalisation,
            // so compare up to a per-row scale on rows 2..4.
            let expected = DMatrix::from_row_slice(
                4,
                3,
                &[
                    1.0,
                    2.0,
                    4.0,
                    kf,
                    2.0 * kf - 1.0,
                    4.0 * kf - 3.0,
                    -kf,
                    -2.0 * kf + 1.0,
                    -4.0 * kf + 3.0,
                    -2.0 * kf + 1.0,
                    -4.0 * kf + 3.0,
                    -8.0 * kf + 7.0,
                ],
            );
            let sv2 = singular_values(&a2);
            let sv3 = singular_values(&a3);
            assert!(sv2[2] < 1e-8 * sv2[0], "{sv2:?}");
            assert!(sv2[1] > 1e-6 * sv2[0]);
            assert!(sv3[3] < 1e-8 * sv3[0], "{sv3:?}");
            assert!(sv3[2] > 1e-6 * sv3[0]);
            let sve = singular_values(&expected);
            assert!(sve[2] < 1e-9 && sve[1] > 1e-3);
        }
    }
}

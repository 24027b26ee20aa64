//! Fully symmetric order-3 tensors stored by their distinct entries.

use nalgebra::DMatrix;

/// A `p x p x p` tensor invariant under index permutations.
///
/// Only the `p(p+1)(p+2)/6` entries with sorted indices are stored.
#[derive(Debug, Clone, PartialEq)]
pub struct SymTensor3 {
    p: usize,
    data: Vec<f64>,
}

/// Position of the sorted triple `i <= j <= k`.
#[inline]
fn offset(i: usize, j: usize, k: usize) -> usize {
    k * (k + 1) * (k + 2) / 6 + j * (j + 1) / 2 + i
}

#[inline]
fn sort3(a: usize, b: usize, c: usize) -> (usize, usize, usize) {
    let (a, b) = if a <= b { (a, b) } else { (b, a) };
    let (b, c) = if b <= c { (b, c) } else { (c, b) };
    let (a, b) = if a <= b { (a, b) } else { (b, a) };
    (a, b, c)
}

pub fn distinct_len(p: usize) -> usize {
    p * (p + 1) * (p + 2) / 6
}

impl SymTensor3 {
    pub fn zeros(p: usize) -> Self {
        Self { p, data: vec![0.0; distinct_len(p)] }
    }

    /// Fills every distinct entry from `f(i, j, k)` called with `i <= j <= k`.
    pub fn from_fn(p: usize, mut f: impl FnMut(usize, usize, usize) -> f64) -> Self {
        let mut t = Self::zeros(p);
        for (i, j, k) in sorted_triples(p) {
            t.data[offset(i, j, k)] = f(i, j, k);
        }
        t
    }

    pub fn p(&self) -> usize {
        self.p
    }

    #[inline]
    pub fn get(&self, i: usize, j: usize, k: usize) -> f64 {
        let (a, b, c) = sort3(i, j, k);
        self.data[offset(a, b, c)]
    }

    #[inline]
    pub fn set(&mut self, i: usize, j: usize, k: usize, value: f64) {
        let (a, b, c) = sort3(i, j, k);
        self.data[offset(a, b, c)] = value;
    }

    /// Distinct entries in storage order, paired with their sorted indices.
    pub fn entries(&self) -> impl Iterator<Item = ((usize, usize, usize), f64)> + '_ {
        sorted_triples(self.p).map(move |(i, j, k)| ((i, j, k), self.data[offset(i, j, k)]))
    }

    /// Restriction to the listed indices, in that order.
    pub fn select(&self, idx: &[usize]) -> SymTensor3 {
        let mut out = SymTensor3::zeros(idx.len());
        for (a, b, c) in sorted_triples(idx.len()) {
            out.data[offset(a, b, c)] = self.get(idx[a], idx[b], idx[c]);
        }
        out
    }

    /// Multilinear transform `T x1 B x2 B x3 B`: entry `(a, b, c)` is
    /// `sum_ijk B[a,i] B[b,j] B[c,k] T[i,j,k]`.
    pub fn transform(&self, b: &DMatrix<f64>) -> SymTensor3 {
        assert_eq!(b.ncols(), self.p);
        let (q, p) = (b.nrows(), self.p);
        // First contraction into a dense q x p x p buffer, then fold the rest.
        let mut stage1 = vec![0.0; q * p * p];
        for a in 0..q {
            for j in 0..p {
                for k in j..p {
                    let mut acc = 0.0;
                    for i in 0..p {
                        acc += b[(a, i)] * self.get(i, j, k);
                    }
                    stage1[(a * p + j) * p + k] = acc;
                    stage1[(a * p + k) * p + j] = acc;
                }
            }
        }
        let mut stage2 = vec![0.0; q * q * p];
        for a in 0..q {
            for bb in 0..q {
                for k in 0..p {
                    let mut acc = 0.0;
                    for j in 0..p {
                        acc += b[(bb, j)] * stage1[(a * p + j) * p + k];
                    }
                    stage2[(a * q + bb) * p + k] = acc;
                }
            }
        }
        SymTensor3::from_fn(q, |a, bb, c| {
            let mut acc = 0.0;
            for k in 0..p {
                acc += b[(c, k)] * stage2[(a * q + bb) * p + k];
            }
            acc
        })
    }

    pub fn max_abs_diff(&self, other: &SymTensor3) -> f64 {
        assert_eq!(self.p, other.p);
        self.data
            .iter()
            .zip(&other.data)
            .map(|(a, b)| (a - b).abs())
            .fold(0.0, f64::max)
    }

    /// Slice `T[i, ., .]` as a dense matrix.
    pub fn slice(&self, i: usize) -> DMatrix<f64> {
        DMatrix::from_fn(self.p, self.p, |j, k| self.get(i, j, k))
    }
}

/// All `(i, j, k)` with `i <= j <= k < p`, in storage order.
pub fn sorted_triples(p: usize) -> impl Iterator<Item = (usize, usize, usize)> {
    (0..p).flat_map(|k| (0..=k).flat_map(move |j| (0..=j).map(move |i| (i, j, k))))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn storage_order_matches_offsets() {
        for (n, (i, j, k)) in sorted_triples(6).enumerate() {
            assert_eq!(offset(i, j, k), n);
        }
        assert_eq!(sorted_triples(6).count(), distinct_len(6));
    }

    #[test]
    fn permuted_access_is_symmetric() {
        let t = SymTensor3::from_fn(4, |i, j, k| (100 * i + 10 * j + k) as f64);
        assert_eq!(t.get(3, 1, 2), t.get(1, 2, 3));
        assert_eq!(t.get(2, 3, 1), 123.0);
    }

    #[test]
    fn transform_matches_dense_contraction() {
        let t = SymTensor3::from_fn(3, |i, j, k| 1.0 + (i * j + k) as f64 * 0.5 + (i + j + k) as f64);
        let b = DMatrix::from_row_slice(2, 3, &[1.0, -2.0, 0.5, 0.3, 0.0, 1.5]);
        let out = t.transform(&b);
        for a in 0..2 {
            for c in 0..2 {
                for d in 0..2 {
                    let mut acc = 0.0;
                    for i in 0..3 {
                        for j in 0..3 {
                            for k in 0..3 {
                                acc += b[(a, i)] * b[(c, j)] * b[(d, k)] * t.get(i, j, k);
                            }
                        }
                    }
                    assert!((out.get(a, c, d) - acc).abs() < 1e-12);
                }
            }
        }
    }
}

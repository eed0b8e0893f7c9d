//! Small numerical building blocks: compensated summation, Gauss–Legendre
//! rules, subset enumeration and dense linear algebra on tiny matrices.
//!
//! Every reduction in the crate goes through [`KahanSum`] /
//! [`ComplexKahan`] in a fixed index order, which keeps results
//! bit-identical regardless of how work is scheduled across threads.

use nalgebra::DMatrix;
use num_complex::Complex64;
use std::num::NonZeroUsize;

/// Neumaier-compensated accumulator for `f64`.
#[derive(Debug, Clone, Copy, Default)]
pub struct KahanSum {
    sum: f64,
    compensation: f64,
}

impl KahanSum {
    pub fn new() -> Self {
        Self::default()
    }

    /// Adds one term.
    #[inline]
    pub fn add(&mut self, value: f64) {
        let t = self.sum + value;
        if self.sum.abs() >= value.abs() {
            self.compensation += (self.sum - t) + value;
        } else {
            self.compensation += (value - t) + self.sum;
        }
        self.sum = t;
    }

    /// Current compensated total.
    #[inline]
    pub fn value(&self) -> f64 {
        self.sum + self.compensation
    }

    /// Sums an iterator in order.
    pub fn sum_iter<I: IntoIterator<Item = f64>>(iter: I) -> f64 {
        let mut k = Self::new();
        for v in iter {
            k.add(v);
        }
        k.value()
    }
}

/// Compensated accumulator for complex values (independent re/im parts).
#[derive(Debug, Clone, Copy, Default)]
pub struct ComplexKahan {
    re: KahanSum,
    im: KahanSum,
}

impl ComplexKahan {
    pub fn new() -> Self {
        Self::default()
    }

    #[inline]
    pub fn add(&mut self, z: Complex64) {
        self.re.add(z.re);
        self.im.add(z.im);
    }

    #[inline]
    pub fn value(&self) -> Complex64 {
        Complex64::new(self.re.value(), self.im.value())
    }
}

/// Gauss–Legendre nodes and weights on `[a, b]`, nodes ascending.
pub fn gauss_legendre(count: usize, a: f64, b: f64) -> (Vec<f64>, Vec<f64>) {
    let count = NonZeroUsize::new(count.max(1)).expect("count is at least one");
    let rule = gauss_quad::GaussLegendre::new(count);
    let mut pairs: Vec<(f64, f64)> = rule.into_node_weight_pairs().to_vec();
    pairs.sort_by(|p, q| p.0.total_cmp(&q.0));
    let mid = 0.5 * (a + b);
    let half = 0.5 * (b - a);
    let nodes = pairs.iter().map(|&(x, _)| mid + half * x).collect();
    let weights = pairs.iter().map(|&(_, w)| half * w).collect();
    (nodes, weights)
}

/// Composite Gauss–Legendre rule: `panels` equal panels with `order` nodes each.
pub fn composite_gauss_legendre(
    panels: usize,
    order: usize,
    a: f64,
    b: f64,
) -> (Vec<f64>, Vec<f64>) {
    let width = (b - a) / panels as f64;
    let (x, w) = gauss_legendre(order, -1.0, 1.0);
    let mut nodes = Vec::with_capacity(panels * order);
    let mut weights = Vec::with_capacity(panels * order);
    for p in 0..panels {
        let lo = a + p as f64 * width;
        for (xi, wi) in x.iter().zip(&w) {
            nodes.push(lo + 0.5 * width * (xi + 1.0));
            weights.push(0.5 * width * wi);
        }
    }
    (nodes, weights)
}

/// All `k`-subsets of `0..m` in lexicographic order.
pub fn subsets(m: usize, k: usize) -> Vec<Vec<usize>> {
    let mut out = Vec::new();
    if k > m {
        return out;
    }
    let mut idx: Vec<usize> = (0..k).collect();
    loop {
        out.push(idx.clone());
        let mut i = k;
        loop {
            if i == 0 {
                return out;
            }
            i -= 1;
            if idx[i] != i + m - k {
                break;
            }
            if i == 0 {
                return out;
            }
        }
        idx[i] += 1;
        for j in i + 1..k {
            idx[j] = idx[j - 1] + 1;
        }
    }
}

/// Builds a square matrix whose columns are the given vectors.
pub fn columns_matrix(cols: &[&[f64]]) -> DMatrix<f64> {
    let n = cols.first().map_or(0, |c| c.len());
    DMatrix::from_fn(n, cols.len(), |i, j| cols[j][i])
}

/// Determinant of the square matrix with the given columns.
pub fn det_columns(cols: &[&[f64]]) -> f64 {
    columns_matrix(cols).determinant()
}

/// Solves `Σ_j x_j cols[j] = rhs`; `None` if singular.
pub fn solve_columns(cols: &[&[f64]], rhs: &[f64]) -> Option<Vec<f64>> {
    let a = columns_matrix(cols);
    let b = nalgebra::DVector::from_column_slice(rhs);
    a.lu().solve(&b).map(|x| x.iter().copied().collect())
}

/// Generalized cross product: a vector orthogonal to the `n-1` given
/// vectors in ℝⁿ (cofactor expansion). Zero if they are dependent.
pub fn cross_product(vectors: &[&[f64]], n: usize) -> Vec<f64> {
    debug_assert_eq!(vectors.len() + 1, n);
    if n == 1 {
        return vec![1.0];
    }
    (0..n)
        .map(|col| {
            let minor = DMatrix::from_fn(n - 1, n - 1, |i, j| {
                let c = if j < col { j } else { j + 1 };
                vectors[i][c]
            });
            let sign = if col % 2 == 0 { 1.0 } else { -1.0 };
            sign * minor.determinant()
        })
        .collect()
}

/// Numerical rank of a set of vectors (row stack) via SVD.
pub fn rank(vectors: &[&[f64]], tol: f64) -> usize {
    if vectors.is_empty() {
        return 0;
    }
    let n = vectors[0].len();
    let a = DMatrix::from_fn(vectors.len(), n, |i, j| vectors[i][j]);
    a.svd(false, false)
        .singular_values
        .iter()
        .filter(|&&s| s > tol)
        .count()
}

#[inline]
pub fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

#[inline]
pub fn norm(a: &[f64]) -> f64 {
    dot(a, a).sqrt()
}

/// `count` geometrically spaced values from `a` to `b` inclusive.
pub fn geometric_grid(a: f64, b: f64, count: usize) -> Vec<f64> {
    if count == 1 {
        return vec![a];
    }
    let q = (b / a).ln() / (count - 1) as f64;
    (0..count).map(|k| a * (q * k as f64).exp()).collect()
}

/// Ordinary least-squares line fit; returns `(slope, intercept)`.
pub fn linear_fit(xs: &[f64], ys: &[f64]) -> (f64, f64) {
    let n = xs.len() as f64;
    let mx = KahanSum::sum_iter(xs.iter().copied()) / n;
    let my = KahanSum::sum_iter(ys.iter().copied()) / n;
    let sxy = KahanSum::sum_iter(xs.iter().zip(ys).map(|(x, y)| (x - mx) * (y - my)));
    let sxx = KahanSum::sum_iter(xs.iter().map(|x| (x - mx) * (x - mx)));
    let slope = sxy / sxx;
    (slope, my - slope * mx)
}

//! Minimal dense linear algebra for small matrices.
//!
//! Everything here is sized for the crate's needs: `K×K` normal systems
//! (K is an alphabet size, usually below ten) and `K^N×K^N` transition
//! matrices at desk scale. The algorithms favor determinism and exact
//! termination over asymptotic speed: Jacobi sweeps for symmetric
//! eigendecompositions, an active-set method for nonnegative least
//! squares, and fixed pairwise-tree reductions so that parallel and
//! sequential accumulation produce bit-identical sums.

use alloc::vec;
use alloc::vec::Vec;
#[allow(unused_imports)]
use num_traits::Float;

/// Dense row-major matrix of `f64`.
#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct Mat {
    rows: usize,
    cols: usize,
    data: Vec<f64>,
}

impl Mat {
    /// An `rows × cols` matrix of zeros.
    pub fn zeros(rows: usize, cols: usize) -> Self {
        Mat { rows, cols, data: vec![0.0; rows * cols] }
    }

    /// The `n × n` identity.
    pub fn identity(n: usize) -> Self {
        let mut m = Mat::zeros(n, n);
        for i in 0..n {
            m.set(i, i, 1.0);
        }
        m
    }

    /// Builds from nested rows; all rows must have equal length.
    pub fn from_rows(rows: &[Vec<f64>]) -> Self {
        let r = rows.len();
        let c = rows.first().map_or(0, Vec::len);
        debug_assert!(rows.iter().all(|row| row.len() == c));
        let mut data = Vec::with_capacity(r * c);
        for row in rows {
            data.extend_from_slice(row);
        }
        Mat { rows: r, cols: c, data }
    }

    /// Builds from a flat row-major buffer.
    pub fn from_flat(rows: usize, cols: usize, data: Vec<f64>) -> Self {
        assert_eq!(data.len(), rows * cols, "flat buffer has wrong length");
        Mat { rows, cols, data }
    }

    /// Number of rows.
    #[inline]
    pub fn rows(&self) -> usize {
        self.rows
    }

    /// Number of columns.
    #[inline]
    pub fn cols(&self) -> usize {
        self.cols
    }

    /// Entry at `(i, j)`.
    #[inline]
    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.data[i * self.cols + j]
    }

    /// Sets entry at `(i, j)`.
    #[inline]
    pub fn set(&mut self, i: usize, j: usize, v: f64) {
        self.data[i * self.cols + j] = v;
    }

    /// Adds `v` to entry `(i, j)`.
    #[inline]
    pub fn add_to(&mut self, i: usize, j: usize, v: f64) {
        self.data[i * self.cols + j] += v;
    }

    /// Row `i` as a slice.
    #[inline]
    pub fn row(&self, i: usize) -> &[f64] {
        &self.data[i * self.cols..(i + 1) * self.cols]
    }

    /// Row `i` as a mutable slice.
    #[inline]
    pub fn row_mut(&mut self, i: usize) -> &mut [f64] {
        &mut self.data[i * self.cols..(i + 1) * self.cols]
    }

    /// Column `j` copied into a new vector.
    pub fn col(&self, j: usize) -> Vec<f64> {
        (0..self.rows).map(|i| self.get(i, j)).collect()
    }

    /// The flat row-major buffer.
    #[inline]
    pub fn as_slice(&self) -> &[f64] {
        &self.data
    }

    /// `self + other`, entrywise.
    pub fn add(&self, other: &Mat) -> Mat {
        assert_eq!((self.rows, self.cols), (other.rows, other.cols));
        let data = self.data.iter().zip(&other.data).map(|(a, b)| a + b).collect();
        Mat { rows: self.rows, cols: self.cols, data }
    }

    /// Scales every entry by `s`.
    pub fn scale(&mut self, s: f64) {
        for v in &mut self.data {
            *v *= s;
        }
    }

    /// Matrix product `self · other`.
    pub fn matmul(&self, other: &Mat) -> Mat {
        assert_eq!(self.cols, other.rows, "inner dimensions must agree");
        let mut out = Mat::zeros(self.rows, other.cols);
        for i in 0..self.rows {
            let out_row = &mut out.data[i * other.cols..(i + 1) * other.cols];
            for k in 0..self.cols {
                let a = self.get(i, k);
                if a == 0.0 {
                    continue;
                }
                let other_row = other.row(k);
                for (o, &b) in out_row.iter_mut().zip(other_row) {
                    *o += a * b;
                }
            }
        }
        out
    }

    /// Row vector times matrix: `v · self`.
    pub fn vec_mul(&self, v: &[f64]) -> Vec<f64> {
        assert_eq!(v.len(), self.rows);
        let mut out = vec![0.0; self.cols];
        for (i, &vi) in v.iter().enumerate() {
            if vi == 0.0 {
                continue;
            }
            for (o, &m) in out.iter_mut().zip(self.row(i)) {
                *o += vi * m;
            }
        }
        out
    }

    /// Matrix times column vector: `self · v`.
    pub fn mul_vec(&self, v: &[f64]) -> Vec<f64> {
        assert_eq!(v.len(), self.cols);
        (0..self.rows).map(|i| dot(self.row(i), v)).collect()
    }

    /// Frobenius norm (`‖·‖₂` on entries).
    pub fn frobenius(&self) -> f64 {
        self.data.iter().map(|v| v * v).sum::<f64>().sqrt()
    }

    /// Entrywise `ℓ₁` norm (sum of absolute entries).
    pub fn entrywise_l1(&self) -> f64 {
        self.data.iter().map(|v| v.abs()).sum()
    }

    /// The `1`-operator norm on row vectors, `sup_{‖v‖₁≤1} ‖vA‖₁`,
    /// which equals the maximum absolute row sum.
    pub fn op_norm_11(&self) -> f64 {
        (0..self.rows)
            .map(|i| self.row(i).iter().map(|v| v.abs()).sum())
            .fold(0.0, f64::max)
    }

    /// Entrywise difference `self − other`.
    pub fn sub(&self, other: &Mat) -> Mat {
        assert_eq!((self.rows, self.cols), (other.rows, other.cols));
        let data = self.data.iter().zip(&other.data).map(|(a, b)| a - b).collect();
        Mat { rows: self.rows, cols: self.cols, data }
    }

    /// Maximum absolute entry.
    pub fn max_abs(&self) -> f64 {
        self.data.iter().map(|v| v.abs()).fold(0.0, f64::max)
    }
}

/// Dot product.
#[inline]
pub fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

/// `‖a − b‖₁` for equal-length slices.
pub fn l1_distance(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y).abs()).sum()
}

/// Symmetric eigendecomposition by cyclic Jacobi sweeps.
///
/// Returns `(values, vectors)` with eigenvalues ascending and the matching
/// eigenvectors as *columns* of the returned matrix. Intended for the small
/// symmetric matrices of this crate (normal systems, Hessians); accuracy is
/// near machine precision and the sweep order is fixed, so results are
/// deterministic.
pub fn sym_eigen(a: &Mat) -> (Vec<f64>, Mat) {
    assert_eq!(a.rows, a.cols, "eigendecomposition needs a square matrix");
    let n = a.rows;
    let mut m = a.clone();
    let mut v = Mat::identity(n);

    // Classical cyclic Jacobi: zero each off-diagonal pair in turn until
    // the off-diagonal mass is negligible relative to the diagonal scale.
    let scale = m.data.iter().map(|x| x.abs()).fold(f64::MIN_POSITIVE, f64::max);
    let tol = f64::EPSILON * scale;
    for _sweep in 0..64 {
        let mut off = 0.0f64;
        for p in 0..n {
            for q in (p + 1)..n {
                off = off.max(m.get(p, q).abs());
            }
        }
        if off <= tol {
            break;
        }
        for p in 0..n {
            for q in (p + 1)..n {
                let apq = m.get(p, q);
                if apq.abs() <= tol * 1e-3 {
                    continue;
                }
                let app = m.get(p, p);
                let aqq = m.get(q, q);
                let theta = (aqq - app) / (2.0 * apq);
                // Stable tangent of the rotation angle.
                let t = if theta >= 0.0 {
                    1.0 / (theta + (1.0 + theta * theta).sqrt())
                } else {
                    1.0 / (theta - (1.0 + theta * theta).sqrt())
                };
                let c = 1.0 / (1.0 + t * t).sqrt();
                let s = t * c;

                for i in 0..n {
                    let mip = m.get(i, p);
                    let miq = m.get(i, q);
                    m.set(i, p, c * mip - s * miq);
                    m.set(i, q, s * mip + c * miq);
                }
                for j in 0..n {
                    let mpj = m.get(p, j);
                    let mqj = m.get(q, j);
                    m.set(p, j, c * mpj - s * mqj);
                    m.set(q, j, s * mpj + c * mqj);
                }
                for i in 0..n {
                    let vip = v.get(i, p);
                    let viq = v.get(i, q);
                    v.set(i, p, c * vip - s * viq);
                    v.set(i, q, s * vip + c * viq);
                }
            }
        }
    }

    let mut order: Vec<usize> = (0..n).collect();
    let diag: Vec<f64> = (0..n).map(|i| m.get(i, i)).collect();
    order.sort_by(|&i, &j| diag[i].partial_cmp(&diag[j]).expect("eigenvalue is NaN"));

    let values: Vec<f64> = order.iter().map(|&i| diag[i]).collect();
    let mut vectors = Mat::zeros(n, n);
    for (new_j, &old_j) in order.iter().enumerate() {
        for i in 0..n {
            vectors.set(i, new_j, v.get(i, old_j));
        }
    }
    (values, vectors)
}

/// Solves `A x = b` for symmetric positive-semidefinite `A` through the
/// eigendecomposition, inverting only eigenvalues above
/// `rel_tol · λ_max` (Moore–Penrose pseudo-inverse on the rest).
pub fn sym_pinv_solve(a: &Mat, b: &[f64], rel_tol: f64) -> Vec<f64> {
    let (values, vectors) = sym_eigen(a);
    let n = a.rows();
    let lambda_max = values.iter().fold(0.0f64, |acc, &v| acc.max(v.abs()));
    let cut = rel_tol * lambda_max.max(f64::MIN_POSITIVE);
    let mut x = vec![0.0; n];
    for (j, &lam) in values.iter().enumerate() {
        if lam.abs() <= cut {
            continue;
        }
        let col: Vec<f64> = (0..n).map(|i| vectors.get(i, j)).collect();
        let coeff = dot(&col, b) / lam;
        for i in 0..n {
            x[i] += coeff * col[i];
        }
    }
    x
}

/// Moore–Penrose pseudo-inverse of a symmetric PSD matrix.
pub fn sym_pinv(a: &Mat, rel_tol: f64) -> Mat {
    let (values, vectors) = sym_eigen(a);
    let n = a.rows();
    let lambda_max = values.iter().fold(0.0f64, |acc, &v| acc.max(v.abs()));
    let cut = rel_tol * lambda_max.max(f64::MIN_POSITIVE);
    let mut out = Mat::zeros(n, n);
    for (j, &lam) in values.iter().enumerate() {
        if lam.abs() <= cut {
            continue;
        }
        let inv = 1.0 / lam;
        for r in 0..n {
            let vr = vectors.get(r, j);
            if vr == 0.0 {
                continue;
            }
            for c in 0..n {
                out.add_to(r, c, inv * vr * vectors.get(c, j));
            }
        }
    }
    out
}

/// Result of a nonnegative least-squares solve.
#[derive(Debug, Clone)]
pub struct NnlsSolution {
    /// The minimizer `x ≥ 0`.
    pub x: Vec<f64>,
    /// Outer iterations used.
    pub iterations: usize,
    /// Whether the KKT conditions were met within tolerance (as opposed to
    /// stopping on the iteration cap).
    pub converged: bool,
}

/// Nonnegative least squares on a normal system: minimizes
/// `½ xᵀA x − bᵀx` over `x ≥ 0` for symmetric PSD `A`.
///
/// This is the Lawson–Hanson active-set method phrased directly on the
/// Gram matrix (the crate only ever has `A = ΦᵀΦ` and `b = Φᵀy`, never the
/// design matrix itself). The KKT residual tolerance `kkt_tol` decides when
/// the dual vector `w = b − Ax` has no positive coordinate left outside the
/// passive set; `max_iter` caps the outer iterations.
pub fn nnls(a: &Mat, b: &[f64], kkt_tol: f64, max_iter: usize) -> NnlsSolution {
    assert_eq!(a.rows(), a.cols());
    assert_eq!(a.rows(), b.len());
    let n = b.len();
    let mut x = vec![0.0f64; n];
    let mut passive = vec![false; n];
    let mut iterations = 0usize;

    // Scale-aware zero test for pivots inside the passive solve.
    let pinv_tol = 1e-13;

    loop {
        // Dual vector; the gradient of the objective is Ax − b.
        let ax = a.mul_vec(&x);
        let mut best = kkt_tol;
        let mut best_j = None;
        for j in 0..n {
            if passive[j] {
                continue;
            }
            let w = b[j] - ax[j];
            if w > best {
                best = w;
                best_j = Some(j);
            }
        }
        let Some(j_star) = best_j else {
            return NnlsSolution { x, iterations, converged: true };
        };
        if iterations >= max_iter {
            return NnlsSolution { x, iterations, converged: false };
        }
        iterations += 1;
        passive[j_star] = true;

        // Inner loop: solve the unconstrained problem on the passive set and
        // walk back along the segment to the old iterate until feasible.
        loop {
            let idx: Vec<usize> = (0..n).filter(|&j| passive[j]).collect();
            let p = idx.len();
            let mut ap = Mat::zeros(p, p);
            let mut bp = vec![0.0; p];
            for (r, &ir) in idx.iter().enumerate() {
                bp[r] = b[ir];
                for (c, &ic) in idx.iter().enumerate() {
                    ap.set(r, c, a.get(ir, ic));
                }
            }
            let zp = sym_pinv_solve(&ap, &bp, pinv_tol);

            if zp.iter().all(|&z| z > 0.0) {
                for (r, &ir) in idx.iter().enumerate() {
                    x[ir] = zp[r];
                }
                break;
            }

            // Step length to the first coordinate that would cross zero.
            let mut alpha = f64::INFINITY;
            for (r, &ir) in idx.iter().enumerate() {
                if zp[r] <= 0.0 {
                    let denom = x[ir] - zp[r];
                    if denom > 0.0 {
                        alpha = alpha.min(x[ir] / denom);
                    } else {
                        alpha = 0.0;
                    }
                }
            }
            debug_assert!(alpha.is_finite());
            for (r, &ir) in idx.iter().enumerate() {
                x[ir] += alpha * (zp[r] - x[ir]);
            }
            // Coordinates that landed on the boundary leave the passive set.
            let mut dropped = false;
            for &ir in &idx {
                if passive[ir] && x[ir] <= 1e-14 {
                    x[ir] = 0.0;
                    passive[ir] = false;
                    dropped = true;
                }
            }
            if !dropped {
                // Numerical guard: alpha rounded to 1; accept the solve.
                for (r, &ir) in idx.iter().enumerate() {
                    x[ir] = zp[r].max(0.0);
                }
                break;
            }
        }
    }
}

/// Square boolean matrix stored as bitset rows; used for support-pattern
/// reachability and primitivity (`min { t : Pᵗ > 0 }`).
#[derive(Debug, Clone, PartialEq)]
pub struct BitMat {
    n: usize,
    words: usize,
    rows: Vec<u64>,
}

impl BitMat {
    /// All-zeros `n × n`.
    pub fn zeros(n: usize) -> Self {
        let words = n.div_ceil(64);
        BitMat { n, words, rows: vec![0; n * words] }
    }

    /// The support pattern of a square `Mat` (strict `> 0` on stored
    /// entries; no epsilon thresholding).
    pub fn support_of(m: &Mat) -> Self {
        assert_eq!(m.rows(), m.cols());
        let mut b = BitMat::zeros(m.rows());
        for i in 0..m.rows() {
            for (j, &v) in m.row(i).iter().enumerate() {
                if v > 0.0 {
                    b.set(i, j);
                }
            }
        }
        b
    }

    /// Dimension.
    pub fn size(&self) -> usize {
        self.n
    }

    /// Sets entry `(i, j)` to one.
    #[inline]
    pub fn set(&mut self, i: usize, j: usize) {
        self.rows[i * self.words + j / 64] |= 1u64 << (j % 64);
    }

    /// Entry `(i, j)`.
    #[inline]
    pub fn get(&self, i: usize, j: usize) -> bool {
        self.rows[i * self.words + j / 64] >> (j % 64) & 1 == 1
    }

    /// Boolean matrix product.
    pub fn mul(&self, other: &BitMat) -> BitMat {
        assert_eq!(self.n, other.n);
        let mut out = BitMat::zeros(self.n);
        for i in 0..self.n {
            let out_row = i * self.words;
            for j in 0..self.n {
                if self.get(i, j) {
                    let other_row = j * self.words;
                    for w in 0..self.words {
                        out.rows[out_row + w] |= other.rows[other_row + w];
                    }
                }
            }
        }
        out
    }

    /// True when every entry is one.
    pub fn all_ones(&self) -> bool {
        if self.n == 0 {
            return true;
        }
        let full_words = self.n / 64;
        let tail_bits = self.n % 64;
        for i in 0..self.n {
            let row = &self.rows[i * self.words..(i + 1) * self.words];
            for &w in &row[..full_words] {
                if w != u64::MAX {
                    return false;
                }
            }
            if tail_bits > 0 && row[full_words] != (1u64 << tail_bits) - 1 {
                return false;
            }
        }
        true
    }
}

/// Pairwise-tree sum over a list; the reduction order is a fixed balanced
/// tree, so parallel producers that supply the same list in the same order
/// get bit-identical floating-point totals.
pub fn tree_reduce<T, F: Fn(T, T) -> T + Copy>(mut items: Vec<T>, combine: F) -> Option<T> {
    if items.is_empty() {
        return None;
    }
    while items.len() > 1 {
        let mut next = Vec::with_capacity(items.len().div_ceil(2));
        let mut it = items.into_iter();
        while let Some(a) = it.next() {
            match it.next() {
                Some(b) => next.push(combine(a, b)),
                None => next.push(a),
            }
        }
        items = next;
    }
    items.pop()
}

/// Ordinary least-squares line fit `y ≈ intercept + slope · x`.
///
/// Used to extract geometric decay rates from log-TV curves and log-log
/// error-versus-sample-size grids.
pub fn linear_fit(xs: &[f64], ys: &[f64]) -> (f64, f64) {
    assert_eq!(xs.len(), ys.len());
    assert!(xs.len() >= 2, "need at least two points to fit a line");
    let n = xs.len() as f64;
    let mx = xs.iter().sum::<f64>() / n;
    let my = ys.iter().sum::<f64>() / n;
    let mut sxx = 0.0;
    let mut sxy = 0.0;
    for (&x, &y) in xs.iter().zip(ys) {
        sxx += (x - mx) * (x - mx);
        sxy += (x - mx) * (y - my);
    }
    let slope = sxy / sxx;
    (my - slope * mx, slope)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn jacobi_recovers_known_spectrum() {
        // Symmetric with eigenvalues {1, 3}: [[2,1],[1,2]].
        let a = Mat::from_rows(&[vec![2.0, 1.0], vec![1.0, 2.0]]);
        let (vals, vecs) = sym_eigen(&a);
        assert!((vals[0] - 1.0).abs() < 1e-12);
        assert!((vals[1] - 3.0).abs() < 1e-12);
        // Columns are unit eigenvectors: A v = λ v.
        for j in 0..2 {
            let v: Vec<f64> = (0..2).map(|i| vecs.get(i, j)).collect();
            let av = a.mul_vec(&v);
            for i in 0..2 {
                assert!((av[i] - vals[j] * v[i]).abs() < 1e-12);
            }
        }
    }

    #[test]
    fn pinv_solve_matches_direct_inverse() {
        let a = Mat::from_rows(&[vec![4.0, 1.0, 0.0], vec![1.0, 3.0, 1.0], vec![0.0, 1.0, 2.0]]);
        let b = vec![1.0, -2.0, 0.5];
        let x = sym_pinv_solve(&a, &b, 1e-13);
        let ax = a.mul_vec(&x);
        for i in 0..3 {
            assert!((ax[i] - b[i]).abs() < 1e-12);
        }
    }

    #[test]
    fn nnls_clips_negative_unconstrained_solution() {
        // Unconstrained solution of ½xᵀAx − bᵀx with A = I is x = b; with a
        // negative coordinate in b the NNLS answer clips it to zero.
        let a = Mat::identity(3);
        let b = vec![0.5, -0.25, 0.75];
        let sol = nnls(&a, &b, 1e-12, 30);
        assert!(sol.converged);
        assert!((sol.x[0] - 0.5).abs() < 1e-14);
        assert_eq!(sol.x[1], 0.0);
        assert!((sol.x[2] - 0.75).abs() < 1e-14);
    }

    #[test]
    fn nnls_equals_unconstrained_when_interior() {
        let a = Mat::from_rows(&[vec![2.0, 0.5], vec![0.5, 1.0]]);
        let b = vec![1.0, 0.75];
        let sol = nnls(&a, &b, 1e-12, 20);
        let direct = sym_pinv_solve(&a, &b, 1e-13);
        assert!(sol.converged);
        for i in 0..2 {
            assert!(direct[i] > 0.0);
            assert!((sol.x[i] - direct[i]).abs() < 1e-10);
        }
    }

    #[test]
    fn bitmat_powers_detect_primitivity() {
        // Support of [[1,1],[1,0]] (Fibonacci-like): primitive, P² > 0.
        let mut b = BitMat::zeros(2);
        b.set(0, 0);
        b.set(0, 1);
        b.set(1, 0);
        assert!(!b.all_ones());
        assert!(b.mul(&b).all_ones());
    }

    #[test]
    fn tree_reduce_matches_sequential_sum_for_integers() {
        let items: Vec<u64> = (1..=100).collect();
        let total = tree_reduce(items, |a, b| a + b).unwrap();
        assert_eq!(total, 5050);
    }

    #[test]
    fn linear_fit_recovers_exact_line() {
        let xs: Vec<f64> = (0..10).map(|i| i as f64).collect();
        let ys: Vec<f64> = xs.iter().map(|x| 3.0 - 0.5 * x).collect();
        let (intercept, slope) = linear_fit(&xs, &ys);
        assert!((intercept - 3.0).abs() < 1e-12);
        assert!((slope + 0.5).abs() < 1e-12);
    }
}

//! Dense real matrices and the counted kernels every iteration is built from.
//!
//! Only `n x n` products and LU-based right divisions are counted. The flop
//! convention is the classical one: a product costs `2n^3`, a right division
//! `N * D^{-1}` costs `8/3 n^3` (`2/3 n^3` for the factorization plus `2n^3`
//! for the `n` triangular solves). Lower-order terms are dropped.

use std::fmt;
use std::ops::{Index, IndexMut};

use num_rational::Ratio;

use crate::error::{Error, Result};

/// Relative pivot threshold for [`lu_solve_right`]: a pivot below
/// `PIVOT_TOL * ||D||_F` is treated as zero.
pub const PIVOT_TOL: f64 = 1e-14;

/// Row-major dense real matrix.
#[derive(Clone, PartialEq)]
pub struct Matrix {
    rows: usize,
    cols: usize,
    data: Vec<f64>,
}

impl Matrix {
    pub fn new(rows: usize, cols: usize, data: Vec<f64>) -> Result<Self> {
        if rows == 0 || cols == 0 {
            return Err(Error::InvalidArgument(format!(
                "matrix dimensions must be positive, got {rows}x{cols}"
            )));
        }
        if data.len() != rows * cols {
            return Err(Error::InvalidArgument(format!(
                "{rows}x{cols} matrix needs {} entries, got {}",
                rows * cols,
                data.len()
            )));
        }
        Ok(Matrix { rows, cols, data })
    }

    pub fn zeros(rows: usize, cols: usize) -> Self {
        Matrix {
            rows,
            cols,
            data: vec![0.0; rows * cols],
        }
    }

    pub fn identity(n: usize) -> Self {
        Self::from_diag(&vec![1.0; n])
    }

    pub fn from_diag(diag: &[f64]) -> Self {
        let n = diag.len();
        let mut m = Self::zeros(n, n);
        for (i, &d) in diag.iter().enumerate() {
            m[(i, i)] = d;
        }
        m
    }

    pub fn from_fn(rows: usize, cols: usize, mut f: impl FnMut(usize, usize) -> f64) -> Self {
        let mut data = Vec::with_capacity(rows * cols);
        for i in 0..rows {
            for j in 0..cols {
                data.push(f(i, j));
            }
        }
        Matrix { rows, cols, data }
    }

    /// Builds a matrix from nested rows; panics on ragged input.
    pub fn from_rows<R: AsRef<[f64]>>(rows: &[R]) -> Self {
        let cols = rows.first().map_or(0, |r| r.as_ref().len());
        let mut data = Vec::with_capacity(rows.len() * cols);
        for r in rows {
            assert_eq!(r.as_ref().len(), cols, "ragged rows");
            data.extend_from_slice(r.as_ref());
        }
        Matrix {
            rows: rows.len(),
            cols,
            data,
        }
    }

    #[inline]
    pub fn rows(&self) -> usize {
        self.rows
    }

    #[inline]
    pub fn cols(&self) -> usize {
        self.cols
    }

    #[inline]
    pub fn shape(&self) -> (usize, usize) {
        (self.rows, self.cols)
    }

    #[inline]
    pub fn is_square(&self) -> bool {
        self.rows == self.cols
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.data
    }

    pub fn into_vec(self) -> Vec<f64> {
        self.data
    }

    pub fn row(&self, i: usize) -> &[f64] {
        &self.data[i * self.cols..(i + 1) * self.cols]
    }

    pub fn transpose(&self) -> Matrix {
        Matrix::from_fn(self.cols, self.rows, |i, j| self[(j, i)])
    }

    pub fn scaled(&self, s: f64) -> Matrix {
        Matrix {
            rows: self.rows,
            cols: self.cols,
            data: self.data.iter().map(|v| v * s).collect(),
        }
    }

    pub fn frob_norm(&self) -> f64 {
        frob_norm(self)
    }

    /// Largest entrywise absolute difference; shapes must agree.
    pub fn max_abs_diff(&self, other: &Matrix) -> f64 {
        assert_eq!(self.shape(), other.shape());
        self.data
            .iter()
            .zip(&other.data)
            .map(|(a, b)| (a - b).abs())
            .fold(0.0, f64::max)
    }

    /// `||self - other||_F`; shapes must agree.
    pub fn frob_dist(&self, other: &Matrix) -> f64 {
        assert_eq!(self.shape(), other.shape());
        self.data
            .iter()
            .zip(&other.data)
            .map(|(a, b)| (a - b) * (a - b))
            .sum::<f64>()
            .sqrt()
    }

    pub fn is_symmetric(&self, tol: f64) -> bool {
        self.is_square()
            && (0..self.rows).all(|i| (0..i).all(|j| (self[(i, j)] - self[(j, i)]).abs() <= tol))
    }

    pub(crate) fn require_square(&self, op: &'static str) -> Result<usize> {
        if self.is_square() {
            Ok(self.rows)
        } else {
            Err(Error::NotSquare {
                op,
                rows: self.rows,
                cols: self.cols,
            })
        }
    }
}

impl Index<(usize, usize)> for Matrix {
    type Output = f64;

    #[inline]
    fn index(&self, (i, j): (usize, usize)) -> &f64 {
        debug_assert!(i < self.rows && j < self.cols);
        &self.data[i * self.cols + j]
    }
}

impl IndexMut<(usize, usize)> for Matrix {
    #[inline]
    fn index_mut(&mut self, (i, j): (usize, usize)) -> &mut f64 {
        debug_assert!(i < self.rows && j < self.cols);
        &mut self.data[i * self.cols + j]
    }
}

impl fmt::Debug for Matrix {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        writeln!(f, "Matrix {}x{} [", self.rows, self.cols)?;
        for i in 0..self.rows.min(8) {
            write!(f, " ")?;
            for v in self.row(i).iter().take(8) {
                write!(f, " {v:>12.5e}")?;
            }
            writeln!(f, "{}", if self.cols > 8 { " ..." } else { "" })?;
        }
        if self.rows > 8 {
            writeln!(f, "  ...")?;
        }
        write!(f, "]")
    }
}

/// Tally of counted `n x n` kernels.
///
/// Flops are kept in thirds of `n^3` so the total stays exact:
/// a product adds `6n^3/3`, a right division `8n^3/3`.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub struct OpCounter {
    matmuls: u64,
    lus: u64,
    flop_thirds: u128,
}

impl OpCounter {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn matmul_count(&self) -> u64 {
        self.matmuls
    }

    pub fn lu_count(&self) -> u64 {
        self.lus
    }

    /// Accumulated flops, exact.
    pub fn flop_estimate(&self) -> Ratio<u128> {
        Ratio::new(self.flop_thirds, 3)
    }

    pub fn flop_estimate_f64(&self) -> f64 {
        self.flop_thirds as f64 / 3.0
    }

    /// `2 * matmuls + 8/3 * lus`: the `n^3` coefficient of the work counted
    /// so far, independent of `n`.
    pub fn cubic_coeff(&self) -> Ratio<i64> {
        Ratio::from_integer(2 * self.matmuls as i64) + Ratio::new(8 * self.lus as i64, 3)
    }

    /// Counts accumulated since `earlier` (a snapshot of the same counter).
    pub fn since(&self, earlier: &OpCounter) -> OpCounter {
        OpCounter {
            matmuls: self.matmuls - earlier.matmuls,
            lus: self.lus - earlier.lus,
            flop_thirds: self.flop_thirds - earlier.flop_thirds,
        }
    }

    pub(crate) fn record_matmul(&mut self, n: usize) {
        self.matmuls += 1;
        self.flop_thirds += 6 * cube(n);
    }

    pub(crate) fn record_lu(&mut self, n: usize) {
        self.lus += 1;
        self.flop_thirds += 8 * cube(n);
    }
}

fn cube(n: usize) -> u128 {
    let n = n as u128;
    n * n * n
}

/// Dense product `a * b`. Counted only when both operands are `n x n`.
pub fn matmul(a: &Matrix, b: &Matrix, counter: &mut OpCounter) -> Result<Matrix> {
    if a.cols != b.rows {
        return Err(Error::DimensionMismatch {
            op: "matmul",
            left: a.shape(),
            right: b.shape(),
        });
    }
    let (m, k, n) = (a.rows, a.cols, b.cols);
    let mut c = Matrix::zeros(m, n);
    // SAFETY: the three buffers are live, non-overlapping, and sized
    // m*k, k*n, m*n with the row-major strides passed here.
    unsafe {
        matrixmultiply::dgemm(
            m,
            k,
            n,
            1.0,
            a.data.as_ptr(),
            k as isize,
            1,
            b.data.as_ptr(),
            n as isize,
            1,
            0.0,
            c.data.as_mut_ptr(),
            n as isize,
            1,
        );
    }
    if m == k && k == n {
        counter.record_matmul(n);
    }
    Ok(c)
}

/// LU factorization with partial pivoting, `P * D = L * U`.
///
/// `perm[i]` is the row of `D` that ended up in row `i`; `L` is unit lower
/// triangular and shares storage with `U`.
#[derive(Clone, Debug)]
pub struct Lu {
    n: usize,
    lu: Vec<f64>,
    perm: Vec<usize>,
}

impl Lu {
    pub fn factor(d: &Matrix) -> Result<Lu> {
        let n = d.require_square("lu")?;
        let tol = PIVOT_TOL * d.frob_norm();
        let mut lu = d.data.clone();
        let mut perm: Vec<usize> = (0..n).collect();
        for col in 0..n {
            let (piv_row, piv_abs) = (col..n)
                .map(|r| (r, lu[r * n + col].abs()))
                .fold((col, -1.0), |best, cur| if cur.1 > best.1 { cur } else { best });
            if piv_abs.is_nan() || piv_abs < tol || piv_abs == 0.0 {
                return Err(Error::Singular {
                    pivot: col,
                    magnitude: piv_abs,
                });
            }
            if piv_row != col {
                for j in 0..n {
                    lu.swap(col * n + j, piv_row * n + j);
                }
                perm.swap(col, piv_row);
            }
            let pivot = lu[col * n + col];
            let (upper, lower) = lu.split_at_mut((col + 1) * n);
            let pivot_row = &upper[col * n + col + 1..col * n + n];
            for r in 0..n - col - 1 {
                let row = &mut lower[r * n..(r + 1) * n];
                let l = row[col] / pivot;
                row[col] = l;
                if l != 0.0 {
                    for (x, &u) in row[col + 1..].iter_mut().zip(pivot_row) {
                        *x -= l * u;
                    }
                }
            }
        }
        Ok(Lu { n, lu, perm })
    }

    /// Solves `F * D = num` for `F`, one row of `num` at a time.
    pub fn solve_right(&self, num: &Matrix) -> Result<Matrix> {
        let n = self.n;
        if num.cols != n {
            return Err(Error::DimensionMismatch {
                op: "lu_solve_right",
                left: num.shape(),
                right: (n, n),
            });
        }
        let lu = &self.lu;
        let mut out = Matrix::zeros(num.rows, n);
        let mut y = vec![0.0; n];
        for r in 0..num.rows {
            // F P^T = G, with G L U = num.
            y.copy_from_slice(num.row(r));
            // y U = num_r
            for j in 0..n {
                let yj = y[j] / lu[j * n + j];
                y[j] = yj;
                if yj != 0.0 {
                    for (yk, &u) in y[j + 1..].iter_mut().zip(&lu[j * n + j + 1..(j + 1) * n]) {
                        *yk -= yj * u;
                    }
                }
            }
            // g L = y
            for j in (0..n).rev() {
                let gj = y[j];
                if gj != 0.0 {
                    for (gk, &l) in y[..j].iter_mut().zip(&lu[j * n..j * n + j]) {
                        *gk -= gj * l;
                    }
                }
            }
            let dst = &mut out.data[r * n..(r + 1) * n];
            for (i, &p) in self.perm.iter().enumerate() {
                dst[p] = y[i];
            }
        }
        Ok(out)
    }
}

/// Right division `numerator * denominator^{-1}` via partial-pivot LU of the
/// denominator. Counts one LU-based division.
pub fn lu_solve_right(
    numerator: &Matrix,
    denominator: &Matrix,
    counter: &mut OpCounter,
) -> Result<Matrix> {
    let n = denominator.require_square("lu_solve_right")?;
    if numerator.cols != n {
        return Err(Error::DimensionMismatch {
            op: "lu_solve_right",
            left: numerator.shape(),
            right: denominator.shape(),
        });
    }
    let f = Lu::factor(denominator)?.solve_right(numerator)?;
    counter.record_lu(n);
    Ok(f)
}

pub fn frob_norm(a: &Matrix) -> f64 {
    // Scaled accumulation keeps tiny/huge entries from under/overflowing.
    let scale = a.data.iter().fold(0.0_f64, |m, v| m.max(v.abs()));
    if scale == 0.0 || !scale.is_finite() {
        return scale;
    }
    let sum: f64 = a.data.iter().map(|v| (v / scale) * (v / scale)).sum();
    scale * sum.sqrt()
}

/// `alpha * a + beta * b + gamma * I`. Never counted.
pub fn axpy_affine(alpha: f64, a: &Matrix, beta: f64, b: &Matrix, gamma: f64) -> Result<Matrix> {
    if a.shape() != b.shape() {
        return Err(Error::DimensionMismatch {
            op: "axpy_affine",
            left: a.shape(),
            right: b.shape(),
        });
    }
    let mut out = Matrix {
        rows: a.rows,
        cols: a.cols,
        data: a
            .data
            .iter()
            .zip(&b.data)
            .map(|(x, y)| alpha * x + beta * y)
            .collect(),
    };
    if gamma != 0.0 {
        let n = a.require_square("axpy_affine")?;
        for i in 0..n {
            out[(i, i)] += gamma;
        }
    }
    Ok(out)
}

/// `sum_i coef_i * terms_i + gamma * I`, uncounted. All terms share one shape.
pub fn linear_combination(terms: &[(f64, &Matrix)], gamma: f64, n: usize) -> Result<Matrix> {
    let mut out = Matrix::zeros(n, n);
    for &(c, m) in terms {
        if m.shape() != (n, n) {
            return Err(Error::DimensionMismatch {
                op: "linear_combination",
                left: (n, n),
                right: m.shape(),
            });
        }
        for (o, v) in out.data.iter_mut().zip(&m.data) {
            *o += c * v;
        }
    }
    for i in 0..n {
        out[(i, i)] += gamma;
    }
    Ok(out)
}

/// Number of products binary powering spends on exponent `e`:
/// `floor(log2 e)` squarings plus one product per extra set bit.
pub fn power_cost(e: u64) -> u64 {
    if e <= 1 {
        0
    } else {
        (63 - e.leading_zeros() as u64) + e.count_ones() as u64 - 1
    }
}

/// `a^e` by right-to-left binary powering; `e == 0` gives the identity.
/// Spends exactly [`power_cost`]`(e)` counted products.
pub fn power(a: &Matrix, e: u64, counter: &mut OpCounter) -> Result<Matrix> {
    let n = a.require_square("power")?;
    if e == 0 {
        return Ok(Matrix::identity(n));
    }
    let mut base = a.clone();
    let mut acc: Option<Matrix> = None;
    let mut rest = e;
    loop {
        if rest & 1 == 1 {
            acc = Some(match acc {
                None => base.clone(),
                Some(m) => matmul(&m, &base, counter)?,
            });
        }
        rest >>= 1;
        if rest == 0 {
            break;
        }
        base = matmul(&base, &base, counter)?;
    }
    Ok(acc.expect("e > 0 sets at least one bit"))
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn random(n: usize, seed: u64) -> Matrix {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        Matrix::from_fn(n, n, |_, _| rng.gen_range(-1.0..1.0))
    }

    fn triple_loop(a: &Matrix, b: &Matrix) -> Matrix {
        Matrix::from_fn(a.rows(), b.cols(), |i, j| {
            (0..a.cols()).map(|k| a[(i, k)] * b[(k, j)]).sum()
        })
    }

    #[test]
    fn matmul_identity_and_diagonal() {
        let mut c = OpCounter::new();
        let m = random(3, 1);
        assert_eq!(matmul(&Matrix::identity(3), &m, &mut c).unwrap(), m);
        let d = matmul(
            &Matrix::from_diag(&[2.0, 3.0]),
            &Matrix::from_diag(&[5.0, 7.0]),
            &mut c,
        )
        .unwrap();
        assert_eq!(d, Matrix::from_diag(&[10.0, 21.0]));
        assert_eq!(c.matmul_count(), 2);
    }

    #[test]
    fn matmul_matches_triple_loop() {
        let (a, b) = (random(4, 2), random(4, 3));
        let c = matmul(&a, &b, &mut OpCounter::new()).unwrap();
        assert!(c.max_abs_diff(&triple_loop(&a, &b)) < 1e-13);
    }

    #[test]
    fn matmul_rejects_mismatch_and_skips_counting_rectangular() {
        let mut c = OpCounter::new();
        let err = matmul(&Matrix::zeros(2, 3), &Matrix::zeros(2, 3), &mut c).unwrap_err();
        assert!(matches!(err, Error::DimensionMismatch { .. }));
        matmul(&Matrix::zeros(2, 3), &Matrix::zeros(3, 2), &mut c).unwrap();
        assert_eq!(c, OpCounter::new());
    }

    #[test]
    fn associativity_to_roundoff() {
        let mut c = OpCounter::new();
        for seed in 0..5 {
            let (a, b, m) = (random(8, seed), random(8, seed + 100), random(8, seed + 200));
            let left = matmul(&matmul(&a, &b, &mut c).unwrap(), &m, &mut c).unwrap();
            let right = matmul(&a, &matmul(&b, &m, &mut c).unwrap(), &mut c).unwrap();
            let bound = 1e-10 * a.frob_norm() * b.frob_norm() * m.frob_norm();
            assert!(left.frob_dist(&right) <= bound);
        }
    }

    #[test]
    fn right_division_examples() {
        let mut c = OpCounter::new();
        let m = random(3, 4);
        let f = lu_solve_right(&m, &Matrix::identity(3), &mut c).unwrap();
        assert!(f.max_abs_diff(&m) < 1e-15);
        let f = lu_solve_right(&Matrix::identity(2), &Matrix::from_diag(&[2.0, 4.0]), &mut c).unwrap();
        assert_eq!(f, Matrix::from_diag(&[0.5, 0.25]));
        assert_eq!(c.lu_count(), 2);
        assert_eq!(c.matmul_count(), 0);
    }

    #[test]
    fn right_division_residual() {
        let mut c = OpCounter::new();
        let a = random(5, 5);
        // Diagonally dominant, so well conditioned.
        let b = axpy_affine(1.0, &random(5, 6), 0.0, &a, 5.0).unwrap();
        let f = lu_solve_right(&a, &b, &mut c).unwrap();
        let back = matmul(&f, &b, &mut c).unwrap();
        assert!(back.frob_dist(&a) / a.frob_norm() < 1e-12);
    }

    #[test]
    fn right_division_needs_pivoting() {
        let d = Matrix::from_rows(&[[0.0, 1.0], [1.0, 0.0]]);
        let n = Matrix::from_rows(&[[1.0, 2.0], [3.0, 4.0]]);
        let f = lu_solve_right(&n, &d, &mut OpCounter::new()).unwrap();
        assert_eq!(f, Matrix::from_rows(&[[2.0, 1.0], [4.0, 3.0]]));
    }

    #[test]
    fn recovers_factor_from_product() {
        let mut c = OpCounter::new();
        for seed in 0..4 {
            let m = random(6, seed);
            let b = axpy_affine(1.0, &random(6, seed + 9), 0.0, &m, 6.0).unwrap();
            let mb = matmul(&m, &b, &mut c).unwrap();
            let back = lu_solve_right(&mb, &b, &mut c).unwrap();
            assert!(back.frob_dist(&m) / m.frob_norm() < 1e-10);
        }
    }

    #[test]
    fn singular_denominator_reports_pivot() {
        let d = Matrix::from_rows(&[[1.0, 2.0, 3.0], [2.0, 4.0, 6.0], [0.0, 0.0, 1.0]]);
        let err = lu_solve_right(&Matrix::identity(3), &d, &mut OpCounter::new()).unwrap_err();
        match err {
            Error::Singular { pivot, .. } => assert_eq!(pivot, 1),
            other => panic!("unexpected {other:?}"),
        }
        let err = lu_solve_right(&Matrix::identity(2), &Matrix::zeros(2, 2), &mut OpCounter::new());
        assert!(matches!(err, Err(Error::Singular { pivot: 0, .. })));
    }

    #[test]
    fn frobenius_examples() {
        assert_eq!(frob_norm(&Matrix::identity(4)), 2.0);
        assert_eq!(frob_norm(&Matrix::zeros(3, 3)), 0.0);
        assert_eq!(frob_norm(&Matrix::from_rows(&[[3.0, 4.0], [0.0, 0.0]])), 5.0);
    }

    #[test]
    fn affine_examples() {
        let m = random(3, 7);
        assert_eq!(axpy_affine(1.0, &m, 0.0, &m, 0.0).unwrap(), m);
        let i = Matrix::identity(3);
        assert_eq!(axpy_affine(-4.0, &i, 0.0, &i, 5.0).unwrap(), i);
        assert_eq!(axpy_affine(1.0, &m, -1.0, &m, 0.0).unwrap(), Matrix::zeros(3, 3));
        assert!(axpy_affine(1.0, &m, 1.0, &Matrix::zeros(2, 2), 0.0).is_err());
        let rect = Matrix::zeros(2, 3);
        assert!(axpy_affine(1.0, &rect, 1.0, &rect, 0.0).is_ok());
        assert!(matches!(
            axpy_affine(1.0, &rect, 1.0, &rect, 1.0),
            Err(Error::NotSquare { .. })
        ));
    }

    #[test]
    fn power_examples() {
        let mut c = OpCounter::new();
        let m = random(3, 8);
        assert_eq!(power(&m, 1, &mut c).unwrap(), m);
        assert_eq!(power(&m, 0, &mut c).unwrap(), Matrix::identity(3));
        assert_eq!(
            power(&Matrix::from_diag(&[2.0]), 10, &mut c).unwrap(),
            Matrix::from_diag(&[1024.0])
        );
        let mut slow = m.clone();
        for _ in 1..7 {
            slow = triple_loop(&slow, &m);
        }
        let fast = power(&m, 7, &mut c).unwrap();
        assert!(fast.frob_dist(&slow) / slow.frob_norm() < 1e-12);
    }

    #[test]
    fn power_spends_its_modelled_cost() {
        let m = random(2, 9);
        for e in 0..200 {
            let mut c = OpCounter::new();
            power(&m.scaled(0.5), e, &mut c).unwrap();
            assert_eq!(c.matmul_count(), power_cost(e), "e = {e}");
        }
        assert_eq!(power_cost(58), 8);
        assert_eq!(power_cost(59), 9);
    }

    #[test]
    fn counter_flops_follow_closed_form() {
        let mut c = OpCounter::new();
        let (a, b) = (random(7, 1), random(7, 2));
        for _ in 0..3 {
            matmul(&a, &b, &mut c).unwrap();
        }
        let d = axpy_affine(1.0, &a, 0.0, &a, 7.0).unwrap();
        for _ in 0..2 {
            lu_solve_right(&b, &d, &mut c).unwrap();
        }
        let n3 = 343u128;
        let expected = Ratio::from_integer(2 * n3 * 3) + Ratio::new(8 * n3 * 2, 3);
        assert_eq!(c.flop_estimate(), expected);
        assert_eq!(c.cubic_coeff(), Ratio::new(6 * 3 + 16, 3));
    }
}

//! Dense linear algebra at desk scale: a row-major [`Matrix`], the exactly
//! symmetric [`SymMatrix`], cyclic Jacobi eigendecomposition, PSD square
//! roots, Cholesky and LU solves, and full-precision CSV output.

use std::fmt::Write as _;
use std::ops::{Index, IndexMut};

use crate::error::{Error, Result};

#[derive(Debug, Clone, PartialEq)]
pub struct Matrix {
    rows: usize,
    cols: usize,
    data: Vec<f64>,
}

impl Matrix {
    pub fn zeros(rows: usize, cols: usize) -> Self {
        Self {
            rows,
            cols,
            data: vec![0.0; rows * cols],
        }
    }

    pub fn identity(n: usize) -> Self {
        let mut m = Self::zeros(n, n);
        for i in 0..n {
            m[(i, i)] = 1.0;
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
        Self { rows, cols, data }
    }

    pub fn from_rows(rows: &[Vec<f64>]) -> Self {
        let cols = rows.first().map_or(0, Vec::len);
        assert!(rows.iter().all(|r| r.len() == cols), "ragged rows");
        Self {
            rows: rows.len(),
            cols,
            data: rows.concat(),
        }
    }

    /// Build from columns given as equal-length vectors.
    pub fn from_columns(rows: usize, columns: &[Vec<f64>]) -> Self {
        Self::from_fn(rows, columns.len(), |i, j| columns[j][i])
    }

    pub fn diagonal(values: &[f64]) -> Self {
        let mut m = Self::zeros(values.len(), values.len());
        for (i, &v) in values.iter().enumerate() {
            m[(i, i)] = v;
        }
        m
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn is_square(&self) -> bool {
        self.rows == self.cols
    }

    pub fn row(&self, i: usize) -> &[f64] {
        &self.data[i * self.cols..(i + 1) * self.cols]
    }

    pub fn column(&self, j: usize) -> Vec<f64> {
        (0..self.rows).map(|i| self[(i, j)]).collect()
    }

    pub fn transpose(&self) -> Self {
        Self::from_fn(self.cols, self.rows, |i, j| self[(j, i)])
    }

    pub fn matmul(&self, other: &Matrix) -> Matrix {
        assert_eq!(self.cols, other.rows, "matmul dimension mismatch");
        let mut out = Matrix::zeros(self.rows, other.cols);
        for i in 0..self.rows {
            let out_row = &mut out.data[i * other.cols..(i + 1) * other.cols];
            for k in 0..self.cols {
                let a = self.data[i * self.cols + k];
                if a == 0.0 {
                    continue;
                }
                for (o, b) in out_row.iter_mut().zip(other.row(k)) {
                    *o += a * b;
                }
            }
        }
        out
    }

    pub fn mul_vec(&self, x: &[f64]) -> Vec<f64> {
        assert_eq!(self.cols, x.len(), "mul_vec dimension mismatch");
        (0..self.rows)
            .map(|i| self.row(i).iter().zip(x).map(|(a, b)| a * b).sum())
            .collect()
    }

    /// `selfᵀ x`.
    pub fn tr_mul_vec(&self, x: &[f64]) -> Vec<f64> {
        assert_eq!(self.rows, x.len(), "tr_mul_vec dimension mismatch");
        let mut out = vec![0.0; self.cols];
        for (i, &xi) in x.iter().enumerate() {
            for (o, a) in out.iter_mut().zip(self.row(i)) {
                *o += a * xi;
            }
        }
        out
    }

    pub fn sub(&self, other: &Matrix) -> Matrix {
        assert_eq!((self.rows, self.cols), (other.rows, other.cols));
        Matrix {
            rows: self.rows,
            cols: self.cols,
            data: self
                .data
                .iter()
                .zip(&other.data)
                .map(|(a, b)| a - b)
                .collect(),
        }
    }

    pub fn max_abs(&self) -> f64 {
        self.data.iter().fold(0.0, |m, v| m.max(v.abs()))
    }

    pub fn max_abs_diff(&self, other: &Matrix) -> f64 {
        assert_eq!((self.rows, self.cols), (other.rows, other.cols));
        self.data
            .iter()
            .zip(&other.data)
            .fold(0.0, |m, (a, b)| m.max((a - b).abs()))
    }

    pub fn frobenius(&self) -> f64 {
        self.data.iter().map(|v| v * v).sum::<f64>().sqrt()
    }

    /// Largest `|a(i,j) - a(j,i)|`.
    pub fn asymmetry(&self) -> f64 {
        assert!(self.is_square());
        let mut m: f64 = 0.0;
        for i in 0..self.rows {
            for j in i + 1..self.cols {
                m = m.max((self[(i, j)] - self[(j, i)]).abs());
            }
        }
        m
    }

    pub fn submatrix(&self, rows: std::ops::Range<usize>, cols: std::ops::Range<usize>) -> Matrix {
        Matrix::from_fn(rows.len(), cols.len(), |i, j| {
            self[(rows.start + i, cols.start + j)]
        })
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.data
    }
}

impl Index<(usize, usize)> for Matrix {
    type Output = f64;
    fn index(&self, (i, j): (usize, usize)) -> &f64 {
        debug_assert!(i < self.rows && j < self.cols);
        &self.data[i * self.cols + j]
    }
}

impl IndexMut<(usize, usize)> for Matrix {
    fn index_mut(&mut self, (i, j): (usize, usize)) -> &mut f64 {
        debug_assert!(i < self.rows && j < self.cols);
        &mut self.data[i * self.cols + j]
    }
}

/// Square matrix with `a(i, j) == a(j, i)` bit for bit.
#[derive(Debug, Clone, PartialEq)]
pub struct SymMatrix(Matrix);

impl SymMatrix {
    /// Keep the upper triangle of `m` and mirror it below the diagonal.
    pub fn from_upper(m: &Matrix) -> Self {
        assert!(m.is_square(), "SymMatrix needs a square matrix");
        let n = m.rows();
        SymMatrix(Matrix::from_fn(n, n, |i, j| {
            if i <= j {
                m[(i, j)]
            } else {
                m[(j, i)]
            }
        }))
    }

    /// Accept `m` only if it is exactly symmetric.
    pub fn try_from_matrix(m: Matrix) -> Option<Self> {
        (m.is_square() && m.asymmetry() == 0.0).then_some(SymMatrix(m))
    }

    pub fn identity(n: usize) -> Self {
        SymMatrix(Matrix::identity(n))
    }

    pub fn diagonal(values: &[f64]) -> Self {
        SymMatrix(Matrix::diagonal(values))
    }

    pub fn dim(&self) -> usize {
        self.0.rows()
    }

    pub fn as_matrix(&self) -> &Matrix {
        &self.0
    }

    pub fn into_matrix(self) -> Matrix {
        self.0
    }
}

impl Index<(usize, usize)> for SymMatrix {
    type Output = f64;
    fn index(&self, idx: (usize, usize)) -> &f64 {
        &self.0[idx]
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct EigenDecomposition {
    /// Ascending.
    pub eigenvalues: Vec<f64>,
    /// Column `k` is the unit eigenvector for `eigenvalues[k]`.
    pub eigenvectors: Matrix,
}

impl EigenDecomposition {
    /// `V diag(f(λ)) Vᵀ`, assembled on the upper triangle and mirrored.
    pub fn spectral_map(&self, f: impl Fn(f64) -> f64) -> SymMatrix {
        let n = self.eigenvalues.len();
        let mapped: Vec<f64> = self.eigenvalues.iter().map(|&l| f(l)).collect();
        let v = &self.eigenvectors;
        let mut out = Matrix::zeros(n, n);
        for i in 0..n {
            for j in i..n {
                out[(i, j)] = (0..n).map(|k| v[(i, k)] * mapped[k] * v[(j, k)]).sum();
            }
        }
        SymMatrix::from_upper(&out)
    }
}

pub const DEFAULT_JACOBI_TOL: f64 = 1e-12;
pub const DEFAULT_MAX_SWEEPS: usize = 100;

fn off_diagonal_norm(a: &Matrix) -> f64 {
    let n = a.rows();
    let mut s = 0.0;
    for i in 0..n {
        for j in 0..n {
            if i != j {
                s += a[(i, j)] * a[(i, j)];
            }
        }
    }
    s.sqrt()
}

/// Cyclic-by-row Jacobi eigendecomposition with the default tolerance and
/// sweep limit.
pub fn jacobi_eigen(a: &SymMatrix) -> Result<EigenDecomposition> {
    jacobi_eigen_with(a, DEFAULT_JACOBI_TOL, DEFAULT_MAX_SWEEPS)
}

/// Cyclic-by-row Jacobi: sweep `(p, q)` pairs in row order, annihilating each
/// off-diagonal entry with a plane rotation, until the off-diagonal Frobenius
/// norm drops below `tol * ‖A‖_F`.
pub fn jacobi_eigen_with(a: &SymMatrix, tol: f64, max_sweeps: usize) -> Result<EigenDecomposition> {
    let n = a.dim();
    let mut m = a.as_matrix().clone();
    let mut v = Matrix::identity(n);
    let scale = m.frobenius();
    let target = tol * scale;

    let mut converged = off_diagonal_norm(&m) <= target;
    let mut sweeps = 0;
    while !converged {
        if sweeps == max_sweeps {
            return Err(Error::NoConvergence { sweeps });
        }
        sweeps += 1;
        for p in 0..n {
            for q in p + 1..n {
                let apq = m[(p, q)];
                if apq == 0.0 {
                    continue;
                }
                let tau = (m[(q, q)] - m[(p, p)]) / (2.0 * apq);
                let t = if tau.abs() > 1e150 {
                    0.5 / tau
                } else {
                    tau.signum() / (tau.abs() + (1.0 + tau * tau).sqrt())
                };
                let c = 1.0 / (1.0 + t * t).sqrt();
                let s = t * c;
                for k in 0..n {
                    let kp = m[(k, p)];
                    let kq = m[(k, q)];
                    m[(k, p)] = c * kp - s * kq;
                    m[(k, q)] = s * kp + c * kq;
                }
                for k in 0..n {
                    let pk = m[(p, k)];
                    let qk = m[(q, k)];
                    m[(p, k)] = c * pk - s * qk;
                    m[(q, k)] = s * pk + c * qk;
                }
                m[(p, q)] = 0.0;
                m[(q, p)] = 0.0;
                for k in 0..n {
                    let kp = v[(k, p)];
                    let kq = v[(k, q)];
                    v[(k, p)] = c * kp - s * kq;
                    v[(k, q)] = s * kp + c * kq;
                }
            }
        }
        converged = off_diagonal_norm(&m) <= target;
    }

    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&i, &j| m[(i, i)].total_cmp(&m[(j, j)]).then(i.cmp(&j)));
    let eigenvalues = order.iter().map(|&i| m[(i, i)]).collect();
    let eigenvectors = Matrix::from_fn(n, n, |i, k| v[(i, order[k])]);
    Ok(EigenDecomposition {
        eigenvalues,
        eigenvectors,
    })
}

/// Relative threshold below which a negative eigenvalue is a genuine defect
/// rather than rounding.
pub const PSD_CLAMP: f64 = 1e-8;

/// Symmetric PSD square root: nonnegative square roots of the eigenvalues
/// on the same eigenvectors. Eigenvalues in `[-1e-8 ‖A‖, 0)` are clamped.
pub fn psd_sqrt(a: &SymMatrix) -> Result<SymMatrix> {
    let eig = jacobi_eigen(a)?;
    let floor = -PSD_CLAMP * a.as_matrix().frobenius();
    if let Some(&bad) = eig.eigenvalues.iter().find(|&&l| l < floor) {
        return Err(Error::NotPSD { eigenvalue: bad });
    }
    Ok(eig.spectral_map(|l| l.max(0.0).sqrt()))
}

/// Pivots at or below this fraction of the largest diagonal entry are
/// treated as zero.
const PIVOT_FLOOR: f64 = 1e-12;

/// Lower-triangular Cholesky factor `L` with `L Lᵀ = A`.
#[derive(Debug, Clone, PartialEq)]
pub struct Cholesky {
    l: Matrix,
}

impl Cholesky {
    pub fn factor(&self) -> &Matrix {
        &self.l
    }

    pub fn dim(&self) -> usize {
        self.l.rows()
    }

    pub fn solve(&self, b: &[f64]) -> Vec<f64> {
        let n = self.dim();
        assert_eq!(b.len(), n, "right-hand side has wrong length");
        let l = &self.l;
        let mut y = b.to_vec();
        for i in 0..n {
            let s: f64 = (0..i).map(|k| l[(i, k)] * y[k]).sum();
            y[i] = (y[i] - s) / l[(i, i)];
        }
        for i in (0..n).rev() {
            let s: f64 = (i + 1..n).map(|k| l[(k, i)] * y[k]).sum();
            y[i] = (y[i] - s) / l[(i, i)];
        }
        y
    }
}

pub fn cholesky(a: &SymMatrix) -> Result<Cholesky> {
    let n = a.dim();
    let max_diag = (0..n).fold(0.0f64, |m, i| m.max(a[(i, i)].abs()));
    let floor = PIVOT_FLOOR * max_diag;
    let mut l = Matrix::zeros(n, n);
    for j in 0..n {
        let s: f64 = (0..j).map(|k| l[(j, k)] * l[(j, k)]).sum();
        let pivot = a[(j, j)] - s;
        if pivot.is_nan() || pivot <= floor {
            return Err(Error::NotPD { row: j, pivot });
        }
        let d = pivot.sqrt();
        l[(j, j)] = d;
        for i in j + 1..n {
            let s: f64 = (0..j).map(|k| l[(i, k)] * l[(j, k)]).sum();
            l[(i, j)] = (a[(i, j)] - s) / d;
        }
    }
    Ok(Cholesky { l })
}

pub fn solve_spd(a: &SymMatrix, b: &[f64]) -> Result<Vec<f64>> {
    if b.len() != a.dim() {
        return Err(Error::DimensionMismatch {
            expected: a.dim(),
            found: b.len(),
        });
    }
    Ok(cholesky(a)?.solve(b))
}

/// LU factorization with partial pivoting, for the nonsymmetric operators
/// that only arise from tampered inputs.
#[derive(Debug, Clone)]
pub struct Lu {
    lu: Matrix,
    perm: Vec<usize>,
}

impl Lu {
    pub fn new(a: &Matrix) -> Result<Self> {
        assert!(a.is_square());
        let n = a.rows();
        let mut lu = a.clone();
        let mut perm: Vec<usize> = (0..n).collect();
        let floor = 1e-14 * a.max_abs();
        for k in 0..n {
            let p = (k..n)
                .max_by(|&i, &j| lu[(i, k)].abs().total_cmp(&lu[(j, k)].abs()))
                .expect("nonempty range");
            if lu[(p, k)].is_nan() || lu[(p, k)].abs() <= floor {
                return Err(Error::Singular(k));
            }
            if p != k {
                for j in 0..n {
                    let t = lu[(k, j)];
                    lu[(k, j)] = lu[(p, j)];
                    lu[(p, j)] = t;
                }
                perm.swap(k, p);
            }
            for i in k + 1..n {
                let f = lu[(i, k)] / lu[(k, k)];
                lu[(i, k)] = f;
                for j in k + 1..n {
                    lu[(i, j)] -= f * lu[(k, j)];
                }
            }
        }
        Ok(Self { lu, perm })
    }

    pub fn solve(&self, b: &[f64]) -> Vec<f64> {
        let n = self.lu.rows();
        let mut y: Vec<f64> = self.perm.iter().map(|&p| b[p]).collect();
        for i in 0..n {
            let s: f64 = (0..i).map(|k| self.lu[(i, k)] * y[k]).sum();
            y[i] -= s;
        }
        for i in (0..n).rev() {
            let s: f64 = (i + 1..n).map(|k| self.lu[(i, k)] * y[k]).sum();
            y[i] = (y[i] - s) / self.lu[(i, i)];
        }
        y
    }
}

/// Solver for a square system: Cholesky when the matrix is exactly
/// symmetric, LU otherwise.
#[derive(Debug, Clone)]
pub enum Solver {
    Cholesky(Cholesky),
    Lu(Lu),
}

impl Solver {
    pub fn new(a: &Matrix) -> Result<Self> {
        match SymMatrix::try_from_matrix(a.clone()) {
            Some(sym) => Ok(Solver::Cholesky(cholesky(&sym)?)),
            None => Ok(Solver::Lu(Lu::new(a)?)),
        }
    }

    pub fn solve(&self, b: &[f64]) -> Vec<f64> {
        match self {
            Solver::Cholesky(c) => c.solve(b),
            Solver::Lu(lu) => lu.solve(b),
        }
    }
}

/// Matrix as CSV: a header row of column ids, then one row per row id.
/// Entries carry 17 significant digits.
pub fn matrix_csv<R: AsRef<str>, C: AsRef<str>>(
    row_ids: &[R],
    col_ids: &[C],
    m: &Matrix,
) -> String {
    assert_eq!(row_ids.len(), m.rows());
    assert_eq!(col_ids.len(), m.cols());
    let mut out = String::new();
    out.push_str("vertex");
    for c in col_ids {
        out.push(',');
        out.push_str(c.as_ref());
    }
    out.push('\n');
    for (i, r) in row_ids.iter().enumerate() {
        out.push_str(r.as_ref());
        for j in 0..m.cols() {
            let _ = write!(out, ",{:.16e}", m[(i, j)]);
        }
        out.push('\n');
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;

    fn sym(rows: &[Vec<f64>]) -> SymMatrix {
        SymMatrix::from_upper(&Matrix::from_rows(rows))
    }

    #[test]
    fn eigen_of_identity_and_diagonal() {
        let e = jacobi_eigen(&SymMatrix::identity(3)).unwrap();
        assert_eq!(e.eigenvalues, vec![1.0, 1.0, 1.0]);
        let e = jacobi_eigen(&SymMatrix::diagonal(&[5.0, 2.0, 9.0])).unwrap();
        assert_eq!(e.eigenvalues, vec![2.0, 5.0, 9.0]);
        assert_eq!(e.eigenvectors.column(0), vec![0.0, 1.0, 0.0]);
    }

    #[test]
    fn eigen_of_path_laplacian() {
        let e = jacobi_eigen(&sym(&[vec![2.0, -1.0], vec![-1.0, 2.0]])).unwrap();
        assert_abs_diff_eq!(e.eigenvalues[0], 1.0, epsilon = 1e-14);
        assert_abs_diff_eq!(e.eigenvalues[1], 3.0, epsilon = 1e-14);
        let h = std::f64::consts::FRAC_1_SQRT_2;
        let v0 = e.eigenvectors.column(0);
        let v1 = e.eigenvectors.column(1);
        // Eigenvectors are determined up to sign.
        assert_abs_diff_eq!(v0[0].abs(), h, epsilon = 1e-14);
        assert_abs_diff_eq!(v0[0], v0[1], epsilon = 1e-14);
        assert_abs_diff_eq!(v1[0].abs(), h, epsilon = 1e-14);
        assert_abs_diff_eq!(v1[0], -v1[1], epsilon = 1e-14);
    }

    #[test]
    fn no_convergence_is_reported() {
        let a = sym(&[
            vec![1.0, 0.3, 0.2],
            vec![0.3, 2.0, 0.1],
            vec![0.2, 0.1, 3.0],
        ]);
        assert!(matches!(
            jacobi_eigen_with(&a, 1e-300, 2),
            Err(Error::NoConvergence { sweeps: 2 })
        ));
    }

    #[test]
    fn sqrt_examples() {
        let s = psd_sqrt(&SymMatrix::diagonal(&[4.0, 9.0])).unwrap();
        assert_eq!(s.as_matrix(), &Matrix::diagonal(&[2.0, 3.0]));

        let s = psd_sqrt(&SymMatrix::diagonal(&[2.0 / 3.0])).unwrap();
        assert_abs_diff_eq!(s[(0, 0)], (2.0f64 / 3.0).sqrt(), epsilon = 1e-15);

        // Rank one: sqrt(v vᵀ) = v vᵀ / |v| with v = (1, 1).
        let s = psd_sqrt(&sym(&[vec![1.0, 1.0], vec![1.0, 1.0]])).unwrap();
        let h = std::f64::consts::FRAC_1_SQRT_2;
        for i in 0..2 {
            for j in 0..2 {
                assert_abs_diff_eq!(s[(i, j)], h, epsilon = 1e-12);
            }
        }
    }

    #[test]
    fn sqrt_rejects_negative_eigenvalues() {
        let r = psd_sqrt(&sym(&[vec![1.0, 2.0], vec![2.0, 1.0]]));
        assert!(matches!(r, Err(Error::NotPSD { .. })));
    }

    #[test]
    fn cholesky_examples() {
        let l = cholesky(&SymMatrix::identity(3)).unwrap();
        assert_eq!(l.factor(), &Matrix::identity(3));
        let l = cholesky(&sym(&[vec![4.0, 2.0], vec![2.0, 5.0]])).unwrap();
        assert_eq!(
            l.factor(),
            &Matrix::from_rows(&[vec![2.0, 0.0], vec![1.0, 2.0]])
        );
        let e = cholesky(&sym(&[vec![1.0, 2.0], vec![2.0, 1.0]]));
        assert!(matches!(e, Err(Error::NotPD { row: 1, .. })));
    }

    #[test]
    fn solve_examples() {
        let b = vec![0.5, -2.0, 3.0];
        assert_eq!(solve_spd(&SymMatrix::identity(3), &b).unwrap(), b);
        let a = sym(&[vec![2.0, -1.0], vec![-1.0, 2.0]]);
        let x = solve_spd(&a, &[1.0, 0.0]).unwrap();
        assert_abs_diff_eq!(x[0], 2.0 / 3.0, epsilon = 1e-15);
        assert_abs_diff_eq!(x[1], 1.0 / 3.0, epsilon = 1e-15);
        assert_eq!(solve_spd(&a, &[0.0, 0.0]).unwrap(), vec![0.0, 0.0]);
        assert!(matches!(
            solve_spd(&a, &[1.0]),
            Err(Error::DimensionMismatch { .. })
        ));
    }

    #[test]
    fn singular_laplacian_is_not_pd() {
        // Closed 5-cycle: constants are in the kernel.
        let a = Matrix::from_fn(5, 5, |i, j| {
            if i == j {
                2.0
            } else if (i + 1) % 5 == j || (j + 1) % 5 == i {
                -1.0
            } else {
                0.0
            }
        });
        let e = cholesky(&SymMatrix::from_upper(&a));
        assert!(matches!(e, Err(Error::NotPD { .. })));
    }

    #[test]
    fn lu_solves_nonsymmetric_systems() {
        let a = Matrix::from_rows(&[
            vec![0.0, 2.0, 1.0],
            vec![1.0, 1.0, 0.0],
            vec![3.0, 0.0, 1.0],
        ]);
        let x = [1.0, -2.0, 0.5];
        let b = a.mul_vec(&x);
        let got = Lu::new(&a).unwrap().solve(&b);
        for (g, e) in got.iter().zip(x) {
            assert_abs_diff_eq!(*g, e, epsilon = 1e-14);
        }
        let singular = Matrix::from_rows(&[vec![1.0, 2.0], vec![2.0, 4.0]]);
        assert!(matches!(Lu::new(&singular), Err(Error::Singular(1))));
    }

    #[test]
    fn csv_has_full_precision() {
        let m = Matrix::from_rows(&[vec![2.0 / 3.0, 0.0]]);
        let csv = matrix_csv(&["a"], &["a", "b"], &m);
        assert_eq!(
            csv,
            "vertex,a,b\na,6.6666666666666663e-1,0.0000000000000000e0\n"
        );
        let parsed: f64 = csv
            .lines()
            .nth(1)
            .unwrap()
            .split(',')
            .nth(1)
            .unwrap()
            .parse()
            .unwrap();
        assert_eq!(parsed, 2.0 / 3.0);
    }
}

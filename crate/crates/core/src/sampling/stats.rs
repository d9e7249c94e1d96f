//! Known-zero-mean covariance estimation and z-scores.
//!
//! For a centered Gaussian vector with covariance `Σ`, the estimator
//! `Ĉ = (1/N) Σ_t x_t x_tᵀ` has `Var(Ĉ_ij) = (Σ_ii Σ_jj + Σ_ij²) / N`, which
//! gives the standard error used for every statistical check.

use serde::Serialize;

use crate::exec::Execution;
use crate::linalg::Matrix;

/// Trials per accumulation block. Blocks are reduced in index order, so
/// results do not depend on the execution policy.
pub const BLOCK: usize = 4096;

#[derive(Debug, Clone, PartialEq)]
pub struct SecondMoment {
    dim: usize,
    count: u64,
    sum: Vec<f64>,
    /// Upper triangle, row-major.
    outer: Vec<f64>,
}

impl SecondMoment {
    pub fn new(dim: usize) -> Self {
        Self {
            dim,
            count: 0,
            sum: vec![0.0; dim],
            outer: vec![0.0; dim * (dim + 1) / 2],
        }
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn count(&self) -> u64 {
        self.count
    }

    pub fn push(&mut self, x: &[f64]) {
        debug_assert_eq!(x.len(), self.dim);
        self.count += 1;
        let mut k = 0;
        for i in 0..self.dim {
            self.sum[i] += x[i];
            let xi = x[i];
            for xj in &x[i..] {
                self.outer[k] += xi * xj;
                k += 1;
            }
        }
    }

    /// Associative merge of two accumulators.
    pub fn merge(&mut self, other: &SecondMoment) {
        assert_eq!(self.dim, other.dim);
        self.count += other.count;
        for (a, b) in self.sum.iter_mut().zip(&other.sum) {
            *a += b;
        }
        for (a, b) in self.outer.iter_mut().zip(&other.outer) {
            *a += b;
        }
    }

    pub fn mean(&self) -> Vec<f64> {
        let n = self.count.max(1) as f64;
        self.sum.iter().map(|s| s / n).collect()
    }

    /// `(1/N) Σ x xᵀ`.
    pub fn covariance(&self) -> Matrix {
        let n = self.count.max(1) as f64;
        let mut m = Matrix::zeros(self.dim, self.dim);
        let mut k = 0;
        for i in 0..self.dim {
            for j in i..self.dim {
                let v = self.outer[k] / n;
                m[(i, j)] = v;
                m[(j, i)] = v;
                k += 1;
            }
        }
        m
    }

    /// Accumulator restricted to the coordinates in `range`.
    pub fn block(&self, range: std::ops::Range<usize>) -> SecondMoment {
        let mut out = SecondMoment::new(range.len());
        out.count = self.count;
        for (a, i) in range.clone().enumerate() {
            out.sum[a] = self.sum[i];
        }
        let mut k = 0;
        for i in range.clone() {
            for j in i..range.end {
                out.outer[k] = self.outer[self.upper_index(i, j)];
                k += 1;
            }
        }
        out
    }

    fn upper_index(&self, i: usize, j: usize) -> usize {
        debug_assert!(i <= j);
        // Row r of the packed upper triangle holds dim - r entries.
        i * self.dim - i * (i.saturating_sub(1)) / 2 + (j - i)
    }
}

/// Run `trials` independent trials in blocks of [`BLOCK`], writing each
/// trial's feature vector into the provided buffer.
pub fn accumulate<F>(exec: Execution, trials: usize, dim: usize, feature: F) -> SecondMoment
where
    F: Fn(u64, &mut [f64]) + Sync + Send,
{
    let blocks = trials.div_ceil(BLOCK);
    let parts = exec.map_indexed(blocks, |b| {
        let mut acc = SecondMoment::new(dim);
        let mut buf = vec![0.0; dim];
        for t in b * BLOCK..trials.min((b + 1) * BLOCK) {
            buf.iter_mut().for_each(|v| *v = 0.0);
            feature(t as u64, &mut buf);
            acc.push(&buf);
        }
        acc
    });
    let mut total = SecondMoment::new(dim);
    for p in &parts {
        total.merge(p);
    }
    total
}

/// Standard errors of the known-zero-mean covariance estimator at `n`
/// samples, computed from the exact covariance.
pub fn standard_errors(exact: &Matrix, n: u64) -> Matrix {
    let nf = n.max(1) as f64;
    Matrix::from_fn(exact.rows(), exact.cols(), |i, j| {
        ((exact[(i, i)] * exact[(j, j)] + exact[(i, j)] * exact[(i, j)]) / nf).sqrt()
    })
}

/// `diff / se`, treating a vanishing standard error as exact.
pub fn z_value(diff: f64, se: f64) -> f64 {
    if se > 0.0 {
        diff / se
    } else if diff.abs() <= 1e-12 {
        0.0
    } else {
        f64::INFINITY
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Comparison {
    /// Empirical covariance against the exact target.
    Exact,
    /// Two independent empirical covariances against each other.
    TwoSample,
}

#[derive(Debug, Clone, Serialize)]
pub struct CovarianceReport {
    pub label: String,
    pub comparison: Comparison,
    pub trials: u64,
    pub seed: u64,
    pub empirical: Matrix,
    /// Exact target, or the second empirical matrix for two-sample reports.
    pub reference: Matrix,
    pub standard_errors: Matrix,
    pub max_abs_z: f64,
    /// Largest `|z|` of the empirical mean, when means were tested.
    pub mean_max_abs_z: Option<f64>,
}

impl CovarianceReport {
    pub fn against_exact(
        label: impl Into<String>,
        m: &SecondMoment,
        exact: &Matrix,
        seed: u64,
    ) -> Self {
        let empirical = m.covariance();
        let se = standard_errors(exact, m.count());
        let mut max_z: f64 = 0.0;
        for i in 0..exact.rows() {
            for j in 0..exact.cols() {
                max_z = max_z.max(z_value(empirical[(i, j)] - exact[(i, j)], se[(i, j)]).abs());
            }
        }
        Self {
            label: label.into(),
            comparison: Comparison::Exact,
            trials: m.count(),
            seed,
            empirical,
            reference: exact.clone(),
            standard_errors: se,
            max_abs_z: max_z,
            mean_max_abs_z: None,
        }
    }

    /// Also test that the mean vanishes, with standard error `sqrt(Σ_ii / N)`.
    pub fn with_mean_test(mut self, m: &SecondMoment) -> Self {
        let n = m.count().max(1) as f64;
        let z = m
            .mean()
            .iter()
            .enumerate()
            .map(|(i, mu)| z_value(*mu, (self.reference[(i, i)] / n).sqrt()).abs())
            .fold(0.0, f64::max);
        self.mean_max_abs_z = Some(z);
        self
    }

    /// Compare two independent estimates of the same exact covariance; the
    /// joint standard error is `sqrt(SE_a² + SE_b²)`.
    pub fn two_sample(
        label: impl Into<String>,
        a: &SecondMoment,
        b: &SecondMoment,
        exact: &Matrix,
        seed: u64,
    ) -> Self {
        let ea = a.covariance();
        let eb = b.covariance();
        let sa = standard_errors(exact, a.count());
        let sb = standard_errors(exact, b.count());
        let se = Matrix::from_fn(exact.rows(), exact.cols(), |i, j| {
            (sa[(i, j)].powi(2) + sb[(i, j)].powi(2)).sqrt()
        });
        let mut max_z: f64 = 0.0;
        for i in 0..exact.rows() {
            for j in 0..exact.cols() {
                max_z = max_z.max(z_value(ea[(i, j)] - eb[(i, j)], se[(i, j)]).abs());
            }
        }
        Self {
            label: label.into(),
            comparison: Comparison::TwoSample,
            trials: a.count().min(b.count()),
            seed,
            empirical: ea,
            reference: eb,
            standard_errors: se,
            max_abs_z: max_z,
            mean_max_abs_z: None,
        }
    }

    /// Largest `|z|` including the mean test.
    pub fn worst_z(&self) -> f64 {
        self.max_abs_z.max(self.mean_max_abs_z.unwrap_or(0.0))
    }
}

impl Serialize for Matrix {
    fn serialize<S: serde::Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        use serde::ser::SerializeSeq;
        let mut seq = s.serialize_seq(Some(self.rows()))?;
        for i in 0..self.rows() {
            seq.serialize_element(self.row(i))?;
        }
        seq.end()
    }
}

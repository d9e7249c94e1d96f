//! White noise, DGFF growth `Ψ_n = Q_n Φ`, the increment structure, the
//! independent Cholesky oracle, and the Monte Carlo moment checks.
//!
//! White noise at vertex `y` in trial `t` is draw `t` of substream `y`, so
//! the same trial index always reproduces the same realization and each
//! vertex has its own independent substream.

mod moments;
pub mod stats;

pub use moments::{
    basis_independence, brownian_check, dgff_block, dgff_covariance, increment_independence,
    markov_property, oracle_covariance, random_orthogonal_basis, random_test_function,
    sweep_average_check, wnf_covariance, BrownianReport, MonteCarlo,
};
pub use stats::{accumulate, CovarianceReport, SecondMoment};

use serde::Serialize;

use crate::error::{Error, Result};
use crate::graph::{Graph, VertexVector};
use crate::hadamard::HadamardFamily;
use crate::linalg::{cholesky, Cholesky, Matrix, SymMatrix};
use crate::operators::GreenKernel;
use crate::rng::{domain, GaussianStream};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum FieldKind {
    WhiteNoise,
    Dgff,
    Increment,
    Oracle,
}

/// One realization of a field, stored over all graph vertices.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct FieldSample {
    pub kind: FieldKind,
    /// Growth cluster index, when the field belongs to one.
    pub cluster: Option<usize>,
    pub seed: u64,
    pub trial: u64,
    pub values: Vec<f64>,
}

impl FieldSample {
    pub fn vector(&self) -> VertexVector {
        VertexVector(self.values.clone())
    }
}

/// White noise on `domain`: independent N(0, 1) values, zero elsewhere.
pub fn sample_wnf(g: &Graph, domain: &[usize], stream: &GaussianStream, trial: u64) -> FieldSample {
    let mut values = vec![0.0; g.n_vertices()];
    for &y in domain {
        values[y] = stream.normal(y as u64, trial);
    }
    FieldSample {
        kind: FieldKind::WhiteNoise,
        cluster: None,
        seed: stream.seed(),
        trial,
        values,
    }
}

/// White noise on `Γ_N` in local order.
pub fn white_noise_local(fam: &HadamardFamily, stream: &GaussianStream, trial: u64) -> Vec<f64> {
    fam.cluster(fam.depth())
        .vertices()
        .iter()
        .map(|&y| stream.normal(y as u64, trial))
        .collect()
}

/// `Ψ_n = Q_n (1_{Γ_n} Φ)` with `Φ` given on `Γ_N` in local order.
pub fn grow_local(fam: &HadamardFamily, phi: &[f64], n: usize) -> Vec<f64> {
    fam.q[n].apply(&phi[..fam.dim(n)])
}

/// `Ψ_n - Ψ_{n-1}` on `Γ_n`, local order.
pub fn increment_local(fam: &HadamardFamily, phi: &[f64], n: usize) -> Vec<f64> {
    let mut psi = grow_local(fam, phi, n);
    if n > 0 {
        for (a, b) in psi.iter_mut().zip(grow_local(fam, phi, n - 1)) {
            *a -= b;
        }
    }
    psi
}

/// `P_n R̃_n (Φ on γ_n)`: the Poisson extension of the weighted layer noise.
pub fn layer_noise_extension_local(fam: &HadamardFamily, phi: &[f64], n: usize) -> Vec<f64> {
    let layer = fam.cluster(n).top_range();
    let weighted = fam.sqrts[n].matrix.as_matrix().mul_vec(&phi[layer]);
    fam.operators[n].poisson.matrix.mul_vec(&weighted)
}

fn check_cluster(fam: &HadamardFamily, n: usize) -> Result<()> {
    if n > fam.depth() {
        return Err(Error::IndexOutOfRange {
            index: n,
            max: fam.depth(),
        });
    }
    Ok(())
}

fn local_noise(fam: &HadamardFamily, phi: &FieldSample) -> Result<Vec<f64>> {
    if phi.values.len() != fam.graph.n_vertices() {
        return Err(Error::DimensionMismatch {
            expected: fam.graph.n_vertices(),
            found: phi.values.len(),
        });
    }
    Ok(fam.restrict(fam.depth(), &phi.vector()))
}

fn field(
    fam: &HadamardFamily,
    kind: FieldKind,
    n: usize,
    phi: &FieldSample,
    local: &[f64],
) -> FieldSample {
    FieldSample {
        kind,
        cluster: Some(n),
        seed: phi.seed,
        trial: phi.trial,
        values: fam.extend(n, local).0,
    }
}

/// DGFF on `Γ_n` grown from the white noise `phi`.
pub fn grow_dgff(fam: &HadamardFamily, phi: &FieldSample, n: usize) -> Result<FieldSample> {
    check_cluster(fam, n)?;
    let local = grow_local(fam, &local_noise(fam, phi)?, n);
    Ok(field(fam, FieldKind::Dgff, n, phi, &local))
}

/// `Ψ_n - Ψ_{n-1}` for `n >= 1`.
pub fn increment(fam: &HadamardFamily, phi: &FieldSample, n: usize) -> Result<FieldSample> {
    check_cluster(fam, n)?;
    if n == 0 {
        return Err(Error::InvalidArgument("increments start at n = 1".into()));
    }
    let local = increment_local(fam, &local_noise(fam, phi)?, n);
    Ok(field(fam, FieldKind::Increment, n, phi, &local))
}

/// The same increment evaluated as `P_n R̃_n Φ|γ_n`.
pub fn poisson_layer_noise(
    fam: &HadamardFamily,
    phi: &FieldSample,
    n: usize,
) -> Result<FieldSample> {
    check_cluster(fam, n)?;
    let local = layer_noise_extension_local(fam, &local_noise(fam, phi)?, n);
    Ok(field(fam, FieldKind::Increment, n, phi, &local))
}

/// Samples `N(0, G̃_n)` directly as `L z` with `L Lᵀ = G̃_n`.
#[derive(Debug, Clone)]
pub struct CholeskyOracle {
    pub n: usize,
    factor: Cholesky,
}

impl CholeskyOracle {
    pub fn new(green: &GreenKernel) -> Result<Self> {
        Ok(Self {
            n: green.n,
            factor: cholesky(&SymMatrix::from_upper(&green.normalized))?,
        })
    }

    pub fn factor(&self) -> &Matrix {
        self.factor.factor()
    }

    /// Oracle sample on `Γ_n` in local order. Uses the oracle domain of the
    /// stream with substreams `(n << 32) | i`.
    pub fn sample_local(&self, stream: &GaussianStream, trial: u64) -> Vec<f64> {
        let s = stream.with_domain(domain::ORACLE);
        let base = (self.n as u64) << 32;
        let z: Vec<f64> = (0..self.factor.dim())
            .map(|i| s.normal(base | i as u64, trial))
            .collect();
        self.factor.factor().mul_vec(&z)
    }

    pub fn sample(&self, fam: &HadamardFamily, stream: &GaussianStream, trial: u64) -> FieldSample {
        FieldSample {
            kind: FieldKind::Oracle,
            cluster: Some(self.n),
            seed: stream.seed(),
            trial,
            values: fam.extend(self.n, &self.sample_local(stream, trial)).0,
        }
    }
}

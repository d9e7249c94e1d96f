//! The discrete Hadamard construction.
//!
//! For each layer `γ_m`, `R̃_m` is the symmetric PSD square root of the
//! boundary Green operator `G̃^⟨m⟩`, and the Hadamard kernel
//! `K_m = P_m R̃_m` is its Poisson extension into `Γ_m`. The Hadamard
//! operator `Q_n` has column `y` equal to `K_{t(y)}(·, y)`, so in layer order
//! it is block upper-triangular with diagonal blocks `R̃_m`. It satisfies
//! `Q_n Q_nᵀ = G̃_n` and maps the standard basis of `ℓ²(Γ_n)` to a
//! Dirichlet-orthonormal basis.

use crate::error::{Error, Result};
use crate::exec::Execution;
use crate::foliation::{Foliation, GrowthCluster};
use crate::graph::{coboundary, Graph, VertexVector};
use crate::linalg::{cholesky, psd_sqrt, Matrix, SymMatrix};
use crate::operators::{
    harmonic_residual, BoundaryGreen, ClusterOperators, GreenKernel, PoissonKernel, Residual,
};

/// `R̃_n` over `γ_n`.
#[derive(Debug, Clone)]
pub struct LayerSqrt {
    pub n: usize,
    pub matrix: SymMatrix,
}

pub fn layer_sqrt(bg: &BoundaryGreen) -> Result<LayerSqrt> {
    Ok(LayerSqrt {
        n: bg.n,
        matrix: psd_sqrt(&bg.matrix)?,
    })
}

impl LayerSqrt {
    /// `‖R̃_n² - G̃^⟨n⟩‖_max` relative to `max |G̃^⟨n⟩|`.
    pub fn square_residual(&self, bg: &BoundaryGreen) -> Residual {
        let r = self.matrix.as_matrix();
        let sq = r.matmul(r);
        Residual::new(
            sq.max_abs_diff(bg.matrix.as_matrix()),
            bg.matrix.as_matrix().max_abs(),
        )
    }
}

/// `K_m(x, ξ)` with rows over `Γ_m` (local order) and columns over `γ_m`.
/// Rows outside `Γ_m` are zero and not stored.
#[derive(Debug, Clone)]
pub struct HadamardKernel {
    pub m: usize,
    pub matrix: Matrix,
}

pub fn kernel(p: &PoissonKernel, r: &LayerSqrt) -> Result<HadamardKernel> {
    if p.n != r.n {
        return Err(Error::InvalidArgument(format!(
            "Poisson kernel of layer {} paired with square root of layer {}",
            p.n, r.n
        )));
    }
    if p.matrix.cols() != r.matrix.dim() {
        return Err(Error::DimensionMismatch {
            expected: p.matrix.cols(),
            found: r.matrix.dim(),
        });
    }
    Ok(HadamardKernel {
        m: p.n,
        matrix: p.matrix.matmul(r.matrix.as_matrix()),
    })
}

/// `Q_n` over `Γ_n × Γ_n` in local cluster order.
#[derive(Debug, Clone)]
pub struct HadamardMatrix {
    pub n: usize,
    pub matrix: Matrix,
}

impl HadamardMatrix {
    /// `Q_n f` for `f` given on `Γ_n` in local order.
    pub fn apply(&self, f: &[f64]) -> Vec<f64> {
        self.matrix.mul_vec(f)
    }

    /// `Q_n* f = Q_nᵀ f`.
    pub fn adjoint_apply(&self, f: &[f64]) -> Vec<f64> {
        self.matrix.tr_mul_vec(f)
    }
}

/// Assemble `Q_n` column by column from the kernels of layers `0..=n`.
pub fn hadamard_q(f: &Foliation, kernels: &[HadamardKernel], n: usize) -> Result<HadamardMatrix> {
    if n >= f.n_layers() || kernels.len() <= n {
        return Err(Error::IndexOutOfRange {
            index: n,
            max: kernels.len().min(f.n_layers()).saturating_sub(1),
        });
    }
    let cluster = f.cluster(n)?;
    let d = cluster.len();
    let mut q = Matrix::zeros(d, d);
    for (m, k) in kernels[..=n].iter().enumerate() {
        if k.m != m {
            return Err(Error::InvalidArgument(format!(
                "kernel at position {m} belongs to layer {}",
                k.m
            )));
        }
        let cols = cluster.layer_range(m);
        if k.matrix.cols() != cols.len() || k.matrix.rows() != cols.end {
            return Err(Error::DimensionMismatch {
                expected: cols.len(),
                found: k.matrix.cols(),
            });
        }
        for (c, j) in cols.enumerate() {
            for i in 0..k.matrix.rows() {
                q[(i, j)] = k.matrix[(i, c)];
            }
        }
    }
    Ok(HadamardMatrix { n, matrix: q })
}

/// `‖Q_n Q_nᵀ - G̃_n‖_max` relative to `max |G̃_n|`.
pub fn verify_hadamard_identity(q: &HadamardMatrix, green: &GreenKernel) -> Residual {
    let qq = q.matrix.matmul(&q.matrix.transpose());
    Residual::new(
        qq.max_abs_diff(&green.normalized),
        green.normalized.max_abs(),
    )
}

/// Dirichlet Gram matrix of the columns of `Q_n`, computed edge by edge
/// through the coboundary.
pub fn dirichlet_gram(q: &HadamardMatrix, g: &Graph, cluster: &GrowthCluster) -> Matrix {
    let d = cluster.len();
    let fields: Vec<Vec<f64>> = (0..d)
        .map(|j| {
            let mut psi = VertexVector::zeros(g);
            for (i, &x) in cluster.vertices().iter().enumerate() {
                psi.0[x] = q.matrix[(i, j)];
            }
            coboundary(g, &psi).0
        })
        .collect();
    let mut gram = Matrix::zeros(d, d);
    for i in 0..d {
        for j in i..d {
            let v: f64 = fields[i].iter().zip(&fields[j]).map(|(a, b)| a * b).sum();
            gram[(i, j)] = v;
            gram[(j, i)] = v;
        }
    }
    gram
}

/// `‖Gram - I‖_max` for the Dirichlet Gram matrix of `Q_n`'s columns.
pub fn verify_isometry(q: &HadamardMatrix, g: &Graph, cluster: &GrowthCluster) -> Residual {
    let gram = dirichlet_gram(q, g, cluster);
    Residual::new(gram.max_abs_diff(&Matrix::identity(cluster.len())), 1.0)
}

/// Everything needed to grow a field on `Γ_0 ⊂ .. ⊂ Γ_N`.
#[derive(Debug, Clone)]
pub struct HadamardFamily {
    pub graph: Graph,
    pub foliation: Foliation,
    pub operators: Vec<ClusterOperators>,
    pub sqrts: Vec<LayerSqrt>,
    pub kernels: Vec<HadamardKernel>,
    pub q: Vec<HadamardMatrix>,
}

impl HadamardFamily {
    /// Build all operators for `n = 0..=N`. Clusters are processed under
    /// `exec`.
    pub fn build(graph: &Graph, foliation: &Foliation, exec: Execution) -> Result<Self> {
        Self::build_to(graph, foliation, foliation.depth(), exec)
    }

    /// Build operators for `n = 0..=top` only.
    pub fn build_to(
        graph: &Graph,
        foliation: &Foliation,
        top: usize,
        exec: Execution,
    ) -> Result<Self> {
        if top > foliation.depth() {
            return Err(Error::IndexOutOfRange {
                index: top,
                max: foliation.depth(),
            });
        }
        let built = exec.map_indexed(top + 1, |n| -> Result<_> {
            let ops = ClusterOperators::build(graph, foliation, n, exec)?;
            let sqrt = layer_sqrt(&ops.boundary_green)?;
            let k = kernel(&ops.poisson, &sqrt)?;
            Ok((ops, sqrt, k))
        });
        let mut operators = Vec::with_capacity(top + 1);
        let mut sqrts = Vec::with_capacity(top + 1);
        let mut kernels = Vec::with_capacity(top + 1);
        for item in built {
            let (ops, sqrt, k) = item?;
            operators.push(ops);
            sqrts.push(sqrt);
            kernels.push(k);
        }
        let q = (0..=top)
            .map(|n| hadamard_q(foliation, &kernels, n))
            .collect::<Result<Vec<_>>>()?;
        Ok(Self {
            graph: graph.clone(),
            foliation: foliation.clone(),
            operators,
            sqrts,
            kernels,
            q,
        })
    }

    /// Index `N` of the largest cluster built.
    pub fn depth(&self) -> usize {
        self.q.len() - 1
    }

    pub fn cluster(&self, n: usize) -> &GrowthCluster {
        &self.operators[n].cluster
    }

    pub fn dim(&self, n: usize) -> usize {
        self.operators[n].dim()
    }

    pub fn green(&self, n: usize) -> &GreenKernel {
        &self.operators[n].green
    }

    /// `max_n ‖R̃_n² - G̃^⟨n⟩‖` (relative).
    pub fn sqrt_residual(&self) -> Residual {
        self.sqrts
            .iter()
            .zip(&self.operators)
            .map(|(r, ops)| r.square_residual(&ops.boundary_green))
            .fold(Residual::default(), Residual::max)
    }

    /// Kernel structure: the `γ_m` block of `K_m` must equal `R̃_m` exactly,
    /// and every column must be harmonic on `Γ_{m-1}`. Returns the largest
    /// departure in the layer block and the harmonic residual relative to
    /// `max π · max |K|`.
    pub fn kernel_structure(&self) -> (f64, Residual) {
        let mut block_error: f64 = 0.0;
        let mut harmonic = Residual::default();
        for (m, k) in self.kernels.iter().enumerate() {
            let cluster = self.cluster(m);
            let top = cluster.top_range();
            let block = k.matrix.submatrix(top.clone(), 0..k.matrix.cols());
            block_error = block_error.max(block.max_abs_diff(self.sqrts[m].matrix.as_matrix()));
            let pi_max = self.green(m).pi().iter().fold(1.0f64, |a, &b| a.max(b));
            let abs = (0..k.matrix.cols())
                .map(|c| harmonic_residual(&self.graph, cluster, &k.matrix.column(c), 0..top.start))
                .fold(0.0, f64::max);
            harmonic = harmonic.max(Residual::new(abs, pi_max * k.matrix.max_abs().max(1e-300)));
        }
        (block_error, harmonic)
    }

    /// Stability across clusters: for `m < n`, the first `|Γ_m|` columns of
    /// `Q_n` must be `Q_m` padded with zeros. Returns the largest mismatch.
    pub fn q_stability(&self) -> f64 {
        let mut worst: f64 = 0.0;
        for n in 0..self.q.len() {
            let qn = &self.q[n].matrix;
            for m in 0..n {
                let qm = &self.q[m].matrix;
                let dm = qm.rows();
                for i in 0..qn.rows() {
                    for j in 0..dm {
                        let want = if i < dm { qm[(i, j)] } else { 0.0 };
                        worst = worst.max((qn[(i, j)] - want).abs());
                    }
                }
            }
        }
        worst
    }

    /// Solve `Q_n f = b`. Column `y` of `Q_n` is supported on `Γ_{t(y)}`, so
    /// in layer order `Q_n` is block upper-triangular with positive definite
    /// diagonal blocks `R̃_m`; back substitution runs from the newest layer
    /// down.
    pub fn solve_q(&self, n: usize, b: &[f64]) -> Result<Vec<f64>> {
        let cluster = self.cluster(n);
        let q = &self.q[n].matrix;
        if b.len() != cluster.len() {
            return Err(Error::DimensionMismatch {
                expected: cluster.len(),
                found: b.len(),
            });
        }
        let d = cluster.len();
        let mut f = vec![0.0; d];
        for m in (0..=n).rev() {
            let range = cluster.layer_range(m);
            let rhs: Vec<f64> = range
                .clone()
                .map(|i| b[i] - (range.end..d).map(|j| q[(i, j)] * f[j]).sum::<f64>())
                .collect();
            let diag = SymMatrix::from_upper(&q.submatrix(range.clone(), range.clone()));
            let sol = cholesky(&diag)?.solve(&rhs);
            for (i, v) in range.zip(sol) {
                f[i] = v;
            }
        }
        Ok(f)
    }

    /// `‖Q_n* f‖²` for `n = 0..=N`, with `f` given on the whole graph.
    pub fn adjoint_energies(&self, f: &VertexVector) -> Vec<f64> {
        (0..self.q.len())
            .map(|n| {
                let local = self.restrict(n, f);
                self.q[n].adjoint_apply(&local).iter().map(|v| v * v).sum()
            })
            .collect()
    }

    /// Values of `f` on `Γ_n` in local order.
    pub fn restrict(&self, n: usize, f: &VertexVector) -> Vec<f64> {
        self.cluster(n).vertices().iter().map(|&x| f[x]).collect()
    }

    /// Local vector on `Γ_n` extended by zero to the whole graph.
    pub fn extend(&self, n: usize, local: &[f64]) -> VertexVector {
        let mut v = VertexVector::zeros(&self.graph);
        for (i, &x) in self.cluster(n).vertices().iter().enumerate() {
            v.0[x] = local[i];
        }
        v
    }
}

//! Per-cluster operators: the truncated Laplacian `Δ_n`, Green kernels
//! `G̃_n = Δ_n⁻¹` and `G_n(x, y) = G̃_n(x, y) π(y)`, the Poisson kernel `P_n`
//! from the newest layer `γ_n`, and the boundary Green operator `G̃^⟨n⟩`.
//!
//! All matrices are indexed by the local order of the growth cluster, so
//! every operator of `Γ_m` is a leading block of the corresponding index set
//! of `Γ_n` for `m <= n`. Vertices outside a cluster are implicit zeros.

use crate::error::{Error, Result};
use crate::exec::Execution;
use crate::foliation::{Foliation, GrowthCluster};
use crate::graph::Graph;
use crate::linalg::{jacobi_eigen, Matrix, Solver, SymMatrix};

/// A max-norm residual together with the magnitude it is measured against.
#[derive(Debug, Clone, Copy, PartialEq, serde::Serialize)]
pub struct Residual {
    pub abs: f64,
    pub scale: f64,
}

impl Residual {
    pub fn new(abs: f64, scale: f64) -> Self {
        Self { abs, scale }
    }

    /// `abs / scale`, or `abs` when the scale vanishes.
    pub fn relative(&self) -> f64 {
        if self.scale > 0.0 {
            self.abs / self.scale
        } else {
            self.abs
        }
    }

    pub fn max(self, other: Residual) -> Residual {
        if other.relative() > self.relative() {
            other
        } else {
            self
        }
    }
}

impl Default for Residual {
    fn default() -> Self {
        Self::new(0.0, 0.0)
    }
}

/// `d*d` truncated to `vertices`: `π(x)` on the diagonal, `-c(x, y)` for
/// neighbors inside the set. Rows use the conductance seen from the row
/// vertex, so the result is symmetric for every validated graph.
pub fn laplacian_on(g: &Graph, vertices: &[usize]) -> Matrix {
    let mut local = vec![None; g.n_vertices()];
    for (i, &x) in vertices.iter().enumerate() {
        local[x] = Some(i);
    }
    let mut m = Matrix::zeros(vertices.len(), vertices.len());
    for (i, &x) in vertices.iter().enumerate() {
        m[(i, i)] = g.pi(x);
        for (y, c) in g.neighbors(x) {
            if let Some(j) = local[y] {
                m[(i, j)] -= c;
            }
        }
    }
    m
}

#[derive(Debug, Clone)]
pub struct LaplacianMatrix {
    pub n: usize,
    pub matrix: Matrix,
}

/// Laplacian of growth cluster `Γ_n`. A symmetric Laplacian must be
/// positive definite; failure means some component of the cluster is sealed
/// off from the rest of the graph.
pub fn laplacian(g: &Graph, cluster: &GrowthCluster) -> Result<LaplacianMatrix> {
    if cluster.len() >= g.n_vertices() {
        return Err(Error::InvalidArgument(
            "growth cluster must be a proper subset of the vertices".into(),
        ));
    }
    let matrix = laplacian_on(g, cluster.vertices());
    Solver::new(&matrix)?;
    Ok(LaplacianMatrix {
        n: cluster.n,
        matrix,
    })
}

#[derive(Debug, Clone)]
pub struct GreenKernel {
    pub n: usize,
    /// `G̃_n` in local cluster order.
    pub normalized: Matrix,
    pi: Vec<f64>,
}

impl GreenKernel {
    pub fn dim(&self) -> usize {
        self.normalized.rows()
    }

    /// `π` of the cluster vertices, in local order.
    pub fn pi(&self) -> &[f64] {
        &self.pi
    }

    /// `G_n(x, y) = G̃_n(x, y) π(y)`.
    pub fn unnormalized(&self) -> Matrix {
        Matrix::from_fn(self.dim(), self.dim(), |i, j| {
            self.normalized[(i, j)] * self.pi[j]
        })
    }

    /// `G̃_n` zero-extended to a larger cluster of dimension `dim`.
    pub fn normalized_padded(&self, dim: usize) -> Matrix {
        let d = self.dim();
        Matrix::from_fn(dim, dim, |i, j| {
            if i < d && j < d {
                self.normalized[(i, j)]
            } else {
                0.0
            }
        })
    }

    /// `G̃_n` over all graph vertices, with explicit zero rows and columns off
    /// the cluster.
    pub fn normalized_full(&self, g: &Graph, cluster: &GrowthCluster) -> Matrix {
        let mut m = Matrix::zeros(g.n_vertices(), g.n_vertices());
        for (i, &x) in cluster.vertices().iter().enumerate() {
            for (j, &y) in cluster.vertices().iter().enumerate() {
                m[(x, y)] = self.normalized[(i, j)];
            }
        }
        m
    }
}

/// Green kernel of `Γ_n`: each column of `G̃_n` solves `Δ_n u = δ_y` with
/// one shared factorization; columns are solved under `exec`.
pub fn green(g: &Graph, cluster: &GrowthCluster, exec: Execution) -> Result<GreenKernel> {
    let lap = laplacian(g, cluster)?;
    green_from_laplacian(g, cluster, &lap, exec)
}

pub fn green_from_laplacian(
    g: &Graph,
    cluster: &GrowthCluster,
    lap: &LaplacianMatrix,
    exec: Execution,
) -> Result<GreenKernel> {
    let d = cluster.len();
    let solver = Solver::new(&lap.matrix)?;
    let columns = exec.map_indexed(d, |j| {
        let mut e = vec![0.0; d];
        e[j] = 1.0;
        solver.solve(&e)
    });
    Ok(GreenKernel {
        n: cluster.n,
        normalized: Matrix::from_columns(d, &columns),
        pi: cluster.vertices().iter().map(|&x| g.pi(x)).collect(),
    })
}

/// `P_n(x, ξ)`, rows over `Γ_n` (local order), columns over `γ_n`.
#[derive(Debug, Clone)]
pub struct PoissonKernel {
    pub n: usize,
    pub matrix: Matrix,
}

/// Harmonic-extension weights from `layer` into `vertices`: column `ξ` equals
/// `δ_ξ` on the layer and is discrete-harmonic on `vertices \ layer`, with
/// zero values off `vertices`. Rows follow `vertices`, columns follow `layer`.
pub fn poisson_kernel(g: &Graph, vertices: &[usize], layer: &[usize]) -> Result<Matrix> {
    let mut in_layer = vec![None; g.n_vertices()];
    for (k, &x) in layer.iter().enumerate() {
        in_layer[x] = Some(k);
    }
    let mut in_set = vec![false; g.n_vertices()];
    for &x in vertices {
        in_set[x] = true;
    }
    if let Some(&x) = layer.iter().find(|&&x| !in_set[x]) {
        return Err(Error::InvalidArgument(format!(
            "layer vertex `{}` is outside the cluster",
            g.id(x)
        )));
    }
    let interior: Vec<usize> = vertices
        .iter()
        .copied()
        .filter(|&x| in_layer[x].is_none())
        .collect();

    // Interior rows: Δ_U' u = (coupling to the pinned layer vertex).
    let mut interior_values = Matrix::zeros(interior.len(), layer.len());
    if !interior.is_empty() {
        let solver = Solver::new(&laplacian_on(g, &interior))?;
        for (k, _) in layer.iter().enumerate() {
            let rhs: Vec<f64> = interior
                .iter()
                .map(|&x| {
                    g.neighbors(x)
                        .filter(|&(y, _)| in_layer[y] == Some(k))
                        .map(|(_, c)| c)
                        .sum()
                })
                .collect();
            for (i, v) in solver.solve(&rhs).into_iter().enumerate() {
                interior_values[(i, k)] = v;
            }
        }
    }

    let mut out = Matrix::zeros(vertices.len(), layer.len());
    let mut next_interior = 0;
    for (i, &x) in vertices.iter().enumerate() {
        match in_layer[x] {
            Some(k) => out[(i, k)] = 1.0,
            None => {
                for k in 0..layer.len() {
                    out[(i, k)] = interior_values[(next_interior, k)];
                }
                next_interior += 1;
            }
        }
    }
    Ok(out)
}

/// Poisson kernel of `Γ_n` from its newest layer `γ_n`.
pub fn poisson(g: &Graph, cluster: &GrowthCluster) -> Result<PoissonKernel> {
    Ok(PoissonKernel {
        n: cluster.n,
        matrix: poisson_kernel(g, cluster.vertices(), cluster.top_layer())?,
    })
}

/// Largest `|Σ_y c(x, y)(u(x) - u(y))|` over local rows `rows` of a function
/// `u` given on the cluster in local order (zero elsewhere).
pub fn harmonic_residual(
    g: &Graph,
    cluster: &GrowthCluster,
    u: &[f64],
    rows: std::ops::Range<usize>,
) -> f64 {
    let value = |y: usize| cluster.local(y).map_or(0.0, |j| u[j]);
    rows.map(|i| {
        let x = cluster.vertices()[i];
        g.neighbors(x)
            .map(|(y, c)| c * (u[i] - value(y)))
            .sum::<f64>()
            .abs()
    })
    .fold(0.0, f64::max)
}

#[derive(Debug, Clone)]
pub struct BoundaryGreen {
    pub n: usize,
    pub matrix: SymMatrix,
}

/// `G̃_n` restricted to `γ_n × γ_n` (upper triangle mirrored), checked to be
/// positive definite through its spectrum.
pub fn boundary_green(k: &GreenKernel, cluster: &GrowthCluster) -> Result<BoundaryGreen> {
    let top = cluster.top_range();
    let block = k.normalized.submatrix(top.clone(), top);
    let matrix = SymMatrix::from_upper(&block);
    let eig = jacobi_eigen(&matrix)?;
    if let Some((row, &l)) = eig
        .eigenvalues
        .iter()
        .enumerate()
        .find(|(_, &l)| l.is_nan() || l <= 0.0)
    {
        return Err(Error::NotPD { row, pivot: l });
    }
    Ok(BoundaryGreen { n: k.n, matrix })
}

/// All field operators of one growth cluster.
#[derive(Debug, Clone)]
pub struct ClusterOperators {
    pub cluster: GrowthCluster,
    pub laplacian: LaplacianMatrix,
    pub green: GreenKernel,
    pub poisson: PoissonKernel,
    pub boundary_green: BoundaryGreen,
}

impl ClusterOperators {
    pub fn build(g: &Graph, f: &Foliation, n: usize, exec: Execution) -> Result<Self> {
        let cluster = f.cluster(n)?;
        let laplacian = laplacian(g, &cluster)?;
        let green = green_from_laplacian(g, &cluster, &laplacian, exec)?;
        let poisson = poisson(g, &cluster)?;
        let boundary_green = boundary_green(&green, &cluster)?;
        Ok(Self {
            cluster,
            laplacian,
            green,
            poisson,
            boundary_green,
        })
    }

    pub fn n(&self) -> usize {
        self.cluster.n
    }

    pub fn dim(&self) -> usize {
        self.cluster.len()
    }

    /// Right and left inverse residuals `‖Δ G̃ - I‖`, `‖G̃ Δ - I‖` (max norm).
    pub fn inverse_residual(&self) -> Residual {
        let id = Matrix::identity(self.dim());
        let right = self.laplacian.matrix.matmul(&self.green.normalized);
        let left = self.green.normalized.matmul(&self.laplacian.matrix);
        Residual::new(right.max_abs_diff(&id).max(left.max_abs_diff(&id)), 1.0)
    }

    /// `max |π(x) G(x, y) - π(y) G(y, x)|` relative to `max |π(x) G(x, y)|`.
    pub fn symmetry_residual(&self) -> Residual {
        let gm = self.green.unnormalized();
        let pi = self.green.pi();
        let weighted = Matrix::from_fn(self.dim(), self.dim(), |i, j| pi[i] * gm[(i, j)]);
        Residual::new(weighted.asymmetry(), weighted.max_abs())
    }

    /// Poisson kernel bound violations: entries outside `[0, 1]`, row sums
    /// outside `(0, 1]`, and departures from `δ` on the layer. Returns the
    /// largest violation (zero when every bound holds) and the smallest row
    /// sum.
    pub fn poisson_bounds(&self, slack: f64) -> (f64, f64) {
        let p = &self.poisson.matrix;
        let top = self.cluster.top_range();
        let mut violation: f64 = 0.0;
        let mut min_row_sum = f64::INFINITY;
        for i in 0..p.rows() {
            let mut sum = 0.0;
            for k in 0..p.cols() {
                let v = p[(i, k)];
                violation = violation.max(-v - slack).max(v - 1.0 - slack);
                if top.contains(&i) {
                    let want = if i - top.start == k { 1.0 } else { 0.0 };
                    violation = violation.max((v - want).abs());
                }
                sum += v;
            }
            min_row_sum = min_row_sum.min(sum);
            violation = violation.max(sum - 1.0 - slack);
            if sum.is_nan() || sum <= 0.0 {
                violation = violation.max(1.0);
            }
        }
        (violation.max(0.0), min_row_sum)
    }

    /// Harmonicity of each Poisson column on `Γ_{n-1}`, relative to `max π`.
    pub fn poisson_harmonic_residual(&self, g: &Graph) -> Residual {
        let interior = 0..self.cluster.top_range().start;
        let abs = (0..self.poisson.matrix.cols())
            .map(|k| {
                harmonic_residual(
                    g,
                    &self.cluster,
                    &self.poisson.matrix.column(k),
                    interior.clone(),
                )
            })
            .fold(0.0, f64::max);
        let scale = self.green.pi().iter().fold(1.0f64, |m, &p| m.max(p));
        Residual::new(abs, scale)
    }
}

/// Residual of `G_n - G_{n-1} = Σ_ξ P_n(·, ξ) G_n(ξ, ·)` over `Γ_n × Γ_n`,
/// relative to `max |G_n|`, together with the most negative entry of
/// `G_n - G_{n-1}` (monotonicity).
pub fn green_variation(current: &ClusterOperators, previous: &ClusterOperators) -> (Residual, f64) {
    let d = current.dim();
    let dp = previous.dim();
    let top = current.cluster.top_range();
    let gn = current.green.unnormalized();
    let gp = previous.green.unnormalized();
    let p = &current.poisson.matrix;
    let mut worst: f64 = 0.0;
    let mut min_increase = f64::INFINITY;
    for i in 0..d {
        for j in 0..d {
            let prev = if i < dp && j < dp { gp[(i, j)] } else { 0.0 };
            let lhs = gn[(i, j)] - prev;
            let rhs: f64 = top
                .clone()
                .enumerate()
                .map(|(k, xi)| p[(i, k)] * gn[(xi, j)])
                .sum();
            worst = worst.max((lhs - rhs).abs());
            min_increase = min_increase.min(lhs);
        }
    }
    (Residual::new(worst, gn.max_abs()), min_increase)
}

/// Build the operators for `Γ_{n-1}` and `Γ_n` and return the variation
/// residual.
pub fn verify_green_variation(g: &Graph, f: &Foliation, n: usize) -> Result<Residual> {
    if n == 0 {
        return Err(Error::InvalidArgument(
            "the variation identity needs n >= 1".into(),
        ));
    }
    let current = ClusterOperators::build(g, f, n, Execution::Sequential)?;
    let previous = ClusterOperators::build(g, f, n - 1, Execution::Sequential)?;
    Ok(green_variation(&current, &previous).0)
}

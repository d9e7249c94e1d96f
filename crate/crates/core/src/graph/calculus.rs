use super::{EdgeField, Graph, VertexVector};

/// Weighted coboundary: `d f(x, y) = sqrt(c(x, y)) (f(x) - f(y))`.
pub fn coboundary(g: &Graph, f: &VertexVector) -> EdgeField {
    EdgeField(
        g.edges()
            .iter()
            .map(|e| e.conductance().sqrt() * (f[e.u] - f[e.v]))
            .collect(),
    )
}

/// Weighted boundary, the adjoint of [`coboundary`]:
/// `d* phi(x) = sum over edges leaving x of sqrt(c) phi(x, y)`.
pub fn boundary_adjoint(g: &Graph, phi: &EdgeField) -> VertexVector {
    let mut out = VertexVector::zeros(g);
    for (k, e) in g.edges().iter().enumerate() {
        let w = e.conductance().sqrt() * phi.0[k];
        out.0[e.u] += w;
        out.0[e.v] -= w;
    }
    out
}

/// Dirichlet inner product `<d f, d g>` over the edges touching `domain`.
pub fn dirichlet_inner(g: &Graph, f: &VertexVector, h: &VertexVector, domain: &[usize]) -> f64 {
    let mut inside = vec![false; g.n_vertices()];
    for &x in domain {
        inside[x] = true;
    }
    g.edges()
        .iter()
        .filter(|e| inside[e.u] || inside[e.v])
        .map(|e| e.conductance() * (f[e.u] - f[e.v]) * (h[e.u] - h[e.v]))
        .sum()
}

/// Dirichlet energy over the whole graph.
pub fn dirichlet_energy(g: &Graph, f: &VertexVector) -> f64 {
    g.edges()
        .iter()
        .map(|e| e.conductance() * (f[e.u] - f[e.v]).powi(2))
        .sum()
}

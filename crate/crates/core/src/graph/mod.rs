//! Weighted graphs with symmetric positive conductances.
//!
//! Vertices carry string ids; internally they are indexed `0..n` in the order
//! fixed at construction. Each unordered edge is stored once, so edge fields
//! are antisymmetric by construction.

mod calculus;
mod parse;

use std::collections::{HashMap, VecDeque};

use crate::error::{Error, Result};

pub use calculus::{boundary_adjoint, coboundary, dirichlet_energy, dirichlet_inner};
pub use parse::Format;

#[derive(Debug, Clone, PartialEq)]
pub struct Edge {
    pub u: usize,
    pub v: usize,
    c_uv: f64,
    c_vu: f64,
}

impl Edge {
    /// Conductance of the edge. For validated graphs both orientations agree.
    pub fn conductance(&self) -> f64 {
        self.c_uv
    }

    /// Conductance as seen from `from` (one of the endpoints).
    pub fn conductance_from(&self, from: usize) -> f64 {
        if from == self.u {
            self.c_uv
        } else {
            self.c_vu
        }
    }

    pub fn other(&self, x: usize) -> usize {
        if x == self.u {
            self.v
        } else {
            self.u
        }
    }
}

#[derive(Debug, Clone)]
pub struct Graph {
    ids: Vec<String>,
    index: HashMap<String, usize>,
    exterior: Vec<bool>,
    edges: Vec<Edge>,
    /// `(neighbor, edge index)` per vertex, in edge insertion order.
    adjacency: Vec<Vec<(usize, usize)>>,
    pi: Vec<f64>,
}

fn valid_id(id: &str) -> bool {
    !id.is_empty() && !id.chars().any(char::is_whitespace)
}

impl Graph {
    /// Build and validate a graph from vertex ids, exterior ids and
    /// `(u, v, c)` edges. Repeated edges are merged if their conductances agree.
    pub fn new<S: AsRef<str>>(
        vertices: &[S],
        exterior: &[S],
        edges: &[(S, S, f64)],
    ) -> Result<Self> {
        let g = Self::assemble(vertices, exterior, edges, true)?;
        g.check_connected()?;
        Ok(g)
    }

    /// Build a graph without conductance or connectivity validation.
    ///
    /// Only meant for negative-control fixtures that must bypass validation.
    #[doc(hidden)]
    pub fn new_unchecked<S: AsRef<str>>(
        vertices: &[S],
        exterior: &[S],
        edges: &[(S, S, f64)],
    ) -> Result<Self> {
        Self::assemble(vertices, exterior, edges, false)
    }

    /// Override the conductance used from `x` towards `y` only, breaking the
    /// symmetry of the edge. Negative-control hook.
    #[doc(hidden)]
    pub fn with_one_sided_conductance(mut self, x: &str, y: &str, c: f64) -> Result<Self> {
        let xi = self.index_of(x)?;
        let yi = self.index_of(y)?;
        let e = self
            .edge_between(xi, yi)
            .ok_or_else(|| Error::UnknownVertex(format!("{x}-{y}")))?;
        let edge = &mut self.edges[e];
        if edge.u == xi {
            edge.c_uv = c;
        } else {
            edge.c_vu = c;
        }
        self.recompute_pi();
        Ok(self)
    }

    fn assemble<S: AsRef<str>>(
        vertices: &[S],
        exterior: &[S],
        edges: &[(S, S, f64)],
        validate: bool,
    ) -> Result<Self> {
        if vertices.is_empty() {
            return Err(Error::EmptyGraph);
        }
        let mut ids = Vec::with_capacity(vertices.len());
        let mut index = HashMap::with_capacity(vertices.len());
        for v in vertices {
            let v = v.as_ref();
            if !valid_id(v) {
                return Err(Error::InvalidVertexId(v.to_string()));
            }
            if index.insert(v.to_string(), ids.len()).is_some() {
                return Err(Error::DuplicateVertex(v.to_string()));
            }
            ids.push(v.to_string());
        }
        let n = ids.len();
        let lookup = |s: &str| {
            index
                .get(s)
                .copied()
                .ok_or_else(|| Error::UnknownVertex(s.to_string()))
        };

        let mut ext = vec![false; n];
        for x in exterior {
            ext[lookup(x.as_ref())?] = true;
        }

        let mut stored: Vec<Edge> = Vec::with_capacity(edges.len());
        let mut seen: HashMap<(usize, usize), usize> = HashMap::new();
        for (a, b, c) in edges {
            let (a, b, c) = (a.as_ref(), b.as_ref(), *c);
            let u = lookup(a)?;
            let v = lookup(b)?;
            if u == v {
                return Err(Error::SelfLoop(a.to_string()));
            }
            if validate && !(c.is_finite() && c > 0.0) {
                return Err(Error::NonPositiveConductance {
                    u: a.to_string(),
                    v: b.to_string(),
                    c,
                });
            }
            let key = (u.min(v), u.max(v));
            match seen.get(&key) {
                Some(&e) => {
                    let first = stored[e].c_uv;
                    if first != c {
                        return Err(Error::ConflictingEdge {
                            u: a.to_string(),
                            v: b.to_string(),
                            first,
                            second: c,
                        });
                    }
                }
                None => {
                    seen.insert(key, stored.len());
                    stored.push(Edge {
                        u,
                        v,
                        c_uv: c,
                        c_vu: c,
                    });
                }
            }
        }

        let mut adjacency = vec![Vec::new(); n];
        for (k, e) in stored.iter().enumerate() {
            adjacency[e.u].push((e.v, k));
            adjacency[e.v].push((e.u, k));
        }
        let mut g = Graph {
            ids,
            index,
            exterior: ext,
            edges: stored,
            adjacency,
            pi: vec![0.0; n],
        };
        g.recompute_pi();
        Ok(g)
    }

    fn recompute_pi(&mut self) {
        for x in 0..self.ids.len() {
            self.pi[x] = self.adjacency[x]
                .iter()
                .map(|&(_, e)| self.edges[e].conductance_from(x))
                .sum();
        }
    }

    fn check_connected(&self) -> Result<()> {
        let n = self.ids.len();
        let mut seen = vec![false; n];
        let mut queue = VecDeque::from([0usize]);
        seen[0] = true;
        while let Some(x) = queue.pop_front() {
            for &(y, _) in &self.adjacency[x] {
                if !seen[y] {
                    seen[y] = true;
                    queue.push_back(y);
                }
            }
        }
        match seen.iter().position(|s| !s) {
            Some(x) => Err(Error::Disconnected(self.ids[x].clone())),
            None => Ok(()),
        }
    }

    pub fn n_vertices(&self) -> usize {
        self.ids.len()
    }

    pub fn n_edges(&self) -> usize {
        self.edges.len()
    }

    pub fn ids(&self) -> &[String] {
        &self.ids
    }

    pub fn id(&self, x: usize) -> &str {
        &self.ids[x]
    }

    pub fn index_of(&self, id: &str) -> Result<usize> {
        self.index
            .get(id)
            .copied()
            .ok_or_else(|| Error::UnknownVertex(id.to_string()))
    }

    pub fn is_exterior(&self, x: usize) -> bool {
        self.exterior[x]
    }

    pub fn exterior(&self) -> Vec<usize> {
        (0..self.n_vertices())
            .filter(|&x| self.exterior[x])
            .collect()
    }

    pub fn interior(&self) -> Vec<usize> {
        (0..self.n_vertices())
            .filter(|&x| !self.exterior[x])
            .collect()
    }

    pub fn edges(&self) -> &[Edge] {
        &self.edges
    }

    /// Stationary weight: total conductance at `x`.
    pub fn pi(&self, x: usize) -> f64 {
        self.pi[x]
    }

    pub fn pis(&self) -> &[f64] {
        &self.pi
    }

    /// `(neighbor, conductance from x)` pairs.
    pub fn neighbors(&self, x: usize) -> impl Iterator<Item = (usize, f64)> + '_ {
        self.adjacency[x]
            .iter()
            .map(move |&(y, e)| (y, self.edges[e].conductance_from(x)))
    }

    pub fn degree(&self, x: usize) -> usize {
        self.adjacency[x].len()
    }

    pub fn edge_between(&self, x: usize, y: usize) -> Option<usize> {
        self.adjacency[x]
            .iter()
            .find(|&&(z, _)| z == y)
            .map(|&(_, e)| e)
    }

    pub fn conductance(&self, x: usize, y: usize) -> Option<f64> {
        self.edge_between(x, y)
            .map(|e| self.edges[e].conductance_from(x))
    }

    pub fn parse(input: &[u8], format: Format) -> Result<Self> {
        parse::parse(input, format, true)
    }

    pub fn from_edgelist(text: &str) -> Result<Self> {
        parse::parse_edgelist(text, true)
    }

    pub fn from_json(text: &str) -> Result<Self> {
        parse::parse_json(text, true)
    }

    pub fn from_path(path: &std::path::Path) -> Result<Self> {
        let bytes = std::fs::read(path)?;
        parse::parse(&bytes, Format::from_path(path), true)
    }

    /// Read a graph skipping conductance and connectivity validation, for
    /// negative controls.
    #[doc(hidden)]
    pub fn from_path_unchecked(path: &std::path::Path) -> Result<Self> {
        let bytes = std::fs::read(path)?;
        parse::parse(&bytes, Format::from_path(path), false)
    }

    pub fn to_json(&self) -> serde_json::Value {
        parse::to_json(self)
    }
}

/// Real function on the vertices, stored densely in graph index order.
#[derive(Debug, Clone, PartialEq)]
pub struct VertexVector(pub Vec<f64>);

impl VertexVector {
    pub fn zeros(g: &Graph) -> Self {
        Self(vec![0.0; g.n_vertices()])
    }

    pub fn delta(g: &Graph, x: usize) -> Self {
        let mut v = Self::zeros(g);
        v.0[x] = 1.0;
        v
    }

    pub fn constant(g: &Graph, c: f64) -> Self {
        Self(vec![c; g.n_vertices()])
    }

    pub fn dot(&self, other: &Self) -> f64 {
        self.0.iter().zip(&other.0).map(|(a, b)| a * b).sum()
    }

    /// Inner product restricted to the vertex set `domain`.
    pub fn dot_on(&self, other: &Self, domain: &[usize]) -> f64 {
        domain.iter().map(|&x| self.0[x] * other.0[x]).sum()
    }

    /// Vertices with a nonzero value.
    pub fn support(&self) -> Vec<usize> {
        (0..self.0.len()).filter(|&x| self.0[x] != 0.0).collect()
    }
}

impl std::ops::Index<usize> for VertexVector {
    type Output = f64;
    fn index(&self, x: usize) -> &f64 {
        &self.0[x]
    }
}

/// Antisymmetric function on oriented edges: one value per stored edge,
/// read in the stored `u -> v` orientation.
#[derive(Debug, Clone, PartialEq)]
pub struct EdgeField(pub Vec<f64>);

impl EdgeField {
    pub fn zeros(g: &Graph) -> Self {
        Self(vec![0.0; g.n_edges()])
    }

    /// Value on the oriented edge `x -> y`; zero if they are not adjacent.
    pub fn get(&self, g: &Graph, x: usize, y: usize) -> f64 {
        match g.edge_between(x, y) {
            Some(e) if g.edges()[e].u == x => self.0[e],
            Some(e) => -self.0[e],
            None => 0.0,
        }
    }

    /// Single-orientation inner product over unordered edges.
    pub fn dot(&self, other: &Self) -> f64 {
        self.0.iter().zip(&other.0).map(|(a, b)| a * b).sum()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn p4() -> Graph {
        Graph::new(
            &["v0", "v1", "v2", "v3"],
            &["v0", "v3"],
            &[("v0", "v1", 1.0), ("v1", "v2", 1.0), ("v2", "v3", 1.0)],
        )
        .unwrap()
    }

    #[test]
    fn pi_is_total_conductance() {
        let g = p4();
        assert_eq!(g.pi(0), 1.0);
        assert_eq!(g.pi(1), 2.0);
        assert_eq!(g.exterior(), vec![0, 3]);
        assert_eq!(g.interior(), vec![1, 2]);
    }

    #[test]
    fn validation_errors() {
        let dup = Graph::new(&["a", "a"], &[], &[]);
        assert!(matches!(dup, Err(Error::DuplicateVertex(_))));
        let lp = Graph::new(&["a", "b"], &[], &[("a", "a", 1.0), ("a", "b", 1.0)]);
        assert!(matches!(lp, Err(Error::SelfLoop(_))));
        let zero = Graph::new(&["a", "b"], &[], &[("a", "b", 0.0)]);
        assert!(matches!(zero, Err(Error::NonPositiveConductance { .. })));
        let nan = Graph::new(&["a", "b"], &[], &[("a", "b", f64::NAN)]);
        assert!(matches!(nan, Err(Error::NonPositiveConductance { .. })));
        let conflict = Graph::new(&["a", "b"], &[], &[("a", "b", 1.0), ("b", "a", 2.0)]);
        assert!(matches!(conflict, Err(Error::ConflictingEdge { .. })));
        let unknown = Graph::new(&["a", "b"], &["z"], &[("a", "b", 1.0)]);
        assert!(matches!(unknown, Err(Error::UnknownVertex(_))));
        let bad_id = Graph::new(&["a b"], &[], &[]);
        assert!(matches!(bad_id, Err(Error::InvalidVertexId(_))));
    }

    #[test]
    fn repeated_edge_with_same_conductance_is_merged() {
        let g = Graph::new(&["a", "b"], &[], &[("a", "b", 2.0), ("b", "a", 2.0)]).unwrap();
        assert_eq!(g.n_edges(), 1);
        assert_eq!(g.pi(0), 2.0);
    }

    #[test]
    fn one_sided_override_breaks_symmetry() {
        let g = p4().with_one_sided_conductance("v1", "v2", 3.0).unwrap();
        assert_eq!(g.conductance(1, 2), Some(3.0));
        assert_eq!(g.conductance(2, 1), Some(1.0));
        assert_eq!(g.pi(1), 4.0);
        assert_eq!(g.pi(2), 2.0);
    }

    #[test]
    fn edge_field_is_antisymmetric() {
        let g = p4();
        let mut phi = EdgeField::zeros(&g);
        phi.0[1] = 0.5;
        assert_eq!(phi.get(&g, 1, 2), 0.5);
        assert_eq!(phi.get(&g, 2, 1), -0.5);
        assert_eq!(phi.get(&g, 0, 2), 0.0);
    }
}

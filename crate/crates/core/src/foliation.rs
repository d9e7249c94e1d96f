//! Discrete foliations: ordered, pairwise disjoint, nonempty layers covering
//! the interior `V \ exterior`, with edges only between equal or adjacent
//! layers. Exterior vertices may neighbor any layer.

use std::collections::VecDeque;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::graph::Graph;

#[derive(Debug, Clone, PartialEq)]
pub struct Foliation {
    layers: Vec<Vec<usize>>,
    layer_of: Vec<Option<usize>>,
}

/// `Γ_n`: the union of layers `0..=n`, ordered by layer and then by vertex
/// index. The ordering of `Γ_m` is a prefix of the ordering of `Γ_n` for
/// `m <= n`.
#[derive(Debug, Clone, PartialEq)]
pub struct GrowthCluster {
    pub n: usize,
    vertices: Vec<usize>,
    /// `offsets[k]..offsets[k + 1]` is layer `k` within `vertices`.
    offsets: Vec<usize>,
    local: Vec<Option<usize>>,
}

impl GrowthCluster {
    pub fn vertices(&self) -> &[usize] {
        &self.vertices
    }

    pub fn len(&self) -> usize {
        self.vertices.len()
    }

    pub fn is_empty(&self) -> bool {
        self.vertices.is_empty()
    }

    /// Local position of graph vertex `x`, if it belongs to the cluster.
    pub fn local(&self, x: usize) -> Option<usize> {
        self.local[x]
    }

    pub fn contains(&self, x: usize) -> bool {
        self.local[x].is_some()
    }

    /// Local index range of layer `k <= n`.
    pub fn layer_range(&self, k: usize) -> std::ops::Range<usize> {
        self.offsets[k]..self.offsets[k + 1]
    }

    /// Local index range of the newest layer `γ_n`.
    pub fn top_range(&self) -> std::ops::Range<usize> {
        self.layer_range(self.n)
    }

    /// Graph vertices of the newest layer.
    pub fn top_layer(&self) -> &[usize] {
        &self.vertices[self.top_range()]
    }

    /// Induced edges as pairs of local indices.
    pub fn induced_edges(&self, g: &Graph) -> Vec<(usize, usize)> {
        g.edges()
            .iter()
            .filter_map(|e| Some((self.local[e.u]?, self.local[e.v]?)))
            .collect()
    }
}

#[derive(Debug, Serialize, Deserialize)]
struct FoliationDoc {
    layers: Vec<Vec<String>>,
}

impl Foliation {
    /// Check every foliation axiom and return the validated foliation.
    pub fn validate<S: AsRef<str>>(g: &Graph, layers: &[Vec<S>]) -> Result<Self> {
        if g.exterior().is_empty() {
            return Err(Error::NoExterior);
        }
        let indexed = Self::index_layers(g, layers)?;
        Self::validate_indices(g, indexed)
    }

    pub fn validate_indices(g: &Graph, layers: Vec<Vec<usize>>) -> Result<Self> {
        if g.exterior().is_empty() {
            return Err(Error::NoExterior);
        }
        if let Some(k) = layers.iter().position(Vec::is_empty) {
            return Err(Error::EmptyLayer(k));
        }
        let mut layer_of: Vec<Option<usize>> = vec![None; g.n_vertices()];
        for (k, layer) in layers.iter().enumerate() {
            for &x in layer {
                if g.is_exterior(x) {
                    return Err(Error::OverlappingLayers {
                        vertex: g.id(x).to_string(),
                        first: "the exterior".into(),
                        second: format!("layer {k}"),
                    });
                }
                if let Some(j) = layer_of[x] {
                    return Err(Error::OverlappingLayers {
                        vertex: g.id(x).to_string(),
                        first: format!("layer {j}"),
                        second: format!("layer {k}"),
                    });
                }
                layer_of[x] = Some(k);
            }
        }
        if let Some(x) = (0..g.n_vertices()).find(|&x| !g.is_exterior(x) && layer_of[x].is_none()) {
            return Err(Error::CoverageViolation(g.id(x).to_string()));
        }
        for e in g.edges() {
            if let (Some(a), Some(b)) = (layer_of[e.u], layer_of[e.v]) {
                if a.abs_diff(b) > 1 {
                    return Err(Error::LocalityViolation {
                        u: g.id(e.u).to_string(),
                        v: g.id(e.v).to_string(),
                        layer_u: a,
                        layer_v: b,
                    });
                }
            }
        }
        let f = Self::from_sorted(layers, layer_of);
        f.check_grounded(g)?;
        Ok(f)
    }

    /// Accept layers without checking any axiom. Negative-control hook.
    #[doc(hidden)]
    pub fn new_unchecked<S: AsRef<str>>(g: &Graph, layers: &[Vec<S>]) -> Result<Self> {
        let indexed = Self::index_layers(g, layers)?;
        let mut layer_of = vec![None; g.n_vertices()];
        for (k, layer) in indexed.iter().enumerate() {
            for &x in layer {
                layer_of[x] = Some(k);
            }
        }
        Ok(Self::from_sorted(indexed, layer_of))
    }

    fn index_layers<S: AsRef<str>>(g: &Graph, layers: &[Vec<S>]) -> Result<Vec<Vec<usize>>> {
        layers
            .iter()
            .map(|layer| layer.iter().map(|id| g.index_of(id.as_ref())).collect())
            .collect()
    }

    fn from_sorted(mut layers: Vec<Vec<usize>>, layer_of: Vec<Option<usize>>) -> Self {
        for layer in &mut layers {
            layer.sort_unstable();
            layer.dedup();
        }
        Self { layers, layer_of }
    }

    /// Every component of every growth cluster must have an edge leaving it.
    fn check_grounded(&self, g: &Graph) -> Result<()> {
        for n in 0..self.layers.len() {
            let cluster = self.cluster(n)?;
            let mut seen = vec![false; g.n_vertices()];
            for &start in cluster.vertices() {
                if seen[start] {
                    continue;
                }
                seen[start] = true;
                let mut grounded = false;
                let mut queue = VecDeque::from([start]);
                while let Some(x) = queue.pop_front() {
                    for (y, _) in g.neighbors(x) {
                        if !cluster.contains(y) {
                            grounded = true;
                        } else if !seen[y] {
                            seen[y] = true;
                            queue.push_back(y);
                        }
                    }
                }
                if !grounded {
                    return Err(Error::ExteriorUnreachable(n));
                }
            }
        }
        Ok(())
    }

    /// Layer `n` = interior vertices at graph distance `n` from `roots`,
    /// where paths never pass through the exterior.
    pub fn bfs<S: AsRef<str>>(g: &Graph, roots: &[S]) -> Result<Self> {
        if roots.is_empty() {
            return Err(Error::InvalidArgument("no BFS roots given".into()));
        }
        let mut dist: Vec<Option<usize>> = vec![None; g.n_vertices()];
        let mut queue = VecDeque::new();
        for r in roots {
            let x = g.index_of(r.as_ref())?;
            if g.is_exterior(x) {
                return Err(Error::RootsInExterior(r.as_ref().to_string()));
            }
            if dist[x].is_none() {
                dist[x] = Some(0);
                queue.push_back(x);
            }
        }
        while let Some(x) = queue.pop_front() {
            let d = dist[x].expect("queued vertices have a distance");
            for (y, _) in g.neighbors(x) {
                if !g.is_exterior(y) && dist[y].is_none() {
                    dist[y] = Some(d + 1);
                    queue.push_back(y);
                }
            }
        }
        if let Some(x) = (0..g.n_vertices()).find(|&x| !g.is_exterior(x) && dist[x].is_none()) {
            return Err(Error::CoverageViolation(g.id(x).to_string()));
        }
        let depth = dist.iter().flatten().copied().max().unwrap_or(0);
        let mut layers = vec![Vec::new(); depth + 1];
        for (x, d) in dist.iter().enumerate() {
            if let Some(d) = d {
                layers[*d].push(x);
            }
        }
        Self::validate_indices(g, layers)
    }

    pub fn from_json(g: &Graph, text: &str) -> Result<Self> {
        let doc: FoliationDoc = serde_json::from_str(text)?;
        Self::validate(g, &doc.layers)
    }

    pub fn from_path(g: &Graph, path: &std::path::Path) -> Result<Self> {
        Self::from_json(g, &std::fs::read_to_string(path)?)
    }

    /// Read layers without checking any axiom. Negative-control hook.
    #[doc(hidden)]
    pub fn from_path_unchecked(g: &Graph, path: &std::path::Path) -> Result<Self> {
        let doc: FoliationDoc = serde_json::from_str(&std::fs::read_to_string(path)?)?;
        Self::new_unchecked(g, &doc.layers)
    }

    pub fn to_json(&self, g: &Graph) -> serde_json::Value {
        let doc = FoliationDoc {
            layers: self
                .layers
                .iter()
                .map(|l| l.iter().map(|&x| g.id(x).to_string()).collect())
                .collect(),
        };
        serde_json::to_value(doc).expect("foliation serializes")
    }

    /// Index `N` of the last layer.
    pub fn depth(&self) -> usize {
        self.layers.len() - 1
    }

    pub fn n_layers(&self) -> usize {
        self.layers.len()
    }

    pub fn layers(&self) -> &[Vec<usize>] {
        &self.layers
    }

    pub fn layer(&self, n: usize) -> &[usize] {
        &self.layers[n]
    }

    /// Layer index `t(x)`, or `None` for exterior vertices.
    pub fn layer_of(&self, x: usize) -> Option<usize> {
        self.layer_of[x]
    }

    pub fn cluster(&self, n: usize) -> Result<GrowthCluster> {
        if n >= self.layers.len() {
            return Err(Error::IndexOutOfRange {
                index: n,
                max: self.layers.len().saturating_sub(1),
            });
        }
        let mut vertices = Vec::new();
        let mut offsets = vec![0];
        for layer in &self.layers[..=n] {
            vertices.extend_from_slice(layer);
            offsets.push(vertices.len());
        }
        let mut local = vec![None; self.layer_of.len()];
        for (i, &x) in vertices.iter().enumerate() {
            local[x] = Some(i);
        }
        Ok(GrowthCluster {
            n,
            vertices,
            offsets,
            local,
        })
    }

    pub fn clusters(&self) -> Vec<GrowthCluster> {
        (0..self.layers.len())
            .map(|n| self.cluster(n).expect("index in range"))
            .collect()
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fixtures;

    fn path(n: usize, exterior: &[&str]) -> Graph {
        let ids: Vec<String> = (0..n).map(|i| format!("v{i}")).collect();
        let edges: Vec<(String, String, f64)> = (1..n)
            .map(|i| (ids[i - 1].clone(), ids[i].clone(), 1.0))
            .collect();
        let ext: Vec<String> = exterior.iter().map(|s| s.to_string()).collect();
        Graph::new(&ids, &ext, &edges).unwrap()
    }

    fn names(g: &Graph, f: &Foliation) -> Vec<Vec<String>> {
        f.layers()
            .iter()
            .map(|l| l.iter().map(|&x| g.id(x).to_string()).collect())
            .collect()
    }

    #[test]
    fn p5_two_sided_layering_is_valid() {
        let g = path(5, &["v0", "v4"]);
        let f = Foliation::validate(&g, &[vec!["v1", "v3"], vec!["v2"]]).unwrap();
        assert_eq!(f.depth(), 1);
        assert_eq!(f.layer_of(g.index_of("v2").unwrap()), Some(1));
        assert_eq!(f.layer_of(0), None);
    }

    #[test]
    fn validation_errors() {
        let g = path(5, &["v4"]);
        let e = Foliation::validate(&g, &[vec!["v1"], vec!["v2"], vec!["v3"]]);
        assert!(matches!(e, Err(Error::CoverageViolation(v)) if v == "v0"));

        let g = path(5, &["v0", "v4"]);
        let e = Foliation::validate(&g, &[vec!["v1"], vec!["v3"]]);
        assert!(matches!(e, Err(Error::CoverageViolation(v)) if v == "v2"));

        let e = Foliation::validate(&g, &[vec!["v1"], vec!["v3"], vec!["v2"]]);
        assert!(matches!(e, Err(Error::LocalityViolation { .. })));

        let e = Foliation::validate(&g, &[vec!["v1", "v2"], vec!["v2", "v3"]]);
        assert!(matches!(e, Err(Error::OverlappingLayers { .. })));

        let e = Foliation::validate(&g, &[vec!["v0", "v1", "v2", "v3"]]);
        assert!(matches!(e, Err(Error::OverlappingLayers { .. })));

        let e = Foliation::validate(&g, &[vec!["v1", "v2", "v3"], vec![]]);
        assert!(matches!(e, Err(Error::EmptyLayer(1))));

        let e = Foliation::validate(&g, &[vec!["v1", "v2", "zz"]]);
        assert!(matches!(e, Err(Error::UnknownVertex(_))));

        let closed = path(3, &[]);
        let e = Foliation::validate(&closed, &[vec!["v0", "v1", "v2"]]);
        assert!(matches!(e, Err(Error::NoExterior)));
    }

    #[test]
    fn bfs_on_paths() {
        let g = path(4, &["v0", "v3"]);
        let f = Foliation::bfs(&g, &["v1"]).unwrap();
        assert_eq!(names(&g, &f), vec![vec!["v1"], vec!["v2"]]);

        let e = Foliation::bfs(&g, &["v0"]);
        assert!(matches!(e, Err(Error::RootsInExterior(_))));
    }

    #[test]
    fn bfs_on_grids() {
        let g3 = fixtures::grid(3, 3, |_, _| 1.0);
        let f = Foliation::bfs(&g3, &["g1_1"]).unwrap();
        assert_eq!(names(&g3, &f), vec![vec!["g1_1"]]);

        let g5 = fixtures::grid(5, 5, |_, _| 1.0);
        let f = Foliation::bfs(&g5, &["g2_2"]).unwrap();
        let mut layers = names(&g5, &f);
        for l in &mut layers {
            l.sort();
        }
        assert_eq!(
            layers,
            vec![
                vec!["g2_2"],
                vec!["g1_2", "g2_1", "g2_3", "g3_2"],
                vec!["g1_1", "g1_3", "g3_1", "g3_3"],
            ]
        );
    }

    #[test]
    fn bfs_reports_interior_cut_off_by_exterior() {
        // v2 is exterior and separates v3 from the root.
        let g = path(5, &["v0", "v2", "v4"]);
        let e = Foliation::bfs(&g, &["v1"]);
        assert!(matches!(e, Err(Error::CoverageViolation(v)) if v == "v3"));
    }

    #[test]
    fn clusters_nest() {
        let g = path(4, &["v0", "v3"]);
        let f = Foliation::bfs(&g, &["v1"]).unwrap();
        let c0 = f.cluster(0).unwrap();
        let c1 = f.cluster(1).unwrap();
        assert_eq!(c0.vertices(), f.layer(0));
        assert_eq!(c1.vertices(), &[1, 2]);
        assert_eq!(c1.induced_edges(&g), vec![(0, 1)]);
        assert_eq!(&c1.vertices()[..c0.len()], c0.vertices());
        assert_eq!(c1.top_layer(), &[2]);
        assert!(matches!(
            f.cluster(2),
            Err(Error::IndexOutOfRange { index: 2, max: 1 })
        ));
    }

    #[test]
    fn json_round_trip() {
        let g = path(5, &["v0", "v4"]);
        let f = Foliation::from_json(&g, r#"{"layers":[["v2"],["v1","v3"]]}"#).unwrap();
        let back = Foliation::from_json(&g, &f.to_json(&g).to_string()).unwrap();
        assert_eq!(back, f);
    }
}

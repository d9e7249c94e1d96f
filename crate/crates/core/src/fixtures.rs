//! Reference graphs with foliations: the in-repo fixture files under
//! `fixtures/` plus programmatic grids and weighted variants.

use crate::foliation::Foliation;
use crate::graph::Graph;

#[derive(Debug, Clone)]
pub struct Fixture {
    pub name: &'static str,
    pub graph: Graph,
    pub foliation: Foliation,
}

const P4_EDGES: &str = include_str!("../fixtures/p4.edges");
const P4_FOLIATION: &str = include_str!("../fixtures/p4.foliation.json");
const P5_EDGES: &str = include_str!("../fixtures/p5.edges");
const P5_FOLIATION: &str = include_str!("../fixtures/p5.foliation.json");
const GRID5_JSON: &str = include_str!("../fixtures/grid5.json");
const GRID5_FOLIATION: &str = include_str!("../fixtures/grid5.foliation.json");
const TREE3_EDGES: &str = include_str!("../fixtures/tree3.edges");
const TREE3_FOLIATION: &str = include_str!("../fixtures/tree3.foliation.json");

fn shipped(name: &'static str, graph: &str, json: bool, foliation: &str) -> Fixture {
    let graph = if json {
        Graph::from_json(graph)
    } else {
        Graph::from_edgelist(graph)
    }
    .unwrap_or_else(|e| panic!("fixture {name}: {e}"));
    let foliation =
        Foliation::from_json(&graph, foliation).unwrap_or_else(|e| panic!("fixture {name}: {e}"));
    Fixture {
        name,
        graph,
        foliation,
    }
}

/// Path v0..v3 with unit conductances, exterior {v0, v3}, layers [{v1}, {v2}].
pub fn p4() -> Fixture {
    shipped("p4", P4_EDGES, false, P4_FOLIATION)
}

/// Path v0..v4, exterior {v0, v4}, layers [{v2}, {v1, v3}].
pub fn p5() -> Fixture {
    shipped("p5", P5_EDGES, false, P5_FOLIATION)
}

/// 5×5 grid, outer ring exterior, BFS layers from the center.
pub fn grid5() -> Fixture {
    shipped("grid5", GRID5_JSON, true, GRID5_FOLIATION)
}

/// Binary tree of depth three with grounded leaves and level-dependent
/// conductances.
pub fn tree3() -> Fixture {
    shipped("tree3", TREE3_EDGES, false, TREE3_FOLIATION)
}

/// P4 with conductances 3, 0.5 and 2.
pub fn p4_weighted() -> Fixture {
    let graph = Graph::new(
        &["v0", "v1", "v2", "v3"],
        &["v0", "v3"],
        &[("v0", "v1", 3.0), ("v1", "v2", 0.5), ("v2", "v3", 2.0)],
    )
    .expect("valid graph");
    let foliation = Foliation::bfs(&graph, &["v1"]).expect("valid foliation");
    Fixture {
        name: "p4w",
        graph,
        foliation,
    }
}

/// `rows × cols` grid with ids `g{i}_{j}` and the outer ring as exterior.
/// `conductance` receives the two endpoints of each edge.
pub fn grid(
    rows: usize,
    cols: usize,
    conductance: impl Fn((usize, usize), (usize, usize)) -> f64,
) -> Graph {
    let id = |i: usize, j: usize| format!("g{i}_{j}");
    let mut vertices = Vec::with_capacity(rows * cols);
    let mut exterior = Vec::new();
    let mut edges = Vec::new();
    for i in 0..rows {
        for j in 0..cols {
            vertices.push(id(i, j));
            if i == 0 || j == 0 || i + 1 == rows || j + 1 == cols {
                exterior.push(id(i, j));
            }
            if j + 1 < cols {
                edges.push((id(i, j), id(i, j + 1), conductance((i, j), (i, j + 1))));
            }
            if i + 1 < rows {
                edges.push((id(i, j), id(i + 1, j), conductance((i, j), (i + 1, j))));
            }
        }
    }
    Graph::new(&vertices, &exterior, &edges).expect("grid is a valid graph")
}

/// Odd square grid foliated by BFS from its center.
pub fn centered_grid(
    name: &'static str,
    side: usize,
    conductance: impl Fn((usize, usize), (usize, usize)) -> f64,
) -> Fixture {
    assert!(
        side % 2 == 1 && side >= 3,
        "side must be odd and at least 3"
    );
    let graph = grid(side, side, conductance);
    let mid = side / 2;
    let foliation = Foliation::bfs(&graph, &[format!("g{mid}_{mid}")]).expect("valid foliation");
    Fixture {
        name,
        graph,
        foliation,
    }
}

/// 5×5 grid with conductances between 0.5 and 2.5.
pub fn grid5_weighted() -> Fixture {
    centered_grid("grid5w", 5, |(i, j), (k, l)| {
        0.5 + ((3 * i + 5 * j + 7 * k + 11 * l) % 5) as f64 * 0.5
    })
}

/// 13×13 grid: 121 interior vertices in 11 layers.
pub fn grid13() -> Fixture {
    centered_grid("grid13", 13, |_, _| 1.0)
}

/// The four shipped fixtures.
pub fn shipped_fixtures() -> Vec<Fixture> {
    vec![p4(), p5(), grid5(), tree3()]
}

/// Shipped fixtures plus the weighted variants.
pub fn all() -> Vec<Fixture> {
    let mut v = shipped_fixtures();
    v.push(p4_weighted());
    v.push(grid5_weighted());
    v
}

pub fn by_name(name: &str) -> Option<Fixture> {
    match name {
        "p4" => Some(p4()),
        "p5" => Some(p5()),
        "grid5" => Some(grid5()),
        "tree3" => Some(tree3()),
        "p4w" => Some(p4_weighted()),
        "grid5w" => Some(grid5_weighted()),
        "grid13" => Some(grid13()),
        _ => None,
    }
}

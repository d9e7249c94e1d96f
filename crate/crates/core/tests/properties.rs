//! Invariants on randomly generated weighted graphs.

use dgff::graph::{boundary_adjoint, coboundary, dirichlet_energy};
use dgff::hadamard::{verify_hadamard_identity, verify_isometry};
use dgff::linalg::{jacobi_eigen, psd_sqrt};
use dgff::sampling::{increment_local, layer_noise_extension_local, white_noise_local};
use dgff::{
    EdgeField, Execution, Foliation, GaussianStream, Graph, HadamardFamily, Matrix, SymMatrix,
    VertexVector,
};
use nalgebra::{DMatrix, SymmetricEigen};
use proptest::prelude::*;

/// A connected interior path `a0..a{k-1}` with extra chords, plus exterior
/// vertices each attached to one interior vertex.
#[derive(Debug, Clone)]
struct Spec {
    interior: usize,
    path: Vec<f64>,
    chords: Vec<(usize, usize, f64)>,
    exterior: Vec<(usize, f64)>,
    root: usize,
}

fn spec() -> impl Strategy<Value = Spec> {
    (2usize..9).prop_flat_map(|k| {
        (
            Just(k),
            prop::collection::vec(0.1f64..5.0, k - 1),
            prop::collection::vec((0..k, 0..k, 0.1f64..5.0), 0..6),
            prop::collection::vec((0..k, 0.1f64..5.0), 1..4),
            0..k,
        )
            .prop_map(|(interior, path, chords, exterior, root)| Spec {
                interior,
                path,
                chords,
                exterior,
                root,
            })
    })
}

fn build(s: &Spec) -> Graph {
    let mut vertices: Vec<String> = (0..s.interior).map(|i| format!("a{i}")).collect();
    let exterior: Vec<String> = (0..s.exterior.len()).map(|i| format!("x{i}")).collect();
    vertices.extend(exterior.iter().cloned());
    let mut edges = Vec::new();
    let mut seen = std::collections::HashSet::new();
    let mut add = |u: String, v: String, c: f64| {
        let key = if u < v {
            (u.clone(), v.clone())
        } else {
            (v.clone(), u.clone())
        };
        if u != v && seen.insert(key) {
            edges.push((u, v, c));
        }
    };
    for (i, &c) in s.path.iter().enumerate() {
        add(format!("a{i}"), format!("a{}", i + 1), c);
    }
    for &(u, v, c) in &s.chords {
        add(format!("a{u}"), format!("a{v}"), c);
    }
    for (i, &(u, c)) in s.exterior.iter().enumerate() {
        add(format!("x{i}"), format!("a{u}"), c);
    }
    Graph::new(&vertices, &exterior, &edges).expect("generated graph is valid")
}

fn vector(g: &Graph, seed: u64) -> VertexVector {
    let s = GaussianStream::new(seed);
    VertexVector((0..g.n_vertices()).map(|x| s.normal(x as u64, 0)).collect())
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn coboundary_adjointness(s in spec(), seed in any::<u64>()) {
        let g = build(&s);
        let f = vector(&g, seed);
        let st = GaussianStream::new(seed ^ 1);
        let phi = EdgeField((0..g.n_edges()).map(|e| st.normal(e as u64, 0)).collect());
        let lhs = coboundary(&g, &f).dot(&phi);
        let rhs = f.dot(&boundary_adjoint(&g, &phi));
        prop_assert!((lhs - rhs).abs() <= 1e-10 * (1.0 + lhs.abs()));
        let df = coboundary(&g, &f);
        prop_assert!((df.dot(&df) - dirichlet_energy(&g, &f)).abs() <= 1e-10 * (1.0 + df.dot(&df)));
    }

    #[test]
    fn pi_is_the_sum_of_conductances(s in spec()) {
        let g = build(&s);
        for x in 0..g.n_vertices() {
            let sum: f64 = g.neighbors(x).map(|(_, c)| c).sum();
            prop_assert!((sum - g.pi(x)).abs() <= 1e-12 * sum);
        }
        let back = Graph::from_json(&g.to_json().to_string()).unwrap();
        prop_assert_eq!(back.pis(), g.pis());
    }

    #[test]
    fn bfs_foliations_validate(s in spec()) {
        let g = build(&s);
        let f = Foliation::bfs(&g, &[format!("a{}", s.root)]).unwrap();
        let again = Foliation::validate_indices(&g, f.layers().to_vec()).unwrap();
        prop_assert_eq!(again, f.clone());
        let covered: usize = f.layers().iter().map(Vec::len).sum();
        prop_assert_eq!(covered, s.interior);
    }

    #[test]
    fn hadamard_identities_hold(s in spec(), seed in any::<u64>()) {
        let g = build(&s);
        let f = Foliation::bfs(&g, &[format!("a{}", s.root)]).unwrap();
        let fam = HadamardFamily::build(&g, &f, Execution::Sequential).unwrap();
        for n in 0..=fam.depth() {
            prop_assert!(verify_hadamard_identity(&fam.q[n], fam.green(n)).relative() <= 1e-10);
            prop_assert!(verify_isometry(&fam.q[n], &g, fam.cluster(n)).relative() <= 1e-10);
        }
        prop_assert!(fam.q_stability() <= 1e-12);
        let stream = GaussianStream::new(seed);
        let phi = white_noise_local(&fam, &stream, 0);
        for n in 1..=fam.depth() {
            let a = increment_local(&fam, &phi, n);
            let b = layer_noise_extension_local(&fam, &phi, n);
            for (x, y) in a.iter().zip(&b) {
                prop_assert!((x - y).abs() <= 1e-10 * (1.0 + x.abs()));
            }
        }
    }

    #[test]
    fn jacobi_matches_dense_eigenvalues(dim in 1usize..8, seed in any::<u64>()) {
        let s = GaussianStream::new(seed);
        let m = Matrix::from_fn(dim, dim, |i, j| s.normal((i.min(j) * dim + i.max(j)) as u64, 0));
        let sym = SymMatrix::from_upper(&m);
        let eig = jacobi_eigen(&sym).unwrap();
        let na = SymmetricEigen::new(DMatrix::from_fn(dim, dim, |i, j| sym[(i, j)]));
        let mut want: Vec<f64> = na.eigenvalues.iter().copied().collect();
        want.sort_by(|a, b| a.partial_cmp(b).unwrap());
        for (a, b) in eig.eigenvalues.iter().zip(&want) {
            prop_assert!((a - b).abs() <= 1e-10 * (1.0 + b.abs()));
        }
        let v = &eig.eigenvectors;
        let recon = v.matmul(&Matrix::diagonal(&eig.eigenvalues)).matmul(&v.transpose());
        prop_assert!(recon.max_abs_diff(sym.as_matrix()) <= 1e-10 * (1.0 + sym.as_matrix().max_abs()));
    }

    #[test]
    fn psd_sqrt_squares_back(dim in 1usize..8, seed in any::<u64>()) {
        let s = GaussianStream::new(seed);
        let b = Matrix::from_fn(dim, dim, |i, j| s.normal((i * dim + j) as u64, 0));
        let a = SymMatrix::from_upper(&b.matmul(&b.transpose()));
        let r = psd_sqrt(&a).unwrap();
        let sq = r.as_matrix().matmul(r.as_matrix());
        prop_assert!(sq.max_abs_diff(a.as_matrix()) <= 1e-9 * (1.0 + a.as_matrix().max_abs()));
        prop_assert!(r.as_matrix().asymmetry() == 0.0);
    }
}

//! Discrete Gaussian free fields on weighted graphs, grown one foliation
//! layer at a time from white noise through the discrete Hadamard operator.
//!
//! The crate is organised bottom-up:
//!
//! - [`graph`]: weighted graphs, the coboundary `d`, its adjoint and the
//!   Dirichlet form.
//! - [`foliation`]: ordered layers over the interior and their growth
//!   clusters.
//! - [`linalg`]: dense symmetric eigendecomposition, PSD square roots and
//!   Cholesky solves.
//! - [`operators`]: per-cluster Laplacian, Green, Poisson and boundary Green
//!   kernels.
//! - [`hadamard`]: layer square roots, Hadamard kernels and the Hadamard
//!   operator `Q_n`.
//! - [`sampling`]: seeded white noise, field growth, the Cholesky oracle and
//!   the Monte Carlo moment checks.
//! - [`verify`]: the full verification ladder used by the CLI and the
//!   acceptance suite.

pub mod error;
pub mod exec;
pub mod fixtures;
pub mod foliation;
pub mod graph;
pub mod hadamard;
pub mod linalg;
pub mod operators;
pub mod rng;
pub mod sampling;
pub mod verify;

pub use error::{Error, Result};
pub use exec::Execution;
pub use foliation::{Foliation, GrowthCluster};
pub use graph::{EdgeField, Graph, VertexVector};
pub use hadamard::HadamardFamily;
pub use linalg::{Matrix, SymMatrix};
pub use rng::GaussianStream;

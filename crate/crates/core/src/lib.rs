//! Weak rigidity for planar and spatial frameworks with mixed distance and
//! subtended-angle constraints.
//!
//! - [`graph`] and [`framework`]: the `(V, E, A)` constraint graph and its
//!   realization `(G, p)`.
//! - [`rigidity`]: the weak rigidity matrix `R_W`, trivial motions, rank
//!   tests in the plane and the distance-closure test in space.
//! - [`formation`]: the gradient controller `ṗ = −R_Wᵀ e` for three agents,
//!   its equilibria and an RK4 simulator.
//! - [`henneberg`]: weakly rigid 0- and 1-extensions and a seeded random
//!   generator of minimally weakly rigid frameworks.
//! - [`io`]: JSON framework/target files, growth logs and CSV traces.

pub mod error;
pub mod formation;
pub mod framework;
pub mod graph;
pub mod henneberg;
pub mod io;
pub mod linalg;
pub mod rigidity;

pub use error::{Error, Result};
pub use framework::{EdgeVectorSet, Framework};
pub use graph::{build_graph, AngleTriple, Constraint, Edge, Graph};
pub use linalg::{numerical_rank, DEFAULT_RANK_TOL};
pub use rigidity::{
    classify, classify_infinitesimal_weak_rigidity, classify_weak_rigidity_3d,
    is_minimally_weakly_rigid, weak_rigidity_matrix, Minimality, RigidityReport, Verdict,
    WeakRigidityMatrix,
};

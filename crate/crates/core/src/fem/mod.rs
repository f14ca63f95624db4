//! One-dimensional Lagrange finite elements with homogeneous Dirichlet
//! conditions.

pub mod assembly;
pub mod banded;
pub mod basis;
pub mod mesh;
pub mod quadrature;
pub mod space;

pub use assembly::{
    assemble_load, assemble_operators, inner, pairings, project_field, project_function,
    qoi_eval, AssembledOperator, OperatorKind, ProjectionMode, SpatialOperators,
};
pub use banded::{solve_spd, BandLu, BandMatrix, BandedCholesky, BandedSym};
pub use mesh::SpatialMesh;
pub use space::{FeSpace, NodalField};

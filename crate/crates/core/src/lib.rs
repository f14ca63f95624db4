//! Parareal and space-time parallel solvers for the one-dimensional heat
//! equation, with adjoint-based estimates of the error in a terminal
//! quantity of interest split by source.

pub mod adjoint;
pub mod error;
pub mod estimator;
pub mod fem;
pub mod harness;
pub mod parareal;
pub mod problem;
pub mod schwarz;
pub mod time;

pub use error::{Error, Result};
pub use fem::{FeSpace, NodalField, SpatialMesh, SpatialOperators};
pub use time::{Source, TimePartition, TimeScheme, Trajectory};

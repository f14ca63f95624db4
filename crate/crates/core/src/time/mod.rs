//! Time partitions and the single-subdomain propagators.

pub mod cg;
pub mod dg0;
pub mod euler;
pub mod partition;
pub mod trajectory;

pub use cg::propagate_cg;
pub use dg0::dg0_equivalence_check;
pub use euler::propagate_be;
pub use partition::{uniform_grid, TimePartition};
pub use trajectory::{TimeScheme, Trajectory};

use crate::error::Result;
use crate::fem::{NodalField, SpatialOperators};

/// Space-time source `f(x, t)`.
pub type Source = dyn Fn(f64, f64) -> f64 + Send + Sync;

/// Runs `scheme` on `grid` from `ic`.
pub fn propagate(
    ops: &SpatialOperators,
    scheme: TimeScheme,
    grid: &[f64],
    ic: &NodalField,
    f: &Source,
) -> Result<Trajectory> {
    match scheme {
        TimeScheme::ImplicitEuler => propagate_be(ops, grid, ic, f),
        TimeScheme::Cg(q) => propagate_cg(ops, grid, q, ic, f),
    }
}

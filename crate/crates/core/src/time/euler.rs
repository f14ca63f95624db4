use crate::error::{Result, ResultExt};
use crate::fem::assembly::{assemble_load, mixed_mass_apply};
use crate::fem::{BandedCholesky, NodalField, SpatialOperators};

use super::trajectory::{TimeScheme, Trajectory};
use super::Source;

/// Implicit Euler on `grid`:
/// `(M + Δt K) U_n = M U_{n-1} + Δt F(t_n)`.
///
/// `ic` may belong to another space on the same mesh; it enters the first
/// step through `(ic, v)`, which is its L2 projection.
pub fn propagate_be(
    ops: &SpatialOperators,
    grid: &[f64],
    ic: &NodalField,
    f: &Source,
) -> Result<Trajectory> {
    let space = ops.space();
    let mut rhs0 = mixed_mass_apply(space, ic)?;
    let mut slabs = Vec::with_capacity(grid.len().saturating_sub(1));
    let mut factor: Option<(f64, BandedCholesky)> = None;
    for n in 1..grid.len() {
        let dt = grid[n] - grid[n - 1];
        let chol = match &factor {
            Some((h, c)) if (h - dt).abs() <= 1e-14 * dt => c,
            _ => {
                let c = ops
                    .b_matrix(dt)
                    .cholesky()
                    .context(|| format!("implicit Euler step {n}"))?;
                factor = Some((dt, c));
                &factor.as_ref().unwrap().1
            }
        };
        let load = assemble_load(space.as_ref(), grid[n], f);
        for (r, l) in rhs0.iter_mut().zip(&load) {
            *r += dt * l;
        }
        let u = chol.solve(&rhs0);
        rhs0 = ops.mass().matvec(&u);
        slabs.push(vec![u]);
    }
    Trajectory::new(
        TimeScheme::ImplicitEuler,
        space.clone(),
        grid.to_vec(),
        ic.clone(),
        slabs,
    )
}

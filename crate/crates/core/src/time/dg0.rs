use crate::error::{Error, Result};
use crate::fem::assembly::{assemble_functional, assemble_load};
use crate::fem::quadrature::gauss_rule;
use crate::fem::{BandMatrix, FeSpace};

use super::trajectory::{TimeScheme, Trajectory};
use super::Source;

/// Re-solves an implicit Euler trajectory as a dG(0) method and returns the
/// largest nodal deviation.
///
/// The dG(0) equations are assembled from scratch (element matrices by direct
/// quadrature, jumps against the stored incoming value, load by the
/// right-endpoint rule) and solved as one block-bidiagonal space-time system,
/// so nothing is shared with the time-stepping path. The global system has
/// bandwidth of order `dof_count`, so this is meant for modest problems.
pub fn dg0_equivalence_check(traj: &Trajectory, f: &Source) -> Result<f64> {
    if traj.scheme() != TimeScheme::ImplicitEuler {
        return Err(Error::Config("dG(0) check needs an implicit Euler trajectory".into()));
    }
    let space = traj.space();
    let nd = space.dof_count();
    let steps = traj.steps();
    let (mass, stiff) = element_matrices_by_quadrature(space);
    let kd = space.half_bandwidth();
    let mut sys = BandMatrix::zeros(nd * steps, nd + kd, kd);
    let mut rhs = vec![0.0; nd * steps];

    let incoming = traj.incoming();
    let jump_in = assemble_functional(space.as_ref(), |x| incoming.eval(x));
    for s in 0..steps {
        let dt = traj.dt(s);
        let row0 = s * nd;
        for d1 in 0..nd {
            for d2 in d1.saturating_sub(kd)..(d1 + kd + 1).min(nd) {
                let (m, k) = (mass[d1][d2 + kd - d1], stiff[d1][d2 + kd - d1]);
                // ([U]_{n-1}, v) + Δt a(U_n, v)
                sys.add(row0 + d1, row0 + d2, m + dt * k);
                if s > 0 {
                    sys.add(row0 + d1, row0 - nd + d2, -m);
                }
            }
        }
        let load = assemble_load(space.as_ref(), traj.times()[s + 1], f);
        for d in 0..nd {
            rhs[row0 + d] = dt * load[d];
            if s == 0 {
                rhs[d] += jump_in[d];
            }
        }
    }
    let x = sys.lu()?.solve(&rhs);
    let mut dev: f64 = 0.0;
    for s in 0..steps {
        let u = &traj.slab(s)[0];
        for d in 0..nd {
            dev = dev.max((x[s * nd + d] - u[d]).abs());
        }
    }
    Ok(dev)
}

/// Rows of the mass and stiffness matrices in a dense band layout
/// `row[d][d2 + kd - d]`, integrated on physical elements.
fn element_matrices_by_quadrature(space: &FeSpace) -> (Vec<Vec<f64>>, Vec<Vec<f64>>) {
    let q = space.degree();
    let kd = space.half_bandwidth();
    let nd = space.dof_count();
    let rule = gauss_rule(q + 1);
    let basis = space.basis();
    let mut mass = vec![vec![0.0; 2 * kd + 1]; nd];
    let mut stiff = vec![vec![0.0; 2 * kd + 1]; nd];
    for e in 0..space.element_count() {
        let (x0, x1) = space.mesh().element(e);
        let h = x1 - x0;
        for (&xi, &w) in rule.points.iter().zip(&rule.weights) {
            for a in 0..=q {
                let Some(da) = space.dof(e, a) else { continue };
                let (va, ga) = (basis.value(a, xi), basis.derivative(a, xi) / h);
                for b in 0..=q {
                    let Some(db) = space.dof(e, b) else { continue };
                    let (vb, gb) = (basis.value(b, xi), basis.derivative(b, xi) / h);
                    mass[da][db + kd - da] += w * h * va * vb;
                    stiff[da][db + kd - da] += w * h * ga * gb;
                }
            }
        }
    }
    (mass, stiff)
}

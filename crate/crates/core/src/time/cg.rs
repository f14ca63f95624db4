use crate::error::{Error, Result, ResultExt};
use crate::fem::assembly::assemble_load;
use crate::fem::basis::LagrangeBasis;
use crate::fem::quadrature::gauss_rule;
use crate::fem::{BandLu, BandMatrix, NodalField, SpatialOperators};

use super::trajectory::{TimeScheme, Trajectory};
use super::Source;

/// Shifted Legendre polynomial `P_i(2τ − 1)`.
pub fn shifted_legendre(i: usize, tau: f64) -> f64 {
    let x = 2.0 * tau - 1.0;
    let (mut p0, mut p1) = (1.0, x);
    if i == 0 {
        return 1.0;
    }
    for k in 2..=i {
        let k = k as f64;
        let p2 = ((2.0 * k - 1.0) * x * p1 - (k - 1.0) * p0) / k;
        p0 = p1;
        p1 = p2;
    }
    p1
}

/// Reference-slab couplings for cG(q): `a[i][j] = ∫ m_i ℓ_j'` and
/// `b[i][j] = ∫ m_i ℓ_j` for test index `i < q` and trial node `j ≤ q`.
#[derive(Debug, Clone)]
pub struct CgCoefficients {
    pub q: usize,
    pub a: Vec<Vec<f64>>,
    pub b: Vec<Vec<f64>>,
}

impl CgCoefficients {
    pub fn new(q: usize) -> Self {
        let basis = LagrangeBasis::new(q);
        let rule = gauss_rule(q + 1);
        let mut a = vec![vec![0.0; q + 1]; q];
        let mut b = vec![vec![0.0; q + 1]; q];
        for (&t, &w) in rule.points.iter().zip(&rule.weights) {
            for i in 0..q {
                let m = shifted_legendre(i, t);
                for j in 0..=q {
                    a[i][j] += w * m * basis.derivative(j, t);
                    b[i][j] += w * m * basis.value(j, t);
                }
            }
        }
        Self { q, a, b }
    }
}

struct SlabSystem {
    dt: f64,
    lu: BandLu,
}

fn build_slab_system(ops: &SpatialOperators, c: &CgCoefficients, dt: f64) -> Result<SlabSystem> {
    let q = c.q;
    let nd = ops.space().dof_count();
    let kd = ops.space().half_bandwidth();
    let band = kd * q + q - 1;
    let mut m = BandMatrix::zeros(nd * q, band, band);
    let (mass, stiff) = (ops.mass(), ops.stiffness());
    for d1 in 0..nd {
        let lo = d1.saturating_sub(kd);
        let hi = (d1 + kd + 1).min(nd);
        for d2 in lo..hi {
            let (mv, kv) = (mass.get(d1, d2), stiff.get(d1, d2));
            for i in 0..q {
                for j in 1..=q {
                    m.add(d1 * q + i, d2 * q + j - 1, c.a[i][j] * mv + dt * c.b[i][j] * kv);
                }
            }
        }
    }
    Ok(SlabSystem { dt, lu: m.lu()? })
}

/// cG(q) on `grid`. The initial value is the L2 projection of `ic` into the
/// solver space; the load is integrated with `q + 2` Gauss points per slab.
pub fn propagate_cg(
    ops: &SpatialOperators,
    grid: &[f64],
    q: usize,
    ic: &NodalField,
    f: &Source,
) -> Result<Trajectory> {
    if q == 0 {
        return Err(Error::Config("cG needs time degree >= 1".into()));
    }
    let space = ops.space();
    let nd = space.dof_count();
    let coeff = CgCoefficients::new(q);
    let rule = gauss_rule(q + 2);
    let u0 = ops.l2_project(ic)?;
    let mut prev = u0.coeffs().to_vec();
    let mut slabs = Vec::with_capacity(grid.len().saturating_sub(1));
    let mut system: Option<SlabSystem> = None;
    for n in 1..grid.len() {
        let t0 = grid[n - 1];
        let dt = grid[n] - t0;
        if system.as_ref().map_or(true, |s| (s.dt - dt).abs() > 1e-14 * dt) {
            system = Some(
                build_slab_system(ops, &coeff, dt).context(|| format!("cG({q}) slab {n}"))?,
            );
        }
        let sys = system.as_ref().unwrap();

        let mut rhs = vec![0.0; nd * q];
        for (&tau, &w) in rule.points.iter().zip(&rule.weights) {
            let load = assemble_load(space.as_ref(), t0 + dt * tau, f);
            for i in 0..q {
                let s = dt * w * shifted_legendre(i, tau);
                for (d, l) in load.iter().enumerate() {
                    rhs[d * q + i] += s * l;
                }
            }
        }
        let mu = ops.mass().matvec(&prev);
        let ku = ops.stiffness().matvec(&prev);
        for d in 0..nd {
            for i in 0..q {
                rhs[d * q + i] -= coeff.a[i][0] * mu[d] + dt * coeff.b[i][0] * ku[d];
            }
        }
        let x = sys.lu.solve(&rhs);
        let mut nodes = Vec::with_capacity(q + 1);
        nodes.push(prev.clone());
        for j in 1..=q {
            nodes.push((0..nd).map(|d| x[d * q + j - 1]).collect::<Vec<f64>>());
        }
        prev = nodes[q].clone();
        slabs.push(nodes);
    }
    Trajectory::new(
        TimeScheme::Cg(q),
        space.clone(),
        grid.to_vec(),
        ic.clone(),
        slabs,
    )
}

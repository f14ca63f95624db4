//! Backward problems that weight the residuals: the temporal adjoints on the
//! coarse and fine grids, the auxiliary adjoints, and the per-step spatial
//! adjoints of the Schwarz iteration.

use std::sync::Arc;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result, ResultExt};
use crate::fem::assembly::assemble_restricted;
use crate::fem::{BandedCholesky, BandedSym, FeSpace, NodalField, SpatialOperators};
use crate::schwarz::OverlapDecomposition;
use crate::time::{propagate_cg, TimePartition, Trajectory};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum AdjointKind {
    Coarse,
    Fine(usize),
    Auxiliary(usize),
}

/// A backward solution stored on its forward time grid.
#[derive(Debug, Clone)]
pub struct SpaceTimeAdjoint {
    pub kind: AdjointKind,
    pub trajectory: Trajectory,
    pub terminal: NodalField,
}

impl SpaceTimeAdjoint {
    pub fn start(&self) -> f64 {
        self.trajectory.start()
    }

    pub fn end(&self) -> f64 {
        self.trajectory.end()
    }

    pub fn value_at(&self, t: f64) -> Result<NodalField> {
        self.trajectory.value_at(t)
    }

    /// Right limit at the start of the interval.
    pub fn start_value(&self) -> NodalField {
        self.trajectory.initial_value()
    }

    pub fn space(&self) -> &Arc<FeSpace> {
        self.trajectory.space()
    }
}

/// cG in time on a fixed spatial space, run backwards.
#[derive(Debug, Clone)]
pub struct AdjointSolver {
    ops: Arc<SpatialOperators>,
    time_degree: usize,
}

impl AdjointSolver {
    pub fn new(ops: Arc<SpatialOperators>, time_degree: usize) -> Result<Self> {
        if time_degree == 0 {
            return Err(Error::Config("adjoint time degree must be at least 1".into()));
        }
        Ok(Self { ops, time_degree })
    }

    pub fn space(&self) -> &Arc<FeSpace> {
        self.ops.space()
    }

    pub fn operators(&self) -> &Arc<SpatialOperators> {
        &self.ops
    }

    pub fn time_degree(&self) -> usize {
        self.time_degree
    }

    /// Solves `(−φ̇, v) + a(v, φ) = 0` on `grid` with `φ(end) = terminal`.
    /// The form is symmetric, so this is a forward solve in reversed time.
    pub fn solve_backward(&self, grid: &[f64], terminal: &NodalField) -> Result<Trajectory> {
        let n = grid.len() - 1;
        let (a, b) = (grid[0], grid[n]);
        let mut rev: Vec<f64> = (0..=n).map(|k| a + (b - grid[n - k])).collect();
        rev[0] = a;
        rev[n] = b;
        let zero = |_: f64, _: f64| 0.0;
        let traj = propagate_cg(&self.ops, &rev, self.time_degree, terminal, &zero)?;
        traj.mirrored_onto(grid)
    }

    fn solve(&self, kind: AdjointKind, grid: &[f64], terminal: NodalField) -> Result<SpaceTimeAdjoint> {
        let terminal = self.ops.l2_project(&terminal)?;
        let trajectory = self
            .solve_backward(grid, &terminal)
            .context(|| format!("{kind:?} adjoint"))?;
        Ok(SpaceTimeAdjoint {
            kind,
            trajectory,
            terminal,
        })
    }
}

/// `φ̂` on the global coarse grid with `φ̂(T)` the nodal interpolant of `ψ`.
pub fn solve_coarse_adjoint<F: Fn(f64) -> f64>(
    solver: &AdjointSolver,
    partition: &TimePartition,
    psi: F,
) -> Result<SpaceTimeAdjoint> {
    let terminal = NodalField::interpolate(solver.space(), psi);
    let grid = partition.coarse_grid_through(partition.subdomains());
    solver.solve(AdjointKind::Coarse, &grid, terminal)
}

/// `φ^p` on the fine grid of each subdomain with `φ^p(T_p) = φ̂(T_p)`.
pub fn solve_fine_adjoints(
    solver: &AdjointSolver,
    partition: &TimePartition,
    coarse: &SpaceTimeAdjoint,
) -> Result<Vec<SpaceTimeAdjoint>> {
    (1..=partition.subdomains())
        .into_par_iter()
        .map(|p| {
            let terminal = coarse.value_at(partition.sync(p))?;
            solver.solve(AdjointKind::Fine(p), &partition.fine_grid(p), terminal)
        })
        .collect()
}

/// Auxiliary adjoints for `p = 2..=P_t` on the coarse grid of `(0, T_{p−1}]`
/// with terminal value `φ^p(T_{p−1}) − φ̂(T_{p−1})`. Entry `p − 2` holds
/// subdomain `p`.
pub fn solve_auxiliary_adjoints(
    solver: &AdjointSolver,
    partition: &TimePartition,
    coarse: &SpaceTimeAdjoint,
    fine: &[SpaceTimeAdjoint],
) -> Result<Vec<SpaceTimeAdjoint>> {
    let np = partition.subdomains();
    if fine.len() != np {
        return Err(Error::Missing(format!(
            "{} fine adjoints for {np} subdomains",
            fine.len()
        )));
    }
    (2..=np)
        .into_par_iter()
        .map(|p| {
            let hat = coarse.value_at(partition.sync(p - 1))?;
            let terminal = fine[p - 1].start_value().add_scaled(-1.0, &hat)?;
            solver.solve(
                AdjointKind::Auxiliary(p),
                &partition.coarse_grid_through(p - 1),
                terminal,
            )
        })
        .collect()
}

/// The three temporal adjoint families of one run.
#[derive(Debug, Clone)]
pub struct TemporalAdjoints {
    pub coarse: SpaceTimeAdjoint,
    pub fine: Vec<SpaceTimeAdjoint>,
    pub auxiliary: Vec<SpaceTimeAdjoint>,
}

impl TemporalAdjoints {
    pub fn solve<F: Fn(f64) -> f64>(
        solver: &AdjointSolver,
        partition: &TimePartition,
        psi: F,
    ) -> Result<Self> {
        let coarse = solve_coarse_adjoint(solver, partition, psi)?;
        let fine = solve_fine_adjoints(solver, partition, &coarse)?;
        let auxiliary = solve_auxiliary_adjoints(solver, partition, &coarse, &fine)?;
        Ok(Self {
            coarse,
            fine,
            auxiliary,
        })
    }

    pub fn fine(&self, p: usize) -> &SpaceTimeAdjoint {
        &self.fine[p - 1]
    }

    /// Auxiliary adjoint of subdomain `p ≥ 2`.
    pub fn auxiliary(&self, p: usize) -> &SpaceTimeAdjoint {
        &self.auxiliary[p - 2]
    }
}

/// How the subdomain adjoint right-hand sides couple the subdomains.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
pub enum SpatialAdjointVariant {
    /// Sensitivity of the QoI functional to each local solve of the
    /// Schwarz iteration: `χ_i^k = A_i⁻¹ τ (Mφ − B Σ_j S_j)|_{I_i}` with
    /// `S_j = Σ_{l>k} χ_j^l`.
    #[default]
    Sensitivity,
    /// The overlap-weighted form `τ Σ_j [(φ, v)_{ij} − B_{ij}(v, S_i)]`
    /// with the pairings restricted to `Ω_i ∩ Ω_j`.
    OverlapWeighted,
}

/// Global and subdomain spatial adjoints for one step `(p, n)`. Every `χ`
/// is stored as a global coefficient vector, zero outside its subdomain.
#[derive(Debug, Clone)]
pub struct SpatialAdjointSet {
    pub global: NodalField,
    /// `chi[k − 1][i]` for sweep `k` and subdomain `i`.
    pub chi: Vec<Vec<NodalField>>,
}

/// Factored operators for the spatial adjoints at one step length.
#[derive(Debug, Clone)]
pub struct SpatialAdjointSolver {
    ops: Arc<SpatialOperators>,
    decomposition: OverlapDecomposition,
    variant: SpatialAdjointVariant,
    dt: f64,
    b: BandedSym,
    b_chol: BandedCholesky,
    interiors: Vec<std::ops::Range<usize>>,
    local: Vec<BandedCholesky>,
    /// Per subdomain: `Σ_j M_{ij}` and `Σ_j B_{ij}` for the overlap-weighted
    /// variant.
    weighted: Vec<(BandedSym, BandedSym)>,
}

impl SpatialAdjointSolver {
    pub fn new(
        ops: Arc<SpatialOperators>,
        decomposition: &OverlapDecomposition,
        variant: SpatialAdjointVariant,
        dt: f64,
    ) -> Result<Self> {
        let space = ops.space().clone();
        let b = ops.b_matrix(dt);
        let b_chol = b.cholesky().context(|| "global spatial adjoint".to_string())?;
        let np = decomposition.subdomains();
        let interiors: Vec<_> = (0..np).map(|i| decomposition.interior_dofs(i, &space)).collect();
        let local = interiors
            .iter()
            .enumerate()
            .map(|(i, r)| {
                b.sub_block(r.start, r.end)
                    .cholesky()
                    .context(|| format!("subdomain adjoint {}", i + 1))
            })
            .collect::<Result<Vec<_>>>()?;
        let mut weighted = Vec::new();
        if variant == SpatialAdjointVariant::OverlapWeighted {
            for i in 0..np {
                let n = space.dof_count();
                let mut m = BandedSym::zeros(n, space.half_bandwidth());
                let mut bb = BandedSym::zeros(n, space.half_bandwidth());
                for j in 0..np {
                    let r = decomposition.intersection(i, j);
                    if r.is_empty() {
                        continue;
                    }
                    let (mij, kij) = assemble_restricted(&space, r)?;
                    m = m.combine(1.0, &mij, 1.0);
                    bb = bb.combine(1.0, &mij.combine(1.0, &kij, dt), 1.0);
                }
                weighted.push((m, bb));
            }
        }
        Ok(Self {
            ops,
            decomposition: decomposition.clone(),
            variant,
            dt,
            b,
            b_chol,
            interiors,
            local,
            weighted,
        })
    }

    pub fn dt(&self) -> f64 {
        self.dt
    }

    pub fn space(&self) -> &Arc<FeSpace> {
        self.ops.space()
    }

    /// `B(v, Φ) = (φ, v)` and the backward recursion over `sweeps` sweeps.
    pub fn solve(&self, phi: &NodalField, sweeps: usize) -> Result<SpatialAdjointSet> {
        let space = self.ops.space();
        if !phi.space().same_as(space) {
            return Err(Error::IncompatibleSpaces(
                "spatial adjoint data must live in the adjoint space".into(),
            ));
        }
        let n = space.dof_count();
        let tau = self.decomposition.tau();
        let np = self.interiors.len();
        let m_phi = self.ops.mass().matvec(phi.coeffs());
        let global = NodalField::from_coeffs(space, self.b_chol.solve(&m_phi))?;

        // accumulated[i] = Σ_{l>k} χ_i^l
        let mut accumulated = vec![vec![0.0; n]; np];
        let mut chi_rev: Vec<Vec<NodalField>> = Vec::with_capacity(sweeps);
        for _ in 0..sweeps {
            let rhs_all: Vec<Vec<f64>> = match self.variant {
                SpatialAdjointVariant::Sensitivity => {
                    let mut s = vec![0.0; n];
                    for acc in &accumulated {
                        for (a, b) in s.iter_mut().zip(acc) {
                            *a += b;
                        }
                    }
                    let bs = self.b.matvec(&s);
                    let r: Vec<f64> = m_phi.iter().zip(&bs).map(|(a, b)| tau * (a - b)).collect();
                    vec![r; np]
                }
                SpatialAdjointVariant::OverlapWeighted => (0..np)
                    .map(|i| {
                        let (m, b) = &self.weighted[i];
                        let mp = m.matvec(phi.coeffs());
                        let bs = b.matvec(&accumulated[i]);
                        mp.iter().zip(&bs).map(|(a, b)| tau * (a - b)).collect()
                    })
                    .collect(),
            };
            let level: Vec<NodalField> = (0..np)
                .map(|i| {
                    let r = &self.interiors[i];
                    let mut x = rhs_all[i][r.clone()].to_vec();
                    self.local[i].solve_in_place(&mut x);
                    let mut full = vec![0.0; n];
                    full[r.clone()].copy_from_slice(&x);
                    NodalField::from_coeffs(space, full)
                })
                .collect::<Result<Vec<_>>>()?;
            for (acc, c) in accumulated.iter_mut().zip(&level) {
                for (a, b) in acc.iter_mut().zip(c.coeffs()) {
                    *a += b;
                }
            }
            chi_rev.push(level);
        }
        chi_rev.reverse();
        Ok(SpatialAdjointSet {
            global,
            chi: chi_rev,
        })
    }

    /// Largest violation of the local equations defining `set.chi`, with
    /// the right-hand sides re-assembled from scratch.
    pub fn recursion_residual(&self, phi: &NodalField, set: &SpatialAdjointSet) -> Result<f64> {
        let space = self.ops.space();
        let n = space.dof_count();
        let tau = self.decomposition.tau();
        let np = self.interiors.len();
        let sweeps = set.chi.len();
        let mut worst: f64 = 0.0;
        for k in 1..=sweeps {
            for i in 0..np {
                let r = &self.interiors[i];
                let mut lhs = self.b.matvec(set.chi[k - 1][i].coeffs());
                let rhs: Vec<f64> = match self.variant {
                    SpatialAdjointVariant::Sensitivity => {
                        let mut s = vec![0.0; n];
                        for l in k + 1..=sweeps {
                            for j in 0..np {
                                for (a, b) in s.iter_mut().zip(set.chi[l - 1][j].coeffs()) {
                                    *a += b;
                                }
                            }
                        }
                        let mut w = phi.coeffs().to_vec();
                        let bs = self.b.matvec(&s);
                        let mp = self.ops.mass().matvec(&w);
                        for d in 0..n {
                            w[d] = tau * (mp[d] - bs[d]);
                        }
                        w
                    }
                    SpatialAdjointVariant::OverlapWeighted => {
                        let mut s = vec![0.0; n];
                        for l in k + 1..=sweeps {
                            for (a, b) in s.iter_mut().zip(set.chi[l - 1][i].coeffs()) {
                                *a += b;
                            }
                        }
                        let mut w = vec![0.0; n];
                        for j in 0..np {
                            let e = self.decomposition.intersection(i, j);
                            if e.is_empty() {
                                continue;
                            }
                            let (mij, kij) = assemble_restricted(space, e)?;
                            let mp = mij.matvec(phi.coeffs());
                            let ms = mij.matvec(&s);
                            let ks = kij.matvec(&s);
                            for d in 0..n {
                                w[d] += tau * (mp[d] - ms[d] - self.dt * ks[d]);
                            }
                        }
                        w
                    }
                };
                for d in r.clone() {
                    lhs[d] -= rhs[d];
                    worst = worst.max(lhs[d].abs());
                }
            }
        }
        Ok(worst)
    }
}

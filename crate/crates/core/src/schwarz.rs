//! Additive overlapping Schwarz iterations for the implicit Euler step
//! systems, and a fine propagator built on them.

use std::ops::Range;
use std::sync::Arc;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result, ResultExt};
use crate::fem::assembly::{assemble_load, mixed_mass_apply};
use crate::fem::{BandedCholesky, BandedSym, FeSpace, NodalField, SpatialMesh, SpatialOperators};
use crate::time::{Source, TimeScheme, Trajectory};

/// How the overlap factor `β` becomes a number of elements added to each
/// interior side of a block.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum OverlapRule {
    /// `round(β N_s / 2)`: every overlap region spans a fraction `β` of Ω.
    #[default]
    Domain,
    /// `round(β N_s / P_s)`: a fraction `β` of one block on each side.
    Block,
}

impl OverlapRule {
    pub fn extension(self, beta: f64, elements: usize, ps: usize) -> usize {
        let base = match self {
            OverlapRule::Domain => elements as f64 / 2.0,
            OverlapRule::Block => (elements / ps) as f64,
        };
        (beta * base).round() as usize
    }

    /// Smallest `β` giving one element of extension.
    pub fn minimum_beta(self, elements: usize, ps: usize) -> f64 {
        match self {
            OverlapRule::Domain => 1.0 / elements as f64,
            OverlapRule::Block => 0.5 * ps as f64 / elements as f64,
        }
    }
}

/// Where each Schwarz solve starts.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum InitialGuess {
    /// The zero vector.
    #[default]
    Zero,
    /// The solution of the previous time step.
    Previous,
}

/// Element ranges of `P_s` overlapping subdomains and the relaxation
/// parameter used to blend their corrections.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct OverlapDecomposition {
    elements: usize,
    beta: f64,
    tau: f64,
    parts: Vec<Range<usize>>,
}

/// Splits the mesh into `ps` equal element blocks and widens every interior
/// side by the number of elements `rule` assigns to `beta`.
pub fn decompose_domain(
    mesh: &SpatialMesh,
    ps: usize,
    beta: f64,
    tau: f64,
    rule: OverlapRule,
) -> Result<OverlapDecomposition> {
    let n = mesh.element_count();
    if ps == 0 || ps > n {
        return Err(Error::Decomposition(format!(
            "P_s = {ps} does not fit {n} elements"
        )));
    }
    if n % ps != 0 {
        return Err(Error::Decomposition(format!(
            "{n} elements do not split evenly into {ps} subdomains"
        )));
    }
    if !(beta >= 0.0 && beta.is_finite()) {
        return Err(Error::Decomposition(format!("overlap factor {beta} is invalid")));
    }
    if !(tau > 0.0 && tau.is_finite()) {
        return Err(Error::Decomposition(format!("relaxation {tau} must be positive")));
    }
    let block = n / ps;
    let ext = rule.extension(beta, n, ps);
    if ps > 1 && ext == 0 {
        return Err(Error::Decomposition(format!(
            "overlap rounds to zero elements; beta must be at least {}",
            rule.minimum_beta(n, ps)
        )));
    }
    let parts = (0..ps)
        .map(|i| {
            let lo = (i * block).saturating_sub(if i > 0 { ext } else { 0 });
            let hi = ((i + 1) * block + if i + 1 < ps { ext } else { 0 }).min(n);
            lo..hi
        })
        .collect();
    Ok(OverlapDecomposition {
        elements: n,
        beta,
        tau,
        parts,
    })
}

impl OverlapDecomposition {
    pub fn subdomains(&self) -> usize {
        self.parts.len()
    }

    pub fn beta(&self) -> f64 {
        self.beta
    }

    pub fn tau(&self) -> f64 {
        self.tau
    }

    pub fn element_count(&self) -> usize {
        self.elements
    }

    /// Elements of subdomain `i` (0-based).
    pub fn elements(&self, i: usize) -> Range<usize> {
        self.parts[i].clone()
    }

    /// Elements shared by subdomains `i` and `j`.
    pub fn intersection(&self, i: usize, j: usize) -> Range<usize> {
        let (a, b) = (&self.parts[i], &self.parts[j]);
        let lo = a.start.max(b.start);
        let hi = a.end.min(b.end);
        lo..hi.max(lo)
    }

    /// Degrees of freedom strictly inside subdomain `i`.
    pub fn interior_dofs(&self, i: usize, space: &FeSpace) -> Range<usize> {
        let q = space.degree();
        let r = &self.parts[i];
        let lo = if r.start == 0 { 0 } else { r.start * q };
        let hi = r.end * q - 1;
        lo..hi
    }

    /// Degrees of freedom on the artificial boundary of subdomain `i`.
    pub fn boundary_dofs(&self, i: usize, space: &FeSpace) -> Vec<usize> {
        let q = space.degree();
        let r = &self.parts[i];
        let mut out = Vec::with_capacity(2);
        if r.start > 0 {
            out.push(r.start * q - 1);
        }
        if r.end < self.elements {
            out.push(r.end * q - 1);
        }
        out
    }

    fn check_space(&self, space: &FeSpace) -> Result<()> {
        if space.element_count() != self.elements {
            return Err(Error::Decomposition(format!(
                "decomposition has {} elements, space {}",
                self.elements,
                space.element_count()
            )));
        }
        Ok(())
    }
}

/// Iterates and local solutions of one Schwarz solve.
///
/// `iterates[k]` is `U^k` for `k = 0..=K_s` and `locals[k][i]` the interior
/// values of the local solve on subdomain `i` in sweep `k + 1`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SchwarzSweepRecord {
    pub iterates: Vec<Vec<f64>>,
    pub locals: Vec<Vec<Vec<f64>>>,
    pub interiors: Vec<Range<usize>>,
}

impl SchwarzSweepRecord {
    pub fn sweeps(&self) -> usize {
        self.locals.len()
    }

    /// `Π_i U_i^k`: the previous iterate with the interior of subdomain `i`
    /// replaced by the local solution of sweep `k` (1-based).
    pub fn projected(&self, k: usize, i: usize) -> Vec<f64> {
        let mut v = self.iterates[k - 1].clone();
        v[self.interiors[i].clone()].copy_from_slice(&self.locals[k - 1][i]);
        v
    }

    pub fn last(&self) -> &[f64] {
        self.iterates.last().unwrap()
    }

    /// Largest deviation between each recorded iterate and the blend of the
    /// recorded local solutions.
    pub fn blend_defect(&self, tau: f64) -> f64 {
        let p = self.interiors.len() as f64;
        let mut m: f64 = 0.0;
        for k in 1..=self.sweeps() {
            let prev = &self.iterates[k - 1];
            let mut acc: Vec<f64> = prev.iter().map(|u| (1.0 - tau * p) * u).collect();
            for i in 0..self.interiors.len() {
                for (a, b) in acc.iter_mut().zip(self.projected(k, i)) {
                    *a += tau * b;
                }
            }
            for (a, b) in acc.iter().zip(&self.iterates[k]) {
                m = m.max((a - b).abs());
            }
        }
        m
    }
}

/// Factored local problems for one system matrix and one decomposition.
#[derive(Debug, Clone)]
pub struct SchwarzSolver {
    matrix: BandedSym,
    decomposition: OverlapDecomposition,
    interiors: Vec<Range<usize>>,
    boundaries: Vec<Vec<usize>>,
    factors: Vec<BandedCholesky>,
}

impl SchwarzSolver {
    pub fn new(matrix: BandedSym, space: &FeSpace, decomposition: &OverlapDecomposition) -> Result<Self> {
        decomposition.check_space(space)?;
        if matrix.n() != space.dof_count() {
            return Err(Error::Dimension {
                expected: space.dof_count(),
                found: matrix.n(),
            });
        }
        let interiors: Vec<_> = (0..decomposition.subdomains())
            .map(|i| decomposition.interior_dofs(i, space))
            .collect();
        let boundaries = (0..decomposition.subdomains())
            .map(|i| decomposition.boundary_dofs(i, space))
            .collect();
        let factors = interiors
            .iter()
            .enumerate()
            .map(|(i, r)| {
                matrix
                    .sub_block(r.start, r.end)
                    .cholesky()
                    .context(|| format!("local factor of subdomain {}", i + 1))
            })
            .collect::<Result<Vec<_>>>()?;
        Ok(Self {
            matrix,
            decomposition: decomposition.clone(),
            interiors,
            boundaries,
            factors,
        })
    }

    pub fn matrix(&self) -> &BandedSym {
        &self.matrix
    }

    pub fn decomposition(&self) -> &OverlapDecomposition {
        &self.decomposition
    }

    /// Solves `B_II x = rhs_I − B_IΓ u_Γ` on subdomain `i`.
    pub fn local_solve(&self, i: usize, rhs: &[f64], u: &[f64]) -> Vec<f64> {
        let r = &self.interiors[i];
        let kd = self.matrix.kd();
        let mut x = rhs[r.clone()].to_vec();
        for &g in &self.boundaries[i] {
            let lo = g.saturating_sub(kd).max(r.start);
            let hi = (g + kd + 1).min(r.end);
            for row in lo..hi {
                x[row - r.start] -= self.matrix.get(row, g) * u[g];
            }
        }
        self.factors[i].solve_in_place(&mut x);
        x
    }

    /// `K_s` additive Schwarz sweeps from `guess`.
    pub fn solve(&self, rhs: &[f64], sweeps: usize, guess: &[f64]) -> Result<SchwarzSweepRecord> {
        let n = self.matrix.n();
        if rhs.len() != n || guess.len() != n {
            return Err(Error::Dimension {
                expected: n,
                found: if rhs.len() != n { rhs.len() } else { guess.len() },
            });
        }
        let tau = self.decomposition.tau();
        let p = self.interiors.len() as f64;
        let mut iterates = Vec::with_capacity(sweeps + 1);
        let mut locals = Vec::with_capacity(sweeps);
        iterates.push(guess.to_vec());
        for _ in 0..sweeps {
            let prev = iterates.last().unwrap();
            let loc: Vec<Vec<f64>> = (0..self.interiors.len())
                .map(|i| self.local_solve(i, rhs, prev))
                .collect();
            let mut next: Vec<f64> = prev.iter().map(|u| (1.0 - tau * p) * u).collect();
            for (i, r) in self.interiors.iter().enumerate() {
                // Π_i U_i equals the previous iterate outside the interior
                for (d, a) in next.iter_mut().enumerate() {
                    let v = if r.contains(&d) { loc[i][d - r.start] } else { prev[d] };
                    *a += tau * v;
                }
            }
            locals.push(loc);
            iterates.push(next);
        }
        Ok(SchwarzSweepRecord {
            iterates,
            locals,
            interiors: self.interiors.clone(),
        })
    }
}

/// One-shot Schwarz solve of `B x = rhs`.
pub fn asdd_solve(
    matrix: &BandedSym,
    space: &FeSpace,
    rhs: &[f64],
    decomposition: &OverlapDecomposition,
    sweeps: usize,
    guess: &[f64],
) -> Result<SchwarzSweepRecord> {
    SchwarzSolver::new(matrix.clone(), space, decomposition)?.solve(rhs, sweeps, guess)
}

/// Implicit Euler in which every step system is replaced by `K_s` Schwarz
/// sweeps.
pub fn propagate_be_schwarz(
    ops: &SpatialOperators,
    decomposition: &OverlapDecomposition,
    sweeps: usize,
    guess: InitialGuess,
    grid: &[f64],
    ic: &NodalField,
    f: &Source,
) -> Result<(Trajectory, Vec<SchwarzSweepRecord>)> {
    let space = ops.space();
    let mut mass_prev = mixed_mass_apply(space, ic)?;
    let mut prev = ops.l2_project(ic)?.into_coeffs();
    let mut slabs = Vec::with_capacity(grid.len().saturating_sub(1));
    let mut records = Vec::with_capacity(grid.len().saturating_sub(1));
    let mut solver: Option<(f64, SchwarzSolver)> = None;
    for n in 1..grid.len() {
        let dt = grid[n] - grid[n - 1];
        if solver.as_ref().map_or(true, |(h, _)| (h - dt).abs() > 1e-14 * dt) {
            let s = SchwarzSolver::new(ops.b_matrix(dt), space, decomposition)
                .context(|| format!("Schwarz step {n}"))?;
            solver = Some((dt, s));
        }
        let s = &solver.as_ref().unwrap().1;
        let load = assemble_load(space.as_ref(), grid[n], f);
        let rhs: Vec<f64> = mass_prev.iter().zip(&load).map(|(m, l)| m + dt * l).collect();
        let rec = match guess {
            InitialGuess::Previous => s.solve(&rhs, sweeps, &prev)?,
            InitialGuess::Zero => s.solve(&rhs, sweeps, &vec![0.0; prev.len()])?,
        };
        prev = rec.last().to_vec();
        mass_prev = ops.mass().matvec(&prev);
        slabs.push(vec![prev.clone()]);
        records.push(rec);
    }
    let traj = Trajectory::new(
        TimeScheme::ImplicitEuler,
        space.clone(),
        grid.to_vec(),
        ic.clone(),
        slabs,
    )?;
    Ok((traj, records))
}

/// Shared handle used by the parareal fine propagator.
#[derive(Debug, Clone)]
pub struct SchwarzSettings {
    pub decomposition: OverlapDecomposition,
    pub sweeps: usize,
    pub guess: InitialGuess,
}

impl SchwarzSettings {
    pub fn new(
        space: &Arc<FeSpace>,
        ps: usize,
        beta: f64,
        tau: f64,
        rule: OverlapRule,
        sweeps: usize,
        guess: InitialGuess,
    ) -> Result<Self> {
        if sweeps == 0 {
            return Err(Error::Config("K_s must be at least 1".into()));
        }
        Ok(Self {
            decomposition: decompose_domain(space.mesh(), ps, beta, tau, rule)?,
            sweeps,
            guess,
        })
    }
}

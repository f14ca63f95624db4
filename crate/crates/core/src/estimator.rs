//! Adjoint-weighted residuals and the split of the terminal QoI error into
//! discretization, iteration and synchronization contributions.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::adjoint::{SpaceTimeAdjoint, SpatialAdjointSet, SpatialAdjointSolver, SpatialAdjointVariant, TemporalAdjoints};
use crate::error::{Error, Result, ResultExt};
use crate::fem::assembly::{assemble_load, inner, mixed_apply, mixed_mass_apply, pairings, qoi_eval};
use crate::fem::quadrature::gauss_rule;
use crate::fem::{NodalField, SpatialOperators};
use crate::parareal::PararealState;
use crate::problem::{true_qoi, ProblemBundle};
use crate::schwarz::{OverlapDecomposition, SchwarzSweepRecord};
use crate::time::{Source, TimeScheme, Trajectory};

/// Gauss points per step for the time integrals in the residuals.
pub const RESIDUAL_TIME_POINTS: usize = 5;

/// Per-step residuals `R_n(U, φ)` of `traj` weighted by `weight`:
/// `∫ l(φ) − a(U, φ) − (U̇, φ) dt − ([U]_{n−1}, φ(t_{n−1}⁺))`.
///
/// The jump at the first grid point is taken against `traj.incoming()`.
pub fn weighted_residual(traj: &Trajectory, weight: &Trajectory, f: &Source) -> Result<Vec<f64>> {
    let tol = 1e-12 * traj.end().abs().max(1.0);
    if weight.start() > traj.start() + tol || weight.end() < traj.end() - tol {
        return Err(Error::IntervalMismatch(format!(
            "weight on [{}, {}] does not cover [{}, {}]",
            weight.start(),
            weight.end(),
            traj.start(),
            traj.end()
        )));
    }
    let space = traj.space();
    let wspace = weight.space();
    if !space.shares_mesh(wspace) {
        return Err(Error::IncompatibleSpaces("residual weight on another mesh".into()));
    }
    let rule = gauss_rule(RESIDUAL_TIME_POINTS);
    let mut out = Vec::with_capacity(traj.steps());
    for s in 0..traj.steps() {
        let t0 = traj.times()[s];
        let dt = traj.dt(s);
        let mut acc = 0.0;
        for (&tau, &w) in rule.points.iter().zip(&rule.weights) {
            let t = t0 + dt * tau;
            let phi = weight.value_at(t)?;
            let load = assemble_load(wspace.as_ref(), t, f);
            let l: f64 = load.iter().zip(phi.coeffs()).map(|(a, b)| a * b).sum();
            let u = NodalField::from_coeffs(space, traj.coeffs_at(s, tau))?;
            let (_, a) = pairings(&u, &phi)?;
            let udot = match traj.scheme() {
                TimeScheme::ImplicitEuler => 0.0,
                TimeScheme::Cg(_) => {
                    let du = NodalField::from_coeffs(space, traj.dcoeffs_at(s, tau))?;
                    inner(&du, &phi)?
                }
            };
            acc += w * dt * (l - a - udot);
        }
        let phi0 = weight.right_limit(t0)?;
        let plus = inner(&traj.slab_start(s), &phi0)?;
        let minus = if s == 0 {
            inner(traj.incoming(), &phi0)?
        } else {
            inner(&traj.slab_end(s - 1), &phi0)?
        };
        out.push(acc - (plus - minus));
    }
    Ok(out)
}

fn expect_scheme(traj: &Trajectory, euler: bool) -> Result<()> {
    let ok = (traj.scheme() == TimeScheme::ImplicitEuler) == euler;
    if ok {
        Ok(())
    } else {
        Err(Error::Config(format!(
            "residual form does not match a {:?} trajectory",
            traj.scheme()
        )))
    }
}

/// Fine-grid residuals of an implicit Euler trajectory.
pub fn residual_fine(traj: &Trajectory, weight: &SpaceTimeAdjoint, f: &Source) -> Result<Vec<f64>> {
    expect_scheme(traj, true)?;
    weighted_residual(traj, &weight.trajectory, f)
}

/// Coarse-grid residuals; the same functional on the coarse trajectory.
pub fn residual_coarse(traj: &Trajectory, weight: &SpaceTimeAdjoint, f: &Source) -> Result<Vec<f64>> {
    weighted_residual(traj, &weight.trajectory, f)
}

/// Residuals of a cG trajectory. Interior jumps vanish by continuity; the
/// first step keeps the projection jump of the initial value.
pub fn residual_cg(traj: &Trajectory, weight: &SpaceTimeAdjoint, f: &Source) -> Result<Vec<f64>> {
    expect_scheme(traj, false)?;
    weighted_residual(traj, &weight.trajectory, f)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum BreakdownMode {
    Tpa,
    Stpa,
    Coarse,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Component {
    D,
    Dt,
    Ds,
    Dk,
    K,
    C,
    A,
    CoarseResidual,
    CoarseCorrection,
    InitialError,
}

impl Component {
    pub fn label(self) -> &'static str {
        match self {
            Component::D => "D",
            Component::Dt => "D_t",
            Component::Ds => "D_s",
            Component::Dk => "D_k",
            Component::K => "K",
            Component::C => "C",
            Component::A => "A",
            Component::CoarseResidual => "R_coarse",
            Component::CoarseCorrection => "C_coarse",
            Component::InitialError => "IC",
        }
    }
}

/// Error components and their sum, with the true error when it is known.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ErrorBreakdown {
    pub mode: BreakdownMode,
    pub components: Vec<(Component, f64)>,
    pub estimate: f64,
    pub true_error: Option<f64>,
    pub gamma: Option<f64>,
}

impl ErrorBreakdown {
    fn from_parts(mode: BreakdownMode, components: Vec<(Component, f64)>, true_error: Option<f64>) -> Self {
        let estimate = components.iter().fold(0.0, |s, (_, v)| s + v);
        let gamma = true_error.and_then(|t| effectivity(estimate, t));
        Self {
            mode,
            components,
            estimate,
            true_error,
            gamma,
        }
    }

    pub fn get(&self, c: Component) -> Option<f64> {
        self.components.iter().find(|(k, _)| *k == c).map(|(_, v)| *v)
    }
}

/// `estimated / true_err`, or `None` when the true error vanishes.
pub fn effectivity(estimated: f64, true_err: f64) -> Option<f64> {
    if true_err == 0.0 || !true_err.is_finite() {
        None
    } else {
        Some(estimated / true_err)
    }
}

/// `(φ, u0 − Û_0)` with the analytic initial value.
fn initial_error_term(phi: &NodalField, problem: &ProblemBundle, u0_hat: &NodalField) -> Result<f64> {
    Ok(qoi_eval(|x| (problem.u0)(x), phi) - inner(u0_hat, phi)?)
}

fn check_adjoints(state: &PararealState, adjoints: &TemporalAdjoints) -> Result<()> {
    let np = state.partition.subdomains();
    if adjoints.fine.len() != np {
        return Err(Error::Missing(format!(
            "fine adjoints: {} of {np}",
            adjoints.fine.len()
        )));
    }
    if adjoints.auxiliary.len() + 1 != np {
        return Err(Error::Missing(format!(
            "auxiliary adjoints: {} of {}",
            adjoints.auxiliary.len(),
            np - 1
        )));
    }
    Ok(())
}

fn check_iteration(state: &PararealState, k: usize) -> Result<()> {
    if k == 0 || k > state.iterations_done() {
        return Err(Error::Missing(format!(
            "iteration {k} of {} recorded",
            state.iterations_done()
        )));
    }
    Ok(())
}

/// True QoI error of `value`, when the problem has an exact solution.
pub fn true_error_of(problem: &ProblemBundle, value: &NodalField) -> Option<f64> {
    true_qoi(problem).map(|q| q - qoi_eval(|x| (problem.psi)(x), value))
}

/// The synchronization terms shared by both breakdowns: `K`, `C` and `A`.
fn sync_terms(
    state: &PararealState,
    k: usize,
    adjoints: &TemporalAdjoints,
    problem: &ProblemBundle,
) -> Result<(f64, f64, f64)> {
    let it = state.iteration(k);
    let part = &state.partition;
    let np = part.subdomains();
    let f = problem.source.as_ref();
    let mut kk = 0.0;
    let mut cc = 0.0;
    for p in 2..=np {
        let tp = part.sync(p - 1);
        let hat = adjoints.coarse.value_at(tp)?;
        let fine_jump =
            inner(&it.fine_traj(p - 1).final_value(), &hat)? - inner(it.fine_traj(p).incoming(), &hat)?;
        kk += fine_jump;
        let dphi = adjoints.fine(p).start_value().add_scaled(-1.0, &hat)?;
        let coarse_jump = inner(&it.coarse_traj(p - 1).final_value(), &dphi)?
            - inner(it.coarse_traj(p).incoming(), &dphi)?;
        cc += coarse_jump;
    }
    let a_parts: Vec<f64> = (2..=np)
        .into_par_iter()
        .map(|p| -> Result<f64> {
            let aux = adjoints.auxiliary(p);
            let mut s = 0.0;
            for j in 2..p {
                let w = aux.value_at(part.sync(j - 1))?;
                s += inner(&it.coarse_traj(j - 1).final_value(), &w)?
                    - inner(it.coarse_traj(j).incoming(), &w)?;
            }
            for j in 1..p {
                s += residual_coarse(it.coarse_traj(j), aux, f)?.iter().sum::<f64>();
            }
            s += initial_error_term(&aux.start_value(), problem, &state.u0_hat)?;
            Ok(s)
        })
        .collect::<Result<Vec<_>>>()?;
    let aa = a_parts.iter().fold(0.0, |s, v| s + v);
    Ok((kk, cc, aa))
}

/// Decomposition `D + K + C + A` of the QoI error after iteration `k`.
pub fn tpa_breakdown(
    state: &PararealState,
    k: usize,
    adjoints: &TemporalAdjoints,
    problem: &ProblemBundle,
) -> Result<ErrorBreakdown> {
    check_iteration(state, k)?;
    check_adjoints(state, adjoints)?;
    let it = state.iteration(k);
    let np = state.partition.subdomains();
    let f = problem.source.as_ref();
    let fine_parts: Vec<f64> = (1..=np)
        .into_par_iter()
        .map(|p| -> Result<f64> {
            let r = weighted_residual(it.fine_traj(p), &adjoints.fine(p).trajectory, f)
                .context(|| format!("fine residual p={p}"))?;
            Ok(r.iter().sum())
        })
        .collect::<Result<Vec<_>>>()?;
    let mut d = fine_parts.iter().fold(0.0, |s, v| s + v);
    d += initial_error_term(&adjoints.fine(1).start_value(), problem, &state.u0_hat)?;
    let (kk, cc, aa) = sync_terms(state, k, adjoints, problem)?;
    let true_error = true_error_of(problem, &it.fine_traj(np).final_value());
    Ok(ErrorBreakdown::from_parts(
        BreakdownMode::Tpa,
        vec![(Component::D, d), (Component::K, kk), (Component::C, cc), (Component::A, aa)],
        true_error,
    ))
}

/// `E^K` and `E^N` of one implicit Euler step solved by Schwarz sweeps.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct StepSplit {
    pub e_k: f64,
    pub e_n: f64,
    /// `ℓ(Φ) − B(U, Φ)` computed through field pairings.
    pub total: f64,
}

/// Splits the algebraic error of step `n` into the part carried by the
/// subdomain solves and the part due to stopping the iteration.
///
/// `previous` is `U_{n−1}` (or the incoming value), `load` is `F(t_n)`
/// assembled on the adjoint space.
pub fn dd_split(
    record: &SchwarzSweepRecord,
    adjoints: &SpatialAdjointSet,
    previous: &NodalField,
    load: &[f64],
    dt: f64,
    forward: &std::sync::Arc<crate::fem::FeSpace>,
) -> Result<StepSplit> {
    let aspace = adjoints.global.space();
    if record.sweeps() != adjoints.chi.len() {
        return Err(Error::Missing(format!(
            "sweep record has {} sweeps, adjoints {}",
            record.sweeps(),
            adjoints.chi.len()
        )));
    }
    let mut ell = mixed_mass_apply(aspace, previous)?;
    for (a, l) in ell.iter_mut().zip(load) {
        *a += dt * l;
    }
    let dot = |a: &[f64], b: &[f64]| a.iter().zip(b).map(|(x, y)| x * y).sum::<f64>();
    let mut e_n = 0.0;
    for k in 1..=record.sweeps() {
        for (i, chi) in adjoints.chi[k - 1].iter().enumerate() {
            let w = NodalField::from_coeffs(forward, record.projected(k, i))?;
            let bw = mixed_apply(aspace, &w, 1.0, dt)?;
            let r: Vec<f64> = ell.iter().zip(&bw).map(|(a, b)| a - b).collect();
            e_n += dot(&r, chi.coeffs());
        }
    }
    let u = NodalField::from_coeffs(forward, record.last().to_vec())?;
    let bu = mixed_apply(aspace, &u, 1.0, dt)?;
    let phi = adjoints.global.coeffs();
    let e_total = dot(&ell, phi) - dot(&bu, phi);

    let (m_prev, _) = pairings(previous, &adjoints.global)?;
    let (m_u, k_u) = pairings(&u, &adjoints.global)?;
    let total = m_prev + dt * dot(load, phi) - (m_u + dt * k_u);
    Ok(StepSplit {
        e_k: e_total - e_n,
        e_n,
        total,
    })
}

/// Per-step split values of one subdomain, kept for diagnostics.
#[derive(Debug, Clone)]
pub struct SubdomainSplit {
    pub residuals: Vec<f64>,
    pub steps: Vec<StepSplit>,
}

/// Runs `dd_split` over every fine step of subdomain `p`.
pub fn subdomain_split(
    state: &PararealState,
    k: usize,
    p: usize,
    adjoints: &TemporalAdjoints,
    spatial_ops: &std::sync::Arc<SpatialOperators>,
    decomposition: &OverlapDecomposition,
    variant: SpatialAdjointVariant,
    problem: &ProblemBundle,
) -> Result<SubdomainSplit> {
    let it = state.iteration(k);
    let prop = &it.fine[p - 1];
    let traj = &prop.trajectory;
    if prop.sweeps.len() != traj.steps() {
        return Err(Error::Missing(format!(
            "Schwarz records for subdomain {p}: {} of {}",
            prop.sweeps.len(),
            traj.steps()
        )));
    }
    let f = problem.source.as_ref();
    let phi_p = &adjoints.fine(p).trajectory;
    let residuals = weighted_residual(traj, phi_p, f).context(|| format!("fine residual p={p}"))?;
    let aspace = spatial_ops.space();
    let mut solver: Option<SpatialAdjointSolver> = None;
    let mut steps = Vec::with_capacity(traj.steps());
    for n in 1..=traj.steps() {
        let dt = traj.dt(n - 1);
        if solver.as_ref().map_or(true, |s| (s.dt() - dt).abs() > 1e-14 * dt) {
            solver = Some(SpatialAdjointSolver::new(spatial_ops.clone(), decomposition, variant, dt)?);
        }
        let s = solver.as_ref().unwrap();
        let tn = traj.times()[n];
        let phi = phi_p.value_at(tn)?;
        let rec = &prop.sweeps[n - 1];
        let set = s.solve(&phi, rec.sweeps())?;
        let previous = if n == 1 {
            traj.incoming().clone()
        } else {
            traj.slab_end(n - 2)
        };
        let load = assemble_load(aspace.as_ref(), tn, f);
        steps.push(
            dd_split(rec, &set, &previous, &load, dt, traj.space())
                .context(|| format!("split p={p}, n={n}"))?,
        );
    }
    Ok(SubdomainSplit { residuals, steps })
}

/// Decomposition `D_t + D_s + D_k + K + C + A` for a run whose fine solves
/// used Schwarz sweeps.
pub fn stpa_breakdown(
    state: &PararealState,
    k: usize,
    adjoints: &TemporalAdjoints,
    spatial_ops: &std::sync::Arc<SpatialOperators>,
    decomposition: &OverlapDecomposition,
    variant: SpatialAdjointVariant,
    problem: &ProblemBundle,
) -> Result<ErrorBreakdown> {
    check_iteration(state, k)?;
    check_adjoints(state, adjoints)?;
    let np = state.partition.subdomains();
    let splits: Vec<SubdomainSplit> = (1..=np)
        .into_par_iter()
        .map(|p| subdomain_split(state, k, p, adjoints, spatial_ops, decomposition, variant, problem))
        .collect::<Result<Vec<_>>>()?;
    let (mut dt_sum, mut ds, mut dk) = (0.0, 0.0, 0.0);
    for sp in &splits {
        for (r, s) in sp.residuals.iter().zip(&sp.steps) {
            dt_sum += r - s.e_k - s.e_n;
            ds += s.e_n;
            dk += s.e_k;
        }
    }
    dt_sum += initial_error_term(&adjoints.fine(1).start_value(), problem, &state.u0_hat)?;
    let (kk, cc, aa) = sync_terms(state, k, adjoints, problem)?;
    let true_error = true_error_of(problem, &state.iteration(k).fine_traj(np).final_value());
    Ok(ErrorBreakdown::from_parts(
        BreakdownMode::Stpa,
        vec![
            (Component::Dt, dt_sum),
            (Component::Ds, ds),
            (Component::Dk, dk),
            (Component::K, kk),
            (Component::C, cc),
            (Component::A, aa),
        ],
        true_error,
    ))
}

/// Error estimate for the coarse solution of iteration `k`, weighted by the
/// coarse adjoint.
pub fn coarse_error_estimate(
    state: &PararealState,
    k: usize,
    coarse_adjoint: &SpaceTimeAdjoint,
    problem: &ProblemBundle,
) -> Result<ErrorBreakdown> {
    check_iteration(state, k)?;
    let it = state.iteration(k);
    let np = state.partition.subdomains();
    let f = problem.source.as_ref();
    let parts: Vec<f64> = (1..=np)
        .into_par_iter()
        .map(|p| Ok(residual_coarse(it.coarse_traj(p), coarse_adjoint, f)?.iter().sum()))
        .collect::<Result<Vec<_>>>()?;
    let res = parts.iter().fold(0.0, |s, v| s + v);
    let mut corr = 0.0;
    if k > 1 {
        let prev = state.iteration(k - 1);
        for p in 1..np {
            let w = coarse_adjoint.value_at(state.partition.sync(p))?;
            corr -= inner(prev.correction(p), &w)?;
        }
    }
    let ic = initial_error_term(&coarse_adjoint.start_value(), problem, &state.u0_hat)?;
    let true_error = true_error_of(problem, &it.coarse_traj(np).final_value());
    Ok(ErrorBreakdown::from_parts(
        BreakdownMode::Coarse,
        vec![
            (Component::CoarseResidual, res),
            (Component::CoarseCorrection, corr),
            (Component::InitialError, ic),
        ],
        true_error,
    ))
}

//! Fast property checks that can be run from the command line.
//!
//! Each check returns the measured quantity next to its threshold so that
//! callers can print a one-line verdict.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::error::Result;
use crate::estimator::{subdomain_split, Component};
use crate::fem::{solve_spd, FeSpace, NodalField, SpatialOperators};
use crate::parareal::{par_standard, vpar, Handoff, PararealState};
use crate::schwarz::{decompose_domain, OverlapRule, SchwarzSolver};
use crate::time::{dg0_equivalence_check, propagate, TimeScheme};

use super::config::{ExperimentConfig, Integrator};
use super::run::{run_detailed, run_experiment, Discretization};

#[derive(Debug, Clone)]
pub struct CheckResult {
    pub name: String,
    pub passed: bool,
    pub detail: String,
}

fn check(name: impl Into<String>, r: Result<(f64, f64)>) -> CheckResult {
    let name = name.into();
    match r {
        Ok((value, limit)) => CheckResult {
            name,
            passed: value <= limit,
            detail: format!("{value:.3e} (limit {limit:.0e})"),
        },
        Err(e) => CheckResult {
            name,
            passed: false,
            detail: format!("error: {e}"),
        },
    }
}

/// A small random TPA configuration: `P_t ≤ 4`, `N̂_t ≤ 8`.
pub fn random_small_config(rng: &mut impl Rng) -> ExperimentConfig {
    let p_t = rng.gen_range(1..=4);
    let per = rng.gen_range(1..=8 / p_t);
    let q_s = rng.gen_range(1..=2);
    let cg = rng.gen_bool(0.3);
    ExperimentConfig {
        nu: rng.gen_range(1..=4) as f64,
        mu: rng.gen_range(1..=2) as f64,
        nhat_t: p_t * per,
        r: rng.gen_range(1..=4),
        p_t,
        k_t: rng.gen_range(1..=p_t + 1),
        nhat_s: rng.gen_range(4..=10),
        qhat_s: rng.gen_range(1..=q_s),
        q_s,
        integrator: if cg { Integrator::Cg } else { Integrator::Be },
        qhat_t: 1,
        q_t: if cg { rng.gen_range(1..=2) } else { 1 },
        handoff: if rng.gen_bool(0.5) { Handoff::Nodal } else { Handoff::Exact },
        ..Default::default()
    }
}

fn run_vpar(config: &ExperimentConfig) -> Result<(Discretization, PararealState)> {
    let disc = Discretization::new(config)?;
    let coarse = disc.coarse_propagator(config);
    let fine = disc.fine_propagator(config);
    let state = vpar(
        &disc.partition,
        config.k_t,
        &disc.initial_value(),
        fine.as_ref(),
        &coarse,
        config.handoff,
    )?;
    Ok((disc, state))
}

/// Largest deviation between the textbook and the variational recursions
/// over `count` random configurations.
pub fn equivalence_deviation(count: usize, seed: u64) -> Result<f64> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut worst: f64 = 0.0;
    for _ in 0..count {
        let config = random_small_config(&mut rng);
        let (disc, state) = run_vpar(&config)?;
        let coarse = disc.coarse_propagator(&config);
        let fine = disc.fine_propagator(&config);
        let std = par_standard(
            &disc.partition,
            config.k_t,
            &disc.initial_value(),
            fine.as_ref(),
            &coarse,
            config.handoff,
        )?;
        let fs = fine.space();
        let k = config.k_t;
        for p in 1..=config.p_t {
            let it = state.iteration(k);
            let bar = &std.bar[k - 1][p - 1];
            worst = worst.max(bar.max_diff(&it.fine_traj(p).final_value())?);
            let mut expect = it.coarse_traj(p).final_value().lift_to(fs)?;
            if k > 1 {
                expect = expect.add_scaled(1.0, state.iteration(k - 1).correction(p))?;
            }
            worst = worst.max(std.tilde[k - 1][p].max_diff(&expect)?);
            worst = worst.max(std.corrections[k - 1][p - 1].max_diff(it.correction(p))?);
        }
    }
    Ok(worst)
}

/// Runs `P_t` iterations and compares every synchronization value with a
/// serial fine sweep. With the nodal hand-off the serial sweep applies the
/// same hand-off at each `T_p`; with the exact one it is also compared with
/// a single solve over the whole fine grid.
pub fn exactness_deviation(p_t: usize, handoff: Handoff) -> Result<f64> {
    let config = ExperimentConfig {
        nhat_t: 2 * p_t,
        r: 4,
        p_t,
        k_t: p_t,
        nhat_s: 8,
        qhat_s: 1,
        q_s: 2,
        handoff,
        ..Default::default()
    };
    let (disc, state) = run_vpar(&config)?;
    let fine = disc.fine_propagator(&config);
    let mut worst: f64 = 0.0;
    if handoff == Handoff::Exact {
        let global = propagate(
            &disc.fine_ops,
            config.fine_scheme(),
            &disc.partition.global_fine_grid(),
            &disc.initial_value(),
            disc.problem.source.as_ref(),
        )?;
        for p in 1..=p_t {
            let serial = global.value_at(disc.partition.sync(p))?;
            worst = worst.max(serial.max_diff(&state.last().fine_traj(p).final_value())?);
        }
    }
    let mut value = disc.initial_value();
    for p in 1..=p_t {
        let ic = if p == 1 {
            value.clone()
        } else {
            handoff.apply(value.clone(), disc.coarse_ops.space())?
        };
        value = fine.propagate(p, &ic)?.trajectory.final_value();
        let par = state.last().fine_traj(p).final_value();
        worst = worst.max(value.max_diff(&par)?);
    }
    Ok(worst)
}

/// An implicit Euler solution checked against the assembled dG(0) system.
pub fn dg0_deviation() -> Result<f64> {
    let config = ExperimentConfig {
        nhat_t: 4,
        r: 4,
        p_t: 1,
        k_t: 1,
        nhat_s: 10,
        ..Default::default()
    };
    let disc = Discretization::new(&config)?;
    let ic = disc.initial_value();
    let grid = disc.partition.fine_grid(1);
    let traj = propagate(&disc.fine_ops, TimeScheme::ImplicitEuler, &grid, &ic, disc.problem.source.as_ref())?;
    dg0_equivalence_check(&traj, disc.problem.source.as_ref())
}

/// Largest per-step residual of a discrete solution weighted by random
/// members of its test space, for a time-independent source.
pub fn orthogonality_residual(scheme: TimeScheme, seed: u64) -> Result<f64> {
    use crate::estimator::weighted_residual;
    use crate::time::{uniform_grid, Trajectory};
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let space = FeSpace::uniform(0.0, 1.0, 8, 2)?;
    let ops = SpatialOperators::new(&space)?;
    let f = |x: f64, _t: f64| (3.0 * x).sin() + x * x;
    let ic = NodalField::interpolate(&space, |x| (std::f64::consts::PI * x).sin());
    let grid = uniform_grid(0.0, 0.5, 6);
    let traj = propagate(&ops, scheme, &grid, &ic, &f)?;
    let test_scheme = match scheme {
        TimeScheme::ImplicitEuler | TimeScheme::Cg(1) => TimeScheme::ImplicitEuler,
        TimeScheme::Cg(q) => TimeScheme::Cg(q - 1),
    };
    let per = test_scheme.degree() + 1;
    let n = space.dof_count();
    let slabs: Vec<Vec<Vec<f64>>> = (0..grid.len() - 1)
        .map(|_| (0..per).map(|_| (0..n).map(|_| rng.gen_range(-1.0..1.0)).collect()).collect())
        .collect();
    let weight = Trajectory::new(test_scheme, space.clone(), grid, NodalField::zeros(&space), slabs)?;
    let r = weighted_residual(&traj, &weight, &f)?;
    Ok(r.iter().fold(0.0_f64, |m, v| m.max(v.abs())))
}

/// Relative fixed-point defect and relative distance to the direct solve
/// after `sweeps` sweeps, for `N_s = 20`, `q_s = 2`, `P_s = 2`, `β = 0.2`
/// and `Δt = 0.05`.
pub fn schwarz_deviation(seed: u64, sweeps: usize) -> Result<(f64, f64)> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let space = FeSpace::uniform(0.0, 1.0, 20, 2)?;
    let ops = SpatialOperators::new(&space)?;
    let b = ops.b_matrix(0.05);
    let decomposition = decompose_domain(space.mesh(), 2, 0.2, 0.4, OverlapRule::Domain)?;
    let solver = SchwarzSolver::new(b.clone(), &space, &decomposition)?;
    let rhs: Vec<f64> = (0..space.dof_count()).map(|_| rng.gen_range(-1.0..1.0)).collect();
    let exact = solve_spd(&b, &rhs)?;
    let scale = exact.iter().fold(0.0_f64, |m, v| m.max(v.abs()));
    let fixed = solver.solve(&rhs, 5, &exact)?;
    let fp = fixed.last().iter().zip(&exact).fold(0.0_f64, |m, (a, b)| m.max((a - b).abs())) / scale;
    let conv = solver.solve(&rhs, sweeps, &vec![0.0; rhs.len()])?;
    let cv = conv.last().iter().zip(&exact).fold(0.0_f64, |m, (a, b)| m.max((a - b).abs())) / scale;
    Ok((fp, cv))
}

/// A reduced `pardd_iterations` configuration for the space-time checks.
pub fn small_stpa_config() -> ExperimentConfig {
    ExperimentConfig {
        nu: 4.0,
        mu: 2.0,
        nhat_t: 8,
        r: 2,
        p_t: 4,
        k_t: 2,
        nhat_s: 12,
        qhat_s: 1,
        q_s: 2,
        schwarz: true,
        p_s: 2,
        k_s: 3,
        beta: 0.2,
        tau: 0.4,
        ..Default::default()
    }
}

/// Largest `|E^K + E^N − (ℓ(Φ) − B(U, Φ))|` over all steps of a run.
pub fn split_identity_defect(config: &ExperimentConfig) -> Result<f64> {
    let run = run_detailed(config)?;
    let disc = &run.discretization;
    let decomposition = &disc
        .schwarz
        .as_ref()
        .ok_or_else(|| crate::Error::Config("split check needs schwarz = true".into()))?
        .decomposition;
    let mut worst: f64 = 0.0;
    for p in 1..=config.p_t {
        let split = subdomain_split(
            &run.state,
            config.k_t,
            p,
            &run.adjoints,
            &disc.adjoint_ops,
            decomposition,
            config.spatial_adjoint,
            &disc.problem,
        )?;
        for s in &split.steps {
            worst = worst.max((s.e_k + s.e_n - s.total).abs());
        }
    }
    Ok(worst)
}

/// Componentwise distance between the space-time breakdown with a single
/// subdomain, `τ = 1` and one sweep, and the time-parallel breakdown.
pub fn collapse_deviation(base: &ExperimentConfig) -> Result<f64> {
    let tpa = run_experiment(&ExperimentConfig {
        schwarz: false,
        ..base.clone()
    })?;
    let stpa = run_experiment(&ExperimentConfig {
        schwarz: true,
        p_s: 1,
        k_s: 1,
        tau: 1.0,
        ..base.clone()
    })?;
    let (a, b) = (&tpa.breakdown, &stpa.breakdown);
    let g = |r: &crate::estimator::ErrorBreakdown, c| r.get(c).unwrap_or(f64::NAN);
    let d_stpa = g(b, Component::Dt) + g(b, Component::Ds) + g(b, Component::Dk);
    let mut worst = (g(a, Component::D) - d_stpa).abs();
    for c in [Component::K, Component::C, Component::A] {
        worst = worst.max((g(a, c) - g(b, c)).abs());
    }
    Ok(worst.max((a.estimate - b.estimate).abs()))
}

pub fn run_selftest() -> Vec<CheckResult> {
    let mut out = vec![check("parareal equivalence (20 configs)", equivalence_deviation(20, 7).map(|v| (v, 1e-12)))];
    for p in 2..=4 {
        for h in [Handoff::Exact, Handoff::Nodal] {
            out.push(check(
                format!("parareal exactness, P_t = {p}, {h:?} hand-off"),
                exactness_deviation(p, h).map(|v| (v, 1e-10)),
            ));
        }
    }
    out.push(check("dG(0) equivalence", dg0_deviation().map(|v| (v, 1e-12))));
    out.push(check(
        "orthogonality, implicit Euler",
        orthogonality_residual(TimeScheme::ImplicitEuler, 1).map(|v| (v, 1e-12)),
    ));
    out.push(check(
        "orthogonality, cG(1)",
        orthogonality_residual(TimeScheme::Cg(1), 2).map(|v| (v, 1e-12)),
    ));
    let sw = schwarz_deviation(3, 100);
    out.push(check("Schwarz fixed point", sw.as_ref().map(|v| (v.0, 1e-12)).map_err(clone_err)));
    out.push(check("Schwarz after 100 sweeps", sw.map(|v| (v.1, 1e-10))));
    out.push(check(
        "space-time split identity",
        split_identity_defect(&small_stpa_config()).map(|v| (v, 1e-14)),
    ));
    out.push(check(
        "single-domain collapse",
        collapse_deviation(&small_stpa_config()).map(|v| (v, 1e-10)),
    ));
    out
}

fn clone_err(e: &crate::Error) -> crate::Error {
    crate::Error::Config(e.to_string())
}

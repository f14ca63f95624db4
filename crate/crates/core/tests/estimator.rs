use std::sync::Arc;

use parest::adjoint::{AdjointSolver, TemporalAdjoints};
use parest::estimator::{
    coarse_error_estimate, effectivity, tpa_breakdown, weighted_residual, BreakdownMode, Component, ErrorBreakdown,
};
use parest::harness::selftest::{orthogonality_residual, small_stpa_config, split_identity_defect};
use parest::harness::{run_detailed, run_experiment, Discretization, ExperimentConfig, ProblemBundle};
use parest::parareal::{vpar, Handoff};
use parest::{FeSpace, NodalField, TimeScheme, Trajectory};

fn comp(b: &ErrorBreakdown, c: Component) -> f64 {
    b.get(c).unwrap()
}

fn small(p_t: usize, k_t: usize, handoff: Handoff) -> ExperimentConfig {
    ExperimentConfig {
        nhat_t: 2 * p_t,
        r: 4,
        p_t,
        k_t,
        nhat_s: 10,
        handoff,
        ..Default::default()
    }
}

#[test]
fn discrete_solutions_are_orthogonal_to_their_test_space() {
    for scheme in [TimeScheme::ImplicitEuler, TimeScheme::Cg(1), TimeScheme::Cg(2), TimeScheme::Cg(3)] {
        for seed in 0..3 {
            let r = orthogonality_residual(scheme, seed).unwrap();
            assert!(r <= 1e-12, "{scheme:?}: {r:e}");
        }
    }
}

#[test]
fn one_unknown_residual_by_hand() {
    // one hat on two elements of width 1/2: M = 1/3, K = 4, ∫ hat = 1/2
    let space = FeSpace::uniform(0.0, 1.0, 2, 1).unwrap();
    let field = |v: f64| NodalField::from_coeffs(&space, vec![v]).unwrap();
    let grid = vec![0.0, 0.1, 0.3];
    let u = [0.7, -0.4];
    let w = [[1.5, 0.5], [0.5, -2.0]];
    let traj = Trajectory::new(
        TimeScheme::ImplicitEuler,
        space.clone(),
        grid.clone(),
        field(1.0),
        vec![vec![vec![u[0]]], vec![vec![u[1]]]],
    )
    .unwrap();
    let weight = Trajectory::new(
        TimeScheme::Cg(1),
        space.clone(),
        grid.clone(),
        field(0.0),
        w.iter().map(|s| vec![vec![s[0]], vec![s[1]]]).collect(),
    )
    .unwrap();
    let c = 3.0;
    let f = move |_: f64, _: f64| c;
    let r = weighted_residual(&traj, &weight, &f).unwrap();
    let mut prev = 1.0;
    for n in 0..2 {
        let dt = grid[n + 1] - grid[n];
        let mean = 0.5 * (w[n][0] + w[n][1]);
        let expect = 0.5 * c * dt * mean - 4.0 * u[n] * dt * mean - (u[n] - prev) / 3.0 * w[n][0];
        assert!((r[n] - expect).abs() <= 1e-14, "step {n}: {} vs {expect}", r[n]);
        prev = u[n];
    }
}

fn zero_problem() -> ProblemBundle {
    ProblemBundle {
        a: 0.0,
        b: 1.0,
        t_final: 2.0,
        source: Arc::new(|_, _| 0.0),
        u0: Arc::new(|_| 0.0),
        psi: Arc::new(|x| x * (1.0 - x)),
        exact: Some(Arc::new(|_, _| 0.0)),
        psi_support: (0.0, 1.0),
    }
}

#[test]
fn zero_problem_has_zero_error() {
    let config = small(3, 2, Handoff::Nodal);
    let mut disc = Discretization::new(&config).unwrap();
    disc.problem = zero_problem();
    let coarse = disc.coarse_propagator(&config);
    let fine = disc.fine_propagator(&config);
    let u0 = NodalField::zeros(disc.coarse_ops.space());
    let state = vpar(&disc.partition, 2, &u0, fine.as_ref(), &coarse, config.handoff).unwrap();
    let solver = AdjointSolver::new(disc.adjoint_ops.clone(), 3).unwrap();
    let psi = disc.problem.psi.clone();
    let adj = TemporalAdjoints::solve(&solver, &disc.partition, move |x| psi(x)).unwrap();
    let b = tpa_breakdown(&state, 2, &adj, &disc.problem).unwrap();
    for (c, v) in &b.components {
        assert_eq!(*v, 0.0, "{c:?}");
    }
    assert_eq!(b.true_error, Some(0.0));
    assert_eq!(b.gamma, None);
    assert!(tpa_breakdown(&state, 0, &adj, &disc.problem).is_err());
    assert!(tpa_breakdown(&state, 3, &adj, &disc.problem).is_err());
}

#[test]
fn synchronization_terms_vanish_when_expected() {
    // a single time subdomain has nothing to synchronize
    let b = run_experiment(&small(1, 1, Handoff::Nodal)).unwrap().breakdown;
    for c in [Component::K, Component::C, Component::A] {
        assert_eq!(comp(&b, c), 0.0, "{c:?}");
    }
    // no correction has been computed before the first iteration
    for h in [Handoff::Exact, Handoff::Nodal] {
        let b = run_experiment(&small(4, 1, h)).unwrap().breakdown;
        assert!(comp(&b, Component::C).abs() <= 1e-12, "{h:?}");
    }
    // converged iterates are continuous at the synchronization times
    for p in 2..=4 {
        let b = run_experiment(&small(p, p, Handoff::Exact)).unwrap().breakdown;
        assert!(comp(&b, Component::K).abs() <= 1e-10);
    }
}

#[test]
fn converged_estimate_matches_serial_estimate() {
    // the two estimates use different adjoints, so they agree only to the
    // accuracy of the adjoint approximation
    let par = small(4, 4, Handoff::Exact);
    let ser = ExperimentConfig { p_t: 1, k_t: 1, ..par.clone() };
    let (a, b) = (run_experiment(&par).unwrap(), run_experiment(&ser).unwrap());
    let (ea, eb) = (a.breakdown.estimate, b.breakdown.estimate);
    assert!(((ea - eb) / eb).abs() <= 1e-5, "{ea:e} vs {eb:e}");
    assert_eq!(a.breakdown.true_error.unwrap(), b.breakdown.true_error.unwrap());
}

#[test]
fn estimate_is_the_component_sum() {
    for config in [small(3, 2, Handoff::Nodal), small_stpa_config()] {
        let b = run_experiment(&config).unwrap().breakdown;
        let sum: f64 = b.components.iter().map(|(_, v)| v).sum();
        assert_eq!(b.estimate, sum);
        assert_eq!(b.gamma, effectivity(b.estimate, b.true_error.unwrap()));
        let expect = if config.schwarz { BreakdownMode::Stpa } else { BreakdownMode::Tpa };
        assert_eq!(b.mode, expect);
    }
}

#[test]
fn split_identity_holds_per_step() {
    let d = split_identity_defect(&small_stpa_config()).unwrap();
    assert!(d <= 1e-14, "{d:e}");
}

#[test]
fn coarse_estimate_is_sharp() {
    let config = ExperimentConfig {
        nhat_t: 40,
        nhat_s: 20,
        k_t: 1,
        ..Default::default()
    };
    let run = run_detailed(&config).unwrap();
    let b = coarse_error_estimate(&run.state, 1, &run.adjoints.coarse, &run.discretization.problem).unwrap();
    let g = b.gamma.unwrap();
    assert!((0.95..=1.05).contains(&g), "gamma {g}");
    assert_eq!(comp(&b, Component::CoarseCorrection), 0.0);
}

#[test]
fn effectivity_is_stable_in_adjoint_degree() {
    let gamma = |deg: usize| {
        let c = ExperimentConfig {
            adjoint_time_degree: deg,
            adjoint_space_degree: deg,
            ..Default::default()
        };
        run_experiment(&c).unwrap().breakdown.gamma.unwrap()
    };
    let (g3, g4) = (gamma(3), gamma(4));
    assert!((g3 - g4).abs() <= 0.01, "{g3} vs {g4}");
}

#[test]
fn effectivity_cases() {
    assert_eq!(effectivity(3.0, 2.0), Some(1.5));
    assert_eq!(effectivity(-1.0, 2.0), Some(-0.5));
    assert_eq!(effectivity(1.0, 0.0), None);
    assert_eq!(effectivity(1.0, f64::NAN), None);
}

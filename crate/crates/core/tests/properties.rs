use proptest::prelude::*;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use parest::fem::assembly::{inner, project_field, ProjectionMode};
use parest::fem::{solve_spd, SpatialMesh};
use parest::harness::selftest::random_small_config;
use parest::harness::{Discretization, ExperimentConfig};
use parest::parareal::vpar;
use parest::schwarz::{decompose_domain, OverlapRule, SchwarzSolver};
use parest::{FeSpace, NodalField, SpatialOperators, TimePartition};

fn field(space: &std::sync::Arc<FeSpace>, c: &[f64]) -> NodalField {
    let n = space.dof_count();
    NodalField::from_coeffs(space, c.iter().cycle().take(n).copied().collect()).unwrap()
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(32))]

    #[test]
    fn mass_and_stiffness_are_spd(n in 2usize..12, q in 1usize..=4, c in prop::collection::vec(-1.0f64..1.0, 1..8)) {
        let s = FeSpace::uniform(0.0, 1.0, n, q).unwrap();
        let ops = SpatialOperators::new(&s).unwrap();
        let u = field(&s, &c);
        let norm = inner(&u, &u).unwrap();
        prop_assume!(norm > 1e-12);
        let mu = ops.mass().matvec(u.coeffs());
        let ku = ops.stiffness().matvec(u.coeffs());
        let dot = |a: &[f64]| a.iter().zip(u.coeffs()).map(|(x, y)| x * y).sum::<f64>();
        prop_assert!((dot(&mu) - norm).abs() <= 1e-12 * norm.max(1.0));
        prop_assert!(dot(&ku) > 0.0);
    }

    #[test]
    fn interpolation_reproduces_polynomials(n in 2usize..10, q in 2usize..=4, c in prop::collection::vec(-2.0f64..2.0, 5)) {
        let s = FeSpace::uniform(0.0, 1.0, n, q).unwrap();
        // x(1 − x) p(x) with deg p ≤ q − 2 vanishes on the boundary
        let p = move |x: f64| (0..q - 1).fold(0.0, |a, k| a + c[k] * x.powi(k as i32));
        let g = move |x: f64| x * (1.0 - x) * p(x);
        let u = NodalField::interpolate(&s, &g);
        for i in 0..=50 {
            let x = i as f64 / 50.0;
            prop_assert!((u.eval(x) - g(x)).abs() <= 1e-11);
        }
    }

    #[test]
    fn lift_then_project_is_identity(n in 2usize..10, lo in 1usize..=3, extra in 0usize..=2, c in prop::collection::vec(-1.0f64..1.0, 1..8)) {
        let mesh = std::sync::Arc::new(SpatialMesh::uniform(0.0, 1.0, n).unwrap());
        let a = FeSpace::new(mesh.clone(), lo).unwrap();
        let b = FeSpace::new(mesh, lo + extra).unwrap();
        let u = field(&a, &c);
        let back = project_field(&u.lift_to(&b).unwrap(), &a, ProjectionMode::L2).unwrap();
        prop_assert!(u.max_diff(&back).unwrap() <= 1e-11);
    }

    #[test]
    fn partitions_are_nested(p in 1usize..6, per in 1usize..5, r in 1usize..6, t in 0.1f64..5.0) {
        let part = TimePartition::new(t, p * per, r, p).unwrap();
        prop_assert_eq!(part.fine_total(), p * per * r);
        let g = part.global_fine_grid();
        prop_assert_eq!(g.len(), p * per * r + 1);
        prop_assert!(g.windows(2).all(|w| w[1] > w[0]));
        for k in 1..=p {
            let (c, f) = (part.coarse_grid(k), part.fine_grid(k));
            for (i, x) in c.iter().enumerate() {
                prop_assert!((x - f[i * r]).abs() <= 1e-12 * t);
            }
        }
    }

    #[test]
    fn decompositions_cover_the_mesh(ps in 1usize..6, per in 2usize..8, beta in 0.05f64..0.6) {
        let n = ps * per;
        let mesh = SpatialMesh::uniform(0.0, 1.0, n).unwrap();
        for rule in [OverlapRule::Domain, OverlapRule::Block] {
            let Ok(d) = decompose_domain(&mesh, ps, beta, 0.5, rule) else {
                prop_assert!(ps > 1 && rule.extension(beta, n, ps) == 0);
                continue;
            };
            let mut seen = vec![0usize; n];
            for i in 0..ps {
                for e in d.elements(i) {
                    seen[e] += 1;
                }
            }
            prop_assert!(seen.iter().all(|&s| s >= 1));
        }
    }

    #[test]
    fn direct_solution_is_a_schwarz_fixed_point(ps in 2usize..5, q in 1usize..=3, c in prop::collection::vec(-1.0f64..1.0, 1..8)) {
        let s = FeSpace::uniform(0.0, 1.0, 4 * ps, q).unwrap();
        let b = SpatialOperators::new(&s).unwrap().b_matrix(0.05);
        let d = decompose_domain(s.mesh(), ps, 0.25, 1.0 / ps as f64, OverlapRule::Domain).unwrap();
        let rhs = field(&s, &c).into_coeffs();
        let exact = solve_spd(&b, &rhs).unwrap();
        let rec = SchwarzSolver::new(b, &s, &d).unwrap().solve(&rhs, 3, &exact).unwrap();
        let scale = exact.iter().fold(1e-300_f64, |m, v| m.max(v.abs()));
        for (x, y) in rec.last().iter().zip(&exact) {
            prop_assert!((x - y).abs() <= 1e-12 * scale);
        }
    }

    #[test]
    fn parareal_converges_in_p_iterations(seed in any::<u64>()) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let base = random_small_config(&mut rng);
        let config = ExperimentConfig { k_t: base.p_t, ..base };
        let disc = Discretization::new(&config).unwrap();
        let coarse = disc.coarse_propagator(&config);
        let fine = disc.fine_propagator(&config);
        let state = vpar(&disc.partition, config.k_t, &disc.initial_value(), fine.as_ref(), &coarse, config.handoff).unwrap();
        let mut value = disc.initial_value();
        for p in 1..=config.p_t {
            let ic = if p == 1 { value.clone() } else { config.handoff.apply(value, disc.coarse_ops.space()).unwrap() };
            value = fine.propagate(p, &ic).unwrap().trajectory.final_value();
            let par = state.last().fine_traj(p).final_value();
            prop_assert!(value.max_diff(&par).unwrap() <= 1e-10);
        }
    }
}

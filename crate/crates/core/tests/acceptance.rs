//! Acceptance criteria. Prints one PASS/FAIL line per criterion and fails if
//! any criterion fails.

use parest::estimator::Component;
use parest::harness::selftest::{
    collapse_deviation, dg0_deviation, equivalence_deviation, exactness_deviation, orthogonality_residual,
    schwarz_deviation, small_stpa_config, split_identity_defect,
};
use parest::harness::{lookup, RunRecord};
use parest::parareal::Handoff;
use parest::TimeScheme;

struct Verdicts {
    lines: Vec<(bool, String)>,
}

impl Verdicts {
    fn record(&mut self, id: &str, passed: bool, detail: String) {
        let line = format!("{} {id}: {detail}", if passed { "PASS" } else { "FAIL" });
        println!("{line}");
        self.lines.push((passed, line));
    }
}

fn rel(value: f64, reference: f64) -> f64 {
    ((value - reference) / reference).abs()
}

fn comp(r: &RunRecord, c: Component) -> f64 {
    r.breakdown.get(c).unwrap_or(f64::NAN)
}

fn gamma(r: &RunRecord) -> f64 {
    r.breakdown.gamma.unwrap_or(f64::NAN)
}

fn in_band(g: f64, lo: f64, hi: f64) -> bool {
    (lo..=hi).contains(&g)
}

fn table(name: &str) -> Vec<RunRecord> {
    lookup(name).and_then(|t| t.run()).unwrap_or_else(|e| panic!("{name}: {e}"))
}

fn show(r: &parest::Result<f64>) -> String {
    match r {
        Ok(x) => format!("{x:.3e}"),
        Err(e) => format!("error: {e}"),
    }
}

fn fmt_list(v: &[f64]) -> String {
    v.iter().map(|x| format!("{x:.4e}")).collect::<Vec<_>>().join(", ")
}

#[test]
fn acceptance() {
    let mut v = Verdicts { lines: Vec::new() };

    // 1: K_t sweep
    let t1 = table("par_iterations");
    let gammas: Vec<f64> = t1.iter().map(gamma).collect();
    let k1 = comp(&t1[0], Component::K);
    let k2 = comp(&t1[1], Component::K);
    let c1 = comp(&t1[0], Component::C);
    let ok = gammas.iter().all(|&g| in_band(g, 0.99, 1.01))
        && rel(k1, -1.53e-1) <= 0.05
        && rel(k2, -1.43e-2) <= 0.05
        && c1.abs() <= 1e-12;
    v.record(
        "1 par_iterations",
        ok,
        format!(
            "gamma [{}]; K(1) {k1:.4e} vs -1.53e-1 ({:.2}%); K(2) {k2:.4e} vs -1.43e-2 ({:.2}%); |C(1)| {:.1e}",
            fmt_list(&gammas),
            100.0 * rel(k1, -1.53e-1),
            100.0 * rel(k2, -1.43e-2),
            c1.abs()
        ),
    );

    // 2: coarse-time sweep
    let t4 = table("par_coarse_time");
    let d: Vec<f64> = t4.iter().map(|r| comp(r, Component::D)).collect();
    let gammas: Vec<f64> = t4.iter().map(gamma).collect();
    let ok = rel(d[0], 7.31e-1) <= 0.05
        && rel(d[1], 4.13e-1) <= 0.05
        && d[1] < d[0]
        && gammas.iter().all(|&g| in_band(g, 0.99, 1.01));
    v.record(
        "2 par_coarse_time",
        ok,
        format!(
            "D [{}] vs [7.31e-1, 4.13e-1] ({:.2}%, {:.2}%); gamma [{}]",
            fmt_list(&d),
            100.0 * rel(d[0], 7.31e-1),
            100.0 * rel(d[1], 4.13e-1),
            fmt_list(&gammas)
        ),
    );

    // 3: Schwarz sweep count
    let t8 = table("pardd_iterations");
    let dk: Vec<f64> = t8.iter().map(|r| comp(r, Component::Dk)).collect();
    let dt: Vec<f64> = t8.iter().map(|r| comp(r, Component::Dt)).collect();
    let gammas: Vec<f64> = t8.iter().map(gamma).collect();
    let dk_ref = [4.49e-1, 4.40e-2];
    let dt_ref = [2.16e-1, 1.45e-1];
    let ok = (0..2).all(|i| rel(dk[i], dk_ref[i]) <= 0.10 && rel(dt[i], dt_ref[i]) <= 0.10)
        && gammas.iter().all(|&g| in_band(g, 0.98, 1.02));
    v.record(
        "3 pardd_iterations",
        ok,
        format!(
            "D_k [{}] vs [4.49e-1, 4.40e-2]; D_t [{}] vs [2.16e-1, 1.45e-1]; gamma [{}]",
            fmt_list(&dk),
            fmt_list(&dt),
            fmt_list(&gammas)
        ),
    );

    // 4: cG integrator
    let t11 = table("cg_par_iterations");
    let est = t11[0].breakdown.estimate;
    let (d1, kk1) = (comp(&t11[0], Component::D), comp(&t11[0], Component::K));
    let gammas: Vec<f64> = t11.iter().map(gamma).collect();
    let ok = rel(est, 1.02e-1) <= 0.05
        && d1 < 0.0
        && kk1 > 0.0
        && gammas.iter().all(|&g| in_band(g, 0.99, 1.01));
    v.record(
        "4 cg_par_iterations",
        ok,
        format!(
            "Est {est:.4e} vs 1.02e-1 ({:.2}%); sign(D, K) = ({}, {}); gamma [{}]",
            100.0 * rel(est, 1.02e-1),
            if d1 < 0.0 { "-" } else { "+" },
            if kk1 > 0.0 { "+" } else { "-" },
            fmt_list(&gammas)
        ),
    );

    // 5: properties
    let r = equivalence_deviation(20, 2024);
    v.record(
        "5a standard/variational equivalence",
        matches!(r, Ok(x) if x <= 1e-12),
        format!("{} over 20 random configurations (limit 1e-12)", show(&r)),
    );
    let mut worst: f64 = 0.0;
    let mut err = None;
    for p in 2..=4 {
        for h in [Handoff::Exact, Handoff::Nodal] {
            match exactness_deviation(p, h) {
                Ok(x) => worst = worst.max(x),
                Err(e) => err = Some(e.to_string()),
            }
        }
    }
    v.record(
        "5b exactness at k_t = P_t",
        err.is_none() && worst <= 1e-10,
        format!("{worst:.3e} for P_t in 2..=4 (limit 1e-10){}", err.map(|e| format!("; {e}")).unwrap_or_default()),
    );
    let r = dg0_deviation();
    v.record(
        "5c dG(0) equivalence",
        matches!(r, Ok(x) if x <= 1e-12),
        format!("{} (limit 1e-12)", show(&r)),
    );
    let r: Vec<_> = [TimeScheme::ImplicitEuler, TimeScheme::Cg(1), TimeScheme::Cg(2)]
        .into_iter()
        .map(|s| orthogonality_residual(s, 11))
        .collect();
    let ok = r.iter().all(|x| matches!(x, Ok(x) if *x <= 1e-12));
    v.record(
        "5d Galerkin orthogonality",
        ok,
        format!("Euler, cG(1), cG(2): [{}] (limit 1e-12)", r.iter().map(show).collect::<Vec<_>>().join(", ")),
    );
    let r = schwarz_deviation(5, 50);
    v.record(
        "5e Schwarz fixed point and 50-sweep convergence",
        matches!(r, Ok((a, b)) if a <= 1e-12 && b <= 1e-10),
        match &r {
            Ok((a, b)) => format!("fixed point {a:.3e}, after 50 sweeps {b:.3e} (limits 1e-12, 1e-10)"),
            Err(e) => format!("error: {e}"),
        },
    );
    let r = split_identity_defect(&small_stpa_config());
    v.record(
        "5f step split identity",
        matches!(r, Ok(x) if x <= 1e-14),
        format!("{} (limit 1e-14)", show(&r)),
    );
    let r = collapse_deviation(&small_stpa_config());
    v.record(
        "5g single-domain collapse",
        matches!(r, Ok(x) if x <= 1e-10),
        format!("{} (limit 1e-10)", show(&r)),
    );

    // 6: trends
    let t9 = table("pardd_subdomains");
    let dk9: Vec<f64> = t9.iter().map(|r| comp(r, Component::Dk)).collect();
    let k_mag = |t: &[RunRecord]| -> Vec<f64> { t.iter().map(|r| comp(r, Component::K).abs()).collect() };
    let (k1s, k11s) = (k_mag(&t1), k_mag(&t11));
    let decreasing = |x: &[f64]| x.windows(2).all(|w| w[1] < w[0]);
    let ok = decreasing(&dk) && dk9.windows(2).all(|w| w[1] > w[0])
        && decreasing(&k1s)
        && decreasing(&k11s);
    v.record(
        "6 trends",
        ok,
        format!(
            "D_k vs K_s [{}]; D_k vs P_s [{}]; |K| vs k_t [{}] and [{}]",
            fmt_list(&dk),
            fmt_list(&dk9),
            fmt_list(&k1s),
            fmt_list(&k11s)
        ),
    );

    let failed: Vec<&String> = v.lines.iter().filter(|(p, _)| !p).map(|(_, l)| l).collect();
    assert!(failed.is_empty(), "{} criteria failed:\n{}", failed.len(), failed.iter().map(|s| s.as_str()).collect::<Vec<_>>().join("\n"));
}

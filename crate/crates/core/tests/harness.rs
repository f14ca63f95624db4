use std::f64::consts::PI;

use parest::harness::report::{read_json, to_csv};
use parest::harness::{
    build_manufactured, emit_report, lookup, registry, render, run_experiment, run_sweep, true_qoi, ExperimentConfig,
    Integrator, OutputFormat, QoiWeight, RunRecord,
};
use parest::parareal::Handoff;
use parest::schwarz::{InitialGuess, OverlapRule};
use parest::Error;

fn simpson<F: Fn(f64) -> f64>(f: F, a: f64, b: f64, n: usize) -> f64 {
    let h = (b - a) / n as f64;
    let mut s = f(a) + f(b);
    for i in 1..n {
        s += if i % 2 == 1 { 4.0 } else { 2.0 } * f(a + i as f64 * h);
    }
    s * h / 3.0
}

fn bump(x: f64) -> f64 {
    10000.0 * (x - 0.2).powi(2) * (x - 0.6).powi(2)
}

#[test]
fn true_qoi_oracles() {
    for mu in [1.0, 2.0] {
        let b = build_manufactured(4.0, mu, 2.0, QoiWeight::default()).unwrap();
        let oracle = simpson(|x| bump(x) * (mu * PI * x).sin(), 0.2, 0.6, 20000);
        let got = true_qoi(&b).unwrap();
        assert!((got - oracle).abs() <= 1e-12 * oracle.abs().max(1.0), "mu = {mu}: {got} vs {oracle}");
    }
    let b = build_manufactured(0.25, 1.0, 2.0, QoiWeight::default()).unwrap();
    assert!(true_qoi(&b).unwrap().abs() <= 1e-14);
    assert!(build_manufactured(0.0, 1.0, 2.0, QoiWeight::default()).is_err());
}

fn tiny() -> ExperimentConfig {
    ExperimentConfig {
        nhat_t: 4,
        r: 2,
        p_t: 2,
        k_t: 1,
        nhat_s: 6,
        ..Default::default()
    }
}

fn sweep() -> Vec<RunRecord> {
    run_sweep(&tiny(), "K_t", &["1".into(), "2".into()]).unwrap()
}

#[test]
fn csv_layout() {
    let recs = sweep();
    let text = to_csv(&recs).unwrap();
    let lines: Vec<&str> = text.lines().collect();
    assert_eq!(lines.len(), 3);
    assert_eq!(lines[0], "K_t,est_err,gamma,D,K,C,A");
    for (line, v) in lines[1..].iter().zip(["1", "2"]) {
        let cells: Vec<&str> = line.split(',').collect();
        assert_eq!(cells.len(), 7);
        assert_eq!(cells[0], v);
        assert!(cells[1..].iter().all(|c| c.parse::<f64>().is_ok()));
    }
    let single = run_experiment(&tiny()).unwrap();
    assert_eq!(to_csv(&[single]).unwrap().lines().next().unwrap(), "est_err,gamma,D,K,C,A");
    assert!(to_csv(&[]).is_err());
}

#[test]
fn json_round_trip_is_exact() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("out.json");
    let recs = sweep();
    emit_report(&recs, OutputFormat::Json, &path).unwrap();
    let back = read_json(&path).unwrap();
    assert_eq!(back, recs);
    for (a, b) in back.iter().zip(&recs) {
        assert_eq!(a.breakdown.estimate.to_bits(), b.breakdown.estimate.to_bits());
    }
}

#[test]
fn output_is_deterministic() {
    let (a, b) = (sweep(), sweep());
    let strip = |r: &[RunRecord]| r.iter().map(|x| x.without_timing()).collect::<Vec<_>>();
    assert_eq!(strip(&a), strip(&b));
    for f in [OutputFormat::Csv, OutputFormat::Json] {
        assert_eq!(render(&strip(&a), f).unwrap(), render(&strip(&b), f).unwrap());
    }
}

#[test]
fn unwritable_path_is_an_io_error() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("missing").join("out.csv");
    let r = emit_report(&sweep(), OutputFormat::Csv, &path);
    assert!(matches!(r, Err(Error::Io { .. })), "{r:?}");
}

#[test]
fn config_files() {
    let c = ExperimentConfig {
        schwarz: true,
        handoff: Handoff::Exact,
        overlap_rule: OverlapRule::Block,
        schwarz_guess: InitialGuess::Previous,
        ..Default::default()
    };
    assert_eq!(ExperimentConfig::from_toml_str(&c.to_toml_string()).unwrap(), c);
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("run.toml");
    std::fs::write(&path, "nu = 4.0\nmu = 2.0\nNhat_t = 10\nP_t = 5\nK_t = 2\nhandoff = \"exact\"\n").unwrap();
    let loaded = ExperimentConfig::load(&path).unwrap();
    assert_eq!((loaded.mu, loaded.nhat_t, loaded.p_t, loaded.handoff), (2.0, 10, 5, Handoff::Exact));
    assert!(matches!(ExperimentConfig::from_toml_str("colour = 1\n"), Err(Error::Parse(_))));
    assert!(matches!(ExperimentConfig::from_toml_str("P_t = 3\n"), Err(Error::Config(_))));
    assert!(matches!(ExperimentConfig::from_toml_str("K_t = 0\n"), Err(Error::Config(_))));
    assert!(ExperimentConfig::from_toml_str("schwarz = true\nintegrator = \"cg\"\n").is_err());
    assert!(ExperimentConfig::from_toml_str("schwarz = true\nP_s = 3\n").is_err());
    assert!(matches!(ExperimentConfig::load(&dir.path().join("none.toml")), Err(Error::Io { .. })));
}

#[test]
fn sweep_parameters() {
    let mut c = ExperimentConfig::default();
    c.set_param("integrator", "cg").unwrap();
    c.set_param("overlap_rule", "block").unwrap();
    c.set_param("schwarz_guess", "previous").unwrap();
    c.set_param("beta", "0.3").unwrap();
    assert_eq!(c.integrator, Integrator::Cg);
    assert_eq!(c.overlap_rule, OverlapRule::Block);
    assert_eq!(c.schwarz_guess, InitialGuess::Previous);
    assert_eq!(c.beta, 0.3);
    assert!(c.set_param("K_t", "two").is_err());
    assert!(c.set_param("nonsense", "1").is_err());
    assert!(run_sweep(&tiny(), "K_t", &[]).is_err());
}

#[test]
fn registry_contents() {
    let r = registry();
    assert_eq!(r.len(), 15);
    for (i, t) in r.iter().enumerate() {
        assert_eq!(t.number, i + 1);
        assert_eq!(lookup(t.name).unwrap().number, t.number);
        assert_eq!(lookup(&format!("table{}", t.number)).unwrap().name, t.name);
        for v in &t.values {
            t.row_config(v).unwrap();
        }
    }
    assert!(lookup("no_such_table").is_err());
    let stpa = lookup("pardd_overlap").unwrap().base;
    assert!(stpa.schwarz);
    let rec = run_experiment(&ExperimentConfig { k_s: 1, nhat_t: 4, r: 1, p_t: 2, ..stpa }).unwrap();
    let labels: Vec<String> = rec.row().into_iter().map(|(l, _)| l).collect();
    assert_eq!(labels, ["est_err", "gamma", "D_t", "D_s", "D_k", "K", "C", "A"]);
}

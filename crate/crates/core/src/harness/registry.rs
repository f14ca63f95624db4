use crate::error::{Error, Result};

use super::config::{ExperimentConfig, Integrator};
use super::run::{run_sweep, RunRecord};

/// A named parameter sweep over a fixed base configuration.
#[derive(Debug, Clone)]
pub struct TableSpec {
    pub number: usize,
    pub name: &'static str,
    pub base: ExperimentConfig,
    pub param: &'static str,
    pub values: Vec<String>,
}

impl TableSpec {
    pub fn run(&self) -> Result<Vec<RunRecord>> {
        run_sweep(&self.base, self.param, &self.values)
    }

    /// Configuration of row `value`.
    pub fn row_config(&self, value: &str) -> Result<ExperimentConfig> {
        let mut c = self.base.clone();
        c.set_param(self.param, value)?;
        c.validate()?;
        Ok(c)
    }
}

fn vals(v: &[&str]) -> Vec<String> {
    v.iter().map(|s| s.to_string()).collect()
}

fn tpa(nhat_t: usize, r: usize, p_t: usize, k_t: usize) -> ExperimentConfig {
    ExperimentConfig {
        nu: 4.0,
        mu: 1.0,
        nhat_t,
        r,
        p_t,
        k_t,
        nhat_s: 20,
        qhat_s: 1,
        q_s: 2,
        ..Default::default()
    }
}

fn stpa(nhat_t: usize, r: usize, nhat_s: usize, p_s: usize, k_s: usize, beta: f64) -> ExperimentConfig {
    ExperimentConfig {
        nu: 4.0,
        mu: 2.0,
        nhat_t,
        r,
        p_t: 10,
        k_t: 2,
        nhat_s,
        qhat_s: 1,
        q_s: 2,
        schwarz: true,
        p_s,
        k_s,
        beta,
        tau: 0.4,
        ..Default::default()
    }
}

fn cg(c: ExperimentConfig) -> ExperimentConfig {
    ExperimentConfig {
        integrator: Integrator::Cg,
        qhat_t: 1,
        q_t: 1,
        ..c
    }
}

/// The built-in sweeps, numbered in registry order.
pub fn registry() -> Vec<TableSpec> {
    let mut t = Vec::new();
    let mut push = |name, base, param, values: &[&str]| {
        t.push(TableSpec {
            number: t.len() + 1,
            name,
            base,
            param,
            values: vals(values),
        })
    };
    push("par_iterations", tpa(20, 16, 10, 1), "K_t", &["1", "2", "3"]);
    push("par_subdomains", tpa(40, 4, 10, 2), "P_t", &["2", "5", "10"]);
    push("par_fine_time", tpa(10, 2, 10, 2), "r", &["2", "4"]);
    push("par_coarse_time", tpa(10, 2, 10, 2), "Nhat_t", &["10", "20"]);
    push(
        "par_space",
        ExperimentConfig { q_s: 1, ..tpa(100, 8, 10, 6) },
        "Nhat_s",
        &["5", "10", "20"],
    );
    push("pardd_fine_time", stpa(10, 2, 80, 2, 8, 0.2), "r", &["2", "4", "8"]);
    push("pardd_coarse_time", stpa(10, 2, 80, 2, 8, 0.2), "Nhat_t", &["10", "20", "40"]);
    push("pardd_iterations", stpa(20, 2, 20, 2, 2, 0.2), "K_s", &["2", "6"]);
    push("pardd_subdomains", stpa(20, 2, 40, 2, 2, 0.1), "P_s", &["2", "4"]);
    push("pardd_overlap", stpa(20, 2, 20, 2, 2, 0.2), "beta", &["0.1", "0.2"]);
    push("cg_par_iterations", cg(tpa(10, 4, 10, 1)), "K_t", &["1", "2", "3"]);
    push("cg_par_subdomains", cg(tpa(10, 4, 10, 2)), "P_t", &["2", "5", "10"]);
    push("cg_par_fine_time", cg(tpa(10, 2, 10, 2)), "r", &["2", "4"]);
    push("cg_par_coarse_time", cg(tpa(10, 2, 10, 2)), "Nhat_t", &["10", "20"]);
    push(
        "cg_par_space",
        cg(ExperimentConfig { q_s: 1, ..tpa(20, 6, 10, 6) }),
        "Nhat_s",
        &["5", "10", "20"],
    );
    t
}

/// Looks a table up by name, by `table<N>`, or by its number.
pub fn lookup(key: &str) -> Result<TableSpec> {
    let key = key.trim();
    let number = key
        .strip_prefix("table")
        .unwrap_or(key)
        .parse::<usize>()
        .ok();
    registry()
        .into_iter()
        .find(|t| t.name == key || Some(t.number) == number)
        .ok_or_else(|| Error::Config(format!("no table named {key:?}")))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn all_rows_validate() {
        for t in registry() {
            for v in &t.values {
                t.row_config(v).unwrap_or_else(|e| panic!("{} {v}: {e}", t.name));
            }
        }
    }

    #[test]
    fn lookup_forms() {
        assert_eq!(lookup("par_iterations").unwrap().number, 1);
        assert_eq!(lookup("table8").unwrap().name, "pardd_iterations");
        assert_eq!(lookup("15").unwrap().name, "cg_par_space");
        assert!(lookup("nope").is_err());
    }
}

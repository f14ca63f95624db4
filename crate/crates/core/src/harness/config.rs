use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::adjoint::SpatialAdjointVariant;
use crate::error::{Error, Result};
use crate::fem::basis::MAX_DEGREE;
use crate::fem::SpatialMesh;
use crate::parareal::Handoff;
use crate::problem::QoiWeight;
use crate::schwarz::{decompose_domain, InitialGuess, OverlapRule};
use crate::time::TimeScheme;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Integrator {
    Be,
    Cg,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum OutputFormat {
    #[default]
    Csv,
    Json,
}

/// One experiment, as flat keys named after the discretization symbols.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ExperimentConfig {
    pub nu: f64,
    pub mu: f64,
    #[serde(rename = "T")]
    pub t_final: f64,
    pub x_lo: f64,
    pub x_hi: f64,
    pub scale: f64,

    #[serde(rename = "Nhat_t")]
    pub nhat_t: usize,
    pub r: usize,
    #[serde(rename = "P_t")]
    pub p_t: usize,
    #[serde(rename = "K_t")]
    pub k_t: usize,
    pub integrator: Integrator,
    pub qhat_t: usize,
    pub q_t: usize,
    pub handoff: Handoff,

    #[serde(rename = "Nhat_s")]
    pub nhat_s: usize,
    pub qhat_s: usize,
    pub q_s: usize,

    pub schwarz: bool,
    #[serde(rename = "P_s")]
    pub p_s: usize,
    #[serde(rename = "K_s")]
    pub k_s: usize,
    pub beta: f64,
    pub tau: f64,
    pub overlap_rule: OverlapRule,
    pub schwarz_guess: InitialGuess,
    pub spatial_adjoint: SpatialAdjointVariant,

    pub adjoint_time_degree: usize,
    pub adjoint_space_degree: usize,

    pub format: OutputFormat,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub output: Option<PathBuf>,
}

impl Default for ExperimentConfig {
    fn default() -> Self {
        let w = QoiWeight::default();
        Self {
            nu: 4.0,
            mu: 1.0,
            t_final: 2.0,
            x_lo: w.x_lo,
            x_hi: w.x_hi,
            scale: w.scale,
            nhat_t: 20,
            r: 16,
            p_t: 10,
            k_t: 1,
            integrator: Integrator::Be,
            qhat_t: 1,
            q_t: 1,
            handoff: Handoff::Nodal,
            nhat_s: 20,
            qhat_s: 1,
            q_s: 2,
            schwarz: false,
            p_s: 2,
            k_s: 2,
            beta: 0.2,
            tau: 0.4,
            overlap_rule: OverlapRule::Domain,
            schwarz_guess: InitialGuess::Zero,
            spatial_adjoint: SpatialAdjointVariant::Sensitivity,
            adjoint_time_degree: 3,
            adjoint_space_degree: 3,
            format: OutputFormat::Csv,
            output: None,
        }
    }
}

impl ExperimentConfig {
    pub fn from_toml_str(text: &str) -> Result<Self> {
        let cfg: Self = toml::from_str(text).map_err(|e| Error::Parse(e.to_string()))?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|source| Error::Io {
            path: path.to_path_buf(),
            source,
        })?;
        Self::from_toml_str(&text)
    }

    pub fn to_toml_string(&self) -> String {
        toml::to_string(self).expect("config serializes")
    }

    pub fn qoi(&self) -> QoiWeight {
        QoiWeight {
            x_lo: self.x_lo,
            x_hi: self.x_hi,
            scale: self.scale,
        }
    }

    pub fn coarse_scheme(&self) -> TimeScheme {
        match self.integrator {
            Integrator::Be => TimeScheme::ImplicitEuler,
            Integrator::Cg => TimeScheme::Cg(self.qhat_t),
        }
    }

    pub fn fine_scheme(&self) -> TimeScheme {
        match self.integrator {
            Integrator::Be => TimeScheme::ImplicitEuler,
            Integrator::Cg => TimeScheme::Cg(self.q_t),
        }
    }

    /// Checks every constraint that can be checked without solving.
    pub fn validate(&self) -> Result<()> {
        let bad = |m: String| Err(Error::Config(m));
        if self.nu == 0.0 || self.mu == 0.0 {
            return bad("nu and mu must be nonzero".into());
        }
        if !(self.t_final > 0.0) {
            return bad("T must be positive".into());
        }
        if !(self.x_lo < self.x_hi) {
            return bad("x_lo must be below x_hi".into());
        }
        if self.nhat_t == 0 || self.p_t == 0 || self.r == 0 || self.k_t == 0 {
            return bad("Nhat_t, P_t, r and K_t must be positive".into());
        }
        if self.nhat_t % self.p_t != 0 {
            return bad(format!(
                "Nhat_t = {} is not divisible by P_t = {}",
                self.nhat_t, self.p_t
            ));
        }
        if self.nhat_s == 0 {
            return bad("Nhat_s must be positive".into());
        }
        if self.qhat_s == 0 || self.q_s > MAX_DEGREE || self.qhat_s > self.q_s {
            return bad(format!(
                "need 1 <= qhat_s <= q_s <= {MAX_DEGREE}, got {} and {}",
                self.qhat_s, self.q_s
            ));
        }
        if self.adjoint_space_degree == 0 || self.adjoint_space_degree > MAX_DEGREE {
            return bad(format!("adjoint_space_degree must lie in 1..={MAX_DEGREE}"));
        }
        if self.adjoint_time_degree == 0 || self.adjoint_time_degree > MAX_DEGREE {
            return bad(format!("adjoint_time_degree must lie in 1..={MAX_DEGREE}"));
        }
        if self.integrator == Integrator::Cg
            && (self.qhat_t == 0 || self.q_t == 0 || self.qhat_t > MAX_DEGREE || self.q_t > MAX_DEGREE)
        {
            return bad("cG time degrees must be positive".into());
        }
        if self.schwarz {
            if self.integrator != Integrator::Be {
                return bad("Schwarz fine solves need the be integrator".into());
            }
            if self.k_s == 0 {
                return bad("K_s must be positive".into());
            }
            let mesh = SpatialMesh::uniform(0.0, 1.0, self.nhat_s)?;
            decompose_domain(&mesh, self.p_s, self.beta, self.tau, self.overlap_rule)?;
        }
        Ok(())
    }

    /// Assigns one key from its textual value, as used by sweeps.
    pub fn set_param(&mut self, name: &str, value: &str) -> Result<()> {
        fn num<T: std::str::FromStr>(name: &str, v: &str) -> Result<T> {
            v.trim()
                .parse()
                .map_err(|_| Error::Parse(format!("bad value {v:?} for {name}")))
        }
        match name {
            "nu" => self.nu = num(name, value)?,
            "mu" => self.mu = num(name, value)?,
            "T" => self.t_final = num(name, value)?,
            "x_lo" => self.x_lo = num(name, value)?,
            "x_hi" => self.x_hi = num(name, value)?,
            "scale" => self.scale = num(name, value)?,
            "Nhat_t" => self.nhat_t = num(name, value)?,
            "r" => self.r = num(name, value)?,
            "P_t" => self.p_t = num(name, value)?,
            "K_t" => self.k_t = num(name, value)?,
            "qhat_t" => self.qhat_t = num(name, value)?,
            "q_t" => self.q_t = num(name, value)?,
            "Nhat_s" => self.nhat_s = num(name, value)?,
            "qhat_s" => self.qhat_s = num(name, value)?,
            "q_s" => self.q_s = num(name, value)?,
            "P_s" => self.p_s = num(name, value)?,
            "K_s" => self.k_s = num(name, value)?,
            "beta" => self.beta = num(name, value)?,
            "tau" => self.tau = num(name, value)?,
            "adjoint_time_degree" => self.adjoint_time_degree = num(name, value)?,
            "adjoint_space_degree" => self.adjoint_space_degree = num(name, value)?,
            "handoff" => {
                self.handoff = match value.trim() {
                    "exact" => Handoff::Exact,
                    "nodal" => Handoff::Nodal,
                    v => return Err(Error::Parse(format!("bad value {v:?} for handoff"))),
                }
            }
            "integrator" => {
                self.integrator = match value.trim() {
                    "be" => Integrator::Be,
                    "cg" => Integrator::Cg,
                    v => return Err(Error::Parse(format!("bad value {v:?} for integrator"))),
                }
            }
            "schwarz" => self.schwarz = num(name, value)?,
            "overlap_rule" => {
                self.overlap_rule = match value.trim() {
                    "domain" => OverlapRule::Domain,
                    "block" => OverlapRule::Block,
                    v => return Err(Error::Parse(format!("bad value {v:?} for overlap_rule"))),
                }
            }
            "schwarz_guess" => {
                self.schwarz_guess = match value.trim() {
                    "zero" => InitialGuess::Zero,
                    "previous" => InitialGuess::Previous,
                    v => return Err(Error::Parse(format!("bad value {v:?} for schwarz_guess"))),
                }
            }
            _ => return Err(Error::Config(format!("unknown sweep parameter {name:?}"))),
        }
        Ok(())
    }
}

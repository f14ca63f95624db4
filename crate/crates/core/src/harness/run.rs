use std::sync::Arc;
use std::time::Instant;

use serde::{Deserialize, Serialize};

use crate::adjoint::{AdjointSolver, TemporalAdjoints};
use crate::error::{Error, Result, ResultExt};
use crate::estimator::{stpa_breakdown, tpa_breakdown, ErrorBreakdown};
use crate::fem::assembly::qoi_eval;
use crate::fem::{FeSpace, NodalField, SpatialMesh, SpatialOperators};
use crate::parareal::{vpar, DirectPropagator, GridLevel, PararealState, Propagator, SchwarzPropagator};
use crate::problem::{build_manufactured, true_qoi, ProblemBundle};
use crate::schwarz::SchwarzSettings;
use crate::time::TimePartition;

use super::config::ExperimentConfig;

/// Result of one experiment, ready for reporting.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunRecord {
    pub config: ExperimentConfig,
    /// Swept parameter name and value, when the record is a sweep row.
    pub parameter: Option<(String, String)>,
    pub breakdown: ErrorBreakdown,
    pub true_qoi: Option<f64>,
    pub computed_qoi: f64,
    pub wall_seconds: f64,
}

impl RunRecord {
    pub fn estimated_error(&self) -> f64 {
        self.breakdown.estimate
    }

    /// Column labels and values in table order: estimate, effectivity,
    /// then the components.
    pub fn row(&self) -> Vec<(String, f64)> {
        let mut out = vec![
            ("est_err".to_string(), self.breakdown.estimate),
            ("gamma".to_string(), self.breakdown.gamma.unwrap_or(f64::NAN)),
        ];
        out.extend(
            self.breakdown
                .components
                .iter()
                .map(|(c, v)| (c.label().to_string(), *v)),
        );
        out
    }

    /// Record with the wall time zeroed, for reproducibility comparisons.
    pub fn without_timing(&self) -> RunRecord {
        RunRecord {
            wall_seconds: 0.0,
            ..self.clone()
        }
    }
}

/// Spaces, operators and solvers built from a config.
pub struct Discretization {
    pub problem: ProblemBundle,
    pub partition: TimePartition,
    pub coarse_ops: Arc<SpatialOperators>,
    pub fine_ops: Arc<SpatialOperators>,
    pub adjoint_ops: Arc<SpatialOperators>,
    pub schwarz: Option<SchwarzSettings>,
}

impl Discretization {
    pub fn new(config: &ExperimentConfig) -> Result<Self> {
        config.validate()?;
        let problem = build_manufactured(config.nu, config.mu, config.t_final, config.qoi())?;
        let partition = TimePartition::new(config.t_final, config.nhat_t, config.r, config.p_t)?;
        let mesh = Arc::new(SpatialMesh::uniform(problem.a, problem.b, config.nhat_s)?);
        let ops = |q: usize| -> Result<Arc<SpatialOperators>> {
            SpatialOperators::new(&FeSpace::new(mesh.clone(), q)?)
        };
        let coarse_ops = ops(config.qhat_s).context(|| "coarse space".into())?;
        let fine_ops = ops(config.q_s).context(|| "fine space".into())?;
        let adjoint_ops = ops(config.adjoint_space_degree).context(|| "adjoint space".into())?;
        let schwarz = if config.schwarz {
            Some(SchwarzSettings::new(
                fine_ops.space(),
                config.p_s,
                config.beta,
                config.tau,
                config.overlap_rule,
                config.k_s,
                config.schwarz_guess,
            )?)
        } else {
            None
        };
        Ok(Self {
            problem,
            partition,
            coarse_ops,
            fine_ops,
            adjoint_ops,
            schwarz,
        })
    }

    pub fn coarse_propagator(&self, config: &ExperimentConfig) -> DirectPropagator {
        DirectPropagator::new(
            self.coarse_ops.clone(),
            config.coarse_scheme(),
            &self.partition,
            GridLevel::Coarse,
            self.problem.source.clone(),
        )
    }

    pub fn fine_propagator(&self, config: &ExperimentConfig) -> Box<dyn Propagator> {
        match &self.schwarz {
            Some(s) => Box::new(SchwarzPropagator::new(
                self.fine_ops.clone(),
                s.clone(),
                &self.partition,
                self.problem.source.clone(),
            )),
            None => Box::new(DirectPropagator::new(
                self.fine_ops.clone(),
                config.fine_scheme(),
                &self.partition,
                GridLevel::Fine,
                self.problem.source.clone(),
            )),
        }
    }

    /// Nodal interpolant of the initial value in the coarse space.
    pub fn initial_value(&self) -> NodalField {
        let u0 = self.problem.u0.clone();
        NodalField::interpolate(self.coarse_ops.space(), move |x| u0(x))
    }
}

/// Everything produced by a run, for callers that need more than the record.
pub struct ExperimentRun {
    pub discretization: Discretization,
    pub state: PararealState,
    pub adjoints: TemporalAdjoints,
    pub record: RunRecord,
}

/// Runs parareal to `K_t`, solves the adjoints and splits the error.
pub fn run_detailed(config: &ExperimentConfig) -> Result<ExperimentRun> {
    let start = Instant::now();
    let disc = Discretization::new(config)?;
    let coarse = disc.coarse_propagator(config);
    let fine = disc.fine_propagator(config);
    let state = vpar(&disc.partition, config.k_t, &disc.initial_value(), fine.as_ref(), &coarse, config.handoff)
        .context(|| "parareal".into())?;
    let solver = AdjointSolver::new(disc.adjoint_ops.clone(), config.adjoint_time_degree)?;
    let psi = disc.problem.psi.clone();
    let adjoints = TemporalAdjoints::solve(&solver, &disc.partition, move |x| psi(x))
        .context(|| "adjoints".into())?;
    let breakdown = match &disc.schwarz {
        None => tpa_breakdown(&state, config.k_t, &adjoints, &disc.problem),
        Some(s) => stpa_breakdown(
            &state,
            config.k_t,
            &adjoints,
            &disc.adjoint_ops,
            &s.decomposition,
            config.spatial_adjoint,
            &disc.problem,
        ),
    }
    .context(|| "estimator".into())?;
    let psi = disc.problem.psi.clone();
    let computed_qoi = qoi_eval(move |x| psi(x), &state.final_value());
    let record = RunRecord {
        config: config.clone(),
        parameter: None,
        breakdown,
        true_qoi: true_qoi(&disc.problem),
        computed_qoi,
        wall_seconds: start.elapsed().as_secs_f64(),
    };
    Ok(ExperimentRun {
        discretization: disc,
        state,
        adjoints,
        record,
    })
}

pub fn run_experiment(config: &ExperimentConfig) -> Result<RunRecord> {
    Ok(run_detailed(config)?.record)
}

/// Runs `config` once per value of `param`, in order.
pub fn run_sweep(config: &ExperimentConfig, param: &str, values: &[String]) -> Result<Vec<RunRecord>> {
    use rayon::prelude::*;
    if values.is_empty() {
        return Err(Error::Config("sweep needs at least one value".into()));
    }
    let configs = values
        .iter()
        .map(|v| {
            let mut c = config.clone();
            c.set_param(param, v)?;
            c.validate().context(|| format!("{param} = {v}"))?;
            Ok(c)
        })
        .collect::<Result<Vec<_>>>()?;
    configs
        .par_iter()
        .zip(values)
        .map(|(c, v)| {
            let mut rec = run_experiment(c).context(|| format!("{param} = {v}"))?;
            rec.parameter = Some((param.to_string(), v.clone()));
            Ok(rec)
        })
        .collect()
}

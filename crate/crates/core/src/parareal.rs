//! Parareal iterations over a [`TimePartition`].

use std::sync::Arc;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result, ResultExt};
use crate::fem::{FeSpace, NodalField, SpatialOperators};
use crate::schwarz::{propagate_be_schwarz, SchwarzSettings, SchwarzSweepRecord};
use crate::time::{propagate, Source, TimePartition, TimeScheme, Trajectory};

/// Output of one subdomain solve. `sweeps` holds one Schwarz record per
/// step when the propagator uses domain decomposition.
#[derive(Debug, Clone)]
pub struct Propagation {
    pub trajectory: Trajectory,
    pub sweeps: Vec<SchwarzSweepRecord>,
}

/// A solver for subdomain `p` (1-based) of a fixed time partition.
pub trait Propagator: Send + Sync {
    fn space(&self) -> &Arc<FeSpace>;
    fn scheme(&self) -> TimeScheme;
    fn propagate(&self, p: usize, ic: &NodalField) -> Result<Propagation>;
}

/// Which grid of the partition a propagator steps on.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum GridLevel {
    Coarse,
    Fine,
}

fn grids_for(partition: &TimePartition, level: GridLevel) -> Vec<Vec<f64>> {
    (1..=partition.subdomains())
        .map(|p| match level {
            GridLevel::Coarse => partition.coarse_grid(p),
            GridLevel::Fine => partition.fine_grid(p),
        })
        .collect()
}

/// Serial-in-space propagator: implicit Euler or cG(q) with direct solves.
pub struct DirectPropagator {
    ops: Arc<SpatialOperators>,
    scheme: TimeScheme,
    grids: Vec<Vec<f64>>,
    source: Arc<Source>,
}

impl DirectPropagator {
    pub fn new(
        ops: Arc<SpatialOperators>,
        scheme: TimeScheme,
        partition: &TimePartition,
        level: GridLevel,
        source: Arc<Source>,
    ) -> Self {
        Self {
            ops,
            scheme,
            grids: grids_for(partition, level),
            source,
        }
    }

    pub fn grid(&self, p: usize) -> &[f64] {
        &self.grids[p - 1]
    }
}

impl Propagator for DirectPropagator {
    fn space(&self) -> &Arc<FeSpace> {
        self.ops.space()
    }

    fn scheme(&self) -> TimeScheme {
        self.scheme
    }

    fn propagate(&self, p: usize, ic: &NodalField) -> Result<Propagation> {
        let grid = self.grids.get(p - 1).ok_or_else(|| {
            Error::IntervalMismatch(format!("subdomain {p} outside the partition"))
        })?;
        let trajectory = propagate(&self.ops, self.scheme, grid, ic, self.source.as_ref())?;
        Ok(Propagation {
            trajectory,
            sweeps: Vec::new(),
        })
    }
}

/// Implicit Euler whose step systems are solved by Schwarz sweeps.
pub struct SchwarzPropagator {
    ops: Arc<SpatialOperators>,
    settings: SchwarzSettings,
    grids: Vec<Vec<f64>>,
    source: Arc<Source>,
}

impl SchwarzPropagator {
    pub fn new(
        ops: Arc<SpatialOperators>,
        settings: SchwarzSettings,
        partition: &TimePartition,
        source: Arc<Source>,
    ) -> Self {
        Self {
            ops,
            settings,
            grids: grids_for(partition, GridLevel::Fine),
            source,
        }
    }

    pub fn settings(&self) -> &SchwarzSettings {
        &self.settings
    }
}

impl Propagator for SchwarzPropagator {
    fn space(&self) -> &Arc<FeSpace> {
        self.ops.space()
    }

    fn scheme(&self) -> TimeScheme {
        TimeScheme::ImplicitEuler
    }

    fn propagate(&self, p: usize, ic: &NodalField) -> Result<Propagation> {
        let grid = self.grids.get(p - 1).ok_or_else(|| {
            Error::IntervalMismatch(format!("subdomain {p} outside the partition"))
        })?;
        let (trajectory, sweeps) = propagate_be_schwarz(
            &self.ops,
            &self.settings.decomposition,
            self.settings.sweeps,
            self.settings.guess,
            grid,
            ic,
            self.source.as_ref(),
        )?;
        Ok(Propagation { trajectory, sweeps })
    }
}

/// How the corrected synchronization value `α = Û^{p−1}(T_{p−1}) + C_{p−1}`
/// is handed to the solvers of subdomain `p`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Handoff {
    /// `α` itself; it may lie outside the coarse space.
    Exact,
    /// The nodal interpolant of `α` in the coarse space, so that every
    /// coarse trajectory starts inside its own space.
    #[default]
    Nodal,
}

impl Handoff {
    pub fn apply(self, alpha: NodalField, coarse: &Arc<FeSpace>) -> Result<NodalField> {
        match self {
            Handoff::Exact => Ok(alpha),
            Handoff::Nodal => alpha.lift_to(coarse),
        }
    }
}

/// Coarse and fine solves of one parareal iteration, indexed by `p − 1`.
#[derive(Debug, Clone)]
pub struct PararealIteration {
    pub coarse: Vec<Trajectory>,
    pub fine: Vec<Propagation>,
    /// `C_p^k = U^p(T_p) − Û^p(T_p)` in the fine space.
    pub corrections: Vec<NodalField>,
}

impl PararealIteration {
    pub fn coarse_traj(&self, p: usize) -> &Trajectory {
        &self.coarse[p - 1]
    }

    pub fn fine_traj(&self, p: usize) -> &Trajectory {
        &self.fine[p - 1].trajectory
    }

    pub fn correction(&self, p: usize) -> &NodalField {
        &self.corrections[p - 1]
    }
}

/// Full history of a parareal run.
#[derive(Debug, Clone)]
pub struct PararealState {
    pub partition: TimePartition,
    pub u0_hat: NodalField,
    pub iterations: Vec<PararealIteration>,
}

impl PararealState {
    pub fn iterations_done(&self) -> usize {
        self.iterations.len()
    }

    /// Iteration `k`, 1-based.
    pub fn iteration(&self, k: usize) -> &PararealIteration {
        &self.iterations[k - 1]
    }

    pub fn last(&self) -> &PararealIteration {
        self.iterations.last().expect("at least one iteration")
    }

    /// Fine solution at `T` after the last iteration.
    pub fn final_value(&self) -> NodalField {
        self.last().fine.last().unwrap().trajectory.final_value()
    }
}

/// Runs `iterations` parareal sweeps. Coarse solves are sequential; the
/// fine solves of one iteration run in parallel and are collected in
/// subdomain order.
pub fn vpar(
    partition: &TimePartition,
    iterations: usize,
    u0_hat: &NodalField,
    fine: &dyn Propagator,
    coarse: &dyn Propagator,
    handoff: Handoff,
) -> Result<PararealState> {
    if iterations == 0 {
        return Err(Error::Config("K_t must be at least 1".into()));
    }
    if !u0_hat.space().same_as(coarse.space()) {
        return Err(Error::IncompatibleSpaces(
            "initial value must live in the coarse space".into(),
        ));
    }
    if !coarse.space().shares_mesh(fine.space()) || coarse.space().degree() > fine.space().degree()
    {
        return Err(Error::IncompatibleSpaces(
            "coarse space must be nested in the fine space".into(),
        ));
    }
    let np = partition.subdomains();
    let fine_space = fine.space().clone();
    let mut history: Vec<PararealIteration> = Vec::with_capacity(iterations);
    for k in 1..=iterations {
        let mut coarse_trajs: Vec<Trajectory> = Vec::with_capacity(np);
        for p in 1..=np {
            let ic = if p == 1 {
                u0_hat.clone()
            } else {
                let prev_end = coarse_trajs[p - 2].final_value();
                let alpha = match history.last() {
                    Some(it) => prev_end.add_scaled(1.0, it.correction(p - 1))?,
                    None => prev_end,
                };
                handoff.apply(alpha, coarse.space())?
            };
            let g = coarse
                .propagate(p, &ic)
                .context(|| format!("coarse solve k={k}, p={p}"))?;
            coarse_trajs.push(g.trajectory);
        }
        let fine_runs: Vec<Propagation> = (1..=np)
            .into_par_iter()
            .map(|p| {
                fine.propagate(p, coarse_trajs[p - 1].incoming())
                    .context(|| format!("fine solve k={k}, p={p}"))
            })
            .collect::<Result<Vec<_>>>()?;
        let corrections = fine_runs
            .iter()
            .zip(&coarse_trajs)
            .map(|(f, g)| {
                let gl = g.final_value().lift_to(&fine_space)?;
                f.trajectory.final_value().add_scaled(-1.0, &gl)
            })
            .collect::<Result<Vec<_>>>()?;
        history.push(PararealIteration {
            coarse: coarse_trajs,
            fine: fine_runs,
            corrections,
        });
    }
    Ok(PararealState {
        partition: partition.clone(),
        u0_hat: u0_hat.clone(),
        iterations: history,
    })
}

/// Synchronisation values of the textbook parareal recursion, per
/// iteration: `tilde[k][p]` for `p = 0..=P`, `bar[k][p − 1]` and
/// `corrections[k][p − 1]` for `p = 1..=P`.
#[derive(Debug, Clone)]
pub struct StandardParareal {
    pub tilde: Vec<Vec<NodalField>>,
    pub bar: Vec<Vec<NodalField>>,
    pub corrections: Vec<Vec<NodalField>>,
}

impl StandardParareal {
    pub fn final_value(&self) -> &NodalField {
        self.tilde.last().unwrap().last().unwrap()
    }
}

/// `Ũ_p = G[Ũ_{p−1}](T_p) + C_p^{k−1}`, `Ū_p = F[Ũ_{p−1}](T_p)` and
/// `C_p^k = Ū_p − G[Ũ_{p−1}](T_p)`, with `C^0 = 0`. Both solvers start
/// from the handed-off value of `Ũ_{p−1}`.
pub fn par_standard(
    partition: &TimePartition,
    iterations: usize,
    u0: &NodalField,
    fine: &dyn Propagator,
    coarse: &dyn Propagator,
    handoff: Handoff,
) -> Result<StandardParareal> {
    if iterations == 0 {
        return Err(Error::Config("K_t must be at least 1".into()));
    }
    let np = partition.subdomains();
    let fs = fine.space().clone();
    let u0 = u0.lift_to(&fs)?;
    let mut out = StandardParareal {
        tilde: Vec::new(),
        bar: Vec::new(),
        corrections: Vec::new(),
    };
    let zero = NodalField::zeros(&fs);
    for _ in 0..iterations {
        let mut tilde = vec![u0.clone()];
        let mut starts = Vec::with_capacity(np);
        let mut gvals = Vec::with_capacity(np);
        for p in 1..=np {
            let start = handoff.apply(tilde[p - 1].clone(), coarse.space())?;
            let g = coarse.propagate(p, &start)?.trajectory.final_value();
            starts.push(start);
            let g = g.lift_to(&fs)?;
            let c = out.corrections.last().map_or(&zero, |c: &Vec<NodalField>| &c[p - 1]);
            tilde.push(g.add_scaled(1.0, c)?);
            gvals.push(g);
        }
        let bar: Vec<NodalField> = (1..=np)
            .into_par_iter()
            .map(|p| Ok(fine.propagate(p, &starts[p - 1])?.trajectory.final_value()))
            .collect::<Result<Vec<_>>>()?;
        let corr = bar
            .iter()
            .zip(&gvals)
            .map(|(b, g)| b.add_scaled(-1.0, g))
            .collect::<Result<Vec<_>>>()?;
        out.tilde.push(tilde);
        out.bar.push(bar);
        out.corrections.push(corr);
    }
    Ok(out)
}

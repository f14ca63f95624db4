use std::sync::Arc;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::fem::basis::LagrangeBasis;
use crate::fem::{FeSpace, NodalField};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum TimeScheme {
    /// Implicit Euler, read as dG(0) with right-endpoint quadrature.
    ImplicitEuler,
    /// Continuous Galerkin of the given degree.
    Cg(usize),
}

impl TimeScheme {
    /// Polynomial degree in time of the trial space.
    pub fn degree(self) -> usize {
        match self {
            TimeScheme::ImplicitEuler => 0,
            TimeScheme::Cg(q) => q,
        }
    }
}

/// A space-time finite element function on a step grid.
///
/// Implicit Euler stores one coefficient vector per step (the value on
/// `(t_{n-1}, t_n]`). cG(q) stores `q + 1` vectors per slab, node `j` sitting
/// at `t_{n-1} + j Δt / q`. `incoming` is the left limit at the first grid
/// point, which may live in another space.
#[derive(Debug, Clone)]
pub struct Trajectory {
    scheme: TimeScheme,
    space: Arc<FeSpace>,
    times: Vec<f64>,
    incoming: NodalField,
    slabs: Vec<Vec<Vec<f64>>>,
    time_basis: Option<LagrangeBasis>,
}

impl Trajectory {
    pub fn new(
        scheme: TimeScheme,
        space: Arc<FeSpace>,
        times: Vec<f64>,
        incoming: NodalField,
        slabs: Vec<Vec<Vec<f64>>>,
    ) -> Result<Self> {
        if times.len() != slabs.len() + 1 {
            return Err(Error::IntervalMismatch(format!(
                "{} grid points for {} slabs",
                times.len(),
                slabs.len()
            )));
        }
        let per = scheme.degree() + 1;
        for s in &slabs {
            if s.len() != per || s.iter().any(|c| c.len() != space.dof_count()) {
                return Err(Error::Dimension {
                    expected: per,
                    found: s.len(),
                });
            }
        }
        let time_basis = match scheme {
            TimeScheme::ImplicitEuler => None,
            TimeScheme::Cg(q) => Some(LagrangeBasis::new(q)),
        };
        Ok(Self {
            scheme,
            space,
            times,
            incoming,
            slabs,
            time_basis,
        })
    }

    pub fn scheme(&self) -> TimeScheme {
        self.scheme
    }

    pub fn space(&self) -> &Arc<FeSpace> {
        &self.space
    }

    pub fn times(&self) -> &[f64] {
        &self.times
    }

    pub fn steps(&self) -> usize {
        self.slabs.len()
    }

    pub fn start(&self) -> f64 {
        self.times[0]
    }

    pub fn end(&self) -> f64 {
        *self.times.last().unwrap()
    }

    pub fn dt(&self, s: usize) -> f64 {
        self.times[s + 1] - self.times[s]
    }

    pub fn incoming(&self) -> &NodalField {
        &self.incoming
    }

    /// Stored time nodes of slab `s`.
    pub fn slab(&self, s: usize) -> &[Vec<f64>] {
        &self.slabs[s]
    }

    fn field(&self, coeffs: Vec<f64>) -> NodalField {
        NodalField::from_coeffs(&self.space, coeffs).expect("slab length checked at construction")
    }

    /// Coefficients at local time `tau` in `[0, 1]` of slab `s`.
    pub fn coeffs_at(&self, s: usize, tau: f64) -> Vec<f64> {
        match &self.time_basis {
            None => self.slabs[s][0].clone(),
            Some(b) => {
                let n = self.space.dof_count();
                let mut out = vec![0.0; n];
                for (j, node) in self.slabs[s].iter().enumerate() {
                    let w = b.value(j, tau);
                    for (o, c) in out.iter_mut().zip(node) {
                        *o += w * c;
                    }
                }
                out
            }
        }
    }

    /// Time derivative coefficients at local time `tau` of slab `s`.
    pub fn dcoeffs_at(&self, s: usize, tau: f64) -> Vec<f64> {
        let n = self.space.dof_count();
        match &self.time_basis {
            None => vec![0.0; n],
            Some(b) => {
                let inv = 1.0 / self.dt(s);
                let mut out = vec![0.0; n];
                for (j, node) in self.slabs[s].iter().enumerate() {
                    let w = b.derivative(j, tau) * inv;
                    for (o, c) in out.iter_mut().zip(node) {
                        *o += w * c;
                    }
                }
                out
            }
        }
    }

    pub fn value_in_slab(&self, s: usize, tau: f64) -> NodalField {
        self.field(self.coeffs_at(s, tau))
    }

    /// Right limit at the left end of slab `s`.
    pub fn slab_start(&self, s: usize) -> NodalField {
        self.field(self.slabs[s][0].clone())
    }

    /// Left limit at the right end of slab `s`.
    pub fn slab_end(&self, s: usize) -> NodalField {
        self.field(self.slabs[s].last().unwrap().clone())
    }

    /// Value just after the first grid point.
    pub fn initial_value(&self) -> NodalField {
        self.slab_start(0)
    }

    /// Value at the last grid point.
    pub fn final_value(&self) -> NodalField {
        self.slab_end(self.steps() - 1)
    }

    /// Slab and local time for `t`; grid points belong to the slab on their
    /// left, except the first point.
    pub fn locate(&self, t: f64) -> Result<(usize, f64)> {
        let (a, b) = (self.start(), self.end());
        let tol = 1e-12 * (b - a).abs().max(1.0);
        if t < a - tol || t > b + tol {
            return Err(Error::IntervalMismatch(format!(
                "time {t} outside [{a}, {b}]"
            )));
        }
        let idx = self.times.partition_point(|&x| x < t - tol);
        let s = idx.saturating_sub(1).min(self.steps() - 1);
        let tau = ((t - self.times[s]) / self.dt(s)).clamp(0.0, 1.0);
        Ok((s, tau))
    }

    /// Value just after `t`; differs from [`Trajectory::value_at`] only at
    /// interior grid points of a discontinuous trajectory.
    pub fn right_limit(&self, t: f64) -> Result<NodalField> {
        let (s, tau) = self.locate(t)?;
        if tau >= 1.0 && s + 1 < self.steps() {
            return Ok(self.slab_start(s + 1));
        }
        Ok(self.value_in_slab(s, tau))
    }

    pub fn value_at(&self, t: f64) -> Result<NodalField> {
        let (s, tau) = self.locate(t)?;
        Ok(self.value_in_slab(s, tau))
    }

    /// The same function described on the mirrored time axis. `grid` is the
    /// mirrored grid (it must have the same step lengths in reverse order);
    /// `incoming` becomes the value at the new start.
    pub fn mirrored_onto(&self, grid: &[f64]) -> Result<Trajectory> {
        if grid.len() != self.times.len() {
            return Err(Error::IntervalMismatch(format!(
                "mirror grid has {} points, trajectory {}",
                grid.len(),
                self.times.len()
            )));
        }
        let n = self.steps();
        for s in 0..n {
            let (a, b) = (grid[s + 1] - grid[s], self.dt(n - 1 - s));
            if (a - b).abs() > 1e-12 * b.abs().max(1.0) {
                return Err(Error::IntervalMismatch(format!(
                    "mirror step {s} has length {a}, expected {b}"
                )));
            }
        }
        let slabs: Vec<Vec<Vec<f64>>> = self
            .slabs
            .iter()
            .rev()
            .map(|s| s.iter().rev().cloned().collect())
            .collect();
        let incoming = self.field(slabs[0][0].clone());
        Ok(Trajectory {
            scheme: self.scheme,
            space: self.space.clone(),
            times: grid.to_vec(),
            incoming,
            slabs,
            time_basis: self.time_basis.clone(),
        })
    }

    /// Largest coefficient mismatch across interior slab boundaries.
    pub fn continuity_defect(&self) -> f64 {
        if self.scheme == TimeScheme::ImplicitEuler {
            return 0.0;
        }
        let mut m: f64 = 0.0;
        for s in 1..self.steps() {
            let prev = self.slabs[s - 1].last().unwrap();
            for (a, b) in prev.iter().zip(&self.slabs[s][0]) {
                m = m.max((a - b).abs());
            }
        }
        m
    }

    /// Scales every stored coefficient, including `incoming`.
    pub fn scaled(&self, alpha: f64) -> Trajectory {
        let mut t = self.clone();
        t.incoming = t.incoming.scaled(alpha);
        for s in &mut t.slabs {
            for node in s.iter_mut() {
                node.iter_mut().for_each(|c| *c *= alpha);
            }
        }
        t
    }

    /// Largest coefficient difference against another trajectory on the same
    /// grid and space.
    pub fn max_diff(&self, other: &Trajectory) -> Result<f64> {
        if self.steps() != other.steps() || self.scheme != other.scheme {
            return Err(Error::IntervalMismatch("trajectories differ in layout".into()));
        }
        let mut m: f64 = 0.0;
        for (sa, sb) in self.slabs.iter().zip(&other.slabs) {
            for (na, nb) in sa.iter().zip(sb) {
                if na.len() != nb.len() {
                    return Err(Error::Dimension {
                        expected: na.len(),
                        found: nb.len(),
                    });
                }
                for (a, b) in na.iter().zip(nb) {
                    m = m.max((a - b).abs());
                }
            }
        }
        Ok(m)
    }

    /// Copy with one stored coefficient shifted by `delta`.
    pub fn with_perturbed(&self, slab: usize, node: usize, dof: usize, delta: f64) -> Trajectory {
        let mut t = self.clone();
        t.slabs[slab][node][dof] += delta;
        t
    }
}

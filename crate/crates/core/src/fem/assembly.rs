use std::ops::Range;
use std::sync::Arc;

use super::banded::{BandedCholesky, BandedSym};
use super::basis::reference_pair;
use super::quadrature::{gauss_rule, FIXED_POINTS};
use super::space::{FeSpace, NodalField};
use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum OperatorKind {
    Mass,
    Stiffness,
}

#[derive(Debug, Clone)]
pub struct AssembledOperator {
    pub kind: OperatorKind,
    pub matrix: BandedSym,
    pub space: Arc<FeSpace>,
}

/// Mass and stiffness matrices on the interior dofs.
pub fn assemble_operators(space: &Arc<FeSpace>) -> Result<(AssembledOperator, AssembledOperator)> {
    let (m, k) = assemble_restricted(space, 0..space.element_count())?;
    Ok((
        AssembledOperator {
            kind: OperatorKind::Mass,
            matrix: m,
            space: space.clone(),
        },
        AssembledOperator {
            kind: OperatorKind::Stiffness,
            matrix: k,
            space: space.clone(),
        },
    ))
}

/// Mass and stiffness of one space, assembled once and shared by the solvers.
#[derive(Debug)]
pub struct SpatialOperators {
    space: Arc<FeSpace>,
    mass: BandedSym,
    stiffness: BandedSym,
    mass_chol: BandedCholesky,
}

impl SpatialOperators {
    pub fn new(space: &Arc<FeSpace>) -> Result<Arc<Self>> {
        let (mass, stiffness) = assemble_restricted(space, 0..space.element_count())?;
        let mass_chol = mass.cholesky()?;
        Ok(Arc::new(Self {
            space: space.clone(),
            mass,
            stiffness,
            mass_chol,
        }))
    }

    pub fn space(&self) -> &Arc<FeSpace> {
        &self.space
    }

    pub fn mass(&self) -> &BandedSym {
        &self.mass
    }

    pub fn stiffness(&self) -> &BandedSym {
        &self.stiffness
    }

    /// `M + dt K`.
    pub fn b_matrix(&self, dt: f64) -> BandedSym {
        self.mass.combine(1.0, &self.stiffness, dt)
    }

    /// L2 projection of `source` into this space.
    pub fn l2_project(&self, source: &NodalField) -> Result<NodalField> {
        if source.space().same_as(&self.space) {
            return NodalField::from_coeffs(&self.space, source.coeffs().to_vec());
        }
        let rhs = mixed_mass_apply(&self.space, source)?;
        NodalField::from_coeffs(&self.space, self.mass_chol.solve(&rhs))
    }
}

/// Mass and stiffness contributions of the elements in `elements` only, as
/// full-size matrices.
pub fn assemble_restricted(
    space: &FeSpace,
    elements: Range<usize>,
) -> Result<(BandedSym, BandedSym)> {
    let q = space.degree();
    let n = space.dof_count();
    let mesh = space.mesh();
    let refp = reference_pair(q, q);
    let mut m = BandedSym::zeros(n, q);
    let mut k = BandedSym::zeros(n, q);
    for e in elements {
        let h = mesh.h(e);
        if !(h > 0.0) {
            return Err(Error::InvalidMesh(format!("element {e} has length {h}")));
        }
        for a in 0..=q {
            let Some(da) = space.dof(e, a) else { continue };
            for b in 0..=q {
                let Some(db) = space.dof(e, b) else { continue };
                if da < db {
                    continue;
                }
                // equal dofs only occur for a == b, so each pair lands once
                let idx = a * (q + 1) + b;
                m.add_lower(da, db, h * refp.mass[idx]);
                k.add_lower(da, db, refp.stiffness[idx] / h);
            }
        }
    }
    Ok((m, k))
}

/// `∫ g φ_i` for every basis function, with the fixed 10-point rule.
pub fn assemble_functional<G: Fn(f64) -> f64>(space: &FeSpace, g: G) -> Vec<f64> {
    let q = space.degree();
    let rule = gauss_rule(FIXED_POINTS);
    let basis = space.basis();
    let mesh = space.mesh();
    let mut out = vec![0.0; space.dof_count()];
    let mut phi = vec![0.0; q + 1];
    for e in 0..space.element_count() {
        let (x0, x1) = mesh.element(e);
        let h = x1 - x0;
        for (&xi, &w) in rule.points.iter().zip(&rule.weights) {
            let gv = g(x0 + h * xi) * w * h;
            basis.values(xi, &mut phi);
            for (j, p) in phi.iter().enumerate() {
                if let Some(d) = space.dof(e, j) {
                    out[d] += gv * p;
                }
            }
        }
    }
    out
}

/// Load vector `∫ f(x, t) φ_i(x) dx`.
pub fn assemble_load<F: Fn(f64, f64) -> f64 + ?Sized>(space: &FeSpace, t: f64, f: &F) -> Vec<f64> {
    assemble_functional(space, |x| f(x, t))
}

/// `∫ u v` for fields on the same mesh, exact for the product degree.
pub fn inner(u: &NodalField, v: &NodalField) -> Result<f64> {
    pairing(u, v, OperatorKind::Mass)
}

/// `∫ u' v'` for fields on the same mesh.
pub fn energy(u: &NodalField, v: &NodalField) -> Result<f64> {
    pairing(u, v, OperatorKind::Stiffness)
}

/// `(u, v) + dt (u', v')` evaluated in one pass.
pub fn b_form(u: &NodalField, v: &NodalField, dt: f64) -> Result<f64> {
    let (m, k) = pairings(u, v)?;
    Ok(m + dt * k)
}

fn pairing(u: &NodalField, v: &NodalField, kind: OperatorKind) -> Result<f64> {
    let (m, k) = pairings(u, v)?;
    Ok(match kind {
        OperatorKind::Mass => m,
        OperatorKind::Stiffness => k,
    })
}

/// Both `(u, v)` and `(u', v')`.
pub fn pairings(u: &NodalField, v: &NodalField) -> Result<(f64, f64)> {
    let su = u.space();
    let sv = v.space();
    if !su.shares_mesh(sv) {
        return Err(Error::IncompatibleSpaces(
            "pairing needs fields on one mesh".into(),
        ));
    }
    let (qa, qb) = (su.degree(), sv.degree());
    let refp = reference_pair(qa, qb);
    let mut ua = vec![0.0; qa + 1];
    let mut vb = vec![0.0; qb + 1];
    let (mut mass, mut stiff) = (0.0, 0.0);
    for e in 0..su.element_count() {
        su.gather(u.coeffs(), e, &mut ua);
        sv.gather(v.coeffs(), e, &mut vb);
        let h = su.mesh().h(e);
        let (mut me, mut ke) = (0.0, 0.0);
        for (a, &x) in ua.iter().enumerate() {
            if x == 0.0 {
                continue;
            }
            let row = a * (qb + 1);
            for (b, &y) in vb.iter().enumerate() {
                me += x * refp.mass[row + b] * y;
                ke += x * refp.stiffness[row + b] * y;
            }
        }
        mass += h * me;
        stiff += ke / h;
    }
    Ok((mass, stiff))
}

/// Pairing matrix `G[i][j] = ∫ φ_i ψ_j` between test space `rows` and trial
/// space `cols` on the same mesh, applied to `x` in `cols`.
pub fn mixed_mass_apply(rows: &FeSpace, cols: &NodalField) -> Result<Vec<f64>> {
    mixed_apply(rows, cols, 1.0, 0.0)
}

/// `∫ (α φ_i w + β φ_i' w')` for every basis function `φ_i` of `rows`.
pub fn mixed_apply(rows: &FeSpace, w: &NodalField, alpha: f64, beta: f64) -> Result<Vec<f64>> {
    let sw = w.space();
    if !rows.shares_mesh(sw) {
        return Err(Error::IncompatibleSpaces(
            "mixed operator needs one mesh".into(),
        ));
    }
    let (qa, qb) = (rows.degree(), sw.degree());
    let refp = reference_pair(qa, qb);
    let mut out = vec![0.0; rows.dof_count()];
    let mut wb = vec![0.0; qb + 1];
    for e in 0..rows.element_count() {
        sw.gather(w.coeffs(), e, &mut wb);
        let h = rows.mesh().h(e);
        for a in 0..=qa {
            let Some(d) = rows.dof(e, a) else { continue };
            let row = a * (qb + 1);
            let mut s = 0.0;
            for (b, &y) in wb.iter().enumerate() {
                s += (alpha * h * refp.mass[row + b] + beta * refp.stiffness[row + b] / h) * y;
            }
            out[d] += s;
        }
    }
    Ok(out)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ProjectionMode {
    L2,
    Nodal,
}

/// Projects a field into `target`.
pub fn project_field(
    source: &NodalField,
    target: &Arc<FeSpace>,
    mode: ProjectionMode,
) -> Result<NodalField> {
    if source.space().same_as(target) {
        return NodalField::from_coeffs(target, source.coeffs().to_vec());
    }
    match mode {
        ProjectionMode::Nodal => source.lift_to(target),
        ProjectionMode::L2 => {
            let rhs = mixed_mass_apply(target, source)?;
            let chol = mass_cholesky(target)?;
            NodalField::from_coeffs(target, chol.solve(&rhs))
        }
    }
}

/// Projects an analytic function into `target`.
pub fn project_function<F: Fn(f64) -> f64>(
    f: F,
    target: &Arc<FeSpace>,
    mode: ProjectionMode,
) -> Result<NodalField> {
    match mode {
        ProjectionMode::Nodal => Ok(NodalField::interpolate(target, f)),
        ProjectionMode::L2 => {
            let rhs = assemble_functional(target, f);
            let chol = mass_cholesky(target)?;
            NodalField::from_coeffs(target, chol.solve(&rhs))
        }
    }
}

fn mass_cholesky(space: &Arc<FeSpace>) -> Result<BandedCholesky> {
    let (m, _) = assemble_restricted(space, 0..space.element_count())?;
    m.cholesky()
}

/// `∫ ψ(x) u(x) dx` with the fixed 10-point rule per element.
pub fn qoi_eval<P: Fn(f64) -> f64>(psi: P, field: &NodalField) -> f64 {
    let s = field.space();
    assemble_functional(s, psi)
        .iter()
        .zip(field.coeffs())
        .map(|(a, b)| a * b)
        .sum()
}

/// `‖f − u‖²_{L2}` with the fixed rule.
pub fn l2_error_squared<F: Fn(f64) -> f64>(f: F, u: &NodalField) -> f64 {
    let s = u.space();
    let rule = gauss_rule(FIXED_POINTS);
    let mut total = 0.0;
    for e in 0..s.element_count() {
        let (x0, x1) = s.mesh().element(e);
        let h = x1 - x0;
        for (&xi, &w) in rule.points.iter().zip(&rule.weights) {
            let d = f(x0 + h * xi) - s.eval_local(u.coeffs(), e, xi);
            total += w * h * d * d;
        }
    }
    total
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn single_interior_hat() {
        let s = FeSpace::uniform(0.0, 1.0, 2, 1).unwrap();
        let (m, k) = assemble_operators(&s).unwrap();
        assert!((m.matrix.get(0, 0) - 1.0 / 3.0).abs() < 1e-15);
        assert!((k.matrix.get(0, 0) - 4.0).abs() < 1e-14);
    }

    #[test]
    fn pairing_matches_matrix() {
        let s = FeSpace::uniform(0.0, 1.0, 6, 2).unwrap();
        let (m, k) = assemble_operators(&s).unwrap();
        let u = NodalField::interpolate(&s, |x| x.sin());
        let v = NodalField::interpolate(&s, |x| x * x - x);
        let mv = m.matrix.matvec(v.coeffs());
        let kv = k.matrix.matvec(v.coeffs());
        let dot = |a: &[f64], b: &[f64]| a.iter().zip(b).map(|(x, y)| x * y).sum::<f64>();
        let (pm, pk) = pairings(&u, &v).unwrap();
        assert!((pm - dot(u.coeffs(), &mv)).abs() < 1e-15);
        assert!((pk - dot(u.coeffs(), &kv)).abs() < 1e-14);
    }

    #[test]
    fn zero_source_gives_zero() {
        let s = FeSpace::uniform(0.0, 1.0, 5, 2).unwrap();
        assert!(assemble_load(&s, 0.3, &|_, _| 0.0).iter().all(|&v| v == 0.0));
        let z = project_function(|_| 0.0, &s, ProjectionMode::L2).unwrap();
        assert_eq!(z.max_abs(), 0.0);
        assert_eq!(qoi_eval(|_| 0.0, &z), 0.0);
    }
}

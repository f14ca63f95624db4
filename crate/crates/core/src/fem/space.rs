use std::sync::Arc;

use super::basis::{LagrangeBasis, MAX_DEGREE};
use super::mesh::SpatialMesh;
use crate::error::{Error, Result};

/// Continuous piecewise polynomials of a fixed degree on a mesh, vanishing at
/// both endpoints.
///
/// Global node `g = e * q + j` is local node `j` of element `e`; the Dirichlet
/// nodes `0` and `q * N` carry no unknown, so dof `d` is node `d + 1`.
#[derive(Debug)]
pub struct FeSpace {
    mesh: Arc<SpatialMesh>,
    degree: usize,
    basis: LagrangeBasis,
}

impl FeSpace {
    pub fn new(mesh: Arc<SpatialMesh>, degree: usize) -> Result<Arc<Self>> {
        if !(1..=MAX_DEGREE).contains(&degree) {
            return Err(Error::InvalidMesh(format!(
                "polynomial degree {degree} outside 1..={MAX_DEGREE}"
            )));
        }
        if degree * mesh.element_count() < 2 {
            return Err(Error::InvalidMesh(
                "space has no interior degrees of freedom".into(),
            ));
        }
        Ok(Arc::new(Self {
            mesh,
            degree,
            basis: LagrangeBasis::new(degree),
        }))
    }

    pub fn uniform(a: f64, b: f64, elements: usize, degree: usize) -> Result<Arc<Self>> {
        Self::new(Arc::new(SpatialMesh::uniform(a, b, elements)?), degree)
    }

    /// Same mesh, different degree.
    pub fn with_degree(&self, degree: usize) -> Result<Arc<Self>> {
        Self::new(self.mesh.clone(), degree)
    }

    pub fn mesh(&self) -> &Arc<SpatialMesh> {
        &self.mesh
    }

    pub fn degree(&self) -> usize {
        self.degree
    }

    pub fn basis(&self) -> &LagrangeBasis {
        &self.basis
    }

    pub fn element_count(&self) -> usize {
        self.mesh.element_count()
    }

    pub fn dof_count(&self) -> usize {
        self.degree * self.element_count() - 1
    }

    /// Half bandwidth of matrices assembled on this space.
    pub fn half_bandwidth(&self) -> usize {
        self.degree
    }

    /// Dof index of local node `j` on element `e`, `None` on the boundary.
    #[inline]
    pub fn dof(&self, e: usize, j: usize) -> Option<usize> {
        let g = e * self.degree + j;
        if g == 0 || g == self.degree * self.element_count() {
            None
        } else {
            Some(g - 1)
        }
    }

    pub fn node_coordinate(&self, dof: usize) -> f64 {
        let g = dof + 1;
        let (e, j) = if g == self.degree * self.element_count() {
            (self.element_count() - 1, self.degree)
        } else {
            (g / self.degree, g % self.degree)
        };
        let (x0, x1) = self.mesh.element(e);
        x0 + (x1 - x0) * self.basis.nodes()[j]
    }

    /// Element-local coefficient vector of `coeffs` on element `e`.
    pub fn gather(&self, coeffs: &[f64], e: usize, out: &mut [f64]) {
        for (j, o) in out.iter_mut().enumerate().take(self.degree + 1) {
            *o = self.dof(e, j).map_or(0.0, |d| coeffs[d]);
        }
    }

    /// Value at reference coordinate `xi` of element `e`.
    pub fn eval_local(&self, coeffs: &[f64], e: usize, xi: f64) -> f64 {
        (0..=self.degree)
            .filter_map(|j| self.dof(e, j).map(|d| coeffs[d] * self.basis.value(j, xi)))
            .sum()
    }

    pub fn eval(&self, coeffs: &[f64], x: f64) -> f64 {
        match self.mesh.locate(x) {
            Some(e) => {
                let (x0, x1) = self.mesh.element(e);
                self.eval_local(coeffs, e, (x - x0) / (x1 - x0))
            }
            None => 0.0,
        }
    }

    pub fn same_as(&self, other: &FeSpace) -> bool {
        std::ptr::eq(self, other) || (self.degree == other.degree && self.shares_mesh(other))
    }

    pub fn shares_mesh(&self, other: &FeSpace) -> bool {
        Arc::ptr_eq(&self.mesh, &other.mesh) || self.mesh.same_as(&other.mesh)
    }
}

/// Coefficients of a function in an [`FeSpace`] at one time instant.
#[derive(Debug, Clone)]
pub struct NodalField {
    space: Arc<FeSpace>,
    coeffs: Vec<f64>,
}

impl NodalField {
    pub fn zeros(space: &Arc<FeSpace>) -> Self {
        Self {
            coeffs: vec![0.0; space.dof_count()],
            space: space.clone(),
        }
    }

    pub fn from_coeffs(space: &Arc<FeSpace>, coeffs: Vec<f64>) -> Result<Self> {
        if coeffs.len() != space.dof_count() {
            return Err(Error::Dimension {
                expected: space.dof_count(),
                found: coeffs.len(),
            });
        }
        Ok(Self {
            space: space.clone(),
            coeffs,
        })
    }

    /// Samples `f` at the Lagrange nodes.
    pub fn interpolate<F: Fn(f64) -> f64>(space: &Arc<FeSpace>, f: F) -> Self {
        let coeffs = (0..space.dof_count())
            .map(|d| f(space.node_coordinate(d)))
            .collect();
        Self {
            space: space.clone(),
            coeffs,
        }
    }

    pub fn space(&self) -> &Arc<FeSpace> {
        &self.space
    }

    pub fn coeffs(&self) -> &[f64] {
        &self.coeffs
    }

    pub fn coeffs_mut(&mut self) -> &mut [f64] {
        &mut self.coeffs
    }

    pub fn into_coeffs(self) -> Vec<f64> {
        self.coeffs
    }

    pub fn eval(&self, x: f64) -> f64 {
        self.space.eval(&self.coeffs, x)
    }

    pub fn max_abs(&self) -> f64 {
        self.coeffs.iter().fold(0.0, |m, c| m.max(c.abs()))
    }

    /// Re-expresses the field in `target` by sampling at its nodes. Exact
    /// when `target` contains this field's space (same mesh, higher degree).
    pub fn lift_to(&self, target: &Arc<FeSpace>) -> Result<NodalField> {
        if self.space.same_as(target) {
            return Ok(NodalField {
                space: target.clone(),
                coeffs: self.coeffs.clone(),
            });
        }
        if !self.space.shares_mesh(target) {
            return Err(Error::IncompatibleSpaces(
                "nodal re-expression needs a shared mesh".into(),
            ));
        }
        let q = target.degree();
        let mut coeffs = vec![0.0; target.dof_count()];
        for e in 0..target.element_count() {
            for j in 0..=q {
                if let Some(d) = target.dof(e, j) {
                    let xi = target.basis().nodes()[j];
                    coeffs[d] = self.space.eval_local(&self.coeffs, e, xi);
                }
            }
        }
        Ok(NodalField {
            space: target.clone(),
            coeffs,
        })
    }

    fn check_same(&self, other: &NodalField) -> Result<()> {
        if self.space.same_as(&other.space) {
            Ok(())
        } else {
            Err(Error::IncompatibleSpaces(format!(
                "degree {} vs degree {}",
                self.space.degree(),
                other.space.degree()
            )))
        }
    }

    /// `self + alpha * other`, lifting whichever operand lives in the smaller
    /// space when the meshes agree.
    pub fn add_scaled(&self, alpha: f64, other: &NodalField) -> Result<NodalField> {
        if self.space.same_as(&other.space) {
            let coeffs = self
                .coeffs
                .iter()
                .zip(&other.coeffs)
                .map(|(a, b)| a + alpha * b)
                .collect();
            return Ok(NodalField {
                space: self.space.clone(),
                coeffs,
            });
        }
        if self.space.degree() < other.space.degree() {
            self.lift_to(&other.space)?.add_scaled(alpha, other)
        } else {
            self.add_scaled(alpha, &other.lift_to(&self.space)?)
        }
    }

    pub fn scaled(&self, alpha: f64) -> NodalField {
        NodalField {
            space: self.space.clone(),
            coeffs: self.coeffs.iter().map(|c| alpha * c).collect(),
        }
    }

    pub fn max_diff(&self, other: &NodalField) -> Result<f64> {
        self.check_same(other)?;
        Ok(self
            .coeffs
            .iter()
            .zip(&other.coeffs)
            .fold(0.0, |m, (a, b)| m.max((a - b).abs())))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn dof_count_and_numbering() {
        let s = FeSpace::uniform(0.0, 1.0, 5, 3).unwrap();
        assert_eq!(s.dof_count(), 14);
        assert_eq!(s.dof(0, 0), None);
        assert_eq!(s.dof(0, 1), Some(0));
        assert_eq!(s.dof(1, 0), s.dof(0, 3));
        assert_eq!(s.dof(4, 3), None);
        for d in 0..s.dof_count() {
            let x = s.node_coordinate(d);
            assert!((x - (d + 1) as f64 / 15.0).abs() < 1e-14);
        }
    }

    #[test]
    fn interpolation_reproduces_polynomials() {
        let s = FeSpace::uniform(0.0, 2.0, 4, 2).unwrap();
        let f = |x: f64| x * (2.0 - x);
        let u = NodalField::interpolate(&s, f);
        for &x in &[0.1, 0.77, 1.3, 1.99] {
            assert!((u.eval(x) - f(x)).abs() < 1e-14);
        }
    }

    #[test]
    fn lift_keeps_point_values() {
        let s1 = FeSpace::uniform(0.0, 1.0, 7, 1).unwrap();
        let s2 = s1.with_degree(3).unwrap();
        let u = NodalField::interpolate(&s1, |x| (3.0 * x).sin());
        let v = u.lift_to(&s2).unwrap();
        for i in 0..50 {
            let x = (i as f64 + 0.5) / 50.0;
            assert!((u.eval(x) - v.eval(x)).abs() < 1e-14);
        }
    }
}

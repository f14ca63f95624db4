//! Lagrange shape functions on the reference element `[0, 1]` with
//! equispaced nodes, and reference mass/stiffness blocks between two degrees.

use std::sync::LazyLock;

use super::quadrature::rule_for_degree;

/// Highest polynomial degree supported by the spatial spaces.
pub const MAX_DEGREE: usize = 6;

#[derive(Debug, Clone)]
pub struct LagrangeBasis {
    degree: usize,
    nodes: Vec<f64>,
}

impl LagrangeBasis {
    pub fn new(degree: usize) -> Self {
        assert!(degree >= 1, "Lagrange basis needs degree >= 1");
        let nodes = (0..=degree).map(|j| j as f64 / degree as f64).collect();
        Self { degree, nodes }
    }

    pub fn degree(&self) -> usize {
        self.degree
    }

    pub fn nodes(&self) -> &[f64] {
        &self.nodes
    }

    pub fn len(&self) -> usize {
        self.degree + 1
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    pub fn value(&self, j: usize, xi: f64) -> f64 {
        let xj = self.nodes[j];
        self.nodes
            .iter()
            .enumerate()
            .filter(|&(k, _)| k != j)
            .map(|(_, &xk)| (xi - xk) / (xj - xk))
            .product()
    }

    pub fn derivative(&self, j: usize, xi: f64) -> f64 {
        let xj = self.nodes[j];
        let mut total = 0.0;
        for (m, &xm) in self.nodes.iter().enumerate() {
            if m == j {
                continue;
            }
            let mut term = 1.0 / (xj - xm);
            for (k, &xk) in self.nodes.iter().enumerate() {
                if k != j && k != m {
                    term *= (xi - xk) / (xj - xk);
                }
            }
            total += term;
        }
        total
    }

    pub fn values(&self, xi: f64, out: &mut [f64]) {
        for (j, o) in out.iter_mut().enumerate().take(self.len()) {
            *o = self.value(j, xi);
        }
    }

    pub fn derivatives(&self, xi: f64, out: &mut [f64]) {
        for (j, o) in out.iter_mut().enumerate().take(self.len()) {
            *o = self.derivative(j, xi);
        }
    }
}

/// Reference-element integrals `∫ φ_i ψ_j` and `∫ φ_i' ψ_j'` between a
/// degree-`a` and a degree-`b` basis, row-major `(a+1) x (b+1)`.
#[derive(Debug, Clone)]
pub struct ReferencePair {
    pub rows: usize,
    pub cols: usize,
    pub mass: Vec<f64>,
    pub stiffness: Vec<f64>,
}

impl ReferencePair {
    fn compute(a: usize, b: usize) -> Self {
        let ba = LagrangeBasis::new(a);
        let bb = LagrangeBasis::new(b);
        let rule = rule_for_degree(a + b);
        let (rows, cols) = (a + 1, b + 1);
        let mut mass = vec![0.0; rows * cols];
        let mut stiffness = vec![0.0; rows * cols];
        let mut va = vec![0.0; rows];
        let mut da = vec![0.0; rows];
        let mut vb = vec![0.0; cols];
        let mut db = vec![0.0; cols];
        for (&x, &w) in rule.points.iter().zip(&rule.weights) {
            ba.values(x, &mut va);
            ba.derivatives(x, &mut da);
            bb.values(x, &mut vb);
            bb.derivatives(x, &mut db);
            for i in 0..rows {
                for j in 0..cols {
                    mass[i * cols + j] += w * va[i] * vb[j];
                    stiffness[i * cols + j] += w * da[i] * db[j];
                }
            }
        }
        Self {
            rows,
            cols,
            mass,
            stiffness,
        }
    }
}

static PAIRS: LazyLock<Vec<Vec<ReferencePair>>> = LazyLock::new(|| {
    (1..=MAX_DEGREE)
        .map(|a| (1..=MAX_DEGREE).map(|b| ReferencePair::compute(a, b)).collect())
        .collect()
});

pub fn reference_pair(a: usize, b: usize) -> &'static ReferencePair {
    assert!(
        (1..=MAX_DEGREE).contains(&a) && (1..=MAX_DEGREE).contains(&b),
        "degree pair ({a}, {b}) outside 1..={MAX_DEGREE}"
    );
    &PAIRS[a - 1][b - 1]
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn kronecker_property_and_partition_of_unity() {
        for q in 1..=MAX_DEGREE {
            let b = LagrangeBasis::new(q);
            for (i, &xi) in b.nodes().iter().enumerate() {
                for j in 0..=q {
                    let expect = if i == j { 1.0 } else { 0.0 };
                    assert!((b.value(j, xi) - expect).abs() < 1e-13);
                }
            }
            for &x in &[0.13, 0.5, 0.91] {
                let s: f64 = (0..=q).map(|j| b.value(j, x)).sum();
                let ds: f64 = (0..=q).map(|j| b.derivative(j, x)).sum();
                assert!((s - 1.0).abs() < 1e-13);
                assert!(ds.abs() < 1e-11);
            }
        }
    }

    #[test]
    fn derivative_matches_central_difference() {
        let b = LagrangeBasis::new(3);
        let h = 1e-6;
        for j in 0..4 {
            let x = 0.37;
            let fd = (b.value(j, x + h) - b.value(j, x - h)) / (2.0 * h);
            assert!((fd - b.derivative(j, x)).abs() < 1e-7);
        }
    }

    #[test]
    fn linear_reference_blocks() {
        let p = reference_pair(1, 1);
        let m = [1.0 / 3.0, 1.0 / 6.0, 1.0 / 6.0, 1.0 / 3.0];
        let k = [1.0, -1.0, -1.0, 1.0];
        for i in 0..4 {
            assert!((p.mass[i] - m[i]).abs() < 1e-15);
            assert!((p.stiffness[i] - k[i]).abs() < 1e-14);
        }
    }

    #[test]
    fn mixed_blocks_are_transposes() {
        let p = reference_pair(2, 3);
        let q = reference_pair(3, 2);
        for i in 0..3 {
            for j in 0..4 {
                assert!((p.mass[i * 4 + j] - q.mass[j * 3 + i]).abs() < 1e-15);
                assert!((p.stiffness[i * 4 + j] - q.stiffness[j * 3 + i]).abs() < 1e-13);
            }
        }
    }
}

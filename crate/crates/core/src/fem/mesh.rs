use crate::error::{Error, Result};

/// A partition of the interval `[a, b]` into elements.
#[derive(Debug, Clone, PartialEq)]
pub struct SpatialMesh {
    boundaries: Vec<f64>,
}

impl SpatialMesh {
    pub fn uniform(a: f64, b: f64, elements: usize) -> Result<Self> {
        if elements == 0 {
            return Err(Error::InvalidMesh("element count must be positive".into()));
        }
        if !(a.is_finite() && b.is_finite() && b > a) {
            return Err(Error::InvalidMesh(format!("bad interval [{a}, {b}]")));
        }
        let h = (b - a) / elements as f64;
        let mut boundaries: Vec<f64> = (0..=elements).map(|i| a + i as f64 * h).collect();
        boundaries[elements] = b;
        Ok(Self { boundaries })
    }

    pub fn from_boundaries(boundaries: Vec<f64>) -> Result<Self> {
        if boundaries.len() < 2 {
            return Err(Error::InvalidMesh("need at least two boundary points".into()));
        }
        for (i, w) in boundaries.windows(2).enumerate() {
            if !(w[1] > w[0]) {
                return Err(Error::InvalidMesh(format!(
                    "element {i} has non-positive length ({} .. {})",
                    w[0], w[1]
                )));
            }
        }
        Ok(Self { boundaries })
    }

    pub fn element_count(&self) -> usize {
        self.boundaries.len() - 1
    }

    pub fn boundaries(&self) -> &[f64] {
        &self.boundaries
    }

    pub fn a(&self) -> f64 {
        self.boundaries[0]
    }

    pub fn b(&self) -> f64 {
        *self.boundaries.last().unwrap()
    }

    pub fn element(&self, e: usize) -> (f64, f64) {
        (self.boundaries[e], self.boundaries[e + 1])
    }

    pub fn h(&self, e: usize) -> f64 {
        self.boundaries[e + 1] - self.boundaries[e]
    }

    pub fn max_h(&self) -> f64 {
        (0..self.element_count()).map(|e| self.h(e)).fold(0.0, f64::max)
    }

    /// Element containing `x`; points on an interior boundary go to the left
    /// element except at `a`.
    pub fn locate(&self, x: f64) -> Option<usize> {
        if x < self.a() || x > self.b() {
            return None;
        }
        let idx = self.boundaries.partition_point(|&b| b < x);
        Some(idx.saturating_sub(1).min(self.element_count() - 1))
    }

    pub(crate) fn same_as(&self, other: &SpatialMesh) -> bool {
        self.boundaries.len() == other.boundaries.len()
            && self
                .boundaries
                .iter()
                .zip(&other.boundaries)
                .all(|(x, y)| (x - y).abs() <= 1e-14 * (self.b() - self.a()))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn uniform_spacing() {
        let m = SpatialMesh::uniform(0.0, 1.0, 37).unwrap();
        assert_eq!(m.element_count(), 37);
        assert_eq!(m.a(), 0.0);
        assert_eq!(m.b(), 1.0);
        let h = 1.0 / 37.0;
        for e in 0..37 {
            assert!((m.h(e) - h).abs() <= 1e-14);
        }
    }

    #[test]
    fn rejects_degenerate() {
        assert!(SpatialMesh::uniform(0.0, 1.0, 0).is_err());
        assert!(SpatialMesh::uniform(1.0, 1.0, 3).is_err());
        assert!(SpatialMesh::from_boundaries(vec![0.0, 0.5, 0.5, 1.0]).is_err());
        assert!(SpatialMesh::from_boundaries(vec![0.0, 0.7, 0.3, 1.0]).is_err());
    }

    #[test]
    fn locate_points() {
        let m = SpatialMesh::uniform(0.0, 1.0, 4).unwrap();
        assert_eq!(m.locate(0.0), Some(0));
        assert_eq!(m.locate(0.3), Some(1));
        assert_eq!(m.locate(0.5), Some(1));
        assert_eq!(m.locate(1.0), Some(3));
        assert_eq!(m.locate(1.1), None);
    }
}

//! Banded storage and direct factorizations.
//!
//! [`BandedSym`] keeps the lower band of a symmetric matrix row by row;
//! [`BandMatrix`] is a general band with LAPACK-style column storage used by
//! the non-symmetric space-time systems.

use crate::error::{Error, Result};

#[derive(Debug, Clone, PartialEq)]
pub struct BandedSym {
    n: usize,
    kd: usize,
    // row i holds columns i-kd ..= i at offsets 0 ..= kd
    data: Vec<f64>,
}

impl BandedSym {
    pub fn zeros(n: usize, kd: usize) -> Self {
        Self {
            n,
            kd,
            data: vec![0.0; n * (kd + 1)],
        }
    }

    pub fn identity(n: usize) -> Self {
        let mut m = Self::zeros(n, 0);
        for i in 0..n {
            m.set(i, i, 1.0);
        }
        m
    }

    pub fn from_dense(a: &[Vec<f64>], kd: usize) -> Self {
        let n = a.len();
        let mut m = Self::zeros(n, kd);
        for i in 0..n {
            for j in i.saturating_sub(kd)..=i {
                m.set(i, j, a[i][j]);
            }
        }
        m
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn kd(&self) -> usize {
        self.kd
    }

    #[inline]
    fn slot(&self, i: usize, j: usize) -> Option<usize> {
        let (i, j) = if j > i { (j, i) } else { (i, j) };
        if i - j > self.kd {
            None
        } else {
            Some(i * (self.kd + 1) + self.kd + j - i)
        }
    }

    #[inline]
    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.slot(i, j).map_or(0.0, |s| self.data[s])
    }

    pub fn set(&mut self, i: usize, j: usize, v: f64) {
        let s = self
            .slot(i, j)
            .unwrap_or_else(|| panic!("({i}, {j}) outside band {}", self.kd));
        self.data[s] = v;
    }

    /// Adds `v` to the symmetric pair `(i, j)`, `(j, i)`. Only the lower
    /// triangle is stored, so callers assembling a full element matrix add
    /// each unordered pair once with `i >= j`.
    pub fn add_lower(&mut self, i: usize, j: usize, v: f64) {
        debug_assert!(i >= j);
        let s = self
            .slot(i, j)
            .unwrap_or_else(|| panic!("({i}, {j}) outside band {}", self.kd));
        self.data[s] += v;
    }

    pub fn matvec(&self, x: &[f64]) -> Vec<f64> {
        let mut y = vec![0.0; self.n];
        self.matvec_into(x, &mut y);
        y
    }

    pub fn matvec_into(&self, x: &[f64], y: &mut [f64]) {
        assert_eq!(x.len(), self.n);
        y.iter_mut().for_each(|v| *v = 0.0);
        for i in 0..self.n {
            let row = &self.data[i * (self.kd + 1)..(i + 1) * (self.kd + 1)];
            let j0 = i.saturating_sub(self.kd);
            let mut acc = row[self.kd] * x[i];
            for j in j0..i {
                let a = row[self.kd + j - i];
                acc += a * x[j];
                y[j] += a * x[i];
            }
            y[i] += acc;
        }
    }

    /// Entry `i` of `A x`.
    pub fn row_dot(&self, i: usize, x: &[f64]) -> f64 {
        let lo = i.saturating_sub(self.kd);
        let hi = (i + self.kd + 1).min(self.n);
        (lo..hi).map(|j| self.get(i, j) * x[j]).sum()
    }

    /// `alpha * self + beta * other`.
    pub fn combine(&self, alpha: f64, other: &BandedSym, beta: f64) -> BandedSym {
        assert_eq!(self.n, other.n);
        let kd = self.kd.max(other.kd);
        let mut out = BandedSym::zeros(self.n, kd);
        for i in 0..self.n {
            for j in i.saturating_sub(kd)..=i {
                out.set(i, j, alpha * self.get(i, j) + beta * other.get(i, j));
            }
        }
        out
    }

    /// The principal sub-matrix on the contiguous index range `lo..hi`.
    pub fn sub_block(&self, lo: usize, hi: usize) -> BandedSym {
        let m = hi - lo;
        let mut out = BandedSym::zeros(m, self.kd);
        for i in 0..m {
            for j in i.saturating_sub(self.kd)..=i {
                out.set(i, j, self.get(lo + i, lo + j));
            }
        }
        out
    }

    pub fn max_abs(&self) -> f64 {
        self.data.iter().fold(0.0, |m, v| m.max(v.abs()))
    }

    pub fn to_dense(&self) -> Vec<Vec<f64>> {
        (0..self.n)
            .map(|i| (0..self.n).map(|j| self.get(i, j)).collect())
            .collect()
    }

    pub fn cholesky(&self) -> Result<BandedCholesky> {
        BandedCholesky::factor(self)
    }
}

/// `A = L Lᵀ` with `L` in the same lower-band layout.
#[derive(Debug, Clone)]
pub struct BandedCholesky {
    l: BandedSym,
}

impl BandedCholesky {
    pub fn factor(a: &BandedSym) -> Result<Self> {
        let n = a.n;
        let kd = a.kd;
        let w = kd + 1;
        let mut l = a.data.clone();
        for j in 0..n {
            // l[j][j]
            let k0 = j.saturating_sub(kd);
            let mut s = l[j * w + kd];
            for k in k0..j {
                let v = l[j * w + kd + k - j];
                s -= v * v;
            }
            if !(s > 0.0) || !s.is_finite() {
                return Err(Error::NotPositiveDefinite { row: j, pivot: s });
            }
            let d = s.sqrt();
            l[j * w + kd] = d;
            for i in j + 1..(j + kd + 1).min(n) {
                let k0 = i.saturating_sub(kd);
                let mut s = l[i * w + kd + j - i];
                for k in k0..j {
                    s -= l[i * w + kd + k - i] * l[j * w + kd + k - j];
                }
                l[i * w + kd + j - i] = s / d;
            }
        }
        Ok(Self {
            l: BandedSym { n, kd, data: l },
        })
    }

    pub fn n(&self) -> usize {
        self.l.n
    }

    pub fn solve(&self, b: &[f64]) -> Vec<f64> {
        let mut x = b.to_vec();
        self.solve_in_place(&mut x);
        x
    }

    pub fn solve_in_place(&self, x: &mut [f64]) {
        let n = self.l.n;
        let kd = self.l.kd;
        let w = kd + 1;
        let l = &self.l.data;
        assert_eq!(x.len(), n);
        for i in 0..n {
            let mut s = x[i];
            for k in i.saturating_sub(kd)..i {
                s -= l[i * w + kd + k - i] * x[k];
            }
            x[i] = s / l[i * w + kd];
        }
        for i in (0..n).rev() {
            let mut s = x[i];
            for k in i + 1..(i + kd + 1).min(n) {
                s -= l[k * w + kd + i - k] * x[k];
            }
            x[i] = s / l[i * w + kd];
        }
    }
}

/// Solves `A x = b` for a symmetric positive definite band matrix.
pub fn solve_spd(a: &BandedSym, b: &[f64]) -> Result<Vec<f64>> {
    if b.len() != a.n {
        return Err(Error::Dimension {
            expected: a.n,
            found: b.len(),
        });
    }
    Ok(a.cholesky()?.solve(b))
}

/// General band matrix with `kl` sub- and `ku` super-diagonals. Storage has
/// `kl` extra rows for fill-in during pivoted elimination.
#[derive(Debug, Clone)]
pub struct BandMatrix {
    n: usize,
    kl: usize,
    ku: usize,
    ld: usize,
    // column-major, entry (i, j) at row kl + ku + i - j of column j
    ab: Vec<f64>,
}

impl BandMatrix {
    pub fn zeros(n: usize, kl: usize, ku: usize) -> Self {
        let ld = 2 * kl + ku + 1;
        Self {
            n,
            kl,
            ku,
            ld,
            ab: vec![0.0; ld * n],
        }
    }

    pub fn n(&self) -> usize {
        self.n
    }

    #[inline]
    fn slot(&self, i: usize, j: usize) -> Option<usize> {
        if i > j + self.kl || j > i + self.ku {
            None
        } else {
            Some(j * self.ld + self.kl + self.ku + i - j)
        }
    }

    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.slot(i, j).map_or(0.0, |s| self.ab[s])
    }

    pub fn add(&mut self, i: usize, j: usize, v: f64) {
        let s = self
            .slot(i, j)
            .unwrap_or_else(|| panic!("({i}, {j}) outside band ({}, {})", self.kl, self.ku));
        self.ab[s] += v;
    }

    pub fn matvec(&self, x: &[f64]) -> Vec<f64> {
        let mut y = vec![0.0; self.n];
        for j in 0..self.n {
            let lo = j.saturating_sub(self.ku);
            let hi = (j + self.kl + 1).min(self.n);
            for (i, yi) in y.iter_mut().enumerate().take(hi).skip(lo) {
                *yi += self.get(i, j) * x[j];
            }
        }
        y
    }

    pub fn lu(self) -> Result<BandLu> {
        BandLu::factor(self)
    }
}

/// Partial-pivoting LU of a [`BandMatrix`].
#[derive(Debug, Clone)]
pub struct BandLu {
    m: BandMatrix,
    piv: Vec<usize>,
}

impl BandLu {
    pub fn factor(mut m: BandMatrix) -> Result<Self> {
        let n = m.n;
        let kl = m.kl;
        let kv = m.kl + m.ku;
        let ld = m.ld;
        let ab = &mut m.ab;
        let mut piv = vec![0; n];
        let mut ju = 0usize;
        for j in 0..n {
            let km = kl.min(n - 1 - j);
            let col = j * ld + kv;
            let mut jp = 0;
            let mut best = ab[col].abs();
            for r in 1..=km {
                let v = ab[col + r].abs();
                if v > best {
                    best = v;
                    jp = r;
                }
            }
            piv[j] = j + jp;
            if best == 0.0 {
                return Err(Error::Singular(j));
            }
            ju = ju.max((j + kv - kl + jp).min(n - 1));
            if jp != 0 {
                for c in j..=ju {
                    let a = c * ld + kv + j - c;
                    ab.swap(a, a + jp);
                }
            }
            let d = ab[col];
            for r in 1..=km {
                ab[col + r] /= d;
            }
            for c in j + 1..=ju {
                let u = ab[c * ld + kv + j - c];
                if u != 0.0 {
                    for r in 1..=km {
                        ab[c * ld + kv + j + r - c] -= ab[col + r] * u;
                    }
                }
            }
        }
        Ok(Self { m, piv })
    }

    pub fn solve(&self, b: &[f64]) -> Vec<f64> {
        let n = self.m.n;
        let kl = self.m.kl;
        let kv = self.m.kl + self.m.ku;
        let ld = self.m.ld;
        let ab = &self.m.ab;
        assert_eq!(b.len(), n);
        let mut x = b.to_vec();
        for j in 0..n {
            let p = self.piv[j];
            if p != j {
                x.swap(p, j);
            }
            let km = kl.min(n - 1 - j);
            let xj = x[j];
            for r in 1..=km {
                x[j + r] -= ab[j * ld + kv + r] * xj;
            }
        }
        for j in (0..n).rev() {
            x[j] /= ab[j * ld + kv];
            let xj = x[j];
            for i in j.saturating_sub(kv)..j {
                x[i] -= ab[j * ld + kv + i - j] * xj;
            }
        }
        x
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn identity_and_scalar() {
        let id = BandedSym::identity(4);
        assert_eq!(solve_spd(&id, &[1.0, 2.0, 3.0, 4.0]).unwrap(), vec![1.0, 2.0, 3.0, 4.0]);
        let mut a = BandedSym::zeros(1, 0);
        a.set(0, 0, 4.0);
        assert_eq!(solve_spd(&a, &[1.0]).unwrap(), vec![0.25]);
    }

    #[test]
    fn rejects_indefinite() {
        let mut a = BandedSym::zeros(2, 1);
        a.set(0, 0, 1.0);
        a.set(1, 0, 2.0);
        a.set(1, 1, 1.0);
        assert!(matches!(a.cholesky(), Err(Error::NotPositiveDefinite { row: 1, .. })));
    }

    #[test]
    fn matvec_symmetric() {
        let mut a = BandedSym::zeros(3, 1);
        a.set(0, 0, 2.0);
        a.set(1, 0, -1.0);
        a.set(1, 1, 2.0);
        a.set(2, 1, -1.0);
        a.set(2, 2, 2.0);
        assert_eq!(a.matvec(&[1.0, 1.0, 1.0]), vec![1.0, 0.0, 1.0]);
        assert_eq!(a.row_dot(1, &[1.0, 2.0, 3.0]), 0.0);
    }

    #[test]
    fn band_lu_needs_pivoting() {
        // [[0, 1], [1, 1]] has a zero leading pivot.
        let mut m = BandMatrix::zeros(2, 1, 1);
        m.add(0, 1, 1.0);
        m.add(1, 0, 1.0);
        m.add(1, 1, 1.0);
        let x = m.lu().unwrap().solve(&[2.0, 3.0]);
        assert!((x[0] - 1.0).abs() < 1e-15 && (x[1] - 2.0).abs() < 1e-15);
    }
}

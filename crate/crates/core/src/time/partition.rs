use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// `[0, T]` split into `P_t` temporal subdomains, each carrying a uniform
/// coarse grid and a uniform fine grid `r` times finer.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TimePartition {
    t_final: f64,
    sync: Vec<f64>,
    coarse_steps: Vec<usize>,
    fine_steps: Vec<usize>,
}

impl TimePartition {
    /// `coarse_total` coarse steps over `[0, t_final]`, split evenly over
    /// `subdomains`; fine grids refine each coarse step `r` times.
    pub fn new(t_final: f64, coarse_total: usize, r: usize, subdomains: usize) -> Result<Self> {
        if !(t_final > 0.0 && t_final.is_finite()) {
            return Err(Error::Config(format!("final time must be positive, got {t_final}")));
        }
        if subdomains == 0 || coarse_total == 0 || r == 0 {
            return Err(Error::Config(
                "Nhat_t, r and P_t must all be positive".into(),
            ));
        }
        if coarse_total % subdomains != 0 {
            return Err(Error::Config(format!(
                "Nhat_t = {coarse_total} is not divisible by P_t = {subdomains}"
            )));
        }
        let per = coarse_total / subdomains;
        let sync = uniform_grid(0.0, t_final, subdomains);
        Ok(Self {
            t_final,
            sync,
            coarse_steps: vec![per; subdomains],
            fine_steps: vec![per * r; subdomains],
        })
    }

    /// Single subdomain covering `[0, t_final]`.
    pub fn serial(t_final: f64, coarse_total: usize, r: usize) -> Result<Self> {
        Self::new(t_final, coarse_total, r, 1)
    }

    pub fn t_final(&self) -> f64 {
        self.t_final
    }

    pub fn subdomains(&self) -> usize {
        self.sync.len() - 1
    }

    pub fn sync_times(&self) -> &[f64] {
        &self.sync
    }

    /// `T_p`, with `T_0 = 0`.
    pub fn sync(&self, p: usize) -> f64 {
        self.sync[p]
    }

    /// `[T_{p-1}, T_p]` for `p` in `1..=P_t`.
    pub fn interval(&self, p: usize) -> (f64, f64) {
        (self.sync[p - 1], self.sync[p])
    }

    pub fn coarse_steps(&self, p: usize) -> usize {
        self.coarse_steps[p - 1]
    }

    pub fn fine_steps(&self, p: usize) -> usize {
        self.fine_steps[p - 1]
    }

    pub fn coarse_total(&self) -> usize {
        self.coarse_steps.iter().sum()
    }

    pub fn fine_total(&self) -> usize {
        self.fine_steps.iter().sum()
    }

    pub fn coarse_grid(&self, p: usize) -> Vec<f64> {
        let (a, b) = self.interval(p);
        uniform_grid(a, b, self.coarse_steps(p))
    }

    pub fn fine_grid(&self, p: usize) -> Vec<f64> {
        let (a, b) = self.interval(p);
        uniform_grid(a, b, self.fine_steps(p))
    }

    /// Coarse grids of subdomains `1..=last` joined into one grid on
    /// `[0, T_last]`.
    pub fn coarse_grid_through(&self, last: usize) -> Vec<f64> {
        let mut out = vec![0.0];
        for p in 1..=last {
            out.extend_from_slice(&self.coarse_grid(p)[1..]);
        }
        out
    }

    /// Fine grids of all subdomains joined into one grid on `[0, T]`.
    pub fn global_fine_grid(&self) -> Vec<f64> {
        let mut out = vec![0.0];
        for p in 1..=self.subdomains() {
            out.extend_from_slice(&self.fine_grid(p)[1..]);
        }
        out
    }
}

/// `n` equal steps from `a` to `b`, with both endpoints exact.
pub fn uniform_grid(a: f64, b: f64, n: usize) -> Vec<f64> {
    let mut g: Vec<f64> = (0..=n)
        .map(|k| a + (b - a) * (k as f64 / n as f64))
        .collect();
    g[0] = a;
    g[n] = b;
    g
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn counts_and_endpoints() {
        let tp = TimePartition::new(2.0, 20, 16, 10).unwrap();
        assert_eq!(tp.subdomains(), 10);
        assert_eq!(tp.coarse_total(), 20);
        assert_eq!(tp.fine_total(), 320);
        assert_eq!(tp.sync(0), 0.0);
        assert_eq!(tp.sync(10), 2.0);
        for p in 1..=10 {
            let c = tp.coarse_grid(p);
            let f = tp.fine_grid(p);
            assert_eq!(c.first(), f.first());
            assert_eq!(c.last(), f.last());
            assert!(f.windows(2).all(|w| w[1] > w[0]));
        }
        assert_eq!(tp.coarse_grid_through(10).len(), 21);
    }

    #[test]
    fn rejects_indivisible() {
        assert!(TimePartition::new(2.0, 20, 2, 3).is_err());
        assert!(TimePartition::new(2.0, 20, 0, 2).is_err());
    }
}

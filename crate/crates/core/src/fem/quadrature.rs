//! Gauss–Legendre rules on the unit interval and a small adaptive integrator.

use std::sync::LazyLock;

/// Largest rule kept in the static table.
const MAX_CACHED: usize = 16;

/// Points used for loads, QoI and initial-condition error integrals.
pub const FIXED_POINTS: usize = 10;

#[derive(Debug, Clone)]
pub struct GaussRule {
    /// Abscissae on `[0, 1]`, increasing.
    pub points: Vec<f64>,
    /// Weights on `[0, 1]`; they sum to one.
    pub weights: Vec<f64>,
}

impl GaussRule {
    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }

    /// Highest polynomial degree integrated exactly.
    pub fn exactness(&self) -> usize {
        2 * self.points.len() - 1
    }

    /// Integrates `f` over `[a, b]`.
    pub fn integrate<F: Fn(f64) -> f64>(&self, a: f64, b: f64, f: F) -> f64 {
        let h = b - a;
        self.points
            .iter()
            .zip(&self.weights)
            .map(|(&x, &w)| w * f(a + h * x))
            .sum::<f64>()
            * h
    }
}

static RULES: LazyLock<Vec<GaussRule>> =
    LazyLock::new(|| (1..=MAX_CACHED).map(compute_rule).collect());

/// The `n`-point Gauss–Legendre rule on `[0, 1]`.
pub fn gauss_rule(n: usize) -> &'static GaussRule {
    assert!(
        (1..=MAX_CACHED).contains(&n),
        "gauss rule with {n} points not tabulated"
    );
    &RULES[n - 1]
}

/// Smallest rule that integrates polynomials of `degree` exactly.
pub fn rule_for_degree(degree: usize) -> &'static GaussRule {
    gauss_rule((degree + 2) / 2)
}

fn compute_rule(n: usize) -> GaussRule {
    let mut points = vec![0.0; n];
    let mut weights = vec![0.0; n];
    for i in 0..n.div_ceil(2) {
        // Chebyshev initial guess, refined by Newton on P_n.
        let mut x = (std::f64::consts::PI * (i as f64 + 0.75) / (n as f64 + 0.5)).cos();
        let mut dp = 0.0;
        for _ in 0..100 {
            let (p, d) = legendre_with_derivative(n, x);
            dp = d;
            let dx = p / d;
            x -= dx;
            if dx.abs() < 1e-16 {
                break;
            }
        }
        let (_, d) = legendre_with_derivative(n, x);
        if d != 0.0 {
            dp = d;
        }
        let w = 2.0 / ((1.0 - x * x) * dp * dp);
        // map [-1, 1] -> [0, 1]
        points[i] = 0.5 * (1.0 - x);
        points[n - 1 - i] = 0.5 * (1.0 + x);
        weights[i] = 0.5 * w;
        weights[n - 1 - i] = 0.5 * w;
    }
    GaussRule { points, weights }
}

fn legendre_with_derivative(n: usize, x: f64) -> (f64, f64) {
    let mut p0 = 1.0;
    let mut p1 = x;
    if n == 0 {
        return (1.0, 0.0);
    }
    for k in 2..=n {
        let k = k as f64;
        let p2 = ((2.0 * k - 1.0) * x * p1 - (k - 1.0) * p0) / k;
        p0 = p1;
        p1 = p2;
    }
    let d = n as f64 * (x * p1 - p0) / (x * x - 1.0);
    (p1, d)
}

/// Adaptive bisection with a 10-point Gauss rule, comparing each panel
/// against its two halves.
pub fn adaptive_integrate<F: Fn(f64) -> f64>(f: &F, a: f64, b: f64, tol: f64) -> f64 {
    let rule = gauss_rule(FIXED_POINTS);
    let whole = rule.integrate(a, b, f);
    adaptive_step(f, rule, a, b, whole, tol, 0)
}

fn adaptive_step<F: Fn(f64) -> f64>(
    f: &F,
    rule: &GaussRule,
    a: f64,
    b: f64,
    whole: f64,
    tol: f64,
    depth: usize,
) -> f64 {
    let m = 0.5 * (a + b);
    let left = rule.integrate(a, m, f);
    let right = rule.integrate(m, b, f);
    let refined = left + right;
    if (refined - whole).abs() <= tol || depth >= 40 {
        return refined;
    }
    adaptive_step(f, rule, a, m, left, 0.5 * tol, depth + 1)
        + adaptive_step(f, rule, m, b, right, 0.5 * tol, depth + 1)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn weights_sum_to_one() {
        for n in 1..=MAX_CACHED {
            let s: f64 = gauss_rule(n).weights.iter().sum();
            assert!((s - 1.0).abs() < 1e-14, "n = {n}: {s}");
        }
    }

    #[test]
    fn monomials_integrated_to_exactness_degree() {
        for n in 1..=12 {
            let rule = gauss_rule(n);
            for k in 0..=rule.exactness() {
                let got = rule.integrate(0.0, 1.0, |x| x.powi(k as i32));
                let exact = 1.0 / (k as f64 + 1.0);
                assert!(
                    ((got - exact) / exact).abs() < 1e-13,
                    "n = {n}, k = {k}: {got} vs {exact}"
                );
            }
        }
    }

    #[test]
    fn points_are_sorted_and_interior() {
        for n in 1..=MAX_CACHED {
            let p = &gauss_rule(n).points;
            assert!(p.windows(2).all(|w| w[0] < w[1]));
            assert!(p[0] > 0.0 && p[n - 1] < 1.0);
        }
    }

    #[test]
    fn adaptive_handles_kinked_integrand() {
        let f = |x: f64| (x - 0.3).abs();
        let v = adaptive_integrate(&f, 0.0, 1.0, 1e-13);
        let exact = 0.5 * 0.3 * 0.3 + 0.5 * 0.7 * 0.7;
        assert!((v - exact).abs() < 1e-12);
    }
}

//! Fixed-node Gauss-Legendre quadrature.
//!
//! Nodes are the roots of the Legendre polynomial `P_n`, found by Newton
//! iteration from the Chebyshev initial guess; weights follow from the
//! derivative value at each root. A rule with `n` nodes integrates
//! polynomials up to degree `2n - 1` exactly.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Node count and node-doubling tolerance for remainder integrals.
#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
pub struct QuadratureSpec {
    pub nodes: usize,
    /// Maximum allowed disagreement between the `nodes` and `2 * nodes`
    /// results before the integral is reported as non-convergent.
    pub tol: f64,
}

impl Default for QuadratureSpec {
    fn default() -> Self {
        QuadratureSpec {
            nodes: 64,
            tol: 1e-8,
        }
    }
}

/// A Gauss-Legendre rule on `[-1, 1]`.
#[derive(Debug, Clone)]
pub struct GaussLegendre {
    nodes: Vec<f64>,
    weights: Vec<f64>,
}

impl GaussLegendre {
    pub fn new(n: usize) -> Result<Self> {
        if n == 0 {
            return Err(Error::InvalidArgument(
                "quadrature rule needs at least one node".into(),
            ));
        }
        let mut nodes = vec![0.0; n];
        let mut weights = vec![0.0; n];
        for i in 0..n {
            // Chebyshev-based initial guess for the i-th root of P_n.
            let mut x = (std::f64::consts::PI * (i as f64 + 0.75) / (n as f64 + 0.5)).cos();
            let mut dp = 0.0;
            for _ in 0..100 {
                let (p, d) = legendre_with_derivative(n, x);
                dp = d;
                let dx = p / d;
                x -= dx;
                if dx.abs() <= 1e-15 * (1.0 + x.abs()) {
                    break;
                }
            }
            nodes[i] = x;
            weights[i] = 2.0 / ((1.0 - x * x) * dp * dp);
        }
        nodes.reverse();
        weights.reverse();
        Ok(GaussLegendre { nodes, weights })
    }

    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }

    pub fn nodes(&self) -> &[f64] {
        &self.nodes
    }

    pub fn weights(&self) -> &[f64] {
        &self.weights
    }

    /// Integrates `f` over `[lo, hi]`.
    pub fn integrate(&self, lo: f64, hi: f64, mut f: impl FnMut(f64) -> f64) -> f64 {
        let mid = 0.5 * (lo + hi);
        let half = 0.5 * (hi - lo);
        let mut acc = 0.0;
        for (x, w) in self.nodes.iter().zip(&self.weights) {
            acc += w * f(mid + half * x);
        }
        acc * half
    }

    /// Integrates a vector-valued `f` over `[lo, hi]`, accumulating into a
    /// fresh vector of length `dim`.
    pub fn integrate_vec(
        &self,
        lo: f64,
        hi: f64,
        dim: usize,
        mut f: impl FnMut(f64, &mut [f64]) -> Result<()>,
    ) -> Result<Vec<f64>> {
        let mid = 0.5 * (lo + hi);
        let half = 0.5 * (hi - lo);
        let mut acc = vec![0.0; dim];
        let mut slot = vec![0.0; dim];
        for (x, w) in self.nodes.iter().zip(&self.weights) {
            f(mid + half * x, &mut slot)?;
            for (a, s) in acc.iter_mut().zip(&slot) {
                *a += w * s;
            }
        }
        for a in &mut acc {
            *a *= half;
        }
        Ok(acc)
    }
}

/// `(P_n(x), P_n'(x))` via the three-term recurrence.
fn legendre_with_derivative(n: usize, x: f64) -> (f64, f64) {
    let mut p_prev = 1.0;
    let mut p = x;
    if n == 0 {
        return (1.0, 0.0);
    }
    for k in 2..=n {
        let kf = k as f64;
        let p_next = ((2.0 * kf - 1.0) * x * p - (kf - 1.0) * p_prev) / kf;
        p_prev = p;
        p = p_next;
    }
    let d = n as f64 * (x * p - p_prev) / (x * x - 1.0);
    (p, d)
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    #[test]
    fn weights_sum_to_interval_length() {
        for n in [1, 2, 5, 16, 64] {
            let rule = GaussLegendre::new(n).unwrap();
            let total: f64 = rule.weights().iter().sum();
            assert_relative_eq!(total, 2.0, epsilon = 1e-13);
        }
    }

    #[test]
    fn nodes_are_symmetric_and_sorted() {
        let rule = GaussLegendre::new(16).unwrap();
        let nodes = rule.nodes();
        for w in nodes.windows(2) {
            assert!(w[0] < w[1]);
        }
        for i in 0..nodes.len() {
            assert_relative_eq!(nodes[i], -nodes[nodes.len() - 1 - i], epsilon = 1e-14);
        }
    }

    #[test]
    fn integrates_polynomials_exactly_up_to_degree_2n_minus_1() {
        let rule = GaussLegendre::new(4).unwrap();
        // x^7 on [0, 1] -> 1/8, the highest degree a 4-node rule must nail.
        let got = rule.integrate(0.0, 1.0, |x| x.powi(7));
        assert_relative_eq!(got, 0.125, epsilon = 1e-14);
    }

    #[test]
    fn integrates_exponential() {
        let rule = GaussLegendre::new(64).unwrap();
        let got = rule.integrate(0.0, 1.0, f64::exp);
        assert_relative_eq!(got, std::f64::consts::E - 1.0, epsilon = 1e-13);
    }

    #[test]
    fn small_rules_match_known_nodes() {
        let rule = GaussLegendre::new(2).unwrap();
        assert_relative_eq!(rule.nodes()[1], 1.0 / 3.0f64.sqrt(), epsilon = 1e-14);
        assert_relative_eq!(rule.weights()[0], 1.0, epsilon = 1e-14);
    }

    #[test]
    fn zero_nodes_rejected() {
        assert!(GaussLegendre::new(0).is_err());
    }
}

//! Deterministic Taylor partial sums and remainders.
//!
//! Univariate and multivariate partial sums, the Lagrange closing term, the
//! directional derivative power operator, Jacobians, and the integral form of
//! the remainder for vector-valued fields.

use crate::error::{Error, Result};
use crate::field::{MultiIndex, ScalarField, VectorField};
use crate::quadrature::{GaussLegendre, QuadratureSpec};

fn factorial(k: usize) -> f64 {
    (1..=k).map(|i| i as f64).product()
}

fn require_positive_order(n: usize) -> Result<()> {
    if n == 0 {
        return Err(Error::OrderZero);
    }
    Ok(())
}

/// Degree-`(n-1)` Taylor partial sum of a univariate field around `a`:
/// `f(a) + sum_{k=1}^{n-1} f^(k)(a) h^k / k!`. For `n = 1` the sum is empty
/// and the value is `f(a)`.
pub fn partial_sum_uni(f: &ScalarField, a: f64, h: f64, n: usize) -> Result<f64> {
    require_positive_order(n)?;
    if f.arity() != 1 {
        return Err(Error::ArityMismatch {
            expected: 1,
            got: f.arity(),
        });
    }
    if n - 1 > f.max_order() {
        return Err(Error::OrderTooHigh {
            requested: n - 1,
            max: f.max_order(),
        });
    }
    f.domain().contains_segment(&[a], &[a + h])?;
    let mut acc = f.eval_uni(a)?;
    let mut h_pow = 1.0;
    for k in 1..n {
        h_pow *= h;
        acc += f.derivative_uni(k, a)? * h_pow / factorial(k);
    }
    Ok(acc)
}

/// The Lagrange closing term `f^(n)(a + theta h) h^n / n!` at an explicit
/// `theta` strictly inside `(0, 1)`.
pub fn lagrange_remainder_uni(
    f: &ScalarField,
    a: f64,
    theta: f64,
    h: f64,
    n: usize,
) -> Result<f64> {
    require_positive_order(n)?;
    if !(theta > 0.0 && theta < 1.0) {
        return Err(Error::ThetaOutOfRange(theta));
    }
    let d = f.derivative_uni(n, a + theta * h)?;
    Ok(d / factorial(n) * h.powi(n as i32))
}

/// The directional power operator
/// `(sum_q h_q d/dx_q)^n f = sum_{|alpha| = n} n!/alpha! h^alpha d^alpha f`
/// evaluated at `point`. Multi-indices are enumerated in ascending
/// lexicographic order; `n = 0` returns `f(point)`.
pub fn directional_power(f: &ScalarField, point: &[f64], h: &[f64], n: usize) -> Result<f64> {
    if h.len() != f.arity() {
        return Err(Error::ArityMismatch {
            expected: f.arity(),
            got: h.len(),
        });
    }
    if n == 0 {
        return f.eval(point);
    }
    let mut acc = 0.0;
    for alpha in MultiIndex::enumerate(f.arity(), n) {
        let monomial = alpha.monomial(h);
        if monomial == 0.0 {
            continue;
        }
        acc += alpha.multinomial() * monomial * f.derivative(point, &alpha)?;
    }
    Ok(acc)
}

/// Multivariate Taylor partial sum along the increment `h`:
/// `f(a) + sum_{k=1}^{n-1} (1/k!) (h . grad)^k f(a)`.
pub fn partial_sum_multi(f: &ScalarField, a: &[f64], h: &[f64], n: usize) -> Result<f64> {
    require_positive_order(n)?;
    let end: Vec<f64> = a.iter().zip(h).map(|(x, d)| x + d).collect();
    f.domain().contains_segment(a, &end)?;
    if n - 1 > f.max_order() {
        return Err(Error::OrderTooHigh {
            requested: n - 1,
            max: f.max_order(),
        });
    }
    let mut acc = f.eval(a)?;
    for k in 1..n {
        acc += directional_power(f, a, h, k)? / factorial(k);
    }
    Ok(acc)
}

/// Jacobian matrix of a vector field at `x`: entry `(q', q)` is
/// `d f_{q'} / d x_q`.
pub fn jacobian(field: &VectorField, x: &[f64]) -> Result<Vec<Vec<f64>>> {
    let p = field.input_arity();
    let mut rows = Vec::with_capacity(field.output_arity());
    for component in field.components() {
        let mut row = Vec::with_capacity(p);
        for q in 0..p {
            row.push(component.derivative(x, &MultiIndex::unit(p, q))?);
        }
        rows.push(row);
    }
    Ok(rows)
}

/// Integral form of the order-`n` remainder for a vector field:
/// `(1/(n-1)!) \int_0^1 (1-t)^{n-1} D^n F(a + t h) h^{(n)} dt`,
/// where the `q'`-th entry of `D^n F(x) h^{(n)}` is the directional power of
/// the component `F_{q'}`. For `n = 1` this is the mean value integral
/// `\int_0^1 DF(a + t h) h dt`.
///
/// The integral is evaluated with the requested Gauss-Legendre rule and again
/// with twice the nodes; a disagreement beyond `spec.tol` is reported as
/// non-convergence.
pub fn integral_remainder_vec(
    field: &VectorField,
    a: &[f64],
    h: &[f64],
    n: usize,
    spec: &QuadratureSpec,
) -> Result<Vec<f64>> {
    require_positive_order(n)?;
    let p = field.input_arity();
    if a.len() != p || h.len() != p {
        return Err(Error::ArityMismatch {
            expected: p,
            got: if a.len() != p { a.len() } else { h.len() },
        });
    }
    if n > field.max_order() {
        return Err(Error::OrderTooHigh {
            requested: n,
            max: field.max_order(),
        });
    }
    let end: Vec<f64> = a.iter().zip(h).map(|(x, d)| x + d).collect();
    for component in field.components() {
        component.domain().contains_segment(a, &end)?;
    }
    if h.iter().all(|&d| d == 0.0) {
        return Ok(vec![0.0; field.output_arity()]);
    }

    let scale = 1.0 / factorial(n - 1);
    let dim = field.output_arity();
    let mut point = vec![0.0; p];
    let mut integrand = |t: f64, out: &mut [f64]| -> Result<()> {
        for (q, c) in point.iter_mut().enumerate() {
            *c = a[q] + t * h[q];
        }
        let weight = (1.0 - t).powi(n as i32 - 1);
        for (q, component) in field.components().iter().enumerate() {
            out[q] = weight * directional_power(component, &point, h, n)?;
        }
        Ok(())
    };

    let coarse = GaussLegendre::new(spec.nodes)?.integrate_vec(0.0, 1.0, dim, &mut integrand)?;
    let fine = GaussLegendre::new(2 * spec.nodes)?.integrate_vec(0.0, 1.0, dim, &mut integrand)?;
    let disagreement = coarse
        .iter()
        .zip(&fine)
        .map(|(c, f)| (c - f).abs())
        .fold(0.0, f64::max);
    if disagreement > spec.tol {
        return Err(Error::QuadratureNonConvergence {
            disagreement,
            tol: spec.tol,
        });
    }
    Ok(fine.into_iter().map(|v| v * scale).collect())
}

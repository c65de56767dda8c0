//! Builtin function registry.
//!
//! Named functions with exact derivative closures, so experiments never
//! depend on an expression parser or on finite-difference fallbacks. The
//! string specs accepted by [`parse`] are the ones understood by the CLI:
//! `poly:c0,c1,...`, `exp`, `sin`, and `log-shifted` (alias `log1p`).

use crate::error::{Error, Result};
use crate::field::{Domain, ScalarField};

/// Max derivative order wired into the builtin fields.
pub const BUILTIN_MAX_ORDER: usize = 16;

fn factorial(k: usize) -> f64 {
    (1..=k).map(|i| i as f64).product()
}

/// Parses a function spec string into a scalar field.
pub fn parse(spec: &str) -> Result<ScalarField> {
    if let Some(list) = spec.strip_prefix("poly:") {
        let coeffs: std::result::Result<Vec<f64>, _> =
            list.split(',').map(|c| c.trim().parse::<f64>()).collect();
        return match coeffs {
            Ok(c) if !c.is_empty() => Ok(poly(&c)),
            _ => Err(Error::UnknownFunction(spec.to_string())),
        };
    }
    match spec {
        "exp" => Ok(exp_field()),
        "sin" => Ok(sin_field()),
        "log-shifted" | "log1p" => Ok(log_shifted()),
        other => Err(Error::UnknownFunction(other.to_string())),
    }
}

/// Polynomial `sum_j coeffs[j] x^j` with exact derivatives of every order.
pub fn poly(coeffs: &[f64]) -> ScalarField {
    // Derivative coefficient tables, one per order up to the max.
    let mut tables: Vec<Vec<f64>> = vec![coeffs.to_vec()];
    for _ in 0..BUILTIN_MAX_ORDER {
        let prev = tables.last().unwrap();
        let next: Vec<f64> = prev
            .iter()
            .enumerate()
            .skip(1)
            .map(|(j, c)| j as f64 * c)
            .collect();
        tables.push(next);
    }
    let horner = |c: &[f64], x: f64| c.iter().rev().fold(0.0, |acc, &ck| acc * x + ck);
    let eval_tables = tables.clone();
    ScalarField::univariate(
        BUILTIN_MAX_ORDER,
        Domain::real_line(),
        move |x| horner(&eval_tables[0], x),
        move |k, x| horner(&tables[k], x),
    )
}

/// `exp(x)`; every derivative is the function itself.
pub fn exp_field() -> ScalarField {
    ScalarField::univariate(
        BUILTIN_MAX_ORDER,
        Domain::real_line(),
        f64::exp,
        |_, x| x.exp(),
    )
}

/// `sin(x)`; `f^(k)(x) = sin(x + k pi/2)`.
pub fn sin_field() -> ScalarField {
    ScalarField::univariate(
        BUILTIN_MAX_ORDER,
        Domain::real_line(),
        f64::sin,
        |k, x| (x + k as f64 * std::f64::consts::FRAC_PI_2).sin(),
    )
}

/// `log(1 + x)` on `[-0.9, inf)`; `f^(k)(x) = (-1)^(k-1) (k-1)! / (1+x)^k`.
pub fn log_shifted() -> ScalarField {
    ScalarField::univariate(
        BUILTIN_MAX_ORDER,
        Domain::interval(-0.9, f64::INFINITY).unwrap(),
        f64::ln_1p,
        |k, x| {
            let sign = if k % 2 == 1 { 1.0 } else { -1.0 };
            sign * factorial(k - 1) / (1.0 + x).powi(k as i32)
        },
    )
}

/// `sum_q x_q^2` in `p` variables.
pub fn sum_of_squares(p: usize) -> ScalarField {
    ScalarField::analytic(
        p,
        BUILTIN_MAX_ORDER,
        Domain::full_space(p),
        |x| x.iter().map(|c| c * c).sum(),
        |x, alpha| {
            let e = alpha.entries();
            match alpha.order() {
                1 => {
                    let q = e.iter().position(|&i| i == 1).unwrap();
                    2.0 * x[q]
                }
                2 if e.contains(&2) => 2.0,
                _ => 0.0,
            }
        },
    )
}

/// `x_1 x_2 ... x_p`.
pub fn product_all(p: usize) -> ScalarField {
    ScalarField::analytic(
        p,
        BUILTIN_MAX_ORDER,
        Domain::full_space(p),
        |x| x.iter().product(),
        |x, alpha| {
            if alpha.entries().iter().any(|&i| i > 1) {
                return 0.0;
            }
            alpha
                .entries()
                .iter()
                .zip(x)
                .map(|(&i, &c)| if i == 0 { c } else { 1.0 })
                .product()
        },
    )
}

/// `exp(c . x)`; `d^alpha = (prod_q c_q^{i_q}) exp(c . x)`.
pub fn exp_linear(c: Vec<f64>) -> ScalarField {
    let p = c.len();
    let c_eval = c.clone();
    ScalarField::analytic(
        p,
        BUILTIN_MAX_ORDER,
        Domain::full_space(p),
        move |x| dot(&c_eval, x).exp(),
        move |x, alpha| {
            let factor: f64 = alpha
                .entries()
                .iter()
                .zip(&c)
                .map(|(&i, &cq)| cq.powi(i as i32))
                .product();
            factor * dot(&c, x).exp()
        },
    )
}

/// The linear form `c . x`.
pub fn linear_form(c: Vec<f64>) -> ScalarField {
    let p = c.len();
    let c_eval = c.clone();
    ScalarField::analytic(
        p,
        BUILTIN_MAX_ORDER,
        Domain::full_space(p),
        move |x| dot(&c_eval, x),
        move |_, alpha| match alpha.order() {
            1 => {
                let q = alpha.entries().iter().position(|&i| i == 1).unwrap();
                c[q]
            }
            _ => 0.0,
        },
    )
}

/// The coordinate projections `x -> x_q`, one field per coordinate.
pub fn coordinate_fields(p: usize) -> Vec<ScalarField> {
    (0..p)
        .map(|q| {
            let mut c = vec![0.0; p];
            c[q] = 1.0;
            linear_form(c)
        })
        .collect()
}

/// `sin(x) cos(y)`; partials shift each factor by a quarter period.
pub fn sin_x_cos_y() -> ScalarField {
    use std::f64::consts::FRAC_PI_2;
    ScalarField::analytic(
        2,
        BUILTIN_MAX_ORDER,
        Domain::full_space(2),
        |x| x[0].sin() * x[1].cos(),
        |x, alpha| {
            let e = alpha.entries();
            (x[0] + e[0] as f64 * FRAC_PI_2).sin() * (x[1] + e[1] as f64 * FRAC_PI_2).cos()
        },
    )
}

/// `sin(x) cos(y) exp(z)` in three variables.
pub fn sin_cos_exp() -> ScalarField {
    use std::f64::consts::FRAC_PI_2;
    ScalarField::analytic(
        3,
        BUILTIN_MAX_ORDER,
        Domain::full_space(3),
        |x| x[0].sin() * x[1].cos() * x[2].exp(),
        |x, alpha| {
            let e = alpha.entries();
            (x[0] + e[0] as f64 * FRAC_PI_2).sin()
                * (x[1] + e[1] as f64 * FRAC_PI_2).cos()
                * x[2].exp()
        },
    )
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

//! Constructive selection of the intermediate point of a Taylor or mean
//! value expansion, one realization at a time.
//!
//! For an increment `x` the admissible points form the closed interval with
//! endpoints `0` and `x`. The remainder equation `g(s) = pi` restates the
//! expansion identity with the intermediate point as the unknown; its root
//! set is nonempty whenever the deterministic expansion applies. The solver
//! scans the bracket on a uniform grid, refines every sign change by
//! bisection, and then applies a deterministic tie-break: the sup policy
//! keeps the largest root found, the inf policy the smallest. Because the
//! whole procedure consumes nothing but `(f, a, x, n, policy)`, equal inputs
//! produce bit-identical outputs, which is what makes the per-outcome map a
//! function of the increment alone.

use crate::error::{Error, Result};
use crate::field::{MultiIndex, ScalarField};
use crate::probability::RandomVariable;
use crate::taylor::{directional_power, partial_sum_multi, partial_sum_uni};
use crate::value::Value;

fn factorial(k: usize) -> f64 {
    (1..=k).map(|i| i as f64).product()
}

/// The interval of admissible offsets for a scalar increment: `[0, x]`,
/// `[x, 0]`, or the degenerate `{0}`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CandidateBracket {
    pub lo: f64,
    pub hi: f64,
    /// True exactly when the increment is zero and the bracket is `{0}`.
    pub degenerate: bool,
}

/// Builds the candidate bracket for an increment. Non-finite increments are
/// rejected.
pub fn candidate_bracket(x: f64) -> Result<CandidateBracket> {
    if !x.is_finite() {
        return Err(Error::NonFiniteIncrement(x));
    }
    Ok(CandidateBracket {
        lo: x.min(0.0),
        hi: x.max(0.0),
        degenerate: x == 0.0,
    })
}

impl CandidateBracket {
    pub fn contains(&self, s: f64) -> bool {
        self.lo <= s && s <= self.hi
    }

    pub fn width(&self) -> f64 {
        self.hi - self.lo
    }
}

/// Tie-break rule for the root set.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SelectorVariant {
    /// Keep the supremum of the roots found.
    Sup,
    /// Keep the infimum; useful as a sensitivity check.
    Inf,
}

/// Scan-and-refine parameters for the selector.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SelectionPolicy {
    pub variant: SelectorVariant,
    /// Uniform scan nodes over the bracket; at least 2.
    pub scan_points: usize,
    /// Absolute bisection tolerance in the scan parameter; residuals are
    /// accepted relative to `1 + |pi|` at this same level.
    pub refine_tol: f64,
}

impl Default for SelectionPolicy {
    fn default() -> Self {
        SelectionPolicy {
            variant: SelectorVariant::Sup,
            scan_points: 4097,
            refine_tol: 1e-12,
        }
    }
}

impl SelectionPolicy {
    pub fn sup() -> Self {
        SelectionPolicy::default()
    }

    pub fn inf() -> Self {
        SelectionPolicy {
            variant: SelectorVariant::Inf,
            ..SelectionPolicy::default()
        }
    }

    pub fn with_scan_points(mut self, scan_points: usize) -> Self {
        self.scan_points = scan_points;
        self
    }

    pub fn with_refine_tol(mut self, refine_tol: f64) -> Self {
        self.refine_tol = refine_tol;
        self
    }

    pub fn validate(&self) -> Result<()> {
        if self.scan_points < 2 {
            return Err(Error::InvalidPolicy(format!(
                "scan_points must be at least 2, got {}",
                self.scan_points
            )));
        }
        if !self.refine_tol.is_finite() || self.refine_tol <= 0.0 {
            return Err(Error::InvalidPolicy(format!(
                "refine_tol must be positive, got {}",
                self.refine_tol
            )));
        }
        Ok(())
    }
}

/// The remainder equation `g(s) = pi` for one realization.
///
/// Univariate: `g(s) = f^(n)(a + s) x^n / n!` on the offset bracket.
/// Multivariate: `g(t) = (1/n!) (X . grad)^n f(a + t X)` on `t in [0, 1]`.
pub struct RemainderEquation<'f> {
    pub pi: f64,
    pub order: usize,
    pub increment: Value,
    field: &'f ScalarField,
    anchor: Vec<f64>,
    // Precomputed x^n / n! (univariate) or 1 / n! (multivariate).
    coefficient: f64,
    deriv_index: MultiIndex,
}

impl RemainderEquation<'_> {
    /// Evaluates `g` at the scan parameter (offset `s` or segment `t`).
    pub fn g(&self, s: f64) -> Result<f64> {
        match &self.increment {
            Value::Scalar(_) => {
                let point = [self.anchor[0] + s];
                Ok(self.field.derivative(&point, &self.deriv_index)? * self.coefficient)
            }
            Value::Vector(x) => {
                let point: Vec<f64> =
                    self.anchor.iter().zip(x).map(|(a, d)| a + s * d).collect();
                Ok(directional_power(self.field, &point, x, self.order)? * self.coefficient)
            }
        }
    }

    /// `g(s) - pi`, the function whose roots are admissible points.
    pub fn residual_at(&self, s: f64) -> Result<f64> {
        Ok(self.g(s)? - self.pi)
    }
}

/// Builds the remainder equation for the anchor `a` and increment `x_inc`:
/// `pi` is the expansion defect `f(a + x) - partial_sum(f, a, x, n)` and `g`
/// the order-`n` closing term as a function of the intermediate point.
pub fn build_remainder_equation<'f>(
    f: &'f ScalarField,
    a: &[f64],
    x_inc: &Value,
    n: usize,
) -> Result<RemainderEquation<'f>> {
    if n == 0 {
        return Err(Error::OrderZero);
    }
    if n > f.max_order() {
        return Err(Error::OrderTooHigh {
            requested: n,
            max: f.max_order(),
        });
    }
    if a.len() != f.arity() || x_inc.dim() != f.arity() {
        return Err(Error::ArityMismatch {
            expected: f.arity(),
            got: if a.len() != f.arity() {
                a.len()
            } else {
                x_inc.dim()
            },
        });
    }
    match x_inc {
        Value::Scalar(x) => {
            if !x.is_finite() {
                return Err(Error::NonFiniteIncrement(*x));
            }
            let pi = f.eval_uni(a[0] + x)? - partial_sum_uni(f, a[0], *x, n)?;
            Ok(RemainderEquation {
                pi,
                order: n,
                increment: x_inc.clone(),
                field: f,
                anchor: a.to_vec(),
                coefficient: x.powi(n as i32) / factorial(n),
                deriv_index: MultiIndex::new(vec![n]),
            })
        }
        Value::Vector(x) => {
            if let Some(&bad) = x.iter().find(|c| !c.is_finite()) {
                return Err(Error::NonFiniteIncrement(bad));
            }
            let end: Vec<f64> = a.iter().zip(x).map(|(ai, d)| ai + d).collect();
            let pi = f.eval(&end)? - partial_sum_multi(f, a, x, n)?;
            Ok(RemainderEquation {
                pi,
                order: n,
                increment: x_inc.clone(),
                field: f,
                anchor: a.to_vec(),
                coefficient: 1.0 / factorial(n),
                deriv_index: MultiIndex::zero(a.len()),
            })
        }
    }
}

/// A solved intermediate point for one realization.
#[derive(Debug, Clone, PartialEq)]
pub struct SelectionResult {
    /// Offset from the anchor: a scalar in the candidate bracket, or the
    /// vector `theta * X` on the segment.
    pub xi: Value,
    /// Segment parameter in `[0, 1]`; for scalars `xi = theta * x`.
    pub theta: f64,
    /// Signed defect `g(xi) - pi` at the selected point.
    pub residual: f64,
    /// Scan interval: the offset bracket for scalars, `[0, 1]` in the
    /// segment parameter for vectors.
    pub bracket: CandidateBracket,
    pub policy: SelectionPolicy,
    /// Number of sign changes the scan observed across the whole bracket.
    pub root_count_estimate: usize,
}

struct ScanSolve {
    s: f64,
    residual: f64,
    sign_changes: usize,
}

/// Scans `r` on `[lo, hi]`, refines sign changes by bisection, admits nodes
/// whose residual is already inside tolerance, and tie-breaks per policy.
fn solve_on_interval(
    r: &dyn Fn(f64) -> Result<f64>,
    lo: f64,
    hi: f64,
    policy: &SelectionPolicy,
    resid_scale: f64,
) -> Result<ScanSolve> {
    let m = policy.scan_points;
    let tol_resid = policy.refine_tol * resid_scale;
    let step = (hi - lo) / (m - 1) as f64;

    let mut values = Vec::with_capacity(m);
    for i in 0..m {
        let s = if i + 1 == m { hi } else { lo + i as f64 * step };
        values.push((s, r(s)?));
    }

    let mut best: Option<(f64, f64)> = None; // (s, signed residual), per policy
    let mut best_abs = f64::INFINITY; // closest miss, for diagnostics
    let mut sign_changes = 0usize;

    let better = |candidate: f64, incumbent: Option<(f64, f64)>| match incumbent {
        None => true,
        Some((s, _)) => match policy.variant {
            SelectorVariant::Sup => candidate > s,
            SelectorVariant::Inf => candidate < s,
        },
    };

    for &(s, ri) in &values {
        best_abs = best_abs.min(ri.abs());
        if ri.abs() <= tol_resid && better(s, best) {
            best = Some((s, ri));
        }
    }

    for w in values.windows(2) {
        let (s0, r0) = w[0];
        let (s1, r1) = w[1];
        if r0 * r1 < 0.0 {
            sign_changes += 1;
            let (s, residual) = bisect(r, s0, r0, s1, r1, policy, tol_resid)?;
            if better(s, best) {
                best = Some((s, residual));
            }
        }
    }

    match best {
        Some((s, residual)) => Ok(ScanSolve {
            s,
            residual,
            sign_changes,
        }),
        None => Err(Error::NoRootFound {
            lo,
            hi,
            pi: 0.0, // filled by the caller, which knows pi
            best_residual: best_abs,
        }),
    }
}

/// Bisection on a sign-changing interval, to width `refine_tol` and then
/// further until the midpoint residual enters tolerance (capped).
fn bisect(
    r: &dyn Fn(f64) -> Result<f64>,
    mut lo: f64,
    mut r_lo: f64,
    mut hi: f64,
    mut r_hi: f64,
    policy: &SelectionPolicy,
    tol_resid: f64,
) -> Result<(f64, f64)> {
    let mut mid = 0.5 * (lo + hi);
    let mut r_mid = r(mid)?;
    for _ in 0..200 {
        if hi - lo <= policy.refine_tol && r_mid.abs() <= tol_resid {
            break;
        }
        if mid <= lo || mid >= hi {
            break; // interval exhausted at f64 resolution
        }
        if r_mid == 0.0 {
            break;
        }
        if r_mid * r_hi < 0.0 {
            lo = mid;
            r_lo = r_mid;
        } else {
            hi = mid;
            r_hi = r_mid;
        }
        mid = 0.5 * (lo + hi);
        r_mid = r(mid)?;
    }
    // Keep whichever of the three current points has the smallest defect.
    let mut out = (mid, r_mid);
    if r_lo.abs() < out.1.abs() {
        out = (lo, r_lo);
    }
    if r_hi.abs() < out.1.abs() {
        out = (hi, r_hi);
    }
    Ok(out)
}

/// Solves for the intermediate offset of a univariate expansion:
/// `f(a + x) = partial_sum(f, a, x, n) + g(xi)` with `xi` in the candidate
/// bracket of `x`.
pub fn solve_selector_uni(
    f: &ScalarField,
    a: f64,
    x: f64,
    n: usize,
    policy: &SelectionPolicy,
) -> Result<SelectionResult> {
    policy.validate()?;
    let bracket = candidate_bracket(x)?;
    if bracket.degenerate {
        // pi = 0 and g vanishes identically; 0 is the selected point.
        build_remainder_equation(f, &[a], &Value::Scalar(0.0), n)?;
        return Ok(SelectionResult {
            xi: Value::Scalar(0.0),
            theta: 0.0,
            residual: 0.0,
            bracket,
            policy: *policy,
            root_count_estimate: 0,
        });
    }
    let eq = build_remainder_equation(f, &[a], &Value::Scalar(x), n)?;
    let resid_scale = 1.0 + eq.pi.abs();
    let r = |s: f64| eq.residual_at(s);
    let solved = solve_on_interval(&r, bracket.lo, bracket.hi, policy, resid_scale)
        .map_err(|e| fill_pi(e, eq.pi))?;
    Ok(SelectionResult {
        xi: Value::Scalar(solved.s),
        theta: unsign_zero(solved.s / x),
        residual: solved.residual,
        bracket,
        policy: *policy,
        root_count_estimate: solved.sign_changes,
    })
}

// Keeps -0.0 out of reports and bit-exact groupings.
fn unsign_zero(v: f64) -> f64 {
    if v == 0.0 {
        0.0
    } else {
        v
    }
}

/// Solves for the segment parameter of a multivariate expansion:
/// `theta in [0, 1]` with `g(theta) = pi`, and `xi = theta * X`.
pub fn solve_selector_multi(
    f: &ScalarField,
    a: &[f64],
    x: &[f64],
    n: usize,
    policy: &SelectionPolicy,
) -> Result<SelectionResult> {
    policy.validate()?;
    let degenerate = x.iter().all(|&c| c == 0.0);
    let bracket = CandidateBracket {
        lo: 0.0,
        hi: 1.0,
        degenerate,
    };
    if degenerate {
        build_remainder_equation(f, a, &Value::Vector(x.to_vec()), n)?;
        return Ok(SelectionResult {
            xi: Value::Vector(vec![0.0; x.len()]),
            theta: 0.0,
            residual: 0.0,
            bracket,
            policy: *policy,
            root_count_estimate: 0,
        });
    }
    let eq = build_remainder_equation(f, a, &Value::Vector(x.to_vec()), n)?;
    let resid_scale = 1.0 + eq.pi.abs();
    let r = |t: f64| eq.residual_at(t);
    let solved = solve_on_interval(&r, 0.0, 1.0, policy, resid_scale)
        .map_err(|e| fill_pi(e, eq.pi))?;
    let xi: Vec<f64> = x.iter().map(|&c| unsign_zero(solved.s * c)).collect();
    Ok(SelectionResult {
        xi: Value::Vector(xi),
        theta: solved.s,
        residual: solved.residual,
        bracket,
        policy: *policy,
        root_count_estimate: solved.sign_changes,
    })
}

fn fill_pi(e: Error, pi: f64) -> Error {
    match e {
        Error::NoRootFound {
            lo,
            hi,
            best_residual,
            ..
        } => Error::NoRootFound {
            lo,
            hi,
            pi,
            best_residual,
        },
        other => other,
    }
}

/// Certification scan for the sup policy: counts sign changes of `g - pi`
/// strictly above the selected point, at `nodes` uniform points. A clean
/// certificate returns 0. Points whose defect is inside `tol_resid` are
/// treated as roots already admissible, not as crossings.
pub fn count_sign_changes_above(
    eq: &RemainderEquation<'_>,
    xi: f64,
    hi: f64,
    nodes: usize,
    tol_resid: f64,
) -> Result<usize> {
    if xi >= hi || nodes < 2 {
        return Ok(0);
    }
    let step = (hi - xi) / nodes as f64;
    let mut count = 0usize;
    let mut prev: Option<f64> = None;
    for i in 1..=nodes {
        let s = if i == nodes { hi } else { xi + i as f64 * step };
        let r = eq.residual_at(s)?;
        if r.abs() <= tol_resid {
            prev = None; // tangential contact, not a crossing
            continue;
        }
        if let Some(p) = prev {
            if p * r < 0.0 {
                count += 1;
            }
        }
        prev = Some(r);
    }
    Ok(count)
}

/// The selector applied outcome by outcome to a random increment.
#[derive(Debug, Clone)]
pub struct SelectorSample {
    /// The map `omega -> xi(omega)` on the same probability space.
    pub xi: RandomVariable,
    /// Per-outcome solve diagnostics, in outcome order.
    pub results: Vec<SelectionResult>,
}

/// Applies the selector to every outcome of a random increment, producing
/// the intermediate point as a random variable on the same space. The solve
/// consumes only `(f, a, X(omega), n, policy)`, so outcomes with equal
/// increments receive bit-identical points.
pub fn apply_over_sample(
    f: &ScalarField,
    a: &[f64],
    x: &RandomVariable,
    n: usize,
    policy: &SelectionPolicy,
) -> Result<SelectorSample> {
    let space = x.space();
    let mut values = Vec::with_capacity(space.len());
    let mut results = Vec::with_capacity(space.len());
    let mut failures: Vec<(String, Box<Error>)> = Vec::new();
    for (idx, outcome) in space.outcomes().iter().enumerate() {
        let solve = match x.value_at(idx) {
            Value::Scalar(xv) => {
                if a.len() != 1 {
                    Err(Error::ArityMismatch {
                        expected: a.len(),
                        got: 1,
                    })
                } else {
                    solve_selector_uni(f, a[0], *xv, n, policy)
                }
            }
            Value::Vector(xv) => solve_selector_multi(f, a, xv, n, policy),
        };
        match solve {
            Ok(res) => {
                values.push(res.xi.clone());
                results.push(res);
            }
            Err(e) => failures.push((outcome.clone(), Box::new(e))),
        }
    }
    if !failures.is_empty() {
        return Err(Error::PerOutcome {
            total: space.len(),
            failures,
        });
    }
    let xi = RandomVariable::on_space(x.space_arc(), values)?;
    Ok(SelectorSample { xi, results })
}

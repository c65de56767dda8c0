//! Scalar and vector fields with derivative oracles.
//!
//! A [`ScalarField`] bundles an evaluation closure with a derivative oracle
//! indexed by multi-indices, either analytic (exact closures) or central
//! finite differences. Fields carry their own [`Domain`] and a maximum
//! supported derivative order; every query is validated against both.

use std::fmt;
use std::sync::Arc;

use crate::error::{Error, Result};

/// Number of sample points used when checking that a segment stays inside a
/// domain given only by a membership predicate.
pub const SEGMENT_SAMPLES: usize = 101;

/// Default relative step scale for finite-difference derivative oracles.
pub const DEFAULT_FD_STEP: f64 = 1e-5;

fn factorial(k: usize) -> f64 {
    (1..=k).map(|i| i as f64).product()
}

/// Differentiation counts per coordinate, `(i_1, ..., i_p)`.
///
/// The count representation already identifies mixed partials taken in any
/// order, so oracle results cannot depend on differentiation order.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct MultiIndex(Vec<usize>);

impl MultiIndex {
    pub fn new(entries: Vec<usize>) -> Self {
        MultiIndex(entries)
    }

    /// The zero multi-index in `p` variables (no differentiation).
    pub fn zero(p: usize) -> Self {
        MultiIndex(vec![0; p])
    }

    /// The unit multi-index `e_q` (one derivative in coordinate `q`).
    pub fn unit(p: usize, q: usize) -> Self {
        let mut e = vec![0; p];
        e[q] = 1;
        MultiIndex(e)
    }

    pub fn entries(&self) -> &[usize] {
        &self.0
    }

    pub fn arity(&self) -> usize {
        self.0.len()
    }

    /// Total order `|alpha| = sum_q i_q`.
    pub fn order(&self) -> usize {
        self.0.iter().sum()
    }

    /// Multinomial weight `|alpha|! / (i_1! ... i_p!)`.
    pub fn multinomial(&self) -> f64 {
        let num = factorial(self.order());
        let den: f64 = self.0.iter().map(|&i| factorial(i)).product();
        num / den
    }

    /// Monomial `h_1^{i_1} ... h_p^{i_p}`.
    pub fn monomial(&self, h: &[f64]) -> f64 {
        self.0
            .iter()
            .zip(h)
            .map(|(&i, &hq)| hq.powi(i as i32))
            .product()
    }

    /// All multi-indices in `p` variables with total order `n`, in ascending
    /// lexicographic order of the entry tuples. The order is fixed so that
    /// summations are reproducible bit for bit.
    pub fn enumerate(p: usize, n: usize) -> Vec<MultiIndex> {
        if p == 0 {
            return Vec::new();
        }
        let mut out = Vec::new();
        let mut current = vec![0usize; p];
        fill(&mut out, &mut current, 0, n);
        out
    }
}

fn fill(out: &mut Vec<MultiIndex>, current: &mut Vec<usize>, pos: usize, remaining: usize) {
    if pos + 1 == current.len() {
        current[pos] = remaining;
        out.push(MultiIndex(current.clone()));
        return;
    }
    for i in 0..=remaining {
        current[pos] = i;
        fill(out, current, pos + 1, remaining - i);
    }
}

impl fmt::Display for MultiIndex {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "(")?;
        for (k, i) in self.0.iter().enumerate() {
            if k > 0 {
                write!(f, ",")?;
            }
            write!(f, "{i}")?;
        }
        write!(f, ")")
    }
}

type Predicate = Arc<dyn Fn(&[f64]) -> bool + Send + Sync>;

/// Where a field may be evaluated: a closed interval on the line, or an open
/// convex set given by a membership predicate plus a bounding box.
#[derive(Clone)]
pub enum Domain {
    Interval { lo: f64, hi: f64 },
    Convex {
        contains: Predicate,
        bounding_box: Vec<(f64, f64)>,
    },
}

impl Domain {
    /// The whole real line as a closed interval with infinite endpoints.
    pub fn real_line() -> Self {
        Domain::Interval {
            lo: f64::NEG_INFINITY,
            hi: f64::INFINITY,
        }
    }

    /// All of `R^p`.
    pub fn full_space(p: usize) -> Self {
        Domain::Convex {
            contains: Arc::new(|_| true),
            bounding_box: vec![(f64::NEG_INFINITY, f64::INFINITY); p],
        }
    }

    pub fn interval(lo: f64, hi: f64) -> Result<Self> {
        if lo > hi {
            return Err(Error::InvalidInterval { lo, hi });
        }
        Ok(Domain::Interval { lo, hi })
    }

    pub fn convex(contains: impl Fn(&[f64]) -> bool + Send + Sync + 'static,
                  bounding_box: Vec<(f64, f64)>) -> Self {
        Domain::Convex {
            contains: Arc::new(contains),
            bounding_box,
        }
    }

    pub fn contains(&self, x: &[f64]) -> bool {
        match self {
            Domain::Interval { lo, hi } => x.len() == 1 && *lo <= x[0] && x[0] <= *hi,
            Domain::Convex { contains, bounding_box } => {
                x.len() == bounding_box.len()
                    && x.iter()
                        .zip(bounding_box)
                        .all(|(&c, &(lo, hi))| lo <= c && c <= hi)
                    && contains(x)
            }
        }
    }

    /// Checks the straight segment from `from` to `to` by sampling
    /// `SEGMENT_SAMPLES` equally spaced points. Membership predicates cannot
    /// be checked exhaustively, so a sampled grid is the contract here.
    pub fn contains_segment(&self, from: &[f64], to: &[f64]) -> Result<()> {
        self.contains_segment_sampled(from, to, SEGMENT_SAMPLES)
    }

    /// Segment check at a caller-chosen grid resolution (at least 2).
    pub fn contains_segment_sampled(
        &self,
        from: &[f64],
        to: &[f64],
        samples: usize,
    ) -> Result<()> {
        // Intervals are convex and closed: the two endpoints settle it.
        if let Domain::Interval { .. } = self {
            for (x, t) in [(from, 0.0), (to, 1.0)] {
                if !self.contains(x) {
                    return Err(Error::SegmentOutsideDomain {
                        from: from.to_vec(),
                        to: to.to_vec(),
                        t,
                    });
                }
            }
            return Ok(());
        }
        let samples = samples.max(2);
        let mut point = vec![0.0; from.len()];
        for k in 0..samples {
            let t = k as f64 / (samples - 1) as f64;
            for (q, c) in point.iter_mut().enumerate() {
                *c = from[q] + t * (to[q] - from[q]);
            }
            if !self.contains(&point) {
                return Err(Error::SegmentOutsideDomain {
                    from: from.to_vec(),
                    to: to.to_vec(),
                    t,
                });
            }
        }
        Ok(())
    }

    /// Spot-check convexity: midpoints of member pairs must be members.
    pub fn spot_check_convexity(&self, points: &[Vec<f64>]) -> bool {
        for (i, a) in points.iter().enumerate() {
            for b in &points[i + 1..] {
                if self.contains(a) && self.contains(b) {
                    let mid: Vec<f64> =
                        a.iter().zip(b).map(|(x, y)| 0.5 * (x + y)).collect();
                    if !self.contains(&mid) {
                        return false;
                    }
                }
            }
        }
        true
    }
}

impl fmt::Debug for Domain {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Domain::Interval { lo, hi } => write!(f, "Interval[{lo}, {hi}]"),
            Domain::Convex { bounding_box, .. } => {
                write!(f, "Convex(bbox = {bounding_box:?})")
            }
        }
    }
}

type EvalFn = Arc<dyn Fn(&[f64]) -> f64 + Send + Sync>;
type DerivFn = Arc<dyn Fn(&[f64], &MultiIndex) -> f64 + Send + Sync>;

/// How derivatives are produced.
#[derive(Clone)]
pub enum DerivativeMode {
    /// Exact closures supplied by the caller.
    Analytic(DerivFn),
    /// Nested central differences with per-coordinate step
    /// `step_scale * (1 + |x_q|)`.
    FiniteDifference { step_scale: f64 },
}

/// A real-valued function of `p` variables with a derivative oracle up to a
/// stated order. Immutable after construction and safe to share across
/// threads.
#[derive(Clone)]
pub struct ScalarField {
    arity: usize,
    max_order: usize,
    domain: Domain,
    eval: EvalFn,
    mode: DerivativeMode,
}

impl ScalarField {
    /// Field with exact derivative closures.
    pub fn analytic(
        arity: usize,
        max_order: usize,
        domain: Domain,
        eval: impl Fn(&[f64]) -> f64 + Send + Sync + 'static,
        derivative: impl Fn(&[f64], &MultiIndex) -> f64 + Send + Sync + 'static,
    ) -> Self {
        ScalarField {
            arity,
            max_order,
            domain,
            eval: Arc::new(eval),
            mode: DerivativeMode::Analytic(Arc::new(derivative)),
        }
    }

    /// Field whose derivatives come from central finite differences.
    pub fn finite_difference(
        arity: usize,
        max_order: usize,
        domain: Domain,
        eval: impl Fn(&[f64]) -> f64 + Send + Sync + 'static,
    ) -> Self {
        ScalarField {
            arity,
            max_order,
            domain,
            eval: Arc::new(eval),
            mode: DerivativeMode::FiniteDifference {
                step_scale: DEFAULT_FD_STEP,
            },
        }
    }

    /// Univariate field from an order-indexed derivative closure
    /// (`dk(k, x) = f^(k)(x)` for `k >= 1`).
    pub fn univariate(
        max_order: usize,
        domain: Domain,
        eval: impl Fn(f64) -> f64 + Send + Sync + 'static,
        dk: impl Fn(usize, f64) -> f64 + Send + Sync + 'static,
    ) -> Self {
        let f = Arc::new(eval);
        let f2 = f.clone();
        ScalarField {
            arity: 1,
            max_order,
            domain,
            eval: Arc::new(move |x: &[f64]| f(x[0])),
            mode: DerivativeMode::Analytic(Arc::new(move |x: &[f64], alpha: &MultiIndex| {
                let k = alpha.entries()[0];
                if k == 0 {
                    f2(x[0])
                } else {
                    dk(k, x[0])
                }
            })),
        }
    }

    pub fn with_fd_step(mut self, step_scale: f64) -> Self {
        if let DerivativeMode::FiniteDifference { step_scale: s } = &mut self.mode {
            *s = step_scale;
        }
        self
    }

    pub fn arity(&self) -> usize {
        self.arity
    }

    pub fn max_order(&self) -> usize {
        self.max_order
    }

    pub fn domain(&self) -> &Domain {
        &self.domain
    }

    pub fn mode(&self) -> &DerivativeMode {
        &self.mode
    }

    fn check_point(&self, x: &[f64]) -> Result<()> {
        if x.len() != self.arity {
            return Err(Error::ArityMismatch {
                expected: self.arity,
                got: x.len(),
            });
        }
        if !self.domain.contains(x) {
            return Err(Error::OutsideDomain { point: x.to_vec() });
        }
        Ok(())
    }

    pub fn eval(&self, x: &[f64]) -> Result<f64> {
        self.check_point(x)?;
        Ok((self.eval)(x))
    }

    /// Partial derivative `d^alpha f(x)`. The zero multi-index is defined to
    /// be the function value itself.
    pub fn derivative(&self, x: &[f64], alpha: &MultiIndex) -> Result<f64> {
        self.check_point(x)?;
        if alpha.arity() != self.arity {
            return Err(Error::ArityMismatch {
                expected: self.arity,
                got: alpha.arity(),
            });
        }
        let order = alpha.order();
        if order == 0 {
            return Ok((self.eval)(x));
        }
        if order > self.max_order {
            return Err(Error::OrderTooHigh {
                requested: order,
                max: self.max_order,
            });
        }
        match &self.mode {
            DerivativeMode::Analytic(d) => Ok(d(x, alpha)),
            DerivativeMode::FiniteDifference { step_scale } => {
                Ok(fd_derivative(&self.eval, x, alpha, *step_scale))
            }
        }
    }

    /// Convenience for univariate fields.
    pub fn eval_uni(&self, x: f64) -> Result<f64> {
        self.eval(&[x])
    }

    /// `f^(k)(x)` for univariate fields.
    pub fn derivative_uni(&self, k: usize, x: f64) -> Result<f64> {
        self.derivative(&[x], &MultiIndex::new(vec![k]))
    }

    /// For analytic fields, checks at the given points that the oracle with
    /// the zero multi-index reproduces the function value.
    pub fn check_zero_index_consistency(&self, points: &[Vec<f64>], tol: f64) -> Result<()> {
        if let DerivativeMode::Analytic(d) = &self.mode {
            let zero = MultiIndex::zero(self.arity);
            for x in points {
                self.check_point(x)?;
                let by_oracle = d(x, &zero);
                let by_eval = (self.eval)(x);
                if (by_oracle - by_eval).abs() > tol * (1.0 + by_eval.abs()) {
                    return Err(Error::InvalidArgument(format!(
                        "zero-index oracle disagrees with eval at {x:?}: {by_oracle} vs {by_eval}"
                    )));
                }
            }
        }
        Ok(())
    }
}

impl fmt::Debug for ScalarField {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("ScalarField")
            .field("arity", &self.arity)
            .field("max_order", &self.max_order)
            .field("domain", &self.domain)
            .finish_non_exhaustive()
    }
}

/// Nested central differences for `d^alpha f(x)`.
///
/// Each coordinate `q` with count `k = i_q` contributes the k-th central
/// stencil `sum_j (-1)^j C(k,j) f(.. x_q + (k/2 - j) h_q ..) / h_q^k`; the
/// stencils combine as a tensor product.
///
/// TODO: Richardson extrapolation over the step would sharpen orders >= 2,
/// where the fixed step trades truncation against cancellation.
fn fd_derivative(eval: &EvalFn, x: &[f64], alpha: &MultiIndex, step_scale: f64) -> f64 {
    #[derive(Clone)]
    struct Axis {
        coord: usize,
        k: usize,
        h: f64,
    }
    let axes: Vec<Axis> = alpha
        .entries()
        .iter()
        .enumerate()
        .filter(|&(_, &k)| k > 0)
        .map(|(q, &k)| Axis {
            coord: q,
            k,
            h: step_scale * (1.0 + x[q].abs()),
        })
        .collect();

    fn binom(k: usize, j: usize) -> f64 {
        factorial(k) / (factorial(j) * factorial(k - j))
    }

    fn recurse(eval: &EvalFn, point: &mut Vec<f64>, axes: &[Axis], depth: usize) -> f64 {
        if depth == axes.len() {
            return eval(point);
        }
        let ax = &axes[depth];
        let mut acc = 0.0;
        for j in 0..=ax.k {
            let sign = if j % 2 == 0 { 1.0 } else { -1.0 };
            let offset = (ax.k as f64 / 2.0 - j as f64) * ax.h;
            let saved = point[ax.coord];
            point[ax.coord] = saved + offset;
            acc += sign * binom(ax.k, j) * recurse(eval, point, axes, depth + 1);
            point[ax.coord] = saved;
        }
        acc / ax.h.powi(ax.k as i32)
    }

    let mut point = x.to_vec();
    recurse(eval, &mut point, &axes, 0)
}

/// A function from `R^p` to `R^{p'}` given by its component scalar fields.
#[derive(Clone, Debug)]
pub struct VectorField {
    components: Vec<ScalarField>,
}

impl VectorField {
    /// All components must share the input arity and max order.
    pub fn new(components: Vec<ScalarField>) -> Result<Self> {
        if components.is_empty() {
            return Err(Error::InvalidArgument(
                "vector field needs at least one component".into(),
            ));
        }
        let arity = components[0].arity();
        let order = components[0].max_order();
        for c in &components {
            if c.arity() != arity {
                return Err(Error::ArityMismatch {
                    expected: arity,
                    got: c.arity(),
                });
            }
            if c.max_order() != order {
                return Err(Error::InvalidArgument(format!(
                    "components disagree on max order: {} vs {}",
                    order,
                    c.max_order()
                )));
            }
        }
        Ok(VectorField { components })
    }

    pub fn input_arity(&self) -> usize {
        self.components[0].arity()
    }

    pub fn output_arity(&self) -> usize {
        self.components.len()
    }

    pub fn max_order(&self) -> usize {
        self.components[0].max_order()
    }

    pub fn components(&self) -> &[ScalarField] {
        &self.components
    }

    pub fn eval(&self, x: &[f64]) -> Result<Vec<f64>> {
        self.components.iter().map(|c| c.eval(x)).collect()
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    #[test]
    fn multi_index_order_and_weight() {
        let alpha = MultiIndex::new(vec![1, 2, 0]);
        assert_eq!(alpha.order(), 3);
        assert_relative_eq!(alpha.multinomial(), 3.0); // 3!/(1!2!0!)
        assert_relative_eq!(alpha.monomial(&[2.0, 3.0, 5.0]), 2.0 * 9.0);
    }

    #[test]
    fn enumeration_is_lexicographic_and_complete() {
        let idx = MultiIndex::enumerate(2, 2);
        let entries: Vec<&[usize]> = idx.iter().map(|a| a.entries()).collect();
        assert_eq!(entries, vec![&[0, 2][..], &[1, 1], &[2, 0]]);
        // count = C(n + p - 1, p - 1)
        assert_eq!(MultiIndex::enumerate(3, 3).len(), 10);
        for a in MultiIndex::enumerate(3, 3) {
            assert_eq!(a.order(), 3);
        }
    }

    #[test]
    fn interval_domain_checks() {
        let d = Domain::interval(-1.0, 1.0).unwrap();
        assert!(d.contains(&[0.5]));
        assert!(d.contains(&[1.0]));
        assert!(!d.contains(&[1.5]));
        assert!(Domain::interval(2.0, 1.0).is_err());
        assert!(d.contains_segment(&[-1.0], &[1.0]).is_ok());
        assert!(d.contains_segment(&[0.0], &[2.0]).is_err());
    }

    #[test]
    fn convex_domain_segment_sampling() {
        // Open unit disc.
        let d = Domain::convex(
            |x| x[0] * x[0] + x[1] * x[1] < 1.0,
            vec![(-1.0, 1.0), (-1.0, 1.0)],
        );
        assert!(d.contains(&[0.5, 0.5]));
        assert!(d.contains_segment(&[-0.5, 0.0], &[0.5, 0.0]).is_ok());
        assert!(d.contains_segment(&[0.0, 0.0], &[2.0, 0.0]).is_err());
        assert!(d.spot_check_convexity(&[vec![0.0, 0.0], vec![0.5, 0.5], vec![-0.3, 0.4]]));
    }

    #[test]
    fn zero_index_is_eval() {
        let f = ScalarField::univariate(
            4,
            Domain::real_line(),
            |x| x * x,
            |k, x| match k {
                1 => 2.0 * x,
                2 => 2.0,
                _ => 0.0,
            },
        );
        let v = f
            .derivative(&[3.0], &MultiIndex::zero(1))
            .unwrap();
        assert_relative_eq!(v, 9.0);
        f.check_zero_index_consistency(&[vec![0.0], vec![2.5]], 1e-12)
            .unwrap();
    }

    #[test]
    fn order_and_arity_violations_are_rejected() {
        let f = ScalarField::univariate(2, Domain::real_line(), |x| x, |_, _| 1.0);
        assert!(matches!(
            f.derivative_uni(3, 0.0),
            Err(Error::OrderTooHigh { requested: 3, max: 2 })
        ));
        assert!(matches!(
            f.eval(&[1.0, 2.0]),
            Err(Error::ArityMismatch { expected: 1, got: 2 })
        ));
    }

    #[test]
    fn finite_difference_matches_analytic() {
        let f = ScalarField::finite_difference(2, 2, Domain::full_space(2), |x| {
            (x[0] + 2.0 * x[1]).exp()
        });
        let point = [0.3, -0.2];
        // d2/dx dy exp(x + 2y) = 2 exp(x + 2y)
        let got = f
            .derivative(&point, &MultiIndex::new(vec![1, 1]))
            .unwrap();
        let exact = 2.0 * (point[0] + 2.0 * point[1]).exp();
        assert_relative_eq!(got, exact, max_relative = 1e-5);
        // First derivative is accurate at the default step.
        let g1 = f.derivative(&point, &MultiIndex::new(vec![1, 0])).unwrap();
        assert_relative_eq!(g1, exact / 2.0, max_relative = 1e-8);
    }

    #[test]
    fn vector_field_requires_consistent_components() {
        let a = ScalarField::univariate(2, Domain::real_line(), |x| x, |_, _| 1.0);
        let b = ScalarField::analytic(2, 2, Domain::full_space(2), |x| x[0], |_, _| 1.0);
        assert!(VectorField::new(vec![a.clone(), b]).is_err());
        assert!(VectorField::new(vec![a.clone(), a]).is_ok());
    }
}

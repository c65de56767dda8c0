//! Statistical applications with the intermediate random point made
//! explicit: the score expansion of a maximum likelihood estimator around
//! the true value, a delta-method Monte Carlo run, and the two-variable
//! probe on finite spaces.

use std::sync::Arc;

use statrs::distribution::{ContinuousCDF, Normal};

use crate::error::{Error, Result};
use crate::field::{Domain, ScalarField};
use crate::probability::{
    derive_seed, is_measurable_wrt, rng_for, sigma_generated_by, DistributionSpec,
    RandomVariable,
};
use crate::selector::{solve_selector_uni, SelectionPolicy};
use crate::value::Value;

type ThetaFn = Arc<dyn Fn(f64, &[f64]) -> f64 + Send + Sync>;
type SamplerFn = Arc<dyn Fn(f64, usize, u64) -> Vec<f64> + Send + Sync>;

/// Tolerance of the scalar maximizer, absolute in the parameter.
pub const MAXIMIZER_TOL: f64 = 1e-10;

/// A one-parameter model: log-likelihood, score and curvature oracles in the
/// parameter, the true value, and a seeded sampler.
#[derive(Clone)]
pub struct ParametricModel {
    name: String,
    log_likelihood: ThetaFn,
    score: ThetaFn,
    second_derivative: ThetaFn,
    param_lo: f64,
    param_hi: f64,
    theta0: f64,
    sampler: SamplerFn,
}

impl ParametricModel {
    pub fn new(
        name: impl Into<String>,
        log_likelihood: impl Fn(f64, &[f64]) -> f64 + Send + Sync + 'static,
        score: impl Fn(f64, &[f64]) -> f64 + Send + Sync + 'static,
        second_derivative: impl Fn(f64, &[f64]) -> f64 + Send + Sync + 'static,
        param_domain: (f64, f64),
        theta0: f64,
        sampler: impl Fn(f64, usize, u64) -> Vec<f64> + Send + Sync + 'static,
    ) -> Self {
        ParametricModel {
            name: name.into(),
            log_likelihood: Arc::new(log_likelihood),
            score: Arc::new(score),
            second_derivative: Arc::new(second_derivative),
            param_lo: param_domain.0,
            param_hi: param_domain.1,
            theta0,
            sampler: Arc::new(sampler),
        }
    }

    pub fn name(&self) -> &str {
        &self.name
    }

    pub fn theta0(&self) -> f64 {
        self.theta0
    }

    pub fn param_domain(&self) -> (f64, f64) {
        (self.param_lo, self.param_hi)
    }

    pub fn log_likelihood(&self, theta: f64, data: &[f64]) -> f64 {
        (self.log_likelihood)(theta, data)
    }

    pub fn score(&self, theta: f64, data: &[f64]) -> f64 {
        (self.score)(theta, data)
    }

    pub fn second_derivative(&self, theta: f64, data: &[f64]) -> f64 {
        (self.second_derivative)(theta, data)
    }

    pub fn sample(&self, theta: f64, n: usize, seed: u64) -> Vec<f64> {
        (self.sampler)(theta, n, seed)
    }

    /// The score as a univariate field in the parameter, with the curvature
    /// as its first derivative. This is the function handed to the selector.
    pub fn score_field(&self, data: &[f64]) -> ScalarField {
        let score = self.score.clone();
        let d2 = self.second_derivative.clone();
        let owned: Arc<[f64]> = data.into();
        let owned2 = owned.clone();
        ScalarField::univariate(
            1,
            Domain::Interval {
                lo: self.param_lo,
                hi: self.param_hi,
            },
            move |t| score(t, &owned),
            move |_, t| d2(t, &owned2),
        )
    }

    /// Checks that the score oracle matches central finite differences of
    /// the log-likelihood on a grid between the domain edges.
    pub fn check_score_consistency(&self, data: &[f64], rel_tol: f64) -> Result<()> {
        let (lo, hi) = self.grid_window();
        let step = 1e-6 * (hi - lo).min(1.0);
        for k in 1..10 {
            let t = lo + k as f64 * (hi - lo) / 10.0;
            let fd = (self.log_likelihood(t + step, data) - self.log_likelihood(t - step, data))
                / (2.0 * step);
            let s = self.score(t, data);
            if (fd - s).abs() > rel_tol * (1.0 + s.abs()) {
                return Err(Error::InvalidArgument(format!(
                    "score oracle disagrees with log-likelihood slope at theta = {t}: {s} vs {fd}"
                )));
            }
        }
        Ok(())
    }

    fn grid_window(&self) -> (f64, f64) {
        let lo = if self.param_lo.is_finite() {
            self.param_lo + 1e-3
        } else {
            self.theta0 - 5.0
        };
        let hi = if self.param_hi.is_finite() {
            self.param_hi - 1e-3
        } else {
            self.theta0 + 5.0
        };
        (lo, hi)
    }
}

/// Bernoulli trials with success probability `theta0`.
pub fn bernoulli_model(theta0: f64) -> ParametricModel {
    ParametricModel::new(
        format!("bernoulli:{theta0}"),
        |p, data| {
            let n = data.len() as f64;
            let s: f64 = data.iter().sum();
            s * p.ln() + (n - s) * (1.0 - p).ln()
        },
        |p, data| {
            let n = data.len() as f64;
            let s: f64 = data.iter().sum();
            s / p - (n - s) / (1.0 - p)
        },
        |p, data| {
            let n = data.len() as f64;
            let s: f64 = data.iter().sum();
            -s / (p * p) - (n - s) / ((1.0 - p) * (1.0 - p))
        },
        (1e-12, 1.0 - 1e-12),
        theta0,
        |p, n, seed| {
            let mut rng = rng_for(seed);
            let dist = DistributionSpec::Bernoulli { p };
            (0..n).map(|_| dist.sample(&mut rng)).collect()
        },
    )
}

/// Normal observations with unknown mean and unit variance.
pub fn normal_mean_model(theta0: f64) -> ParametricModel {
    ParametricModel::new(
        format!("normal-mean:{theta0}"),
        |m, data| -0.5 * data.iter().map(|x| (x - m) * (x - m)).sum::<f64>(),
        |m, data| data.iter().map(|x| x - m).sum::<f64>(),
        |_, data| -(data.len() as f64),
        (f64::NEG_INFINITY, f64::INFINITY),
        theta0,
        |m, n, seed| {
            let mut rng = rng_for(seed);
            let dist = DistributionSpec::Normal { mean: m, sd: 1.0 };
            (0..n).map(|_| dist.sample(&mut rng)).collect()
        },
    )
}

/// Exponential observations with unknown rate.
pub fn exponential_rate_model(theta0: f64) -> ParametricModel {
    ParametricModel::new(
        format!("exponential-rate:{theta0}"),
        |r, data| data.len() as f64 * r.ln() - r * data.iter().sum::<f64>(),
        |r, data| data.len() as f64 / r - data.iter().sum::<f64>(),
        |r, data| -(data.len() as f64) / (r * r),
        (1e-12, f64::INFINITY),
        theta0,
        |r, n, seed| {
            let mut rng = rng_for(seed);
            let dist = DistributionSpec::Exponential { rate: r };
            (0..n).map(|_| dist.sample(&mut rng)).collect()
        },
    )
}

/// Parses a model spec string: `bernoulli:0.3`, `normal-mean:0`,
/// `exponential-rate:2`.
pub fn parse_model(spec: &str) -> Result<ParametricModel> {
    let reject = || Error::InvalidArgument(format!("unknown model spec '{spec}'"));
    let (name, arg) = spec.split_once(':').ok_or_else(reject)?;
    let value: f64 = arg.trim().parse().map_err(|_| reject())?;
    match name {
        "bernoulli" if value > 0.0 && value < 1.0 => Ok(bernoulli_model(value)),
        "normal-mean" if value.is_finite() => Ok(normal_mean_model(value)),
        "exponential-rate" if value > 0.0 => Ok(exponential_rate_model(value)),
        _ => Err(reject()),
    }
}

/// Where the scalar maximizer landed.
#[derive(Debug, Clone, Copy)]
pub struct MaximizeOutcome {
    pub theta_hat: f64,
    /// True when the maximizer stopped at the edge of the search window.
    pub boundary: bool,
}

/// Maximizes the log-likelihood in the parameter: derivative-sign bisection
/// on the score when a sign change brackets the root, golden-section search
/// on the log-likelihood otherwise. Tolerance `MAXIMIZER_TOL` in theta.
pub fn maximize_likelihood(model: &ParametricModel, data: &[f64]) -> Result<MaximizeOutcome> {
    let (mut lo, mut hi) = model.param_domain();
    // Clip infinite edges to an expanding window around theta0; the window
    // never leaves the parameter domain.
    if !lo.is_finite() || !hi.is_finite() {
        let mut half = 1.0;
        loop {
            let wlo = (model.theta0() - half).max(lo);
            let whi = (model.theta0() + half).min(hi);
            let s_lo = model.score(wlo, data);
            let s_hi = model.score(whi, data);
            if s_lo * s_hi <= 0.0 || half > 1e9 {
                lo = wlo;
                hi = whi;
                break;
            }
            half *= 2.0;
        }
    }
    let s_lo = model.score(lo, data);
    let s_hi = model.score(hi, data);

    if s_lo == 0.0 {
        return Ok(MaximizeOutcome { theta_hat: lo, boundary: true });
    }
    if s_hi == 0.0 {
        return Ok(MaximizeOutcome { theta_hat: hi, boundary: true });
    }

    if s_lo * s_hi < 0.0 {
        // Bisection on the score's sign change.
        let (mut a, mut b, mut s_a) = (lo, hi, s_lo);
        while b - a > MAXIMIZER_TOL {
            let mid = 0.5 * (a + b);
            let s_mid = model.score(mid, data);
            if s_mid == 0.0 {
                return Ok(MaximizeOutcome { theta_hat: mid, boundary: false });
            }
            if s_a * s_mid < 0.0 {
                b = mid;
            } else {
                a = mid;
                s_a = s_mid;
            }
        }
        return Ok(MaximizeOutcome {
            theta_hat: 0.5 * (a + b),
            boundary: false,
        });
    }

    // No interior stationary point visible: golden-section on the
    // log-likelihood itself.
    let inv_phi = (5.0_f64.sqrt() - 1.0) / 2.0;
    let (mut a, mut b) = (lo, hi);
    let mut c = b - inv_phi * (b - a);
    let mut d = a + inv_phi * (b - a);
    let mut fc = model.log_likelihood(c, data);
    let mut fd = model.log_likelihood(d, data);
    while b - a > MAXIMIZER_TOL {
        if fc > fd {
            b = d;
            d = c;
            fd = fc;
            c = b - inv_phi * (b - a);
            fc = model.log_likelihood(c, data);
        } else {
            a = c;
            c = d;
            fc = fd;
            d = a + inv_phi * (b - a);
            fd = model.log_likelihood(d, data);
        }
    }
    let theta_hat = 0.5 * (a + b);
    let boundary = (theta_hat - lo).abs() <= 10.0 * MAXIMIZER_TOL
        || (hi - theta_hat).abs() <= 10.0 * MAXIMIZER_TOL;
    Ok(MaximizeOutcome { theta_hat, boundary })
}

/// One solved score expansion: the estimator, the intermediate parameter
/// value, the equation defect there, and the interval endpoints.
#[derive(Debug, Clone, Copy)]
pub struct ScoreExpansionRecord {
    pub theta_hat: f64,
    pub theta_star: f64,
    pub residual: f64,
    /// `(theta0, theta_hat)`, the (unordered) endpoints of the interval
    /// containing `theta_star`.
    pub endpoints: (f64, f64),
    /// Segment parameter of the selected point in the bracket.
    pub theta: f64,
    /// Score at the estimator, the scale of the expansion identity.
    pub score_at_hat: f64,
}

impl ScoreExpansionRecord {
    /// True when `theta_star` lies in the closed interval between the
    /// endpoints.
    pub fn is_between(&self) -> bool {
        let (lo, hi) = ordered(self.endpoints);
        lo <= self.theta_star && self.theta_star <= hi
    }

    /// True when `theta_star` is strictly inside the open interval.
    pub fn is_strictly_between(&self) -> bool {
        let (lo, hi) = ordered(self.endpoints);
        lo < self.theta_star && self.theta_star < hi
    }
}

fn ordered(pair: (f64, f64)) -> (f64, f64) {
    if pair.0 <= pair.1 {
        pair
    } else {
        (pair.1, pair.0)
    }
}

/// Solves the score expansion
/// `score(theta_hat) = score(theta0) + (theta_hat - theta0) d2(theta_star)`
/// for `theta_star` by handing the score function to the selector with
/// order 1 in the parameter.
pub fn mle_score_expansion(
    model: &ParametricModel,
    data: &[f64],
    theta_hat: f64,
    policy: &SelectionPolicy,
) -> Result<ScoreExpansionRecord> {
    let theta0 = model.theta0();
    let field = model.score_field(data);
    let res = solve_selector_uni(&field, theta0, theta_hat - theta0, 1, policy)?;
    Ok(ScoreExpansionRecord {
        theta_hat,
        theta_star: theta0 + res.xi.as_scalar()?,
        residual: res.residual,
        endpoints: (theta0, theta_hat),
        theta: res.theta,
        score_at_hat: model.score(theta_hat, data),
    })
}

/// One Monte Carlo replicate: the expansion record plus the boundary flag
/// from the maximizer.
#[derive(Debug, Clone, Copy)]
pub struct MleReplicate {
    pub record: ScoreExpansionRecord,
    pub boundary: bool,
}

/// Replicated sampling, maximization and score expansion under the true
/// parameter.
#[derive(Debug, Clone)]
pub struct MleMonteCarlo {
    pub sample_size: usize,
    pub replicates: Vec<MleReplicate>,
    /// `sqrt(n) (theta_hat - theta0)`, one per replicate.
    pub scaled_deviations: Vec<f64>,
    /// `theta_star` per replicate: the intermediate point as a random
    /// variable over replicates.
    pub theta_stars: Vec<f64>,
    pub boundary_count: usize,
    pub max_abs_residual: f64,
    pub strictly_between_fraction: f64,
}

/// Runs `reps` independent replicates: sample data under `theta0`, maximize
/// the likelihood, solve the score expansion. Per-replicate seeds derive
/// deterministically from the master seed, so parallel or sequential
/// execution produce identical output.
pub fn mle_monte_carlo(
    model: &ParametricModel,
    n: usize,
    reps: usize,
    seed: u64,
    policy: &SelectionPolicy,
) -> Result<MleMonteCarlo> {
    if n == 0 || reps == 0 {
        return Err(Error::InvalidArgument(
            "sample size and replicate count must be positive".into(),
        ));
    }
    let theta0 = model.theta0();
    let mut replicates = Vec::with_capacity(reps);
    let mut scaled = Vec::with_capacity(reps);
    let mut stars = Vec::with_capacity(reps);
    let mut boundary_count = 0usize;
    let mut max_abs_residual: f64 = 0.0;
    let mut strict = 0usize;
    for rep in 0..reps {
        let data = model.sample(theta0, n, derive_seed(seed, rep as u64));
        let maximized = maximize_likelihood(model, &data)?;
        let record = mle_score_expansion(model, &data, maximized.theta_hat, policy)?;
        if maximized.boundary {
            boundary_count += 1;
        }
        if record.is_strictly_between() {
            strict += 1;
        }
        max_abs_residual = max_abs_residual.max(record.residual.abs());
        scaled.push((n as f64).sqrt() * (record.theta_hat - theta0));
        stars.push(record.theta_star);
        replicates.push(MleReplicate {
            record,
            boundary: maximized.boundary,
        });
    }
    Ok(MleMonteCarlo {
        sample_size: n,
        replicates,
        scaled_deviations: scaled,
        theta_stars: stars,
        boundary_count,
        max_abs_residual,
        strictly_between_fraction: strict as f64 / reps as f64,
    })
}

/// One delta-method replicate.
#[derive(Debug, Clone, Copy)]
pub struct DeltaReplicate {
    /// Sample mean of the replicate.
    pub mean: f64,
    /// Absolute intermediate point with `g(mean) = g(mu) + g'(xi)(mean - mu)`.
    pub xi: f64,
    pub theta: f64,
    pub residual: f64,
    pub standardized: f64,
}

/// Replicated delta-method run with the intermediate point traced.
#[derive(Debug, Clone)]
pub struct DeltaReport {
    pub n: usize,
    pub reps: usize,
    pub replicates: Vec<DeltaReplicate>,
    /// `sqrt(n) (g(mean) - g(mu)) / (sd |g'(mu)|)`, one per replicate.
    pub standardized: Vec<f64>,
    /// Intermediate points, one per replicate.
    pub xi_trace: Vec<f64>,
    pub ks_distance: f64,
    pub max_xi_deviation: f64,
}

/// Per replicate: draw `n` values, form the mean, solve
/// `g(mean) = g(mu) + g'(xi)(mean - mu)` for the intermediate point, and
/// standardize with the true `sd` and `g'(mu)`. Reports the
/// Kolmogorov-Smirnov distance of the standardized sample to the standard
/// normal and the largest `|xi - mu|`.
pub fn delta_method_experiment(
    g: &ScalarField,
    mu: f64,
    dist: &DistributionSpec,
    n: usize,
    reps: usize,
    seed: u64,
    policy: &SelectionPolicy,
) -> Result<DeltaReport> {
    if n == 0 || reps == 0 {
        return Err(Error::InvalidArgument(
            "sample size and replicate count must be positive".into(),
        ));
    }
    let slope = g.derivative_uni(1, mu)?;
    if slope == 0.0 {
        return Err(Error::ZeroDerivativeAtMean { mu });
    }
    let sd = dist.sd();
    let g_mu = g.eval_uni(mu)?;
    let scale = sd * slope.abs();
    let sqrt_n = (n as f64).sqrt();

    let mut replicates = Vec::with_capacity(reps);
    let mut standardized = Vec::with_capacity(reps);
    let mut xi_trace = Vec::with_capacity(reps);
    let mut max_dev: f64 = 0.0;
    for rep in 0..reps {
        let mut rng = rng_for(derive_seed(seed, rep as u64));
        let mut acc = 0.0;
        for _ in 0..n {
            acc += dist.sample(&mut rng);
        }
        let mean = acc / n as f64;
        let res = solve_selector_uni(g, mu, mean - mu, 1, policy)?;
        let xi = mu + res.xi.as_scalar()?;
        let z = sqrt_n * (g.eval_uni(mean)? - g_mu) / scale;
        max_dev = max_dev.max((xi - mu).abs());
        standardized.push(z);
        xi_trace.push(xi);
        replicates.push(DeltaReplicate {
            mean,
            xi,
            theta: res.theta,
            residual: res.residual,
            standardized: z,
        });
    }
    let ks_distance = ks_distance_to_std_normal(&standardized);
    Ok(DeltaReport {
        n,
        reps,
        replicates,
        standardized,
        xi_trace,
        ks_distance,
        max_xi_deviation: max_dev,
    })
}

/// Kolmogorov-Smirnov distance of a sample to the standard normal.
pub fn ks_distance_to_std_normal(sample: &[f64]) -> f64 {
    let normal = Normal::new(0.0, 1.0).unwrap();
    let mut sorted = sample.to_vec();
    sorted.sort_by(|a, b| a.partial_cmp(b).unwrap());
    let n = sorted.len() as f64;
    let mut d: f64 = 0.0;
    for (i, z) in sorted.iter().enumerate() {
        let cdf = normal.cdf(*z);
        d = d.max(cdf - i as f64 / n);
        d = d.max((i + 1) as f64 / n - cdf);
    }
    d
}

/// One outcome of the two-variable probe.
#[derive(Debug, Clone)]
pub struct TwoRvOutcome {
    pub id: String,
    pub x: f64,
    pub y: f64,
    pub xi: f64,
    pub theta: f64,
    pub residual: f64,
}

/// Result of the two-variable probe: the selected points as a variable on
/// the same space, and the exact measurability verdict against the joint
/// level sets of `(X, Y)`.
#[derive(Debug, Clone)]
pub struct TwoRvReport {
    pub xi: RandomVariable,
    pub measurable: bool,
    pub outcomes: Vec<TwoRvOutcome>,
}

/// Per-outcome solve of `f(X) = f(Y) + f'(xi)(X - Y)` with `xi` between
/// `Y(omega)` and `X(omega)`; ties (`X = Y`) return the common value. The
/// selection consumes only the pair `(X(omega), Y(omega))`, so the result is
/// measurable with respect to the sigma-algebra generated by the pair; the
/// report states exactly that check, performed exhaustively.
pub fn two_rv_selector(
    f: &ScalarField,
    x: &RandomVariable,
    y: &RandomVariable,
    policy: &SelectionPolicy,
) -> Result<TwoRvReport> {
    if !x.same_space(y) {
        return Err(Error::MismatchedSpaces);
    }
    let space = x.space();
    let mut values = Vec::with_capacity(space.len());
    let mut outcomes = Vec::with_capacity(space.len());
    let mut failures: Vec<(String, Box<Error>)> = Vec::new();
    for (idx, id) in space.outcomes().iter().enumerate() {
        let xv = x.value_at(idx).as_scalar()?;
        let yv = y.value_at(idx).as_scalar()?;
        if xv == yv {
            values.push(Value::Scalar(xv));
            outcomes.push(TwoRvOutcome {
                id: id.clone(),
                x: xv,
                y: yv,
                xi: xv,
                theta: 0.0,
                residual: 0.0,
            });
            continue;
        }
        match solve_selector_uni(f, yv, xv - yv, 1, policy) {
            Ok(res) => {
                let xi = yv + res.xi.as_scalar()?;
                values.push(Value::Scalar(xi));
                outcomes.push(TwoRvOutcome {
                    id: id.clone(),
                    x: xv,
                    y: yv,
                    xi,
                    theta: res.theta,
                    residual: res.residual,
                });
            }
            Err(e) => failures.push((id.clone(), Box::new(e))),
        }
    }
    if !failures.is_empty() {
        return Err(Error::PerOutcome {
            total: space.len(),
            failures,
        });
    }
    let xi = RandomVariable::on_space(x.space_arc(), values)?;
    let joint = x.joint(y)?;
    let measurable = is_measurable_wrt(&xi, &sigma_generated_by(&joint));
    Ok(TwoRvReport {
        xi,
        measurable,
        outcomes,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::functions;
    use crate::probability::FiniteProbabilitySpace;
    use crate::selector::apply_over_sample;
    use approx::assert_abs_diff_eq;

    #[test]
    fn score_oracles_match_loglik_slope() {
        for model in [
            bernoulli_model(0.3),
            normal_mean_model(0.0),
            exponential_rate_model(2.0),
        ] {
            let data = model.sample(model.theta0(), 50, 99);
            model.check_score_consistency(&data, 1e-5).unwrap();
        }
    }

    #[test]
    fn normal_mean_expansion_selects_the_upper_endpoint() {
        // Quadratic log-likelihood: the curvature is constant, every point
        // solves the equation, and the sup policy returns max(hat, theta0).
        let model = normal_mean_model(0.0);
        let data = model.sample(0.0, 40, 7);
        let maximized = maximize_likelihood(&model, &data).unwrap();
        let mean: f64 = data.iter().sum::<f64>() / data.len() as f64;
        assert_abs_diff_eq!(maximized.theta_hat, mean, epsilon = 1e-9);
        let record =
            mle_score_expansion(&model, &data, maximized.theta_hat, &SelectionPolicy::sup())
                .unwrap();
        let expected = maximized.theta_hat.max(0.0);
        assert_abs_diff_eq!(record.theta_star, expected, epsilon = 1e-9);
        assert!(record.is_between());
    }

    #[test]
    fn degenerate_estimator_returns_theta0() {
        let model = bernoulli_model(0.3);
        let data = model.sample(0.3, 100, 3);
        let record =
            mle_score_expansion(&model, &data, 0.3, &SelectionPolicy::sup()).unwrap();
        assert_eq!(record.theta_star, 0.3);
        assert_eq!(record.residual, 0.0);
    }

    #[test]
    fn bernoulli_expansion_verified_by_dense_scan() {
        // Oracle: brute-force scan of the curvature equation over the
        // bracket at 2 * 10^5 nodes, independent of the selector.
        let model = bernoulli_model(0.3);
        let data = model.sample(0.3, 100, 11);
        let maximized = maximize_likelihood(&model, &data).unwrap();
        let record =
            mle_score_expansion(&model, &data, maximized.theta_hat, &SelectionPolicy::sup())
                .unwrap();
        assert!(record.is_between());
        assert!(record.residual.abs() <= 1e-9 * (1.0 + model.score(record.theta_hat, &data).abs()));

        let theta0 = 0.3;
        let x = maximized.theta_hat - theta0;
        let pi = model.score(maximized.theta_hat, &data) - model.score(theta0, &data);
        let m = 200_000;
        let mut best = (f64::INFINITY, f64::NAN);
        for i in 0..=m {
            let s = x * i as f64 / m as f64;
            let r = (model.second_derivative(theta0 + s, &data) * x - pi).abs();
            if r < best.0 {
                best = (r, theta0 + s);
            }
        }
        assert_abs_diff_eq!(record.theta_star, best.1, epsilon = 1e-4);
    }

    #[test]
    fn single_replicate_matches_direct_expansion() {
        let model = bernoulli_model(0.3);
        let policy = SelectionPolicy::sup();
        let mc = mle_monte_carlo(&model, 100, 1, 5, &policy).unwrap();
        assert_eq!(mc.replicates.len(), 1);
        let data = model.sample(0.3, 100, derive_seed(5, 0));
        let maximized = maximize_likelihood(&model, &data).unwrap();
        let direct = mle_score_expansion(&model, &data, maximized.theta_hat, &policy).unwrap();
        let got = mc.replicates[0].record;
        assert_eq!(got.theta_star.to_bits(), direct.theta_star.to_bits());
        assert_eq!(got.theta_hat.to_bits(), direct.theta_hat.to_bits());
    }

    #[test]
    fn normal_mean_monte_carlo_is_standard_normal_at_root_n() {
        // theta_hat is the sample mean, so sqrt(n)(theta_hat - theta0) is
        // exactly N(0, 1); the KS distance should sit well below the 1%
        // critical value at this replicate count.
        let model = normal_mean_model(0.0);
        let mc = mle_monte_carlo(&model, 25, 400, 13, &SelectionPolicy::sup()).unwrap();
        let ks = ks_distance_to_std_normal(&mc.scaled_deviations);
        assert!(ks < 1.63 / (400.0_f64).sqrt(), "ks = {ks}");
        assert_eq!(mc.boundary_count, 0);
    }

    #[test]
    fn exponential_rate_monte_carlo_stays_between() {
        // Semi-infinite parameter domain: the maximizer has to grow its
        // search window before bisecting.
        let model = exponential_rate_model(2.0);
        let mc = mle_monte_carlo(&model, 100, 50, 31, &SelectionPolicy::sup()).unwrap();
        assert_eq!(mc.boundary_count, 0);
        for rep in &mc.replicates {
            assert!(rep.record.is_between());
            // theta_hat = 1 / sample mean for this model
            assert!(rep.record.theta_hat > 0.5 && rep.record.theta_hat < 8.0);
            let scale = 1.0 + rep.record.score_at_hat.abs();
            assert!(rep.record.residual.abs() <= 1e-9 * scale);
        }
    }

    #[test]
    fn delta_identity_transform_hits_an_endpoint() {
        let g = functions::poly(&[0.0, 1.0]);
        let dist = DistributionSpec::Uniform { lo: 0.0, hi: 1.0 };
        let report = delta_method_experiment(
            &g,
            0.5,
            &dist,
            100,
            50,
            17,
            &SelectionPolicy::sup(),
        )
        .unwrap();
        for rep in &report.replicates {
            // residual is identically zero for the identity map; sup picks
            // the top of the bracket, so xi is mu or the sample mean.
            let endpoint = rep.mean.max(0.5);
            assert_abs_diff_eq!(rep.xi, endpoint, epsilon = 1e-12);
        }
    }

    #[test]
    fn delta_square_transform_midpoint() {
        // g = x^2: the intermediate point is the exact midpoint.
        let g = functions::poly(&[0.0, 0.0, 1.0]);
        let dist = DistributionSpec::Uniform { lo: 0.0, hi: 1.0 };
        let report =
            delta_method_experiment(&g, 0.5, &dist, 200, 40, 23, &SelectionPolicy::sup())
                .unwrap();
        for rep in &report.replicates {
            assert_abs_diff_eq!(rep.xi, 0.5 * (rep.mean + 0.5), epsilon = 1e-10);
        }
        assert_eq!(report.standardized.len(), 40);
        assert_eq!(report.xi_trace.len(), 40);
    }

    #[test]
    fn delta_rejects_flat_transform() {
        // g = x^2 at mu = 0 has zero slope.
        let g = functions::poly(&[0.0, 0.0, 1.0]);
        let dist = DistributionSpec::Uniform { lo: -0.5, hi: 0.5 };
        let err = delta_method_experiment(&g, 0.0, &dist, 10, 5, 1, &SelectionPolicy::sup())
            .unwrap_err();
        assert!(matches!(err, Error::ZeroDerivativeAtMean { .. }));
    }

    #[test]
    fn ks_distance_of_exact_grid_is_small() {
        // Plug the normal quantiles of a uniform grid back in; the distance
        // collapses to the grid spacing.
        let normal = Normal::new(0.0, 1.0).unwrap();
        let sample: Vec<f64> = (1..=1000)
            .map(|i| normal.inverse_cdf((i as f64 - 0.5) / 1000.0))
            .collect();
        assert!(ks_distance_to_std_normal(&sample) < 1.0 / 1000.0);
    }

    #[test]
    fn two_rv_constant_anchor_reduces_to_plain_selector() {
        let space = FiniteProbabilitySpace::uniform(3).unwrap();
        let x = RandomVariable::scalar(&space, vec![0.5, 1.0, 1.5]).unwrap();
        let y = RandomVariable::scalar(&space, vec![0.0, 0.0, 0.0]).unwrap();
        let f = functions::exp_field();
        let policy = SelectionPolicy::sup();
        let report = two_rv_selector(&f, &x, &y, &policy).unwrap();
        let plain = apply_over_sample(&f, &[0.0], &x, 1, &policy).unwrap();
        for i in 0..3 {
            let two = report.xi.value_at(i).as_scalar().unwrap();
            let one = plain.xi.value_at(i).as_scalar().unwrap();
            assert_eq!(two.to_bits(), one.to_bits());
        }
        assert!(report.measurable);
    }

    #[test]
    fn two_rv_tied_outcome_returns_common_value() {
        let space = FiniteProbabilitySpace::uniform(2).unwrap();
        let x = RandomVariable::scalar(&space, vec![0.7, 1.2]).unwrap();
        let y = RandomVariable::scalar(&space, vec![0.7, 0.4]).unwrap();
        let f = functions::sin_field();
        let report = two_rv_selector(&f, &x, &y, &SelectionPolicy::sup()).unwrap();
        assert_eq!(report.outcomes[0].xi, 0.7);
        assert_eq!(report.outcomes[0].residual, 0.0);
    }

    #[test]
    fn two_rv_quadratic_gives_midpoints() {
        let space = FiniteProbabilitySpace::uniform(4).unwrap();
        let x = RandomVariable::scalar(&space, vec![1.0, -0.5, 2.0, 0.3]).unwrap();
        let y = RandomVariable::scalar(&space, vec![0.2, 0.8, -1.0, 0.3]).unwrap();
        let f = functions::poly(&[0.0, 0.0, 1.0]);
        let report = two_rv_selector(&f, &x, &y, &SelectionPolicy::sup()).unwrap();
        for o in &report.outcomes {
            assert_abs_diff_eq!(o.xi, 0.5 * (o.x + o.y), epsilon = 1e-11);
        }
        assert!(report.measurable);
    }

    #[test]
    fn two_rv_requires_shared_space() {
        let s1 = FiniteProbabilitySpace::uniform(2).unwrap();
        let s2 = FiniteProbabilitySpace::uniform(3).unwrap();
        let x = RandomVariable::scalar(&s1, vec![1.0, 2.0]).unwrap();
        let y = RandomVariable::scalar(&s2, vec![1.0, 2.0, 3.0]).unwrap();
        let f = functions::exp_field();
        assert!(matches!(
            two_rv_selector(&f, &x, &y, &SelectionPolicy::sup()),
            Err(Error::MismatchedSpaces)
        ));
    }

    #[test]
    fn maximizer_flags_boundary_data() {
        // All-zero Bernoulli data drives the estimate to the domain edge.
        let model = bernoulli_model(0.3);
        let data = vec![0.0; 50];
        let out = maximize_likelihood(&model, &data).unwrap();
        assert!(out.boundary);
        assert!(out.theta_hat < 1e-6);
    }

    #[test]
    fn model_spec_parsing() {
        assert!(parse_model("bernoulli:0.3").is_ok());
        assert!(parse_model("normal-mean:0").is_ok());
        assert!(parse_model("exponential-rate:2").is_ok());
        assert!(parse_model("bernoulli:1.5").is_err());
        assert!(parse_model("poisson:3").is_err());
    }
}

//! JSON-string entry points for the demo page.
//!
//! Each function takes a JSON request and returns a JSON response with an
//! `ok` flag; failures come back as `{ok: false, error}` rather than
//! panics, so the page can surface them inline.

use serde::{Deserialize, Serialize};

use xipoint::probability::{empirical_space, sigma_generated_by, SampleStream};
use xipoint::selector::{
    apply_over_sample, build_remainder_equation, solve_selector_uni, SelectionPolicy,
    SelectorVariant,
};
use xipoint::stats::delta_method_experiment;
use xipoint::value::Value;
use xipoint::{functions, is_measurable_wrt, DistributionSpec};

// Bounds that keep a single browser call responsive.
const MAX_CURVE_POINTS: usize = 4096;
const MAX_SAMPLE_COUNT: usize = 20_000;
const MAX_REPS: usize = 5_000;
const MAX_SAMPLE_SIZE: usize = 20_000;

#[derive(Deserialize)]
struct PolicyRequest {
    #[serde(default)]
    variant: Option<String>,
    #[serde(default)]
    scan_points: Option<usize>,
}

fn policy_from(req: &Option<PolicyRequest>) -> Result<SelectionPolicy, String> {
    let mut policy = SelectionPolicy::default();
    if let Some(p) = req {
        if let Some(v) = &p.variant {
            policy.variant = match v.as_str() {
                "sup" => SelectorVariant::Sup,
                "inf" => SelectorVariant::Inf,
                other => return Err(format!("unknown policy variant '{other}'")),
            };
        }
        if let Some(sp) = p.scan_points {
            policy.scan_points = sp.clamp(2, 65_537);
        }
    }
    Ok(policy)
}

#[derive(Serialize)]
struct Failure {
    ok: bool,
    error: String,
}

fn fail(error: impl Into<String>) -> String {
    serde_json::to_string(&Failure {
        ok: false,
        error: error.into(),
    })
    .unwrap()
}

#[derive(Deserialize)]
struct SolveCurveRequest {
    function: String,
    #[serde(default)]
    a: f64,
    x: f64,
    #[serde(default = "one")]
    n: usize,
    #[serde(default)]
    policy: Option<PolicyRequest>,
    #[serde(default = "default_curve_points")]
    curve_points: usize,
}

fn one() -> usize {
    1
}

fn default_curve_points() -> usize {
    513
}

#[derive(Serialize)]
struct SolveCurveResponse {
    ok: bool,
    pi: f64,
    bracket_lo: f64,
    bracket_hi: f64,
    xi: f64,
    theta: f64,
    residual: f64,
    root_count_estimate: usize,
    /// `[s, g(s) - pi]` samples across the bracket.
    curve: Vec<[f64; 2]>,
}

/// Solves one univariate expansion and samples the residual curve the
/// selection happened on.
pub fn solve_curve_json(input: &str) -> String {
    let req: SolveCurveRequest = match serde_json::from_str(input) {
        Ok(r) => r,
        Err(e) => return fail(format!("bad request: {e}")),
    };
    let f = match functions::parse(&req.function) {
        Ok(f) => f,
        Err(e) => return fail(e.to_string()),
    };
    let policy = match policy_from(&req.policy) {
        Ok(p) => p,
        Err(e) => return fail(e),
    };
    let res = match solve_selector_uni(&f, req.a, req.x, req.n, &policy) {
        Ok(r) => r,
        Err(e) => return fail(e.to_string()),
    };
    let mut curve = Vec::new();
    if !res.bracket.degenerate {
        let eq = match build_remainder_equation(&f, &[req.a], &Value::Scalar(req.x), req.n) {
            Ok(eq) => eq,
            Err(e) => return fail(e.to_string()),
        };
        let m = req.curve_points.clamp(2, MAX_CURVE_POINTS);
        for i in 0..m {
            let s = res.bracket.lo
                + (res.bracket.hi - res.bracket.lo) * i as f64 / (m - 1) as f64;
            match eq.residual_at(s) {
                Ok(r) => curve.push([s, r]),
                Err(e) => return fail(e.to_string()),
            }
        }
    }
    let eq_pi = match build_remainder_equation(&f, &[req.a], &Value::Scalar(req.x), req.n) {
        Ok(eq) => eq.pi,
        Err(e) => return fail(e.to_string()),
    };
    serde_json::to_string(&SolveCurveResponse {
        ok: true,
        pi: eq_pi,
        bracket_lo: res.bracket.lo,
        bracket_hi: res.bracket.hi,
        xi: res.xi.as_scalar().unwrap_or(0.0),
        theta: res.theta,
        residual: res.residual,
        root_count_estimate: res.root_count_estimate,
        curve,
    })
    .unwrap()
}

#[derive(Deserialize)]
struct SamplePointsRequest {
    function: String,
    #[serde(default)]
    a: f64,
    #[serde(default = "one")]
    n: usize,
    dist: String,
    count: usize,
    seed: u64,
    #[serde(default)]
    policy: Option<PolicyRequest>,
}

#[derive(Serialize)]
struct SamplePointsResponse {
    ok: bool,
    /// `[X(omega), xi(omega)]` per outcome.
    points: Vec<[f64; 2]>,
    measurable: bool,
    sigma_atoms: usize,
    max_abs_residual: f64,
}

/// Applies the selector outcome by outcome over a seeded empirical space
/// and reports the increment-to-point map plus the exact measurability
/// verdict.
pub fn sample_points_json(input: &str) -> String {
    let req: SamplePointsRequest = match serde_json::from_str(input) {
        Ok(r) => r,
        Err(e) => return fail(format!("bad request: {e}")),
    };
    let f = match functions::parse(&req.function) {
        Ok(f) => f,
        Err(e) => return fail(e.to_string()),
    };
    let policy = match policy_from(&req.policy) {
        Ok(p) => p,
        Err(e) => return fail(e),
    };
    let dist = match DistributionSpec::parse(&req.dist) {
        Ok(d) => d,
        Err(e) => return fail(e.to_string()),
    };
    if req.count == 0 || req.count > MAX_SAMPLE_COUNT {
        return fail(format!("count must be in 1..={MAX_SAMPLE_COUNT}"));
    }
    let stream = SampleStream {
        seed: req.seed,
        dist,
        count: req.count,
    };
    let (_, x) = match empirical_space(&stream) {
        Ok(pair) => pair,
        Err(e) => return fail(e.to_string()),
    };
    let sample = match apply_over_sample(&f, &[req.a], &x, req.n, &policy) {
        Ok(s) => s,
        Err(e) => return fail(e.to_string()),
    };
    let sigma = sigma_generated_by(&x);
    let measurable = is_measurable_wrt(&sample.xi, &sigma);
    let points: Vec<[f64; 2]> = (0..req.count)
        .map(|i| {
            [
                x.value_at(i).as_scalar().unwrap(),
                sample.xi.value_at(i).as_scalar().unwrap(),
            ]
        })
        .collect();
    let max_abs_residual = sample
        .results
        .iter()
        .fold(0.0_f64, |m, r| m.max(r.residual.abs()));
    serde_json::to_string(&SamplePointsResponse {
        ok: true,
        points,
        measurable,
        sigma_atoms: sigma.len(),
        max_abs_residual,
    })
    .unwrap()
}

#[derive(Deserialize)]
struct DeltaRequest {
    function: String,
    dist: String,
    #[serde(default)]
    mu: Option<f64>,
    sample_size: usize,
    reps: usize,
    seed: u64,
}

#[derive(Serialize)]
struct DeltaResponse {
    ok: bool,
    ks_distance: f64,
    max_xi_deviation: f64,
    mu: f64,
    /// Histogram of the standardized statistic as densities.
    bin_edges: Vec<f64>,
    densities: Vec<f64>,
    /// Standard normal density at the bin centers, for the overlay.
    normal_overlay: Vec<f64>,
}

/// Runs the delta-method replication and bins the standardized statistic
/// against the standard normal density.
pub fn delta_histogram_json(input: &str) -> String {
    let req: DeltaRequest = match serde_json::from_str(input) {
        Ok(r) => r,
        Err(e) => return fail(format!("bad request: {e}")),
    };
    let g = match functions::parse(&req.function) {
        Ok(f) => f,
        Err(e) => return fail(e.to_string()),
    };
    let dist = match DistributionSpec::parse(&req.dist) {
        Ok(d) => d,
        Err(e) => return fail(e.to_string()),
    };
    if req.reps == 0 || req.reps > MAX_REPS {
        return fail(format!("reps must be in 1..={MAX_REPS}"));
    }
    if req.sample_size == 0 || req.sample_size > MAX_SAMPLE_SIZE {
        return fail(format!("sample_size must be in 1..={MAX_SAMPLE_SIZE}"));
    }
    let mu = req.mu.unwrap_or_else(|| dist.mean());
    let report = match delta_method_experiment(
        &g,
        mu,
        &dist,
        req.sample_size,
        req.reps,
        req.seed,
        &SelectionPolicy::default(),
    ) {
        Ok(r) => r,
        Err(e) => return fail(e.to_string()),
    };

    let bins = 41usize;
    let (lo, hi) = (-4.0, 4.0);
    let width = (hi - lo) / bins as f64;
    let mut counts = vec![0usize; bins];
    for z in &report.standardized {
        if *z >= lo && *z < hi {
            counts[((z - lo) / width) as usize] += 1;
        }
    }
    let densities: Vec<f64> = counts
        .iter()
        .map(|&c| c as f64 / (report.reps as f64 * width))
        .collect();
    let bin_edges: Vec<f64> = (0..=bins).map(|i| lo + i as f64 * width).collect();
    let normal_overlay: Vec<f64> = (0..bins)
        .map(|i| {
            let center = lo + (i as f64 + 0.5) * width;
            (-0.5 * center * center).exp() / (2.0 * std::f64::consts::PI).sqrt()
        })
        .collect();

    serde_json::to_string(&DeltaResponse {
        ok: true,
        ks_distance: report.ks_distance,
        max_xi_deviation: report.max_xi_deviation,
        mu,
        bin_edges,
        densities,
        normal_overlay,
    })
    .unwrap()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn solve_curve_reports_the_known_midpoint() {
        let out = solve_curve_json(r#"{"function": "poly:0,0,1", "x": 2.0}"#);
        let v: serde_json::Value = serde_json::from_str(&out).unwrap();
        assert_eq!(v["ok"], true);
        assert!((v["xi"].as_f64().unwrap() - 1.0).abs() < 1e-10);
        assert!((v["theta"].as_f64().unwrap() - 0.5).abs() < 1e-10);
        let curve = v["curve"].as_array().unwrap();
        assert!(curve.len() >= 2);
        // curve spans the bracket [0, 2]
        assert_eq!(curve[0][0].as_f64().unwrap(), 0.0);
        assert_eq!(curve[curve.len() - 1][0].as_f64().unwrap(), 2.0);
    }

    #[test]
    fn solve_curve_multi_root_case_picks_the_sup() {
        let out = solve_curve_json(
            r#"{"function": "sin", "a": 0.0, "x": 6.283185307179586, "n": 1}"#,
        );
        let v: serde_json::Value = serde_json::from_str(&out).unwrap();
        assert_eq!(v["ok"], true);
        let xi = v["xi"].as_f64().unwrap();
        assert!((xi - 3.0 * std::f64::consts::FRAC_PI_2).abs() < 1e-9);
        assert_eq!(v["root_count_estimate"], 2);
    }

    #[test]
    fn solve_curve_rejects_unknown_function() {
        let out = solve_curve_json(r#"{"function": "sinh", "x": 1.0}"#);
        let v: serde_json::Value = serde_json::from_str(&out).unwrap();
        assert_eq!(v["ok"], false);
        assert!(v["error"].as_str().unwrap().contains("sinh"));
    }

    #[test]
    fn sample_points_are_measurable_and_deterministic() {
        let req = r#"{"function": "exp", "dist": "uniform:0.2,1.8", "count": 200, "seed": 5}"#;
        let a = sample_points_json(req);
        let b = sample_points_json(req);
        assert_eq!(a, b);
        let v: serde_json::Value = serde_json::from_str(&a).unwrap();
        assert_eq!(v["ok"], true);
        assert_eq!(v["measurable"], true);
        assert_eq!(v["points"].as_array().unwrap().len(), 200);
    }

    #[test]
    fn sample_points_enforce_bounds() {
        let req = r#"{"function": "exp", "dist": "uniform:0,1", "count": 100000, "seed": 5}"#;
        let v: serde_json::Value = serde_json::from_str(&sample_points_json(req)).unwrap();
        assert_eq!(v["ok"], false);
    }

    #[test]
    fn delta_histogram_has_mass_near_zero() {
        let req = r#"{
            "function": "poly:0,0,1", "dist": "uniform:0,1",
            "sample_size": 500, "reps": 400, "seed": 9
        }"#;
        let v: serde_json::Value = serde_json::from_str(&delta_histogram_json(req)).unwrap();
        assert_eq!(v["ok"], true);
        let densities: Vec<f64> = v["densities"]
            .as_array()
            .unwrap()
            .iter()
            .map(|d| d.as_f64().unwrap())
            .collect();
        let total: f64 = densities.iter().sum::<f64>() * (8.0 / 41.0);
        assert!(total > 0.95, "histogram mass {total}");
        // center bin should dominate the tails
        assert!(densities[20] > densities[0]);
        assert!(v["ks_distance"].as_f64().unwrap() < 0.2);
    }
}

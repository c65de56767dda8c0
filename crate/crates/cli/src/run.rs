//! Executes a validated experiment config and writes its report files.

use std::fs;
use std::path::{Path, PathBuf};

use xipoint::field::VectorField;
use xipoint::probability::{empirical_space, sigma_generated_by, SampleStream, SpaceJson};
use xipoint::report::{
    detail_csv, rows_from_delta, rows_from_mle, rows_from_selector_sample, rows_from_two_rv,
    DetailRow, ExpansionSummary, RunSummary,
};
use xipoint::selector::apply_over_sample;
use xipoint::stats::{delta_method_experiment, mle_monte_carlo, parse_model, two_rv_selector};
use xipoint::taylor::{integral_remainder_vec, partial_sum_uni};
use xipoint::value::Value;
use xipoint::{functions, is_measurable_wrt, DistributionSpec, Error, QuadratureSpec};

use crate::config::{CommandKind, ExperimentConfig};

/// Environment variable holding the default output directory.
pub const OUT_DIR_ENV: &str = "XIPOINT_OUT_DIR";

#[derive(Debug)]
pub enum RunError {
    /// Config-level problems; exit code 1.
    Validation(Vec<String>),
    /// Per-outcome solver failures; exit code 2.
    Solver(Vec<(String, String)>),
    /// Filesystem problems; exit code 1.
    Io(String),
}

impl From<std::io::Error> for RunError {
    fn from(e: std::io::Error) -> Self {
        RunError::Io(e.to_string())
    }
}

fn solver_failure(err: Error) -> RunError {
    match err {
        Error::PerOutcome { failures, .. } => RunError::Solver(
            failures
                .into_iter()
                .map(|(id, e)| (id, e.to_string()))
                .collect(),
        ),
        other => RunError::Solver(vec![("0".into(), other.to_string())]),
    }
}

pub struct RunOutput {
    pub headline: String,
    pub summary_path: PathBuf,
    pub detail_path: PathBuf,
}

/// Runs the experiment, writing `<command>_summary.json` and
/// `<command>_detail.csv` into the resolved output directory.
pub fn run(cfg: &ExperimentConfig, out_dir_flag: Option<&Path>) -> Result<RunOutput, RunError> {
    let errors = cfg.validate();
    if !errors.is_empty() {
        return Err(RunError::Validation(errors));
    }
    let out_dir = resolve_out_dir(cfg, out_dir_flag);

    let (summary, csv, headline) = match cfg.command {
        CommandKind::Expand => run_expand(cfg)?,
        CommandKind::Solve => run_solve(cfg)?,
        CommandKind::Verify => run_verify(cfg)?,
        CommandKind::Measurability => run_measurability(cfg)?,
        CommandKind::MleDemo => run_mle(cfg)?,
        CommandKind::DeltaDemo => run_delta(cfg)?,
        CommandKind::TwoRv => run_two_rv(cfg)?,
    };

    fs::create_dir_all(&out_dir)?;
    let summary_path = out_dir.join(format!("{}_summary.json", cfg.command.as_str()));
    let detail_path = out_dir.join(format!("{}_detail.csv", cfg.command.as_str()));
    let mut summary_text =
        serde_json::to_string_pretty(&summary).map_err(|e| RunError::Io(e.to_string()))?;
    summary_text.push('\n');
    fs::write(&summary_path, summary_text)?;
    fs::write(&detail_path, csv)?;

    Ok(RunOutput {
        headline,
        summary_path,
        detail_path,
    })
}

fn resolve_out_dir(cfg: &ExperimentConfig, flag: Option<&Path>) -> PathBuf {
    if let Some(dir) = flag {
        return dir.to_path_buf();
    }
    if let Some(dir) = &cfg.out_dir {
        return dir.clone();
    }
    if let Ok(dir) = std::env::var(OUT_DIR_ENV) {
        if !dir.is_empty() {
            return PathBuf::from(dir);
        }
    }
    PathBuf::from("out")
}

fn base_summary(cfg: &ExperimentConfig) -> RunSummary {
    let mut s = RunSummary::new(cfg.command.as_str());
    s.function = cfg.function.clone();
    s.model = cfg.model.clone();
    s.seed = cfg.seed;
    s.tolerance = cfg.tolerance_or_default();
    s
}

/// Pass accounting: fraction of rows with `|residual| <= tol * scale(row)`.
fn pass_fraction(residuals: &[f64], scales: &[f64], tol: f64) -> f64 {
    if residuals.is_empty() {
        return 1.0;
    }
    let passed = residuals
        .iter()
        .zip(scales)
        .filter(|(r, s)| r.abs() <= tol * (1.0 + s.abs()))
        .count();
    passed as f64 / residuals.len() as f64
}

fn factorial(k: usize) -> f64 {
    (1..=k).map(|i| i as f64).product()
}

fn run_expand(cfg: &ExperimentConfig) -> Result<(RunSummary, String, String), RunError> {
    let f = functions::parse(cfg.function.as_ref().unwrap()).map_err(solver_failure)?;
    let a = cfg.a.unwrap_or(0.0);
    let x = cfg.x.unwrap();
    let n = cfg.n.unwrap_or(1);
    let spec = QuadratureSpec {
        nodes: cfg.quad_nodes.unwrap_or(64),
        ..QuadratureSpec::default()
    };

    let value = f.eval_uni(a + x).map_err(solver_failure)?;
    let partial_sum = partial_sum_uni(&f, a, x, n).map_err(solver_failure)?;
    let remainder = value - partial_sum;
    let vector = VectorField::new(vec![f.clone()]).map_err(solver_failure)?;
    let integral = integral_remainder_vec(&vector, &[a], &[x], n, &spec)
        .map_err(solver_failure)?[0];

    // Term table: k, k-th Taylor term, cumulative partial sum.
    let mut csv = String::from("k,term,partial_sum\n");
    let mut cumulative = 0.0;
    for k in 0..n {
        let term = if k == 0 {
            f.eval_uni(a).map_err(solver_failure)?
        } else {
            f.derivative_uni(k, a).map_err(solver_failure)? * x.powi(k as i32) / factorial(k)
        };
        cumulative += term;
        csv.push_str(&format!("{k},{term},{cumulative}\n"));
    }

    let mut summary = base_summary(cfg);
    summary.count = 1;
    summary.max_abs_residual = (remainder - integral).abs();
    summary.residual_pass_fraction =
        pass_fraction(&[remainder - integral], &[value], summary.tolerance);
    summary.expansion = Some(ExpansionSummary {
        value,
        partial_sum,
        remainder,
        integral_remainder: integral,
    });
    let headline = format!(
        "f(a+x) = {value}, partial sum (order {n}) = {partial_sum}, remainder = {remainder}, integral form = {integral}"
    );
    Ok((summary, csv, headline))
}

fn run_solve(cfg: &ExperimentConfig) -> Result<(RunSummary, String, String), RunError> {
    let f = functions::parse(cfg.function.as_ref().unwrap()).map_err(solver_failure)?;
    let a = cfg.a.unwrap_or(0.0);
    let x = cfg.x.unwrap();
    let n = cfg.n.unwrap_or(1);
    let policy = cfg.policy();
    let res =
        xipoint::selector::solve_selector_uni(&f, a, x, n, &policy).map_err(solver_failure)?;
    let xi = res.xi.as_scalar().map_err(solver_failure)?;
    let rows = vec![DetailRow {
        id: "0".into(),
        x: Value::Scalar(x),
        xi: res.xi.clone(),
        theta: res.theta,
        residual: res.residual,
    }];
    let scale = f.eval_uni(a + x).map_err(solver_failure)?;
    let mut summary = base_summary(cfg);
    summary.count = 1;
    summary.max_abs_residual = res.residual.abs();
    summary.residual_pass_fraction = pass_fraction(&[res.residual], &[scale], summary.tolerance);
    summary.xi = Some(res.xi.clone());
    summary.theta = Some(res.theta);
    let headline = format!("xi = {xi} (theta = {}, residual = {})", res.theta, res.residual);
    Ok((summary, detail_csv(&rows), headline))
}

fn run_verify(cfg: &ExperimentConfig) -> Result<(RunSummary, String, String), RunError> {
    let f = functions::parse(cfg.function.as_ref().unwrap()).map_err(solver_failure)?;
    let a = cfg.a.unwrap_or(0.0);
    let n = cfg.n.unwrap_or(1);
    let policy = cfg.policy();
    let dist = DistributionSpec::parse(cfg.dist.as_ref().unwrap()).map_err(solver_failure)?;
    let stream = SampleStream {
        seed: cfg.seed.unwrap(),
        dist,
        count: cfg.count.unwrap(),
    };
    let (_, x) = empirical_space(&stream).map_err(solver_failure)?;
    let sample = apply_over_sample(&f, &[a], &x, n, &policy).map_err(solver_failure)?;
    let rows = rows_from_selector_sample(&x, &sample);

    let mut residuals = Vec::with_capacity(rows.len());
    let mut scales = Vec::with_capacity(rows.len());
    for (i, row) in rows.iter().enumerate() {
        residuals.push(row.residual);
        let xv = x.value_at(i).as_scalar().map_err(solver_failure)?;
        scales.push(f.eval_uni(a + xv).map_err(solver_failure)?);
    }
    let mut summary = base_summary(cfg);
    summary.count = rows.len();
    summary.max_abs_residual = residuals.iter().fold(0.0, |m: f64, r| m.max(r.abs()));
    summary.residual_pass_fraction = pass_fraction(&residuals, &scales, summary.tolerance);
    let headline = format!(
        "residual pass: {:.2}% of {} outcomes (max |residual| = {:e})",
        100.0 * summary.residual_pass_fraction,
        summary.count,
        summary.max_abs_residual
    );
    Ok((summary, detail_csv(&rows), headline))
}

fn read_space(path: &Path) -> Result<SpaceJson, RunError> {
    let text = fs::read_to_string(path)
        .map_err(|e| RunError::Io(format!("{}: {e}", path.display())))?;
    serde_json::from_str(&text)
        .map_err(|e| RunError::Validation(vec![format!("{}: {e}", path.display())]))
}

fn run_measurability(cfg: &ExperimentConfig) -> Result<(RunSummary, String, String), RunError> {
    let f = functions::parse(cfg.function.as_ref().unwrap()).map_err(solver_failure)?;
    let a = cfg.a.unwrap_or(0.0);
    let n = cfg.n.unwrap_or(1);
    let policy = cfg.policy();
    let doc = read_space(cfg.space.as_ref().unwrap())?;
    let (_, x) = doc
        .into_variable()
        .map_err(|e| RunError::Validation(vec![format!("space: {e}")]))?;
    let sample = apply_over_sample(&f, &[a], &x, n, &policy).map_err(solver_failure)?;
    let sigma = sigma_generated_by(&x);
    let measurable = is_measurable_wrt(&sample.xi, &sigma);
    let rows = rows_from_selector_sample(&x, &sample);

    let residuals: Vec<f64> = rows.iter().map(|r| r.residual).collect();
    let mut scales = Vec::with_capacity(rows.len());
    for i in 0..rows.len() {
        let xv = x.value_at(i).as_scalar().map_err(solver_failure)?;
        scales.push(f.eval_uni(a + xv).map_err(solver_failure)?);
    }
    let mut summary = base_summary(cfg);
    summary.count = rows.len();
    summary.max_abs_residual = residuals.iter().fold(0.0, |m: f64, r| m.max(r.abs()));
    summary.residual_pass_fraction = pass_fraction(&residuals, &scales, summary.tolerance);
    summary.measurable = Some(measurable);
    let headline = format!("measurable: {measurable} (sigma(X) has {} atoms)", sigma.len());
    Ok((summary, detail_csv(&rows), headline))
}

fn run_mle(cfg: &ExperimentConfig) -> Result<(RunSummary, String, String), RunError> {
    let model = parse_model(cfg.model.as_ref().unwrap()).map_err(solver_failure)?;
    let policy = cfg.policy();
    let mc = mle_monte_carlo(
        &model,
        cfg.sample_size.unwrap(),
        cfg.reps.unwrap(),
        cfg.seed.unwrap(),
        &policy,
    )
    .map_err(solver_failure)?;
    let rows = rows_from_mle(&mc);

    let residuals: Vec<f64> = mc.replicates.iter().map(|r| r.record.residual).collect();
    let scales: Vec<f64> = mc.replicates.iter().map(|r| r.record.score_at_hat).collect();
    let mut summary = base_summary(cfg);
    summary.count = rows.len();
    summary.max_abs_residual = residuals.iter().fold(0.0, |m: f64, r| m.max(r.abs()));
    summary.residual_pass_fraction = pass_fraction(&residuals, &scales, summary.tolerance);
    summary.boundary_count = Some(mc.boundary_count);
    summary.strictly_between_fraction = Some(mc.strictly_between_fraction);
    let headline = format!(
        "{} replicates, theta* strictly between in {:.2}%, boundary flags: {}, max |residual| = {:e}",
        summary.count,
        100.0 * mc.strictly_between_fraction,
        mc.boundary_count,
        summary.max_abs_residual
    );
    Ok((summary, detail_csv(&rows), headline))
}

fn run_delta(cfg: &ExperimentConfig) -> Result<(RunSummary, String, String), RunError> {
    let g = functions::parse(cfg.function.as_ref().unwrap()).map_err(solver_failure)?;
    let dist = DistributionSpec::parse(cfg.dist.as_ref().unwrap()).map_err(solver_failure)?;
    let mu = cfg.mu.unwrap_or_else(|| dist.mean());
    let policy = cfg.policy();
    let report = delta_method_experiment(
        &g,
        mu,
        &dist,
        cfg.sample_size.unwrap(),
        cfg.reps.unwrap(),
        cfg.seed.unwrap(),
        &policy,
    )
    .map_err(solver_failure)?;
    let rows = rows_from_delta(&report);

    let residuals: Vec<f64> = report.replicates.iter().map(|r| r.residual).collect();
    let mut scales = Vec::with_capacity(rows.len());
    for rep in &report.replicates {
        scales.push(g.eval_uni(rep.mean).map_err(solver_failure)?);
    }
    let mut summary = base_summary(cfg);
    summary.count = rows.len();
    summary.max_abs_residual = residuals.iter().fold(0.0, |m: f64, r| m.max(r.abs()));
    summary.residual_pass_fraction = pass_fraction(&residuals, &scales, summary.tolerance);
    summary.ks_distance = Some(report.ks_distance);
    summary.max_xi_deviation = Some(report.max_xi_deviation);
    let headline = format!(
        "KS distance to N(0,1) = {:.5} over {} replicates (max |xi - mu| = {:.5})",
        report.ks_distance, report.reps, report.max_xi_deviation
    );
    Ok((summary, detail_csv(&rows), headline))
}

fn run_two_rv(cfg: &ExperimentConfig) -> Result<(RunSummary, String, String), RunError> {
    let f = functions::parse(cfg.function.as_ref().unwrap()).map_err(solver_failure)?;
    let policy = cfg.policy();
    let doc_x = read_space(cfg.space_x.as_ref().unwrap())?;
    let doc_y = read_space(cfg.space_y.as_ref().unwrap())?;
    let (_, x) = doc_x
        .into_variable()
        .map_err(|e| RunError::Validation(vec![format!("space_x: {e}")]))?;
    let (_, y) = doc_y
        .into_variable()
        .map_err(|e| RunError::Validation(vec![format!("space_y: {e}")]))?;
    if !x.same_space(&y) {
        return Err(RunError::Validation(vec![
            "space_y: describes a different probability space than space_x".into(),
        ]));
    }
    let report = two_rv_selector(&f, &x, &y, &policy).map_err(solver_failure)?;
    let rows = rows_from_two_rv(&report);

    let residuals: Vec<f64> = report.outcomes.iter().map(|o| o.residual).collect();
    let mut scales = Vec::with_capacity(rows.len());
    for o in &report.outcomes {
        scales.push(f.eval_uni(o.x).map_err(solver_failure)?);
    }
    let mut summary = base_summary(cfg);
    summary.count = rows.len();
    summary.max_abs_residual = residuals.iter().fold(0.0, |m: f64, r| m.max(r.abs()));
    summary.residual_pass_fraction = pass_fraction(&residuals, &scales, summary.tolerance);
    summary.measurable = Some(report.measurable);
    let headline = format!(
        "measurable w.r.t. sigma(X, Y): {} over {} outcomes (max |residual| = {:e})",
        report.measurable, summary.count, summary.max_abs_residual
    );
    Ok((summary, detail_csv(&rows), headline))
}

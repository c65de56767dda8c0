//! Machine-readable run reports: CSV detail rows and JSON summaries.
//!
//! One detail row per outcome or replicate with columns
//! `id,x,xi,theta,residual`; vector payloads pack their coordinates with
//! `;`. Floats print with Rust's shortest round-trip formatting, so equal
//! runs yield byte-identical files.

use serde::{Deserialize, Serialize};

use crate::selector::SelectorSample;
use crate::stats::{DeltaReport, MleMonteCarlo, TwoRvReport};
use crate::value::Value;

/// One CSV row.
#[derive(Debug, Clone, PartialEq)]
pub struct DetailRow {
    pub id: String,
    pub x: Value,
    pub xi: Value,
    pub theta: f64,
    pub residual: f64,
}

fn cell(v: &Value) -> String {
    match v {
        Value::Scalar(x) => format!("{x}"),
        Value::Vector(xs) => xs
            .iter()
            .map(|x| format!("{x}"))
            .collect::<Vec<_>>()
            .join(";"),
    }
}

/// Renders rows as CSV with the documented header.
pub fn detail_csv(rows: &[DetailRow]) -> String {
    let mut out = String::from("id,x,xi,theta,residual\n");
    for r in rows {
        out.push_str(&format!(
            "{},{},{},{},{}\n",
            r.id,
            cell(&r.x),
            cell(&r.xi),
            r.theta,
            r.residual
        ));
    }
    out
}

/// Detail rows for a per-outcome selector run.
pub fn rows_from_selector_sample(x: &crate::probability::RandomVariable, sample: &SelectorSample) -> Vec<DetailRow> {
    let space = x.space();
    space
        .outcomes()
        .iter()
        .enumerate()
        .map(|(i, id)| DetailRow {
            id: id.clone(),
            x: x.value_at(i).clone(),
            xi: sample.xi.value_at(i).clone(),
            theta: sample.results[i].theta,
            residual: sample.results[i].residual,
        })
        .collect()
}

/// Detail rows for a Monte Carlo maximum-likelihood run; `x` is the
/// estimator, `xi` the intermediate parameter value.
pub fn rows_from_mle(mc: &MleMonteCarlo) -> Vec<DetailRow> {
    mc.replicates
        .iter()
        .enumerate()
        .map(|(i, rep)| DetailRow {
            id: i.to_string(),
            x: Value::Scalar(rep.record.theta_hat),
            xi: Value::Scalar(rep.record.theta_star),
            theta: rep.record.theta,
            residual: rep.record.residual,
        })
        .collect()
}

/// Detail rows for a delta-method run; `x` is the replicate mean.
pub fn rows_from_delta(report: &DeltaReport) -> Vec<DetailRow> {
    report
        .replicates
        .iter()
        .enumerate()
        .map(|(i, rep)| DetailRow {
            id: i.to_string(),
            x: Value::Scalar(rep.mean),
            xi: Value::Scalar(rep.xi),
            theta: rep.theta,
            residual: rep.residual,
        })
        .collect()
}

/// Detail rows for the two-variable probe; `x` holds the pair `(X, Y)`.
pub fn rows_from_two_rv(report: &TwoRvReport) -> Vec<DetailRow> {
    report
        .outcomes
        .iter()
        .map(|o| DetailRow {
            id: o.id.clone(),
            x: Value::Vector(vec![o.x, o.y]),
            xi: Value::Scalar(o.xi),
            theta: o.theta,
            residual: o.residual,
        })
        .collect()
}

/// Deterministic expansion report (partial sum and remainders).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExpansionSummary {
    pub value: f64,
    pub partial_sum: f64,
    /// Exact defect `f(a + x) - partial_sum`.
    pub remainder: f64,
    /// Remainder reproduced through the integral form.
    pub integral_remainder: f64,
}

/// JSON summary shared by every command; fields that do not apply stay
/// absent.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunSummary {
    pub command: String,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub function: Option<String>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub model: Option<String>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub seed: Option<u64>,
    /// Outcomes or replicates processed.
    pub count: usize,
    pub failures: usize,
    pub max_abs_residual: f64,
    /// Fraction of rows with `|residual| <= tolerance * (1 + |x|-scale)`.
    pub residual_pass_fraction: f64,
    pub tolerance: f64,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub xi: Option<Value>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub theta: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub measurable: Option<bool>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub ks_distance: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub max_xi_deviation: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub boundary_count: Option<usize>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub strictly_between_fraction: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub expansion: Option<ExpansionSummary>,
}

impl RunSummary {
    pub fn new(command: impl Into<String>) -> Self {
        RunSummary {
            command: command.into(),
            function: None,
            model: None,
            seed: None,
            count: 0,
            failures: 0,
            max_abs_residual: 0.0,
            residual_pass_fraction: 1.0,
            tolerance: 1e-9,
            xi: None,
            theta: None,
            measurable: None,
            ks_distance: None,
            max_xi_deviation: None,
            boundary_count: None,
            strictly_between_fraction: None,
            expansion: None,
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn csv_layout_is_stable() {
        let rows = vec![
            DetailRow {
                id: "0".into(),
                x: Value::Scalar(0.5),
                xi: Value::Scalar(0.25),
                theta: 0.5,
                residual: 0.0,
            },
            DetailRow {
                id: "1".into(),
                x: Value::Vector(vec![1.0, 2.0]),
                xi: Value::Vector(vec![0.5, 1.0]),
                theta: 0.5,
                residual: 1e-12,
            },
        ];
        let csv = detail_csv(&rows);
        let expected = "id,x,xi,theta,residual\n\
                        0,0.5,0.25,0.5,0\n\
                        1,1;2,0.5;1,0.5,0.000000000001\n";
        assert_eq!(csv, expected);
    }

    #[test]
    fn summary_round_trips_through_json() {
        let mut s = RunSummary::new("solve");
        s.function = Some("poly:0,0,1".into());
        s.count = 1;
        s.xi = Some(Value::Scalar(1.0));
        s.theta = Some(0.5);
        let text = serde_json::to_string_pretty(&s).unwrap();
        let parsed: RunSummary = serde_json::from_str(&text).unwrap();
        assert_eq!(parsed, s);
    }
}

//! Declarative experiment configuration and its validation.
//!
//! The JSON config file mirrors this struct field for field; subcommand
//! flags populate the same struct, so both entry points share one
//! validation pass. Validation failures carry the offending field path.

use std::path::PathBuf;

use serde::{Deserialize, Serialize};
use xipoint::selector::{SelectionPolicy, SelectorVariant};

/// What the run does.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum CommandKind {
    /// Deterministic Taylor expansion report.
    Expand,
    /// One selector solve.
    Solve,
    /// Per-outcome selector verification over a seeded sample.
    Verify,
    /// Exact measurability check of the selected point on a finite space.
    Measurability,
    /// Monte Carlo maximum-likelihood score expansion.
    MleDemo,
    /// Delta-method replication with the intermediate point traced.
    DeltaDemo,
    /// Two-variable probe on a finite space.
    TwoRv,
}

impl CommandKind {
    pub fn as_str(&self) -> &'static str {
        match self {
            CommandKind::Expand => "expand",
            CommandKind::Solve => "solve",
            CommandKind::Verify => "verify",
            CommandKind::Measurability => "measurability",
            CommandKind::MleDemo => "mle-demo",
            CommandKind::DeltaDemo => "delta-demo",
            CommandKind::TwoRv => "two-rv",
        }
    }

    /// Commands that draw samples and therefore need a seed.
    pub fn is_stochastic(&self) -> bool {
        matches!(
            self,
            CommandKind::Verify | CommandKind::MleDemo | CommandKind::DeltaDemo
        )
    }
}

/// Selection policy as written in configs.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PolicyConfig {
    /// `sup` (default) or `inf`.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub variant: Option<String>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub scan_points: Option<usize>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub refine_tol: Option<f64>,
}

impl PolicyConfig {
    pub fn to_policy(&self) -> Result<SelectionPolicy, String> {
        let mut policy = SelectionPolicy::default();
        if let Some(v) = &self.variant {
            policy.variant = match v.as_str() {
                "sup" => SelectorVariant::Sup,
                "inf" => SelectorVariant::Inf,
                other => return Err(format!("policy.variant: unknown variant '{other}'")),
            };
        }
        if let Some(sp) = self.scan_points {
            policy.scan_points = sp;
        }
        if let Some(rt) = self.refine_tol {
            policy.refine_tol = rt;
        }
        policy
            .validate()
            .map_err(|e| format!("policy: {e}"))?;
        Ok(policy)
    }
}

/// One experiment, fully declared.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    pub command: CommandKind,
    /// Builtin function spec (`poly:...`, `exp`, `sin`, `log-shifted`).
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub function: Option<String>,
    /// Anchor point.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub a: Option<f64>,
    /// Increment for `expand`/`solve`.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub x: Option<f64>,
    /// Expansion order.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub n: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub policy: Option<PolicyConfig>,
    /// Relative residual tolerance used for pass/fail accounting.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub tolerance: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub seed: Option<u64>,
    /// Outcome count for `verify`.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub count: Option<usize>,
    /// Replicate count for the demos.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub reps: Option<usize>,
    /// Per-replicate sample size for the demos.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub sample_size: Option<usize>,
    /// Distribution spec (`uniform:0,1`, `normal:0,1`, ...).
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub dist: Option<String>,
    /// Model spec for `mle-demo`.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub model: Option<String>,
    /// Mean of the sampling distribution for `delta-demo`; defaults to the
    /// distribution mean.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub mu: Option<f64>,
    /// Space file for `measurability`.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub space: Option<PathBuf>,
    /// Space files for `two-rv`.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub space_x: Option<PathBuf>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub space_y: Option<PathBuf>,
    /// Gauss-Legendre nodes for the `expand` integral remainder.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub quad_nodes: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub out_dir: Option<PathBuf>,
}

impl ExperimentConfig {
    pub fn new(command: CommandKind) -> Self {
        ExperimentConfig {
            command,
            function: None,
            a: None,
            x: None,
            n: None,
            policy: None,
            tolerance: None,
            seed: None,
            count: None,
            reps: None,
            sample_size: None,
            dist: None,
            model: None,
            mu: None,
            space: None,
            space_x: None,
            space_y: None,
            quad_nodes: None,
            out_dir: None,
        }
    }

    /// Field-level validation; returns every violation with its field path.
    pub fn validate(&self) -> Vec<String> {
        let mut errors = Vec::new();
        let require = |errors: &mut Vec<String>, ok: bool, field: &str| {
            if !ok {
                errors.push(format!(
                    "{field}: required for command '{}'",
                    self.command.as_str()
                ));
            }
        };

        for (name, value) in [("a", self.a), ("x", self.x), ("mu", self.mu)] {
            if let Some(v) = value {
                if !v.is_finite() {
                    errors.push(format!("{name}: must be finite, got {v}"));
                }
            }
        }
        if let Some(t) = self.tolerance {
            if !t.is_finite() || t <= 0.0 {
                errors.push(format!("tolerance: must be positive, got {t}"));
            }
        }
        if let Some(n) = self.n {
            if n == 0 {
                errors.push("n: order must be a positive integer".into());
            }
        }
        if let Some(p) = &self.policy {
            if let Err(e) = p.to_policy() {
                errors.push(e);
            }
        }
        if let Some(f) = &self.function {
            if let Err(e) = xipoint::functions::parse(f) {
                errors.push(format!("function: {e}"));
            }
        }
        if let Some(d) = &self.dist {
            if let Err(e) = xipoint::DistributionSpec::parse(d) {
                errors.push(format!("dist: {e}"));
            }
        }
        if let Some(m) = &self.model {
            if let Err(e) = xipoint::stats::parse_model(m) {
                errors.push(format!("model: {e}"));
            }
        }
        if self.command.is_stochastic() && self.seed.is_none() {
            errors.push(format!(
                "seed: required for stochastic command '{}'",
                self.command.as_str()
            ));
        }

        match self.command {
            CommandKind::Expand => {
                require(&mut errors, self.function.is_some(), "function");
                require(&mut errors, self.x.is_some(), "x");
                if let Some(q) = self.quad_nodes {
                    if q == 0 {
                        errors.push("quad_nodes: must be positive".into());
                    }
                }
            }
            CommandKind::Solve => {
                require(&mut errors, self.function.is_some(), "function");
                require(&mut errors, self.x.is_some(), "x");
            }
            CommandKind::Verify => {
                require(&mut errors, self.function.is_some(), "function");
                require(&mut errors, self.dist.is_some(), "dist");
                match self.count {
                    None => require(&mut errors, false, "count"),
                    Some(0) => errors.push("count: must be at least 1".into()),
                    _ => {}
                }
            }
            CommandKind::Measurability => {
                require(&mut errors, self.function.is_some(), "function");
                require(&mut errors, self.space.is_some(), "space");
            }
            CommandKind::MleDemo => {
                require(&mut errors, self.model.is_some(), "model");
                require(&mut errors, self.sample_size.is_some(), "sample_size");
                require(&mut errors, self.reps.is_some(), "reps");
                if self.sample_size == Some(0) {
                    errors.push("sample_size: must be at least 1".into());
                }
                if self.reps == Some(0) {
                    errors.push("reps: must be at least 1".into());
                }
            }
            CommandKind::DeltaDemo => {
                require(&mut errors, self.function.is_some(), "function");
                require(&mut errors, self.dist.is_some(), "dist");
                require(&mut errors, self.sample_size.is_some(), "sample_size");
                require(&mut errors, self.reps.is_some(), "reps");
                if self.sample_size == Some(0) {
                    errors.push("sample_size: must be at least 1".into());
                }
                if self.reps == Some(0) {
                    errors.push("reps: must be at least 1".into());
                }
            }
            CommandKind::TwoRv => {
                require(&mut errors, self.function.is_some(), "function");
                require(&mut errors, self.space_x.is_some(), "space_x");
                require(&mut errors, self.space_y.is_some(), "space_y");
            }
        }
        errors
    }

    pub fn policy(&self) -> SelectionPolicy {
        self.policy
            .as_ref()
            .map(|p| p.to_policy().expect("validated"))
            .unwrap_or_default()
    }

    pub fn tolerance_or_default(&self) -> f64 {
        self.tolerance.unwrap_or(1e-9)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn missing_fields_are_reported_with_paths() {
        let cfg = ExperimentConfig::new(CommandKind::Verify);
        let errors = cfg.validate();
        assert!(errors.iter().any(|e| e.starts_with("function:")));
        assert!(errors.iter().any(|e| e.starts_with("dist:")));
        assert!(errors.iter().any(|e| e.starts_with("count:")));
        assert!(errors.iter().any(|e| e.starts_with("seed:")));
    }

    #[test]
    fn valid_solve_config_passes() {
        let mut cfg = ExperimentConfig::new(CommandKind::Solve);
        cfg.function = Some("poly:0,0,1".into());
        cfg.x = Some(2.0);
        assert!(cfg.validate().is_empty());
    }

    #[test]
    fn bad_policy_variant_is_a_validation_error() {
        let mut cfg = ExperimentConfig::new(CommandKind::Solve);
        cfg.function = Some("exp".into());
        cfg.x = Some(1.0);
        cfg.policy = Some(PolicyConfig {
            variant: Some("median".into()),
            ..PolicyConfig::default()
        });
        let errors = cfg.validate();
        assert!(errors.iter().any(|e| e.contains("policy.variant")));
    }

    #[test]
    fn config_json_round_trip() {
        let mut cfg = ExperimentConfig::new(CommandKind::DeltaDemo);
        cfg.function = Some("poly:0,0,1".into());
        cfg.dist = Some("uniform:0,1".into());
        cfg.sample_size = Some(100);
        cfg.reps = Some(10);
        cfg.seed = Some(7);
        let text = serde_json::to_string(&cfg).unwrap();
        let back: ExperimentConfig = serde_json::from_str(&text).unwrap();
        assert_eq!(back.command, CommandKind::DeltaDemo);
        assert_eq!(back.reps, Some(10));
    }

    #[test]
    fn unknown_fields_rejected() {
        let text = r#"{"command": "solve", "function": "exp", "x": 1.0, "bogus": 3}"#;
        assert!(serde_json::from_str::<ExperimentConfig>(text).is_err());
    }
}

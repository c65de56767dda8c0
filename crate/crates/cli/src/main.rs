//! `xipoint`: reproducible intermediate-point experiments from the
//! command line.
//!
//! Every subcommand builds the same declarative config that `run --config`
//! reads from JSON, then writes a JSON summary and a CSV detail file.
//! Exit codes: 0 success, 1 validation error, 2 per-outcome solver failure.

mod config;
mod run;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

use config::{CommandKind, ExperimentConfig, PolicyConfig};
use run::{run, RunError};

#[derive(Parser)]
#[command(
    name = "xipoint",
    about = "Computes the intermediate point of Taylor/mean-value expansions per realization",
    version
)]
struct Cli {
    /// Output directory (overrides config and XIPOINT_OUT_DIR).
    #[arg(long, global = true)]
    out_dir: Option<PathBuf>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Args, Default)]
struct PolicyArgs {
    /// Tie-break policy: sup or inf.
    #[arg(long, default_value = "sup")]
    policy: String,
    /// Uniform scan nodes over the bracket.
    #[arg(long)]
    scan_points: Option<usize>,
    /// Bisection tolerance in the scan parameter.
    #[arg(long)]
    refine_tol: Option<f64>,
}

impl PolicyArgs {
    fn to_config(&self) -> PolicyConfig {
        PolicyConfig {
            variant: Some(self.policy.clone()),
            scan_points: self.scan_points,
            refine_tol: self.refine_tol,
        }
    }
}

#[derive(Subcommand)]
enum Command {
    /// Run an experiment described by a JSON config file.
    Run {
        #[arg(long)]
        config: PathBuf,
    },
    /// Report a deterministic Taylor expansion and its remainders.
    Expand {
        #[arg(long = "fn")]
        function: String,
        #[arg(long, default_value_t = 0.0)]
        a: f64,
        #[arg(long)]
        x: f64,
        #[arg(long, default_value_t = 1)]
        n: usize,
        /// Gauss-Legendre nodes for the integral remainder.
        #[arg(long, default_value_t = 64)]
        quad_nodes: usize,
    },
    /// Solve one intermediate point.
    Solve {
        #[arg(long = "fn")]
        function: String,
        #[arg(long, default_value_t = 0.0)]
        a: f64,
        #[arg(long)]
        x: f64,
        #[arg(long, default_value_t = 1)]
        n: usize,
        #[command(flatten)]
        policy: PolicyArgs,
    },
    /// Solve the expansion for every outcome of a seeded sample and verify
    /// residuals.
    Verify {
        #[arg(long = "fn")]
        function: String,
        #[arg(long, default_value_t = 0.0)]
        a: f64,
        #[arg(long, default_value_t = 1)]
        n: usize,
        /// Distribution spec, e.g. uniform:-1,1.
        #[arg(long)]
        dist: String,
        /// Number of outcomes to draw.
        #[arg(long, short = 'N', visible_alias = "N", default_value_t = 10_000)]
        count: usize,
        #[arg(long)]
        seed: u64,
        /// Relative residual tolerance for pass accounting.
        #[arg(long, default_value_t = 1e-9)]
        tolerance: f64,
        #[command(flatten)]
        policy: PolicyArgs,
    },
    /// Check, exactly, that the selected point is measurable with respect
    /// to sigma(X) on a finite space.
    Measurability {
        #[arg(long = "fn")]
        function: String,
        #[arg(long, default_value_t = 0.0)]
        a: f64,
        #[arg(long, default_value_t = 1)]
        n: usize,
        /// Space file: {outcomes, atoms, weights, values}.
        #[arg(long)]
        space: PathBuf,
        #[command(flatten)]
        policy: PolicyArgs,
    },
    /// Monte Carlo maximum-likelihood score expansion.
    MleDemo {
        /// Model spec: bernoulli:0.3, normal-mean:0, exponential-rate:2.
        #[arg(long)]
        model: String,
        /// Per-replicate sample size.
        #[arg(long, default_value_t = 200)]
        sample_size: usize,
        #[arg(long, default_value_t = 2000)]
        reps: usize,
        #[arg(long)]
        seed: u64,
        #[command(flatten)]
        policy: PolicyArgs,
    },
    /// Delta-method replication with the intermediate point traced.
    DeltaDemo {
        /// Transform g as a function spec.
        #[arg(long = "fn")]
        function: String,
        #[arg(long)]
        dist: String,
        /// Mean of the sampling distribution (defaults to the distribution
        /// mean).
        #[arg(long)]
        mu: Option<f64>,
        #[arg(long, default_value_t = 10_000)]
        sample_size: usize,
        #[arg(long, default_value_t = 2000)]
        reps: usize,
        #[arg(long)]
        seed: u64,
        #[command(flatten)]
        policy: PolicyArgs,
    },
    /// Solve f(X) = f(Y) + f'(xi)(X - Y) outcome by outcome on a shared
    /// finite space.
    TwoRv {
        #[arg(long = "fn")]
        function: String,
        #[arg(long)]
        space_x: PathBuf,
        #[arg(long)]
        space_y: PathBuf,
        #[command(flatten)]
        policy: PolicyArgs,
    },
}

fn build_config(command: Command) -> Result<ExperimentConfig, RunError> {
    let cfg = match command {
        Command::Run { config } => {
            let text = std::fs::read_to_string(&config)
                .map_err(|e| RunError::Io(format!("{}: {e}", config.display())))?;
            serde_json::from_str::<ExperimentConfig>(&text)
                .map_err(|e| RunError::Validation(vec![format!("config: {e}")]))?
        }
        Command::Expand {
            function,
            a,
            x,
            n,
            quad_nodes,
        } => {
            let mut cfg = ExperimentConfig::new(CommandKind::Expand);
            cfg.function = Some(function);
            cfg.a = Some(a);
            cfg.x = Some(x);
            cfg.n = Some(n);
            cfg.quad_nodes = Some(quad_nodes);
            cfg
        }
        Command::Solve {
            function,
            a,
            x,
            n,
            policy,
        } => {
            let mut cfg = ExperimentConfig::new(CommandKind::Solve);
            cfg.function = Some(function);
            cfg.a = Some(a);
            cfg.x = Some(x);
            cfg.n = Some(n);
            cfg.policy = Some(policy.to_config());
            cfg
        }
        Command::Verify {
            function,
            a,
            n,
            dist,
            count,
            seed,
            tolerance,
            policy,
        } => {
            let mut cfg = ExperimentConfig::new(CommandKind::Verify);
            cfg.function = Some(function);
            cfg.a = Some(a);
            cfg.n = Some(n);
            cfg.dist = Some(dist);
            cfg.count = Some(count);
            cfg.seed = Some(seed);
            cfg.tolerance = Some(tolerance);
            cfg.policy = Some(policy.to_config());
            cfg
        }
        Command::Measurability {
            function,
            a,
            n,
            space,
            policy,
        } => {
            let mut cfg = ExperimentConfig::new(CommandKind::Measurability);
            cfg.function = Some(function);
            cfg.a = Some(a);
            cfg.n = Some(n);
            cfg.space = Some(space);
            cfg.policy = Some(policy.to_config());
            cfg
        }
        Command::MleDemo {
            model,
            sample_size,
            reps,
            seed,
            policy,
        } => {
            let mut cfg = ExperimentConfig::new(CommandKind::MleDemo);
            cfg.model = Some(model);
            cfg.sample_size = Some(sample_size);
            cfg.reps = Some(reps);
            cfg.seed = Some(seed);
            cfg.policy = Some(policy.to_config());
            cfg
        }
        Command::DeltaDemo {
            function,
            dist,
            mu,
            sample_size,
            reps,
            seed,
            policy,
        } => {
            let mut cfg = ExperimentConfig::new(CommandKind::DeltaDemo);
            cfg.function = Some(function);
            cfg.dist = Some(dist);
            cfg.mu = mu;
            cfg.sample_size = Some(sample_size);
            cfg.reps = Some(reps);
            cfg.seed = Some(seed);
            cfg.policy = Some(policy.to_config());
            cfg
        }
        Command::TwoRv {
            function,
            space_x,
            space_y,
            policy,
        } => {
            let mut cfg = ExperimentConfig::new(CommandKind::TwoRv);
            cfg.function = Some(function);
            cfg.space_x = Some(space_x);
            cfg.space_y = Some(space_y);
            cfg.policy = Some(policy.to_config());
            cfg
        }
    };
    Ok(cfg)
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            use clap::error::ErrorKind;
            let code = match e.kind() {
                ErrorKind::DisplayHelp | ErrorKind::DisplayVersion => 0,
                _ => 1, // flag mistakes are validation errors
            };
            let _ = e.print();
            return ExitCode::from(code);
        }
    };

    let cfg = match build_config(cli.command) {
        Ok(cfg) => cfg,
        Err(e) => return report(e),
    };

    match run(&cfg, cli.out_dir.as_deref()) {
        Ok(out) => {
            println!("{}", out.headline);
            println!("summary: {}", out.summary_path.display());
            println!("detail:  {}", out.detail_path.display());
            ExitCode::SUCCESS
        }
        Err(e) => report(e),
    }
}

fn report(e: RunError) -> ExitCode {
    match e {
        RunError::Validation(errors) => {
            for err in errors {
                eprintln!("invalid config -- {err}");
            }
            ExitCode::from(1)
        }
        RunError::Io(msg) => {
            eprintln!("io error -- {msg}");
            ExitCode::from(1)
        }
        RunError::Solver(failures) => {
            eprintln!("solver failed on {} outcome(s):", failures.len());
            for (id, msg) in failures.iter().take(20) {
                eprintln!("  outcome {id}: {msg}");
            }
            if failures.len() > 20 {
                eprintln!("  ... and {} more", failures.len() - 20);
            }
            ExitCode::from(2)
        }
    }
}

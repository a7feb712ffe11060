use std::fs;
use std::path::PathBuf;

use anyhow::{Context, Result};
use clap::{Parser, Subcommand};

use aoftrl_harness::experiment::{
    parse_seed_spec, run_experiment, AlgorithmSpec, DomainSpec, ExperimentConfig, PredictorSpec,
    ProblemSpec, SeedSpec,
};
use aoftrl_harness::verify::{verify_bounds, Suite};

/// Online convex optimization with adaptive regularization and optimistic
/// gradient predictions: experiment runner and bound verifier.
#[derive(Parser)]
#[command(name = "aoftrl", version, about)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run an experiment described by a TOML or JSON config file.
    Run {
        #[arg(long)]
        config: PathBuf,
        /// Overrides the config's output path.
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Compare algorithms on a generated problem.
    Compare {
        /// Problem kind: fixed-linear | slowly-varying-linear | random-linear
        /// | quadratic-box
        #[arg(long)]
        problem: String,
        /// Comma-separated algorithm names, e.g. aogd,adagrad-diag,ogd
        #[arg(long, value_delimiter = ',')]
        algos: Vec<String>,
        /// Rounds per run.
        #[arg(long = "T")]
        horizon: usize,
        /// Seed spec: "0..50", "1,2,3" or a single seed. Falls back to
        /// AOFTRL_SEED, then to seed 0.
        #[arg(long)]
        seeds: Option<String>,
        #[arg(long)]
        out: PathBuf,
        #[arg(long, default_value_t = 5)]
        dim: usize,
        /// Drift rate for slowly-varying-linear.
        #[arg(long, default_value_t = 0.001)]
        sigma: f64,
        /// Base gradient magnitude for slowly-varying-linear.
        #[arg(long, default_value_t = 0.05)]
        base_scale: f64,
        /// Gradient scale for random-linear.
        #[arg(long, default_value_t = 1.0)]
        scale: f64,
        /// Curvature for quadratic-box.
        #[arg(long, default_value_t = 1.0)]
        curvature: f64,
        /// Record per-cell wall-clock times (makes reports non-reproducible).
        #[arg(long, default_value_t = false)]
        timing: bool,
    },
    /// Run the bound-verification suites. Exits 0 only if every check passes.
    VerifyBounds {
        /// aogd | aoeg | rcd | erm | all
        #[arg(long)]
        suite: String,
        /// Seed spec overriding each suite's default seed set.
        #[arg(long)]
        seeds: Option<String>,
        /// Also write the JSON report here.
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Write per-round regret curves (one CSV per algorithm/seed cell).
    EmitCurves {
        #[arg(long)]
        config: PathBuf,
        #[arg(long)]
        out: PathBuf,
    },
}

fn default_seeds(explicit: Option<String>) -> Result<Vec<u64>> {
    if let Some(spec) = explicit {
        return parse_seed_spec(&spec);
    }
    if let Ok(env) = std::env::var("AOFTRL_SEED") {
        return parse_seed_spec(&env);
    }
    Ok(vec![0])
}

fn main() -> Result<()> {
    match Cli::parse().command {
        Command::Run { config, out } => {
            let config = ExperimentConfig::from_path(&config)?;
            let report = run_experiment(&config)?;
            let json = report.to_json();
            match out.or_else(|| config.output.clone()) {
                Some(path) => {
                    fs::write(&path, &json).with_context(|| format!("writing {}", path.display()))?;
                    eprintln!("wrote {} rows to {}", report.rows.len(), path.display());
                }
                None => println!("{json}"),
            }
        }
        Command::Compare {
            problem,
            algos,
            horizon,
            seeds,
            out,
            dim,
            sigma,
            base_scale,
            scale,
            curvature,
            timing,
        } => {
            let problem = match problem.as_str() {
                "fixed-linear" => ProblemSpec::FixedLinear { dim, gradient: None },
                "slowly-varying-linear" => {
                    ProblemSpec::SlowlyVaryingLinear { dim, sigma, base_scale }
                }
                "random-linear" => ProblemSpec::RandomLinear { dim, scale },
                "quadratic-box" => ProblemSpec::QuadraticBox { dim, curvature, center_drift: 0.05 },
                other => anyhow::bail!("unknown problem kind {other:?}"),
            };
            let algorithms = algos
                .iter()
                .map(|a| AlgorithmSpec::parse(a))
                .collect::<Result<Vec<_>>>()?;
            let config = ExperimentConfig {
                problem,
                domain: Some(DomainSpec::Box { radii: None, radius: Some(1.0) }),
                algorithms,
                predictor: PredictorSpec::LastGradient,
                horizon,
                seeds: SeedSpec::List(default_seeds(seeds)?),
                output: None,
                include_runtime: timing,
            };
            let report = run_experiment(&config)?;
            fs::write(&out, report.to_json())
                .with_context(|| format!("writing {}", out.display()))?;
            let csv_path = out.with_extension("csv");
            fs::write(&csv_path, report.to_csv())?;
            for (name, agg) in &report.aggregates {
                println!(
                    "{name}: mean regret {:.6} over {} seeds ({} failures)",
                    agg.mean_regret, agg.seeds, agg.failures
                );
            }
        }
        Command::VerifyBounds { suite, seeds, out } => {
            let suite = Suite::parse(&suite)?;
            let seeds = match seeds {
                Some(spec) => Some(parse_seed_spec(&spec)?),
                None => None,
            };
            let report = verify_bounds(suite, seeds.as_deref());
            for s in &report.suites {
                for c in &s.checks {
                    println!(
                        "[{}] {}/{}: {}",
                        if c.passed { "pass" } else { "FAIL" },
                        s.suite,
                        c.name,
                        c.detail
                    );
                }
            }
            if let Some(path) = out {
                fs::write(&path, report.to_json())
                    .with_context(|| format!("writing {}", path.display()))?;
            } else {
                println!("{}", report.to_json());
            }
            if !report.all_passed {
                std::process::exit(1);
            }
        }
        Command::EmitCurves { config, out } => {
            let config = ExperimentConfig::from_path(&config)?;
            aoftrl_harness::experiment::emit_curves(&config, &out)?;
            eprintln!("curves written to {}", out.display());
        }
    }
    Ok(())
}

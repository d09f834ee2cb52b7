use std::io::Write;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use cpe_bench::audit::{self, AuditReport};
use cpe_bench::config::{build_mu, AlgorithmSpec, MuSpec};
use cpe_bench::harness::{self, Instance};
use cpe_bench::{BenchError, ExperimentConfig, Result};
use cpe_core::{ClassKind, DecisionClass};
use serde::Deserialize;

/// Environment variable that overrides the configured base seed.
const SEED_VAR: &str = "CPE_SEED";

#[derive(Parser)]
#[command(name = "cpe", version, about = "Combinatorial pure exploration simulator")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Args)]
struct Common {
    /// TOML experiment config.
    #[arg(long)]
    config: PathBuf,
    /// Base seed; trial i uses seed + i. Overrides CPE_SEED and the config.
    #[arg(long)]
    seed: Option<u64>,
    /// Worker threads (0 = one per core).
    #[arg(long, default_value_t = 0)]
    workers: usize,
    /// Output directory; overrides `output.dir`.
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Subcommand)]
enum Command {
    /// Run the configured experiment.
    Run(Common),
    /// Print the complexity measures of the configured class (and μ, if given).
    Complexity(Common),
    /// Monte Carlo audit of a concentration or regret inequality.
    Audit {
        #[command(flatten)]
        common: Common,
        #[command(flatten)]
        which: AuditKind,
        /// Sample budget for the non-interactive audit.
        #[arg(long)]
        budget: Option<u64>,
        /// Failure probability, when the algorithm section does not fix one.
        #[arg(long)]
        failure_prob: Option<f64>,
        /// Learner rounds for the regret audit.
        #[arg(long, default_value_t = 500)]
        rounds: u64,
    },
    /// Run every point of the `[sweep]` grid.
    Sweep(Common),
}

#[derive(Args)]
#[group(required = true, multiple = false)]
struct AuditKind {
    #[arg(long)]
    lemma1: bool,
    #[arg(long)]
    lemma3: bool,
    #[arg(long)]
    ftpl_regret: bool,
}

/// Seed precedence: flag, then environment, then config.
fn resolve_seed(flag: Option<u64>, config: u64) -> Result<u64> {
    if let Some(seed) = flag {
        return Ok(seed);
    }
    match std::env::var(SEED_VAR) {
        Ok(text) => text.trim().parse().map_err(|_| BenchError::Config {
            field: SEED_VAR.into(),
            reason: format!("`{text}` is not an unsigned integer"),
        }),
        Err(_) => Ok(config),
    }
}

fn load(common: &Common) -> Result<ExperimentConfig> {
    let mut cfg = ExperimentConfig::load(&common.config)?;
    cfg.seed = resolve_seed(common.seed, cfg.seed)?;
    if let Some(out) = &common.out {
        cfg.output.dir = Some(out.clone());
    }
    Ok(cfg)
}

fn print_json<T: serde::Serialize>(value: &T) -> Result<()> {
    let text = serde_json::to_string_pretty(value)?;
    match writeln!(std::io::stdout().lock(), "{text}") {
        Err(e) if e.kind() != std::io::ErrorKind::BrokenPipe => Err(BenchError::Io { path: "<stdout>".into(), source: e }),
        _ => Ok(()),
    }
}

fn write_json<T: serde::Serialize>(dir: &Path, name: &str, value: &T) -> Result<()> {
    harness::ensure_dir(dir)?;
    let path = dir.join(name);
    let text = serde_json::to_string_pretty(value)?;
    std::fs::write(&path, text).map_err(|e| BenchError::Io { path, source: e })
}

/// The `complexity` subcommand only needs the class and, optionally, μ.
#[derive(Deserialize)]
struct ComplexityInput {
    class: ClassKind,
    mu: Option<MuSpec>,
}

fn complexity(common: &Common) -> Result<()> {
    let text = std::fs::read_to_string(&common.config)
        .map_err(|e| BenchError::Io { path: common.config.clone(), source: e })?;
    let input: ComplexityInput = toml::from_str(&text)?;
    let class = DecisionClass::new(input.class).map_err(|e| BenchError::Config { field: "class".into(), reason: e.to_string() })?;
    let mu = input.mu.map(|spec| build_mu(&spec, &class)).transpose()?;
    let report = audit::complexity_report(&class, mu.as_ref())?;
    if let Some(dir) = &common.out {
        write_json(dir, "complexity.json", &report)?;
    }
    print_json(&report)
}

fn missing(field: &str, reason: &str) -> BenchError {
    BenchError::Config { field: field.into(), reason: reason.into() }
}

fn run_audit(cfg: &ExperimentConfig, which: &AuditKind, budget: Option<u64>, failure_prob: Option<f64>, rounds: u64, workers: usize) -> Result<AuditReport> {
    let configured_prob = match &cfg.algorithm {
        AlgorithmSpec::FixedConfidence { failure_prob, .. } | AlgorithmSpec::Refined { failure_prob, .. } => Some(*failure_prob),
        AlgorithmSpec::Mle { failure_prob, .. } => *failure_prob,
        AlgorithmSpec::FixedBudget { .. } => None,
    };
    let delta = failure_prob.or(configured_prob).unwrap_or(0.1);
    if !(delta > 0.0 && delta < 1.0) {
        return Err(missing("failure_prob", "must lie in (0, 1)"));
    }
    let pool = rayon::ThreadPoolBuilder::new().num_threads(workers).build()?;
    pool.install(|| {
        if which.ftpl_regret {
            return audit::ftpl_regret(&cfg.build_class()?, rounds, delta, cfg.trials, cfg.seed);
        }
        let instance = Instance::from_config(cfg)?;
        if which.lemma1 {
            let configured_budget = match &cfg.algorithm {
                AlgorithmSpec::FixedBudget { budget } => Some(*budget),
                AlgorithmSpec::Mle { budget, .. } => *budget,
                _ => None,
            };
            let budget = budget.or(configured_budget).ok_or_else(|| missing("budget", "the lemma1 audit needs --budget"))?;
            audit::lemma1(&instance, cfg.noise, budget, delta, cfg.trials, cfg.seed)
        } else {
            let AlgorithmSpec::FixedConfidence { max_rounds, phi_source, .. } = &cfg.algorithm else {
                return Err(missing("algorithm.name", "the lemma3 audit needs a fixed-confidence algorithm"));
            };
            audit::lemma3(&instance, cfg.noise, delta, &cfg.disagreement, *phi_source, *max_rounds, cfg.trials, cfg.seed)
        }
    })
}

fn execute(cli: Cli) -> Result<()> {
    match cli.command {
        Command::Run(common) => {
            let cfg = load(&common)?;
            let summary = harness::run_experiment(&cfg, common.workers, cfg.output.dir.as_deref())?;
            print_json(&summary)
        }
        Command::Complexity(common) => complexity(&common),
        Command::Audit { common, which, budget, failure_prob, rounds } => {
            let cfg = load(&common)?;
            let report = run_audit(&cfg, &which, budget, failure_prob, rounds, common.workers)?;
            if let Some(dir) = &cfg.output.dir {
                write_json(dir, &format!("audit-{}.json", report.audit), &report)?;
            }
            print_json(&report)
        }
        Command::Sweep(common) => {
            let cfg = load(&common)?;
            let summaries = harness::run_sweep(&cfg, common.workers, cfg.output.dir.as_deref())?;
            print_json(&summaries)
        }
    }
}

fn main() -> ExitCode {
    match execute(Cli::parse()) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::FAILURE
        }
    }
}

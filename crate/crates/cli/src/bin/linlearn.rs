//! Command-line harness for learning sparse linear functions over prime
//! fields from noisy examples.
//!
//! Every run is pinned by an experiment config (TOML file via --config,
//! with any key overridable by flag, or flags alone).  Exit codes:
//! 0 success, 1 verification mismatch, 2 usage/content error, 3 budget
//! exceeded.

use std::path::PathBuf;
use std::process::ExitCode;

use anyhow::{bail, Context};
use clap::{Args, Parser, Subcommand};
use linlearn_cli::commands;
use linlearn_cli::config::{
    ApproximatorConfig, ExperimentConfig, GammaConfig, InstanceConfig, NoiseConfig,
};

#[derive(Parser)]
#[command(
    name = "linlearn",
    about = "Learn sparse linear functions over F_q from noisy examples",
    version
)]
struct Cli {
    /// Experiment config file (TOML); flags override its keys.
    #[arg(long, global = true)]
    config: Option<PathBuf>,

    #[command(flatten)]
    overrides: Overrides,

    #[command(subcommand)]
    cmd: Cmd,
}

/// Flag mirrors of the config keys.
#[derive(Args)]
struct Overrides {
    #[arg(long, global = true)]
    q: Option<u64>,
    #[arg(long, global = true)]
    n: Option<usize>,
    #[arg(long, global = true)]
    seed: Option<u64>,
    #[arg(long, global = true)]
    seed_label: Option<String>,
    /// γ family: affine, power, or table (table points only via config file).
    #[arg(long, global = true)]
    gamma_kind: Option<String>,
    #[arg(long, global = true)]
    gamma_factor: Option<f64>,
    #[arg(long, global = true)]
    gamma_exponent: Option<f64>,
    /// cheat-exact | cheat-midpoint | cheat-low-edge | cheat-high-edge |
    /// cheat-uniform | brute-force
    #[arg(long, global = true)]
    approximator: Option<String>,
    #[arg(long, global = true)]
    eta: Option<f64>,
    #[arg(long, global = true)]
    eta_bound: Option<f64>,
    #[arg(long, global = true)]
    sweep: Option<bool>,
    #[arg(long, global = true)]
    grid_steps: Option<u64>,
    /// psi | distinguisher
    #[arg(long, global = true)]
    identify: Option<String>,
    /// psi-coeff | gauss-coeff
    #[arg(long, global = true)]
    coeff: Option<String>,
    #[arg(long, global = true)]
    dist_trials: Option<u64>,
    /// Sparsity-class floor promised to the learner.
    #[arg(long, global = true)]
    m: Option<usize>,
    #[arg(long, global = true)]
    fast_mode: Option<bool>,
    #[arg(long, global = true)]
    delta: Option<f64>,
    #[arg(long, global = true)]
    max_examples: Option<u64>,
    #[arg(long, global = true)]
    max_seconds: Option<f64>,
    #[arg(long, global = true)]
    max_trials_per_d: Option<u64>,
    /// Planted sparsity for generated instances.
    #[arg(long, global = true)]
    d: Option<usize>,
    #[arg(long, global = true)]
    challenge: Option<bool>,
    #[arg(long, global = true)]
    prefetch: Option<u64>,
}

#[derive(Subcommand)]
enum Cmd {
    /// Write an instance file (and a .sealed open sibling for challenges).
    Gen {
        /// Output path (default: [output] instance from the config).
        #[arg(long)]
        instance: Option<PathBuf>,
    },
    /// Build the conditioned Ψ table and write it as JSON.
    PsiTable {
        /// Output path (default: [output] table from the config).
        #[arg(long)]
        table: Option<PathBuf>,
    },
    /// Classify every variable of an instance's target (relevance report).
    Reduce {
        /// Instance file to read.
        #[arg(long)]
        instance: PathBuf,
        /// Output path (default: [output] report from the config).
        #[arg(long)]
        report: Option<PathBuf>,
    },
    /// Run the configured learner; append one JSONL record.
    Learn {
        /// Instance file to read.
        #[arg(long)]
        instance: PathBuf,
        /// Results file to append to (default: [output] results).
        #[arg(long)]
        results: Option<PathBuf>,
    },
    /// Compare the newest result record against a disclosed target.
    Verify {
        /// Results file (JSONL) holding the record to check.
        #[arg(long)]
        results: PathBuf,
        /// Open instance (or .sealed sibling of a challenge).
        #[arg(long)]
        instance: PathBuf,
    },
    /// One learning run per seed; one CSV row per run.
    Bench {
        /// Seeds: a range "0-19" or a comma list "3,5,8".
        #[arg(long)]
        seeds: String,
        /// Output path (default: [output] csv from the config).
        #[arg(long)]
        csv: Option<PathBuf>,
    },
}

/// Config from file and/or flags; flags win key by key.
fn resolve_config(cli: &Cli) -> anyhow::Result<ExperimentConfig> {
    let o = &cli.overrides;
    let mut cfg = match &cli.config {
        Some(path) => ExperimentConfig::load(path)?,
        None => {
            // Flag-only mode: the essentials must all be present.
            let q = o.q.context("--q (or --config)")?;
            let n = o.n.context("--n (or --config)")?;
            let kind = o.gamma_kind.clone().context("--gamma-kind (or --config)")?;
            ExperimentConfig {
                q,
                n,
                seed: o.seed.context("--seed (or --config)")?,
                seed_label: "experiment".into(),
                gamma: GammaConfig {
                    kind,
                    factor: o.gamma_factor,
                    exponent: o.gamma_exponent,
                    points: None,
                },
                approximator: ApproximatorConfig {
                    name: o.approximator.clone().context("--approximator (or --config)")?,
                },
                noise: NoiseConfig {
                    eta: o.eta.context("--eta (or --config)")?,
                    eta_bound: o.eta_bound.context("--eta-bound (or --config)")?,
                    sweep: false,
                    grid_steps: 1,
                },
                method: Default::default(),
                budget: Default::default(),
                instance: InstanceConfig {
                    d: o.d.context("--d (or --config)")?,
                    challenge: false,
                    prefetch: 50_000,
                },
                output: Default::default(),
            }
        }
    };

    if let Some(v) = o.q {
        cfg.q = v;
    }
    if let Some(v) = o.n {
        cfg.n = v;
    }
    if let Some(v) = o.seed {
        cfg.seed = v;
    }
    if let Some(v) = &o.seed_label {
        cfg.seed_label = v.clone();
    }
    if let Some(v) = &o.gamma_kind {
        cfg.gamma.kind = v.clone();
    }
    if let Some(v) = o.gamma_factor {
        cfg.gamma.factor = Some(v);
    }
    if let Some(v) = o.gamma_exponent {
        cfg.gamma.exponent = Some(v);
    }
    if let Some(v) = &o.approximator {
        cfg.approximator.name = v.clone();
    }
    if let Some(v) = o.eta {
        cfg.noise.eta = v;
    }
    if let Some(v) = o.eta_bound {
        cfg.noise.eta_bound = v;
    }
    if let Some(v) = o.sweep {
        cfg.noise.sweep = v;
    }
    if let Some(v) = o.grid_steps {
        cfg.noise.grid_steps = v;
    }
    if let Some(v) = &o.identify {
        cfg.method.identify = v.clone();
    }
    if let Some(v) = &o.coeff {
        cfg.method.coeff = v.clone();
    }
    if let Some(v) = o.dist_trials {
        cfg.method.dist_trials = Some(v);
    }
    if let Some(v) = o.m {
        cfg.method.m = Some(v);
    }
    if let Some(v) = o.fast_mode {
        cfg.method.fast_mode = v;
    }
    if let Some(v) = o.delta {
        cfg.budget.delta = v;
    }
    if let Some(v) = o.max_examples {
        cfg.budget.max_examples = Some(v);
    }
    if let Some(v) = o.max_seconds {
        cfg.budget.max_seconds = Some(v);
    }
    if let Some(v) = o.max_trials_per_d {
        cfg.budget.max_trials_per_d = Some(v);
    }
    if let Some(v) = o.d {
        cfg.instance.d = v;
    }
    if let Some(v) = o.challenge {
        cfg.instance.challenge = v;
    }
    if let Some(v) = o.prefetch {
        cfg.instance.prefetch = v;
    }
    cfg.validate()?;
    Ok(cfg)
}

/// "0-19" → 0..=19; "3,5,8" → the list; "7" → [7].
fn parse_seeds(s: &str) -> anyhow::Result<Vec<u64>> {
    if let Some((lo, hi)) = s.split_once('-') {
        let lo: u64 = lo.trim().parse().context("seed range start")?;
        let hi: u64 = hi.trim().parse().context("seed range end")?;
        if hi < lo {
            bail!("empty seed range {s}");
        }
        return Ok((lo..=hi).collect());
    }
    s.split(',')
        .map(|t| t.trim().parse::<u64>().with_context(|| format!("seed `{t}`")))
        .collect()
}

fn run(cli: &Cli) -> anyhow::Result<i32> {
    match &cli.cmd {
        Cmd::Verify { results, instance } => commands::verify(results, instance),
        Cmd::Gen { instance } => {
            let cfg = resolve_config(cli)?;
            commands::gen(&cfg, instance.as_deref())
        }
        Cmd::PsiTable { table } => {
            let cfg = resolve_config(cli)?;
            commands::psi_table(&cfg, table.as_deref())
        }
        Cmd::Reduce { instance, report } => {
            let cfg = resolve_config(cli)?;
            commands::reduce(&cfg, instance, report.as_deref())
        }
        Cmd::Learn { instance, results } => {
            let cfg = resolve_config(cli)?;
            commands::learn(&cfg, instance, results.as_deref())
        }
        Cmd::Bench { seeds, csv } => {
            let cfg = resolve_config(cli)?;
            commands::bench(&cfg, &parse_seeds(seeds)?, csv.as_deref())
        }
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(&cli) {
        Ok(code) => ExitCode::from(code as u8),
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(commands::exit_code_for(&e) as u8)
        }
    }
}

//! Subcommand implementations.
//!
//! Each command takes a loaded [`ExperimentConfig`] plus resolved paths
//! and returns the process exit code: 0 success, 1 verification
//! mismatch, 2 usage/content error (surfaced as an `Err`), 3 budget
//! exceeded.  All file writes go through a temp-file + rename so a
//! crashed run never leaves a half-written artifact.

use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};
use std::time::Instant;

use anyhow::{bail, Context};
use linlearn::approx::default_delta_prime;
use linlearn::linmodel::{Instance, Transform};
use linlearn::psi::{build_psi_table, find_gap_k};
use linlearn::sparse_reduction::{
    classify_variables_psi, identify_relevant_distinguisher, learn_sparse_k, IdentifyMethod,
};
use linlearn::{full_learner, seed, Error, ExampleOracle, LinearFn};
use rand::rngs::StdRng;
use rand::SeedableRng;
use serde::{Deserialize, Serialize};

use crate::config::ExperimentConfig;

/// One line of the learn command's JSONL output.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunRecord {
    pub config_hash: String,
    pub seed: u64,
    /// Recovered coefficients; absent when the run failed.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub coeffs: Option<Vec<u64>>,
    pub examples_used: u64,
    pub wall_ms: u64,
    /// Whether coeffs match the planted target; absent for challenge
    /// instances (nothing to compare against).
    #[serde(skip_serializing_if = "Option::is_none")]
    pub success: Option<bool>,
    /// Why the run produced no coefficients.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub error: Option<String>,
}

fn write_atomic(path: &Path, contents: &str) -> anyhow::Result<()> {
    let dir = path.parent().filter(|p| !p.as_os_str().is_empty());
    if let Some(dir) = dir {
        fs::create_dir_all(dir).with_context(|| format!("creating {}", dir.display()))?;
    }
    let tmp = path.with_extension("tmp");
    fs::write(&tmp, contents).with_context(|| format!("writing {}", tmp.display()))?;
    fs::rename(&tmp, path).with_context(|| format!("renaming into {}", path.display()))?;
    Ok(())
}

fn append_line(path: &Path, line: &str) -> anyhow::Result<()> {
    if let Some(dir) = path.parent().filter(|p| !p.as_os_str().is_empty()) {
        fs::create_dir_all(dir)?;
    }
    let mut f = fs::OpenOptions::new().create(true).append(true).open(path)?;
    writeln!(f, "{line}")?;
    Ok(())
}

fn required<'a>(opt: &'a Option<String>, flag: &str, key: &str) -> anyhow::Result<&'a Path> {
    match opt {
        Some(p) => Ok(Path::new(p)),
        None => bail!("no path for {key}: pass {flag} or set [output] {key} in the config"),
    }
}

/// The instance a config generates, fully determined by the config.
fn planted_instance(cfg: &ExperimentConfig) -> anyhow::Result<Instance> {
    let ctx = linlearn::FieldCtx::new(cfg.q)?;
    let master = cfg.effective_seed();
    let mut trng =
        StdRng::seed_from_u64(seed::derive(master, "gen-target", cfg.instance.d as u64));
    let f = linlearn::linmodel::sample_sparse_linear(ctx, cfg.n, cfg.instance.d, &mut trng)?;
    let stream_seed = seed::derive(master, "gen-stream", 0);
    if cfg.instance.challenge {
        let mut oracle =
            ExampleOracle::planted(f, cfg.noise.eta, cfg.noise.eta_bound, stream_seed)?;
        let examples = (0..cfg.instance.prefetch)
            .map(|_| oracle.next_example())
            .collect::<linlearn::Result<Vec<_>>>()?;
        Ok(Instance::challenge(
            ctx,
            cfg.n,
            examples,
            cfg.noise.eta,
            cfg.noise.eta_bound,
            stream_seed,
        ))
    } else {
        Ok(Instance::open(
            ctx,
            f,
            cfg.noise.eta,
            cfg.noise.eta_bound,
            stream_seed,
        ))
    }
}

/// Open instance paired with a generated challenge so `verify` can hold
/// recovered coefficients against the withheld truth.
fn sealed_path(instance_path: &Path) -> PathBuf {
    let mut os = instance_path.as_os_str().to_owned();
    os.push(".sealed");
    PathBuf::from(os)
}

/// gen: write the configured instance file.  For challenges, the open
/// version (coefficient line included) goes to a `.sealed` sibling, the
/// only place the truth is recorded.
pub fn gen(cfg: &ExperimentConfig, instance_path: Option<&Path>) -> anyhow::Result<i32> {
    let path = match instance_path {
        Some(p) => p.to_path_buf(),
        None => required(&cfg.output.instance, "--instance", "instance")?.to_path_buf(),
    };
    let inst = planted_instance(cfg)?;
    write_atomic(&path, &inst.print())?;
    if cfg.instance.challenge {
        let mut open_cfg = cfg.clone();
        open_cfg.instance.challenge = false;
        let sealed = planted_instance(&open_cfg)?;
        write_atomic(&sealed_path(&path), &sealed.print())?;
    }
    println!("wrote {}", path.display());
    Ok(0)
}

/// Oracle for a parsed instance, magnified up to η_b when the recorded
/// rate is lower (every learner below is calibrated at exactly η_b).
/// Sweep mode skips the magnification — the sweep magnifies per grid
/// point itself.
fn learning_oracle(cfg: &ExperimentConfig, inst: &Instance) -> anyhow::Result<ExampleOracle> {
    let mut oracle = inst.to_oracle()?;
    if !cfg.noise.sweep && inst.eta < inst.eta_bound {
        oracle.push_transform(Transform::magnify(oracle.ctx(), inst.eta, inst.eta_bound)?)?;
    }
    Ok(oracle)
}

/// psi-table: build the conditioned table for the configured
/// approximator over dimension n and write it as JSON.
pub fn psi_table(cfg: &ExperimentConfig, table_path: Option<&Path>) -> anyhow::Result<i32> {
    let path = match table_path {
        Some(p) => p.to_path_buf(),
        None => required(&cfg.output.table, "--table", "table")?.to_path_buf(),
    };
    let ctx = linlearn::FieldCtx::new(cfg.q)?;
    let gamma = cfg.gamma.build(cfg.n)?;
    let master = cfg.effective_seed();
    let mut budget = cfg.budget.build(cfg.method.fast_mode);
    budget.start();
    let h = 1.0 / (16.0 * cfg.n as f64);
    let mut approx = cfg.approximator.build()?.build_for_tables(
        &gamma,
        default_delta_prime(cfg.q, cfg.n),
        cfg.noise.eta_bound,
        seed::derive(master, "cli-table-approx", 0),
        cfg.n,
    );
    let (table, stats) = build_psi_table(
        &mut approx,
        &gamma,
        ctx,
        cfg.n,
        cfg.noise.eta_bound,
        h,
        cfg.budget.delta,
        seed::derive(master, "cli-table", 0),
        &budget,
    )?;
    write_atomic(&path, &table.to_json())?;
    println!(
        "wrote {} ({} entries, {} accepted / {} attempts{}{})",
        path.display(),
        cfg.n,
        stats.accepted,
        stats.attempts,
        if stats.fast_mode { ", fast" } else { "" },
        if stats.capped { ", capped" } else { "" },
    );
    Ok(0)
}

/// reduce: classify every variable of the instance's target and write
/// the relevance report as JSON.
pub fn reduce(
    cfg: &ExperimentConfig,
    instance_path: &Path,
    report_path: Option<&Path>,
) -> anyhow::Result<i32> {
    let out = match report_path {
        Some(p) => p.to_path_buf(),
        None => required(&cfg.output.report, "--report", "report")?.to_path_buf(),
    };
    let inst = Instance::parse(&fs::read_to_string(instance_path)?)?;
    if inst.ctx.q() != cfg.q || inst.n != cfg.n {
        bail!(
            "instance is q={} n={}, config says q={} n={}",
            inst.ctx.q(),
            inst.n,
            cfg.q,
            cfg.n
        );
    }
    let gamma = cfg.gamma.build(cfg.n)?;
    let master = cfg.effective_seed();
    let mut budget = cfg.budget.build(cfg.method.fast_mode);
    budget.start();
    let mut oracle = learning_oracle(cfg, &inst)?;
    let dp = default_delta_prime(cfg.q, cfg.n);
    let delta = cfg.budget.delta;
    let m = cfg.promise_m();
    let spec = cfg.approximator.build()?;

    let report = match cfg.method.build()?.identify {
        IdentifyMethod::Psi => {
            let mut ta = spec.build_for_tables(
                &gamma,
                dp,
                oracle.eta_bound(),
                seed::derive(master, "cli-reduce-table-approx", 0),
                cfg.n,
            );
            let (table, _) = build_psi_table(
                &mut ta,
                &gamma,
                inst.ctx,
                cfg.n,
                oracle.eta_bound(),
                1.0 / (16.0 * cfg.n as f64),
                delta / 2.0,
                seed::derive(master, "cli-reduce-table", 0),
                &budget,
            )?;
            let k = find_gap_k(&table, &gamma, m, cfg.q == 2)?;
            let mut ca = spec.build_for_tables(
                &gamma,
                dp,
                oracle.eta_bound(),
                seed::derive(master, "cli-reduce-approx", 0),
                cfg.n,
            );
            classify_variables_psi(
                &mut ca,
                &table,
                k,
                &mut oracle,
                delta / 2.0,
                seed::derive(master, "cli-reduce", 0),
                &budget,
            )?
        }
        IdentifyMethod::Distinguisher => {
            let mut da = spec.build(
                &gamma,
                dp,
                oracle.eta_bound(),
                seed::derive(master, "cli-reduce-approx", 0),
            );
            identify_relevant_distinguisher(
                &mut da,
                &gamma,
                &mut oracle,
                m,
                cfg.method.dist_trials.unwrap_or(25),
                seed::derive(master, "cli-reduce", 0),
                &budget,
            )?
        }
    };
    write_atomic(&out, &report.to_json())?;
    println!(
        "wrote {} ({} relevant, {} undecided)",
        out.display(),
        report.relevant_indices().len(),
        report.undecided_count()
    );
    Ok(0)
}

/// One learning run on an already-parsed instance; shared by learn and
/// bench.  Returns the record (never an Err for learner-level failures —
/// those are recorded) plus the exit code.
fn run_learner(cfg: &ExperimentConfig, inst: &Instance) -> anyhow::Result<(RunRecord, i32)> {
    let gamma = cfg.gamma.build(cfg.n)?;
    let master = cfg.effective_seed();
    let mut budget = cfg.budget.build(cfg.method.fast_mode);
    budget.start();
    let mut oracle = learning_oracle(cfg, inst)?;
    let method = cfg.method.build()?;
    let spec = cfg.approximator.build()?;
    let delta = cfg.budget.delta;
    let started = Instant::now();

    let learned: linlearn::Result<LinearFn> = if cfg.noise.sweep {
        let m = cfg.promise_m();
        full_learner::eta_sweep(
            |o: &mut ExampleOracle, j: u64| {
                learn_sparse_k(
                    &spec,
                    &gamma,
                    m,
                    o,
                    method,
                    delta,
                    seed::derive(master, "cli-sweep-run", j),
                    &budget,
                )
            },
            &mut oracle,
            cfg.noise.grid_steps,
            delta,
            &budget,
        )
    } else if cfg.method.m.is_some() || inst.target().is_some() {
        learn_sparse_k(
            &spec,
            &gamma,
            cfg.promise_m(),
            &mut oracle,
            method,
            delta,
            seed::derive(master, "cli-learn", 0),
            &budget,
        )
    } else {
        full_learner::learn_parity_full(
            &spec,
            &gamma,
            &mut oracle,
            method,
            delta,
            seed::derive(master, "cli-learn", 0),
            &budget,
        )
    };

    let wall_ms = started.elapsed().as_millis() as u64;
    let examples_used = oracle.draws();
    let (record, code) = match learned {
        Ok(g) => (
            RunRecord {
                config_hash: cfg.hash(),
                seed: cfg.seed,
                success: inst.target().map(|t| *t == g),
                coeffs: Some(g.coeffs().to_vec()),
                examples_used,
                wall_ms,
                error: None,
            },
            0,
        ),
        Err(e) => {
            let code = if matches!(e, Error::BudgetExceeded(_)) { 3 } else { 2 };
            (
                RunRecord {
                    config_hash: cfg.hash(),
                    seed: cfg.seed,
                    coeffs: None,
                    examples_used,
                    wall_ms,
                    success: inst.target().map(|_| false),
                    error: Some(e.to_string()),
                },
                code,
            )
        }
    };
    Ok((record, code))
}

/// learn: run the configured learner against an instance file and append
/// one JSONL record to the results file.
pub fn learn(
    cfg: &ExperimentConfig,
    instance_path: &Path,
    results_path: Option<&Path>,
) -> anyhow::Result<i32> {
    let out = match results_path {
        Some(p) => p.to_path_buf(),
        None => required(&cfg.output.results, "--results", "results")?.to_path_buf(),
    };
    let inst = Instance::parse(&fs::read_to_string(instance_path)?)?;
    if inst.ctx.q() != cfg.q || inst.n != cfg.n {
        bail!(
            "instance is q={} n={}, config says q={} n={}",
            inst.ctx.q(),
            inst.n,
            cfg.q,
            cfg.n
        );
    }
    let (record, code) = run_learner(cfg, &inst)?;
    append_line(&out, &serde_json::to_string(&record)?)?;
    match (&record.coeffs, &record.error) {
        (Some(c), _) => println!("learned {c:?} in {} examples", record.examples_used),
        (None, Some(e)) => println!("run failed: {e}"),
        _ => {}
    }
    Ok(code)
}

/// verify: compare the newest result record against an instance's
/// disclosed target.  Exit 0 on exact match, 1 on mismatch or a failed
/// run, error (→ 2) when either file is unusable.
pub fn verify(results_path: &Path, instance_path: &Path) -> anyhow::Result<i32> {
    let inst = Instance::parse(&fs::read_to_string(instance_path)?)?;
    let Some(target) = inst.target() else {
        bail!(
            "{} withholds its target; verify against the .sealed sibling",
            instance_path.display()
        );
    };
    let text = fs::read_to_string(results_path)?;
    let last = text
        .lines()
        .filter(|l| !l.trim().is_empty())
        .last()
        .with_context(|| format!("{} has no records", results_path.display()))?;
    let record: RunRecord = serde_json::from_str(last).context("result record parse")?;
    match record.coeffs {
        Some(ref c) if c == target.coeffs() => {
            println!("verified: coefficients match");
            Ok(0)
        }
        Some(ref c) => {
            println!("mismatch: learned {c:?}, planted {:?}", target.coeffs());
            Ok(1)
        }
        None => {
            println!("mismatch: run recorded no coefficients");
            Ok(1)
        }
    }
}

/// bench: one learning run per seed, one CSV row per run, rows in seed
/// order.  A budget error aborts the sweep; whatever rows exist are
/// written with a trailing `# truncated` marker.
pub fn bench(cfg: &ExperimentConfig, seeds: &[u64], csv_path: Option<&Path>) -> anyhow::Result<i32> {
    let out = match csv_path {
        Some(p) => p.to_path_buf(),
        None => required(&cfg.output.csv, "--csv", "csv")?.to_path_buf(),
    };
    let mut rows = String::from(
        "q,n,d,gamma,approximator,method,eta,eta_bound,seed,examples_used,wall_ms,success\n",
    );
    let mut truncated = false;
    let mut code = 0;
    let mut written = 0usize;
    for &s in seeds {
        let mut run_cfg = cfg.clone();
        run_cfg.seed = s;
        let inst = planted_instance(&run_cfg)?;
        let (record, c) = run_learner(&run_cfg, &inst)?;
        written += 1;
        rows.push_str(&format!(
            "{},{},{},{},{},{},{},{},{},{},{},{}\n",
            run_cfg.q,
            run_cfg.n,
            run_cfg.instance.d,
            run_cfg.gamma.short(),
            run_cfg.approximator.name,
            run_cfg.descriptor_method(),
            run_cfg.noise.eta,
            run_cfg.noise.eta_bound,
            s,
            record.examples_used,
            record.wall_ms,
            record.success.map_or(String::new(), |b| b.to_string()),
        ));
        if c == 3 {
            truncated = true;
            code = 3;
            break;
        }
    }
    if truncated {
        rows.push_str("# truncated\n");
    }
    write_atomic(&out, &rows)?;
    println!("wrote {} ({written} rows)", out.display());
    Ok(code)
}

/// Map a learner error to the documented exit code (used by main).
pub fn exit_code_for(err: &anyhow::Error) -> i32 {
    if let Some(Error::BudgetExceeded(_)) = err.downcast_ref::<Error>() {
        3
    } else {
        2
    }
}

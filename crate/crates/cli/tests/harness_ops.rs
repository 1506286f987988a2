//! End-to-end checks of the command-line harness: every subcommand is
//! exercised through the compiled binary, against config files in
//! temporary directories, so argument parsing, file formats, and exit
//! codes are all pinned together.

use std::fs;
use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use tempfile::TempDir;

fn bin() -> Command {
    Command::new(env!("CARGO_BIN_EXE_linlearn"))
}

/// A small open-instance experiment that learns in well under a second.
const FAST_OPEN: &str = r#"
q = 3
n = 9
seed = 11

[gamma]
kind = "affine"
factor = 1.2

[approximator]
name = "cheat-exact"

[noise]
eta = 0.1
eta_bound = 0.1

[method]
identify = "psi"
coeff = "gauss-coeff"
m = 2
fast_mode = true

[budget]
delta = 0.05

[instance]
d = 2
"#;

fn write_cfg(dir: &TempDir, name: &str, body: &str) -> PathBuf {
    let path = dir.path().join(name);
    fs::write(&path, body).unwrap();
    path
}

fn run(cmd: &mut Command) -> Output {
    let out = cmd.output().expect("spawn linlearn");
    out
}

fn assert_code(out: &Output, want: i32) {
    assert_eq!(
        out.status.code(),
        Some(want),
        "stdout:\n{}\nstderr:\n{}",
        String::from_utf8_lossy(&out.stdout),
        String::from_utf8_lossy(&out.stderr)
    );
}

fn gen_to(cfg: &Path, inst: &Path, extra: &[&str]) {
    let out = run(bin()
        .arg("--config")
        .arg(cfg)
        .args(extra)
        .arg("gen")
        .arg("--instance")
        .arg(inst));
    assert_code(&out, 0);
}

#[test]
fn gen_is_deterministic_and_seed_sensitive() {
    let dir = TempDir::new().unwrap();
    let cfg = write_cfg(&dir, "exp.toml", FAST_OPEN);
    let a = dir.path().join("a.txt");
    let b = dir.path().join("b.txt");
    let c = dir.path().join("c.txt");
    gen_to(&cfg, &a, &[]);
    gen_to(&cfg, &b, &[]);
    gen_to(&cfg, &c, &["--seed", "12"]);
    let ta = fs::read(&a).unwrap();
    assert_eq!(ta, fs::read(&b).unwrap(), "same config must give identical bytes");
    assert_ne!(ta, fs::read(&c).unwrap(), "a reseeded run must plant afresh");
}

#[test]
fn zero_sparsity_plants_the_zero_function() {
    let dir = TempDir::new().unwrap();
    let cfg = write_cfg(&dir, "exp.toml", FAST_OPEN);
    let inst = dir.path().join("zero.txt");
    gen_to(&cfg, &inst, &["--d", "0"]);
    let text = fs::read_to_string(&inst).unwrap();
    let coeff_line = text.lines().nth(1).unwrap();
    assert!(
        coeff_line.split_whitespace().all(|t| t == "0"),
        "d = 0 must plant all-zero coefficients, got `{coeff_line}`"
    );
}

#[test]
fn challenge_files_withhold_the_target_and_seal_it() {
    let dir = TempDir::new().unwrap();
    let cfg = write_cfg(&dir, "exp.toml", FAST_OPEN);
    let open = dir.path().join("open.txt");
    let chal = dir.path().join("chal.txt");
    gen_to(&cfg, &open, &[]);
    gen_to(&cfg, &chal, &["--challenge", "true", "--prefetch", "64"]);

    let text = fs::read_to_string(&chal).unwrap();
    let mut lines = text.lines();
    let header = lines.next().unwrap();
    assert_eq!(header.split_whitespace().count(), 5);
    let body: Vec<&str> = lines.filter(|l| !l.trim().is_empty()).collect();
    assert_eq!(body.len(), 64, "one line per prefetched example");
    for line in &body {
        assert_eq!(
            line.split_whitespace().count(),
            10,
            "challenge lines carry a point and a label, never coefficients"
        );
    }

    // The sealed sibling is the open form of the same instance: same
    // header, and the same planted coefficients the open run wrote.
    let sealed = fs::read_to_string(dir.path().join("chal.txt.sealed")).unwrap();
    let open_text = fs::read_to_string(&open).unwrap();
    assert_eq!(sealed, open_text);

    // Verifying against the challenge file itself is a usage error: the
    // target is withheld there by construction.
    let results = dir.path().join("r.jsonl");
    fs::write(&results, "{\"coeffs\":[0,0,0,0,0,0,0,0,0]}\n").unwrap();
    let out = run(bin()
        .arg("verify")
        .arg("--results")
        .arg(&results)
        .arg("--instance")
        .arg(&chal));
    assert_code(&out, 2);
    assert!(String::from_utf8_lossy(&out.stderr).contains("sealed"));
}

#[test]
fn learn_appends_records_and_verify_splits_match_from_mismatch() {
    let dir = TempDir::new().unwrap();
    let cfg = write_cfg(&dir, "exp.toml", FAST_OPEN);
    let inst = dir.path().join("inst.txt");
    let other = dir.path().join("other.txt");
    let results = dir.path().join("results.jsonl");
    gen_to(&cfg, &inst, &[]);
    gen_to(&cfg, &other, &["--seed", "77"]);

    for _ in 0..2 {
        let out = run(bin()
            .arg("--config")
            .arg(&cfg)
            .arg("learn")
            .arg("--instance")
            .arg(&inst)
            .arg("--results")
            .arg(&results));
        assert_code(&out, 0);
    }
    let text = fs::read_to_string(&results).unwrap();
    let lines: Vec<&str> = text.lines().collect();
    assert_eq!(lines.len(), 2, "each run appends exactly one record");
    for line in &lines {
        let rec: serde_json::Value = serde_json::from_str(line).unwrap();
        assert_eq!(rec["success"], serde_json::Value::Bool(true));
        assert!(rec["coeffs"].is_array());
        assert!(rec["examples_used"].as_u64().unwrap() > 0);
        assert!(rec["config_hash"].as_str().unwrap().len() == 64);
    }

    let ok = run(bin()
        .arg("verify")
        .arg("--results")
        .arg(&results)
        .arg("--instance")
        .arg(&inst));
    assert_code(&ok, 0);
    let bad = run(bin()
        .arg("verify")
        .arg("--results")
        .arg(&results)
        .arg("--instance")
        .arg(&other));
    assert_code(&bad, 1);
}

#[test]
fn challenge_records_omit_the_success_flag() {
    let dir = TempDir::new().unwrap();
    // Honest approximator so a withheld target is actually learnable.
    let cfg = write_cfg(
        &dir,
        "exp.toml",
        r#"
q = 2
n = 6
seed = 5

[gamma]
kind = "affine"
factor = 1.1

[approximator]
name = "brute-force"

[noise]
eta = 0.1
eta_bound = 0.1

[method]
identify = "distinguisher"
coeff = "gauss-coeff"
m = 1

[budget]
delta = 0.05
max_trials_per_d = 8

[instance]
d = 1
challenge = true
prefetch = 30000
"#,
    );
    let inst = dir.path().join("chal.txt");
    let results = dir.path().join("results.jsonl");
    gen_to(&cfg, &inst, &[]);
    let out = run(bin()
        .arg("--config")
        .arg(&cfg)
        .arg("learn")
        .arg("--instance")
        .arg(&inst)
        .arg("--results")
        .arg(&results));
    assert_code(&out, 0);
    let line = fs::read_to_string(&results).unwrap();
    let rec: serde_json::Value = serde_json::from_str(line.lines().next().unwrap()).unwrap();
    assert!(
        rec.get("success").is_none(),
        "no success flag without a disclosed target, got {rec}"
    );
    assert!(rec["coeffs"].is_array());

    // The sealed sibling is the ground truth the auditor checks against.
    let sealed = dir.path().join("chal.txt.sealed");
    let ok = run(bin()
        .arg("verify")
        .arg("--results")
        .arg(&results)
        .arg("--instance")
        .arg(&sealed));
    assert_code(&ok, 0);
}

#[test]
fn bench_rows_are_seed_ordered_and_replayable() {
    let dir = TempDir::new().unwrap();
    let cfg = write_cfg(&dir, "exp.toml", FAST_OPEN);
    let csv_a = dir.path().join("a.csv");
    let csv_b = dir.path().join("b.csv");
    for csv in [&csv_a, &csv_b] {
        let out = run(bin()
            .arg("--config")
            .arg(&cfg)
            .arg("bench")
            .arg("--seeds")
            .arg("0-2")
            .arg("--csv")
            .arg(csv));
        assert_code(&out, 0);
    }

    let text = fs::read_to_string(&csv_a).unwrap();
    let lines: Vec<&str> = text.lines().collect();
    assert_eq!(
        lines[0],
        "q,n,d,gamma,approximator,method,eta,eta_bound,seed,examples_used,wall_ms,success"
    );
    assert_eq!(lines.len(), 4, "header plus one row per seed");
    let seeds: Vec<&str> = lines[1..].iter().map(|l| l.split(',').nth(8).unwrap()).collect();
    assert_eq!(seeds, ["0", "1", "2"], "rows follow the requested seed order");
    for row in &lines[1..] {
        assert_eq!(row.split(',').last().unwrap(), "true");
    }

    // Identical runs must agree on everything except wall-clock time.
    let strip = |t: &str| -> Vec<String> {
        t.lines()
            .map(|l| {
                let cols: Vec<&str> = l.split(',').collect();
                cols.iter()
                    .enumerate()
                    .filter(|(i, _)| *i != 10)
                    .map(|(_, c)| c.to_string())
                    .collect::<Vec<_>>()
                    .join(",")
            })
            .collect()
    };
    assert_eq!(strip(&text), strip(&fs::read_to_string(&csv_b).unwrap()));
}

#[test]
fn comma_seed_lists_work_and_empty_ranges_do_not() {
    let dir = TempDir::new().unwrap();
    let cfg = write_cfg(&dir, "exp.toml", FAST_OPEN);
    let csv = dir.path().join("out.csv");
    let out = run(bin()
        .arg("--config")
        .arg(&cfg)
        .arg("bench")
        .arg("--seeds")
        .arg("9,4")
        .arg("--csv")
        .arg(&csv));
    assert_code(&out, 0);
    let text = fs::read_to_string(&csv).unwrap();
    let seeds: Vec<&str> = text
        .lines()
        .skip(1)
        .map(|l| l.split(',').nth(8).unwrap())
        .collect();
    assert_eq!(seeds, ["9", "4"]);

    let bad = run(bin()
        .arg("--config")
        .arg(&cfg)
        .arg("bench")
        .arg("--seeds")
        .arg("5-3")
        .arg("--csv")
        .arg(&csv));
    assert_code(&bad, 2);
}

#[test]
fn flag_only_mode_needs_every_essential() {
    let dir = TempDir::new().unwrap();
    let inst = dir.path().join("inst.txt");
    // Full flag set: no config file at all.
    let out = run(bin()
        .args([
            "--q", "3", "--n", "9", "--seed", "11", "--gamma-kind", "affine",
            "--gamma-factor", "1.2", "--approximator", "cheat-exact", "--eta", "0.1",
            "--eta-bound", "0.1", "--d", "2", "gen", "--instance",
        ])
        .arg(&inst));
    assert_code(&out, 0);

    // Flag-only gen must plant exactly what the equivalent config file does.
    let dir2 = TempDir::new().unwrap();
    let cfg = write_cfg(&dir2, "exp.toml", FAST_OPEN);
    let from_cfg = dir2.path().join("inst.txt");
    gen_to(&cfg, &from_cfg, &[]);
    assert_eq!(fs::read(&inst).unwrap(), fs::read(&from_cfg).unwrap());

    // Dropping one essential is a usage error naming the missing flag.
    let out = run(bin()
        .args([
            "--q", "3", "--n", "9", "--seed", "11", "--gamma-kind", "affine",
            "--gamma-factor", "1.2", "--approximator", "cheat-exact", "--eta", "0.1",
            "--eta-bound", "0.1", "gen",
        ])
        .arg("--instance")
        .arg(&inst));
    assert_code(&out, 2);
    assert!(String::from_utf8_lossy(&out.stderr).contains("--d"));
}

#[test]
fn usage_errors_exit_two() {
    let dir = TempDir::new().unwrap();
    let cfg = write_cfg(&dir, "exp.toml", FAST_OPEN);
    let inst = dir.path().join("inst.txt");
    gen_to(&cfg, &inst, &[]);

    // Unknown approximator name.
    let out = run(bin()
        .arg("--config")
        .arg(&cfg)
        .args(["--approximator", "oracle-of-delphi"])
        .arg("gen")
        .arg("--instance")
        .arg(dir.path().join("x.txt")));
    assert_code(&out, 2);

    // Config/instance dimension mismatch.
    let out = run(bin()
        .arg("--config")
        .arg(&cfg)
        .args(["--n", "16"])
        .arg("learn")
        .arg("--instance")
        .arg(&inst)
        .arg("--results")
        .arg(dir.path().join("r.jsonl")));
    assert_code(&out, 2);

    // Unknown key in the config file itself.
    let bad = write_cfg(&dir, "bad.toml", &format!("{FAST_OPEN}\nturbo = true\n"));
    let out = run(bin()
        .arg("--config")
        .arg(&bad)
        .arg("gen")
        .arg("--instance")
        .arg(dir.path().join("y.txt")));
    assert_code(&out, 2);
}

#[test]
fn exhausted_budgets_exit_three() {
    let dir = TempDir::new().unwrap();
    let cfg = write_cfg(&dir, "exp.toml", FAST_OPEN);
    let inst = dir.path().join("inst.txt");
    let results = dir.path().join("r.jsonl");
    gen_to(&cfg, &inst, &[]);
    let out = run(bin()
        .arg("--config")
        .arg(&cfg)
        .args(["--max-examples", "10"])
        .arg("learn")
        .arg("--instance")
        .arg(&inst)
        .arg("--results")
        .arg(&results));
    assert_code(&out, 3);
    // The aborted run still leaves an auditable record.
    let rec: serde_json::Value =
        serde_json::from_str(fs::read_to_string(&results).unwrap().lines().next().unwrap())
            .unwrap();
    assert!(rec["error"].as_str().unwrap().contains("budget"));
    assert_eq!(rec["success"], serde_json::Value::Bool(false));
}

#[test]
fn config_files_round_trip_through_their_canonical_form() {
    use linlearn_cli::config::ExperimentConfig;
    let cfg = ExperimentConfig::from_toml(FAST_OPEN).unwrap();
    let canon = cfg.canonical();
    let back = ExperimentConfig::from_toml(&canon).unwrap();
    assert_eq!(cfg, back);
    assert_eq!(cfg.hash(), back.hash());
    // Formatting quirks must not change the identity of an experiment.
    let spaced = FAST_OPEN.replace("q = 3", "q    = 3");
    assert_eq!(ExperimentConfig::from_toml(&spaced).unwrap().hash(), cfg.hash());
}

#[test]
fn reports_and_tables_land_at_config_paths() {
    let dir = TempDir::new().unwrap();
    let body = format!(
        "{FAST_OPEN}\n[output]\ninstance = \"inst.txt\"\ntable = \"table.json\"\nreport = \"report.json\"\n"
    );
    let cfg = write_cfg(&dir, "exp.toml", &body);
    // Output paths in the config are relative to the process, so run
    // from the temp dir itself.
    let out = run(bin().current_dir(dir.path()).arg("--config").arg(&cfg).arg("gen"));
    assert_code(&out, 0);
    let out = run(bin().current_dir(dir.path()).arg("--config").arg(&cfg).arg("psi-table"));
    assert_code(&out, 0);
    let out = run(bin()
        .current_dir(dir.path())
        .arg("--config")
        .arg(&cfg)
        .arg("reduce")
        .arg("--instance")
        .arg("inst.txt"));
    assert_code(&out, 0);

    let table: serde_json::Value =
        serde_json::from_str(&fs::read_to_string(dir.path().join("table.json")).unwrap()).unwrap();
    assert_eq!(table["n"].as_u64(), Some(9));
    assert_eq!(table["values"].as_array().unwrap().len(), 9);

    let report: serde_json::Value =
        serde_json::from_str(&fs::read_to_string(dir.path().join("report.json")).unwrap()).unwrap();
    let verdicts: Vec<&str> = report["verdicts"]
        .as_array()
        .unwrap()
        .iter()
        .map(|v| v.as_str().unwrap())
        .collect();
    assert_eq!(verdicts.iter().filter(|v| **v == "relevant").count(), 2);

    // The relevant set must be exactly the planted support.
    let inst = fs::read_to_string(dir.path().join("inst.txt")).unwrap();
    let coeffs: Vec<u64> = inst
        .lines()
        .nth(1)
        .unwrap()
        .split_whitespace()
        .map(|t| t.parse().unwrap())
        .collect();
    for (i, v) in verdicts.iter().enumerate() {
        assert_eq!(*v == "relevant", coeffs[i] != 0, "variable {i}");
    }
}

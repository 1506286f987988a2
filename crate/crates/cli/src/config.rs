//! Experiment configuration: one TOML file that pins everything a run
//! needs — field, dimension, γ, approximator, noise model, method,
//! budgets, seeds, and output paths — so any result record can be traced
//! back to a byte-exact description of how it was produced.
//!
//! The canonical printed form (stable key order, shortest-round-trip
//! floats) is what gets hashed; every output record carries the hash.

use std::fs;
use std::path::Path;
use std::time::Duration;

use anyhow::{bail, Context};
use linlearn::approx::ApproxSpec;
use linlearn::sparse_reduction::Method;
use linlearn::{Budget, GammaSpec};
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

/// γ as written in a config: a named family plus its parameters.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GammaConfig {
    /// "affine" (γ(x) = factor·x), "power" (γ(x) = x^exponent), or
    /// "table" (piecewise-linear through the given points).
    pub kind: String,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub factor: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub exponent: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub points: Option<Vec<[f64; 2]>>,
}

impl GammaConfig {
    /// Live γ capped at `n_cap` (the learner re-caps internally when it
    /// pads the stream to a larger dimension).
    pub fn build(&self, n_cap: usize) -> anyhow::Result<GammaSpec> {
        let spec = match self.kind.as_str() {
            "affine" => {
                let c = self.factor.context("gamma.kind = \"affine\" needs gamma.factor")?;
                GammaSpec::affine(c, n_cap)?
            }
            "power" => {
                let e = self.exponent.context("gamma.kind = \"power\" needs gamma.exponent")?;
                GammaSpec::power(e, n_cap)?
            }
            "table" => {
                let pts = self
                    .points
                    .as_ref()
                    .context("gamma.kind = \"table\" needs gamma.points")?;
                GammaSpec::table(pts.iter().map(|p| (p[0], p[1])).collect(), n_cap)?
            }
            other => bail!("unknown gamma.kind `{other}` (expected affine, power, or table)"),
        };
        Ok(spec)
    }

    /// Compact one-token form for CSV rows: "affine:2", "power:1.5",
    /// "table:4".
    pub fn short(&self) -> String {
        match self.kind.as_str() {
            "affine" => format!("affine:{}", self.factor.unwrap_or(f64::NAN)),
            "power" => format!("power:{}", self.exponent.unwrap_or(f64::NAN)),
            _ => format!("table:{}", self.points.as_ref().map_or(0, Vec::len)),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ApproximatorConfig {
    /// One of the [`ApproxSpec`] names: cheat-exact, cheat-midpoint,
    /// cheat-low-edge, cheat-high-edge, cheat-uniform, brute-force.
    pub name: String,
}

impl ApproximatorConfig {
    pub fn build(&self) -> anyhow::Result<ApproxSpec> {
        Ok(ApproxSpec::parse(&self.name)?)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct NoiseConfig {
    /// True corruption rate of generated streams.
    pub eta: f64,
    /// Known bound η_b the learner is calibrated for; η ≤ η_b < 1 − 1/q.
    pub eta_bound: f64,
    /// Learn without trusting η: sweep assumed rates over a grid and
    /// select among the runs' outputs.
    #[serde(default)]
    pub sweep: bool,
    /// Grid granularity for the sweep (points η_b·j/grid_steps,
    /// j = 1…grid_steps).
    #[serde(default = "default_grid_steps")]
    pub grid_steps: u64,
}

fn default_grid_steps() -> u64 {
    1
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct MethodConfig {
    /// "psi" (Ψ-band classification) or "distinguisher" (coordinate
    /// re-randomization probes).
    #[serde(default = "default_identify")]
    pub identify: String,
    /// "psi-coeff" (Ψ-band coefficient matching) or "gauss-coeff"
    /// (restricted Gaussian elimination + selection).
    #[serde(default = "default_coeff")]
    pub coeff: String,
    /// Majority-vote trials per distinguisher probe.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub dist_trials: Option<u64>,
    /// Sparsity-class floor m promised to the learner.  Defaults to the
    /// planted sparsity for open instances; required for challenges.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub m: Option<usize>,
    /// Cap conditioned-table trials at one per sparsity even for
    /// stochastic approximators (deterministic ones collapse on their
    /// own).  Entries then carry more Monte-Carlo error than h promises.
    #[serde(default)]
    pub fast_mode: bool,
}

fn default_identify() -> String {
    "psi".into()
}

fn default_coeff() -> String {
    "gauss-coeff".into()
}

impl MethodConfig {
    pub fn build(&self) -> anyhow::Result<Method> {
        let mut m = Method::parse(&format!("{}+{}", self.identify, self.coeff))?;
        if let Some(t) = self.dist_trials {
            m.dist_trials = t;
        }
        Ok(m)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct BudgetConfig {
    /// Overall failure-probability budget δ for learning commands.
    #[serde(default = "default_delta")]
    pub delta: f64,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub max_examples: Option<u64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub max_seconds: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub max_trials_per_d: Option<u64>,
}

fn default_delta() -> f64 {
    0.05
}

impl BudgetConfig {
    pub fn build(&self, fast_mode: bool) -> Budget {
        let mut b = Budget::unlimited();
        if let Some(cap) = self.max_examples {
            b = b.with_examples(cap);
        }
        if let Some(secs) = self.max_seconds {
            b = b.with_wall(Duration::from_secs_f64(secs));
        }
        let trial_cap = match (self.max_trials_per_d, fast_mode) {
            (Some(cap), true) => Some(cap.min(1)),
            (Some(cap), false) => Some(cap),
            (None, true) => Some(1),
            (None, false) => None,
        };
        if let Some(cap) = trial_cap {
            b = b.with_trials_per_d(cap);
        }
        b
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct InstanceConfig {
    /// Planted sparsity for generated instances.
    pub d: usize,
    /// Withhold the coefficient line (generate a challenge file).
    #[serde(default)]
    pub challenge: bool,
    /// Examples to pre-draw into a challenge file.
    #[serde(default = "default_prefetch")]
    pub prefetch: u64,
}

fn default_prefetch() -> u64 {
    50_000
}

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct OutputConfig {
    #[serde(skip_serializing_if = "Option::is_none")]
    pub instance: Option<String>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub table: Option<String>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub report: Option<String>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub results: Option<String>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub csv: Option<String>,
}

/// Everything one experiment run depends on.  Canonical TOML printing
/// follows this struct's field order, so `canonical()` is stable and
/// `hash()` identifies the configuration.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    pub q: u64,
    pub n: usize,
    /// Master seed; all per-site randomness is derived from it.
    pub seed: u64,
    /// Label mixed into every derivation, so two configs may share a
    /// numeric seed without sharing any derived stream.
    #[serde(default = "default_seed_label")]
    pub seed_label: String,
    pub gamma: GammaConfig,
    pub approximator: ApproximatorConfig,
    pub noise: NoiseConfig,
    #[serde(default)]
    pub method: MethodConfig,
    #[serde(default)]
    pub budget: BudgetConfig,
    pub instance: InstanceConfig,
    #[serde(default)]
    pub output: OutputConfig,
}

fn default_seed_label() -> String {
    "experiment".into()
}

impl Default for MethodConfig {
    fn default() -> Self {
        MethodConfig {
            identify: default_identify(),
            coeff: default_coeff(),
            dist_trials: None,
            m: None,
            fast_mode: false,
        }
    }
}

impl Default for BudgetConfig {
    fn default() -> Self {
        BudgetConfig {
            delta: default_delta(),
            max_examples: None,
            max_seconds: None,
            max_trials_per_d: None,
        }
    }
}

impl ExperimentConfig {
    pub fn from_toml(text: &str) -> anyhow::Result<ExperimentConfig> {
        let cfg: ExperimentConfig = toml::from_str(text).context("config parse")?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn load(path: &Path) -> anyhow::Result<ExperimentConfig> {
        let text =
            fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
        Self::from_toml(&text)
    }

    pub fn validate(&self) -> anyhow::Result<()> {
        if self.q < 2 {
            bail!("q = {} is not a prime", self.q);
        }
        if self.n == 0 {
            bail!("n must be positive");
        }
        let max = 1.0 - 1.0 / self.q as f64;
        if !(0.0..=self.noise.eta_bound).contains(&self.noise.eta) || self.noise.eta_bound >= max {
            bail!(
                "need 0 ≤ eta ({}) ≤ eta_bound ({}) < 1 − 1/q ({max})",
                self.noise.eta,
                self.noise.eta_bound
            );
        }
        if self.noise.sweep && self.noise.grid_steps == 0 {
            bail!("noise.sweep needs grid_steps ≥ 1");
        }
        if self.instance.d > self.n {
            bail!("instance.d = {} exceeds n = {}", self.instance.d, self.n);
        }
        if !(0.0 < self.budget.delta && self.budget.delta < 1.0) {
            bail!("budget.delta = {} outside (0, 1)", self.budget.delta);
        }
        self.gamma.build(self.n)?;
        self.approximator.build()?;
        self.method.build()?;
        Ok(())
    }

    /// Canonical text form: print(parse(x)) is a fixed point, and two
    /// equal configs always print identically.
    pub fn canonical(&self) -> String {
        toml::to_string(self).expect("config serializes")
    }

    /// Hex SHA-256 of the canonical form; embedded in result records.
    pub fn hash(&self) -> String {
        hex::encode(Sha256::digest(self.canonical().as_bytes()))
    }

    /// Master seed with the config's label mixed in.
    pub fn effective_seed(&self) -> u64 {
        linlearn::seed::derive(self.seed, &self.seed_label, 0)
    }

    /// The promise m handed to the learner: explicit method.m, else the
    /// planted sparsity (floored at 1 — class 0 has no table gap to find).
    pub fn promise_m(&self) -> usize {
        self.method.m.unwrap_or(self.instance.d).max(1)
    }

    pub fn descriptor_method(&self) -> String {
        format!("{}+{}", self.method.identify, self.method.coeff)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn sample() -> ExperimentConfig {
        ExperimentConfig::from_toml(
            r#"
            q = 2
            n = 16
            seed = 7

            [gamma]
            kind = "affine"
            factor = 2.0

            [approximator]
            name = "cheat-exact"

            [noise]
            eta = 0.1
            eta_bound = 0.1

            [instance]
            d = 3
            "#,
        )
        .unwrap()
    }

    #[test]
    fn round_trips_through_canonical_form() {
        let cfg = sample();
        let back = ExperimentConfig::from_toml(&cfg.canonical()).unwrap();
        assert_eq!(back, cfg);
        assert_eq!(back.canonical(), cfg.canonical());
    }

    #[test]
    fn hash_is_stable_and_content_sensitive() {
        let cfg = sample();
        assert_eq!(cfg.hash(), cfg.hash());
        assert_eq!(cfg.hash().len(), 64);
        let mut other = cfg.clone();
        other.seed = 8;
        assert_ne!(cfg.hash(), other.hash());
    }

    #[test]
    fn defaults_fill_in() {
        let cfg = sample();
        assert_eq!(cfg.method.identify, "psi");
        assert_eq!(cfg.method.coeff, "gauss-coeff");
        assert!(!cfg.method.fast_mode);
        assert_eq!(cfg.budget.delta, 0.05);
        assert_eq!(cfg.noise.grid_steps, 1);
        assert!(!cfg.noise.sweep);
        assert_eq!(cfg.instance.prefetch, 50_000);
        assert_eq!(cfg.seed_label, "experiment");
        assert_eq!(cfg.promise_m(), 3);
    }

    #[test]
    fn rejects_bad_fields() {
        for (patch, what) in [
            ("eta = 0.6\neta_bound = 0.4", "eta above bound"),
            ("eta = 0.1\neta_bound = 0.5", "bound at 1 - 1/q"),
        ] {
            let text = format!(
                "q = 2\nn = 4\nseed = 1\n[gamma]\nkind = \"affine\"\nfactor = 2.0\n\
                 [approximator]\nname = \"cheat-exact\"\n[noise]\n{patch}\n[instance]\nd = 1\n"
            );
            assert!(ExperimentConfig::from_toml(&text).is_err(), "{what}");
        }
        let unknown = "q = 2\nn = 4\nseed = 1\nbogus = 3\n[gamma]\nkind = \"affine\"\n\
                       factor = 2.0\n[approximator]\nname = \"cheat-exact\"\n[noise]\n\
                       eta = 0.1\neta_bound = 0.1\n[instance]\nd = 1\n";
        assert!(ExperimentConfig::from_toml(unknown).is_err(), "unknown key");
    }

    #[test]
    fn gamma_kinds_build() {
        let affine = GammaConfig {
            kind: "affine".into(),
            factor: Some(2.0),
            exponent: None,
            points: None,
        };
        assert_eq!(affine.build(16).unwrap().eval(3.0).unwrap(), 6.0);
        assert_eq!(affine.short(), "affine:2");

        let power = GammaConfig {
            kind: "power".into(),
            factor: None,
            exponent: Some(2.0),
            points: None,
        };
        assert_eq!(power.build(16).unwrap().eval(3.0).unwrap(), 9.0);

        let bad = GammaConfig {
            kind: "affine".into(),
            factor: None,
            exponent: None,
            points: None,
        };
        assert!(bad.build(16).is_err());
    }

    #[test]
    fn fast_mode_caps_table_trials() {
        let cfg = sample();
        let b = cfg.budget.build(true);
        assert_eq!(b.max_trials_per_d, Some(1));
        let b = cfg.budget.build(false);
        assert_eq!(b.max_trials_per_d, None);
    }
}

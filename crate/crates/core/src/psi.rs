//! Expected-answer tables over sparsity, and gap location in them.
//!
//! For an approximator A whose accepted answers on a sparsity-d target
//! always land in [d, Δ(d)] (see `approx::DeltaClamped`), define
//!
//!   Ψ(d) = E[A's answer | target uniform in Lin(F, d), answer accepted].
//!
//! Ψ is monotone enough that somewhere in every window [m, Δ(m)+1] two
//! consecutive entries differ by ≥ 7/(8n) — a *gap*.  The reduction
//! machinery estimates Ψ at hidden shifted sparsities and uses the gap
//! to tell d = k−1 from d = k+1, so everything here is in service of
//! three operations:
//!
//! - [`build_psi_table`]: Monte-Carlo Ψ'(d) for all d ∈ [1, n], with
//!   rejection realizing the conditioning;
//! - [`estimate_psi_of_target`]: Ψ'(d(f)) for the *hidden* target behind
//!   an oracle, by re-randomizing f into a uniform member of its
//!   sparsity class (fresh coordinate scaling and permutation per
//!   iteration) and averaging A's answers;
//! - [`find_gap_k`]: the smallest gap location in a built table.
//!
//! Determinism: every trial derives its own seed from (build seed, d,
//! trial index), so a rebuild with the same inputs bit-reproduces the
//! table regardless of how trials would be scheduled.

use rand::rngs::StdRng;
use rand::SeedableRng;
use serde::Deserialize;

use crate::approx::Approximator;
use crate::budget::Budget;
use crate::error::Error;
use crate::field::FieldCtx;
use crate::linmodel::{
    floor_out, random_permutation, sample_sparse_linear, ExampleOracle, GammaSpec, Transform,
};
use crate::seed;
use crate::Result;

/// Attempt-window size for stall detection during table building.
const STALL_WINDOW: u64 = 1000;

/// Comparison slack absorbing the 12-significant-digit serialization of
/// table values; far below any h in use.
const VALUE_TOL: f64 = 1e-9;

/// Accepted trials per table entry for additive error h on each entry
/// and failure probability δ over the whole table: Hoeffding over the
/// range [0, n] with a union bound over n entries and two tails,
/// t = ⌈(n²/(2h²))·ln(4n/δ)⌉.
pub fn table_trials(n: usize, h: f64, delta: f64) -> u64 {
    let nf = n as f64;
    ((nf * nf / (2.0 * h * h)) * (4.0 * nf / delta).ln()).ceil() as u64
}

/// Iterations for a single Ψ estimate with additive error h and failure
/// probability δ: τ = ⌈(n²/(2h²))·ln(2/δ)⌉.
pub fn estimate_trials(n: usize, h: f64, delta: f64) -> u64 {
    let nf = n as f64;
    ((nf * nf / (2.0 * h * h)) * (2.0 / delta).ln()).ceil() as u64
}

/// Ψ' values for d ∈ [1, n] plus the provenance needed to interpret
/// them.  `gamma` and `approximator` are descriptors (strings), so a
/// loaded table documents but does not reconstruct its γ; operations
/// that need γ take it as an argument.
#[derive(Debug, Clone, PartialEq, Deserialize)]
pub struct PsiTable {
    pub q: u64,
    pub n: usize,
    pub eta_bound: f64,
    pub h: f64,
    pub gamma: String,
    pub approximator: String,
    pub seed: u64,
    pub trials_per_d: u64,
    pub values: Vec<f64>,
}

/// What a build actually did, for logs and budget accounting.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct PsiBuildStats {
    /// Accepted trials aimed for per entry (after fast-mode collapse and
    /// any budget cap).
    pub trials_target: u64,
    /// Whether the deterministic-approximator shortcut was taken.
    pub fast_mode: bool,
    /// Whether the budget's per-entry trial cap bound below the
    /// Hoeffding count.
    pub capped: bool,
    /// Total approximator invocations, including rejected ones.
    pub attempts: u64,
    /// Attempts whose answer landed in [d, Δ(d)].
    pub accepted: u64,
    /// Examples drawn across all trial oracles.
    pub examples_drawn: u64,
}

impl PsiTable {
    /// Ψ'(d), with Ψ'(0) = 0 for the zero function.
    pub fn value(&self, d: usize) -> f64 {
        if d == 0 {
            0.0
        } else {
            self.values[d - 1]
        }
    }

    /// Check the sanity band every honestly built table satisfies:
    /// entries finite in [0, n+h], d ≤ Ψ'(d) + h, and Ψ'(d) − h ≤ Δ(d).
    pub fn validate(&self, gamma: &GammaSpec) -> Result<()> {
        if self.values.len() != self.n {
            return Err(Error::PreconditionFailed(format!(
                "table holds {} values for n = {}",
                self.values.len(),
                self.n
            )));
        }
        for d in 1..=self.n {
            let v = self.value(d);
            if !v.is_finite() || v < 0.0 || v > self.n as f64 + self.h {
                return Err(Error::PreconditionFailed(format!(
                    "entry {d} = {v} outside [0, n+h]"
                )));
            }
            if (d as f64) > v + self.h + VALUE_TOL {
                return Err(Error::PreconditionFailed(format!(
                    "entry {d} = {v} below its sparsity minus h"
                )));
            }
            let delta_d = gamma.delta_cap(d as f64)?;
            if v - self.h > delta_d + VALUE_TOL {
                return Err(Error::PreconditionFailed(format!(
                    "entry {d} = {v} above Δ({d}) = {delta_d} plus h"
                )));
            }
        }
        Ok(())
    }

    /// Check that every admissible window telescopes: for each m with
    /// Δ(m) + 1 ≤ n, Ψ'(Δ(m)+1) − Ψ'(m) ≥ 1 − 2h.  This is what makes a
    /// gap of 7/(8n) exist inside the window.
    pub fn check_telescoping(&self, gamma: &GammaSpec) -> Result<()> {
        for m in 1..=self.n {
            let top = floor_out(gamma.delta_cap(m as f64)?).max(0) as usize + 1;
            if top > self.n {
                break;
            }
            let rise = self.value(top) - self.value(m);
            if rise < 1.0 - 2.0 * self.h - VALUE_TOL {
                return Err(Error::PreconditionFailed(format!(
                    "window [{m}, {top}] rises only {rise} < 1 − 2h"
                )));
            }
        }
        Ok(())
    }

    /// Stable JSON form; reals carry 12 significant digits.
    pub fn to_json(&self) -> String {
        fn real(x: f64) -> String {
            format!("{:.11e}", x)
        }
        let values: Vec<String> = self.values.iter().map(|&v| real(v)).collect();
        format!(
            "{{\"q\":{},\"n\":{},\"eta_bound\":{},\"h\":{},\"gamma\":{},\"approximator\":{},\
             \"seed\":{},\"trials_per_d\":{},\"values\":[{}]}}",
            self.q,
            self.n,
            real(self.eta_bound),
            real(self.h),
            serde_json::to_string(&self.gamma).expect("string encodes"),
            serde_json::to_string(&self.approximator).expect("string encodes"),
            self.seed,
            self.trials_per_d,
            values.join(",")
        )
    }

    pub fn from_json(text: &str) -> Result<PsiTable> {
        let table: PsiTable = serde_json::from_str(text)
            .map_err(|e| Error::ParseInstance(format!("bad table JSON: {e}")))?;
        if table.values.len() != table.n {
            return Err(Error::ParseInstance(format!(
                "table JSON holds {} values for n = {}",
                table.values.len(),
                table.n
            )));
        }
        Ok(table)
    }
}

/// Monte-Carlo construction of Ψ'(d) for all d ∈ [1, n].
///
/// Per entry d, trials repeat until t = ⌈(n²/(2h²))·ln(4n/δ)⌉ answers
/// are *accepted*: each trial plants a fresh uniform f ∈ Lin(F, d),
/// simulates its oracle at noise exactly `eta_bound`, runs A, and keeps
/// the answer iff it lies in [d, Δ(d)] — the conditioning that defines
/// Ψ.  Ψ'(d) is the mean of the kept answers.
///
/// When A declares itself deterministic given sparsity, one accepted
/// trial pins the zero-variance mean exactly, and the build collapses to
/// t = 1.  A budget may also cap accepted trials per entry below the
/// Hoeffding count: the entries then carry more Monte-Carlo error than h
/// promises, which [`PsiBuildStats::capped`] records.
pub fn build_psi_table<A: Approximator + ?Sized>(
    a: &mut A,
    gamma: &GammaSpec,
    ctx: FieldCtx,
    n: usize,
    eta_bound: f64,
    h: f64,
    delta: f64,
    build_seed: u64,
    budget: &Budget,
) -> Result<(PsiTable, PsiBuildStats)> {
    if !(0.0 < h && h < 1.0) {
        return Err(Error::PreconditionFailed(format!(
            "table error bound h = {h} outside (0, 1)"
        )));
    }
    let hoeffding = table_trials(n, h, delta);
    let fast_mode = a.is_deterministic_given_sparsity();
    let mut target = if fast_mode { 1 } else { hoeffding };
    let mut capped = false;
    if let Some(cap) = budget.max_trials_per_d {
        if cap < target {
            target = cap.max(1);
            capped = true;
        }
    }

    let mut stats = PsiBuildStats {
        trials_target: target,
        fast_mode,
        capped,
        attempts: 0,
        accepted: 0,
        examples_drawn: 0,
    };
    let mut values = Vec::with_capacity(n);
    for d in 1..=n {
        let accept_top = floor_out(gamma.delta_cap(d as f64)?).max(0) as u64;
        let mut kept = 0u64;
        let mut sum = 0.0f64;
        let mut attempt = 0u64;
        let mut window_attempts = 0u64;
        let mut window_accepts = 0u64;
        while kept < target {
            // One derived seed per (d, attempt) keeps the build
            // reproducible under any scheduling of trials.
            let idx = ((d as u64) << 32) | attempt;
            let mut frng = StdRng::seed_from_u64(seed::derive(build_seed, "table-target", idx));
            let f = sample_sparse_linear(ctx, n, d, &mut frng)?;
            let mut oracle = ExampleOracle::planted(
                f,
                eta_bound,
                eta_bound,
                seed::derive(build_seed, "table-stream", idx),
            )?;
            let answer = a.approx_sparsity(&mut oracle)?;
            stats.examples_drawn += oracle.draws();
            stats.attempts += 1;
            attempt += 1;
            window_attempts += 1;
            if answer >= d as u64 && answer <= accept_top {
                kept += 1;
                stats.accepted += 1;
                window_accepts += 1;
                sum += answer as f64;
            }
            if window_attempts == STALL_WINDOW {
                if window_accepts < STALL_WINDOW / 2 {
                    return Err(Error::RejectionStall {
                        d,
                        accepted: window_accepts,
                        window: STALL_WINDOW,
                    });
                }
                window_attempts = 0;
                window_accepts = 0;
            }
            budget.poll(stats.examples_drawn)?;
        }
        values.push(sum / kept as f64);
    }

    let table = PsiTable {
        q: ctx.q(),
        n,
        eta_bound,
        h,
        gamma: gamma.descriptor(),
        approximator: a.descriptor(),
        seed: build_seed,
        trials_per_d: target,
        values,
    };
    table.validate(gamma)?;
    Ok((table, stats))
}

/// Estimate Ψ(d(f)) for the hidden target f behind `oracle`, which must
/// already run at noise exactly `eta_bound` (magnify upstream first).
///
/// Each of τ = ⌈(n²/(2h²))·ln(2/δ)⌉ iterations pushes a fresh
/// permute/scale transform — uniform nonzero coordinate scales v and a
/// uniform permutation φ — so A sees a fresh uniform member of the
/// sparsity class of f, then records A's answer and pops the transform.
/// Over F₂ the only nonzero scale is 1 and the transform degenerates to
/// a pure permutation.  Returns the mean answer.  No rejection happens
/// here; A's failure probability enters the caller's union bound.
///
/// An approximator that is a fixed function of the sparsity class
/// collapses the whole estimate to one question: permute/scale keeps
/// the class, so every disguise returns the same answer and we skip the
/// transforms along with the extra trials.
pub fn estimate_psi_of_target<A: Approximator + ?Sized>(
    a: &mut A,
    oracle: &mut ExampleOracle,
    h: f64,
    delta: f64,
    estimate_seed: u64,
    budget: &Budget,
) -> Result<f64> {
    if !(0.0 < h && h < 1.0) {
        return Err(Error::PreconditionFailed(format!(
            "estimate error bound h = {h} outside (0, 1)"
        )));
    }
    if let Some(rate) = oracle.effective_eta() {
        if (rate - oracle.eta_bound()).abs() > 1e-9 {
            return Err(Error::PreconditionFailed(format!(
                "estimate needs the stream at noise exactly eta_bound = {}, got {rate}",
                oracle.eta_bound()
            )));
        }
    }
    let ctx = oracle.ctx();
    let n = oracle.dim();
    if a.is_deterministic_given_sparsity() {
        let answer = a.approx_sparsity(oracle)?;
        budget.poll(oracle.draws())?;
        return Ok(answer as f64);
    }
    let tau = estimate_trials(n, h, delta);
    let mut sum = 0.0f64;
    for i in 0..tau {
        let mut trng = StdRng::seed_from_u64(seed::derive(estimate_seed, "estimate-transform", i));
        let v: Vec<u64> = (0..n).map(|_| ctx.sample_nonzero(&mut trng)).collect();
        let phi = random_permutation(n, &mut trng);
        oracle.push_transform(Transform::permute_scale(ctx, v, phi)?)?;
        let answer = a.approx_sparsity(oracle);
        oracle.pop_transform();
        sum += answer? as f64;
        budget.poll(oracle.draws())?;
    }
    Ok(sum / tau as f64)
}

/// Smallest k in the window [m, Δ(m)+1] where the table jumps by at
/// least 7/(8n): Ψ'(k+1) − Ψ'(k) ≥ 7/(8n), or in binary mode
/// Ψ'(k+1) − Ψ'(k−1) ≥ 7/(8n) with Ψ'(0) = 0.  Requires a table built
/// at h = 1/(16n), which makes the telescoped rise over the window at
/// least 1 − 2h and so forces a qualifying k to exist; a miss means the
/// table (or the approximator behind it) broke its contract.
pub fn find_gap_k(table: &PsiTable, gamma: &GammaSpec, m: usize, binary: bool) -> Result<usize> {
    let n = table.n;
    let want_h = 1.0 / (16.0 * n as f64);
    if (table.h - want_h).abs() > 1e-12 {
        return Err(Error::PreconditionFailed(format!(
            "gap location needs a table at h = 1/(16n) = {want_h}, got {}",
            table.h
        )));
    }
    if m < 1 {
        return Err(Error::PreconditionFailed("window start m must be ≥ 1".into()));
    }
    let reach = gamma.inv(gamma.inv(n as f64)?)?;
    if m as f64 > reach + 1e-9 {
        return Err(Error::PreconditionFailed(format!(
            "window start m = {m} beyond γ⁻¹(γ⁻¹(n)) = {reach}"
        )));
    }
    let upper = floor_out(gamma.delta_cap(m as f64)?).max(0) as usize + 1;
    let threshold = 7.0 / (8.0 * n as f64) - VALUE_TOL;
    // Ψ'(k+1) must exist in the table, so the scan stops at n−1.
    for k in m..=upper.min(n - 1) {
        let rise = if binary {
            table.value(k + 1) - table.value(k - 1)
        } else {
            table.value(k + 1) - table.value(k)
        };
        if rise >= threshold {
            return Ok(k);
        }
    }
    Err(Error::NoGapFound { m, upper })
}

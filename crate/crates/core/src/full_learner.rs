//! Lifting a fixed-sparsity learner to the full class: hypothesis
//! selection, success boosting, label-shift and dummy-coordinate
//! padding, a noise-rate sweep, and the assembled any-sparsity learner.
//!
//! Everything here treats the sparse learner as a black box that is
//! merely *likely* to emit the exact target, and amplifies that into a
//! clean guarantee:
//!
//! - [`hypothesis_select`] picks the best of a candidate pool by
//!   empirical agreement, exploiting the separation
//!   Pr[f(a) = b] = 1 − η versus Pr[g(a) = b] = 1/q for g ≠ f;
//! - [`boost_mode`] reruns a > 2/3-reliable exact learner and returns
//!   the modal output;
//! - [`learn_d_sparse_via_shift`] learns a d-sparse target with a
//!   k-sparse learner by adding k − d random coordinates to the label;
//! - [`pad_to_big_n`] appends dummy uniform coordinates so the shift
//!   trick's dimension requirement holds for every sparsity at once;
//! - [`eta_sweep`] runs a learner expecting noise exactly η_b on a grid
//!   of magnified streams when only the bound η_b is known;
//! - [`learn_parity_full`] ties the above together over all sparsities.

use std::collections::BTreeMap;

use rand::rngs::StdRng;
use rand::SeedableRng;

use crate::approx::ApproxSpec;
use crate::budget::Budget;
use crate::error::Error;
use crate::linmodel::{ExampleOracle, GammaSpec, LinearFn, Transform};
use crate::psi::{build_psi_table, find_gap_k};
use crate::seed;
use crate::sparse_reduction::{learn_with_known_k, Method};
use crate::Result;

/// A candidate hypothesis with its measured agreement rate.
#[derive(Debug, Clone, PartialEq)]
pub struct HypothesisScore {
    pub hypothesis: LinearFn,
    pub agreement: f64,
}

/// Examples needed to pick the true target out of `classes` candidates
/// with failure probability δ: Q = ⌈32·ln(2·classes/δ)/(1−η_b−1/q)²⌉.
/// Chernoff at additive error (1−η_b−1/q)/4 per hypothesis, union bound
/// over the pool.
pub fn selection_samples(classes: usize, delta: f64, eta_bound: f64, q: u64) -> u64 {
    let margin = 1.0 - eta_bound - 1.0 / q as f64;
    ((32.0 / (margin * margin)) * (2.0 * classes as f64 / delta).ln()).ceil() as u64
}

/// Score every candidate's empirical agreement Pr[g(a) = b] on one
/// shared batch of Q = [`selection_samples`] fresh examples, sorted
/// best first (ties keep pool order).
///
/// If the true target is in the pool, its agreement concentrates at
/// 1 − η while every other linear function sits at 1/q, so with
/// probability ≥ 1 − δ the top entry is the target.
pub fn rank_hypotheses(
    candidates: &[LinearFn],
    oracle: &mut ExampleOracle,
    delta: f64,
    budget: &Budget,
) -> Result<Vec<HypothesisScore>> {
    if candidates.is_empty() {
        return Err(Error::EmptyCandidateSet);
    }
    let margin = 1.0 - oracle.eta_bound() - 1.0 / oracle.ctx().q() as f64;
    if margin <= 0.0 {
        return Err(Error::PreconditionFailed(format!(
            "selection needs eta_bound < 1 − 1/q, got {}",
            oracle.eta_bound()
        )));
    }
    for g in candidates {
        if g.dim() != oracle.dim() {
            return Err(Error::DimensionMismatch {
                expected: oracle.dim(),
                got: g.dim(),
            });
        }
    }
    let q_samples = selection_samples(candidates.len(), delta, oracle.eta_bound(), oracle.ctx().q());
    let mut hits = vec![0u64; candidates.len()];
    for _ in 0..q_samples {
        let ex = oracle.next_example()?;
        for (j, g) in candidates.iter().enumerate() {
            if g.eval(&ex.a)? == ex.b {
                hits[j] += 1;
            }
        }
        budget.poll(oracle.draws())?;
    }
    let mut scored: Vec<HypothesisScore> = candidates
        .iter()
        .zip(hits)
        .map(|(g, h)| HypothesisScore {
            hypothesis: g.clone(),
            agreement: h as f64 / q_samples as f64,
        })
        .collect();
    scored.sort_by(|x, y| y.agreement.partial_cmp(&x.agreement).expect("agreements are finite"));
    Ok(scored)
}

/// The best-agreeing candidate; see [`rank_hypotheses`].
pub fn hypothesis_select(
    candidates: &[LinearFn],
    oracle: &mut ExampleOracle,
    delta: f64,
    budget: &Budget,
) -> Result<LinearFn> {
    let ranked = rank_hypotheses(candidates, oracle, delta, budget)?;
    Ok(ranked.into_iter().next().expect("non-empty by construction").hypothesis)
}

/// Repetitions for mode boosting at failure probability δ:
/// reps = ⌈18·ln(1/δ)⌉ — Hoeffding for a per-run success rate ≥ 2/3
/// dropping to a strict-majority miss with probability ≤ δ.
pub fn mode_boost_reps(delta: f64) -> u64 {
    (18.0 * (1.0 / delta).ln()).ceil().max(1.0) as u64
}

/// Run an exact learner `reps` times and return its modal output.
///
/// Runs that error are counted as failures but do not abort the boost.
/// The mode must win a strict majority of all `reps` attempts —
/// anything weaker is reported as [`Error::NoMajority`] instead of
/// silently returned, since a sub-majority mode carries no guarantee.
pub fn boost_mode<F>(reps: u64, mut run: F) -> Result<LinearFn>
where
    F: FnMut(u64) -> Result<LinearFn>,
{
    let mut counts: BTreeMap<Vec<u64>, (u64, LinearFn)> = BTreeMap::new();
    for r in 0..reps {
        if let Ok(g) = run(r) {
            let slot = counts.entry(g.coeffs().to_vec()).or_insert((0, g));
            slot.0 += 1;
        }
    }
    let mut best: Option<(u64, &LinearFn)> = None;
    for (count, g) in counts.values() {
        if best.map_or(true, |(c, _)| *count > c) {
            best = Some((*count, g));
        }
    }
    match best {
        None => Err(Error::AllRunsFailed),
        Some((count, g)) => {
            if 2 * count <= reps {
                Err(Error::NoMajority { best: count, reps })
            } else {
                Ok(g.clone())
            }
        }
    }
}

/// Learn a d-sparse target with a k-sparse learner, d ≤ k, by shifting
/// the label: each boosted repetition draws k − d distinct uniform
/// indices i_1, …, i_{k−d}, runs `learner_k` on the stream relabeled
/// b + a_{i_1} + ⋯ + a_{i_{k−d}} (whose target is f + Σ x_{i_j}), and
/// subtracts the shift from what comes back.
///
/// The shifted target is exactly k-sparse whenever every chosen index
/// misses the support of f, which happens with probability
/// ∏_{i=d}^{k}(1 − i/n) ≥ 1 − k²/n ≥ 11/12 under the checked
/// precondition 12·Γ(d)² ≤ n — so each repetition succeeds with
/// probability ≥ (11/12)·(learner_k's own success) and
/// reps = ⌈18·ln(1/δ)⌉ mode boosting lifts that to 1 − δ.
/// `learner_k` receives the transformed oracle and a per-repetition
/// seed.
pub fn learn_d_sparse_via_shift<L>(
    mut learner_k: L,
    k: usize,
    d: usize,
    oracle: &mut ExampleOracle,
    gamma: &GammaSpec,
    delta: f64,
    shift_seed: u64,
) -> Result<LinearFn>
where
    L: FnMut(&mut ExampleOracle, u64) -> Result<LinearFn>,
{
    let ctx = oracle.ctx();
    let n = oracle.dim();
    if d > k {
        return Err(Error::PreconditionFailed(format!(
            "shift reduction needs d ≤ k, got d = {d}, k = {k}"
        )));
    }
    let reach = gamma.big_gamma(d as f64)?;
    if 12.0 * reach * reach > n as f64 + 1e-9 {
        return Err(Error::PreconditionFailed(format!(
            "shift reduction needs 12·Γ(d)² ≤ n, got {} > {n}",
            12.0 * reach * reach
        )));
    }
    let reps = mode_boost_reps(delta);
    boost_mode(reps, |r| {
        let mut irng = StdRng::seed_from_u64(seed::derive(shift_seed, "shift-indices", r));
        let chosen = rand::seq::index::sample(&mut irng, n, k - d).into_vec();
        let mut coeffs = vec![0u64; n];
        for &i in &chosen {
            coeffs[i] = 1;
        }
        let delta_fn = LinearFn::new(ctx, coeffs)?;
        oracle.push_transform(Transform::shift(delta_fn.clone()))?;
        let learned = learner_k(oracle, seed::derive(shift_seed, "shift-learner", r));
        oracle.pop_transform();
        learned?.sub(&delta_fn)
    })
}

/// Append dummy uniform coordinates until the dimension reaches
/// N = ⌈12·Γ(n)²⌉, so that 12·Γ(d)² ≤ N holds for every d ≤ n and the
/// shift reduction applies at all sparsities at once.  The pad
/// transform is pushed onto the oracle (pop it to restore the original
/// stream); the target keeps zero coefficients on every appended
/// coordinate.  Returns N.
pub fn pad_to_big_n(oracle: &mut ExampleOracle, gamma: &GammaSpec) -> Result<usize> {
    let n = oracle.dim();
    let reach = gamma.big_gamma(n as f64)?;
    let big = (12.0 * reach * reach).ceil() as usize;
    oracle.push_transform(Transform::pad(big))?;
    Ok(big)
}

/// Learn when only the bound η_b on the noise rate is known: run
/// `learn_at_bound` once per grid point η^{(j)} = η_b·j/grid_steps,
/// j = 1, …, grid_steps, each time on the stream magnified from η^{(j)}
/// up to η_b, and select among everything the runs produced.
///
/// The run whose grid point equals the true η sees composite noise
/// exactly η_b and so emits the target with its advertised
/// probability; every other run's output is just one more candidate
/// for [`hypothesis_select`] (confidence δ) to reject.  Runs that fail
/// are skipped; if none produce a hypothesis the sweep reports
/// [`Error::AllRunsFailed`].
pub fn eta_sweep<L>(
    mut learn_at_bound: L,
    oracle: &mut ExampleOracle,
    grid_steps: u64,
    delta: f64,
    budget: &Budget,
) -> Result<LinearFn>
where
    L: FnMut(&mut ExampleOracle, u64) -> Result<LinearFn>,
{
    if grid_steps == 0 {
        return Err(Error::PreconditionFailed("noise sweep needs grid_steps ≥ 1".into()));
    }
    let ctx = oracle.ctx();
    let eta_bound = oracle.eta_bound();
    let mut pool: Vec<LinearFn> = Vec::new();
    for j in 1..=grid_steps {
        let eta_j = eta_bound * j as f64 / grid_steps as f64;
        oracle.push_transform(Transform::magnify(ctx, eta_j, eta_bound)?)?;
        let run = learn_at_bound(oracle, j);
        oracle.pop_transform();
        if let Ok(g) = run {
            if !pool.contains(&g) {
                pool.push(g);
            }
        }
        budget.poll(oracle.draws())?;
    }
    if pool.is_empty() {
        return Err(Error::AllRunsFailed);
    }
    hypothesis_select(&pool, oracle, delta, budget)
}

/// The assembled learner for arbitrary targets in Lin(F) on n
/// variables, promised nothing about sparsity, at noise exactly η_b.
///
/// Pads the stream to N = ⌈12·Γ(n)²⌉ dummy-extended coordinates,
/// builds a single Ψ table there (the table depends only on the
/// approximator, γ, N, and η_b — not on the target), then for every
/// d ∈ [1, n] locates the gap k = `find_gap_k`(m = d) and runs the
/// known-k learner through the shift reduction.  Hypotheses are
/// projected back to the first n coordinates — any run that leaked
/// support onto a dummy coordinate is discarded rather than truncated —
/// the zero function joins the pool for the d = 0 case, and
/// [`hypothesis_select`] picks the winner on the unpadded stream.
/// Failures of individual d-runs are skipped: only the run at the true
/// sparsity has to succeed.
///
/// Failure budget: δ/4 table, δ/(4n) per d-run, δ/4 selection.
pub fn learn_parity_full(
    approx: &ApproxSpec,
    gamma: &GammaSpec,
    oracle: &mut ExampleOracle,
    method: Method,
    delta: f64,
    full_seed: u64,
    budget: &Budget,
) -> Result<LinearFn> {
    let ctx = oracle.ctx();
    let n = oracle.dim();
    let big_n = pad_to_big_n(oracle, gamma)?;
    let swept = (|| -> Result<Vec<LinearFn>> {
        let g_big = gamma.with_cap(big_n);
        let dp = crate::approx::default_delta_prime(ctx.q(), big_n);
        let h = 1.0 / (16.0 * big_n as f64);
        let mut ta =
            approx.build_for_tables(&g_big, dp, oracle.eta_bound(), seed::derive(full_seed, "full-table-approx", 0), big_n);
        let (table, _) = build_psi_table(
            &mut ta,
            &g_big,
            ctx,
            big_n,
            oracle.eta_bound(),
            h,
            delta / 4.0,
            seed::derive(full_seed, "full-table", 0),
            budget,
        )?;
        let mut pool = vec![LinearFn::zero(ctx, n)];
        let delta_d = delta / (4.0 * n as f64);
        for d in 1..=n {
            let Ok(k) = find_gap_k(&table, &g_big, d, ctx.q() == 2) else {
                continue;
            };
            let learned = learn_d_sparse_via_shift(
                |o, s| learn_with_known_k(approx, &g_big, &table, k, o, method, delta_d, s, budget),
                k,
                d,
                oracle,
                &g_big,
                delta_d,
                seed::derive(full_seed, "full-shift", d as u64),
            );
            budget.poll(oracle.draws())?;
            let Ok(g) = learned else {
                continue;
            };
            let Ok(projected) = g.project(n) else {
                continue; // support leaked onto a dummy coordinate
            };
            if !pool.contains(&projected) {
                pool.push(projected);
            }
        }
        Ok(pool)
    })();
    oracle.pop_transform();
    let pool = swept?;
    hypothesis_select(&pool, oracle, delta / 4.0, budget)
}

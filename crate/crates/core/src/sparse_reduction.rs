//! From sparsity approximation to proper learning at a known sparsity
//! bound: identify which variables the hidden target uses, then pin
//! their coefficients, using nothing but an approximator and the Ψ
//! tables of `psi`.
//!
//! Both published identification routes are here:
//!
//! - [`classify_variables_psi`]: shift the label by x_i (and by αx_i
//!   over larger fields) and compare the estimated Ψ of the shifted
//!   target against the bands around Ψ'(k) and Ψ'(k+1) — adding x_i to
//!   an irrelevant variable raises sparsity to k+1, while for a
//!   relevant one at least one of the two shifts keeps it at k or
//!   below;
//! - [`identify_relevant_distinguisher`]: turn the approximator into a
//!   sparse-versus-random distinguisher via the threshold γ(k₁), then
//!   watch whether surgically randomizing coordinate i flips the
//!   distinguisher's answer to its uniform-stream behavior.
//!
//! Coefficients then come either from more label shifts
//! ([`recover_coefficients_psi`]: −αx_i + x_{j*} keeps sparsity at k
//! exactly when α was x_i's coefficient) or from k-example Gaussian
//! eliminations repeated until a noiseless draw slips through
//! ([`recover_coefficients_gauss`]).  [`learn_sparse_k`] chains table
//! construction, gap location, identification, and recovery into the
//! promised proper learner.

use serde::{Deserialize, Serialize};
use std::collections::BTreeSet;

use crate::approx::{default_delta_prime, ApproxSpec, Approximator};
use crate::budget::Budget;
use crate::error::Error;
use crate::linmodel::{floor_out, ExampleOracle, GammaSpec, LinearFn, Transform};
use crate::psi::{build_psi_table, estimate_psi_of_target, find_gap_k, PsiTable};
use crate::seed;
use crate::Result;

/// Band-comparison slack absorbing serialized-table jitter; far below
/// the 1/(8n) half-widths in use.
const BAND_TOL: f64 = 1e-9;

/// Majority trials per index for the distinguisher route when the
/// caller has no reason to choose otherwise.
pub const DEFAULT_DISTINGUISHER_TRIALS: u64 = 25;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Verdict {
    Relevant,
    Irrelevant,
    Undecided,
}

/// Per-variable classification outcome with the evidence behind it.
///
/// `estimates[i]` is the primary statistic for variable i: the
/// estimated Ψ of the x_i-shifted target on the band route, or the
/// fraction of trials answering "sparse" on the distinguisher route.
/// `alpha_estimates` carries the Ψ estimates for the αx_i shifts when a
/// second shift was needed (fields with q > 2 on the band route).
/// A statistic inside `accept_band` argues relevant, inside
/// `reject_band` argues irrelevant; `Undecided` records an estimate
/// that landed in neither, and is reported rather than coerced.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RelevanceReport {
    pub n: usize,
    pub k: usize,
    pub verdicts: Vec<Verdict>,
    pub estimates: Vec<f64>,
    pub alpha_estimates: Option<Vec<f64>>,
    pub alpha: Option<u64>,
    pub accept_band: (f64, f64),
    pub reject_band: (f64, f64),
}

impl RelevanceReport {
    pub fn relevant_indices(&self) -> Vec<usize> {
        (0..self.n).filter(|&i| self.verdicts[i] == Verdict::Relevant).collect()
    }

    pub fn undecided_count(&self) -> usize {
        self.verdicts.iter().filter(|v| **v == Verdict::Undecided).count()
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string(self).expect("report fields all encode")
    }
}

fn in_band(x: f64, band: (f64, f64)) -> bool {
    x >= band.0 - BAND_TOL && x <= band.1 + BAND_TOL
}

/// Estimate Ψ of the target shifted by Σ_j λ_j·x_{i_j} over the given
/// (index, coefficient) pairs, restoring the oracle's transform stack
/// afterwards even on failure.  Coordinate shifts keep each push and
/// each label independent of n, which matters because classification
/// pays one estimate per variable.
fn shifted_psi<A: Approximator + ?Sized>(
    a: &mut A,
    oracle: &mut ExampleOracle,
    shift: &[(usize, u64)],
    h: f64,
    delta: f64,
    est_seed: u64,
    budget: &Budget,
) -> Result<f64> {
    for (done, &(index, coeff)) in shift.iter().enumerate() {
        if let Err(e) = oracle.push_transform(Transform::shift_coord(index, coeff)) {
            for _ in 0..done {
                oracle.pop_transform();
            }
            return Err(e);
        }
    }
    let est = estimate_psi_of_target(a, oracle, h, delta, est_seed, budget);
    for _ in 0..shift.len() {
        oracle.pop_transform();
    }
    est
}

/// Classify every variable of the hidden target by label shifting.
///
/// The target is promised k-sparse for the k located by gap finding, so
/// Ψ'(k) and Ψ'(k+1) are at least 7/(8n) apart and the two bands of
/// half-width 1/(8n) around them cannot touch.  Each shifted Ψ is
/// estimated to additive error 1/(8n) at confidence δ/(8n).
///
/// Over F₂ the only shift is x_i and the verdict compares against the
/// band around Ψ'(k−1) (relevant: the coefficient 1 cancels, sparsity
/// drops) versus Ψ'(k+1) (irrelevant: sparsity rises).  Over larger
/// fields both f+x_i and f+αx_i are tried with α the smallest field
/// element outside {0, 1}: a relevant coefficient λ survives at least
/// one of the two shifts (λ cannot equal both −1 and −α), keeping
/// sparsity ≤ k, while an irrelevant variable pushes both shifts to
/// k+1 — so one estimate in the accept band reads relevant, and both in
/// the reject band read irrelevant.
pub fn classify_variables_psi<A: Approximator + ?Sized>(
    a: &mut A,
    table: &PsiTable,
    k: usize,
    oracle: &mut ExampleOracle,
    delta: f64,
    class_seed: u64,
    budget: &Budget,
) -> Result<RelevanceReport> {
    let ctx = oracle.ctx();
    let n = oracle.dim();
    if table.n != n || table.q != ctx.q() {
        return Err(Error::PreconditionFailed(format!(
            "table built for q = {}, n = {} cannot classify a q = {}, n = {n} stream",
            table.q,
            table.n,
            ctx.q()
        )));
    }
    if k < 1 || k + 1 > n {
        return Err(Error::PreconditionFailed(format!(
            "classification needs 1 ≤ k ≤ n−1, got k = {k}"
        )));
    }
    if let Some(rate) = oracle.effective_eta() {
        if (rate - oracle.eta_bound()).abs() > 1e-9 {
            return Err(Error::PreconditionFailed(format!(
                "classification needs the stream at noise exactly eta_bound = {}, got {rate}",
                oracle.eta_bound()
            )));
        }
    }
    let w = 1.0 / (8.0 * n as f64);
    let binary = ctx.q() == 2;
    let accept_center = if binary { table.value(k - 1) } else { table.value(k) };
    let reject_center = table.value(k + 1);
    if accept_center + w >= reject_center - w {
        return Err(Error::IntervalOverlap { k });
    }
    let accept_band = (accept_center - w, accept_center + w);
    let reject_band = (reject_center - w, reject_center + w);
    let delta_each = delta / (8.0 * n as f64);
    let alpha = if binary { None } else { Some(2u64) };

    let mut verdicts = Vec::with_capacity(n);
    let mut estimates = Vec::with_capacity(n);
    let mut alpha_estimates = if binary { None } else { Some(Vec::with_capacity(n)) };
    for i in 0..n {
        let plain = shifted_psi(
            a,
            oracle,
            &[(i, 1)],
            w,
            delta_each,
            seed::derive(class_seed, "classify-shift", i as u64),
            budget,
        )?;
        estimates.push(plain);
        let verdict = if binary {
            if in_band(plain, accept_band) {
                Verdict::Relevant
            } else if in_band(plain, reject_band) {
                Verdict::Irrelevant
            } else {
                Verdict::Undecided
            }
        } else {
            let scaled = shifted_psi(
                a,
                oracle,
                &[(i, alpha.expect("set for q > 2"))],
                w,
                delta_each,
                seed::derive(class_seed, "classify-alpha", i as u64),
                budget,
            )?;
            alpha_estimates.as_mut().expect("allocated for q > 2").push(scaled);
            if in_band(plain, accept_band) || in_band(scaled, accept_band) {
                Verdict::Relevant
            } else if in_band(plain, reject_band) && in_band(scaled, reject_band) {
                Verdict::Irrelevant
            } else {
                Verdict::Undecided
            }
        };
        verdicts.push(verdict);
    }
    Ok(RelevanceReport {
        n,
        k,
        verdicts,
        estimates,
        alpha_estimates,
        alpha,
        accept_band,
        reject_band,
    })
}

/// Classify variables with a thresholded sparse-versus-random
/// distinguisher instead of Ψ bands.
///
/// From a promised-k₁-sparse stream the raw approximator answers
/// D ≤ γ(k₁); from a stream whose labels are uniform garbage it lands
/// in a band that starts above γ(k₁) — provided γ(γ(k₁)+1) ≤ n so that
/// band exists.  The distinguisher's uniform-stream behavior is first
/// calibrated by majority over `trials` synthetic uniform-label
/// streams (and must be stable at the 2/3 level); each variable is then
/// probed by majority over `trials` runs on the coordinate-i-randomized
/// stream.  Randomizing an irrelevant coordinate leaves the stream's
/// distribution untouched, so the answer stays "sparse"; randomizing a
/// relevant one erases the target, so the answer flips to the
/// calibrated uniform behavior.
///
/// `estimates[i]` records the fraction of probes answering "sparse".
/// If calibration says uniform streams *also* read as sparse, no flip
/// is observable and every verdict is `Undecided`.
pub fn identify_relevant_distinguisher<A: Approximator + ?Sized>(
    a: &mut A,
    gamma: &GammaSpec,
    oracle: &mut ExampleOracle,
    k1: usize,
    trials: u64,
    dist_seed: u64,
    budget: &Budget,
) -> Result<RelevanceReport> {
    let ctx = oracle.ctx();
    let n = oracle.dim();
    if trials == 0 {
        return Err(Error::PreconditionFailed("distinguisher needs trials ≥ 1".into()));
    }
    let threshold = floor_out(gamma.eval(k1 as f64)?).max(0) as u64;
    let k2 = gamma.eval((threshold + 1) as f64)?;
    if k2 > n as f64 + 1e-9 {
        return Err(Error::PreconditionFailed(format!(
            "distinguisher needs γ(γ(k₁)+1) ≤ n, got {k2} > {n}"
        )));
    }

    // Calibrate on synthetic uniform-label streams.
    let mut side_draws = 0u64;
    let mut uniform_sparse = 0u64;
    for t in 0..trials {
        let mut synth =
            ExampleOracle::uniform_labels(ctx, n, seed::derive(dist_seed, "calibrate", t));
        if a.approx_sparsity(&mut synth)? <= threshold {
            uniform_sparse += 1;
        }
        side_draws += synth.draws();
        budget.poll(oracle.draws() + side_draws)?;
    }
    let stable = uniform_sparse.max(trials - uniform_sparse);
    if 3 * stable < 2 * trials {
        return Err(Error::CalibrationAmbiguous { k1_votes: uniform_sparse, trials });
    }
    let uniform_reads_sparse = 2 * uniform_sparse > trials;

    let mut verdicts = Vec::with_capacity(n);
    let mut estimates = Vec::with_capacity(n);
    for i in 0..n {
        oracle.push_transform(Transform::randomize(i))?;
        let mut sparse_votes = 0u64;
        let mut probe = || -> Result<()> {
            for _ in 0..trials {
                if a.approx_sparsity(oracle)? <= threshold {
                    sparse_votes += 1;
                }
                budget.poll(oracle.draws() + side_draws)?;
            }
            Ok(())
        };
        let probed = probe();
        oracle.pop_transform();
        probed?;
        estimates.push(sparse_votes as f64 / trials as f64);
        let verdict = if uniform_reads_sparse || 2 * sparse_votes == trials {
            Verdict::Undecided
        } else if 2 * sparse_votes > trials {
            Verdict::Irrelevant
        } else {
            Verdict::Relevant
        };
        verdicts.push(verdict);
    }
    Ok(RelevanceReport {
        n,
        k: k1,
        verdicts,
        estimates,
        alpha_estimates: None,
        alpha: None,
        accept_band: (0.0, 0.5),
        reject_band: (0.5, 1.0),
    })
}

/// Recover the coefficient of every relevant variable by shifted-Ψ
/// probes (fields with q > 2; over F₂ nonzero means 1 and the probes
/// are skipped).
///
/// With one verified-irrelevant index j* in hand, shifting the label by
/// −αx_i + x_{j*} removes x_i exactly when its coefficient is α while
/// introducing x_{j*}, leaving sparsity at k; any other α leaves x_i in
/// place and sparsity lands at k+1.  So the unique α whose shifted Ψ
/// estimate falls in the Ψ'(k) band is the coefficient.
pub fn recover_coefficients_psi<A: Approximator + ?Sized>(
    a: &mut A,
    table: &PsiTable,
    k: usize,
    oracle: &mut ExampleOracle,
    relevant: &[usize],
    delta: f64,
    rec_seed: u64,
    budget: &Budget,
) -> Result<LinearFn> {
    let ctx = oracle.ctx();
    let n = oracle.dim();
    let mut coeffs = vec![0u64; n];
    for &i in relevant {
        if i >= n {
            return Err(Error::PreconditionFailed(format!(
                "relevant index {i} outside dimension {n}"
            )));
        }
    }
    if ctx.q() == 2 {
        for &i in relevant {
            coeffs[i] = 1;
        }
        return LinearFn::new(ctx, coeffs);
    }
    if relevant.is_empty() {
        return Ok(LinearFn::zero(ctx, n));
    }
    if table.n != n || table.q != ctx.q() {
        return Err(Error::PreconditionFailed(format!(
            "table built for q = {}, n = {} cannot guide a q = {}, n = {n} recovery",
            table.q,
            table.n,
            ctx.q()
        )));
    }
    let marked: BTreeSet<usize> = relevant.iter().copied().collect();
    let spare = (0..n).find(|i| !marked.contains(i)).ok_or(Error::NoIrrelevantIndex)?;
    let w = 1.0 / (8.0 * n as f64);
    let center = table.value(k);
    let delta_each = delta / (marked.len() as f64 * (ctx.q() - 1) as f64);
    for &i in &marked {
        let mut matched = Vec::new();
        for alpha in 1..ctx.q() {
            let est = shifted_psi(
                a,
                oracle,
                &[(i, ctx.neg(alpha)), (spare, 1)],
                w,
                delta_each,
                seed::derive(rec_seed, "recover-shift", ((i as u64) << 32) | alpha),
                budget,
            )?;
            if (est - center).abs() <= w + BAND_TOL {
                matched.push(alpha);
            }
        }
        if matched.len() != 1 {
            return Err(Error::AmbiguousCoefficient { index: i, matches: matched.len() });
        }
        coeffs[i] = matched[0];
    }
    LinearFn::new(ctx, coeffs)
}

/// Iterations for Gaussian coefficient recovery at failure probability
/// δ: t = ⌈4·(1/(1−η_b))^k·ln(3/δ)⌉ — each iteration sees k clean
/// labels with probability ≥ (1−η_b)^k and a non-singular restricted
/// matrix with probability ≥ 1/4.
pub fn gauss_iterations(k: usize, eta_bound: f64, delta: f64) -> u64 {
    let per_clean = (1.0 / (1.0 - eta_bound)).powi(k as i32);
    (4.0 * per_clean * (3.0 / delta).ln()).ceil() as u64
}

/// Candidate coefficient assignments for the relevant variables by
/// repeated k-example Gaussian elimination.
///
/// Each iteration draws k fresh examples, restricts them to the
/// relevant coordinates, and solves the k×k system when it is
/// non-singular; the solution (verified by re-substitution, extended by
/// zeros elsewhere) joins the candidate pool.  An iteration whose k
/// labels are all clean and whose matrix is invertible contributes the
/// true restriction, so after t = [`gauss_iterations`] rounds the pool
/// contains it with probability ≥ 1 − δ/3.  Noise can also mint wrong
/// candidates — the pool is for hypothesis selection, not for direct
/// use.  Duplicates are collapsed; an empty pool is a possible outcome,
/// not an error.
pub fn recover_coefficients_gauss(
    relevant: &[usize],
    oracle: &mut ExampleOracle,
    delta: f64,
    budget: &Budget,
) -> Result<Vec<LinearFn>> {
    let ctx = oracle.ctx();
    let n = oracle.dim();
    let k = relevant.len();
    if k == 0 {
        return Err(Error::PreconditionFailed(
            "Gaussian recovery needs at least one relevant variable".into(),
        ));
    }
    for &i in relevant {
        if i >= n {
            return Err(Error::PreconditionFailed(format!(
                "relevant index {i} outside dimension {n}"
            )));
        }
    }
    let t = gauss_iterations(k, oracle.eta_bound(), delta);
    let mut candidates = Vec::new();
    let mut seen = BTreeSet::new();
    for _ in 0..t {
        let mut rows = Vec::with_capacity(k);
        let mut labels = Vec::with_capacity(k);
        for _ in 0..k {
            let ex = oracle.next_example()?;
            rows.push(relevant.iter().map(|&i| ex.a[i]).collect::<Vec<u64>>());
            labels.push(ex.b);
        }
        budget.poll(oracle.draws())?;
        let Some(sol) = ctx.solve_square_system(rows.clone(), labels.clone()) else {
            continue;
        };
        // Every emitted candidate must exactly solve its system.
        let solves = rows.iter().zip(&labels).all(|(row, &b)| {
            row.iter().zip(&sol).fold(0, |acc, (&x, &c)| ctx.add(acc, ctx.mul(x, c))) == b
        });
        if !solves {
            continue;
        }
        let mut coeffs = vec![0u64; n];
        for (j, &i) in relevant.iter().enumerate() {
            coeffs[i] = sol[j];
        }
        if seen.insert(coeffs.clone()) {
            candidates.push(LinearFn::new(ctx, coeffs)?);
        }
    }
    Ok(candidates)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum IdentifyMethod {
    /// Ψ-band classification via label shifts.
    Psi,
    /// Thresholded sparse-versus-random distinguisher.
    Distinguisher,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum CoeffMethod {
    /// Coefficients from shifted-Ψ probes.
    PsiCoeff,
    /// Coefficients from repeated Gaussian elimination plus selection.
    GaussCoeff,
}

/// Which identification and recovery routes [`learn_sparse_k`] chains.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct Method {
    pub identify: IdentifyMethod,
    pub coeff: CoeffMethod,
    /// Majority trials per index on the distinguisher route.
    pub dist_trials: u64,
}

impl Method {
    pub fn new(identify: IdentifyMethod, coeff: CoeffMethod) -> Method {
        Method { identify, coeff, dist_trials: DEFAULT_DISTINGUISHER_TRIALS }
    }

    /// Parse "identify+coeff", e.g. "psi+psi-coeff" or
    /// "distinguisher+gauss-coeff".
    pub fn parse(s: &str) -> Result<Method> {
        let bad = || {
            Error::ParseInstance(format!(
                "unknown method `{s}` (expected identify+coeff with identify ∈ \
                 {{psi, distinguisher}} and coeff ∈ {{psi-coeff, gauss-coeff}})"
            ))
        };
        let (id, co) = s.split_once('+').ok_or_else(bad)?;
        let identify = match id {
            "psi" => IdentifyMethod::Psi,
            "distinguisher" => IdentifyMethod::Distinguisher,
            _ => return Err(bad()),
        };
        let coeff = match co {
            "psi-coeff" => CoeffMethod::PsiCoeff,
            "gauss-coeff" => CoeffMethod::GaussCoeff,
            _ => return Err(bad()),
        };
        Ok(Method::new(identify, coeff))
    }

    pub fn descriptor(&self) -> String {
        let id = match self.identify {
            IdentifyMethod::Psi => "psi",
            IdentifyMethod::Distinguisher => "distinguisher",
        };
        let co = match self.coeff {
            CoeffMethod::PsiCoeff => "psi-coeff",
            CoeffMethod::GaussCoeff => "gauss-coeff",
        };
        format!("{id}+{co}")
    }
}

fn wrap_contract(e: Error) -> Error {
    match e {
        Error::IntervalOverlap { .. } | Error::NoGapFound { .. } => e.into_contract_violation(),
        other => other,
    }
}

/// Identification plus recovery against an already-built table and an
/// already-located gap k.  Failure budget: δ/8 identification, δ/4
/// recovery (matching [`learn_sparse_k`]'s split, which spends δ/4 on
/// the table).
pub fn learn_with_known_k(
    approx: &ApproxSpec,
    gamma: &GammaSpec,
    table: &PsiTable,
    k: usize,
    oracle: &mut ExampleOracle,
    method: Method,
    delta: f64,
    seed: u64,
    budget: &Budget,
) -> Result<LinearFn> {
    let ctx = oracle.ctx();
    let n = oracle.dim();
    let dp = default_delta_prime(ctx.q(), n);
    let report = match method.identify {
        IdentifyMethod::Psi => {
            let mut a = approx.build_for_tables(gamma, dp, oracle.eta_bound(), seed::derive(seed, "classify-approx", 0), n);
            classify_variables_psi(
                &mut a,
                table,
                k,
                oracle,
                delta / 8.0,
                seed::derive(seed, "classify", 0),
                budget,
            )
            .map_err(wrap_contract)?
        }
        IdentifyMethod::Distinguisher => {
            let mut a = approx.build(gamma, dp, oracle.eta_bound(), seed::derive(seed, "identify-approx", 0));
            identify_relevant_distinguisher(
                &mut a,
                gamma,
                oracle,
                k,
                method.dist_trials,
                seed::derive(seed, "identify", 0),
                budget,
            )?
        }
    };
    let relevant = report.relevant_indices();
    if relevant.is_empty() {
        return Ok(LinearFn::zero(ctx, n));
    }
    match method.coeff {
        CoeffMethod::PsiCoeff => {
            let mut a = approx.build_for_tables(gamma, dp, oracle.eta_bound(), seed::derive(seed, "recover-approx", 0), n);
            recover_coefficients_psi(
                &mut a,
                table,
                k,
                oracle,
                &relevant,
                delta / 4.0,
                seed::derive(seed, "recover", 0),
                budget,
            )
        }
        CoeffMethod::GaussCoeff => {
            let candidates = recover_coefficients_gauss(&relevant, oracle, delta / 8.0, budget)?;
            crate::full_learner::hypothesis_select(&candidates, oracle, delta / 8.0, budget)
        }
    }
}

/// The assembled proper learner for targets promised in the
/// gap-located sparsity class.
///
/// Pipeline: build a Ψ table at h = 1/(16n) (failure budget δ/4), find
/// the smallest gap k in the window starting at m, identify relevant
/// variables and recover coefficients via `method`.  Returns the exact
/// hidden target with probability ≥ 1 − δ up to the approximator's own
/// per-call failures.  `m` must satisfy 1 ≤ m ≤ γ⁻¹(γ⁻¹(n)) and the
/// hidden sparsity must lie in the window the gap argument covers.
/// A missing gap or touching decision bands is a broken approximator
/// contract, surfaced as [`Error::ContractViolation`].
pub fn learn_sparse_k(
    approx: &ApproxSpec,
    gamma: &GammaSpec,
    m: usize,
    oracle: &mut ExampleOracle,
    method: Method,
    delta: f64,
    seed: u64,
    budget: &Budget,
) -> Result<LinearFn> {
    let ctx = oracle.ctx();
    let n = oracle.dim();
    if let Some(rate) = oracle.effective_eta() {
        if (rate - oracle.eta_bound()).abs() > 1e-9 {
            return Err(Error::PreconditionFailed(format!(
                "learning needs the stream at noise exactly eta_bound = {}, got {rate}",
                oracle.eta_bound()
            )));
        }
    }
    let h = 1.0 / (16.0 * n as f64);
    let dp = default_delta_prime(ctx.q(), n);
    let mut ta = approx.build_for_tables(gamma, dp, oracle.eta_bound(), seed::derive(seed, "table-approx", 0), n);
    let (table, _) = build_psi_table(
        &mut ta,
        gamma,
        ctx,
        n,
        oracle.eta_bound(),
        h,
        delta / 4.0,
        seed::derive(seed, "table", 0),
        budget,
    )?;
    let k = find_gap_k(&table, gamma, m, ctx.q() == 2).map_err(wrap_contract)?;
    learn_with_known_k(
        approx,
        gamma,
        &table,
        k,
        oracle,
        method,
        delta,
        seed::derive(seed, "known-k", 0),
        budget,
    )
}

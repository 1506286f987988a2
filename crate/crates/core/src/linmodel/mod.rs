//! Linear targets, labeled examples, and example-stream transforms.
//!
//! A target is a linear function f(x) = Σ λ_i·x_i over F_q^n; its sparsity
//! d(f) counts the nonzero coefficients.  Learners see f only through
//! labeled examples (a, b), and the reductions reshape those streams with
//! a handful of transforms:
//!
//! - `magnify_noise` — raise the noise rate from an assumed η to a target η
//! - `permute_scale_transform` — rename/rescale coordinates so the target
//!   becomes a uniformly random function of the same sparsity
//! - `shift_label` — turn f-examples into (f+δ)-examples
//! - `randomize_coordinate` — overwrite one coordinate with a fresh draw
//! - `pad_example` — embed the stream in a larger ambient dimension
//!
//! The free functions here act on single examples; [`oracle`] stacks them
//! onto a stream.

pub mod gamma;
pub mod instance;
pub mod oracle;

pub use gamma::{ceil_out, floor_out, GammaSpec, OUTWARD_TOL};
pub use instance::Instance;
pub use oracle::{EffectiveTarget, ExampleOracle, Transform};

use rand::Rng;

use crate::error::Error;
use crate::field::FieldCtx;
use crate::Result;

// ---------------------------------------------------------------------------
// Linear functions
// ---------------------------------------------------------------------------

/// A linear function over F_q^n, stored as its dense coefficient vector.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct LinearFn {
    ctx: FieldCtx,
    coeffs: Vec<u64>,
}

impl LinearFn {
    pub fn new(ctx: FieldCtx, coeffs: Vec<u64>) -> Result<Self> {
        for &c in &coeffs {
            if !ctx.is_canonical(c) {
                return Err(Error::ParseInstance(format!(
                    "coefficient {c} not canonical mod {}",
                    ctx.q()
                )));
            }
        }
        Ok(LinearFn { ctx, coeffs })
    }

    pub fn zero(ctx: FieldCtx, n: usize) -> Self {
        LinearFn {
            ctx,
            coeffs: vec![0; n],
        }
    }

    /// The function coeff·x_i on n variables.
    pub fn singleton(ctx: FieldCtx, n: usize, i: usize, coeff: u64) -> Result<Self> {
        if i >= n {
            return Err(Error::DimensionMismatch { expected: n, got: i });
        }
        let mut coeffs = vec![0; n];
        coeffs[i] = coeff % ctx.q();
        Ok(LinearFn { ctx, coeffs })
    }

    #[inline]
    pub fn ctx(&self) -> FieldCtx {
        self.ctx
    }

    #[inline]
    pub fn dim(&self) -> usize {
        self.coeffs.len()
    }

    #[inline]
    pub fn coeffs(&self) -> &[u64] {
        &self.coeffs
    }

    #[inline]
    pub fn coeff(&self, i: usize) -> u64 {
        self.coeffs[i]
    }

    /// d(f): number of nonzero coefficients.
    pub fn sparsity(&self) -> usize {
        self.coeffs.iter().filter(|&&c| c != 0).count()
    }

    /// Indices of nonzero coefficients, ascending.
    pub fn support(&self) -> Vec<usize> {
        (0..self.coeffs.len())
            .filter(|&i| self.coeffs[i] != 0)
            .collect()
    }

    /// f(a) = Σ λ_i·a_i.
    pub fn eval(&self, a: &[u64]) -> Result<u64> {
        if a.len() != self.coeffs.len() {
            return Err(Error::DimensionMismatch {
                expected: self.coeffs.len(),
                got: a.len(),
            });
        }
        let f = self.ctx;
        let mut acc = 0u64;
        for (&c, &x) in self.coeffs.iter().zip(a) {
            if c != 0 {
                acc = f.add(acc, f.mul(c, x));
            }
        }
        Ok(acc)
    }

    /// Coefficient-wise sum (same dimension required).
    pub fn add(&self, other: &LinearFn) -> Result<LinearFn> {
        if other.dim() != self.dim() {
            return Err(Error::DimensionMismatch {
                expected: self.dim(),
                got: other.dim(),
            });
        }
        let f = self.ctx;
        let coeffs = self
            .coeffs
            .iter()
            .zip(&other.coeffs)
            .map(|(&a, &b)| f.add(a, b))
            .collect();
        Ok(LinearFn { ctx: f, coeffs })
    }

    /// Coefficient-wise difference.
    pub fn sub(&self, other: &LinearFn) -> Result<LinearFn> {
        if other.dim() != self.dim() {
            return Err(Error::DimensionMismatch {
                expected: self.dim(),
                got: other.dim(),
            });
        }
        let f = self.ctx;
        let coeffs = self
            .coeffs
            .iter()
            .zip(&other.coeffs)
            .map(|(&a, &b)| f.sub(a, b))
            .collect();
        Ok(LinearFn { ctx: f, coeffs })
    }

    /// Truncate to the first `n` coordinates.  Errors if any dropped
    /// coordinate carries a nonzero coefficient.
    pub fn project(&self, n: usize) -> Result<LinearFn> {
        if n > self.dim() {
            return Err(Error::DimensionMismatch {
                expected: self.dim(),
                got: n,
            });
        }
        if self.coeffs[n..].iter().any(|&c| c != 0) {
            return Err(Error::PreconditionFailed(format!(
                "support extends beyond the first {n} coordinates"
            )));
        }
        Ok(LinearFn {
            ctx: self.ctx,
            coeffs: self.coeffs[..n].to_vec(),
        })
    }

    /// Extend with zero coefficients up to dimension `n`.
    pub fn extend(&self, n: usize) -> Result<LinearFn> {
        if n < self.dim() {
            return Err(Error::ShrinkNotAllowed {
                from: self.dim(),
                to: n,
            });
        }
        let mut coeffs = self.coeffs.clone();
        coeffs.resize(n, 0);
        Ok(LinearFn {
            ctx: self.ctx,
            coeffs,
        })
    }

    /// In-place self ← self + other (dimensions must already match);
    /// returns the change in support size.  Internal: the oracle's
    /// cached effective-target state updates through these so that a
    /// push/pop pair costs no allocation.
    pub(crate) fn add_assign(&mut self, other: &LinearFn) -> isize {
        debug_assert_eq!(self.coeffs.len(), other.coeffs.len());
        let mut change = 0isize;
        for (c, &o) in self.coeffs.iter_mut().zip(&other.coeffs) {
            if o == 0 {
                continue;
            }
            let next = self.ctx.add(*c, o);
            change += (next != 0) as isize - (*c != 0) as isize;
            *c = next;
        }
        change
    }

    /// In-place self ← self − other; returns the change in support size.
    pub(crate) fn sub_assign(&mut self, other: &LinearFn) -> isize {
        debug_assert_eq!(self.coeffs.len(), other.coeffs.len());
        let mut change = 0isize;
        for (c, &o) in self.coeffs.iter_mut().zip(&other.coeffs) {
            if o == 0 {
                continue;
            }
            let next = self.ctx.sub(*c, o);
            change += (next != 0) as isize - (*c != 0) as isize;
            *c = next;
        }
        change
    }

    /// In-place self ← self + λ·x_i; returns the change in support size.
    pub(crate) fn add_coord_assign(&mut self, index: usize, coeff: u64) -> isize {
        let c = &mut self.coeffs[index];
        let next = self.ctx.add(*c, coeff);
        let change = (next != 0) as isize - (*c != 0) as isize;
        *c = next;
        change
    }

    /// In-place zero-extension to dimension `n` (callers check growth).
    pub(crate) fn extend_in_place(&mut self, n: usize) {
        debug_assert!(n >= self.coeffs.len());
        self.coeffs.resize(n, 0);
    }

    /// In-place truncation to dimension `n`; the dropped tail must be
    /// all zeros (it is for un-padding, the only caller).
    pub(crate) fn truncate_in_place(&mut self, n: usize) {
        debug_assert!(self.coeffs[n..].iter().all(|&c| c == 0));
        self.coeffs.truncate(n);
    }
}

/// Uniform draw from Lin(F, d) on n variables: a uniform d-subset as
/// support, uniform nonzero coefficients on it.
pub fn sample_sparse_linear<R: Rng + ?Sized>(
    ctx: FieldCtx,
    n: usize,
    d: usize,
    rng: &mut R,
) -> Result<LinearFn> {
    if d > n {
        return Err(Error::BadSparsity { d, n });
    }
    let mut coeffs = vec![0u64; n];
    let mut picked = 0usize;
    while picked < d {
        // Rejection on occupied slots keeps the support set uniform; with
        // d ≤ n the expected number of retries is below n·H(n).
        let i = (rng.next_u64() % n as u64) as usize;
        if coeffs[i] == 0 {
            coeffs[i] = ctx.sample_nonzero(rng);
            picked += 1;
        }
    }
    Ok(LinearFn { ctx, coeffs })
}

// ---------------------------------------------------------------------------
// Labeled examples and single-example transforms
// ---------------------------------------------------------------------------

/// One labeled example: a point a ∈ F_q^n and a (possibly corrupted) label.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct LabeledExample {
    pub a: Vec<u64>,
    pub b: u64,
}

/// Flip probability ρ that lifts a stream at noise `eta_assumed` to noise
/// `eta_target`: replacing the label with a uniform *other* element with
/// probability ρ gives correct-label rate
/// (1−η_a)(1−ρ) + η_a·ρ/(q−1) = 1−η_t.
pub fn magnification_probability(q: u64, eta_assumed: f64, eta_target: f64) -> Result<f64> {
    let max_eta = 1.0 - 1.0 / q as f64;
    if !(0.0..max_eta).contains(&eta_assumed) || !(eta_assumed..=max_eta).contains(&eta_target) {
        // Invalid rate pair; report the implied (possibly meaningless) ρ.
        let rho = (eta_target - eta_assumed) / (1.0 - eta_assumed * q as f64 / (q as f64 - 1.0));
        return Err(Error::BadRates { rho });
    }
    let rho = (eta_target - eta_assumed) / (1.0 - eta_assumed * q as f64 / (q as f64 - 1.0));
    if !(0.0..=1.0).contains(&rho) {
        return Err(Error::BadRates { rho });
    }
    Ok(rho)
}

/// Magnify noise on one example: with probability ρ the label is replaced
/// by a uniform element of F \ {b}.
pub fn magnify_noise<R: Rng + ?Sized>(
    ex: &LabeledExample,
    eta_assumed: f64,
    eta_target: f64,
    ctx: FieldCtx,
    rng: &mut R,
) -> Result<LabeledExample> {
    let rho = magnification_probability(ctx.q(), eta_assumed, eta_target)?;
    let mut out = ex.clone();
    if rng.gen::<f64>() < rho {
        out.b = ctx.add(out.b, ctx.sample_nonzero(rng));
    }
    Ok(out)
}

/// Coordinate renaming/rescaling: a'_j = v_j⁻¹ · a_{φ⁻¹(j)} with the label
/// untouched.  `phi` maps old positions to new ones (a bijection), `v` has
/// nonzero entries.  Noiseless labels stay consistent with the pushforward
/// target g = Σ λ_i·v_{φ(i)}·x_{φ(i)}.
pub fn permute_scale_transform(
    ex: &LabeledExample,
    v: &[u64],
    phi: &[usize],
    ctx: FieldCtx,
) -> Result<LabeledExample> {
    let n = ex.a.len();
    validate_permute_scale(v, phi, n, ctx)?;
    let mut a = vec![0u64; n];
    for (i, &j) in phi.iter().enumerate() {
        // a'_{φ(i)} = v_{φ(i)}⁻¹ · a_i
        let vinv = ctx.inv(v[j]).expect("validated nonzero");
        a[j] = ctx.mul(vinv, ex.a[i]);
    }
    Ok(LabeledExample { a, b: ex.b })
}

pub(crate) fn validate_permute_scale(
    v: &[u64],
    phi: &[usize],
    n: usize,
    ctx: FieldCtx,
) -> Result<()> {
    if v.len() != n {
        return Err(Error::DimensionMismatch {
            expected: n,
            got: v.len(),
        });
    }
    if phi.len() != n {
        return Err(Error::DimensionMismatch {
            expected: n,
            got: phi.len(),
        });
    }
    for (i, &s) in v.iter().enumerate() {
        if s == 0 {
            return Err(Error::ZeroScale { index: i });
        }
        if !ctx.is_canonical(s) {
            return Err(Error::ParseInstance(format!("scale {s} not canonical")));
        }
    }
    let mut seen = vec![false; n];
    for &j in phi {
        if j >= n || seen[j] {
            return Err(Error::PreconditionFailed(
                "φ is not a permutation of the coordinates".into(),
            ));
        }
        seen[j] = true;
    }
    Ok(())
}

/// The target the permute/scale transform makes the stream consistent
/// with: g with coefficient λ_i·v_{φ(i)} at position φ(i).
pub fn pushforward_permute_scale(f: &LinearFn, v: &[u64], phi: &[usize]) -> Result<LinearFn> {
    let n = f.dim();
    let ctx = f.ctx();
    validate_permute_scale(v, phi, n, ctx)?;
    let mut coeffs = vec![0u64; n];
    for (i, &j) in phi.iter().enumerate() {
        coeffs[j] = ctx.mul(f.coeff(i), v[j]);
    }
    Ok(LinearFn { ctx, coeffs })
}

/// Re-label with b + δ(a): examples for f become examples for f + δ.
pub fn shift_label(ex: &LabeledExample, delta: &LinearFn) -> Result<LabeledExample> {
    let add = delta.eval(&ex.a)?;
    Ok(LabeledExample {
        a: ex.a.clone(),
        b: delta.ctx().add(ex.b, add),
    })
}

/// Overwrite coordinate i with a fresh uniform draw.
pub fn randomize_coordinate<R: Rng + ?Sized>(
    ex: &LabeledExample,
    i: usize,
    ctx: FieldCtx,
    rng: &mut R,
) -> Result<LabeledExample> {
    if i >= ex.a.len() {
        return Err(Error::DimensionMismatch {
            expected: ex.a.len(),
            got: i,
        });
    }
    let mut out = ex.clone();
    out.a[i] = ctx.sample_uniform(rng);
    Ok(out)
}

/// Extend the point with fresh uniform coordinates up to `target_dim`.
pub fn pad_example<R: Rng + ?Sized>(
    ex: &LabeledExample,
    target_dim: usize,
    ctx: FieldCtx,
    rng: &mut R,
) -> Result<LabeledExample> {
    if target_dim < ex.a.len() {
        return Err(Error::ShrinkNotAllowed {
            from: ex.a.len(),
            to: target_dim,
        });
    }
    let mut a = ex.a.clone();
    while a.len() < target_dim {
        a.push(ctx.sample_uniform(rng));
    }
    Ok(LabeledExample { a, b: ex.b })
}

/// Uniform permutation of [0, n) by Fisher–Yates.
pub fn random_permutation<R: Rng + ?Sized>(n: usize, rng: &mut R) -> Vec<usize> {
    let mut phi: Vec<usize> = (0..n).collect();
    for i in (1..n).rev() {
        phi.swap(i, rng.gen_range(0..=i));
    }
    phi
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::rngs::StdRng;
    use rand::SeedableRng;

    fn f5() -> FieldCtx {
        FieldCtx::new(5).unwrap()
    }

    #[test]
    fn eval_example_and_sparsity() {
        let f = LinearFn::new(f5(), vec![2, 0, 3]).unwrap();
        // 2·1 + 0·4 + 3·2 = 8 = 3 mod 5
        assert_eq!(f.eval(&[1, 4, 2]).unwrap(), 3);
        assert_eq!(f.sparsity(), 2);
        assert_eq!(f.support(), vec![0, 2]);
        assert_eq!(LinearFn::zero(f5(), 4).sparsity(), 0);
        assert!(f.eval(&[1, 2]).is_err());
    }

    #[test]
    fn add_sub_round_trip() {
        let f = LinearFn::new(f5(), vec![2, 0, 3]).unwrap();
        let g = LinearFn::new(f5(), vec![4, 1, 0]).unwrap();
        let sum = f.add(&g).unwrap();
        assert_eq!(sum.coeffs(), &[1, 1, 3]);
        assert_eq!(sum.sub(&g).unwrap(), f);
    }

    #[test]
    fn project_and_extend() {
        let f = LinearFn::new(f5(), vec![2, 0, 3, 0, 0]).unwrap();
        let p = f.project(3).unwrap();
        assert_eq!(p.coeffs(), &[2, 0, 3]);
        assert_eq!(p.extend(5).unwrap(), f);
        // Dropping live support is refused.
        assert!(f.project(2).is_err());
    }

    #[test]
    fn sample_sparse_has_exact_sparsity_and_distinct_support() {
        let mut rng = StdRng::seed_from_u64(11);
        for d in 0..=6 {
            let f = sample_sparse_linear(f5(), 6, d, &mut rng).unwrap();
            assert_eq!(f.sparsity(), d);
        }
        assert!(sample_sparse_linear(f5(), 3, 4, &mut rng).is_err());
    }

    #[test]
    fn sample_sparse_is_roughly_uniform_over_small_class() {
        // Lin(F_3, 1) on 3 variables has 6 members; frequencies over 12k
        // draws should sit near 1/6.
        let ctx = FieldCtx::new(3).unwrap();
        let mut rng = StdRng::seed_from_u64(12);
        let mut counts = std::collections::HashMap::new();
        let draws = 12_000;
        for _ in 0..draws {
            let f = sample_sparse_linear(ctx, 3, 1, &mut rng).unwrap();
            *counts.entry(f.coeffs().to_vec()).or_insert(0u64) += 1;
        }
        assert_eq!(counts.len(), 6);
        for (c, &cnt) in &counts {
            let freq = cnt as f64 / draws as f64;
            assert!((freq - 1.0 / 6.0).abs() < 0.02, "{c:?}: {freq}");
        }
    }

    #[test]
    fn magnification_probability_instances() {
        // q=2: ρ = (0.2−0.1)/(1−2·0.1) = 0.125
        assert_eq!(magnification_probability(2, 0.1, 0.2).unwrap(), 0.125);
        // q=2 at the uniform boundary: ρ = (0.5−0.2)/(1−0.4) = 0.5
        assert_eq!(magnification_probability(2, 0.2, 0.5).unwrap(), 0.5);
        // q=3: ρ = (0.5−0.2)/(1−0.2·3/2) = 3/7
        let rho = magnification_probability(3, 0.2, 0.5).unwrap();
        assert!((rho - 3.0 / 7.0).abs() < 1e-12);
        // Identity when assumed = target.
        assert_eq!(magnification_probability(3, 0.3, 0.3).unwrap(), 0.0);
        // Lowering noise is impossible.
        assert!(matches!(
            magnification_probability(2, 0.3, 0.2),
            Err(Error::BadRates { .. })
        ));
        // Target beyond the uniform-label rate is refused.
        assert!(matches!(
            magnification_probability(2, 0.1, 0.6),
            Err(Error::BadRates { .. })
        ));
    }

    #[test]
    fn magnify_identity_rho_zero_leaves_labels() {
        let ctx = f5();
        let mut rng = StdRng::seed_from_u64(5);
        let ex = LabeledExample { a: vec![1, 2], b: 4 };
        for _ in 0..50 {
            assert_eq!(magnify_noise(&ex, 0.2, 0.2, ctx, &mut rng).unwrap(), ex);
        }
    }

    /// Exhaustive at q ≤ 3, n ≤ 3: shifting by δ₁ then δ₂ equals shifting
    /// by δ₁+δ₂ on every point, for every coefficient choice.
    #[test]
    fn shift_composition_exhaustive() {
        for q in [2u64, 3] {
            let ctx = FieldCtx::new(q).unwrap();
            let n = 2usize;
            let all: Vec<Vec<u64>> = cartesian(q, n);
            for d1 in &all {
                let delta1 = LinearFn::new(ctx, d1.clone()).unwrap();
                for d2 in &all {
                    let delta2 = LinearFn::new(ctx, d2.clone()).unwrap();
                    let both = delta1.add(&delta2).unwrap();
                    for a in &all {
                        for b in 0..q {
                            let ex = LabeledExample { a: a.clone(), b };
                            let two_step =
                                shift_label(&shift_label(&ex, &delta1).unwrap(), &delta2).unwrap();
                            let one_step = shift_label(&ex, &both).unwrap();
                            assert_eq!(two_step, one_step);
                        }
                    }
                }
            }
        }
    }

    fn cartesian(q: u64, n: usize) -> Vec<Vec<u64>> {
        let mut out = vec![vec![]];
        for _ in 0..n {
            out = out
                .into_iter()
                .flat_map(|v| {
                    (0..q).map(move |x| {
                        let mut w = v.clone();
                        w.push(x);
                        w
                    })
                })
                .collect();
        }
        out
    }

    /// Noiseless permute/scale consistency: b = g(a') with g the
    /// pushforward, for random (v, φ, f) triples.
    #[test]
    fn permute_scale_consistency_seeded() {
        let ctx = FieldCtx::new(7).unwrap();
        let n = 5;
        let mut rng = StdRng::seed_from_u64(77);
        for _ in 0..200 {
            let f = sample_sparse_linear(ctx, n, 3, &mut rng).unwrap();
            let v: Vec<u64> = (0..n).map(|_| ctx.sample_nonzero(&mut rng)).collect();
            let phi = random_permutation(n, &mut rng);
            let g = pushforward_permute_scale(&f, &v, &phi).unwrap();
            for _ in 0..10 {
                let a: Vec<u64> = (0..n).map(|_| ctx.sample_uniform(&mut rng)).collect();
                let ex = LabeledExample {
                    b: f.eval(&a).unwrap(),
                    a,
                };
                let moved = permute_scale_transform(&ex, &v, &phi, ctx).unwrap();
                assert_eq!(g.eval(&moved.a).unwrap(), moved.b);
            }
        }
    }

    #[test]
    fn permute_scale_rejects_bad_inputs() {
        let ctx = f5();
        let ex = LabeledExample { a: vec![1, 2], b: 0 };
        assert!(matches!(
            permute_scale_transform(&ex, &[1, 0], &[0, 1], ctx),
            Err(Error::ZeroScale { index: 1 })
        ));
        assert!(permute_scale_transform(&ex, &[1, 1], &[0, 0], ctx).is_err());
        assert!(permute_scale_transform(&ex, &[1], &[0, 1], ctx).is_err());
    }

    #[test]
    fn randomize_and_pad_shapes() {
        let ctx = f5();
        let mut rng = StdRng::seed_from_u64(3);
        let ex = LabeledExample { a: vec![1, 2, 3], b: 4 };
        let r = randomize_coordinate(&ex, 1, ctx, &mut rng).unwrap();
        assert_eq!(r.a.len(), 3);
        assert_eq!((r.a[0], r.a[2], r.b), (1, 3, 4));
        assert!(randomize_coordinate(&ex, 3, ctx, &mut rng).is_err());

        let p = pad_example(&ex, 6, ctx, &mut rng).unwrap();
        assert_eq!(p.a.len(), 6);
        assert_eq!(&p.a[..3], &[1, 2, 3]);
        assert_eq!(p.b, 4);
        assert!(matches!(
            pad_example(&ex, 2, ctx, &mut rng),
            Err(Error::ShrinkNotAllowed { from: 3, to: 2 })
        ));
        // Padding to the current dimension is the identity.
        assert_eq!(pad_example(&ex, 3, ctx, &mut rng).unwrap(), ex);
    }
}

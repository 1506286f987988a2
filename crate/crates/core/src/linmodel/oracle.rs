//! Noisy example oracles with transform stacks.
//!
//! An [`ExampleOracle`] produces labeled examples (a, b): a uniform over
//! F_q^n, and b = f(a) except with probability η, when b is uniform over
//! the *other* field elements.  The stream is a deterministic function of
//! (master seed, draw counter, transform stack): every random draw comes
//! from one RNG seeded via `seed::derive`, so identical seeds reproduce
//! identical streams no matter how callers are scheduled.
//!
//! Reductions reshape a stream by pushing [`Transform`]s; each drawn
//! example passes through the stack bottom-to-top.  Three label sources
//! exist:
//!
//! - planted: a hidden target f is simulated (the normal case);
//! - uniform-labels: b is uniform and independent of a (distinguisher
//!   calibration streams);
//! - recorded: replay of pre-drawn examples from a challenge file, where
//!   nobody — including this process — knows the target.
//!
//! [`ExampleOracle::effective_target`] walks the stack and reports what
//! the transformed stream is consistent with.  It exists for the planted
//! cheat approximator and for verification; learners never call it, and
//! on recorded streams it answers `Unknown`.

use rand::rngs::StdRng;
use rand::{Rng, SeedableRng};

use crate::error::Error;
use crate::field::FieldCtx;
use crate::seed;
use crate::Result;

use super::{
    magnification_probability, validate_permute_scale, LabeledExample, LinearFn,
};

// ---------------------------------------------------------------------------
// Transforms
// ---------------------------------------------------------------------------

/// One stacked stream transform.  Build via the constructors, which do the
/// dimension-free validation; `push_transform` checks dimensions against
/// the stack.
#[derive(Debug, Clone)]
pub enum Transform {
    /// Replace the label with a uniform other element w.p. ρ, lifting
    /// assumed noise `eta_assumed` to `eta_target`.
    MagnifyNoise {
        eta_assumed: f64,
        eta_target: f64,
        rho: f64,
    },
    /// a'_{φ(i)} = v_{φ(i)}⁻¹ · a_i; label untouched.
    PermuteScale {
        v: Vec<u64>,
        phi: Vec<usize>,
        v_inv: Vec<u64>,
    },
    /// b' = b + δ(a).
    ShiftLabel { delta: LinearFn },
    /// b' = b + λ·a_i — the single-coordinate shift, split out from
    /// `ShiftLabel` because classification pushes one per variable and
    /// a dense δ would cost Θ(n) to build, apply, and track where this
    /// costs O(1).
    ShiftCoordinate { index: usize, coeff: u64 },
    /// Overwrite coordinate `index` with a fresh uniform draw.
    RandomizeCoordinate { index: usize },
    /// Append fresh uniform coordinates up to `target_dim`.
    Pad { target_dim: usize },
}

impl Transform {
    pub fn magnify(ctx: FieldCtx, eta_assumed: f64, eta_target: f64) -> Result<Transform> {
        let rho = magnification_probability(ctx.q(), eta_assumed, eta_target)?;
        Ok(Transform::MagnifyNoise {
            eta_assumed,
            eta_target,
            rho,
        })
    }

    pub fn permute_scale(ctx: FieldCtx, v: Vec<u64>, phi: Vec<usize>) -> Result<Transform> {
        validate_permute_scale(&v, &phi, v.len(), ctx)?;
        let v_inv = v
            .iter()
            .map(|&s| ctx.inv(s).expect("validated nonzero"))
            .collect();
        Ok(Transform::PermuteScale { v, phi, v_inv })
    }

    pub fn shift(delta: LinearFn) -> Transform {
        Transform::ShiftLabel { delta }
    }

    pub fn shift_coord(index: usize, coeff: u64) -> Transform {
        Transform::ShiftCoordinate { index, coeff }
    }

    pub fn randomize(index: usize) -> Transform {
        Transform::RandomizeCoordinate { index }
    }

    pub fn pad(target_dim: usize) -> Transform {
        Transform::Pad { target_dim }
    }

    /// Output dimension given the input dimension.
    fn dim_after(&self, dim: usize) -> usize {
        match self {
            Transform::Pad { target_dim } => *target_dim,
            _ => dim,
        }
    }

    /// Apply to one example, drawing any needed randomness from `rng`.
    fn apply<R: Rng + ?Sized>(
        &self,
        ex: LabeledExample,
        ctx: FieldCtx,
        rng: &mut R,
    ) -> LabeledExample {
        match self {
            Transform::MagnifyNoise { rho, .. } => {
                let mut out = ex;
                if rng.gen::<f64>() < *rho {
                    out.b = ctx.add(out.b, ctx.sample_nonzero(rng));
                }
                out
            }
            Transform::PermuteScale { phi, v_inv, .. } => {
                let mut a = vec![0u64; ex.a.len()];
                for (i, &j) in phi.iter().enumerate() {
                    a[j] = ctx.mul(v_inv[j], ex.a[i]);
                }
                LabeledExample { a, b: ex.b }
            }
            Transform::ShiftLabel { delta } => {
                let add = delta.eval(&ex.a).expect("dimension checked at push");
                LabeledExample {
                    a: ex.a,
                    b: ctx.add(ex.b, add),
                }
            }
            Transform::ShiftCoordinate { index, coeff } => {
                let add = ctx.mul(*coeff, ex.a[*index]);
                LabeledExample {
                    a: ex.a,
                    b: ctx.add(ex.b, add),
                }
            }
            Transform::RandomizeCoordinate { index } => {
                let mut out = ex;
                out.a[*index] = ctx.sample_uniform(rng);
                out
            }
            Transform::Pad { target_dim } => {
                let mut a = ex.a;
                while a.len() < *target_dim {
                    a.push(ctx.sample_uniform(rng));
                }
                LabeledExample { a, b: ex.b }
            }
        }
    }
}

// ---------------------------------------------------------------------------
// Oracle
// ---------------------------------------------------------------------------

#[derive(Debug, Clone)]
enum LabelSource {
    Planted(LinearFn),
    UniformLabels { dim: usize },
    Recorded {
        dim: usize,
        examples: Vec<LabeledExample>,
        cursor: usize,
    },
}

/// What a transformed stream is consistent with.
#[derive(Debug, Clone, PartialEq)]
pub enum EffectiveTarget {
    /// Labels follow this linear function (up to the noise rate).
    Linear(LinearFn),
    /// Labels are uniform and independent of the point.
    UniformLabels,
    /// Nothing is known (recorded challenge stream).
    Unknown,
}

/// The stream facts every push keeps current, so that reading them is
/// O(1) no matter how deep the stack is.  Classification probes one
/// transform per variable; recomputing any of these by walking the
/// stack would make that loop quadratic in the dimension.
#[derive(Debug, Clone)]
struct EffectiveState {
    /// Dimension the consumer sees.
    dim: usize,
    /// Target the transformed stream is consistent with; `Linear` holds
    /// a dense function mutated in place as transforms come and go.
    target: EffectiveTarget,
    /// Support size of the target — valid only while it is `Linear`.
    sparsity: usize,
    /// Wrong-label rate, or None once it cannot be known.
    eta: Option<f64>,
}

/// How to roll `EffectiveState` back when its transform is popped.
/// Undo data is moved, never cloned, so a push/pop pair costs only what
/// the transform itself touches.
#[derive(Debug, Clone)]
enum StateUndo {
    /// The push left the state untouched (beyond the dimension).
    Unchanged,
    /// Restore the noise rate.
    Eta(Option<f64>),
    /// Subtract λ·x_i back out of the target.
    SubtractCoord { index: usize, coeff: u64 },
    /// Subtract the popped transform's dense δ back out of the target.
    SubtractDense,
    /// Truncate the target back to the pre-pad dimension.
    TruncateTarget,
    /// Put back a target the push replaced or collapsed.
    Restore {
        target: EffectiveTarget,
        sparsity: usize,
        eta: Option<f64>,
    },
}

#[derive(Debug, Clone)]
struct UndoFrame {
    dim: usize,
    undo: StateUndo,
}

#[derive(Debug, Clone)]
pub struct ExampleOracle {
    ctx: FieldCtx,
    source: LabelSource,
    eta: f64,
    eta_bound: f64,
    master_seed: u64,
    rng: StdRng,
    draws: u64,
    transforms: Vec<Transform>,
    state: EffectiveState,
    undo: Vec<UndoFrame>,
}

impl ExampleOracle {
    /// Simulated oracle around a hidden target.
    /// Requires 0 ≤ η ≤ η_bound < 1 − 1/q.
    pub fn planted(target: LinearFn, eta: f64, eta_bound: f64, master_seed: u64) -> Result<Self> {
        let ctx = target.ctx();
        validate_rates(ctx, eta, eta_bound)?;
        let state = EffectiveState {
            dim: target.dim(),
            sparsity: target.sparsity(),
            target: EffectiveTarget::Linear(target.clone()),
            eta: Some(eta),
        };
        Ok(ExampleOracle {
            ctx,
            source: LabelSource::Planted(target),
            eta,
            eta_bound,
            master_seed,
            rng: StdRng::seed_from_u64(seed::derive(master_seed, "oracle-stream", 0)),
            draws: 0,
            transforms: Vec::new(),
            state,
            undo: Vec::new(),
        })
    }

    /// Stream with uniform labels independent of the point (the "no
    /// target" stream used to calibrate distinguishers).
    pub fn uniform_labels(ctx: FieldCtx, dim: usize, master_seed: u64) -> Self {
        let rate = 1.0 - 1.0 / ctx.qf();
        ExampleOracle {
            ctx,
            source: LabelSource::UniformLabels { dim },
            eta: rate,
            eta_bound: rate,
            master_seed,
            rng: StdRng::seed_from_u64(seed::derive(master_seed, "uniform-stream", 0)),
            draws: 0,
            transforms: Vec::new(),
            state: EffectiveState {
                dim,
                target: EffectiveTarget::UniformLabels,
                sparsity: 0,
                eta: Some(rate),
            },
            undo: Vec::new(),
        }
    }

    /// Replay of pre-drawn examples (challenge mode).  The transform RNG
    /// is derived under a different label than any generating stream so
    /// transform draws never reuse the randomness that produced the
    /// recorded fields.
    pub fn replay(
        ctx: FieldCtx,
        dim: usize,
        examples: Vec<LabeledExample>,
        eta: f64,
        eta_bound: f64,
        master_seed: u64,
    ) -> Result<Self> {
        validate_rates(ctx, eta, eta_bound)?;
        for ex in &examples {
            if ex.a.len() != dim {
                return Err(Error::DimensionMismatch {
                    expected: dim,
                    got: ex.a.len(),
                });
            }
        }
        Ok(ExampleOracle {
            ctx,
            source: LabelSource::Recorded {
                dim,
                examples,
                cursor: 0,
            },
            eta,
            eta_bound,
            master_seed,
            rng: StdRng::seed_from_u64(seed::derive(master_seed, "replay-transforms", 0)),
            draws: 0,
            transforms: Vec::new(),
            state: EffectiveState {
                dim,
                target: EffectiveTarget::Unknown,
                sparsity: 0,
                eta: Some(eta),
            },
            undo: Vec::new(),
        })
    }

    #[inline]
    pub fn ctx(&self) -> FieldCtx {
        self.ctx
    }

    #[inline]
    pub fn eta(&self) -> f64 {
        self.eta
    }

    #[inline]
    pub fn eta_bound(&self) -> f64 {
        self.eta_bound
    }

    #[inline]
    pub fn master_seed(&self) -> u64 {
        self.master_seed
    }

    /// Examples drawn so far (raw draws, before any budget accounting).
    #[inline]
    pub fn draws(&self) -> u64 {
        self.draws
    }

    /// Dimension before the transform stack.
    pub fn base_dim(&self) -> usize {
        match &self.source {
            LabelSource::Planted(f) => f.dim(),
            LabelSource::UniformLabels { dim } => *dim,
            LabelSource::Recorded { dim, .. } => *dim,
        }
    }

    /// Dimension the consumer sees (after the transform stack).
    #[inline]
    pub fn dim(&self) -> usize {
        self.state.dim
    }

    /// Recorded examples left, for replay sources.
    pub fn remaining_recorded(&self) -> Option<usize> {
        match &self.source {
            LabelSource::Recorded {
                examples, cursor, ..
            } => Some(examples.len() - cursor),
            _ => None,
        }
    }

    pub fn stack_len(&self) -> usize {
        self.transforms.len()
    }

    /// Push a transform, validating it against the current stacked
    /// dimension and field.
    pub fn push_transform(&mut self, t: Transform) -> Result<()> {
        let dim = self.dim();
        match &t {
            Transform::MagnifyNoise { .. } => {}
            Transform::PermuteScale { v, phi, .. } => {
                validate_permute_scale(v, phi, dim, self.ctx)?;
            }
            Transform::ShiftLabel { delta } => {
                if delta.dim() != dim {
                    return Err(Error::DimensionMismatch {
                        expected: dim,
                        got: delta.dim(),
                    });
                }
                if delta.ctx() != self.ctx {
                    return Err(Error::PreconditionFailed(
                        "shift target lives in a different field".into(),
                    ));
                }
            }
            Transform::ShiftCoordinate { index, coeff } => {
                if *index >= dim {
                    return Err(Error::DimensionMismatch {
                        expected: dim,
                        got: *index,
                    });
                }
                if *coeff == 0 || !self.ctx.is_canonical(*coeff) {
                    return Err(Error::PreconditionFailed(format!(
                        "coordinate shift needs a nonzero field element, got {coeff} mod {}",
                        self.ctx.q()
                    )));
                }
            }
            Transform::RandomizeCoordinate { index } => {
                if *index >= dim {
                    return Err(Error::DimensionMismatch {
                        expected: dim,
                        got: *index,
                    });
                }
            }
            Transform::Pad { target_dim } => {
                if *target_dim < dim {
                    return Err(Error::ShrinkNotAllowed {
                        from: dim,
                        to: *target_dim,
                    });
                }
            }
        }
        let frame = self.advance_state(&t);
        self.transforms.push(t);
        self.undo.push(frame);
        Ok(())
    }

    /// Update the cached state for a just-validated transform and
    /// return the frame that undoes it.
    fn advance_state(&mut self, t: &Transform) -> UndoFrame {
        let old_dim = self.state.dim;
        let qf = self.ctx.qf();
        let uniform_rate = 1.0 - 1.0 / qf;
        let undo = match t {
            Transform::MagnifyNoise { rho, .. } => {
                let old = self.state.eta;
                self.state.eta = old.map(|eta| {
                    1.0 - ((1.0 - eta) * (1.0 - rho) + eta * rho / (qf - 1.0))
                });
                StateUndo::Eta(old)
            }
            Transform::PermuteScale { v, phi, .. } => {
                if let EffectiveTarget::Linear(f) = &self.state.target {
                    let pushed = super::pushforward_permute_scale(f, v, phi)
                        .expect("validated at push");
                    let old = std::mem::replace(
                        &mut self.state.target,
                        EffectiveTarget::Linear(pushed),
                    );
                    StateUndo::Restore {
                        target: old,
                        sparsity: self.state.sparsity,
                        eta: self.state.eta,
                    }
                } else {
                    StateUndo::Unchanged
                }
            }
            Transform::ShiftLabel { delta } => {
                if let EffectiveTarget::Linear(f) = &mut self.state.target {
                    let change = f.add_assign(delta);
                    self.state.sparsity = (self.state.sparsity as isize + change) as usize;
                    StateUndo::SubtractDense
                } else {
                    StateUndo::Unchanged
                }
            }
            Transform::ShiftCoordinate { index, coeff } => {
                if let EffectiveTarget::Linear(f) = &mut self.state.target {
                    let change = f.add_coord_assign(*index, *coeff);
                    self.state.sparsity = (self.state.sparsity as isize + change) as usize;
                    StateUndo::SubtractCoord {
                        index: *index,
                        coeff: *coeff,
                    }
                } else {
                    StateUndo::Unchanged
                }
            }
            Transform::RandomizeCoordinate { index } => match &self.state.target {
                EffectiveTarget::Linear(f) if f.coeff(*index) != 0 => {
                    // A relevant coordinate was severed: λ_i·a_i^old is a
                    // uniform summand the consumer never sees, so labels
                    // become uniform and independent of the point.
                    let old = std::mem::replace(
                        &mut self.state.target,
                        EffectiveTarget::UniformLabels,
                    );
                    let frame = StateUndo::Restore {
                        target: old,
                        sparsity: self.state.sparsity,
                        eta: self.state.eta,
                    };
                    self.state.eta = Some(uniform_rate);
                    frame
                }
                EffectiveTarget::Unknown => {
                    // Whether the randomized coordinate was relevant is
                    // hidden, so the rate is no longer knowable.
                    let old = self.state.eta;
                    self.state.eta = None;
                    StateUndo::Eta(old)
                }
                _ => StateUndo::Unchanged,
            },
            Transform::Pad { target_dim } => {
                if let EffectiveTarget::Linear(f) = &mut self.state.target {
                    f.extend_in_place(*target_dim);
                    StateUndo::TruncateTarget
                } else {
                    StateUndo::Unchanged
                }
            }
        };
        self.state.dim = t.dim_after(old_dim);
        UndoFrame { dim: old_dim, undo }
    }

    pub fn pop_transform(&mut self) -> Option<Transform> {
        let t = self.transforms.pop()?;
        let frame = self.undo.pop().expect("undo frames are pushed in lockstep");
        self.state.dim = frame.dim;
        match frame.undo {
            StateUndo::Unchanged => {}
            StateUndo::Eta(old) => self.state.eta = old,
            StateUndo::SubtractCoord { index, coeff } => {
                let EffectiveTarget::Linear(f) = &mut self.state.target else {
                    unreachable!("coordinate shifts only advance linear targets");
                };
                let change = f.add_coord_assign(index, self.ctx.neg(coeff));
                self.state.sparsity = (self.state.sparsity as isize + change) as usize;
            }
            StateUndo::SubtractDense => {
                let Transform::ShiftLabel { delta } = &t else {
                    unreachable!("dense subtraction is recorded only for label shifts");
                };
                let EffectiveTarget::Linear(f) = &mut self.state.target else {
                    unreachable!("label shifts only advance linear targets");
                };
                let change = f.sub_assign(delta);
                self.state.sparsity = (self.state.sparsity as isize + change) as usize;
            }
            StateUndo::TruncateTarget => {
                let EffectiveTarget::Linear(f) = &mut self.state.target else {
                    unreachable!("pads only grow linear targets");
                };
                f.truncate_in_place(frame.dim);
            }
            StateUndo::Restore {
                target,
                sparsity,
                eta,
            } => {
                self.state.target = target;
                self.state.sparsity = sparsity;
                self.state.eta = eta;
            }
        }
        Some(t)
    }

    /// Derived oracle with the same source and stack but an independent
    /// stream, seeded as hash(master, label, index).  Used to hand
    /// parallel trials their own deterministic streams.
    pub fn fork(&self, label: &str, index: u64) -> ExampleOracle {
        let mut child = self.clone();
        child.rng = StdRng::seed_from_u64(seed::derive(self.master_seed, label, index));
        child.draws = 0;
        child
    }

    /// Draw the next example and run it through the transform stack.
    pub fn next_example(&mut self) -> Result<LabeledExample> {
        let ctx = self.ctx;
        let raw = match &mut self.source {
            LabelSource::Planted(f) => {
                let a: Vec<u64> = (0..f.dim()).map(|_| ctx.sample_uniform(&mut self.rng)).collect();
                let mut b = f.eval(&a).expect("dims match by construction");
                if self.eta > 0.0 && self.rng.gen::<f64>() < self.eta {
                    b = ctx.add(b, ctx.sample_nonzero(&mut self.rng));
                }
                LabeledExample { a, b }
            }
            LabelSource::UniformLabels { dim } => {
                let a: Vec<u64> = (0..*dim).map(|_| ctx.sample_uniform(&mut self.rng)).collect();
                let b = ctx.sample_uniform(&mut self.rng);
                LabeledExample { a, b }
            }
            LabelSource::Recorded {
                examples, cursor, ..
            } => {
                if *cursor >= examples.len() {
                    return Err(Error::BudgetExceeded(format!(
                        "recorded stream exhausted after {} examples",
                        examples.len()
                    )));
                }
                let ex = examples[*cursor].clone();
                *cursor += 1;
                ex
            }
        };
        self.draws += 1;
        let mut ex = raw;
        for t in &self.transforms {
            ex = t.apply(ex, ctx, &mut self.rng);
        }
        Ok(ex)
    }

    /// Wrong-label probability of the transformed stream, or None when
    /// it cannot be known (a recorded stream with a randomized
    /// coordinate — whether that coordinate was relevant is hidden).
    ///
    /// One magnification step with replacement probability ρ maps the
    /// rate η to 1 − [(1−η)(1−ρ) + η·ρ/(q−1)]: a correct label survives
    /// the coin, and a wrong one is repaired when the added offset
    /// happens to cancel it.  Uniform labels (rate 1 − 1/q) are a fixed
    /// point of that map.
    #[inline]
    pub fn effective_eta(&self) -> Option<f64> {
        self.state.eta
    }

    /// What the transformed stream is consistent with.  Simulation
    /// introspection for the planted cheat approximator and for
    /// verification — learners must not call this, and on recorded
    /// streams there is nothing to reveal.
    #[inline]
    pub fn effective_target(&self) -> &EffectiveTarget {
        &self.state.target
    }

    /// Support size of the effective target, when it is linear.  Kept
    /// current by the transform stack, so cheat approximators can
    /// answer without touching the coefficient vector.
    #[inline]
    pub fn effective_sparsity(&self) -> Option<usize> {
        match self.state.target {
            EffectiveTarget::Linear(_) => Some(self.state.sparsity),
            _ => None,
        }
    }
}

fn validate_rates(ctx: FieldCtx, eta: f64, eta_bound: f64) -> Result<()> {
    let max = 1.0 - 1.0 / ctx.qf();
    if !(0.0..=eta_bound).contains(&eta) || eta_bound >= max {
        return Err(Error::PreconditionFailed(format!(
            "need 0 ≤ η ({eta}) ≤ η_bound ({eta_bound}) < 1 − 1/q ({max})"
        )));
    }
    Ok(())
}

//! Approximation-factor specifications.
//!
//! A γ specification is a strictly increasing function with γ(x) ≥ x
//! (strict above 1) describing how loosely an approximator may answer:
//! a D for a target of sparsity d satisfies γ⁻¹(d) ≤ D ≤ γ(d).  Three
//! shapes are supported — affine γ(x) = c·x, power γ(x) = x^e, and a
//! user-supplied sample table with monotone piecewise-linear
//! interpolation (anchored at (0,0)).
//!
//! Derived quantities used throughout the reductions:
//!   Γ(x) = γ(γ(x))   and   Δ(x) = min(Γ(x), n)
//! where n is the ambient dimension carried as `n_cap`.  Because every
//! downstream use compares these reals against integers, conversions go
//! through [`floor_out`]/[`ceil_out`], which round outward by 1e-6 first —
//! widening accept bands is always safe, tightening them is not.

use crate::error::Error;
use crate::Result;

/// Outward rounding applied before real→integer comparisons.
pub const OUTWARD_TOL: f64 = 1e-6;

/// Bisection tolerance for table-kind inversion.
const BISECT_TOL: f64 = 1e-9;

/// ⌊x⌋ after nudging up by the outward tolerance.
pub fn floor_out(x: f64) -> i64 {
    (x + OUTWARD_TOL).floor() as i64
}

/// ⌈x⌉ after nudging down by the outward tolerance.
pub fn ceil_out(x: f64) -> i64 {
    (x - OUTWARD_TOL).ceil() as i64
}

#[derive(Debug, Clone, PartialEq)]
enum GammaKind {
    Affine { factor: f64 },
    Power { exponent: f64 },
    Table { points: Vec<(f64, f64)> },
}

#[derive(Debug, Clone, PartialEq)]
pub struct GammaSpec {
    kind: GammaKind,
    n_cap: usize,
}

impl GammaSpec {
    /// γ(x) = factor·x, factor > 1.
    pub fn affine(factor: f64, n_cap: usize) -> Result<Self> {
        if !(factor > 1.0) || !factor.is_finite() {
            return Err(Error::PreconditionFailed(format!(
                "affine γ factor must be a finite value > 1, got {factor}"
            )));
        }
        let spec = GammaSpec {
            kind: GammaKind::Affine { factor },
            n_cap,
        };
        spec.self_check()?;
        Ok(spec)
    }

    /// γ(x) = x^exponent, exponent > 1.
    pub fn power(exponent: f64, n_cap: usize) -> Result<Self> {
        if !(exponent > 1.0) || !exponent.is_finite() {
            return Err(Error::PreconditionFailed(format!(
                "power γ exponent must be a finite value > 1, got {exponent}"
            )));
        }
        let spec = GammaSpec {
            kind: GammaKind::Power { exponent },
            n_cap,
        };
        spec.self_check()?;
        Ok(spec)
    }

    /// Piecewise-linear γ through the given strictly increasing sample
    /// points, anchored at the implicit (0, 0).  Outside the last sample
    /// the function is undefined (OutOfDomain).
    pub fn table(points: Vec<(f64, f64)>, n_cap: usize) -> Result<Self> {
        if points.is_empty() {
            return Err(Error::PreconditionFailed(
                "table γ needs at least one sample point".into(),
            ));
        }
        let mut prev = (0.0f64, 0.0f64);
        for &(x, y) in &points {
            if !x.is_finite() || !y.is_finite() || x <= prev.0 || y <= prev.1 {
                return Err(Error::PreconditionFailed(format!(
                    "table γ samples must be strictly increasing in both coordinates (at x={x})"
                )));
            }
            if x > 1.0 + OUTWARD_TOL && y <= x {
                return Err(Error::PreconditionFailed(format!(
                    "table γ must satisfy γ(x) > x above 1, got γ({x}) = {y}"
                )));
            }
            prev = (x, y);
        }
        let spec = GammaSpec {
            kind: GammaKind::Table { points },
            n_cap,
        };
        spec.self_check()?;
        Ok(spec)
    }

    /// Same shape with a different ambient-dimension cap (used when an
    /// oracle is padded to a larger dimension).
    pub fn with_cap(&self, n_cap: usize) -> Self {
        GammaSpec {
            kind: self.kind.clone(),
            n_cap,
        }
    }

    pub fn n_cap(&self) -> usize {
        self.n_cap
    }

    /// Short human/machine descriptor, e.g. "affine:2" or "power:1.5".
    pub fn descriptor(&self) -> String {
        match &self.kind {
            GammaKind::Affine { factor } => format!("affine:{factor}"),
            GammaKind::Power { exponent } => format!("power:{exponent}"),
            GammaKind::Table { points } => format!("table:{}pts", points.len()),
        }
    }

    /// γ(x) for x ≥ 0.
    pub fn eval(&self, x: f64) -> Result<f64> {
        if !x.is_finite() || x < 0.0 {
            return Err(Error::OutOfDomain { value: x });
        }
        match &self.kind {
            GammaKind::Affine { factor } => Ok(factor * x),
            GammaKind::Power { exponent } => Ok(x.powf(*exponent)),
            GammaKind::Table { points } => {
                let mut lo = (0.0f64, 0.0f64);
                for &(px, py) in points {
                    if x <= px {
                        let t = if px > lo.0 { (x - lo.0) / (px - lo.0) } else { 0.0 };
                        return Ok(lo.1 + t * (py - lo.1));
                    }
                    lo = (px, py);
                }
                Err(Error::OutOfDomain { value: x })
            }
        }
    }

    /// γ⁻¹(y): closed form for affine/power, bisection (tolerance 1e-9)
    /// for table samples.
    pub fn inv(&self, y: f64) -> Result<f64> {
        if !y.is_finite() || y < 0.0 {
            return Err(Error::OutOfDomain { value: y });
        }
        match &self.kind {
            GammaKind::Affine { factor } => Ok(y / factor),
            GammaKind::Power { exponent } => Ok(y.powf(1.0 / exponent)),
            GammaKind::Table { points } => {
                let (x_hi, y_hi) = *points.last().expect("validated non-empty");
                if y > y_hi {
                    return Err(Error::OutOfDomain { value: y });
                }
                let (mut lo, mut hi) = (0.0f64, x_hi);
                while hi - lo > BISECT_TOL {
                    let mid = 0.5 * (lo + hi);
                    if self.eval(mid)? < y {
                        lo = mid;
                    } else {
                        hi = mid;
                    }
                }
                Ok(0.5 * (lo + hi))
            }
        }
    }

    /// Γ(x) = γ(γ(x)).
    pub fn big_gamma(&self, x: f64) -> Result<f64> {
        self.eval(self.eval(x)?)
    }

    /// Δ(x) = min(Γ(x), n_cap).
    pub fn delta_cap(&self, x: f64) -> Result<f64> {
        Ok(self.big_gamma(x)?.min(self.n_cap as f64))
    }

    /// Integer approximation band for sparsity d:
    /// [⌈γ⁻¹(d)⌉, ⌊γ(d)⌋] with outward rounding.  May come back inverted
    /// (lo > hi) for degenerate tables; callers decide whether that is an
    /// error.
    pub fn band(&self, d: u64) -> Result<(u64, u64)> {
        let lo = ceil_out(self.inv(d as f64)?).max(0) as u64;
        let hi = floor_out(self.eval(d as f64)?).max(0) as u64;
        Ok((lo, hi))
    }

    /// Construction-time probe: strict growth, γ(x) > x above 1, and
    /// inversion round-trip within 1e-6, checked on a geometric grid
    /// clipped to the covered domain.
    fn self_check(&self) -> Result<()> {
        let top = match &self.kind {
            GammaKind::Table { points } => points.last().unwrap().0,
            _ => (self.n_cap.max(2)) as f64,
        };
        let mut probes = vec![1.0];
        let mut x = 1.5;
        while x < top {
            probes.push(x);
            x *= 1.5;
        }
        probes.push(top);
        let mut prev = self.eval(0.0)?;
        let mut prev_x = 0.0;
        for &p in &probes {
            let g = self.eval(p)?;
            if g <= prev && p > prev_x {
                return Err(Error::PreconditionFailed(format!(
                    "γ not strictly increasing near {p}"
                )));
            }
            if p > 1.0 + OUTWARD_TOL && g <= p {
                return Err(Error::PreconditionFailed(format!(
                    "γ({p}) = {g} does not exceed its argument"
                )));
            }
            let back = self.inv(g)?;
            if (back - p).abs() > 1e-6 {
                return Err(Error::PreconditionFailed(format!(
                    "γ⁻¹(γ({p})) = {back}, round-trip off by more than 1e-6"
                )));
            }
            prev = g;
            prev_x = p;
        }
        Ok(())
    }
}
